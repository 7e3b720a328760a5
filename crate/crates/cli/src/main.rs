//! `thermal-cluster`: batch driver emitting JSON reports.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 resource cap,
//! 3 verification failure, 4 eigensolver non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thermal_cluster::clique::{
    apply_lambda, build_clique_state, readout_observable, thermal_readout, CliqueSystem,
    LambdaDeformation,
};
use thermal_cluster::mbqc::{
    build_deformed_cluster, compile_layout_capped, fidelity_bound, smooth, verify_carving,
    CarvingStatus, ClusterLayout,
};
use thermal_cluster::parent::{analyze, assemble, EigenConfig};
use thermal_cluster::pipeline::{
    fixture_generate, run_pipeline, sha256_hex, Caps, PipelineConfig, Stage,
};
use thermal_cluster::spin_model::{
    encode_general, partition_function_capped, GeneralModel, SpinConfig, SpinModel,
    DEFAULT_MAX_ARITY,
};
use thermal_cluster::state::{fidelity, StateVector};
use thermal_cluster::{Error, Result};

#[derive(Parser)]
#[command(name = "thermal-cluster", version, about = "Thermal states of spin models on carved cluster states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spin model files.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Classical brute-force thermal quantities.
    #[command(subcommand)]
    Classical(ClassicalCmd),
    /// Clique-state preparation and readout.
    #[command(subcommand)]
    Quantum(QuantumCmd),
    /// Compile a carving layout for a model.
    Compile(CompileArgs),
    /// Check a layout by dense projection.
    #[command(subcommand)]
    Carve(CarveCmd),
    /// Parent Hamiltonians of deformed cluster states.
    #[command(subcommand)]
    Hamiltonian(HamiltonianCmd),
    /// Run the staged pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Random model fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Binary state-vector dumps.
    #[command(subcommand)]
    State(StateCmd),
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Parse and validate a model file.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ARITY)]
        max_arity: usize,
    },
    /// Encode a general q-level model into parity terms.
    Encode {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ARITY)]
        max_arity: usize,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum ClassicalCmd {
    /// Partition function and Boltzmann table.
    Thermal {
        file: PathBuf,
        #[arg(long)]
        beta: f64,
        /// Also write the probability table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum QuantumCmd {
    /// Build the deformed clique state and read out its vertex diagonal.
    Clique {
        file: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        compare_oracle: bool,
        /// `energy`, `spin:<i>` or `parity:<i>,<j>,...`; repeatable.
        #[arg(long)]
        observable: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct CompileArgs {
    file: PathBuf,
    /// Verify densely even above the default cap (up to the dense limit).
    #[arg(long)]
    verify: bool,
    /// Smoothing parameter recorded with the layout and used for the bound.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Layout JSON destination.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CarveCmd {
    Verify {
        layout: PathBuf,
        /// Model file, when the layout does not embed one.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct HamiltonianArgs {
    layout: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Defaults to the epsilon stored in the layout, else 0.05.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write every term as JSON {kind, support, block}.
    #[arg(long)]
    dump_terms: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum HamiltonianCmd {
    /// Assemble the terms and report their norms.
    Build(HamiltonianArgs),
    /// Assemble and find the two lowest eigenvalues.
    Verify(HamiltonianArgs),
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// classical | clique | compile | hamiltonian | full
        #[arg(long, default_value = "full")]
        stage: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ARITY)]
        max_arity: usize,
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        max_spins: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ARITY)]
        max_arity: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum StateCmd {
    /// Dump the deformed clique state of a model.
    Dump {
        file: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare two dumps.
    Diff { a: PathBuf, b: PathBuf },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path, max_arity: usize) -> Result<SpinModel> {
    SpinModel::from_json(&read_text(path)?, max_arity)
}

fn emit(value: &Value, out: &Output) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match &out.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Exits with code 3 after emitting when a check failed.
fn verdict(passed: bool, what: &str) -> Result<()> {
    if passed {
        Ok(())
    } else {
        Err(Error::verification(what, "see report"))
    }
}

fn config_label(n: usize, bits: usize) -> String {
    SpinConfig::new(n, bits as u64).expect("index fits").to_string()
}

type Observable = Box<dyn Fn(&SpinConfig) -> f64>;

fn observable(model: &SpinModel, spec: &str) -> Result<Observable> {
    let n = model.n_spins();
    let sites = |list: &str| -> Result<Vec<usize>> {
        list.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i < n)
                    .ok_or_else(|| Error::input(format!("bad site '{s}' in observable")))
            })
            .collect()
    };
    if spec == "energy" {
        let m = model.clone();
        return Ok(Box::new(move |s| m.energy(s).expect("length matches")));
    }
    if let Some(rest) = spec.strip_prefix("spin:").or_else(|| spec.strip_prefix("parity:")) {
        let sites = sites(rest)?;
        return Ok(Box::new(move |s| if s.parity(&sites) == 0 { 1.0 } else { -1.0 }));
    }
    Err(Error::input(format!("unknown observable '{spec}'")))
}

fn model_cmd(cmd: ModelCmd) -> Result<()> {
    match cmd {
        ModelCmd::Validate { file, max_arity } => {
            let text = read_text(&file)?;
            let m = SpinModel::from_json(&text, max_arity)?;
            let value = json!({
                "valid": true,
                "n_spins": m.n_spins(),
                "n_terms": m.terms().len(),
                "max_arity": max_arity,
                "sha256": sha256_hex(text.as_bytes()),
            });
            emit(&value, &Output { output: None })
        }
        ModelCmd::Encode { file, max_arity, out } => {
            let gm: GeneralModel = serde_json::from_str(&read_text(&file)?)?;
            let m = encode_general(&gm, max_arity)?;
            match &out.output {
                Some(path) => fs::write(path, m.to_json())?,
                None => print!("{}", m.to_json()),
            }
            Ok(())
        }
    }
}

fn classical_cmd(cmd: ClassicalCmd) -> Result<()> {
    let ClassicalCmd::Thermal { file, beta, csv, out } = cmd;
    let caps = Caps::from_env()?;
    let m = load_model(&file, DEFAULT_MAX_ARITY)?;
    let t = partition_function_capped(&m, beta, caps.brute_force_spins)?;
    let n = m.n_spins();
    if let Some(path) = csv {
        let mut text = String::from("config,probability\n");
        for (i, p) in t.probabilities.iter().enumerate() {
            text.push_str(&format!("{},{p:.17e}\n", config_label(n, i)));
        }
        fs::write(path, text)?;
    }
    let probs: serde_json::Map<String, Value> = t
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, p)| (config_label(n, i), json!(p)))
        .collect();
    emit(&json!({"beta": beta, "Z": t.z, "ln_Z": t.ln_z, "probabilities": probs}), &out)
}

fn quantum_cmd(cmd: QuantumCmd) -> Result<()> {
    let QuantumCmd::Clique { file, beta, compare_oracle, observable: obs, out } = cmd;
    let caps = Caps::from_env()?;
    let m = load_model(&file, DEFAULT_MAX_ARITY)?;
    let sys = CliqueSystem::new(&m);
    if sys.n_qubits() > caps.dense_qubits {
        return Err(Error::resource("clique qubits", sys.n_qubits(), caps.dense_qubits));
    }
    let (_, phi) = build_clique_state(&m)?;
    let (deformed, normalizer) = apply_lambda(&sys, &phi, beta)?;
    let probs = thermal_readout(&sys, &deformed)?;
    let mut report = json!({
        "beta": beta,
        "n_qubits": sys.n_qubits(),
        "Z_quantum": normalizer.z,
        "ln_Z_quantum": normalizer.ln_z,
        "probabilities": probs,
    });
    let mut passed = true;
    if compare_oracle {
        let oracle = partition_function_capped(&m.without_offset(), beta, caps.brute_force_spins)?;
        let dev = probs
            .iter()
            .zip(&oracle.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        passed = dev <= 1e-10 && (normalizer.ln_z - oracle.ln_z).abs() <= 1e-10;
        report["Z_oracle"] = json!(oracle.z);
        report["max_abs_deviation"] = json!(dev);
        report["tolerance"] = json!(1e-10);
        report["passed"] = json!(passed);
    }
    let mut expectations = serde_json::Map::new();
    for spec in &obs {
        let f = observable(&m, spec)?;
        expectations.insert(spec.clone(), json!(readout_observable(&sys, &deformed, f)?));
    }
    report["expectation"] = Value::Object(expectations);
    emit(&report, &out)?;
    verdict(passed, "clique readout vs oracle")
}

fn compile_cmd(args: CompileArgs) -> Result<()> {
    let caps = Caps::from_env()?;
    let m = load_model(&args.file, DEFAULT_MAX_ARITY)?;
    if !(args.epsilon > 0.0 && args.epsilon < 0.5) {
        return Err(Error::input("epsilon must lie in (0, 0.5)"));
    }
    let sys = CliqueSystem::new(&m);
    let cap = if args.verify { caps.dense_qubits } else { caps.verify_qubits };
    let compiled = compile_layout_capped(&sys, cap)?;
    let layout = &compiled.layout;
    let n_a = layout.a_qubits().len();
    let mut report = json!({
        "method": compiled.method,
        "rows": layout.lattice().rows(),
        "cols": layout.lattice().cols(),
        "n_qubits": layout.n_qubits(),
        "n_a": n_a,
        "status": compiled.status.label(),
        "epsilon": args.epsilon,
        "fidelity_bound": fidelity_bound(args.epsilon, n_a),
        "one_a_neighbor": layout.one_a_neighbor(),
        "a_neighbor_counts": layout.a_neighbor_counts(),
        "pattern": layout.to_string(),
    });
    match &compiled.status {
        CarvingStatus::Verified(cert) => report["certificate"] = serde_json::to_value(cert)?,
        CarvingStatus::Unverified(s) => report["structure"] = serde_json::to_value(s)?,
    }
    if let Some(path) = &args.output {
        fs::write(path, layout.to_json(Some(&m), Some(args.epsilon)))?;
        report["layout"] = json!(path.display().to_string());
    }
    emit(&report, &Output { output: None })?;
    verdict(!args.verify || compiled.status.is_verified(), "dense carving verification")
}

fn load_layout(path: &Path, model: Option<&Path>) -> Result<(ClusterLayout, SpinModel, Option<f64>)> {
    let (layout, embedded, eps) = ClusterLayout::from_json(&read_text(path)?)?;
    let m = match (model, embedded) {
        (Some(p), _) => load_model(p, DEFAULT_MAX_ARITY)?,
        (None, Some(m)) => m,
        (None, None) => return Err(Error::input("layout has no model; pass --model")),
    };
    layout.check_system(&CliqueSystem::new(&m))?;
    Ok((layout, m, eps))
}

fn carve_cmd(cmd: CarveCmd) -> Result<()> {
    let CarveCmd::Verify { layout, model, out } = cmd;
    let (layout, m, _) = load_layout(&layout, model.as_deref())?;
    let sys = CliqueSystem::new(&m);
    match verify_carving(&layout, &sys) {
        Ok(cert) => emit(&json!({"verified": true, "certificate": cert}), &out),
        Err(e @ Error::Verification { .. }) => {
            emit(&json!({"verified": false, "error": e.to_string()}), &out)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn hamiltonian_cmd(cmd: HamiltonianCmd) -> Result<()> {
    let (verify, args) = match cmd {
        HamiltonianCmd::Build(a) => (false, a),
        HamiltonianCmd::Verify(a) => (true, a),
    };
    let caps = Caps::from_env()?;
    let (layout, m, stored) = load_layout(&args.layout, args.model.as_deref())?;
    let eps = args.epsilon.or(stored).unwrap_or(0.05);
    if layout.n_qubits() > caps.hamiltonian_qubits {
        return Err(Error::resource("Hamiltonian qubits", layout.n_qubits(), caps.hamiltonian_qubits));
    }
    let sys = CliqueSystem::new(&m);
    let lambda = LambdaDeformation::new(&sys, args.beta)?;
    let omega = smooth(&layout, eps)?;
    let h = assemble(&layout, Some(&omega), &lambda)?;
    if let Some(path) = &args.dump_terms {
        fs::write(path, serde_json::to_string(&h.dump())?)?;
    }
    let mut report = json!({
        "beta": args.beta,
        "epsilon": eps,
        "n_qubits": h.n_qubits(),
        "term_count": h.terms().len(),
        "max_term_norm": h.max_term_norm(),
        "min_term_eigenvalue": h.min_term_eigenvalue(),
        "max_support": h.max_support(),
        "nnz_estimate": h.nnz_estimate(),
    });
    let mut passed = h.min_term_eigenvalue() >= -1e-10 && h.max_support() <= 5;
    if verify {
        let psi = build_deformed_cluster(&layout, &omega, &lambda)?;
        let cfg = EigenConfig {
            max_iterations: caps.eigen_iterations,
            seed: args.seed,
            ..EigenConfig::default()
        };
        let rep = analyze(&h, Some(&layout), &psi, &cfg)?;
        passed &= rep.e0 <= 1e-8 * rep.norm.max(1.0) && rep.gap >= 1e-6 && rep.fidelity >= 1.0 - 1e-8;
        for (k, v) in serde_json::to_value(&rep)?.as_object().expect("struct").iter() {
            report[k] = v.clone();
        }
        report["tolerances"] = json!({"E0_relative": 1e-8, "gap": 1e-6, "fidelity": 1e-8});
        report["passed"] = json!(passed);
    }
    emit(&report, &args.out)?;
    verdict(passed, "parent Hamiltonian")
}

fn pipeline_cmd(cmd: PipelineCmd) -> Result<()> {
    let PipelineCmd::Run { file, beta, epsilon, stage, seed, max_arity, verbose, out } = cmd;
    let config = PipelineConfig {
        beta,
        epsilon,
        stage: stage.parse::<Stage>()?,
        output: out.output.clone(),
        verbosity: verbose,
        caps: Caps::from_env()?,
        seed,
        max_arity,
        ..PipelineConfig::new(file)
    };
    let report = run_pipeline(&config)?;
    if config.output.is_none() {
        print!("{}", report.to_json());
    }
    verdict(report.passed, "pipeline checks")
}

fn fixtures_cmd(cmd: FixturesCmd) -> Result<()> {
    let FixturesCmd::Gen { seed, count, max_spins, max_arity, out_dir } = cmd;
    let models = fixture_generate(seed, count, max_spins, max_arity)?;
    fs::create_dir_all(&out_dir)?;
    let width = count.to_string().len().max(3);
    let mut files = Vec::with_capacity(count);
    for (i, m) in models.iter().enumerate() {
        let path = out_dir.join(format!("model_{i:0width$}.json"));
        fs::write(&path, m.to_json())?;
        files.push(path.display().to_string());
    }
    emit(&json!({"seed": seed, "count": count, "files": files}), &Output { output: None })
}

fn state_cmd(cmd: StateCmd) -> Result<()> {
    match cmd {
        StateCmd::Dump { file, beta, output } => {
            let m = load_model(&file, DEFAULT_MAX_ARITY)?;
            let (sys, phi) = build_clique_state(&m)?;
            let (deformed, _) = apply_lambda(&sys, &phi, beta)?;
            deformed.write_dump(std::io::BufWriter::new(fs::File::create(&output)?))?;
            emit(&json!({"n_qubits": deformed.n_qubits(), "file": output.display().to_string()}), &Output { output: None })
        }
        StateCmd::Diff { a, b } => {
            let sa = StateVector::read_dump(std::io::BufReader::new(fs::File::open(a)?))?;
            let sb = StateVector::read_dump(std::io::BufReader::new(fs::File::open(b)?))?;
            if sa.n_qubits() != sb.n_qubits() {
                return Err(Error::input("dumps have different qubit counts"));
            }
            let max_abs = sa
                .amplitudes()
                .iter()
                .zip(sb.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            emit(&json!({"fidelity": fidelity(&sa, &sb)?, "max_abs_difference": max_abs}), &Output { output: None })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Model(c) => model_cmd(c),
        Command::Classical(c) => classical_cmd(c),
        Command::Quantum(c) => quantum_cmd(c),
        Command::Compile(c) => compile_cmd(c),
        Command::Carve(c) => carve_cmd(c),
        Command::Hamiltonian(c) => hamiltonian_cmd(c),
        Command::Pipeline(c) => pipeline_cmd(c),
        Command::Fixtures(c) => fixtures_cmd(c),
        Command::State(c) => state_cmd(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
