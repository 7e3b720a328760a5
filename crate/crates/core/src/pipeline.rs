//! End-to-end driver: classical oracle, clique state, carving layout and
//! parent Hamiltonian, with every numeric check reported next to its
//! tolerance.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::clique::{
    apply_lambda, build_clique_state, clique_stabilizers, thermal_readout, CliqueSystem,
    LambdaDeformation,
};
use crate::error::{Error, Result};
use crate::mbqc::{
    build_deformed_cluster, comparison_state, compile_layout_capped, exact_thermal_readout,
    fidelity_bound, smooth, CarvingStatus,
};
use crate::parent::{analyze, assemble, EigenConfig, DIAG_QUBIT_CAP};
use crate::spin_model::{
    partition_function_capped, ParityTerm, SpinModel, BRUTE_FORCE_CAP, DEFAULT_MAX_ARITY,
};
use crate::state::{fidelity, DENSE_CAP};

pub const REPORT_SCHEMA: &str = "thermal-cluster/run-report/v1";

/// Prefix for environment variables overriding resource caps, e.g.
/// `THERMAL_CLUSTER_DENSE_CAP=20`.
pub const ENV_PREFIX: &str = "THERMAL_CLUSTER_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Classical,
    Clique,
    Compile,
    Hamiltonian,
    /// Every stage plus the end-to-end readout and fidelity-bound checks.
    Full,
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classical" => Stage::Classical,
            "clique" => Stage::Clique,
            "compile" => Stage::Compile,
            "hamiltonian" => Stage::Hamiltonian,
            "full" => Stage::Full,
            other => return Err(Error::input(format!("unknown stage {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Caps {
    /// Spins summed exhaustively by the classical oracle.
    pub brute_force_spins: usize,
    /// Qubits of any dense state vector.
    pub dense_qubits: usize,
    /// Lattice qubits for dense carving verification.
    pub verify_qubits: usize,
    /// Lattice qubits for the parent Hamiltonian.
    pub hamiltonian_qubits: usize,
    pub eigen_iterations: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            brute_force_spins: BRUTE_FORCE_CAP,
            dense_qubits: DENSE_CAP,
            verify_qubits: crate::mbqc::VERIFY_CAP,
            hamiltonian_qubits: 16,
            eigen_iterations: 5000,
        }
    }
}

impl Caps {
    /// Defaults overridden by `THERMAL_CLUSTER_<NAME>` variables.
    pub fn from_env() -> Result<Self> {
        let mut caps = Caps::default();
        let fields: [(&str, &mut usize); 5] = [
            ("BRUTE_FORCE_CAP", &mut caps.brute_force_spins),
            ("DENSE_CAP", &mut caps.dense_qubits),
            ("VERIFY_CAP", &mut caps.verify_qubits),
            ("HAMILTONIAN_CAP", &mut caps.hamiltonian_qubits),
            ("EIGEN_ITERATIONS", &mut caps.eigen_iterations),
        ];
        for (name, slot) in fields {
            let key = format!("{ENV_PREFIX}{name}");
            if let Ok(v) = std::env::var(&key) {
                *slot = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::input(format!("{key}={v:?} is not a count")))?;
            }
        }
        caps.validate()?;
        Ok(caps)
    }

    pub fn validate(&self) -> Result<()> {
        let limits = [
            ("brute_force_spins", self.brute_force_spins, BRUTE_FORCE_CAP),
            ("dense_qubits", self.dense_qubits, DENSE_CAP),
            ("verify_qubits", self.verify_qubits, DENSE_CAP),
            ("hamiltonian_qubits", self.hamiltonian_qubits, DIAG_QUBIT_CAP),
        ];
        for (name, value, limit) in limits {
            if value > limit {
                return Err(Error::input(format!("{name} = {value} exceeds the limit {limit}")));
            }
        }
        if self.eigen_iterations == 0 {
            return Err(Error::input("eigen_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub model_path: PathBuf,
    pub beta: f64,
    pub epsilon: f64,
    pub stage: Stage,
    pub output: Option<PathBuf>,
    pub verbosity: u8,
    pub caps: Caps,
    pub seed: u64,
    pub max_arity: usize,
}

impl PipelineConfig {
    pub fn new(model_path: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            model_path: model_path.into(),
            beta: 1.0,
            epsilon: 0.05,
            stage: Stage::Full,
            output: None,
            verbosity: 0,
            caps: Caps::default(),
            seed: 0,
            max_arity: DEFAULT_MAX_ARITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::input(format!("beta = {} must be finite and >= 0", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::input(format!("epsilon = {} must lie in (0, 0.5)", self.epsilon)));
        }
        self.caps.validate()
    }
}

/// One numeric check: `value <= tolerance` or `value >= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: &'static str,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: "<=",
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: ">=",
            tolerance,
            passed: value >= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub input_path: String,
    pub input_sha256: String,
    pub version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalResult {
    pub n_spins: usize,
    pub n_terms: usize,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "ln_Z")]
    pub ln_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliqueResult {
    pub n_qubits: usize,
    #[serde(rename = "Z_quantum")]
    pub z_quantum: f64,
    #[serde(rename = "Z_oracle")]
    pub z_oracle: f64,
    pub max_abs_deviation: f64,
    pub stabilizer_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompileResult {
    pub method: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub n_a: usize,
    pub status: &'static str,
    pub achieved_fidelity: Option<f64>,
    pub branch_norm: Option<f64>,
    pub one_a_neighbor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndToEndResult {
    /// Largest deviation of the exact-projection readout from the oracle.
    pub readout_deviation: f64,
    pub epsilon: f64,
    pub fidelity: f64,
    pub fidelity_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HamiltonianResult {
    pub term_count: usize,
    pub max_term_norm: f64,
    pub min_term_eigenvalue: f64,
    pub max_support: usize,
    pub reference_energy: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    pub gap: f64,
    pub fidelity: f64,
    pub norm: f64,
    pub iterations: usize,
    pub residual: f64,
    pub method: &'static str,
    /// `1e-16 ||H|| / gap`: the eigenvector accuracy double precision allows.
    pub precision_floor: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clique: Option<CliqueResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compile: Option<CompileResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_to_end: Option<EndToEndResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub provenance: Provenance,
    pub stage: Stage,
    pub beta: f64,
    pub epsilon: f64,
    pub caps: Caps,
    pub results: StageResults,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// Same report with timestamps zeroed, for determinism comparisons.
    pub fn without_timestamps(&self) -> RunReport {
        let mut r = self.clone();
        r.provenance.started_at = 0;
        r.provenance.finished_at = 0;
        r
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Reads and validates the model file, runs the selected stages and writes
/// the report to `config.output` when set. Nothing is written on error.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let bytes = std::fs::read(&config.model_path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::input("model file is not UTF-8"))?;
    let model = SpinModel::from_json(&text, config.max_arity)?;
    let report = run_model(&model, &sha256_hex(&bytes), config)?;
    if let Some(out) = &config.output {
        std::fs::write(out, report.to_json())?;
    }
    Ok(report)
}

/// Runs the stages on an already parsed model.
pub fn run_model(model: &SpinModel, input_sha256: &str, config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let started_at = unix_now();
    let caps = &config.caps;
    let say = |msg: &str| {
        if config.verbosity > 0 {
            eprintln!("[pipeline] {msg}");
        }
    };
    let mut results = StageResults::default();
    let mut checks = Vec::new();

    say("classical oracle");
    let oracle = partition_function_capped(model, config.beta, caps.brute_force_spins)?;
    let total: f64 = oracle.probabilities.iter().sum();
    checks.push(Check::at_most("classical.normalization", (total - 1.0).abs(), 1e-12));
    results.classical = Some(ClassicalResult {
        n_spins: model.n_spins(),
        n_terms: model.terms().len(),
        z: oracle.z,
        ln_z: oracle.ln_z,
    });

    if config.stage >= Stage::Clique {
        say("clique state");
        let sys = CliqueSystem::new(model);
        if sys.n_qubits() > caps.dense_qubits {
            return Err(Error::resource("clique qubits", sys.n_qubits(), caps.dense_qubits));
        }
        let (_, phi) = build_clique_state(model)?;
        let stabilizer_deviation = clique_stabilizers(&sys)?.max_deviation(&phi)?;
        let (deformed, normalizer) = apply_lambda(&sys, &phi, config.beta)?;
        let probs = thermal_readout(&sys, &deformed)?;
        let z_oracle = partition_function_capped(&model.without_offset(), config.beta, caps.brute_force_spins)?;
        let max_abs_deviation = max_abs_diff(&probs, &oracle.probabilities);
        checks.push(Check::at_most("clique.stabilizers", stabilizer_deviation, 1e-12));
        checks.push(Check::at_most(
            "clique.ln_partition_function",
            (normalizer.ln_z - z_oracle.ln_z).abs(),
            1e-10,
        ));
        checks.push(Check::at_most("clique.readout", max_abs_deviation, 1e-10));
        results.clique = Some(CliqueResult {
            n_qubits: sys.n_qubits(),
            z_quantum: normalizer.z,
            z_oracle: z_oracle.z,
            max_abs_deviation,
            stabilizer_deviation,
        });
    }

    if config.stage >= Stage::Compile {
        say("carving layout");
        let sys = CliqueSystem::new(model);
        let compiled = compile_layout_capped(&sys, caps.verify_qubits.min(caps.dense_qubits))?;
        let layout = &compiled.layout;
        let (fid, norm) = match &compiled.status {
            CarvingStatus::Verified(cert) => {
                checks.push(Check::at_least("compile.fidelity", cert.achieved_fidelity, 1.0 - 1e-10));
                if let Some(expected) = cert.expected_branch_norm {
                    checks.push(Check::at_most(
                        "compile.branch_norm",
                        (cert.branch_norm - expected).abs(),
                        1e-10,
                    ));
                }
                (Some(cert.achieved_fidelity), Some(cert.branch_norm))
            }
            CarvingStatus::Unverified(_) => (None, None),
        };
        results.compile = Some(CompileResult {
            method: compiled.method,
            rows: layout.lattice().rows(),
            cols: layout.lattice().cols(),
            n_a: layout.a_qubits().len(),
            status: compiled.status.label(),
            achieved_fidelity: fid,
            branch_norm: norm,
            one_a_neighbor: layout.one_a_neighbor(),
        });

        let lambda = LambdaDeformation::new(&sys, config.beta)?;
        let n = layout.n_qubits();
        if config.stage == Stage::Full {
            if n > caps.dense_qubits {
                return Err(Error::resource("lattice qubits", n, caps.dense_qubits));
            }
            say("end-to-end readout");
            let exact = exact_thermal_readout(layout, &sys, &lambda)?;
            let readout_deviation = max_abs_diff(&exact, &oracle.probabilities);
            let (_, phi) = build_clique_state(model)?;
            let (phi_l, _) = apply_lambda(&sys, &phi, config.beta)?;
            let target = comparison_state(layout, &phi_l)?;
            let omega = smooth(layout, config.epsilon)?;
            let state = build_deformed_cluster(layout, &omega, &lambda)?;
            let f = fidelity(&state, &target)?;
            let bound = fidelity_bound(config.epsilon, layout.a_qubits().len());
            checks.push(Check::at_most("end_to_end.readout", readout_deviation, 1e-9));
            checks.push(Check::at_least("end_to_end.fidelity_bound", f, bound - 1e-10));
            results.end_to_end = Some(EndToEndResult {
                readout_deviation,
                epsilon: config.epsilon,
                fidelity: f,
                fidelity_bound: bound,
            });
        }

        if config.stage >= Stage::Hamiltonian {
            if n > caps.hamiltonian_qubits {
                return Err(Error::resource("Hamiltonian qubits", n, caps.hamiltonian_qubits));
            }
            say("parent Hamiltonian");
            let omega = smooth(layout, config.epsilon)?;
            let h = assemble(layout, Some(&omega), &lambda)?;
            let psi = build_deformed_cluster(layout, &omega, &lambda)?;
            let cfg = EigenConfig {
                max_iterations: caps.eigen_iterations,
                seed: config.seed,
                ..EigenConfig::default()
            };
            let reference_energy = h.expectation(&psi)?;
            let rep = analyze(&h, Some(layout), &psi, &cfg)?;
            let max_term_norm = h.max_term_norm();
            let min_term_eigenvalue = h.min_term_eigenvalue();
            checks.push(Check::at_least("hamiltonian.term_psd", min_term_eigenvalue, -1e-10));
            checks.push(Check::at_most("hamiltonian.max_support", h.max_support() as f64, 5.0));
            checks.push(Check::at_most(
                "hamiltonian.reference_energy_relative",
                reference_energy.abs() / rep.norm.max(1.0),
                1e-10,
            ));
            checks.push(Check::at_most(
                "hamiltonian.ground_energy_relative",
                rep.e0 / rep.norm.max(1.0),
                1e-8,
            ));
            checks.push(Check::at_least("hamiltonian.gap", rep.gap, 1e-6));
            checks.push(Check::at_least("hamiltonian.fidelity", rep.fidelity, 1.0 - 1e-8));
            results.hamiltonian = Some(HamiltonianResult {
                term_count: h.terms().len(),
                max_term_norm,
                min_term_eigenvalue,
                max_support: h.max_support(),
                reference_energy,
                e0: rep.e0,
                e1: rep.e1,
                gap: rep.gap,
                fidelity: rep.fidelity,
                norm: rep.norm,
                iterations: rep.iterations,
                residual: rep.residual,
                method: rep.method,
                precision_floor: f64::EPSILON * rep.norm / rep.gap.max(f64::MIN_POSITIVE),
            });
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(RunReport {
        schema: REPORT_SCHEMA,
        provenance: Provenance {
            input_path: config.model_path.display().to_string(),
            input_sha256: input_sha256.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            started_at,
            finished_at: unix_now(),
        },
        stage: config.stage,
        beta: config.beta,
        epsilon: config.epsilon,
        caps: caps.clone(),
        results,
        checks,
        passed,
    })
}

/// One pseudo-random model: `1..=max_spins` spins, up to `2 n` distinct terms of
/// arity `1..=max_arity`, couplings uniform in `[-2, 2]`.
pub fn random_model(rng: &mut ChaCha8Rng, max_spins: usize, max_arity: usize) -> Result<SpinModel> {
    if max_spins == 0 || max_arity == 0 {
        return Err(Error::input("max_spins and max_arity must be positive"));
    }
    let n = rng.random_range(1..=max_spins);
    let n_terms = rng.random_range(0..=2 * n);
    let mut terms = Vec::with_capacity(n_terms);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..n_terms {
        let arity = rng.random_range(1..=max_arity.min(n));
        let mut sites: Vec<usize> = (0..n).collect();
        for i in 0..arity {
            let j = rng.random_range(i..n);
            sites.swap(i, j);
        }
        sites.truncate(arity);
        sites.sort_unstable();
        if !seen.insert(sites.clone()) {
            continue;
        }
        terms.push(ParityTerm::new(sites, rng.random_range(-2.0..=2.0)));
    }
    SpinModel::with_max_arity(n, terms, 0.0, max_arity)
}

/// `count` deterministic models from `seed`.
pub fn fixture_generate(
    seed: u64,
    count: usize,
    max_spins: usize,
    max_arity: usize,
) -> Result<Vec<SpinModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_model(&mut rng, max_spins, max_arity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_order_and_parsing() {
        assert!(Stage::Classical < Stage::Hamiltonian && Stage::Hamiltonian < Stage::Full);
        assert_eq!("compile".parse::<Stage>().unwrap(), Stage::Compile);
        assert!("carve".parse::<Stage>().is_err());
    }

    #[test]
    fn config_ranges() {
        let mut c = PipelineConfig::new("m.json");
        assert!(c.validate().is_ok());
        c.epsilon = 0.5;
        assert!(c.validate().is_err());
        c.epsilon = 0.1;
        c.beta = f64::INFINITY;
        assert!(c.validate().is_err());
        c.beta = 1.0;
        c.caps.hamiltonian_qubits = 40;
        assert!(c.validate().is_err());
    }

    #[test]
    fn checks_compare_in_the_stated_direction() {
        assert!(Check::at_most("a", 1e-11, 1e-10).passed);
        assert!(!Check::at_least("b", 0.5, 0.9).passed);
    }

    #[test]
    fn generated_models_respect_bounds() {
        let models = fixture_generate(7, 40, 4, 2).unwrap();
        assert_eq!(models.len(), 40);
        for m in &models {
            assert!(m.n_spins() <= 4);
            assert!(m.terms().iter().all(|t| t.arity() <= 2));
            assert!(m.terms().iter().all(|t| t.j.abs() <= 2.0));
        }
        assert_eq!(models, fixture_generate(7, 40, 4, 2).unwrap());
    }

    #[test]
    fn hashes_are_lowercase_hex() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
