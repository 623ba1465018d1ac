//! Experiment configuration: JSON in, JSON out, unknown keys rejected.

use massball::energy::SolitonOptions;
use massball::grid::DomainSpec;
use massball::solver::MinimizeOptions;
use massball::Nonlinearity;
use serde::{Deserialize, Serialize};

fn default_pde_tol() -> f64 {
    1e-3
}

fn default_cases() -> usize {
    200
}

fn default_true() -> bool {
    true
}

fn default_polish() -> usize {
    400
}

fn default_observe() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnConstConfig {
    #[serde(rename = "N")]
    pub n_dim: usize,
    #[serde(default)]
    pub soliton: SolitonOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub nonlinearity: Nonlinearity<f64>,
    /// Prescribed L² norms a_j.
    pub mass: Vec<f64>,
    pub domain: DomainSpec<f64>,
    #[serde(default)]
    pub solver: MinimizeOptions,
    #[serde(default)]
    pub soliton: SolitonOptions,
    /// Declare the strict-monotonicity hypotheses for the verification
    /// report.
    #[serde(default)]
    pub declare_strict_monotone: bool,
    #[serde(default = "default_pde_tol")]
    pub pde_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub nonlinearity: Nonlinearity<f64>,
    pub domain: DomainSpec<f64>,
    /// Explicit list of mass tuples, scanned in order.
    pub mass_grid: Vec<Vec<f64>>,
    /// Warm-start every run from the previous minimizer (sequential); when
    /// off, the points run independently and may execute in parallel.
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default)]
    pub solver: MinimizeOptions,
    #[serde(default)]
    pub soliton: SolitonOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubaddConfig {
    pub nonlinearity: Nonlinearity<f64>,
    pub domain: DomainSpec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Additional random (a, b) pairs drawn from `pair_range`.
    #[serde(default)]
    pub random_pairs: usize,
    #[serde(default = "default_pair_range")]
    pub pair_range: (f64, f64),
    /// Also evaluate the dilation-scaling inequality at s ∈ {1.5, 2}.
    #[serde(default = "default_true")]
    pub scaling_checks: bool,
    #[serde(default)]
    pub solver: MinimizeOptions,
    #[serde(default)]
    pub soliton: SolitonOptions,
}

fn default_pair_range() -> (f64, f64) {
    (0.7, 1.4)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RearrangeTestConfig {
    pub domain: DomainSpec<f64>,
    #[serde(default = "default_cases")]
    pub cases: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaSides {
    Zero,
    Infinity,
    #[default]
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaLimitsConfig {
    pub nonlinearity: Nonlinearity<f64>,
    #[serde(default)]
    pub side: EtaSides,
    /// Optional explicit radius schedule (monotone, ordered toward the
    /// limit).
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Radial ground state minimized per the embedded settings, transplanted
    /// onto the box and polished into the box-discrete standing wave.
    GroundState {
        mass: Vec<f64>,
        radial_r_max: f64,
        radial_n_points: usize,
        #[serde(default = "default_polish")]
        polish_iters: usize,
    },
    /// A Gaussian packet.
    Gaussian { width: f64, amplitude: f64 },
    /// A field loaded from JSON.
    FieldJson { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Multiply by 1 + amplitude·cos(2π k x / L).
    CosineModulation { amplitude: f64, mode: usize },
    /// Add amplitude·exp(−(x−center)²/(2 width²)).
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub nonlinearity: Nonlinearity<f64>,
    pub box_length: f64,
    pub n_points: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Record observables every this many steps.
    #[serde(default = "default_observe")]
    pub observe_every: usize,
    pub initial: InitialCondition,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub solver: MinimizeOptions,
    #[serde(default)]
    pub soliton: SolitonOptions,
    /// Declared ceiling for sup_t distance / initial distance; checked when
    /// the initial condition carries a ground-state orbit sample.
    #[serde(default)]
    pub stability_factor: Option<f64>,
}

/// One experiment: the subcommand tag plus its payload, exactly what the
/// CLI reads from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    GnConst(GnConstConfig),
    Minimize(MinimizeConfig),
    ScanM(ScanConfig),
    Subadd(SubaddConfig),
    RearrangeTest(RearrangeTestConfig),
    EtaLimits(EtaLimitsConfig),
    Evolve(EvolveConfig),
    Verify(MinimizeConfig),
}

impl ExperimentConfig {
    pub fn subcommand_name(&self) -> &'static str {
        match self {
            ExperimentConfig::GnConst(_) => "gn-const",
            ExperimentConfig::Minimize(_) => "minimize",
            ExperimentConfig::ScanM(_) => "scan-m",
            ExperimentConfig::Subadd(_) => "subadd",
            ExperimentConfig::RearrangeTest(_) => "rearrange-test",
            ExperimentConfig::EtaLimits(_) => "eta-limits",
            ExperimentConfig::Evolve(_) => "evolve",
            ExperimentConfig::Verify(_) => "verify",
        }
    }
}
