//! Scenario configuration: a TOML document with strict key checking.
//!
//! ```toml
//! scenario = "free_decay"
//! seed = 7                      # optional
//!
//! [grid]
//! dimension = 1
//! points = 2048                 # per axis, even
//! half_length = 128.0
//!
//! [potential]                   # optional, default zero
//! family = "gaussian_well"      # zero | gaussian_well | smooth_lattice
//! depth = 0.05
//! width = 2.0                   # gaussian_well; smooth_lattice takes kappa
//!
//! [interaction]                 # optional, default none
//! family = "gaussian"           # none | gaussian | cubic
//! total_mass = 0.1
//! width = 1.0                   # gaussian; cubic takes sign
//!
//! [initial]
//! family = "gaussian"           # gaussian | chirped_gaussian
//! amplitude = 1.0
//! width = 1.0
//! chirp_time = 1.0              # chirped_gaussian only
//!
//! [time]
//! dt = 0.25
//! t_end = 40.0
//! stride = 1
//!
//! [output]                      # optional
//! directory = "out/free_decay"
//! csv = true
//! snapshots = false
//!
//! [tolerances]                  # optional
//! boundary_mass_max = 1e-6
//! fit_start = 2.0
//! fit_end = 16.0
//! ```
//!
//! Scenario-specific tables: `[corpus]`, `[bootstrap]`, `[cubic_limit]`,
//! `[gronwall]`, `[duhamel]`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hartree_core::grid::{self, AnalyticSpec};
use hartree_core::physics::{CubicSign, InteractionSpec, Model, ModelSpec, Nonlinearity, PotentialSpec};
use hartree_core::propagator::{GuardAction, StepPlan};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FreeDecay,
    LinearDispersive,
    SmallDataHartree,
    SmallDataCubic,
    DerivativeDecay,
    CubicLimit,
    BootstrapSweep,
    InequalitySuite,
    LargeDataGronwall,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::FreeDecay,
        ScenarioKind::LinearDispersive,
        ScenarioKind::SmallDataHartree,
        ScenarioKind::SmallDataCubic,
        ScenarioKind::DerivativeDecay,
        ScenarioKind::CubicLimit,
        ScenarioKind::BootstrapSweep,
        ScenarioKind::InequalitySuite,
        ScenarioKind::LargeDataGronwall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::FreeDecay => "free_decay",
            ScenarioKind::LinearDispersive => "linear_dispersive",
            ScenarioKind::SmallDataHartree => "small_data_hartree",
            ScenarioKind::SmallDataCubic => "small_data_cubic",
            ScenarioKind::DerivativeDecay => "derivative_decay",
            ScenarioKind::CubicLimit => "cubic_limit",
            ScenarioKind::BootstrapSweep => "bootstrap_sweep",
            ScenarioKind::InequalitySuite => "inequality_suite",
            ScenarioKind::LargeDataGronwall => "large_data_gronwall",
        }
    }

    /// Whether the scenario integrates a trajectory and so needs `[time]`.
    pub fn evolves(self) -> bool {
        !matches!(self, ScenarioKind::BootstrapSweep | ScenarioKind::InequalitySuite)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub potential: PotentialBlock,
    #[serde(default)]
    pub interaction: InteractionBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    pub time: Option<TimeBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
    #[serde(default)]
    pub corpus: CorpusBlock,
    #[serde(default)]
    pub bootstrap: BootstrapBlock,
    #[serde(default)]
    pub cubic_limit: CubicLimitBlock,
    #[serde(default)]
    pub gronwall: GronwallBlock,
    #[serde(default)]
    pub duhamel: DuhamelBlock,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dimension: usize,
    pub points: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialFamily {
    #[default]
    Zero,
    GaussianWell,
    SmoothLattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(default)]
    pub family: PotentialFamily,
    pub depth: Option<f64>,
    pub width: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionFamily {
    #[default]
    None,
    Gaussian,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionBlock {
    #[serde(default)]
    pub family: InteractionFamily,
    pub total_mass: Option<f64>,
    pub width: Option<f64>,
    pub sign: Option<CubicSign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFamily {
    #[default]
    Gaussian,
    /// The gaussian already evolved freely for `chirp_time`.
    ChirpedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default)]
    pub family: InitialFamily,
    pub amplitude: f64,
    pub width: f64,
    pub chirp_time: Option<f64>,
}

impl Default for InitialBlock {
    fn default() -> Self {
        Self {
            family: InitialFamily::Gaussian,
            amplitude: 1.0,
            width: 1.0,
            chirp_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default)]
    pub snapshots: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: None,
            csv: true,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    #[serde(default = "default_boundary")]
    pub boundary_mass_max: f64,
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
}

fn default_boundary() -> f64 {
    1e-6
}

impl Default for ToleranceBlock {
    fn default() -> Self {
        Self {
            boundary_mass_max: default_boundary(),
            fit_start: None,
            fit_end: None,
        }
    }
}

/// Seeded corpora for measured constants. When `points` and `half_length`
/// are given, the constants are measured on that coarser grid with the
/// scenario's dimension and potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusBlock {
    #[serde(default = "default_corpus_size")]
    pub size: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    pub points: Option<usize>,
    pub half_length: Option<f64>,
    /// Largest time used for the linear-flow constants.
    #[serde(default = "default_linear_horizon")]
    pub linear_horizon: f64,
}

fn default_corpus_size() -> usize {
    8
}

fn default_pairs() -> usize {
    100
}

fn default_bandwidth() -> f64 {
    2.0
}

fn default_linear_horizon() -> f64 {
    2.0
}

impl Default for CorpusBlock {
    fn default() -> Self {
        Self {
            size: default_corpus_size(),
            pairs: default_pairs(),
            bandwidth: default_bandwidth(),
            points: None,
            half_length: None,
            linear_horizon: default_linear_horizon(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapBlock {
    /// Defaults to nine tenths of the threshold.
    pub epsilon: Option<f64>,
    /// Only read by `bootstrap_sweep`; elsewhere the coefficient comes from
    /// the measured ledger.
    pub c_coeff: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
}

fn default_samples() -> usize {
    1000
}

fn default_sweep_points() -> usize {
    201
}

impl Default for BootstrapBlock {
    fn default() -> Self {
        Self {
            epsilon: None,
            c_coeff: None,
            samples: default_samples(),
            sweep_points: default_sweep_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicLimitBlock {
    #[serde(default = "default_indices")]
    pub indices: Vec<u32>,
    /// Width of the unscaled gaussian profile.
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_indices() -> Vec<u32> {
    vec![1, 2, 4, 8]
}

fn default_width() -> f64 {
    1.0
}

impl Default for CubicLimitBlock {
    fn default() -> Self {
        Self {
            indices: default_indices(),
            width: default_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallBlock {
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_t0() -> f64 {
    2.0
}

impl Default for GronwallBlock {
    fn default() -> Self {
        Self { t0: default_t0() }
    }
}

/// Snapshot spacings, in strides, for the Duhamel residual refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelBlock {
    #[serde(default = "default_duhamel_end")]
    pub t_end: f64,
    #[serde(default = "default_spacings")]
    pub spacings: Vec<usize>,
}

fn default_duhamel_end() -> f64 {
    1.0
}

fn default_spacings() -> Vec<usize> {
    vec![4, 2, 1]
}

impl Default for DuhamelBlock {
    fn default() -> Self {
        Self {
            t_end: default_duhamel_end(),
            spacings: default_spacings(),
        }
    }
}

/// Offset of `offset` as a 1-based line number.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> RunError {
    RunError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    }
}

/// Parses `text` and applies `key=value` overrides with dotted keys.
pub fn parse(text: &str, overrides: &[String]) -> Result<ScenarioConfig, RunError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: ScenarioConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| parse_error(text, e))?
    } else {
        // Spans point into the re-serialized document, so line numbers are dropped.
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| RunError::Parse {
            line: None,
            message: e.message().to_string(),
        })?
    };
    config.validate()?;
    Ok(config)
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), RunError> {
    let bad = |why: &str| RunError::Override(format!("`{assignment}`: {why}"));
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("non-empty");
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{p}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// A TOML literal when it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    toml::from_str::<toml::Table>(&doc)
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn require(v: Option<f64>, block: &str, key: &str) -> Result<f64, RunError> {
    v.ok_or_else(|| RunError::Invalid {
        module: "config",
        message: format!("[{block}] needs `{key}`"),
    })
}

fn forbid<T>(v: &Option<T>, block: &str, key: &str, why: &str) -> Result<(), RunError> {
    match v {
        Some(_) => Err(RunError::Invalid {
            module: "config",
            message: format!("[{block}] key `{key}` is not used {why}"),
        }),
        None => Ok(()),
    }
}

fn invalid(module: &'static str, message: impl Into<String>) -> RunError {
    RunError::Invalid {
        module,
        message: message.into(),
    }
}

impl ScenarioConfig {
    /// Checks every block against the preconditions of the module that
    /// consumes it, without running anything expensive.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.scenario == ScenarioKind::BootstrapSweep {
            return self.validate_bootstrap();
        }
        let model = self.model()?;
        self.initial_spec()?.validate().map_err(|e| invalid("grid", e.to_string()))?;
        if self.scenario.evolves() {
            self.plan()?;
        }
        let t = &self.tolerances;
        if !(t.boundary_mass_max >= 0.0) {
            return Err(invalid("config", "boundary_mass_max must be non-negative"));
        }
        if let (Some(a), Some(b)) = (t.fit_start, t.fit_end) {
            if !(a < b) {
                return Err(invalid("diagnostics", format!("fit window [{a}, {b}] is empty")));
            }
        }
        self.validate_scenario(&model)
    }

    fn validate_bootstrap(&self) -> Result<(), RunError> {
        let b = &self.bootstrap;
        let c = require(b.c_coeff, "bootstrap", "c_coeff")?;
        if !(c > 0.0) || !b.epsilon.map_or(true, |e| e > 0.0) {
            return Err(invalid("bootstrap", "epsilon and c_coeff must be positive"));
        }
        if b.samples == 0 || b.sweep_points < 3 {
            return Err(invalid("config", "[bootstrap] needs samples > 0 and sweep_points >= 3"));
        }
        Ok(())
    }

    fn validate_scenario(&self, model: &Model<f64>) -> Result<(), RunError> {
        let d = model.dimension();
        let interaction = self.interaction.family;
        let need = |ok: bool, message: String| if ok { Ok(()) } else { Err(invalid("config", message)) };
        let name = self.scenario.name();
        match self.scenario {
            ScenarioKind::FreeDecay => {
                need(self.potential.family == PotentialFamily::Zero, format!("{name} needs a zero potential"))?;
                need(interaction == InteractionFamily::None, format!("{name} needs interaction family none"))
            }
            ScenarioKind::LinearDispersive => {
                need(interaction == InteractionFamily::None, format!("{name} needs interaction family none"))
            }
            ScenarioKind::SmallDataHartree | ScenarioKind::LargeDataGronwall => {
                need(d >= 3, format!("{name} needs dimension >= 3"))?;
                need(interaction == InteractionFamily::Gaussian, format!("{name} needs a gaussian interaction"))
            }
            ScenarioKind::DerivativeDecay => {
                need(interaction == InteractionFamily::Gaussian, format!("{name} needs a gaussian interaction"))?;
                need(!self.duhamel.spacings.is_empty(), "[duhamel] spacings is empty".into())?;
                need(self.duhamel.spacings.iter().all(|&s| s > 0), "[duhamel] spacings must be positive".into())
            }
            ScenarioKind::SmallDataCubic => {
                need(interaction == InteractionFamily::Cubic, format!("{name} needs interaction family cubic"))
            }
            ScenarioKind::CubicLimit => {
                need(interaction == InteractionFamily::Cubic, format!("{name} needs interaction family cubic"))?;
                let c = &self.cubic_limit;
                need(c.indices.len() >= 2, "[cubic_limit] needs at least two indices".into())?;
                need(c.indices.windows(2).all(|w| w[0] < w[1]), "[cubic_limit] indices must increase".into())?;
                for &n in &c.indices {
                    InteractionSpec::mollified(1.0, c.width, n)
                        .validate(model.grid())
                        .map_err(|e| invalid("physics", e.to_string()))?;
                }
                Ok(())
            }
            ScenarioKind::BootstrapSweep => self.validate_bootstrap(),
            ScenarioKind::InequalitySuite => {
                need(self.corpus.size >= 5 && self.corpus.pairs >= 1, "[corpus] needs size >= 5 and pairs >= 1".into())?;
                need(self.potential.family != PotentialFamily::Zero, format!("{name} needs a non-zero potential"))
            }
        }
    }

    /// Names of the pass/fail checks this config's run reports.
    pub fn declared_checks(&self) -> Vec<String> {
        let fixed: &[&str] = match self.scenario {
            ScenarioKind::FreeDecay => &["dispersive_law", "decay_exponent", "decay_r_squared", "mass_drift"],
            ScenarioKind::LinearDispersive => &[
                "decay_exponent",
                "decay_r_squared",
                "dispersive_constant_finite",
                "mass_drift",
                "reversibility",
            ],
            ScenarioKind::SmallDataHartree => &[
                "smallness",
                "sup_exponent",
                "dt_exponent",
                "running_m_monotone",
                "running_m_below_c0",
                "continuity_trap",
                "mass_drift",
            ],
            ScenarioKind::SmallDataCubic => &["mass_drift", "energy_drift_ratio", "convergence_slope", "reversibility"],
            ScenarioKind::DerivativeDecay => &["dt_exponent", "mass_drift", "duhamel_order", "duhamel_residual"],
            ScenarioKind::CubicLimit => &["mass_drift", "errors_decreasing", "w_l1_constant"],
            ScenarioKind::BootstrapSweep => &[
                "two_components",
                "c0_is_root",
                "root_agreement",
                "stationary_identity_displayed",
                "stationary_identity_exact",
                "stationary_inequality",
                "random_root_agreement",
                "fold_transition",
            ],
            ScenarioKind::InequalitySuite => &[
                "kernel_bounded",
                "kernel_ratio",
                "kernel_d2_rejected",
                "kato_ponce_bounded",
                "kato_ponce_reseed_stability",
                "kato_ponce_scale_invariance",
                "equivalent_norm_ratios",
                "free_equivalence_bound",
            ],
            ScenarioKind::LargeDataGronwall => &[
                "mass_drift",
                "beta_quadrature",
                "beta_quadrature_reference",
                "n_below_gronwall_bound",
            ],
        };
        let mut names: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        if self.scenario == ScenarioKind::CubicLimit {
            names.extend(self.cubic_limit.indices.iter().map(|n| format!("bound_n{n}")));
        }
        names
    }

    pub fn grid(&self) -> Result<std::sync::Arc<grid::GridSpec<f64>>, RunError> {
        let g = self
            .grid
            .ok_or_else(|| invalid("config", format!("{} needs a [grid] block", self.scenario)))?;
        grid::make_grid(g.dimension, g.points, g.half_length).map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec<f64>, RunError> {
        let p = &self.potential;
        let spec = match p.family {
            PotentialFamily::Zero => {
                forbid(&p.depth, "potential", "depth", "by family zero")?;
                forbid(&p.width, "potential", "width", "by family zero")?;
                forbid(&p.kappa, "potential", "kappa", "by family zero")?;
                PotentialSpec::Zero
            }
            PotentialFamily::GaussianWell => {
                forbid(&p.kappa, "potential", "kappa", "by family gaussian_well")?;
                PotentialSpec::GaussianWell {
                    depth: require(p.depth, "potential", "depth")?,
                    width: require(p.width, "potential", "width")?,
                }
            }
            PotentialFamily::SmoothLattice => {
                forbid(&p.width, "potential", "width", "by family smooth_lattice")?;
                PotentialSpec::SmoothLattice {
                    depth: require(p.depth, "potential", "depth")?,
                    kappa: require(p.kappa, "potential", "kappa")?,
                }
            }
        };
        spec.validate().map_err(|e| invalid("physics", e.to_string()))?;
        Ok(spec)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity<f64>, RunError> {
        let w = &self.interaction;
        Ok(match w.family {
            InteractionFamily::None => {
                forbid(&w.total_mass, "interaction", "total_mass", "by family none")?;
                forbid(&w.width, "interaction", "width", "by family none")?;
                forbid(&w.sign, "interaction", "sign", "by family none")?;
                Nonlinearity::None
            }
            InteractionFamily::Gaussian => {
                forbid(&w.sign, "interaction", "sign", "by family gaussian")?;
                Nonlinearity::Hartree(InteractionSpec::gaussian(
                    require(w.total_mass, "interaction", "total_mass")?,
                    require(w.width, "interaction", "width")?,
                ))
            }
            InteractionFamily::Cubic => {
                forbid(&w.total_mass, "interaction", "total_mass", "by family cubic")?;
                forbid(&w.width, "interaction", "width", "by family cubic")?;
                Nonlinearity::Cubic(w.sign.unwrap_or(CubicSign::Defocusing))
            }
        })
    }

    pub fn model_on(&self, grid: std::sync::Arc<grid::GridSpec<f64>>) -> Result<Model<f64>, RunError> {
        let spec = ModelSpec::new(grid, self.potential_spec()?, self.nonlinearity()?);
        Model::new(spec).map_err(|e| invalid("physics", e.to_string()))
    }

    pub fn model(&self) -> Result<Model<f64>, RunError> {
        self.model_on(self.grid()?)
    }

    pub fn initial_spec(&self) -> Result<AnalyticSpec<f64>, RunError> {
        let i = &self.initial;
        Ok(match i.family {
            InitialFamily::Gaussian => {
                forbid(&i.chirp_time, "initial", "chirp_time", "by family gaussian")?;
                AnalyticSpec::gaussian(i.amplitude, i.width)
            }
            InitialFamily::ChirpedGaussian => AnalyticSpec::FreeGaussian {
                amplitude: i.amplitude,
                sigma: i.width,
                time: require(i.chirp_time, "initial", "chirp_time")?,
                images: 1,
            },
        })
    }

    pub fn time(&self) -> Result<TimeBlock, RunError> {
        self.time
            .ok_or_else(|| invalid("config", format!("{} needs a [time] block", self.scenario)))
    }

    /// Step plan with the boundary guard set to stop the run.
    pub fn plan(&self) -> Result<StepPlan<f64>, RunError> {
        let t = self.time()?;
        let plan = StepPlan::new(t.dt, 0.0, t.t_end, t.stride).map_err(|e| invalid("propagator", e.to_string()))?;
        Ok(plan.with_boundary_guard(self.tolerances.boundary_mass_max, GuardAction::Stop))
    }
}
