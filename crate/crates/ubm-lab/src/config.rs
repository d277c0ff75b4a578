//! Experiment configuration schemas (JSON, one experiment per file),
//! validated before any computation runs.

use serde::{Deserialize, Serialize};
use ubm_core::symbols::CircleSymbol;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `cos_amp cos(k theta) + sin_amp sin(k theta)`.
    Harmonic {
        k: usize,
        #[serde(default)]
        cos_amp: f64,
        #[serde(default)]
        sin_amp: f64,
    },
    /// Sum of harmonics.
    Trig { terms: Vec<(usize, f64, f64)> },
    Constant { value: f64 },
    /// `k,re,im` CSV produced by the symbol exporter.
    File { path: String },
}

impl SymbolSpec {
    pub fn build(&self) -> Result<CircleSymbol, String> {
        match self {
            SymbolSpec::Harmonic { k, cos_amp, sin_amp } => {
                if *k == 0 {
                    return Err("harmonic symbol needs k >= 1".into());
                }
                Ok(CircleSymbol::harmonic(*k, *cos_amp, *sin_amp))
            }
            SymbolSpec::Trig { terms } => {
                if terms.is_empty() {
                    return Err("trig symbol needs at least one term".into());
                }
                let mut acc = CircleSymbol::zero(0);
                for &(k, c, s) in terms {
                    if k == 0 {
                        return Err("trig symbol terms need k >= 1".into());
                    }
                    acc = acc.add(&CircleSymbol::harmonic(k, c, s));
                }
                Ok(acc)
            }
            SymbolSpec::Constant { value } => Ok(CircleSymbol::constant(*value)),
            SymbolSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("reading symbol file {path}: {e}"))?;
                crate::formats::symbol_from_csv(&text)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum StartSpec {
    Cue,
    Lattice,
    Phases { values: Vec<f64> },
    File { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvolveConfig {
    pub n: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    pub steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub start: StartSpec,
    #[serde(default = "one")]
    pub count: usize,
}

fn default_beta() -> f64 {
    2.0
}
fn default_record_every() -> usize {
    1
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CovCheckConfig {
    pub n: usize,
    pub t: f64,
    pub f: SymbolSpec,
    pub g: SymbolSpec,
    pub n_samples: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FhStaticConfig {
    pub n_values: Vec<usize>,
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SingularitySpec {
    pub t: f64,
    pub theta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SmoothInsertionSpec {
    pub s: f64,
    pub symbol: SymbolSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FhMultitimeConfig {
    pub n: usize,
    pub singularities: Vec<SingularitySpec>,
    #[serde(default)]
    pub smooth: Vec<SmoothInsertionSpec>,
    pub n_samples: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum TestSpec {
    Arc { lo: f64, hi: f64, value: f64 },
    Smooth { symbol: SymbolSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FredholmTestSpec {
    pub time_index: usize,
    pub test: TestSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FredholmConfig {
    pub n: usize,
    pub times: Vec<f64>,
    pub tests: Vec<FredholmTestSpec>,
    #[serde(default)]
    pub quadrature_m: Option<usize>,
    /// Optional Monte Carlo cross-check over evolved trajectories.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BiasInsertionSpec {
    pub t: f64,
    pub symbol: SymbolSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LoopEqnConfig {
    pub n: usize,
    pub bias: Vec<BiasInsertionSpec>,
    pub observable: SymbolSpec,
    pub r: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum FieldSourceSpec {
    Matrix { n: usize },
    Gaussian { k_max: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GmcConfig {
    pub gamma: f64,
    pub source: FieldSourceSpec,
    /// Number of cells along the time window `[0, t_len]`.
    pub t_cells: usize,
    pub theta_cells: usize,
    pub t_len: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Optional Poisson mollification scale applied to the field in the
    /// angle variable. Mollified runs carry asymptotic normalizers, so
    /// their rows are flagged rather than judged.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Optional smooth integrand for first/second moments of mu(f).
    #[serde(default)]
    pub f: Option<SymbolSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DecouplingConfig {
    pub n: usize,
    pub lambda: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub t1: f64,
    pub t2: f64,
    pub separations: Vec<f64>,
    #[serde(default)]
    pub quadrature_m: Option<usize>,
    #[serde(default = "default_decoupling_tol")]
    pub tolerance: f64,
}

fn default_decoupling_tol() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RigidityConfig {
    pub n: usize,
    pub n_samples: usize,
    /// Required fraction of samples inside the (log N)^2 band.
    #[serde(default = "default_rigidity_fraction")]
    pub min_fraction: f64,
}

fn default_rigidity_fraction() -> f64 {
    0.99
}

/// One experiment per file, dispatched on `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Sample(SampleConfig),
    Evolve(EvolveConfig),
    CovCheck(CovCheckConfig),
    FhStatic(FhStaticConfig),
    FhMultitime(FhMultitimeConfig),
    Fredholm(FredholmConfig),
    LoopEqn(LoopEqnConfig),
    Gmc(GmcConfig),
    Decoupling(DecouplingConfig),
    Rigidity(RigidityConfig),
}

impl ExperimentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Sample(_) => "sample",
            ExperimentConfig::Evolve(_) => "evolve",
            ExperimentConfig::CovCheck(_) => "cov-check",
            ExperimentConfig::FhStatic(_) => "fh-static",
            ExperimentConfig::FhMultitime(_) => "fh-multitime",
            ExperimentConfig::Fredholm(_) => "fredholm",
            ExperimentConfig::LoopEqn(_) => "loop-eqn",
            ExperimentConfig::Gmc(_) => "gmc",
            ExperimentConfig::Decoupling(_) => "decoupling",
            ExperimentConfig::Rigidity(_) => "rigidity",
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema validation beyond what serde enforces.
    pub fn validate(&self) -> Result<(), String> {
        fn positive(name: &str, v: usize) -> Result<(), String> {
            if v == 0 {
                Err(format!("{name} must be at least 1"))
            } else {
                Ok(())
            }
        }
        match self {
            ExperimentConfig::Sample(c) => {
                positive("n", c.n)?;
                positive("count", c.count)
            }
            ExperimentConfig::Evolve(c) => {
                positive("n", c.n)?;
                positive("count", c.count)?;
                if c.beta <= 0.0 {
                    return Err("beta must be positive".into());
                }
                if let Some(dt) = c.dt {
                    if dt <= 0.0 {
                        return Err("dt must be positive".into());
                    }
                }
                if let StartSpec::Phases { values } = &c.start {
                    if values.len() != c.n {
                        return Err("start phases must have length n".into());
                    }
                }
                Ok(())
            }
            ExperimentConfig::CovCheck(c) => {
                positive("n", c.n)?;
                positive("n_samples", c.n_samples)?;
                if c.t < 0.0 {
                    return Err("t must be nonnegative".into());
                }
                Ok(())
            }
            ExperimentConfig::FhStatic(c) => {
                if c.n_values.is_empty() || c.gammas.is_empty() {
                    return Err("fh-static needs n_values and gammas".into());
                }
                if c.gammas.iter().any(|&g| g < 0.0) {
                    return Err("gammas must be nonnegative".into());
                }
                Ok(())
            }
            ExperimentConfig::FhMultitime(c) => {
                positive("n", c.n)?;
                positive("n_samples", c.n_samples)?;
                if c.singularities.is_empty() && c.smooth.is_empty() {
                    return Err("fh-multitime needs at least one insertion".into());
                }
                Ok(())
            }
            ExperimentConfig::Fredholm(c) => {
                positive("n", c.n)?;
                if c.times.is_empty() {
                    return Err("fredholm needs at least one time".into());
                }
                for t in &c.tests {
                    if t.time_index >= c.times.len() {
                        return Err("test time_index out of range".into());
                    }
                }
                Ok(())
            }
            ExperimentConfig::LoopEqn(c) => {
                positive("n", c.n)?;
                positive("n_samples", c.n_samples)?;
                if c.r < 0.0 {
                    return Err("r must be nonnegative".into());
                }
                Ok(())
            }
            ExperimentConfig::Gmc(c) => {
                if c.t_cells < 2 || c.theta_cells < 2 {
                    return Err("gmc needs at least 2 cells per direction".into());
                }
                positive("n_samples", c.n_samples)?;
                if !(c.gamma > 0.0 && c.gamma < ubm_core::chaos::GAMMA_SUP) {
                    return Err("gamma must lie in (0, 2 sqrt 2)".into());
                }
                if c.t_len <= 0.0 {
                    return Err("t_len must be positive".into());
                }
                Ok(())
            }
            ExperimentConfig::Decoupling(c) => {
                positive("n", c.n)?;
                if c.lambda < 1.0 {
                    return Err("lambda must be >= 1".into());
                }
                if c.separations.is_empty() {
                    return Err("decoupling needs separations".into());
                }
                Ok(())
            }
            ExperimentConfig::Rigidity(c) => {
                positive("n", c.n)?;
                positive("n_samples", c.n_samples)?;
                if !(0.0..=1.0).contains(&c.min_fraction) {
                    return Err("min_fraction must lie in [0, 1]".into());
                }
                Ok(())
            }
        }
    }
}
