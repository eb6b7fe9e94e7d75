//! Experiment configuration files.
//!
//! A config is a TOML document with a mandatory seed, the system to simulate,
//! the estimator to run, and optional precondition checks:
//!
//! ```toml
//! name = "kn04-sync"
//! seed = 20040601
//! realizations = 500
//! horizon = 500
//!
//! [system]
//! kind = "ifs"
//! generators = ["rotation(0.6180339887)", "sine(0.1)"]
//! weights = [0.5, 0.5]
//!
//! [estimator]
//! kind = "sync"
//! pairs = [[0.1, 0.6]]
//!
//! [[checks]]
//! kind = "no-deterministic-fixed-point"
//! ```
//!
//! The README lists every estimator and check with its fields.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{Direction, ANCHOR_TOL, CONTRACT_TOL, SYNC_TOL};
use crate::circle::{Arc, CirclePoint};
use crate::homeo::HomeoSpec;
use crate::rds::IfsModel;
use crate::sde::{DriftSpec, SdeModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax and schema errors, with the line and column from the parser.
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown preset `{0}`; run `list-presets` for the available names")]
    UnknownPreset(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub realizations: usize,
    pub horizon: usize,
    pub system: SystemConfig,
    pub estimator: EstimatorConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckConfig>,
    #[serde(default, skip_serializing_if = "OutputConfig::is_default")]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// i.i.d. compositions of the generators; equal weights when omitted.
    Ifs {
        generators: Vec<HomeoSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// `dX = b(X) dt + σ dW`, observed at integer times. `drift` is `sine:k`
    /// or `table:path.csv`, with the path relative to the config file.
    Sde { drift: String, sigma: f64, h: f64 },
}

/// A built system.
#[derive(Debug, Clone)]
pub enum System {
    Ifs(IfsModel),
    Sde(SdeModel),
}

impl SystemConfig {
    /// Builds the model, resolving table paths against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<System, ConfigError> {
        match self {
            SystemConfig::Ifs { generators, weights } => {
                let model = match weights {
                    Some(w) => IfsModel::new(generators.clone(), w.clone()),
                    None => IfsModel::uniform(generators.clone()),
                };
                model
                    .map(System::Ifs)
                    .map_err(|e| ConfigError::invalid("system", e))
            }
            SystemConfig::Sde { drift, sigma, h } => {
                let drift = parse_drift(drift, base_dir)?;
                SdeModel::new(drift, *sigma, *h)
                    .map(System::Sde)
                    .map_err(|e| ConfigError::invalid("system", e))
            }
        }
    }
}

fn parse_drift(text: &str, base_dir: Option<&Path>) -> Result<DriftSpec, ConfigError> {
    let Some(path) = text.trim().strip_prefix("table:") else {
        return text.parse().map_err(|e| ConfigError::invalid("system.drift", e));
    };
    let resolved = match base_dir {
        Some(dir) => dir.join(path),
        None => PathBuf::from(path),
    };
    let contents = std::fs::read_to_string(&resolved).map_err(|source| ConfigError::Io {
        path: resolved.clone(),
        source,
    })?;
    match DriftSpec::from_csv(&contents) {
        Ok(DriftSpec::Tabulated { values, .. }) => Ok(DriftSpec::Tabulated {
            values,
            source: Some(path.to_string()),
        }),
        Ok(other) => Ok(other),
        Err(e) => Err(ConfigError::invalid("system.drift", e)),
    }
}

fn default_sync_tol() -> f64 {
    SYNC_TOL
}

fn default_contract_tol() -> f64 {
    CONTRACT_TOL
}

fn default_anchor_tol() -> f64 {
    ANCHOR_TOL
}

fn default_bins() -> usize {
    64
}

fn default_depths() -> Vec<usize> {
    vec![500, 1000, 2000]
}

fn default_anchors() -> [CirclePoint; 2] {
    [CirclePoint::new(0.25), CirclePoint::new(0.75)]
}

fn default_cloud_points() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorConfig {
    /// Pairwise synchronisation, optionally with local stability around a point.
    Sync {
        pairs: Vec<[CirclePoint; 2]>,
        #[serde(default = "default_sync_tol")]
        tol: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stability: Option<StabilityConfig>,
    },
    /// SDE only: two lifts `gap` apart, integrated on the fine grid for
    /// `horizon` time units.
    Gap { x: f64, gap: f64 },
    /// Crack points from bases 0 and 1/2, binned into `bins` cells.
    CrackLaw {
        #[serde(default = "default_contract_tol")]
        tol: f64,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        equivariance: Option<EquivarianceConfig>,
    },
    /// Pullback attractor and crack-point repeller; `horizon` is the crack horizon.
    Pair {
        #[serde(default = "default_depths")]
        depths: Vec<usize>,
        #[serde(default = "default_anchors")]
        anchors: [CirclePoint; 2],
        #[serde(default = "default_anchor_tol")]
        anchor_tol: f64,
        #[serde(default = "default_contract_tol")]
        contract_tol: f64,
        cloud_time: usize,
        #[serde(default = "default_cloud_points")]
        cloud_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        equivariance_shift: Option<usize>,
    },
    /// Contraction probabilities of arcs against `1 − ρ(J)` for the
    /// reverse-stationary `ρ`.
    Lemma34 {
        arcs: Vec<Arc>,
        #[serde(default = "default_contract_tol")]
        tol: f64,
        stationary: OccupationConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        martingale: Option<MartingaleConfig>,
    },
    /// Running time averages of the indicator of `arc` from several starts,
    /// next to the forward stationary mass of `arc`.
    Birkhoff {
        starts: Vec<CirclePoint>,
        arc: Arc,
        every: usize,
        stationary: OccupationConfig,
    },
    /// Spread of the image of an evenly spaced cloud over time.
    SpreadDecay { points: usize, every: usize },
    /// Lyapunov exponent along the trajectory of `x`.
    Lyapunov { x: CirclePoint },
}

impl EstimatorConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EstimatorConfig::Sync { .. } => "sync",
            EstimatorConfig::Gap { .. } => "gap",
            EstimatorConfig::CrackLaw { .. } => "crack-law",
            EstimatorConfig::Pair { .. } => "pair",
            EstimatorConfig::Lemma34 { .. } => "lemma34",
            EstimatorConfig::Birkhoff { .. } => "birkhoff",
            EstimatorConfig::SpreadDecay { .. } => "spread-decay",
            EstimatorConfig::Lyapunov { .. } => "lyapunov",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub point: CirclePoint,
    pub radii: Vec<f64>,
    #[serde(default = "default_contract_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivarianceConfig {
    pub realizations: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    pub start: CirclePoint,
    pub burn_in: usize,
    pub samples: usize,
    pub realizations: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleConfig {
    pub arc: Arc,
    pub s: usize,
    pub t: usize,
    pub continuations: usize,
    pub prefixes: usize,
}

/// Preconditions verified before the estimator runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckConfig {
    /// IFS: the generators have no common fixed point.
    NoDeterministicFixedPoint,
    /// IFS: cell reachability on a grid agrees with `expect`.
    Minimality {
        direction: Direction,
        grid: usize,
        word_length: usize,
        expect: bool,
    },
    /// `expect = true`: every arc gets shorter in some probe.
    /// `expect = false`: no arc ever does.
    Compressibility {
        arcs: Vec<Arc>,
        realizations: usize,
        horizon: usize,
        expect: bool,
    },
    /// IFS: some generator is simple (two fixed points, one global attractor).
    SimpleGenerator { horizon: usize, tol: f64 },
    /// IFS: every generator maps `arc` into itself.
    InvariantArc { arc: Arc },
    /// IFS: no endpoint of `arc` is a common fixed point.
    BoundaryNotFixed { arc: Arc },
    /// SDE: the drift is `1/expect`-periodic and no finer.
    LeastPeriod { expect: u32 },
    /// SDE: the explicit contracting path exists for `arc`.
    Witness { arc: Arc, eta: f64 },
}

impl CheckConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckConfig::NoDeterministicFixedPoint => "no-deterministic-fixed-point",
            CheckConfig::Minimality { .. } => "minimality",
            CheckConfig::Compressibility { .. } => "compressibility",
            CheckConfig::SimpleGenerator { .. } => "simple-generator",
            CheckConfig::InvariantArc { .. } => "invariant-arc",
            CheckConfig::BoundaryNotFixed { .. } => "boundary-not-fixed",
            CheckConfig::LeastPeriod { .. } => "least-period",
            CheckConfig::Witness { .. } => "witness",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report directory; `--out-dir` overrides it. Defaults to `out/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl OutputConfig {
    fn is_default(&self) -> bool {
        self.dir.is_none()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Checks what the schema alone cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.realizations == 0 {
            return Err(ConfigError::invalid("realizations", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::invalid("horizon", "must be at least 1"));
        }
        let is_sde = matches!(self.system, SystemConfig::Sde { .. });
        if is_sde && matches!(self.estimator, EstimatorConfig::Lemma34 { .. } | EstimatorConfig::Lyapunov { .. }) {
            return Err(ConfigError::invalid(
                "estimator.kind",
                format!("`{}` needs inverse maps or derivatives, which the sde does not provide", self.estimator.kind()),
            ));
        }
        match &self.estimator {
            EstimatorConfig::Gap { gap, .. } => {
                if !is_sde {
                    return Err(ConfigError::invalid("estimator.kind", "`gap` needs an sde system"));
                }
                if !(*gap > 0.0 && *gap < 1.0) {
                    return Err(ConfigError::invalid("estimator.gap", "must lie in (0, 1)"));
                }
            }
            EstimatorConfig::Sync { pairs, .. } if pairs.is_empty() => {
                return Err(ConfigError::invalid("estimator.pairs", "needs at least one pair"));
            }
            EstimatorConfig::CrackLaw { bins, .. } if *bins == 0 => {
                return Err(ConfigError::invalid("estimator.bins", "must be at least 1"));
            }
            EstimatorConfig::Pair { depths, .. } if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) => {
                return Err(ConfigError::invalid("estimator.depths", "must be non-empty and strictly increasing"));
            }
            EstimatorConfig::Lemma34 { arcs, stationary, .. } => {
                if arcs.is_empty() {
                    return Err(ConfigError::invalid("estimator.arcs", "needs at least one arc"));
                }
                check_occupation("estimator.stationary", stationary)?;
            }
            EstimatorConfig::Birkhoff {
                starts,
                every,
                stationary,
                ..
            } => {
                if starts.is_empty() {
                    return Err(ConfigError::invalid("estimator.starts", "needs at least one start"));
                }
                if *every == 0 {
                    return Err(ConfigError::invalid("estimator.every", "must be at least 1"));
                }
                check_occupation("estimator.stationary", stationary)?;
            }
            EstimatorConfig::SpreadDecay { points, every } if *points == 0 || *every == 0 => {
                return Err(ConfigError::invalid("estimator", "`points` and `every` must be at least 1"));
            }
            _ => {}
        }
        for (i, check) in self.checks.iter().enumerate() {
            let sde_only = matches!(check, CheckConfig::LeastPeriod { .. } | CheckConfig::Witness { .. });
            let ifs_only = !sde_only && !matches!(check, CheckConfig::Compressibility { .. });
            if (sde_only && !is_sde) || (ifs_only && is_sde) {
                return Err(ConfigError::invalid(
                    &format!("checks[{i}].kind"),
                    format!("`{}` does not apply to this system", check.kind()),
                ));
            }
        }
        Ok(())
    }
}

fn check_occupation(field: &str, o: &OccupationConfig) -> Result<(), ConfigError> {
    if o.realizations == 0 || o.samples == 0 || o.bins == 0 {
        return Err(ConfigError::invalid(field, "`realizations`, `samples` and `bins` must be at least 1"));
    }
    Ok(())
}
