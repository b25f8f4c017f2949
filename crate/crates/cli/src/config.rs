//! Run configurations: strict JSON trees with dotted `--set` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oversmooth_core::{AttentionKernel, BreakingSpec, EnergyNormalization, KillingMode, SolveMethod};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

/// Invalid configuration; always maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Edge-list file.
    File {
        path: PathBuf,
        #[serde(default)]
        directed: Option<bool>,
        #[serde(default)]
        num_nodes: Option<usize>,
    },
    /// Explicit node count and edge list.
    Edges {
        n: usize,
        edges: Vec<(usize, usize)>,
        #[serde(default)]
        directed: bool,
    },
    /// Block model with explicit connection probabilities.
    Sbm {
        n: usize,
        classes: usize,
        p_in: f64,
        p_out: f64,
    },
    /// Block model tuned to a target edge homophily and mean degree.
    Homophily {
        n: usize,
        classes: usize,
        homophily: f64,
        mean_degree: f64,
    },
}

/// Initial node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSource {
    /// Independent `scale * N(0, 1)` entries.
    Random {
        dim: usize,
        #[serde(default = "default_feature_scale")]
        scale: f64,
        /// Subtract the invariant-measure mean so the consensus value is 0.
        #[serde(default)]
        center: bool,
    },
    /// Feature CSV, one row per node.
    File { path: PathBuf },
    /// Inline rows.
    Rows { rows: Vec<Vec<f64>> },
}

/// Attention kernel, written `zero`, `dot`, `neg_sqdist` or `scaled_dot(tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelName(pub AttentionKernel);

impl FromStr for KernelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let kernel = match s {
            "zero" => AttentionKernel::Zero,
            "dot" => AttentionKernel::Dot,
            "neg_sqdist" => AttentionKernel::NegSqDist,
            _ => {
                let tau = s
                    .strip_prefix("scaled_dot(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown kernel `{s}` (zero, dot, neg_sqdist, scaled_dot(tau))"))?;
                let tau: f64 = tau.trim().parse().map_err(|_| format!("bad temperature in `{s}`"))?;
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(format!("temperature in `{s}` must be positive"));
                }
                AttentionKernel::ScaledDot(tau)
            }
        };
        Ok(KernelName(kernel))
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            AttentionKernel::Zero => write!(f, "zero"),
            AttentionKernel::Dot => write!(f, "dot"),
            AttentionKernel::NegSqDist => write!(f, "neg_sqdist"),
            AttentionKernel::ScaledDot(tau) => write!(f, "scaled_dot({tau:?})"),
        }
    }
}

impl Serialize for KernelName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Killing rates: a constant magnitude `kappa >= 0` or a per-node vector
/// `rates <= 0`; exactly one must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Killing {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
}

impl Killing {
    /// Per-node rates `c <= 0`.
    pub fn rates(&self, n: usize) -> anyhow::Result<Vec<f64>> {
        match (self.kappa, &self.rates) {
            (Some(k), None) if k.is_finite() && k >= 0.0 => Ok(vec![-k; n]),
            (Some(k), None) => Err(invalid(format!("kappa = {k} must be finite and >= 0"))),
            (None, Some(r)) if r.len() == n => Ok(r.clone()),
            (None, Some(r)) => Err(invalid(format!("rates has {} entries for {n} nodes", r.len()))),
            _ => Err(invalid("killing needs exactly one of `kappa` or `rates`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dynamics {
    /// `dH/dt = (A - I) H`.
    Linear {},
    /// `dH/dt = (A - I + C) H`.
    Broken { breaking: BreakingSpec },
    /// `dH/dt = (A - I + diag(c)) H`.
    Killed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rates: Option<Vec<f64>>,
    },
    /// Discrete layers `H_{k+1} = A(H_k) H_k` with attention recomputed per layer.
    Nonlinear { steps: usize },
}

impl Dynamics {
    /// The killing of a `killed` dynamics.
    pub fn killing(&self) -> Option<Killing> {
        match self {
            Dynamics::Killed { kappa, rates } => Some(Killing {
                kappa: *kappa,
                rates: rates.clone(),
            }),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::Linear {} => "linear",
            Dynamics::Broken { .. } => "broken",
            Dynamics::Killed { .. } => "killed",
            Dynamics::Nonlinear { .. } => "nonlinear",
        }
    }
}

/// Evaluation times: an explicit `times` list or `points` evenly spaced on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl TimeGrid {
    pub fn times(&self) -> anyhow::Result<Vec<f64>> {
        match (&self.times, self.t_max, self.points) {
            (Some(t), None, None) => Ok(t.clone()),
            (None, Some(t_max), Some(points)) if t_max.is_finite() && t_max >= 0.0 && points > 0 => {
                Ok(oversmooth_core::semigroup::linspace(t_max, points))
            }
            (None, Some(_), Some(_)) => Err(invalid("time: need t_max >= 0 and points >= 1")),
            _ => Err(invalid("time: give either `times` or both `t_max` and `points`")),
        }
    }
}

/// Graph, features, attention kernel and seed shared by the model-based commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub graph: GraphSource,
    pub self_loops: bool,
    pub features: FeatureSource,
    pub kernel: KernelName,
    pub seed: u64,
}

/// Declares a strict command config with the shared model fields first.
macro_rules! model_config {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            #[serde(default = "default_graph")]
            pub graph: GraphSource,
            /// Add a self-loop at every node.
            #[serde(default = "yes")]
            pub self_loops: bool,
            #[serde(default = "default_features")]
            pub features: FeatureSource,
            #[serde(default = "default_kernel")]
            pub kernel: KernelName,
            #[serde(default)]
            pub seed: u64,
            $($(#[$fmeta])* pub $field: $ty,)*
        }

        impl $name {
            pub fn model(&self) -> Model {
                Model {
                    graph: self.graph.clone(),
                    self_loops: self.self_loops,
                    features: self.features.clone(),
                    kernel: self.kernel,
                    seed: self.seed,
                }
            }
        }
    };
}

model_config!(DiffuseConfig {
    #[serde(default = "default_dynamics")]
    dynamics: Dynamics,
    #[serde(default = "default_time")]
    time: TimeGrid,
    #[serde(default = "default_method")]
    method: SolveMethod,
    #[serde(default)]
    energy_normalization: EnergyNormalization,
});

model_config!(SpectrumConfig {
    #[serde(default = "default_dynamics")]
    dynamics: Dynamics,
    /// Fail when the invariant measure is not unique.
    #[serde(default)]
    require_invariant_measure: bool,
});

model_config!(CtmcConfig {
    #[serde(default)]
    start: usize,
    #[serde(default = "one")]
    t: f64,
    #[serde(default = "default_samples")]
    n_samples: usize,
    #[serde(default)]
    killing: Option<Killing>,
    #[serde(default = "default_mode")]
    mode: KillingMode,
    /// Number of sample paths written as CSV.
    #[serde(default)]
    trajectories: usize,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Diffuse configuration shared by every cell.
    #[serde(default = "empty_object")]
    pub base: Value,
    /// Dotted config key -> values; cells are the Cartesian product.
    pub grid: std::collections::BTreeMap<String, Vec<Value>>,
    /// Maximum number of grid cells.
    #[serde(default = "default_budget")]
    pub cell_budget: usize,
    /// Write one SVG line plot per sweep variable.
    #[serde(default = "yes")]
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenGraphConfig {
    #[serde(default = "default_graph")]
    pub graph: GraphSource,
    #[serde(default = "yes")]
    pub self_loops: bool,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_graph() -> GraphSource {
    GraphSource::Sbm {
        n: 12,
        classes: 2,
        p_in: 0.6,
        p_out: 0.3,
    }
}

fn default_features() -> FeatureSource {
    FeatureSource::Random {
        dim: 2,
        scale: default_feature_scale(),
        center: false,
    }
}

/// Keeps dot-product logits moderate so the default attention is not near-degenerate.
fn default_feature_scale() -> f64 {
    0.5
}

fn default_kernel() -> KernelName {
    KernelName(AttentionKernel::Dot)
}

fn default_dynamics() -> Dynamics {
    Dynamics::Linear {}
}

fn default_time() -> TimeGrid {
    TimeGrid {
        times: None,
        t_max: Some(10.0),
        points: Some(51),
    }
}

fn default_method() -> SolveMethod {
    SolveMethod::Expm
}

fn default_samples() -> usize {
    100_000
}

fn default_mode() -> KillingMode {
    KillingMode::HardKill
}

fn default_budget() -> usize {
    1_000
}

/// Reads the config tree (`{}` when no file is given) and applies overrides.
pub fn load_tree(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Value> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| invalid(format!("override `{o}` is not key=value")))?;
        set_path(&mut tree, key, parse_value(raw))?;
    }
    Ok(tree)
}

/// Parses an override value as JSON, falling back to a plain string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `key` (dot-separated) in `tree`, creating objects along the way.
pub fn set_path(tree: &mut Value, key: &str, value: Value) -> anyhow::Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("bad key `{key}`")));
    }
    let mut node = tree;
    for (i, part) in parts.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| invalid(format!("`{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("key has at least one part")
}

/// Strict typed parse; errors carry the offending key path.
pub fn parse<T: DeserializeOwned>(tree: &Value) -> anyhow::Result<T> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            invalid(inner.to_string())
        } else {
            invalid(format!("{path}: {inner}"))
        }
    })
}
