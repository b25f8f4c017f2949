//! Attention matrices, Q-matrix generators and the extra terms that break
//! ergodicity or kill mass.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::graph::Graph;

/// Row-sum tolerance for stochastic matrices and Q-matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic matrix with nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, ROW_SUM_TOL)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                what: "stochastic matrix columns",
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        for (u, row) in entries.row_iter().enumerate() {
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "row {u} has an invalid probability {x}"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("row {u} sums to {s}, not 1")));
            }
        }
        Ok(Self { entries })
    }

    /// Uniform attention over each node's neighbourhood.
    pub fn uniform(graph: &Graph) -> Result<Self> {
        build_attention(
            graph,
            &FeatureField::constant(graph.n(), &[]),
            AttentionKernel::Zero.as_fn(),
        )
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.entries[(u, v)]
    }

    /// Support graph `{(u, v) : a(u, v) > 0}` as successor lists.
    pub fn support(&self) -> Vec<Vec<usize>> {
        (0..self.n())
            .map(|u| (0..self.n()).filter(|&v| self.entries[(u, v)] > 0.0).collect())
            .collect()
    }

    /// Smallest positive entry.
    pub fn min_positive_entry(&self) -> f64 {
        self.entries
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Built-in attention kernels `Phi(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttentionKernel {
    /// `0`: uniform attention.
    Zero,
    /// `x . y`
    Dot,
    /// `x . y / tau`
    ScaledDot(f64),
    /// `-|x - y|^2`
    NegSqDist,
}

impl AttentionKernel {
    pub fn score(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            AttentionKernel::Zero => 0.0,
            AttentionKernel::Dot => dot(x, y),
            AttentionKernel::ScaledDot(tau) => dot(x, y) / tau,
            AttentionKernel::NegSqDist => -x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
        }
    }

    pub fn as_fn(&self) -> impl Fn(&[f64], &[f64]) -> f64 + Copy + Send + Sync {
        let k = *self;
        move |x: &[f64], y: &[f64]| k.score(x, y)
    }

    /// Whether every score is nonnegative regardless of the features.
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, AttentionKernel::Zero)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl fmt::Display for AttentionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttentionKernel::Zero => f.write_str("zero"),
            AttentionKernel::Dot => f.write_str("dot"),
            AttentionKernel::ScaledDot(tau) => write!(f, "scaled_dot({tau})"),
            AttentionKernel::NegSqDist => f.write_str("neg_sqdist"),
        }
    }
}

impl FromStr for AttentionKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "zero" => return Ok(AttentionKernel::Zero),
            "dot" => return Ok(AttentionKernel::Dot),
            "neg_sqdist" => return Ok(AttentionKernel::NegSqDist),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("scaled_dot(").and_then(|r| r.strip_suffix(')')) {
            let tau: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad temperature in `{s}`")))?;
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "scaled_dot temperature must be positive, got {tau}"
                )));
            }
            return Ok(AttentionKernel::ScaledDot(tau));
        }
        Err(Error::InvalidArgument(format!(
            "unknown attention kernel `{s}` (expected zero, dot, scaled_dot(tau) or neg_sqdist)"
        )))
    }
}

impl Serialize for AttentionKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttentionKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Attention matrix together with the range of logits that produced it.
#[derive(Debug, Clone)]
pub struct AttentionBuild {
    pub matrix: StochasticMatrix,
    pub min_logit: f64,
    pub max_logit: f64,
}

/// Softmax attention over each node's out-neighbourhood:
/// `a(u, v) = exp(Phi(X(u), X(v))) / sum_w exp(Phi(X(u), X(w)))` on edges, 0 elsewhere.
pub fn build_attention<F>(graph: &Graph, features: &FeatureField, phi: F) -> Result<StochasticMatrix>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    build_attention_with_logits(graph, features, phi).map(|b| b.matrix)
}

pub fn build_attention_with_logits<F>(graph: &Graph, features: &FeatureField, phi: F) -> Result<AttentionBuild>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = graph.n();
    if features.n() != n {
        return Err(Error::DimensionMismatch {
            what: "feature rows",
            expected: n,
            found: features.n(),
        });
    }
    let rows = features.rows();
    let mut a = DMatrix::zeros(n, n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut logits = Vec::new();
    for u in 0..n {
        let nb = graph.neighbors(u);
        if nb.is_empty() {
            return Err(Error::IsolatedNode(u));
        }
        logits.clear();
        logits.extend(nb.iter().map(|&v| phi(&rows[u], &rows[v])));
        if let Some(bad) = logits.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "attention logit {bad} at node {u} is not finite"
            )));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = logits.iter().copied().fold(f64::INFINITY, f64::min);
        lo = lo.min(min);
        hi = hi.max(max);
        let weights: Vec<f64> = logits.iter().map(|b| (b - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        for (&v, w) in nb.iter().zip(&weights) {
            a[(u, v)] = w / z;
        }
    }
    Ok(AttentionBuild {
        matrix: StochasticMatrix::new(a)?,
        min_logit: lo,
        max_logit: hi,
    })
}

/// Which terms beyond `A - I` a generator carries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub breaking: bool,
    pub killing: bool,
}

impl Provenance {
    pub fn is_markov(&self) -> bool {
        !self.breaking && !self.killing
    }
}

/// Generator of a linear diffusion: a Q-matrix plus optional breaking and killing terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DMatrix<f64>,
    base: DMatrix<f64>,
    diagonal_term: Option<DVector<f64>>,
    breaking_matrix: Option<DMatrix<f64>>,
    provenance: Provenance,
}

impl Generator {
    /// Wraps a matrix that must satisfy the Q-matrix conditions.
    pub fn from_q_matrix(q: DMatrix<f64>) -> Result<Self> {
        check_q_matrix(&q)?;
        Ok(Self {
            base: q.clone(),
            q,
            diagonal_term: None,
            breaking_matrix: None,
            provenance: Provenance::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    /// The composite matrix, including any extra terms.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// The Q-matrix part `A - I`.
    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    /// The attention matrix behind the base part, `A = Q_base + I`.
    pub fn attention(&self) -> StochasticMatrix {
        let n = self.n();
        StochasticMatrix::with_tolerance(&self.base + DMatrix::identity(n, n), 1e-9).expect("base part is a Q-matrix")
    }

    pub fn diagonal_term(&self) -> Option<&DVector<f64>> {
        self.diagonal_term.as_ref()
    }

    pub fn breaking_matrix(&self) -> Option<&DMatrix<f64>> {
        self.breaking_matrix.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `max_u sum_v |Q(u, v)|`.
    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.q)
    }
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_q_matrix(q: &DMatrix<f64>) -> Result<()> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch {
            what: "generator columns",
            expected: q.nrows(),
            found: q.ncols(),
        });
    }
    for (u, row) in q.row_iter().enumerate() {
        for (v, &x) in row.iter().enumerate() {
            let ok = if u == v { x <= 0.0 } else { x >= 0.0 };
            if !ok || !x.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "entry ({u}, {v}) = {x} violates the Q-matrix sign conditions"
                )));
            }
        }
        let s: f64 = row.iter().sum();
        if s.abs() > ROW_SUM_TOL {
            return Err(Error::InvalidArgument(format!("generator row {u} sums to {s}, not 0")));
        }
    }
    Ok(())
}

/// `Q = A - I`.
pub fn generator_from_attention(a: &StochasticMatrix) -> Generator {
    let n = a.n();
    let mut q = a.as_matrix().clone();
    for u in 0..n {
        q[(u, u)] -= 1.0;
    }
    // Restore exact zero row sums lost to rounding in the diagonal subtraction.
    for u in 0..n {
        let off: f64 = (0..n).filter(|&v| v != u).map(|v| q[(u, v)]).sum();
        q[(u, u)] = -off;
    }
    Generator {
        base: q.clone(),
        q,
        diagonal_term: None,
        breaking_matrix: None,
        provenance: Provenance::default(),
    }
}

/// Truncated matrix series used as an ergodicity-breaking term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakingKind {
    /// `sum_n A^n / n!`
    Exp,
    /// `sum_n (-1)^n A^n / n!`
    Expn,
    /// `sum_{n>=1} (-1)^(n-1) A^n / n`
    Log,
    /// `diag(c)`
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakingSpec {
    pub kind: BreakingKind,
    /// Truncation depth `N >= 1`; ignored for the diagonal kind.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub diagonal_values: Option<Vec<f64>>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Adds the `n = 0` identity term of the exp/expn series.
    #[serde(default)]
    pub include_identity: bool,
}

fn default_order() -> usize {
    1
}

fn default_scale() -> f64 {
    1.0
}

impl BreakingSpec {
    pub fn series(kind: BreakingKind, order: usize) -> Self {
        Self {
            kind,
            order,
            diagonal_values: None,
            scale: 1.0,
            include_identity: false,
        }
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        Self {
            kind: BreakingKind::Diagonal,
            order: 1,
            diagonal_values: Some(values),
            scale: 1.0,
            include_identity: false,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !self.scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "breaking scale {} is not finite",
                self.scale
            )));
        }
        match self.kind {
            BreakingKind::Diagonal => {
                let values = self
                    .diagonal_values
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("diagonal breaking needs diagonal_values".into()))?;
                if values.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "diagonal_values",
                        expected: n,
                        found: values.len(),
                    });
                }
                if let Some((u, c)) = values.iter().enumerate().find(|(_, c)| **c == 0.0 || !c.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "diagonal breaking value c({u}) = {c} must be nonzero and finite"
                    )));
                }
            }
            _ if self.order == 0 => return Err(Error::InvalidArgument("series order must be at least 1".into())),
            _ => {}
        }
        Ok(())
    }

    /// Coefficient of `A^k` in the truncated series (before `scale`).
    pub fn coefficient(&self, k: usize) -> f64 {
        let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        match self.kind {
            _ if k > self.order => 0.0,
            BreakingKind::Exp | BreakingKind::Expn if k == 0 && !self.include_identity => 0.0,
            BreakingKind::Exp => 1.0 / factorial(k),
            BreakingKind::Expn => sign / factorial(k),
            BreakingKind::Log if k == 0 => 0.0,
            BreakingKind::Log => -sign / k as f64,
            BreakingKind::Diagonal => 0.0,
        }
    }
}

/// Breaking matrix `C` for `spec`, evaluated by Horner's rule in `A`.
///
/// Fails unless `C 1 != 0` (constants must leave the kernel) when the scale is nonzero.
pub fn breaking_term(spec: &BreakingSpec, a: &StochasticMatrix) -> Result<DMatrix<f64>> {
    let n = a.n();
    spec.validate(n)?;
    if spec.scale == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let c = match spec.kind {
        BreakingKind::Diagonal => {
            let values = spec.diagonal_values.as_ref().expect("validated");
            DMatrix::from_diagonal(&DVector::from_column_slice(values))
        }
        _ => {
            let am = a.as_matrix();
            let mut acc = DMatrix::identity(n, n) * spec.coefficient(spec.order);
            for k in (0..spec.order).rev() {
                acc = am * acc;
                let c = spec.coefficient(k);
                if c != 0.0 {
                    for u in 0..n {
                        acc[(u, u)] += c;
                    }
                }
            }
            acc
        }
    } * spec.scale;
    let norm = (&c * DVector::from_element(n, 1.0)).amax();
    if norm <= 1e-12 {
        return Err(Error::ErgodicityNotBroken { norm });
    }
    Ok(c)
}

/// `Q + C`. Row sums are no longer zero.
pub fn modified_generator(q: &Generator, c: &DMatrix<f64>) -> Result<Generator> {
    if c.shape() != q.q.shape() {
        return Err(Error::DimensionMismatch {
            what: "breaking matrix",
            expected: q.n(),
            found: c.nrows(),
        });
    }
    let breaking = match &q.breaking_matrix {
        Some(prev) => prev + c,
        None => c.clone(),
    };
    Ok(Generator {
        q: &q.q + c,
        base: q.base.clone(),
        diagonal_term: q.diagonal_term.clone(),
        breaking_matrix: Some(breaking),
        provenance: Provenance {
            breaking: true,
            ..q.provenance
        },
    })
}

/// `Q + diag(c)` with `c <= 0`: the generator of the chain killed at rate `-c(u)`.
pub fn killed_generator(q: &Generator, c: &[f64]) -> Result<Generator> {
    check_killing(c, q.n())?;
    let mut m = q.q.clone();
    for (u, cu) in c.iter().enumerate() {
        m[(u, u)] += cu;
    }
    let diag = match &q.diagonal_term {
        Some(prev) => prev + DVector::from_column_slice(c),
        None => DVector::from_column_slice(c),
    };
    Ok(Generator {
        q: m,
        base: q.base.clone(),
        diagonal_term: Some(diag),
        breaking_matrix: q.breaking_matrix.clone(),
        provenance: Provenance {
            killing: true,
            ..q.provenance
        },
    })
}

pub(crate) fn check_killing(c: &[f64], n: usize) -> Result<()> {
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            what: "killing vector",
            expected: n,
            found: c.len(),
        });
    }
    if let Some((node, &value)) = c.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x <= 0.0)) {
        return Err(Error::PositiveKillingRate { node, value });
    }
    Ok(())
}
