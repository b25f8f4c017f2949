//! Discrete nonlinear diffusion `H_{t+1} = A(H_t) H_t` and weak-ergodicity
//! diagnostics of the time-inhomogeneous products `A(H_{t-1}) ... A(H_0)`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::attention::build_attention_with_logits;
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::graph::Graph;
use crate::io::fmt_real;

/// Row-sum drift above which accumulated products are renormalized.
const RENORMALIZE_DRIFT: f64 = 1e-12;

/// Product of the first `step` attention factors, newest on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    pub p: DMatrix<f64>,
    pub step: usize,
    /// Smallest edge-supported attention entry among the factors so far.
    pub epsilon: f64,
}

impl ProductOperator {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }
}

/// Everything recorded by [`nonlinear_rollout`].
#[derive(Debug, Clone)]
pub struct Rollout {
    pub graph: Graph,
    /// `H_0, ..., H_T`.
    pub states: Vec<FeatureField>,
    /// `products[k]` is the product of the first `k` factors; `products[0] = I`.
    pub products: Vec<DMatrix<f64>>,
    /// Smallest edge-supported entry of each factor `A(H_t)`.
    pub factor_min_entries: Vec<f64>,
    /// Smallest and largest logit seen over all factors.
    pub logit_range: (f64, f64),
    /// Largest row-sum correction applied to the products.
    pub max_drift: f64,
}

impl Rollout {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    /// A posteriori Doeblin constant: smallest attention entry on any edge of any factor.
    pub fn epsilon(&self) -> f64 {
        self.factor_min_entries.iter().copied().fold(1.0, f64::min)
    }

    pub fn product(&self, step: usize) -> ProductOperator {
        let epsilon = self.factor_min_entries[..step].iter().copied().fold(1.0, f64::min);
        ProductOperator {
            p: self.products[step].clone(),
            step,
            epsilon,
        }
    }

    pub fn final_product(&self) -> ProductOperator {
        self.product(self.steps())
    }
}

/// Iterates `H_{t+1} = A(H_t) H_t` for `steps` steps, rebuilding the attention
/// from the current features each time.
pub fn nonlinear_rollout<F>(graph: &Graph, f: &FeatureField, phi: F, steps: usize) -> Result<Rollout>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = graph.n();
    let h0_max = f.max_norm();
    let mut states = vec![f.clone()];
    let mut products = vec![DMatrix::identity(n, n)];
    let mut factor_min_entries = Vec::with_capacity(steps);
    let mut logit_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut max_drift = 0.0f64;
    for t in 0..steps {
        let current = &states[t];
        let build = build_attention_with_logits(graph, current, &phi).map_err(|e| match e {
            Error::InvalidArgument(_) => Error::NonFinite { step: t },
            other => other,
        })?;
        logit_range.0 = logit_range.0.min(build.min_logit);
        logit_range.1 = logit_range.1.max(build.max_logit);
        let a = build.matrix.as_matrix();
        let eps_t = graph.edges().iter().map(|&(u, v)| a[(u, v)]).fold(1.0, f64::min);
        factor_min_entries.push(eps_t);

        let next = a * current.as_matrix();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: t + 1 });
        }
        let next = FeatureField::new(next)?;
        if next.max_norm() > h0_max + 1e-10 {
            return Err(Error::Invariant(format!(
                "max norm grew from {h0_max:e} to {:e} at step {}",
                next.max_norm(),
                t + 1
            )));
        }

        let mut p = a * &products[t];
        for mut row in p.row_iter_mut() {
            let s: f64 = row.iter().sum();
            let drift = (s - 1.0).abs();
            if drift > RENORMALIZE_DRIFT {
                max_drift = max_drift.max(drift);
                row /= s;
            }
        }
        products.push(p);
        states.push(next);
    }
    if max_drift > 0.0 {
        log::debug!("renormalized product rows; largest drift {max_drift:e}");
    }
    Ok(Rollout {
        graph: graph.clone(),
        states,
        products,
        factor_min_entries,
        logit_range,
        max_drift,
    })
}

/// `(1/2) sum_i |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a support");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Largest total-variation distance between two rows of `p`.
pub fn max_pair_tv(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|u| p.row(u).iter().copied().collect()).collect();
    let mut best = 0.0f64;
    for u in 0..n {
        for v in (u + 1)..n {
            best = best.max(tv_distance(&rows[u], &rows[v]));
        }
    }
    best
}

/// `trace[t]` = max pairwise row TV of the product of the first `t` factors.
pub fn weak_ergodicity_trace(rollout: &Rollout) -> Vec<f64> {
    rollout.products.iter().map(max_pair_tv).collect()
}

/// Sign information about the logits, selecting the Doeblin floor formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogitSign {
    /// `0 <= Phi <= C`: floor `1 / (Delta e^C)`.
    NonNegative,
    /// `|Phi| <= C`: floor `e^{-2C} / Delta`.
    Signed,
}

/// A priori lower bound on every edge-supported attention entry when logits are bounded by `logit_bound`.
pub fn doeblin_epsilon_bound(graph: &Graph, logit_bound: f64, sign: LogitSign) -> Result<f64> {
    if !(logit_bound.is_finite() && logit_bound >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "logit bound {logit_bound} must be finite and >= 0"
        )));
    }
    let delta = graph.max_degree();
    if (0..graph.n()).any(|u| graph.degree(u) == 0) {
        return Err(Error::IsolatedNode(
            (0..graph.n()).find(|&u| graph.degree(u) == 0).unwrap(),
        ));
    }
    let delta = delta as f64;
    Ok(match sign {
        LogitSign::NonNegative => 1.0 / (delta * logit_bound.exp()),
        LogitSign::Signed => (-2.0 * logit_bound).exp() / delta,
    })
}

/// Checks `P(u, v) >= eps^k` on every edge for the product of `k >= 1` factors,
/// with `eps` the a posteriori Doeblin constant.
pub fn selfloop_floor_check(rollout: &Rollout) -> Result<bool> {
    let g = &rollout.graph;
    if let Some(u) = (0..g.n()).find(|&u| !g.contains_edge(u, u)) {
        return Err(Error::MissingSelfLoop(u));
    }
    let eps = rollout.epsilon();
    for (k, p) in rollout.products.iter().enumerate().skip(1) {
        let floor = eps.powi(k as i32) * (1.0 - 1e-9);
        if g.edges().iter().any(|&(u, v)| p[(u, v)] < floor) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One row of the weak-ergodicity trace export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub max_pair_tv: f64,
    pub doeblin_bound: f64,
    pub min_edge_entry: f64,
    pub feature_spread: f64,
}

pub fn trace_rows(rollout: &Rollout) -> Vec<TraceRow> {
    let eps = rollout.epsilon();
    weak_ergodicity_trace(rollout)
        .into_iter()
        .enumerate()
        .map(|(t, tv)| TraceRow {
            t,
            max_pair_tv: tv,
            doeblin_bound: (1.0 - eps).powi(t as i32),
            min_edge_entry: rollout.factor_min_entries.get(t).copied().unwrap_or(f64::NAN),
            feature_spread: rollout.states[t].spread(),
        })
        .collect()
}

/// CSV with columns `t,max_pair_tv,doeblin_bound,min_edge_entry,feature_spread`.
/// The last row has no factor of its own; its `min_edge_entry` is `NA`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("t,max_pair_tv,doeblin_bound,min_edge_entry,feature_spread\n");
    for r in rows {
        let min_entry = if r.min_edge_entry.is_nan() {
            "NA".to_owned()
        } else {
            fmt_real(r.min_edge_entry)
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t,
            fmt_real(r.max_pair_tv),
            fmt_real(r.doeblin_bound),
            min_entry,
            fmt_real(r.feature_spread)
        )
        .unwrap();
    }
    out
}
