//! Evaluation of `P_t f = e^{tQ} f` by matrix exponential and by ODE integration.

mod expm;
mod ode;
pub mod spectral;

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use self::expm::expm;
pub use self::ode::{dopri5, rk4, AdaptiveOptions};
use crate::attention::{Generator, Provenance};
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::io::fmt_real;

/// Largest `h |Q|_inf` used by the fixed-step RK4 route.
pub const RK4_STEP_NORM: f64 = 0.1;

/// `e^{tQ}`.
pub fn matrix_exponential(q: &Generator, t: f64) -> Result<DMatrix<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(q.n(), q.n()));
    }
    expm(&(q.matrix() * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Expm,
    Rk4,
    Adaptive,
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expm" => Ok(SolveMethod::Expm),
            "rk4" => Ok(SolveMethod::Rk4),
            "adaptive" => Ok(SolveMethod::Adaptive),
            other => Err(Error::InvalidArgument(format!("unknown solver method `{other}`"))),
        }
    }
}

/// Features `H(t)` recorded on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupSolution {
    pub times: Vec<f64>,
    pub states: Vec<FeatureField>,
    pub method: SolveMethod,
    pub provenance: Provenance,
}

impl SemigroupSolution {
    pub fn last(&self) -> &FeatureField {
        self.states.last().expect("solutions are nonempty")
    }

    /// Long-form CSV with columns `t,node,dim,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,node,dim,value\n");
        for (t, h) in self.times.iter().zip(&self.states) {
            let m = h.as_matrix();
            for u in 0..m.nrows() {
                for j in 0..m.ncols() {
                    writeln!(out, "{},{u},{j},{}", fmt_real(*t), fmt_real(m[(u, j)])).unwrap();
                }
            }
        }
        out
    }
}

/// Solves `dH/dt = Q H`, `H(0) = f` at each requested time.
pub fn solve_cauchy(q: &Generator, f: &FeatureField, times: &[f64], method: SolveMethod) -> Result<SemigroupSolution> {
    solve_cauchy_with(q, f, times, method, AdaptiveOptions::default())
}

pub fn solve_cauchy_with(
    q: &Generator,
    f: &FeatureField,
    times: &[f64],
    method: SolveMethod,
    opts: AdaptiveOptions,
) -> Result<SemigroupSolution> {
    if f.n() != q.n() {
        return Err(Error::DimensionMismatch {
            what: "initial condition rows",
            expected: q.n(),
            found: f.n(),
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("no evaluation times".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "times must be finite, nonnegative and sorted".into(),
        ));
    }
    let h0 = f.as_matrix();
    let raw = match method {
        SolveMethod::Expm => propagate_expm(q, h0, times)?,
        SolveMethod::Rk4 => rk4(q.matrix(), h0, times, RK4_STEP_NORM)?,
        SolveMethod::Adaptive => dopri5(q.matrix(), h0, times, opts)?,
    };
    let mut states = Vec::with_capacity(raw.len());
    for (step, m) in raw.into_iter().enumerate() {
        states.push(FeatureField::new(m).map_err(|_| Error::NonFinite { step })?);
    }
    // H(0) = f exactly.
    for (t, s) in times.iter().zip(states.iter_mut()) {
        if *t == 0.0 {
            *s = f.clone();
        }
    }
    Ok(SemigroupSolution {
        times: times.to_vec(),
        states,
        method,
        provenance: q.provenance(),
    })
}

/// Steps `H(t_k) = e^{(t_k - t_{k-1}) Q} H(t_{k-1})`. Errors stay relative to
/// the current state, so decaying components are resolved far below the
/// rounding floor of a single `e^{t_k Q} f` evaluation. Repeated increments
/// reuse their exponential.
fn propagate_expm(q: &Generator, h0: &DMatrix<f64>, times: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut cache: Option<(f64, DMatrix<f64>)> = None;
    let mut h = h0.clone();
    let mut prev = 0.0;
    for &t in times {
        let dt = t - prev;
        if dt > 0.0 {
            if cache.as_ref().is_none_or(|(c, _)| *c != dt) {
                cache = Some((dt, matrix_exponential(q, dt)?));
            }
            h = &cache.as_ref().expect("just filled").1 * h;
        }
        out.push(h.clone());
        prev = t;
    }
    Ok(out)
}

/// `n` evenly spaced times on `[0, t_max]`, both ends included.
pub fn linspace(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_max],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}
