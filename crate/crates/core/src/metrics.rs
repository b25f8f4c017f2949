//! Oversmoothing diagnostics: Dirichlet energy, feature spread and log-energy
//! traces, plus the exact decay law under constant killing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attention::StochasticMatrix;
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::io::fmt_real;
use crate::semigroup::SemigroupSolution;

/// Prefactor used in front of the double sum of the Dirichlet energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyNormalization {
    /// `1 / n` with `n` the node count.
    #[default]
    Nodes,
    /// `1 / |E|` with `|E|` the number of positive entries of `A`.
    Edges,
}

/// `E(H, A) = (1/N) sum_u sum_v a(u,v) |h_u / sqrt(d_u) - h_v / sqrt(d_v)|^2`
/// with `N` the node count.
pub fn dirichlet_energy(h: &FeatureField, a: &StochasticMatrix, degrees: &[f64]) -> Result<f64> {
    dirichlet_energy_with(h, a, degrees, EnergyNormalization::Nodes)
}

pub fn dirichlet_energy_with(
    h: &FeatureField,
    a: &StochasticMatrix,
    degrees: &[f64],
    norm: EnergyNormalization,
) -> Result<f64> {
    let n = a.n();
    if h.n() != n {
        return Err(Error::DimensionMismatch {
            what: "feature rows",
            expected: n,
            found: h.n(),
        });
    }
    if degrees.len() != n {
        return Err(Error::DimensionMismatch {
            what: "degrees",
            expected: n,
            found: degrees.len(),
        });
    }
    if let Some(u) = degrees.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "degree of node {u} must be positive, got {}",
            degrees[u]
        )));
    }
    let x = h.as_matrix();
    let m = a.as_matrix();
    let scale: Vec<f64> = degrees.iter().map(|d| d.sqrt().recip()).collect();
    let mut total = 0.0;
    let mut edges = 0usize;
    for u in 0..n {
        for v in 0..n {
            let w = m[(u, v)];
            if w <= 0.0 {
                continue;
            }
            edges += 1;
            let mut dist = 0.0;
            for j in 0..x.ncols() {
                let diff = x[(u, j)] * scale[u] - x[(v, j)] * scale[v];
                dist += diff * diff;
            }
            total += w * dist;
        }
    }
    let denom = match norm {
        EnergyNormalization::Nodes => n,
        EnergyNormalization::Edges => edges.max(1),
    };
    Ok(total / denom as f64)
}

/// Energy, log-energy and spread per recorded time. `log_energy` is `None`
/// where the energy is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub log_energy: Vec<Option<f64>>,
    pub spread: Vec<f64>,
}

impl EnergyTrace {
    pub fn from_parts(times: Vec<f64>, energy: Vec<f64>, spread: Vec<f64>) -> Self {
        let log_energy = energy.iter().map(|&e| log_or_none(e)).collect();
        Self {
            times,
            energy,
            log_energy,
            spread,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t,energy,log_energy,spread`; zero energies log as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,energy,log_energy,spread\n");
        for i in 0..self.len() {
            let log = self.log_energy[i].map_or_else(|| "NA".to_string(), fmt_real);
            writeln!(
                out,
                "{},{},{log},{}",
                fmt_real(self.times[i]),
                fmt_real(self.energy[i]),
                fmt_real(self.spread[i])
            )
            .unwrap();
        }
        out
    }

    /// Largest `|log_energy - other.log_energy - shift(t)|` over times where
    /// both logs exist; `None` if a log exists in one trace but not the other.
    pub fn max_log_deviation(&self, other: &EnergyTrace, shift: impl Fn(f64) -> f64) -> Option<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.len().min(other.len()) {
            match (self.log_energy[i], other.log_energy[i]) {
                (Some(a), Some(b)) => worst = worst.max((a - b - shift(self.times[i])).abs()),
                (None, None) => {}
                _ => return None,
            }
        }
        Some(worst)
    }
}

fn log_or_none(e: f64) -> Option<f64> {
    (e > 0.0).then(|| e.ln())
}

/// Energy and spread of every state of `solution`.
pub fn energy_trace(solution: &SemigroupSolution, a: &StochasticMatrix, degrees: &[f64]) -> Result<EnergyTrace> {
    energy_trace_with(solution, a, degrees, EnergyNormalization::Nodes)
}

pub fn energy_trace_with(
    solution: &SemigroupSolution,
    a: &StochasticMatrix,
    degrees: &[f64],
    norm: EnergyNormalization,
) -> Result<EnergyTrace> {
    energy_trace_of(&solution.times, &solution.states, a, degrees, norm)
}

/// Energy trace of arbitrary feature snapshots, e.g. the layers of a rollout.
pub fn energy_trace_of(
    times: &[f64],
    states: &[FeatureField],
    a: &StochasticMatrix,
    degrees: &[f64],
    norm: EnergyNormalization,
) -> Result<EnergyTrace> {
    if times.len() != states.len() {
        return Err(Error::DimensionMismatch {
            what: "trace states",
            expected: times.len(),
            found: states.len(),
        });
    }
    let energy = states
        .iter()
        .map(|h| dirichlet_energy_with(h, a, degrees, norm))
        .collect::<Result<Vec<_>>>()?;
    // Finite features can still overflow the quadratic form.
    if let Some(step) = energy.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFinite { step });
    }
    let spread = states.iter().map(FeatureField::spread).collect();
    Ok(EnergyTrace::from_parts(times.to_vec(), energy, spread))
}

/// Trace predicted for the dynamics killed at constant rate `kappa`: features
/// scale by `e^{-kappa t}`, so energy scales by `e^{-2 kappa t}`.
pub fn constant_killing_energy_law(base: &EnergyTrace, kappa: f64) -> Result<EnergyTrace> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "killing magnitude {kappa} must be finite and >= 0"
        )));
    }
    let energy = base
        .times
        .iter()
        .zip(&base.energy)
        .map(|(t, e)| e * (-2.0 * kappa * t).exp())
        .collect();
    let log_energy = base
        .times
        .iter()
        .zip(&base.log_energy)
        .map(|(t, l)| l.map(|l| l - 2.0 * kappa * t))
        .collect();
    let spread = base
        .times
        .iter()
        .zip(&base.spread)
        .map(|(t, s)| s * (-kappa * t).exp())
        .collect();
    Ok(EnergyTrace {
        times: base.times.clone(),
        energy,
        log_energy,
        spread,
    })
}
