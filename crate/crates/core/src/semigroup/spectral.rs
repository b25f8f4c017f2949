//! Invariant measures, spectra and ergodicity diagnostics of generators.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::SemigroupSolution;
use crate::attention::{Generator, StochasticMatrix};
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::graph::{is_bipartite, strong_components};

/// Horizon after which the deviation from the fixed point has decayed by `e^{-40}`.
pub fn fixed_point_horizon(spectral_gap: f64) -> f64 {
    40.0 / spectral_gap
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTolerances {
    /// Eigenvalues with `|lambda|` below this count toward the kernel.
    pub kernel: f64,
    /// Largest coefficient of variation of a kernel vector still called constant.
    pub constancy: f64,
    /// Detailed-balance residual `|mu(u) a(u,v) - mu(v) a(v,u)|`.
    pub detailed_balance: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self {
            kernel: 1e-9,
            constancy: 1e-6,
            detailed_balance: 1e-10,
        }
    }
}

/// Power-iteration settings for [`invariant_measure_power`].
#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerResult {
    pub mu: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn support_components(a: &StochasticMatrix) -> usize {
    let support = a.support();
    strong_components(a.n(), |u| support[u].clone().into_iter())
}

/// Lazy power iteration `mu <- (mu + A^T mu) / 2`; the lazy chain shares the
/// stationary law of `A` and is aperiodic even when `A` is not.
pub fn invariant_measure_power(a: &StochasticMatrix, opts: PowerOptions) -> PowerResult {
    let n = a.n();
    let at = a.as_matrix().transpose();
    let mut mu = DVector::from_element(n, 1.0 / n as f64);
    for it in 1..=opts.max_iter {
        let mut next = (&at * &mu + &mu) * 0.5;
        let s = next.sum();
        next /= s;
        let delta = (&next - &mu).abs().sum();
        mu = next;
        if delta < opts.tol {
            return PowerResult {
                mu: mu.iter().copied().collect(),
                iterations: it,
                converged: true,
            };
        }
    }
    PowerResult {
        mu: mu.iter().copied().collect(),
        iterations: opts.max_iter,
        converged: false,
    }
}

/// Solves `(A^T - I) mu = 0`, `sum mu = 1` directly by LU.
pub fn invariant_measure_dense(a: &StochasticMatrix) -> Result<Vec<f64>> {
    let n = a.n();
    let mut m = a.as_matrix().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let mu = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Eigen("singular system for the invariant measure".into()))?;
    Ok(mu.iter().map(|x| x.max(0.0)).collect())
}

/// Stationary law `mu` of `A` (`A^T mu = mu`, `mu >= 0`, `sum mu = 1`).
///
/// Runs power iteration and cross-checks it against the dense solve. Fails
/// when the support of `A` is not strongly connected.
pub fn invariant_measure(a: &StochasticMatrix) -> Result<Vec<f64>> {
    let components = support_components(a);
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let dense = invariant_measure_dense(a)?;
    let power = invariant_measure_power(a, PowerOptions::default());
    if !power.converged {
        log::warn!(
            "power iteration did not converge in {} steps; using the dense solution",
            power.iterations
        );
        return Ok(dense);
    }
    let gap = power
        .mu
        .iter()
        .zip(&dense)
        .map(|(p, d)| (p - d).abs())
        .fold(0.0, f64::max);
    if gap > 1e-8 {
        log::warn!("power iteration and dense invariant measures differ by {gap:e}");
    }
    Ok(power.mu)
}

/// `max_u |(A^T mu)(u) - mu(u)|`.
pub fn stationarity_residual(a: &StochasticMatrix, mu: &[f64]) -> f64 {
    let mu = DVector::from_column_slice(mu);
    (a.as_matrix().transpose() * &mu - mu).amax()
}

/// Spectral diagnosis of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Sorted by real part, descending.
    pub eigenvalues: Vec<Complex64>,
    pub lambda0: Complex64,
    /// `|Re lambda_1|`; absent for a single node.
    pub spectral_gap: Option<f64>,
    pub kernel_dim: usize,
    pub invariant_measure: Option<Vec<f64>>,
    pub is_ergodic: bool,
    pub symmetrizable: bool,
    /// Support of the attention is bipartite: the discrete chain is periodic.
    pub bipartite_warning: bool,
    /// Largest difference between the general and the symmetrized spectrum, when computed.
    pub symmetric_discrepancy: Option<f64>,
}

impl Serialize for SpectralReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
        let mut st = s.serialize_struct("SpectralReport", 9)?;
        st.serialize_field("eigenvalues", &pairs)?;
        st.serialize_field("lambda0", &[self.lambda0.re, self.lambda0.im])?;
        st.serialize_field("spectral_gap", &self.spectral_gap)?;
        st.serialize_field("kernel_dim", &self.kernel_dim)?;
        st.serialize_field("invariant_measure", &self.invariant_measure)?;
        st.serialize_field("is_ergodic", &self.is_ergodic)?;
        st.serialize_field("symmetrizable", &self.symmetrizable)?;
        st.serialize_field("bipartite_warning", &self.bipartite_warning)?;
        st.serialize_field("symmetric_discrepancy", &self.symmetric_discrepancy)?;
        st.end()
    }
}

/// Eigenvalues by real Schur decomposition, sorted by real part descending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(ev)
}

fn coefficient_of_variation(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if mean == 0.0 {
        f64::INFINITY
    } else {
        var.sqrt() / mean.abs()
    }
}

/// Right singular vectors belonging to the `k` smallest singular values.
fn kernel_basis(m: &DMatrix<f64>, k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    order
        .into_iter()
        .take(k)
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect()
}

pub fn spectral_report(q: &Generator) -> Result<SpectralReport> {
    spectral_report_with(q, &SpectralTolerances::default())
}

pub fn spectral_report_with(q: &Generator, tol: &SpectralTolerances) -> Result<SpectralReport> {
    let n = q.n();
    let eigenvalues = eigenvalues(q.matrix())?;
    let lambda0 = eigenvalues[0];
    let spectral_gap = eigenvalues.get(1).map(|l| l.re.abs());
    let kernel_dim = eigenvalues.iter().filter(|l| l.norm() < tol.kernel).count();
    let is_ergodic = kernel_dim == 1
        && kernel_basis(q.matrix(), 1)
            .first()
            .is_some_and(|v| coefficient_of_variation(v) < tol.constancy);

    let a = q.attention();
    let support: Vec<Vec<usize>> = {
        let mut und = vec![Vec::new(); n];
        for (u, row) in a.support().into_iter().enumerate() {
            for v in row {
                und[u].push(v);
                und[v].push(u);
            }
        }
        und
    };
    let bipartite_warning = n > 1 && is_bipartite(&support);

    let invariant = if q.provenance().is_markov() && support_components(&a) == 1 {
        Some(invariant_measure(&a)?)
    } else {
        None
    };

    let mut symmetrizable = false;
    let mut symmetric_discrepancy = None;
    if let Some(mu) = &invariant {
        let am = a.as_matrix();
        let residual = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .map(|(u, v)| (mu[u] * am[(u, v)] - mu[v] * am[(v, u)]).abs())
            .fold(0.0, f64::max);
        symmetrizable = residual <= tol.detailed_balance;
        if symmetrizable && mu.iter().all(|&m| m > 0.0) {
            let s = DMatrix::from_fn(n, n, |u, v| mu[u].sqrt() * q.matrix()[(u, v)] / mu[v].sqrt());
            let s = (&s + s.transpose()) * 0.5;
            let mut sym: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
            sym.sort_by(|a, b| b.total_cmp(a));
            let d = sym
                .iter()
                .zip(&eigenvalues)
                .map(|(s, g)| (s - g.re).abs())
                .fold(0.0, f64::max);
            if d > 1e-8 {
                log::warn!("symmetrized and general spectra differ by {d:e}");
            }
            symmetric_discrepancy = Some(d);
        }
    }

    Ok(SpectralReport {
        eigenvalues,
        lambda0,
        spectral_gap,
        kernel_dim,
        invariant_measure: invariant,
        is_ergodic,
        symmetrizable,
        bipartite_warning,
        symmetric_discrepancy,
    })
}

/// Consensus value `b = sum_v mu(v) f(v)` that ergodic diffusion converges to.
pub fn oversmoothing_fixed_point(f: &FeatureField, mu: &[f64]) -> Result<Vec<f64>> {
    f.weighted_mean(mu)
}

/// Deviations below this are treated as converged.
pub const RATE_FIT_FLOOR: f64 = 1e-12;

/// Least-squares decay rate of `|H(t) - 1 b^T|_2`.
///
/// Uses the leading run of times whose deviation stays above
/// [`RATE_FIT_FLOOR`] and returns the negated slope of the log-deviation.
pub fn convergence_rate_fit(solution: &SemigroupSolution, fixed_point: &[f64]) -> Result<f64> {
    let points: Vec<(f64, f64)> = solution
        .times
        .iter()
        .zip(&solution.states)
        .map(|(t, h)| (*t, h.deviation_l2(fixed_point)))
        .skip_while(|(_, d)| *d <= RATE_FIT_FLOOR)
        .take_while(|(_, d)| *d > RATE_FIT_FLOOR)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if points.is_empty() {
        return Err(Error::AlreadyConverged { floor: RATE_FIT_FLOOR });
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two times above the floor".into(),
        ));
    }
    let m = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - tm).powi(2)).sum();
    Ok(-sxy / sxx)
}
