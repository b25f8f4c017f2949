//! Exact simulation of the continuous-time chain with generator `A - I`, its
//! killed version, and Monte Carlo estimators of the diffusion semigroup.
//!
//! Every trajectory `i` of an estimator draws from its own ChaCha stream
//! `(seed, i)`. Trajectories are simulated in parallel and reduced in index
//! order, so results do not depend on the thread count.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{check_killing, StochasticMatrix};
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::io::fmt_real;

/// Independent stream `index` of the run seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Piecewise-constant path `X_t = states[k]` on `[jump_times[k], jump_times[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
    pub killed_at: Option<f64>,
    pub horizon: f64,
}

impl Trajectory {
    /// State at time `t`, or `None` once the path has been killed.
    pub fn state_at(&self, t: f64) -> Option<usize> {
        if self.killed_at.is_some_and(|tau| t >= tau) {
            return None;
        }
        let k = self.jump_times.partition_point(|&j| j <= t);
        Some(self.states[k.max(1) - 1])
    }

    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent in each visited state up to `t` (or the killing time).
    pub fn holding_times(&self, t: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let end = self.killed_at.map_or(t, |tau| tau.min(t));
        self.states.iter().enumerate().filter_map(move |(k, &s)| {
            let start = self.jump_times[k];
            let stop = self.jump_times.get(k + 1).copied().unwrap_or(f64::INFINITY).min(end);
            (stop > start).then_some((s, stop - start))
        })
    }

    /// CSV with columns `jump_index,time,state,killed_flag`. A killed path ends
    /// with a row at the killing time carrying the last live state and flag 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("jump_index,time,state,killed_flag\n");
        for (k, (t, s)) in self.jump_times.iter().zip(&self.states).enumerate() {
            writeln!(out, "{k},{},{s},0", fmt_real(*t)).unwrap();
        }
        if let Some(tau) = self.killed_at {
            writeln!(
                out,
                "{},{},{},1",
                self.states.len(),
                fmt_real(tau),
                self.states.last().unwrap()
            )
            .unwrap();
        }
        out
    }
}

fn check_start(a: &StochasticMatrix, start: usize) -> Result<()> {
    if start >= a.n() {
        return Err(Error::InvalidArgument(format!(
            "start node {start} out of range for {} nodes",
            a.n()
        )));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    Ok(())
}

/// Draws `w != v` with probability `a(v, w) / (1 - a(v, v))`.
fn jump_target<R: Rng + ?Sized>(a: &DMatrix<f64>, v: usize, leave: f64, rng: &mut R) -> usize {
    let n = a.nrows();
    let mut r = rng.random::<f64>() * leave;
    let mut last = v;
    for w in 0..n {
        if w == v {
            continue;
        }
        let p = a[(v, w)];
        if p > 0.0 {
            last = w;
            if r < p {
                return w;
            }
            r -= p;
        }
    }
    last
}

/// Leaving rate `1 - a(v, v)` computed from the off-diagonal mass.
fn leave_rate(a: &DMatrix<f64>, v: usize) -> f64 {
    (0..a.nrows()).filter(|&w| w != v).map(|w| a[(v, w)]).sum()
}

fn simulate<R: Rng + ?Sized>(
    a: &StochasticMatrix,
    kill: Option<&[f64]>,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Trajectory {
    let m = a.as_matrix();
    let mut t = 0.0;
    let mut v = start;
    let mut jump_times = vec![0.0];
    let mut states = vec![start];
    let mut killed_at = None;
    loop {
        let jump = leave_rate(m, v);
        let death = kill.map_or(0.0, |c| -c[v]);
        let total = jump + death;
        if total <= 0.0 {
            break;
        }
        let zeta: f64 = Exp1.sample(rng);
        t += zeta / total;
        if t > horizon {
            break;
        }
        if death > 0.0 && rng.random::<f64>() * total < death {
            killed_at = Some(t);
            break;
        }
        v = jump_target(m, v, jump, rng);
        jump_times.push(t);
        states.push(v);
    }
    Trajectory {
        jump_times,
        states,
        killed_at,
        horizon,
    }
}

/// Samples the chain with generator `A - I` from `start` up to `horizon`.
///
/// Holding times at `v` are `Exp(1) / (1 - a(v, v))`; jumps go to `w != v`
/// with probability `a(v, w) / (1 - a(v, v))`. Absorbing states
/// (`a(v, v) = 1`) hold forever.
pub fn sample_ctmc<R: Rng + ?Sized>(
    a: &StochasticMatrix,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_start(a, start)?;
    check_horizon(horizon)?;
    Ok(simulate(a, None, start, horizon, rng))
}

/// Uniformized sampler for the same law: unit-rate clock, next state drawn
/// from `a(v, .)` including self-transitions. Only state changes are recorded.
pub fn sample_ctmc_uniformized<R: Rng + ?Sized>(
    a: &StochasticMatrix,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_start(a, start)?;
    check_horizon(horizon)?;
    let m = a.as_matrix();
    let n = a.n();
    let mut t = 0.0;
    let mut v = start;
    let mut jump_times = vec![0.0];
    let mut states = vec![start];
    loop {
        let zeta: f64 = Exp1.sample(rng);
        t += zeta;
        if t > horizon {
            break;
        }
        let mut r = rng.random::<f64>();
        let mut next = v;
        for w in 0..n {
            let p = m[(v, w)];
            if p > 0.0 {
                next = w;
                if r < p {
                    break;
                }
                r -= p;
            }
        }
        if next != v {
            v = next;
            jump_times.push(t);
            states.push(v);
        }
    }
    Ok(Trajectory {
        jump_times,
        states,
        killed_at: None,
        horizon,
    })
}

/// Samples the chain killed at rate `-c(v)` in state `v` (`c <= 0`); the
/// killing clock competes with the jump clock of rate `1 - a(v, v)`.
pub fn sample_killed_ctmc<R: Rng + ?Sized>(
    a: &StochasticMatrix,
    c: &[f64],
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_killing(c, a.n())?;
    check_start(a, start)?;
    check_horizon(horizon)?;
    Ok(simulate(a, Some(c), start, horizon, rng))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Largest `|mean - reference| / std_error` over components; 0/0 counts as 0.
    pub fn sigma_distance(&self, reference: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.std_error)
            .zip(reference)
            .map(|((m, s), r)| {
                let d = (m - r).abs();
                if d == 0.0 {
                    0.0
                } else if *s == 0.0 {
                    f64::INFINITY
                } else {
                    d / s
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error of `samples` (rows of length `d`), shifted by the
/// first sample so constant payoffs are reproduced exactly.
fn summarize(samples: &[Vec<f64>], d: usize, seed: u64) -> McEstimate {
    let n = samples.len();
    let shift = samples[0].clone();
    let mut mean = Vec::with_capacity(d);
    let mut std_error = Vec::with_capacity(d);
    for j in 0..d {
        let mut s1 = CompensatedSum::default();
        let mut s2 = CompensatedSum::default();
        for x in samples {
            let y = x[j] - shift[j];
            s1.add(y);
            s2.add(y * y);
        }
        let m = s1.value() / n as f64;
        let var = if n > 1 {
            ((s2.value() - n as f64 * m * m) / (n as f64 - 1.0)).max(0.0)
        } else {
            0.0
        };
        mean.push(shift[j] + m);
        std_error.push((var / n as f64).sqrt());
    }
    McEstimate {
        mean,
        std_error,
        n_samples: n,
        seed,
    }
}

fn run_samples<F>(n_samples: usize, seed: u64, d: usize, payoff: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let samples: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| payoff(&mut stream_rng(seed, i)))
        .collect();
    Ok(summarize(&samples, d, seed))
}

fn check_features(a: &StochasticMatrix, f: &FeatureField) -> Result<()> {
    if f.n() != a.n() {
        return Err(Error::DimensionMismatch {
            what: "feature rows",
            expected: a.n(),
            found: f.n(),
        });
    }
    Ok(())
}

/// `E^u[f(X_t)]`, an unbiased estimate of `(e^{t(A - I)} f)(u)`.
pub fn feynman_kac_estimate(
    a: &StochasticMatrix,
    f: &FeatureField,
    start: usize,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_features(a, f)?;
    check_start(a, start)?;
    check_horizon(t)?;
    let rows = f.rows();
    run_samples(n_samples, seed, f.dim(), |rng| {
        let path = simulate(a, None, start, t, rng);
        rows[path.state_at(t).expect("never killed")].clone()
    })
}

/// How the killed estimator treats the killing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KillingMode {
    /// Simulate the killing clock; dead paths contribute 0.
    HardKill,
    /// Simulate the unkilled chain and weight by `exp(int_0^t c(X_s) ds)`.
    ExpWeight,
}

/// Unbiased estimate of `(e^{t(A - I + diag(c))} f)(u)`.
#[allow(clippy::too_many_arguments)]
pub fn killed_feature_estimate(
    a: &StochasticMatrix,
    c: &[f64],
    f: &FeatureField,
    start: usize,
    t: f64,
    n_samples: usize,
    seed: u64,
    mode: KillingMode,
) -> Result<McEstimate> {
    check_killing(c, a.n())?;
    check_features(a, f)?;
    check_start(a, start)?;
    check_horizon(t)?;
    let rows = f.rows();
    let d = f.dim();
    run_samples(n_samples, seed, d, |rng| match mode {
        KillingMode::HardKill => {
            let path = simulate(a, Some(c), start, t, rng);
            match path.state_at(t) {
                Some(s) => rows[s].clone(),
                None => vec![0.0; d],
            }
        }
        KillingMode::ExpWeight => {
            let path = simulate(a, None, start, t, rng);
            let integral: f64 = path.holding_times(t).map(|(s, dt)| c[s] * dt).sum();
            let w = integral.exp();
            rows[path.state_at(t).expect("never killed")]
                .iter()
                .map(|x| x * w)
                .collect()
        }
    })
}

/// Empirical `p(t, u, .)` for every start `u`.
pub fn estimate_transition_function(
    a: &StochasticMatrix,
    t: f64,
    n_samples_per_start: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    check_horizon(t)?;
    if n_samples_per_start == 0 {
        return Err(Error::EmptySample);
    }
    let n = a.n();
    let per = n_samples_per_start as u64;
    let ends: Vec<usize> = (0..n as u64 * per)
        .into_par_iter()
        .map(|i| {
            let start = (i / per) as usize;
            let mut rng = stream_rng(seed, i);
            simulate(a, None, start, t, &mut rng).state_at(t).expect("never killed")
        })
        .collect();
    let mut p = DMatrix::zeros(n, n);
    for (i, end) in ends.into_iter().enumerate() {
        p[(i / n_samples_per_start, end)] += 1.0;
    }
    Ok(p / n_samples_per_start as f64)
}
