//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance, budget, seed and instance
//! choice is pinned below.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    centered, dense_instance, identity_features, instance, random_connected_graph, random_instance, with_hub,
};
use nalgebra::DMatrix;
use oversmooth_core::attention::{breaking_term, killed_generator, modified_generator, BreakingKind, BreakingSpec};
use oversmooth_core::metrics::{constant_killing_energy_law, energy_trace};
use oversmooth_core::nonlinear::{nonlinear_rollout, selfloop_floor_check, tv_distance, weak_ergodicity_trace};
use oversmooth_core::semigroup::spectral::{
    convergence_rate_fit, fixed_point_horizon, invariant_measure, invariant_measure_dense, oversmoothing_fixed_point,
    spectral_report,
};
use oversmooth_core::semigroup::{linspace, matrix_exponential, solve_cauchy, SolveMethod};
use oversmooth_core::stochastic::{
    estimate_transition_function, feynman_kac_estimate, killed_feature_estimate, KillingMode,
};
use oversmooth_core::{generate_homophily_graph, sbm_probabilities, AttentionKernel, FeatureField, Generator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Semigroup oracle equivalence and Markov law.
const ORACLE_TIMES: [f64; 3] = [0.1, 1.0, 10.0];
const ORACLE_INSTANCES: u64 = 50;
const ORACLE_TOL: f64 = 1e-7;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const ROW_SUM_TOL: f64 = 1e-10;
const MIN_ENTRY_TOL: f64 = -1e-12;
const COMPOSITION_TOL: f64 = 1e-9;
const COMPOSITION_PAIRS: [(f64, f64); 4] = [(0.1, 1.0), (1.0, 1.0), (1.0, 10.0), (0.1, 10.0)];

// Fixed point.
const FIXED_POINT_INSTANCES: u64 = 20;
const FIXED_POINT_TOL: f64 = 1e-6;
const FIXED_POINT_BUDGET: Duration = Duration::from_secs(20);

// Rate fit: window [RATE_WINDOW.0 / gap, RATE_WINDOW.1 / gap].
const RATE_INSTANCES: u64 = 20;
const RATE_REL_TOL: f64 = 0.05;
const RATE_TWO_NODE_REL_TOL: f64 = 0.01;
const RATE_WINDOW: (f64, f64) = (10.0, 30.0);
const RATE_POINTS: usize = 33;

// Ergodicity breaking.
const BREAKING_INSTANCES: u64 = 20;
const BROKEN_SPREAD_MIN: f64 = 1e-3;
const LINEAR_SPREAD_MAX: f64 = 1e-6;
const DIAGONAL_BREAKING_RANGE: (f64, f64) = (0.5, 1.5);
// The log series lifts non-constant modes least; scale 2 keeps their growth
// rate positive on dense instances.
const LOG_BREAKING_SCALE: f64 = 2.0;

// Nonlinear weak ergodicity.
const NONLINEAR_INSTANCES: u64 = 20;
const NONLINEAR_STEPS: usize = 50;
const TV_ROUNDING_SLACK: f64 = 1e-12;
const NONLINEAR_BUDGET: Duration = Duration::from_secs(60);

// Monte Carlo.
const MC_CONFIGS: u64 = 20;
const MC_SAMPLES: usize = 100_000;
const MC_SIGMAS: f64 = 4.0;
const MC_TIMES: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
const MC_BUDGET: Duration = Duration::from_secs(120);

// Limiting distribution.
const LIMIT_NODES: usize = 8;
const LIMIT_SAMPLES: usize = 100_000;
const LIMIT_TV: f64 = 0.01;

// Constant killing.
const KILLING_RATES: [f64; 5] = [1e-3, 1e-2, 1e-1, 5e-1, 1.0];
const KILLING_NODES: usize = 50;
const KILLING_LAYERS: usize = 10;
const KILLING_TOL: f64 = 1e-8;

// Homophily sweep.
const HOMOPHILY_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const SWEEP_NODES: usize = 100;
const SWEEP_CLASSES: usize = 2;
const SWEEP_MEAN_DEGREE: f64 = 8.0;
const SWEEP_DEPTHS: usize = 21;
const LINEAR_ENERGY_FACTOR: f64 = 1e-10;
const BROKEN_ENERGY_FACTOR: f64 = 1e-6;
const SWEEP_BREAKING_RANGE: (f64, f64) = (0.05, 0.15);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    fn within(self, elapsed: Duration, budget: Duration) -> Self {
        Self {
            pass: self.pass && elapsed < budget,
            detail: format!(
                "{}; {:.1} s (budget {} s)",
                self.detail,
                elapsed.as_secs_f64(),
                budget.as_secs()
            ),
        }
    }
}

fn oracle_instances() -> Vec<common::Instance> {
    (0..ORACLE_INSTANCES)
        .map(|seed| random_instance(seed, 2, 50, seed % 2 == 0))
        .collect()
}

fn semigroup_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for inst in oracle_instances() {
        let eye = identity_features(inst.graph.n());
        let by_expm = solve_cauchy(&inst.q, &eye, &ORACLE_TIMES, SolveMethod::Expm).unwrap();
        let by_ode = solve_cauchy(&inst.q, &eye, &ORACLE_TIMES, SolveMethod::Adaptive).unwrap();
        for (x, y) in by_expm.states.iter().zip(&by_ode.states) {
            worst = worst.max((x.as_matrix() - y.as_matrix()).amax());
        }
    }
    Outcome::new(
        worst < ORACLE_TOL,
        format!("max |expm - ode|_inf = {worst:.2e} (limit {ORACLE_TOL:e}) over {ORACLE_INSTANCES} instances"),
    )
    .within(start.elapsed(), ORACLE_BUDGET)
}

fn markov_semigroup_law() -> Outcome {
    let mut row_err = 0.0f64;
    let mut min_entry = f64::INFINITY;
    let mut comp_err = 0.0f64;
    for inst in oracle_instances() {
        let n = inst.graph.n();
        for &t in &ORACLE_TIMES {
            let p = matrix_exponential(&inst.q, t).unwrap();
            let ones = p.column_sum();
            row_err = row_err.max(ones.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max));
            min_entry = min_entry.min(p.min());
            assert_eq!(p.nrows(), n);
        }
        for &(s, t) in &COMPOSITION_PAIRS {
            let ps = matrix_exponential(&inst.q, s).unwrap();
            let pt = matrix_exponential(&inst.q, t).unwrap();
            let pst = matrix_exponential(&inst.q, s + t).unwrap();
            comp_err = comp_err.max((ps * pt - pst).amax());
        }
    }
    Outcome::new(
        row_err < ROW_SUM_TOL && min_entry >= MIN_ENTRY_TOL && comp_err < COMPOSITION_TOL,
        format!(
            "|P1 - 1| = {row_err:.2e} (limit {ROW_SUM_TOL:e}), min entry = {min_entry:.2e} (floor {MIN_ENTRY_TOL:e}), \
             |P(s)P(t) - P(s+t)| = {comp_err:.2e} (limit {COMPOSITION_TOL:e})"
        ),
    )
}

fn oversmoothing_fixed_point_limit() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..FIXED_POINT_INSTANCES {
        let inst = random_instance(1000 + seed, 2, 50, true);
        let report = spectral_report(&inst.q).unwrap();
        ok &= report.is_ergodic && !report.bipartite_warning;
        let mu = report.invariant_measure.unwrap();
        let b = oversmoothing_fixed_point(&inst.features, &mu).unwrap();
        let horizon = fixed_point_horizon(report.spectral_gap.unwrap());
        let sol = solve_cauchy(&inst.q, &inst.features, &[horizon], SolveMethod::Expm).unwrap();
        worst = worst.max(sol.last().deviation_inf(&b));
    }
    Outcome::new(
        ok && worst < FIXED_POINT_TOL,
        format!("max |H(40/gap) - 1b^T|_inf = {worst:.2e} (limit {FIXED_POINT_TOL:e}) on {FIXED_POINT_INSTANCES} ergodic aperiodic instances"),
    )
    .within(start.elapsed(), FIXED_POINT_BUDGET)
}

/// Decay rate of `|H(t) - 1 b^T|` fitted on `[RATE_WINDOW] / gap`. Starting
/// from `f - 1 b^T` (same deviation, consensus 0) keeps the late window clear
/// of rounding in `b`; `mu` must therefore be accurate to rounding, which the
/// dense solve is and the 1e-12-stopped power iteration is not.
fn fitted_rate(q: &Generator, f: &FeatureField, gap: f64, mu: &[f64]) -> f64 {
    let f = centered(f, mu);
    let b = vec![0.0; f.dim()];
    let times: Vec<f64> = linspace(1.0, RATE_POINTS)
        .into_iter()
        .map(|s| (RATE_WINDOW.0 + s * (RATE_WINDOW.1 - RATE_WINDOW.0)) / gap)
        .collect();
    let sol = solve_cauchy(q, &f, &times, SolveMethod::Expm).unwrap();
    convergence_rate_fit(&sol, &b).unwrap()
}

fn rate_gap_consistency() -> Outcome {
    let mut worst = 0.0f64;
    let mut reversible = true;
    for seed in 0..RATE_INSTANCES {
        let inst = random_instance(2000 + seed, 2, 50, true);
        let report = spectral_report(&inst.q).unwrap();
        reversible &= report.symmetrizable;
        let gap = report.spectral_gap.unwrap();
        let mu = invariant_measure_dense(&inst.a).unwrap();
        let rate = fitted_rate(&inst.q, &inst.features, gap, &mu);
        worst = worst.max((rate / gap - 1.0).abs());
    }
    let q2 = Generator::from_q_matrix(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])).unwrap();
    let f2 = FeatureField::from_column(&[1.0, 0.0]).unwrap();
    let two = fitted_rate(&q2, &f2, 2.0, &[0.5, 0.5]);
    let two_err = (two / 2.0 - 1.0).abs();
    Outcome::new(
        reversible && worst < RATE_REL_TOL && two_err < RATE_TWO_NODE_REL_TOL,
        format!(
            "max |rate/gap - 1| = {worst:.2e} (limit {RATE_REL_TOL}) on {RATE_INSTANCES} reversible instances; \
             two-node rate = {two:.6} (2 +/- {RATE_TWO_NODE_REL_TOL:e} relative)"
        ),
    )
}

fn breaking_specs(n: usize, seed: u64) -> Vec<BreakingSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = (0..n)
        .map(|_| rng.random_range(DIAGONAL_BREAKING_RANGE.0..DIAGONAL_BREAKING_RANGE.1))
        .collect();
    let mut expn = BreakingSpec::series(BreakingKind::Expn, 2);
    expn.include_identity = true;
    vec![
        BreakingSpec::series(BreakingKind::Exp, 2),
        expn,
        BreakingSpec::series(BreakingKind::Log, 2).with_scale(LOG_BREAKING_SCALE),
        BreakingSpec::diagonal(diag),
    ]
}

fn ergodicity_breaking() -> Outcome {
    let mut ok = true;
    let mut min_broken = [f64::INFINITY; 4];
    let mut max_linear = 0.0f64;
    let mut min_c1 = f64::INFINITY;
    for seed in 0..BREAKING_INSTANCES {
        let inst = dense_instance(3000 + seed, 10, 30);
        let gap = spectral_report(&inst.q).unwrap().spectral_gap.unwrap();
        let horizon = fixed_point_horizon(gap);
        let linear = solve_cauchy(&inst.q, &inst.features, &[horizon], SolveMethod::Expm).unwrap();
        max_linear = max_linear.max(linear.last().spread());
        for (k, spec) in breaking_specs(inst.graph.n(), seed).iter().enumerate() {
            let c = breaking_term(spec, &inst.a).unwrap();
            min_c1 = min_c1.min(c.column_sum().amax());
            let broken = modified_generator(&inst.q, &c).unwrap();
            ok &= !spectral_report(&broken).unwrap().is_ergodic;
            let sol = solve_cauchy(&broken, &inst.features, &[horizon], SolveMethod::Expm).unwrap();
            min_broken[k] = min_broken[k].min(sol.last().spread());
        }
    }
    let spread_ok = min_broken.iter().all(|&s| s > BROKEN_SPREAD_MIN);
    Outcome::new(
        ok && spread_ok && max_linear < LINEAR_SPREAD_MAX,
        format!(
            "all non-ergodic: {ok}; min broken spread [exp, expn, log, diagonal] = [{:.2e}, {:.2e}, {:.2e}, {:.2e}] \
             (floor {BROKEN_SPREAD_MIN:e}); max linear spread = {max_linear:.2e} (limit {LINEAR_SPREAD_MAX:e}); \
             min |C1|_inf = {min_c1:.2e}",
            min_broken[0], min_broken[1], min_broken[2], min_broken[3]
        ),
    )
}

fn nonlinear_weak_ergodicity() -> Outcome {
    let start = Instant::now();
    let mut worst_ratio = 0.0f64;
    let mut floor_ok = true;
    let mut bound_ok = true;
    let mut eps_range = (f64::INFINITY, 0.0f64);
    for seed in 0..NONLINEAR_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let n = rng.random_range(6..=30);
        let base = random_connected_graph(n, 0.1, true, &mut rng);
        let graph = with_hub(&base, rng.random_range(0..n));
        let d = rng.random_range(1..=3);
        let features = FeatureField::random_normal(n, d, 4000 + seed);
        let kernel = [
            AttentionKernel::ScaledDot(2.0),
            AttentionKernel::NegSqDist,
            AttentionKernel::Dot,
        ][seed as usize % 3];
        let rollout = nonlinear_rollout(&graph, &features, kernel.as_fn(), NONLINEAR_STEPS).unwrap();
        let eps = rollout.epsilon();
        eps_range = (eps_range.0.min(eps), eps_range.1.max(eps));
        for (t, tv) in weak_ergodicity_trace(&rollout).into_iter().enumerate() {
            let bound = (1.0 - eps).powi(t as i32);
            bound_ok &= tv <= bound + TV_ROUNDING_SLACK;
            if t > 0 && bound > 0.0 {
                worst_ratio = worst_ratio.max(tv / bound);
            }
        }
        floor_ok &= selfloop_floor_check(&rollout).unwrap();
    }
    Outcome::new(
        bound_ok && floor_ok,
        format!(
            "max TV / (1-eps)^t = {worst_ratio:.3} over 1 <= t <= {NONLINEAR_STEPS} (slack {TV_ROUNDING_SLACK:e}); \
             entry floor holds: {floor_ok}; a posteriori eps in [{:.2e}, {:.2e}]",
            eps_range.0, eps_range.1
        ),
    )
    .within(start.elapsed(), NONLINEAR_BUDGET)
}

fn feynman_kac_monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut worst_plain = 0.0f64;
    let mut worst_hard = 0.0f64;
    let mut worst_weight = 0.0f64;
    for cfg in 0..MC_CONFIGS {
        let inst = random_instance(5000 + cfg, 2, 15, cfg % 2 == 0);
        let n = inst.graph.n();
        let u = cfg as usize % n;
        let t = MC_TIMES[cfg as usize % MC_TIMES.len()];
        let seed = 5000 + cfg;
        let reference = matrix_exponential(&inst.q, t).unwrap() * inst.features.as_matrix();
        let row: Vec<f64> = reference.row(u).iter().copied().collect();
        let est = feynman_kac_estimate(&inst.a, &inst.features, u, t, MC_SAMPLES, seed).unwrap();
        worst_plain = worst_plain.max(est.sigma_distance(&row));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..n).map(|_| -rng.random_range(0.0..1.0)).collect();
        let killed = killed_generator(&inst.q, &c).unwrap();
        let reference = matrix_exponential(&killed, t).unwrap() * inst.features.as_matrix();
        let row: Vec<f64> = reference.row(u).iter().copied().collect();
        let hard = killed_feature_estimate(
            &inst.a,
            &c,
            &inst.features,
            u,
            t,
            MC_SAMPLES,
            seed,
            KillingMode::HardKill,
        )
        .unwrap();
        worst_hard = worst_hard.max(hard.sigma_distance(&row));
        let weight = killed_feature_estimate(
            &inst.a,
            &c,
            &inst.features,
            u,
            t,
            MC_SAMPLES,
            seed,
            KillingMode::ExpWeight,
        )
        .unwrap();
        worst_weight = worst_weight.max(weight.sigma_distance(&row));
    }
    Outcome::new(
        worst_plain <= MC_SIGMAS && worst_hard <= MC_SIGMAS && worst_weight <= MC_SIGMAS,
        format!(
            "max |MC - expm| / std_error: plain {worst_plain:.2}, killed {worst_hard:.2}, killed by weight {worst_weight:.2} \
             (limit {MC_SIGMAS}) over {MC_CONFIGS} configurations x {MC_SAMPLES} samples"
        ),
    )
    .within(start.elapsed(), MC_BUDGET)
}

fn limiting_distribution() -> Outcome {
    let inst = random_instance(6000, LIMIT_NODES, LIMIT_NODES, true);
    let report = spectral_report(&inst.q).unwrap();
    let mu = report.invariant_measure.unwrap();
    let t = fixed_point_horizon(report.spectral_gap.unwrap());
    let p = estimate_transition_function(&inst.a, t, LIMIT_SAMPLES, 6000).unwrap();
    let worst = (0..LIMIT_NODES)
        .map(|u| tv_distance(&p.row(u).iter().copied().collect::<Vec<_>>(), &mu))
        .fold(0.0, f64::max);
    Outcome::new(
        worst <= LIMIT_TV,
        format!("max_u TV(p(40/gap, u, .), mu) = {worst:.2e} (limit {LIMIT_TV}) with {LIMIT_SAMPLES} samples per row"),
    )
}

fn constant_killing_decay() -> Outcome {
    let (p_in, p_out) = sbm_probabilities(KILLING_NODES, 2, 0.7, 6.0).unwrap();
    let (graph, _) = generate_homophily_graph(KILLING_NODES, 2, p_in, p_out, 7000).unwrap();
    let features = FeatureField::random_normal(KILLING_NODES, 2, 7000);
    let inst = instance(graph, features, AttentionKernel::Dot);
    let degrees = inst.graph.degrees();
    let times: Vec<f64> = (0..=KILLING_LAYERS).map(|t| t as f64).collect();
    let base_sol = solve_cauchy(&inst.q, &inst.features, &times, SolveMethod::Expm).unwrap();
    let base = energy_trace(&base_sol, &inst.a, &degrees).unwrap();
    let mut worst = 0.0f64;
    let mut traces = Vec::new();
    for &kappa in &KILLING_RATES {
        let killed = killed_generator(&inst.q, &vec![-kappa; KILLING_NODES]).unwrap();
        let sol = solve_cauchy(&killed, &inst.features, &times, SolveMethod::Expm).unwrap();
        let measured = energy_trace(&sol, &inst.a, &degrees).unwrap();
        let predicted = constant_killing_energy_law(&base, kappa).unwrap();
        worst = worst.max(measured.max_log_deviation(&predicted, |_| 0.0).unwrap_or(f64::INFINITY));
        traces.push(measured);
    }
    let ordered = (1..times.len()).all(|i| {
        traces
            .windows(2)
            .all(|w| match (w[0].log_energy[i], w[1].log_energy[i]) {
                (Some(a), Some(b)) => b < a,
                _ => false,
            })
    });
    let last: Vec<String> = traces
        .iter()
        .map(|tr| format!("{:.2}", tr.log_energy[KILLING_LAYERS].unwrap_or(f64::NEG_INFINITY)))
        .collect();
    Outcome::new(
        worst < KILLING_TOL && ordered,
        format!(
            "max |log E_kappa - (log E_0 - 2 kappa t)| = {worst:.2e} (limit {KILLING_TOL:e}); strictly decreasing in kappa: \
             {ordered}; log-energy at t = {KILLING_LAYERS}: [{}]",
            last.join(", ")
        ),
    )
}

fn class_features(labels: &[usize], classes: usize, seed: u64) -> FeatureField {
    let noise = FeatureField::random_normal(labels.len(), classes, seed);
    let m = DMatrix::from_fn(labels.len(), classes, |u, j| {
        f64::from(u8::from(labels[u] == j)) + 0.5 * noise.as_matrix()[(u, j)]
    });
    FeatureField::new(m).unwrap()
}

fn homophily_sweep() -> Outcome {
    let mut linear_ok = true;
    let mut broken_ok = true;
    let mut worst_linear = 0.0f64;
    let mut worst_broken = f64::INFINITY;
    for (i, &h) in HOMOPHILY_LEVELS.iter().enumerate() {
        let seed = 8000 + i as u64;
        let (p_in, p_out) = sbm_probabilities(SWEEP_NODES, SWEEP_CLASSES, h, SWEEP_MEAN_DEGREE).unwrap();
        let (graph, labels) = generate_homophily_graph(SWEEP_NODES, SWEEP_CLASSES, p_in, p_out, seed).unwrap();
        let raw = class_features(labels.as_slice(), SWEEP_CLASSES, seed);
        let inst = instance(graph, raw, AttentionKernel::Dot);
        let mu = invariant_measure(&inst.a).unwrap();
        let f = centered(&inst.features, &mu);
        let gap = spectral_report(&inst.q).unwrap().spectral_gap.unwrap();
        let times = linspace(fixed_point_horizon(gap), SWEEP_DEPTHS);
        let degrees = inst.graph.degrees();

        let linear = energy_trace(
            &solve_cauchy(&inst.q, &f, &times, SolveMethod::Expm).unwrap(),
            &inst.a,
            &degrees,
        )
        .unwrap();
        let e0 = linear.energy[0];
        let e_final = *linear.energy.last().unwrap();
        linear_ok &= e_final < LINEAR_ENERGY_FACTOR * (e0 + 1.0);
        worst_linear = worst_linear.max(e_final / (e0 + 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..SWEEP_NODES)
            .map(|_| rng.random_range(SWEEP_BREAKING_RANGE.0..SWEEP_BREAKING_RANGE.1))
            .collect();
        let term = breaking_term(&BreakingSpec::diagonal(c), &inst.a).unwrap();
        let broken_q = modified_generator(&inst.q, &term).unwrap();
        let broken = energy_trace(
            &solve_cauchy(&broken_q, &f, &times, SolveMethod::Expm).unwrap(),
            &inst.a,
            &degrees,
        )
        .unwrap();
        let ratio = broken.energy.last().unwrap() / broken.energy[0];
        broken_ok &= ratio > BROKEN_ENERGY_FACTOR;
        worst_broken = worst_broken.min(ratio);
    }
    Outcome::new(
        linear_ok && broken_ok,
        format!(
            "linear: max E(T) / (E(0) + 1) = {worst_linear:.2e} (limit {LINEAR_ENERGY_FACTOR:e}); broken: min E(T) / E(0) = \
             {worst_broken:.2e} (floor {BROKEN_ENERGY_FACTOR:e}) over homophily 0.1..0.9"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("semigroup oracle equivalence", semigroup_oracle_equivalence),
        ("Markov semigroup law", markov_semigroup_law),
        ("oversmoothing fixed point", oversmoothing_fixed_point_limit),
        ("rate-gap consistency", rate_gap_consistency),
        ("ergodicity breaking", ergodicity_breaking),
        ("nonlinear weak ergodicity", nonlinear_weak_ergodicity),
        ("Feynman-Kac Monte Carlo", feynman_kac_monte_carlo),
        ("limiting distribution", limiting_distribution),
        ("constant-killing decay law", constant_killing_decay),
        ("homophily sweep shape", homophily_sweep),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
