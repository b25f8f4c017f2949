//! The subcommands. Each returns the run directory and a one-line summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use nalgebra::DMatrix;
use oversmooth_core::io::{fmt_real, save_graph, save_labels};
use oversmooth_core::metrics::{energy_trace_with, EnergyTrace};
use oversmooth_core::nonlinear::{max_pair_tv, selfloop_floor_check, trace_csv, trace_rows};
use oversmooth_core::semigroup::spectral::convergence_rate_fit;
use oversmooth_core::stochastic::{sample_ctmc, stream_rng};
use oversmooth_core::{
    feynman_kac_estimate, homophily_ratio, killed_feature_estimate, matrix_exponential, nonlinear_rollout,
    oversmoothing_fixed_point, sample_killed_ctmc, solve_cauchy, spectral_report, Error, McEstimate, SemigroupSolution,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{
    self, ConfigError, CtmcConfig, DiffuseConfig, Dynamics, GenGraphConfig, Killing, SpectrumConfig, SweepConfig,
};
use crate::output::RunDir;
use crate::plot::{line_chart, Series};
use crate::setup::{build_graph, build_instance, dynamics_generator, Instance};

/// Stream index offset for trajectory exports, disjoint from estimator streams.
const TRAJECTORY_STREAM_SALT: u64 = 0x7a11_0000_0000;

pub struct Outcome {
    pub dir: PathBuf,
    pub summary: String,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

// ---------------------------------------------------------------- diffuse

/// Cross-check of a constant-killing run against its unkilled twin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KillingCheck {
    pub kappa: f64,
    /// `log E_killed(T) - log E_linear(T)` at the final time.
    pub measured_log_energy_shift: Option<f64>,
    /// `-2 kappa T`.
    pub predicted_log_energy_shift: f64,
    /// Largest `|measured - predicted|` over all recorded times.
    pub max_shift_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearCheck {
    pub steps: usize,
    /// Smallest attention entry on any edge of any layer.
    pub epsilon: f64,
    pub final_max_pair_tv: f64,
    /// Every product entry on an edge is at least `epsilon^k`; absent without self-loops.
    pub selfloop_floor: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffuseSummary {
    pub n_nodes: usize,
    pub dim: usize,
    pub n_times: usize,
    pub t_final: f64,
    pub spectral_gap: Option<f64>,
    pub is_ergodic: bool,
    /// Consensus value `sum_v mu(v) f(v)` for ergodic Markov dynamics.
    pub fixed_point: Option<Vec<f64>>,
    /// Least-squares decay rate of `|H(t) - 1 b^T|`.
    pub fitted_rate: Option<f64>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_spread: f64,
    pub killing: Option<KillingCheck>,
    pub nonlinear: Option<NonlinearCheck>,
}

/// In-memory result of one diffuse run.
pub struct DiffuseRun {
    pub solution: SemigroupSolution,
    pub trace: EnergyTrace,
    pub summary: DiffuseSummary,
    /// Weak-ergodicity trace CSV for nonlinear runs.
    pub rollout_trace: Option<String>,
}

impl DiffuseRun {
    pub fn write(&self, dir: &RunDir) -> anyhow::Result<()> {
        dir.write("solution.csv", self.solution.to_csv())?;
        dir.write("energy.csv", self.trace.to_csv())?;
        if let Some(t) = &self.rollout_trace {
            dir.write("trace.csv", t)?;
        }
        dir.write_json("summary.json", &self.summary)?;
        Ok(())
    }
}

pub fn run_diffuse(cfg: &DiffuseConfig) -> anyhow::Result<DiffuseRun> {
    let inst = build_instance(&cfg.model())?;
    let degrees = inst.graph.degrees();
    let norm = cfg.energy_normalization;
    let (solution, rollout_trace, nonlinear, report_q) = match &cfg.dynamics {
        Dynamics::Nonlinear { steps } => {
            let r = nonlinear_rollout(&inst.graph, &inst.features, cfg.model().kernel.0.as_fn(), *steps)?;
            let selfloop_floor = match selfloop_floor_check(&r) {
                Ok(b) => Some(b),
                Err(Error::MissingSelfLoop(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let check = NonlinearCheck {
                steps: *steps,
                epsilon: r.epsilon(),
                final_max_pair_tv: max_pair_tv(&r.final_product().p),
                selfloop_floor,
            };
            let solution = SemigroupSolution {
                times: (0..=*steps).map(|k| k as f64).collect(),
                states: r.states.clone(),
                method: cfg.method,
                provenance: inst.q.provenance(),
            };
            (solution, Some(trace_csv(&trace_rows(&r))), Some(check), None)
        }
        dynamics => {
            let q = dynamics_generator(&inst, dynamics)?.expect("continuous dynamics");
            let times = cfg.time.times()?;
            let solution = solve_cauchy(&q, &inst.features, &times, cfg.method)?;
            (solution, None, None, Some(q))
        }
    };
    let trace = energy_trace_with(&solution, &inst.a, &degrees, norm)?;

    let (spectral_gap, is_ergodic, fixed_point, fitted_rate) = match &report_q {
        Some(q) => {
            let report = spectral_report(q)?;
            let fixed_point = match (&report.invariant_measure, report.is_ergodic) {
                (Some(mu), true) => Some(oversmoothing_fixed_point(&inst.features, mu)?),
                _ => None,
            };
            let fitted_rate = fixed_point
                .as_ref()
                .and_then(|b| match convergence_rate_fit(&solution, b) {
                    Ok(rate) => Some(rate),
                    Err(e) => {
                        log::info!("no rate fit: {e}");
                        None
                    }
                });
            (report.spectral_gap, report.is_ergodic, fixed_point, fitted_rate)
        }
        None => (None, false, None, None),
    };

    let killing = match cfg.dynamics.killing() {
        Some(Killing {
            kappa: Some(kappa),
            rates: None,
        }) => Some(killing_check(&inst, cfg, &solution, &trace, kappa)?),
        _ => None,
    };

    let summary = DiffuseSummary {
        n_nodes: inst.graph.n(),
        dim: inst.features.dim(),
        n_times: solution.times.len(),
        t_final: *solution.times.last().expect("nonempty"),
        spectral_gap,
        is_ergodic,
        fixed_point,
        fitted_rate,
        initial_energy: trace.energy[0],
        final_energy: *trace.energy.last().expect("nonempty"),
        final_spread: solution.last().spread(),
        killing,
        nonlinear,
    };
    Ok(DiffuseRun {
        solution,
        trace,
        summary,
        rollout_trace,
    })
}

fn killing_check(
    inst: &Instance,
    cfg: &DiffuseConfig,
    killed: &SemigroupSolution,
    killed_trace: &EnergyTrace,
    kappa: f64,
) -> anyhow::Result<KillingCheck> {
    let base = solve_cauchy(&inst.q, &inst.features, &killed.times, cfg.method)?;
    let base_trace = energy_trace_with(&base, &inst.a, &inst.graph.degrees(), cfg.energy_normalization)?;
    let last = killed_trace.len() - 1;
    let t_final = killed.times[last];
    let measured = match (killed_trace.log_energy[last], base_trace.log_energy[last]) {
        (Some(k), Some(b)) => Some(k - b),
        _ => None,
    };
    Ok(KillingCheck {
        kappa,
        measured_log_energy_shift: measured,
        predicted_log_energy_shift: -2.0 * kappa * t_final,
        max_shift_error: killed_trace.max_log_deviation(&base_trace, |t| -2.0 * kappa * t),
    })
}

pub fn diffuse(tree: &Value, root: &Path) -> anyhow::Result<Outcome> {
    let cfg: DiffuseConfig = config::parse(tree)?;
    let run = run_diffuse(&cfg)?;
    let dir = RunDir::create(root, "diffuse", &cfg)?;
    run.write(&dir)?;
    let s = &run.summary;
    let mut summary = format!(
        "{} dynamics: n = {}, final energy {}, final spread {}",
        cfg.dynamics.name(),
        s.n_nodes,
        fmt_real(s.final_energy),
        fmt_real(s.final_spread)
    );
    if let Some(rate) = s.fitted_rate {
        write!(
            summary,
            ", fitted rate {} vs gap {}",
            fmt_real(rate),
            fmt_real(s.spectral_gap.unwrap_or(f64::NAN))
        )
        .unwrap();
    }
    if let Some(k) = &s.killing {
        if let Some(err) = k.max_shift_error {
            write!(summary, ", -2 kappa t law error {}", fmt_real(err)).unwrap();
        }
    }
    Ok(Outcome { dir: dir.path, summary })
}

// ---------------------------------------------------------------- spectrum

pub fn spectrum(tree: &Value, root: &Path) -> anyhow::Result<Outcome> {
    let cfg: SpectrumConfig = config::parse(tree)?;
    let inst = build_instance(&cfg.model())?;
    let q = dynamics_generator(&inst, &cfg.dynamics)?
        .ok_or_else(|| config_error("dynamics: spectrum needs continuous-time dynamics, not nonlinear"))?;
    let report = spectral_report(&q)?;
    if cfg.require_invariant_measure && report.invariant_measure.is_none() {
        return Err(Error::Disconnected {
            components: inst.graph.strong_components(),
        }
        .into());
    }
    let dir = RunDir::create(root, "spectrum", &cfg)?;
    dir.write_json("spectrum.json", &report)?;
    let mut summary = format!(
        "is_ergodic = {}, kernel_dim = {}, spectral_gap = {}",
        report.is_ergodic,
        report.kernel_dim,
        report.spectral_gap.map_or_else(|| "NA".into(), fmt_real)
    );
    if report.bipartite_warning {
        summary.push_str(", bipartite support (periodic jump chain)");
    }
    Ok(Outcome { dir: dir.path, summary })
}

// ---------------------------------------------------------------- ctmc

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtmcSummary {
    pub estimate: McEstimate,
    /// Row `start` of `e^{t Q} F` (with the killing term when present).
    pub reference: Vec<f64>,
    pub sigma_distance: f64,
    pub start: usize,
    pub t: f64,
    pub killed: bool,
}

pub fn ctmc(tree: &Value, root: &Path) -> anyhow::Result<Outcome> {
    let cfg: CtmcConfig = config::parse(tree)?;
    let inst = build_instance(&cfg.model())?;
    let n = inst.graph.n();
    let rates = cfg.killing.as_ref().map(|k| k.rates(n)).transpose()?;
    let (estimate, q) = match &rates {
        None => (
            feynman_kac_estimate(&inst.a, &inst.features, cfg.start, cfg.t, cfg.n_samples, cfg.seed)?,
            inst.q.clone(),
        ),
        Some(c) => (
            killed_feature_estimate(
                &inst.a,
                c,
                &inst.features,
                cfg.start,
                cfg.t,
                cfg.n_samples,
                cfg.seed,
                cfg.mode,
            )?,
            oversmooth_core::killed_generator(&inst.q, c)?,
        ),
    };
    let propagated: DMatrix<f64> = matrix_exponential(&q, cfg.t)? * inst.features.as_matrix();
    let reference: Vec<f64> = propagated.row(cfg.start).iter().copied().collect();
    let sigma_distance = estimate.sigma_distance(&reference);
    let result = CtmcSummary {
        estimate,
        reference,
        sigma_distance,
        start: cfg.start,
        t: cfg.t,
        killed: rates.is_some(),
    };

    let dir = RunDir::create(root, "ctmc", &cfg)?;
    dir.write_json("estimate.json", &result)?;
    for i in 0..cfg.trajectories as u64 {
        let mut rng = stream_rng(cfg.seed, TRAJECTORY_STREAM_SALT + i);
        let path = match &rates {
            None => sample_ctmc(&inst.a, cfg.start, cfg.t, &mut rng)?,
            Some(c) => sample_killed_ctmc(&inst.a, c, cfg.start, cfg.t, &mut rng)?,
        };
        dir.write(&format!("trajectory-{i:04}.csv"), path.to_csv())?;
    }
    let summary = format!(
        "{} samples from node {} at t = {}: sigma-distance to expm {:.3}",
        cfg.n_samples, cfg.start, cfg.t, sigma_distance
    );
    Ok(Outcome { dir: dir.path, summary })
}

// ---------------------------------------------------------------- sweep

/// One grid point: the override values in grid-key order and the resolved config.
struct Cell {
    values: Vec<Value>,
    config: DiffuseConfig,
}

fn grid_cells(cfg: &SweepConfig) -> anyhow::Result<Vec<Cell>> {
    if cfg.grid.is_empty() {
        return Err(config_error("grid: at least one sweep variable is required"));
    }
    let mut count: usize = 1;
    for (key, values) in &cfg.grid {
        if values.is_empty() {
            return Err(config_error(format!("grid.{key}: no values")));
        }
        count = count.saturating_mul(values.len());
    }
    if count > cfg.cell_budget {
        return Err(config_error(format!(
            "grid has {count} cells, above the cell budget of {}",
            cfg.cell_budget
        )));
    }
    let keys: Vec<&String> = cfg.grid.keys().collect();
    let mut cells = Vec::with_capacity(count);
    for idx in 0..count {
        let mut rem = idx;
        let mut tree = cfg.base.clone();
        let mut values = Vec::with_capacity(keys.len());
        // Last key varies fastest.
        let mut picks = vec![0; keys.len()];
        for (k, key) in keys.iter().enumerate().rev() {
            let len = cfg.grid[*key].len();
            picks[k] = rem % len;
            rem /= len;
        }
        for (key, &pick) in keys.iter().zip(&picks) {
            let v = cfg.grid[*key][pick].clone();
            config::set_path(&mut tree, key, v.clone())?;
            values.push(v);
        }
        let config = config::parse(&tree).with_context(|| format!("cell {idx}"))?;
        cells.push(Cell { values, config });
    }
    Ok(cells)
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn sweep(tree: &Value, root: &Path) -> anyhow::Result<Outcome> {
    let cfg: SweepConfig = config::parse(tree)?;
    let cells = grid_cells(&cfg)?;
    let runs: Vec<DiffuseRun> = cells
        .par_iter()
        .map(|c| run_diffuse(&c.config))
        .collect::<anyhow::Result<_>>()?;

    let dir = RunDir::create(root, "sweep", &cfg)?;
    let keys: Vec<&String> = cfg.grid.keys().collect();
    let mut table = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cell".to_string()];
    header.extend(keys.iter().map(|k| k.to_string()));
    header.extend(["t", "energy", "log_energy", "spread"].map(String::from));
    table.write_record(&header)?;
    for (i, (cell, run)) in cells.iter().zip(&runs).enumerate() {
        let cell_dir = RunDir::at(dir.path.join(format!("cell-{i:04}")))?;
        cell_dir.write_json("config.json", &cell.config)?;
        run.write(&cell_dir)?;
        let tr = &run.trace;
        for j in 0..tr.len() {
            let mut rec = vec![i.to_string()];
            rec.extend(cell.values.iter().map(value_label));
            rec.push(fmt_real(tr.times[j]));
            rec.push(fmt_real(tr.energy[j]));
            rec.push(tr.log_energy[j].map_or_else(|| "NA".into(), fmt_real));
            rec.push(fmt_real(tr.spread[j]));
            table.write_record(&rec)?;
        }
    }
    dir.write("sweep.csv", table.into_inner()?)?;

    if cfg.plot {
        for (k, key) in keys.iter().enumerate() {
            let series: Vec<Series> = cells
                .iter()
                .zip(&runs)
                .map(|(cell, run)| Series {
                    label: format!("{} = {}", short_key(key), value_label(&cell.values[k])),
                    points: run
                        .trace
                        .times
                        .iter()
                        .zip(&run.trace.log_energy)
                        .map(|(t, l)| (*t, l.unwrap_or(f64::NAN)))
                        .collect(),
                })
                .collect();
            let svg = line_chart(&format!("log Dirichlet energy by {key}"), "t", "log energy", &series);
            dir.write(&format!("plot-{}.svg", key.replace('.', "_")), svg)?;
        }
    }
    let summary = format!(
        "{} cells over {}",
        cells.len(),
        keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(" x ")
    );
    Ok(Outcome { dir: dir.path, summary })
}

fn short_key(key: &str) -> &str {
    key.rsplit('.').next().unwrap_or(key)
}

// ---------------------------------------------------------------- gen-graph

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub n_nodes: usize,
    pub directed: bool,
    /// Edges other than self-loops, each undirected edge counted once.
    pub n_edges: usize,
    pub self_loops: bool,
    pub connected: bool,
    pub bipartite: bool,
    /// Edge homophily when the source assigns classes.
    pub homophily: Option<f64>,
}

pub fn gen_graph(tree: &Value, root: &Path) -> anyhow::Result<Outcome> {
    let cfg: GenGraphConfig = config::parse(tree)?;
    let built = build_graph(&cfg.graph, cfg.self_loops, cfg.seed)?;
    let g = &built.graph;
    let homophily = built.labels.as_ref().map(|l| homophily_ratio(g, l)).transpose()?;
    let summary = GraphSummary {
        n_nodes: g.n(),
        directed: g.is_directed(),
        n_edges: g.edge_count_without_loops(),
        self_loops: g.has_self_loops(),
        connected: g.is_connected(),
        bipartite: g.is_bipartite(),
        homophily,
    };
    let dir = RunDir::create(root, "gen-graph", &cfg)?;
    save_graph(dir.path.join("graph.csv"), g)?;
    if let Some(l) = &built.labels {
        save_labels(dir.path.join("labels.csv"), l)?;
    }
    dir.write_json("summary.json", &summary)?;
    let line = format!(
        "{} nodes, {} edges, connected = {}{}",
        summary.n_nodes,
        summary.n_edges,
        summary.connected,
        homophily.map_or_else(String::new, |h| format!(", homophily {h:.3}"))
    );
    Ok(Outcome {
        dir: dir.path,
        summary: line,
    })
}
