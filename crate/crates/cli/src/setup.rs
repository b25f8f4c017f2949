//! Turns configs into graphs, features, attention matrices and generators.

use anyhow::Context;
use oversmooth_core::attention::{build_attention, generator_from_attention};
use oversmooth_core::io::{load_features, load_graph, EdgeListFormat};
use oversmooth_core::{
    breaking_term, generate_homophily_graph, invariant_measure, killed_generator, modified_generator,
    sbm_probabilities, FeatureField, Generator, Graph, NodeLabels, StochasticMatrix,
};

use crate::config::{Dynamics, FeatureSource, GraphSource, Model};

/// Seed offset separating the feature stream from the graph stream.
const FEATURE_SEED_SALT: u64 = 0x5eed_f00d;

/// A graph with its class labels when the source has them.
pub struct Built {
    pub graph: Graph,
    pub labels: Option<NodeLabels>,
}

pub fn build_graph(source: &GraphSource, self_loops: bool, seed: u64) -> anyhow::Result<Built> {
    let (graph, labels) = match source {
        GraphSource::File {
            path,
            directed,
            num_nodes,
        } => {
            let format = EdgeListFormat {
                directed: *directed,
                num_nodes: *num_nodes,
            };
            let g = load_graph(path, &format).with_context(|| format!("graph file {}", path.display()))?;
            (g, None)
        }
        GraphSource::Edges { n, edges, directed } => (Graph::new(*n, edges.iter().copied(), *directed)?, None),
        GraphSource::Sbm {
            n,
            classes,
            p_in,
            p_out,
        } => {
            let (g, l) = generate_homophily_graph(*n, *classes, *p_in, *p_out, seed)?;
            (g, Some(l))
        }
        GraphSource::Homophily {
            n,
            classes,
            homophily,
            mean_degree,
        } => {
            let (p_in, p_out) = sbm_probabilities(*n, *classes, *homophily, *mean_degree)?;
            let (g, l) = generate_homophily_graph(*n, *classes, p_in, p_out, seed)?;
            (g, Some(l))
        }
    };
    let graph = if self_loops { graph.with_self_loops() } else { graph };
    Ok(Built { graph, labels })
}

/// Everything a command needs about the model at its initial features.
pub struct Instance {
    pub graph: Graph,
    pub features: FeatureField,
    pub a: StochasticMatrix,
    pub q: Generator,
}

pub fn build_instance(model: &Model) -> anyhow::Result<Instance> {
    let Built { graph, .. } = build_graph(&model.graph, model.self_loops, model.seed)?;
    let n = graph.n();
    let (features, center) = match &model.features {
        FeatureSource::Random { dim, scale, center } => {
            let f = FeatureField::random_normal(n, *dim, model.seed ^ FEATURE_SEED_SALT);
            (FeatureField::new(f.as_matrix() * *scale)?, *center)
        }
        FeatureSource::File { path } => (
            load_features(path).with_context(|| format!("feature file {}", path.display()))?,
            false,
        ),
        FeatureSource::Rows { rows } => (FeatureField::from_rows(rows)?, false),
    };
    if features.n() != n {
        anyhow::bail!(crate::config::ConfigError(format!(
            "features: {} rows for a graph with {n} nodes",
            features.n()
        )));
    }
    let a = build_attention(&graph, &features, model.kernel.0.as_fn())?;
    // Centering changes only the initial data: the attention stays the one
    // computed from the raw features, so the consensus value is exactly 0.
    let features = if center {
        let mu = invariant_measure(&a)?;
        features.shifted(&features.weighted_mean(&mu)?)
    } else {
        features
    };
    let q = generator_from_attention(&a);
    Ok(Instance { graph, features, a, q })
}

/// Generator of a continuous-time dynamics; `None` for nonlinear layers.
///
/// A breaking term with scale 0 leaves the linear generator untouched.
pub fn dynamics_generator(inst: &Instance, dynamics: &Dynamics) -> anyhow::Result<Option<Generator>> {
    Ok(match dynamics {
        Dynamics::Linear {} => Some(inst.q.clone()),
        Dynamics::Broken { breaking } if breaking.scale == 0.0 => {
            breaking.validate(inst.graph.n())?;
            Some(inst.q.clone())
        }
        Dynamics::Broken { breaking } => {
            let c = breaking_term(breaking, &inst.a)?;
            Some(modified_generator(&inst.q, &c)?)
        }
        Dynamics::Killed { .. } => {
            let rates = dynamics.killing().expect("killed").rates(inst.graph.n())?;
            Some(killed_generator(&inst.q, &rates)?)
        }
        Dynamics::Nonlinear { .. } => None,
    })
}
