//! Seeded instance generators shared by the integration tests.

#![allow(dead_code)]

use oversmooth_core::{
    build_attention, generator_from_attention, AttentionKernel, FeatureField, Generator, Graph, StochasticMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A graph, its features, and the linear diffusion they induce.
pub struct Instance {
    pub graph: Graph,
    pub features: FeatureField,
    pub kernel: AttentionKernel,
    pub a: StochasticMatrix,
    pub q: Generator,
}

pub const KERNELS: [AttentionKernel; 4] = [
    AttentionKernel::Zero,
    AttentionKernel::Dot,
    AttentionKernel::ScaledDot(2.0),
    AttentionKernel::NegSqDist,
];

/// Random spanning tree plus independent extra edges with probability `p`.
pub fn random_connected_graph<R: Rng>(n: usize, p: f64, self_loops: bool, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    if self_loops {
        edges.extend((0..n).map(|u| (u, u)));
    }
    Graph::new(n, edges, false).expect("valid edges")
}

/// Adds a hub joined to every node, so that any two nodes share a neighbour.
pub fn with_hub(graph: &Graph, hub: usize) -> Graph {
    let mut edges = graph.edges().to_vec();
    edges.extend((0..graph.n()).map(|v| (hub, v)));
    Graph::new(graph.n(), edges, false).expect("valid edges")
}

pub fn instance(graph: Graph, features: FeatureField, kernel: AttentionKernel) -> Instance {
    let a = build_attention(&graph, &features, kernel.as_fn()).expect("attention builds");
    let q = generator_from_attention(&a);
    Instance {
        graph,
        features,
        kernel,
        a,
        q,
    }
}

/// Connected graph on `n_min..=n_max` nodes with a random kernel and
/// `0.5 N(0, 1)` features of dimension 1 to 3.
pub fn random_instance(seed: u64, n_min: usize, n_max: usize, self_loops: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(n_min..=n_max);
    let p = rng.random_range(0.02..0.3);
    let graph = random_connected_graph(n, p, self_loops, &mut rng);
    let d = rng.random_range(1..=3);
    let f = FeatureField::random_normal(n, d, seed ^ 0x5eed);
    let features = FeatureField::new(f.as_matrix() * 0.5).unwrap();
    let kernel = KERNELS[rng.random_range(0..KERNELS.len())];
    instance(graph, features, kernel)
}

/// Like [`random_instance`] but denser, so the spectral gap stays moderate.
pub fn dense_instance(seed: u64, n_min: usize, n_max: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(n_min..=n_max);
    let graph = random_connected_graph(n, 0.5, true, &mut rng);
    let d = rng.random_range(1..=3);
    let f = FeatureField::random_normal(n, d, seed ^ 0x5eed);
    let features = FeatureField::new(f.as_matrix() * 0.5).unwrap();
    let kernel = KERNELS[rng.random_range(0..KERNELS.len())];
    instance(graph, features, kernel)
}

/// `f - 1 (sum_v mu(v) f(v))^T`: features whose consensus value is zero.
pub fn centered(f: &FeatureField, mu: &[f64]) -> FeatureField {
    f.shifted(&f.weighted_mean(mu).unwrap())
}

/// Identity features, so the solution is the transition matrix itself.
pub fn identity_features(n: usize) -> FeatureField {
    FeatureField::new(nalgebra::DMatrix::identity(n, n)).unwrap()
}
