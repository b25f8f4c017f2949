//! Deterministic benchmark instances shared by the criterion benches.

use oversmooth_core::{
    build_attention, generator_from_attention, AttentionKernel, FeatureField, Generator, Graph, StochasticMatrix,
};

/// A graph with features, attention and generator.
pub struct BenchInstance {
    pub graph: Graph,
    pub features: FeatureField,
    pub a: StochasticMatrix,
    pub q: Generator,
}

/// Ring on `n` nodes with chords `u -- u + stride` and self-loops: connected,
/// non-bipartite, and with a moderate spectral gap.
pub fn ring_with_chords(n: usize, stride: usize) -> Graph {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
    if stride > 1 && stride < n {
        edges.extend((0..n).map(|u| (u, (u + stride) % n)));
    }
    Graph::new(n, edges, false).expect("valid ring").with_self_loops()
}

pub fn instance(n: usize, dim: usize, kernel: AttentionKernel) -> BenchInstance {
    let graph = ring_with_chords(n, (n / 7).max(2));
    let raw = FeatureField::random_normal(n, dim, n as u64);
    let features = FeatureField::new(raw.as_matrix() * 0.5).expect("finite features");
    let a = build_attention(&graph, &features, kernel.as_fn()).expect("attention builds");
    let q = generator_from_attention(&a);
    BenchInstance { graph, features, a, q }
}
