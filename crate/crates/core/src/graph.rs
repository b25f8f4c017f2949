//! Graph topology, class labels and the stochastic-block-model generator.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Unweighted graph on dense node indices `0..n`.
///
/// Edges are stored as ordered pairs, sorted and deduplicated. An undirected
/// graph stores both orientations of every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    directed: bool,
    self_loops: bool,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, directed: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::EndpointOutOfRange { line: 0, node, n });
                }
            }
            set.insert((u, v));
            if !directed {
                set.insert((v, u));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
        }
        let self_loops = (0..n).all(|u| neighbors[u].binary_search(&u).is_ok());
        Ok(Self {
            n,
            edges,
            directed,
            self_loops,
            neighbors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ordered pairs; undirected graphs list both orientations.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Whether every node carries a self-loop.
    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    /// Out-neighbours of `u` in increasing order, `u` itself included when it has a loop.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors.get(u).is_some_and(|nb| nb.binary_search(&v).is_ok())
    }

    /// Topological out-degree, self-loops counted once.
    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|u| self.degree(u) as f64).collect()
    }

    /// Largest softmax support size.
    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    /// Same graph with a loop added at every node.
    pub fn with_self_loops(&self) -> Self {
        let loops = (0..self.n).map(|u| (u, u));
        Self::new(self.n, self.edges.iter().copied().chain(loops), self.directed).expect("existing edges are in range")
    }

    /// Number of undirected edges (each unordered pair once) excluding loops,
    /// or number of arcs excluding loops for a directed graph.
    pub fn edge_count_without_loops(&self) -> usize {
        let arcs = self.edges.iter().filter(|(u, v)| u != v).count();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }

    /// Number of strongly connected components.
    pub fn strong_components(&self) -> usize {
        strong_components(self.n, |u| self.neighbors[u].iter().copied())
    }

    pub fn is_connected(&self) -> bool {
        self.strong_components() == 1
    }

    /// Two-colourability of the underlying undirected graph. Any loop makes it false.
    pub fn is_bipartite(&self) -> bool {
        let mut undirected = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            if u == v {
                return false;
            }
            undirected[u].push(v);
            undirected[v].push(u);
        }
        is_bipartite(&undirected)
    }
}

pub(crate) fn is_bipartite(adjacency: &[Vec<usize>]) -> bool {
    let n = adjacency.len();
    let mut colour = vec![u8::MAX; n];
    for root in 0..n {
        if colour[root] != u8::MAX {
            continue;
        }
        colour[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if v == u {
                    return false;
                }
                if colour[v] == u8::MAX {
                    colour[v] = 1 - colour[u];
                    queue.push_back(v);
                } else if colour[v] == colour[u] {
                    return false;
                }
            }
        }
    }
    true
}

/// Tarjan's algorithm, iterative.
pub(crate) fn strong_components<F, I>(n: usize, successors: F) -> usize
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let succ: Vec<Vec<usize>> = (0..n).map(|u| successors(u).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos < succ[u].len() {
                let v = succ[u][*pos];
                *pos += 1;
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    count += 1;
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        if w == u {
                            break;
                        }
                    }
                }
            }
        }
    }
    count
}

/// Class index per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLabels {
    labels: Vec<usize>,
    classes: usize,
}

impl NodeLabels {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self> {
        if let Some((u, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::InvalidArgument(format!(
                "label {l} of node {u} outside [0, {classes})"
            )));
        }
        Ok(Self { labels, classes })
    }

    /// Class count inferred as `max label + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, classes }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }
}

/// Stochastic block model with `k` equal-sized contiguous classes.
///
/// Every unordered pair is connected independently with probability `p_in`
/// (same class) or `p_out` (different classes). Every node receives a
/// self-loop. Pairs are visited in lexicographic order from a single
/// `ChaCha8Rng` stream, so a fixed seed reproduces the graph bit for bit.
pub fn generate_homophily_graph(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(Graph, NodeLabels)> {
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!(
            "need n >= k >= 1, got n = {n}, k = {k}"
        )));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("{name} = {p} not in [0, 1]")));
        }
    }
    let labels: Vec<usize> = (0..n).map(|u| u * k / n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|u| (u, u)).collect();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(n, edges, false)?;
    Ok((graph, NodeLabels::new(labels, k)?))
}

/// Expected edge homophily of [`generate_homophily_graph`] for the given parameters.
pub fn expected_homophily(n: usize, k: usize, p_in: f64, p_out: f64) -> f64 {
    let block = n as f64 / k as f64;
    let intra = p_in * (block - 1.0);
    let inter = p_out * n as f64 * (k as f64 - 1.0) / k as f64;
    if intra + inter == 0.0 {
        1.0
    } else {
        intra / (intra + inter)
    }
}

/// Block-model probabilities that hit a target edge homophily at a given
/// expected (loop-free) degree.
pub fn sbm_probabilities(n: usize, k: usize, homophily: f64, mean_degree: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&homophily) {
        return Err(Error::InvalidArgument(format!("homophily {homophily} not in [0, 1]")));
    }
    if k < 2 && homophily < 1.0 {
        return Err(Error::InvalidArgument(
            "homophily below 1 needs at least two classes".into(),
        ));
    }
    let block = n as f64 / k as f64;
    let p_in = if block > 1.0 {
        homophily * mean_degree / (block - 1.0)
    } else {
        0.0
    };
    let p_out = if k > 1 {
        (1.0 - homophily) * mean_degree / (n as f64 * (k as f64 - 1.0) / k as f64)
    } else {
        0.0
    };
    if p_in > 1.0 || p_out > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "mean degree {mean_degree} unreachable at homophily {homophily} (p_in = {p_in}, p_out = {p_out})"
        )));
    }
    Ok((p_in, p_out))
}

/// Edge homophily: share of loop-free edges joining same-class endpoints.
///
/// Returns 1 when the graph has no loop-free edges.
pub fn homophily_ratio(graph: &Graph, labels: &NodeLabels) -> Result<f64> {
    if labels.len() != graph.n() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: graph.n(),
            found: labels.len(),
        });
    }
    let l = labels.as_slice();
    let (same, total) = graph
        .edges()
        .iter()
        .filter(|(u, v)| u != v)
        .fold((0usize, 0usize), |(s, t), &(u, v)| {
            (s + usize::from(l[u] == l[v]), t + 1)
        });
    Ok(if total == 0 { 1.0 } else { same as f64 / total as f64 })
}
