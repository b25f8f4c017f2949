//! Plain-text formats: edge lists, feature/label CSVs and matrix dumps.
//!
//! Edge lists hold one `u,v` (or `u,v,w`, weight discarded) pair per line.
//! `#` starts a comment. An optional first content line `directed` or
//! `undirected` declares orientation; undirected is the default. Reals are
//! written in shortest round-trip scientific notation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::graph::{Graph, NodeLabels};

/// How to read an edge-list file.
#[derive(Debug, Clone, Default)]
pub struct EdgeListFormat {
    /// Overrides the file header when set.
    pub directed: Option<bool>,
    /// Declared node count; endpoints must lie below it. Inferred as `max + 1` when absent.
    pub num_nodes: Option<usize>,
}

/// First-seen mapping from raw node labels to dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeMap {
    labels: Vec<String>,
}

impl NodeMap {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Sidecar location used by [`load_graph_remapped`]: `<edge file>.nodes.csv`.
    pub fn sidecar_path(edge_file: &Path) -> PathBuf {
        let mut s = edge_file.as_os_str().to_owned();
        s.push(".nodes.csv");
        PathBuf::from(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::from("index,label\n");
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{i},{l}").unwrap();
        }
        fs::write(path, out)?;
        Ok(())
    }
}

struct RawEdges {
    directed: bool,
    edges: Vec<(String, String, usize)>,
}

fn read_raw(path: &Path) -> Result<RawEdges> {
    let text = fs::read_to_string(path)?;
    let mut directed = false;
    let mut seen_content = false;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            match line {
                "directed" => {
                    directed = true;
                    continue;
                }
                "undirected" => continue,
                _ => {}
            }
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: line_no,
                message: format!("expected `u,v` or `u,v,w`, got `{line}`"),
            });
        }
        if parts.len() == 3 && parts[2].parse::<f64>().is_err() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: line_no,
                message: format!("edge weight `{}` is not a number", parts[2]),
            });
        }
        edges.push((parts[0].to_owned(), parts[1].to_owned(), line_no));
    }
    Ok(RawEdges { directed, edges })
}

/// Reads an edge list with integer node indices.
pub fn load_graph(path: impl AsRef<Path>, format: &EdgeListFormat) -> Result<Graph> {
    let path = path.as_ref();
    let raw = read_raw(path)?;
    let directed = format.directed.unwrap_or(raw.directed);
    let mut edges = Vec::with_capacity(raw.edges.len());
    let mut max_node = None::<usize>;
    for (a, b, line) in &raw.edges {
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line: *line,
                message: format!("node `{s}` is not a non-negative integer"),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if let Some(n) = format.num_nodes {
            if let Some(&node) = [u, v].iter().find(|&&x| x >= n) {
                return Err(Error::EndpointOutOfRange { line: *line, node, n });
            }
        }
        max_node = max_node.max(Some(u.max(v)));
        edges.push((u, v));
    }
    let n = match (format.num_nodes, max_node) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::InvalidArgument(format!(
                "{} has no edges and no declared node count",
                path.display()
            )))
        }
    };
    Graph::new(n, edges, directed)
}

/// Reads an edge list with arbitrary node tokens, numbering them in order of
/// first appearance and writing the mapping to the sidecar file.
pub fn load_graph_remapped(path: impl AsRef<Path>, format: &EdgeListFormat) -> Result<(Graph, NodeMap)> {
    let path = path.as_ref();
    let raw = read_raw(path)?;
    let directed = format.directed.unwrap_or(raw.directed);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut map = NodeMap::default();
    let mut id = |label: &str, map: &mut NodeMap| -> usize {
        *index.entry(label.to_owned()).or_insert_with(|| {
            map.labels.push(label.to_owned());
            map.labels.len() - 1
        })
    };
    let edges: Vec<_> = raw
        .edges
        .iter()
        .map(|(a, b, _)| (id(a, &mut map), id(b, &mut map)))
        .collect();
    let n = format.num_nodes.unwrap_or(map.labels.len()).max(map.labels.len());
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{} has no nodes", path.display())));
    }
    let graph = Graph::new(n, edges, directed)?;
    map.write(&NodeMap::sidecar_path(path))?;
    Ok((graph, map))
}

/// Writes `graph` in the edge-list format; undirected edges appear once as `u <= v`.
pub fn save_graph(path: impl AsRef<Path>, graph: &Graph) -> Result<()> {
    let mut out = String::new();
    out.push_str(if graph.is_directed() {
        "directed\n"
    } else {
        "undirected\n"
    });
    for &(u, v) in graph.edges() {
        if graph.is_directed() || u <= v {
            writeln!(out, "{u},{v}").unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line: idx + 1,
                    message: format!("`{}` is not a number", s.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Feature CSV: one row per node, no header.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureField> {
    FeatureField::from_rows(&parse_csv_rows(path.as_ref())?)
}

pub fn save_features(path: impl AsRef<Path>, features: &FeatureField) -> Result<()> {
    fs::write(path, matrix_to_csv(features.as_matrix()))?;
    Ok(())
}

/// Label CSV: one integer per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<NodeLabels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        labels.push(line.parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message: format!("label `{line}` is not a non-negative integer"),
        })?);
    }
    Ok(NodeLabels::from_labels(labels))
}

pub fn save_labels(path: impl AsRef<Path>, labels: &NodeLabels) -> Result<()> {
    let mut out = String::new();
    for l in labels.as_slice() {
        writeln!(out, "{l}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Shortest round-trip scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:e}")
}

/// Row-major CSV, no header.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_real(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let rows = parse_csv_rows(path.as_ref())?;
    let field = FeatureField::from_rows(&rows)?;
    Ok(field.into_matrix())
}
