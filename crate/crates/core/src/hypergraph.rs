//! Uniform hypergraphs, the hyperedge-list file format, and projections of a
//! hypergraph onto ordinary weighted graphs.
//!
//! A [`Hypergraph`] stores each hyperedge as a strictly increasing tuple of
//! node indices. The adjacency tensor it represents is supersymmetric with a
//! zero diagonal and is never materialized; see [`crate::tensor`] for the
//! contractions that operate on it.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An m-uniform hypergraph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    m: usize,
    /// Sorted, deduplicated hyperedges, flattened `m` indices at a time.
    edges: Vec<usize>,
}

impl Hypergraph {
    /// Builds a hypergraph, sorting each hyperedge and dropping duplicates.
    pub fn new<I, E>(n: usize, m: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "hyperedge order must be at least 2, got {m}"
            )));
        }
        let mut set = BTreeSet::new();
        for (idx, edge) in edges.into_iter().enumerate() {
            let sorted = normalize_edge(edge.as_ref(), n).map_err(|reason| {
                Error::InvalidHyperedge {
                    line: idx + 1,
                    reason,
                }
            })?;
            if sorted.len() != m {
                return Err(Error::InvalidHyperedge {
                    line: idx + 1,
                    reason: format!("expected {m} nodes, found {}", sorted.len()),
                });
            }
            set.insert(sorted);
        }
        Ok(Self {
            n,
            m,
            edges: set.into_iter().flatten().collect(),
        })
    }

    /// A hypergraph with no hyperedges.
    pub fn empty(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, std::iter::empty::<Vec<usize>>())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Iterates over hyperedges in lexicographic order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.edges.chunks_exact(self.m)
    }

    pub fn contains(&self, edge: &[usize]) -> bool {
        let mut sorted = edge.to_vec();
        sorted.sort_unstable();
        self.edges().any(|e| e == sorted.as_slice())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let edges: Vec<Vec<usize>> = self
            .edges()
            .map(|e| e.iter().map(|&i| perm[i]).collect())
            .collect();
        Self::new(self.n, self.m, edges)
    }

    /// Node degrees `L_i`: the number of ordered tails `(i_2, .., i_m)` with
    /// `A(i, i_2, .., i_m) = 1`, i.e. `(m-1)!` times the hyperedge count of `i`.
    pub fn degrees(&self) -> Vec<f64> {
        let tails = factorial(self.m - 1) as f64;
        let mut deg = vec![0.0; self.n];
        for e in self.edges() {
            for &i in e {
                deg[i] += tails;
            }
        }
        deg
    }

    /// Projects the hypergraph onto a graph on the same nodes.
    pub fn project_graph(&self, mode: Projection) -> WeightedGraph {
        let weight = match mode {
            Projection::Weighted => factorial(self.m - 2) as f64,
            Projection::Binary => 1.0,
        };
        let mut adj = DMatrix::zeros(self.n, self.n);
        for e in self.edges() {
            for (a, &i) in e.iter().enumerate() {
                for &j in &e[a + 1..] {
                    match mode {
                        Projection::Weighted => {
                            adj[(i, j)] += weight;
                            adj[(j, i)] += weight;
                        }
                        Projection::Binary => {
                            adj[(i, j)] = 1.0;
                            adj[(j, i)] = 1.0;
                        }
                    }
                }
            }
        }
        WeightedGraph { adjacency: adj }
    }
}

fn normalize_edge(edge: &[usize], n: usize) -> std::result::Result<Vec<usize>, String> {
    let mut sorted = edge.to_vec();
    sorted.sort_unstable();
    if let Some(&max) = sorted.last() {
        if max >= n {
            return Err(format!("node index {max} out of range for {n} nodes"));
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(format!("repeated node index in {edge:?}"));
    }
    Ok(sorted)
}

pub(crate) fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// How hyperedges are collapsed onto node pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `1` if any hyperedge contains both nodes.
    Binary,
    /// `(m-2)!` times the number of hyperedges containing both nodes.
    Weighted,
}

/// Symmetric adjacency matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    adjacency: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn into_adjacency(self) -> DMatrix<f64> {
        self.adjacency
    }

    pub fn weighted_degrees(&self) -> Vec<f64> {
        self.adjacency.row_iter().map(|r| r.sum()).collect()
    }
}

/// A hypergraph whose hyperedges have mixed orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedHypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl MixedHypergraph {
    pub fn new<I, E>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        let mut set = BTreeSet::new();
        for (idx, edge) in edges.into_iter().enumerate() {
            let sorted = normalize_edge(edge.as_ref(), n).map_err(|reason| {
                Error::InvalidHyperedge {
                    line: idx + 1,
                    reason,
                }
            })?;
            if sorted.len() < 2 {
                return Err(Error::InvalidHyperedge {
                    line: idx + 1,
                    reason: "hyperedge needs at least 2 nodes".into(),
                });
            }
            set.insert(sorted);
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn max_order(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// One uniform hypergraph per order in `2..=max_order`; orders without
    /// hyperedges come back empty.
    pub fn split_by_order(&self) -> Vec<Hypergraph> {
        (2..=self.max_order().max(2))
            .map(|m| {
                let edges = self.edges.iter().filter(|e| e.len() == m);
                Hypergraph::new(self.n, m, edges).expect("edges already validated")
            })
            .collect()
    }
}

/// Result of reading a hyperedge-list file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadedHypergraph {
    Uniform(Hypergraph),
    /// Orders differ across lines and no order was required.
    Mixed(MixedHypergraph),
}

impl LoadedHypergraph {
    pub fn n(&self) -> usize {
        match self {
            LoadedHypergraph::Uniform(h) => h.n(),
            LoadedHypergraph::Mixed(h) => h.n(),
        }
    }

    pub fn into_uniform(self) -> Result<Hypergraph> {
        match self {
            LoadedHypergraph::Uniform(h) => Ok(h),
            LoadedHypergraph::Mixed(h) => Err(Error::InvalidArgument(format!(
                "hypergraph mixes orders up to {}; a uniform hypergraph is required",
                h.max_order()
            ))),
        }
    }
}

/// Reads a hyperedge list from `path`. See [`parse_hypergraph`].
pub fn load_hypergraph(path: impl AsRef<Path>, expected_m: Option<usize>) -> Result<LoadedHypergraph> {
    let file = File::open(path)?;
    parse_hypergraph(BufReader::new(file), expected_m)
}

/// Parses one hyperedge per line as whitespace-separated node indices.
///
/// Lines starting with `#` and blank lines are skipped. An optional first
/// content line `%n <count>` fixes the node count; otherwise it is one more
/// than the largest index seen.
pub fn parse_hypergraph(reader: impl Read, expected_m: Option<usize>) -> Result<LoadedHypergraph> {
    let mut header_n = None;
    let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("%n") {
            if header_n.is_some() || !rows.is_empty() {
                return Err(Error::MalformedInput {
                    line: line_no,
                    reason: "node-count header must precede all hyperedges".into(),
                });
            }
            let count = rest.trim().parse::<usize>().map_err(|e| Error::MalformedInput {
                line: line_no,
                reason: format!("bad node count {:?}: {e}", rest.trim()),
            })?;
            header_n = Some(count);
            continue;
        }
        let nodes = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|e| Error::MalformedInput {
                    line: line_no,
                    reason: format!("bad node index {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidHyperedge {
                line: line_no,
                reason: format!("repeated node index in {nodes:?}"),
            });
        }
        if sorted.len() < 2 {
            return Err(Error::InvalidHyperedge {
                line: line_no,
                reason: "hyperedge needs at least 2 nodes".into(),
            });
        }
        if let Some(m) = expected_m {
            if sorted.len() != m {
                return Err(Error::InvalidHyperedge {
                    line: line_no,
                    reason: format!("expected {m} nodes, found {}", sorted.len()),
                });
            }
        }
        rows.push((line_no, sorted));
    }

    let max_index = rows.iter().filter_map(|(_, e)| e.last().copied()).max();
    let n = match (header_n, max_index) {
        (Some(n), Some(max)) if max >= n => {
            let line = rows
                .iter()
                .find(|(_, e)| e.last().is_some_and(|&x| x >= n))
                .map_or(0, |(l, _)| *l);
            return Err(Error::InvalidHyperedge {
                line,
                reason: format!("node index {max} out of range for header count {n}"),
            });
        }
        (Some(n), _) => n,
        (None, Some(max)) => max + 1,
        (None, None) => 0,
    };

    let orders: BTreeSet<usize> = rows.iter().map(|(_, e)| e.len()).collect();
    let m = match (expected_m, orders.len()) {
        (Some(m), _) => m,
        (None, 1) => *orders.iter().next().unwrap(),
        (None, 0) => {
            return Err(Error::MalformedInput {
                line: 0,
                reason: "no hyperedges and no expected order".into(),
            })
        }
        (None, _) => {
            let edges = rows.into_iter().map(|(_, e)| e);
            return Ok(LoadedHypergraph::Mixed(MixedHypergraph::new(n, edges)?));
        }
    };
    Ok(LoadedHypergraph::Uniform(Hypergraph::new(
        n,
        m,
        rows.into_iter().map(|(_, e)| e),
    )?))
}

/// Writes the hyperedge-list format read by [`parse_hypergraph`], including
/// the node-count header so isolated trailing nodes survive a round trip.
pub fn write_hypergraph<W: std::io::Write>(h: &Hypergraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%n {}", h.n())?;
    for e in h.edges() {
        let line: Vec<String> = e.iter().map(usize::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
