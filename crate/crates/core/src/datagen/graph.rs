use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Undirected influence graph without self-loops or isolated nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfluenceGraph {
    adjacency: Vec<Vec<usize>>,
}

impl InfluenceGraph {
    /// Self-loops and duplicate edges are dropped; every node must end up
    /// with at least one neighbor.
    pub fn from_edges(
        nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); nodes];
        for (u, v) in edges {
            if u >= nodes || v >= nodes {
                return Err(Error::Config(format!(
                    "edge ({u}, {v}) outside {nodes} nodes"
                )));
            }
            if u != v {
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        if let Some(u) = sets.iter().position(BTreeSet::is_empty) {
            return Err(Error::IsolatedNode(u));
        }
        Ok(InfluenceGraph {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        connected(
            &self
                .adjacency
                .iter()
                .map(|n| n.iter().copied().collect())
                .collect::<Vec<_>>(),
        )
    }

    /// Mean local clustering coefficient; nodes of degree < 2 count as 0.
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.node_count();
        let total: f64 = (0..n)
            .map(|u| {
                let nb = &self.adjacency[u];
                let k = nb.len();
                if k < 2 {
                    return 0.0;
                }
                let mut links = 0usize;
                for (a, &x) in nb.iter().enumerate() {
                    for &y in &nb[a + 1..] {
                        if self.has_edge(x, y) {
                            links += 1;
                        }
                    }
                }
                2.0 * links as f64 / (k * (k - 1)) as f64
            })
            .sum();
        total / n as f64
    }
}

fn connected(adj: &[BTreeSet<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Reads whitespace-separated `u v` pairs (0-based, `#` comments allowed)
/// and keeps the subgraph on nodes `0..nodes`.
pub fn load_edge_list(path: &Path, nodes: usize) -> Result<InfluenceGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, nodes)
}

pub fn parse_edge_list(text: &str, nodes: usize) -> Result<InfluenceGraph> {
    let mut edges = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::ParseError {
                line: no + 1,
                message: format!("`{line}`: {e}"),
            })?;
        let [u, v] = parsed[..] else {
            return Err(Error::ParseError {
                line: no + 1,
                message: format!("expected two node ids, got `{line}`"),
            });
        };
        if u < nodes && v < nodes {
            edges.push((u, v));
        }
    }
    InfluenceGraph::from_edges(nodes, edges)
}

/// Maximum number of rewiring attempts before giving up on connectivity.
pub const WS_ATTEMPTS: usize = 100;

/// Watts–Strogatz small world: a ring where each node links to its
/// `k_ring/2` nearest neighbors per side, then every edge is rewired with
/// probability `p_rewire`.
pub fn gen_ws_graph(n: usize, k_ring: usize, p_rewire: f64, seed: u64) -> Result<InfluenceGraph> {
    if k_ring == 0 || k_ring % 2 != 0 || k_ring >= n {
        return Err(Error::Config(format!(
            "k_ring must be even, positive and below n = {n}, got {k_ring}"
        )));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(Error::Config(format!("p_rewire {p_rewire} outside [0, 1]")));
    }
    for attempt in 0..WS_ATTEMPTS {
        let mut rng = rng::stream(seed, &format!("{}/{attempt}", rng::GRAPH));
        let mut adj = vec![BTreeSet::new(); n];
        for u in 0..n {
            for s in 1..=k_ring / 2 {
                let v = (u + s) % n;
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        for s in 1..=k_ring / 2 {
            for u in 0..n {
                let v = (u + s) % n;
                if !adj[u].contains(&v) || !rng.random_bool(p_rewire) {
                    continue;
                }
                if adj[u].len() >= n - 1 {
                    continue;
                }
                let w = loop {
                    let w = rng.random_range(0..n);
                    if w != u && !adj[u].contains(&w) {
                        break w;
                    }
                };
                adj[u].remove(&v);
                adj[v].remove(&u);
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
        if connected(&adj) && adj.iter().all(|a| !a.is_empty()) {
            return Ok(InfluenceGraph {
                adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            });
        }
    }
    Err(Error::DisconnectedAfterRetries(WS_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = parse_edge_list("0 1\n1 0\n", 2).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn restriction_drops_outside_edges() {
        let g = parse_edge_list("# comment\n0 1\n1 2\n2 0\n2 3\n3 4\n", 3).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!((0..3).all(|u| g.degree(u) == 2));
        assert_eq!(g.clustering_coefficient(), 1.0);
    }

    #[test]
    fn isolated_nodes_and_bad_lines_rejected() {
        assert!(matches!(
            parse_edge_list("0 1\n", 3),
            Err(Error::IsolatedNode(2))
        ));
        assert!(matches!(
            parse_edge_list("0 1\n1 x\n", 2),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 2\n", 3),
            Err(Error::ParseError { line: 1, .. })
        ));
    }

    #[test]
    fn ring_lattice_without_rewiring() {
        let g = gen_ws_graph(12, 4, 0.0, 1).unwrap();
        assert!((0..12).all(|u| g.degree(u) == 4));
        assert!((g.clustering_coefficient() - 0.5).abs() < 1e-15);
        assert!(g.is_connected());
    }

    #[test]
    fn ws_is_deterministic_and_validated() {
        let a = gen_ws_graph(40, 6, 0.2, 9).unwrap();
        let b = gen_ws_graph(40, 6, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 40 * 3);
        assert!(a.is_connected());
        assert!(gen_ws_graph(10, 3, 0.1, 0).is_err());
        assert!(gen_ws_graph(10, 4, 1.5, 0).is_err());
    }
}
