//! Directed follower graph. An edge `a -> b` means `a` follows `b`.

mod centrality;

pub use centrality::{
    betweenness_centrality, degree_centrality, eigenvector_centrality, pagerank, read_centralities_csv,
    write_centralities_csv, CentralityTable, Direction, PageRankParams, EIGEN_MAX_ITERS, EIGEN_TOL,
};

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has {n} nodes, need at least {min}")]
    GraphTooSmall { n: usize, min: usize },
    #[error("graph has no edges")]
    NoEdges,
    #[error("power iteration did not converge within {max_iters} iterations")]
    NotConverged { max_iters: usize },
    #[error("centrality file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

/// Builds the graph from (follower, followed) pairs. Node indices follow the sorted id order.
pub fn build_graph(edges: &[(String, String)]) -> SocialGraph {
    build_graph_with_nodes(edges, std::iter::empty::<&str>())
}

/// Like [`build_graph`], additionally inserting `extra` ids as (possibly isolated) nodes.
pub fn build_graph_with_nodes<'a>(
    edges: &[(String, String)],
    extra: impl IntoIterator<Item = &'a str>,
) -> SocialGraph {
    let mut all: BTreeSet<&str> = extra.into_iter().collect();
    for (a, b) in edges {
        all.insert(a);
        all.insert(b);
    }
    let ids: Vec<String> = all.into_iter().map(str::to_string).collect();
    let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let n = ids.len();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for (a, b) in edges {
        let (ia, ib) = (index[a.as_str()], index[b.as_str()]);
        if ia == ib {
            continue;
        }
        out_adj[ia].push(ib);
        in_adj[ib].push(ia);
    }
    for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }
    SocialGraph {
        ids,
        index,
        out_adj,
        in_adj,
    }
}

impl SocialGraph {
    /// Builds a graph over `n` nodes named by their index (zero-padded so sort order matches).
    pub fn from_index_edges(n: usize, edges: &[(usize, usize)]) -> SocialGraph {
        let width = n.to_string().len();
        let name = |i: usize| format!("{i:0width$}");
        let named: Vec<(String, String)> = edges.iter().map(|&(a, b)| (name(a), name(b))).collect();
        let names: Vec<String> = (0..n).map(name).collect();
        build_graph_with_nodes(&named, names.iter().map(String::as_str))
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Accounts `v` follows.
    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    /// Accounts following `v`.
    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out_adj[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(a, succ)| succ.iter().map(move |&b| (a, b)))
    }

    /// Same node indexing with every edge flipped.
    pub fn reverse(&self) -> SocialGraph {
        SocialGraph {
            ids: self.ids.clone(),
            index: self.index.clone(),
            out_adj: self.in_adj.clone(),
            in_adj: self.out_adj.clone(),
        }
    }

    /// Sorted union of successors and predecessors for every node.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.node_count())
            .map(|v| {
                let mut nb: Vec<usize> = self.out_adj[v].iter().chain(&self.in_adj[v]).copied().collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }
}
