use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::alias::AliasTable;
use super::{EmbedError, Node2VecConfig};
use crate::graph::SocialGraph;

/// Undirected view of the follower graph used for walking.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    ids: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl WalkGraph {
    pub fn new(g: &SocialGraph) -> Self {
        WalkGraph {
            ids: g.ids().to_vec(),
            adj: g.undirected_adjacency(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }
}

/// Unnormalized second-order bias for stepping `cur -> next` after arriving from `prev`.
pub fn transition_weight(
    g: &WalkGraph,
    prev: usize,
    cur: usize,
    next: usize,
    p: f64,
    q: f64,
) -> Result<f64, EmbedError> {
    if !g.adjacent(cur, next) {
        return Err(EmbedError::NotAnEdge { from: cur, to: next });
    }
    Ok(if next == prev {
        1.0 / p
    } else if g.adjacent(prev, next) {
        1.0
    } else {
        1.0 / q
    })
}

/// Node sequences produced by the biased walker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSet {
    pub node_ids: Vec<String>,
    pub walks: Vec<Vec<u32>>,
}

impl WalkSet {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.iter().all(Vec::is_empty)
    }
}

/// Precomputed alias tables, one per (prev, cur) arc of the walk graph.
struct EdgeSamplers {
    /// offsets[cur] indexes the first table for arcs arriving at `cur`.
    offsets: Vec<usize>,
    tables: Vec<AliasTable>,
}

impl EdgeSamplers {
    fn build(g: &WalkGraph, p: f64, q: f64) -> Self {
        let n = g.node_count();
        let per_node: Vec<Vec<AliasTable>> = (0..n)
            .into_par_iter()
            .map(|cur| {
                let nbrs = g.neighbors(cur);
                nbrs.iter()
                    .map(|&prev| {
                        let w: Vec<f64> = nbrs
                            .iter()
                            .map(|&next| {
                                transition_weight(g, prev, cur, next, p, q)
                                    .expect("neighbors are adjacent")
                            })
                            .collect();
                        AliasTable::new(&w).expect("bias weights are positive")
                    })
                    .collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(n);
        let mut tables = Vec::new();
        for t in per_node {
            offsets.push(tables.len());
            tables.extend(t);
        }
        EdgeSamplers { offsets, tables }
    }

    fn table(&self, g: &WalkGraph, prev: usize, cur: usize) -> &AliasTable {
        let k = g.neighbors(cur).binary_search(&prev).expect("prev is a neighbor of cur");
        &self.tables[self.offsets[cur] + k]
    }
}

fn walk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Biased second-order walks over the undirected view of `g`.
///
/// Each walk draws from its own RNG stream keyed by (seed, start node, walk
/// index), so the result is identical whether walks run serially or in parallel.
pub fn generate_walks(g: &SocialGraph, cfg: &Node2VecConfig) -> Result<WalkSet, EmbedError> {
    cfg.validate()?;
    let wg = WalkGraph::new(g);
    let n = wg.node_count();
    if n == 0 {
        return Err(EmbedError::EmptyGraph);
    }
    let samplers = EdgeSamplers::build(&wg, cfg.return_p, cfg.in_out_q);
    let rounds = cfg.walks_per_node;
    let mut starts = Vec::with_capacity(n * rounds);
    for round in 0..rounds {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut walk_rng(cfg.seed, (1 << 63) | round as u64));
        starts.extend(order.into_iter().map(|v| (v, round)));
    }
    let walks = starts
        .par_iter()
        .map(|&(start, round)| {
            let mut rng = walk_rng(cfg.seed, (start * rounds + round) as u64);
            single_walk(&wg, &samplers, start, cfg.walk_length, &mut rng)
        })
        .collect();
    Ok(WalkSet {
        node_ids: wg.ids.clone(),
        walks,
    })
}

fn single_walk(
    g: &WalkGraph,
    samplers: &EdgeSamplers,
    start: usize,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let mut walk = Vec::with_capacity(len);
    walk.push(start as u32);
    while walk.len() < len {
        let cur = *walk.last().unwrap() as usize;
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = if walk.len() == 1 {
            nbrs[rng.gen_range(0..nbrs.len())]
        } else {
            let prev = walk[walk.len() - 2] as usize;
            nbrs[samplers.table(g, prev, cur).sample(rng)]
        };
        walk.push(next as u32);
    }
    walk
}
