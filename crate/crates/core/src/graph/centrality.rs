use std::collections::VecDeque;
use std::path::Path;

use rayon::prelude::*;

use super::{GraphError, SocialGraph};

pub const EIGEN_MAX_ITERS: usize = 1000;
pub const EIGEN_TOL: f64 = 1e-8;

/// Brandes sources are processed in fixed-size chunks so the floating-point
/// reduction order does not depend on the thread pool.
const BRANDES_CHUNK: usize = 32;

/// Total (in + out) degree over `n - 1`.
pub fn degree_centrality(g: &SocialGraph) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::GraphTooSmall { n, min: 2 });
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|v| (g.successors(v).len() + g.predecessors(v).len()) as f64 / denom)
        .collect())
}

/// Shortest-path betweenness over unweighted directed paths, normalized by `(n-1)(n-2)`.
pub fn betweenness_centrality(g: &SocialGraph) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if n < 3 {
        return Err(GraphError::GraphTooSmall { n, min: 3 });
    }
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BRANDES_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut ws = BrandesWorkspace::new(n);
            for &s in chunk {
                ws.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    Ok(total.into_iter().map(|b| b / norm).collect())
}

struct BrandesWorkspace {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesWorkspace {
    fn new(n: usize) -> Self {
        BrandesWorkspace {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    fn accumulate(&mut self, g: &SocialGraph, s: usize, acc: &mut [f64]) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = -1;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.order.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &w in g.successors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Score flows along incoming edges: a node is central when central nodes follow it.
    In,
    /// Score flows against edge direction: a node is central when it follows central nodes.
    Out,
}

/// Power-iteration eigenvector centrality, L2-normalized.
///
/// Starts from the uniform vector and stops once no component moves by more
/// than [`EIGEN_TOL`]. Graphs whose iteration collapses to zero (acyclic
/// structure) or oscillates (periodic structure) yield `NotConverged`.
pub fn eigenvector_centrality(g: &SocialGraph, direction: Direction) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Err(GraphError::NoEdges);
    }
    let feeders = |v: usize| match direction {
        Direction::In => g.predecessors(v),
        Direction::Out => g.successors(v),
    };
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..EIGEN_MAX_ITERS {
        for (v, slot) in next.iter_mut().enumerate() {
            *slot = feeders(v).iter().map(|&u| x[u]).sum();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GraphError::NotConverged {
                max_iters: EIGEN_MAX_ITERS,
            });
        }
        let mut change: f64 = 0.0;
        for (xv, nv) in x.iter_mut().zip(&next) {
            let nv = nv / norm;
            change = change.max((nv - *xv).abs());
            *xv = nv;
        }
        if change < EIGEN_TOL {
            return Ok(x);
        }
    }
    Err(GraphError::NotConverged {
        max_iters: EIGEN_MAX_ITERS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iters: 200,
        }
    }
}

/// PageRank with uniform teleport; dangling mass is spread uniformly.
pub fn pagerank(g: &SocialGraph, params: PageRankParams) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if n == 0 {
        return Err(GraphError::GraphTooSmall { n, min: 1 });
    }
    let nf = n as f64;
    let d = params.damping;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..params.max_iters {
        let dangling: f64 = (0..n).filter(|&v| g.successors(v).is_empty()).map(|v| x[v]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g
                .predecessors(v)
                .iter()
                .map(|&u| x[u] / g.successors(u).len() as f64)
                .sum();
            *slot = base + d * inflow;
        }
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < params.tol {
            let total: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / total).collect());
        }
    }
    Err(GraphError::NotConverged {
        max_iters: params.max_iters,
    })
}

/// The five per-node centralities, indexed like the graph they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub ids: Vec<String>,
    pub degree: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub in_eigenvector: Vec<f64>,
    pub out_eigenvector: Vec<f64>,
    pub pagerank: Vec<f64>,
}

impl CentralityTable {
    pub fn compute(g: &SocialGraph) -> Result<Self, GraphError> {
        Ok(CentralityTable {
            ids: g.ids().to_vec(),
            degree: degree_centrality(g)?,
            betweenness: betweenness_centrality(g)?,
            in_eigenvector: eigenvector_centrality(g, Direction::In)?,
            out_eigenvector: eigenvector_centrality(g, Direction::Out)?,
            pagerank: pagerank(g, PageRankParams::default())?,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// `[degree, betweenness, in_eig, out_eig, pagerank]` for row `i`.
    pub fn row(&self, i: usize) -> [f64; 5] {
        [
            self.degree[i],
            self.betweenness[i],
            self.in_eigenvector[i],
            self.out_eigenvector[i],
            self.pagerank[i],
        ]
    }
}

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `id,degree,betweenness,in_eig,out_eig,pagerank` with 17 significant digits.
pub fn write_centralities_csv(path: &Path, t: &CentralityTable) -> Result<(), GraphError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| GraphError::Format(e.to_string()))?;
    let io = |e: csv::Error| GraphError::Format(e.to_string());
    w.write_record(["id", "degree", "betweenness", "in_eig", "out_eig", "pagerank"])
        .map_err(io)?;
    for (i, id) in t.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(t.row(i).iter().map(|&v| fmt17(v)));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| GraphError::Format(e.to_string()))
}

pub fn read_centralities_csv(path: &Path) -> Result<CentralityTable, GraphError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| GraphError::Format(e.to_string()))?;
    let mut t = CentralityTable {
        ids: vec![],
        degree: vec![],
        betweenness: vec![],
        in_eigenvector: vec![],
        out_eigenvector: vec![],
        pagerank: vec![],
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| GraphError::Format(e.to_string()))?;
        if rec.len() != 6 {
            return Err(GraphError::Format(format!("line {}: expected 6 fields", line + 2)));
        }
        let mut vals = [0.0; 5];
        for (k, slot) in vals.iter_mut().enumerate() {
            *slot = rec[k + 1]
                .parse()
                .map_err(|_| GraphError::Format(format!("line {}: bad number", line + 2)))?;
        }
        t.ids.push(rec[0].to_string());
        t.degree.push(vals[0]);
        t.betweenness.push(vals[1]);
        t.in_eigenvector.push(vals[2]);
        t.out_eigenvector.push(vals[3]);
        t.pagerank.push(vals[4]);
    }
    Ok(t)
}
