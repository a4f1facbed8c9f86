//! Independent reference implementations shared by the integration tests and
//! the acceptance harness.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spamdetect::graph::SocialGraph;
use spamdetect::models::{GBDTModel, TreeNode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi style directed graph without self-loops.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SocialGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    SocialGraph::from_index_edges(n, &edges)
}

pub fn dense_adjacency(g: &SocialGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = true;
    }
    a
}

pub fn dense_degree(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|v| {
            let out = a[v].iter().filter(|&&e| e).count();
            let inn = (0..n).filter(|&u| a[u][v]).count();
            (out + inn) as f64 / (n - 1) as f64
        })
        .collect()
}

/// Betweenness from Floyd-Warshall distances and dense path counts.
pub fn dense_betweenness(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for s in 0..n {
        d[s][s] = 0;
        for t in 0..n {
            if a[s][t] {
                d[s][t] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    // sigma[s][t]: number of shortest s->t paths, filled in order of distance
    let mut sigma = vec![vec![0.0f64; n]; n];
    for s in 0..n {
        sigma[s][s] = 1.0;
        for len in 1..n {
            for t in 0..n {
                if d[s][t] == len {
                    sigma[s][t] = (0..n).filter(|&u| a[u][t] && d[s][u] + 1 == len).map(|u| sigma[s][u]).sum();
                }
            }
        }
    }
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || d[s][t] >= INF {
                continue;
            }
            for v in 0..n {
                if v != s && v != t && d[s][v] + d[v][t] == d[s][t] {
                    b[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    b.into_iter().map(|x| x / norm).collect()
}

/// PageRank as the solution of the linear system `(I - dM) x = (1-d)/n`,
/// by Gaussian elimination with partial pivoting.
pub fn dense_pagerank(a: &[Vec<bool>], damping: f64) -> Vec<f64> {
    let n = a.len();
    let nf = n as f64;
    let mut m = vec![vec![0.0; n + 1]; n];
    for u in 0..n {
        let out: Vec<usize> = (0..n).filter(|&v| a[u][v]).collect();
        for v in 0..n {
            let share = if out.is_empty() {
                1.0 / nf
            } else if a[u][v] {
                1.0 / out.len() as f64
            } else {
                0.0
            };
            m[v][u] -= damping * share;
        }
    }
    for v in 0..n {
        m[v][v] += 1.0;
        m[v][n] = (1.0 - damping) / nf;
    }
    let x = solve(m);
    let total: f64 = x.iter().sum();
    x.into_iter().map(|v| v / total).collect()
}

fn solve(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

pub enum EigenOracle {
    Vector(Vec<f64>),
    /// The power sequence dies out (nilpotent matrix).
    Vanishes,
    /// The limit direction is not a fixed point of one more step.
    Periodic,
}

/// Limit of power iteration from the uniform vector, computed by repeated
/// squaring of the dense iteration matrix (`B^(2^k) 1`). `incoming` selects
/// `B = A^T` (score from predecessors); otherwise `B = A`.
pub fn dense_eigenvector(a: &[Vec<bool>], incoming: bool) -> EigenOracle {
    let n = a.len();
    let mut b: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(if incoming { a[j][i] } else { a[i][j] }))).collect())
        .collect();
    let step: Vec<Vec<f64>> = b.clone();
    for _ in 0..60 {
        let mut sq = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if b[i][k] != 0.0 {
                    for j in 0..n {
                        sq[i][j] += b[i][k] * b[k][j];
                    }
                }
            }
        }
        let mx = sq.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if mx == 0.0 {
            return EigenOracle::Vanishes;
        }
        b = sq.into_iter().map(|r| r.into_iter().map(|v| v / mx).collect()).collect();
    }
    let v: Vec<f64> = b.iter().map(|r| r.iter().sum()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return EigenOracle::Vanishes;
    }
    let v: Vec<f64> = v.into_iter().map(|x| x / norm).collect();
    let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| step[i][j] * v[j]).sum()).collect();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if wn == 0.0 {
        return EigenOracle::Vanishes;
    }
    let moved = v.iter().zip(&w).map(|(a, b)| (a - b / wn).abs()).fold(0.0, f64::max);
    if moved > 1e-6 {
        EigenOracle::Periodic
    } else {
        EigenOracle::Vector(v)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random tree with positive covers that add up at every split.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize, features: usize) -> TreeNode {
    if depth == 0 || rng.gen_bool(0.2) {
        return TreeNode::Leaf {
            weight: rng.gen_range(-2.0..2.0),
            cover: rng.gen_range(0.5..10.0),
        };
    }
    let left = random_tree(rng, depth - 1, features);
    let right = random_tree(rng, depth - 1, features);
    TreeNode::Split {
        feature: rng.gen_range(0..features),
        threshold: rng.gen_range(-1.0..1.0),
        cover: left.cover() + right.cover(),
        left: Box::new(left),
        right: Box::new(right),
    }
}

pub fn random_ensemble(rng: &mut ChaCha8Rng, max_trees: usize, max_depth: usize, max_features: usize) -> GBDTModel {
    let features = rng.gen_range(1..=max_features);
    let n_trees = rng.gen_range(1..=max_trees);
    GBDTModel {
        num_features: features,
        base_score: rng.gen_range(-1.0..1.0),
        learning_rate: rng.gen_range(0.05..1.0),
        lambda_l2: 1.0,
        trees: (0..n_trees).map(|_| random_tree(rng, max_depth, features)).collect(),
    }
}

/// Expected tree output when only the features in `known` (a bit mask) are
/// observed; unknown splits average children by cover.
fn conditional_value(node: &TreeNode, x: &[f64], known: u32) -> f64 {
    match node {
        TreeNode::Leaf { weight, .. } => *weight,
        TreeNode::Split {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            if known & (1 << feature) != 0 {
                let child = if x[*feature] < *threshold { left } else { right };
                conditional_value(child, x, known)
            } else {
                (left.cover() * conditional_value(left, x, known) + right.cover() * conditional_value(right, x, known))
                    / cover
            }
        }
    }
}

pub fn ensemble_value(m: &GBDTModel, x: &[f64], known: u32) -> f64 {
    m.base_score + m.learning_rate * m.trees.iter().map(|t| conditional_value(t, x, known)).sum::<f64>()
}

/// Shapley values by enumerating every coalition.
pub fn brute_force_shapley(m: &GBDTModel, x: &[f64]) -> (Vec<f64>, f64) {
    let d = m.num_features;
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let total = fact(d);
    let mut phi = vec![0.0; d];
    for (j, p) in phi.iter_mut().enumerate() {
        for s in 0u32..(1 << d) {
            if s & (1 << j) != 0 {
                continue;
            }
            let size = s.count_ones() as usize;
            let w = fact(size) * fact(d - size - 1) / total;
            *p += w * (ensemble_value(m, x, s | (1 << j)) - ensemble_value(m, x, s));
        }
    }
    (phi, ensemble_value(m, x, 0))
}

use spamdetect::graph::{
    betweenness_centrality, degree_centrality, eigenvector_centrality, pagerank, Direction, GraphError,
    PageRankParams,
};
use spamdetect::models::{logloss_grad_hess, logreg_loss_grad, sigmoid, LogRegModel};
use spamdetect::select::{shap_base_value, tree_shap};

pub const ORACLE_TOL: f64 = 1e-6;

/// Centralities of 50 random directed graphs against the dense oracles.
/// Returns the number of (graph, direction) eigenvector cases that converged.
pub fn centrality_suite(seed: u64) -> Result<usize, String> {
    let mut rng = rng(seed);
    let mut converged = 0;
    for gi in 0..50 {
        let n = rng.gen_range(5..=50);
        let g = random_digraph(&mut rng, n, 0.1);
        let a = dense_adjacency(&g);
        let check = |what: &str, got: &[f64], want: &[f64]| {
            let e = max_abs_diff(got, want);
            if e <= ORACLE_TOL {
                Ok(())
            } else {
                Err(format!("graph {gi} (n={n}): {what} off by {e:e}"))
            }
        };
        check("degree", &degree_centrality(&g).unwrap(), &dense_degree(&a))?;
        check("betweenness", &betweenness_centrality(&g).unwrap(), &dense_betweenness(&a))?;
        let pr = pagerank(&g, PageRankParams::default()).map_err(|e| format!("graph {gi}: {e}"))?;
        check("pagerank", &pr, &dense_pagerank(&a, 0.85))?;
        let sum: f64 = pr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("graph {gi}: pagerank sums to {sum}"));
        }
        for (dir, incoming) in [(Direction::In, true), (Direction::Out, false)] {
            let got = eigenvector_centrality(&g, dir);
            match (got, dense_eigenvector(&a, incoming)) {
                (Ok(v), EigenOracle::Vector(w)) => {
                    check(&format!("{dir:?} eigenvector"), &v, &w)?;
                    converged += 1;
                }
                (Err(GraphError::NotConverged { .. } | GraphError::NoEdges), EigenOracle::Vanishes | EigenOracle::Periodic) => {}
                (got, _) => {
                    return Err(format!(
                        "graph {gi} (n={n}): {dir:?} eigenvector convergence disagrees with oracle ({})",
                        if got.is_ok() { "converged" } else { "did not converge" }
                    ))
                }
            }
        }
    }
    Ok(converged)
}

/// TreeSHAP against subset enumeration on 100 random ensembles, plus local
/// accuracy on every evaluation row. Returns the worst error seen.
pub fn treeshap_suite(seed: u64) -> Result<f64, String> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for ei in 0..100 {
        let m = random_ensemble(&mut rng, 5, 3, 6);
        for _ in 0..10 {
            let x: Vec<f64> = (0..m.num_features).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let phi = tree_shap(&m, &x).map_err(|e| e.to_string())?;
            let base = shap_base_value(&m);
            let (want, want_base) = brute_force_shapley(&m, &x);
            let e = max_abs_diff(&phi, &want).max((base - want_base).abs());
            let local = (phi.iter().sum::<f64>() + base - m.margin(&x).unwrap()).abs();
            worst = worst.max(e).max(local);
            if e > 1e-9 {
                return Err(format!("ensemble {ei}: shapley off by {e:e}"));
            }
            if local > 1e-9 {
                return Err(format!("ensemble {ei}: local accuracy off by {local:e}"));
            }
        }
    }
    Ok(worst)
}

fn softplus(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

/// Finite-difference checks of the logistic-regression gradient and the
/// boosting gradient/hessian at 100 random points each. Returns the worst error.
pub fn gradient_suite(seed: u64) -> Result<f64, String> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for k in 0..100 {
        let d = rng.gen_range(1..6);
        let n = rng.gen_range(3..12);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let l2 = rng.gen_range(0.0..0.1);
        let model = LogRegModel {
            weights: (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            bias: rng.gen_range(-1.0..1.0),
        };
        let (_, gw, gb) = logreg_loss_grad(&model, &x, &y, l2);
        let loss_at = |m: &LogRegModel| logreg_loss_grad(m, &x, &y, l2).0;
        for j in 0..=d {
            let (mut hi, mut lo) = (model.clone(), model.clone());
            if j < d {
                hi.weights[j] += h;
                lo.weights[j] -= h;
            } else {
                hi.bias += h;
                lo.bias -= h;
            }
            let fd = (loss_at(&hi) - loss_at(&lo)) / (2.0 * h);
            let analytic = if j < d { gw[j] } else { gb };
            let e = (fd - analytic).abs();
            worst = worst.max(e);
            if e > 1e-5 {
                return Err(format!("logreg point {k}, coordinate {j}: gradient off by {e:e}"));
            }
        }

        let m = rng.gen_range(-6.0..6.0);
        let yi: u8 = rng.gen_range(0..2);
        let loss = |m: f64| softplus(m) - f64::from(yi) * m;
        let (g, hs) = logloss_grad_hess(sigmoid(m), yi);
        let fd_g = (loss(m + h) - loss(m - h)) / (2.0 * h);
        let hh = 1e-4;
        let fd_h = (loss(m + hh) - 2.0 * loss(m) + loss(m - hh)) / (hh * hh);
        let e = (fd_g - g).abs().max((fd_h - hs).abs());
        worst = worst.max(e);
        if e > 1e-5 {
            return Err(format!("boosting point {k} (m={m}, y={yi}): g/h off by {e:e}"));
        }
    }
    Ok(worst)
}

/// Two 10-cliques (mutual follows) joined by one edge.
pub fn barbell() -> SocialGraph {
    let mut edges = Vec::new();
    for base in [0, 10] {
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    edges.push((base + i, base + j));
                }
            }
        }
    }
    edges.push((9, 10));
    SocialGraph::from_index_edges(20, &edges)
}

/// Mean cosine within the barbell's cliques minus the mean across them.
pub fn intra_minus_inter(m: &spamdetect::embed::EmbeddingMatrix) -> f64 {
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for a in 0..20 {
        for b in (a + 1)..20 {
            let c = m.cosine(a, b);
            if (a < 10) == (b < 10) {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                nx += 1;
            }
        }
    }
    intra / ni as f64 - inter / nx as f64
}
