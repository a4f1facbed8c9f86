//! Path-dependent TreeSHAP: exact Shapley values of the cover-weighted
//! conditional expectation, in polynomial time per tree.

use rayon::prelude::*;

use crate::models::{GBDTModel, ModelError, TreeNode};

#[derive(Debug, Clone, Copy)]
struct PathElem {
    /// Feature index, or `usize::MAX` for the root sentinel.
    feature: usize,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: usize) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let lf = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / lf;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / lf;
    }
}

fn unwind(path: &mut Vec<PathElem>, i: usize) {
    let l = path.len() - 1;
    let (one, zero) = (path[i].one, path[i].zero);
    let lf = (l + 1) as f64;
    let mut n = path[l].weight;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = path[j].weight;
            path[j].weight = n * lf / ((j + 1) as f64 * one);
            n = t - path[j].weight * zero * (l - j) as f64 / lf;
        } else {
            path[j].weight = path[j].weight * lf / (zero * (l - j) as f64);
        }
    }
    for j in i..l {
        path[j].feature = path[j + 1].feature;
        path[j].zero = path[j + 1].zero;
        path[j].one = path[j + 1].one;
    }
    path.pop();
}

/// Total permutation weight of the path with element `i` removed.
fn unwound_sum(path: &[PathElem], i: usize) -> f64 {
    let l = path.len() - 1;
    let (one, zero) = (path[i].one, path[i].zero);
    let lf = (l + 1) as f64;
    let mut n = path[l].weight;
    let mut total = 0.0;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = n * lf / ((j + 1) as f64 * one);
            total += t;
            n = path[j].weight - t * zero * (l - j) as f64 / lf;
        } else {
            total += path[j].weight / zero * lf / (l - j) as f64;
        }
    }
    total
}

fn recurse(
    node: &TreeNode,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElem>,
    zero: f64,
    one: f64,
    feature: usize,
) {
    extend(&mut path, zero, one, feature);
    match node {
        TreeNode::Leaf { weight, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let e = path[i];
                phi[e.feature] += w * (e.one - e.zero) * weight;
            }
        }
        TreeNode::Split {
            feature: f,
            threshold,
            cover,
            left,
            right,
        } => {
            let (hot, cold) = if x[*f] < *threshold { (left, right) } else { (right, left) };
            let (mut iz, mut io) = (1.0, 1.0);
            if let Some(k) = (1..path.len()).find(|&k| path[k].feature == *f) {
                iz = path[k].zero;
                io = path[k].one;
                unwind(&mut path, k);
            }
            recurse(hot, x, phi, path.clone(), iz * hot.cover() / cover, io, *f);
            recurse(cold, x, phi, path, iz * cold.cover() / cover, 0.0, *f);
        }
    }
}

/// Cover-weighted mean leaf value of a tree.
pub fn expected_value(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { weight, .. } => *weight,
        TreeNode::Split {
            cover, left, right, ..
        } => (left.cover() * expected_value(left) + right.cover() * expected_value(right)) / cover,
    }
}

/// Margin predicted when no feature is known.
pub fn shap_base_value(m: &GBDTModel) -> f64 {
    m.base_score + m.learning_rate * m.trees.iter().map(expected_value).sum::<f64>()
}

/// Per-feature contributions to the raw margin at `x`. Together with
/// [`shap_base_value`] they sum to `m.margin(x)`.
pub fn tree_shap(m: &GBDTModel, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    if x.len() != m.num_features {
        return Err(ModelError::DimensionMismatch {
            expected: m.num_features,
            got: x.len(),
        });
    }
    let mut phi = vec![0.0; m.num_features];
    for t in &m.trees {
        let mut tree_phi = vec![0.0; m.num_features];
        recurse(t, x, &mut tree_phi, Vec::new(), 1.0, 1.0, usize::MAX);
        for (p, v) in phi.iter_mut().zip(tree_phi) {
            *p += m.learning_rate * v;
        }
    }
    Ok(phi)
}

/// [`tree_shap`] over many rows, in parallel. Output order follows `rows`.
pub fn tree_shap_rows(m: &GBDTModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
    rows.par_iter().map(|r| tree_shap(m, r)).collect()
}
