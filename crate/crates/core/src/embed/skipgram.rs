use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alias::AliasTable;
use super::{EmbedError, EmbeddingMatrix, Node2VecConfig, WalkSet};

const INIT_STREAM: u64 = 0x5eed_0001;
const NEGATIVE_STREAM: u64 = 0x5eed_0002;
const EVAL_STREAM: u64 = 0x5eed_0003;
/// Upper bound on walks visited by the end-of-epoch objective evaluation.
const EVAL_WALKS: usize = 2000;

/// Per-epoch diagnostics from skip-gram training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    /// Mean negative-sampling objective per (center, context) pair, evaluated
    /// with frozen parameters after each epoch on a fixed sample of walks and
    /// a fixed negative stream, so entries are comparable across epochs.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: u64,
}

fn pairs_in_walks(walks: &[Vec<u32>], window: usize) -> u64 {
    walks
        .iter()
        .map(|w| {
            let len = w.len();
            (0..len)
                .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
                .sum::<u64>()
        })
        .sum()
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f32) -> f64 {
    let x = f64::from(x);
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Skip-gram with negative sampling; returns the center (input) vectors.
pub fn train_skipgram(walks: &WalkSet, cfg: &Node2VecConfig) -> Result<EmbeddingMatrix, EmbedError> {
    train_skipgram_with_stats(walks, cfg).map(|(m, _)| m)
}

pub fn train_skipgram_with_stats(
    walks: &WalkSet,
    cfg: &Node2VecConfig,
) -> Result<(EmbeddingMatrix, TrainStats), EmbedError> {
    cfg.validate()?;
    let n = walks.node_count();
    let dim = cfg.dimensions;
    let window = cfg.window;
    let pairs_per_epoch = pairs_in_walks(&walks.walks, window);
    if n == 0 || pairs_per_epoch == 0 {
        return Err(EmbedError::EmptyWalks);
    }

    let mut freq = vec![0.0f64; n];
    for w in &walks.walks {
        for &v in w {
            freq[v as usize] += 1.0;
        }
    }
    let noise = AliasTable::new(&freq.iter().map(|f| f.powf(0.75)).collect::<Vec<_>>())
        .ok_or(EmbedError::EmptyWalks)?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(INIT_STREAM);
    let half = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..n * dim).map(|_| init_rng.gen_range(-half..half)).collect();
    let mut output = vec![0.0f32; n * dim];
    let mut grad = vec![0.0f32; dim];

    let mut neg_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    neg_rng.set_stream(NEGATIVE_STREAM);

    let lr0 = cfg.initial_lr as f32;
    let lr_min = lr0 / 100.0;
    let total = (pairs_per_epoch * cfg.epochs as u64) as f64;
    let mut processed: u64 = 0;
    let mut stats = TrainStats {
        epoch_loss: Vec::with_capacity(cfg.epochs),
        pairs_per_epoch,
    };

    for epoch in 0..cfg.epochs {
        for walk in &walks.walks {
            let len = walk.len();
            for i in 0..len {
                let center = walk[i] as usize;
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(len - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = walk[j] as usize;
                    let progress = processed as f64 / total;
                    let lr = lr0 - (lr0 - lr_min) * progress as f32;
                    processed += 1;

                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let cvec = center * dim..(center + 1) * dim;
                    for k in 0..=cfg.negatives_per_positive {
                        let (target, label) = if k == 0 {
                            (context, 1.0f32)
                        } else {
                            let t = noise.sample(&mut neg_rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0f32)
                        };
                        let tvec = target * dim..(target + 1) * dim;
                        let f = dot(&input[cvec.clone()], &output[tvec.clone()]);
                        let g = (label - sigmoid(f)) * lr;
                        let (inp, out) = (&input[cvec.clone()], &mut output[tvec]);
                        for ((gr, o), x) in grad.iter_mut().zip(out.iter_mut()).zip(inp) {
                            *gr += g * *o;
                            *o += g * x;
                        }
                    }
                    for (x, gr) in input[cvec].iter_mut().zip(&grad) {
                        *x += gr;
                    }
                }
            }
        }
        if !input.iter().chain(&output).all(|v| v.is_finite()) {
            return Err(EmbedError::NonFinite { epoch });
        }
        stats.epoch_loss.push(objective(walks, &input, &output, &noise, cfg));
    }

    Ok((
        EmbeddingMatrix::new(walks.node_ids.clone(), dim, input.into_iter().map(f64::from).collect()),
        stats,
    ))
}

/// Mean loss per pair over an evenly strided subset of walks, parameters frozen.
fn objective(walks: &WalkSet, input: &[f32], output: &[f32], noise: &AliasTable, cfg: &Node2VecConfig) -> f64 {
    let dim = cfg.dimensions;
    let stride = walks.walks.len().div_ceil(EVAL_WALKS).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(EVAL_STREAM);
    let (mut loss, mut pairs) = (0.0f64, 0u64);
    for walk in walks.walks.iter().step_by(stride) {
        let len = walk.len();
        for i in 0..len {
            let c = walk[i] as usize;
            let cv = &input[c * dim..(c + 1) * dim];
            for j in i.saturating_sub(cfg.window)..=(i + cfg.window).min(len - 1) {
                if j == i {
                    continue;
                }
                let ctx = walk[j] as usize;
                loss += softplus(-dot(cv, &output[ctx * dim..(ctx + 1) * dim]));
                for _ in 0..cfg.negatives_per_positive {
                    let t = noise.sample(&mut rng);
                    if t != ctx {
                        loss += softplus(dot(cv, &output[t * dim..(t + 1) * dim]));
                    }
                }
                pairs += 1;
            }
        }
    }
    loss / pairs.max(1) as f64
}
