//! Semantic supervision terms: per-pixel instance cross-entropy, the L1
//! embedding loss, and the KL spatial-consistency regularizer over
//! neighboring Gaussians.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::heads::Mlp;
use crate::losses::LossError;
use crate::scene::{knn_neighbors, FEATURE_DIM};

const PROB_CLAMP: f64 = 1e-8;

/// Row-wise softmax of logits, rows x classes.
pub fn softmax_rows(logits: &[f64], classes: usize) -> Vec<f64> {
    let rows = logits.len() / classes;
    let mut out = vec![0.0; logits.len()];
    for r in 0..rows {
        let row = &logits[r * classes..(r + 1) * classes];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (o, &v) in out[r * classes..(r + 1) * classes].iter_mut().zip(row) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in out[r * classes..(r + 1) * classes].iter_mut() {
            *o /= sum;
        }
    }
    out
}

/// Mean cross-entropy between per-pixel class probabilities and mask
/// labels. Returns the gradient on the LOGITS via the softmax identity
/// (P - y) / rows.
pub fn id_loss(
    probs: &[f64],
    labels: &[u8],
    classes: usize,
) -> Result<(f64, Vec<f64>), LossError> {
    let rows = labels.len();
    if probs.len() != rows * classes {
        return Err(LossError::Shape(format!(
            "{} probabilities for {} pixels x {} classes",
            probs.len(),
            rows,
            classes
        )));
    }
    let mut value = 0.0;
    let mut d_logits = vec![0.0; probs.len()];
    let inv = 1.0 / rows as f64;
    for r in 0..rows {
        let row = &probs[r * classes..(r + 1) * classes];
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-5 {
            return Err(LossError::NotASimplex { pixel: r, sum });
        }
        let label = labels[r] as usize;
        if label >= classes {
            return Err(LossError::LabelOutOfRange {
                pixel: r,
                label: labels[r],
                max: (classes - 1) as u8,
            });
        }
        value -= row[label].max(PROB_CLAMP).ln() * inv;
        let d = &mut d_logits[r * classes..(r + 1) * classes];
        for (c, (dv, &p)) in d.iter_mut().zip(row).enumerate() {
            *dv = (p - if c == label { 1.0 } else { 0.0 }) * inv;
        }
    }
    Ok((value, d_logits))
}

/// Mean L1 between predicted and target per-pixel embeddings over valid
/// pixels, averaged over components. Gradient is the L1 subgradient
/// sign(pred - target) / (valid * dim).
pub fn emb_loss(
    pred: &[f64],
    target: &[f64],
    valid: &[bool],
    dim: usize,
) -> Result<(f64, Vec<f64>), LossError> {
    if pred.len() != target.len() || pred.len() != valid.len() * dim {
        return Err(LossError::Shape(format!(
            "emb shapes: pred {}, target {}, valid {} x dim {}",
            pred.len(),
            target.len(),
            valid.len(),
            dim
        )));
    }
    let count = valid.iter().filter(|&&v| v).count();
    let mut d_pred = vec![0.0; pred.len()];
    if count == 0 {
        return Ok((0.0, d_pred));
    }
    let norm = 1.0 / (count * dim) as f64;
    let mut value = 0.0;
    for (r, &keep) in valid.iter().enumerate() {
        if !keep {
            continue;
        }
        for c in 0..dim {
            let i = r * dim + c;
            let diff = pred[i] - target[i];
            value += diff.abs() * norm;
            d_pred[i] = diff.signum() * norm;
        }
    }
    Ok((value, d_pred))
}

#[derive(Debug, Clone)]
pub struct Kl3dLoss {
    pub value: f64,
    pub d_features: Vec<[f64; FEATURE_DIM]>,
    pub sampled: usize,
}

/// Spatial consistency: mean KL divergence between each sampled Gaussian's
/// class distribution and its k nearest neighbors'. Probabilities come from
/// the classifier applied per Gaussian; gradients flow to the features of
/// both endpoints (the classifier itself is not trained by this term).
pub fn kl3d_loss(
    features: &[[f64; FEATURE_DIM]],
    positions: &[[f64; 3]],
    sample_count: usize,
    k: usize,
    classifier: &Mlp,
    rng: &mut impl Rng,
) -> Result<Kl3dLoss, LossError> {
    let n = features.len();
    if n < k + 1 {
        return Err(LossError::TooFewForKnn { n, k });
    }
    let neighbors = knn_neighbors(positions, k).expect("n > k checked");
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    let sampled: Vec<usize> = indices.into_iter().take(sample_count.min(n)).collect();

    // One classifier pass over all features.
    let classes = classifier.out_dim();
    let flat: Vec<f64> = features.iter().flatten().copied().collect();
    let cache = classifier
        .forward(&flat, n)
        .map_err(|e| LossError::Shape(e.to_string()))?;
    let probs = softmax_rows(&cache.output, classes);

    let inv = 1.0 / (sampled.len() * k) as f64;
    let mut value = 0.0;
    let mut d_logits = vec![0.0; n * classes];
    for &i in &sampled {
        let p = &probs[i * classes..(i + 1) * classes];
        for &j in &neighbors[i] {
            let q = &probs[j * classes..(j + 1) * classes];
            let mut kl = 0.0;
            for c in 0..classes {
                let pc = p[c].clamp(PROB_CLAMP, 1.0);
                let qc = q[c].clamp(PROB_CLAMP, 1.0);
                kl += pc * (pc / qc).ln();
            }
            value += kl * inv;
            // d KL / d z_i[c] = p_c (log(p_c/q_c) - KL);
            // d KL / d z_j[c] = q_c - p_c.
            for c in 0..classes {
                let pc = p[c].clamp(PROB_CLAMP, 1.0);
                let qc = q[c].clamp(PROB_CLAMP, 1.0);
                d_logits[i * classes + c] += inv * pc * ((pc / qc).ln() - kl);
                d_logits[j * classes + c] += inv * (q[c] - p[c]);
            }
        }
    }

    let grads = classifier
        .backward(&cache, &d_logits)
        .map_err(|e| LossError::Shape(e.to_string()))?;
    let mut d_features = vec![[0.0; FEATURE_DIM]; n];
    for (i, d) in d_features.iter_mut().enumerate() {
        d.copy_from_slice(&grads.input[i * FEATURE_DIM..(i + 1) * FEATURE_DIM]);
    }
    Ok(Kl3dLoss {
        value,
        d_features,
        sampled: sampled.len(),
    })
}
