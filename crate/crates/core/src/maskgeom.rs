//! Signed distance fields from instance masks and mask overlap utilities.
//!
//! The distance transform is the exact two-pass squared-EDT: 1D sweeps
//! along rows, then a parabola lower-envelope pass along columns. All
//! squared distances are integers, so results are exact in f64.

use thiserror::Error;

use crate::grid::{Grid, LabelMap};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("mask resolution mismatch: {a:?} vs {b:?}")]
    ResolutionMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("instance {instance}: empty mask")]
    EmptyMask { instance: u8 },
}

/// Signed distance field. Positive outside the mask (distance to the
/// nearest foreground pixel center), non-positive inside (distance to the
/// nearest background pixel center, negated).
#[derive(Debug, Clone)]
pub struct Sdf {
    pub phi: Grid,
    /// Set when the mask covered the whole frame; phi is all zeros then
    /// because no boundary exists.
    pub full_frame: bool,
}

pub fn instance_sdf(mask: &LabelMap, instance: u8) -> Result<Sdf, MaskError> {
    let binary = mask.binary(instance);
    signed_distance_field(&binary, mask.height(), mask.width(), instance)
}

pub fn signed_distance_field(
    mask: &[bool],
    h: usize,
    w: usize,
    instance: u8,
) -> Result<Sdf, MaskError> {
    assert_eq!(mask.len(), h * w);
    let fg = mask.iter().filter(|&&v| v).count();
    if fg == 0 {
        return Err(MaskError::EmptyMask { instance });
    }
    if fg == h * w {
        return Ok(Sdf {
            phi: Grid::zeros(h, w, 1),
            full_frame: true,
        });
    }
    let outside_sq = squared_edt(mask, h, w);
    let inverted: Vec<bool> = mask.iter().map(|&v| !v).collect();
    let inside_sq = squared_edt(&inverted, h, w);
    let mut phi = Grid::zeros(h, w, 1);
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let v = if mask[i] {
                -inside_sq[i].sqrt()
            } else {
                outside_sq[i].sqrt()
            };
            phi.set(0, row, col, v);
        }
    }
    Ok(Sdf {
        phi,
        full_frame: false,
    })
}

/// Exact squared Euclidean distance to the nearest seed (true) pixel.
/// Seeds must be non-empty.
pub fn squared_edt(seeds: &[bool], h: usize, w: usize) -> Vec<f64> {
    const INF: f64 = 1e18;
    // Pass 1: per-row 1D distance to the nearest seed in the same row.
    let mut rowdist = vec![INF; h * w];
    for row in 0..h {
        let base = row * w;
        let mut d = INF;
        for col in 0..w {
            d = if seeds[base + col] { 0.0 } else { d + 1.0 };
            rowdist[base + col] = d.min(INF);
        }
        d = INF;
        for col in (0..w).rev() {
            d = if seeds[base + col] { 0.0 } else { d + 1.0 };
            rowdist[base + col] = rowdist[base + col].min(d);
        }
    }
    // Square (exact integers), guarding the INF sentinel.
    for v in rowdist.iter_mut() {
        if *v < INF {
            *v *= *v;
        }
    }
    // Pass 2: per-column lower envelope of parabolas.
    let mut out = vec![0.0; h * w];
    let mut f = vec![0.0; h];
    let mut v = vec![0usize; h];
    let mut z = vec![0.0; h + 1];
    for col in 0..w {
        for row in 0..h {
            f[row] = rowdist[row * w + col];
        }
        envelope_1d(&f, &mut v, &mut z, |row, d| {
            out[row * w + col] = d;
        });
    }
    out
}

/// Felzenszwalb-Huttenlocher 1D squared distance transform of a sampled
/// function f; emits the result through `sink(index, value)`.
fn envelope_1d(f: &[f64], v: &mut [usize], z: &mut [f64], mut sink: impl FnMut(usize, f64)) {
    const INF: f64 = 1e18;
    let n = f.len();
    if n == 1 {
        sink(0, f[0]);
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let p = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        sink(q, (qf - p) * (qf - p) + f[v[k]]);
    }
}

/// IoU of two binary maps (label != 0); defined as 1 when both are empty.
pub fn mask_iou(a: &LabelMap, b: &LabelMap) -> Result<f64, MaskError> {
    binary_label_iou(a, None, b, None)
}

/// IoU of one label from each map.
pub fn label_iou(a: &LabelMap, label_a: u8, b: &LabelMap, label_b: u8) -> Result<f64, MaskError> {
    binary_label_iou(a, Some(label_a), b, Some(label_b))
}

fn binary_label_iou(
    a: &LabelMap,
    label_a: Option<u8>,
    b: &LabelMap,
    label_b: Option<u8>,
) -> Result<f64, MaskError> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(MaskError::ResolutionMismatch {
            a: (a.height(), a.width()),
            b: (b.height(), b.width()),
        });
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&va, &vb) in a.data().iter().zip(b.data()) {
        let in_a = match label_a {
            Some(l) => va == l,
            None => va != 0,
        };
        let in_b = match label_b {
            Some(l) => vb == l,
            None => vb != 0,
        };
        if in_a && in_b {
            inter += 1;
        }
        if in_a || in_b {
            union += 1;
        }
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}
