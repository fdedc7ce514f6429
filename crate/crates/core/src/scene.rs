//! Core scene representation: Gaussian primitives with appearance and
//! semantic attributes, the two-layer scene model, and spatial queries.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::grid::{Grid, LabelMap};
use crate::math::{self, quat_normalize, quat_to_matrix};

pub const SH_CHANNELS: usize = 3;
pub const SH_PER_CHANNEL: usize = math::SH_COEFFS_PER_CHANNEL;
pub const SH_TOTAL: usize = SH_CHANNELS * SH_PER_CHANNEL;
pub const FEATURE_DIM: usize = 8;
pub const COMPRESSED_EMB_DIM: usize = 6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("primitive {index}: non-finite parameter in {field}")]
    NonFinite { index: usize, field: &'static str },
    #[error("knn requires k < point count (k={k}, n={n})")]
    KnnTooFewPoints { k: usize, n: usize },
    #[error("background reference length {refs} does not match background count {bg}")]
    ReferenceMismatch { refs: usize, bg: usize },
}

/// An anisotropic 3D Gaussian with appearance and semantic attributes.
///
/// Scale is stored as a log and opacity as a logit so the raw parameters
/// are unconstrained under gradient steps. `sh` is channel-major:
/// `sh[channel * 16 + coeff]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub position: [f64; 3],
    /// Unit quaternion [w, x, y, z].
    pub rotation: [f64; 4],
    pub log_scale: [f64; 3],
    pub opacity_logit: f64,
    pub sh: [f64; SH_TOTAL],
    pub feature: [f64; FEATURE_DIM],
}

impl GaussianPrimitive {
    /// Flat solid-color primitive: only the SH DC term is set.
    pub fn flat(position: [f64; 3], scale: f64, opacity_logit: f64, rgb: [f64; 3]) -> Self {
        let mut sh = [0.0; SH_TOTAL];
        for (ch, v) in rgb.iter().enumerate() {
            // Invert the DC shading so the rendered color equals `rgb`.
            sh[ch * SH_PER_CHANNEL] = (v - 0.5) / 0.282_094_791_773_878_14;
        }
        Self {
            position,
            rotation: [1.0, 0.0, 0.0, 0.0],
            log_scale: [scale.ln(); 3],
            opacity_logit,
            sh,
            feature: [0.0; FEATURE_DIM],
        }
    }

    pub fn position_v(&self) -> Vector3<f64> {
        Vector3::from_column_slice(&self.position)
    }

    pub fn is_finite(&self) -> Option<&'static str> {
        if !self.position.iter().all(|v| v.is_finite()) {
            return Some("position");
        }
        if !self.rotation.iter().all(|v| v.is_finite()) {
            return Some("rotation");
        }
        if !self.log_scale.iter().all(|v| v.is_finite()) {
            return Some("log_scale");
        }
        if !self.opacity_logit.is_finite() {
            return Some("opacity_logit");
        }
        if !self.sh.iter().all(|v| v.is_finite()) {
            return Some("sh");
        }
        if !self.feature.iter().all(|v| v.is_finite()) {
            return Some("feature");
        }
        None
    }
}

/// Activated (constrained-space) view of a primitive.
#[derive(Debug, Clone)]
pub struct Activated {
    pub scale: [f64; 3],
    pub opacity: f64,
    pub covariance: Matrix3<f64>,
    pub rotation_matrix: Matrix3<f64>,
}

/// Maps raw parameters to world-space scale, opacity and covariance
/// `Sigma = R(q) diag(s^2) R(q)^T`. The quaternion is normalized inside so
/// the result is well defined for slightly off-unit rotations.
pub fn activate(prim: &GaussianPrimitive, index: usize) -> Result<Activated, SceneError> {
    if let Some(field) = prim.is_finite() {
        return Err(SceneError::NonFinite { index, field });
    }
    let q = quat_normalize(&prim.rotation);
    let r = quat_to_matrix(&q);
    let scale = [
        prim.log_scale[0].exp(),
        prim.log_scale[1].exp(),
        prim.log_scale[2].exp(),
    ];
    let d = Matrix3::from_diagonal(&Vector3::new(
        scale[0] * scale[0],
        scale[1] * scale[1],
        scale[2] * scale[2],
    ));
    Ok(Activated {
        scale,
        opacity: math::sigmoid(prim.opacity_logit),
        covariance: r * d * r.transpose(),
        rotation_matrix: r,
    })
}

/// Partials of the 3D covariance w.r.t. the raw quaternion (through
/// normalization) and the log scales. Shared by the rasterizer backward
/// pass and the activation continuity tests.
pub fn covariance_jacobians(prim: &GaussianPrimitive) -> ([Matrix3<f64>; 4], [Matrix3<f64>; 3]) {
    let q = quat_normalize(&prim.rotation);
    let r = quat_to_matrix(&q);
    let s2 = [
        (2.0 * prim.log_scale[0]).exp(),
        (2.0 * prim.log_scale[1]).exp(),
        (2.0 * prim.log_scale[2]).exp(),
    ];
    let d = Matrix3::from_diagonal(&Vector3::new(s2[0], s2[1], s2[2]));

    // d Sigma / d q_hat, then chain through the normalization Jacobian.
    let dr = math::quat_to_matrix_jacobian(&q);
    let nj = math::quat_normalize_jacobian(&prim.rotation);
    let mut dq = [Matrix3::zeros(); 4];
    for raw in 0..4 {
        let mut acc = Matrix3::zeros();
        for unit in 0..4 {
            let w = nj[unit][raw];
            if w != 0.0 {
                let dr_u = dr[unit];
                acc += w * (dr_u * d * r.transpose() + r * d * dr_u.transpose());
            }
        }
        dq[raw] = acc;
    }

    let mut dls = [Matrix3::zeros(); 3];
    for k in 0..3 {
        let mut dd = Matrix3::zeros();
        dd[(k, k)] = 2.0 * s2[k]; // d(exp(2 ls_k))/d ls_k
        dls[k] = r * dd * r.transpose();
    }
    (dq, dls)
}

/// Two-layer scene: static background plus dynamic foreground, with the
/// background appearance snapshot taken at the end of background training.
#[derive(Debug, Clone, Default)]
pub struct SceneModel {
    pub bg: Vec<GaussianPrimitive>,
    pub fg: Vec<GaussianPrimitive>,
    pub bg_reference: Vec<BgAppearance>,
    pub frame_index: i32,
}

/// Appearance snapshot of one background primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct BgAppearance {
    pub sh: [f64; SH_TOTAL],
    pub opacity_logit: f64,
}

impl SceneModel {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.bg_reference.len() != self.bg.len() {
            return Err(SceneError::ReferenceMismatch {
                refs: self.bg_reference.len(),
                bg: self.bg.len(),
            });
        }
        Ok(())
    }

    pub fn snapshot_bg_reference(&mut self) {
        self.bg_reference = self
            .bg
            .iter()
            .map(|p| BgAppearance {
                sh: p.sh,
                opacity_logit: p.opacity_logit,
            })
            .collect();
    }

    /// Background and foreground concatenated in render order
    /// (bg first; contributor indices >= bg.len() are foreground).
    pub fn all_primitives(&self) -> Vec<GaussianPrimitive> {
        let mut out = Vec::with_capacity(self.bg.len() + self.fg.len());
        out.extend_from_slice(&self.bg);
        out.extend_from_slice(&self.fg);
        out
    }
}

/// Per-frame observation bundle: images, aligned instance masks, optical
/// flow from the previous frame, and per-instance embeddings.
#[derive(Debug, Clone)]
pub struct FrameBundle {
    pub frame: usize,
    pub images: Vec<Grid>,
    pub masks: Vec<LabelMap>,
    /// Flow fields t-1 -> t, one per view; empty for the first frame.
    pub flows: Vec<Grid>,
    /// Raw per-instance embeddings, row d-1 belongs to instance d.
    pub instance_embeddings: Vec<Vec<f64>>,
    /// 6-dim compressed embeddings, same row convention.
    pub compressed_embeddings: Vec<[f64; COMPRESSED_EMB_DIM]>,
}

/// k nearest neighbors per point (self excluded), each row sorted by
/// ascending distance with ties broken by ascending index.
pub fn knn_neighbors(points: &[[f64; 3]], k: usize) -> Result<Vec<Vec<usize>>, SceneError> {
    let n = points.len();
    if k >= n {
        return Err(SceneError::KnnTooFewPoints { k, n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pi = points[i];
        let mut dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d = [
                    points[j][0] - pi[0],
                    points[j][1] - pi[1],
                    points[j][2] - pi[2],
                ];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2], j)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(dist[..k].iter().map(|&(_, j)| j).collect());
    }
    Ok(out)
}
