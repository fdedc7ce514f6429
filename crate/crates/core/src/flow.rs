//! Explicit warping of foreground Gaussians between frames: per-view flow
//! queries followed by multi-view DLT triangulation, with occlusion-aware
//! view selection and a reprojection-residual gate.

use nalgebra::{DMatrix, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::Camera;
use crate::grid::Grid;
use crate::raster::RenderTarget;
use crate::scene::GaussianPrimitive;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("flow field count {flows} does not match view count {views}")]
    ViewCountMismatch { flows: usize, views: usize },
    #[error("flow field {view} has {channels} channels, expected 2")]
    BadFlowChannels { view: usize, channels: usize },
}

/// Bilinearly sampled flow displacement at subpixel coordinates. Plane 0
/// is dx, plane 1 is dy. Out-of-bounds queries clamp and set the flag.
pub fn sample_flow(flow: &Grid, x: f64, y: f64) -> ([f64; 2], bool) {
    let (dx, c1) = flow.sample_bilinear(0, x, y);
    let (dy, c2) = flow.sample_bilinear(1, x, y);
    ([dx, dy], c1 || c2)
}

/// Triangulation outcome for one point.
#[derive(Debug, Clone)]
pub enum Triangulated {
    Point {
        position: Vector3<f64>,
        /// RMS reprojection residual over contributing views, pixels.
        residual: f64,
    },
    Degenerate,
}

/// Relative gap between the two smallest singular values below which the
/// homogeneous system is considered rank deficient.
const DEGENERACY_GAP: f64 = 1e-9;

/// Direct linear transform over the stacked 2Vx4 homogeneous system
/// x'(P3 X) - (P1 X) = 0, y'(P3 X) - (P2 X) = 0 per view, solved by the
/// smallest right singular vector.
pub fn triangulate(observations: &[(&Camera, Vector2<f64>)]) -> Triangulated {
    if observations.len() < 2 {
        return Triangulated::Degenerate;
    }
    let mut a = DMatrix::<f64>::zeros(2 * observations.len(), 4);
    for (i, (cam, uv)) in observations.iter().enumerate() {
        let p = cam.projection_matrix();
        for c in 0..4 {
            a[(2 * i, c)] = uv.x * p[(2, c)] - p[(0, c)];
            a[(2 * i + 1, c)] = uv.y * p[(2, c)] - p[(1, c)];
        }
    }
    let svd = nalgebra::SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    // Singular values come sorted in descending order.
    let sv = &svd.singular_values;
    let s2 = sv[2];
    let s3 = sv[3];
    if s2 <= 0.0 || (s2 - s3) / s2 < DEGENERACY_GAP {
        return Triangulated::Degenerate;
    }
    let x = v_t.row(3);
    if x[3].abs() < 1e-300 {
        return Triangulated::Degenerate;
    }
    let position = Vector3::new(x[0] / x[3], x[1] / x[3], x[2] / x[3]);
    if !position.iter().all(|v| v.is_finite()) {
        return Triangulated::Degenerate;
    }
    let mut sq_sum = 0.0;
    for (cam, uv) in observations {
        match cam.project(&position) {
            Some(proj) => sq_sum += (proj - uv).norm_squared(),
            None => return Triangulated::Degenerate,
        }
    }
    let residual = (sq_sum / observations.len() as f64).sqrt();
    Triangulated::Point { position, residual }
}

/// Independent oracle for the same homogeneous system: smallest eigenvector
/// of A^T A via symmetric eigendecomposition. Test-only route kept separate
/// from the SVD path.
pub fn triangulate_normal_equations(observations: &[(&Camera, Vector2<f64>)]) -> Option<Vector3<f64>> {
    if observations.len() < 2 {
        return None;
    }
    let mut a = DMatrix::<f64>::zeros(2 * observations.len(), 4);
    for (i, (cam, uv)) in observations.iter().enumerate() {
        let p = cam.projection_matrix();
        for c in 0..4 {
            a[(2 * i, c)] = uv.x * p[(2, c)] - p[(0, c)];
            a[(2 * i + 1, c)] = uv.y * p[(2, c)] - p[(1, c)];
        }
    }
    let ata = a.transpose() * &a;
    let eig = nalgebra::SymmetricEigen::new(ata);
    let mut best = 0;
    for i in 1..4 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let x = eig.eigenvectors.column(best);
    if x[3].abs() < 1e-300 {
        return None;
    }
    Some(Vector3::new(x[0] / x[3], x[1] / x[3], x[2] / x[3]))
}

/// Configuration for the explicit warp.
#[derive(Debug, Clone)]
pub struct WarpConfig {
    /// Minimum blend-weight contribution at the projected pixel in the
    /// previous frame's render for a view to count as unoccluded.
    pub visibility_threshold: f64,
    /// Reprojection-residual gate in pixels; above it the primitive keeps
    /// its previous position.
    pub residual_gate: f64,
}

impl Default for WarpConfig {
    fn default() -> Self {
        Self {
            visibility_threshold: 0.05,
            residual_gate: 3.0,
        }
    }
}

/// Per-primitive outcome bookkeeping for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct WarpStats {
    pub warped: usize,
    pub fallback_degenerate: usize,
    pub fallback_residual: usize,
    pub fallback_invisible: usize,
}

/// Warp foreground positions from frame t-1 to t. Only positions change;
/// count and every other attribute carry over. `prev_renders` are the
/// previous frame's render targets (one per view) over bg+fg with the
/// foreground occupying indices `fg_offset..`.
pub fn warp_foreground(
    fg: &[GaussianPrimitive],
    fg_offset: usize,
    cameras: &[Camera],
    flows: &[Grid],
    prev_renders: &[RenderTarget],
    cfg: &WarpConfig,
) -> Result<(Vec<[f64; 3]>, WarpStats), FlowError> {
    if flows.len() != cameras.len() {
        return Err(FlowError::ViewCountMismatch {
            flows: flows.len(),
            views: cameras.len(),
        });
    }
    for (v, flow) in flows.iter().enumerate() {
        if flow.channels() != 2 {
            return Err(FlowError::BadFlowChannels {
                view: v,
                channels: flow.channels(),
            });
        }
    }

    let results: Vec<([f64; 3], u8)> = fg
        .par_iter()
        .enumerate()
        .map(|(i, prim)| {
            let p_prev = prim.position_v();
            let mut obs: Vec<(&Camera, Vector2<f64>)> = Vec::new();
            for (v, cam) in cameras.iter().enumerate() {
                let Some(uv) = cam.project(&p_prev) else {
                    continue;
                };
                // Occlusion test against the previous frame's render.
                let (row, col) = (uv.y.round() as i64, uv.x.round() as i64);
                if row < 0 || col < 0 || row >= cam.height as i64 || col >= cam.width as i64 {
                    continue;
                }
                let weight = prev_renders[v].contribution_of(
                    (fg_offset + i) as u32,
                    row as usize,
                    col as usize,
                );
                if weight <= cfg.visibility_threshold {
                    continue;
                }
                let (d, _clamped) = sample_flow(&flows[v], uv.x, uv.y);
                if !d[0].is_finite() || !d[1].is_finite() {
                    continue;
                }
                obs.push((cam, Vector2::new(uv.x + d[0], uv.y + d[1])));
            }
            if obs.len() < 2 {
                return (prim.position, 1u8); // invisible fallback
            }
            match triangulate(&obs) {
                Triangulated::Point { position, residual } => {
                    if residual > cfg.residual_gate {
                        (prim.position, 3)
                    } else {
                        ([position.x, position.y, position.z], 0)
                    }
                }
                Triangulated::Degenerate => (prim.position, 2),
            }
        })
        .collect();

    let mut stats = WarpStats::default();
    let positions = results
        .into_iter()
        .map(|(p, code)| {
            match code {
                0 => stats.warped += 1,
                1 => stats.fallback_invisible += 1,
                2 => stats.fallback_degenerate += 1,
                _ => stats.fallback_residual += 1,
            }
            p
        })
        .collect();
    Ok((positions, stats))
}
