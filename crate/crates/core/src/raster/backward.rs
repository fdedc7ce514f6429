//! Analytic backward pass through the alpha blend, the EWA projection, the
//! covariance activation and the SH shading. Gradient accumulation uses
//! per-tile buffers merged in tile order, so results are thread-count
//! independent.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use super::forward::RenderTarget;
use super::project::projection_jacobian;
use super::{RasterConfig, RasterError};
use crate::camera::Camera;
use crate::grid::Grid;
use crate::math::{sh_basis, sh_basis_grad};
use crate::scene::{
    activate, covariance_jacobians, GaussianPrimitive, FEATURE_DIM, SH_PER_CHANNEL, SH_TOTAL,
};

/// Upstream gradients on the rasterizer outputs.
pub struct Upstream<'a> {
    pub d_color: &'a Grid,
    pub d_feature: &'a Grid,
    pub d_alpha: &'a Grid,
}

/// Per-primitive parameter gradients plus the densification statistic.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub position: Vec<[f64; 3]>,
    pub rotation: Vec<[f64; 4]>,
    pub log_scale: Vec<[f64; 3]>,
    pub opacity_logit: Vec<f64>,
    pub sh: Vec<[f64; SH_TOTAL]>,
    pub feature: Vec<[f64; FEATURE_DIM]>,
    /// ||dL/dmean2d|| per primitive for this render.
    pub mean2d_norm: Vec<f64>,
    pub visible: Vec<bool>,
}

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Self {
            position: vec![[0.0; 3]; n],
            rotation: vec![[0.0; 4]; n],
            log_scale: vec![[0.0; 3]; n],
            opacity_logit: vec![0.0; n],
            sh: vec![[0.0; SH_TOTAL]; n],
            feature: vec![[0.0; FEATURE_DIM]; n],
            mean2d_norm: vec![0.0; n],
            visible: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.opacity_logit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opacity_logit.is_empty()
    }

    /// Elementwise accumulate (densification stats are summed as well).
    pub fn accumulate(&mut self, other: &Gradients) {
        assert_eq!(self.len(), other.len());
        for i in 0..self.len() {
            for a in 0..3 {
                self.position[i][a] += other.position[i][a];
                self.log_scale[i][a] += other.log_scale[i][a];
            }
            for a in 0..4 {
                self.rotation[i][a] += other.rotation[i][a];
            }
            self.opacity_logit[i] += other.opacity_logit[i];
            for a in 0..SH_TOTAL {
                self.sh[i][a] += other.sh[i][a];
            }
            for a in 0..FEATURE_DIM {
                self.feature[i][a] += other.feature[i][a];
            }
            self.mean2d_norm[i] += other.mean2d_norm[i];
            self.visible[i] |= other.visible[i];
        }
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        for i in 0..self.len() {
            let finite = self.position[i].iter().all(|v| v.is_finite())
                && self.rotation[i].iter().all(|v| v.is_finite())
                && self.log_scale[i].iter().all(|v| v.is_finite())
                && self.opacity_logit[i].is_finite()
                && self.sh[i].iter().all(|v| v.is_finite())
                && self.feature[i].iter().all(|v| v.is_finite());
            if !finite {
                return Some(i);
            }
        }
        None
    }
}

#[derive(Clone, Copy)]
struct Partial {
    mean2d: [f64; 2],
    cov2d: [f64; 3],
    color: [f64; 3],
    sigma: f64,
    feature: [f64; FEATURE_DIM],
}

impl Partial {
    fn zero() -> Self {
        Self {
            mean2d: [0.0; 2],
            cov2d: [0.0; 3],
            color: [0.0; 3],
            sigma: 0.0,
            feature: [0.0; FEATURE_DIM],
        }
    }
}

pub fn rasterize_backward(
    prims: &[GaussianPrimitive],
    cam: &Camera,
    cfg: &RasterConfig,
    target: &RenderTarget,
    upstream: &Upstream,
) -> Result<Gradients, RasterError> {
    let (h, w) = (target.height(), target.width());
    if target.projected.len() != prims.len() {
        return Err(RasterError::TargetMismatch {
            target: target.projected.len(),
            prims: prims.len(),
        });
    }
    for (grid, ch, field) in [
        (upstream.d_color, 3, "d_color"),
        (upstream.d_feature, FEATURE_DIM, "d_feature"),
        (upstream.d_alpha, 1, "d_alpha"),
    ] {
        if grid.height() != h || grid.width() != w || grid.channels() != ch {
            return Err(RasterError::UpstreamShape { field });
        }
    }

    let ts = cfg.tile_size;
    let tiles_x = w.div_ceil(ts);
    let tiles_y = h.div_ceil(ts);

    // Phase 1: pixel-level chain rule, accumulated per tile.
    let tile_partials: Vec<BTreeMap<u32, Partial>> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|tile| {
            let ty = tile / tiles_x;
            let tx = tile % tiles_x;
            let row0 = ty * ts;
            let col0 = tx * ts;
            let rows = ts.min(h - row0);
            let cols = ts.min(w - col0);
            let mut acc: BTreeMap<u32, Partial> = BTreeMap::new();
            let mut scratch: Vec<(u32, f64, f64, f64, f64, f64)> = Vec::new();
            for lr in 0..rows {
                for lc in 0..cols {
                    let (row, col) = (row0 + lr, col0 + lc);
                    let recs = target.pixel_contributors(row, col);
                    if recs.is_empty() {
                        continue;
                    }
                    let mut uc = [0.0; 3];
                    for ch in 0..3 {
                        uc[ch] = upstream.d_color.get(ch, row, col);
                    }
                    let mut uf = [0.0; FEATURE_DIM];
                    for ch in 0..FEATURE_DIM {
                        uf[ch] = upstream.d_feature.get(ch, row, col);
                    }
                    let ua = upstream.d_alpha.get(0, row, col);

                    // Recompute alpha/transmittance front-to-back exactly as
                    // the forward pass did.
                    scratch.clear();
                    let (px, py) = (col as f64, row as f64);
                    let mut transmittance = 1.0;
                    for &(pi, _) in recs {
                        let proj = target.projected[pi as usize].as_ref().unwrap();
                        let dx = px - proj.mean2d.x;
                        let dy = py - proj.mean2d.y;
                        let g = (-0.5 * proj.inv_cov.quad(dx, dy)).exp();
                        let alpha = (proj.opacity * g).min(cfg.alpha_clamp);
                        let weight = alpha * transmittance;
                        let u = uc[0] * proj.color[0]
                            + uc[1] * proj.color[1]
                            + uc[2] * proj.color[2]
                            + uf.iter()
                                .zip(&prims[pi as usize].feature)
                                .map(|(a, b)| a * b)
                                .sum::<f64>()
                            + ua;
                        scratch.push((pi, alpha, transmittance, weight, g, u));
                        transmittance *= 1.0 - alpha;
                    }

                    // Suffix sum S_i = sum_{j>i} w_j u_j gives
                    // dL/dalpha_i = T_i u_i - S_i / (1 - alpha_i).
                    let mut suffix = 0.0;
                    for &(pi, alpha, t_i, weight, g, u) in scratch.iter().rev() {
                        let dalpha = t_i * u - suffix / (1.0 - alpha);
                        suffix += weight * u;

                        let proj = target.projected[pi as usize].as_ref().unwrap();
                        let entry = acc.entry(pi).or_insert_with(Partial::zero);
                        for ch in 0..3 {
                            entry.color[ch] += weight * uc[ch];
                        }
                        for ch in 0..FEATURE_DIM {
                            entry.feature[ch] += weight * uf[ch];
                        }
                        if alpha < cfg.alpha_clamp {
                            entry.sigma += g * dalpha;
                            let dg = proj.opacity * dalpha;
                            let dx = px - proj.mean2d.x;
                            let dy = py - proj.mean2d.y;
                            let adx = proj.inv_cov.a * dx + proj.inv_cov.b * dy;
                            let ady = proj.inv_cov.b * dx + proj.inv_cov.c * dy;
                            entry.mean2d[0] += dg * g * adx;
                            entry.mean2d[1] += dg * g * ady;
                            let half = 0.5 * dg * g;
                            entry.cov2d[0] += half * adx * adx;
                            entry.cov2d[1] += half * 2.0 * adx * ady;
                            entry.cov2d[2] += half * ady * ady;
                        }
                    }
                }
            }
            acc
        })
        .collect();

    // Merge tiles in tile order.
    let mut partials: Vec<Partial> = vec![Partial::zero(); prims.len()];
    let mut touched = vec![false; prims.len()];
    for tile in tile_partials {
        for (pi, p) in tile {
            let i = pi as usize;
            touched[i] = true;
            let dst = &mut partials[i];
            for a in 0..2 {
                dst.mean2d[a] += p.mean2d[a];
            }
            for a in 0..3 {
                dst.cov2d[a] += p.cov2d[a];
                dst.color[a] += p.color[a];
            }
            dst.sigma += p.sigma;
            for a in 0..FEATURE_DIM {
                dst.feature[a] += p.feature[a];
            }
        }
    }

    // Phase 2: chain per-primitive partials through projection, activation
    // and shading. Independent per primitive.
    let active_sh = cfg.active_sh_coeffs();
    let results: Vec<Option<PrimGrad>> = (0..prims.len())
        .into_par_iter()
        .map(|i| {
            if !touched[i] {
                return None;
            }
            Some(chain_primitive(
                &prims[i],
                i,
                cam,
                &partials[i],
                target,
                active_sh,
            ))
        })
        .collect();

    let mut grads = Gradients::zeros(prims.len());
    for (i, res) in results.into_iter().enumerate() {
        if let Some(g) = res {
            grads.position[i] = g.position;
            grads.rotation[i] = g.rotation;
            grads.log_scale[i] = g.log_scale;
            grads.opacity_logit[i] = g.opacity_logit;
            grads.sh[i] = g.sh;
            grads.feature[i] = g.feature;
            grads.mean2d_norm[i] = g.mean2d_norm;
            grads.visible[i] = true;
        }
    }
    Ok(grads)
}

struct PrimGrad {
    position: [f64; 3],
    rotation: [f64; 4],
    log_scale: [f64; 3],
    opacity_logit: f64,
    sh: [f64; SH_TOTAL],
    feature: [f64; FEATURE_DIM],
    mean2d_norm: f64,
}

fn chain_primitive(
    prim: &GaussianPrimitive,
    index: usize,
    cam: &Camera,
    partial: &Partial,
    target: &RenderTarget,
    active_sh: usize,
) -> PrimGrad {
    let proj = target.projected[index]
        .as_ref()
        .expect("touched primitive must be projected");
    let act = activate(prim, index).expect("forward pass already validated");
    let p = prim.position_v();
    let t = cam.world_to_cam(&p);
    let j = projection_jacobian(cam, &t);
    let rot_w: Matrix3<f64> = cam.rotation();
    let b = j * rot_w;
    let m = rot_w * act.covariance * rot_w.transpose();

    // dL/dSigma2D as a full symmetric matrix.
    let g2 = Matrix2::new(
        partial.cov2d[0],
        partial.cov2d[1] * 0.5,
        partial.cov2d[1] * 0.5,
        partial.cov2d[2],
    );

    // 3D covariance path.
    let d_sigma3 = b.transpose() * g2 * b;
    let (dq_jac, dls_jac) = covariance_jacobians(prim);
    let mut rotation = [0.0; 4];
    for k in 0..4 {
        rotation[k] = d_sigma3.component_mul(&dq_jac[k]).sum();
    }
    let mut log_scale = [0.0; 3];
    for k in 0..3 {
        log_scale[k] = d_sigma3.component_mul(&dls_jac[k]).sum();
    }

    // Projection Jacobian path: Sigma2D = J M J^T, dL/dJ = 2 G2 J M.
    let dj = 2.0 * g2 * j * m;
    let (fx, fy) = (cam.fx(), cam.fy());
    let (tx, ty, tz) = (t.x, t.y, t.z);
    let tz2 = tz * tz;
    let tz3 = tz2 * tz;
    let mut dt = Vector3::zeros();
    dt.x += dj[(0, 2)] * (-fx / tz2);
    dt.y += dj[(1, 2)] * (-fy / tz2);
    dt.z += dj[(0, 0)] * (-fx / tz2)
        + dj[(0, 2)] * (2.0 * fx * tx / tz3)
        + dj[(1, 1)] * (-fy / tz2)
        + dj[(1, 2)] * (2.0 * fy * ty / tz3);

    // Mean2d path shares the pinhole Jacobian.
    let dmean = Vector2::new(partial.mean2d[0], partial.mean2d[1]);
    dt += j.transpose() * dmean;

    let mut position_v = rot_w.transpose() * dt;

    // Shading path: sh coefficients directly, view direction into position.
    let basis = sh_basis(&proj.view_dir);
    let basis_grad = sh_basis_grad(&proj.view_dir);
    let mut sh = [0.0; SH_TOTAL];
    let mut ddir = Vector3::zeros();
    for ch in 0..3 {
        if proj.color_clamped[ch] {
            continue;
        }
        let dc = partial.color[ch];
        if dc == 0.0 {
            continue;
        }
        for k in 0..active_sh {
            sh[ch * SH_PER_CHANNEL + k] = dc * basis[k];
            let coeff = prim.sh[ch * SH_PER_CHANNEL + k];
            ddir.x += dc * coeff * basis_grad[k][0];
            ddir.y += dc * coeff * basis_grad[k][1];
            ddir.z += dc * coeff * basis_grad[k][2];
        }
    }
    let diff = p - cam.center();
    let dist = diff.norm();
    let dir = proj.view_dir;
    // d dir / d p = (I - dir dir^T) / dist, symmetric.
    position_v += (ddir - dir * dir.dot(&ddir)) / dist;

    let sigma = proj.opacity;
    PrimGrad {
        position: [position_v.x, position_v.y, position_v.z],
        rotation,
        log_scale,
        opacity_logit: partial.sigma * sigma * (1.0 - sigma),
        sh,
        feature: partial.feature,
        mean2d_norm: (partial.mean2d[0] * partial.mean2d[0]
            + partial.mean2d[1] * partial.mean2d[1])
            .sqrt(),
    }
}
