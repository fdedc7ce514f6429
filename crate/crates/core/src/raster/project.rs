//! EWA projection of a 3D Gaussian to screen space.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};

use super::{RasterConfig, RasterError, Sym2};
use crate::camera::Camera;
use crate::math::{sh_basis, sigmoid};
use crate::scene::{activate, GaussianPrimitive, SH_PER_CHANNEL};

/// Screen-space footprint of one primitive plus the forward quantities the
/// backward pass reuses.
#[derive(Debug, Clone)]
pub struct Projected {
    pub mean2d: Vector2<f64>,
    pub cov2d: Sym2,
    pub inv_cov: Sym2,
    /// Camera-space z.
    pub depth: f64,
    pub opacity: f64,
    /// View-evaluated RGB after shading clamp.
    pub color: [f64; 3],
    /// Channels where the [0,1] shading clamp was active (no SH gradient).
    pub color_clamped: [bool; 3],
    /// Unit view direction from camera center to the primitive mean.
    pub view_dir: Vector3<f64>,
    pub bin_radius: f64,
}

/// Evaluate the SH color for a primitive along `dir`, restricted to the
/// active coefficient count.
pub fn shade(prim: &GaussianPrimitive, dir: &Vector3<f64>, active: usize) -> ([f64; 3], [bool; 3]) {
    let basis = sh_basis(dir);
    let mut rgb = [0.0; 3];
    let mut clamped = [false; 3];
    for ch in 0..3 {
        let mut v = 0.5;
        for k in 0..active {
            v += prim.sh[ch * SH_PER_CHANNEL + k] * basis[k];
        }
        if v < 0.0 {
            rgb[ch] = 0.0;
            clamped[ch] = true;
        } else if v > 1.0 {
            rgb[ch] = 1.0;
            clamped[ch] = true;
        } else {
            rgb[ch] = v;
        }
    }
    (rgb, clamped)
}

/// Projection Jacobian of the pinhole map at camera-space point t.
pub fn projection_jacobian(cam: &Camera, t: &Vector3<f64>) -> Matrix2x3<f64> {
    let (fx, fy) = (cam.fx(), cam.fy());
    let z = t.z;
    Matrix2x3::new(
        fx / z,
        0.0,
        -fx * t.x / (z * z),
        0.0,
        fy / z,
        -fy * t.y / (z * z),
    )
}

/// Project one primitive into a view. Returns Ok(None) when culled (behind
/// the near plane or the ~99%-mass footprint misses the image).
pub fn project_gaussian(
    prim: &GaussianPrimitive,
    index: usize,
    cam: &Camera,
    cfg: &RasterConfig,
) -> Result<Option<Projected>, RasterError> {
    let act = activate(prim, index)?;
    let p = prim.position_v();
    let t = cam.world_to_cam(&p);
    if t.z <= cfg.near {
        return Ok(None);
    }
    let mean2d = Vector2::new(
        cam.fx() * t.x / t.z + cam.cx(),
        cam.fy() * t.y / t.z + cam.cy(),
    );

    let j = projection_jacobian(cam, &t);
    let w: Matrix3<f64> = cam.rotation();
    let b = j * w;
    let cov_full = b * act.covariance * b.transpose();
    let cov2d = Sym2 {
        a: cov_full[(0, 0)] + cfg.cov_dilation,
        b: cov_full[(0, 1)],
        c: cov_full[(1, 1)] + cfg.cov_dilation,
    };
    let sigma_max = cov2d.max_eigenvalue().max(0.0).sqrt();
    let cull_r = cfg.cull_sigma * sigma_max;
    let (w_px, h_px) = (cam.width as f64 - 1.0, cam.height as f64 - 1.0);
    if mean2d.x + cull_r < 0.0
        || mean2d.x - cull_r > w_px
        || mean2d.y + cull_r < 0.0
        || mean2d.y - cull_r > h_px
    {
        return Ok(None);
    }

    let dir = (p - cam.center()).normalize();
    let (color, color_clamped) = shade(prim, &dir, cfg.active_sh_coeffs());
    Ok(Some(Projected {
        mean2d,
        cov2d,
        inv_cov: cov2d.inverse(),
        depth: t.z,
        opacity: sigmoid(prim.opacity_logit),
        color,
        color_clamped,
        view_dir: dir,
        bin_radius: cfg.bin_sigma * sigma_max,
    }))
}
