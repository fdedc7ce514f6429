//! Deterministic fixtures shared by unit tests and the acceptance suite.
//! Not part of the public API surface.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::camera::Camera;
use crate::grid::Grid;
use crate::raster::{rasterize, RasterConfig};
use crate::scene::{GaussianPrimitive, FEATURE_DIM, SH_PER_CHANNEL};

/// Small random scene built for finite-difference checks: distinct depths
/// (no sort flips under perturbation), footprints well inside the image,
/// opacities away from the saturation clamp, colors away from the shading
/// clamp.
pub fn fd_scene(seed: u64) -> Vec<GaussianPrimitive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 7919 + 17);
    let n = 5;
    (0..n)
        .map(|i| {
            let mut prim = GaussianPrimitive::flat(
                [
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    -0.8 + 0.4 * i as f64 + rng.gen_range(-0.05..0.05),
                ],
                rng.gen_range(0.15..0.4),
                rng.gen_range(-1.2..1.2),
                [
                    rng.gen_range(0.25..0.75),
                    rng.gen_range(0.25..0.75),
                    rng.gen_range(0.25..0.75),
                ],
            );
            // Mild anisotropy and rotation.
            for a in 0..3 {
                prim.log_scale[a] += rng.gen_range(-0.3..0.3);
            }
            prim.rotation = crate::math::quat_normalize(&[
                1.0,
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ]);
            // Small higher-order SH so view dependence is exercised without
            // hitting the [0,1] shading clamp.
            for ch in 0..3 {
                for k in 1..SH_PER_CHANNEL {
                    prim.sh[ch * SH_PER_CHANNEL + k] = rng.gen_range(-0.04..0.04);
                }
            }
            for v in prim.feature.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            prim
        })
        .collect()
}

/// Fixed random upstream gradients for the scalar FD loss.
pub fn upstream_grids(h: usize, w: usize, seed: u64) -> (Grid, Grid, Grid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mk = |c: usize| {
        let data = (0..h * w * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Grid::from_data(h, w, c, data)
    };
    (mk(3), mk(FEATURE_DIM), mk(1))
}

/// Scalar probe loss L = <upstream, outputs>, used to finite-difference the
/// whole forward pass.
pub fn render_scalar_loss(
    prims: &[GaussianPrimitive],
    cam: &Camera,
    cfg: &RasterConfig,
    d_color: &Grid,
    d_feature: &Grid,
    d_alpha: &Grid,
) -> f64 {
    let target = rasterize(prims, cam, cfg).expect("fd scene renders");
    let mut loss = 0.0;
    for (a, b) in target.color.data().iter().zip(d_color.data()) {
        loss += a * b;
    }
    for (a, b) in target.feature.data().iter().zip(d_feature.data()) {
        loss += a * b;
    }
    for (a, b) in target.alpha.data().iter().zip(d_alpha.data()) {
        loss += a * b;
    }
    loss
}
