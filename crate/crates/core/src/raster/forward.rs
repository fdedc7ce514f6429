//! Forward pass: depth-sorted front-to-back alpha blending in 16x16 tiles,
//! retaining per-pixel contributor records for the backward pass.

use rayon::prelude::*;

use super::project::{project_gaussian, Projected};
use super::{RasterConfig, RasterError};
use crate::camera::Camera;
use crate::grid::Grid;
use crate::scene::{GaussianPrimitive, FEATURE_DIM};

/// Rasterizer output. `contribs` is a CSR list over row-major pixels of
/// (primitive index, blend weight) pairs in front-to-back order.
#[derive(Debug, Clone)]
pub struct RenderTarget {
    pub color: Grid,
    pub feature: Grid,
    pub alpha: Grid,
    pub depth: Grid,
    pub contrib_offsets: Vec<u32>,
    pub contribs: Vec<(u32, f64)>,
    /// Projection cache, indexed by primitive; None for culled primitives.
    pub projected: Vec<Option<Projected>>,
}

impl RenderTarget {
    pub fn height(&self) -> usize {
        self.color.height()
    }

    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn pixel_contributors(&self, row: usize, col: usize) -> &[(u32, f64)] {
        let p = row * self.width() + col;
        let lo = self.contrib_offsets[p] as usize;
        let hi = self.contrib_offsets[p + 1] as usize;
        &self.contribs[lo..hi]
    }

    /// Blend weight of one primitive at a pixel (0 when absent).
    pub fn contribution_of(&self, prim: u32, row: usize, col: usize) -> f64 {
        self.pixel_contributors(row, col)
            .iter()
            .find(|&&(i, _)| i == prim)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }
}

struct TilePixels {
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
    color: Vec<f64>,
    feature: Vec<f64>,
    alpha: Vec<f64>,
    depth: Vec<f64>,
    contribs: Vec<Vec<(u32, f64)>>,
}

pub fn rasterize(
    prims: &[GaussianPrimitive],
    cam: &Camera,
    cfg: &RasterConfig,
) -> Result<RenderTarget, RasterError> {
    let (h, w) = (cam.height, cam.width);
    if h == 0 || w == 0 {
        return Err(RasterError::ZeroArea {
            width: w,
            height: h,
        });
    }

    let projected: Vec<Option<Projected>> = prims
        .par_iter()
        .enumerate()
        .map(|(i, p)| project_gaussian(p, i, cam, cfg))
        .collect::<Result<_, _>>()?;

    // Global front-to-back order; ties broken by primitive index.
    let mut order: Vec<u32> = (0..prims.len() as u32)
        .filter(|&i| projected[i as usize].is_some())
        .collect();
    order.sort_by(|&a, &b| {
        let da = projected[a as usize].as_ref().unwrap().depth;
        let db = projected[b as usize].as_ref().unwrap().depth;
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });

    let ts = cfg.tile_size;
    let tiles_x = w.div_ceil(ts);
    let tiles_y = h.div_ceil(ts);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for &pi in &order {
        let proj = projected[pi as usize].as_ref().unwrap();
        let r = proj.bin_radius;
        let x0 = ((proj.mean2d.x - r).floor().max(0.0)) as usize;
        let x1 = ((proj.mean2d.x + r).ceil().min((w - 1) as f64)) as usize;
        let y0 = ((proj.mean2d.y - r).floor().max(0.0)) as usize;
        let y1 = ((proj.mean2d.y + r).ceil().min((h - 1) as f64)) as usize;
        if proj.mean2d.x + r < 0.0 || proj.mean2d.y + r < 0.0 {
            continue;
        }
        for ty in (y0 / ts)..=(y1 / ts) {
            for tx in (x0 / ts)..=(x1 / ts) {
                bins[ty * tiles_x + tx].push(pi);
            }
        }
    }

    let tiles: Vec<TilePixels> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|tile| {
            let ty = tile / tiles_x;
            let tx = tile % tiles_x;
            let row0 = ty * ts;
            let col0 = tx * ts;
            let rows = ts.min(h - row0);
            let cols = ts.min(w - col0);
            let mut out = TilePixels {
                row0,
                col0,
                rows,
                cols,
                color: vec![0.0; rows * cols * 3],
                feature: vec![0.0; rows * cols * FEATURE_DIM],
                alpha: vec![0.0; rows * cols],
                depth: vec![0.0; rows * cols],
                contribs: vec![Vec::new(); rows * cols],
            };
            let bin = &bins[tile];
            for lr in 0..rows {
                for lc in 0..cols {
                    let px = (col0 + lc) as f64;
                    let py = (row0 + lr) as f64;
                    let li = lr * cols + lc;
                    let mut transmittance = 1.0;
                    for &pi in bin {
                        let proj = projected[pi as usize].as_ref().unwrap();
                        let dx = px - proj.mean2d.x;
                        let dy = py - proj.mean2d.y;
                        let g = (-0.5 * proj.inv_cov.quad(dx, dy)).exp();
                        let alpha = (proj.opacity * g).min(cfg.alpha_clamp);
                        if alpha < cfg.min_record_alpha {
                            continue;
                        }
                        let weight = alpha * transmittance;
                        for ch in 0..3 {
                            out.color[ch * rows * cols + li] += weight * proj.color[ch];
                        }
                        let prim = &prims[pi as usize];
                        for ch in 0..FEATURE_DIM {
                            out.feature[ch * rows * cols + li] += weight * prim.feature[ch];
                        }
                        out.alpha[li] += weight;
                        out.depth[li] += weight * proj.depth;
                        out.contribs[li].push((pi, weight));
                        transmittance *= 1.0 - alpha;
                        if transmittance < cfg.transmittance_eps {
                            break;
                        }
                    }
                }
            }
            out
        })
        .collect();

    // Stitch tiles into the global target (tile order; deterministic).
    let mut color = Grid::zeros(h, w, 3);
    let mut feature = Grid::zeros(h, w, FEATURE_DIM);
    let mut alpha = Grid::zeros(h, w, 1);
    let mut depth = Grid::zeros(h, w, 1);
    let mut per_pixel: Vec<Vec<(u32, f64)>> = vec![Vec::new(); h * w];
    for mut tile in tiles {
        for lr in 0..tile.rows {
            for lc in 0..tile.cols {
                let (row, col) = (tile.row0 + lr, tile.col0 + lc);
                let li = lr * tile.cols + lc;
                for ch in 0..3 {
                    color.set(ch, row, col, tile.color[ch * tile.rows * tile.cols + li]);
                }
                for ch in 0..FEATURE_DIM {
                    feature.set(ch, row, col, tile.feature[ch * tile.rows * tile.cols + li]);
                }
                alpha.set(0, row, col, tile.alpha[li]);
                depth.set(0, row, col, tile.depth[li]);
                per_pixel[row * w + col] = std::mem::take(&mut tile.contribs[li]);
            }
        }
    }
    let mut contrib_offsets = Vec::with_capacity(h * w + 1);
    let mut contribs = Vec::new();
    contrib_offsets.push(0u32);
    for list in per_pixel {
        contribs.extend_from_slice(&list);
        contrib_offsets.push(contribs.len() as u32);
    }

    Ok(RenderTarget {
        color,
        feature,
        alpha,
        depth,
        contrib_offsets,
        contribs,
        projected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sigmoid;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn test_camera() -> Camera {
        Camera::look_at(
            Vector3::new(0.0, 0.0, -3.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            60.0,
            32,
            32,
        )
    }

    #[test]
    fn zero_area_image_is_an_error() {
        let mut cam = test_camera();
        cam.width = 0;
        let prims = vec![GaussianPrimitive::flat([0.0; 3], 0.3, 0.0, [0.5; 3])];
        assert!(matches!(
            rasterize(&prims, &cam, &RasterConfig::default()),
            Err(RasterError::ZeroArea { .. })
        ));
    }

    #[test]
    fn single_opaque_gaussian_matches_its_color() {
        let cam = test_camera();
        // Large footprint, high opacity, flat color.
        let prim = GaussianPrimitive::flat([0.0; 3], 1.5, 6.0, [0.8, 0.3, 0.1]);
        let target = rasterize(&[prim], &cam, &RasterConfig::default()).unwrap();
        let sigma = sigmoid(6.0);
        // At the projected center G = 1 so alpha = sigma and color = w * c.
        assert_relative_eq!(target.alpha.get(0, 16, 16), sigma, epsilon = 1e-6);
        assert_relative_eq!(target.color.get(0, 16, 16), sigma * 0.8, epsilon = 1e-5);
        assert_relative_eq!(target.color.get(1, 16, 16), sigma * 0.3, epsilon = 1e-5);
    }

    #[test]
    fn two_overlapping_gaussians_composite_by_hand() {
        let cam = test_camera();
        // Front at depth 2.5 (z=-0.5), back at depth 3.5 (z=+0.5), both on
        // the optical axis with big flat footprints.
        let mut front = GaussianPrimitive::flat([0.0, 0.0, -0.5], 2.0, 0.0, [1.0, 0.0, 0.0]);
        front.opacity_logit = 0.0; // a = 0.5 at center
        let back = GaussianPrimitive::flat([0.0, 0.0, 0.5], 2.0, 12.0, [0.0, 1.0, 0.0]);
        let target = rasterize(&[front, back], &cam, &RasterConfig::default()).unwrap();
        // Blended = a*c1 + (1-a)*c2 with a = 0.5, back fully opaque.
        assert_relative_eq!(target.color.get(0, 16, 16), 0.5, epsilon = 1e-3);
        assert_relative_eq!(target.color.get(1, 16, 16), 0.5, epsilon = 1e-3);
        assert_relative_eq!(target.alpha.get(0, 16, 16), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn feature_blend_uses_same_weights_as_color() {
        let cam = test_camera();
        let mut a = GaussianPrimitive::flat([0.1, 0.0, 0.0], 0.8, 1.0, [1.0, 1.0, 1.0]);
        a.feature = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let mut b = GaussianPrimitive::flat([-0.1, 0.0, 0.4], 0.8, 0.5, [1.0, 1.0, 1.0]);
        b.feature = [-1.0; FEATURE_DIM];
        let target = rasterize(&[a.clone(), b.clone()], &cam, &RasterConfig::default()).unwrap();
        for row in [10usize, 16, 20] {
            for col in [12usize, 16, 22] {
                let mut expect = [0.0; FEATURE_DIM];
                for &(pi, w) in target.pixel_contributors(row, col) {
                    let f = if pi == 0 { &a.feature } else { &b.feature };
                    for ch in 0..FEATURE_DIM {
                        expect[ch] += w * f[ch];
                    }
                }
                for ch in 0..FEATURE_DIM {
                    assert_relative_eq!(
                        target.feature.get(ch, row, col),
                        expect[ch],
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_alpha_and_match_scalar_compositor() {
        let cam = test_camera();
        let prims: Vec<GaussianPrimitive> = (0..6)
            .map(|i| {
                let fi = i as f64;
                GaussianPrimitive::flat(
                    [0.15 * (fi - 2.5), 0.1 * ((fi * 1.7).sin()), 0.2 * fi - 0.5],
                    0.4 + 0.05 * fi,
                    -0.5 + 0.3 * fi,
                    [0.3, 0.5, 0.7],
                )
            })
            .collect();
        let cfg = RasterConfig::default();
        let target = rasterize(&prims, &cam, &cfg).unwrap();
        for (row, col) in [(16, 16), (8, 24), (25, 9), (3, 3)] {
            let recs = target.pixel_contributors(row, col);
            let sum_w: f64 = recs.iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(sum_w, target.alpha.get(0, row, col), epsilon = 1e-12);
            // Scalar reference: alpha = 1 - prod(1 - a_i) over the same
            // front-to-back contributors.
            let mut prod = 1.0;
            let mut t = 1.0;
            for &(pi, w) in recs {
                let a = w / t;
                t *= 1.0 - a;
                prod *= 1.0 - a;
                let _ = pi;
            }
            assert_relative_eq!(sum_w, 1.0 - prod, epsilon = 1e-10);
        }
    }

    #[test]
    fn empty_foreground_union_equals_bg_only() {
        let cam = test_camera();
        let bg: Vec<GaussianPrimitive> = (0..4)
            .map(|i| {
                GaussianPrimitive::flat(
                    [0.2 * i as f64 - 0.3, 0.1, 0.0],
                    0.5,
                    1.0,
                    [0.2, 0.4, 0.6],
                )
            })
            .collect();
        let cfg = RasterConfig::default();
        let a = rasterize(&bg, &cam, &cfg).unwrap();
        let with_empty_fg = bg.clone();
        let b = rasterize(&with_empty_fg, &cam, &cfg).unwrap();
        assert_eq!(a.color, b.color);
        assert_eq!(a.alpha, b.alpha);
    }

    #[test]
    fn renders_are_bit_identical() {
        let cam = test_camera();
        let prims: Vec<GaussianPrimitive> = (0..20)
            .map(|i| {
                let fi = i as f64 * 0.37;
                GaussianPrimitive::flat(
                    [fi.sin() * 0.8, fi.cos() * 0.8, 0.1 * i as f64 - 1.0],
                    0.3,
                    0.5,
                    [0.5, 0.5, 0.5],
                )
            })
            .collect();
        let cfg = RasterConfig::default();
        let a = rasterize(&prims, &cam, &cfg).unwrap();
        let b = rasterize(&prims, &cam, &cfg).unwrap();
        assert_eq!(a.color, b.color);
        assert_eq!(a.contribs, b.contribs);
    }
}
