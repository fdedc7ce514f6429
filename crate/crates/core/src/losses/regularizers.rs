//! Geometric and temporal regularizers: scale isotropy/size penalties, the
//! local as-rigid-as-possible energy, the silhouette SDF penalty, and the
//! temporal anchoring terms.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::camera::Camera;
use crate::grid::Grid;
use crate::losses::LossError;
use crate::math::{
    quat_conj, quat_mul, quat_normalize, quat_normalize_jacobian, quat_to_matrix,
    quat_to_matrix_jacobian,
};
use crate::raster::project::projection_jacobian;
use crate::scene::{BgAppearance, GaussianPrimitive, FEATURE_DIM, SH_TOTAL};

#[derive(Debug, Clone)]
pub struct IsoSizeLoss {
    pub e_iso: f64,
    pub e_size: f64,
    pub d_log_scale_iso: Vec<[f64; 3]>,
    pub d_log_scale_size: Vec<[f64; 3]>,
}

/// Scale regularizers: E_iso penalizes anisotropy via the mean-ratio
/// deviation (per-component mean of |s_c / mean(s) - 1|), E_size is a soft
/// hinge on the largest scale above `tau_size` (world units).
pub fn iso_size_losses(prims: &[GaussianPrimitive], tau_size: f64) -> IsoSizeLoss {
    let n = prims.len().max(1) as f64;
    let mut e_iso = 0.0;
    let mut e_size = 0.0;
    let mut d_iso = vec![[0.0; 3]; prims.len()];
    let mut d_size = vec![[0.0; 3]; prims.len()];
    for (i, prim) in prims.iter().enumerate() {
        let s = [
            prim.log_scale[0].exp(),
            prim.log_scale[1].exp(),
            prim.log_scale[2].exp(),
        ];
        let mean = (s[0] + s[1] + s[2]) / 3.0;
        for c in 0..3 {
            e_iso += (s[c] / mean - 1.0).abs() / (3.0 * n);
        }
        // d/ds_c of sum_c' |s_c'/mean - 1|, then chain ds/dls = s.
        for c in 0..3 {
            let mut acc = 0.0;
            for cp in 0..3 {
                let sign = (s[cp] / mean - 1.0).signum();
                let kron = if c == cp { 1.0 } else { 0.0 };
                acc += sign * (kron * mean - s[cp] / 3.0) / (mean * mean);
            }
            d_iso[i][c] = acc * s[c] / (3.0 * n);
        }
        let (mut max_c, mut max_s) = (0usize, s[0]);
        for c in 1..3 {
            if s[c] > max_s {
                max_s = s[c];
                max_c = c;
            }
        }
        let excess = max_s - tau_size;
        if excess > 0.0 {
            e_size += excess * excess / n;
            d_size[i][max_c] = 2.0 * excess * max_s / n;
        }
    }
    IsoSizeLoss {
        e_iso,
        e_size,
        d_log_scale_iso: d_iso,
        d_log_scale_size: d_size,
    }
}

#[derive(Debug, Clone)]
pub struct ArapGrads {
    pub value: f64,
    pub d_position: Vec<[f64; 3]>,
    pub d_rotation: Vec<[f64; 4]>,
}

/// Locally rigid deformation energy between frame t-1 and t:
/// sum_i sum_k w_ik ||R(q_i,t * q_i,t-1^-1)(p_k,t-1 - p_i,t-1) -
/// (p_k,t - p_i,t)||^2 with Gaussian blend weights
/// w_ik = exp(-||p_i,t-1 - p_k,t-1||^2 / l^2) frozen at t-1.
pub fn arap_loss(
    pos_t: &[[f64; 3]],
    rot_t: &[[f64; 4]],
    pos_prev: &[[f64; 3]],
    rot_prev: &[[f64; 4]],
    neighbors: &[Vec<usize>],
    influence_radius: f64,
) -> Result<ArapGrads, LossError> {
    let n = pos_t.len();
    if rot_t.len() != n || pos_prev.len() != n || rot_prev.len() != n || neighbors.len() != n {
        return Err(LossError::Shape(format!(
            "arap inputs disagree: {} / {} / {} / {} / {}",
            n,
            rot_t.len(),
            pos_prev.len(),
            rot_prev.len(),
            neighbors.len()
        )));
    }
    let l2 = influence_radius * influence_radius;
    let mut value = 0.0;
    let mut d_pos = vec![[0.0; 3]; n];
    let mut d_rot = vec![[0.0; 4]; n];
    for i in 0..n {
        let q_hat = quat_normalize(&rot_t[i]);
        let c = quat_conj(&quat_normalize(&rot_prev[i]));
        let q_rel = quat_mul(&q_hat, &c);
        let r = quat_to_matrix(&q_rel);
        let pi_prev = Vector3::from_column_slice(&pos_prev[i]);
        let pi_cur = Vector3::from_column_slice(&pos_t[i]);
        let mut d_r_acc = Matrix3::zeros();
        for &k in &neighbors[i] {
            let d_prev = Vector3::from_column_slice(&pos_prev[k]) - pi_prev;
            let d_cur = Vector3::from_column_slice(&pos_t[k]) - pi_cur;
            let w = (-d_prev.norm_squared() / l2).exp();
            let resid = r * d_prev - d_cur;
            value += w * resid.norm_squared();
            let two_wr = 2.0 * w * resid;
            for a in 0..3 {
                d_pos[k][a] -= two_wr[a];
                d_pos[i][a] += two_wr[a];
            }
            d_r_acc += two_wr * d_prev.transpose();
        }
        // Chain d_r_acc through q_rel = normalize(q_t) * conj(q_prev_hat).
        let jac_rel = quat_to_matrix_jacobian(&q_rel);
        let mut a4 = [0.0; 4];
        for m in 0..4 {
            a4[m] = d_r_acc.component_mul(&jac_rel[m]).sum();
        }
        // Right-multiplication by c is linear: q_rel[m] = RM[m][u] q_hat[u].
        let rm = [
            [c[0], -c[1], -c[2], -c[3]],
            [c[1], c[0], c[3], -c[2]],
            [c[2], -c[3], c[0], c[1]],
            [c[3], c[2], -c[1], c[0]],
        ];
        let mut b4 = [0.0; 4];
        for u in 0..4 {
            for m in 0..4 {
                b4[u] += a4[m] * rm[m][u];
            }
        }
        let nj = quat_normalize_jacobian(&rot_t[i]);
        for raw in 0..4 {
            for u in 0..4 {
                d_rot[i][raw] += b4[u] * nj[u][raw];
            }
        }
    }
    Ok(ArapGrads {
        value,
        d_position: d_pos,
        d_rotation: d_rot,
    })
}

/// Silhouette penalty: primitives whose classifier label is d pay the
/// squared positive SDF of instance d at their projection, summed over all
/// views. Background-labeled primitives contribute nothing. `sdfs` is
/// indexed [view][instance-1].
pub fn sdf_loss(
    positions: &[[f64; 3]],
    labels: &[u8],
    sdfs: &[Vec<Grid>],
    cameras: &[Camera],
) -> Result<(f64, Vec<[f64; 3]>), LossError> {
    if positions.len() != labels.len() {
        return Err(LossError::Shape(format!(
            "{} positions vs {} labels",
            positions.len(),
            labels.len()
        )));
    }
    let mut value = 0.0;
    let mut d_pos = vec![[0.0; 3]; positions.len()];
    for (i, (&label, pos)) in labels.iter().zip(positions).enumerate() {
        if label == 0 {
            continue;
        }
        let p = Vector3::from_column_slice(pos);
        for (v, cam) in cameras.iter().enumerate() {
            let phi_grid = sdfs
                .get(v)
                .and_then(|per_view| per_view.get(label as usize - 1))
                .ok_or(LossError::MissingSdf {
                    view: v,
                    instance: label,
                })?;
            let Some(uv) = cam.project(&p) else {
                continue;
            };
            let (phi, _) = phi_grid.sample_bilinear(0, uv.x, uv.y);
            if phi <= 0.0 {
                continue;
            }
            value += phi * phi;
            let (gx, gy) = phi_grid.sample_bilinear_grad(0, uv.x, uv.y);
            let duv = Vector2::new(2.0 * phi * gx, 2.0 * phi * gy);
            let t = cam.world_to_cam(&p);
            let j = projection_jacobian(cam, &t) * cam.rotation();
            let g = j.transpose() * duv;
            for a in 0..3 {
                d_pos[i][a] += g[a];
            }
        }
        let _ = i;
    }
    Ok((value, d_pos))
}

#[derive(Debug, Clone)]
pub struct TemporalBgLoss {
    pub value: f64,
    pub d_sh: Vec<[f64; SH_TOTAL]>,
    pub d_opacity: Vec<f64>,
}

/// Anchors background appearance (SH + opacity logit) to the pretraining
/// snapshot; squared differences, mean per primitive.
pub fn temporal_bg_loss(
    bg: &[GaussianPrimitive],
    reference: &[BgAppearance],
) -> Result<TemporalBgLoss, LossError> {
    if bg.len() != reference.len() {
        return Err(LossError::ReferenceMismatch {
            got: bg.len(),
            expected: reference.len(),
        });
    }
    let n = bg.len().max(1) as f64;
    let mut value = 0.0;
    let mut d_sh = vec![[0.0; SH_TOTAL]; bg.len()];
    let mut d_op = vec![0.0; bg.len()];
    for (i, (prim, r)) in bg.iter().zip(reference).enumerate() {
        for c in 0..SH_TOTAL {
            let diff = prim.sh[c] - r.sh[c];
            value += diff * diff / n;
            d_sh[i][c] = 2.0 * diff / n;
        }
        let diff = prim.opacity_logit - r.opacity_logit;
        value += diff * diff / n;
        d_op[i] = 2.0 * diff / n;
    }
    Ok(TemporalBgLoss {
        value,
        d_sh,
        d_opacity: d_op,
    })
}

#[derive(Debug, Clone)]
pub struct TemporalFgLoss {
    pub value: f64,
    pub d_position: Vec<[f64; 3]>,
    pub d_rotation: Vec<[f64; 4]>,
    pub d_log_scale: Vec<[f64; 3]>,
    pub d_opacity: Vec<f64>,
    pub d_sh: Vec<[f64; SH_TOTAL]>,
    pub d_feature: Vec<[f64; FEATURE_DIM]>,
}

/// Anchors every foreground attribute to its frame-(t-1) value; squared
/// differences, mean per primitive.
pub fn temporal_fg_loss(
    fg: &[GaussianPrimitive],
    reference: &[GaussianPrimitive],
) -> Result<TemporalFgLoss, LossError> {
    if fg.len() != reference.len() {
        return Err(LossError::ReferenceMismatch {
            got: fg.len(),
            expected: reference.len(),
        });
    }
    let n = fg.len().max(1) as f64;
    let mut out = TemporalFgLoss {
        value: 0.0,
        d_position: vec![[0.0; 3]; fg.len()],
        d_rotation: vec![[0.0; 4]; fg.len()],
        d_log_scale: vec![[0.0; 3]; fg.len()],
        d_opacity: vec![0.0; fg.len()],
        d_sh: vec![[0.0; SH_TOTAL]; fg.len()],
        d_feature: vec![[0.0; FEATURE_DIM]; fg.len()],
    };
    for (i, (p, r)) in fg.iter().zip(reference).enumerate() {
        let mut push = |diff: f64, slot: &mut f64| {
            out.value += diff * diff / n;
            *slot = 2.0 * diff / n;
        };
        for a in 0..3 {
            push(p.position[a] - r.position[a], &mut out.d_position[i][a]);
            push(p.log_scale[a] - r.log_scale[a], &mut out.d_log_scale[i][a]);
        }
        for a in 0..4 {
            push(p.rotation[a] - r.rotation[a], &mut out.d_rotation[i][a]);
        }
        push(p.opacity_logit - r.opacity_logit, &mut out.d_opacity[i]);
        for a in 0..SH_TOTAL {
            push(p.sh[a] - r.sh[a], &mut out.d_sh[i][a]);
        }
        for a in 0..FEATURE_DIM {
            push(p.feature[a] - r.feature[a], &mut out.d_feature[i][a]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::knn_neighbors;
    use nalgebra::Vector3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isotropic_small_gaussians_have_zero_losses() {
        let prims = vec![GaussianPrimitive::flat([0.0; 3], 0.01, 0.0, [0.5; 3]); 4];
        let out = iso_size_losses(&prims, 0.05);
        assert_eq!(out.e_iso, 0.0);
        assert_eq!(out.e_size, 0.0);
    }

    #[test]
    fn anisotropy_example_one_third() {
        // s = (2, 1, 1): mean 4/3, per-component mean of deviations = 1/3.
        let mut prim = GaussianPrimitive::flat([0.0; 3], 1.0, 0.0, [0.5; 3]);
        prim.log_scale = [2f64.ln(), 0.0, 0.0];
        let out = iso_size_losses(&[prim], 10.0);
        assert!((out.e_iso - 1.0 / 3.0).abs() < 1e-12, "{}", out.e_iso);
    }

    #[test]
    fn iso_size_gradients_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let prims: Vec<GaussianPrimitive> = (0..5)
            .map(|_| {
                let mut p = GaussianPrimitive::flat([0.0; 3], 1.0, 0.0, [0.5; 3]);
                for a in 0..3 {
                    p.log_scale[a] = rng.gen_range(-2.0..0.2);
                }
                p
            })
            .collect();
        let tau = 0.4;
        let out = iso_size_losses(&prims, tau);
        let h = 1e-6;
        for i in 0..prims.len() {
            for a in 0..3 {
                let mut pp = prims.clone();
                pp[i].log_scale[a] += h;
                let mut pm = prims.clone();
                pm[i].log_scale[a] -= h;
                let op = iso_size_losses(&pp, tau);
                let om = iso_size_losses(&pm, tau);
                let fd_iso = (op.e_iso - om.e_iso) / (2.0 * h);
                let an_iso = out.d_log_scale_iso[i][a];
                assert!(
                    (an_iso - fd_iso).abs() < 1e-4 * an_iso.abs().max(fd_iso.abs()).max(1.0),
                    "iso {i}[{a}]: {an_iso} vs {fd_iso}"
                );
                let fd_size = (op.e_size - om.e_size) / (2.0 * h);
                let an_size = out.d_log_scale_size[i][a];
                assert!(
                    (an_size - fd_size).abs() < 1e-4 * an_size.abs().max(fd_size.abs()).max(1.0),
                    "size {i}[{a}]: {an_size} vs {fd_size}"
                );
            }
        }
    }

    fn random_cloud(n: usize, seed: u64) -> (Vec<[f64; 3]>, Vec<[f64; 4]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let rot: Vec<[f64; 4]> = (0..n)
            .map(|_| {
                quat_normalize(&[
                    rng.gen_range(0.5..1.0),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.3..0.3),
                ])
            })
            .collect();
        (pos, rot)
    }

    #[test]
    fn rigid_motion_is_in_the_null_space() {
        let (pos_prev, rot_prev) = random_cloud(12, 3);
        let neighbors = knn_neighbors(&pos_prev, 4).unwrap();
        // Rigid rotation + translation.
        let q0 = quat_normalize(&[0.9, 0.1, -0.2, 0.15]);
        let r0 = quat_to_matrix(&q0);
        let t0 = Vector3::new(0.3, -0.2, 0.5);
        let pos_t: Vec<[f64; 3]> = pos_prev
            .iter()
            .map(|p| {
                let q = r0 * Vector3::from_column_slice(p) + t0;
                [q.x, q.y, q.z]
            })
            .collect();
        let rot_t: Vec<[f64; 4]> = rot_prev.iter().map(|q| quat_mul(&q0, q)).collect();
        let out = arap_loss(&pos_t, &rot_t, &pos_prev, &rot_prev, &neighbors, 0.7).unwrap();
        assert!(out.value < 1e-20, "E_smooth = {}", out.value);

        // Pure translation with unchanged rotations.
        let pos_t2: Vec<[f64; 3]> = pos_prev
            .iter()
            .map(|p| [p[0] + 0.4, p[1] - 0.1, p[2] + 0.2])
            .collect();
        let out2 = arap_loss(&pos_t2, &rot_prev, &pos_prev, &rot_prev, &neighbors, 0.7).unwrap();
        assert!(out2.value < 1e-24);
    }

    #[test]
    fn arap_gradients_match_fd() {
        let (pos_prev, rot_prev) = random_cloud(8, 5);
        let neighbors = knn_neighbors(&pos_prev, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pos_t: Vec<[f64; 3]> = pos_prev
            .iter()
            .map(|p| {
                [
                    p[0] + rng.gen_range(-0.05..0.05),
                    p[1] + rng.gen_range(-0.05..0.05),
                    p[2] + rng.gen_range(-0.05..0.05),
                ]
            })
            .collect();
        let rot_t: Vec<[f64; 4]> = rot_prev
            .iter()
            .map(|q| {
                let mut q2 = *q;
                for v in q2.iter_mut() {
                    *v += rng.gen_range(-0.05..0.05);
                }
                q2
            })
            .collect();
        let l = 0.8;
        let out = arap_loss(&pos_t, &rot_t, &pos_prev, &rot_prev, &neighbors, l).unwrap();
        let h = 1e-6;
        for i in 0..pos_t.len() {
            for a in 0..3 {
                let mut pp = pos_t.clone();
                pp[i][a] += h;
                let mut pm = pos_t.clone();
                pm[i][a] -= h;
                let vp = arap_loss(&pp, &rot_t, &pos_prev, &rot_prev, &neighbors, l)
                    .unwrap()
                    .value;
                let vm = arap_loss(&pm, &rot_t, &pos_prev, &rot_prev, &neighbors, l)
                    .unwrap()
                    .value;
                let fd = (vp - vm) / (2.0 * h);
                let an = out.d_position[i][a];
                assert!(
                    (an - fd).abs() < 1e-4 * an.abs().max(fd.abs()).max(1.0),
                    "pos {i}[{a}]: {an} vs {fd}"
                );
            }
            for a in 0..4 {
                let mut rp = rot_t.clone();
                rp[i][a] += h;
                let mut rm = rot_t.clone();
                rm[i][a] -= h;
                let vp = arap_loss(&pos_t, &rp, &pos_prev, &rot_prev, &neighbors, l)
                    .unwrap()
                    .value;
                let vm = arap_loss(&pos_t, &rm, &pos_prev, &rot_prev, &neighbors, l)
                    .unwrap()
                    .value;
                let fd = (vp - vm) / (2.0 * h);
                let an = out.d_rotation[i][a];
                assert!(
                    (an - fd).abs() < 1e-4 * an.abs().max(fd.abs()).max(1.0),
                    "rot {i}[{a}]: {an} vs {fd}"
                );
            }
        }
    }

    fn half_plane_sdf(h: usize, w: usize) -> Grid {
        // Foreground is the left half; build through the real transform.
        let mask: Vec<bool> = (0..h * w).map(|i| (i % w) < w / 2).collect();
        crate::maskgeom::signed_distance_field(&mask, h, w, 1)
            .unwrap()
            .phi
    }

    #[test]
    fn inside_silhouette_costs_nothing() {
        let cam = Camera::look_at(
            Vector3::new(0.0, 0.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            64.0,
            64,
            64,
        );
        let sdfs = vec![vec![half_plane_sdf(64, 64)]];
        // Projects to the principal point x=32... that's outside (left half
        // is foreground, boundary at 31). Use a point left of center.
        let pos = [[-0.8, 0.0, 0.0]];
        let (v, _) = sdf_loss(&pos, &[1], &sdfs, std::slice::from_ref(&cam)).unwrap();
        assert_eq!(v, 0.0);
        // Background-labeled primitive contributes zero wherever it is.
        let (v0, g0) = sdf_loss(&[[5.0, 0.0, 0.0]], &[0], &sdfs, std::slice::from_ref(&cam)).unwrap();
        assert_eq!(v0, 0.0);
        assert_eq!(g0[0], [0.0; 3]);
    }

    #[test]
    fn three_pixels_outside_costs_nine() {
        let cam = Camera::look_at(
            Vector3::new(0.0, 0.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            64.0,
            64,
            64,
        );
        let sdfs = vec![vec![half_plane_sdf(64, 64)]];
        // Foreground columns 0..31; a point projecting to column 34 sits
        // 3 px from the nearest foreground column (31): phi = 3.
        // Column = fx * x / z + cx = 16x + 32 => x = (34 - 32)/16.
        let pos = [[2.0 / 16.0, 0.0, 0.0]];
        let (v, _) = sdf_loss(&pos, &[1], &sdfs, std::slice::from_ref(&cam)).unwrap();
        assert!((v - 9.0).abs() < 1e-9, "v = {v}");
    }

    #[test]
    fn sdf_gradient_matches_fd() {
        let cam = Camera::look_at(
            Vector3::new(0.3, 0.2, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            64.0,
            64,
            64,
        );
        let sdfs = vec![vec![half_plane_sdf(64, 64)]];
        let pos = [[0.21, 0.13, 0.0]];
        let (_, grad) = sdf_loss(&pos, &[1], &sdfs, std::slice::from_ref(&cam)).unwrap();
        let h = 1e-5;
        for a in 0..3 {
            let mut pp = pos;
            pp[0][a] += h;
            let mut pm = pos;
            pm[0][a] -= h;
            let vp = sdf_loss(&pp, &[1], &sdfs, std::slice::from_ref(&cam)).unwrap().0;
            let vm = sdf_loss(&pm, &[1], &sdfs, std::slice::from_ref(&cam)).unwrap().0;
            let fd = (vp - vm) / (2.0 * h);
            let an = grad[0][a];
            assert!(
                (an - fd).abs() < 1e-3 * an.abs().max(fd.abs()).max(1.0),
                "axis {a}: {an} vs {fd}"
            );
        }
    }

    #[test]
    fn missing_sdf_is_an_error() {
        let cam = Camera::look_at(
            Vector3::new(0.0, 0.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            64.0,
            64,
            64,
        );
        let sdfs: Vec<Vec<Grid>> = vec![vec![]];
        assert!(matches!(
            sdf_loss(&[[0.0; 3]], &[1], &sdfs, std::slice::from_ref(&cam)),
            Err(LossError::MissingSdf { .. })
        ));
    }

    #[test]
    fn temporal_losses_quadratic_behavior() {
        let mut prim = GaussianPrimitive::flat([0.0; 3], 0.5, 0.2, [0.5; 3]);
        let refs = vec![BgAppearance {
            sh: prim.sh,
            opacity_logit: prim.opacity_logit,
        }];
        let out = temporal_bg_loss(std::slice::from_ref(&prim), &refs).unwrap();
        assert_eq!(out.value, 0.0);
        // Single scalar drift delta -> delta^2 / count, gradient 2 delta / count.
        prim.opacity_logit += 0.3;
        let out = temporal_bg_loss(std::slice::from_ref(&prim), &refs).unwrap();
        assert!((out.value - 0.09).abs() < 1e-12);
        assert!((out.d_opacity[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn temporal_fg_covers_all_attributes() {
        let a = GaussianPrimitive::flat([0.1, 0.2, 0.3], 0.5, 0.2, [0.5; 3]);
        let mut b = a.clone();
        b.feature[3] += 0.5;
        b.position[1] -= 0.25;
        let out = temporal_fg_loss(&[b.clone()], &[a.clone()]).unwrap();
        assert!((out.value - (0.25 + 0.0625)).abs() < 1e-12);
        assert!((out.d_feature[0][3] - 1.0).abs() < 1e-12);
        assert!((out.d_position[0][1] + 0.5).abs() < 1e-12);
        // Count mismatch is a bookkeeping bug.
        assert!(matches!(
            temporal_fg_loss(&[a.clone(), b.clone()], &[a]),
            Err(LossError::ReferenceMismatch { .. })
        ));
    }
}
