//! Photometric loss: (1 - mix) L1 + mix (1 - SSIM)/2 with an 11x11
//! Gaussian window (sigma 1.5), plus its analytic gradient on the
//! rendered image. The masked variant works on mask-multiplied images so
//! masked-out pixels carry exactly zero loss and gradient.

use crate::grid::Grid;
use crate::losses::LossError;

const WIN: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Normalized 11-tap Gaussian, sigma 1.5.
pub fn gaussian_kernel_11() -> [f64; WIN] {
    let mut k = [0.0; WIN];
    let half = (WIN / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Separable correlation with zero padding. Centers without full support
/// are still produced; callers restrict to the valid interior.
fn filter_separable(src: &[f64], h: usize, w: usize, k: &[f64; WIN]) -> Vec<f64> {
    let half = WIN / 2;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let cc = c as i64 + i as i64 - half as i64;
                if cc >= 0 && (cc as usize) < w {
                    acc += kv * src[r * w + cc as usize];
                }
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let rr = r as i64 + i as i64 - half as i64;
                if rr >= 0 && (rr as usize) < h {
                    acc += kv * tmp[rr as usize * w + c];
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

struct SsimFields {
    s: Vec<f64>,
    mu_x: Vec<f64>,
    mu_y: Vec<f64>,
    d_mu_x: Vec<f64>,
    d_var_x: Vec<f64>,
    d_cov: Vec<f64>,
}

/// Per-window SSIM and the partials w.r.t. the windowed statistics of x.
fn ssim_fields(x: &[f64], y: &[f64], h: usize, w: usize, k: &[f64; WIN]) -> SsimFields {
    let mu_x = filter_separable(x, h, w, k);
    let mu_y = filter_separable(y, h, w, k);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let e_xx = filter_separable(&xx, h, w, k);
    let e_yy = filter_separable(&yy, h, w, k);
    let e_xy = filter_separable(&xy, h, w, k);
    let n = h * w;
    let mut s = vec![0.0; n];
    let mut d_mu_x = vec![0.0; n];
    let mut d_var_x = vec![0.0; n];
    let mut d_cov = vec![0.0; n];
    for i in 0..n {
        let var_x = e_xx[i] - mu_x[i] * mu_x[i];
        let var_y = e_yy[i] - mu_y[i] * mu_y[i];
        let cov = e_xy[i] - mu_x[i] * mu_y[i];
        let a = 2.0 * mu_x[i] * mu_y[i] + C1;
        let b = 2.0 * cov + C2;
        let c = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + C1;
        let d = var_x + var_y + C2;
        let cd = c * d;
        s[i] = a * b / cd;
        d_mu_x[i] = 2.0 * mu_y[i] * b / cd - s[i] * 2.0 * mu_x[i] / c;
        d_var_x[i] = -s[i] / d;
        d_cov[i] = 2.0 * a / cd;
    }
    SsimFields {
        s,
        mu_x,
        mu_y,
        d_mu_x,
        d_var_x,
        d_cov,
    }
}

/// Mean SSIM over interior windows of two images (any channel count,
/// averaged across channels). None when no window fits.
pub fn ssim_mean(a: &Grid, b: &Grid) -> Option<f64> {
    a.check_same_shape(b).ok()?;
    let (h, w) = (a.height(), a.width());
    let half = WIN / 2;
    if h < WIN || w < WIN {
        return None;
    }
    let k = gaussian_kernel_11();
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..a.channels() {
        let fields = ssim_fields(a.channel(ch), b.channel(ch), h, w, &k);
        for r in half..h - half {
            for c in half..w - half {
                total += fields.s[r * w + c];
                count += 1;
            }
        }
    }
    if count == 0 {
        None
    } else {
        Some(total / count as f64)
    }
}

#[derive(Debug, Clone)]
pub struct ColorLoss {
    pub value: f64,
    pub l1: f64,
    /// (1 - SSIM)/2 component before mixing; zero when no window fits.
    pub dssim: f64,
    pub d_pred: Grid,
    /// Set when a mask was given but selected no pixels.
    pub empty_mask: bool,
}

/// Photometric loss between a rendered image and its target.
/// With a mask, both images are multiplied by the mask first and the means
/// run over selected pixels only, so gradients vanish exactly outside.
pub fn color_loss(
    pred: &Grid,
    target: &Grid,
    mask: Option<&[bool]>,
    dssim_mix: f64,
) -> Result<ColorLoss, LossError> {
    pred.check_same_shape(target)
        .map_err(|e| LossError::Shape(e.to_string()))?;
    let (h, w, chs) = (pred.height(), pred.width(), pred.channels());
    if let Some(m) = mask {
        if m.len() != h * w {
            return Err(LossError::Shape(format!(
                "mask has {} entries for {}x{} image",
                m.len(),
                h,
                w
            )));
        }
    }
    let selected = mask
        .map(|m| m.iter().filter(|&&v| v).count())
        .unwrap_or(h * w);
    if selected == 0 {
        return Ok(ColorLoss {
            value: 0.0,
            l1: 0.0,
            dssim: 0.0,
            d_pred: Grid::zeros(h, w, chs),
            empty_mask: true,
        });
    }

    // Mask-multiplied working copies.
    let apply_mask = |g: &Grid| -> Grid {
        match mask {
            None => g.clone(),
            Some(m) => {
                let mut out = g.clone();
                for ch in 0..chs {
                    let plane = out.channel_mut(ch);
                    for (v, &keep) in plane.iter_mut().zip(m) {
                        if !keep {
                            *v = 0.0;
                        }
                    }
                }
                out
            }
        }
    };
    let x = apply_mask(pred);
    let y = apply_mask(target);

    let mut d_pred = Grid::zeros(h, w, chs);
    // L1 over selected pixels.
    let l1_count = (selected * chs) as f64;
    let mut l1 = 0.0;
    for ch in 0..chs {
        let xs = x.channel(ch);
        let ys = y.channel(ch);
        let dp = d_pred.channel_mut(ch);
        for i in 0..h * w {
            let keep = mask.map(|m| m[i]).unwrap_or(true);
            if !keep {
                continue;
            }
            let diff = xs[i] - ys[i];
            l1 += diff.abs() / l1_count;
            dp[i] += (1.0 - dssim_mix) * diff.signum() / l1_count;
        }
    }

    // D-SSIM over valid interior windows whose center is selected.
    let half = WIN / 2;
    let mut dssim = 0.0;
    if dssim_mix > 0.0 && h >= WIN && w >= WIN {
        let k = gaussian_kernel_11();
        // Count valid selected windows once (same for all channels).
        let mut windows = 0usize;
        for r in half..h - half {
            for c in half..w - half {
                if mask.map(|m| m[r * w + c]).unwrap_or(true) {
                    windows += 1;
                }
            }
        }
        if windows > 0 {
            let n_terms = (windows * chs) as f64;
            let mut ssim_sum = 0.0;
            for ch in 0..chs {
                let xs = x.channel(ch);
                let ys = y.channel(ch);
                let fields = ssim_fields(xs, ys, h, w, &k);
                // Per-window coefficient of dLoss/dS.
                let mut g1 = vec![0.0; h * w];
                let mut g2 = vec![0.0; h * w];
                let mut g3 = vec![0.0; h * w];
                let mut g2mu = vec![0.0; h * w];
                let mut g3mu = vec![0.0; h * w];
                for r in half..h - half {
                    for c in half..w - half {
                        let i = r * w + c;
                        if !mask.map(|m| m[i]).unwrap_or(true) {
                            continue;
                        }
                        ssim_sum += fields.s[i];
                        let coeff = -dssim_mix / (2.0 * n_terms);
                        g1[i] = coeff * fields.d_mu_x[i];
                        g2[i] = coeff * fields.d_var_x[i];
                        g3[i] = coeff * fields.d_cov[i];
                        g2mu[i] = g2[i] * fields.mu_x[i];
                        g3mu[i] = g3[i] * fields.mu_y[i];
                    }
                }
                // dL/dx_p = (k*g1) + 2 x_p (k*g2) - 2 (k*(g2 mu_x))
                //         + y_p (k*g3) - (k*(g3 mu_y)).
                let kg1 = filter_separable(&g1, h, w, &k);
                let kg2 = filter_separable(&g2, h, w, &k);
                let kg3 = filter_separable(&g3, h, w, &k);
                let kg2mu = filter_separable(&g2mu, h, w, &k);
                let kg3mu = filter_separable(&g3mu, h, w, &k);
                let dp = d_pred.channel_mut(ch);
                for i in 0..h * w {
                    // Masked-out pixels have zero influence on the masked
                    // images, so their gradient stays exactly zero.
                    if !mask.map(|m| m[i]).unwrap_or(true) {
                        continue;
                    }
                    dp[i] += kg1[i] + 2.0 * xs[i] * kg2[i] - 2.0 * kg2mu[i] + ys[i] * kg3[i]
                        - kg3mu[i];
                }
            }
            dssim = (1.0 - ssim_sum / n_terms) / 2.0;
        }
    }

    Ok(ColorLoss {
        value: (1.0 - dssim_mix) * l1 + dssim_mix * dssim,
        l1,
        dssim,
        d_pred,
        empty_mask: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_data(h, w, c, (0..h * w * c).map(|_| rng.gen_range(0.05..0.95)).collect())
    }

    #[test]
    fn identical_images_have_zero_loss() {
        let a = random_image(16, 16, 3, 1);
        let out = color_loss(&a, &a, None, 0.2).unwrap();
        assert!(out.value.abs() < 1e-12);
        assert!(out.d_pred.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_difference_pure_l1() {
        let mut a = Grid::zeros(8, 8, 3);
        a.fill(0.6);
        let mut b = Grid::zeros(8, 8, 3);
        b.fill(0.5);
        let out = color_loss(&a, &b, None, 0.0).unwrap();
        assert!((out.value - 0.1).abs() < 1e-12);
    }

    /// Naive per-pixel windowed SSIM oracle.
    fn ssim_oracle(a: &Grid, b: &Grid) -> f64 {
        let k = gaussian_kernel_11();
        let (h, w) = (a.height(), a.width());
        let half = WIN / 2;
        let mut total = 0.0;
        let mut count = 0;
        for ch in 0..a.channels() {
            for r in half..h - half {
                for c in half..w - half {
                    let mut mu_x = 0.0;
                    let mut mu_y = 0.0;
                    let mut e_xx = 0.0;
                    let mut e_yy = 0.0;
                    let mut e_xy = 0.0;
                    for dr in 0..WIN {
                        for dc in 0..WIN {
                            let kv = k[dr] * k[dc];
                            let x = a.get(ch, r + dr - half, c + dc - half);
                            let y = b.get(ch, r + dr - half, c + dc - half);
                            mu_x += kv * x;
                            mu_y += kv * y;
                            e_xx += kv * x * x;
                            e_yy += kv * y * y;
                            e_xy += kv * x * y;
                        }
                    }
                    let var_x = e_xx - mu_x * mu_x;
                    let var_y = e_yy - mu_y * mu_y;
                    let cov = e_xy - mu_x * mu_y;
                    total += (2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)
                        / ((mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2));
                    count += 1;
                }
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_matches_scalar_reference() {
        let a = random_image(16, 16, 1, 5);
        let b = random_image(16, 16, 1, 6);
        let fast = ssim_mean(&a, &b).unwrap();
        let slow = ssim_oracle(&a, &b);
        assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = random_image(14, 13, 2, 11);
        let b = random_image(14, 13, 2, 12);
        let out = color_loss(&a, &b, None, 0.35).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..40 {
            let ch = rng.gen_range(0..2);
            let r = rng.gen_range(0..14);
            let c = rng.gen_range(0..13);
            let mut p = a.clone();
            p.set(ch, r, c, p.get(ch, r, c) + h);
            let mut m = a.clone();
            m.set(ch, r, c, m.get(ch, r, c) - h);
            let fd = (color_loss(&p, &b, None, 0.35).unwrap().value
                - color_loss(&m, &b, None, 0.35).unwrap().value)
                / (2.0 * h);
            let an = out.d_pred.get(ch, r, c);
            assert!(
                (an - fd).abs() < 2e-2 * an.abs().max(fd.abs()).max(5e-4),
                "({ch},{r},{c}): {an} vs {fd}"
            );
        }
    }

    #[test]
    fn masked_loss_ignores_and_zeroes_outside() {
        let a = random_image(16, 16, 3, 21);
        let b = random_image(16, 16, 3, 22);
        let mask: Vec<bool> = (0..256).map(|i| (i / 16) < 8).collect();
        let out = color_loss(&a, &b, Some(&mask), 0.2).unwrap();
        assert!(!out.empty_mask);
        // Gradient exactly zero outside the mask.
        for ch in 0..3 {
            for r in 8..16 {
                for c in 0..16 {
                    assert_eq!(out.d_pred.get(ch, r, c), 0.0);
                }
            }
        }
        // Changing a masked-out pixel leaves the value untouched.
        let mut a2 = a.clone();
        a2.set(0, 12, 5, 0.0);
        let out2 = color_loss(&a2, &b, Some(&mask), 0.2).unwrap();
        assert_eq!(out.value, out2.value);
        // FD check inside the mask.
        let h = 1e-5;
        let mut p = a.clone();
        p.set(1, 6, 6, p.get(1, 6, 6) + h);
        let mut m = a.clone();
        m.set(1, 6, 6, m.get(1, 6, 6) - h);
        let fd = (color_loss(&p, &b, Some(&mask), 0.2).unwrap().value
            - color_loss(&m, &b, Some(&mask), 0.2).unwrap().value)
            / (2.0 * h);
        let an = out.d_pred.get(1, 6, 6);
        assert!((an - fd).abs() < 2e-2 * an.abs().max(fd.abs()).max(1e-4));
    }

    #[test]
    fn empty_mask_selection_yields_zero_with_flag() {
        let a = random_image(8, 8, 3, 31);
        let out = color_loss(&a, &a, Some(&vec![false; 64]), 0.2).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.empty_mask);
    }
}
