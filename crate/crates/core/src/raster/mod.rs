//! Tiled forward splatting of color, semantic features, alpha and depth,
//! with an analytic backward pass for every primitive attribute.
//!
//! Determinism contract: primitives are depth-sorted globally per view with
//! index tie-breaks, tiles are processed independently, and all reductions
//! happen in tile order, so repeated renders are bit-identical regardless
//! of thread count.

mod backward;
mod forward;
pub(crate) mod project;

pub use backward::{rasterize_backward, Gradients, Upstream};
pub use forward::{rasterize, RenderTarget};
pub use project::{project_gaussian, projection_jacobian, Projected};

use thiserror::Error;

use crate::scene::SceneError;

/// All rasterization constants live here.
#[derive(Debug, Clone)]
pub struct RasterConfig {
    pub tile_size: usize,
    /// Per-pixel front-to-back termination threshold.
    pub transmittance_eps: f64,
    /// Low-pass dilation added to the projected covariance, in pixels^2.
    pub cov_dilation: f64,
    pub near: f64,
    /// Alpha saturation guard, as in standard splatting.
    pub alpha_clamp: f64,
    /// Contributions below this alpha are not blended or recorded.
    pub min_record_alpha: f64,
    /// Image cull radius in standard deviations (~99% mass).
    pub cull_sigma: f64,
    /// Footprint evaluation radius in standard deviations. Larger than the
    /// cull radius so the blend is smooth at footprint edges.
    pub bin_sigma: f64,
    /// Active spherical harmonics degree (0..=3); 0 renders DC only.
    pub sh_degree: usize,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            tile_size: 16,
            transmittance_eps: 1e-4,
            cov_dilation: 0.3,
            near: 0.01,
            alpha_clamp: 0.99,
            min_record_alpha: 1e-12,
            cull_sigma: 3.0,
            bin_sigma: 5.0,
            sh_degree: 3,
        }
    }
}

impl RasterConfig {
    pub fn active_sh_coeffs(&self) -> usize {
        (self.sh_degree + 1) * (self.sh_degree + 1)
    }
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("zero-area image ({width}x{height})")]
    ZeroArea { width: usize, height: usize },
    #[error("upstream gradient shape mismatch for {field}")]
    UpstreamShape { field: &'static str },
    #[error("render target does not match primitive list ({target} vs {prims})")]
    TargetMismatch { target: usize, prims: usize },
}

/// Symmetric 2x2 matrix stored as (m00, m01, m11).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Sym2 {
    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn inverse(&self) -> Sym2 {
        let det = self.det();
        Sym2 {
            a: self.c / det,
            b: -self.b / det,
            c: self.a / det,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let mid = 0.5 * (self.a + self.c);
        let disc = (0.25 * (self.a - self.c) * (self.a - self.c) + self.b * self.b).sqrt();
        mid + disc
    }

    /// Quadratic form d^T M d.
    pub fn quad(&self, dx: f64, dy: f64) -> f64 {
        self.a * dx * dx + 2.0 * self.b * dx * dy + self.c * dy * dy
    }
}
