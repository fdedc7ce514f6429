//! Energy terms and their analytic gradients. Each term returns its value
//! together with gradients w.r.t. its direct inputs; the trainer composes
//! the weighted sum.

mod photometric;
mod regularizers;
mod semantic;

pub use photometric::{color_loss, gaussian_kernel_11, ssim_mean, ColorLoss};
pub use regularizers::{
    arap_loss, iso_size_losses, sdf_loss, temporal_bg_loss, temporal_fg_loss, ArapGrads,
    IsoSizeLoss, TemporalBgLoss, TemporalFgLoss,
};
pub use semantic::{emb_loss, id_loss, kl3d_loss, softmax_rows, Kl3dLoss};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("pixel {pixel}: probability row sums to {sum}, not 1")]
    NotASimplex { pixel: usize, sum: f64 },
    #[error("pixel {pixel}: label {label} exceeds instance count {max}")]
    LabelOutOfRange { pixel: usize, label: u8, max: u8 },
    #[error("foreground count {n} too small for k={k} neighbors")]
    TooFewForKnn { n: usize, k: usize },
    #[error("missing SDF for view {view}, instance {instance}")]
    MissingSdf { view: usize, instance: u8 },
    #[error("attribute count mismatch vs reference: {got} vs {expected}")]
    ReferenceMismatch { got: usize, expected: usize },
}

/// Weights of the energy terms. Values follow the dynamic-training stage;
/// the stage schedules in the trainer override the stage-dependent ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_iso: f64,
    pub lambda_size: f64,
    pub lambda_id: f64,
    pub lambda_emb: f64,
    pub lambda_3d: f64,
    pub lambda_smooth: f64,
    pub lambda_sdf: f64,
    pub lambda_temp_bg: f64,
    pub lambda_temp: f64,
    /// D-SSIM fraction of the photometric loss.
    pub dssim_mix: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_iso: 0.0005,
            lambda_size: 0.02,
            lambda_id: 1.0,
            lambda_emb: 10.0,
            lambda_3d: 2.0,
            lambda_smooth: 0.0001,
            lambda_sdf: 0.01,
            lambda_temp_bg: 0.001,
            lambda_temp: 0.01,
            dssim_mix: 0.2,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        let all = [
            self.lambda_iso,
            self.lambda_size,
            self.lambda_id,
            self.lambda_emb,
            self.lambda_3d,
            self.lambda_smooth,
            self.lambda_sdf,
            self.lambda_temp_bg,
            self.lambda_temp,
        ];
        for v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(LossError::Shape(format!("negative or non-finite weight {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.dssim_mix) {
            return Err(LossError::Shape(format!(
                "dssim_mix {} outside [0,1]",
                self.dssim_mix
            )));
        }
        Ok(())
    }
}

/// Per-iteration loss term breakdown, streamed as JSON lines by the CLI.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub color: f64,
    pub iso: f64,
    pub size: f64,
    pub id: f64,
    pub emb: f64,
    pub kl3d: f64,
    pub smooth: f64,
    pub sdf: f64,
    pub temp_bg: f64,
    pub temp: f64,
}

impl TermBreakdown {
    /// Weighted total; stage-specific terms enter with weight zero.
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        self.color
            + w.lambda_iso * self.iso
            + w.lambda_size * self.size
            + w.lambda_id * self.id
            + w.lambda_emb * self.emb
            + w.lambda_3d * self.kl3d
            + w.lambda_smooth * self.smooth
            + w.lambda_sdf * self.sdf
            + w.lambda_temp_bg * self.temp_bg
            + w.lambda_temp * self.temp
    }
}
