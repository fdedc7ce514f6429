//! Instance-aware spatio-temporal Gaussian splatting on the CPU.
//!
//! The crate models a dynamic scene as a static background layer plus a
//! per-frame foreground layer of 3D Gaussians carrying appearance and
//! 8-dim semantic features. It provides:
//!
//! - a deterministic tiled rasterizer with analytic gradients for every
//!   primitive attribute ([`raster`]);
//! - cross-view instance identity alignment from mask sequences
//!   ([`identity`]);
//! - exact Euclidean SDFs and mask utilities ([`maskgeom`]);
//! - optical-flow-guided warping with multi-view DLT triangulation
//!   ([`flow`]);
//! - the full energy stack with analytic gradients ([`losses`]);
//! - tiny MLP decoders and a linear embedding autoencoder ([`heads`]);
//! - the four-stage optimization schedule ([`train`]);
//! - open-vocabulary identity/segment queries ([`query`]);
//! - dataset contracts plus a ground-truth-complete synthetic generator
//!   ([`data`]);
//! - image and segmentation metrics with report output ([`evalkit`]).
//!
//! Everything is f64 internally and deterministic given a seed; checkpoint
//! records are stored as f32 per the container contract.

pub mod camera;
pub mod checkpoint;
pub mod data;
pub mod evalkit;
pub mod flow;
pub mod formats;
pub mod grid;
pub mod heads;
pub mod identity;
pub mod losses;
pub mod maskgeom;
pub mod math;
pub mod query;
pub mod raster;
pub mod scene;
pub mod train;

#[doc(hidden)]
pub mod test_support;
