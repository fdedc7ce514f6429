//! Calibrated pinhole cameras. World-to-camera convention: x_cam = R x + t.

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("camera {index}: intrinsics must be upper-triangular with positive focal lengths")]
    BadIntrinsics { index: usize },
    #[error("camera {index}: rotation is not orthonormal (|RR^T - I| = {dev:.3e})")]
    NotOrthonormal { index: usize, dev: f64 },
    #[error("camera {index}: zero-area image {width}x{height}")]
    ZeroArea {
        index: usize,
        width: usize,
        height: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Camera {
    /// Intrinsics, row-major 3x3.
    pub k: [[f64; 3]; 3],
    /// World-to-camera rotation, row-major 3x3.
    pub r: [[f64; 3]; 3],
    /// World-to-camera translation.
    pub t: [f64; 3],
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.k[r][c])
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.r[r][c])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.t[0], self.t[1], self.t[2])
    }

    pub fn fx(&self) -> f64 {
        self.k[0][0]
    }

    pub fn fy(&self) -> f64 {
        self.k[1][1]
    }

    pub fn cx(&self) -> f64 {
        self.k[0][2]
    }

    pub fn cy(&self) -> f64 {
        self.k[1][2]
    }

    /// Camera center in world coordinates: -R^T t.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    pub fn world_to_cam(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    /// Perspective projection to pixel coordinates (x right, y down).
    /// Returns None when the point is at or behind the camera plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        let pc = self.world_to_cam(p);
        if pc.z <= 0.0 {
            return None;
        }
        Some(Vector2::new(
            self.fx() * pc.x / pc.z + self.cx(),
            self.fy() * pc.y / pc.z + self.cy(),
        ))
    }

    /// Full 3x4 projection matrix K [R | t].
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation());
        rt.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&self.translation());
        self.intrinsics() * rt
    }

    /// Unit ray direction in world coordinates through pixel (x, y).
    pub fn ray_direction(&self, x: f64, y: f64) -> Vector3<f64> {
        let d = Vector3::new((x - self.cx()) / self.fx(), (y - self.cy()) / self.fy(), 1.0);
        (self.rotation().transpose() * d).normalize()
    }

    pub fn validate(&self, index: usize) -> Result<(), CameraError> {
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::ZeroArea {
                index,
                width: self.width,
                height: self.height,
            });
        }
        let k = self.intrinsics();
        let lower_ok = k[(1, 0)] == 0.0 && k[(2, 0)] == 0.0 && k[(2, 1)] == 0.0;
        if !lower_ok || k[(0, 0)] <= 0.0 || k[(1, 1)] <= 0.0 {
            return Err(CameraError::BadIntrinsics { index });
        }
        let r = self.rotation();
        let dev = (r * r.transpose() - Matrix3::identity()).norm();
        if dev > 1e-6 {
            return Err(CameraError::NotOrthonormal { index, dev });
        }
        Ok(())
    }

    /// A camera at `eye` looking at `target`, `up` approximately up, with
    /// the given focal length in pixels.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: f64,
        width: usize,
        height: usize,
    ) -> Self {
        let fwd = (target - eye).normalize();
        let right = fwd.cross(&up).normalize();
        let down = fwd.cross(&right).normalize();
        // Rows of R are the camera axes (x right, y down, z forward).
        let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), fwd.transpose()]);
        let t = -r * eye;
        Camera {
            k: [
                [focal, 0.0, width as f64 / 2.0],
                [0.0, focal, height as f64 / 2.0],
                [0.0, 0.0, 1.0],
            ],
            r: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            t: [t[0], t[1], t[2]],
            width,
            height,
        }
    }
}

/// The calibrated multi-view rig.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRig {
    pub cameras: Vec<Camera>,
}

impl CameraRig {
    pub fn new(cameras: Vec<Camera>) -> Result<Self, CameraError> {
        for (i, cam) in cameras.iter().enumerate() {
            cam.validate(i)?;
        }
        Ok(Self { cameras })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn look_at_projects_target_to_principal_point() {
        let cam = Camera::look_at(
            Vector3::new(0.0, 0.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            100.0,
            64,
            48,
        );
        cam.validate(0).unwrap();
        let uv = cam.project(&Vector3::zeros()).unwrap();
        assert_relative_eq!(uv.x, 32.0, epsilon = 1e-9);
        assert_relative_eq!(uv.y, 24.0, epsilon = 1e-9);
    }

    #[test]
    fn behind_camera_is_not_projected() {
        let cam = Camera::look_at(
            Vector3::new(0.0, 0.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            100.0,
            64,
            48,
        );
        assert!(cam.project(&Vector3::new(0.0, 0.0, -8.0)).is_none());
    }

    #[test]
    fn projection_matrix_agrees_with_project() {
        let cam = Camera::look_at(
            Vector3::new(2.0, 1.0, -4.0),
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            120.0,
            64,
            64,
        );
        let p = Vector3::new(0.3, -0.2, 0.5);
        let m = cam.projection_matrix();
        let x = m * p.insert_row(3, 1.0);
        let uv = cam.project(&p).unwrap();
        assert_relative_eq!(x[0] / x[2], uv.x, epsilon = 1e-10);
        assert_relative_eq!(x[1] / x[2], uv.y, epsilon = 1e-10);
    }

    #[test]
    fn center_round_trips() {
        let eye = Vector3::new(1.0, -2.0, 3.0);
        let cam = Camera::look_at(
            eye,
            Vector3::zeros(),
            Vector3::new(0.0, 1.0, 0.0),
            90.0,
            32,
            32,
        );
        assert_relative_eq!(cam.center(), eye, epsilon = 1e-10);
    }
}
