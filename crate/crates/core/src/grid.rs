//! Planar multi-channel float buffer used for images, feature maps, flow
//! fields, SDFs, alpha and depth maps. Storage is channel-major so it maps
//! 1:1 onto the "F32M" on-disk layout.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid shape mismatch: {0}x{1}x{2} vs {3}x{4}x{5}")]
    ShapeMismatch(usize, usize, usize, usize, usize, usize),
    #[error("zero-area grid ({0}x{1})")]
    ZeroArea(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self {
            h,
            w,
            c,
            data: vec![0.0; h * w * c],
        }
    }

    pub fn from_data(h: usize, w: usize, c: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), h * w * c);
        Self { h, w, c, data }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.h == other.h && self.w == other.w && self.c == other.c
    }

    pub fn check_same_shape(&self, other: &Grid) -> Result<(), GridError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(GridError::ShapeMismatch(
                self.h, self.w, self.c, other.h, other.w, other.c,
            ))
        }
    }

    #[inline]
    pub fn idx(&self, ch: usize, row: usize, col: usize) -> usize {
        (ch * self.h + row) * self.w + col
    }

    #[inline]
    pub fn get(&self, ch: usize, row: usize, col: usize) -> f64 {
        self.data[self.idx(ch, row, col)]
    }

    #[inline]
    pub fn set(&mut self, ch: usize, row: usize, col: usize, v: f64) {
        let i = self.idx(ch, row, col);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, ch: usize, row: usize, col: usize, v: f64) {
        let i = self.idx(ch, row, col);
        self.data[i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, ch: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[ch * n..(ch + 1) * n]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [f64] {
        let n = self.h * self.w;
        &mut self.data[ch * n..(ch + 1) * n]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Bilinear sample of one channel at subpixel (x, y), where integer
    /// coordinates land exactly on grid nodes. Coordinates outside the grid
    /// are clamped; the returned flag reports whether clamping occurred.
    pub fn sample_bilinear(&self, ch: usize, x: f64, y: f64) -> (f64, bool) {
        let max_x = (self.w - 1) as f64;
        let max_y = (self.h - 1) as f64;
        let clamped = x < 0.0 || y < 0.0 || x > max_x || y > max_y;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor().min(max_x - 1.0).max(0.0);
        let y0 = y.floor().min(max_y - 1.0).max(0.0);
        let (x0i, y0i) = (x0 as usize, y0 as usize);
        let fx = x - x0;
        let fy = y - y0;
        let v00 = self.get(ch, y0i, x0i);
        let v01 = self.get(ch, y0i, x0i + 1);
        let v10 = self.get(ch, y0i + 1, x0i);
        let v11 = self.get(ch, y0i + 1, x0i + 1);
        let v = v00 * (1.0 - fx) * (1.0 - fy)
            + v01 * fx * (1.0 - fy)
            + v10 * (1.0 - fx) * fy
            + v11 * fx * fy;
        (v, clamped)
    }

    /// Gradient of `sample_bilinear` w.r.t. (x, y). Zero outside the grid
    /// (the clamp kills the dependence).
    pub fn sample_bilinear_grad(&self, ch: usize, x: f64, y: f64) -> (f64, f64) {
        let max_x = (self.w - 1) as f64;
        let max_y = (self.h - 1) as f64;
        if x < 0.0 || y < 0.0 || x > max_x || y > max_y {
            return (0.0, 0.0);
        }
        let x0 = x.floor().min(max_x - 1.0).max(0.0);
        let y0 = y.floor().min(max_y - 1.0).max(0.0);
        let (x0i, y0i) = (x0 as usize, y0 as usize);
        let fx = x - x0;
        let fy = y - y0;
        let v00 = self.get(ch, y0i, x0i);
        let v01 = self.get(ch, y0i, x0i + 1);
        let v10 = self.get(ch, y0i + 1, x0i);
        let v11 = self.get(ch, y0i + 1, x0i + 1);
        let dx = (v01 - v00) * (1.0 - fy) + (v11 - v10) * fy;
        let dy = (v10 - v00) * (1.0 - fx) + (v11 - v01) * fx;
        (dx, dy)
    }
}

/// Label map with values in {0, ..., D}; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    h: usize,
    w: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0; h * w],
        }
    }

    pub fn from_data(h: usize, w: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), h * w);
        Self { h, w, data }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.w + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.data[row * self.w + col] = v;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn max_label(&self) -> u8 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Binary mask of pixels carrying the given label.
    pub fn binary(&self, label: u8) -> Vec<bool> {
        self.data.iter().map(|&v| v == label).collect()
    }

    pub fn count(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_on_node_returns_node_value() {
        let mut g = Grid::zeros(3, 3, 1);
        g.set(0, 1, 2, 7.5);
        let (v, clamped) = g.sample_bilinear(0, 2.0, 1.0);
        assert_eq!(v, 7.5);
        assert!(!clamped);
    }

    #[test]
    fn bilinear_midpoint_averages_neighbors() {
        let mut g = Grid::zeros(2, 2, 1);
        g.set(0, 0, 0, 1.0);
        g.set(0, 0, 1, 2.0);
        g.set(0, 1, 0, 3.0);
        g.set(0, 1, 1, 4.0);
        let (v, _) = g.sample_bilinear(0, 0.5, 0.5);
        assert!((v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bilinear_clamps_outside() {
        let mut g = Grid::zeros(2, 2, 1);
        g.set(0, 0, 0, 1.0);
        let (_, clamped) = g.sample_bilinear(0, -1.0, 0.0);
        assert!(clamped);
    }

    #[test]
    fn bilinear_grad_matches_fd() {
        let g = Grid::from_data(4, 4, 1, (0..16).map(|i| (i as f64).sin()).collect());
        let (x, y) = (1.3, 2.6);
        let (dx, dy) = g.sample_bilinear_grad(0, x, y);
        let h = 1e-7;
        let fdx = (g.sample_bilinear(0, x + h, y).0 - g.sample_bilinear(0, x - h, y).0) / (2.0 * h);
        let fdy = (g.sample_bilinear(0, x, y + h).0 - g.sample_bilinear(0, x, y - h).0) / (2.0 * h);
        assert!((dx - fdx).abs() < 1e-6);
        assert!((dy - fdy).abs() < 1e-6);
    }
}
