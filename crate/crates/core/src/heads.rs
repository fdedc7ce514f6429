//! Tiny trainable decoders with manual forward/backward: the instance
//! classification head, the language-embedding head, and the linear
//! autoencoder that compresses raw sentence embeddings to 6 dims.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::io::Cursor;
use thiserror::Error;

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("input dim {got} does not match first layer dim {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("stale cache: built for parameter version {cache}, current is {current}")]
    StaleCache { cache: u64, current: u64 },
    #[error("upstream dim {got} does not match output dim {expected}")]
    UpstreamDim { got: usize, expected: usize },
    #[error("autoencoder needs raw dim >= {code}, got {raw}")]
    RawDimTooSmall { raw: usize, code: usize },
    #[error("autoencoder needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("head deserialization failed: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Linear,
}

/// One dense layer, weights row-major (rows = out dim, cols = in dim).
#[derive(Debug, Clone)]
pub struct Layer {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub activation: Activation,
}

/// A small MLP; the default architecture is in -> 64 -> 64 -> out with
/// leaky rectifier hidden activations and a linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Layer>,
    version: u64,
}

/// Forward cache: layer inputs and pre-activations, consumed by backward.
pub struct MlpCache {
    pub output: Vec<f64>,
    rows: usize,
    inputs: Vec<Vec<f64>>,
    preacts: Vec<Vec<f64>>,
    version: u64,
}

/// Gradients mirroring the layer shapes, plus gradients on the inputs.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Mlp {
    pub fn new(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (i, pair) in dims.windows(2).enumerate() {
            let (cols, rows) = (pair[0], pair[1]);
            let scale = (2.0 / cols as f64).sqrt();
            let weight = (0..rows * cols)
                .map(|_| rng.gen_range(-1.0..1.0) * scale)
                .collect();
            layers.push(Layer {
                weight,
                bias: vec![0.0; rows],
                rows,
                cols,
                activation: if i + 1 == dims.len() - 1 {
                    Activation::Linear
                } else {
                    Activation::LeakyRelu
                },
            });
        }
        Self { layers, version: 0 }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable parameter access; bumps the version so outstanding caches
    /// become stale.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.version += 1;
        &mut self.layers
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Batched forward over `rows` rows of `in_dim` values each.
    pub fn forward(&self, input: &[f64], rows: usize) -> Result<MlpCache, HeadError> {
        if input.len() != rows * self.in_dim() {
            return Err(HeadError::InputDim {
                got: if rows == 0 { 0 } else { input.len() / rows },
                expected: self.in_dim(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut cur = input.to_vec();
        for layer in &self.layers {
            let mut pre = vec![0.0; rows * layer.rows];
            for r in 0..rows {
                let x = &cur[r * layer.cols..(r + 1) * layer.cols];
                let out = &mut pre[r * layer.rows..(r + 1) * layer.rows];
                for (o, out_v) in out.iter_mut().enumerate() {
                    let wrow = &layer.weight[o * layer.cols..(o + 1) * layer.cols];
                    let mut acc = layer.bias[o];
                    for (wv, xv) in wrow.iter().zip(x) {
                        acc += wv * xv;
                    }
                    *out_v = acc;
                }
            }
            let post = match layer.activation {
                Activation::Linear => pre.clone(),
                Activation::LeakyRelu => pre
                    .iter()
                    .map(|&v| if v > 0.0 { v } else { LEAKY_SLOPE * v })
                    .collect(),
            };
            inputs.push(std::mem::replace(&mut cur, post));
            preacts.push(pre);
        }
        Ok(MlpCache {
            output: cur,
            rows,
            inputs,
            preacts,
            version: self.version,
        })
    }

    /// Exact backprop. Returns parameter gradients and input gradients.
    pub fn backward(&self, cache: &MlpCache, d_output: &[f64]) -> Result<MlpGrads, HeadError> {
        if cache.version != self.version {
            return Err(HeadError::StaleCache {
                cache: cache.version,
                current: self.version,
            });
        }
        if d_output.len() != cache.rows * self.out_dim() {
            return Err(HeadError::UpstreamDim {
                got: d_output.len(),
                expected: cache.rows * self.out_dim(),
            });
        }
        let rows = cache.rows;
        let mut weight_grads: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.weight.len()])
            .collect();
        let mut bias_grads: Vec<Vec<f64>> =
            self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect();
        let mut delta = d_output.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            // Through the activation.
            if layer.activation == Activation::LeakyRelu {
                let pre = &cache.preacts[li];
                for (d, &p) in delta.iter_mut().zip(pre) {
                    if p <= 0.0 {
                        *d *= LEAKY_SLOPE;
                    }
                }
            }
            let input = &cache.inputs[li];
            let wg = &mut weight_grads[li];
            let bgr = &mut bias_grads[li];
            let mut d_in = vec![0.0; rows * layer.cols];
            for r in 0..rows {
                let x = &input[r * layer.cols..(r + 1) * layer.cols];
                let d = &delta[r * layer.rows..(r + 1) * layer.rows];
                let din = &mut d_in[r * layer.cols..(r + 1) * layer.cols];
                for (o, &dv) in d.iter().enumerate() {
                    bgr[o] += dv;
                    let wrow_g = &mut wg[o * layer.cols..(o + 1) * layer.cols];
                    let wrow = &layer.weight[o * layer.cols..(o + 1) * layer.cols];
                    for c in 0..layer.cols {
                        wrow_g[c] += dv * x[c];
                        din[c] += dv * wrow[c];
                    }
                }
            }
            delta = d_in;
        }
        Ok(MlpGrads {
            weight: weight_grads,
            bias: bias_grads,
            input: delta,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.write_u32::<LittleEndian>(self.layers.len() as u32)
            .unwrap();
        for l in &self.layers {
            out.write_u32::<LittleEndian>(l.rows as u32).unwrap();
            out.write_u32::<LittleEndian>(l.cols as u32).unwrap();
            out.write_u8(match l.activation {
                Activation::LeakyRelu => 1,
                Activation::Linear => 0,
            })
            .unwrap();
            for &v in l.weight.iter().chain(l.bias.iter()) {
                out.write_f64::<LittleEndian>(v).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HeadError> {
        let mut r = Cursor::new(bytes);
        let err = |e: std::io::Error| HeadError::Decode(e.to_string());
        let n = r.read_u32::<LittleEndian>().map_err(err)? as usize;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let rows = r.read_u32::<LittleEndian>().map_err(err)? as usize;
            let cols = r.read_u32::<LittleEndian>().map_err(err)? as usize;
            let activation = match r.read_u8().map_err(err)? {
                1 => Activation::LeakyRelu,
                _ => Activation::Linear,
            };
            let mut weight = vec![0.0; rows * cols];
            for v in weight.iter_mut() {
                *v = r.read_f64::<LittleEndian>().map_err(err)?;
            }
            let mut bias = vec![0.0; rows];
            for v in bias.iter_mut() {
                *v = r.read_f64::<LittleEndian>().map_err(err)?;
            }
            layers.push(Layer {
                weight,
                bias,
                rows,
                cols,
                activation,
            });
        }
        Ok(Self { layers, version: 0 })
    }
}

/// Linear autoencoder around the data mean: enc(x) = We (x - mean),
/// dec(z) = Wd z + mean. Trained by gradient descent on the mean squared
/// reconstruction error, which for the linear case has the PCA optimum.
#[derive(Debug, Clone)]
pub struct Autoencoder {
    pub mean: Vec<f64>,
    /// code_dim x raw_dim, row-major.
    pub encode_w: Vec<f64>,
    /// raw_dim x code_dim, row-major.
    pub decode_w: Vec<f64>,
    pub raw_dim: usize,
    pub code_dim: usize,
}

#[derive(Debug, Clone)]
pub struct AutoencoderReport {
    pub mse: f64,
    /// Cosine similarity between each input row and its reconstruction.
    pub cosines: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AutoencoderConfig {
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            iters: 4000,
            lr: 0.02,
            seed: 7,
        }
    }
}

impl Autoencoder {
    pub fn fit(
        rows: &[Vec<f64>],
        code_dim: usize,
        cfg: &AutoencoderConfig,
    ) -> Result<(Self, AutoencoderReport), HeadError> {
        let n = rows.len();
        if n < 2 {
            return Err(HeadError::TooFewRows(n));
        }
        let raw_dim = rows[0].len();
        if raw_dim < code_dim {
            return Err(HeadError::RawDimTooSmall {
                raw: raw_dim,
                code: code_dim,
            });
        }
        let mut mean = vec![0.0; raw_dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let scale = (1.0 / raw_dim as f64).sqrt();
        let mut enc: Vec<f64> = (0..code_dim * raw_dim)
            .map(|_| rng.gen_range(-1.0..1.0) * scale)
            .collect();
        let mut dec: Vec<f64> = (0..raw_dim * code_dim)
            .map(|_| rng.gen_range(-1.0..1.0) * scale)
            .collect();

        // Adam state for both matrices.
        let mut m1 = vec![0.0; enc.len() + dec.len()];
        let mut m2 = vec![0.0; enc.len() + dec.len()];
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-12);
        for step in 1..=cfg.iters {
            let mut genc = vec![0.0; enc.len()];
            let mut gdec = vec![0.0; dec.len()];
            for x in &centered {
                // z = We x; y = Wd z; r = y - x.
                let mut z = vec![0.0; code_dim];
                for (k, zk) in z.iter_mut().enumerate() {
                    for j in 0..raw_dim {
                        *zk += enc[k * raw_dim + j] * x[j];
                    }
                }
                let mut resid = vec![0.0; raw_dim];
                for j in 0..raw_dim {
                    let mut y = 0.0;
                    for k in 0..code_dim {
                        y += dec[j * code_dim + k] * z[k];
                    }
                    resid[j] = y - x[j];
                }
                let coeff = 2.0 / (n * raw_dim) as f64;
                // dL/dWd = coeff * r z^T; dL/dz = Wd^T r; dL/dWe = dz x^T.
                let mut dz = vec![0.0; code_dim];
                for j in 0..raw_dim {
                    for k in 0..code_dim {
                        gdec[j * code_dim + k] += coeff * resid[j] * z[k];
                        dz[k] += dec[j * code_dim + k] * resid[j];
                    }
                }
                for k in 0..code_dim {
                    for j in 0..raw_dim {
                        genc[k * raw_dim + j] += coeff * dz[k] * x[j];
                    }
                }
            }
            let t = step as f64;
            let bc1 = 1.0 - b1.powf(t);
            let bc2 = 1.0 - b2.powf(t);
            for (i, g) in genc.iter().chain(gdec.iter()).enumerate() {
                m1[i] = b1 * m1[i] + (1.0 - b1) * g;
                m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
                let update = cfg.lr * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + eps);
                if i < enc.len() {
                    enc[i] -= update;
                } else {
                    dec[i - enc.len()] -= update;
                }
            }
        }

        let ae = Self {
            mean,
            encode_w: enc,
            decode_w: dec,
            raw_dim,
            code_dim,
        };
        let mut mse = 0.0;
        let mut cosines = Vec::with_capacity(n);
        for row in rows {
            let rec = ae.decode(&ae.encode(row));
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for (a, b) in row.iter().zip(&rec) {
                mse += (a - b) * (a - b) / (n * raw_dim) as f64;
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            cosines.push(if na > 0.0 && nb > 0.0 {
                dot / (na.sqrt() * nb.sqrt())
            } else {
                0.0
            });
        }
        Ok((ae, AutoencoderReport { mse, cosines }))
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.code_dim];
        for (k, zk) in z.iter_mut().enumerate() {
            for j in 0..self.raw_dim {
                *zk += self.encode_w[k * self.raw_dim + j] * (x[j] - self.mean[j]);
            }
        }
        z
    }

    pub fn decode(&self, z: &[f64]) -> Vec<f64> {
        let mut y = self.mean.clone();
        for j in 0..self.raw_dim {
            for k in 0..self.code_dim {
                y[j] += self.decode_w[j * self.code_dim + k] * z[k];
            }
        }
        y
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.write_u32::<LittleEndian>(self.raw_dim as u32).unwrap();
        out.write_u32::<LittleEndian>(self.code_dim as u32).unwrap();
        for &v in self
            .mean
            .iter()
            .chain(self.encode_w.iter())
            .chain(self.decode_w.iter())
        {
            out.write_f64::<LittleEndian>(v).unwrap();
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HeadError> {
        let mut r = Cursor::new(bytes);
        let err = |e: std::io::Error| HeadError::Decode(e.to_string());
        let raw_dim = r.read_u32::<LittleEndian>().map_err(err)? as usize;
        let code_dim = r.read_u32::<LittleEndian>().map_err(err)? as usize;
        let mut read_vec = |len: usize| -> Result<Vec<f64>, HeadError> {
            let mut v = vec![0.0; len];
            for x in v.iter_mut() {
                *x = r
                    .read_f64::<LittleEndian>()
                    .map_err(|e| HeadError::Decode(e.to_string()))?;
            }
            Ok(v)
        };
        Ok(Self {
            mean: read_vec(raw_dim)?,
            encode_w: read_vec(code_dim * raw_dim)?,
            decode_w: read_vec(raw_dim * code_dim)?,
            raw_dim,
            code_dim,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn zero_params_give_zero_output() {
        let mut mlp = Mlp::new(&[4, 8, 3], 1);
        for l in mlp.layers_mut() {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        let cache = mlp.forward(&[1.0, -2.0, 3.0, 0.5], 1).unwrap();
        assert!(cache.output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let mut mlp = Mlp::new(&[3, 3], 2);
        {
            let l = &mut mlp.layers_mut()[0];
            l.weight.fill(0.0);
            for i in 0..3 {
                l.weight[i * 3 + i] = 1.0;
            }
            l.bias.fill(0.0);
        }
        let input = [0.3, -0.7, 2.0];
        let cache = mlp.forward(&input, 1).unwrap();
        assert_eq!(cache.output, input.to_vec());
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let mlp = Mlp::new(&[4, 8, 3], 1);
        assert!(matches!(
            mlp.forward(&[0.0; 5], 1),
            Err(HeadError::InputDim { .. })
        ));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut mlp = Mlp::new(&[4, 8, 3], 1);
        let cache = mlp.forward(&[0.1; 4], 1).unwrap();
        mlp.layers_mut()[0].weight[0] += 0.5;
        assert!(matches!(
            mlp.backward(&cache, &[1.0, 0.0, 0.0]),
            Err(HeadError::StaleCache { .. })
        ));
    }

    /// FD oracle over weights, biases and inputs, scalar probe loss
    /// L = <upstream, output>.
    #[test]
    fn backward_matches_finite_differences() {
        let mlp = Mlp::new(&[5, 16, 16, 4], 99);
        let rows = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let input: Vec<f64> = (0..rows * 5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..rows * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cache = mlp.forward(&input, rows).unwrap();
        let grads = mlp.backward(&cache, &upstream).unwrap();

        let loss = |m: &Mlp, input: &[f64]| {
            let c = m.forward(input, rows).unwrap();
            c.output.iter().zip(&upstream).map(|(a, b)| a * b).sum::<f64>()
        };
        let h = 1e-6;
        for li in 0..mlp.layers().len() {
            for wi in (0..mlp.layers()[li].weight.len()).step_by(7) {
                let mut p = mlp.clone();
                p.layers_mut()[li].weight[wi] += h;
                let mut m = mlp.clone();
                m.layers_mut()[li].weight[wi] -= h;
                let fd = (loss(&p, &input) - loss(&m, &input)) / (2.0 * h);
                let a = grads.weight[li][wi];
                assert!(
                    (a - fd).abs() < 1e-4 * a.abs().max(fd.abs()).max(1.0),
                    "layer {li} w[{wi}]: {a} vs {fd}"
                );
            }
            for bi in 0..mlp.layers()[li].bias.len() {
                let mut p = mlp.clone();
                p.layers_mut()[li].bias[bi] += h;
                let mut m = mlp.clone();
                m.layers_mut()[li].bias[bi] -= h;
                let fd = (loss(&p, &input) - loss(&m, &input)) / (2.0 * h);
                let a = grads.bias[li][bi];
                assert!(
                    (a - fd).abs() < 1e-4 * a.abs().max(fd.abs()).max(1.0),
                    "layer {li} b[{bi}]: {a} vs {fd}"
                );
            }
        }
        for ii in 0..input.len() {
            let mut p = input.clone();
            p[ii] += h;
            let mut m = input.clone();
            m[ii] -= h;
            let fd = (loss(&mlp, &p) - loss(&mlp, &m)) / (2.0 * h);
            let a = grads.input[ii];
            assert!(
                (a - fd).abs() < 1e-4 * a.abs().max(fd.abs()).max(1.0),
                "input[{ii}]: {a} vs {fd}"
            );
        }
    }

    #[test]
    fn mlp_serialization_round_trips() {
        let mlp = Mlp::new(&[8, 64, 64, 6], 3);
        let back = Mlp::from_bytes(&mlp.to_bytes()).unwrap();
        assert_eq!(mlp.layers().len(), back.layers().len());
        for (a, b) in mlp.layers().iter().zip(back.layers()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.activation, b.activation);
        }
    }

    fn pca_optimal_mse(rows: &[Vec<f64>], code_dim: usize) -> f64 {
        let n = rows.len();
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n as f64;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for r in rows {
            let c: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += c[i] * c[j] / n as f64;
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Mean over rows and dims, matching the fit objective.
        vals.iter().skip(code_dim).sum::<f64>() / d as f64
    }

    #[test]
    fn orthonormal_six_dim_inputs_reconstruct_exactly() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let (_, report) = Autoencoder::fit(&rows, 6, &AutoencoderConfig::default()).unwrap();
        assert!(report.mse < 1e-6, "mse = {}", report.mse);
    }

    #[test]
    fn rank3_data_in_r32_reaches_pca_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let basis: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let c = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                (0..32)
                    .map(|j| c[0] * basis[0][j] + c[1] * basis[1][j] + c[2] * basis[2][j])
                    .collect()
            })
            .collect();
        let (ae, report) = Autoencoder::fit(&rows, 6, &AutoencoderConfig::default()).unwrap();
        let oracle = pca_optimal_mse(&rows, 6);
        // Rank 3 <= code dim 6: optimum is zero; gradient descent gets close.
        assert!(oracle < 1e-12);
        assert!(report.mse < 1e-4, "mse = {}", report.mse);
        assert!(report.cosines.iter().all(|&c| c >= 0.99));
        // Round trip on a fresh in-span vector.
        let x: Vec<f64> = (0..32).map(|j| 0.3 * basis[0][j] - 0.7 * basis[2][j]).collect();
        let rec = ae.decode(&ae.encode(&x));
        let dot: f64 = x.iter().zip(&rec).map(|(a, b)| a * b).sum();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nr: f64 = rec.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dot / (nx * nr) > 0.99);
    }

    #[test]
    fn autoencoder_rejects_small_raw_dim() {
        let rows = vec![vec![0.0; 4], vec![1.0; 4]];
        assert!(matches!(
            Autoencoder::fit(&rows, 6, &AutoencoderConfig::default()),
            Err(HeadError::RawDimTooSmall { .. })
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| (0..8).map(|j| ((i * 8 + j) as f64).sin()).collect())
            .collect();
        let cfg = AutoencoderConfig {
            iters: 200,
            ..Default::default()
        };
        let (a, _) = Autoencoder::fit(&rows, 6, &cfg).unwrap();
        let (b, _) = Autoencoder::fit(&rows, 6, &cfg).unwrap();
        assert_eq!(a.encode_w, b.encode_w);
        assert_eq!(a.decode_w, b.decode_w);
    }
}
