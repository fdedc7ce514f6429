//! On-disk formats shared by the pipeline stages.
//!
//! - "F32M": raw planar f32 maps with a 16-byte header {magic, H, W, C};
//!   used for flows, SDFs, feature maps, alpha and depth.
//! - Embedding tables: u32 count / u32 dim header followed by count*dim f32.
//! - 8-bit PNG for color images and single-channel label masks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::grid::{Grid, LabelMap};

pub const F32M_MAGIC: &[u8; 4] = b"F32M";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic (expected {expected})")]
    BadMagic { path: String, expected: String },
    #[error("{path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("{path}: image decode failed: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_f32m(path: &Path, grid: &Grid) -> Result<(), FormatError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(F32M_MAGIC).map_err(|e| io_err(path, e))?;
    w.write_u32::<LittleEndian>(grid.height() as u32)
        .map_err(|e| io_err(path, e))?;
    w.write_u32::<LittleEndian>(grid.width() as u32)
        .map_err(|e| io_err(path, e))?;
    w.write_u32::<LittleEndian>(grid.channels() as u32)
        .map_err(|e| io_err(path, e))?;
    for &v in grid.data() {
        w.write_f32::<LittleEndian>(v as f32)
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_f32m(path: &Path) -> Result<Grid, FormatError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != F32M_MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "F32M".into(),
        });
    }
    let h = r.read_u32::<LittleEndian>().map_err(|e| io_err(path, e))? as usize;
    let w = r.read_u32::<LittleEndian>().map_err(|e| io_err(path, e))? as usize;
    let c = r.read_u32::<LittleEndian>().map_err(|e| io_err(path, e))? as usize;
    let n = h
        .checked_mul(w)
        .and_then(|x| x.checked_mul(c))
        .ok_or_else(|| FormatError::Malformed {
            path: path.display().to_string(),
            reason: format!("implausible shape {h}x{w}x{c}"),
        })?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(r.read_f32::<LittleEndian>().map_err(|e| io_err(path, e))? as f64);
    }
    Ok(Grid::from_data(h, w, c, data))
}

/// Embedding table: one row per instance (row d-1 belongs to instance d).
pub fn write_embeddings(path: &Path, rows: &[Vec<f64>]) -> Result<(), FormatError> {
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(FormatError::Malformed {
            path: path.display().to_string(),
            reason: "ragged embedding rows".into(),
        });
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_u32::<LittleEndian>(rows.len() as u32)
        .map_err(|e| io_err(path, e))?;
    w.write_u32::<LittleEndian>(dim as u32)
        .map_err(|e| io_err(path, e))?;
    for row in rows {
        for &v in row {
            w.write_f32::<LittleEndian>(v as f32)
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<Vec<Vec<f64>>, FormatError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let count = r.read_u32::<LittleEndian>().map_err(|e| io_err(path, e))? as usize;
    let dim = r.read_u32::<LittleEndian>().map_err(|e| io_err(path, e))? as usize;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            row.push(r.read_f32::<LittleEndian>().map_err(|e| io_err(path, e))? as f64);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Sparse seed points with color: rows of (x, y, z, r, g, b).
pub fn write_points(path: &Path, rows: &[[f64; 6]]) -> Result<(), FormatError> {
    write_embeddings(path, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

pub fn read_points(path: &Path) -> Result<Vec<[f64; 6]>, FormatError> {
    let rows = read_embeddings(path)?;
    rows.into_iter()
        .map(|r| {
            if r.len() != 6 {
                Err(FormatError::Malformed {
                    path: path.display().to_string(),
                    reason: format!("point row has {} values, expected 6", r.len()),
                })
            } else {
                Ok([r[0], r[1], r[2], r[3], r[4], r[5]])
            }
        })
        .collect()
}

pub fn write_color_png(path: &Path, img: &Grid) -> Result<(), FormatError> {
    assert_eq!(img.channels(), 3, "color PNG needs 3 channels");
    let (h, w) = (img.height(), img.width());
    let mut buf = Vec::with_capacity(h * w * 3);
    for row in 0..h {
        for col in 0..w {
            for ch in 0..3 {
                let v = (img.get(ch, row, col).clamp(0.0, 1.0) * 255.0).round() as u8;
                buf.push(v);
            }
        }
    }
    let out: image::RgbImage = image::ImageBuffer::from_raw(w as u32, h as u32, buf)
        .expect("buffer sized from dimensions");
    out.save(path).map_err(|e| FormatError::Image {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_color_png(path: &Path) -> Result<Grid, FormatError> {
    let img = image::open(path)
        .map_err(|e| FormatError::Image {
            path: path.display().to_string(),
            source: e,
        })?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut grid = Grid::zeros(h, w, 3);
    for row in 0..h {
        for col in 0..w {
            let px = img.get_pixel(col as u32, row as u32);
            for ch in 0..3 {
                grid.set(ch, row, col, px[ch] as f64 / 255.0);
            }
        }
    }
    Ok(grid)
}

pub fn write_mask_png(path: &Path, mask: &LabelMap) -> Result<(), FormatError> {
    let out: image::GrayImage = image::ImageBuffer::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.data().to_vec(),
    )
    .expect("buffer sized from dimensions");
    out.save(path).map_err(|e| FormatError::Image {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_mask_png(path: &Path) -> Result<LabelMap, FormatError> {
    let img = image::open(path)
        .map_err(|e| FormatError::Image {
            path: path.display().to_string(),
            source: e,
        })?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(LabelMap::from_data(h, w, img.into_raw()))
}
