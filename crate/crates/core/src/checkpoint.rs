//! Checkpoint containers.
//!
//! Primitive blocks use the "G4D1" layout: little-endian header
//! {count: u32, has_feature: u8, frame_index: i32} followed by one fixed
//! 268-byte record per primitive (p:3f32, q:4f32, log_scale:3f32,
//! opacity_logit:f32, sh:48f32, f:8f32).
//!
//! Scene checkpoints ("G4DS") are a named-section container embedding G4D1
//! blocks for both layers plus the background appearance snapshot and the
//! neural head parameters.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::scene::{BgAppearance, GaussianPrimitive, SceneModel, FEATURE_DIM, SH_TOTAL};

pub const PRIM_MAGIC: &[u8; 4] = b"G4D1";
pub const SCENE_MAGIC: &[u8; 4] = b"G4DS";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {0}")]
    BadMagic(String),
    #[error("missing section {0}")]
    MissingSection(String),
    #[error("section {0}: malformed ({1})")]
    Malformed(String, String),
}

pub fn write_primitives<W: Write>(
    w: &mut W,
    prims: &[GaussianPrimitive],
    has_feature: bool,
    frame_index: i32,
) -> Result<(), CheckpointError> {
    w.write_all(PRIM_MAGIC)?;
    w.write_u32::<LittleEndian>(prims.len() as u32)?;
    w.write_u8(has_feature as u8)?;
    w.write_i32::<LittleEndian>(frame_index)?;
    for p in prims {
        for v in p.position {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
        for v in p.rotation {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
        for v in p.log_scale {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
        w.write_f32::<LittleEndian>(p.opacity_logit as f32)?;
        for v in p.sh {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
        if has_feature {
            for v in p.feature {
                w.write_f32::<LittleEndian>(v as f32)?;
            }
        }
    }
    Ok(())
}

pub fn read_primitives<R: Read>(
    r: &mut R,
) -> Result<(Vec<GaussianPrimitive>, i32), CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != PRIM_MAGIC {
        return Err(CheckpointError::BadMagic("G4D1".into()));
    }
    let count = r.read_u32::<LittleEndian>()? as usize;
    let has_feature = r.read_u8()? != 0;
    let frame_index = r.read_i32::<LittleEndian>()?;
    let mut prims = Vec::with_capacity(count);
    for _ in 0..count {
        let mut p = GaussianPrimitive {
            position: [0.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            log_scale: [0.0; 3],
            opacity_logit: 0.0,
            sh: [0.0; SH_TOTAL],
            feature: [0.0; FEATURE_DIM],
        };
        for v in p.position.iter_mut() {
            *v = r.read_f32::<LittleEndian>()? as f64;
        }
        for v in p.rotation.iter_mut() {
            *v = r.read_f32::<LittleEndian>()? as f64;
        }
        for v in p.log_scale.iter_mut() {
            *v = r.read_f32::<LittleEndian>()? as f64;
        }
        p.opacity_logit = r.read_f32::<LittleEndian>()? as f64;
        for v in p.sh.iter_mut() {
            *v = r.read_f32::<LittleEndian>()? as f64;
        }
        if has_feature {
            for v in p.feature.iter_mut() {
                *v = r.read_f32::<LittleEndian>()? as f64;
            }
        }
        prims.push(p);
    }
    Ok((prims, frame_index))
}

pub fn write_primitives_file(
    path: &Path,
    prims: &[GaussianPrimitive],
    has_feature: bool,
    frame_index: i32,
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_primitives(&mut w, prims, has_feature, frame_index)?;
    w.flush()?;
    Ok(())
}

pub fn read_primitives_file(path: &Path) -> Result<(Vec<GaussianPrimitive>, i32), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    read_primitives(&mut r)
}

/// Named byte sections, ordered by name for deterministic output.
#[derive(Debug, Default, Clone)]
pub struct SectionContainer {
    sections: BTreeMap<String, Vec<u8>>,
}

impl SectionContainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.sections.insert(name.to_string(), bytes);
    }

    pub fn get(&self, name: &str) -> Result<&[u8], CheckpointError> {
        self.sections
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| CheckpointError::MissingSection(name.into()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        w.write_all(SCENE_MAGIC)?;
        w.write_u32::<LittleEndian>(self.sections.len() as u32)?;
        for (name, bytes) in &self.sections {
            w.write_u32::<LittleEndian>(name.len() as u32)?;
            w.write_all(name.as_bytes())?;
            w.write_u64::<LittleEndian>(bytes.len() as u64)?;
            w.write_all(bytes)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SCENE_MAGIC {
            return Err(CheckpointError::BadMagic("G4DS".into()));
        }
        let count = r.read_u32::<LittleEndian>()?;
        let mut sections = BTreeMap::new();
        for _ in 0..count {
            let name_len = r.read_u32::<LittleEndian>()? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|e| CheckpointError::Malformed("<name>".into(), e.to_string()))?;
            let len = r.read_u64::<LittleEndian>()? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes)?;
            sections.insert(name, bytes);
        }
        Ok(Self { sections })
    }
}

fn encode_f64s(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        out.write_f64::<LittleEndian>(v).expect("vec write");
    }
    out
}

fn decode_f64s(bytes: &[u8], section: &str) -> Result<Vec<f64>, CheckpointError> {
    if bytes.len() % 8 != 0 {
        return Err(CheckpointError::Malformed(
            section.into(),
            "length not a multiple of 8".into(),
        ));
    }
    let mut r = Cursor::new(bytes);
    let mut out = Vec::with_capacity(bytes.len() / 8);
    for _ in 0..bytes.len() / 8 {
        out.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(out)
}

/// Scene checkpoint with named sections. Head/autoencoder parameters are
/// added by the caller through `extra` so this module stays independent of
/// the MLP types.
pub fn write_scene_file(
    path: &Path,
    scene: &SceneModel,
    extra: &[(&str, Vec<u8>)],
) -> Result<(), CheckpointError> {
    let mut container = SectionContainer::new();
    let mut bg = Vec::new();
    write_primitives(&mut bg, &scene.bg, true, scene.frame_index)?;
    container.insert("bg", bg);
    let mut fg = Vec::new();
    write_primitives(&mut fg, &scene.fg, true, scene.frame_index)?;
    container.insert("fg", fg);
    let bg_ref = encode_f64s(
        scene
            .bg_reference
            .iter()
            .flat_map(|a| a.sh.iter().copied().chain(std::iter::once(a.opacity_logit))),
    );
    container.insert("bg_ref", bg_ref);
    for (name, bytes) in extra {
        container.insert(name, bytes.clone());
    }
    // Atomic write: temp file in the same directory, then rename.
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        container.write_to(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_scene_file(path: &Path) -> Result<(SceneModel, SectionContainer), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let container = SectionContainer::read_from(&mut r)?;
    let (bg, frame_index) = read_primitives(&mut Cursor::new(container.get("bg")?))?;
    let (fg, _) = read_primitives(&mut Cursor::new(container.get("fg")?))?;
    let raw = decode_f64s(container.get("bg_ref")?, "bg_ref")?;
    let stride = SH_TOTAL + 1;
    if raw.len() != bg.len() * stride {
        return Err(CheckpointError::Malformed(
            "bg_ref".into(),
            format!("{} values for {} primitives", raw.len(), bg.len()),
        ));
    }
    let bg_reference = raw
        .chunks(stride)
        .map(|chunk| {
            let mut sh = [0.0; SH_TOTAL];
            sh.copy_from_slice(&chunk[..SH_TOTAL]);
            BgAppearance {
                sh,
                opacity_logit: chunk[SH_TOTAL],
            }
        })
        .collect();
    Ok((
        SceneModel {
            bg,
            fg,
            bg_reference,
            frame_index,
        },
        container,
    ))
}
