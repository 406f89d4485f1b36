use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{LabelImage, UNKNOWN};

const MAGIC: &[u8; 4] = b"SMPB";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Per-pixel class distributions of one frame, pixel-major and class-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityImage {
    width: u32,
    height: u32,
    classes: usize,
    data: Vec<f32>,
}

impl ProbabilityImage {
    /// Validates that every pixel is a distribution (nonnegative, summing to
    /// 1 within 1e-4).
    pub fn new(width: u32, height: u32, classes: usize, data: Vec<f32>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::data(format!("need at least 2 classes, got {classes}")));
        }
        let expected = width as usize * height as usize * classes;
        if data.len() != expected {
            return Err(Error::data(format!(
                "probability data has {} values, expected {width}x{height}x{classes} = {expected}",
                data.len()
            )));
        }
        for (k, px) in data.chunks_exact(classes).enumerate() {
            let sum: f64 = px.iter().map(|&p| p as f64).sum();
            if px.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > 1e-4 {
                return Err(Error::data(format!(
                    "pixel {k} is not a probability distribution (sum {sum})"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            classes,
            data,
        })
    }

    pub fn uniform(width: u32, height: u32, classes: usize) -> Self {
        Self {
            width,
            height,
            classes,
            data: vec![1.0 / classes as f32; width as usize * height as usize * classes],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, k: usize) -> &[f32] {
        &self.data[k * self.classes..(k + 1) * self.classes]
    }

    /// Per-pixel most likely class, lowest index on ties.
    pub fn argmax(&self) -> LabelImage {
        let labels = self
            .data
            .chunks_exact(self.classes)
            .map(|px| argmax(px).map_or(UNKNOWN, |c| c as u16))
            .collect();
        LabelImage::new(self.width, self.height, labels)
    }
}

pub(crate) fn argmax(row: &[f32]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for (i, &p) in row.iter().enumerate() {
        if best.is_none_or(|(_, b)| p > b) {
            best = Some((i, p));
        }
    }
    best.map(|b| b.0)
}

/// Writes the `SMPB` format: magic, then u32 version, height, width, classes,
/// then `height * width * classes` f32 values, all little-endian.
pub fn write_smpb(path: &Path, img: &ProbabilityImage) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER_LEN + img.data.len() * 4);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, img.height, img.width, img.classes as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for p in &img.data {
        out.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_smpb(path: &Path) -> Result<ProbabilityImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::data(format!("{}: {msg}", path.display()));
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("not an SMPB file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (version, height, width, classes) = (word(0), word(1), word(2), word(3) as usize);
    if version != VERSION {
        return Err(bad(&format!("unsupported SMPB version {version}")));
    }
    let n = height as usize * width as usize * classes;
    if bytes.len() != HEADER_LEN + 4 * n {
        return Err(bad(&format!(
            "payload is {} bytes, header implies {}",
            bytes.len() - HEADER_LEN,
            4 * n
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ProbabilityImage::new(width, height, classes, data).map_err(|e| match e {
        Error::Data(msg) => bad(&msg),
        other => other,
    })
}
