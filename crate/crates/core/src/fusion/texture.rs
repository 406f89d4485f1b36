//! Packed texel probability array.
//!
//! One row per texel, rows grouped by triangle in triangle order, so the row
//! of texel `x` on triangle `t` is `layout.offset(t) + x`. Accumulation is a
//! plain commutative fold in f64; normalization happens once, in
//! [`ProbabilityTexture::finalize`].

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::image::{argmax, ProbabilityImage};
use super::weights::WeightImage;
use crate::error::{Error, Result};
use crate::eval::UNKNOWN;
use crate::geometry::TexelLayout;
use crate::raster::IdImage;

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before taking logs in the
/// `mul` aggregator.
pub const PROB_FLOOR: f64 = 1e-7;

/// Default memory budget for the accumulator: 1 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

const MAGIC: &[u8; 4] = b"SMTX";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    /// Sum of weighted distributions restricted to their maximal components.
    MaxSum,
    /// Sum of weighted distributions.
    Sum,
    /// Product of distributions raised to their weights (Bayesian update).
    Mul,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::MaxSum => "maxsum",
            Aggregator::Sum => "sum",
            Aggregator::Mul => "mul",
        })
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "maxsum" => Ok(Aggregator::MaxSum),
            "sum" => Ok(Aggregator::Sum),
            "mul" => Ok(Aggregator::Mul),
            other => Err(Error::config(format!("unknown aggregator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Finalized {
    probs: Vec<f32>,
    unobserved: Vec<bool>,
}

/// Per-texel class distributions, `total_texels x classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTexture {
    aggregator: Option<Aggregator>,
    classes: usize,
    rows: usize,
    acc: Vec<f64>,
    counts: Vec<u32>,
    finalized: Option<Finalized>,
}

/// Allocates an identity-initialized texture for `layout`, failing without
/// allocating when the accumulator would exceed `budget_bytes`.
pub fn init_texture(
    layout: &TexelLayout,
    classes: usize,
    aggregator: Aggregator,
    budget_bytes: u64,
) -> Result<ProbabilityTexture> {
    if classes < 2 {
        return Err(Error::config(format!("need at least 2 classes, got {classes}")));
    }
    let rows = layout.total_texels();
    // f64 accumulator plus u32 observation counter per row
    let required = rows
        .checked_mul(classes as u64)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(rows.checked_mul(4)?));
    let required = required.unwrap_or(u64::MAX);
    if required > budget_bytes || usize::try_from(required).is_err() {
        return Err(Error::Capacity {
            what: format!("probability texture of {rows} texels x {classes} classes"),
            required_bytes: required,
            budget_bytes,
        });
    }
    let rows = rows as usize;
    Ok(ProbabilityTexture {
        aggregator: Some(aggregator),
        classes,
        rows,
        acc: vec![0.0; rows * classes],
        counts: vec![0; rows],
        finalized: None,
    })
}

impl ProbabilityTexture {
    /// Aggregator this texture was accumulated with; `None` for textures read
    /// back from disk.
    pub fn aggregator(&self) -> Option<Aggregator> {
        self.aggregator
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized.is_some()
    }

    /// Observation counters, one per texel.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Raw accumulator row (log-space for `mul`). Empty once finalized.
    pub fn accumulator_row(&self, row: usize) -> &[f64] {
        if self.acc.is_empty() {
            &[]
        } else {
            &self.acc[row * self.classes..(row + 1) * self.classes]
        }
    }

    /// Folds one weighted pixel distribution into `row`. Zero weights are a
    /// no-op, which also defines `p^0 = 1` for the product.
    pub fn accumulate_pixel(&mut self, row: usize, p: &[f32], weight: f64) -> Result<()> {
        let kind = self.accumulating()?;
        if p.len() != self.classes {
            return Err(Error::data(format!(
                "distribution has {} classes, texture has {}",
                p.len(),
                self.classes
            )));
        }
        if weight == 0.0 {
            return Ok(());
        }
        let acc = &mut self.acc[row * self.classes..(row + 1) * self.classes];
        match kind {
            Aggregator::Sum => {
                for (a, &pi) in acc.iter_mut().zip(p) {
                    *a += weight * pi as f64;
                }
            }
            Aggregator::MaxSum => {
                let max = p.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
                // every component attaining the maximum is kept
                for (a, &pi) in acc.iter_mut().zip(p) {
                    if pi == max {
                        *a += weight * pi as f64;
                    }
                }
            }
            Aggregator::Mul => {
                for (a, &pi) in acc.iter_mut().zip(p) {
                    *a += weight * (pi as f64).clamp(PROB_FLOOR, 1.0).ln();
                }
            }
        }
        self.counts[row] = self.counts[row].saturating_add(1);
        Ok(())
    }

    /// Folds every covered pixel of one frame into the texture. Returns the
    /// number of observations added.
    pub fn accumulate_frame(
        &mut self,
        layout: &TexelLayout,
        ids: &IdImage,
        probs: &ProbabilityImage,
        weights: &WeightImage,
    ) -> Result<u64> {
        self.accumulating()?;
        let dims = |w: u32, h: u32| (w, h) == (ids.width(), ids.height());
        if !dims(probs.width(), probs.height()) || !dims(weights.width(), weights.height()) {
            return Err(Error::data(format!(
                "frame dimensions disagree: ids {}x{}, probabilities {}x{}, weights {}x{}",
                ids.width(),
                ids.height(),
                probs.width(),
                probs.height(),
                weights.width(),
                weights.height()
            )));
        }
        if probs.classes() != self.classes {
            return Err(Error::data(format!(
                "prediction has {} classes, texture has {}",
                probs.classes(),
                self.classes
            )));
        }
        if layout.total_texels() as usize != self.rows {
            return Err(Error::data("layout does not match texture"));
        }
        let mut added = 0;
        for (k, (px, &w)) in ids.pixels().iter().zip(weights.data()).enumerate() {
            if !px.is_covered() || w == 0.0 {
                continue;
            }
            let row = layout.row(px.triangle as usize, px.texel);
            self.accumulate_pixel(row, probs.pixel(k), w)?;
            added += 1;
        }
        Ok(added)
    }

    /// Adds another unfinalized texture's accumulators and counts into this
    /// one. Both must share layout, class count and aggregator.
    pub fn merge(&mut self, other: &ProbabilityTexture) -> Result<()> {
        self.accumulating()?;
        other.accumulating()?;
        if (self.rows, self.classes, self.aggregator) != (other.rows, other.classes, other.aggregator) {
            return Err(Error::State("merging incompatible textures".into()));
        }
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a = a.saturating_add(*b);
        }
        Ok(())
    }

    /// Normalizes every row. Rows without observations, or whose accumulator
    /// is all zero, become uniform and are flagged unobserved.
    pub fn finalize(&mut self) -> Result<()> {
        let kind = self.accumulating()?;
        let c = self.classes;
        let uniform = 1.0 / c as f32;
        let mut probs = vec![0.0f32; self.rows * c];
        let mut unobserved = vec![false; self.rows];
        for row in 0..self.rows {
            let acc = &self.acc[row * c..(row + 1) * c];
            let out = &mut probs[row * c..(row + 1) * c];
            let ok = self.counts[row] > 0
                && match kind {
                    Aggregator::Sum | Aggregator::MaxSum => {
                        let norm: f64 = acc.iter().sum();
                        let ok = norm > 0.0 && norm.is_finite();
                        if ok {
                            for (o, a) in out.iter_mut().zip(acc) {
                                *o = (a / norm) as f32;
                            }
                        }
                        ok
                    }
                    Aggregator::Mul => {
                        let max = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = acc.iter().map(|a| (a - max).exp()).collect();
                        let norm: f64 = exps.iter().sum();
                        for (o, e) in out.iter_mut().zip(&exps) {
                            *o = (e / norm) as f32;
                        }
                        max.is_finite()
                    }
                };
            if !ok {
                out.fill(uniform);
                unobserved[row] = true;
            }
        }
        self.finalized = Some(Finalized { probs, unobserved });
        self.acc = Vec::new();
        Ok(())
    }

    /// Finalized distribution of `row`.
    pub fn row(&self, row: usize) -> &[f32] {
        let f = self.finalized.as_ref().expect("texture is not finalized");
        &f.probs[row * self.classes..(row + 1) * self.classes]
    }

    pub fn is_observed(&self, row: usize) -> bool {
        let f = self.finalized.as_ref().expect("texture is not finalized");
        !f.unobserved[row]
    }

    /// Most likely class per texel (lowest index on ties); [`UNKNOWN`] for
    /// unobserved texels.
    pub fn texel_argmax(&self) -> Result<Vec<u16>> {
        let f = self
            .finalized
            .as_ref()
            .ok_or_else(|| Error::State("texel argmax needs a finalized texture".into()))?;
        Ok(f.probs
            .chunks_exact(self.classes)
            .zip(&f.unobserved)
            .map(|(row, &unseen)| {
                if unseen {
                    UNKNOWN
                } else {
                    argmax(row).map_or(UNKNOWN, |c| c as u16)
                }
            })
            .collect())
    }

    /// Histogram of observation counts in power-of-two buckets: bucket 0
    /// holds unobserved texels, bucket `b >= 1` holds counts in
    /// `[2^(b-1), 2^b)`.
    pub fn observation_histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; 34];
        for &n in &self.counts {
            let b = if n == 0 { 0 } else { 32 - n.leading_zeros() as usize };
            hist[b] += 1;
        }
        while hist.len() > 1 && hist.last() == Some(&0) {
            hist.pop();
        }
        hist
    }

    fn accumulating(&self) -> Result<Aggregator> {
        if self.finalized.is_some() {
            return Err(Error::State("texture is already finalized".into()));
        }
        Ok(self.aggregator.expect("accumulating textures have an aggregator"))
    }
}

/// Writes the `SMTX` format (little-endian): magic, u32 version, the texel
/// layout table (u32 triangle count, then per triangle u32 steps and u8 uv
/// origin), u64 texel count, u32 classes, f32 rows, u32 observation counts.
/// Unobserved rows are stored uniform with a count of 0.
pub fn write_smtx(path: &Path, layout: &TexelLayout, texture: &ProbabilityTexture) -> Result<()> {
    let f = texture
        .finalized
        .as_ref()
        .ok_or_else(|| Error::State("only finalized textures can be exported".into()))?;
    if layout.total_texels() as usize != texture.rows {
        return Err(Error::data("layout does not match texture"));
    }
    let n = layout.num_triangles();
    let mut out = Vec::with_capacity(32 + n * 5 + texture.rows * (texture.classes + 1) * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for t in 0..n {
        out.extend_from_slice(&layout.steps(t).to_le_bytes());
        out.push(layout.origin(t));
    }
    out.extend_from_slice(&(texture.rows as u64).to_le_bytes());
    out.extend_from_slice(&(texture.classes as u32).to_le_bytes());
    for p in &f.probs {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for (count, &unseen) in texture.counts.iter().zip(&f.unobserved) {
        let c = if unseen { 0 } else { *count };
        out.extend_from_slice(&c.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an `SMTX` file back into a layout and a finalized texture.
pub fn read_smtx(path: &Path) -> Result<(TexelLayout, ProbabilityTexture)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::data(format!("{}: {msg}", path.display()));
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(4).ok_or_else(|| bad("truncated"))? != MAGIC {
        return Err(bad("not an SMTX file"));
    }
    let version = r.u32().ok_or_else(|| bad("truncated"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported SMTX version {version}")));
    }
    let n = r.u32().ok_or_else(|| bad("truncated"))? as usize;
    let mut steps = Vec::with_capacity(n.min(bytes.len()));
    let mut origins = Vec::with_capacity(n.min(bytes.len()));
    for _ in 0..n {
        let s = r.u32().ok_or_else(|| bad("truncated layout table"))?;
        let o = r.take(1).ok_or_else(|| bad("truncated layout table"))?[0];
        if s == 0 || o > 2 {
            return Err(bad("invalid layout entry"));
        }
        steps.push(s);
        origins.push(o);
    }
    let layout = TexelLayout::from_parts(steps, origins);
    let rows = r.u64().ok_or_else(|| bad("truncated"))?;
    let classes = r.u32().ok_or_else(|| bad("truncated"))? as usize;
    if rows != layout.total_texels() {
        return Err(bad(&format!(
            "texel count {rows} disagrees with layout total {}",
            layout.total_texels()
        )));
    }
    if classes < 2 {
        return Err(bad("fewer than 2 classes"));
    }
    let rows = rows as usize;
    let need = rows
        .checked_mul(classes + 1)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| bad("size overflow"))?;
    if bytes.len() - r.pos != need {
        return Err(bad("payload size disagrees with header"));
    }
    let probs: Vec<f32> = r
        .take(rows * classes * 4)
        .unwrap()
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let counts: Vec<u32> = r
        .take(rows * 4)
        .unwrap()
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let unobserved = counts.iter().map(|&c| c == 0).collect();
    Ok((
        layout,
        ProbabilityTexture {
            aggregator: None,
            classes,
            rows,
            acc: Vec::new(),
            counts,
            finalized: Some(Finalized { probs, unobserved }),
        },
    ))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}
