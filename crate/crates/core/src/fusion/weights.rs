use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::IdImage;

/// How much each pixel counts toward its texel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    /// Every covered pixel has weight 1.
    PixelsIid,
    /// Each image contributes total weight 1 to every texel it sees:
    /// `1 / (pixels of this image on the same texel)`.
    ImagesIid,
    /// `(1 - alpha) * PixelsIid + alpha * ImagesIid`.
    Blend(f64),
}

impl WeightMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightMode::Blend(a) if !(0.0..=1.0).contains(&a) => {
                Err(Error::config(format!("blend alpha {a} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightMode::PixelsIid => write!(f, "pixels_iid"),
            WeightMode::ImagesIid => write!(f, "images_iid"),
            WeightMode::Blend(a) => write!(f, "blend({a})"),
        }
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    /// Accepts `pixels_iid`, `images_iid`, `blend(0.3)` and `blend:0.3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mode = match s {
            "pixels_iid" => WeightMode::PixelsIid,
            "images_iid" => WeightMode::ImagesIid,
            _ => {
                let arg = s
                    .strip_prefix("blend(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| s.strip_prefix("blend:"))
                    .ok_or_else(|| Error::config(format!("unknown weight mode {s:?}")))?;
                let alpha: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad blend alpha {arg:?}")))?;
                WeightMode::Blend(alpha)
            }
        };
        mode.validate()?;
        Ok(mode)
    }
}

/// Per-pixel weights, zero on uncovered pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightImage {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl WeightImage {
    pub fn from_values(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::data("weight image size mismatch"));
        }
        if data.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::data("weights must be finite and nonnegative"));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub fn compute_pixel_weights(ids: &IdImage, mode: WeightMode) -> Result<WeightImage> {
    mode.validate()?;
    let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
    if mode != WeightMode::PixelsIid {
        for p in ids.pixels().iter().filter(|p| p.is_covered()) {
            *counts.entry((p.triangle, p.texel)).or_default() += 1;
        }
    }
    let data = ids
        .pixels()
        .iter()
        .map(|p| {
            if !p.is_covered() {
                return 0.0;
            }
            match mode {
                WeightMode::PixelsIid => 1.0,
                WeightMode::ImagesIid => 1.0 / counts[&(p.triangle, p.texel)] as f64,
                WeightMode::Blend(a) => (1.0 - a) + a / counts[&(p.triangle, p.texel)] as f64,
            }
        })
        .collect();
    Ok(WeightImage {
        width: ids.width(),
        height: ids.height(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::PixelRef;

    fn ids(refs: &[(u32, u32)]) -> IdImage {
        let pixels = refs
            .iter()
            .map(|&(t, x)| PixelRef {
                triangle: t,
                texel: x,
                depth: 1.0,
                u: 0.1,
                v: 0.1,
            })
            .collect();
        IdImage::from_pixels(refs.len() as u32, 1, pixels)
    }

    const NONE: u32 = PixelRef::NONE;

    #[test]
    fn four_pixels_one_texel() {
        let img = ids(&[(0, 0); 4]);
        let w = compute_pixel_weights(&img, WeightMode::ImagesIid).unwrap();
        assert_eq!(w.data(), &[0.25; 4]);
        let w = compute_pixel_weights(&img, WeightMode::PixelsIid).unwrap();
        assert_eq!(w.data(), &[1.0; 4]);
        let w = compute_pixel_weights(&img, WeightMode::Blend(0.5)).unwrap();
        assert_eq!(w.data(), &[0.625; 4]);
    }

    #[test]
    fn uncovered_pixels_get_zero() {
        let mut img = ids(&[(0, 0), (0, 1), (1, 0), (0, 0)]);
        img.pixels_mut()[2].triangle = NONE;
        let w = compute_pixel_weights(&img, WeightMode::ImagesIid).unwrap();
        assert_eq!(w.data(), &[0.5, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn blend_endpoints_are_exact() {
        let img = ids(&[(0, 0), (0, 1), (0, 1), (2, 1), (0, 1)]);
        let p = compute_pixel_weights(&img, WeightMode::PixelsIid).unwrap();
        let i = compute_pixel_weights(&img, WeightMode::ImagesIid).unwrap();
        assert_eq!(compute_pixel_weights(&img, WeightMode::Blend(0.0)).unwrap(), p);
        assert_eq!(compute_pixel_weights(&img, WeightMode::Blend(1.0)).unwrap(), i);
    }

    #[test]
    fn images_iid_sums_to_one_per_texel() {
        let img = ids(&[(0, 0), (0, 1), (0, 1), (2, 1), (0, 1), (2, 1), (0, 0)]);
        let w = compute_pixel_weights(&img, WeightMode::ImagesIid).unwrap();
        let mut sums: HashMap<(u32, u32), f64> = HashMap::new();
        for (p, w) in img.pixels().iter().zip(w.data()) {
            *sums.entry((p.triangle, p.texel)).or_default() += w;
        }
        assert!(sums.values().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_alpha() {
        let img = ids(&[(0, 0)]);
        assert!(matches!(
            compute_pixel_weights(&img, WeightMode::Blend(1.5)),
            Err(Error::Config(_))
        ));
        assert!(compute_pixel_weights(&img, WeightMode::Blend(-0.1)).is_err());
    }

    #[test]
    fn parse_modes() {
        assert_eq!("images_iid".parse::<WeightMode>().unwrap(), WeightMode::ImagesIid);
        assert_eq!("blend(0.25)".parse::<WeightMode>().unwrap(), WeightMode::Blend(0.25));
        assert_eq!("blend:1".parse::<WeightMode>().unwrap(), WeightMode::Blend(1.0));
        assert!("blend(2)".parse::<WeightMode>().is_err());
        assert!("median".parse::<WeightMode>().is_err());
        let m = WeightMode::Blend(0.3);
        assert_eq!(m.to_string().parse::<WeightMode>().unwrap(), m);
    }
}
