use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::error::{Error, Result};

/// Label value of pixels without a class.
pub const UNKNOWN: u16 = u16::MAX;

/// Discrete per-pixel class map, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: u32,
    height: u32,
    labels: Vec<u16>,
}

impl LabelImage {
    pub fn new(width: u32, height: u32, labels: Vec<u16>) -> Self {
        assert_eq!(labels.len(), width as usize * height as usize);
        Self { width, height, labels }
    }

    pub fn filled(width: u32, height: u32, label: u16) -> Self {
        Self::new(width, height, vec![label; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn same_size(&self, other: &LabelImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Writes class indices as a grayscale PNG: 8-bit when `classes <= 255`
/// (UNKNOWN stored as 255), 16-bit otherwise (UNKNOWN stored as 65535).
pub fn write_label_png(path: &Path, img: &LabelImage, classes: usize) -> Result<()> {
    if let Some(&bad) = img.labels.iter().find(|&&l| l != UNKNOWN && l as usize >= classes) {
        return Err(Error::data(format!("label {bad} out of range for {classes} classes")));
    }
    let result = if classes <= 255 {
        let data = img
            .labels
            .iter()
            .map(|&l| if l == UNKNOWN { 255 } else { l as u8 })
            .collect();
        ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(img.width, img.height, data)
            .expect("buffer size")
            .save(path)
    } else {
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(img.width, img.height, img.labels.clone())
            .expect("buffer size")
            .save(path)
    };
    result.map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reads an 8- or 16-bit grayscale label PNG; 255 / 65535 become [`UNKNOWN`].
pub fn read_label_png(path: &Path) -> Result<LabelImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let (w, h) = (img.width(), img.height());
    let labels = match img {
        DynamicImage::ImageLuma8(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| if v == 255 { UNKNOWN } else { v as u16 })
            .collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw(),
        other => {
            return Err(Error::data(format!(
                "{}: label images must be 8- or 16-bit grayscale, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(LabelImage::new(w, h, labels))
}
