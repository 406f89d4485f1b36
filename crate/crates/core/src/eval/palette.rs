use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Class colors and names, read from lines of `class_index r g b name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    entries: Vec<Option<([u8; 3], String)>>,
}

impl Palette {
    /// Evenly spread hues, named `class_<k>`.
    pub fn generated(classes: usize) -> Self {
        let entries = (0..classes)
            .map(|k| {
                let h = (k as f64 * 0.618_033_988_75).fract() * 6.0;
                let x = 1.0 - ((h % 2.0) - 1.0).abs();
                let (r, g, b) = match h as u32 {
                    0 => (1.0, x, 0.0),
                    1 => (x, 1.0, 0.0),
                    2 => (0.0, 1.0, x),
                    3 => (0.0, x, 1.0),
                    4 => (x, 0.0, 1.0),
                    _ => (1.0, 0.0, x),
                };
                let to = |v: f64| (40.0 + v * 200.0).round() as u8;
                Some(([to(r), to(g), to(b)], format!("class_{k}")))
            })
            .collect();
        Self { entries }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Option<([u8; 3], String)>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::data(format!("palette line {}: expected `class r g b name`", lineno + 1));
            let mut it = line.split_whitespace();
            let class: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let mut rgb = [0u8; 3];
            for c in rgb.iter_mut() {
                *c = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            }
            let name = it.collect::<Vec<_>>().join(" ");
            if class >= entries.len() {
                entries.resize(class + 1, None);
            }
            entries[class] = Some((rgb, name));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (k, e) in self.entries.iter().enumerate() {
            if let Some((c, name)) = e {
                let _ = writeln!(out, "{k} {} {} {} {name}", c[0], c[1], c[2]);
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Color of `class`; classes missing from the palette are black.
    pub fn color(&self, class: usize) -> [u8; 3] {
        self.entries.get(class).and_then(|e| e.as_ref()).map_or([0, 0, 0], |e| e.0)
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.entries.get(class).and_then(|e| e.as_ref()).map(|e| e.1.as_str())
    }
}
