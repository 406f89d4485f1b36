use std::path::Path;

use image::{ImageBuffer, Luma};

use super::IdImage;
use crate::error::{Error, Result};

/// Dumps `ids` as three 16-bit grayscale PNGs next to `prefix`:
/// `<prefix>_triangle.png` (hashed triangle id), `<prefix>_texel.png`
/// (texel id + 1, saturating) and `<prefix>_depth.png` (depth normalized to
/// the covered range). Uncovered pixels are 0 in all three.
pub fn write_debug_pngs(ids: &IdImage, prefix: &Path) -> Result<()> {
    let covered = ids.pixels().iter().filter(|p| p.is_covered());
    let (lo, hi) = covered.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.depth), hi.max(p.depth))
    });
    let span = if hi > lo { hi - lo } else { 1.0 };

    let channel = |f: &dyn Fn(&super::PixelRef) -> u16| {
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_fn(ids.width(), ids.height(), |x, y| {
            let p = ids.get(x, y);
            Luma([if p.is_covered() { f(p) } else { 0 }])
        })
    };
    let tri = channel(&|p| (hash(p.triangle) % 65535 + 1) as u16);
    let texel = channel(&|p| p.texel.saturating_add(1).min(65535) as u16);
    let depth = channel(&|p| 1 + ((p.depth - lo) / span * 65534.0).round() as u16);

    for (suffix, img) in [("triangle", tri), ("texel", texel), ("depth", depth)] {
        let mut name = prefix.as_os_str().to_owned();
        name.push(format!("_{suffix}.png"));
        let path = Path::new(&name);
        img.save(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn hash(x: u32) -> u32 {
    let mut h = x.wrapping_mul(0x9E37_79B9);
    h ^= h >> 16;
    h.wrapping_mul(0x85EB_CA6B)
}
