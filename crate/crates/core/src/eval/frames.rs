use crate::error::{Error, Result};

/// Uniformly spaced subset of `0..total`: `⌊j·total/n⌋` for `j in 0..n`,
/// `n = max(1, round(fraction·total))`.
pub fn select_frames(total: usize, fraction: f64) -> Result<Vec<usize>> {
    if total == 0 {
        return Err(Error::data("no frames to select from"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!("frame fraction {fraction} outside (0, 1]")));
    }
    let n = ((fraction * total as f64).round() as usize).clamp(1, total);
    let mut out: Vec<usize> = (0..n).map(|j| j * total / n).collect();
    out.dedup();
    Ok(out)
}
