use super::labels::{LabelImage, UNKNOWN};
use crate::error::{Error, Result};
use crate::fusion::ProbabilityTexture;
use crate::geometry::{CameraFrame, Mesh, TexelLayout};
use crate::raster::{rasterize, IdImage};

/// Renders the fused texel classes into `frame`.
///
/// Covered pixels take their texel's class. Uncovered pixels and pixels on
/// unobserved texels take the `fallback` label if given, else [`UNKNOWN`].
pub fn render_labels(
    mesh: &Mesh,
    layout: &TexelLayout,
    texture: &ProbabilityTexture,
    frame: &CameraFrame,
    fallback: Option<&LabelImage>,
) -> Result<LabelImage> {
    let texel_labels = texture.texel_argmax()?;
    render_with_texel_labels(mesh, layout, &texel_labels, frame, fallback)
}

/// [`render_labels`] with the per-texel argmax precomputed, for rendering
/// many frames from one texture.
pub fn render_with_texel_labels(
    mesh: &Mesh,
    layout: &TexelLayout,
    texel_labels: &[u16],
    frame: &CameraFrame,
    fallback: Option<&LabelImage>,
) -> Result<LabelImage> {
    if let Some(fb) = fallback {
        if (fb.width(), fb.height()) != (frame.width(), frame.height()) {
            return Err(Error::data(format!(
                "frame {}: fallback is {}x{} but the frame is {}x{}",
                frame.frame_id,
                fb.width(),
                fb.height(),
                frame.width(),
                frame.height()
            )));
        }
    }
    if texel_labels.len() as u64 != layout.total_texels() {
        return Err(Error::data("texel labels do not match the layout"));
    }
    let ids = rasterize(mesh, layout, frame);
    Ok(labels_from_ids(&ids, layout, texel_labels, fallback))
}

pub(crate) fn labels_from_ids(
    ids: &IdImage,
    layout: &TexelLayout,
    texel_labels: &[u16],
    fallback: Option<&LabelImage>,
) -> LabelImage {
    let labels = ids
        .pixels()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let fused = if p.is_covered() {
                texel_labels[layout.row(p.triangle as usize, p.texel)]
            } else {
                UNKNOWN
            };
            if fused != UNKNOWN {
                fused
            } else {
                fallback.map_or(UNKNOWN, |fb| fb.labels()[k])
            }
        })
        .collect();
    LabelImage::new(ids.width(), ids.height(), labels)
}
