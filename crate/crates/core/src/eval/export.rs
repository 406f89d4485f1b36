use std::path::Path;

use super::labels::UNKNOWN;
use super::palette::Palette;
use crate::error::Result;
use crate::fusion::ProbabilityTexture;
use crate::geometry::{write_ply, Mesh, TexelLayout};

/// Color of faces with no observed texel.
pub const UNOBSERVED_COLOR: [u8; 3] = [128, 128, 128];

/// Most frequent class among each triangle's observed texels (lowest class
/// wins ties); [`UNKNOWN`] when none is observed.
pub fn face_majority_labels(layout: &TexelLayout, texel_labels: &[u16]) -> Vec<u16> {
    let mut votes: Vec<(u16, u32)> = Vec::new();
    (0..layout.num_triangles())
        .map(|t| {
            votes.clear();
            let start = layout.offset(t) as usize;
            let end = start + layout.texel_count(t) as usize;
            for &l in &texel_labels[start..end] {
                if l == UNKNOWN {
                    continue;
                }
                match votes.iter_mut().find(|(c, _)| *c == l) {
                    Some(v) => v.1 += 1,
                    None => votes.push((l, 1)),
                }
            }
            votes
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map_or(UNKNOWN, |v| v.0)
        })
        .collect()
}

/// Writes a PLY whose faces are colored by their majority fused class.
/// Sub-face detail is only preserved by the SMTX export.
pub fn export_colored_mesh(
    mesh: &Mesh,
    layout: &TexelLayout,
    texture: &ProbabilityTexture,
    palette: &Palette,
    path: &Path,
) -> Result<()> {
    let labels = face_majority_labels(layout, &texture.texel_argmax()?);
    let colors: Vec<[u8; 3]> = labels
        .iter()
        .map(|&l| {
            if l == UNKNOWN {
                UNOBSERVED_COLOR
            } else {
                palette.color(l as usize)
            }
        })
        .collect();
    write_ply(path, mesh, Some(&colors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{init_texture, Aggregator, DEFAULT_MEMORY_BUDGET};

    #[test]
    fn majority_over_texels() {
        let layout = TexelLayout::from_parts(vec![1, 6, 2], vec![0, 0, 0]);
        let mut labels = vec![3u16];
        let mut tri = vec![2u16; 11];
        tri.extend([0u16; 6]);
        tri.extend([1u16; 4]);
        labels.extend(tri);
        labels.extend([UNKNOWN; 3]);
        assert_eq!(face_majority_labels(&layout, &labels), vec![3, 2, UNKNOWN]);
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        let layout = TexelLayout::from_parts(vec![2], vec![0]);
        assert_eq!(face_majority_labels(&layout, &[4, 1, UNKNOWN]), vec![1]);
    }

    #[test]
    fn colored_ply() {
        use nalgebra::Point3;
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let mesh = Mesh::new(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap().mesh;
        let layout = TexelLayout::from_parts(vec![1, 1], vec![0, 0]);
        let mut tex = init_texture(&layout, 4, Aggregator::Sum, DEFAULT_MEMORY_BUDGET).unwrap();
        tex.accumulate_pixel(0, &[0.1, 0.1, 0.1, 0.7], 1.0).unwrap();
        tex.finalize().unwrap();
        let palette = Palette::generated(4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("colored.ply");
        export_colored_mesh(&mesh, &layout, &tex, &palette, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // each face record is 1 + 12 + 3 bytes; colors are the last 3
        let face2 = &bytes[bytes.len() - 3..];
        let face1 = &bytes[bytes.len() - 16 - 3..bytes.len() - 16];
        assert_eq!(face1, &palette.color(3));
        assert_eq!(face2, &UNOBSERVED_COLOR);
        assert_eq!(crate::geometry::load_mesh(&path).unwrap().mesh, mesh);
    }
}
