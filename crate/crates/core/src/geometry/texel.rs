//! Texel parametrization of triangles.
//!
//! Each triangle gets a local uv frame with its origin at the corner whose
//! interior angle is closest to 90 degrees. The u axis runs toward the next
//! corner in stored order, v toward the remaining one, so a point is
//! `origin + u * (next - origin) + v * (other - origin)` with `u, v >= 0` and
//! `u + v < 1`. The uv square is cut into `s x s` cells of side `1 / s`; the
//! `(s² + s) / 2` cells with `i + j < s` are the triangle's texels.

use log::warn;
use nalgebra::Point3;

use super::area::TriangleArea;
use super::mesh::Mesh;

/// Upper bound on per-triangle subdivision steps.
pub const MAX_SUBDIVISION: u32 = 1024;

/// Number of texels of a triangle subdivided into `s` steps.
pub fn texel_count(s: u32) -> u64 {
    let s = s as u64;
    (s * s + s) / 2
}

/// Texel identifier of uv position `(u, v)` on a triangle with `s` steps.
///
/// Cells are enumerated along anti-diagonals: the cell `(i, j) = (⌊s·u⌋, ⌊s·v⌋)`
/// gets `(d² + d) / 2 + j` with `d = i + j`. This is a bijection from the valid
/// cells onto `0..(s² + s) / 2`.
///
/// Panics if `s == 0` or `(u, v)` lies outside the triangle.
pub fn texel_id(s: u32, u: f64, v: f64) -> u32 {
    assert!(s >= 1, "subdivision steps must be at least 1");
    assert!(
        u >= 0.0 && v >= 0.0 && u + v < 1.0,
        "uv ({u}, {v}) outside the triangle"
    );
    let sf = s as f64;
    texel_id_from_cell(s, (sf * u).floor() as u32, (sf * v).floor() as u32)
}

/// Texel identifier of integer cell `(i, j)`. Cells past the hypotenuse, which
/// only arise from rounding, are pulled back onto it.
pub fn texel_id_from_cell(s: u32, i: u32, j: u32) -> u32 {
    let i = i.min(s - 1);
    let j = j.min(s - 1 - i);
    let d = (i + j) as u64;
    ((d * d + d) / 2 + j as u64) as u32
}

/// `max(1, ⌈gamma·√area⌉)`, capped at [`MAX_SUBDIVISION`]. The flag reports
/// whether the cap was hit.
pub fn subdivision_steps(gamma: f64, area: f64) -> (u32, bool) {
    let raw = (gamma * area.sqrt()).ceil();
    if raw > MAX_SUBDIVISION as f64 {
        (MAX_SUBDIVISION, true)
    } else {
        ((raw as u32).max(1), false)
    }
}

/// Position (0, 1 or 2) of the corner used as uv origin: the one whose
/// interior angle is closest to a right angle, ties going to the lowest
/// global vertex index.
pub fn uv_origin(corners: &[Point3<f64>; 3], vertex_ids: &[u32; 3]) -> u8 {
    let mut best: Option<(f64, u32, u8)> = None;
    for k in 0..3 {
        let o = corners[k];
        let a = corners[(k + 1) % 3] - o;
        let b = corners[(k + 2) % 3] - o;
        let cos = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
        let dev = (cos.acos() - std::f64::consts::FRAC_PI_2).abs();
        let candidate = (dev, vertex_ids[k], k as u8);
        best = match best {
            None => Some(candidate),
            Some(cur) => {
                let tie = (dev - cur.0).abs() <= 1e-12;
                if (tie && candidate.1 < cur.1) || (!tie && dev < cur.0) {
                    Some(candidate)
                } else {
                    Some(cur)
                }
            }
        };
    }
    best.map(|b| b.2).unwrap_or(0)
}

/// Maps barycentric weights of the stored corners to the local uv frame.
#[inline]
pub(crate) fn uv_from_barycentric(origin: u8, bary: [f64; 3]) -> (f64, f64) {
    let o = origin as usize;
    (bary[(o + 1) % 3], bary[(o + 2) % 3])
}

/// Inverse of [`uv_from_barycentric`].
#[inline]
pub(crate) fn barycentric_from_uv(origin: u8, u: f64, v: f64) -> [f64; 3] {
    let o = origin as usize;
    let mut b = [0.0; 3];
    b[o] = 1.0 - u - v;
    b[(o + 1) % 3] = u;
    b[(o + 2) % 3] = v;
    b
}

/// Per-triangle subdivision, uv origin and row offset into the packed
/// texel array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TexelLayout {
    steps: Vec<u32>,
    origins: Vec<u8>,
    offsets: Vec<u64>,
    total: u64,
}

impl TexelLayout {
    /// Assembles a layout from per-triangle steps and origins, assigning
    /// offsets in triangle order.
    pub fn from_parts(steps: Vec<u32>, origins: Vec<u8>) -> Self {
        assert_eq!(steps.len(), origins.len());
        assert!(steps.iter().all(|&s| s >= 1), "subdivision steps must be at least 1");
        assert!(origins.iter().all(|&o| o < 3), "origin must be 0, 1 or 2");
        let mut offsets = Vec::with_capacity(steps.len());
        let mut total = 0u64;
        for &s in &steps {
            offsets.push(total);
            total += texel_count(s);
        }
        Self {
            steps,
            origins,
            offsets,
            total,
        }
    }

    pub fn num_triangles(&self) -> usize {
        self.steps.len()
    }

    pub fn total_texels(&self) -> u64 {
        self.total
    }

    pub fn steps(&self, t: usize) -> u32 {
        self.steps[t]
    }

    pub fn all_steps(&self) -> &[u32] {
        &self.steps
    }

    pub fn origin(&self, t: usize) -> u8 {
        self.origins[t]
    }

    pub fn all_origins(&self) -> &[u8] {
        &self.origins
    }

    pub fn offset(&self, t: usize) -> u64 {
        self.offsets[t]
    }

    pub fn texel_count(&self, t: usize) -> u64 {
        texel_count(self.steps[t])
    }

    /// Row of texel `texel` of triangle `t` in the packed array.
    #[inline]
    pub fn row(&self, t: usize, texel: u32) -> usize {
        (self.offsets[t] + texel as u64) as usize
    }
}

/// Chooses `s_t` and the uv origin for every triangle.
pub fn build_texel_layout(mesh: &Mesh, areas: &TriangleArea, gamma: f64) -> TexelLayout {
    assert_eq!(
        areas.len(),
        mesh.num_triangles(),
        "areas were computed for a different mesh"
    );
    assert!(gamma >= 0.0, "gamma must be nonnegative");
    let mut clamped = 0usize;
    let steps: Vec<u32> = areas
        .values()
        .iter()
        .map(|&a| {
            let (s, hit) = subdivision_steps(gamma, a);
            clamped += hit as usize;
            s
        })
        .collect();
    if clamped > 0 {
        warn!("{clamped} triangles clamped to {MAX_SUBDIVISION} subdivision steps");
    }
    let origins = (0..mesh.num_triangles())
        .map(|t| uv_origin(&mesh.corners(t), &mesh.triangles()[t]))
        .collect();
    TexelLayout::from_parts(steps, origins)
}
