//! Z-buffered software rasterizer producing per-pixel triangle and texel
//! correspondences.
//!
//! One sample per pixel center. Coverage uses edge functions with a
//! direction-based tie rule so a pixel center on an edge shared by two
//! triangles belongs to exactly one of them. Back faces are not culled.
//! Triangles are clipped against the near plane in camera space and
//! barycentrics are interpolated perspective-correctly.
//!
//! The image is split into horizontal bands rasterized in parallel; inside a
//! band triangles are visited in ascending index, so the output is identical
//! to a sequential pass.

mod debug;

use nalgebra::{Point2, Point3};
use rayon::prelude::*;

pub use debug::write_debug_pngs;

use crate::geometry::{texel_id, CameraFrame, Mesh, TexelLayout, NEAR_PLANE};

/// Depths closer than this (meters) are treated as equal; the lower triangle
/// index wins.
pub const DEPTH_TIE: f64 = 1e-9;

const BAND_ROWS: u32 = 16;

/// What a single pixel sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelRef {
    /// Triangle index, or [`PixelRef::NONE`].
    pub triangle: u32,
    /// Texel index within the triangle.
    pub texel: u32,
    /// Camera-space z in meters.
    pub depth: f64,
    pub u: f64,
    pub v: f64,
}

impl PixelRef {
    pub const NONE: u32 = u32::MAX;

    pub const EMPTY: PixelRef = PixelRef {
        triangle: Self::NONE,
        texel: 0,
        depth: f64::INFINITY,
        u: 0.0,
        v: 0.0,
    };

    #[inline]
    pub fn is_covered(&self) -> bool {
        self.triangle != Self::NONE
    }
}

/// Per-pixel correspondence image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IdImage {
    width: u32,
    height: u32,
    pixels: Vec<PixelRef>,
}

impl IdImage {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![PixelRef::EMPTY; width as usize * height as usize],
        }
    }

    /// Wraps externally produced correspondences (row-major).
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<PixelRef>) -> Self {
        assert_eq!(pixels.len(), width as usize * height as usize);
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels_mut(&mut self) -> &mut [PixelRef] {
        &mut self.pixels
    }

    pub fn pixels(&self) -> &[PixelRef] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> &PixelRef {
        &self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn covered_count(&self) -> usize {
        self.pixels.iter().filter(|p| p.is_covered()).count()
    }
}

/// Screen-space vertex carrying what perspective-correct interpolation needs.
#[derive(Debug, Clone, Copy)]
struct ScreenVertex {
    pos: Point2<f64>,
    inv_z: f64,
    /// Barycentrics of the source triangle divided by z.
    bary_over_z: [f64; 3],
}

#[derive(Debug, Clone)]
struct ScreenTriangle {
    triangle: u32,
    v: [ScreenVertex; 3],
    area2: f64,
    min: (u32, u32),
    max: (u32, u32),
}

/// Rasterizes `mesh` into `frame`.
pub fn rasterize(mesh: &Mesh, layout: &TexelLayout, frame: &CameraFrame) -> IdImage {
    assert_eq!(
        layout.num_triangles(),
        mesh.num_triangles(),
        "layout was built for a different mesh"
    );
    let (w, h) = (frame.width(), frame.height());
    let screen: Vec<ScreenTriangle> = (0..mesh.num_triangles())
        .into_par_iter()
        .flat_map_iter(|t| setup_triangle(mesh, frame, t))
        .collect();

    let bands = h.div_ceil(BAND_ROWS) as usize;
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); bands];
    for (i, st) in screen.iter().enumerate() {
        for band in (st.min.1 / BAND_ROWS)..=(st.max.1 / BAND_ROWS) {
            bins[band as usize].push(i as u32);
        }
    }

    let mut image = IdImage::empty(w, h);
    image
        .pixels
        .par_chunks_mut(BAND_ROWS as usize * w as usize)
        .zip(bins.par_iter())
        .enumerate()
        .for_each(|(band, (rows, bin))| {
            let y0 = band as u32 * BAND_ROWS;
            let y1 = (y0 + BAND_ROWS).min(h) - 1;
            for &i in bin {
                draw(&screen[i as usize], layout, rows, w, y0, y1);
            }
        });
    image
}

/// Clips triangle `t` to the near plane and returns its screen-space fan.
fn setup_triangle(mesh: &Mesh, frame: &CameraFrame, t: usize) -> Vec<ScreenTriangle> {
    let corners = mesh.corners(t);
    let mut poly: Vec<(Point3<f64>, [f64; 3])> = corners
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut b = [0.0; 3];
            b[k] = 1.0;
            (frame.pose.transform(p), b)
        })
        .collect();
    if poly.iter().any(|(p, _)| p.z < NEAR_PLANE) {
        poly = clip_near(&poly);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    let verts: Vec<ScreenVertex> = poly
        .iter()
        .map(|(p, b)| {
            let (x, y) = frame.project_camera(p);
            let inv_z = 1.0 / p.z;
            ScreenVertex {
                pos: Point2::new(x, y),
                inv_z,
                bary_over_z: [b[0] * inv_z, b[1] * inv_z, b[2] * inv_z],
            }
        })
        .collect();

    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let mut out = Vec::new();
    for k in 1..verts.len() - 1 {
        let mut v = [verts[0], verts[k], verts[k + 1]];
        let mut area2 = edge(&v[0].pos, &v[1].pos, &v[2].pos);
        if area2 == 0.0 || !area2.is_finite() {
            continue;
        }
        if area2 < 0.0 {
            v.swap(1, 2);
            area2 = -area2;
        }
        let xs = v.map(|p| p.pos.x);
        let ys = v.map(|p| p.pos.y);
        let lo_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_y = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // pixel centers at +0.5
        let min_x = (lo_x - 0.5).ceil().max(0.0);
        let max_x = (hi_x - 0.5).floor().min(w - 1.0);
        let min_y = (lo_y - 0.5).ceil().max(0.0);
        let max_y = (hi_y - 0.5).floor().min(h - 1.0);
        if min_x > max_x || min_y > max_y {
            continue;
        }
        out.push(ScreenTriangle {
            triangle: t as u32,
            v,
            area2,
            min: (min_x as u32, min_y as u32),
            max: (max_x as u32, max_y as u32),
        });
    }
    out
}

fn clip_near(poly: &[(Point3<f64>, [f64; 3])]) -> Vec<(Point3<f64>, [f64; 3])> {
    let mut out = Vec::with_capacity(4);
    for i in 0..poly.len() {
        let (a, ba) = poly[i];
        let (b, bb) = poly[(i + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE;
        if a_in {
            out.push((a, ba));
        }
        if a_in != (b.z >= NEAR_PLANE) {
            let s = (NEAR_PLANE - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * s;
            p.z = NEAR_PLANE;
            let bary = [0, 1, 2].map(|k| ba[k] + (bb[k] - ba[k]) * s);
            out.push((p, bary));
        }
    }
    out
}

/// Edge function, evaluated from the lexicographically smaller endpoint so
/// that `edge(a, b, p) == -edge(b, a, p)` holds exactly.
#[inline]
fn edge(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    if (a.x, a.y) <= (b.x, b.y) {
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    } else {
        -((a.x - b.x) * (p.y - b.y) - (a.y - b.y) * (p.x - b.x))
    }
}

/// Tie rule for pixel centers exactly on an edge. For any nonzero direction,
/// exactly one of `d` and `-d` is accepted.
#[inline]
fn owns_edge(a: &Point2<f64>, b: &Point2<f64>) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

#[inline]
fn inside(e: f64, owns: bool) -> bool {
    e > 0.0 || (e == 0.0 && owns)
}

fn draw(st: &ScreenTriangle, layout: &TexelLayout, rows: &mut [PixelRef], width: u32, y0: u32, y1: u32) {
    let t = st.triangle as usize;
    let s = layout.steps(t);
    let origin = layout.origin(t);
    let [v0, v1, v2] = &st.v;
    let own = [
        owns_edge(&v1.pos, &v2.pos),
        owns_edge(&v2.pos, &v0.pos),
        owns_edge(&v0.pos, &v1.pos),
    ];
    for y in st.min.1.max(y0)..=st.max.1.min(y1) {
        let py = y as f64 + 0.5;
        let row = &mut rows[((y - y0) * width) as usize..((y - y0 + 1) * width) as usize];
        for x in st.min.0..=st.max.0 {
            let p = Point2::new(x as f64 + 0.5, py);
            let e0 = edge(&v1.pos, &v2.pos, &p);
            let e1 = edge(&v2.pos, &v0.pos, &p);
            let e2 = edge(&v0.pos, &v1.pos, &p);
            if !(inside(e0, own[0]) && inside(e1, own[1]) && inside(e2, own[2])) {
                continue;
            }
            let l = [e0 / st.area2, e1 / st.area2, e2 / st.area2];
            let inv_z = l[0] * v0.inv_z + l[1] * v1.inv_z + l[2] * v2.inv_z;
            let depth = 1.0 / inv_z;
            let cur = &row[x as usize];
            let wins = !cur.is_covered()
                || depth < cur.depth - DEPTH_TIE
                || ((depth - cur.depth).abs() <= DEPTH_TIE && st.triangle < cur.triangle);
            if !wins {
                continue;
            }
            let mut bary = [0.0; 3];
            for (k, b) in bary.iter_mut().enumerate() {
                *b = (l[0] * v0.bary_over_z[k] + l[1] * v1.bary_over_z[k] + l[2] * v2.bary_over_z[k]) * depth;
            }
            let (u, v) = canonical_uv(crate::geometry::texel::uv_from_barycentric(origin, bary));
            row[x as usize] = PixelRef {
                triangle: st.triangle,
                texel: texel_id(s, u, v),
                depth,
                u,
                v,
            };
        }
    }
}

/// Pulls rounding noise back inside `u, v >= 0, u + v < 1`.
#[inline]
fn canonical_uv((u, v): (f64, f64)) -> (f64, f64) {
    let u = u.max(0.0);
    let v = v.max(0.0);
    let sum = u + v;
    if sum < 1.0 {
        (u, v)
    } else {
        let k = (1.0 - 1e-9) / sum;
        (u * k, v * k)
    }
}
