//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use labelfuse::geometry::NEAR_PLANE;
use labelfuse::synth::PixelRng;
use labelfuse::{CameraFrame, Mesh};
use nalgebra::{Point3, Vector3};

/// Nearest triangle hit by the ray through pixel center `(x + 0.5, y + 0.5)`,
/// by Möller–Trumbore intersection in camera space. Returns the triangle and
/// the camera-space depth of the hit.
pub fn ray_cast(mesh: &Mesh, frame: &CameraFrame, x: u32, y: u32) -> Option<(u32, f64)> {
    let dir = frame.ray_direction(x as f64 + 0.5, y as f64 + 0.5);
    let mut best: Option<(u32, f64)> = None;
    for (t, _) in mesh.triangles().iter().enumerate() {
        let c = mesh.corners(t).map(|p| frame.pose.transform(&p));
        let Some(depth) = intersect(&dir, &c) else { continue };
        if depth < NEAR_PLANE {
            continue;
        }
        if best.is_none_or(|(_, d)| depth < d - 1e-9) {
            best = Some((t as u32, depth));
        }
    }
    best
}

fn intersect(dir: &Vector3<f64>, c: &[Point3<f64>; 3]) -> Option<f64> {
    let e1 = c[1] - c[0];
    let e2 = c[2] - c[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let s = -c[0].coords;
    let u = s.dot(&p) / det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) / det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    // dir has unit z, so the ray parameter is the depth
    Some(e2.dot(&q) / det)
}

pub fn uniform(rng: &mut PixelRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

/// Random distribution over `c` classes with every component at least
/// `floor` before normalization.
pub fn random_probs(rng: &mut PixelRng, c: usize, floor: f64) -> Vec<f32> {
    let raw: Vec<f64> = (0..c).map(|_| floor + rng.next_f64()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| (x / s) as f32).collect()
}

/// Closed-form fused distribution for one texel: `sum` is the normalized
/// weighted sum, `maxsum` the same over maximal components only, `mul` the
/// normalized product of `p^w` with probabilities clamped to `[1e-7, 1]`.
pub fn oracle(kind: &str, pixels: &[(Vec<f32>, f64)]) -> Vec<f64> {
    let c = pixels[0].0.len();
    let mut acc = vec![0.0f64; c];
    match kind {
        "sum" => {
            for (p, w) in pixels {
                for k in 0..c {
                    acc[k] += w * p[k] as f64;
                }
            }
        }
        "maxsum" => {
            for (p, w) in pixels {
                let m = p.iter().cloned().fold(f32::MIN, f32::max);
                for k in 0..c {
                    if p[k] == m {
                        acc[k] += w * p[k] as f64;
                    }
                }
            }
        }
        "mul" => {
            acc.fill(1.0);
            for (p, w) in pixels {
                for k in 0..c {
                    acc[k] *= (p[k] as f64).max(1e-7).powf(*w);
                }
            }
        }
        _ => unreachable!(),
    }
    let s: f64 = acc.iter().sum();
    acc.iter().map(|a| a / s).collect()
}
