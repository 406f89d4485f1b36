use nalgebra::{Point2, Point3};
use rayon::prelude::*;

use super::camera::CameraFrame;
use super::mesh::Mesh;

/// Near clipping plane in camera-space z (meters).
pub const NEAR_PLANE: f64 = 1e-4;

/// Per-triangle maximum projected area in pixels² over a set of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleArea(Vec<f64>);

impl TriangleArea {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(values.iter().all(|a| *a >= 0.0), "areas must be nonnegative");
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Worst-case (largest) on-screen area of every triangle over `frames`.
///
/// Occlusion is ignored: the area is that of the projected triangle clipped to
/// the near plane and the image rectangle.
pub fn compute_worst_case_areas(mesh: &Mesh, frames: &[CameraFrame]) -> TriangleArea {
    let values = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let corners = mesh.corners(t);
            frames
                .iter()
                .map(|f| clipped_projected_area(f, &corners))
                .fold(0.0, f64::max)
        })
        .collect();
    TriangleArea(values)
}

/// Area in pixels² of a world-space triangle projected into `frame`, after
/// clipping against the near plane and the image bounds.
pub fn clipped_projected_area(frame: &CameraFrame, corners: &[Point3<f64>; 3]) -> f64 {
    let cam: Vec<Point3<f64>> = corners.iter().map(|p| frame.pose.transform(p)).collect();
    let clipped = clip_near(&cam);
    if clipped.len() < 3 {
        return 0.0;
    }
    let mut poly: Vec<Point2<f64>> = clipped
        .iter()
        .map(|p| {
            let (x, y) = frame.project_camera(p);
            Point2::new(x, y)
        })
        .collect();
    let w = frame.width() as f64;
    let h = frame.height() as f64;
    // x >= 0, x <= w, y >= 0, y <= h
    for (axis, bound, keep_greater) in [(0, 0.0, true), (0, w, false), (1, 0.0, true), (1, h, false)] {
        poly = clip_axis(&poly, axis, bound, keep_greater);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    polygon_area(&poly)
}

fn clip_near(poly: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE;
        let b_in = b.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let s = (NEAR_PLANE - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * s;
            p.z = NEAR_PLANE;
            out.push(p);
        }
    }
    out
}

fn clip_axis(poly: &[Point2<f64>], axis: usize, bound: f64, keep_greater: bool) -> Vec<Point2<f64>> {
    let inside = |p: &Point2<f64>| {
        if keep_greater {
            p[axis] >= bound
        } else {
            p[axis] <= bound
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (a_in, b_in) = (inside(&a), inside(&b));
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let s = (bound - a[axis]) / (b[axis] - a[axis]);
            let mut p = a + (b - a) * s;
            p[axis] = bound;
            out.push(p);
        }
    }
    out
}

fn polygon_area(poly: &[Point2<f64>]) -> f64 {
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::camera::{Intrinsics, Pose};
    use nalgebra::Vector3;

    fn square_at(d: f64) -> Mesh {
        let v = vec![
            Point3::new(-0.5, -0.5, d),
            Point3::new(0.5, -0.5, d),
            Point3::new(0.5, 0.5, d),
            Point3::new(-0.5, 0.5, d),
        ];
        Mesh::new(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap().mesh
    }

    fn frame(id: u32, f: f64, w: u32, h: u32, pose: Pose) -> CameraFrame {
        CameraFrame::new(id, Intrinsics::centered(f, w, h), pose).unwrap()
    }

    #[test]
    fn frontal_square_matches_similar_triangles() {
        let (f, d) = (100.0, 2.0);
        let areas = compute_worst_case_areas(&square_at(d), &[frame(0, f, 200, 200, Pose::identity())]);
        let total: f64 = areas.values().iter().sum();
        let expected = (f / d) * (f / d);
        assert!((total - expected).abs() / expected < 0.01);
        assert!((areas.values()[0] - expected / 2.0).abs() < 1e-9);
    }

    #[test]
    fn never_visible_triangle_has_zero_area() {
        let mesh = square_at(-3.0);
        let areas = compute_worst_case_areas(&mesh, &[frame(0, 100.0, 64, 64, Pose::identity())]);
        assert_eq!(areas.values(), &[0.0, 0.0]);

        // in front, but far outside the image rectangle
        let mut shifted = Pose::identity();
        shifted.translation = Vector3::new(50.0, 0.0, 0.0);
        let areas = compute_worst_case_areas(&square_at(2.0), &[frame(0, 100.0, 64, 64, shifted)]);
        assert_eq!(areas.values(), &[0.0, 0.0]);
    }

    #[test]
    fn takes_the_maximum_over_frames() {
        let mesh = square_at(0.0);
        let mut near = Pose::identity();
        near.translation = Vector3::new(0.0, 0.0, 2.0);
        let mut far = Pose::identity();
        far.translation = Vector3::new(0.0, 0.0, 4.0);
        let frames = [frame(0, 100.0, 400, 400, far), frame(1, 100.0, 400, 400, near)];
        let both = compute_worst_case_areas(&mesh, &frames);
        let only_near = compute_worst_case_areas(&mesh, &frames[1..]);
        assert_eq!(both, only_near);
        assert!((both.values()[0] - 1250.0).abs() < 1e-9);
    }

    #[test]
    fn clipping_to_image_bounds() {
        // square covers 400x400 px but the image is 100x100
        let areas = compute_worst_case_areas(&square_at(0.5), &[frame(0, 200.0, 100, 100, Pose::identity())]);
        let total: f64 = areas.values().iter().sum();
        assert!((total - 10_000.0).abs() < 1e-6);
    }

    #[test]
    fn straddling_near_plane_is_finite() {
        let v = vec![
            Point3::new(-0.1, -0.1, -1.0),
            Point3::new(0.1, -0.1, 1.0),
            Point3::new(0.0, 0.1, 1.0),
        ];
        let mesh = Mesh::new(v, vec![[0, 1, 2]]).unwrap().mesh;
        let a = compute_worst_case_areas(&mesh, &[frame(0, 100.0, 64, 64, Pose::identity())]);
        let a = a.values()[0];
        assert!(a.is_finite() && a > 0.0 && a <= 64.0 * 64.0 + 1e-9);
    }
}
