use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::eval::{LabelImage, UNKNOWN};
use crate::geometry::texel::barycentric_from_uv;
use crate::geometry::{build_texel_layout, CameraFrame, Mesh, TexelLayout, TriangleArea};
use crate::raster::rasterize;

/// Half extents of the room box (x, y, z), meters.
const ROOM_HALF: [f64; 3] = [2.0, 2.0, 1.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Cube,
    Room,
    CheckerSphere,
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SceneKind::Cube => "cube",
            SceneKind::Room => "room",
            SceneKind::CheckerSphere => "checker_sphere",
        })
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(SceneKind::Cube),
            "room" => Ok(SceneKind::Room),
            "checker_sphere" => Ok(SceneKind::CheckerSphere),
            other => Err(Error::config(format!(
                "unsupported scene kind '{other}' (expected cube, room or checker_sphere)"
            ))),
        }
    }
}

/// How ground truth is assigned to surface points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Painter {
    /// Every point takes its triangle's class.
    PerFace,
    /// Latitude/longitude checkerboard on directions from the origin:
    /// class `(lat_band + lon_band) mod c`.
    Checker { lat_bands: u32, lon_bands: u32 },
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub kind: SceneKind,
    pub mesh: Mesh,
    /// Class of each triangle (at its centroid for painted scenes).
    pub face_classes: Vec<u16>,
    pub classes: usize,
    pub painter: Painter,
    gt_layout: TexelLayout,
}

impl SyntheticScene {
    fn assemble(
        kind: SceneKind,
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
        classes: usize,
        painter: Painter,
        mut face_class: impl FnMut(usize) -> u16,
    ) -> Self {
        let load = Mesh::new(vertices, triangles).expect("generated indices are in range");
        debug_assert_eq!(load.dropped_degenerate, 0);
        let mesh = load.mesh;
        let n = mesh.num_triangles();
        let face_classes = (0..n).map(&mut face_class).collect();
        let gt_layout = build_texel_layout(&mesh, &TriangleArea::from_values(vec![0.0; n]), 0.0);
        let mut scene = Self {
            kind,
            mesh,
            face_classes,
            classes,
            painter,
            gt_layout,
        };
        if let Painter::Checker { .. } = painter {
            scene.face_classes = (0..n)
                .map(|t| {
                    let c = scene.mesh.corners(t);
                    let centroid = Point3::from((c[0].coords + c[1].coords + c[2].coords) / 3.0);
                    scene.paint(t, &centroid)
                })
                .collect();
        }
        scene
    }

    /// Ground-truth class at surface point `p` on triangle `t`.
    pub fn paint(&self, t: usize, p: &Point3<f64>) -> u16 {
        match self.painter {
            Painter::PerFace => self.face_classes[t],
            Painter::Checker {
                lat_bands,
                lon_bands,
            } => {
                let d = p.coords.normalize();
                let lat = d.z.clamp(-1.0, 1.0).asin() + std::f64::consts::FRAC_PI_2;
                let lon = d.y.atan2(d.x) + std::f64::consts::PI;
                let i = ((lat / std::f64::consts::PI * lat_bands as f64) as u32).min(lat_bands - 1);
                let j = ((lon / std::f64::consts::TAU * lon_bands as f64) as u32).min(lon_bands - 1);
                ((i + j) as usize % self.classes) as u16
            }
        }
    }
}

/// Builds a synthetic scene with `classes` classes.
///
/// * `cube`: unit cube at the origin, 12 triangles; faces +x, -x, +y, -y, +z,
///   -z get classes 0..5 (mod `classes`).
/// * `room`: inward-facing box, each wall a `tessellation x tessellation`
///   grid of quads; floor 0, walls 1, ceiling 2 (mod `classes`).
/// * `checker_sphere`: unit icosphere subdivided `tessellation` times, painted
///   with a checkerboard finer than its triangles.
pub fn make_scene(kind: SceneKind, classes: usize, tessellation: u32) -> Result<SyntheticScene> {
    if classes < 2 {
        return Err(Error::config(format!("scenes need at least 2 classes, got {classes}")));
    }
    if classes > UNKNOWN as usize {
        return Err(Error::config(format!("too many classes: {classes}")));
    }
    let modc = |k: usize| (k % classes) as u16;
    Ok(match kind {
        SceneKind::Cube => {
            let (v, t, faces) = box_mesh([0.5; 3], 1, false);
            SyntheticScene::assemble(kind, v, t, classes, Painter::PerFace, |i| modc(faces[i]))
        }
        SceneKind::Room => {
            if tessellation == 0 {
                return Err(Error::config("room tessellation must be at least 1"));
            }
            let (v, t, faces) = box_mesh(ROOM_HALF, tessellation, true);
            // face order +x, -x, +y, -y, +z (ceiling), -z (floor)
            let class_of = [1, 1, 1, 1, 2, 0];
            SyntheticScene::assemble(kind, v, t, classes, Painter::PerFace, |i| {
                modc(class_of[faces[i]])
            })
        }
        SceneKind::CheckerSphere => {
            if tessellation > 6 {
                return Err(Error::config(format!(
                    "icosphere level {tessellation} too large (max 6)"
                )));
            }
            let (v, t) = icosphere(tessellation);
            let lat_bands = 6 << tessellation;
            let painter = Painter::Checker {
                lat_bands,
                lon_bands: 2 * lat_bands,
            };
            SyntheticScene::assemble(kind, v, t, classes, painter, |_| 0)
        }
    })
}

/// Axis-aligned box centered at the origin; returns vertices, triangles and
/// the face index (0..6 in +x, -x, +y, -y, +z, -z order) of each triangle.
fn box_mesh(half: [f64; 3], tess: u32, inward: bool) -> (Vec<Point3<f64>>, Vec<[u32; 3]>, Vec<usize>) {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut faces = Vec::new();
    let mut shared: HashMap<[i64; 3], u32> = HashMap::new();
    let n = tess as i64;
    for face in 0..6 {
        let axis = face / 2;
        let sign = if face % 2 == 0 { 1 } else { -1 };
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        // integer lattice key so edge vertices are shared between faces
        let mut vertex = |i: i64, j: i64| -> u32 {
            let mut key = [0i64; 3];
            key[axis] = sign * n;
            key[a] = 2 * i - n;
            key[b] = 2 * j - n;
            *shared.entry(key).or_insert_with(|| {
                let p = Point3::new(
                    key[0] as f64 / n as f64 * half[0],
                    key[1] as f64 / n as f64 * half[1],
                    key[2] as f64 / n as f64 * half[2],
                );
                vertices.push(p);
                (vertices.len() - 1) as u32
            })
        };
        for i in 0..n {
            for j in 0..n {
                let q = [vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)];
                // (a, b, axis) is right-handed, so q winds counter-clockwise
                // seen from +axis
                let outward_ccw = sign > 0;
                let (t0, t1) = if outward_ccw != inward {
                    ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                } else {
                    ([q[0], q[2], q[1]], [q[0], q[3], q[2]])
                };
                triangles.push(t0);
                triangles.push(t1);
                faces.push(face);
                faces.push(face);
            }
        }
    }
    (vertices, triangles, faces)
}

fn icosphere(level: u32) -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| Point3::from(Vector3::new(x, y, z).normalize()))
        .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<Point3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = (vertices[a as usize].coords + vertices[b as usize].coords).normalize();
                vertices.push(Point3::from(m));
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    (vertices, triangles)
}

/// Ground-truth label image: covered pixels get the painted class of the
/// visible surface point, uncovered pixels [`UNKNOWN`].
pub fn render_ground_truth(scene: &SyntheticScene, frame: &CameraFrame) -> LabelImage {
    let ids = rasterize(&scene.mesh, &scene.gt_layout, frame);
    let labels = ids
        .pixels()
        .iter()
        .map(|p| {
            if !p.is_covered() {
                return UNKNOWN;
            }
            let t = p.triangle as usize;
            match scene.painter {
                Painter::PerFace => scene.face_classes[t],
                Painter::Checker { .. } => {
                    let b = barycentric_from_uv(scene.gt_layout.origin(t), p.u, p.v);
                    let c = scene.mesh.corners(t);
                    let point = Point3::from(b[0] * c[0].coords + b[1] * c[1].coords + b[2] * c[2].coords);
                    scene.paint(t, &point)
                }
            }
        })
        .collect();
    LabelImage::new(frame.width(), frame.height(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, Pose};

    fn outward(mesh: &Mesh, t: usize) -> f64 {
        let c = mesh.corners(t);
        let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
        let centroid = (c[0].coords + c[1].coords + c[2].coords) / 3.0;
        n.dot(&centroid)
    }

    #[test]
    fn cube_faces_and_classes() {
        let s = make_scene(SceneKind::Cube, 6, 0).unwrap();
        assert_eq!(s.mesh.num_triangles(), 12);
        assert_eq!(s.mesh.num_vertices(), 8);
        assert_eq!(s.face_classes, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
        let normals = [
            Vector3::x(),
            -Vector3::x(),
            Vector3::y(),
            -Vector3::y(),
            Vector3::z(),
            -Vector3::z(),
        ];
        for t in 0..12 {
            let c = s.mesh.corners(t);
            let n = (c[1] - c[0]).cross(&(c[2] - c[0])).normalize();
            assert!((n - normals[t / 2]).norm() < 1e-12, "triangle {t}");
            assert!((s.mesh.area(t) - 0.5).abs() < 1e-12);
        }
        let s2 = make_scene(SceneKind::Cube, 4, 0).unwrap();
        assert_eq!(s2.face_classes[10], 1);
    }

    #[test]
    fn room_counts_and_orientation() {
        for tess in [1, 2, 3] {
            let s = make_scene(SceneKind::Room, 3, tess).unwrap();
            let n = 6 * 2 * (tess * tess) as usize;
            assert_eq!(s.mesh.num_triangles(), n);
            let k = tess as usize + 1;
            assert_eq!(s.mesh.num_vertices(), 6 * k * k - 12 * k + 8);
            for t in 0..n {
                assert!(outward(&s.mesh, t) < 0.0, "triangle {t} faces out");
            }
        }
        let s = make_scene(SceneKind::Room, 3, 2).unwrap();
        // floor is the -z face (index 5): last 8 triangles
        assert!(s.face_classes[40..].iter().all(|&c| c == 0));
        assert!(s.face_classes[32..40].iter().all(|&c| c == 2));
        assert!(s.face_classes[..32].iter().all(|&c| c == 1));
    }

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let s = make_scene(SceneKind::CheckerSphere, 2, level).unwrap();
            assert_eq!(s.mesh.num_triangles(), 20 * 4usize.pow(level));
            assert_eq!(s.mesh.num_vertices(), 10 * 4usize.pow(level) + 2);
            for t in 0..s.mesh.num_triangles() {
                assert!(outward(&s.mesh, t) > 0.0);
            }
            for v in s.mesh.vertices() {
                assert!((v.coords.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_scene(SceneKind::Cube, 1, 0).is_err());
        assert!(make_scene(SceneKind::Room, 3, 0).is_err());
        assert!("torus".parse::<SceneKind>().is_err());
        assert_eq!("checker_sphere".parse::<SceneKind>().unwrap(), SceneKind::CheckerSphere);
    }

    #[test]
    fn checker_uses_both_classes_inside_triangles() {
        let s = make_scene(SceneKind::CheckerSphere, 2, 1).unwrap();
        let mut mixed = 0;
        for t in 0..s.mesh.num_triangles() {
            let c = s.mesh.corners(t);
            let mut seen = [false; 2];
            for a in 0..=8 {
                for b in 0..=(8 - a) {
                    let (wa, wb) = (a as f64 / 8.0, b as f64 / 8.0);
                    let p = Point3::from(
                        (1.0 - wa - wb) * c[0].coords + wa * c[1].coords + wb * c[2].coords,
                    );
                    seen[s.paint(t, &p) as usize] = true;
                }
            }
            if seen[0] && seen[1] {
                mixed += 1;
            }
        }
        assert!(mixed > s.mesh.num_triangles() / 2, "{mixed}");
    }

    #[test]
    fn frontal_cube_face_is_single_class() {
        let s = make_scene(SceneKind::Cube, 6, 0).unwrap();
        let k = Intrinsics::centered(100.0, 80, 80);
        let pose = Pose::look_at(Point3::new(3.0, 0.0, 0.0), Point3::origin(), Vector3::z());
        let frame = CameraFrame::new(0, k, pose).unwrap();
        let gt = render_ground_truth(&s, &frame);
        let mut covered = 0;
        for &l in gt.labels() {
            assert!(l == 0 || l == UNKNOWN);
            covered += (l == 0) as usize;
        }
        // face spans 100 * 1 / 2.5 = 40 px
        assert_eq!(covered, 40 * 40);
        assert_eq!(gt.get(0, 0), UNKNOWN);
        assert_eq!(gt, render_ground_truth(&s, &frame));
    }
}
