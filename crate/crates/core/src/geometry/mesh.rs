use nalgebra::Point3;

use crate::error::{Error, Result};

/// Triangles with an area below this (in m²) are dropped on load.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle mesh in world coordinates (meters).
///
/// Winding is not assumed to be consistent; reconstructed meshes rarely are.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
}

/// A mesh together with the number of degenerate triangles filtered out of it.
#[derive(Debug, Clone)]
pub struct MeshLoad {
    pub mesh: Mesh,
    pub dropped_degenerate: usize,
}

impl Mesh {
    /// Builds a mesh, dropping triangles whose area is below [`DEGENERATE_AREA`].
    ///
    /// Fails if any index is out of range. An empty triangle list is allowed
    /// here; file loading rejects it.
    #[allow(clippy::new_ret_no_self)]
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<MeshLoad> {
        let n = vertices.len();
        if let Some((t, tri)) = triangles
            .iter()
            .enumerate()
            .find(|(_, tri)| tri.iter().any(|&i| i as usize >= n))
        {
            return Err(Error::data(format!(
                "triangle {t} references vertex {:?} but mesh has {n} vertices",
                tri
            )));
        }
        let before = triangles.len();
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|tri| triangle_area(&vertices, tri) >= DEGENERATE_AREA)
            .collect();
        Ok(MeshLoad {
            dropped_degenerate: before - triangles.len(),
            mesh: Mesh { vertices, triangles },
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn corners(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[t])
    }
}

fn triangle_area(vertices: &[Point3<f64>], tri: &[u32; 3]) -> f64 {
    let a = vertices[tri[0] as usize];
    let b = vertices[tri[1] as usize];
    let c = vertices[tri[2] as usize];
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_repeated_vertex_triangle() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let load = Mesh::new(v, vec![[0, 1, 2], [0, 1, 1]]).unwrap();
        assert_eq!(load.mesh.num_triangles(), 1);
        assert_eq!(load.dropped_degenerate, 1);
        assert!((load.mesh.area(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let v = vec![Point3::origin(); 3];
        assert!(matches!(Mesh::new(v, vec![[0, 1, 3]]), Err(Error::Data(_))));
    }

    #[test]
    fn tiny_triangle_is_degenerate() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1e-7, 0.0, 0.0),
            Point3::new(0.0, 1e-7, 0.0),
        ];
        let load = Mesh::new(v, vec![[0, 1, 2]]).unwrap();
        assert_eq!(load.dropped_degenerate, 1);
    }
}
