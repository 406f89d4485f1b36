//! Mesh and camera data model, worst-case triangle areas and the texel
//! parametrization of every triangle.

mod area;
mod camera;
mod io;
mod mesh;
pub(crate) mod texel;

pub use area::{clipped_projected_area, compute_worst_case_areas, TriangleArea, NEAR_PLANE};
pub use camera::{load_trajectory, parse_trajectory, write_trajectory, CameraFrame, Intrinsics, Pose};
pub use io::{load_mesh, read_obj, read_ply, write_ply};
pub use mesh::{Mesh, MeshLoad, DEGENERATE_AREA};
pub use texel::{
    build_texel_layout, subdivision_steps, texel_count, texel_id, texel_id_from_cell, uv_origin,
    TexelLayout, MAX_SUBDIVISION,
};
