use nalgebra::{Point3, Vector3};

use crate::geometry::{CameraFrame, Intrinsics, Pose};

/// Default inclination of the orbit plane. A level orbit sees the top and
/// bottom of a centered object only edge-on.
pub const DEFAULT_TILT_DEG: f64 = 30.0;

/// `n_frames` cameras evenly spaced on a circle of `radius` around `center`,
/// all looking at `center`, with frame ids `0..n_frames`.
///
/// The circle lies in the world xy plane (z up) rotated about the x axis by
/// `tilt_deg`; `tilt_deg = 0` gives a level orbit with camera `k` at azimuth
/// `360° · k / n_frames` from +x.
pub fn make_orbit_trajectory(
    center: Point3<f64>,
    radius: f64,
    n_frames: usize,
    intrinsics: Intrinsics,
    tilt_deg: f64,
) -> Vec<CameraFrame> {
    assert!(n_frames >= 1, "orbit needs at least one frame");
    assert!(radius > 0.0, "orbit radius must be positive");
    let (st, ct) = tilt_deg.to_radians().sin_cos();
    let normal = Vector3::new(0.0, -st, ct);
    (0..n_frames)
        .map(|k| {
            let az = std::f64::consts::TAU * k as f64 / n_frames as f64;
            let (sa, ca) = az.sin_cos();
            let dir = Vector3::new(ca, sa * ct, sa * st);
            let pose = Pose::look_at(center + radius * dir, center, normal);
            CameraFrame::new(k as u32, intrinsics, pose).expect("look-at pose is a rotation")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_frames_at_right_angles() {
        let k = Intrinsics::centered(100.0, 64, 48);
        let frames = make_orbit_trajectory(Point3::origin(), 2.0, 4, k, 0.0);
        let expected = [(2.0, 0.0), (0.0, 2.0), (-2.0, 0.0), (0.0, -2.0)];
        for (f, (x, y)) in frames.iter().zip(expected) {
            let c = f.pose.center();
            assert!((c.x - x).abs() < 1e-12 && (c.y - y).abs() < 1e-12 && c.z.abs() < 1e-12);
        }
        let ids: Vec<u32> = frames.iter().map(|f| f.frame_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn center_projects_to_principal_point() {
        let k = Intrinsics::centered(300.0, 320, 240);
        let c = Point3::new(0.3, -0.2, 0.5);
        for tilt in [0.0, DEFAULT_TILT_DEG, 75.0] {
            for f in make_orbit_trajectory(c, 3.0, 17, k, tilt) {
                let (x, y, z) = f.project_point(&c);
                assert!((x - k.cx).abs() < 1e-6 && (y - k.cy).abs() < 1e-6, "{x} {y}");
                assert!((z - 3.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tilted_orbit_goes_above_and_below() {
        let k = Intrinsics::centered(100.0, 64, 48);
        let frames = make_orbit_trajectory(Point3::origin(), 3.0, 30, k, DEFAULT_TILT_DEG);
        let z: Vec<f64> = frames.iter().map(|f| f.pose.center().z).collect();
        assert!(z.iter().any(|&z| z > 1.0) && z.iter().any(|&z| z < -1.0));
        for f in &frames {
            assert!((f.pose.center().coords.norm() - 3.0).abs() < 1e-12);
        }
    }
}
