//! Pinhole cameras and trajectory files.
//!
//! Pixel `(col, row)` covers `[col, col + 1) x [row, row + 1)` in image
//! coordinates, so its center sits at `(col + 0.5, row + 0.5)`. Camera space
//! has x right, y down and z along the optical axis.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, width: u32, height: u32) -> Self {
        Self {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Rigid world-to-camera transform: `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Camera at `eye` looking at `target`. `up` only needs to be non-parallel
    /// to the viewing direction; image y points away from it.
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Self {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&up);
        if right.norm() < 1e-9 {
            let alt = if forward.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            right = forward.cross(&alt);
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye.coords);
        Self {
            rotation,
            translation,
        }
    }

    pub fn transform(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub frame_id: u32,
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl CameraFrame {
    pub fn new(frame_id: u32, intrinsics: Intrinsics, pose: Pose) -> Result<Self> {
        let frame = Self {
            frame_id,
            intrinsics,
            pose,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) {
            return Err(Error::data(format!(
                "frame {}: focal lengths must be positive (fx={}, fy={})",
                self.frame_id, k.fx, k.fy
            )));
        }
        if k.width == 0 || k.height == 0 {
            return Err(Error::data(format!(
                "frame {}: image size must be nonzero ({}x{})",
                self.frame_id, k.width, k.height
            )));
        }
        let err = self.pose.orthonormality_error();
        if err.is_nan() || err > 1e-6 || self.pose.rotation.determinant() <= 0.0 {
            return Err(Error::data(format!(
                "frame {}: rotation is not a proper orthonormal matrix (error {err:e})",
                self.frame_id
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    /// World point to `(pixel x, pixel y, depth)`. Depth is camera-space z and
    /// may be zero or negative; callers clip before trusting x and y.
    pub fn project_point(&self, world: &Point3<f64>) -> (f64, f64, f64) {
        let p = self.pose.transform(world);
        let (x, y) = self.project_camera(&p);
        (x, y, p.z)
    }

    /// Pinhole division of a camera-space point.
    pub fn project_camera(&self, p: &Point3<f64>) -> (f64, f64) {
        let k = &self.intrinsics;
        (k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy)
    }

    /// Camera-space direction through image position `(x, y)`, with unit z.
    pub fn ray_direction(&self, x: f64, y: f64) -> Vector3<f64> {
        let k = &self.intrinsics;
        Vector3::new((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0)
    }
}

/// Parses a trajectory: one frame per line,
/// `frame_id fx fy cx cy width height r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz`.
/// Blank lines and `#` comments are skipped.
pub fn parse_trajectory(text: &str) -> Result<Vec<CameraFrame>> {
    let mut frames = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::data(format!("trajectory line {}: {what}", lineno + 1));
        if fields.len() != 19 {
            return Err(bad(&format!("expected 19 fields, found {}", fields.len())));
        }
        let frame_id: u32 = fields[0].parse().map_err(|_| bad("bad frame id"))?;
        let mut nums = [0.0f64; 18];
        for (dst, tok) in nums.iter_mut().zip(&fields[1..]) {
            *dst = tok.parse().map_err(|_| bad(&format!("bad number {tok:?}")))?;
        }
        let dim = |v: f64| -> Result<u32> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(bad(&format!("bad image dimension {v}")))
            }
        };
        let intrinsics = Intrinsics {
            fx: nums[0],
            fy: nums[1],
            cx: nums[2],
            cy: nums[3],
            width: dim(nums[4])?,
            height: dim(nums[5])?,
        };
        let m = &nums[6..];
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        frames.push(CameraFrame::new(
            frame_id,
            intrinsics,
            Pose {
                rotation,
                translation,
            },
        )?);
    }
    let mut ids: Vec<u32> = frames.iter().map(|f| f.frame_id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::data(format!("trajectory repeats frame id {}", w[0])));
    }
    Ok(frames)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<CameraFrame>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text)
}

pub fn write_trajectory(path: &Path, frames: &[CameraFrame]) -> Result<()> {
    let mut out = String::from(
        "# frame_id fx fy cx cy width height r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz\n",
    );
    for f in frames {
        let k = &f.intrinsics;
        let r = &f.pose.rotation;
        let t = &f.pose.translation;
        let _ = write!(
            out,
            "{} {} {} {} {} {} {}",
            f.frame_id, k.fx, k.fy, k.cx, k.cy, k.width, k.height
        );
        for row in 0..3 {
            let _ = write!(out, " {} {} {} {}", r[(row, 0)], r[(row, 1)], r[(row, 2)], t[row]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
