//! `poses-v1`: one world-to-camera pose per image.
//!
//! ```text
//! poses-v1 convention=w2c
//! <image> qw qx qy qz tx ty tz
//! ```
//!
//! A world point `x` maps to the camera frame as `R(q)·x + t`. Internally
//! poses are camera-to-world; conversion happens here.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use refpose_core::Pose;

use super::{read_text, write_atomic, Records};
use crate::error::Result;

pub const HEADER: &str = "poses-v1";
pub const CONVENTION: &str = "convention=w2c";

/// Quaternions whose norm is off by more than this are rejected.
pub const QUATERNION_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRecord {
    /// `(w, x, y, z)`.
    pub q: [f64; 4],
    pub t: [f64; 3],
}

impl PoseRecord {
    fn quaternion(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.q;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    fn from_parts(q: UnitQuaternion<f64>, t: Vector3<f64>) -> Self {
        // canonical sign: non-negative w
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        Self { q: [q.w, q.i, q.j, q.k], t: [t.x, t.y, t.z] }
    }

    /// The inverse rigid transform. Applying it twice gives back the record
    /// (up to rounding), which converts between the two conventions.
    pub fn inverted(&self) -> Self {
        let q = self.quaternion().inverse();
        let t = -(q * Vector3::from(self.t));
        Self::from_parts(q, t)
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let q_c2w = UnitQuaternion::from_rotation_matrix(pose.rotation());
        Self::from_parts(q_c2w, *pose.center()).inverted()
    }

    pub fn to_pose(&self) -> Pose {
        let c2w = self.inverted();
        Pose::new(c2w.quaternion().to_rotation_matrix(), Vector3::from(c2w.t))
    }
}

pub type PoseTable = BTreeMap<String, PoseRecord>;

pub fn parse(text: &str, path: &Path) -> Result<PoseTable> {
    let mut records = Records::new(path, text);
    let header = records.header(HEADER)?;
    if header.fields.get(1) != Some(&CONVENTION) || header.fields.len() != 2 {
        return Err(header.error(format!("expected `{HEADER} {CONVENTION}`")));
    }
    let mut out = PoseTable::new();
    for r in records {
        r.expect_len(8)?;
        let q = [r.float(1)?, r.float(2)?, r.float(3)?, r.float(4)?];
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOL {
            return Err(r.error(format!("quaternion norm {norm} is not 1")));
        }
        let t = [r.float(5)?, r.float(6)?, r.float(7)?];
        if out.insert(r.fields[0].to_string(), PoseRecord { q, t }).is_some() {
            return Err(r.error(format!("duplicate image {:?}", r.fields[0])));
        }
    }
    Ok(out)
}

pub fn format(table: &PoseTable) -> String {
    let mut s = format!("{HEADER} {CONVENTION}\n");
    for (name, r) in table {
        let [qw, qx, qy, qz] = r.q;
        let [tx, ty, tz] = r.t;
        let _ = writeln!(s, "{name} {qw} {qx} {qy} {qz} {tx} {ty} {tz}");
    }
    s
}

pub fn read(path: &Path) -> Result<PoseTable> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, table: &PoseTable) -> Result<()> {
    write_atomic(path, format(table).as_bytes())
}

/// Reads a pose file straight into internal camera-to-world poses.
pub fn read_poses(path: &Path) -> Result<BTreeMap<String, Pose>> {
    Ok(read(path)?.into_iter().map(|(k, r)| (k, r.to_pose())).collect())
}

pub fn write_poses<'a>(path: &Path, poses: impl IntoIterator<Item = (&'a String, &'a Pose)>) -> Result<()> {
    let table: PoseTable = poses.into_iter().map(|(k, p)| (k.clone(), PoseRecord::from_pose(p))).collect();
    write(path, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use refpose_core::pose_error;

    #[test]
    fn record_round_trip_is_exact() {
        let mut t = PoseTable::new();
        t.insert("a.jpg".into(), PoseRecord { q: [0.5, 0.5, -0.5, 0.5], t: [0.1, -2.0 / 3.0, 1e-17] });
        let text = format(&t);
        assert_eq!(parse(&text, Path::new("x")).unwrap(), t);
    }

    #[test]
    fn pose_conversion_round_trip() {
        let pose = Pose::from_axis_angle(Vector3::new(0.3, -1.2, 0.4), Vector3::new(5.0, -1.0, 2.0));
        let back = PoseRecord::from_pose(&pose).to_pose();
        let e = pose_error(&pose, &back);
        assert!(e.position_err < 1e-12 && e.rotation_err < 1e-9);
    }

    #[test]
    fn world_origin_maps_to_minus_rotated_center() {
        let pose = Pose::from_axis_angle(Vector3::zeros(), Vector3::new(1.0, 2.0, 3.0));
        let r = PoseRecord::from_pose(&pose);
        assert_eq!(r.q, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.t, [-1.0, -2.0, -3.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "poses-v1 convention=w2c\n\n# c\na 1 0 0 0 0 0\n";
        let e = parse(text, Path::new("p.txt")).unwrap_err().to_string();
        assert!(e.starts_with("p.txt:4:"), "{e}");
        let e = parse("poses-v1 convention=w2c\na 2 0 0 0 0 0 0\n", Path::new("p.txt")).unwrap_err();
        assert!(e.to_string().contains("p.txt:2: quaternion norm"));
        assert!(parse("poses-v1 convention=c2w\n", Path::new("p")).is_err());
    }
}
