//! `points-v1`: a list of model-frame 3D points, one `x y z` per line.

use std::fmt::Write;
use std::path::Path;

use refpose_core::geometry::Vec3;

use super::{read_text, write_atomic, Records};
use crate::error::Result;

pub const MAGIC: &str = "points-v1";

pub fn parse(text: &str, path: &Path) -> Result<Vec<Vec3>> {
    let mut records = Records::new(path, text);
    records.header(MAGIC)?.expect_len(1)?;
    records
        .map(|r| {
            r.expect_len(3)?;
            Ok(Vec3::new(r.float(0)?, r.float(1)?, r.float(2)?))
        })
        .collect()
}

pub fn format(points: &[Vec3]) -> String {
    let mut s = format!("{MAGIC}\n");
    for p in points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

pub fn read(path: &Path) -> Result<Vec<Vec3>> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, points: &[Vec3]) -> Result<()> {
    write_atomic(path, format(points).as_bytes())
}
