//! `corr-v1`: 2D-3D correspondences (final inliers) grouped by image.
//!
//! ```text
//! corr-v1
//! <image> u_x u_y x y z
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use refpose_core::geometry::{Vec2, Vec3};
use refpose_core::Correspondence;

use super::{read_text, write_atomic, Records};
use crate::error::Result;

pub const MAGIC: &str = "corr-v1";

pub type CorrTable = BTreeMap<String, Vec<Correspondence>>;

pub fn parse(text: &str, path: &Path) -> Result<CorrTable> {
    let mut records = Records::new(path, text);
    records.header(MAGIC)?.expect_len(1)?;
    let mut out = CorrTable::new();
    for r in records {
        r.expect_len(6)?;
        out.entry(r.fields[0].to_string()).or_default().push(Correspondence {
            pixel: Vec2::new(r.float(1)?, r.float(2)?),
            point: Vec3::new(r.float(3)?, r.float(4)?, r.float(5)?),
        });
    }
    Ok(out)
}

pub fn format(table: &CorrTable) -> String {
    let mut s = format!("{MAGIC}\n");
    for (name, corrs) in table {
        for c in corrs {
            let (u, p) = (c.pixel, c.point);
            let _ = writeln!(s, "{name} {} {} {} {} {}", u.x, u.y, p.x, p.y, p.z);
        }
    }
    s
}

pub fn read(path: &Path) -> Result<CorrTable> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, table: &CorrTable) -> Result<()> {
    write_atomic(path, format(table).as_bytes())
}
