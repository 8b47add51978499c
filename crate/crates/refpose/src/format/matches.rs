//! `match-v1`: matches between a real image and one rendering.
//!
//! ```text
//! match-v1 <image_id> <render_id>
//! u_x u_y ur_x ur_y
//! ```

use std::fmt::Write;
use std::path::Path;

use refpose_core::geometry::Vec2;
use refpose_core::{MatchPair, MatchSet};

use super::{read_text, write_atomic, Records};
use crate::error::{Error, Result};

pub const MAGIC: &str = "match-v1";

pub fn parse(text: &str, path: &Path) -> Result<MatchSet> {
    let mut records = Records::new(path, text);
    let header = records.header(MAGIC)?;
    header.expect_len(3)?;
    let mut pairs = Vec::new();
    for r in records {
        r.expect_len(4)?;
        pairs.push(MatchPair {
            u: Vec2::new(r.float(0)?, r.float(1)?),
            u_r: Vec2::new(r.float(2)?, r.float(3)?),
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyMatches { path: path.to_path_buf() });
    }
    Ok(MatchSet::new(header.fields[1], header.fields[2], pairs)?)
}

pub fn format(m: &MatchSet) -> String {
    let mut s = format!("{MAGIC} {} {}\n", m.image_id(), m.render_id());
    for p in m.pairs() {
        let _ = writeln!(s, "{} {} {} {}", p.u.x, p.u.y, p.u_r.x, p.u_r.y);
    }
    s
}

pub fn read(path: &Path) -> Result<MatchSet> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, m: &MatchSet) -> Result<()> {
    write_atomic(path, format(m).as_bytes())
}
