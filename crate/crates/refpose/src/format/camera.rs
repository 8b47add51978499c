//! `camera-v1`: one camera per line.
//!
//! ```text
//! camera-v1 <id> PINHOLE_RT <w> <h> <fx> <fy> <cx> <cy> <k1> <k2> <p1> <p2>
//! ```
//!
//! A camera applies to the image whose name equals its id. A file holding a
//! single camera applies to every image.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use refpose_core::{Camera, Distortion};

use super::{read_text, write_atomic, Records};
use crate::error::{Error, Result};

pub const MAGIC: &str = "camera-v1";
pub const MODEL: &str = "PINHOLE_RT";

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTable(pub BTreeMap<String, Camera>);

impl CameraTable {
    pub fn for_image(&self, image: &str) -> Result<&Camera> {
        if let Some(c) = self.0.get(image) {
            return Ok(c);
        }
        match self.0.len() {
            1 => Ok(self.0.values().next().expect("one camera")),
            _ => Err(Error::MissingCamera(image.to_string())),
        }
    }
}

pub fn parse(text: &str, path: &Path) -> Result<CameraTable> {
    let mut out = BTreeMap::new();
    for r in Records::new(path, text) {
        if r.fields[0] != MAGIC {
            return Err(r.error(format!("expected `{MAGIC}`")));
        }
        r.expect_len(13)?;
        if r.fields[2] != MODEL {
            return Err(r.error(format!("unsupported camera model {:?}", r.fields[2])));
        }
        let d = Distortion::new(r.float(9)?, r.float(10)?, r.float(11)?, r.float(12)?);
        let cam = Camera::with_distortion(
            r.float(5)?,
            r.float(6)?,
            r.float(7)?,
            r.float(8)?,
            d,
            r.get(3)?,
            r.get(4)?,
        )
        .map_err(|e| r.error(e.to_string()))?;
        if out.insert(r.fields[1].to_string(), cam).is_some() {
            return Err(r.error(format!("duplicate camera {:?}", r.fields[1])));
        }
    }
    if out.is_empty() {
        return Err(Error::parse(path, 1, "no cameras"));
    }
    Ok(CameraTable(out))
}

pub fn format_line(id: &str, c: &Camera) -> String {
    let d = c.distortion();
    format!(
        "{MAGIC} {id} {MODEL} {} {} {} {} {} {} {} {} {} {}",
        c.width(),
        c.height(),
        c.fx(),
        c.fy(),
        c.cx(),
        c.cy(),
        d.k1,
        d.k2,
        d.p1,
        d.p2
    )
}

pub fn format(table: &CameraTable) -> String {
    let mut s = String::new();
    for (id, c) in &table.0 {
        let _ = writeln!(s, "{}", format_line(id, c));
    }
    s
}

pub fn read(path: &Path) -> Result<CameraTable> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, table: &CameraTable) -> Result<()> {
    write_atomic(path, format(table).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_fallback() {
        let text = "camera-v1 default PINHOLE_RT 640 480 500 501.5 320 240 -0.05 0.01 0.001 -0.0005\n";
        let t = parse(text, Path::new("c")).unwrap();
        assert_eq!(format(&t), text);
        assert_eq!(t.for_image("anything").unwrap().fy(), 501.5);
    }

    #[test]
    fn lookup_by_name_without_fallback() {
        let text = "camera-v1 a PINHOLE_RT 640 480 500 500 320 240 0 0 0 0\n\
                    camera-v1 b PINHOLE_RT 320 240 250 250 160 120 0 0 0 0\n";
        let t = parse(text, Path::new("c")).unwrap();
        assert_eq!(t.for_image("b").unwrap().width(), 320);
        assert!(matches!(t.for_image("c"), Err(Error::MissingCamera(_))));
    }

    #[test]
    fn rejects_bad_intrinsics_with_line() {
        let e = parse("camera-v1 a PINHOLE_RT 640 480 -5 500 320 240 0 0 0 0\n", Path::new("c")).unwrap_err();
        assert!(e.to_string().starts_with("c:1:"));
        assert!(parse("camera-v1 a OPENCV 640 480 5 500 320 240 0 0 0 0\n", Path::new("c")).is_err());
    }
}
