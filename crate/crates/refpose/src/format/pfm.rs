//! Depth maps as single-channel PFM: little-endian (scale `-1.0`), rows
//! stored bottom to top. Invalid pixels are written as `0`.

use std::path::Path;

use refpose_core::DepthMap;

use super::write_atomic;
use crate::error::{Error, Result};

pub fn encode(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width() as usize, depth.height() as usize);
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    let d = depth.as_slice();
    for y in (0..h).rev() {
        for &v in &d[y * w..(y + 1) * w] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    let err = |line: usize, m: &str| Error::parse(path, line, m);
    // three whitespace-terminated header tokens groups: magic, dims, scale
    let mut pos = 0;
    let mut token = || -> Option<&str> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        std::str::from_utf8(&bytes[start..pos]).ok().filter(|s| !s.is_empty())
    };
    if token() != Some("Pf") {
        return Err(err(1, "expected single-channel `Pf` magic"));
    }
    let w: u32 = token().and_then(|s| s.parse().ok()).ok_or_else(|| err(2, "bad width"))?;
    let h: u32 = token().and_then(|s| s.parse().ok()).ok_or_else(|| err(2, "bad height"))?;
    let scale: f64 = token().and_then(|s| s.parse().ok()).ok_or_else(|| err(3, "bad scale"))?;
    if scale == 0.0 {
        return Err(err(3, "scale must be non-zero"));
    }
    // exactly one whitespace byte separates the header from the data
    pos += 1;
    let (wu, hu) = (w as usize, h as usize);
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != 4 * wu * hu {
        return Err(err(4, &format!("expected {} data bytes, found {}", 4 * wu * hu, data.len())));
    }
    let mut depth = vec![0.0; wu * hu];
    for (k, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if scale < 0.0 { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (hu - 1 - k / wu, k % wu);
        depth[row * wu + col] = v as f64;
    }
    Ok(DepthMap::from_raw(w, h, depth)?)
}

pub fn write(path: &Path, depth: &DepthMap) -> Result<()> {
    write_atomic(path, &encode(depth))
}

pub fn read(path: &Path) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_row_order() {
        let d = DepthMap::from_raw(3, 2, vec![1.0, 2.0, 0.0, 4.5, 5.25, 6.0]).unwrap();
        let bytes = encode(&d);
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        // bottom row first
        assert_eq!(&bytes[12..16], &4.5f32.to_le_bytes());
        assert_eq!(decode(&bytes, Path::new("d")).unwrap(), d);
    }

    #[test]
    fn truncated_data() {
        let mut bytes = encode(&DepthMap::from_raw(2, 2, vec![1.0; 4]).unwrap());
        bytes.pop();
        assert!(decode(&bytes, Path::new("d")).is_err());
    }
}
