//! Binary PPM (`P6`) for flat-shaded debug renderings.

use std::path::Path;

use refpose_core::render::ColorImage;

use super::write_atomic;
use crate::error::Result;

pub fn encode(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for px in &img.rgb {
        out.extend_from_slice(px);
    }
    out
}

pub fn write(path: &Path, img: &ColorImage) -> Result<()> {
    write_atomic(path, &encode(img))
}
