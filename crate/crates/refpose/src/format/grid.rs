//! Success-rate matrices of the sensitivity experiment.
//!
//! CSV: one row per rotation level, one column per translation level.
//! DAT: gnuplot `nonuniform matrix` layout (first row holds the column
//! count and the translation levels, each following row starts with its
//! rotation level).

use std::fmt::Write;
use std::path::Path;

use super::write_atomic;
use crate::error::Result;

pub fn csv(rot_levels: &[f64], trans_levels: &[f64], rates: &[Vec<f64>]) -> String {
    let mut s = String::from("rot_deg/trans_m");
    for t in trans_levels {
        let _ = write!(s, ",{t}");
    }
    s.push('\n');
    for (r, row) in rot_levels.iter().zip(rates) {
        let _ = write!(s, "{r}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn heatmap_dat(rot_levels: &[f64], trans_levels: &[f64], rates: &[Vec<f64>]) -> String {
    let mut s = format!("{}", trans_levels.len());
    for t in trans_levels {
        let _ = write!(s, " {t}");
    }
    s.push('\n');
    for (r, row) in rot_levels.iter().zip(rates) {
        let _ = write!(s, "{r}");
        for v in row {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, rot: &[f64], trans: &[f64], rates: &[Vec<f64>]) -> Result<()> {
    write_atomic(path, csv(rot, trans, rates).as_bytes())
}

pub fn write_dat(path: &Path, rot: &[f64], trans: &[f64], rates: &[Vec<f64>]) -> Result<()> {
    write_atomic(path, heatmap_dat(rot, trans, rates).as_bytes())
}
