//! `uncertainty-v1`: per-image uncertainty estimates.
//!
//! ```text
//! uncertainty-v1
//! <image> <method> <k> <position m> <rotation deg>
//! ```
//!
//! `<method>` is `first-order`, `monte-carlo` or `sampling`; `<k>` is the
//! sampling ratio, or `-` for the other two.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use refpose_core::{UncertaintyEstimate, UncertaintyMethod};

use super::{read_text, write_atomic, Records};
use crate::error::Result;

pub const MAGIC: &str = "uncertainty-v1";

/// Estimates in file order, per image.
pub type UncertaintyTable = BTreeMap<String, Vec<UncertaintyEstimate>>;

/// Short name used in files and reports, e.g. `sampling-0.5`.
pub fn source_name(method: &UncertaintyMethod) -> String {
    match method {
        UncertaintyMethod::FirstOrder => "first-order".into(),
        UncertaintyMethod::MonteCarlo => "monte-carlo".into(),
        UncertaintyMethod::Sampling { ratio } => format!("sampling-{ratio}"),
    }
}

pub fn parse(text: &str, path: &Path) -> Result<UncertaintyTable> {
    let mut records = Records::new(path, text);
    records.header(MAGIC)?.expect_len(1)?;
    let mut out = UncertaintyTable::new();
    for r in records {
        r.expect_len(5)?;
        let method = match (r.fields[1], r.fields[2]) {
            ("first-order", "-") => UncertaintyMethod::FirstOrder,
            ("monte-carlo", "-") => UncertaintyMethod::MonteCarlo,
            ("sampling", _) => UncertaintyMethod::Sampling { ratio: r.float(2)? },
            (m, k) => return Err(r.error(format!("unknown method/ratio {m:?} {k:?}"))),
        };
        out.entry(r.fields[0].to_string()).or_default().push(UncertaintyEstimate {
            position_unc: r.float(3)?,
            rotation_unc: r.float(4)?,
            method,
            num_samples: 0,
        });
    }
    Ok(out)
}

pub fn format(table: &UncertaintyTable) -> String {
    let mut s = format!("{MAGIC}\n");
    for (name, list) in table {
        for u in list {
            let (m, k) = match u.method {
                UncertaintyMethod::FirstOrder => ("first-order", "-".to_string()),
                UncertaintyMethod::MonteCarlo => ("monte-carlo", "-".to_string()),
                UncertaintyMethod::Sampling { ratio } => ("sampling", ratio.to_string()),
            };
            let _ = writeln!(s, "{name} {m} {k} {} {}", u.position_unc, u.rotation_unc);
        }
    }
    s
}

pub fn read(path: &Path) -> Result<UncertaintyTable> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, table: &UncertaintyTable) -> Result<()> {
    write_atomic(path, format(table).as_bytes())
}
