//! Text and binary file formats.
//!
//! Text formats are line based: a versioned header line, then one record
//! per line. Blank lines and lines starting with `#` are ignored. Floats are
//! written in shortest round-trip form, so every writer/reader pair is
//! lossless.

pub mod camera;
pub mod corr;
pub mod grid;
pub mod matches;
pub mod pfm;
pub mod ply;
pub mod points;
pub mod poses;
pub mod ppm;
pub mod uncertainty;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Significant lines of a text file with their 1-based line numbers.
pub(crate) struct Records<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Records<'a> {
    pub(crate) fn new(path: &'a Path, text: &'a str) -> Self {
        Self { path, inner: text.lines().enumerate() }
    }

    /// Consumes the header line and checks that its first token is `magic`.
    /// Returns the remaining header tokens.
    pub(crate) fn header(&mut self, magic: &str) -> Result<Record<'a>> {
        match self.next() {
            Some(r) if r.fields.first() == Some(&magic) => Ok(r),
            Some(r) => Err(r.error(format!("expected header `{magic}`"))),
            None => Err(Error::parse(self.path, 1, format!("empty file, expected header `{magic}`"))),
        }
    }
}

impl<'a> Iterator for Records<'a> {
    type Item = Record<'a>;

    fn next(&mut self) -> Option<Record<'a>> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some(Record { path: self.path, line: i + 1, fields: t.split_whitespace().collect() });
        }
        None
    }
}

pub(crate) struct Record<'a> {
    pub path: &'a Path,
    pub line: usize,
    pub fields: Vec<&'a str>,
}

impl Record<'_> {
    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, message)
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(self.error(format!("expected {n} fields, found {}", self.fields.len())))
        }
    }

    pub(crate) fn get<T: FromStr>(&self, i: usize) -> Result<T> {
        let s = self.fields.get(i).ok_or_else(|| self.error(format!("missing field {}", i + 1)))?;
        s.parse().map_err(|_| self.error(format!("field {}: cannot parse {s:?}", i + 1)))
    }

    /// A finite float.
    pub(crate) fn float(&self, i: usize) -> Result<f64> {
        let v: f64 = self.get(i)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(format!("field {}: value is not finite", i + 1)))
        }
    }
}
