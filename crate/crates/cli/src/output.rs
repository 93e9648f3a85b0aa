//! CSV formatting and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::{CliError, CliResult};

/// Formats `x` with 17 significant digits, which round-trips every double.
/// Trailing zeros are dropped; magnitudes outside `[1e-5, 1e17)` use
/// scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0.0");
    }
    if !(-5..=16).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let tail = if tail.is_empty() { "0" } else { tail };
        return format!("{sign}{head}.{tail}e{exp}");
    }
    let (int_part, frac_part) = if exp >= 0 {
        let split = exp as usize + 1;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
    };
    let frac = frac_part.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{sign}{int_part}.{frac}")
}

/// Accumulates CSV rows in memory so nothing is written until a command has
/// fully succeeded.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

/// One CSV cell.
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Csv {
    pub fn with_header(columns: &[&str]) -> Self {
        Csv {
            text: columns.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let line: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Int(v) => v.to_string(),
                Cell::Float(v) => fmt_f64(v),
                Cell::Bool(v) => v.to_string(),
            })
            .collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file. Existing
/// paths that are not plain regular files (symlinks such as `/dev/stdout`,
/// devices, pipes) are written in place, since a rename would replace the
/// link or device itself.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    if std::fs::symlink_metadata(path).is_ok_and(|m| !m.is_file()) {
        let mut file = std::fs::OpenOptions::new()
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(io)?;
        return file
            .write_all(contents.as_bytes())
            .and_then(|_| file.flush())
            .map_err(io);
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
        }
    }
}
