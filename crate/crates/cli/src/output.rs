use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes `text` to `path`, or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Serializes `rows` as CSV. In append mode an existing non-empty file keeps
/// its header and only rows are added.
pub fn write_csv<T: Serialize>(path: Option<&Path>, rows: &[T], append: bool) -> Result<()> {
    let existing = append && path.is_some_and(|p| fs::metadata(p).is_ok_and(|m| m.len() > 0));
    let mut builder = csv::WriterBuilder::new();
    builder.has_headers(!existing);
    match path {
        Some(p) => {
            let file = OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(p)
                .with_context(|| format!("opening {}", p.display()))?;
            let mut w = builder.from_writer(file);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = builder.from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
