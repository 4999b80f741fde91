//! CSV reports: '#'-prefixed header with version, effective config and run
//! results, then the data. Files are written atomically.

use std::io::Write;
use std::path::Path;

use crate::config::{RunConfig, HEADER_END, HEADER_TAG};
use crate::Failure;

/// Decimal with 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// A finished run: result notes for the header and CSV rows.
#[derive(Debug, Default)]
pub struct Report {
    notes: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<String>,
    /// Set when the report must be written but the run still failed.
    pub failure: Option<Failure>,
}

impl Report {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: impl IntoIterator<Item = S>) {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.join(","));
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut text = format!("{HEADER_TAG} {}\n", eeqt_core::VERSION);
        for line in config.to_toml().lines() {
            if line.is_empty() {
                text.push_str("#\n");
            } else {
                text.push_str(&format!("# {line}\n"));
            }
        }
        text.push_str(HEADER_END);
        text.push('\n');
        for (key, value) in &self.notes {
            text.push_str(&format!("# {key} = {value}\n"));
        }
        text.push_str(&self.columns.join(","));
        text.push('\n');
        for row in &self.rows {
            text.push_str(row);
            text.push('\n');
        }
        text
    }
}

/// Writes to `path` through a temporary file in the same directory, so a
/// failed run never leaves a partial file; `None` writes to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    match path {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).map_err(io)?;
            lock.flush().map_err(io)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}
