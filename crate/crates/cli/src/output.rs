//! CSV tables with a commented header echoing the configuration, and the
//! JSON manifest.

use std::fmt::{Display, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Config;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV file. Floats go through `Display`, which prints the shortest
/// representation that reads back to the same value.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    columns: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: &[&dyn Display]) {
        debug_assert_eq!(fields.len(), self.columns.len(), "row width in {}", self.name);
        let mut line = String::new();
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{f}").unwrap();
        }
        self.rows.push(line);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config: &Config) -> String {
        let mut out = format!("# adrcm-cli {VERSION}\n");
        for line in config.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// Writes `tables` and extra text files into `dir`, returning the paths.
pub fn write_all(dir: &Path, config: &Config, tables: &[Table], extra: &[(String, String)]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.render(config))?;
        written.push(path);
    }
    for (name, body) in extra {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
