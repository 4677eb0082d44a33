//! CSV files with a provenance header.
//!
//! Every file starts with `#` comment lines naming the tool version, the
//! command, the SHA-256 of the resolved configuration, the seed, the RNG,
//! the thread count and the resolved configuration itself. Floats are
//! written with 17 significant digits so that they round-trip exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Where the effective thread count came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreadSource {
    Flag,
    Config,
    Environment,
    Default,
}

impl ThreadSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Flag => "flag",
            Self::Config => "config",
            Self::Environment => "env NETFORM_THREADS",
            Self::Default => "default",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub config_toml: String,
    pub seed: u64,
    pub threads: usize,
    pub thread_source: ThreadSource,
}

impl Provenance {
    pub fn config_hash(&self) -> String {
        sha256_hex(self.config_toml.as_bytes())
    }

    fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# netform {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config_sha256: {}", self.config_hash());
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# rng: {}", netform_core::dynamics::RNG_ALGORITHM);
        let _ = writeln!(s, "# threads: {} ({})", self.threads, self.thread_source.as_str());
        s.push_str("# config:\n");
        for line in self.config_toml.lines() {
            let _ = writeln!(s, "#   {line}");
        }
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV table, built in memory and written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    fn render(&self, provenance: &Provenance) -> String {
        let mut s = provenance.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// A two-column `quantity,value` table.
#[derive(Debug, Clone)]
pub struct Summary(Table);

impl Summary {
    pub fn new(name: &str) -> Self {
        Self(Table::new(name, &["quantity", "value"]))
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push(vec![key.to_string(), value.to_string()]);
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.0.push(vec![key.to_string(), num(value)]);
        self
    }

    pub fn into_table(self) -> Table {
        self.0
    }
}

/// Writes every table to `<dir>/<name>.csv` and returns the paths.
pub fn write_tables(dir: &Path, tables: &[Table], provenance: &Provenance) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.render(provenance)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}
