//! Command front end: run configuration, report envelope, exit statuses.
//!
//! Every `cmd_*` function is a pure function of its inputs and the
//! [`RunConfig`]; the `scalecheck` binary only parses flags, calls one of
//! them, and prints the report in the requested format.

mod commands;
pub mod docs;

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::airquality::{AirError, YearStart};
use crate::provenance::identity_hash;
use crate::statements::{DEFAULT_REL_TOL, DEFAULT_TRIALS};

pub use commands::*;

/// Version of both the input document schemas and the structured report.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error(transparent)]
    Air(#[from] AirError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Structured,
}

/// Parameters shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub year_start: YearStart,
    /// Exceedance count whose first-reaching date is reported.
    pub threshold_count: u32,
    #[serde(skip)]
    pub breakpoints: Option<PathBuf>,
    #[serde(skip)]
    pub tolerances: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: DEFAULT_TRIALS,
            tolerance: DEFAULT_REL_TOL,
            year_start: YearStart::JANUARY_1,
            threshold_count: 100,
            breakpoints: None,
            tolerances: None,
            format: OutputFormat::Text,
        }
    }
}

impl RunConfig {
    /// Hash of the numeric settings. Table files are identified separately
    /// by content, so paths do not enter the hash.
    pub fn hash(&self) -> String {
        identity_hash(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Clean,
    Fatal,
    Partial,
    /// Input held no data rows.
    Empty,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Fatal => 1,
            ExitStatus::Partial => 2,
            ExitStatus::Empty => 3,
        }
    }
}

/// A problem confined to one input row (or one document/group); processing
/// continues past it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    /// 1-based line in the input file, when the error maps to one line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub context: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRef {
    pub role: String,
    pub name: String,
    pub identity: String,
}

/// Body of a report: command-specific rows plus a text rendering.
pub trait ReportBody: Serialize {
    fn rows(&self) -> usize;
    fn write_text(&self, out: &mut String);
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<B> {
    pub format_version: u32,
    pub command: String,
    pub config_hash: String,
    pub tables: Vec<TableRef>,
    pub notes: Vec<String>,
    pub body: B,
    pub errors: Vec<RowError>,
    pub status: ExitStatus,
}

impl<B: ReportBody> Report<B> {
    pub(crate) fn new(
        command: &str,
        config: &RunConfig,
        tables: Vec<TableRef>,
        notes: Vec<String>,
        body: B,
        errors: Vec<RowError>,
    ) -> Self {
        let status = if !errors.is_empty() {
            ExitStatus::Partial
        } else if body.rows() == 0 {
            ExitStatus::Empty
        } else {
            ExitStatus::Clean
        };
        Self {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            config_hash: config.hash(),
            tables,
            notes,
            body,
            errors,
            status,
        }
    }

    pub fn to_structured(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} (format {}, config {})",
            self.command, self.format_version, self.config_hash
        );
        for t in &self.tables {
            let _ = writeln!(out, "# {}: {} [{}]", t.role, t.name, t.identity);
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        self.body.write_text(&mut out);
        for e in &self.errors {
            match e.line {
                Some(l) => {
                    let _ = writeln!(out, "error: line {l}: {}: {}", e.context, e.message);
                }
                None => {
                    let _ = writeln!(out, "error: {}: {}", e.context, e.message);
                }
            }
        }
        let _ = writeln!(out, "status: {:?} (exit {})", self.status, self.status.code());
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Structured => self.to_structured(),
        }
    }
}

/// Up to four decimals without trailing zeros.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
