//! Versioned JSON reports and plain CSV series.
//!
//! Reports carry no timestamps or timings, so identical inputs give
//! byte-identical files. Floats are written in Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;

pub const SCHEMA_VERSION: &str = "rotflow-report/1";
pub const TOOL_VERSION: &str = concat!("rotflow ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub command: &'a str,
    pub suite: Option<&'a str>,
    pub exit_code: i32,
    pub config: &'a RunConfig,
    pub error: Option<ErrorInfo>,
    pub result: Option<T>,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn ok(command: &'a str, suite: Option<&'a str>, config: &'a RunConfig, exit_code: i32, result: T) -> Self {
        Report { schema_version: SCHEMA_VERSION, tool_version: TOOL_VERSION, command, suite, exit_code, config, error: None, result: Some(result) }
    }

    pub fn failed(command: &'a str, suite: Option<&'a str>, config: &'a RunConfig, exit_code: i32, reason: &str, message: String) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command,
            suite,
            exit_code,
            config,
            error: Some(ErrorInfo { reason: reason.into(), message }),
            result: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v}").expect("writing to a String");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_lf() {
        let t = csv_table(&["a", "b"], vec![vec![1.0, 0.5], vec![2.0, 1e-20]]);
        assert_eq!(t, "a,b\n1,0.5\n2,0.00000000000000000001\n");
        assert!(!t.contains('\r'));
    }
}
