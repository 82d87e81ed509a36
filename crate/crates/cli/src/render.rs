use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(CliError::Config(format!(
                "unknown format {other:?} (expected json, csv or text)"
            ))),
        }
    }
}

/// A report that can be written in every output format. CSV and text
/// output open with a `#` line carrying the metadata, including the seed.
pub trait Render: Serialize {
    fn csv(&self) -> String;
    fn text(&self) -> String;
}

pub fn render<R: Render>(report: &R, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => report.csv(),
        Format::Text => report.text(),
    }
}

pub fn write_out(text: &str, path: &Option<PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `key,value` rows under a metadata line.
pub fn csv_pairs(meta: &str, pairs: &[(&str, String)]) -> String {
    let mut out = format!("# {meta}\nkey,value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn text_pairs(meta: &str, pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = format!("# {meta}\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}
