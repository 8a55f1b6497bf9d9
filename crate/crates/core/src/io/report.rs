//! Evaluation reports as TOML documents.

use std::fs;
use std::path::Path;

use crate::classifier::pipeline::EvaluationReport;
use crate::error::{Error, Result};

pub fn format_report(report: &EvaluationReport) -> Result<String> {
    toml::to_string(report).map_err(|e| Error::data(format!("cannot serialise report: {e}")))
}

pub fn parse_report(text: &str) -> Result<EvaluationReport> {
    toml::from_str(text).map_err(|e| Error::data(format!("malformed report: {e}")))
}

pub fn write_report(report: &EvaluationReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_report(report)?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvaluationReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text).map_err(|e| e.context(path.display().to_string()))
}
