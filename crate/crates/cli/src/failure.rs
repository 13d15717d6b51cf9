//! Error classes that decide the exit status.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

/// Bad configuration or a missing input file.
#[derive(Debug)]
pub struct Validation(pub String);

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

/// An upstream stage has not produced its artifact yet.
#[derive(Debug)]
pub struct MissingArtifact {
    pub artifact: PathBuf,
    pub producer: &'static str,
}

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "missing upstream artifact {}; run `botwatch {}` first",
            self.artifact.display(),
            self.producer
        )
    }
}

impl std::error::Error for MissingArtifact {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Machine-readable failure written to stderr as one JSON line.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub causes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_artifact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_first: Option<&'static str>,
}

impl ErrorReport {
    pub fn usage(message: String) -> Self {
        Self {
            status: "error",
            kind: "usage",
            exit_code: EXIT_USAGE,
            message,
            causes: Vec::new(),
            missing_artifact: None,
            run_first: None,
        }
    }

    pub fn classify(err: &anyhow::Error) -> Self {
        let mut report = Self {
            status: "error",
            kind: "runtime",
            exit_code: EXIT_RUNTIME,
            message: err.to_string(),
            causes: err.chain().skip(1).map(|c| c.to_string()).collect(),
            missing_artifact: None,
            run_first: None,
        };
        for cause in err.chain() {
            if let Some(m) = cause.downcast_ref::<MissingArtifact>() {
                report.kind = "missing_artifact";
                report.exit_code = EXIT_VALIDATION;
                report.missing_artifact = Some(m.artifact.display().to_string());
                report.run_first = Some(m.producer);
                break;
            }
            if cause.downcast_ref::<Validation>().is_some() {
                report.kind = "validation";
                report.exit_code = EXIT_VALIDATION;
                break;
            }
        }
        report
    }
}
