use std::fmt::Write as _;
use std::process::ExitCode;

use clap::ValueEnum;
use serde_json::{json, Value};

/// Bumped whenever a report's fields change meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// A subcommand's output: a JSON body, a TSV body, and the properties it
/// checked along the way.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub json: Value,
    pub tsv: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            json: json!({}),
            tsv: String::new(),
            checks: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.json[key] = value.into();
    }

    pub fn line(&mut self, cells: &[&dyn std::fmt::Display]) {
        let row: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(self.tsv, "{}", row.join("\t"));
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    /// Checks `got == want`, recording both.
    pub fn expect_eq<T: PartialEq + std::fmt::Debug>(&mut self, name: impl Into<String>, got: T, want: T) {
        let ok = got == want;
        self.check(name, ok, format!("got {got:?}, expected {want:?}"));
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut body = self.json.clone();
                body["schema"] = json!(format!("conline.{}/{}", self.command, SCHEMA_VERSION));
                if !self.checks.is_empty() {
                    body["checks"] = self
                        .checks
                        .iter()
                        .map(|c| json!({"name": c.name, "ok": c.ok, "detail": c.detail}))
                        .collect();
                }
                let mut out = serde_json::to_string_pretty(&body).expect("report serializes");
                out.push('\n');
                out
            }
            Format::Tsv => {
                let mut out = self.tsv.clone();
                for c in &self.checks {
                    let status = if c.ok { "pass" } else { "FAIL" };
                    let _ = writeln!(out, "# check\t{}\t{}\t{}", c.name, status, c.detail);
                }
                out
            }
        }
    }
}

/// Prints the report and maps failed checks to exit code 2.
pub fn emit(result: Result<Report, Failure>, format: Format) -> ExitCode {
    match result {
        Ok(report) => {
            print!("{}", report.render(format));
            let failed = report.failed();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for c in failed {
                    eprintln!("property violated: {}: {}", c.name, c.detail);
                }
                ExitCode::from(2)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
