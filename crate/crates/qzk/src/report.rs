//! Verification reports: one record per check with the claimed bound, the measured value and
//! the verdict, rendered as canonical JSON, Markdown or CSV.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::error::{QzkError, Result};
use crate::protocol::canonical_json;

/// How the measured value is compared with the claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − claimed| ≤ tolerance`.
    Equal,
    /// `measured ≤ claimed + tolerance`.
    AtMost,
    /// `measured ≥ claimed − tolerance`.
    AtLeast,
    /// A predicate; measured and claimed are 1 for true.
    Holds,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Equal => "=",
            Relation::AtMost => "≤",
            Relation::AtLeast => "≥",
            Relation::Holds => "holds",
        }
    }

    fn pass(self, measured: f64, claimed: f64, tolerance: f64) -> bool {
        match self {
            Relation::Equal => (measured - claimed).abs() <= tolerance,
            Relation::AtMost => measured <= claimed + tolerance,
            Relation::AtLeast => measured >= claimed - tolerance,
            Relation::Holds => measured == 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// `C<criterion>.<name>`; unique within a report.
    pub id: String,
    pub criterion: u8,
    /// Named bound or property the check traces to.
    pub reference: String,
    pub relation: Relation,
    pub claimed: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(criterion: u8, name: &str, reference: &str, relation: Relation, measured: f64, claimed: f64, tolerance: f64) -> Self {
        Self {
            id: format!("C{criterion}.{name}"),
            criterion,
            reference: reference.to_string(),
            relation,
            claimed,
            measured,
            tolerance,
            pass: measured.is_finite() && relation.pass(measured, claimed, tolerance),
            seconds: 0.0,
            detail: String::new(),
        }
    }

    pub fn holds(criterion: u8, name: &str, reference: &str, ok: bool) -> Self {
        Self::new(criterion, name, reference, Relation::Holds, f64::from(u8::from(ok)), 1.0, 0.0)
    }

    /// A failed check standing in for a computation that returned an error.
    pub fn error(criterion: u8, name: &str, err: &QzkError) -> Self {
        Self { detail: err.to_string(), ..Self::holds(criterion, name, "computation finished", false) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// `measured … vs claimed …` as printed in human-readable output.
    pub fn comparison(&self) -> String {
        match self.relation {
            Relation::Holds => (if self.pass { "holds" } else { "violated" }).to_string(),
            _ => format!("measured {:.9} vs claimed {}", self.measured, self.claimed),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {} ({}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.comparison(), self.reference)?;
        match self.relation {
            Relation::Holds => {}
            r if self.tolerance == 0.0 => write!(f, ", {} exactly", r.symbol())?,
            r => write!(f, ", {} within {:e}", r.symbol(), self.tolerance)?,
        }
        write!(f, ", {:.2}s)", self.seconds)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Collects checks for one criterion or command, charging each with the time since the
/// previous one.
pub struct Recorder {
    criterion: u8,
    prefix: String,
    last: Instant,
    pub checks: Vec<Check>,
}

impl Recorder {
    pub fn new(criterion: u8) -> Self {
        Self { criterion, prefix: format!("C{criterion}"), last: Instant::now(), checks: Vec::new() }
    }

    /// Checks outside the numbered criteria, with ids `<command>.<name>`.
    pub fn for_command(command: &str) -> Self {
        Self { prefix: command.to_string(), ..Self::new(0) }
    }

    fn named(&self, check: Check, name: &str) -> Check {
        Check { id: format!("{}.{name}", self.prefix), ..check }
    }

    pub fn push(&mut self, mut check: Check) {
        let now = Instant::now();
        check.seconds = (now - self.last).as_secs_f64();
        self.last = now;
        self.checks.push(check);
    }

    pub fn check(&mut self, name: &str, reference: &str, relation: Relation, measured: f64, claimed: f64, tolerance: f64) {
        self.push(self.named(Check::new(self.criterion, name, reference, relation, measured, claimed, tolerance), name));
    }

    pub fn holds(&mut self, name: &str, reference: &str, ok: bool) {
        self.push(self.named(Check::holds(self.criterion, name, reference, ok), name));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = QzkError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(QzkError::Parameter(format!("unknown report format `{other}` (json, md, csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub title: String,
    pub seed: u64,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl Report {
    /// Orders checks by criterion, keeping each criterion's own order.
    pub fn new(title: &str, seed: u64, mut checks: Vec<Check>, seconds: f64) -> Self {
        checks.sort_by_key(|c| c.criterion);
        let passed = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { title: title.to_string(), seed, passed, seconds, checks }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| QzkError::Schema(e.to_string()))?;
        Ok(canonical_json(&value))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# {}\n\nseed {}, {} checks, {}, {:.1}s\n\n", self.title, self.seed, self.checks.len(), if self.passed { "all passed" } else { "FAILURES" }, self.seconds);
        out.push_str("| id | reference | relation | claimed | measured | tolerance | result | seconds |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for c in &self.checks {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {:.9} | {:e} | {} | {:.2} |\n",
                c.id,
                c.reference,
                c.relation.symbol(),
                c.claimed,
                c.measured,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" },
                c.seconds
            ));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| QzkError::Io(e.to_string());
        w.write_record(["id", "criterion", "reference", "relation", "claimed", "measured", "tolerance", "pass", "seconds", "detail"]).map_err(io)?;
        for c in &self.checks {
            w.write_record([
                c.id.clone(),
                c.criterion.to_string(),
                c.reference.clone(),
                c.relation.symbol().to_string(),
                format!("{:.16e}", c.claimed),
                format!("{:.16e}", c.measured),
                format!("{:e}", c.tolerance),
                c.pass.to_string(),
                format!("{:.3}", c.seconds),
                c.detail.clone(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| QzkError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| QzkError::Io(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Markdown => Ok(self.to_markdown()),
            Format::Csv => self.to_csv(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations_and_comparison_line() {
        let c = Check::new(1, "half", "rewinding success probability", Relation::Equal, 0.5, 0.5, 1e-10);
        assert!(c.pass);
        assert_eq!(c.comparison(), "measured 0.500000000 vs claimed 0.5");
        assert!(!Check::new(2, "x", "r", Relation::AtMost, 0.7, 0.5, 1e-6).pass);
        assert!(Check::new(2, "x", "r", Relation::AtLeast, 0.7, 0.5, 0.0).pass);
        assert!(!Check::new(2, "x", "r", Relation::AtLeast, f64::NAN, 0.5, 0.0).pass);
        assert!(!Check::holds(3, "p", "r", false).pass);
    }

    #[test]
    fn report_orders_by_criterion_and_renders() {
        let checks = vec![Check::holds(2, "b", "r2", true), Check::holds(1, "a", "r1", true)];
        let r = Report::new("t", 0, checks, 1.0);
        assert!(r.passed);
        assert_eq!(r.checks[0].id, "C1.a");
        assert!(r.to_json().unwrap().contains("\"id\": \"C1.a\""));
        assert!(r.to_markdown().contains("| C2.b |"));
        assert_eq!(r.to_csv().unwrap().lines().count(), 3);
    }

    #[test]
    fn empty_report_does_not_pass() {
        assert!(!Report::new("t", 0, vec![], 0.0).passed);
    }
}
