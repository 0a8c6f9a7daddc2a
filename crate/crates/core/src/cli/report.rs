//! Command reports: a text block for people and a key/value file for scripts.
//!
//! Structured file schema, one record per line, tab separated:
//!
//! ```text
//! key    value    tol
//! ```
//!
//! `tol` is the tolerance the value was computed or checked against, or `-`
//! for non-numeric fields. Keys are grouped by prefix: `config.*` echoes the
//! run configuration (`config.args` re-runs it verbatim), `check.<name>` is
//! `pass` or `fail` with `check.<name>.measured` holding the measured
//! residual, `timing.*` are wall-clock milliseconds and every other key is a
//! computed result. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            // `{:?}` keeps enough digits to round-trip exactly.
            Value::Num(x) => format!("{x:?}"),
            Value::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ChecksFailed,
    NonConvergence,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub title: String,
    pub config: Vec<(String, String)>,
    pub entries: Vec<Entry>,
    pub checks: Vec<Check>,
    pub timings: Vec<(String, Duration)>,
    pub notes: Vec<String>,
    pub non_convergence: bool,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            ..Report::default()
        }
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64, tol: f64) {
        self.entries.push(Entry {
            key: key.into(),
            value: Value::Num(value),
            tol: Some(tol),
        });
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push(Entry {
            key: key.into(),
            value: Value::Text(value.into()),
            tol: None,
        });
    }

    /// Records a check that passes when `measured <= tol`. NaN fails.
    pub fn check(&mut self, name: impl Into<String>, measured: f64, tol: f64) -> bool {
        self.check_with(name, measured <= tol, measured, tol)
    }

    pub fn check_with(&mut self, name: impl Into<String>, passed: bool, measured: f64, tol: f64) -> bool {
        self.checks.push(Check {
            name: name.into(),
            passed,
            measured,
            tol,
        });
        passed
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn timing(&mut self, phase: impl Into<String>, d: Duration) {
        self.timings.push((phase.into(), d));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn status(&self) -> Status {
        if self.non_convergence {
            Status::NonConvergence
        } else if self.all_passed() {
            Status::Ok
        } else {
            Status::ChecksFailed
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|e| e.key == key).map(|e| &e.value)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} ==", self.title);
        if !self.config.is_empty() {
            let _ = writeln!(s, "config:");
            for (k, v) in &self.config {
                let _ = writeln!(s, "  {k:<14} {v}");
            }
        }
        if !self.entries.is_empty() {
            let _ = writeln!(s, "results:");
            let width = self.entries.iter().map(|e| e.key.len()).max().unwrap_or(0);
            for e in &self.entries {
                let tol = e.tol.map(|t| format!("  (tol {t:e})")).unwrap_or_default();
                let _ = writeln!(s, "  {:<width$}  {}{tol}", e.key, e.value.render());
            }
        }
        if !self.checks.is_empty() {
            let passed = self.checks.iter().filter(|c| c.passed).count();
            let _ = writeln!(s, "checks: {passed}/{} passed", self.checks.len());
            for c in &self.checks {
                let _ = writeln!(
                    s,
                    "  [{}] {}  measured {:e}, tol {:e}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tol
                );
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if !self.timings.is_empty() {
            let parts: Vec<String> = self
                .timings
                .iter()
                .map(|(k, d)| format!("{k} {:.1} ms", d.as_secs_f64() * 1e3))
                .collect();
            let _ = writeln!(s, "timings: {}", parts.join(", "));
        }
        let _ = writeln!(
            s,
            "status: {}",
            match self.status() {
                Status::Ok => "ok",
                Status::ChecksFailed => "checks failed",
                Status::NonConvergence => "non-convergence",
            }
        );
        s
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::from("# oce-risk report\n# key\tvalue\ttol\n");
        let tol = |t: Option<f64>| t.map_or_else(|| "-".to_string(), |t| format!("{t:?}"));
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k}\t{v}\t-");
        }
        for e in &self.entries {
            let _ = writeln!(s, "{}\t{}\t{}", e.key, e.value.render(), tol(e.tol));
        }
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "fail" };
            let _ = writeln!(s, "check.{}\t{verdict}\t{:?}", c.name, c.tol);
            let _ = writeln!(s, "check.{}.measured\t{:?}\t{:?}", c.name, c.measured, c.tol);
        }
        for (k, d) in &self.timings {
            let _ = writeln!(s, "timing.{k}_ms\t{:?}\t-", d.as_secs_f64() * 1e3);
        }
        s
    }
}

/// Parses a structured report file into `(key, value, tol)` triples.
pub fn parse_kv(text: &str) -> Vec<(String, String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| {
            let mut it = l.splitn(3, '\t');
            Some((it.next()?.to_string(), it.next()?.to_string(), it.next()?.to_string()))
        })
        .collect()
}
