//! Scenario CSV ingestion.
//!
//! Layout: a header row `probability,value` or
//! `probability,value_1,...,value_k`, then one row per atom. Any other
//! column name is accepted and can be selected by name.

use std::io::Read;
use std::path::Path;

use super::CliError;
use crate::prob_space::{ProbSpace, RandomVariable};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub space: ProbSpace,
    names: Vec<String>,
    columns: Vec<RandomVariable>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| CliError::parse(1, e.to_string()))?
            .clone();
        if header.len() < 2 {
            return Err(CliError::parse(1, "need a probability column and at least one value column"));
        }
        if &header[0] != "probability" {
            return Err(CliError::parse(1, format!("first column must be `probability`, found `{}`", &header[0])));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(CliError::parse(1, format!("column {} has an empty name", i + 2)));
            }
            if names[..i].contains(name) {
                return Err(CliError::parse(1, format!("duplicate column `{name}`")));
            }
        }
        let mut probs = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut last_line = 1;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(last_line + 1, |p| p.line());
                CliError::parse(line, e.to_string())
            })?;
            let line = record.position().map_or(last_line + 1, |p| p.line());
            last_line = line;
            if record.len() != header.len() {
                return Err(CliError::parse(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let field = |j: usize| -> Result<f64, CliError> {
                let raw = &record[j];
                let v: f64 = raw
                    .parse()
                    .map_err(|_| CliError::parse(line, format!("`{raw}` is not a number")))?;
                if !v.is_finite() {
                    return Err(CliError::parse(line, format!("`{raw}` is not finite")));
                }
                Ok(v)
            };
            let p = field(0)?;
            if p <= 0.0 {
                return Err(CliError::parse(line, format!("probability {p} is not strictly positive")));
            }
            probs.push(p);
            for (j, col) in cols.iter_mut().enumerate() {
                col.push(field(j + 1)?);
            }
        }
        if probs.is_empty() {
            return Err(CliError::parse(last_line, "no atoms"));
        }
        let space = ProbSpace::new(probs).map_err(|e| CliError::parse(last_line, e.to_string()))?;
        let columns = cols
            .into_iter()
            .map(|c| RandomVariable::new(c).expect("finite values checked above"))
            .collect();
        Ok(Scenario { space, names, columns })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The named column, or the first value column when `name` is `None`.
    pub fn column(&self, name: Option<&str>) -> Result<&RandomVariable, CliError> {
        match name {
            None => Ok(&self.columns[0]),
            Some(n) => self
                .names
                .iter()
                .position(|c| c == n)
                .map(|i| &self.columns[i])
                .ok_or_else(|| CliError::Usage(format!("no column named `{n}` (have {})", self.names.join(", ")))),
        }
    }
}
