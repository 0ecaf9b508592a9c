//! Per-query reports: a CSV of rows plus a plain-text summary that can be
//! recomputed from the rows alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Mode;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "qid,mode,estimate,oracle,rel_err,zero_flag,samples,micros";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub qid: usize,
    pub mode: Mode,
    pub estimate: f64,
    pub oracle: f64,
    pub rel_err: f64,
    pub zero_flag: bool,
    pub samples: u64,
    pub micros: u64,
}

/// `|estimate − oracle| / oracle`; for a zero oracle, 0 if the estimate is
/// also zero and infinity otherwise.
pub fn relative_error(estimate: f64, oracle: f64) -> f64 {
    if oracle > 0.0 {
        (estimate - oracle).abs() / oracle
    } else if estimate == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// The query contract a report is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contract {
    /// Relative accuracy promised when `μ ≥ τ`.
    pub accuracy: f64,
    pub tau: f64,
}

impl Contract {
    /// A row violates the contract if `μ ≥ τ` and the relative error exceeds
    /// the accuracy, or if `μ < τ` and the estimate is not zero.
    pub fn violated(&self, row: &ReportRow) -> bool {
        if row.oracle >= self.tau {
            row.rel_err > self.accuracy
        } else {
            row.estimate != 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Largest relative error among rows with `μ ≥ τ`.
    pub max_rel_err: f64,
    pub zero_flags: usize,
    pub total_samples: u64,
    pub total_micros: u64,
}

impl Summary {
    pub fn from_rows(rows: &[ReportRow], contract: Contract) -> Self {
        let failures = rows.iter().filter(|r| contract.violated(r)).count();
        Self {
            rows: rows.len(),
            failures,
            failure_rate: if rows.is_empty() {
                0.0
            } else {
                failures as f64 / rows.len() as f64
            },
            max_rel_err: rows
                .iter()
                .filter(|r| r.oracle >= contract.tau)
                .map(|r| r.rel_err)
                .fold(0.0, f64::max),
            zero_flags: rows.iter().filter(|r| r.zero_flag).count(),
            total_samples: rows.iter().map(|r| r.samples).sum(),
            total_micros: rows.iter().map(|r| r.micros).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub contract: Contract,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(contract: Contract) -> Self {
        Self {
            contract,
            rows: Vec::new(),
        }
    }

    pub fn summary(&self) -> Summary {
        Summary::from_rows(&self.rows, self.contract)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            // `{:?}` prints the shortest string that parses back exactly.
            writeln!(
                out,
                "{},{},{:?},{:?},{:?},{},{},{}",
                r.qid, r.mode, r.estimate, r.oracle, r.rel_err, r.zero_flag as u8, r.samples, r.micros
            )
            .unwrap();
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let s = self.summary();
        format!(
            "rows = {}\nfailures = {}\nfailure_rate = {:?}\nmax_rel_err = {:?}\nzero_flags = {}\n\
             total_samples = {}\ntotal_micros = {}\naccuracy = {:?}\ntau = {:?}\n",
            s.rows,
            s.failures,
            s.failure_rate,
            s.max_rel_err,
            s.zero_flags,
            s.total_samples,
            s.total_micros,
            self.contract.accuracy,
            self.contract.tau,
        )
    }

    /// Writes the CSV to `path` and the summary next to it (see [`summary_path`]).
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        fs::write(summary_path(path), self.summary_text())?;
        Ok(())
    }

    pub fn parse_csv(text: &str, contract: Contract) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == REPORT_HEADER => {}
            _ => return Err(Error::Format("missing report header".into())),
        }
        let mut report = Report::new(contract);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            report.rows.push(parse_row(line).map_err(|msg| Error::Format(format!("line {}: {msg}", i + 1)))?);
        }
        Ok(report)
    }
}

/// `report.csv` → `report.summary.txt`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.txt")
}

fn parse_row(line: &str) -> std::result::Result<ReportRow, String> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    let [qid, mode, est, oracle, rel, zero, samples, micros] = f[..] else {
        return Err(format!("expected 8 fields, found {}", f.len()));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let int = |s: &str| s.parse::<u64>().map_err(|e| format!("`{s}`: {e}"));
    let mode = match mode {
        "single" => Mode::Single,
        "multi" => Mode::Multi,
        "adam" => Mode::Adam,
        other => return Err(format!("unknown mode `{other}`")),
    };
    let zero_flag = match zero {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad zero_flag `{other}`")),
    };
    Ok(ReportRow {
        qid: int(qid)? as usize,
        mode,
        estimate: num(est)?,
        oracle: num(oracle)?,
        rel_err: num(rel)?,
        zero_flag,
        samples: int(samples)?,
        micros: int(micros)?,
    })
}

/// Parses a summary written by [`Report::summary_text`].
pub fn parse_summary(text: &str) -> Result<(Summary, Contract)> {
    let mut map = std::collections::HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad summary line `{line}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    fn get<T: std::str::FromStr>(map: &std::collections::HashMap<String, String>, k: &str) -> Result<T> {
        map.get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("summary field `{k}` missing or invalid")))
    }
    Ok((
        Summary {
            rows: get(&map, "rows")?,
            failures: get(&map, "failures")?,
            failure_rate: get(&map, "failure_rate")?,
            max_rel_err: get(&map, "max_rel_err")?,
            zero_flags: get(&map, "zero_flags")?,
            total_samples: get(&map, "total_samples")?,
            total_micros: get(&map, "total_micros")?,
        },
        Contract {
            accuracy: get(&map, "accuracy")?,
            tau: get(&map, "tau")?,
        },
    ))
}
