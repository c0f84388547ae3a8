//! Suite reports: per-check records, aggregate counts and renderings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Logged on every report: the joint GNS isometry is unitary here by a dimension count.
pub const UNITARITY_NOTE: &str =
    "U: H_φ⊗H_ψ → H_{φ⊗ψ} is unitary by dimension (dim H_{φ⊗ψ} = dim H_φ · dim H_ψ in finite dimensions); tensor.unitary records the measured defect";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub suite: String,
    pub anchor: String,
    pub instance: String,
    pub status: Status,
    /// `None` for skipped checks and non-finite deviations.
    pub max_deviation: Option<f64>,
    pub tolerance: f64,
    pub wall_time_ms: f64,
    /// Seed of the check's RNG; reruns with the same instance reproduce it.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Counts {
    pub fn of(records: &[CheckRecord]) -> Self {
        let by = |s| records.iter().filter(|r| r.status == s).count();
        Self { total: records.len(), passed: by(Status::Pass), failed: by(Status::Fail), skipped: by(Status::Skip) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current(threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub suites: Vec<String>,
    pub environment: Environment,
    pub wall_time_ms: f64,
    pub counts: Counts,
    pub records: Vec<CheckRecord>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn new(seed: u64, suites: Vec<String>, environment: Environment, records: Vec<CheckRecord>, wall_time_ms: f64) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            seed,
            suites,
            environment,
            wall_time_ms,
            counts: Counts::of(&records),
            records,
            notes: vec![UNITARITY_NOTE.to_string()],
        }
    }

    pub fn passed(&self) -> bool {
        self.counts.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: SuiteReport = serde_json::from_str(s).map_err(|e| Error::Instance(format!("report: {e}")))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Instance(format!("unsupported report schema_version {}", r.schema_version)));
        }
        if r.counts != Counts::of(&r.records) {
            return Err(Error::Instance("report counts disagree with its records".into()));
        }
        Ok(r)
    }

    /// Copy with timing fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_time_ms = 0.0;
        r.environment.threads = 0;
        r.records.iter_mut().for_each(|rec| rec.wall_time_ms = 0.0);
        r
    }

    pub fn to_markdown(&self) -> String {
        let c = self.counts;
        let mut out = String::new();
        out.push_str("# weightlab report\n\n");
        out.push_str(&format!(
            "seed {} · suites {} · weightlab {} ({}/{})\n\n",
            self.seed,
            if self.suites.is_empty() { "-".to_string() } else { self.suites.join(",") },
            self.environment.version,
            self.environment.os,
            self.environment.arch
        ));
        out.push_str(&format!("total: {} | passed: {} | failed: {} | skipped: {}\n\n", c.total, c.passed, c.failed, c.skipped));
        out.push_str("| status | check | instance | anchor | max deviation | tolerance | ms | seed |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in &self.records {
            let flag = match r.status {
                Status::Fail => "**FAIL**",
                Status::Pass => "pass",
                Status::Skip => "skip",
            };
            let dev = r.max_deviation.map_or("-".to_string(), |d| format!("{d:.3e}"));
            out.push_str(&format!(
                "| {flag} | {} | {} | {} | {dev} | {:.0e} | {:.1} | {} |\n",
                r.id,
                escape(&r.instance),
                escape(&r.anchor),
                r.tolerance,
                r.wall_time_ms,
                r.seed
            ));
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Reads the counts line and row statuses back from a markdown rendering.
pub fn parse_markdown_counts(md: &str) -> Result<(Counts, Counts)> {
    let bad = || Error::Instance("markdown report has no counts line".into());
    let line = md.lines().find(|l| l.starts_with("total:")).ok_or_else(bad)?;
    let nums: Vec<usize> = line
        .split('|')
        .map(|part| part.rsplit(':').next().and_then(|n| n.trim().parse().ok()).ok_or_else(bad))
        .collect::<Result<_>>()?;
    let [total, passed, failed, skipped] = nums[..] else { return Err(bad()) };
    let header = Counts { total, passed, failed, skipped };
    let mut rows = Counts::default();
    for l in md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| status")) {
        rows.total += 1;
        match l.split('|').nth(1).map(str::trim) {
            Some("pass") => rows.passed += 1,
            Some("**FAIL**") => rows.failed += 1,
            Some("skip") => rows.skipped += 1,
            _ => return Err(Error::Instance(format!("unrecognised row: {l}"))),
        }
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, status: Status, dev: Option<f64>) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            suite: "kms".into(),
            anchor: "Def sweight.def2".into(),
            instance: "i.json".into(),
            status,
            max_deviation: dev,
            tolerance: 1e-7,
            wall_time_ms: 1.5,
            seed: 42,
            note: None,
        }
    }

    fn report(records: Vec<CheckRecord>) -> SuiteReport {
        SuiteReport::new(7, vec!["kms".into()], Environment::current(1), records, 3.0)
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = report(vec![]);
        let md = r.to_markdown();
        assert!(md.contains("| status | check |"));
        assert_eq!(md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| status")).count(), 0);
        assert_eq!(parse_markdown_counts(&md).unwrap(), (Counts::default(), Counts::default()));
        assert!(r.passed());
    }

    #[test]
    fn failure_row_is_flagged() {
        let r = report(vec![record("kms.invariance", Status::Fail, Some(0.2)), record("kms.strip", Status::Pass, Some(1e-12))]);
        let md = r.to_markdown();
        let row = md.lines().find(|l| l.contains("kms.invariance")).unwrap();
        assert!(row.starts_with("| **FAIL** |") && row.contains("Def sweight.def2"));
        assert!(!r.passed());
    }

    #[test]
    fn json_and_markdown_counts_agree() {
        let r = report(vec![
            record("a", Status::Pass, Some(0.0)),
            record("b", Status::Skip, None),
            record("c", Status::Fail, None),
        ]);
        let back = SuiteReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let (header, rows) = parse_markdown_counts(&back.to_markdown()).unwrap();
        assert_eq!(header, r.counts);
        assert_eq!(rows, r.counts);
        assert_eq!(r.counts, Counts { total: 3, passed: 1, failed: 1, skipped: 1 });
    }

    #[test]
    fn tampered_counts_are_rejected() {
        let mut r = report(vec![record("a", Status::Pass, Some(0.0))]);
        r.counts.failed = 4;
        assert!(SuiteReport::from_json(&r.to_json()).is_err());
    }
}
