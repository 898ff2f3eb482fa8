use std::fmt;
use std::io::Write;
use std::time::Duration;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `< 1e-8` or `in [-1.7, -1.3]`.
    pub threshold: String,
    pub detail: String,
    /// Wall time of the group that produced this row. Never written to CSV.
    pub runtime: Duration,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, pass: bool, value: f64, threshold: String, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass && !value.is_nan() { Status::Pass } else { Status::Fail },
            value,
            threshold,
            detail: detail.into(),
            runtime: Duration::ZERO,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value < limit, value, format!("< {limit}"), detail)
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= limit, value, format!("<= {limit}"), detail)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64, detail: impl Into<String>) -> Self {
        Self::new(name, lo <= value && value <= hi, value, format!("in [{lo}, {hi}]"), detail)
    }

    pub fn flag(name: impl Into<String>, pass: bool, value: f64, threshold: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::new(name, pass, value, threshold.into(), detail)
    }

    pub fn skip(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            value: f64::NAN,
            threshold: String::new(),
            detail: detail.into(),
            runtime: Duration::ZERO,
        }
    }
}

pub const SUITE_HEADER: [&str; 5] = ["check", "status", "value", "threshold", "detail"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    /// Overall status: fails iff any check fails.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SUITE_HEADER)?;
        for c in &self.checks {
            let value = if c.value.is_nan() { String::new() } else { c.value.to_string() };
            w.write_record([c.name.as_str(), c.status.name(), &value, &c.threshold, &c.detail])?;
        }
        w.flush().map_err(|e| crate::error::HarnessError::io("suite report", e))?;
        Ok(())
    }

    /// One line per check, runtime included; meant for a terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<4} {:<44} value={:<14.6e} {:<18} ({:.2}s) {}\n",
                c.status.name().to_uppercase(),
                c.name,
                c.value,
                c.threshold,
                c.runtime.as_secs_f64(),
                c.detail
            ));
        }
        let fails = self.failures().count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), fails));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_status_follows_failures() {
        let mut r = SuiteReport::default();
        r.checks.push(CheckOutcome::below("a", 1e-9, 1e-8, ""));
        r.checks.push(CheckOutcome::skip("b", "n/a"));
        assert!(r.passed());
        r.checks.push(CheckOutcome::within("c", -2.0, -1.7, -1.3, ""));
        assert!(!r.passed());
        assert_eq!(r.exit_code(), 1);
        assert_eq!(CheckOutcome::at_most("d", f64::NAN, 1.0, "").status, Status::Fail);
    }

    #[test]
    fn csv_has_no_runtime() {
        let mut r = SuiteReport::default();
        let mut c = CheckOutcome::at_most("x", 0.5, 1.0, "ok");
        c.runtime = Duration::from_secs(3);
        r.checks.push(c);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "check,status,value,threshold,detail\nx,pass,0.5,<= 1,ok\n");
    }
}
