//! Checks, series and the summary report, plus artifact output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scenario::Scenario;

pub const REPORT_FILE: &str = "report.json";
pub const CONTAINER_FILE: &str = "trajectory.grfsnap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotConverged,
}

/// JSON has no NaN; a missing number is written as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// One executed check. `order` and `min_order` are set for refinement
/// checks, whose verdict compares the observed order instead of `residual`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "nan_as_null")]
    pub residual: f64,
    #[serde(with = "nan_as_null")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_order: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff `residual ≤ tolerance`.
    pub fn bound(name: &str, residual: f64, tolerance: f64) -> Self {
        let verdict = if residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
        Check {
            name: name.into(),
            residual,
            tolerance,
            order: None,
            min_order: None,
            verdict,
            series: None,
            note: None,
        }
    }

    /// Passes iff the fine residual is at rounding level or the observed
    /// order reaches `min_order`. A non-finite order is not recorded.
    pub fn refinement(name: &str, fine: f64, order: f64, exact: f64, min_order: f64) -> Self {
        let mut c = Check::bound(name, fine, exact);
        c.order = order.is_finite().then_some(order);
        c.min_order = Some(min_order);
        if fine <= exact || order >= min_order {
            c.verdict = Verdict::Pass;
        }
        c
    }

    pub fn with_verdict(name: &str, residual: f64, tolerance: f64, pass: bool) -> Self {
        let mut c = Check::bound(name, residual, tolerance);
        c.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        c
    }

    pub fn not_converged(name: &str, residual: f64, tolerance: f64, note: String) -> Self {
        let mut c = Check::bound(name, residual, tolerance);
        c.verdict = Verdict::NotConverged;
        c.note = Some(note);
        c
    }

    pub fn series(mut self, name: &str) -> Self {
        self.series = Some(name.into());
        self
    }

    pub fn note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

/// One CSV time series: `x` is `t`, `u` or `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x_label: &'static str,
    pub rows: Vec<[f64; 3]>,
}

impl Series {
    pub fn new(name: &str, x_label: &'static str) -> Self {
        Series { name: name.into(), x_label, rows: vec![] }
    }

    pub fn push(&mut self, x: f64, value: f64, residual: f64) {
        self.rows.push([x, value, residual]);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record([self.x_label, "value", "residual"])?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}")))?;
        }
        w.into_inner().map_err(|e| LabError::Report(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub convention: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    /// 0 when every check passes, 2 when any solver did not converge,
    /// otherwise 1.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else if self.checks.iter().any(|c| c.verdict == Verdict::NotConverged) {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(REPORT_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Plain-text table of the checks.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "kind {} | preset {:?} | convention {}\n",
            self.scenario.experiment.kind, self.scenario.preset.name, self.convention
        );
        for c in &self.checks {
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::NotConverged => "NOT-CONVERGED",
            };
            let order = match (c.order, c.min_order) {
                (Some(o), Some(m)) => format!("  order {o:.3} (min {m})"),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{:<20} {:<13} residual {:.3e}  tolerance {:.1e}{}\n",
                c.name, verdict, c.residual, c.tolerance, order
            ));
        }
        out
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub series: Vec<Series>,
    pub container: Option<grf_core::container::Container>,
}

impl Outcome {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(REPORT_FILE), self.report.to_json()?)?;
        for s in &self.series {
            fs::write(dir.join(s.file_name()), s.to_csv()?)?;
        }
        if let Some(c) = &self.container {
            c.save(&dir.join(CONTAINER_FILE))?;
        }
        Ok(())
    }
}
