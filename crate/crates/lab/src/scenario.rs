//! Scenario configuration: a flat TOML document with `[mesh]`, `[preset]`,
//! `[flow]`, `[experiment]` and optional `[tolerances]` sections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    FlatFixedPoint,
    DilatonBump,
    #[serde(rename = "h-wave-2form")]
    HWave2Form,
    ConformalBumpyMetric,
    #[serde(rename = "homogeneous-T3")]
    HomogeneousT3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Transport,
    Geodesic,
    VerifyAll,
    CostMono,
    FMono,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Simulate => "simulate",
            Kind::Transport => "transport",
            Kind::Geodesic => "geodesic",
            Kind::VerifyAll => "verify-all",
            Kind::CostMono => "cost-mono",
            Kind::FMono => "f-mono",
        };
        f.write_str(s)
    }
}

impl FromStr for Kind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Kind::deserialize(toml::Value::String(s.into())).map_err(|_| LabError::Config(format!("unknown kind '{s}'")))
    }
}

/// `cos·cos(k·x) + sin·sin(k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl Mode {
    pub fn eval(&self, x: &[f64; 3], lengths: &[f64]) -> f64 {
        let phase: f64 = self
            .k
            .iter()
            .zip(lengths)
            .enumerate()
            .map(|(a, (k, l))| 2.0 * std::f64::consts::PI * *k as f64 * x[a] / l)
            .sum();
        self.cos * phase.cos() + self.sin * phase.sin()
    }

    pub fn amplitude(&self) -> f64 {
        self.cos.abs() + self.sin.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    pub n: usize,
    /// Axis periods; `2π` each when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
}

/// Preset name plus Fourier data added on top of the preset's base fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub name: PresetName,
    /// Conformal factor `u` of `g = e^{2u} δ`.
    #[serde(default)]
    pub u: Vec<Mode>,
    /// Dilaton `f`.
    #[serde(default)]
    pub f: Vec<Mode>,
    /// Coefficient of `dx₀∧dx₁` (of `dx₀` in one dimension).
    #[serde(default)]
    pub h: Vec<Mode>,
    /// Endpoint densities, relative to `1`, before normalization.
    #[serde(default)]
    pub rho1: Vec<Mode>,
    #[serde(default)]
    pub rho2: Vec<Mode>,
    /// Homogeneous data `g = a δ`, `H = c dx∧dy∧dz`, `f = f0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
}

impl PresetConfig {
    pub fn named(name: PresetName) -> Self {
        PresetConfig {
            name,
            u: vec![],
            f: vec![],
            h: vec![],
            rho1: vec![],
            rho2: vec![],
            a: None,
            c: None,
            f0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub horizon: f64,
    /// Step size; half the stability bound (rounded to divide the horizon)
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_convention")]
    pub convention: String,
}

fn default_convention() -> String {
    "full-sum".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    /// Path intervals for transport and geodesic solves.
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_intervals() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Identities that hold to rounding.
    pub exact: f64,
    /// Observed spatial order for operator and Bianchi residuals.
    pub min_order: f64,
    /// Observed order in `dt` for flow identities.
    pub min_dt_order: f64,
    pub geo: f64,
    pub boundary: f64,
    pub convexity: f64,
    pub shooting: f64,
    pub oracle: f64,
    pub bb_oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-12,
            min_order: 1.9,
            min_dt_order: 0.9,
            geo: grf_core::transport::TOL_GEO,
            boundary: 1e-8,
            convexity: grf_core::adapted::CONVEXITY_RTOL,
            shooting: 1e-4,
            oracle: 1e-6,
            bb_oracle: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mesh: MeshConfig,
    pub preset: PresetConfig,
    pub flow: FlowConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    /// Parses a config, applying `key=value` overrides (dotted keys) before
    /// validation.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let scenario: Scenario = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn convention(&self) -> Result<grf_core::Convention> {
        grf_core::Convention::from_tag(&self.flow.convention)
            .ok_or_else(|| LabError::Config(format!("flow.convention: unknown convention '{}'", self.flow.convention)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(LabError::Config(format!("{key}: {msg}")));
        let d = self.mesh.dim;
        if !(1..=3).contains(&d) {
            return bad("mesh.dim", format!("must be 1, 2 or 3, got {d}"));
        }
        if let Some(l) = &self.mesh.lengths {
            if l.len() != d || l.iter().any(|v| !(*v > 0.0)) {
                return bad("mesh.lengths", format!("need {d} positive periods"));
            }
        }
        self.mesh_spec()?;
        self.convention()?;
        if !(self.flow.horizon > 0.0) {
            return bad("flow.horizon", "must be positive".into());
        }
        if let Some(dt) = self.flow.dt {
            if !(dt > 0.0) {
                return bad("flow.dt", "must be positive".into());
            }
        }
        if self.experiment.intervals < 3 {
            return bad("experiment.intervals", "must be at least 3".into());
        }
        let t = &self.tolerances;
        for (k, v) in [
            ("exact", t.exact),
            ("min_order", t.min_order),
            ("min_dt_order", t.min_dt_order),
            ("geo", t.geo),
            ("boundary", t.boundary),
            ("convexity", t.convexity),
            ("shooting", t.shooting),
            ("oracle", t.oracle),
            ("bb_oracle", t.bb_oracle),
        ] {
            if !(v > 0.0) {
                return bad(&format!("tolerances.{k}"), "must be positive".into());
            }
        }
        let p = &self.preset;
        for (key, modes) in [("u", &p.u), ("f", &p.f), ("h", &p.h), ("rho1", &p.rho1), ("rho2", &p.rho2)] {
            for m in modes {
                if m.k.len() != d {
                    return bad(&format!("preset.{key}"), format!("wave vector {:?} needs {d} entries", m.k));
                }
                if !m.cos.is_finite() || !m.sin.is_finite() {
                    return bad(&format!("preset.{key}"), "non-finite amplitude".into());
                }
            }
        }
        if d == 3 && p.h.iter().any(|m| m.k[2] != 0) {
            return bad("preset.h", "in three dimensions the dx∧dy coefficient may not depend on z".into());
        }
        for (key, modes) in [("rho1", &p.rho1), ("rho2", &p.rho2)] {
            if modes.iter().map(Mode::amplitude).sum::<f64>() >= 0.95 {
                return bad(&format!("preset.{key}"), "total amplitude must stay below 0.95".into());
            }
        }
        match p.name {
            PresetName::HomogeneousT3 => {
                if d != 3 {
                    return bad("preset.name", "homogeneous-T3 needs mesh.dim = 3".into());
                }
                if !(p.u.is_empty() && p.f.is_empty() && p.h.is_empty()) {
                    return bad("preset", "homogeneous-T3 takes a, c, f0 only".into());
                }
                if !(p.a.unwrap_or(1.0) > 0.0) {
                    return bad("preset.a", "must be positive".into());
                }
            }
            PresetName::HWave2Form if d < 2 => return bad("preset.name", "h-wave-2form needs mesh.dim >= 2".into()),
            _ => {
                if p.a.is_some() || p.c.is_some() || p.f0.is_some() {
                    return bad("preset", "a, c, f0 are only used by homogeneous-T3".into());
                }
            }
        }
        Ok(())
    }

    pub fn mesh_spec(&self) -> Result<grf_core::MeshSpec> {
        let m = match &self.mesh.lengths {
            Some(l) => grf_core::MeshSpec::new(self.mesh.dim, self.mesh.n, l),
            None => grf_core::MeshSpec::torus(self.mesh.dim, self.mesh.n),
        };
        m.map_err(|e| LabError::Config(format!("mesh: {e}")))
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| LabError::Config(format!("override '{spec}' is not key=value")))?;
    let key = key.trim();
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("override '{key}': '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
