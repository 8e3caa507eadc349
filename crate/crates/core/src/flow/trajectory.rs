use crate::error::{GrfError, Result};
use crate::field::MetricField;
use crate::forms::Convention;

use super::GeomState;

/// Snapshots at uniform spacing `dt`; immutable once recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    conv: Convention,
    dt: f64,
    snaps: Vec<GeomState>,
}

impl FlowTrajectory {
    pub(crate) fn from_parts(conv: Convention, dt: f64, snaps: Vec<GeomState>) -> Self {
        FlowTrajectory { conv, dt, snaps }
    }

    /// Rebuilds a trajectory from stored snapshots, checking uniform spacing.
    pub fn from_snapshots(conv: Convention, dt: f64, snaps: Vec<GeomState>) -> Result<Self> {
        if snaps.is_empty() {
            return Err(GrfError::TooFewSnapshots { needed: 1, got: 0 });
        }
        for (j, s) in snaps.iter().enumerate() {
            s.mesh().check_same(snaps[0].mesh())?;
            let want = snaps[0].t + j as f64 * dt;
            if (s.t - want).abs() > 1e-9 * dt.max(1e-300) {
                return Err(GrfError::InvalidArgument(format!("snapshot {j} at t={} not on the grid", s.t)));
            }
        }
        Ok(FlowTrajectory { conv, dt, snaps })
    }

    /// `n_steps + 1` copies of a stationary state (a fixed point, or a frozen
    /// background for transport experiments).
    pub fn frozen(conv: Convention, s: &GeomState, horizon: f64, n_steps: usize) -> Self {
        let dt = if n_steps == 0 { 0.0 } else { horizon / n_steps as f64 };
        let snaps = (0..=n_steps)
            .map(|j| {
                let mut c = s.clone();
                c.t = s.t + j as f64 * dt;
                c
            })
            .collect();
        FlowTrajectory { conv, dt, snaps }
    }

    pub fn convention(&self) -> Convention {
        self.conv
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.snaps[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.snaps[self.snaps.len() - 1].t
    }

    pub fn snapshots(&self) -> &[GeomState] {
        &self.snaps
    }

    pub fn snapshot(&self, j: usize) -> &GeomState {
        &self.snaps[j]
    }

    pub fn times(&self) -> Vec<f64> {
        self.snaps.iter().map(|s| s.t).collect()
    }

    /// Linear interpolation per component; the metric is re-checked for SPD.
    pub fn interpolate(&self, t: f64) -> Result<GeomState> {
        let (t0, t1) = (self.t_start(), self.t_end());
        let slack = 1e-12 * (1.0 + t1.abs());
        if t < t0 - slack || t > t1 + slack {
            return Err(GrfError::InvalidArgument(format!("t = {t} outside trajectory [{t0}, {t1}]")));
        }
        if self.snaps.len() == 1 || self.dt == 0.0 {
            let mut s = self.snaps[0].clone();
            s.t = t;
            return Ok(s);
        }
        let x = ((t - t0) / self.dt).clamp(0.0, (self.snaps.len() - 1) as f64);
        let j = (x.floor() as usize).min(self.snaps.len() - 2);
        let theta = x - j as f64;
        let a = &self.snaps[j];
        let b = &self.snaps[j + 1];
        if theta == 0.0 {
            let mut s = a.clone();
            s.t = t;
            return Ok(s);
        }
        let dg = b.g.tensor().add_scaled(a.g.tensor(), -1.0)?;
        let g = MetricField::new(a.g.tensor().add_scaled(&dg, theta)?)?;
        let h = a.h.add_scaled(&b.h.add_scaled(&a.h, -1.0)?, theta)?;
        let f = a.f.add_scaled(&b.f.add_scaled(&a.f, -1.0)?, theta)?;
        Ok(GeomState { t, g, h, f })
    }
}
