//! Spatially homogeneous reduction on T³: `g = a δ`, `H = c dx∧dy∧dz`,
//! `f` constant. The flow reduces to
//!
//! `a' = ½ ν(2) c² / a²`, `c' = 0`, `f' = ν(3) c² / (6 a³)`,
//!
//! with `ν` the per-degree weight of the norm convention.

use serde::{Deserialize, Serialize};

use crate::error::{GrfError, Result};
use crate::field::{MetricField, PolyformField, ScalarField, SymTensorField};
use crate::forms::Convention;
use crate::mesh::MeshSpec;

use super::GeomState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousState {
    pub a: f64,
    pub c: f64,
    pub f: f64,
}

impl HomogeneousState {
    pub fn new(a: f64, c: f64, f: f64) -> Result<Self> {
        if !(a > 0.0) || !c.is_finite() || !f.is_finite() {
            return Err(GrfError::InvalidArgument(format!("homogeneous state needs a > 0 (a = {a})")));
        }
        Ok(HomogeneousState { a, c, f })
    }

    /// `(a', c', f')`.
    pub fn rhs(&self, conv: Convention) -> [f64; 3] {
        let (a, c) = (self.a, self.c);
        [0.5 * conv.weight(2) * c * c / (a * a), 0.0, conv.weight(3) * c * c / (6.0 * a * a * a)]
    }

    /// `R^{H,f} = −ν(3) c² / (12 a³)`.
    pub fn scalar_hf(&self, conv: Convention) -> f64 {
        -conv.weight(3) * self.c * self.c / (12.0 * self.a.powi(3))
    }

    /// `|Rc^{H,f}|² = |¼H²|²_g = 3 ν(2)² c⁴ / (16 a⁶)`.
    pub fn ricci_norm_sq(&self, conv: Convention) -> f64 {
        3.0 * conv.weight(2).powi(2) * self.c.powi(4) / (16.0 * self.a.powi(6))
    }

    /// `∂_t R^{H,f} − 2|Rc^{H,f}|²` along the reduced flow.
    pub fn scalar_evolution_defect(&self, conv: Convention) -> f64 {
        let da = self.rhs(conv)[0];
        let dr = conv.weight(3) * self.c * self.c / (4.0 * self.a.powi(4)) * da;
        dr - 2.0 * self.ricci_norm_sq(conv)
    }

    /// `∂_t log(e^{-f} a^{3/2}) + R^{H,f}`.
    pub fn volume_defect(&self, conv: Convention) -> f64 {
        let r = self.rhs(conv);
        1.5 * r[0] / self.a - r[2] + self.scalar_hf(conv)
    }

    /// Exact solution: `a³ = a₀³ + (3/2)ν(2)c²t`, `f = f₀ + ν(3)/(9ν(2)) log(a³/a₀³)`.
    pub fn closed_form(&self, conv: Convention, t: f64) -> HomogeneousState {
        let a3 = self.a.powi(3) + 1.5 * conv.weight(2) * self.c * self.c * t;
        let f = self.f + conv.weight(3) / (9.0 * conv.weight(2)) * (a3 / self.a.powi(3)).ln();
        HomogeneousState { a: a3.cbrt(), c: self.c, f }
    }

    /// Spatially constant grid state on the 3-torus.
    pub fn to_grid(&self, mesh: MeshSpec) -> Result<GeomState> {
        if mesh.dim() != 3 {
            return Err(GrfError::InvalidArgument("homogeneous state lives on a 3-torus".into()));
        }
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = self.a;
        }
        let g = MetricField::new(SymTensorField::from_nodes(mesh, vec![m; mesh.len()])?)?;
        let h = PolyformField::zeros(mesh).with_degree(3, vec![[self.c, 0.0, 0.0]; mesh.len()])?;
        GeomState::new(0.0, g, h, ScalarField::constant(mesh, self.f))
    }

    /// Reads `(a, c, f)` from node 0 of a grid state.
    pub fn from_grid(s: &GeomState) -> HomogeneousState {
        HomogeneousState { a: s.g.at(0)[0][0], c: s.h.get(3, 0)[0], f: s.f.get(0) }
    }
}

/// Adaptive Dormand–Prince 5(4) integration of the reduced system, returning
/// the state at each requested (increasing) time.
pub fn integrate_reduced(
    conv: Convention,
    s0: HomogeneousState,
    times: &[f64],
    tol: f64,
) -> Result<Vec<HomogeneousState>> {
    let rhs = |y: &[f64; 3]| HomogeneousState { a: y[0], c: y[1], f: y[2] }.rhs(conv);
    let mut y = [s0.a, s0.c, s0.f];
    let mut t = 0.0;
    let mut h: f64 = 1e-3;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let (y5, err) = dopri_step(&rhs, &y, step);
            let scale: f64 = (0..3).map(|i| err[i].abs() / (tol * (1.0 + y[i].abs().max(y5[i].abs())))).fold(0.0, f64::max);
            if scale <= 1.0 {
                t += step;
                y = y5;
            }
            let factor = if scale == 0.0 { 5.0 } else { (0.9 * scale.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
            if h < 1e-14 {
                return Err(GrfError::NotConverged { what: "reduced ODE".into(), iterations: 0, residual: scale });
            }
        }
        out.push(HomogeneousState { a: y[0], c: y[1], f: y[2] });
    }
    Ok(out)
}

fn dopri_step<F: Fn(&[f64; 3]) -> [f64; 3]>(f: &F, y: &[f64; 3], h: f64) -> ([f64; 3], [f64; 3]) {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let mut k = [[0.0; 3]; 7];
    k[0] = f(y);
    for s in 0..6 {
        let mut ys = *y;
        for (i, v) in ys.iter_mut().enumerate() {
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                *v += h * C[s][j] * kj[i];
            }
        }
        k[s + 1] = f(&ys);
    }
    // Row 6 of C is the fifth-order solution (FSAL).
    let mut y5 = *y;
    let mut y4 = *y;
    for i in 0..3 {
        for j in 0..6 {
            y5[i] += h * C[5][j] * k[j][i];
        }
        for j in 0..7 {
            y4[i] += h * B4[j] * k[j][i];
        }
    }
    let err = [y5[0] - y4[0], y5[1] - y4[1], y5[2] - y4[2]];
    (y5, err)
}
