//! Preconditioned conjugate gradients for the weighted elliptic problems
//! `A_ρ φ = b` behind every continuity equation.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::field::ScalarField;
use crate::flow::Slice;
use crate::geometry::WeightedOperator;
use crate::mesh::MeshSpec;
use crate::par;

/// Relative residual target of every elliptic solve.
pub const TOL_ELL: f64 = 1e-10;

const MAX_ITER: usize = 5000;

/// Constant-coefficient periodic operator `−ΔV Σ_a κ_a D⁺_a D⁻_a`, applied
/// and inverted in Fourier space.
pub struct Spectral {
    mesh: MeshSpec,
    eig: Vec<f64>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("mesh", &self.mesh).finish()
    }
}

impl Spectral {
    pub fn new(mesh: MeshSpec, kappa: &[f64]) -> Self {
        let d = mesh.dim();
        let n = mesh.n();
        let dv = mesh.cell_volume();
        let eig = (0..mesh.len())
            .map(|i| {
                let c = mesh.coords(i);
                let mut s = 0.0;
                for a in 0..d {
                    let h = mesh.spacing(a);
                    let sn = (std::f64::consts::PI * c[a] as f64 / n as f64).sin();
                    s += kappa[a] * 4.0 * sn * sn / (h * h);
                }
                dv * s
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = (0..d).map(|_| planner.plan_fft_forward(n)).collect();
        let inv = (0..d).map(|_| planner.plan_fft_inverse(n)).collect();
        Spectral { mesh, eig, fwd, inv }
    }

    /// Reference operator of `op`: its mean face coefficients.
    pub fn of(op: &WeightedOperator) -> Self {
        Self::new(*op.mesh(), &op.mean_face_coeff())
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let mesh = self.mesh;
        let n = mesh.n();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for (a, plan) in plans.iter().enumerate() {
            let stride = mesh.stride(a);
            for start in 0..mesh.len() {
                if mesh.coords(start)[a] != 0 {
                    continue;
                }
                for (k, v) in line.iter_mut().enumerate() {
                    *v = buf[start + k * stride];
                }
                plan.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    buf[start + k * stride] = *v;
                }
            }
        }
    }

    fn multiply(&self, u: &[f64], by: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        for (b, &e) in buf.iter_mut().zip(&self.eig) {
            *b *= by(e);
        }
        self.transform(&mut buf, &self.inv);
        let scale = 1.0 / self.mesh.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.multiply(u, |e| e)
    }

    /// Pseudo-inverse: the constant mode is mapped to zero.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.multiply(b, |e| if e > 0.0 { 1.0 / e } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖b − Aφ‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    /// `|Σ b| / Σ |b|` removed by the compatibility projection.
    pub compatibility_deviation: f64,
}

fn project_zero_sum(v: &mut [f64]) -> f64 {
    let s = par::pairwise_sum(v);
    let mean = s / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
    s
}

/// Solves `A φ = b` for the symmetric positive semidefinite `A` of `op`.
///
/// `b` is projected onto zero sum (the range of `A`), the constant kernel is
/// deflated from every residual, and the returned `φ` has zero mean with
/// respect to the weight `w` of `op`.
pub fn solve_weighted(op: &WeightedOperator, b: &[f64], pre: &Spectral, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    let mut r = b.to_vec();
    let abs_total: f64 = par::sum_by(n, |i| b[i].abs());
    let s = project_zero_sum(&mut r);
    let deviation = if abs_total > 0.0 { s.abs() / abs_total } else { 0.0 };
    let bnorm = par::dot(&r, &r).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0, compatibility_deviation: deviation }));
    }
    let mut z = pre.solve(&r);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=MAX_ITER {
        let ap = op.apply_a(&p);
        let pap = par::dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(GrfError::NotConverged { what: "elliptic solve (breakdown)".into(), iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project_zero_sum(&mut r);
        rel = par::dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            let phi = gauge(op.weight(), x);
            return Ok((phi, SolveStats { iterations: it, relative_residual: rel, compatibility_deviation: deviation }));
        }
        z = pre.solve(&r);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(GrfError::NotConverged { what: "elliptic solve".into(), iterations: MAX_ITER, residual: rel })
}

/// Shifts `φ` to zero mean against `w`.
pub(crate) fn gauge(w: &[f64], mut phi: Vec<f64>) -> Vec<f64> {
    let c = par::dot(w, &phi) / par::pairwise_sum(w);
    for v in phi.iter_mut() {
        *v -= c;
    }
    phi
}

/// Static continuity equation `σ = −div_f(ρ∇φ)`: returns the mean-zero
/// potential and the solver statistics.
pub fn continuity_solve(rho: &ScalarField, sigma: &ScalarField, slice: &Slice) -> Result<(ScalarField, SolveStats)> {
    let mesh = *slice.mesh();
    mesh.check_same(rho.mesh())?;
    mesh.check_same(sigma.mesh())?;
    super::density::check_floor(rho.values(), slice.t)?;
    let op = slice.op.with_coeff(rho.values())?;
    let dv = mesh.cell_volume();
    let b: Vec<f64> = par::map_collect(mesh.len(), |i| dv * slice.w[i] * sigma.get(i));
    let pre = Spectral::of(&op);
    let (phi, stats) = solve_weighted(&op, &b, &pre, TOL_ELL)?;
    Ok((ScalarField::from_vec(mesh, phi)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::GeomState;
    use crate::forms::Convention;

    #[test]
    fn spectral_inverts_its_operator() {
        let mesh = MeshSpec::new(2, 8, &[1.0, 2.0]).unwrap();
        let sp = Spectral::new(mesh, &[1.3, 0.7]);
        let u: Vec<f64> = (0..mesh.len()).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let mut u0 = u.clone();
        project_zero_sum(&mut u0);
        let back = sp.solve(&sp.apply(&u0));
        for (a, b) in back.iter().zip(&u0) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_source_gives_zero_potential() {
        let mesh = MeshSpec::torus(1, 16).unwrap();
        let slice = GeomState::flat(mesh).slice(Convention::FullSum).unwrap();
        let rho = ScalarField::constant(mesh, 1.0 / (2.0 * std::f64::consts::PI));
        let (phi, st) = continuity_solve(&rho, &ScalarField::zeros(mesh), &slice).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        assert_eq!(st.iterations, 0);
    }
}
