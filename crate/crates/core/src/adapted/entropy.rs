//! Entropy along adapted geodesics: first-derivative identities and the
//! convexity of `∫(log ρ − φ) dμ`.
//!
//! Every quantity is sampled at the interval midpoints, where the path
//! carries its potentials. Midpoint masses are `m̄ = ½(m_k + m_{k+1})`. The
//! potentials returned by the elliptic solves are defined up to a constant
//! per interval; the constants are fixed so that the discrete
//! Hamilton–Jacobi equation holds without a spatially constant defect.

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::flow::Slice;
use crate::geometry::{
    div_sym, grad_dot, gradient, gradient_covector, h_squared_field, hessian, ricci_hf_geo, weighted_norms, Curvature,
};
use crate::linalg::{bilinear, sym_inner};
use crate::par;
use crate::transport::masses_to_rho;

use super::path::{energy_e0, AdaptedPath, GeodesicOutcome};

/// Lowest accepted second difference of the entropy.
pub const CONVEXITY_FLOOR: f64 = 1e-6;
/// Accepted relative mismatch between the entropy second difference and
/// `∫|Rc^{H,f−φ}|² dμ`.
pub const CONVEXITY_RTOL: f64 = 0.05;

/// Integrals at one midpoint; `dμ` is the midpoint measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyRow {
    pub t: f64,
    /// `∫ log ρ dμ`.
    pub log_rho: f64,
    /// `∫ φ dμ` with the reconstructed potential.
    pub phi: f64,
    /// `∫ |∇φ|² dμ`.
    pub grad_sq: f64,
    /// `∫ R^{H,f} dμ`.
    pub curvature: f64,
    /// `∫ ⟨∇ρ, ∇φ⟩ e^{-f}dV`.
    pub transport: f64,
    /// `∫ |Rc^{H,f−φ}|² dμ`.
    pub ricci: f64,
}

impl EntropyRow {
    /// `∫ (log ρ − φ) dμ`.
    pub fn entropy(&self) -> f64 {
        self.log_rho - self.phi
    }
}

/// Centered derivative of a series against its assembled right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Terms of `d/dt ∫⟨∇ρ,∇φ⟩e^{-f}dV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportRow {
    pub t: f64,
    pub lhs: f64,
    /// `∫ |∇²φ|² dμ`.
    pub hessian: f64,
    /// `∫ Rc^f(∇φ, ∇φ) dμ`.
    pub ricci_f: f64,
    /// `−2 ∫ ⟨Rc^{H,f}, ∇²φ⟩ dμ`.
    pub cross: f64,
    /// `½ ∫ ⟨∇ρ, ∇R^{H,f}⟩ e^{-f}dV`.
    pub curvature_gradient: f64,
    /// `∫ [⟨½ div H² − ¼ ∇Σ(1/k)|H_k|², ∇φ⟩ − ½ H²(∇f, ∇φ)] dμ`.
    pub polyform: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityRow {
    pub t: f64,
    /// Centered second difference of `∫(log ρ − φ) dμ`.
    pub second_difference: f64,
    /// `∫ |Rc^{H,f−φ}|² dμ`.
    pub ricci: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub energy: f64,
    pub geodesic_residual: f64,
    pub converged: bool,
    /// One row per interval midpoint.
    pub series: Vec<EntropyRow>,
    pub convexity: Vec<ConvexityRow>,
    /// `d/dt ∫φ dμ = ½ ∫(|∇φ|² + R^{H,f}) dμ`.
    pub phi_derivative: Vec<IdentityRow>,
    /// `d/dt ∫log ρ dμ = ∫⟨∇ρ,∇φ⟩e^{-f}dV + ∫R^{H,f} dμ`.
    pub log_derivative: Vec<IdentityRow>,
    pub transport_derivative: Vec<TransportRow>,
    /// `d/dt ∫R^{H,f} dμ = ∫(∂_tR^{H,f} + ⟨∇R^{H,f},∇φ⟩) dμ`.
    pub curvature_derivative: Vec<IdentityRow>,
    pub min_second_difference: f64,
    /// `max |second difference − ∫|Rc^{H,f−φ}|²dμ|`, relative to the
    /// largest `∫|Rc^{H,f−φ}|²dμ` of the series.
    pub max_convexity_defect: f64,
    pub convex: bool,
}

impl CostReport {
    pub fn max_residual(rows: &[IdentityRow]) -> f64 {
        rows.iter().fold(0.0_f64, |m, r| m.max(r.residual.abs()))
    }
}

/// Constant per interval that removes the mean Hamilton–Jacobi defect:
/// `φ̃_{k+½} = φ_{k+½} − Δ Σ_{i ≤ k} λ_i` with `λ_i` the `μ_i`-mean of the
/// defect at node `i`.
fn gauge_offsets(path: &AdaptedPath) -> Vec<f64> {
    let frame = path.frame();
    let phi = path.phi_mids();
    let masses = path.masses();
    let e = frame.grad_sq(phi);
    let mut out = vec![0.0; phi.len()];
    for j in 1..phi.len() {
        let r = frame.hj_defect(phi, &e, j);
        let lam = par::dot(&masses[j], &r) / par::pairwise_sum(&masses[j]);
        out[j] = out[j - 1] - frame.step * lam;
    }
    out
}

/// Pointwise terms of one midpoint: the entropy row and the right-hand
/// side pieces of the transport and curvature identities.
struct MidTerms {
    row: EntropyRow,
    transport: [f64; 5],
    curvature_rate: f64,
}

fn mid_terms(path: &AdaptedPath, k: usize, offset: f64) -> Result<MidTerms> {
    let frame = path.frame();
    let slice = path.mid_slice(k);
    let geo = &slice.geo;
    let conv = slice.conv;
    let mesh = *slice.mesh();
    let d = mesh.dim();
    let n = mesh.len();
    let dv = mesh.cell_volume();
    let masses = path.masses();
    let mbar: Vec<f64> = par::map_collect(n, |i| 0.5 * (masses[k][i] + masses[k + 1][i]));
    let rho = masses_to_rho(&mbar, &slice.w, dv);
    if let Some(node) = rho.iter().position(|v| !(*v > 0.0)) {
        return Err(GrfError::BelowFloor { node, value: rho[node], t: slice.t });
    }
    let phi = path.phi_mid(k);
    let r = &slice.r_hf;
    let e = frame.grad_sq_at(k, phi);

    let curv = Curvature::of(geo);
    let f = slice.f.values();
    let rc_phi = ricci_weight_norm(slice, &curv, phi);
    let a_rho = slice.op.apply_a(&rho);

    let row = EntropyRow {
        t: slice.t,
        log_rho: par::sum_by(n, |i| mbar[i] * rho[i].ln()),
        phi: par::sum_by(n, |i| mbar[i] * (phi[i] + offset)),
        grad_sq: par::sum_by(n, |i| mbar[i] * e[i]),
        curvature: par::dot(&mbar, r),
        transport: par::dot(phi, &a_rho),
        ricci: par::dot(&mbar, &rc_phi),
    };

    let rc_f = ricci_hf_geo(conv, geo, &curv, &slice.h, f);
    let hess_f = hessian(geo, f);
    let hess = hessian(geo, phi);
    let grad = gradient(geo, phi);
    let grad_f = gradient(geo, f);
    let h2 = h_squared_field(conv, geo, &slice.h);
    let div_h2 = div_sym(geo, &h2);
    let (hat, _) = weighted_norms(conv, geo, &slice.h);
    let d_hat = gradient_covector(geo, &hat);
    let rho_r = grad_dot(geo, &rho, r);
    let grad_r_phi = grad_dot(geo, r, phi);

    let hessian_t = par::sum_by(n, |i| mbar[i] * sym_inner(geo.ginv(i), hess.at(i), hess.at(i), d));
    let ricci_f_t = par::sum_by(n, |i| {
        let mut t = *curv.rc.at(i);
        for a in 0..d {
            for b in 0..d {
                t[a][b] += hess_f.at(i)[a][b];
            }
        }
        mbar[i] * bilinear(&t, &grad[i], &grad[i], d)
    });
    let cross_t = -2.0 * par::sum_by(n, |i| mbar[i] * sym_inner(geo.ginv(i), rc_f.sym.at(i), hess.at(i), d));
    let curvature_gradient_t = 0.5 * par::sum_by(n, |i| rho_r[i] * slice.w[i]) * dv;
    let polyform_t = par::sum_by(n, |i| {
        let mut s = 0.0;
        for a in 0..d {
            s += (0.5 * div_h2[i][a] - 0.25 * d_hat[i][a]) * grad[i][a];
        }
        s -= 0.5 * bilinear(h2.at(i), &grad_f[i], &grad[i], d);
        mbar[i] * s
    });

    let (r0, r1) = (&path.node_slice(k).r_hf, &path.node_slice(k + 1).r_hf);
    let step = path.step();
    let curvature_rate = par::sum_by(n, |i| mbar[i] * ((r1[i] - r0[i]) / step + grad_r_phi[i]));

    Ok(MidTerms {
        row,
        transport: [hessian_t, ricci_f_t, cross_t, curvature_gradient_t, polyform_t],
        curvature_rate,
    })
}

/// `|Rc^{H,f−φ}|²` per node of a slice.
fn ricci_weight_norm(slice: &Slice, curv: &Curvature, phi: &[f64]) -> Vec<f64> {
    let f = slice.f.values();
    let f_minus_phi: Vec<f64> = par::map_collect(f.len(), |i| f[i] - phi[i]);
    ricci_hf_geo(slice.conv, &slice.geo, curv, &slice.h, &f_minus_phi).norm_sq(slice.conv, &slice.geo)
}

/// `∫∫ |Rc^{H,f−φ}|² dμ dt` over a path, midpoint rule in time.
pub(crate) fn ricci_action(path: &AdaptedPath) -> f64 {
    let ks: Vec<usize> = (0..path.intervals()).collect();
    let parts: Vec<f64> = par::map_jobs(&ks, |&k| {
        let slice = path.mid_slice(k);
        let masses = path.masses();
        let mbar: Vec<f64> = par::map_collect(masses[k].len(), |i| 0.5 * (masses[k][i] + masses[k + 1][i]));
        let norm = ricci_weight_norm(slice, &Curvature::of(&slice.geo), path.phi_mid(k));
        par::dot(&mbar, &norm)
    });
    path.step() * par::pairwise_sum(&parts)
}

fn centered(v: &[f64], k: usize, dt: f64) -> f64 {
    (v[k + 1] - v[k - 1]) / (2.0 * dt)
}

/// Entropy series, first-derivative identities and convexity check along a
/// path. Second differences are plain centered differences of the midpoint
/// series, with no smoothing.
pub fn entropy_report(outcome: &GeodesicOutcome) -> Result<CostReport> {
    let path = &outcome.path;
    let m = path.intervals();
    if m < 3 {
        return Err(GrfError::InvalidArgument(format!("entropy report needs at least 3 intervals, got {m}")));
    }
    let offsets = gauge_offsets(path);
    let ks: Vec<usize> = (0..m).collect();
    let terms: Vec<MidTerms> =
        par::map_jobs(&ks, |&k| mid_terms(path, k, offsets[k])).into_iter().collect::<Result<_>>()?;
    let dt = path.step();
    let series: Vec<EntropyRow> = terms.iter().map(|t| t.row).collect();
    let col = |f: &dyn Fn(&EntropyRow) -> f64| series.iter().map(f).collect::<Vec<f64>>();
    let entropy = col(&|r| r.entropy());
    let phi = col(&|r| r.phi);
    let log_rho = col(&|r| r.log_rho);
    let transport = col(&|r| r.transport);
    let curvature = col(&|r| r.curvature);

    let mut convexity = Vec::new();
    let mut phi_derivative = Vec::new();
    let mut log_derivative = Vec::new();
    let mut transport_derivative = Vec::new();
    let mut curvature_derivative = Vec::new();
    for k in 1..m - 1 {
        let row = &series[k];
        let sd = (entropy[k + 1] - 2.0 * entropy[k] + entropy[k - 1]) / (dt * dt);
        convexity.push(ConvexityRow { t: row.t, second_difference: sd, ricci: row.ricci, defect: sd - row.ricci });

        let identity = |lhs: f64, rhs: f64| IdentityRow { t: row.t, lhs, rhs, residual: lhs - rhs };
        phi_derivative.push(identity(centered(&phi, k, dt), 0.5 * (row.grad_sq + row.curvature)));
        log_derivative.push(identity(centered(&log_rho, k, dt), row.transport + row.curvature));
        curvature_derivative.push(identity(centered(&curvature, k, dt), terms[k].curvature_rate));

        let [hessian_t, ricci_f, cross, curvature_gradient, polyform] = terms[k].transport;
        let lhs = centered(&transport, k, dt);
        let rhs = hessian_t + ricci_f + cross + curvature_gradient + polyform;
        transport_derivative.push(TransportRow {
            t: row.t,
            lhs,
            hessian: hessian_t,
            ricci_f,
            cross,
            curvature_gradient,
            polyform,
            rhs,
            residual: lhs - rhs,
        });
    }
    let min_second_difference = convexity.iter().fold(f64::INFINITY, |a, r| a.min(r.second_difference));
    let scale = convexity.iter().fold(0.0_f64, |a, r| a.max(r.ricci.abs()));
    let worst = convexity.iter().fold(0.0_f64, |a, r| a.max(r.defect.abs()));
    let max_convexity_defect = if scale > 0.0 { worst / scale } else { worst };
    let convex = min_second_difference >= -CONVEXITY_FLOOR && max_convexity_defect <= CONVEXITY_RTOL;
    Ok(CostReport {
        energy: energy_e0(path)?,
        geodesic_residual: outcome.residual,
        converged: outcome.converged,
        series,
        convexity,
        phi_derivative,
        log_derivative,
        transport_derivative,
        curvature_derivative,
        min_second_difference,
        max_convexity_defect,
        convex,
    })
}
