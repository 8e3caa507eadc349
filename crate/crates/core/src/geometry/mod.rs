//! Metric-dependent operators on periodic grids.

mod bianchi;
mod curvature;
mod ops;
mod polyform;
mod ricci;
mod weighted;

pub use bianchi::{bianchi_geo, bianchi_residuals, BianchiResiduals, TOL_CLOSED};
pub use curvature::{curvature, Curvature};
pub use ops::{
    differential_ops, grad_dot, grad_norm_sq, gradient, gradient_covector, hessian, laplacian_nodal,
    weighted_laplacian_nodal, DifferentialOps,
};
pub use polyform::{
    closedness_residual, codifferential, div_sym, exterior_derivative, h_squared_field, hodge_laplacian,
    interior_field, norm_sq_field, pair_covector_field, pair_scalar_field, polyform_algebra, total_norm_sq,
    weighted_norms, PolyformAlgebra,
};
pub use ricci::{ricci_hf, ricci_hf_geo, scalar_hf, scalar_hf_geo, MixedRicci};
pub use weighted::{div_f, face_gradient, face_pairing, node_pairing, WeightedOperator};

use crate::error::Result;
use crate::field::{MetricField, ScalarField};
use crate::linalg::{det, inverse, Mat3, ZERO3};
use crate::mesh::MeshSpec;
use crate::par;

/// Centered first difference of `v` at node `i` along `a`.
#[inline]
pub(crate) fn dc<F: Fn(usize) -> f64>(mesh: &MeshSpec, v: F, i: usize, a: usize) -> f64 {
    (v(mesh.shift(i, a, 1)) - v(mesh.shift(i, a, -1))) / (2.0 * mesh.spacing(a))
}

/// Second difference: compact three-point on the diagonal, centered cross
/// stencil for mixed pairs.
#[inline]
pub(crate) fn d2<F: Fn(usize) -> f64>(mesh: &MeshSpec, v: F, i: usize, a: usize, b: usize) -> f64 {
    if a == b {
        let h = mesh.spacing(a);
        (v(mesh.shift(i, a, 1)) - 2.0 * v(i) + v(mesh.shift(i, a, -1))) / (h * h)
    } else {
        let ip = mesh.shift(i, a, 1);
        let im = mesh.shift(i, a, -1);
        let pp = mesh.shift(ip, b, 1);
        let pm = mesh.shift(ip, b, -1);
        let mp = mesh.shift(im, b, 1);
        let mm = mesh.shift(im, b, -1);
        (v(pp) - v(pm) - v(mp) + v(mm)) / (4.0 * mesh.spacing(a) * mesh.spacing(b))
    }
}

/// Per-node metric data shared by the operators: `g`, `g^{-1}`, `sqrt(det g)`,
/// centered derivatives `dg[c][a][b] = D_c g_ab` and Christoffel symbols
/// `gamma[k][i][j] = Γ^k_ij`.
#[derive(Debug, Clone)]
pub struct Geometry {
    mesh: MeshSpec,
    g: Vec<Mat3>,
    ginv: Vec<Mat3>,
    sqrtg: Vec<f64>,
    dg: Vec<[Mat3; 3]>,
    gamma: Vec<[Mat3; 3]>,
}

impl Geometry {
    pub fn new(metric: &MetricField) -> Self {
        let mesh = *metric.mesh();
        let d = mesh.dim();
        let g: Vec<Mat3> = metric.tensor().nodes().to_vec();
        let ginv: Vec<Mat3> = par::map_collect(mesh.len(), |i| inverse(&g[i], d));
        let sqrtg: Vec<f64> = par::map_collect(mesh.len(), |i| det(&g[i], d).sqrt());
        let dg: Vec<[Mat3; 3]> = par::map_collect(mesh.len(), |i| {
            let mut out = [ZERO3; 3];
            for (c, oc) in out.iter_mut().enumerate().take(d) {
                for a in 0..d {
                    for b in a..d {
                        let v = dc(&mesh, |j| g[j][a][b], i, c);
                        oc[a][b] = v;
                        oc[b][a] = v;
                    }
                }
            }
            out
        });
        let gamma = par::map_collect(mesh.len(), |i| christoffel(&ginv[i], &dg[i], d));
        Geometry { mesh, g, ginv, sqrtg, dg, gamma }
    }

    /// Validates SPD-ness via [`MetricField`] first.
    pub fn from_tensor(t: crate::field::SymTensorField) -> Result<Self> {
        Ok(Self::new(&MetricField::new(t)?))
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    #[inline]
    pub fn g(&self, i: usize) -> &Mat3 {
        &self.g[i]
    }

    #[inline]
    pub fn ginv(&self, i: usize) -> &Mat3 {
        &self.ginv[i]
    }

    #[inline]
    pub fn sqrtg(&self, i: usize) -> f64 {
        self.sqrtg[i]
    }

    pub fn sqrtg_all(&self) -> &[f64] {
        &self.sqrtg
    }

    #[inline]
    pub fn dg(&self, i: usize) -> &[Mat3; 3] {
        &self.dg[i]
    }

    #[inline]
    pub fn gamma(&self, i: usize) -> &[Mat3; 3] {
        &self.gamma[i]
    }

    pub fn metric_nodes(&self) -> &[Mat3] {
        &self.g
    }

    /// Nodal weight `e^{-f} sqrt(det g)`.
    pub fn weight(&self, f: &ScalarField) -> Vec<f64> {
        par::map_collect(self.mesh.len(), |i| (-f.get(i)).exp() * self.sqrtg[i])
    }

    /// `∫ u e^{-f} dV` with the deterministic summation tree.
    pub fn integrate_weighted(&self, f: &ScalarField, u: &[f64]) -> f64 {
        par::sum_by(self.mesh.len(), |i| u[i] * (-f.get(i)).exp() * self.sqrtg[i]) * self.mesh.cell_volume()
    }

    /// `∫ u dV`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        par::sum_by(self.mesh.len(), |i| u[i] * self.sqrtg[i]) * self.mesh.cell_volume()
    }
}

fn christoffel(ginv: &Mat3, dg: &[Mat3; 3], d: usize) -> [Mat3; 3] {
    // lower[l][i][j] = ½ (D_i g_jl + D_j g_il − D_l g_ij)
    let mut lower = [ZERO3; 3];
    for (l, low) in lower.iter_mut().enumerate().take(d) {
        for i in 0..d {
            for j in 0..d {
                low[i][j] = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
            }
        }
    }
    let mut out = [ZERO3; 3];
    for (k, ok) in out.iter_mut().enumerate().take(d) {
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for (l, low) in lower.iter().enumerate().take(d) {
                    s += ginv[k][l] * low[i][j];
                }
                ok[i][j] = s;
            }
        }
    }
    out
}
