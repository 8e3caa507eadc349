use crate::error::Result;
use crate::field::{MetricField, ScalarField, SymTensorField, VectorField};
use crate::linalg::{trace_with, Vec3, ZERO3};
use crate::par;

use super::{d2, dc, Geometry, WeightedOperator};

/// Nodal covector `D_i u` (centered).
pub fn gradient_covector(geo: &Geometry, u: &[f64]) -> Vec<Vec3> {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    par::map_collect(mesh.len(), |i| {
        let mut v = [0.0; 3];
        for (a, va) in v.iter_mut().enumerate().take(d) {
            *va = dc(&mesh, |j| u[j], i, a);
        }
        v
    })
}

/// Nodal contravariant gradient `g^{ij} D_j u`.
pub fn gradient(geo: &Geometry, u: &[f64]) -> Vec<Vec3> {
    let d = geo.dim();
    let du = gradient_covector(geo, u);
    par::map_collect(du.len(), |i| crate::linalg::mat_vec(geo.ginv(i), &du[i], d))
}

/// `<∇u, ∇v>_g` per node.
pub fn grad_dot(geo: &Geometry, u: &[f64], v: &[f64]) -> Vec<f64> {
    let d = geo.dim();
    let du = gradient_covector(geo, u);
    let dv = gradient_covector(geo, v);
    par::map_collect(du.len(), |i| crate::linalg::bilinear(geo.ginv(i), &du[i], &dv[i], d))
}

/// `|∇u|^2_g` per node.
pub fn grad_norm_sq(geo: &Geometry, u: &[f64]) -> Vec<f64> {
    let d = geo.dim();
    let du = gradient_covector(geo, u);
    par::map_collect(du.len(), |i| crate::linalg::bilinear(geo.ginv(i), &du[i], &du[i], d))
}

/// Covariant Hessian `D_i D_j u − Γ^k_ij D_k u`.
pub fn hessian(geo: &Geometry, u: &[f64]) -> SymTensorField {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let data = par::map_collect(mesh.len(), |i| {
        let mut du = [0.0; 3];
        for (a, v) in du.iter_mut().enumerate().take(d) {
            *v = dc(&mesh, |j| u[j], i, a);
        }
        let gam = geo.gamma(i);
        let mut h = ZERO3;
        for a in 0..d {
            for b in a..d {
                let mut v = d2(&mesh, |j| u[j], i, a, b);
                for (k, duk) in du.iter().enumerate().take(d) {
                    v -= gam[k][a][b] * duk;
                }
                h[a][b] = v;
                h[b][a] = v;
            }
        }
        h
    });
    SymTensorField::from_nodes(mesh, data).expect("hessian shape")
}

/// `tr_g ∇²u`, the nodal Laplace–Beltrami operator.
pub fn laplacian_nodal(geo: &Geometry, u: &[f64]) -> Vec<f64> {
    let d = geo.dim();
    let h = hessian(geo, u);
    par::map_collect(u.len(), |i| trace_with(geo.ginv(i), h.at(i), d))
}

/// `tr_g ∇²u − <∇f, ∇u>`.
pub fn weighted_laplacian_nodal(geo: &Geometry, f: &[f64], u: &[f64]) -> Vec<f64> {
    let lap = laplacian_nodal(geo, u);
    let gd = grad_dot(geo, f, u);
    par::map_collect(u.len(), |i| lap[i] - gd[i])
}

/// Bundle returned by [`differential_ops`].
#[derive(Debug, Clone)]
pub struct DifferentialOps {
    /// Contravariant nodal gradient.
    pub grad: VectorField,
    /// Laplace–Beltrami operator in divergence form.
    pub laplacian: ScalarField,
    /// `Δ_f u = Δu − <∇f, ∇u>` in divergence form.
    pub weighted_laplacian: ScalarField,
    pub hessian: SymTensorField,
}

pub fn differential_ops(g: &MetricField, f: &ScalarField, u: &ScalarField) -> Result<DifferentialOps> {
    g.mesh().check_same(f.mesh())?;
    g.mesh().check_same(u.mesh())?;
    let mesh = *g.mesh();
    let geo = Geometry::new(g);
    let zero = ScalarField::zeros(mesh);
    let lap = WeightedOperator::new(&geo, &zero, None)?.apply_l(u.values());
    let wlap = WeightedOperator::new(&geo, f, None)?.apply_l(u.values());
    Ok(DifferentialOps {
        grad: VectorField::from_nodes(mesh, gradient(&geo, u.values()))?,
        laplacian: ScalarField::from_vec(mesh, lap)?,
        weighted_laplacian: ScalarField::from_vec(mesh, wlap)?,
        hessian: hessian(&geo, u.values()),
    })
}
