//! Grid-level operations on polyforms.

use crate::error::{GrfError, Result};
use crate::field::{MetricField, PolyformField, ScalarField, SymTensorField, VectorField};
use crate::forms::{self, multi_indices, n_components, Convention};
use crate::linalg::{Mat3, Vec3, ZERO3};
use crate::mesh::MeshSpec;
use crate::par;

use super::{dc, Geometry};

/// Centered exterior derivative, degree by degree.
pub fn exterior_derivative(h: &PolyformField) -> PolyformField {
    let mesh = *h.mesh();
    let d = mesh.dim();
    let mut out = PolyformField::zeros(mesh);
    for k in h.degrees() {
        if k >= d {
            continue;
        }
        let src = h.degree(k).expect("present degree");
        let data = par::map_collect(mesh.len(), |i| {
            let mut c = [0.0; 3];
            for (p, big) in multi_indices(d, k + 1).iter().enumerate() {
                let mut s = 0.0;
                for (m, &axis) in big.iter().enumerate() {
                    let rest: Vec<usize> = big.iter().copied().filter(|&x| x != axis).collect();
                    let (q, _) = forms::locate(d, &rest).expect("increasing");
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * dc(&mesh, |j| src[j][q], i, axis);
                }
                c[p] = s;
            }
            c
        });
        out.set_degree(k + 1, data).expect("degree in range");
    }
    out
}

/// `‖dH‖_∞`.
pub fn closedness_residual(h: &PolyformField) -> f64 {
    exterior_derivative(h).max_abs()
}

/// Metric codifferential `(d*α)^J = −(1/√g) Σ_i D_i(√g α^{iJ})`, the exact
/// adjoint of the centered `d` under the normalized pairing and `√g` volume.
pub fn codifferential(geo: &Geometry, h: &PolyformField) -> PolyformField {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let mut out = PolyformField::zeros(mesh);
    for k in h.degrees() {
        if k == 0 {
            continue;
        }
        let src = h.degree(k).expect("present degree");
        let dens: Vec<Vec3> = par::map_collect(mesh.len(), |i| {
            let up = forms::raise(geo.ginv(i), &src[i], d, k);
            [up[0] * geo.sqrtg(i), up[1] * geo.sqrtg(i), up[2] * geo.sqrtg(i)]
        });
        let data = par::map_collect(mesh.len(), |i| {
            let mut up = [0.0; 3];
            for (p, small) in multi_indices(d, k - 1).iter().enumerate() {
                let mut s = 0.0;
                for axis in 0..d {
                    if small.contains(&axis) {
                        continue;
                    }
                    let mut full = vec![axis];
                    full.extend_from_slice(small);
                    let (q, sign) = forms::locate(d, &full).expect("distinct");
                    s += sign * dc(&mesh, |j| dens[j][q], i, axis);
                }
                up[p] = -s / geo.sqrtg(i);
            }
            forms::lower(geo.g(i), &up, d, k - 1)
        });
        out.set_degree(k - 1, data).expect("degree in range");
    }
    out
}

/// `Δ_d = −(d d* + d* d)`.
pub fn hodge_laplacian(geo: &Geometry, h: &PolyformField) -> PolyformField {
    let a = exterior_derivative(&codifferential(geo, h));
    let b = codifferential(geo, &exterior_derivative(h));
    let sum = a.add_scaled(&b, 1.0).expect("same mesh");
    PolyformField::zeros(*h.mesh()).add_scaled(&sum, -1.0).expect("same mesh")
}

/// `i_X H` for a nodal contravariant vector field given per node.
pub fn interior_field(mesh: &MeshSpec, x: &[Vec3], h: &PolyformField) -> PolyformField {
    let d = mesh.dim();
    let mut out = PolyformField::zeros(*mesh);
    for k in h.degrees() {
        if k == 0 {
            continue;
        }
        let src = h.degree(k).expect("present degree");
        let data = par::map_collect(mesh.len(), |i| forms::interior(&x[i], &src[i], d, k));
        out.set_degree(k - 1, data).expect("degree in range");
    }
    out
}

/// `|H_k|^2` per node.
pub fn norm_sq_field(conv: Convention, geo: &Geometry, h: &PolyformField, k: usize) -> Vec<f64> {
    let d = geo.dim();
    match h.degree(k) {
        Some(src) => par::map_collect(src.len(), |i| forms::norm_sq(conv, geo.ginv(i), &src[i], d, k)),
        None => vec![0.0; geo.mesh().len()],
    }
}

/// Total `Σ_k |H_k|^2` over every present degree (including degree 0).
pub fn total_norm_sq(conv: Convention, geo: &Geometry, h: &PolyformField) -> Vec<f64> {
    let d = geo.dim();
    let degs = h.degrees();
    par::map_collect(geo.mesh().len(), |i| {
        degs.iter().map(|&k| forms::norm_sq(conv, geo.ginv(i), &h.get(k, i), d, k)).sum()
    })
}

/// `(Σ (1/k)|H_k|^2, Σ ((k−1)/k)|H_k|^2)` per node, over degrees `k >= 1`.
pub fn weighted_norms(conv: Convention, geo: &Geometry, h: &PolyformField) -> (Vec<f64>, Vec<f64>) {
    let d = geo.dim();
    let degs: Vec<usize> = h.degrees().into_iter().filter(|&k| k >= 1).collect();
    let pairs: Vec<(f64, f64)> = par::map_collect(geo.mesh().len(), |i| {
        let mut hat = 0.0;
        let mut tilde = 0.0;
        for &k in &degs {
            let n = forms::norm_sq(conv, geo.ginv(i), &h.get(k, i), d, k);
            hat += n / k as f64;
            tilde += n * (k as f64 - 1.0) / k as f64;
        }
        (hat, tilde)
    });
    pairs.into_iter().unzip()
}

/// `H^2 = Σ_k H_k^2`.
pub fn h_squared_field(conv: Convention, geo: &Geometry, h: &PolyformField) -> SymTensorField {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let degs: Vec<usize> = h.degrees().into_iter().filter(|&k| k >= 1).collect();
    let data: Vec<Mat3> = par::map_collect(mesh.len(), |i| {
        let mut m = ZERO3;
        for &k in &degs {
            let hk = forms::h_squared(conv, geo.ginv(i), &h.get(k, i), d, k);
            for a in 0..d {
                for b in 0..d {
                    m[a][b] += hk[a][b];
                }
            }
        }
        m
    });
    SymTensorField::from_nodes(mesh, data).expect("H² shape")
}

/// Covector `<α, β>(X) = <α, i_X β>` summed over degrees: `α_{k−1}` pairs with `β_k`.
pub fn pair_covector_field(conv: Convention, geo: &Geometry, alpha: &PolyformField, beta: &PolyformField) -> Vec<Vec3> {
    let d = geo.dim();
    let degs: Vec<usize> = beta.degrees().into_iter().filter(|&k| k >= 1).collect();
    par::map_collect(geo.mesh().len(), |i| {
        let mut v = [0.0; 3];
        for &k in &degs {
            let p = forms::pair_covector(conv, geo.ginv(i), &alpha.get(k - 1, i), &beta.get(k, i), d, k);
            for a in 0..d {
                v[a] += p[a];
            }
        }
        v
    })
}

/// Pointwise `Σ_k <α_k, β_k>` with the convention weights.
pub fn pair_scalar_field(conv: Convention, geo: &Geometry, alpha: &PolyformField, beta: &PolyformField) -> Vec<f64> {
    let d = geo.dim();
    let mut degs = alpha.degrees();
    degs.retain(|k| beta.degree(*k).is_some());
    par::map_collect(geo.mesh().len(), |i| {
        degs.iter()
            .map(|&k| conv.weight(k) * forms::inner_n(geo.ginv(i), &alpha.get(k, i), &beta.get(k, i), d, k))
            .sum()
    })
}

/// Divergence of a symmetric 2-tensor as a covector:
/// `(div T)_j = g^{ik}(D_k T_ij − Γ^l_ki T_lj − Γ^l_kj T_il)`.
pub fn div_sym(geo: &Geometry, t: &SymTensorField) -> Vec<Vec3> {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    par::map_collect(mesh.len(), |x| {
        let gi = geo.ginv(x);
        let gam = geo.gamma(x);
        let tx = t.at(x);
        let mut out = [0.0; 3];
        for (j, oj) in out.iter_mut().enumerate().take(d) {
            let mut s = 0.0;
            for i in 0..d {
                for k in 0..d {
                    if gi[i][k] == 0.0 {
                        continue;
                    }
                    let mut cov = dc(&mesh, |y| t.at(y)[i][j], x, k);
                    for l in 0..d {
                        cov -= gam[l][k][i] * tx[l][j] + gam[l][k][j] * tx[i][l];
                    }
                    s += gi[i][k] * cov;
                }
            }
            *oj = s;
        }
        out
    })
}

/// Everything `polyform_algebra` reports.
#[derive(Debug, Clone)]
pub struct PolyformAlgebra {
    pub interior: PolyformField,
    pub codifferential: PolyformField,
    /// `|H_k|^2` for `k = 0..=3` (zero fields for absent degrees).
    pub norms: Vec<ScalarField>,
    /// `Σ (1/k)|H_k|^2`.
    pub hat_norm: ScalarField,
    /// `Σ ((k−1)/k)|H_k|^2`.
    pub tilde_norm: ScalarField,
}

pub fn polyform_algebra(conv: Convention, g: &MetricField, h: &PolyformField, x: &VectorField) -> Result<PolyformAlgebra> {
    let mesh = *g.mesh();
    mesh.check_same(h.mesh())?;
    mesh.check_same(x.mesh())?;
    for k in h.degrees() {
        if k == 0 || n_components(mesh.dim(), k) == 0 {
            return Err(GrfError::DegreeOutOfRange { degree: k, dim: mesh.dim() });
        }
    }
    let geo = Geometry::new(g);
    let (hat, tilde) = weighted_norms(conv, &geo, h);
    Ok(PolyformAlgebra {
        interior: interior_field(&mesh, x.nodes(), h),
        codifferential: codifferential(&geo, h),
        norms: (0..4).map(|k| ScalarField::from_vec(mesh, norm_sq_field(conv, &geo, h, k)).expect("norm")).collect(),
        hat_norm: ScalarField::from_vec(mesh, hat)?,
        tilde_norm: ScalarField::from_vec(mesh, tilde)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_one_form(mesh: MeshSpec) -> PolyformField {
        // H₁ = d ψ with the centered derivative, hence exactly closed.
        let psi: Vec<f64> = (0..mesh.len())
            .map(|i| {
                let x = mesh.position(i);
                0.3 * x[0].sin() * x[1].cos() + 0.1 * (2.0 * x[1]).sin()
            })
            .collect();
        let geo = Geometry::new(&MetricField::flat(mesh));
        let dpsi = super::super::gradient_covector(&geo, &psi);
        PolyformField::zeros(mesh).with_degree(1, dpsi).unwrap()
    }

    #[test]
    fn d_of_exact_form_vanishes() {
        let mesh = MeshSpec::torus(2, 16).unwrap();
        assert!(closedness_residual(&closed_one_form(mesh)) < 1e-13);
    }

    #[test]
    fn codifferential_is_adjoint_of_d() {
        let mesh = MeshSpec::torus(2, 8).unwrap();
        let t = SymTensorField::from_index_fn(mesh, |i| {
            let x = mesh.position(i);
            [[1.0 + 0.2 * x[0].sin(), 0.1 * x[1].cos(), 0.0], [0.1 * x[1].cos(), 1.3, 0.0], [0.0; 3]]
        })
        .unwrap();
        let geo = Geometry::new(&MetricField::new(t).unwrap());
        let beta: Vec<Vec3> = (0..mesh.len()).map(|i| [(i as f64 * 0.3).sin(), (i as f64 * 0.7).cos(), 0.0]).collect();
        let alpha: Vec<Vec3> = (0..mesh.len()).map(|i| [(i as f64 * 1.1).cos(), 0.0, 0.0]).collect();
        let b = PolyformField::zeros(mesh).with_degree(1, beta).unwrap();
        let a = PolyformField::zeros(mesh).with_degree(2, alpha).unwrap();
        let db = exterior_derivative(&b);
        let dsa = codifferential(&geo, &a);
        let lhs: f64 = (0..mesh.len())
            .map(|i| forms::inner_n(geo.ginv(i), &db.get(2, i), &a.get(2, i), 2, 2) * geo.sqrtg(i))
            .sum();
        let rhs: f64 = (0..mesh.len())
            .map(|i| forms::inner_n(geo.ginv(i), &b.get(1, i), &dsa.get(1, i), 2, 1) * geo.sqrtg(i))
            .sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn one_form_has_zero_tilde_norm() {
        let mesh = MeshSpec::torus(2, 8).unwrap();
        let geo = Geometry::new(&MetricField::flat(mesh));
        let (_, tilde) = weighted_norms(Convention::FullSum, &geo, &closed_one_form(mesh));
        assert!(tilde.iter().all(|&v| v == 0.0));
    }
}
