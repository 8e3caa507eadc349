use crate::error::Result;
use crate::field::{MetricField, PolyformField};
use crate::forms::{self, Convention};
use crate::linalg::Vec3;
use crate::par;

use super::polyform::{
    closedness_residual, codifferential, div_sym, h_squared_field, hodge_laplacian, pair_covector_field,
    total_norm_sq, weighted_norms,
};
use super::{dc, gradient_covector, laplacian_nodal, Geometry};

/// Tolerance on `‖dH‖_∞` for a polyform to count as closed.
pub const TOL_CLOSED: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BianchiResiduals {
    /// `div H² + <d*H, H> − ½ d(Σ(1/k)|H_k|²)`.
    pub r1: Vec<Vec3>,
    /// `div div H² − ½ Δ Σ(1/k)|H_k|² − Σ(1/k)<Δ_d H_k, H_k> − |d*H|²`.
    pub r2: Vec<f64>,
    /// `‖dH‖_∞`; the identities only hold for closed `H`.
    pub closedness: f64,
}

impl BianchiResiduals {
    pub fn closed(&self) -> bool {
        self.closedness <= TOL_CLOSED
    }

    pub fn r1_max(&self) -> f64 {
        self.r1.iter().flat_map(|v| v.iter()).fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn r2_max(&self) -> f64 {
        par::max_abs(&self.r2)
    }
}

/// Divergence of a covector field, `(1/√g) D_i(√g g^{ij} v_j)`.
fn div_covector(geo: &Geometry, v: &[Vec3]) -> Vec<f64> {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let dens: Vec<Vec3> = par::map_collect(mesh.len(), |i| {
        let up = crate::linalg::mat_vec(geo.ginv(i), &v[i], d);
        [up[0] * geo.sqrtg(i), up[1] * geo.sqrtg(i), up[2] * geo.sqrtg(i)]
    });
    par::map_collect(mesh.len(), |i| {
        let mut s = 0.0;
        for a in 0..d {
            s += dc(&mesh, |j| dens[j][a], i, a);
        }
        s / geo.sqrtg(i)
    })
}

pub fn bianchi_geo(conv: Convention, geo: &Geometry, h: &PolyformField) -> BianchiResiduals {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let h2 = h_squared_field(conv, geo, h);
    let div_h2 = div_sym(geo, &h2);
    let dstar = codifferential(geo, h);
    let pair = pair_covector_field(conv, geo, &dstar, h);
    let (hat, _) = weighted_norms(conv, geo, h);
    let dhat = gradient_covector(geo, &hat);
    let r1 = par::map_collect(mesh.len(), |i| {
        let mut v = [0.0; 3];
        for a in 0..d {
            v[a] = div_h2[i][a] + pair[i][a] - 0.5 * dhat[i][a];
        }
        v
    });

    let divdiv = div_covector(geo, &div_h2);
    let lap_hat = laplacian_nodal(geo, &hat);
    let lap_d = hodge_laplacian(geo, h);
    let dstar_sq = total_norm_sq(conv, geo, &dstar);
    let degs: Vec<usize> = h.degrees().into_iter().filter(|&k| k >= 1).collect();
    let r2 = par::map_collect(mesh.len(), |i| {
        let mut lap_term = 0.0;
        for &k in &degs {
            lap_term += conv.weight(k) / k as f64
                * forms::inner_n(geo.ginv(i), &lap_d.get(k, i), &h.get(k, i), d, k);
        }
        divdiv[i] - 0.5 * lap_hat[i] - lap_term - dstar_sq[i]
    });
    BianchiResiduals { r1, r2, closedness: closedness_residual(h) }
}

pub fn bianchi_residuals(conv: Convention, g: &MetricField, h: &PolyformField) -> Result<BianchiResiduals> {
    g.mesh().check_same(h.mesh())?;
    Ok(bianchi_geo(conv, &Geometry::new(g), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::mesh::MeshSpec;

    #[test]
    fn vanish_for_zero_and_constant_forms() {
        let mesh = MeshSpec::torus(2, 8).unwrap();
        let g = MetricField::flat(mesh);
        let zero = bianchi_residuals(Convention::FullSum, &g, &PolyformField::zeros(mesh)).unwrap();
        assert_eq!(zero.r1_max(), 0.0);
        assert_eq!(zero.r2_max(), 0.0);
        let h = PolyformField::zeros(mesh).with_degree(2, vec![[0.7, 0.0, 0.0]; mesh.len()]).unwrap();
        let c = bianchi_residuals(Convention::FullSum, &g, &h).unwrap();
        assert!(c.r1_max() < 1e-14 && c.r2_max() < 1e-14);
    }

    #[test]
    fn two_form_residual_is_small_only_for_full_sum() {
        let mesh = MeshSpec::torus(2, 64).unwrap();
        let g = MetricField::conformal(&ScalarField::from_fn(mesh, |x| 0.1 * x[0].sin() * x[1].cos()));
        let data = (0..mesh.len())
            .map(|i| {
                let x = mesh.position(i);
                [0.5 + 0.2 * x[0].cos() + 0.1 * (x[0] + x[1]).sin(), 0.0, 0.0]
            })
            .collect();
        let h = PolyformField::zeros(mesh).with_degree(2, data).unwrap();
        let full = bianchi_residuals(Convention::FullSum, &g, &h).unwrap();
        let norm = bianchi_residuals(Convention::Normalized, &g, &h).unwrap();
        assert!(full.r1_max() < 1e-2, "{}", full.r1_max());
        assert!(norm.r1_max() > 10.0 * full.r1_max());
    }
}
