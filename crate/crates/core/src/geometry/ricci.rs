use crate::error::Result;
use crate::field::{MetricField, PolyformField, ScalarField, SymTensorField};
use crate::forms::Convention;
use crate::linalg::sym_inner;
use crate::par;

use super::polyform::{codifferential, interior_field, total_norm_sq, weighted_norms};
use super::{gradient, grad_norm_sq, hessian, laplacian_nodal, Curvature, Geometry};

/// Symmetric part plus polyform part (degrees `0..dim−1`).
#[derive(Debug, Clone)]
pub struct MixedRicci {
    pub sym: SymTensorField,
    pub form: PolyformField,
}

impl MixedRicci {
    /// Pointwise `|sym|_g^2` and `Σ_k |form_k|^2`.
    pub fn norm_parts(&self, conv: Convention, geo: &Geometry) -> (Vec<f64>, Vec<f64>) {
        let d = geo.dim();
        let s = par::map_collect(geo.mesh().len(), |i| {
            let m = self.sym.at(i);
            sym_inner(geo.ginv(i), m, m, d)
        });
        (s, total_norm_sq(conv, geo, &self.form))
    }

    /// Pointwise squared norm.
    pub fn norm_sq(&self, conv: Convention, geo: &Geometry) -> Vec<f64> {
        let (a, b) = self.norm_parts(conv, geo);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }
}

/// `Rc − ¼H² + ∇²f ⊕ −½(d*H + i_{∇f}H)` from precomputed curvature.
pub fn ricci_hf_geo(conv: Convention, geo: &Geometry, curv: &Curvature, h: &PolyformField, f: &[f64]) -> MixedRicci {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let h2 = super::h_squared_field(conv, geo, h);
    let hess = hessian(geo, f);
    let sym = par::map_collect(mesh.len(), |i| {
        let mut m = *curv.rc.at(i);
        for a in 0..d {
            for b in 0..d {
                m[a][b] += -0.25 * h2.at(i)[a][b] + hess.at(i)[a][b];
            }
        }
        m
    });
    let grad_f = gradient(geo, f);
    let form = codifferential(geo, h)
        .add_scaled(&interior_field(&mesh, &grad_f, h), 1.0)
        .expect("same mesh");
    let form = PolyformField::zeros(mesh).add_scaled(&form, -0.5).expect("same mesh");
    MixedRicci { sym: SymTensorField::from_nodes(mesh, sym).expect("ricci shape"), form }
}

/// `R − ¼ Σ(1/k)|H_k|^2 + 2 tr_g∇²f − |∇f|^2` from precomputed curvature.
pub fn scalar_hf_geo(conv: Convention, geo: &Geometry, curv: &Curvature, h: &PolyformField, f: &[f64]) -> Vec<f64> {
    let (hat, _) = weighted_norms(conv, geo, h);
    let lap = laplacian_nodal(geo, f);
    let g2 = grad_norm_sq(geo, f);
    par::map_collect(f.len(), |i| curv.r.get(i) - 0.25 * hat[i] + 2.0 * lap[i] - g2[i])
}

pub fn ricci_hf(conv: Convention, g: &MetricField, h: &PolyformField, f: &ScalarField) -> Result<MixedRicci> {
    g.mesh().check_same(h.mesh())?;
    g.mesh().check_same(f.mesh())?;
    let geo = Geometry::new(g);
    let curv = Curvature::of(&geo);
    Ok(ricci_hf_geo(conv, &geo, &curv, h, f.values()))
}

pub fn scalar_hf(conv: Convention, g: &MetricField, h: &PolyformField, f: &ScalarField) -> Result<ScalarField> {
    g.mesh().check_same(h.mesh())?;
    g.mesh().check_same(f.mesh())?;
    let geo = Geometry::new(g);
    let curv = Curvature::of(&geo);
    ScalarField::from_vec(*g.mesh(), scalar_hf_geo(conv, &geo, &curv, h, f.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshSpec;

    #[test]
    fn constant_two_form_scalar() {
        let mesh = MeshSpec::torus(2, 8).unwrap();
        let c = 0.8;
        let h = PolyformField::zeros(mesh).with_degree(2, vec![[c, 0.0, 0.0]; mesh.len()]).unwrap();
        let g = MetricField::flat(mesh);
        let f = ScalarField::zeros(mesh);
        let r = scalar_hf(Convention::Normalized, &g, &h, &f).unwrap();
        assert!((r.get(3) + c * c / 8.0).abs() < 1e-15);
        let r = scalar_hf(Convention::FullSum, &g, &h, &f).unwrap();
        assert!((r.get(3) + c * c / 4.0).abs() < 1e-15);
    }

    #[test]
    fn gauge_shift_of_dilaton() {
        let mesh = MeshSpec::torus(2, 16).unwrap();
        let g = MetricField::conformal(&ScalarField::from_fn(mesh, |x| 0.1 * x[0].cos()));
        let h = PolyformField::zeros(mesh).with_degree(2, vec![[0.4, 0.0, 0.0]; mesh.len()]).unwrap();
        let f = ScalarField::from_fn(mesh, |x| 0.2 * x[1].sin());
        let f2 = f.map(|v| v + 0.5);
        let a = scalar_hf(Convention::FullSum, &g, &h, &f).unwrap();
        let b = scalar_hf(Convention::FullSum, &g, &h, &f2).unwrap();
        let diff = a.zip_map(&b, |x, y| x - y).unwrap().max_abs();
        assert!(diff < 1e-12, "{diff}");
    }
}
