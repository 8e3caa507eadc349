use crate::error::Result;
use crate::field::{PolyformField, ScalarField, SymTensorField};
use crate::forms::Convention;
use crate::geometry::{
    closedness_residual, exterior_derivative, grad_norm_sq, gradient, h_squared_field, hessian, hodge_laplacian,
    interior_field, laplacian_nodal, weighted_norms, Curvature,
};
use crate::par;

use super::GeomState;

/// Time derivative of a state under the flow.
#[derive(Debug, Clone)]
pub struct Tangent {
    pub dg: SymTensorField,
    pub dh: PolyformField,
    pub df: ScalarField,
    /// `‖d(∂H)‖_∞`; zero up to rounding for closed `H`.
    pub dh_closedness: f64,
}

/// `∂g = −2Rc + ½H² − 2∇²f`, `∂H = Δ_d H − d i_{∇f} H`,
/// `∂f = Δf + ¼ Σ((k−1)/k)|H_k|² − |∇f|²`.
pub fn grf_rhs(conv: Convention, s: &GeomState) -> Result<Tangent> {
    let mesh = *s.mesh();
    let d = mesh.dim();
    let geo = s.geometry();
    let curv = Curvature::of(&geo);
    let f = s.f.values();
    let h2 = h_squared_field(conv, &geo, &s.h);
    let hess = hessian(&geo, f);
    let dg = SymTensorField::from_index_fn(mesh, |i| {
        let mut m = *curv.rc.at(i);
        for a in 0..d {
            for b in 0..d {
                m[a][b] = -2.0 * m[a][b] + 0.5 * h2.at(i)[a][b] - 2.0 * hess.at(i)[a][b];
            }
        }
        m
    })?;

    let grad_f = gradient(&geo, f);
    let transport = exterior_derivative(&interior_field(&mesh, &grad_f, &s.h));
    let dh = hodge_laplacian(&geo, &s.h).add_scaled(&transport, -1.0)?;

    let (_, tilde) = weighted_norms(conv, &geo, &s.h);
    let lap = laplacian_nodal(&geo, f);
    let g2 = grad_norm_sq(&geo, f);
    let df = ScalarField::from_vec(mesh, par::map_collect(mesh.len(), |i| lap[i] + 0.25 * tilde[i] - g2[i]))?;

    let dh_closedness = closedness_residual(&dh);
    Ok(Tangent { dg, dh, df, dh_closedness })
}
