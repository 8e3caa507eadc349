use crate::field::{MetricField, ScalarField, SymTensorField};
use crate::linalg::{trace_with, Mat3, ZERO3};
use crate::par;

use super::{d2, Geometry};

#[derive(Debug, Clone)]
pub struct Curvature {
    pub rc: SymTensorField,
    pub r: ScalarField,
}

/// Ricci tensor and scalar curvature of `g`.
pub fn curvature(g: &MetricField) -> Curvature {
    Curvature::of(&Geometry::new(g))
}

impl Curvature {
    pub fn of(geo: &Geometry) -> Curvature {
        let mesh = *geo.mesh();
        let d = mesh.dim();
        if d == 1 {
            return Curvature { rc: SymTensorField::zeros(mesh), r: ScalarField::zeros(mesh) };
        }
        let rc_raw: Vec<Mat3> = par::map_collect(mesh.len(), |i| ricci_at(geo, i));
        let r: Vec<f64> = par::map_collect(mesh.len(), |i| trace_with(geo.ginv(i), &rc_raw[i], d));
        let rc = if d == 2 {
            // Every 2-metric is Einstein: Rc = ½ R g.
            par::map_collect(mesh.len(), |i| {
                let mut m = *geo.g(i);
                for row in m.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= 0.5 * r[i];
                    }
                }
                m
            })
        } else {
            rc_raw
        };
        Curvature {
            rc: SymTensorField::from_nodes(mesh, rc).expect("ricci shape"),
            r: ScalarField::from_vec(mesh, r).expect("scalar curvature"),
        }
    }
}

/// `R_ij = ∂_kΓ^k_ij − ∂_jΓ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik`, with the
/// derivatives of `Γ` expanded in terms of first and second differences of `g`.
fn ricci_at(geo: &Geometry, i: usize) -> Mat3 {
    let mesh = geo.mesh();
    let d = mesh.dim();
    let gi = geo.ginv(i);
    let dg = geo.dg(i);
    let gam = geo.gamma(i);
    let g_all = geo.metric_nodes();

    // ddg[m][n][a][b] = ∂_m ∂_n g_ab
    let mut ddg = [[ZERO3; 3]; 3];
    for m in 0..d {
        for n in m..d {
            for a in 0..d {
                for b in a..d {
                    let v = d2(mesh, |j| g_all[j][a][b], i, m, n);
                    ddg[m][n][a][b] = v;
                    ddg[m][n][b][a] = v;
                    ddg[n][m][a][b] = v;
                    ddg[n][m][b][a] = v;
                }
            }
        }
    }
    // lower[l][a][b] = ½(∂_a g_bl + ∂_b g_al − ∂_l g_ab)
    let mut lower = [ZERO3; 3];
    for (l, low) in lower.iter_mut().enumerate().take(d) {
        for a in 0..d {
            for b in 0..d {
                low[a][b] = 0.5 * (dg[a][b][l] + dg[b][a][l] - dg[l][a][b]);
            }
        }
    }
    // dginv[m][k][l] = ∂_m g^{kl}
    let mut dginv = [ZERO3; 3];
    for (m, dgm) in dginv.iter_mut().enumerate().take(d) {
        for k in 0..d {
            for l in 0..d {
                let mut s = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        s -= gi[k][a] * dg[m][a][b] * gi[b][l];
                    }
                }
                dgm[k][l] = s;
            }
        }
    }
    // dgam(m, k, a, b) = ∂_m Γ^k_ab
    let dgam = |m: usize, k: usize, a: usize, b: usize| -> f64 {
        let mut s = 0.0;
        for l in 0..d {
            let dlow = 0.5 * (ddg[m][a][b][l] + ddg[m][b][a][l] - ddg[m][l][a][b]);
            s += dginv[m][k][l] * lower[l][a][b] + gi[k][l] * dlow;
        }
        s
    };
    let mut rc = ZERO3;
    for a in 0..d {
        for b in a..d {
            let mut s = 0.0;
            for k in 0..d {
                s += dgam(k, k, a, b) - dgam(b, k, a, k);
                for l in 0..d {
                    s += gam[k][k][l] * gam[l][a][b] - gam[k][b][l] * gam[l][a][k];
                }
            }
            rc[a][b] = s;
        }
    }
    for a in 0..d {
        for b in 0..a {
            rc[a][b] = rc[b][a];
        }
    }
    rc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshSpec;

    #[test]
    fn flat_is_flat() {
        for dim in 1..=3 {
            let mesh = MeshSpec::torus(dim, 8).unwrap();
            let c = curvature(&MetricField::flat(mesh));
            assert_eq!(c.r.max_abs(), 0.0);
            assert_eq!(c.rc.max_abs(), 0.0);
        }
    }

    #[test]
    fn round_sphere_patch_sign() {
        // Conformal factor e^{2u}: R = −2 e^{−2u} Δ₀u; check at 64² against the analytic value.
        let mesh = MeshSpec::torus(2, 64).unwrap();
        let u = ScalarField::from_fn(mesh, |x| 0.1 * x[0].sin() * x[1].sin());
        let c = curvature(&MetricField::conformal(&u));
        let mut err: f64 = 0.0;
        for i in 0..mesh.len() {
            let x = mesh.position(i);
            let uu = 0.1 * x[0].sin() * x[1].sin();
            let want = -2.0 * (-2.0 * uu).exp() * (-2.0 * uu);
            err = err.max((c.r.get(i) - want).abs());
        }
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn three_dim_conformal_scalar_curvature_converges() {
        // g = e^{2u} δ in 3D: R = −e^{−2u}(4Δ₀u + 2|∇₀u|²).
        let uf = |x: [f64; 3]| 0.1 * x[0].sin() + 0.05 * x[2].cos() + 0.05 * (x[1] - x[0]).sin();
        let err_at = |n: usize| {
            let mesh = MeshSpec::torus(3, n).unwrap();
            let u = ScalarField::from_fn(mesh, uf);
            let c = curvature(&MetricField::conformal(&u));
            let mut err: f64 = 0.0;
            for i in 0..mesh.len() {
                let x = mesh.position(i);
                let lap = -0.1 * x[0].sin() - 0.05 * x[2].cos() - 0.1 * (x[1] - x[0]).sin();
                let gx = 0.1 * x[0].cos() - 0.05 * (x[1] - x[0]).cos();
                let gy = 0.05 * (x[1] - x[0]).cos();
                let gz = -0.05 * x[2].sin();
                let want = -(-2.0 * uf(x)).exp() * (4.0 * lap + 2.0 * (gx * gx + gy * gy + gz * gz));
                err = err.max((c.r.get(i) - want).abs());
            }
            err
        };
        let (e1, e2) = (err_at(16), err_at(32));
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }
}
