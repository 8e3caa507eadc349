//! Divergence-form weighted operators on the staggered grid.
//!
//! Scalars live on nodes. A vector field's `a`-component lives on the face
//! between node `k` and `k + e_a` and is stored at index `k`. Cross terms of
//! the metric are evaluated at cell corners `k + ½e_a + ½e_b`.

use crate::error::{GrfError, Result};
use crate::field::{FaceVector, ScalarField};
use crate::linalg::{Mat3, ZERO3};
use crate::mesh::MeshSpec;
use crate::par;

use super::Geometry;

fn pair_list(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            v.push((a, b));
        }
    }
    v
}

#[inline]
fn dplus(mesh: &MeshSpec, u: &[f64], k: usize, a: usize) -> f64 {
    (u[mesh.shift(k, a, 1)] - u[k]) / mesh.spacing(a)
}

/// Corner gradient components `((D_a u)_c, (D_b u)_c)` at `k + ½e_a + ½e_b`.
#[inline]
fn corner_grad(mesh: &MeshSpec, u: &[f64], k: usize, a: usize, b: usize) -> (f64, f64) {
    let ka = mesh.shift(k, a, 1);
    let kb = mesh.shift(k, b, 1);
    let kab = mesh.shift(ka, b, 1);
    let da = 0.5 * ((u[ka] - u[k]) + (u[kab] - u[kb])) / mesh.spacing(a);
    let db = 0.5 * ((u[kb] - u[k]) + (u[kab] - u[ka])) / mesh.spacing(b);
    (da, db)
}

#[inline]
fn corner_avg(mesh: &MeshSpec, v: impl Fn(usize) -> f64, k: usize, a: usize, b: usize) -> f64 {
    let ka = mesh.shift(k, a, 1);
    let kb = mesh.shift(k, b, 1);
    let kab = mesh.shift(ka, b, 1);
    0.25 * (v(k) + v(ka) + v(kb) + v(kab))
}

/// `L_c u = (1/w) ∂_i (c w g^{ij} ∂_j u)` with `w = e^{-f} sqrt(det g)` and a
/// positive nodal coefficient `c` (default 1, giving `Δ_f`).
///
/// The matrix `A = ΔV diag(w) (−L_c)` is symmetric positive semidefinite
/// with the constants as its kernel.
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    mesh: MeshSpec,
    w: Vec<f64>,
    /// Nodal `w g^{ij}`, coefficient excluded.
    k_node: Vec<Mat3>,
    k_face: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    k_corner: Vec<Vec<f64>>,
}

impl WeightedOperator {
    pub fn new(geo: &Geometry, f: &ScalarField, coeff: Option<&[f64]>) -> Result<Self> {
        let mesh = *geo.mesh();
        mesh.check_same(f.mesh())?;
        let w = geo.weight(f);
        let d = mesh.dim();
        let k_node: Vec<Mat3> = par::map_collect(mesh.len(), |i| {
            let gi = geo.ginv(i);
            let mut m = ZERO3;
            for a in 0..d {
                for b in 0..d {
                    m[a][b] = w[i] * gi[a][b];
                }
            }
            m
        });
        Self::from_parts(mesh, w, k_node, coeff)
    }

    /// Same weight and metric, new coefficient.
    pub fn with_coeff(&self, coeff: &[f64]) -> Result<Self> {
        Self::from_parts(self.mesh, self.w.clone(), self.k_node.clone(), Some(coeff))
    }

    fn from_parts(mesh: MeshSpec, w: Vec<f64>, k_node: Vec<Mat3>, coeff: Option<&[f64]>) -> Result<Self> {
        let d = mesh.dim();
        if let Some(c) = coeff {
            if c.len() != mesh.len() {
                return Err(GrfError::ShapeMismatch("operator coefficient".into()));
            }
            if let Some(i) = c.iter().position(|v| !(*v > 0.0)) {
                return Err(GrfError::InvalidArgument(format!("coefficient not positive at node {i}")));
            }
        }
        let ck = |i: usize, a: usize, b: usize| coeff.map_or(1.0, |c| c[i]) * k_node[i][a][b];
        let k_face = (0..d)
            .map(|a| par::map_collect(mesh.len(), |k| 0.5 * (ck(k, a, a) + ck(mesh.shift(k, a, 1), a, a))))
            .collect();
        let pairs = pair_list(d);
        let k_corner = pairs
            .iter()
            .map(|&(a, b)| par::map_collect(mesh.len(), |k| corner_avg(&mesh, |j| ck(j, a, b), k, a, b)))
            .collect();
        Ok(WeightedOperator { mesh, w, k_node, k_face, pairs, k_corner })
    }

    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    /// Nodal weight `e^{-f} sqrt(det g)`.
    pub fn weight(&self) -> &[f64] {
        &self.w
    }

    /// Mean diagonal face coefficient per axis; sets the constant-coefficient
    /// preconditioner.
    pub fn mean_face_coeff(&self) -> Vec<f64> {
        self.k_face.iter().map(|kf| par::pairwise_sum(kf) / kf.len() as f64).collect()
    }

    /// Face fluxes `c w g^{aj} ∂_j u` on every `a`-face.
    pub fn fluxes(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let mut flux: Vec<Vec<f64>> =
            (0..d).map(|a| par::map_collect(mesh.len(), |k| self.k_face[a][k] * dplus(&mesh, u, k, a))).collect();
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let kc = &self.k_corner[p];
            let grads: Vec<(f64, f64)> = par::map_collect(mesh.len(), |k| corner_grad(&mesh, u, k, a, b));
            // a-faces take K^{ab} D_b u from the two corners at ±½e_b,
            // b-faces take K^{ab} D_a u from the corners at ±½e_a.
            let fa = par::map_collect(mesh.len(), |k| {
                let km = mesh.shift(k, b, -1);
                0.5 * (kc[k] * grads[k].1 + kc[km] * grads[km].1)
            });
            let fb = par::map_collect(mesh.len(), |k| {
                let km = mesh.shift(k, a, -1);
                0.5 * (kc[k] * grads[k].0 + kc[km] * grads[km].0)
            });
            for k in 0..mesh.len() {
                flux[a][k] += fa[k];
                flux[b][k] += fb[k];
            }
        }
        flux
    }

    /// `Σ_a D^-_a flux_a` per node.
    pub fn flux_divergence(&self, u: &[f64]) -> Vec<f64> {
        let flux = self.fluxes(u);
        let mesh = self.mesh;
        let d = mesh.dim();
        par::map_collect(mesh.len(), |k| {
            let mut s = 0.0;
            for (a, fa) in flux.iter().enumerate().take(d) {
                s += (fa[k] - fa[mesh.shift(k, a, -1)]) / mesh.spacing(a);
            }
            s
        })
    }

    /// `L_c u`.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let q = self.flux_divergence(u);
        par::map_collect(q.len(), |k| q[k] / self.w[k])
    }

    /// `A u = −ΔV Σ D^- flux`, the symmetric positive semidefinite form.
    pub fn apply_a(&self, u: &[f64]) -> Vec<f64> {
        let dv = self.mesh.cell_volume();
        let q = self.flux_divergence(u);
        par::map_collect(q.len(), |k| -dv * q[k])
    }

    /// `u^T A u` evaluated face by face (no cancellation between nodes).
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mesh = self.mesh;
        let d = mesh.dim();
        let mut parts = Vec::with_capacity(d + self.pairs.len());
        for a in 0..d {
            parts.push(par::sum_by(mesh.len(), |k| {
                let g = dplus(&mesh, u, k, a);
                self.k_face[a][k] * g * g
            }));
        }
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let kc = &self.k_corner[p];
            parts.push(par::sum_by(mesh.len(), |k| {
                let (ga, gb) = corner_grad(&mesh, u, k, a, b);
                2.0 * kc[k] * ga * gb
            }));
        }
        parts.iter().sum::<f64>() * mesh.cell_volume()
    }

    /// `∂(u^T A_c u)/∂c_x / ΔV` for every node `x`: a discrete `w |∇u|^2_g`
    /// consistent with [`Self::quadratic_form`].
    pub fn energy_density(&self, u: &[f64]) -> Vec<f64> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let corner: Vec<Vec<f64>> = self
            .pairs
            .iter()
            .map(|&(a, b)| {
                par::map_collect(mesh.len(), |k| {
                    let (ga, gb) = corner_grad(&mesh, u, k, a, b);
                    ga * gb
                })
            })
            .collect();
        par::map_collect(mesh.len(), |x| {
            let kn = &self.k_node[x];
            let mut s = 0.0;
            for a in 0..d {
                let g0 = dplus(&mesh, u, x, a);
                let g1 = dplus(&mesh, u, mesh.shift(x, a, -1), a);
                s += 0.5 * kn[a][a] * (g0 * g0 + g1 * g1);
            }
            for (p, &(a, b)) in self.pairs.iter().enumerate() {
                let xa = mesh.shift(x, a, -1);
                let xb = mesh.shift(x, b, -1);
                let xab = mesh.shift(xa, b, -1);
                let c = &corner[p];
                s += 0.5 * kn[a][b] * (c[x] + c[xa] + c[xb] + c[xab]);
            }
            s
        })
    }
}

/// `div_f X = (1/w) Σ_a D^-_a (w_face X^a)` for a face-staggered field.
pub fn div_f(geo: &Geometry, f: &ScalarField, x: &FaceVector) -> Result<ScalarField> {
    let mesh = *geo.mesh();
    mesh.check_same(f.mesh())?;
    mesh.check_same(x.mesh())?;
    let w = geo.weight(f);
    let d = mesh.dim();
    let flux: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let xa = x.component(a);
            par::map_collect(mesh.len(), |k| 0.5 * (w[k] + w[mesh.shift(k, a, 1)]) * xa[k])
        })
        .collect();
    let out = par::map_collect(mesh.len(), |k| {
        let mut s = 0.0;
        for (a, fa) in flux.iter().enumerate() {
            s += (fa[k] - fa[mesh.shift(k, a, -1)]) / mesh.spacing(a);
        }
        s / w[k]
    });
    ScalarField::from_vec(mesh, out)
}

/// Face-staggered contravariant gradient `g^{aj} ∂_j u`.
pub fn face_gradient(geo: &Geometry, u: &[f64]) -> FaceVector {
    let mesh = *geo.mesh();
    let d = mesh.dim();
    let mut comps: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            par::map_collect(mesh.len(), |k| {
                let gf = 0.5 * (geo.ginv(k)[a][a] + geo.ginv(mesh.shift(k, a, 1))[a][a]);
                gf * dplus(&mesh, u, k, a)
            })
        })
        .collect();
    for (a, b) in pair_list(d) {
        let gc: Vec<f64> = par::map_collect(mesh.len(), |k| corner_avg(&mesh, |j| geo.ginv(j)[a][b], k, a, b));
        let grads: Vec<(f64, f64)> = par::map_collect(mesh.len(), |k| corner_grad(&mesh, u, k, a, b));
        for k in 0..mesh.len() {
            let kb = mesh.shift(k, b, -1);
            let ka = mesh.shift(k, a, -1);
            comps[a][k] += 0.5 * (gc[k] * grads[k].1 + gc[kb] * grads[kb].1);
            comps[b][k] += 0.5 * (gc[k] * grads[k].0 + gc[ka] * grads[ka].0);
        }
    }
    FaceVector::from_components(mesh, comps).expect("face gradient shape")
}

/// `Σ_faces w_face X^a D^+_a ψ ΔV`, the discrete `∫<X, ∇ψ> e^{-f} dV`.
pub fn face_pairing(geo: &Geometry, f: &ScalarField, x: &FaceVector, psi: &[f64]) -> f64 {
    let mesh = *geo.mesh();
    let w = geo.weight(f);
    let parts: Vec<f64> = (0..mesh.dim())
        .map(|a| {
            let xa = x.component(a);
            par::sum_by(mesh.len(), |k| 0.5 * (w[k] + w[mesh.shift(k, a, 1)]) * xa[k] * dplus(&mesh, psi, k, a))
        })
        .collect();
    parts.iter().sum::<f64>() * mesh.cell_volume()
}

/// `Σ_nodes s ψ w ΔV`, the discrete `∫ s ψ e^{-f} dV`.
pub fn node_pairing(geo: &Geometry, f: &ScalarField, s: &[f64], psi: &[f64]) -> f64 {
    let w = geo.weight(f);
    par::sum_by(s.len(), |k| s[k] * psi[k] * w[k]) * geo.mesh().cell_volume()
}
