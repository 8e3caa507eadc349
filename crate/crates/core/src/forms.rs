//! Pointwise exterior algebra for forms of degree <= 3 in dimension <= 3.
//!
//! A degree-`k` form at a node is stored as its components on increasing
//! multi-indices (see [`multi_indices`]). All metric pairings are derived
//! from the "normalized" pairing, under which increasing coordinate
//! monomials are orthonormal in an orthonormal coframe:
//!
//! `<a, b>_n = sum_{I,J increasing} a_I det(g^{-1}[I, J]) b_J`.
//!
//! The norm convention rescales this per degree by `nu(k)`.

use serde::{Deserialize, Serialize};

use crate::linalg::{minor, Mat3, Vec3, ZERO3};

/// Norm convention for forms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `|a|^2 = <a, a>_n`: monomials `dx^I` (I increasing) have unit norm.
    Normalized,
    /// `|a|^2 = a_{i1..ik} a^{i1..ik}` summed over all index tuples, i.e. `k! <a, a>_n`.
    #[default]
    FullSum,
}

impl Convention {
    /// Per-degree rescaling `nu(k)` of the normalized pairing.
    pub fn weight(self, k: usize) -> f64 {
        match self {
            Convention::Normalized => 1.0,
            Convention::FullSum => factorial(k),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Convention::Normalized => "normalized",
            Convention::FullSum => "full-sum",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "normalized" => Some(Convention::Normalized),
            "full-sum" => Some(Convention::FullSum),
            _ => None,
        }
    }

    /// `tr_g H^2_k / |H_k|^2` for a nonzero degree-`k` form.
    pub fn trace_ratio(self, k: usize) -> f64 {
        k as f64 * self.weight(k - 1) / self.weight(k)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

const D1: [&[&[usize]]; 2] = [&[&[]], &[&[0]]];
const D2: [&[&[usize]]; 3] = [&[&[]], &[&[0], &[1]], &[&[0, 1]]];
const D3: [&[&[usize]]; 4] = [&[&[]], &[&[0], &[1], &[2]], &[&[0, 1], &[0, 2], &[1, 2]], &[&[0, 1, 2]]];

/// Increasing multi-indices of length `k` over `0..dim`, in storage order.
pub fn multi_indices(dim: usize, k: usize) -> &'static [&'static [usize]] {
    match (dim, k) {
        (1, k) if k <= 1 => D1[k],
        (2, k) if k <= 2 => D2[k],
        (3, k) if k <= 3 => D3[k],
        _ => &[],
    }
}

pub fn n_components(dim: usize, k: usize) -> usize {
    multi_indices(dim, k).len()
}

/// Storage slot and permutation sign of an arbitrary index tuple, or `None`
/// if an index repeats.
pub fn locate(dim: usize, idx: &[usize]) -> Option<(usize, f64)> {
    let mut v: Vec<usize> = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] == v[j + 1] {
                return None;
            }
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let table = multi_indices(dim, v.len());
    table.iter().position(|m| *m == v.as_slice()).map(|p| (p, sign))
}

/// Contravariant components `a^I = sum_J det(g^{-1}[I,J]) a_J`.
pub fn raise(ginv: &Mat3, a: &Vec3, dim: usize, k: usize) -> Vec3 {
    transform(ginv, a, dim, k)
}

/// Covariant components from contravariant ones.
pub fn lower(g: &Mat3, a_up: &Vec3, dim: usize, k: usize) -> Vec3 {
    transform(g, a_up, dim, k)
}

fn transform(m: &Mat3, a: &Vec3, dim: usize, k: usize) -> Vec3 {
    let idx = multi_indices(dim, k);
    let mut out = [0.0; 3];
    for (p, i) in idx.iter().enumerate() {
        let mut s = 0.0;
        for (q, j) in idx.iter().enumerate() {
            s += minor(m, i, j) * a[q];
        }
        out[p] = s;
    }
    out
}

/// Normalized pairing `<a, b>_n` of two degree-`k` forms.
pub fn inner_n(ginv: &Mat3, a: &Vec3, b: &Vec3, dim: usize, k: usize) -> f64 {
    let up = raise(ginv, a, dim, k);
    let nc = n_components(dim, k);
    (0..nc).map(|p| up[p] * b[p]).sum()
}

/// Interior product `i_v a` with a contravariant vector `v`.
pub fn interior(v: &Vec3, a: &Vec3, dim: usize, k: usize) -> Vec3 {
    let mut out = [0.0; 3];
    if k == 0 {
        return out;
    }
    for (p, j) in multi_indices(dim, k - 1).iter().enumerate() {
        let mut s = 0.0;
        for (c, vc) in v.iter().enumerate().take(dim) {
            let mut full = Vec::with_capacity(k);
            full.push(c);
            full.extend_from_slice(j);
            if let Some((q, sign)) = locate(dim, &full) {
                s += vc * sign * a[q];
            }
        }
        out[p] = s;
    }
    out
}

/// Interior product with the coordinate vector `e_c`.
pub fn interior_axis(c: usize, a: &Vec3, dim: usize, k: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    interior(&e, a, dim, k)
}

/// `|a|^2 = nu(k) <a, a>_n`.
pub fn norm_sq(conv: Convention, ginv: &Mat3, a: &Vec3, dim: usize, k: usize) -> f64 {
    conv.weight(k) * inner_n(ginv, a, a, dim, k)
}

/// `H^2_ab = nu(k-1) <i_{e_a} H, i_{e_b} H>_n` for one degree.
pub fn h_squared(conv: Convention, ginv: &Mat3, h: &Vec3, dim: usize, k: usize) -> Mat3 {
    let mut out = ZERO3;
    if k == 0 {
        return out;
    }
    let w = conv.weight(k - 1);
    let contracted: Vec<Vec3> = (0..dim).map(|a| interior_axis(a, h, dim, k)).collect();
    for a in 0..dim {
        for b in a..dim {
            let v = w * inner_n(ginv, &contracted[a], &contracted[b], dim, k - 1);
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    out
}

/// The covector `<alpha, beta>(X) = <alpha, i_X beta>` for a degree-`k-1`
/// form `alpha` and degree-`k` form `beta`.
pub fn pair_covector(conv: Convention, ginv: &Mat3, alpha: &Vec3, beta: &Vec3, dim: usize, k: usize) -> Vec3 {
    let mut out = [0.0; 3];
    let w = conv.weight(k - 1);
    for (c, o) in out.iter_mut().enumerate().take(dim) {
        let ib = interior_axis(c, beta, dim, k);
        *o = w * inner_n(ginv, alpha, &ib, dim, k - 1);
    }
    out
}
