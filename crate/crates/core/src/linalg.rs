//! Tiny fixed-size matrix helpers for per-node algebra (dim <= 3).
//!
//! Matrices are `[[f64; 3]; 3]`; entries outside the leading `dim x dim`
//! block are ignored and kept at zero.

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

pub fn identity(dim: usize) -> Mat3 {
    let mut m = ZERO3;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

pub fn det(m: &Mat3, dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

pub fn inverse(m: &Mat3, dim: usize) -> Mat3 {
    let d = det(m, dim);
    let mut r = ZERO3;
    match dim {
        1 => r[0][0] = 1.0 / d,
        2 => {
            r[0][0] = m[1][1] / d;
            r[1][1] = m[0][0] / d;
            r[0][1] = -m[0][1] / d;
            r[1][0] = -m[1][0] / d;
        }
        _ => {
            r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
            r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
            r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
            r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
            r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
            r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
            r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
            r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
            r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        }
    }
    r
}

/// Determinant of the submatrix with the given rows and columns.
pub fn minor(m: &Mat3, rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    match rows.len() {
        0 => 1.0,
        1 => m[rows[0]][cols[0]],
        2 => m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]],
        _ => {
            let mut s = ZERO3;
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    s[a][b] = m[r][c];
                }
            }
            det(&s, 3)
        }
    }
}

pub fn trace_with(ginv: &Mat3, t: &Mat3, dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            s += ginv[a][b] * t[a][b];
        }
    }
    s
}

/// `A^{ab} B_{ab}`-style full contraction `<A, B>_g = g^{ac} g^{bd} A_ab B_cd`.
pub fn sym_inner(ginv: &Mat3, a: &Mat3, b: &Mat3, dim: usize) -> f64 {
    let ra = raise_both(ginv, a, dim);
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += ra[i][j] * b[i][j];
        }
    }
    s
}

/// `g^{ac} T_cd g^{db}`.
pub fn raise_both(ginv: &Mat3, t: &Mat3, dim: usize) -> Mat3 {
    let mut tmp = ZERO3;
    for a in 0..dim {
        for d in 0..dim {
            let mut s = 0.0;
            for c in 0..dim {
                s += ginv[a][c] * t[c][d];
            }
            tmp[a][d] = s;
        }
    }
    let mut r = ZERO3;
    for a in 0..dim {
        for b in 0..dim {
            let mut s = 0.0;
            for d in 0..dim {
                s += tmp[a][d] * ginv[d][b];
            }
            r[a][b] = s;
        }
    }
    r
}

pub fn mat_vec(m: &Mat3, v: &Vec3, dim: usize) -> Vec3 {
    let mut r = [0.0; 3];
    for a in 0..dim {
        for b in 0..dim {
            r[a] += m[a][b] * v[b];
        }
    }
    r
}

pub fn bilinear(m: &Mat3, u: &Vec3, v: &Vec3, dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            s += m[a][b] * u[a] * v[b];
        }
    }
    s
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(m: &Mat3, dim: usize) -> Vec3 {
    let mut a = *m;
    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = [f64::INFINITY; 3];
    for i in 0..dim {
        ev[i] = a[i][i];
    }
    ev[..dim].sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue(m: &Mat3, dim: usize) -> f64 {
    sym_eigenvalues(m, dim)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 1.1]];
        for dim in 1..=3 {
            let inv = inverse(&m, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = 0.0;
                    for k in 0..dim {
                        s += m[i][k] * inv[k][j];
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_match_trace_and_det() {
        let m = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 1.1]];
        let ev = sym_eigenvalues(&m, 3);
        assert!((ev[0] + ev[1] + ev[2] - 4.6).abs() < 1e-12);
        assert!((ev[0] * ev[1] * ev[2] - det(&m, 3)).abs() < 1e-12);
        assert!(ev[0] <= ev[1] && ev[1] <= ev[2]);
        let d2 = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0; 3]];
        let e2 = sym_eigenvalues(&d2, 2);
        assert!((e2[0] + 1.0).abs() < 1e-12 && (e2[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn minors_of_identity() {
        let id = identity(3);
        assert_eq!(minor(&id, &[0, 2], &[0, 2]), 1.0);
        assert_eq!(minor(&id, &[0, 2], &[0, 1]), 0.0);
        assert_eq!(minor(&id, &[], &[]), 1.0);
    }
}
