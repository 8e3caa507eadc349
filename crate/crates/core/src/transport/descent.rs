//! Limited-memory BFGS over the interior masses of a path, with a
//! positivity-preserving backtracking line search.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::par;

use super::frame::{PathFrame, Potentials};

/// Stationarity target for path optimization.
pub const TOL_GEO: f64 = 1e-6;
pub const MAX_DESCENT_ITER: usize = 500;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { tol: TOL_GEO, max_iter: MAX_DESCENT_ITER }
    }
}

/// Final state of a path optimization; convergence is reported, not assumed.
#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub masses: Vec<Vec<f64>>,
    pub pot: Potentials,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot2(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let parts: Vec<f64> = a.iter().zip(b).map(|(x, y)| par::dot(x, y)).collect();
    par::pairwise_sum(&parts)
}

fn axpy2(y: &mut [Vec<f64>], a: f64, x: &[Vec<f64>]) {
    for (yy, xx) in y.iter_mut().zip(x) {
        for (u, v) in yy.iter_mut().zip(xx) {
            *u += a * v;
        }
    }
}

fn diff2(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect()
}

struct Point {
    masses: Vec<Vec<f64>>,
    pot: Potentials,
    energy: f64,
    grad: Vec<Vec<f64>>,
    residual: f64,
}

fn evaluate(frame: &PathFrame, masses: Vec<Vec<f64>>) -> Result<Point> {
    let pot = frame.solve(&masses)?;
    let energy = frame.energy(&masses, &pot.phi)?;
    let (grad, residual) = frame.gradient(&masses, &pot.phi);
    Ok(Point { masses, pot, energy, grad, residual })
}

fn with_interior(base: &[Vec<f64>], interior: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(base.len());
    out.push(base[0].clone());
    out.extend(interior.iter().cloned());
    out.push(base[base.len() - 1].clone());
    out
}

/// Minimizes the frame energy over interior masses, endpoints fixed.
pub(crate) fn descend(frame: &PathFrame, init: Vec<Vec<f64>>, opts: DescentOptions) -> Result<DescentOutcome> {
    if frame.intervals() < 2 {
        return Err(GrfError::InvalidArgument("path needs at least two intervals".into()));
    }
    if !frame.admissible(&init) {
        return Err(GrfError::InvalidArgument("initial path violates the density floor".into()));
    }
    let reference = frame.reference();
    let mut x = evaluate(frame, init)?;
    let mut mem: VecDeque<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> = VecDeque::new();
    let mut it = 0;
    while x.residual > opts.tol && it < opts.max_iter {
        it += 1;
        let mut dir = two_loop(frame, &reference, &x.grad, &mem);
        let mut slope = dot2(&x.grad, &dir);
        if !(slope < 0.0) {
            mem.clear();
            dir = two_loop(frame, &reference, &x.grad, &mem);
            slope = dot2(&x.grad, &dir);
        }
        let mut accepted = line_search(frame, &x, &dir, slope)?;
        if accepted.is_none() && !mem.is_empty() {
            mem.clear();
            dir = two_loop(frame, &reference, &x.grad, &mem);
            slope = dot2(&x.grad, &dir);
            accepted = line_search(frame, &x, &dir, slope)?;
        }
        let Some(next) = accepted else {
            break;
        };
        let s = diff2(&next.masses[1..next.masses.len() - 1], &x.masses[1..x.masses.len() - 1]);
        let y = diff2(&next.grad, &x.grad);
        let sy = dot2(&s, &y);
        if sy > 1e-300 && sy > 1e-12 * dot2(&s, &s).sqrt() * dot2(&y, &y).sqrt() {
            if mem.len() == MEMORY {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        x = next;
    }
    let converged = x.residual <= opts.tol;
    Ok(DescentOutcome { masses: x.masses, pot: x.pot, energy: x.energy, residual: x.residual, iterations: it, converged })
}

fn two_loop(
    frame: &PathFrame,
    reference: &super::elliptic::Spectral,
    grad: &[Vec<f64>],
    mem: &VecDeque<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)>,
) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = grad.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot2(s, &q);
        axpy2(&mut q, -a, y);
        alphas.push(a);
    }
    let mut r = frame.precondition(&q, reference);
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot2(y, &r);
        axpy2(&mut r, a - b, s);
    }
    for v in r.iter_mut() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    r
}

fn line_search(frame: &PathFrame, x: &Point, dir: &[Vec<f64>], slope: f64) -> Result<Option<Point>> {
    if !(slope < 0.0) {
        return Ok(None);
    }
    let interior = &x.masses[1..x.masses.len() - 1];
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let mut trial: Vec<Vec<f64>> = interior.to_vec();
        axpy2(&mut trial, alpha, dir);
        let cand = with_interior(&x.masses, &trial);
        if frame.admissible(&cand) {
            match evaluate(frame, cand) {
                Ok(p) => {
                    let slack = 1e-14 * x.energy.abs();
                    if p.energy <= x.energy + ARMIJO * alpha * slope + slack {
                        return Ok(Some(p));
                    }
                }
                Err(GrfError::BelowFloor { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        alpha *= 0.5;
    }
    Ok(None)
}
