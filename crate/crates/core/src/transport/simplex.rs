//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `n + m − 1` cells. Potentials are recomputed from the tree after every
//! pivot; entering cells are chosen by block pricing.

use crate::error::{GrfError, Result};

const EPS_PRICE: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    x: f64,
}

/// Minimizes `Σ c_ij x_ij` subject to row sums `a` and column sums `b`.
/// `cost` is row-major `n × m`. Returns the optimal value.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &[f64]) -> Result<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 || cost.len() != n * m {
        return Err(GrfError::ShapeMismatch("transportation problem".into()));
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let mut supply = a.to_vec();
    let mut demand: Vec<f64> = b.iter().map(|v| v * sa / sb).collect();
    let mut cells = north_west(&mut supply, &mut demand);
    let nodes = n + m;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (k, c) in cells.iter().enumerate() {
        adj[c.row].push(k);
        adj[n + c.col].push(k);
    }
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let block = (n * m).min(4 * (n + m)).max(1);
    let mut cursor = 0usize;
    let max_pivots = 200 * (n + m) * 16;
    for _ in 0..max_pivots {
        potentials(n, &cells, &adj, cost, m, &mut u, &mut v, &mut parent, &mut parent_cell, &mut depth);
        // Block pricing: take the most negative reduced cost in the first
        // block that contains one.
        let total = n * m;
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + block).min(total);
            for off in scanned..end {
                let idx = (cursor + off) % total;
                let (i, j) = (idx / m, idx % m);
                let rc = cost[idx] - u[i] - v[j];
                let scale = 1.0 + cost[idx].abs();
                if rc < -EPS_PRICE * scale && best.is_none_or(|(_, b)| rc < b) {
                    best = Some((idx, rc));
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        let Some((enter, _)) = best else {
            return Ok(cells.iter().map(|c| c.x * cost[c.row * m + c.col]).sum());
        };
        cursor = (enter + 1) % total;
        let (ei, ej) = (enter / m, enter % m);
        // Path in the tree from column ej to row ei; its cells alternate
        // −, +, −, ... starting at the column end.
        let path = tree_path(n + ej, ei, &parent, &parent_cell, &depth);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (p, &k) in path.iter().enumerate() {
            if p % 2 == 0 && cells[k].x < theta {
                theta = cells[k].x;
                leave = k;
            }
        }
        for (p, &k) in path.iter().enumerate() {
            if p % 2 == 0 {
                cells[k].x -= theta;
            } else {
                cells[k].x += theta;
            }
        }
        let old = cells[leave];
        adj[old.row].retain(|&k| k != leave);
        adj[n + old.col].retain(|&k| k != leave);
        cells[leave] = Cell { row: ei, col: ej, x: theta };
        adj[ei].push(leave);
        adj[n + ej].push(leave);
    }
    Err(GrfError::NotConverged { what: "transportation simplex".into(), iterations: max_pivots, residual: f64::NAN })
}

fn north_west(supply: &mut [f64], demand: &mut [f64]) -> Vec<Cell> {
    let (n, m) = (supply.len(), demand.len());
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let q = supply[i].min(demand[j]);
        cells.push(Cell { row: i, col: j, x: q });
        supply[i] -= q;
        demand[j] -= q;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (supply[i] <= demand[j] && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

#[allow(clippy::too_many_arguments)]
fn potentials(
    n: usize,
    cells: &[Cell],
    adj: &[Vec<usize>],
    cost: &[f64],
    m: usize,
    u: &mut [f64],
    v: &mut [f64],
    parent: &mut [usize],
    parent_cell: &mut [usize],
    depth: &mut [usize],
) {
    let nodes = adj.len();
    let mut seen = vec![false; nodes];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    parent[0] = usize::MAX;
    parent_cell[0] = usize::MAX;
    depth[0] = 0;
    while let Some(node) = stack.pop() {
        for &k in &adj[node] {
            let c = cells[k];
            let other = if node < n { n + c.col } else { c.row };
            if seen[other] {
                continue;
            }
            seen[other] = true;
            let ck = cost[c.row * m + c.col];
            if other >= n {
                v[c.col] = ck - u[c.row];
            } else {
                u[c.row] = ck - v[c.col];
            }
            parent[other] = node;
            parent_cell[other] = k;
            depth[other] = depth[node] + 1;
            stack.push(other);
        }
    }
}

/// Cells on the tree path from node `from` to node `to`, ordered from `from`.
fn tree_path(from: usize, to: usize, parent: &[usize], parent_cell: &[usize], depth: &[usize]) -> Vec<usize> {
    let (mut a, mut b) = (from, to);
    let mut head = Vec::new();
    let mut tail = Vec::new();
    while depth[a] > depth[b] {
        head.push(parent_cell[a]);
        a = parent[a];
    }
    while depth[b] > depth[a] {
        tail.push(parent_cell[b]);
        b = parent[b];
    }
    while a != b {
        head.push(parent_cell[a]);
        a = parent[a];
        tail.push(parent_cell[b]);
        b = parent[b];
    }
    head.extend(tail.into_iter().rev());
    head
}
