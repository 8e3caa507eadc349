//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) node loops run on the rayon pool;
//! without it everything runs on the calling thread. Reductions always use
//! the same fixed pairwise tree, so results are bitwise identical across
//! thread counts and across the two builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Leaf size of the pairwise summation tree.
const LEAF: usize = 64;
/// Below this many elements a subtree is summed on the current thread.
#[cfg(feature = "parallel")]
const SPLIT_PAR: usize = 8192;

/// Minimum chunk length handed to a worker for node loops.
#[cfg(feature = "parallel")]
const CHUNK: usize = 256;

/// Pairwise sum with a split schedule that depends only on `xs.len()`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    #[cfg(feature = "parallel")]
    {
        if xs.len() >= SPLIT_PAR {
            let (sa, sb) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
            return sa + sb;
        }
    }
    pairwise_sum(a) + pairwise_sum(b)
}

/// Deterministic sum of `f(i)` for `i in 0..n`.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let terms = map_collect(n, f);
    pairwise_sum(&terms)
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}

/// Evaluates `f(i)` for every `i in 0..n` into a vector.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(CHUNK).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fills `out` in place: `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut()
            .with_min_len(CHUNK)
            .enumerate()
            .for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, v) in out.iter_mut().enumerate() {
            *v = f(i);
        }
    }
}

/// Fills node-major blocks of `ncomp` values: `f(i, &mut out[i*ncomp..])`.
pub fn fill_blocks<F>(out: &mut [f64], ncomp: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(ncomp)
            .with_min_len(CHUNK)
            .enumerate()
            .for_each(|(i, blk)| f(i, blk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, blk) in out.chunks_mut(ncomp).enumerate() {
            f(i, blk);
        }
    }
}

/// Maps independent jobs (slices, scenarios, shifted windows) in order.
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maximum absolute value; order-independent so no tree is needed.
pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(sum_by(0, |_| 1.0), 0.0);
    }

    #[test]
    fn tree_does_not_depend_on_pool_size() {
        let xs: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (i as f64 + 1.0)).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| pairwise_sum(&xs));
        let b = four.install(|| pairwise_sum(&xs));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fill_blocks_writes_each_node() {
        let mut out = vec![0.0; 12];
        fill_blocks(&mut out, 3, |i, b| {
            b[0] = i as f64;
            b[2] = -(i as f64);
        });
        assert_eq!(out, vec![0., 0., -0., 1., 0., -1., 2., 0., -2., 3., 0., -3.]);
    }
}
