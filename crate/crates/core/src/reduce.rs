//! Reductions whose result does not depend on the rayon thread count.

use rayon::prelude::*;

/// Samples per block in [`block_sums`]. Part of the numeric contract: changing
/// it changes rounding, not expectations.
pub const BLOCK: usize = 2048;

/// Pairwise (cascade) sum in a fixed tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 16 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sum and sum of squares of `f(i)` for `i < n`.
///
/// Blocks are evaluated in parallel, each block sequentially, and the block
/// partials are combined pairwise in index order.
pub fn block_sums<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for i in lo..hi {
                let v = f(i);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let s: Vec<f64> = partial.iter().map(|p| p.0).collect();
    let s2: Vec<f64> = partial.iter().map(|p| p.1).collect();
    (pairwise_sum(&s), pairwise_sum(&s2))
}

/// Mean and standard error of the mean from raw sums.
pub fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}
