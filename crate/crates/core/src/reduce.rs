//! Order-fixed summation.
//!
//! Items are cut into blocks of `BLOCK` elements, each block is summed left to
//! right, and block totals are combined by a balanced pairwise tree. The tree
//! depends only on the input length, so results are bit-identical whether the
//! blocks are evaluated on one thread or many.

use crate::rng::Exec;

pub const BLOCK: usize = 4096;

/// Sums `f(k)` for `k in 0..len` with a fixed reduction tree.
pub fn sum_range<F, const N: usize>(exec: Exec, len: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync + Send,
{
    let blocks = len.div_ceil(BLOCK);
    let partials = exec.map_indexed(blocks, |b| {
        let mut acc = [0.0; N];
        for k in b * BLOCK..((b + 1) * BLOCK).min(len) {
            let v = f(k);
            for c in 0..N {
                acc[c] += v[c];
            }
        }
        acc
    });
    pairwise(&partials)
}

/// Sums `N` accumulators over `items` with a fixed reduction tree.
pub fn sum_many<T, F, const N: usize>(exec: Exec, items: &[T], f: F) -> [f64; N]
where
    T: Sync,
    F: Fn(&T) -> [f64; N] + Sync + Send,
{
    sum_range(exec, items.len(), |k| f(&items[k]))
}

pub fn sum_by<T, F>(exec: Exec, items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    sum_many(exec, items, |x| [f(x)])[0]
}

fn pairwise<const N: usize>(parts: &[[f64; N]]) -> [f64; N] {
    match parts.len() {
        0 => [0.0; N],
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            let (a, b) = (pairwise(l), pairwise(r));
            let mut out = [0.0; N];
            for k in 0..N {
                out[k] = a[k] + b[k];
            }
            out
        }
    }
}
