//! Small numeric helpers shared across the crate.

use alloc::vec::Vec;

/// `x^k` by binary exponentiation (`core` has no float `powi`).
#[inline]
pub(crate) fn powi(x: f64, k: u32) -> f64 {
    let mut result = 1.0;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// far better conditioned than a running sum on long inputs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Elementwise pairwise reduction over equally sized vectors.
pub(crate) fn pairwise_vec_sum(rows: &[Vec<f64>]) -> Vec<f64> {
    match rows.len() {
        0 => Vec::new(),
        1 => rows[0].clone(),
        _ => {
            let mid = rows.len() / 2;
            let mut left = pairwise_vec_sum(&rows[..mid]);
            let right = pairwise_vec_sum(&rows[mid..]);
            for (l, r) in left.iter_mut().zip(&right) {
                *l += r;
            }
            left
        }
    }
}
