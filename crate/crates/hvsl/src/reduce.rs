//! Deterministic reductions.
//!
//! Conservation diagnostics must be bit-identical from run to run, so all
//! cross-line sums go through a fixed pairwise reduction tree instead of a
//! scheduler-dependent accumulation order.

/// Pairwise (cascade) sum with a fixed tree; deterministic for a given
/// input slice regardless of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
