//! Deterministic summation helpers.
//!
//! Every reduction in the crate goes through these so results do not depend
//! on how many worker threads produced the summands.

use crate::C64;

const LEAF: usize = 32;

/// Pairwise (tree) sum with a fixed split shape.
pub(crate) fn pairwise(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

pub(crate) fn pairwise_c(values: &[C64]) -> C64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_c(&values[..mid]) + pairwise_c(&values[mid..])
}

/// Running sums with Neumaier compensation, one output per input.
pub(crate) fn cumulative(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            comp += (s - t) + v;
        } else {
            comp += (v - t) + s;
        }
        s = t;
        out.push(s + comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise(&v), 5050.0);
    }

    #[test]
    fn cumulative_is_compensated() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 1_000_000));
        let c = cumulative(&v);
        assert!((c.last().unwrap() - (1.0 + 1e-10)).abs() < 1e-15);
    }
}
