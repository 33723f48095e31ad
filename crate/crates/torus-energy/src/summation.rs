//! Compensated summation and deterministic parallel reduction.
//!
//! Energy sums over >10^4 frequencies are accumulated with Kahan
//! compensation; parallel sums are partitioned into fixed blocks that are
//! combined in block order, so results are reproducible run-to-run.

use rayon::prelude::*;

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sum `f(i)` for `i in 0..n`, splitting the index range into fixed blocks
/// evaluated in parallel and combined sequentially in block order.
pub fn deterministic_par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const BLOCK: usize = 4096;
    if n <= BLOCK {
        let mut acc = KahanSum::new();
        for i in 0..n {
            acc.add(f(i));
        }
        return acc.value();
    }
    let blocks: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            let mut acc = KahanSum::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    kahan_sum(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_ill_conditioned_sum() {
        // 1 + 1e-16 repeated: naive summation loses every increment.
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        let exact = 1.0 + 1e-12;
        assert!((acc.value() - exact).abs() < 1e-15);
    }

    #[test]
    fn par_sum_matches_sequential() {
        let n = 100_000;
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let seq = {
            let mut acc = KahanSum::new();
            for i in 0..n {
                acc.add(f(i));
            }
            acc.value()
        };
        let par = deterministic_par_sum(n, f);
        assert!((seq - par).abs() < 1e-9 * seq.abs().max(1.0));
        // run-to-run determinism
        assert_eq!(par.to_bits(), deterministic_par_sum(n, f).to_bits());
    }
}
