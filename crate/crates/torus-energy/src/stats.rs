//! Disk discrepancy scans on the 2-torus and the one-dimensional pair
//! statistics: the pair-correlation function `F_N` and the Gaussian
//! pair statistic with its `sqrt(pi)` uniform limit.

use crate::bounds::corollary1_rhs;
use crate::error::{Error, Result};
use crate::geometry::{torus_distance, wrapped_diff, TorusPointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Points within torus distance `radius` of `center`, boundary inclusive.
pub fn disk_count(ps: &TorusPointSet, center: &[f64], radius: f64) -> Result<usize> {
    if !(radius > 0.0 && radius <= 0.5) {
        return Err(Error::Precondition("radius must lie in (0, 1/2]".into()));
    }
    if center.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: center.len(),
        });
    }
    let mut count = 0;
    for p in ps.iter() {
        if torus_distance(p, center)? <= radius {
            count += 1;
        }
    }
    Ok(count)
}

/// Count versus area prediction for one disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub center: Vec<f64>,
    pub radius: f64,
    pub count: usize,
    pub expected: f64,
    pub deviation: f64,
    /// `count - expected` with its sign, for mean-zero diagnostics.
    pub signed: f64,
}

/// Scan centers: a full `m x m` grid or `count` random draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CenterSpec {
    Grid { m: usize },
    Random { count: usize, seed: u64 },
}

impl CenterSpec {
    fn centers(&self) -> Result<Vec<[f64; 2]>> {
        match self {
            CenterSpec::Grid { m } => {
                if *m == 0 {
                    return Err(Error::Precondition("center grid must be nonempty".into()));
                }
                let mut out = Vec::with_capacity(m * m);
                for i in 0..*m {
                    for j in 0..*m {
                        out.push([i as f64 / *m as f64, j as f64 / *m as f64]);
                    }
                }
                Ok(out)
            }
            CenterSpec::Random { count, seed } => {
                if *count == 0 {
                    return Err(Error::Precondition("center count must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect())
            }
        }
    }
}

/// Maximum disk discrepancy over the scanned centers and radii, with the
/// spectral right-hand side reported alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyScan {
    pub max_record: DiscrepancyRecord,
    pub all: Vec<DiscrepancyRecord>,
    pub corollary1_rhs: f64,
}

/// Disks on the 2-torus only: a disk of radius `<= 1/2` embeds without
/// self-overlap, so the area prediction is `N pi r^2`.
pub fn discrepancy_scan(
    ps: &TorusPointSet,
    radii: &[f64],
    centers: &CenterSpec,
) -> Result<DiscrepancyScan> {
    if ps.dim() != 2 {
        return Err(Error::Precondition("discrepancy scan is defined on T^2".into()));
    }
    if radii.is_empty() {
        return Err(Error::Precondition("no radii to scan".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= 0.5)) {
        return Err(Error::Precondition("radii must lie in (0, 1/2]".into()));
    }
    let center_list = centers.centers()?;
    let n = ps.len() as f64;
    let all: Vec<DiscrepancyRecord> = center_list
        .par_iter()
        .flat_map_iter(|c| {
            radii.iter().map(move |&radius| {
                let count = disk_count(ps, c, radius).expect("validated inputs");
                let expected = n * PI * radius * radius;
                let signed = count as f64 - expected;
                DiscrepancyRecord {
                    center: c.to_vec(),
                    radius,
                    count,
                    expected,
                    deviation: signed.abs(),
                    signed,
                }
            })
        })
        .collect();
    let max_record = all
        .iter()
        .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
        .expect("nonempty scan")
        .clone();
    Ok(DiscrepancyScan {
        max_record,
        all,
        corollary1_rhs: corollary1_rhs(ps)?,
    })
}

/// `F_N` sampled on an increasing grid of `s` values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCorrelationReport {
    pub s_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub n: usize,
}

/// `F_N(s) = (1/N) #{m != n : |x_m - x_n| <= s/N}` with the wrapped
/// distance, one dimension only.
pub fn pair_correlation(ps: &TorusPointSet, s_grid: &[f64]) -> Result<PairCorrelationReport> {
    if ps.dim() != 1 {
        return Err(Error::Precondition("pair correlation is one-dimensional".into()));
    }
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[0] >= w[1]) || s_grid[0] <= 0.0 {
        return Err(Error::Precondition("s grid must be positive increasing".into()));
    }
    let n = ps.len();
    let nf = n as f64;
    // sort wrapped pair distances once, then count by binary search
    let mut dists: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(wrapped_diff(ps.point(i)[0], ps.point(j)[0]).abs());
        }
    }
    dists.sort_by(f64::total_cmp);
    let f_values = s_grid
        .iter()
        .map(|&s| {
            let cut = s / nf;
            let count = dists.partition_point(|&d| d <= cut);
            2.0 * count as f64 / nf
        })
        .collect();
    Ok(PairCorrelationReport {
        s_grid: s_grid.to_vec(),
        f_values,
        n,
    })
}

/// `(1/(N^2 sigma)) sum_{i != j} exp(-(|x_i - x_j| / sigma)^2)` with the
/// wrapped distance, one dimension only. The diagonal is excluded so the
/// i.i.d.-uniform limit at bandwidth `sigma = N^{-3/4}` is `sqrt(pi)`;
/// including it would add `1/(N sigma)`, which does not vanish at that
/// bandwidth.
pub fn gaussian_pair_statistic(ps: &TorusPointSet, sigma: f64) -> Result<f64> {
    if ps.dim() != 1 {
        return Err(Error::Precondition("pair statistic is one-dimensional".into()));
    }
    if sigma <= 0.0 {
        return Err(Error::Precondition("bandwidth must be positive".into()));
    }
    let n = ps.len();
    let nf = n as f64;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = ps.point(i)[0];
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    let d = wrapped_diff(xi, ps.point(j)[0]) / sigma;
                    acc += (-d * d).exp();
                }
            }
            acc
        })
        .sum();
    Ok(total / (nf * nf * sigma))
}
