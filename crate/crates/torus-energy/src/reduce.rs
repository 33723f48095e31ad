//! Cluster detection and the pair-merging reduction: nearest-neighbor
//! classification at the `1/(300 sqrt(N))` scale, the two-pass greedy
//! pairing, midpoint merging with its exact factor-4 duplication
//! accounting, second-difference margins for the quadratic kernel, and
//! the iterated reduction with a per-step trace.

use crate::energies::pair_energy;
use crate::error::{Error, Result};
use crate::geometry::{torus_distance, wrap_coord, wrapped_diff, TorusPointSet};
use crate::kernels::KernelSpec;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// `1/(300 sqrt(N))`, the nearest-neighbor scale separating the two
/// branches of the reduction.
pub fn cluster_threshold(n: usize) -> f64 {
    1.0 / (300.0 * (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Separated,
    Clustered,
}

/// Counts of points with / without a neighbor closer than the threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    pub separated_count: usize,
    pub clustered_count: usize,
    pub threshold: f64,
    pub branch: Branch,
}

/// Splits the set by nearest-neighbor distance at `1/(300 sqrt(N))`:
/// a point is separated when its nearest neighbor is at least the
/// threshold away (boundary inclusive). The separated branch is taken
/// when at least `N/10` points are separated.
pub fn classify_branch(ps: &TorusPointSet) -> Result<BranchRecord> {
    let n = ps.len();
    if n < 2 {
        return Err(Error::Precondition(
            "classification needs at least two points".into(),
        ));
    }
    let threshold = cluster_threshold(n);
    let mut separated_count = 0;
    for i in 0..n {
        let mut nearest = f64::INFINITY;
        for j in 0..n {
            if j != i {
                nearest = nearest.min(ps.distance(i, j));
            }
        }
        if nearest >= threshold {
            separated_count += 1;
        }
    }
    let branch = if 10 * separated_count >= n {
        Branch::Separated
    } else {
        Branch::Clustered
    };
    Ok(BranchRecord {
        separated_count,
        clustered_count: n - separated_count,
        threshold,
        branch,
    })
}

/// A partial fixed-point-free involution on point indices. Matched pairs
/// are at most `3 * threshold` apart: the second pass may match within
/// the neighborhood of an existing pair, tripling the base radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pairing {
    pub partner: Vec<Option<usize>>,
    pub threshold: f64,
}

impl Pairing {
    /// Indices that got a partner, in increasing order.
    pub fn matched(&self) -> Vec<usize> {
        (0..self.partner.len())
            .filter(|&i| self.partner[i].is_some())
            .collect()
    }

    pub fn matched_count(&self) -> usize {
        self.partner.iter().filter(|p| p.is_some()).count()
    }

    /// Checks the involution, fixed-point-freeness and the 3x-radius
    /// distance constraint against the point set.
    pub fn validate(&self, ps: &TorusPointSet) -> Result<()> {
        if self.partner.len() != ps.len() {
            return Err(Error::Precondition(
                "pairing length does not match the point set".into(),
            ));
        }
        for (i, p) in self.partner.iter().enumerate() {
            if let Some(j) = *p {
                if j == i {
                    return Err(Error::Precondition(format!("fixed point at {i}")));
                }
                if self.partner.get(j).copied().flatten() != Some(i) {
                    return Err(Error::Precondition(format!(
                        "partner map is not an involution at {i}"
                    )));
                }
                let d = ps.distance(i, j);
                if d > 3.0 * self.threshold * (1.0 + 1e-12) {
                    return Err(Error::Precondition(format!(
                        "pair ({i}, {j}) at distance {d} exceeds 3x threshold"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The two-pass greedy pairing. Pass 1 walks indices in order and matches
/// each unmatched point to the first unmatched point within the base
/// radius. Pass 2 takes each remaining point whose nearest neighbor `j`
/// (ties to the lowest index) is within the radius — `j` is necessarily
/// matched after pass 1 — and matches it to the first unmatched point in
/// the radius-neighborhood of `{x_j, x_partner(j)}`.
pub fn build_pairing(ps: &TorusPointSet) -> Result<Pairing> {
    let n = ps.len();
    if n < 2 {
        return Err(Error::Precondition("pairing needs at least two points".into()));
    }
    let threshold = cluster_threshold(n);
    let mut partner: Vec<Option<usize>> = vec![None; n];

    for i in 0..n {
        if partner[i].is_some() {
            continue;
        }
        for j in 0..n {
            if j == i || partner[j].is_some() {
                continue;
            }
            if ps.distance(i, j) <= threshold {
                partner[i] = Some(j);
                partner[j] = Some(i);
                break;
            }
        }
    }

    for i in 0..n {
        if partner[i].is_some() {
            continue;
        }
        let mut nearest = f64::INFINITY;
        let mut nn = None;
        for j in 0..n {
            if j != i {
                let d = ps.distance(i, j);
                if d < nearest {
                    nearest = d;
                    nn = Some(j);
                }
            }
        }
        let j = match nn {
            Some(j) if nearest <= threshold => j,
            _ => continue,
        };
        let pj = match partner[j] {
            Some(pj) => pj,
            None => continue,
        };
        for k in 0..n {
            if k == i || partner[k].is_some() {
                continue;
            }
            if ps.distance(k, j) <= threshold || ps.distance(k, pj) <= threshold {
                partner[i] = Some(k);
                partner[k] = Some(i);
                break;
            }
        }
    }

    Ok(Pairing { partner, threshold })
}

/// Outcome of the counting argument for the matched set `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub a_size: usize,
    pub eligible: usize,
    pub holds: bool,
}

/// On the clustered branch, the matched set covers at least two thirds of
/// the clustered points: every unmatched clustered point charges two
/// matched ones. Errors if the set classifies as separated.
pub fn claim_check(ps: &TorusPointSet, pairing: &Pairing) -> Result<ClaimRecord> {
    let record = classify_branch(ps)?;
    if record.branch != Branch::Clustered {
        return Err(Error::Precondition(
            "claim_check requires the clustered branch".into(),
        ));
    }
    let a_size = pairing.matched_count();
    let eligible = record.clustered_count;
    Ok(ClaimRecord {
        a_size,
        eligible,
        holds: 3 * a_size >= 2 * eligible,
    })
}

/// Midpoint of `a` and `b` along the shortest torus representative of
/// `b - a`, coordinatewise.
pub fn torus_midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&am, &bm)| wrap_coord(am + wrapped_diff(bm, am) / 2.0))
        .collect()
}

/// Second-difference margin for the quadratic kernel
/// `E(x, y) = 1/(1 + N |x - y|^2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma2Record {
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// For `|a - b| <= 1/(100 sqrt(N))`, replacing `a` and `b` by their
/// midpoint moves the interaction with any `c` by at most a `1/5000`
/// fraction of `E(a, c)`.
pub fn lemma2_margin(a: &[f64], b: &[f64], c: &[f64], n: usize) -> Result<Lemma2Record> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::Precondition("points must share a dimension".into()));
    }
    let nf = n as f64;
    let dab = torus_distance(a, b)?;
    if dab > 1.0 / (100.0 * nf.sqrt()) {
        return Err(Error::Precondition(format!(
            "|a - b| = {dab} exceeds 1/(100 sqrt(N))"
        )));
    }
    let e = |x: &[f64], y: &[f64]| -> Result<f64> {
        let r = torus_distance(x, y)?;
        Ok(1.0 / (1.0 + nf * r * r))
    };
    let mid = torus_midpoint(a, b);
    let lhs = (e(a, c)? + e(b, c)? - 2.0 * e(&mid, c)?).abs();
    let bound = e(a, c)? / 5000.0;
    Ok(Lemma2Record {
        lhs,
        bound,
        holds: lhs <= bound,
    })
}

/// The margin bound lives on the smooth branch of the wrapped distance:
/// it degrades to first order when some coordinate of `c - mid(a, b)`
/// comes within `‖a - b‖` of the cut locus at 1/2, where the minimizing
/// representative switches between `a`, `b` and the midpoint. Admissible
/// triples stay clear of that set, so all three evaluations share a
/// branch and the second-difference bound applies.
pub fn lemma2_admissible(a: &[f64], b: &[f64], c: &[f64]) -> Result<bool> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::Precondition("points must share a dimension".into()));
    }
    let r = torus_distance(a, b)?;
    let mid = torus_midpoint(a, b);
    Ok(mid
        .iter()
        .zip(c)
        .all(|(&m, &cm)| wrapped_diff(m, cm).abs() < 0.5 - r))
}

/// Result of merging every matched pair into its midpoint.
#[derive(Debug, Clone)]
pub struct MergeRecord {
    /// Each midpoint twice: same cardinality as the matched set `A`.
    pub y_set: TorusPointSet,
    /// Each midpoint once.
    pub z_set: TorusPointSet,
}

/// Replaces every matched pair by two copies of its midpoint (`y_set`)
/// and by one copy (`z_set`). Since every `y` pair term appears four
/// times per `z` pair term, the quadratic pair energy of `y_set` is
/// exactly four times that of `z_set`.
pub fn merge_pairs(ps: &TorusPointSet, pairing: &Pairing) -> Result<MergeRecord> {
    pairing.validate(ps)?;
    let dim = ps.dim();
    let mut y = Vec::new();
    let mut z = Vec::new();
    for i in 0..ps.len() {
        match pairing.partner[i] {
            Some(j) if i < j => {
                let mid = torus_midpoint(ps.point(i), ps.point(j));
                y.push(mid.clone());
                y.push(mid.clone());
                z.push(mid);
            }
            _ => {}
        }
    }
    Ok(MergeRecord {
        y_set: TorusPointSet::new(dim, &y)?,
        z_set: TorusPointSet::new(dim, &z)?,
    })
}

/// One step of the iterated reduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionStep {
    pub n_before: usize,
    pub branch: Branch,
    pub a_size: usize,
    pub energy_before: f64,
    pub energy_y: f64,
    pub energy_z: f64,
    pub n_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    SeparatedBranch,
    IterationCap,
}

/// Full trace of the reduction. Energies are quadratic pair energies with
/// the kernel pinned at the *original* point count, diagonal included, so
/// values are comparable across steps.
#[derive(Debug, Clone)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub reason: StopReason,
    pub final_set: TorusPointSet,
}

impl ReductionTrace {
    /// One JSON object per step, then one for the terminal record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut w, step)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            writeln!(w)?;
        }
        let terminal = serde_json::json!({
            "reason": self.reason,
            "final_n": self.final_set.len(),
        });
        serde_json::to_writer(&mut w, &terminal)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

/// Iterates classify / pair / merge until the separated branch, fewer
/// than two points, or the iteration cap (default `ceil(ln N)`). Merging
/// a separated or sub-minimal set stops the loop; the clustered branch
/// replaces the current set by `z_set`.
pub fn reduce_iterate(ps: &TorusPointSet, max_iters: Option<usize>) -> Result<ReductionTrace> {
    let n0 = ps.len();
    if n0 < 2 {
        return Err(Error::Precondition("reduction needs at least two points".into()));
    }
    let cap = max_iters.unwrap_or_else(|| (n0 as f64).ln().ceil().max(1.0) as usize);
    if cap < 1 {
        return Err(Error::Precondition("max_iters must be >= 1".into()));
    }
    let kernel = KernelSpec::RieszQuadratic { n: n0 as f64 };
    let mut current = ps.clone();
    let mut steps = Vec::new();
    let mut reason = StopReason::IterationCap;
    for _ in 0..cap {
        let record = classify_branch(&current)?;
        let energy_before = pair_energy(&current, &kernel, true)?.total;
        if record.branch == Branch::Separated {
            steps.push(ReductionStep {
                n_before: current.len(),
                branch: Branch::Separated,
                a_size: 0,
                energy_before,
                energy_y: 0.0,
                energy_z: 0.0,
                n_after: current.len(),
            });
            reason = StopReason::SeparatedBranch;
            break;
        }
        let pairing = build_pairing(&current)?;
        let merged = merge_pairs(&current, &pairing)?;
        let energy_y = pair_energy(&merged.y_set, &kernel, true)?.total;
        let energy_z = pair_energy(&merged.z_set, &kernel, true)?.total;
        steps.push(ReductionStep {
            n_before: current.len(),
            branch: Branch::Clustered,
            a_size: pairing.matched_count(),
            energy_before,
            energy_y,
            energy_z,
            n_after: merged.z_set.len(),
        });
        current = merged.z_set;
        if current.len() < 2 {
            break;
        }
    }
    Ok(ReductionTrace {
        steps,
        reason,
        final_set: current,
    })
}
