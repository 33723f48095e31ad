//! Heat evolution of Dirac sums: the deviation field `N - sum_n theta_d`,
//! its spectral L2 norm with certified truncation, sup-norm grid scans,
//! the duality witnesses for the lower bounds, and a projected-gradient
//! optimizer over positions and per-point heat times.

use crate::error::{Error, Result};
use crate::geometry::{wrap_coord, wrapped_diff, TorusPointSet};
use crate::kernels::theta_d;
use crate::spectra::{
    energy, energy_nonzero, gaussian_truncation, FrequencyRegion, SpectralWeight,
};
use crate::summation::KahanSum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const FOUR_PI2: f64 = 4.0 * PI * PI;

/// `sum_{k != 0} e^{-8 pi^2 ||k||^2 t} |S(k)|^2`, truncated at the box
/// where the remaining tail is below `1e-12 * N^2`.
pub fn l2_deviation_sq(ps: &TorusPointSet, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Precondition("heat time must be positive".into()));
    }
    // the L2 weight is the square of the heat multiplier, i.e. the
    // gaussian spectral weight at time 2t
    let k = gaussian_truncation(2.0 * t, ps.dim(), 1e-12);
    let all = energy(
        ps,
        &FrequencyRegion::cube(k as f64, ps.dim()),
        &SpectralWeight::Gaussian { t: 2.0 * t },
    )?;
    let n = ps.len() as f64;
    Ok((all - n * n).max(0.0))
}

/// The deviation field `N - sum_n theta_d(x - x_n, t)` sampled on the
/// uniform `grid_m^d` grid, row-major with the last axis fastest.
#[derive(Debug, Clone)]
pub struct HeatDeviationField {
    pub t: f64,
    pub grid_m: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    /// Pointwise bound on the theta-series truncation error of the samples.
    pub truncation_error: f64,
}

impl HeatDeviationField {
    pub fn sample(ps: &TorusPointSet, t: f64, grid_m: usize) -> Result<Self> {
        if t <= 0.0 {
            return Err(Error::Precondition("heat time must be positive".into()));
        }
        if grid_m < 2 {
            return Err(Error::Precondition("grid resolution must be >= 2".into()));
        }
        let dim = ps.dim();
        let n = ps.len() as f64;
        let total = grid_m.pow(dim as u32);
        let values: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut x = vec![0.0; dim];
                let mut rem = flat;
                for m in (0..dim).rev() {
                    x[m] = (rem % grid_m) as f64 / grid_m as f64;
                    rem /= grid_m;
                }
                let mut acc = KahanSum::new();
                let mut diff = vec![0.0; dim];
                for p in ps.iter() {
                    for m in 0..dim {
                        diff[m] = wrapped_diff(x[m], p[m]);
                    }
                    acc.add(theta_d(t, &diff));
                }
                n - acc.value()
            })
            .collect();
        Ok(Self {
            t,
            grid_m,
            dim,
            values,
            truncation_error: 1e-12 * n,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        kahan_mean(&self.values)
    }

    /// Grid `L^q` norm `(mean |v|^q)^{1/q}`; `q = infinity` gives the max.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        let mut acc = KahanSum::new();
        for v in &self.values {
            acc.add(v.abs().powf(q));
        }
        (acc.value() / self.values.len() as f64).powf(1.0 / q)
    }
}

fn kahan_mean(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value() / values.len() as f64
}

/// Grid maximum of the deviation field: a lower bound on the true
/// `L^infinity` norm (the flag records that reading).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupDeviationRecord {
    pub grid_max: f64,
    pub lower_bound_flag: bool,
}

pub fn sup_deviation(ps: &TorusPointSet, t: f64, grid_m: usize) -> Result<SupDeviationRecord> {
    if grid_m < 16 {
        return Err(Error::Precondition("sup scan needs grid_m >= 16".into()));
    }
    let field = HeatDeviationField::sample(ps, t, grid_m)?;
    Ok(SupDeviationRecord {
        grid_max: field.max_abs(),
        lower_bound_flag: true,
    })
}

/// Spectral lower bound on the squared L2 deviation: every nonzero mode
/// inside `||k|| <= t^{-1/2}` carries weight at least `e^{-8 pi^2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prop2Record {
    pub lhs: f64,
    pub rhs: f64,
    pub c: f64,
    pub holds: bool,
}

pub fn prop2_check(ps: &TorusPointSet, t: f64) -> Result<Prop2Record> {
    if t <= 0.0 {
        return Err(Error::Precondition("heat time must be positive".into()));
    }
    let lhs = l2_deviation_sq(ps, t)?;
    let c = (-8.0 * PI * PI).exp();
    let low = energy_nonzero(
        ps,
        &FrequencyRegion::Ball { radius: t.powf(-0.5), dim: ps.dim() },
    )?;
    let rhs = c * low;
    Ok(Prop2Record {
        lhs,
        rhs,
        c,
        holds: lhs >= rhs * (1.0 - 1e-9) - 1e-9,
    })
}

/// `(1/N) * grid max` of the deviation field: the duality right-hand side
/// sampled on a grid.
pub fn prop1_rhs(ps: &TorusPointSet, t: f64, grid_m: usize) -> Result<f64> {
    Ok(sup_deviation(ps, t, grid_m)?.grid_max / ps.len() as f64)
}

/// Duality pairing `|<e^{t Delta} f, N - sum delta>| / (N ||f||_1)` for
/// `f` the normalized indicator of the cube of side `width` at `center`,
/// evaluated by a midpoint product rule.
pub fn prop1_witness(ps: &TorusPointSet, t: f64, center: &[f64], width: f64) -> Result<f64> {
    if width <= 0.0 {
        return Err(Error::Precondition("bump width must be positive".into()));
    }
    if center.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: center.len(),
        });
    }
    let dim = ps.dim();
    let n = ps.len() as f64;
    const Q: usize = 12;
    let total = Q.pow(dim as u32);
    let mut acc = KahanSum::new();
    let mut x = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    for flat in 0..total {
        let mut rem = flat;
        for m in (0..dim).rev() {
            let frac = ((rem % Q) as f64 + 0.5) / Q as f64;
            x[m] = wrap_coord(center[m] + width * (frac - 0.5));
            rem /= Q;
        }
        let mut theta = KahanSum::new();
        for p in ps.iter() {
            for m in 0..dim {
                diff[m] = wrapped_diff(x[m], p[m]);
            }
            theta.add(theta_d(t, &diff));
        }
        acc.add(n - theta.value());
    }
    Ok((acc.value() / total as f64).abs() / n)
}

/// Heat times for the objective: one shared time or one per point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeSpec {
    Single(f64),
    PerPoint(Vec<f64>),
}

impl TimeSpec {
    fn resolve(&self, n: usize, cap: Option<f64>) -> Result<Vec<f64>> {
        let ts = match self {
            TimeSpec::Single(t) => vec![*t; n],
            TimeSpec::PerPoint(ts) => {
                if ts.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: ts.len() });
                }
                ts.clone()
            }
        };
        if ts.iter().any(|&t| t <= 0.0 || !t.is_finite()) {
            return Err(Error::Precondition("heat times must be positive".into()));
        }
        if let Some(cap) = cap {
            if ts.iter().any(|&t| t > cap * (1.0 + 1e-12)) {
                return Err(Error::Precondition("heat times exceed the cap".into()));
            }
        }
        Ok(ts)
    }
}

/// Value and exact gradients of the truncated spectral objective
/// `sum_{k != 0} |A(k)|^2`, `A(k) = sum_n e^{-4 pi^2 ||k||^2 t_n}
/// e^{2 pi i <k, x_n>}`.
#[derive(Debug, Clone)]
pub struct HeatObjective {
    pub value: f64,
    /// d/dx_{n,m}, flat row-major over (point, axis).
    pub grad_positions: Vec<f64>,
    /// d/dt_n.
    pub grad_times: Vec<f64>,
    pub truncation_k: i64,
}

impl HeatObjective {
    pub fn grad_norm(&self) -> f64 {
        let s: f64 = self
            .grad_positions
            .iter()
            .chain(&self.grad_times)
            .map(|g| g * g)
            .sum();
        s.sqrt()
    }
}

pub fn heat_objective_grad(
    ps: &TorusPointSet,
    t_spec: &TimeSpec,
    cap: Option<f64>,
) -> Result<HeatObjective> {
    let n = ps.len();
    let dim = ps.dim();
    let ts = t_spec.resolve(n, cap)?;
    let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_max = gaussian_truncation(2.0 * t_min, dim, 1e-12);

    // per-point, per-axis phasor tables e^{2 pi i k x} for k in -K..=K
    let width = (2 * k_max + 1) as usize;
    let mut phasors = vec![Complex64::new(1.0, 0.0); n * dim * width];
    for i in 0..n {
        let p = ps.point(i);
        for m in 0..dim {
            let base = (i * dim + m) * width;
            let step = Complex64::from_polar(1.0, 2.0 * PI * p[m]);
            let mut cur = Complex64::new(1.0, 0.0);
            for k in 0..=k_max {
                phasors[base + (k + k_max) as usize] = cur;
                if k < k_max {
                    cur *= step;
                }
            }
            for k in 1..=k_max {
                phasors[base + (k_max - k) as usize] =
                    phasors[base + (k_max + k) as usize].conj();
            }
        }
    }
    let phasor = |i: usize, m: usize, k: i64| phasors[(i * dim + m) * width + (k + k_max) as usize];

    let mut value = KahanSum::new();
    let mut grad_x = vec![0.0; n * dim];
    let mut grad_t = vec![0.0; n];
    let mut k = vec![-k_max; dim];
    let mut e_n = vec![Complex64::new(0.0, 0.0); n];
    let mut w_n = vec![0.0; n];
    loop {
        if k.iter().any(|&km| km != 0) {
            let k2: i64 = k.iter().map(|&km| km * km).sum();
            let mut a = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let mut e = Complex64::new(1.0, 0.0);
                for m in 0..dim {
                    e *= phasor(i, m, k[m]);
                }
                let w = (-FOUR_PI2 * k2 as f64 * ts[i]).exp();
                e_n[i] = e;
                w_n[i] = w;
                a += w * e;
            }
            value.add(a.norm_sqr());
            let a_conj = a.conj();
            for i in 0..n {
                let cross = a_conj * e_n[i];
                for m in 0..dim {
                    grad_x[i * dim + m] += -4.0 * PI * k[m] as f64 * w_n[i] * cross.im;
                }
                grad_t[i] += -2.0 * FOUR_PI2 * k2 as f64 * w_n[i] * cross.re;
            }
        }
        // odometer over the box
        let mut m = dim;
        loop {
            if m == 0 {
                return Ok(HeatObjective {
                    value: value.value(),
                    grad_positions: grad_x,
                    grad_times: grad_t,
                    truncation_k: k_max,
                });
            }
            m -= 1;
            if k[m] < k_max {
                k[m] += 1;
                for km in k.iter_mut().skip(m + 1) {
                    *km = -k_max;
                }
                break;
            }
        }
    }
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeRecord {
    pub final_set: TorusPointSet,
    pub final_times: TimeSpec,
    pub objective_trace: Vec<TraceRow>,
    pub stalled: bool,
}

impl OptimizeRecord {
    /// CSV with header `step,value,grad_norm,step_size`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,value,grad_norm,step_size\n");
        for row in &self.objective_trace {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e}\n",
                row.step, row.value, row.grad_norm, row.step_size
            ));
        }
        out
    }
}

/// Projected gradient descent on the truncated spectral objective:
/// positions re-wrapped to the torus each step, per-point times clamped
/// to `(0, cap]`, backtracking line search with at most 30 halvings.
/// A failed line search returns the best iterate with the stall flag set.
pub fn optimize_heat(
    ps0: &TorusPointSet,
    t_spec: &TimeSpec,
    steps: usize,
    step_size: f64,
) -> Result<OptimizeRecord> {
    if steps < 1 {
        return Err(Error::Precondition("steps must be >= 1".into()));
    }
    if step_size <= 0.0 {
        return Err(Error::Precondition("step_size must be positive".into()));
    }
    let n = ps0.len();
    let dim = ps0.dim();
    let cap = match t_spec {
        TimeSpec::Single(t) => *t,
        TimeSpec::PerPoint(ts) => ts.iter().cloned().fold(0.0, f64::max),
    };
    let per_point = matches!(t_spec, TimeSpec::PerPoint(_));
    let mut current = ps0.clone();
    let mut times = t_spec.resolve(n, None)?;
    let mut trace = Vec::new();
    let mut stalled = false;

    let assemble = |coords: &[f64]| TorusPointSet::from_flat(dim, coords.to_vec());
    let spec_of = |times: &[f64]| {
        if per_point {
            TimeSpec::PerPoint(times.to_vec())
        } else {
            TimeSpec::Single(times[0])
        }
    };

    let mut obj = heat_objective_grad(&current, &spec_of(&times), Some(cap))?;
    for step in 0..steps {
        let mut s = step_size;
        let mut accepted = None;
        for _ in 0..=30 {
            let mut coords: Vec<f64> = Vec::with_capacity(n * dim);
            for i in 0..n {
                let p = current.point(i);
                for m in 0..dim {
                    coords.push(p[m] - s * obj.grad_positions[i * dim + m]);
                }
            }
            let cand = assemble(&coords)?;
            let cand_times: Vec<f64> = if per_point {
                times
                    .iter()
                    .zip(&obj.grad_times)
                    .map(|(&t, &g)| (t - s * g).clamp(1e-9, cap))
                    .collect()
            } else {
                times.clone()
            };
            let cand_obj = heat_objective_grad(&cand, &spec_of(&cand_times), Some(cap))?;
            if cand_obj.value < obj.value {
                accepted = Some((cand, cand_times, cand_obj, s));
                break;
            }
            s /= 2.0;
        }
        match accepted {
            Some((cand, cand_times, cand_obj, used)) => {
                trace.push(TraceRow {
                    step,
                    value: obj.value,
                    grad_norm: obj.grad_norm(),
                    step_size: used,
                });
                current = cand;
                times = cand_times;
                obj = cand_obj;
            }
            None => {
                trace.push(TraceRow {
                    step,
                    value: obj.value,
                    grad_norm: obj.grad_norm(),
                    step_size: 0.0,
                });
                stalled = true;
                break;
            }
        }
    }
    trace.push(TraceRow {
        step: trace.len(),
        value: obj.value,
        grad_norm: obj.grad_norm(),
        step_size: 0.0,
    });
    Ok(OptimizeRecord {
        final_set: current,
        final_times: spec_of(&times),
        objective_trace: trace,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Generator;
    use crate::spectra::energy;

    fn random_set(n: usize, dim: usize, seed: u64) -> TorusPointSet {
        Generator::UniformRandom { n, dim }.generate(seed).unwrap()
    }

    #[test]
    fn l2_single_point_scalar_series() {
        let ps = TorusPointSet::new(1, &[vec![0.3]]).unwrap();
        let t = 0.02;
        let got = l2_deviation_sq(&ps, t).unwrap();
        let mut expect = 0.0;
        for k in 1..200 {
            expect += 2.0 * (-8.0 * PI * PI * (k * k) as f64 * t).exp();
        }
        assert!((got - expect).abs() < 1e-12 * expect);
        assert!(l2_deviation_sq(&ps, 0.0).is_err());
    }

    #[test]
    fn l2_lattice_vanishes() {
        let grid = Generator::Grid { p: 5, dim: 2 }.generate(0).unwrap();
        // truncation stays below the first surviving mode at ||k|| = 5
        let t = 0.3;
        assert!(gaussian_truncation(2.0 * t, 2, 1e-12) < 5);
        assert!(l2_deviation_sq(&grid, t).unwrap() < 1e-9);
    }

    #[test]
    fn l2_matches_grid_quadrature() {
        let ps = random_set(32, 2, 11);
        let t = 0.02;
        let spectral = l2_deviation_sq(&ps, t).unwrap();
        let field = HeatDeviationField::sample(&ps, t, 256).unwrap();
        let mut quad = KahanSum::new();
        for v in &field.values {
            quad.add(v * v);
        }
        let quad = quad.value() / field.values.len() as f64;
        assert!(
            (spectral - quad).abs() < 1e-6 * spectral,
            "spectral {spectral} quadrature {quad}"
        );
        // exact field has mean zero; the grid mean sits within tolerance
        assert!(field.mean().abs() < field.truncation_error + 1e-9);
    }

    #[test]
    fn sup_single_point_equilibrium() {
        let ps = TorusPointSet::new(2, &[vec![0.3, 0.8]]).unwrap();
        let rec = sup_deviation(&ps, 10.0, 16).unwrap();
        assert!(rec.grid_max < 1e-8);
        assert!(rec.lower_bound_flag);
        assert!(sup_deviation(&ps, 10.0, 8).is_err());
    }

    #[test]
    fn sup_lattice_beats_random() {
        let grid = Generator::Grid { p: 5, dim: 2 }.generate(0).unwrap();
        let random = random_set(25, 2, 3);
        let t = 1.0 / 25.0;
        let g = sup_deviation(&grid, t, 64).unwrap().grid_max;
        let r = sup_deviation(&random, t, 64).unwrap().grid_max;
        assert!(g < r, "grid {g} random {r}");
    }

    #[test]
    fn l2_below_linf_on_common_grid() {
        let ps = random_set(12, 2, 7);
        let field = HeatDeviationField::sample(&ps, 0.03, 64).unwrap();
        let l2 = field.lq_norm(2.0);
        let l4 = field.lq_norm(4.0);
        let linf = field.lq_norm(f64::INFINITY);
        assert!(l2 <= l4 + 1e-12 && l4 <= linf + 1e-12);
    }

    #[test]
    fn prop2_cases() {
        let ps = random_set(20, 2, 2);
        let rec = prop2_check(&ps, 0.01).unwrap();
        assert!(rec.holds);
        assert!(rec.lhs > 0.0);

        // lattice: no nonzero mode inside the ball, rhs degenerates to 0
        let grid = Generator::Grid { p: 5, dim: 2 }.generate(0).unwrap();
        let rec = prop2_check(&grid, 1.0 / 16.0).unwrap();
        assert!(rec.rhs.abs() < 1e-30);
        assert!(rec.holds);

        // single point: both sides are explicit scalar series
        let one = TorusPointSet::new(1, &[vec![0.4]]).unwrap();
        let rec = prop2_check(&one, 0.05).unwrap();
        let radius = 0.05f64.powf(-0.5); // ~4.47: modes 1..=4
        let inside = 2.0 * radius.floor();
        assert!((rec.rhs - rec.c * inside).abs() < 1e-12 * rec.rhs.max(1e-300));
        assert!(rec.holds);
    }

    #[test]
    fn prop1_witness_below_rhs() {
        let ps = random_set(16, 2, 9);
        let t = 0.02;
        let rhs = prop1_rhs(&ps, t, 64).unwrap();
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let center = [next(), next()];
            let width = 0.05 + 0.25 * next();
            let w = prop1_witness(&ps, t, &center, width).unwrap();
            assert!(w <= rhs + 1e-3, "witness {w} rhs {rhs}");
        }
    }

    #[test]
    fn prop1_witness_concentrates_at_argmax() {
        let ps = random_set(16, 2, 9);
        let t = 0.02;
        let grid_m = 64;
        let field = HeatDeviationField::sample(&ps, t, grid_m).unwrap();
        let (mut best, mut arg) = (0.0, 0usize);
        for (i, v) in field.values.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                arg = i;
            }
        }
        let center = [
            (arg / grid_m) as f64 / grid_m as f64,
            (arg % grid_m) as f64 / grid_m as f64,
        ];
        let rhs = best / ps.len() as f64;
        let w = prop1_witness(&ps, t, &center, 1.0 / grid_m as f64).unwrap();
        assert!(w >= 0.9 * rhs, "witness {w} rhs {rhs}");
    }

    #[test]
    fn prop1_full_mass_cancels() {
        let ps = random_set(10, 2, 4);
        let w = prop1_witness(&ps, 0.02, &[0.5, 0.5], 1.0).unwrap();
        assert!(w < 1e-9);
    }

    #[test]
    fn objective_reduces_to_l2_deviation() {
        let ps = random_set(10, 2, 5);
        let t = 0.03;
        let single = heat_objective_grad(&ps, &TimeSpec::Single(t), None).unwrap();
        let per_point = heat_objective_grad(&ps, &TimeSpec::PerPoint(vec![t; 10]), Some(t)).unwrap();
        let l2 = l2_deviation_sq(&ps, t).unwrap();
        assert!((single.value - l2).abs() < 1e-10 * l2);
        assert!((per_point.value - l2).abs() < 1e-10 * l2);
        assert!(heat_objective_grad(&ps, &TimeSpec::PerPoint(vec![2.0 * t; 10]), Some(t)).is_err());
        assert!(heat_objective_grad(&ps, &TimeSpec::Single(-1.0), None).is_err());
    }

    #[test]
    fn gradient_vanishes_at_lattice() {
        let grid = Generator::Grid { p: 4, dim: 2 }.generate(0).unwrap();
        let obj = heat_objective_grad(&grid, &TimeSpec::Single(0.05), None).unwrap();
        let gx: f64 = obj.grad_positions.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(gx < 1e-8, "grad norm {gx}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ps = random_set(6, 1, 13);
        let t = 0.03;
        let ts: Vec<f64> = (0..6).map(|i| t * (0.5 + 0.08 * i as f64)).collect();
        let spec = TimeSpec::PerPoint(ts.clone());
        let obj = heat_objective_grad(&ps, &spec, None).unwrap();
        let h = 1e-6;
        let scale = obj.grad_norm();
        let coords: Vec<f64> = ps.iter().flatten().copied().collect();
        for i in 0..6 {
            // position derivative
            let mut up = coords.clone();
            up[i] += h;
            let mut dn = coords.clone();
            dn[i] -= h;
            let f_up = heat_objective_grad(
                &TorusPointSet::from_flat(1, up).unwrap(),
                &spec,
                None,
            )
            .unwrap()
            .value;
            let f_dn = heat_objective_grad(
                &TorusPointSet::from_flat(1, dn).unwrap(),
                &spec,
                None,
            )
            .unwrap()
            .value;
            let fd = (f_up - f_dn) / (2.0 * h);
            assert!(
                (fd - obj.grad_positions[i]).abs() < 1e-5 * scale,
                "x[{i}]: fd {fd} exact {}",
                obj.grad_positions[i]
            );
            // time derivative
            let mut tu = ts.clone();
            tu[i] += h;
            let mut td = ts.clone();
            td[i] -= h;
            let f_up = heat_objective_grad(&ps, &TimeSpec::PerPoint(tu), None).unwrap().value;
            let f_dn = heat_objective_grad(&ps, &TimeSpec::PerPoint(td), None).unwrap().value;
            let fd = (f_up - f_dn) / (2.0 * h);
            assert!(
                (fd - obj.grad_times[i]).abs() < 1e-5 * scale,
                "t[{i}]: fd {fd} exact {}",
                obj.grad_times[i]
            );
        }
    }

    #[test]
    fn optimizer_stalls_at_lattice_critical_point() {
        let grid = Generator::Grid { p: 4, dim: 2 }.generate(0).unwrap();
        let rec = optimize_heat(&grid, &TimeSpec::Single(1.0 / 16.0), 5, 0.01).unwrap();
        assert!(rec.stalled);
        let first = rec.objective_trace[0].value;
        for row in &rec.objective_trace {
            assert!((row.value - first).abs() <= 1e-12 * first.max(1e-300));
        }
    }

    #[test]
    fn optimizer_decreases_from_random_start() {
        let ps = random_set(9, 2, 17);
        let rec = optimize_heat(&ps, &TimeSpec::Single(1.0 / 9.0), 40, 0.002).unwrap();
        let values: Vec<f64> = rec.objective_trace.iter().map(|r| r.value).collect();
        for pair in values.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        assert!(values.last().unwrap() < &values[0]);
        assert!(optimize_heat(&ps, &TimeSpec::Single(0.1), 0, 0.01).is_err());
        let csv = rec.trace_csv();
        assert!(csv.starts_with("step,value,grad_norm,step_size\n"));
        assert_eq!(csv.lines().count(), rec.objective_trace.len() + 1);
    }

    #[test]
    fn theta_domination_with_frozen_constants() {
        // theta_d(z, t) <= C_d t^{-d/2} e^{-||z||^2/(8t)} for t <= 1/4;
        // the ratio peaks at t = 1/4 with z at the far corner, giving
        // C_1 = 0.567, C_2 = 0.321 (frozen with a small margin)
        let (c1, c2) = (0.57, 0.33);
        for &t in &[0.25, 0.1, 0.01, 1e-3, 1e-4] {
            for i in 0..=100 {
                let z1 = 0.5 * i as f64 / 100.0;
                let r1 = theta_d(t, &[z1]) * t.sqrt() * (z1 * z1 / (8.0 * t)).exp();
                assert!(r1 <= c1, "d=1 t={t} z={z1}: ratio {r1}");
                for j in 0..=20 {
                    let z2 = 0.5 * j as f64 / 20.0;
                    let n2 = z1 * z1 + z2 * z2;
                    let r2 = theta_d(t, &[z1, z2]) * t * (n2 / (8.0 * t)).exp();
                    assert!(r2 <= c2, "d=2 t={t} z=({z1},{z2}): ratio {r2}");
                }
            }
        }
    }

    #[test]
    fn parseval_chain() {
        let ps = random_set(12, 2, 6);
        let x = 3.0f64;
        let t = 2.0 / (x * x);
        let k = gaussian_truncation(t, 2, 1e-12);
        let spectral = energy(
            &ps,
            &FrequencyRegion::cube(k as f64, 2),
            &SpectralWeight::Gaussian { t },
        )
        .unwrap();
        let mut pair = KahanSum::new();
        let mut diff = [0.0; 2];
        for a in ps.iter() {
            for b in ps.iter() {
                for m in 0..2 {
                    diff[m] = wrapped_diff(a[m], b[m]);
                }
                pair.add(theta_d(t, &diff));
            }
        }
        let pair = pair.value();
        assert!((spectral - pair).abs() < 1e-9 * spectral);
        let ball = energy(
            &ps,
            &FrequencyRegion::Ball { radius: x, dim: 2 },
            &SpectralWeight::Uniform,
        )
        .unwrap();
        assert!(ball <= (4.0 * PI * PI).exp() * spectral);
    }
}
