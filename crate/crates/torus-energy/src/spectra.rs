//! Exponential sums `S(k)` and spectral energies over frequency regions
//! with uniform, Fejér (triangular) and Gaussian weights.
//!
//! Energies over a box are evaluated with an incremental phasor recurrence
//! per point per axis: O(N*K) arithmetic for K frequencies and one
//! transcendental call per point per axis, not per (n,k) pair.

use crate::error::{Error, Result};
use crate::geometry::TorusPointSet;
use crate::summation::KahanSum;
use num_complex::Complex64;
use std::f64::consts::PI;

/// A finite set of integer frequency vectors: a box `|k_m| <= X_m` or a
/// Euclidean ball `||k|| <= X`. Enumeration is lexicographic and always
/// contains `k = 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum FrequencyRegion {
    Box { half_widths: Vec<f64> },
    Ball { radius: f64, dim: usize },
}

impl FrequencyRegion {
    pub fn cube(x: f64, dim: usize) -> Self {
        FrequencyRegion::Box {
            half_widths: vec![x; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FrequencyRegion::Box { half_widths } => half_widths.len(),
            FrequencyRegion::Ball { dim, .. } => *dim,
        }
    }

    /// Per-axis integer bound of the enclosing box.
    pub fn axis_bounds(&self) -> Vec<i64> {
        match self {
            FrequencyRegion::Box { half_widths } => {
                half_widths.iter().map(|&x| x.max(0.0).floor() as i64).collect()
            }
            FrequencyRegion::Ball { radius, dim } => {
                vec![radius.max(0.0).floor() as i64; *dim]
            }
        }
    }

    #[inline]
    pub fn contains(&self, k: &[i64]) -> bool {
        match self {
            FrequencyRegion::Box { half_widths } => k
                .iter()
                .zip(half_widths)
                .all(|(&km, &xm)| (km.abs() as f64) <= xm),
            FrequencyRegion::Ball { radius, .. } => {
                let n2: i64 = k.iter().map(|&km| km * km).sum();
                (n2 as f64) <= radius * radius
            }
        }
    }

    /// All member frequency vectors in lexicographic order.
    pub fn enumerate(&self) -> Vec<Vec<i64>> {
        let bounds = self.axis_bounds();
        let mut out = Vec::new();
        let mut k = vec![0i64; bounds.len()];
        enumerate_rec(&bounds, 0, &mut k, &mut |k| {
            if self.contains(k) {
                out.push(k.to_vec());
            }
        });
        out
    }

    pub fn member_count(&self) -> usize {
        let mut count = 0usize;
        let bounds = self.axis_bounds();
        let mut k = vec![0i64; bounds.len()];
        enumerate_rec(&bounds, 0, &mut k, &mut |k| {
            if self.contains(k) {
                count += 1;
            }
        });
        count
    }
}

fn enumerate_rec(bounds: &[i64], axis: usize, k: &mut [i64], visit: &mut impl FnMut(&[i64])) {
    if axis == bounds.len() {
        visit(k);
        return;
    }
    for km in -bounds[axis]..=bounds[axis] {
        k[axis] = km;
        enumerate_rec(bounds, axis + 1, k, visit);
    }
}

/// Weight applied to `|S(k)|^2` inside an energy sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralWeight {
    Uniform,
    /// Triangular product weight `prod_m (1 - |k_m|/X_m)`; box regions with
    /// `X_m >= 1` only.
    Fejer,
    /// Heat weight `exp(-4 pi^2 ||k||^2 t)`.
    Gaussian { t: f64 },
}

/// `S(k) = sum_n exp(2 pi i <k, x_n>)`.
pub fn exponential_sum(ps: &TorusPointSet, k: &[i64]) -> Result<Complex64> {
    if k.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: k.len(),
        });
    }
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for p in ps.iter() {
        let phase: f64 = p.iter().zip(k).map(|(&x, &km)| km as f64 * x).sum();
        let (s, c) = (2.0 * PI * phase).sin_cos();
        re.add(c);
        im.add(s);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// `|S(k)|^2` tabulated over the integer box `|k_m| <= bounds[m]`,
/// row-major with axis 0 slowest, `k_m = index - bounds[m]` per axis.
pub struct BoxSpectrum {
    bounds: Vec<i64>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

impl BoxSpectrum {
    /// Accumulate `S(k)` over all points with the phasor recurrence, then
    /// store `|S(k)|^2`.
    pub fn compute(ps: &TorusPointSet, bounds: &[i64]) -> Result<Self> {
        if bounds.len() != ps.dim() {
            return Err(Error::DimensionMismatch {
                expected: ps.dim(),
                got: bounds.len(),
            });
        }
        let dims: Vec<usize> = bounds.iter().map(|&b| (2 * b + 1) as usize).collect();
        let total: usize = dims.iter().product();
        let mut strides = vec![1usize; bounds.len()];
        for m in (0..bounds.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * dims[m + 1];
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        let mut tables: Vec<Vec<Complex64>> = dims.iter().map(|&d| vec![Complex64::new(0.0, 0.0); d]).collect();
        for p in ps.iter() {
            for (m, table) in tables.iter_mut().enumerate() {
                fill_phasor_table(p[m], bounds[m], table);
            }
            accumulate_outer(&mut acc, &tables, &dims);
        }
        let values = acc.iter().map(|s| s.norm_sqr()).collect();
        Ok(Self {
            bounds: bounds.to_vec(),
            strides,
            values,
        })
    }

    #[inline]
    pub fn index(&self, k: &[i64]) -> usize {
        k.iter()
            .zip(&self.bounds)
            .zip(&self.strides)
            .map(|((&km, &b), &s)| ((km + b) as usize) * s)
            .sum()
    }

    #[inline]
    pub fn value(&self, k: &[i64]) -> f64 {
        self.values[self.index(k)]
    }

    /// Visit every `(k, |S(k)|^2)` in lexicographic order.
    pub fn for_each(&self, mut visit: impl FnMut(&[i64], f64)) {
        let mut k = vec![0i64; self.bounds.len()];
        let bounds = self.bounds.clone();
        let mut idx = 0usize;
        enumerate_rec(&bounds, 0, &mut k, &mut |k| {
            visit(k, self.values[idx]);
            idx += 1;
        });
    }
}

/// Per-axis table of `exp(2 pi i k x)` for `k = -b..=b`, built from a single
/// transcendental call by repeated complex multiplication.
#[inline]
fn fill_phasor_table(x: f64, b: i64, table: &mut [Complex64]) {
    let (s, c) = (2.0 * PI * x).sin_cos();
    let w = Complex64::new(c, s);
    let b = b as usize;
    table[b] = Complex64::new(1.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);
    for j in 1..=b {
        cur *= w;
        table[b + j] = cur;
        table[b - j] = cur.conj();
    }
}

/// `acc[k] += prod_m tables[m][k_m]` over the whole box.
fn accumulate_outer(acc: &mut [Complex64], tables: &[Vec<Complex64>], dims: &[usize]) {
    match tables.len() {
        1 => {
            for (a, &p) in acc.iter_mut().zip(&tables[0]) {
                *a += p;
            }
        }
        2 => {
            let inner = dims[1];
            for (i, &pa) in tables[0].iter().enumerate() {
                let row = &mut acc[i * inner..(i + 1) * inner];
                for (a, &pb) in row.iter_mut().zip(&tables[1]) {
                    *a += pa * pb;
                }
            }
        }
        _ => {
            accumulate_outer_rec(acc, tables, dims, 0, Complex64::new(1.0, 0.0));
        }
    }
}

fn accumulate_outer_rec(
    acc: &mut [Complex64],
    tables: &[Vec<Complex64>],
    dims: &[usize],
    axis: usize,
    prefix: Complex64,
) {
    if axis == tables.len() - 1 {
        for (a, &p) in acc.iter_mut().zip(&tables[axis]) {
            *a += prefix * p;
        }
        return;
    }
    let inner: usize = dims[axis + 1..].iter().product();
    for (i, &p) in tables[axis].iter().enumerate() {
        accumulate_outer_rec(
            &mut acc[i * inner..(i + 1) * inner],
            tables,
            dims,
            axis + 1,
            prefix * p,
        );
    }
}

fn weight_at(weight: &SpectralWeight, region: &FrequencyRegion, k: &[i64]) -> Result<f64> {
    match weight {
        SpectralWeight::Uniform => Ok(1.0),
        SpectralWeight::Fejer => match region {
            FrequencyRegion::Box { half_widths } => {
                let mut w = 1.0;
                for (&km, &xm) in k.iter().zip(half_widths) {
                    if xm < 1.0 {
                        return Err(Error::Precondition("Fejér weight requires X_m >= 1".into()));
                    }
                    w *= 1.0 - (km.abs() as f64) / xm;
                }
                Ok(w)
            }
            FrequencyRegion::Ball { .. } => {
                Err(Error::Precondition("Fejér weight is defined for box regions".into()))
            }
        },
        SpectralWeight::Gaussian { t } => {
            let n2: i64 = k.iter().map(|&km| km * km).sum();
            Ok((-4.0 * PI * PI * (n2 as f64) * t).exp())
        }
    }
}

fn energy_impl(
    ps: &TorusPointSet,
    region: &FrequencyRegion,
    weight: &SpectralWeight,
    include_zero: bool,
) -> Result<f64> {
    if region.dim() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: region.dim(),
        });
    }
    if let SpectralWeight::Gaussian { t } = weight {
        if *t <= 0.0 {
            return Err(Error::Precondition("gaussian weight requires t > 0".into()));
        }
    }
    let spectrum = BoxSpectrum::compute(ps, &region.axis_bounds())?;
    let mut acc = KahanSum::new();
    let mut err: Option<Error> = None;
    spectrum.for_each(|k, s2| {
        if err.is_some() || !region.contains(k) {
            return;
        }
        if !include_zero && k.iter().all(|&km| km == 0) {
            return;
        }
        match weight_at(weight, region, k) {
            Ok(w) => acc.add(w * s2),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(acc.value())
}

/// `sum_k w(k) |S(k)|^2` over the region.
pub fn energy(ps: &TorusPointSet, region: &FrequencyRegion, weight: &SpectralWeight) -> Result<f64> {
    energy_impl(ps, region, weight, true)
}

/// Uniform-weight energy excluding the `k = 0` term.
pub fn energy_nonzero(ps: &TorusPointSet, region: &FrequencyRegion) -> Result<f64> {
    energy_impl(ps, region, &SpectralWeight::Uniform, false)
}

/// `sum_{k in Z^d} exp(-4 pi^2 ||k||^2 t) |S(k)|^2` over the full lattice,
/// truncated to a box whose certified tail is below `rel_tol * N^2`
/// (the value is at least `N^2` from the `k = 0` term).
pub fn energy_gaussian_all(ps: &TorusPointSet, t: f64, rel_tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Precondition("heat time must be positive".into()));
    }
    let k = gaussian_truncation(t, ps.dim(), rel_tol);
    energy(
        ps,
        &FrequencyRegion::cube(k as f64, ps.dim()),
        &SpectralWeight::Gaussian { t },
    )
}

/// Smallest box half-width `K` with
/// `N^2 * sum_{||k||_inf > K} exp(-4 pi^2 ||k||^2 t) < rel_tol * N^2`.
pub fn gaussian_truncation(t: f64, dim: usize, rel_tol: f64) -> i64 {
    let a = 4.0 * PI * PI * t;
    // one-dimensional theta value 1 + 2 sum_{m>=1} e^{-a m^2}
    let mut sigma1 = 1.0;
    let mut m = 1;
    loop {
        let term = 2.0 * (-a * (m * m) as f64).exp();
        sigma1 += term;
        if term < 1e-300 {
            break;
        }
        m += 1;
    }
    let mut k = 0i64;
    loop {
        // 1-D tail past K, geometric-series bound
        let head = (-a * ((k + 1) * (k + 1)) as f64).exp();
        let ratio = (-a * (2 * k + 3) as f64).exp();
        let tau1 = head / (1.0 - ratio);
        let tail = 2.0 * (dim as f64) * sigma1.powi(dim as i32 - 1) * tau1;
        if tail < rel_tol {
            return k;
        }
        k += 1;
    }
}
