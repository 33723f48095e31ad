//! Scalar kernels: Fejér, averaged Fejér, the logarithmic lower envelope,
//! Riesz-type kernels, the Gaussian bound kernel, and the periodized heat
//! (theta) kernel.

use crate::error::{Error, Result};
use crate::geometry::wrapped_diff;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

/// Tail target for theta-kernel truncations.
const THETA_EPS: f64 = 1e-14;

/// Threshold below which the Fejér closed form is replaced by its series,
/// avoiding cancellation at the removable singularities x in Z.
const SIN_EPS: f64 = 1e-8;

/// Tagged description of a pairwise kernel as a function of torus distance
/// (theta_heat is a function of the full difference vector).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Fejer { order: u32 },
    AveragedFejer { x: u32 },
    RieszQuartic { x: f64 },
    RieszQuadratic { n: f64 },
    GaussianHeat { x: f64, c: f64, dim: u32 },
    ThetaHeat { t: f64, dim: u32 },
    RieszClassical { s: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            KernelSpec::Fejer { .. } => true,
            KernelSpec::AveragedFejer { x } => *x >= 1,
            KernelSpec::RieszQuartic { x } => *x > 0.0,
            KernelSpec::RieszQuadratic { n } => *n > 0.0,
            KernelSpec::GaussianHeat { x, c, dim } => *x > 0.0 && *c > 0.0 && *dim >= 1,
            KernelSpec::ThetaHeat { t, dim } => *t > 0.0 && *dim >= 1,
            KernelSpec::RieszClassical { s } => *s > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid kernel parameters: {self:?}")))
        }
    }

    /// Singular kernels must never be evaluated at r = 0.
    pub fn is_singular(&self) -> bool {
        matches!(self, KernelSpec::RieszClassical { .. })
    }
}

/// Parses the compact form `name(key=value, ...)`, e.g.
/// `riesz_quartic(x=8)` or `gaussian_heat(x=4, c=1, dim=2)`. Names and
/// keys match the serde tags; whitespace around tokens is ignored; the
/// parsed spec is validated.
impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidInput(format!("kernel spec `{s}`: {msg}"));
        let (name, args) = match s.find('(') {
            None => (s, ""),
            Some(open) => {
                if !s.ends_with(')') {
                    return Err(bad("missing closing parenthesis"));
                }
                (&s[..open], &s[open + 1..s.len() - 1])
            }
        };
        let name = name.trim();
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for part in args.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad("arguments must look like key=value"))?;
            let k = k.trim();
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(bad("duplicate argument"));
            }
            pairs.push((k, v.trim()));
        }
        let mut used = vec![false; pairs.len()];
        let mut f64_arg = |key: &str| -> Result<f64> {
            let idx = pairs
                .iter()
                .position(|(k, _)| *k == key)
                .ok_or_else(|| bad(&format!("missing argument `{key}`")))?;
            used[idx] = true;
            pairs[idx]
                .1
                .parse::<f64>()
                .map_err(|_| bad(&format!("argument `{key}` is not a number")))
        };
        let spec = match name {
            "fejer" => KernelSpec::Fejer { order: as_u32(f64_arg("order")?, s)? },
            "averaged_fejer" => KernelSpec::AveragedFejer { x: as_u32(f64_arg("x")?, s)? },
            "riesz_quartic" => KernelSpec::RieszQuartic { x: f64_arg("x")? },
            "riesz_quadratic" => KernelSpec::RieszQuadratic { n: f64_arg("n")? },
            "gaussian_heat" => KernelSpec::GaussianHeat {
                x: f64_arg("x")?,
                c: f64_arg("c")?,
                dim: as_u32(f64_arg("dim")?, s)?,
            },
            "theta_heat" => KernelSpec::ThetaHeat {
                t: f64_arg("t")?,
                dim: as_u32(f64_arg("dim")?, s)?,
            },
            "riesz_classical" => KernelSpec::RieszClassical { s: f64_arg("s")? },
            _ => return Err(bad("unknown kernel name")),
        };
        if let Some(idx) = used.iter().position(|u| !u) {
            return Err(bad(&format!("unexpected argument `{}`", pairs[idx].0)));
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn as_u32(v: f64, ctx: &str) -> Result<u32> {
    if v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v) {
        Ok(v as u32)
    } else {
        Err(Error::InvalidInput(format!(
            "kernel spec `{ctx}`: expected a nonnegative integer, got {v}"
        )))
    }
}

/// Fejér kernel `F_N(x) = (1/(N+1)) (sin((N+1) pi x) / sin(pi x))^2`.
/// At the removable singularities the series fallback yields the limit N+1.
pub fn fejer(order: u32, x: f64) -> f64 {
    let np1 = (order + 1) as f64;
    let sp = (PI * x).sin();
    if sp.abs() < SIN_EPS {
        return fejer_series(order, x);
    }
    let num = (np1 * PI * x).sin();
    (num * num) / (np1 * sp * sp)
}

/// `sum_{|k| <= N} (1 - |k|/(N+1)) e^{2 pi i k x}`, real by symmetry.
fn fejer_series(order: u32, x: f64) -> f64 {
    let np1 = (order + 1) as f64;
    let mut sum = 1.0;
    // phasor recurrence for cos(2 pi k x)
    let (s1, c1) = (2.0 * PI * x).sin_cos();
    let (mut ck, mut sk) = (1.0, 0.0);
    for k in 1..=order {
        let (cn, sn) = (ck * c1 - sk * s1, sk * c1 + ck * s1);
        ck = cn;
        sk = sn;
        sum += 2.0 * (1.0 - k as f64 / np1) * ck;
    }
    sum
}

/// `(1/X) sum_{s=1}^{X} F_{s-1}(x)`; strictly positive for all x.
pub fn averaged_fejer(x_len: u32, x: f64) -> f64 {
    assert!(x_len >= 1, "averaging length must be >= 1");
    let sp = (PI * x).sin();
    if sp.abs() < SIN_EPS {
        let mut sum = 0.0;
        for s in 1..=x_len {
            sum += fejer_series(s - 1, x);
        }
        return sum / x_len as f64;
    }
    // (1/(X sin^2(pi x))) sum_{s=1}^{X} sin^2(s pi x)/s via phasor recurrence
    let (s1, c1) = (PI * x).sin_cos();
    let (mut cs, mut ss) = (1.0, 0.0);
    let mut sum = 0.0;
    for s in 1..=x_len {
        let (cn, sn) = (cs * c1 - ss * s1, ss * c1 + cs * s1);
        cs = cn;
        ss = sn;
        sum += ss * ss / s as f64;
    }
    sum / (x_len as f64 * sp * sp)
}

/// Which averaging length enters the logarithm of the lower envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogVariant {
    /// `log(e + X |x|)` — the form matching the averaging length.
    AveragingLength,
    /// `log(e + N |x|)` — the printed point-count form.
    PointCount,
}

/// Lower envelope `c * X log(e + X |x|_T) / (1 + X^2 |x|_T^2)` where
/// `|x|_T` is the wrapped one-dimensional distance to 0.
pub fn lemma1_lower(x_len: u32, x: f64, c: f64) -> f64 {
    lemma1_lower_with(x_len, x, c, x_len as f64)
}

/// Variant with a caller-supplied argument inside the logarithm.
pub fn lemma1_lower_with(x_len: u32, x: f64, c: f64, log_arg: f64) -> f64 {
    assert!(x_len >= 1 && c > 0.0);
    let xl = x_len as f64;
    let r = wrapped_diff(x, 0.0).abs();
    c * xl * (E + log_arg * r).ln() / (1.0 + xl * xl * r * r)
}

/// One-dimensional periodized heat kernel `[e^{t Delta} delta_0](z)`.
///
/// Representation switch: periodized Gaussian images for `t <= 1/(4 pi)`,
/// Fourier series for larger t; each converges fastest in its regime.
pub fn theta1(t: f64, z: f64) -> f64 {
    assert!(t > 0.0, "heat time must be positive");
    if t <= 1.0 / (4.0 * PI) {
        let zw = wrapped_diff(z, 0.0);
        let images = 1 + (4.0 * t * (1.0 / THETA_EPS).ln()).sqrt().ceil() as i64;
        let norm = 1.0 / (4.0 * PI * t).sqrt();
        let mut sum = 0.0;
        for j in -images..=images {
            let d = zw - j as f64;
            sum += norm * (-d * d / (4.0 * t)).exp();
        }
        sum
    } else {
        let mut sum = 1.0;
        let mut k = 1i64;
        loop {
            let w = (-4.0 * PI * PI * (k * k) as f64 * t).exp();
            if w < THETA_EPS {
                break;
            }
            sum += 2.0 * w * (2.0 * PI * k as f64 * z).cos();
            k += 1;
        }
        sum
    }
}

/// `d`-dimensional theta kernel: product over coordinates.
pub fn theta_d(t: f64, z: &[f64]) -> f64 {
    z.iter().map(|&zm| theta1(t, zm)).product()
}

/// Evaluate a kernel at torus distance `r` (theta kernels are evaluated at
/// the difference vector `(r, 0, ..., 0)`).
pub fn kernel_eval(spec: &KernelSpec, r: f64) -> Result<f64> {
    spec.validate()?;
    if r < 0.0 {
        return Err(Error::InvalidInput("distance must be nonnegative".into()));
    }
    Ok(match spec {
        KernelSpec::Fejer { order } => fejer(*order, r),
        KernelSpec::AveragedFejer { x } => averaged_fejer(*x, r),
        KernelSpec::RieszQuartic { x } => {
            let x2 = x * x;
            x2 / (1.0 + x2 * x2 * r * r * r * r)
        }
        KernelSpec::RieszQuadratic { n } => 1.0 / (1.0 + n * r * r),
        KernelSpec::GaussianHeat { x, c, dim } => {
            x.powi(*dim as i32) * (-c * x * x * r * r).exp()
        }
        KernelSpec::ThetaHeat { t, dim } => {
            let mut z = vec![0.0; *dim as usize];
            z[0] = r;
            theta_d(*t, &z)
        }
        KernelSpec::RieszClassical { s } => {
            if r == 0.0 {
                return Err(Error::SingularAtZero);
            }
            r.powf(-s)
        }
    })
}

/// Kernel value at a wrapped difference vector; radial kernels use the
/// Euclidean norm, theta kernels the coordinates.
pub fn kernel_eval_vec(spec: &KernelSpec, diff: &[f64]) -> Result<f64> {
    match spec {
        KernelSpec::ThetaHeat { t, .. } => Ok(theta_d(*t, diff)),
        _ => {
            let r = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            kernel_eval(spec, r)
        }
    }
}
