//! Point sets on the flat torus `[0,1)^d`, the torus metric, generators
//! and CSV file I/O.
//!
//! Coordinates are stored wrapped to `[0,1)`; wrapping uses `r - floor(r)`
//! so that `-0.25` becomes `0.75`. Point order is preserved and meaningful:
//! indices are stable identities used by the pairing machinery.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

/// Wrap a single coordinate into `[0,1)`.
#[inline]
pub fn wrap_coord(r: f64) -> f64 {
    let w = r - r.floor();
    // r - floor(r) can round to exactly 1.0 for tiny negative r
    if w >= 1.0 {
        w - 1.0
    } else {
        w
    }
}

/// Wrap a real vector onto the torus. Errors on non-finite entries.
pub fn wrap_to_torus(v: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
    }
    Ok(v.iter().copied().map(wrap_coord).collect())
}

/// Coordinate difference reduced to `[-1/2, 1/2]`.
#[inline]
pub fn wrapped_diff(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - (d).round()
}

/// `N` points in `[0,1)^d`, stored in a flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl TorusPointSet {
    /// Build from per-point coordinate vectors; inputs are wrapped mod 1.
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("point set must be nonempty".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend(wrap_to_torus(p)?);
        }
        Ok(Self { dim, coords })
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidInput("flat buffer length must be a positive multiple of dim".into()));
        }
        let wrapped = wrap_to_torus(&coords)?;
        Ok(Self { dim, coords: wrapped })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // N >= 1 by construction
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Euclidean torus distance between points `i` and `j`.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        torus_distance(self.point(i), self.point(j)).expect("same dim")
    }

    /// Translate every point by `shift` (wrapped).
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(|(a, s)| wrap_coord(a + s)))
            .collect();
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    /// Subset by indices, preserving the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty selection".into()));
        }
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    /// Deterministic order shuffle, for probing order sensitivity of the
    /// order-dependent pairing algorithm.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        self.select(&order).expect("nonempty")
    }

    /// Minimum pairwise torus distance (N >= 2).
    pub fn min_gap(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }
}

/// Euclidean norm of coordinatewise wrapped differences.
pub fn torus_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let s: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = wrapped_diff(a, b);
            d * d
        })
        .sum();
    Ok(s.sqrt())
}

/// Point-set generators. All are deterministic given `(kind, params, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `n` i.i.d. uniform points in `[0,1)^d`.
    UniformRandom { n: usize, dim: usize },
    /// The `p^d` points `(i_1/p, ..., i_d/p)`, lexicographic order.
    Grid { p: usize, dim: usize },
    /// `x_n = n * alpha mod 1`, `n = 0..N-1`.
    Kronecker { n: usize, alpha: Vec<f64> },
    /// Grid points, each perturbed by a uniform offset in `[-jitter, jitter]^d`.
    JitteredGrid { p: usize, dim: usize, jitter: f64 },
    /// Each base point duplicated with a uniform random offset of norm <= radius.
    ClusteredPairs { base: Box<Generator>, radius: f64 },
}

impl Generator {
    pub fn generate(&self, seed: u64) -> Result<TorusPointSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.generate_with(&mut rng)
    }

    fn generate_with(&self, rng: &mut ChaCha8Rng) -> Result<TorusPointSet> {
        match self {
            Generator::UniformRandom { n, dim } => {
                if *n < 1 {
                    return Err(Error::InvalidInput("N must be >= 1".into()));
                }
                let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
                TorusPointSet::from_flat(*dim, coords)
            }
            Generator::Grid { p, dim } => {
                if *p < 2 {
                    return Err(Error::InvalidInput("grid requires p >= 2".into()));
                }
                let mut coords = Vec::with_capacity(p.pow(*dim as u32) * dim);
                let total = p.pow(*dim as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let mut point = vec![0.0; *dim];
                    for m in (0..*dim).rev() {
                        point[m] = (rem % p) as f64 / *p as f64;
                        rem /= p;
                    }
                    coords.extend(point);
                }
                TorusPointSet::from_flat(*dim, coords)
            }
            Generator::Kronecker { n, alpha } => {
                if *n < 1 {
                    return Err(Error::InvalidInput("N must be >= 1".into()));
                }
                if alpha.is_empty() {
                    return Err(Error::InvalidInput("alpha must be nonempty".into()));
                }
                let dim = alpha.len();
                let mut coords = Vec::with_capacity(n * dim);
                for i in 0..*n {
                    for &a in alpha {
                        coords.push(wrap_coord(i as f64 * a));
                    }
                }
                TorusPointSet::from_flat(dim, coords)
            }
            Generator::JitteredGrid { p, dim, jitter } => {
                if *jitter < 0.0 {
                    return Err(Error::InvalidInput("jitter must be >= 0".into()));
                }
                let grid = Generator::Grid { p: *p, dim: *dim }.generate_with(rng)?;
                let coords = grid
                    .coords
                    .iter()
                    .map(|&c| wrap_coord(c + rng.gen_range(-*jitter..=*jitter)))
                    .collect();
                TorusPointSet::from_flat(*dim, coords)
            }
            Generator::ClusteredPairs { base, radius } => {
                if *radius < 0.0 {
                    return Err(Error::InvalidInput("offset radius must be >= 0".into()));
                }
                let base_set = base.generate_with(rng)?;
                clustered_pairs(&base_set, *radius, rng)
            }
        }
    }
}

/// Duplicate each base point with a uniform random offset of norm <= radius.
/// The output interleaves (base_i, base_i + offset_i) so each cluster is a
/// consecutive index pair.
fn clustered_pairs(base: &TorusPointSet, radius: f64, rng: &mut ChaCha8Rng) -> Result<TorusPointSet> {
    let dim = base.dim();
    let mut coords = Vec::with_capacity(base.len() * 2 * dim);
    for p in base.iter() {
        coords.extend_from_slice(p);
        // rejection-sample a uniform point of the d-ball of the given radius
        let offset = loop {
            let cand: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
            let norm2: f64 = cand.iter().map(|x| x * x).sum();
            if norm2 <= radius * radius {
                break cand;
            }
        };
        coords.extend(p.iter().zip(&offset).map(|(a, o)| wrap_coord(a + o)));
    }
    TorusPointSet::from_flat(dim, coords)
}

/// Build clustered pairs from an existing base set (deterministic in seed).
pub fn clustered_pairs_of(base: &TorusPointSet, radius: f64, seed: u64) -> Result<TorusPointSet> {
    if radius < 0.0 {
        return Err(Error::InvalidInput("offset radius must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    clustered_pairs(base, radius, &mut rng)
}

/// CSV format: optional header `# dim=d`, one point per row, `d`
/// comma-separated decimals. Coordinates are printed with shortest
/// round-trip formatting, so write/read is exact.
pub fn write_points(ps: &TorusPointSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# dim={}", ps.dim()).unwrap();
    for p in ps.iter() {
        let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<TorusPointSet> {
    let text = std::fs::read_to_string(path)?;
    parse_points(&text)
}

/// Parse the CSV point format from a string.
pub fn parse_points(text: &str) -> Result<TorusPointSet> {
    let mut declared_dim: Option<usize> = None;
    let mut dim: Option<usize> = None;
    let mut coords: Vec<f64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("dim=") {
                let d: usize = v.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad dim header {v:?}"),
                })?;
                if d == 0 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: "dim must be >= 1".into(),
                    });
                }
                declared_dim = Some(d);
            }
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad coordinate {f:?}"),
                })
            })
            .collect::<Result<_>>()?;
        let expected = declared_dim.or(dim);
        if let Some(d) = expected {
            if row.len() != d {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {d} columns, got {}", row.len()),
                });
            }
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "non-finite coordinate".into(),
            });
        }
        dim = Some(row.len());
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "no data rows".into(),
    })?;
    TorusPointSet::from_flat(dim, coords)
}
