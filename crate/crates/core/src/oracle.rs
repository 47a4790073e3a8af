//! Brute-force reference computations.
//!
//! These only evaluate `F`, `∇F` and the divergence; they never touch `∇F*`,
//! the means, or the variances, so they can certify those independently.
//! Comparisons should be made on objective values, which are robust to flat
//! regions around the optimum.

use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{ConvexGenerator, Domain};
use crate::math::{abs, max_abs_diff, pairwise_sum};
use crate::point::{DualPoint, Point};
use crate::sample::SampleSet;

const MAX_GRID_POINTS: u128 = 1 << 32;
const MIN_STEP: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Grid points per axis (lattice denominator on the simplex).
    pub grid_resolution: usize,
    /// A descent move must improve the objective by more than this.
    pub descent_tolerance: f64,
    pub fd_step: f64,
    pub max_iters: usize,
    /// Padding around the samples when the domain is unbounded.
    pub margin: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 256,
            descent_tolerance: 1e-15,
            fd_step: 1e-6,
            max_iters: 100_000,
            margin: 1.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grid_resolution > 0
            && self.max_iters > 0
            && self.descent_tolerance > 0.0
            && self.fd_step > 0.0
            && self.margin > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "oracle settings must all be positive".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimizer {
    pub point: Point,
    pub objective: f64,
    pub evaluations: usize,
}

enum SearchSpace {
    Simplex { dim: usize },
    Box { lowers: Vec<f64>, uppers: Vec<f64> },
}

impl SearchSpace {
    fn for_samples(g: &ConvexGenerator, s: &SampleSet, margin: f64) -> Result<Self> {
        let dim = g.dim();
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
        let bracket = |j: usize| {
            let (lo, hi) = s
                .points()
                .iter()
                .map(|p| p[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
                    (a.min(c), b.max(c))
                });
            (lo - margin, hi + margin)
        };
        match g.domain() {
            Domain::OpenSimplex { dim } => Ok(SearchSpace::Simplex { dim: *dim }),
            Domain::FullSpace { .. } => {
                let (lowers, uppers) = (0..dim).map(bracket).unzip();
                Ok(SearchSpace::Box { lowers, uppers })
            }
            Domain::OpenBox {
                lowers: dl,
                uppers: du,
            } => {
                let (lowers, uppers): (Vec<f64>, Vec<f64>) = (0..dim)
                    .map(|j| {
                        let (lo, hi) = bracket(j);
                        (lo.max(dl[j]), hi.min(du[j]))
                    })
                    .unzip();
                if lowers
                    .iter()
                    .zip(&uppers)
                    .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
                {
                    return Err(Error::OutsideDomain(
                        "samples do not bracket a search box".into(),
                    ));
                }
                Ok(SearchSpace::Box { lowers, uppers })
            }
        }
    }
}

/// Grid-pass objective built straight from the definition of `D`, with the
/// per-sample values of `F` and `∇F` computed once.
struct GridObjective<'a> {
    g: &'a ConvexGenerator,
    toward: bool,
    dim: usize,
    weights: &'a [f64],
    xs: Vec<f64>,
    /// `F(xᵢ) − ⟨∇F(xᵢ), xᵢ⟩` (toward) or `F(xᵢ)` (from).
    offsets: Vec<f64>,
    grads: Vec<f64>,
    gz: Vec<f64>,
}

impl<'a> GridObjective<'a> {
    fn new(g: &'a ConvexGenerator, s: &'a SampleSet, toward: bool) -> Self {
        let dim = g.dim();
        let xs: Vec<f64> = s
            .points()
            .iter()
            .flat_map(|p| p.coords().iter().copied())
            .collect();
        let mut grads = alloc::vec![0.0; if toward { xs.len() } else { 0 }];
        let offsets = xs
            .chunks(dim)
            .enumerate()
            .map(|(i, x)| {
                let f = g.eval_unchecked(x);
                if toward {
                    let gi = &mut grads[i * dim..(i + 1) * dim];
                    g.grad_unchecked(x, gi);
                    f - crate::math::dot(gi, x)
                } else {
                    f
                }
            })
            .collect();
        Self {
            g,
            toward,
            dim,
            weights: s.weights(),
            xs,
            offsets,
            grads,
            gz: alloc::vec![0.0; dim],
        }
    }

    fn value(&mut self, z: &[f64]) -> f64 {
        let fz = self.g.eval_unchecked(z);
        let d = self.dim;
        let mut total = 0.0;
        if self.toward {
            for (i, w) in self.weights.iter().enumerate() {
                let gi = &self.grads[i * d..(i + 1) * d];
                total += w * (fz - self.offsets[i] - crate::math::dot(gi, z));
            }
        } else {
            self.g.grad_unchecked(z, &mut self.gz);
            for (i, w) in self.weights.iter().enumerate() {
                let x = &self.xs[i * d..(i + 1) * d];
                let inner: f64 = self
                    .gz
                    .iter()
                    .zip(x)
                    .zip(z)
                    .map(|((g, a), b)| g * (a - b))
                    .sum();
                total += w * (self.offsets[i] - fz - inner);
            }
        }
        total
    }
}

struct Search<'a, F: Fn(&Point) -> f64> {
    objective: F,
    cfg: &'a OracleConfig,
    evaluations: usize,
}

impl<F: Fn(&Point) -> f64> Search<'_, F> {
    fn eval(&mut self, p: &Point) -> f64 {
        self.evaluations += 1;
        let v = (self.objective)(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Best lattice point under `fast`; its objective is then recomputed
    /// with the closed-form divergence.
    fn grid(&mut self, space: &SearchSpace, fast: &mut GridObjective<'_>) -> Result<(Point, f64)> {
        let n = self.cfg.grid_resolution;
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut consider = |this: &mut Self, c: &[f64]| {
            this.evaluations += 1;
            let v = fast.value(c);
            if !v.is_nan() && best.as_ref().map_or(true, |(_, b)| v < *b) {
                best = Some((c.to_vec(), v));
            }
        };
        match space {
            SearchSpace::Box { lowers, uppers } => {
                let dim = lowers.len();
                let total = (n as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
                if total > MAX_GRID_POINTS {
                    return Err(Error::InvalidConfig("oracle grid too large".into()));
                }
                let axes: Vec<Vec<f64>> = (0..dim)
                    .map(|j| {
                        (0..n)
                            .map(|k| {
                                lowers[j] + (k as f64 + 0.5) / n as f64 * (uppers[j] - lowers[j])
                            })
                            .collect()
                    })
                    .collect();
                let mut idx = alloc::vec![0usize; dim];
                let mut c: Vec<f64> = axes.iter().map(|a| a[0]).collect();
                'outer: loop {
                    consider(self, &c);
                    // odometer over the last axis first
                    for j in (0..dim).rev() {
                        idx[j] += 1;
                        if idx[j] < n {
                            c[j] = axes[j][idx[j]];
                            continue 'outer;
                        }
                        idx[j] = 0;
                        c[j] = axes[j][0];
                    }
                    break;
                }
            }
            SearchSpace::Simplex { dim } => {
                let dim = *dim;
                let mut counts = alloc::vec![0usize; dim];
                counts[0] = n;
                let mut c = alloc::vec![0.0; dim];
                loop {
                    for (x, &k) in c.iter_mut().zip(&counts) {
                        *x = k as f64 / n as f64;
                    }
                    consider(self, &c);
                    let last = dim - 1;
                    let tail = counts[last];
                    counts[last] = 0;
                    let Some(i) = (0..last).rev().find(|&i| counts[i] > 0) else {
                        break;
                    };
                    counts[i] -= 1;
                    counts[i + 1] = tail + 1;
                }
            }
        }
        let Some((c, _)) = best else {
            return Err(Error::NonFinite("oracle objective on every grid point"));
        };
        let p = Point::new(c);
        let v = self.eval(&p);
        if v.is_finite() {
            Ok((p, v))
        } else {
            Err(Error::NonFinite("oracle objective at the best grid point"))
        }
    }

    /// Compass search with step halving from the best grid point.
    fn refine(&mut self, space: &SearchSpace, start: (Point, f64)) -> (Point, f64) {
        let n = self.cfg.grid_resolution as f64;
        let directions: Vec<Vec<f64>> = match space {
            SearchSpace::Box { lowers, uppers } => {
                let dim = lowers.len();
                (0..dim)
                    .flat_map(|j| {
                        let h = (uppers[j] - lowers[j]) / n;
                        [h, -h].into_iter().map(move |s| {
                            let mut d = alloc::vec![0.0; dim];
                            d[j] = s;
                            d
                        })
                    })
                    .collect()
            }
            SearchSpace::Simplex { dim } => {
                let dim = *dim;
                (0..dim)
                    .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let mut d = alloc::vec![0.0; dim];
                        d[i] = 1.0 / n;
                        d[j] = -1.0 / n;
                        d
                    })
                    .collect()
            }
        };
        let longest = directions
            .iter()
            .map(|d| d.iter().map(|c| abs(*c)).fold(0.0, f64::max))
            .fold(0.0, f64::max);

        let (mut x, mut fx) = start;
        let mut scale = 1.0;
        let mut iters = 0;
        while scale * longest > MIN_STEP && iters < self.cfg.max_iters {
            iters += 1;
            let mut best: Option<(Point, f64)> = None;
            for d in &directions {
                let cand = Point::new(
                    x.coords()
                        .iter()
                        .zip(d)
                        .map(|(a, b)| a + scale * b)
                        .collect(),
                );
                let v = self.eval(&cand);
                if v < fx - self.cfg.descent_tolerance
                    && best.as_ref().map_or(true, |(_, b)| v < *b)
                {
                    best = Some((cand, v));
                }
            }
            match best {
                Some((p, v)) => {
                    x = p;
                    fx = v;
                }
                None => scale *= 0.5,
            }
        }
        (x, fx)
    }
}

fn minimize<F: Fn(&Point) -> f64>(
    g: &ConvexGenerator,
    s: &SampleSet,
    cfg: &OracleConfig,
    toward: bool,
    objective: F,
) -> Result<Minimizer> {
    cfg.validate()?;
    let space = SearchSpace::for_samples(g, s, cfg.margin)?;
    let mut search = Search {
        objective,
        cfg,
        evaluations: 0,
    };
    let start = search.grid(&space, &mut GridObjective::new(g, s, toward))?;
    let (point, objective) = search.refine(&space, start);
    Ok(Minimizer {
        point,
        objective,
        evaluations: search.evaluations,
    })
}

fn weighted(s: &SampleSet, f: impl Fn(&Point) -> Result<f64>) -> f64 {
    let mut terms = Vec::with_capacity(s.len());
    for (p, w) in s.iter() {
        match f(p) {
            Ok(v) => terms.push(w * v),
            Err(_) => return f64::INFINITY,
        }
    }
    pairwise_sum(&terms)
}

/// `𝔼 D(z‖X)` for the samples of `s`.
pub fn objective_to(g: &ConvexGenerator, s: &SampleSet, z: &Point) -> f64 {
    weighted(s, |x| g.divergence(z, x))
}

/// `𝔼 D(X‖z)` for the samples of `s`.
pub fn objective_from(g: &ConvexGenerator, s: &SampleSet, z: &Point) -> f64 {
    weighted(s, |x| g.divergence(x, z))
}

/// Brute-force `argmin_z 𝔼 D(z‖X)`: grid search, then compass descent.
pub fn argmin_to(g: &ConvexGenerator, s: &SampleSet, cfg: &OracleConfig) -> Result<Minimizer> {
    minimize(g, s, cfg, true, |z| objective_to(g, s, z))
}

/// Brute-force `argmin_z 𝔼 D(X‖z)`.
pub fn argmin_from(g: &ConvexGenerator, s: &SampleSet, cfg: &OracleConfig) -> Result<Minimizer> {
    minimize(g, s, cfg, false, |z| objective_from(g, s, z))
}

/// Central finite differences of `F` at `x`.
pub fn fd_gradient(g: &ConvexGenerator, x: &Point, cfg: &OracleConfig) -> Result<DualPoint> {
    let h = cfg.fd_step;
    let margin = g.domain().boundary_margin(x.coords());
    if !(margin >= 10.0 * h) {
        return Err(Error::BoundaryProximity { margin });
    }
    let mut out = Vec::with_capacity(x.dim());
    let mut probe = x.coords().to_vec();
    for j in 0..x.dim() {
        let c = probe[j];
        probe[j] = c + h;
        let up = g.eval(&Point::from(probe.as_slice()))?;
        probe[j] = c - h;
        let down = g.eval(&Point::from(probe.as_slice()))?;
        probe[j] = c;
        out.push((up - down) / (2.0 * h));
    }
    Ok(DualPoint::new(out))
}

/// Largest discrepancy between `∇F(x)` and its finite-difference estimate,
/// relative to `max(1, ‖∇F(x)‖∞)`. On the simplex both are compared after
/// removing their mean, since the gradient is only defined up to a constant
/// there.
pub fn gradient_check(g: &ConvexGenerator, x: &Point, cfg: &OracleConfig) -> Result<f64> {
    let mut fd = fd_gradient(g, x, cfg)?.into_vec();
    let mut an = g.grad(x)?.into_vec();
    if matches!(g.domain(), Domain::OpenSimplex { .. }) {
        for v in [&mut fd, &mut an] {
            let m = pairwise_sum(v) / v.len() as f64;
            v.iter_mut().for_each(|c| *c -= m);
        }
    }
    let scale = an.iter().map(|c| abs(*c)).fold(1.0, f64::max);
    Ok(max_abs_diff(&fd, &an) / scale)
}
