//! Means, variances and averaging in primal and dual coordinates.
//!
//! For a random `X` over the generator domain:
//!
//! - primal mean `𝔼X`, the minimizer of `z ↦ 𝔼 D(X‖z)`;
//! - dual mean `𝓔X = ∇F*(𝔼 ∇F(X))`, the minimizer of `z ↦ 𝔼 D(z‖X)`;
//! - primal variance `𝕍X = 𝔼 D(X‖𝔼X)`;
//! - dual variance `𝓥X = 𝔼 D(𝓔X‖X)`.
//!
//! Ensembles replace `X` by the average of `n` i.i.d. copies, averaged either
//! arithmetically (primal) or in dual coordinates (dual).

use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::ConvexGenerator;
use crate::math::{exp, ln, pairwise_sum};
use crate::point::{DualPoint, Point};
use crate::sample::SampleSet;

/// Largest exact ensemble distribution [`ensemble_distribution`] will build.
pub const DEFAULT_ENSEMBLE_CAP: u128 = 1_000_000;

/// Primal (arithmetic) or dual (conjugate-coordinate) operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Primal,
    Dual,
}

fn weighted_coords(rows: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let dim = rows[0].len();
    let mut terms = Vec::with_capacity(rows.len());
    (0..dim)
        .map(|j| {
            terms.clear();
            terms.extend(rows.iter().zip(weights).map(|(r, w)| w * r[j]));
            pairwise_sum(&terms)
        })
        .collect()
}

/// Weighted arithmetic mean `𝔼X`.
pub fn primal_mean(s: &SampleSet) -> Point {
    if s.len() == 1 {
        return s.points()[0].clone();
    }
    let rows: Vec<&[f64]> = s.points().iter().map(Point::coords).collect();
    Point::new(weighted_coords(&rows, s.weights()))
}

/// Dual mean `𝓔X = ∇F*(Σ wᵢ ∇F(xᵢ))`.
pub fn dual_mean(g: &ConvexGenerator, s: &SampleSet) -> Result<Point> {
    if s.len() == 1 {
        return Ok(s.points()[0].clone());
    }
    let grads = s
        .points()
        .iter()
        .map(|p| g.grad(p))
        .collect::<Result<Vec<DualPoint>>>()?;
    let rows: Vec<&[f64]> = grads.iter().map(DualPoint::coords).collect();
    g.grad_conj(&DualPoint::new(weighted_coords(&rows, s.weights())))
}

/// `𝕍X = Σ wᵢ D(xᵢ‖𝔼X)`; exactly zero for a single atom.
pub fn primal_variance(g: &ConvexGenerator, s: &SampleSet) -> Result<f64> {
    if s.len() == 1 {
        return Ok(0.0);
    }
    let mean = primal_mean(s);
    s.expect(|p| g.divergence(p, &mean))
}

/// `𝓥X = Σ wᵢ D(𝓔X‖xᵢ)`; exactly zero for a single atom.
pub fn dual_variance(g: &ConvexGenerator, s: &SampleSet) -> Result<f64> {
    if s.len() == 1 {
        return Ok(0.0);
    }
    let center = dual_mean(g, s)?;
    s.expect(|p| g.divergence(&center, p))
}

fn check_dims(points: &[Point]) -> Result<usize> {
    let first = points.first().ok_or(Error::Empty("point list"))?;
    let dim = first.dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
    }
    Ok(dim)
}

/// `ŷ = (1/n) Σ yᵢ`.
pub fn primal_average(points: &[Point]) -> Result<Point> {
    check_dims(points)?;
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    let w = alloc::vec![1.0 / points.len() as f64; points.len()];
    let rows: Vec<&[f64]> = points.iter().map(Point::coords).collect();
    Ok(Point::new(weighted_coords(&rows, &w)))
}

/// `z̄ = ∇F*((1/n) Σ ∇F(zᵢ))`; the normalized geometric mean on the simplex.
pub fn dual_average(g: &ConvexGenerator, points: &[Point]) -> Result<Point> {
    check_dims(points)?;
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    let w = alloc::vec![1.0 / points.len() as f64; points.len()];
    let grads = points
        .iter()
        .map(|p| g.grad(p))
        .collect::<Result<Vec<DualPoint>>>()?;
    let rows: Vec<&[f64]> = grads.iter().map(DualPoint::coords).collect();
    g.grad_conj(&DualPoint::new(weighted_coords(&rows, &w)))
}

/// Number of multisets of size `n` drawn from `m` atoms, `C(n + m − 1, n)`,
/// or `None` once it exceeds `limit`.
fn multiset_count(m: usize, n: usize, limit: u128) -> Option<u128> {
    // C(n + k, k) for k = 1..m-1, each step exact in integers
    let mut c: u128 = 1;
    for k in 1..m as u128 {
        c = c.checked_mul(n as u128 + k)? / k;
        if c > limit {
            return None;
        }
    }
    Some(c)
}

/// Averages atoms with multiplicities `counts` (summing to `n`).
fn average_of_counts(
    g: &ConvexGenerator,
    s: &SampleSet,
    grads: Option<&[DualPoint]>,
    counts: &[usize],
    n: usize,
) -> Result<Point> {
    if let Some(i) = counts.iter().position(|&k| k == n) {
        return Ok(s.points()[i].clone());
    }
    let mut rows: Vec<&[f64]> = Vec::new();
    let mut fracs = Vec::new();
    for (i, &k) in counts.iter().enumerate() {
        if k > 0 {
            rows.push(match grads {
                Some(gs) => gs[i].coords(),
                None => s.points()[i].coords(),
            });
            fracs.push(k as f64 / n as f64);
        }
    }
    let c = weighted_coords(&rows, &fracs);
    match grads {
        Some(_) => g.grad_conj(&DualPoint::new(c)),
        None => Ok(Point::new(c)),
    }
}

/// Multinomial probability `n!/∏kᵢ! ∏ wᵢ^kᵢ`.
fn multinomial_weight(weights: &[f64], counts: &[usize], ln_fact: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    // direct product while it stays finite, log space otherwise
    let mut coef = 1.0;
    let mut seen = 0usize;
    for &k in counts {
        for j in 1..=k {
            seen += 1;
            coef = coef * seen as f64 / j as f64;
        }
    }
    let mut prob = 1.0;
    for (&w, &k) in weights.iter().zip(counts) {
        for _ in 0..k {
            prob *= w;
        }
    }
    let direct = coef * prob;
    if coef.is_finite() && prob > 1e-280 {
        return direct;
    }
    let mut log_w = ln_fact[n];
    for (&w, &k) in weights.iter().zip(counts) {
        log_w += k as f64 * ln(w) - ln_fact[k];
    }
    exp(log_w)
}

/// Exact distribution of the average of `n` i.i.d. draws from `s`.
///
/// Enumerates the `C(n + |s| − 1, n)` multisets of atoms with multinomial
/// weights; `mode` selects primal or dual averaging of each multiset. Atoms
/// whose probability underflows to zero are dropped. Fails with
/// [`Error::CapExceeded`] above `cap` atoms; use [`ensemble_monte_carlo`]
/// then.
pub fn ensemble_distribution(
    g: &ConvexGenerator,
    s: &SampleSet,
    n: usize,
    mode: Space,
    cap: u128,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "ensemble size must be at least 1".into(),
        ));
    }
    if n == 1 {
        return Ok(s.clone());
    }
    let m = s.len();
    let atoms = multiset_count(m, n, cap).ok_or(Error::CapExceeded {
        atoms: multiset_count(m, n, u128::MAX).unwrap_or(u128::MAX),
        cap,
    })?;
    let grads = match mode {
        Space::Dual => Some(
            s.points()
                .iter()
                .map(|p| g.grad(p))
                .collect::<Result<Vec<DualPoint>>>()?,
        ),
        Space::Primal => None,
    };
    let mut ln_fact = alloc::vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + ln(k as f64);
    }

    let mut points = Vec::with_capacity(atoms as usize);
    let mut weights = Vec::with_capacity(atoms as usize);
    // lexicographically decreasing compositions, starting at (n, 0, ..., 0)
    let mut counts = alloc::vec![0usize; m];
    counts[0] = n;
    loop {
        let w = multinomial_weight(s.weights(), &counts, &ln_fact);
        if w > 0.0 {
            points.push(average_of_counts(g, s, grads.as_deref(), &counts, n)?);
            weights.push(w);
        }
        // next composition: move one unit from the last nonzero slot before
        // the tail into its successor, and gather the tail there
        let last = m - 1;
        let tail = counts[last];
        counts[last] = 0;
        let Some(i) = (0..last).rev().find(|&i| counts[i] > 0) else {
            break;
        };
        counts[i] -= 1;
        counts[i + 1] = tail + 1;
    }
    SampleSet::new(points, weights)
}

fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Monte Carlo stand-in for [`ensemble_distribution`]: `draws` uniformly
/// weighted atoms, each the average of `n` i.i.d. draws from `s`.
pub fn ensemble_monte_carlo<R: RngCore + ?Sized>(
    g: &ConvexGenerator,
    s: &SampleSet,
    n: usize,
    mode: Space,
    draws: usize,
    rng: &mut R,
) -> Result<SampleSet> {
    if n == 0 || draws == 0 {
        return Err(Error::InvalidConfig(
            "ensemble size and draw count must be positive".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for &w in s.weights() {
        acc += w;
        cumulative.push(acc);
    }
    let mut points = Vec::with_capacity(draws);
    let mut picked = Vec::with_capacity(n);
    for _ in 0..draws {
        picked.clear();
        for _ in 0..n {
            let u = uniform01(rng) * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(s.len() - 1);
            picked.push(s.points()[i].clone());
        }
        points.push(match mode {
            Space::Primal => primal_average(&picked)?,
            Space::Dual => dual_average(g, &picked)?,
        });
    }
    SampleSet::uniform(points)
}
