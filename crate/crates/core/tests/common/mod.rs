//! Random fixtures shared by the property and acceptance suites.
#![allow(dead_code)]

use bregman_core::{
    log_barrier_generator, make_generator, ConvexGenerator, Domain, GeneratorSpec,
    GroupedSampleSet, Point, SampleSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SquaredEuclidean,
    Mahalanobis,
    NegativeEntropy,
    LogBarrier,
}

pub const FAMILIES: [Family; 4] = [
    Family::SquaredEuclidean,
    Family::Mahalanobis,
    Family::NegativeEntropy,
    Family::LogBarrier,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random generator of `family` with `dim` coordinates (`dim ≥ 2` for the
/// simplex).
pub fn generator(family: Family, dim: usize, rng: &mut impl Rng) -> ConvexGenerator {
    match family {
        Family::SquaredEuclidean => make_generator(GeneratorSpec::SquaredEuclidean { dim }),
        Family::Mahalanobis => {
            // A = BᵀB + ½I
            let b: Vec<Vec<f64>> = (0..dim)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let matrix = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| {
                            let s: f64 = (0..dim).map(|k| b[k][i] * b[k][j]).sum();
                            s + if i == j { 0.5 } else { 0.0 }
                        })
                        .collect()
                })
                .collect();
            make_generator(GeneratorSpec::Mahalanobis { matrix })
        }
        Family::NegativeEntropy => {
            make_generator(GeneratorSpec::NegativeEntropySimplex { dim: dim.max(2) })
        }
        Family::LogBarrier => {
            let powers: Vec<u32> = (0..dim).map(|i| if i % 2 == 0 { 2 } else { 4 }).collect();
            log_barrier_generator(&powers)
        }
    }
    .unwrap()
}

/// Random interior point, kept away from the domain boundary.
pub fn point(g: &ConvexGenerator, rng: &mut impl Rng) -> Point {
    match g.domain() {
        Domain::FullSpace { dim } => {
            Point::new((0..*dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        }
        Domain::OpenSimplex { dim } => {
            let e: Vec<f64> = (0..*dim)
                .map(|_| rng.random_range(-2.0f64..2.0).exp())
                .collect();
            let s: f64 = e.iter().sum();
            Point::new(e.into_iter().map(|v| v / s).collect())
        }
        Domain::OpenBox { lowers, uppers } => Point::new(
            lowers
                .iter()
                .zip(uppers)
                .map(|(lo, hi)| {
                    let w = hi - lo;
                    rng.random_range(lo + 0.05 * w..hi - 0.05 * w)
                })
                .collect(),
        ),
    }
}

pub fn sample_set(g: &ConvexGenerator, n: usize, rng: &mut impl Rng) -> SampleSet {
    let points = (0..n).map(|_| point(g, rng)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    SampleSet::new(points, weights).unwrap()
}

pub fn grouped(
    g: &ConvexGenerator,
    groups: usize,
    max_per_group: usize,
    rng: &mut impl Rng,
) -> GroupedSampleSet {
    let sets = (0..groups)
        .map(|k| {
            let n = rng.random_range(1..=max_per_group);
            (format!("g{k}"), sample_set(g, n, rng))
        })
        .collect();
    let weights = (0..groups).map(|_| rng.random_range(0.1..1.0)).collect();
    GroupedSampleSet::new(sets, weights).unwrap()
}

/// Dimension for fixture `i`, cycling through 1..=3 (2..=3 on the simplex).
pub fn dim_for(family: Family, i: usize) -> usize {
    match family {
        Family::NegativeEntropy => 2 + i % 2,
        _ => 1 + i % 3,
    }
}

pub fn max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
