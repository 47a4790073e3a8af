//! Convex generators and the Bregman divergences they induce.
//!
//! Four families are built in:
//!
//! | Variant | `F(x)` | Domain | `∇F*` |
//! |------|--------|--------|-------|
//! | squared-euclidean | `‖x‖²` | `ℝ^d` | `x*/2` |
//! | mahalanobis | `xᵀAx` | `ℝ^d` | `A⁻¹x*/2` (Cholesky, factored once) |
//! | negative-entropy-simplex | `Σ xᵢ log xᵢ` | open simplex | softmax |
//! | separable-custom | `Σ fᵢ(xᵢ)` | open box | per-coordinate bisection |
//!
//! On the simplex `∇F` is only defined up to an additive constant. The
//! representative used here is the raw log-coordinates `log xᵢ`; with it the
//! conjugate gradient is the softmax map and dual averaging becomes the
//! normalized geometric mean.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{self, abs, exp, ln, pairwise_sum, powi, Cholesky};
use crate::point::{DualPoint, Point};

/// Allowed deviation of `Σ xᵢ` from 1 for simplex membership.
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-9;
/// Second-argument simplex coordinates below this are rejected where they
/// carry mass in the first argument.
pub const BOUNDARY_FLOOR: f64 = 1e-12;
/// Absolute tolerance of the bisection that inverts separable derivatives.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
pub const BISECTION_MAX_ITERS: usize = 200;

const CONVEXITY_PROBES: usize = 64;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    FullSpace { dim: usize },
    OpenBox { lowers: Vec<f64>, uppers: Vec<f64> },
    OpenSimplex { dim: usize },
}

impl Domain {
    pub fn open_box(lowers: Vec<f64>, uppers: Vec<f64>) -> Result<Self> {
        if lowers.is_empty() {
            return Err(Error::Empty("box"));
        }
        if lowers.len() != uppers.len() {
            return Err(Error::DimensionMismatch {
                expected: lowers.len(),
                got: uppers.len(),
            });
        }
        for (i, (&lo, &hi)) in lowers.iter().zip(&uppers).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidInterval {
                    index: i,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Domain::OpenBox { lowers, uppers })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::FullSpace { dim } | Domain::OpenSimplex { dim } => *dim,
            Domain::OpenBox { lowers, .. } => lowers.len(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !x.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(())
    }

    /// Interior membership.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        match self {
            Domain::FullSpace { .. } => Ok(()),
            Domain::OpenBox { lowers, uppers } => {
                for (i, &c) in x.iter().enumerate() {
                    if !(c > lowers[i] && c < uppers[i]) {
                        return Err(Error::OutsideDomain(format!(
                            "coordinate {i} = {c} not in ({}, {})",
                            lowers[i], uppers[i]
                        )));
                    }
                }
                Ok(())
            }
            Domain::OpenSimplex { .. } => {
                if let Some((i, &c)) = x.iter().enumerate().find(|(_, &c)| !(c > 0.0)) {
                    return Err(Error::OutsideDomain(format!(
                        "simplex coordinate {i} = {c} is not positive"
                    )));
                }
                check_simplex_sum(x)
            }
        }
    }

    /// Membership for points used only as the first divergence argument:
    /// like [`Domain::check`], but simplex vertices and faces are allowed.
    pub fn check_first_argument(&self, x: &[f64]) -> Result<()> {
        match self {
            Domain::OpenSimplex { .. } => {
                self.check_dim(x)?;
                if let Some((i, &c)) = x.iter().enumerate().find(|(_, &c)| c < 0.0) {
                    return Err(Error::OutsideDomain(format!(
                        "simplex coordinate {i} = {c} is negative"
                    )));
                }
                check_simplex_sum(x)
            }
            _ => self.check(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    /// Smallest coordinate-wise distance to where `F` stops being defined.
    /// For the simplex this is `min xᵢ`, since `F` extends to the positive
    /// orthant.
    pub fn boundary_margin(&self, x: &[f64]) -> f64 {
        match self {
            Domain::FullSpace { .. } => f64::INFINITY,
            Domain::OpenBox { lowers, uppers } => x
                .iter()
                .enumerate()
                .map(|(i, &c)| (c - lowers[i]).min(uppers[i] - c))
                .fold(f64::INFINITY, f64::min),
            Domain::OpenSimplex { .. } => x.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

fn check_simplex_sum(x: &[f64]) -> Result<()> {
    let s = pairwise_sum(x);
    if abs(s - 1.0) > SIMPLEX_SUM_TOLERANCE {
        return Err(Error::OutsideDomain(format!(
            "simplex coordinates sum to {s}"
        )));
    }
    Ok(())
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One coordinate of a separable generator: a strictly convex `f` on an open
/// interval, with its derivative.
#[derive(Clone)]
pub struct Piece {
    value: ScalarFn,
    derivative: ScalarFn,
    lower: f64,
    upper: f64,
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Piece")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl Piece {
    /// `lower`/`upper` may be infinite.
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            lower,
            upper,
        }
    }

    /// `f(t) = −log(1 − t^p)` on `(−1, 1)` for an even power `p ≥ 2`.
    pub fn log_barrier(power: u32) -> Result<Self> {
        if power < 2 || power % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "log-barrier power must be even and at least 2, got {power}"
            )));
        }
        let p = power;
        Ok(Self::new(
            move |t| -libm::log1p(-powi(t, p)),
            move |t| f64::from(p) * powi(t, p - 1) / (1.0 - powi(t, p)),
            -1.0,
            1.0,
        ))
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }

    fn contains(&self, t: f64) -> bool {
        t > self.lower && t < self.upper
    }

    /// A finite point inside the interval, and a finite probing window.
    fn window(&self) -> (f64, f64) {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, true) => (self.lower, self.upper),
            (true, false) => (self.lower, self.lower + 16.0),
            (false, true) => (self.upper - 16.0, self.upper),
            (false, false) => (-8.0, 8.0),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.lower.is_nan() || self.upper.is_nan() || self.lower >= self.upper {
            return Err(Error::InvalidInterval {
                index,
                lower: self.lower,
                upper: self.upper,
            });
        }
        let (lo, hi) = self.window();
        let width = hi - lo;
        let mut prev: Option<f64> = None;
        for k in 0..CONVEXITY_PROBES {
            let t = lo + (k as f64 + 0.5) / CONVEXITY_PROBES as f64 * width;
            let d = self.derivative(t);
            if !d.is_finite() || !self.value(t).is_finite() {
                return Err(Error::NonFinite("separable piece"));
            }
            if let Some(p) = prev {
                if !(d > p) {
                    return Err(Error::NonConvexPiece { index, at: t });
                }
            }
            prev = Some(d);
        }
        Ok(())
    }

    /// Solves `f'(t) = target` by bracketing bisection.
    fn invert_derivative(&self, index: usize, target: f64) -> Result<f64> {
        let fail = || Error::ConjugateFailure { index, target };
        if !target.is_finite() {
            return Err(fail());
        }
        let (wlo, whi) = self.window();
        let anchor = 0.5 * (wlo + whi);
        let d_anchor = self.derivative(anchor);
        if d_anchor == target {
            return Ok(anchor);
        }
        // bracket [a, b] with f'(a) < target < f'(b); open endpoints are never evaluated
        let (mut a, mut b) = if d_anchor < target {
            if self.upper.is_finite() {
                (anchor, self.upper)
            } else {
                let mut step = 1.0;
                loop {
                    let t = anchor + step;
                    if !t.is_finite() {
                        return Err(fail());
                    }
                    if self.derivative(t) >= target {
                        break (anchor + step / 2.0, t);
                    }
                    step *= 2.0;
                }
            }
        } else if self.lower.is_finite() {
            (self.lower, anchor)
        } else {
            let mut step = 1.0;
            loop {
                let t = anchor - step;
                if !t.is_finite() {
                    return Err(fail());
                }
                if self.derivative(t) <= target {
                    break (t, anchor - step / 2.0);
                }
                step *= 2.0;
            }
        };
        for _ in 0..BISECTION_MAX_ITERS {
            if b - a <= BISECTION_TOLERANCE {
                break;
            }
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let d = self.derivative(mid);
            if d.is_nan() {
                return Err(fail());
            }
            if d < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        if b - a > BISECTION_TOLERANCE && 0.5 * (a + b) > a && 0.5 * (a + b) < b {
            return Err(fail());
        }
        if a == self.lower || b == self.upper {
            // target is beyond what the open interval can represent
            return Err(fail());
        }
        Ok(0.5 * (a + b))
    }
}

/// Which generator to build; see [`make_generator`].
#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    SquaredEuclidean {
        dim: usize,
    },
    /// `matrix` is a symmetric positive-definite `d×d` matrix, row by row.
    Mahalanobis {
        matrix: Vec<Vec<f64>>,
    },
    NegativeEntropySimplex {
        dim: usize,
    },
    SeparableCustom {
        pieces: Vec<Piece>,
    },
}

#[derive(Debug, Clone)]
enum Kind {
    SquaredEuclidean,
    Mahalanobis { matrix: Vec<f64>, factor: Cholesky },
    NegativeEntropy,
    Separable(Vec<Piece>),
}

/// A strictly convex differentiable `F`, immutable once built.
#[derive(Debug, Clone)]
pub struct ConvexGenerator {
    name: String,
    domain: Domain,
    kind: Kind,
}

pub fn make_generator(spec: GeneratorSpec) -> Result<ConvexGenerator> {
    match spec {
        GeneratorSpec::SquaredEuclidean { dim } => {
            if dim == 0 {
                return Err(Error::Empty("dimension"));
            }
            Ok(ConvexGenerator {
                name: "squared-euclidean".to_string(),
                domain: Domain::FullSpace { dim },
                kind: Kind::SquaredEuclidean,
            })
        }
        GeneratorSpec::Mahalanobis { matrix } => {
            let dim = matrix.len();
            if dim == 0 {
                return Err(Error::Empty("matrix"));
            }
            for (row, r) in matrix.iter().enumerate() {
                if r.len() != dim {
                    return Err(Error::NotSquare {
                        rows: dim,
                        row,
                        cols: r.len(),
                    });
                }
                if !r.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("matrix"));
                }
            }
            for (i, row) in matrix.iter().enumerate() {
                for (j, other) in matrix.iter().enumerate().take(i) {
                    let (a, b) = (row[j], other[i]);
                    if abs(a - b) > SYMMETRY_TOLERANCE * abs(a).max(abs(b)).max(1.0) {
                        return Err(Error::NotSymmetric { row: i, col: j });
                    }
                }
            }
            let flat: Vec<f64> = matrix.into_iter().flatten().collect();
            let factor = Cholesky::factor(&flat, dim)?;
            Ok(ConvexGenerator {
                name: "mahalanobis".to_string(),
                domain: Domain::FullSpace { dim },
                kind: Kind::Mahalanobis {
                    matrix: flat,
                    factor,
                },
            })
        }
        GeneratorSpec::NegativeEntropySimplex { dim } => {
            if dim < 2 {
                return Err(Error::InvalidConfig(format!(
                    "simplex dimension must be at least 2, got {dim}"
                )));
            }
            Ok(ConvexGenerator {
                name: "negative-entropy-simplex".to_string(),
                domain: Domain::OpenSimplex { dim },
                kind: Kind::NegativeEntropy,
            })
        }
        GeneratorSpec::SeparableCustom { pieces } => {
            if pieces.is_empty() {
                return Err(Error::Empty("piece list"));
            }
            for (i, p) in pieces.iter().enumerate() {
                p.validate(i)?;
            }
            let domain = Domain::open_box(
                pieces.iter().map(|p| p.lower).collect(),
                pieces.iter().map(|p| p.upper).collect(),
            )?;
            Ok(ConvexGenerator {
                name: "separable-custom".to_string(),
                domain,
                kind: Kind::Separable(pieces),
            })
        }
    }
}

impl ConvexGenerator {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Built from per-coordinate pieces; its conjugate gradient is numerical.
    pub fn is_separable(&self) -> bool {
        matches!(self.kind, Kind::Separable(_))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The Mahalanobis matrix, row-major.
    pub fn matrix(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Mahalanobis { matrix, .. } => Some(matrix),
            _ => None,
        }
    }

    /// `D(x‖y) = D(y‖x)` for all pairs.
    pub fn is_symmetric(&self) -> bool {
        matches!(self.kind, Kind::SquaredEuclidean | Kind::Mahalanobis { .. })
    }

    /// Whether `D` is known to be jointly convex in both arguments.
    pub fn is_jointly_convex(&self) -> bool {
        matches!(
            self.kind,
            Kind::SquaredEuclidean | Kind::Mahalanobis { .. } | Kind::NegativeEntropy
        )
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn finite(v: f64, what: &'static str) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(what))
        }
    }

    fn quad_form(matrix: &[f64], d: &[f64]) -> f64 {
        let n = d.len();
        math::pairwise_sum_by(n * n, &|k| {
            let (i, j) = (k / n, k % n);
            d[i] * matrix[k] * d[j]
        })
    }

    /// `F(x)`. The entropy generator is evaluated on the positive orthant,
    /// not only on the simplex, so finite differences can step off it.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        let x = x.coords();
        self.check_len(x)?;
        let v = match &self.kind {
            Kind::SquaredEuclidean => math::dot(x, x),
            Kind::Mahalanobis { matrix, .. } => Self::quad_form(matrix, x),
            Kind::NegativeEntropy => {
                if let Some((i, &c)) = x.iter().enumerate().find(|(_, &c)| c < 0.0) {
                    return Err(Error::OutsideDomain(format!(
                        "coordinate {i} = {c} is negative"
                    )));
                }
                let terms: Vec<f64> = x
                    .iter()
                    .map(|&c| if c > 0.0 { c * ln(c) } else { 0.0 })
                    .collect();
                pairwise_sum(&terms)
            }
            Kind::Separable(pieces) => {
                let mut terms = Vec::with_capacity(x.len());
                for (i, (p, &c)) in pieces.iter().zip(x).enumerate() {
                    if !p.contains(c) {
                        return Err(Error::OutsideDomain(format!(
                            "coordinate {i} = {c} not in ({}, {})",
                            p.lower, p.upper
                        )));
                    }
                    terms.push(p.value(c));
                }
                pairwise_sum(&terms)
            }
        };
        Self::finite(v, "generator value")
    }

    /// `∇F(x)`; log-coordinates for the simplex.
    /// `F(x)` without checks or allocation; non-finite outside the domain.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::SquaredEuclidean => math::dot(x, x),
            Kind::Mahalanobis { matrix, .. } => Self::quad_form(matrix, x),
            Kind::NegativeEntropy => x
                .iter()
                .map(|&c| {
                    if c > 0.0 {
                        c * ln(c)
                    } else if c == 0.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                })
                .sum(),
            Kind::Separable(pieces) => pieces
                .iter()
                .zip(x)
                .map(|(p, &c)| if p.contains(c) { p.value(c) } else { f64::NAN })
                .sum(),
        }
    }

    /// `∇F(x)` into `out` without checks; non-finite entries outside the
    /// domain.
    pub(crate) fn grad_unchecked(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::SquaredEuclidean => {
                for (o, c) in out.iter_mut().zip(x) {
                    *o = 2.0 * c;
                }
            }
            Kind::Mahalanobis { matrix, .. } => {
                let n = x.len();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = 2.0 * math::dot(&matrix[i * n..(i + 1) * n], x);
                }
            }
            Kind::NegativeEntropy => {
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = if c > 0.0 { ln(c) } else { f64::NAN };
                }
            }
            Kind::Separable(pieces) => {
                for ((o, p), &c) in out.iter_mut().zip(pieces).zip(x) {
                    *o = if p.contains(c) {
                        p.derivative(c)
                    } else {
                        f64::NAN
                    };
                }
            }
        }
    }

    pub fn grad(&self, x: &Point) -> Result<DualPoint> {
        let x = x.coords();
        self.check_len(x)?;
        let g: Vec<f64> = match &self.kind {
            Kind::SquaredEuclidean => x.iter().map(|c| 2.0 * c).collect(),
            Kind::Mahalanobis { matrix, .. } => {
                let n = x.len();
                (0..n)
                    .map(|i| 2.0 * math::dot(&matrix[i * n..(i + 1) * n], x))
                    .collect()
            }
            Kind::NegativeEntropy => {
                let mut g = Vec::with_capacity(x.len());
                for (i, &c) in x.iter().enumerate() {
                    if !(c > 0.0) {
                        return Err(Error::GradientUndefined { index: i, value: c });
                    }
                    g.push(ln(c));
                }
                g
            }
            Kind::Separable(pieces) => {
                let mut g = Vec::with_capacity(x.len());
                for (i, (p, &c)) in pieces.iter().zip(x).enumerate() {
                    if !p.contains(c) {
                        return Err(Error::GradientUndefined { index: i, value: c });
                    }
                    g.push(p.derivative(c));
                }
                g
            }
        };
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(DualPoint::new(g))
    }

    /// `∇F*(x*)`, the inverse of [`ConvexGenerator::grad`].
    pub fn grad_conj(&self, xs: &DualPoint) -> Result<Point> {
        let t = xs.coords();
        self.check_len(t)?;
        if !xs.is_finite() {
            return Err(Error::NonFinite("dual point"));
        }
        let x: Vec<f64> = match &self.kind {
            Kind::SquaredEuclidean => t.iter().map(|c| 0.5 * c).collect(),
            Kind::Mahalanobis { factor, .. } => {
                factor.solve(t).into_iter().map(|c| 0.5 * c).collect()
            }
            Kind::NegativeEntropy => {
                let m = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = t.iter().map(|c| exp(c - m)).collect();
                let z = pairwise_sum(&e);
                e.into_iter().map(|v| v / z).collect()
            }
            Kind::Separable(pieces) => pieces
                .iter()
                .zip(t)
                .enumerate()
                .map(|(i, (p, &target))| p.invert_derivative(i, target))
                .collect::<Result<_>>()?,
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("conjugate gradient"));
        }
        Ok(Point::new(x))
    }

    /// `F*(x*) = sup_x ⟨x*, x⟩ − F(x)`.
    pub fn eval_conj(&self, xs: &DualPoint) -> Result<f64> {
        let t = xs.coords();
        self.check_len(t)?;
        let v = match &self.kind {
            Kind::SquaredEuclidean => 0.25 * math::dot(t, t),
            Kind::Mahalanobis { factor, .. } => 0.25 * math::dot(t, &factor.solve(t)),
            Kind::NegativeEntropy => math::log_sum_exp(t),
            Kind::Separable(_) => {
                let x = self.grad_conj(xs)?;
                math::dot(t, x.coords()) - self.eval(&x)?
            }
        };
        Self::finite(v, "conjugate value")
    }

    /// `D(y‖x)` in closed form for each family.
    pub fn divergence(&self, y: &Point, x: &Point) -> Result<f64> {
        let (ys, xs) = (y.coords(), x.coords());
        self.check_len(ys)?;
        self.check_len(xs)?;
        let v = match &self.kind {
            Kind::SquaredEuclidean => {
                let terms: Vec<f64> = ys.iter().zip(xs).map(|(a, b)| (a - b) * (a - b)).collect();
                pairwise_sum(&terms)
            }
            Kind::Mahalanobis { matrix, .. } => {
                let d: Vec<f64> = ys.iter().zip(xs).map(|(a, b)| a - b).collect();
                Self::quad_form(matrix, &d)
            }
            Kind::NegativeEntropy => {
                let mut terms = Vec::with_capacity(ys.len());
                for (i, (&a, &b)) in ys.iter().zip(xs).enumerate() {
                    if a < 0.0 || b < 0.0 {
                        return Err(Error::OutsideDomain(format!(
                            "negative simplex coordinate at index {i}"
                        )));
                    }
                    if a == 0.0 {
                        terms.push(0.0);
                    } else if b < BOUNDARY_FLOOR {
                        return Err(Error::BoundaryArgument { index: i, value: b });
                    } else {
                        terms.push(a * ln(a / b));
                    }
                }
                pairwise_sum(&terms)
            }
            Kind::Separable(pieces) => {
                let mut terms = Vec::with_capacity(ys.len());
                for (i, (p, (&a, &b))) in pieces.iter().zip(ys.iter().zip(xs)).enumerate() {
                    for c in [a, b] {
                        if !p.contains(c) {
                            return Err(Error::OutsideDomain(format!(
                                "coordinate {i} = {c} not in ({}, {})",
                                p.lower, p.upper
                            )));
                        }
                    }
                    terms.push(p.value(a) - p.value(b) - p.derivative(b) * (a - b));
                }
                pairwise_sum(&terms)
            }
        };
        Self::finite(v, "divergence")
    }

    /// `D(y‖x)` straight from the definition `F(y) − F(x) − ⟨∇F(x), y − x⟩`.
    /// Less accurate than [`ConvexGenerator::divergence`]; kept as an
    /// independent route for cross-checks.
    pub fn divergence_from_definition(&self, y: &Point, x: &Point) -> Result<f64> {
        let g = self.grad(x)?;
        let d: Vec<f64> = y
            .coords()
            .iter()
            .zip(x.coords())
            .map(|(a, b)| a - b)
            .collect();
        Self::finite(
            self.eval(y)? - self.eval(x)? - math::dot(g.coords(), &d),
            "divergence",
        )
    }
}

/// `D_F(y‖x) = F(y) − F(x) − ⟨∇F(x), y − x⟩`.
pub fn divergence(g: &ConvexGenerator, y: &Point, x: &Point) -> Result<f64> {
    g.divergence(y, x)
}

/// `D_{F*}(a*‖b*)`, computed from `F*` directly. Equals `D_F(b‖a)` where
/// `a = ∇F*(a*)`, `b = ∇F*(b*)`.
pub fn dual_divergence(g: &ConvexGenerator, a_star: &DualPoint, b_star: &DualPoint) -> Result<f64> {
    let fa = g.eval_conj(a_star)?;
    let fb = g.eval_conj(b_star)?;
    let b = g.grad_conj(b_star)?;
    let d: Vec<f64> = a_star
        .coords()
        .iter()
        .zip(b_star.coords())
        .map(|(p, q)| p - q)
        .collect();
    let v = fa - fb - math::dot(b.coords(), &d);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("dual divergence"))
    }
}

/// Terms of `D(x‖z) = D(x‖y) + D(y‖z) + ⟨∇F(y) − ∇F(z), x − y⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleExpansion {
    pub x_to_z: f64,
    pub x_to_y: f64,
    pub y_to_z: f64,
    pub correction: f64,
    /// `x_to_z − (x_to_y + y_to_z + correction)`.
    pub residual: f64,
}

pub fn triangle_expansion(
    g: &ConvexGenerator,
    x: &Point,
    y: &Point,
    z: &Point,
) -> Result<TriangleExpansion> {
    let x_to_z = g.divergence(x, z)?;
    let x_to_y = g.divergence(x, y)?;
    let y_to_z = g.divergence(y, z)?;
    let gy = g.grad(y)?;
    let gz = g.grad(z)?;
    let dg: Vec<f64> = gy
        .coords()
        .iter()
        .zip(gz.coords())
        .map(|(a, b)| a - b)
        .collect();
    let dx: Vec<f64> = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| a - b)
        .collect();
    let correction = math::dot(&dg, &dx);
    Ok(TriangleExpansion {
        x_to_z,
        x_to_y,
        y_to_z,
        correction,
        residual: x_to_z - (x_to_y + y_to_z + correction),
    })
}

/// The `−log(1 − x₀²) − log(1 − x₁⁴)` generator on `(−1, 1)²`.
pub fn log_barrier_generator(powers: &[u32]) -> Result<ConvexGenerator> {
    let pieces = powers
        .iter()
        .map(|&p| Piece::log_barrier(p))
        .collect::<Result<Vec<_>>>()?;
    make_generator(GeneratorSpec::SeparableCustom { pieces })
}
