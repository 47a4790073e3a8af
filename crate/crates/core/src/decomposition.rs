//! The three-term decomposition `𝔼 D(Y‖X) = 𝕍Y + D(𝔼Y‖𝓔X) + 𝓥X` for
//! independent labels `Y` and predictions `X`, its laws of total variance,
//! the gaps incurred by conditioning on a single draw of an external variable,
//! and the effect of ensembling on each term.

use alloc::vec::Vec;

use serde::Serialize;

use crate::dualspace::{
    dual_mean, dual_variance, ensemble_distribution, primal_mean, primal_variance, Space,
};
use crate::error::Result;
use crate::generator::ConvexGenerator;
use crate::math::{abs, pairwise_sum};
use crate::point::Point;
use crate::sample::{GroupedSampleSet, SampleSet};

/// Relative tolerance for identity residuals: `|r| ≤ tol · max(1, scale)`.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

fn within(residual: f64, scale: f64, tol: f64) -> bool {
    abs(residual) <= tol * abs(scale).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub expected_loss: f64,
    /// Primal variance of the labels, `𝕍Y`.
    pub bayes_error: f64,
    /// `D(𝔼Y‖𝓔X)`.
    pub bias: f64,
    /// Dual variance of the predictions, `𝓥X`.
    pub model_variance: f64,
    /// `expected_loss − (bayes_error + bias + model_variance)`.
    pub identity_residual: f64,
    pub central_label: Point,
    pub central_prediction: Point,
}

impl DecompositionReport {
    pub fn identity_holds(&self, tol: f64) -> bool {
        within(self.identity_residual, self.expected_loss, tol)
    }
}

/// Decomposes `𝔼 D(Y‖X)` with `Y ~ labels` and `X ~ predictions` independent.
pub fn decompose(
    g: &ConvexGenerator,
    labels: &SampleSet,
    predictions: &SampleSet,
) -> Result<DecompositionReport> {
    let central_label = primal_mean(labels);
    let central_prediction = dual_mean(g, predictions)?;

    let mut terms = Vec::with_capacity(labels.len() * predictions.len());
    for (y, wy) in labels.iter() {
        for (x, wx) in predictions.iter() {
            terms.push(wy * wx * g.divergence(y, x)?);
        }
    }
    let expected_loss = pairwise_sum(&terms);
    let bayes_error = primal_variance(g, labels)?;
    let bias = g.divergence(&central_label, &central_prediction)?;
    let model_variance = dual_variance(g, predictions)?;
    Ok(DecompositionReport {
        expected_loss,
        bayes_error,
        bias,
        model_variance,
        identity_residual: expected_loss - (bayes_error + bias + model_variance),
        central_label,
        central_prediction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalVarianceReport {
    pub total: f64,
    /// Variance of the per-group centers.
    pub explained: f64,
    /// Weighted mean of the per-group variances.
    pub unexplained: f64,
    /// `total − (explained + unexplained)`.
    pub residual: f64,
    pub mode: Space,
}

impl TotalVarianceReport {
    pub fn identity_holds(&self, tol: f64) -> bool {
        within(self.residual, self.total, tol)
    }
}

/// Law of total variance over the groups of `grouped`, for the primal
/// variance (`mode = Primal`, centers are means) or the dual variance
/// (`mode = Dual`, centers are dual means).
pub fn total_variance(
    g: &ConvexGenerator,
    grouped: &GroupedSampleSet,
    mode: Space,
) -> Result<TotalVarianceReport> {
    type Variance = fn(&ConvexGenerator, &SampleSet) -> Result<f64>;
    type Center = fn(&ConvexGenerator, &SampleSet) -> Result<Point>;
    let (variance, center): (Variance, Center) = match mode {
        Space::Primal => (primal_variance, |_, s| Ok(primal_mean(s))),
        Space::Dual => (dual_variance, dual_mean),
    };
    let total = variance(g, &grouped.flatten())?;
    let unexplained = grouped.expect(|s| variance(g, s))?;
    let centers = grouped
        .groups()
        .iter()
        .map(|s| center(g, s))
        .collect::<Result<Vec<_>>>()?;
    let explained = variance(g, &SampleSet::new(centers, grouped.weights().to_vec())?)?;
    Ok(TotalVarianceReport {
        total,
        explained,
        unexplained,
        residual: total - (explained + unexplained),
        mode,
    })
}

/// Which side of the loss is conditioned on the external variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Prediction,
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalReport {
    pub conditional_bias: f64,
    pub conditional_variance: f64,
    pub unconditional_bias: f64,
    pub unconditional_variance: f64,
    /// Amount by which conditioning overstates the bias and understates the
    /// variance.
    pub gap: f64,
    pub side: Side,
    /// `conditional_bias − (unconditional_bias + gap)`.
    pub bias_residual: f64,
    /// `conditional_variance − (unconditional_variance − gap)`.
    pub variance_residual: f64,
}

impl ConditionalReport {
    pub fn identity_holds(&self, tol: f64) -> bool {
        within(self.bias_residual, self.conditional_bias, tol)
            && within(self.variance_residual, self.unconditional_variance, tol)
    }
}

fn conditional_report(
    side: Side,
    conditional_bias: f64,
    conditional_variance: f64,
    unconditional_bias: f64,
    unconditional_variance: f64,
    gap: f64,
) -> ConditionalReport {
    ConditionalReport {
        conditional_bias,
        conditional_variance,
        unconditional_bias,
        unconditional_variance,
        gap,
        side,
        bias_residual: conditional_bias - (unconditional_bias + gap),
        variance_residual: conditional_variance - (unconditional_variance - gap),
    }
}

/// Conditional bias and variance of random predictions grouped by `Z`,
/// against a deterministic label. The gap is `𝔼_Z D(𝓔X‖𝓔(X|Z))`.
pub fn conditional_prediction(
    g: &ConvexGenerator,
    label: &Point,
    grouped_predictions: &GroupedSampleSet,
) -> Result<ConditionalReport> {
    let centers = grouped_predictions
        .groups()
        .iter()
        .map(|s| dual_mean(g, s))
        .collect::<Result<Vec<_>>>()?;
    let weighted = |f: &dyn Fn(&Point) -> Result<f64>| -> Result<f64> {
        let terms = centers
            .iter()
            .zip(grouped_predictions.weights())
            .map(|(c, w)| f(c).map(|v| w * v))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&terms))
    };
    let conditional_bias = weighted(&|c| g.divergence(label, c))?;
    let conditional_variance = grouped_predictions.expect(|s| dual_variance(g, s))?;
    let full = decompose(
        g,
        &SampleSet::singleton(label.clone()),
        &grouped_predictions.flatten(),
    )?;
    let gap = weighted(&|c| g.divergence(&full.central_prediction, c))?;
    Ok(conditional_report(
        Side::Prediction,
        conditional_bias,
        conditional_variance,
        full.bias,
        full.model_variance,
        gap,
    ))
}

/// Conditional bias and variance of random labels grouped by `Z`, against a
/// deterministic prediction. The gap is `𝔼_Z D(𝔼(Y|Z)‖𝔼Y)`.
pub fn conditional_label(
    g: &ConvexGenerator,
    grouped_labels: &GroupedSampleSet,
    prediction: &Point,
) -> Result<ConditionalReport> {
    let centers: Vec<Point> = grouped_labels.groups().iter().map(primal_mean).collect();
    let weighted = |f: &dyn Fn(&Point) -> Result<f64>| -> Result<f64> {
        let terms = centers
            .iter()
            .zip(grouped_labels.weights())
            .map(|(c, w)| f(c).map(|v| w * v))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&terms))
    };
    let conditional_bias = weighted(&|c| g.divergence(c, prediction))?;
    let conditional_variance = grouped_labels.expect(|s| primal_variance(g, s))?;
    let full = decompose(
        g,
        &grouped_labels.flatten(),
        &SampleSet::singleton(prediction.clone()),
    )?;
    let gap = weighted(&|c| g.divergence(c, &full.central_label))?;
    Ok(conditional_report(
        Side::Label,
        conditional_bias,
        conditional_variance,
        full.bias,
        full.bayes_error,
        gap,
    ))
}

/// Decompositions before and after replacing one side by its `n`-fold
/// ensemble. Changes are signed: `ensembled − base`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleEffect {
    pub side: Side,
    pub mode: Space,
    pub ensemble_size: usize,
    pub base: DecompositionReport,
    pub ensembled: DecompositionReport,
    pub bias_change: f64,
    pub model_variance_change: f64,
    pub bayes_error_change: f64,
}

impl EnsembleEffect {
    pub fn compare(
        side: Side,
        mode: Space,
        ensemble_size: usize,
        base: DecompositionReport,
        ensembled: DecompositionReport,
    ) -> Self {
        Self {
            side,
            mode,
            ensemble_size,
            bias_change: ensembled.bias - base.bias,
            model_variance_change: ensembled.model_variance - base.model_variance,
            bayes_error_change: ensembled.bayes_error - base.bayes_error,
            base,
            ensembled,
        }
    }

    /// `|bias_change| ≤ tol`.
    pub fn bias_preserved(&self, tol: f64) -> bool {
        abs(self.bias_change) <= tol
    }

    /// The variance of the ensembled side did not grow by more than `tol`.
    pub fn variance_reduced(&self, tol: f64) -> bool {
        match self.side {
            Side::Prediction => self.model_variance_change <= tol,
            Side::Label => self.bayes_error_change <= tol,
        }
    }
}

/// Ensembles the predictions (`n` i.i.d. draws averaged in `mode`) and
/// decomposes against a deterministic label before and after.
pub fn ensemble_effect(
    g: &ConvexGenerator,
    label: &Point,
    predictions: &SampleSet,
    n: usize,
    mode: Space,
    cap: u128,
) -> Result<EnsembleEffect> {
    let labels = SampleSet::singleton(label.clone());
    let ensembled = ensemble_distribution(g, predictions, n, mode, cap)?;
    Ok(EnsembleEffect::compare(
        Side::Prediction,
        mode,
        n,
        decompose(g, &labels, predictions)?,
        decompose(g, &labels, &ensembled)?,
    ))
}

/// Ensembles the labels instead of the predictions.
pub fn label_ensemble_effect(
    g: &ConvexGenerator,
    labels: &SampleSet,
    predictions: &SampleSet,
    n: usize,
    mode: Space,
    cap: u128,
) -> Result<EnsembleEffect> {
    let ensembled = ensemble_distribution(g, labels, n, mode, cap)?;
    Ok(EnsembleEffect::compare(
        Side::Label,
        mode,
        n,
        decompose(g, labels, predictions)?,
        decompose(g, &ensembled, predictions)?,
    ))
}
