use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bregman_core::{
    conditional_label, conditional_prediction, decompose, divergence_field, dual_mean,
    ensemble_distribution, ensemble_monte_carlo, gradient_check, oracle, primal_mean,
    total_variance, ConvexGenerator, EnsembleEffect, Error, Minimizer, OracleConfig, Point, Region,
    SampleSet, Side, Space, DEFAULT_ENSEMBLE_CAP, IDENTITY_TOLERANCE,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::GeneratorConfig;
use crate::error::{CliError, EXIT_IDENTITY, EXIT_INPUT, EXIT_OK};
use crate::ingest::{read_path, RawSamples};
use crate::report::{field_csv, to_json, Check, Report};

/// Caps the worker threads used by `check`; `0` or unset means one per core.
pub const THREADS_ENV: &str = "BREGMAN_BV_THREADS";
pub const DEFAULT_DRAWS: usize = 4096;
pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(
    name = "bregman-bv",
    version,
    about = "Bias-variance decompositions for Bregman divergences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the expected loss into Bayes error, bias and model variance.
    Decompose(DecomposeArgs),
    /// Law of total variance over the groups of one sample file.
    TotalVariance(TotalVarianceArgs),
    /// Bias and variance gaps incurred by conditioning on a grouping.
    Conditional(ConditionalArgs),
    /// How averaging n draws changes each term.
    Ensemble(EnsembleArgs),
    /// Certify the analytic means and gradients against brute-force oracles.
    Check(CheckArgs),
    /// Divergence to and from a center over a region, as CSV.
    Field(FieldArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct GeneratorArgs {
    /// JSON generator document, e.g. {"generator": "mahalanobis", "matrix_file": "A.csv"}.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["generator", "dim", "matrix_file", "powers"])]
    pub config: Option<PathBuf>,
    /// squared-euclidean, mahalanobis, negative-entropy-simplex or log-barrier.
    #[arg(long, required_unless_present = "config")]
    pub generator: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Mahalanobis matrix as plain CSV without a header.
    #[arg(long, value_name = "FILE")]
    pub matrix_file: Option<PathBuf>,
    /// Log-barrier powers, one per coordinate [default: 2,4].
    #[arg(long, value_delimiter = ',')]
    pub powers: Option<Vec<u32>>,
}

impl GeneratorArgs {
    pub fn config(&self) -> Result<GeneratorConfig, CliError> {
        match &self.config {
            Some(path) => GeneratorConfig::load(path),
            None => Ok(GeneratorConfig {
                generator: self.generator.clone().unwrap_or_default(),
                dim: self.dim,
                matrix: None,
                matrix_file: self.matrix_file.clone(),
                powers: self.powers.clone(),
            }),
        }
    }

    pub fn build(&self) -> Result<ConvexGenerator, CliError> {
        self.config()?.build()
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    /// CSV column holding group keys.
    #[arg(long, value_name = "NAME")]
    pub group_col: Option<String>,
    /// Accept labels on the simplex boundary, such as one-hot vectors.
    #[arg(long)]
    pub label_onehot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Relative tolerance for identity residuals.
    #[arg(long, default_value_t = IDENTITY_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Primal,
    Dual,
}

impl From<Mode> for Space {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Primal => Space::Primal,
            Mode::Dual => Space::Dual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Prediction,
    Label,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Prediction => Side::Prediction,
            SideArg::Label => Side::Label,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TotalVarianceArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// `primal` reads --labels, `dual` reads --predictions.
    #[arg(long, value_enum, default_value_t = Mode::Dual)]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// The grouped side; the other file must hold a single point.
    #[arg(long, value_enum, default_value_t = SideArg::Prediction)]
    pub side: SideArg,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Mode::Dual)]
    pub mode: Mode,
    /// Which side is ensembled.
    #[arg(long, value_enum, default_value_t = SideArg::Prediction)]
    pub side: SideArg,
    #[arg(long = "ensemble-n", default_value_t = 2)]
    pub ensemble_n: usize,
    /// Enables Monte Carlo when exact enumeration is over the cap.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub draws: usize,
    /// Largest exact enumeration, in atoms.
    #[arg(long, default_value_t = DEFAULT_ENSEMBLE_CAP)]
    pub cap: u128,
    /// Use Monte Carlo even when enumeration fits.
    #[arg(long, requires = "seed")]
    pub monte_carlo: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Oracle grid points per axis.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Allowed excess of an analytic objective over the oracle's, and of a
    /// gradient over its finite-difference estimate.
    #[arg(long, default_value_t = DEFAULT_ORACLE_TOLERANCE)]
    pub oracle_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Center point, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub center: Vec<f64>,
    /// box:LO,..:HI,..  disk:CX,CY:R  or  segment:A,..:B,..
    #[arg(long, allow_hyphen_values = true)]
    pub region: String,
    /// Cells per axis.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Everything a reporting command needs, validated up front.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub generator: ConvexGenerator,
    pub tolerance: f64,
    pub labels: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub group_col: Option<String>,
    pub label_onehot: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(
        generator: &GeneratorArgs,
        data: &DataArgs,
        output: &OutputArgs,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        if !(output.tolerance > 0.0 && output.tolerance.is_finite()) {
            return Err(CliError::input("--tolerance must be positive"));
        }
        for path in data.labels.iter().chain(&data.predictions) {
            if !path.is_file() {
                return Err(CliError::input(format!("{}: no such file", path.display())));
            }
        }
        Ok(Self {
            generator: generator.build()?,
            tolerance: output.tolerance,
            labels: data.labels.clone(),
            predictions: data.predictions.clone(),
            group_col: data.group_col.clone(),
            label_onehot: data.label_onehot,
            seed,
            out: output.out.clone(),
        })
    }

    fn read(&self, path: &Path, allow_boundary: bool) -> Result<RawSamples, CliError> {
        let raw = read_path(path, self.group_col.as_deref())?;
        raw.check_domain(&self.generator, allow_boundary)?;
        Ok(raw)
    }

    pub fn labels(&self) -> Result<RawSamples, CliError> {
        let path = self
            .labels
            .as_deref()
            .ok_or_else(|| CliError::input("--labels is required"))?;
        self.read(path, self.label_onehot)
    }

    pub fn predictions(&self) -> Result<RawSamples, CliError> {
        let path = self
            .predictions
            .as_deref()
            .ok_or_else(|| CliError::input("--predictions is required"))?;
        self.read(path, false)
    }

    fn finish<T: Serialize>(&self, command: &str, checks: Vec<Check>, result: T) -> Outcome {
        let report = Report {
            command,
            generator: self.generator.name(),
            passed: checks.iter().all(|c| c.passed),
            checks: &checks,
            result,
        };
        Outcome {
            output: to_json(&report),
            out: self.out.clone(),
            failures: checks
                .iter()
                .filter(|c| !c.passed)
                .map(Check::describe)
                .collect(),
        }
    }
}

/// A finished command: its report, where it goes, and failed checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub out: Option<PathBuf>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_IDENTITY
        }
    }
}

fn single_point(raw: RawSamples, flag: &str) -> Result<Point, CliError> {
    if raw.points.len() != 1 {
        return Err(CliError::input(format!(
            "{}: {flag} must hold exactly one point here, found {}",
            raw.source,
            raw.points.len()
        )));
    }
    Ok(raw.points.into_iter().next().expect("one point"))
}

pub fn cmd_decompose(a: &DecomposeArgs) -> Result<Outcome, CliError> {
    let cfg = RunConfig::new(&a.generator, &a.data, &a.output, None)?;
    let labels = cfg.labels()?.into_flat()?;
    let predictions = cfg.predictions()?.into_flat()?;
    let rep = decompose(&cfg.generator, &labels, &predictions)?;
    let checks = vec![Check::identity(
        "decomposition identity",
        rep.identity_residual,
        rep.expected_loss,
        cfg.tolerance,
    )];
    Ok(cfg.finish("decompose", checks, rep))
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    key: String,
    weight: f64,
    size: usize,
    center: Point,
}

#[derive(Debug, Serialize)]
struct TotalVarianceResult {
    law: bregman_core::TotalVarianceReport,
    center: Point,
    /// Center of the group centers, weighted by group weight.
    iterated_center: Point,
    groups: Vec<GroupSummary>,
}

pub fn cmd_total_variance(a: &TotalVarianceArgs) -> Result<Outcome, CliError> {
    let cfg = RunConfig::new(&a.generator, &a.data, &a.output, None)?;
    let g = &cfg.generator;
    let mode = Space::from(a.mode);
    let raw = match mode {
        Space::Primal => cfg.labels()?,
        Space::Dual => cfg.predictions()?,
    };
    let gs = raw.into_grouped()?;
    let center = |s: &SampleSet| -> Result<Point, CliError> {
        Ok(match mode {
            Space::Primal => primal_mean(s),
            Space::Dual => dual_mean(g, s)?,
        })
    };
    let law = total_variance(g, &gs, mode)?;
    let groups = gs
        .iter()
        .map(|(key, s, weight)| {
            Ok(GroupSummary {
                key: key.to_string(),
                weight,
                size: s.len(),
                center: center(s)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let overall = center(&gs.flatten())?;
    let iterated = center(&SampleSet::new(
        groups.iter().map(|s| s.center.clone()).collect(),
        gs.weights().to_vec(),
    )?)?;
    let spread = overall
        .coords()
        .iter()
        .zip(iterated.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = overall.coords().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let checks = vec![
        Check::identity(
            "law of total variance",
            law.residual,
            law.total,
            cfg.tolerance,
        ),
        Check::identity("iterated expectation", spread, scale, cfg.tolerance),
    ];
    Ok(cfg.finish(
        "total-variance",
        checks,
        TotalVarianceResult {
            law,
            center: overall,
            iterated_center: iterated,
            groups,
        },
    ))
}

pub fn cmd_conditional(a: &ConditionalArgs) -> Result<Outcome, CliError> {
    let cfg = RunConfig::new(&a.generator, &a.data, &a.output, None)?;
    let g = &cfg.generator;
    let rep = match a.side {
        SideArg::Prediction => {
            let label = single_point(cfg.labels()?, "--labels")?;
            conditional_prediction(g, &label, &cfg.predictions()?.into_grouped()?)?
        }
        SideArg::Label => {
            let prediction = single_point(cfg.predictions()?, "--predictions")?;
            conditional_label(g, &cfg.labels()?.into_grouped()?, &prediction)?
        }
    };
    let tol = cfg.tolerance;
    let checks = vec![
        Check::identity(
            "conditional bias identity",
            rep.bias_residual,
            rep.conditional_bias,
            tol,
        ),
        Check::identity(
            "conditional variance identity",
            rep.variance_residual,
            rep.unconditional_variance,
            tol,
        ),
        Check::at_most(
            "negated gap",
            -rep.gap,
            tol * rep.conditional_bias.abs().max(1.0),
        ),
    ];
    Ok(cfg.finish("conditional", checks, rep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Serialize)]
struct EnsembleResult {
    method: Method,
    seed: Option<u64>,
    draws: Option<usize>,
    atoms: usize,
    effect: EnsembleEffect,
}

pub fn cmd_ensemble(a: &EnsembleArgs) -> Result<Outcome, CliError> {
    let cfg = RunConfig::new(&a.generator, &a.data, &a.output, a.seed)?;
    let g = &cfg.generator;
    let mode = Space::from(a.mode);
    let side = Side::from(a.side);
    let labels = cfg.labels()?.into_flat()?;
    let predictions = cfg.predictions()?.into_flat()?;
    let target = match side {
        Side::Prediction => &predictions,
        Side::Label => &labels,
    };
    let monte_carlo = |cfg: &RunConfig| -> Result<SampleSet, CliError> {
        let seed = cfg
            .seed
            .ok_or_else(|| CliError::input("Monte Carlo ensembling needs --seed"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(ensemble_monte_carlo(
            g,
            target,
            a.ensemble_n,
            mode,
            a.draws,
            &mut rng,
        )?)
    };
    let (ensembled, method) = if a.monte_carlo {
        (monte_carlo(&cfg)?, Method::MonteCarlo)
    } else {
        match ensemble_distribution(g, target, a.ensemble_n, mode, a.cap) {
            Ok(s) => (s, Method::Exact),
            Err(Error::CapExceeded { atoms, cap }) if cfg.seed.is_none() => {
                return Err(CliError::input(format!(
                    "exact ensembling needs {atoms} atoms, over the cap of {cap}; pass --seed for Monte Carlo"
                )))
            }
            Err(Error::CapExceeded { .. }) => (monte_carlo(&cfg)?, Method::MonteCarlo),
            Err(e) => return Err(e.into()),
        }
    };
    let base = decompose(g, &labels, &predictions)?;
    let after = match side {
        Side::Prediction => decompose(g, &labels, &ensembled)?,
        Side::Label => decompose(g, &ensembled, &predictions)?,
    };
    let atoms = ensembled.len();
    let effect = EnsembleEffect::compare(side, mode, a.ensemble_n, base, after);

    let tol = cfg.tolerance;
    let mut checks = vec![
        Check::identity(
            "base decomposition identity",
            effect.base.identity_residual,
            effect.base.expected_loss,
            tol,
        ),
        Check::identity(
            "ensembled decomposition identity",
            effect.ensembled.identity_residual,
            effect.ensembled.expected_loss,
            tol,
        ),
    ];
    // The averaging guarantees hold for the exact ensemble distribution only.
    if method == Method::Exact {
        let (keeps_bias, shrinks) = match (side, mode) {
            (Side::Prediction, Space::Dual) | (Side::Label, Space::Primal) => (true, true),
            (Side::Prediction, Space::Primal) | (Side::Label, Space::Dual) => {
                (false, g.is_jointly_convex())
            }
        };
        if keeps_bias {
            checks.push(Check::identity(
                "bias preserved",
                effect.bias_change,
                effect.base.bias,
                tol,
            ));
        }
        if shrinks {
            let (name, change, base) = match side {
                Side::Prediction => (
                    "model variance change",
                    effect.model_variance_change,
                    effect.base.model_variance,
                ),
                Side::Label => (
                    "bayes error change",
                    effect.bayes_error_change,
                    effect.base.bayes_error,
                ),
            };
            checks.push(Check::at_most(name, change, tol * base.abs().max(1.0)));
        }
    }
    let result = EnsembleResult {
        method,
        seed: if method == Method::MonteCarlo {
            cfg.seed
        } else {
            None
        },
        draws: (method == Method::MonteCarlo).then_some(a.draws),
        atoms,
        effect,
    };
    Ok(cfg.finish("ensemble", checks, result))
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Certification {
    /// Analytic minimizer of `𝔼 D(z‖X)` against the oracle.
    DualMean {
        set: &'static str,
        analytic: Point,
        analytic_objective: f64,
        oracle: Minimizer,
        objective_gap: f64,
        location_gap: f64,
    },
    /// Analytic minimizer of `𝔼 D(X‖z)` against the oracle.
    PrimalMean {
        set: &'static str,
        analytic: Point,
        analytic_objective: f64,
        oracle: Minimizer,
        objective_gap: f64,
        location_gap: f64,
    },
    Gradient {
        set: &'static str,
        checked: usize,
        skipped: usize,
        max_error: f64,
    },
    RoundTrip {
        set: &'static str,
        checked: usize,
        max_error: f64,
    },
    Skipped {
        set: &'static str,
        target: &'static str,
        reason: String,
    },
}

#[derive(Clone, Copy)]
enum Task {
    DualMean,
    PrimalMean,
    Gradient,
    RoundTrip,
}

fn max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn run_task(
    g: &ConvexGenerator,
    set: &'static str,
    s: &SampleSet,
    interior: bool,
    task: Task,
    ocfg: &OracleConfig,
    tol: f64,
) -> Result<(Option<Check>, Certification), CliError> {
    let round_trip_tol = if g.is_separable() { 1e-6 } else { 1e-9 };
    let skipped = |target: &'static str, reason: &str| {
        Ok((
            None,
            Certification::Skipped {
                set,
                target,
                reason: reason.to_string(),
            },
        ))
    };
    match task {
        Task::DualMean => {
            if !interior {
                return skipped("dual-mean", "samples on the domain boundary");
            }
            let analytic = dual_mean(g, s)?;
            let analytic_objective = oracle::objective_to(g, s, &analytic);
            let found = oracle::argmin_to(g, s, ocfg)?;
            let objective_gap = analytic_objective - found.objective;
            let check = Check::at_most(format!("{set}: dual mean vs oracle"), objective_gap, tol);
            Ok((
                Some(check),
                Certification::DualMean {
                    set,
                    location_gap: max_abs_diff(&analytic, &found.point),
                    analytic,
                    analytic_objective,
                    oracle: found,
                    objective_gap,
                },
            ))
        }
        Task::PrimalMean => {
            let analytic = primal_mean(s);
            let analytic_objective = oracle::objective_from(g, s, &analytic);
            let found = oracle::argmin_from(g, s, ocfg)?;
            let objective_gap = analytic_objective - found.objective;
            let check = Check::at_most(format!("{set}: primal mean vs oracle"), objective_gap, tol);
            Ok((
                Some(check),
                Certification::PrimalMean {
                    set,
                    location_gap: max_abs_diff(&analytic, &found.point),
                    analytic,
                    analytic_objective,
                    oracle: found,
                    objective_gap,
                },
            ))
        }
        Task::Gradient => {
            let (mut checked, mut skipped_points, mut max_error) = (0, 0, 0.0f64);
            for p in s.points() {
                match gradient_check(g, p, ocfg) {
                    Ok(e) => {
                        checked += 1;
                        max_error = max_error.max(e);
                    }
                    Err(Error::BoundaryProximity { .. } | Error::GradientUndefined { .. }) => {
                        skipped_points += 1
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let check = Check::at_most(
                format!("{set}: gradient vs finite differences"),
                max_error,
                tol,
            );
            Ok((
                Some(check),
                Certification::Gradient {
                    set,
                    checked,
                    skipped: skipped_points,
                    max_error,
                },
            ))
        }
        Task::RoundTrip => {
            if !interior {
                return skipped("round-trip", "samples on the domain boundary");
            }
            let mut max_error = 0.0f64;
            for p in s.points() {
                let back = g.grad_conj(&g.grad(p)?)?;
                max_error = max_error.max(max_abs_diff(&back, p));
            }
            let check = Check::at_most(
                format!("{set}: conjugate round trip"),
                max_error,
                round_trip_tol,
            );
            Ok((
                Some(check),
                Certification::RoundTrip {
                    set,
                    checked: s.len(),
                    max_error,
                },
            ))
        }
    }
}

/// Worker pool sized by [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => 0,
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::input(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => return Err(CliError::input(format!("{THREADS_ENV}: {e}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(e.to_string()))
}

pub fn cmd_check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let cfg = RunConfig::new(&a.generator, &a.data, &a.output, None)?;
    let g = &cfg.generator;
    if a.oracle_tolerance.is_nan() || a.oracle_tolerance <= 0.0 {
        return Err(CliError::input("--oracle-tolerance must be positive"));
    }
    let ocfg = OracleConfig {
        grid_resolution: a.grid,
        ..OracleConfig::default()
    };
    ocfg.validate()?;

    let mut sets: Vec<(&'static str, SampleSet, bool)> = Vec::new();
    for (name, raw) in [
        (
            "labels",
            cfg.labels.as_ref().map(|_| cfg.labels()).transpose()?,
        ),
        (
            "predictions",
            cfg.predictions
                .as_ref()
                .map(|_| cfg.predictions())
                .transpose()?,
        ),
    ] {
        if let Some(raw) = raw {
            let interior = raw.check_domain(g, false).is_ok();
            sets.push((name, raw.into_flat()?, interior));
        }
    }
    if sets.is_empty() {
        return Err(CliError::input(
            "check needs --labels, --predictions or both",
        ));
    }
    let jobs: Vec<(usize, Task)> = (0..sets.len())
        .flat_map(|i| {
            [
                Task::DualMean,
                Task::PrimalMean,
                Task::Gradient,
                Task::RoundTrip,
            ]
            .into_iter()
            .map(move |t| (i, t))
        })
        .collect();
    let results = thread_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(i, task)| {
                let (name, s, interior) = &sets[i];
                run_task(g, name, s, *interior, task, &ocfg, a.oracle_tolerance)
            })
            .collect::<Vec<_>>()
    });
    let mut checks = Vec::new();
    let mut certifications = Vec::new();
    for r in results {
        let (check, cert) = r?;
        checks.extend(check);
        certifications.push(cert);
    }
    Ok(cfg.finish("check", checks, certifications))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("{what}: {t:?} is not a number")))
        })
        .collect()
}

/// Parses `box:LO,..:HI,..`, `disk:CX,CY:R` or `segment:A,..:B,..`.
pub fn parse_region(text: &str) -> Result<Region, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || {
        CliError::input(format!(
            "--region {text:?}: expected box:LO,..:HI,.., disk:CX,CY:R or segment:A,..:B,.."
        ))
    };
    let [kind, a, b] = parts.as_slice() else {
        return Err(bad());
    };
    let (a, b) = (parse_list(a, "--region")?, parse_list(b, "--region")?);
    match *kind {
        "box" => Ok(Region::Box {
            lowers: a,
            uppers: b,
        }),
        "segment" => Ok(Region::Segment { start: a, end: b }),
        "disk" => match (a.as_slice(), b.as_slice()) {
            ([x, y], [r]) => Ok(Region::Disk {
                center: [*x, *y],
                radius: *r,
            }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

pub fn cmd_field(a: &FieldArgs) -> Result<Outcome, CliError> {
    let g = a.generator.build()?;
    let center = Point::new(a.center.clone());
    if center.dim() != g.dim() {
        return Err(CliError::input(format!(
            "--center has {} coordinates, the generator {}",
            center.dim(),
            g.dim()
        )));
    }
    let rows = divergence_field(&g, &center, &parse_region(&a.region)?, a.resolution)?;
    Ok(Outcome {
        output: field_csv(g.dim(), &rows),
        out: a.out.clone(),
        failures: Vec::new(),
    })
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::TotalVariance(a) => cmd_total_variance(a),
        Command::Conditional(a) => cmd_conditional(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Check(a) => cmd_check(a),
        Command::Field(a) => cmd_field(a),
    }
}

/// Parses `args`, runs the command, writes the report and returns the exit
/// code: 0 on success, 1 on input errors, 2 when a check fails.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let written = match &outcome.out {
        Some(path) => fs::write(path, &outcome.output).map_err(CliError::io(path)),
        None => stdout
            .write_all(outcome.output.as_bytes())
            .map_err(CliError::io("<stdout>")),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_INPUT;
    }
    for f in &outcome.failures {
        let _ = writeln!(stderr, "check failed: {f}");
    }
    outcome.exit_code()
}
