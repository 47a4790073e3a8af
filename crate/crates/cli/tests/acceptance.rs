//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bregman_core::{
    argmin_from, argmin_to, conditional_label, conditional_prediction, decompose, dual_divergence,
    dual_mean, ensemble_distribution, ensemble_effect, make_generator,
    oracle::{objective_from, objective_to},
    primal_mean, total_variance, triangle_expansion, GeneratorSpec, OracleConfig, Point, SampleSet,
    Space, DEFAULT_ENSEMBLE_CAP,
};
use common::{dim_for, generator, grouped, max_abs_diff, point, rng, sample_set, Family, FAMILIES};
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

/// Worst value seen, with the fixture that produced it.
#[derive(Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    /// For signed quantities, where the largest value may be negative.
    fn signed() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            at: String::new(),
        }
    }

    fn see(&mut self, value: f64, at: impl FnOnce() -> String) {
        // NaN always counts as worse
        if value.is_nan() || value > self.value {
            self.value = value;
            self.at = at();
        }
    }

    fn within(&self, bound: f64) -> bool {
        self.value <= bound
    }
}

impl std::fmt::Display for Worst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.at.is_empty() {
            write!(f, "{:.3e}", self.value)
        } else {
            write!(f, "{:.3e} ({})", self.value, self.at)
        }
    }
}

fn rel(residual: f64, scale: f64) -> f64 {
    residual.abs() / scale.abs().max(1.0)
}

fn decomposition_identity() -> Verdict {
    let start = Instant::now();
    let mut worst = Worst::default();
    let mut count = 0;
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(1000 + k as u64);
        for i in 0..200 {
            let g = generator(f, dim_for(f, i), &mut r);
            let labels = sample_set(&g, r.random_range(1..=50), &mut r);
            let preds = sample_set(&g, r.random_range(1..=50), &mut r);
            let rep = decompose(&g, &labels, &preds).unwrap();
            let sum = rep.bayes_error + rep.bias + rep.model_variance;
            worst.see(rel(rep.expected_loss - sum, rep.expected_loss), || {
                format!("{f:?} #{i}")
            });
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst.within(1e-9) && elapsed < Duration::from_secs(10),
        format!("{count} fixtures, worst relative residual {worst}, {elapsed:.2?} (limit 10 s)"),
    )
}

fn euclidean_specialization() -> Verdict {
    let mut worst = Worst::default();
    let mut r = rng(2000);
    for i in 0..200 {
        let d = 1 + i % 3;
        let g = generator(Family::SquaredEuclidean, d, &mut r);
        let labels = sample_set(&g, r.random_range(1..=50), &mut r);
        let preds = sample_set(&g, r.random_range(1..=50), &mut r);
        let rep = decompose(&g, &labels, &preds).unwrap();
        let mean = |s: &SampleSet| -> Vec<f64> {
            (0..d)
                .map(|j| s.iter().map(|(p, w)| w * p[j]).sum())
                .collect()
        };
        let var = |s: &SampleSet, m: &[f64]| -> f64 {
            s.iter()
                .map(|(p, w)| {
                    w * p
                        .coords()
                        .iter()
                        .zip(m)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                })
                .sum()
        };
        let (my, mx) = (mean(&labels), mean(&preds));
        let bias: f64 = my.iter().zip(&mx).map(|(a, b)| (a - b).powi(2)).sum();
        let loss: f64 = labels
            .iter()
            .flat_map(|(y, wy)| {
                preds.iter().map(move |(x, wx)| {
                    wy * wx
                        * y.coords()
                            .iter()
                            .zip(x.coords())
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                })
            })
            .sum();
        for (got, want) in [
            (rep.bayes_error, var(&labels, &my)),
            (rep.model_variance, var(&preds, &mx)),
            (rep.bias, bias),
            (rep.expected_loss, loss),
        ] {
            worst.see((got - want).abs(), || format!("d={d} #{i}"));
        }
    }
    verdict(
        worst.within(1e-10),
        format!("200 fixtures, worst deviation from classical mean/variance formulas {worst}"),
    )
}

fn minimizer_characterizations() -> Verdict {
    let start = Instant::now();
    let cfg = OracleConfig::default();
    let mut worst = Worst::default();
    let mut count = 0;
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(3000 + k as u64);
        for i in 0..20 {
            let d = dim_for(f, i);
            let g = generator(f, d, &mut r);
            let s = sample_set(&g, r.random_range(1..=6), &mut r);
            let to = argmin_to(&g, &s, &cfg).unwrap();
            let from = argmin_from(&g, &s, &cfg).unwrap();
            let dual_gap = objective_to(&g, &s, &dual_mean(&g, &s).unwrap()) - to.objective;
            let primal_gap = objective_from(&g, &s, &primal_mean(&s)) - from.objective;
            worst.see(dual_gap, || format!("{f:?} d={d} #{i} dual mean"));
            worst.see(primal_gap, || format!("{f:?} d={d} #{i} primal mean"));
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst.within(1e-5) && elapsed < Duration::from_secs(60),
        format!(
            "{count} fixtures at grid {}/axis, worst analytic-minus-oracle objective {worst}, {elapsed:.2?} (limit 60 s)",
            cfg.grid_resolution
        ),
    )
}

fn total_variance_laws() -> Verdict {
    let mut worst = Worst::default();
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(4000 + k as u64);
        for i in 0..100 {
            let g = generator(f, dim_for(f, i), &mut r);
            let gs = grouped(&g, r.random_range(1..=6), 10, &mut r);
            for mode in [Space::Primal, Space::Dual] {
                let rep = total_variance(&g, &gs, mode).unwrap();
                worst.see(rep.residual.abs(), || format!("{f:?} #{i} {mode:?}"));
            }
        }
    }
    verdict(
        worst.within(1e-9),
        format!("400 grouped fixtures in both modes, worst residual {worst}"),
    )
}

fn iterated_dual_expectation() -> Verdict {
    let mut worst = Worst::default();
    for (k, f) in FAMILIES.into_iter().enumerate() {
        // same fixtures as the total-variance criterion
        let mut r = rng(4000 + k as u64);
        for i in 0..100 {
            let g = generator(f, dim_for(f, i), &mut r);
            let gs = grouped(&g, r.random_range(1..=6), 10, &mut r);
            let whole = dual_mean(&g, &gs.flatten()).unwrap();
            let centers = gs
                .groups()
                .iter()
                .map(|s| dual_mean(&g, s).unwrap())
                .collect();
            let outer =
                dual_mean(&g, &SampleSet::new(centers, gs.weights().to_vec()).unwrap()).unwrap();
            worst.see(max_abs_diff(&whole, &outer), || format!("{f:?} #{i}"));
        }
    }
    verdict(
        worst.within(1e-10),
        format!("400 grouped fixtures, worst coordinate gap {worst}"),
    )
}

fn conditional_gaps() -> Verdict {
    let mut identity = Worst::default();
    let mut negative_gap = Worst::signed();
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(6000 + k as u64);
        for i in 0..100 {
            let g = generator(f, dim_for(f, i), &mut r);
            let gs = grouped(&g, r.random_range(1..=6), 8, &mut r);
            let x = point(&g, &mut r);
            for rep in [
                conditional_prediction(&g, &x, &gs).unwrap(),
                conditional_label(&g, &gs, &x).unwrap(),
            ] {
                let at = || format!("{f:?} #{i} {:?}", rep.side);
                identity.see(rel(rep.bias_residual, rep.conditional_bias), at);
                identity.see(rel(rep.variance_residual, rep.unconditional_variance), at);
                negative_gap.see(-rep.gap, at);
            }
        }
    }
    // scalar hand case: groups {0} and {2}, label 3
    let g = make_generator(GeneratorSpec::SquaredEuclidean { dim: 1 }).unwrap();
    let gs = bregman_core::GroupedSampleSet::new(
        vec![
            ("z0".into(), SampleSet::singleton(Point::from([0.0]))),
            ("z1".into(), SampleSet::singleton(Point::from([2.0]))),
        ],
        vec![1.0, 1.0],
    )
    .unwrap();
    let hand = conditional_prediction(&g, &Point::from([3.0]), &gs).unwrap();
    let hand_err = [
        (hand.gap, 1.0),
        (hand.conditional_bias, 5.0),
        (hand.unconditional_bias, 4.0),
        (hand.unconditional_variance, 1.0),
        (hand.conditional_variance, 0.0),
    ]
    .iter()
    .map(|(a, b)| (a - b).abs())
    .fold(0.0, f64::max);
    verdict(
        identity.within(1e-9) && negative_gap.within(1e-12) && hand_err <= 1e-12,
        format!(
            "400 fixtures on both sides, worst identity residual {identity}, worst negated gap {negative_gap}; scalar hand case error {hand_err:.1e}"
        ),
    )
}

const KL_BASE_BIAS_SECOND: f64 = 1.238_226_319_462_332_7;
const KL_ENSEMBLED_BIAS_SECOND: f64 = 1.221_038_214_072_958;
const KL_BASE_BIAS_FIRST: f64 = 0.342_346_584_848_305_2;
const KL_ENSEMBLED_BIAS_FIRST: f64 = 0.349_449_416_572_342_6;

fn kl_counterexample() -> Verdict {
    let g = make_generator(GeneratorSpec::NegativeEntropySimplex { dim: 2 }).unwrap();
    let s = SampleSet::uniform(vec![Point::from([0.8, 0.2]), Point::from([0.6, 0.4])]).unwrap();
    let ens = ensemble_distribution(&g, &s, 2, Space::Primal, DEFAULT_ENSEMBLE_CAP).unwrap();
    let (base_mean, ens_mean) = (dual_mean(&g, &s).unwrap(), dual_mean(&g, &ens).unwrap());
    let shift = max_abs_diff(&base_mean, &ens_mean);

    // recompute both dual means with the oracle on a fine simplex lattice
    let fine = OracleConfig {
        grid_resolution: 10_000,
        ..OracleConfig::default()
    };
    let oracle_base = argmin_to(&g, &s, &fine).unwrap().point;
    let oracle_ens = argmin_to(&g, &ens, &fine).unwrap().point;
    let oracle_agrees = max_abs_diff(&oracle_base, &base_mean) < 1e-6
        && max_abs_diff(&oracle_ens, &ens_mean) < 1e-6;

    let effect = |label: [f64; 2]| {
        ensemble_effect(
            &g,
            &Point::from(label),
            &s,
            2,
            Space::Primal,
            DEFAULT_ENSEMBLE_CAP,
        )
        .unwrap()
    };
    let (first, second) = (effect([1.0, 0.0]), effect([0.0, 1.0]));
    let frozen = [
        (first.base.bias, KL_BASE_BIAS_FIRST),
        (first.ensembled.bias, KL_ENSEMBLED_BIAS_FIRST),
        (second.base.bias, KL_BASE_BIAS_SECOND),
        (second.ensembled.bias, KL_ENSEMBLED_BIAS_SECOND),
    ]
    .iter()
    .map(|(a, b)| (a - b).abs())
    .fold(0.0, f64::max);
    let opposite = (first.bias_change > 0.0 && second.bias_change < 0.0)
        || (first.bias_change < 0.0 && second.bias_change > 0.0);
    verdict(
        shift > 1e-3 && opposite && oracle_agrees && frozen <= 1e-12,
        format!(
            "dual mean moves by {shift:.4e}; bias change {:+.6e} for (1,0), {:+.6e} for (0,1); oracle agrees: {oracle_agrees}; drift from frozen values {frozen:.1e}",
            first.bias_change, second.bias_change
        ),
    )
}

fn dual_ensembling() -> Verdict {
    let mut bias = Worst::default();
    let mut variance = Worst::signed();
    let mut count = 0;
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(8000 + k as u64);
        for i in 0..100 {
            let g = generator(f, dim_for(f, i), &mut r);
            let s = sample_set(&g, r.random_range(1..=8), &mut r);
            let label = point(&g, &mut r);
            for n in [2, 3] {
                let e =
                    ensemble_effect(&g, &label, &s, n, Space::Dual, DEFAULT_ENSEMBLE_CAP).unwrap();
                bias.see(e.bias_change.abs(), || format!("{f:?} #{i} n={n}"));
                variance.see(e.model_variance_change, || format!("{f:?} #{i} n={n}"));
                count += 1;
            }
        }
    }
    verdict(
        bias.within(1e-10) && variance.within(1e-12),
        format!(
            "{count} ensembles, worst |bias change| {bias}, largest variance change {variance}"
        ),
    )
}

fn conjugate_machinery() -> Verdict {
    let mut round_trip = Worst::default();
    let mut swap = Worst::default();
    let mut triangle = Worst::default();
    let mut round_trip_ok = true;
    for (k, f) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(9000 + k as u64);
        let tol = if f == Family::LogBarrier { 1e-6 } else { 1e-9 };
        let mut family_rt = Worst::default();
        for i in 0..1000 {
            let g = generator(f, dim_for(f, i), &mut r);
            let (x, y, z) = (point(&g, &mut r), point(&g, &mut r), point(&g, &mut r));
            let back = g.grad_conj(&g.grad(&x).unwrap()).unwrap();
            family_rt.see(max_abs_diff(&back, &x), || format!("{f:?} #{i}"));
            let dual = dual_divergence(&g, &g.grad(&x).unwrap(), &g.grad(&y).unwrap()).unwrap();
            swap.see((dual - g.divergence(&y, &x).unwrap()).abs(), || {
                format!("{f:?} #{i}")
            });
            let t = triangle_expansion(&g, &x, &y, &z).unwrap();
            triangle.see(t.residual.abs(), || format!("{f:?} #{i}"));
        }
        round_trip_ok &= family_rt.within(tol);
        round_trip.see(family_rt.value, || family_rt.at.clone());
    }
    verdict(
        round_trip_ok && swap.within(1e-9) && triangle.within(1e-10),
        format!(
            "1000 points/pairs/triples per generator; worst round trip {round_trip} (limits 1e-9, 1e-6 separable), duality swap {swap}, triangle {triangle}"
        ),
    )
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_bregman-bv"))
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_end_to_end() -> Verdict {
    let kl = ["--generator", "negative-entropy-simplex", "--dim", "2"];
    let with = |base: &[&str], rest: &[&str]| -> Vec<String> {
        base.iter().chain(rest).map(|s| s.to_string()).collect()
    };
    let runs: Vec<(&str, Vec<String>, i32)> = vec![
        (
            "decompose",
            with(
                &["decompose"],
                &[
                    "--generator",
                    "squared-euclidean",
                    "--dim",
                    "2",
                    "--labels",
                    "bullseye_labels.csv",
                    "--predictions",
                    "bullseye_predictions.csv",
                ],
            ),
            0,
        ),
        (
            "decompose one-hot",
            with(
                &["decompose"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "onehot_labels.csv",
                        "--label-onehot",
                        "--predictions",
                        "kl_predictions.csv",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "total-variance",
            with(
                &["total-variance"],
                &[
                    &kl[..],
                    &[
                        "--predictions",
                        "kl_grouped.csv",
                        "--group-col",
                        "site",
                        "--mode",
                        "dual",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "total-variance primal",
            with(
                &["total-variance"],
                &[
                    "--config",
                    "mahalanobis.json",
                    "--labels",
                    "mahalanobis_predictions.csv",
                    "--group-col",
                    "batch",
                    "--mode",
                    "primal",
                ],
            ),
            0,
        ),
        (
            "conditional",
            with(
                &["conditional"],
                &[
                    "--generator",
                    "squared-euclidean",
                    "--dim",
                    "1",
                    "--labels",
                    "scalar_label.csv",
                    "--predictions",
                    "scalar_groups.json",
                ],
            ),
            0,
        ),
        (
            "conditional label side",
            with(
                &["conditional"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "kl_grouped.csv",
                        "--group-col",
                        "site",
                        "--predictions",
                        "kl_center.csv",
                        "--side",
                        "label",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "ensemble",
            with(
                &["ensemble"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "onehot_first.csv",
                        "--label-onehot",
                        "--predictions",
                        "kl_predictions.csv",
                        "--mode",
                        "dual",
                        "--ensemble-n",
                        "3",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "ensemble monte carlo",
            with(
                &["ensemble"],
                &[
                    "--generator",
                    "log-barrier",
                    "--labels",
                    "barrier_labels.csv",
                    "--predictions",
                    "barrier_predictions.csv",
                    "--ensemble-n",
                    "30",
                    "--cap",
                    "10",
                    "--seed",
                    "42",
                    "--draws",
                    "500",
                ],
            ),
            0,
        ),
        (
            "check",
            with(
                &["check"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "onehot_labels.csv",
                        "--label-onehot",
                        "--predictions",
                        "kl_predictions.csv",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "check barrier",
            with(
                &["check"],
                &[
                    "--generator",
                    "log-barrier",
                    "--labels",
                    "barrier_labels.csv",
                    "--predictions",
                    "barrier_predictions.csv",
                ],
            ),
            0,
        ),
        (
            "field",
            with(
                &["field"],
                &[
                    &kl[..],
                    &[
                        "--center",
                        "0.5,0.5",
                        "--region",
                        "segment:0,1:1,0",
                        "--resolution",
                        "33",
                    ],
                ]
                .concat(),
            ),
            0,
        ),
        (
            "tight tolerance",
            with(
                &["decompose"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "onehot_first.csv",
                        "--label-onehot",
                        "--predictions",
                        "kl_predictions.csv",
                        "--tolerance",
                        "1e-300",
                    ],
                ]
                .concat(),
            ),
            2,
        ),
        (
            "boundary label without flag",
            with(
                &["decompose"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "onehot_labels.csv",
                        "--predictions",
                        "kl_predictions.csv",
                    ],
                ]
                .concat(),
            ),
            1,
        ),
        (
            "missing file",
            with(
                &["decompose"],
                &[
                    &kl[..],
                    &[
                        "--labels",
                        "absent.csv",
                        "--predictions",
                        "kl_predictions.csv",
                    ],
                ]
                .concat(),
            ),
            1,
        ),
        (
            "monte carlo without seed",
            with(
                &["ensemble"],
                &[
                    "--generator",
                    "log-barrier",
                    "--labels",
                    "barrier_labels.csv",
                    "--predictions",
                    "barrier_predictions.csv",
                    "--ensemble-n",
                    "30",
                    "--cap",
                    "10",
                ],
            ),
            1,
        ),
        ("unknown flag", with(&["decompose"], &["--bogus"]), 1),
    ];
    let mut problems = Vec::new();
    for (name, args, expected) in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code_a, out_a) = run_cli(&args);
        let (code_b, out_b) = run_cli(&args);
        if code_a != *expected || code_b != *expected {
            problems.push(format!(
                "{name}: exit {code_a}/{code_b}, expected {expected}"
            ));
        }
        if out_a != out_b {
            problems.push(format!("{name}: output differs between runs"));
        }
        if *expected == 0 && out_a.is_empty() {
            problems.push(format!("{name}: empty report"));
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} invocations run twice, byte-identical reports, exit codes as contracted",
                runs.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        ("decomposition identity", decomposition_identity),
        ("euclidean specialization", euclidean_specialization),
        ("minimizer characterizations", minimizer_characterizations),
        ("laws of total variance", total_variance_laws),
        ("iterated dual expectation", iterated_dual_expectation),
        ("conditional gaps", conditional_gaps),
        ("KL counterexample", kl_counterexample),
        ("dual ensembling", dual_ensembling),
        ("conjugate and duality machinery", conjugate_machinery),
        ("CLI end to end", cli_end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let v = panic::catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
