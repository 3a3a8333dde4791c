//! Acceptance suite: one test per release criterion. Each test prints a
//! single PASS line with its measured quantities; a failure panics with the
//! offending values.
//!
//! Run with `cargo test -p csa-cli --test acceptance -- --nocapture` to see
//! the per-criterion lines.

mod common;

use std::time::{Duration, Instant};

use common::{knapsack_expectation, random_pmf, vertex_optimum, TableModel};

use csa_core::benchmark::{run_validation, run_weighted_comparison, ValidationConfig};
use csa_core::bounds::{
    bound_no_mediators, bound_with_mediators, compute_bounds, CausalQuery, EvalConfig,
};
use csa_core::dist::{DiscreteDist, SampleDist};
use csa_core::estimate::{FitConfig, FittedModel, ObservedData};
use csa_core::functionals::{
    apply_discrete, expectation_bound_sampled, quantile_bound_sampled, Functional,
};
use csa_core::model::{
    NodeContext, RatioBounds, SensitivityEntry, SensitivitySpec, TreatmentKind, WeightFn,
};
use csa_core::seed::derived_rng;
use csa_core::shift::{shift_discrete, Direction};
use csa_core::synth::{sample_dataset, ScmConfig, ScmPreset, ScmTreatment};
use rand::distr::Distribution;
use rand::RngExt;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn assert_runtime(elapsed: Duration, limit: Duration, what: &str) {
    assert!(
        elapsed <= limit,
        "{what} took {elapsed:?}, limit {limit:?}"
    );
}

#[test]
fn criterion_01_quantile_closed_form() {
    let start = Instant::now();
    let mut rng = derived_rng(101, &[1]);
    let mut spec = SensitivitySpec::new();
    for trial in 0..10_000 {
        let gamma: f64 = rng.random_range(1.0..50.0);
        let q: f64 = rng.random_range(0.0..=1.0);
        spec.insert(
            "y",
            SensitivityEntry::Weighted {
                gamma,
                weight: WeightFn::Constant { value: q },
            },
        )
        .unwrap();
        let b = spec.ratio_bounds("y", &NodeContext::default()).unwrap();
        assert!(
            (b.c_plus - gamma / (1.0 + gamma)).abs() <= 1e-12,
            "trial {trial}: gamma={gamma} q={q} c_plus={}",
            b.c_plus
        );
        assert!(
            (b.c_minus - 1.0 / (1.0 + gamma)).abs() <= 1e-12,
            "trial {trial}: gamma={gamma} q={q} c_minus={}",
            b.c_minus
        );
        // Cross-route: the generic quantile formula from the explicit ratio
        // bounds agrees away from the cancellation point at gamma = 1.
        if gamma > 1.01 {
            let e = RatioBounds::from_explicit(b.s_minus, b.s_plus).unwrap();
            assert!((e.c_plus - b.c_plus).abs() <= 1e-12);
            assert!((e.c_minus - b.c_minus).abs() <= 1e-12);
        }
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(1), "criterion 1");
    println!("acceptance criterion 01 (quantile closed form, 10^4 draws): PASS in {elapsed:?}");
}

#[test]
fn criterion_02_shift_normalization_and_containment() {
    let start = Instant::now();
    let mut rng = derived_rng(102, &[1]);
    for trial in 0..10_000 {
        let size = rng.random_range(2..=20usize);
        let pmf = random_pmf(&mut rng, size, 10.0);
        let gamma: f64 = rng.random_range(1.0..=20.0);
        let q: f64 = rng.random_range(0.0..=1.0);
        let bounds = RatioBounds::from_gamma(gamma, q).unwrap();
        for dir in [Direction::Upper, Direction::Lower] {
            let shifted = shift_discrete(&pmf, &bounds, dir).unwrap();
            let total: f64 = shifted.probs().iter().sum();
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "trial {trial} {dir:?}: total {total}"
            );
            for (p, s) in pmf.probs().iter().zip(shifted.probs()) {
                assert!(
                    *s >= p / bounds.s_plus - 1e-12 && *s <= p / bounds.s_minus + 1e-12,
                    "trial {trial} {dir:?}: mass {s} outside [{}, {}]",
                    p / bounds.s_plus,
                    p / bounds.s_minus
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(5), "criterion 2");
    println!(
        "acceptance criterion 02 (shift normalization + ratio containment, 10^4 pmfs): PASS in {elapsed:?}"
    );
}

#[test]
fn criterion_03_knapsack_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = derived_rng(103, &[1]);
    let mut worst: f64 = 0.0;
    for trial in 0..1_000 {
        let size = rng.random_range(2..=12usize);
        let pmf = random_pmf(&mut rng, size, 8.0);
        let gamma: f64 = rng.random_range(1.0..=10.0);
        let bounds = RatioBounds::from_gamma(gamma, rng.random_range(0.0..=1.0)).unwrap();
        for (dir, maximize) in [(Direction::Upper, true), (Direction::Lower, false)] {
            let shifted = shift_discrete(&pmf, &bounds, dir).unwrap();
            let ours = apply_discrete(&Functional::Expectation, &shifted).unwrap();
            let oracle = knapsack_expectation(
                pmf.support(),
                pmf.probs(),
                bounds.s_minus,
                bounds.s_plus,
                maximize,
            );
            let err = (ours - oracle).abs();
            worst = worst.max(err);
            assert!(
                err <= 1e-10,
                "trial {trial} {dir:?}: {ours} vs oracle {oracle}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(5), "criterion 3");
    println!(
        "acceptance criterion 03 (greedy knapsack equivalence, 10^3 instances, worst {worst:.2e}): PASS in {elapsed:?}"
    );
}

#[test]
fn criterion_04_mediator_chain_brute_force() {
    let start = Instant::now();
    let mut rng = derived_rng(104, &[1]);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let p1: f64 = rng.random_range(0.05..0.95);
        let gamma_m: f64 = rng.random_range(1.0..5.0);
        let gamma_y: f64 = rng.random_range(1.0..5.0);
        let n_y = rng.random_range(2..=5usize);
        let y_support: Vec<f64> = {
            let mut v: f64 = rng.random_range(-2.0..0.0);
            (0..n_y)
                .map(|_| {
                    v += rng.random_range(0.1..1.5);
                    v
                })
                .collect()
        };
        let mut y_pmfs: Vec<Vec<f64>> = Vec::new();
        for _ in 0..2 {
            let raw: Vec<f64> = (0..n_y).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            y_pmfs.push(raw.iter().map(|v| v / total).collect());
        }

        let support = y_support.clone();
        let pmfs = y_pmfs.clone();
        let model = TableModel {
            pmfs: vec![Box::new(move |_, _| {
                DiscreteDist::new(vec![0.0, 1.0], vec![1.0 - p1, p1]).unwrap()
            })],
            outcome: Box::new(move |_, m, _| {
                csa_core::bounds::OutcomeDist::Discrete(
                    DiscreteDist::new(support.clone(), pmfs[m[0] as usize].clone()).unwrap(),
                )
            }),
            propensity: Some(0.5),
            kind: TreatmentKind::Discrete,
        };
        let mut spec = SensitivitySpec::new();
        spec.insert(
            "m",
            SensitivityEntry::Weighted {
                gamma: gamma_m,
                weight: WeightFn::ConstantZero,
            },
        )
        .unwrap();
        spec.insert(
            "y",
            SensitivityEntry::Weighted {
                gamma: gamma_y,
                weight: WeightFn::ConstantZero,
            },
        )
        .unwrap();
        let query = CausalQuery::new(
            vec![0.0],
            vec![1.0, 0.0],
            Functional::Expectation,
            vec!["m".into()],
        )
        .unwrap();
        let cfg = EvalConfig::default();

        for (dir, maximize) in [(Direction::Upper, true), (Direction::Lower, false)] {
            let ours = bound_with_mediators(&model, &query, &spec, dir, &cfg).unwrap();

            // Reference maximization: exact vertex enumeration for the
            // outcome polytopes, a 1e-3 grid over the mediator polytope.
            let q: Vec<f64> = (0..2)
                .map(|m| {
                    vertex_optimum(
                        &y_support,
                        &y_pmfs[m],
                        1.0 / gamma_y,
                        gamma_y,
                        maximize,
                    )
                })
                .collect();
            let lo1 = (p1 / gamma_m).max(1.0 - (1.0 - p1) * gamma_m);
            let hi1 = (p1 * gamma_m).min(1.0 - (1.0 - p1) / gamma_m);
            let steps = ((hi1 - lo1) / 1e-3).ceil() as usize;
            let mut brute = if maximize {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            for t in 0..=steps.max(1) {
                let w1 = lo1 + (hi1 - lo1) * t as f64 / steps.max(1) as f64;
                let value = w1 * q[1] + (1.0 - w1) * q[0];
                brute = if maximize {
                    brute.max(value)
                } else {
                    brute.min(value)
                };
            }
            let err = (ours - brute).abs();
            worst = worst.max(err);
            assert!(
                err <= 5e-3,
                "trial {trial} {dir:?}: chain bound {ours} vs reference {brute}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(120), "criterion 4");
    println!(
        "acceptance criterion 04 (mediator chain vs exhaustive search, 200 instances, worst {worst:.2e}): PASS in {elapsed:?}"
    );
}

#[test]
fn criterion_05_gaussian_analytic_oracle() {
    let start = Instant::now();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = derived_rng(105, &[1]);
    let draws: Vec<f64> = (0..1_000_000).map(|_| normal.sample(&mut rng)).collect();
    let sample = SampleDist::from_unsorted(draws).unwrap();
    let bounds = RatioBounds::from_explicit(0.5, 2.0).unwrap();

    // Mean of the shifted Gaussian: mass below the 2/3 quantile is scaled
    // by 1/2 and above by 2, which shifts the mean by phi(z) * 3/2 with
    // z the 2/3 normal quantile.
    let z = normal.inverse_cdf(2.0 / 3.0);
    let analytic_mean = normal.pdf(z) * (1.0 / bounds.s_minus - 1.0 / bounds.s_plus);
    assert!((analytic_mean - 0.5453996620129766).abs() < 1e-12);

    let upper = expectation_bound_sampled(&sample, &bounds, Direction::Upper);
    assert!(
        (upper - analytic_mean).abs() <= 0.01,
        "upper {upper} vs analytic {analytic_mean}"
    );
    let lower = expectation_bound_sampled(&sample, &bounds, Direction::Lower);
    assert!(
        (lower + analytic_mean).abs() <= 0.01,
        "lower {lower} vs analytic {}",
        -analytic_mean
    );

    // Median of the shifted CDF, inverted in closed form: the shifted CDF
    // reaches 1/2 above the split, so the base level is c + (1/2 - c/s) * s'.
    let median_level_upper: f64 = 2.0 / 3.0 + (0.5 - (2.0 / 3.0) / 2.0) * 0.5;
    assert!((median_level_upper - 0.75).abs() < 1e-12);
    let analytic_q_upper = normal.inverse_cdf(median_level_upper);
    let est = quantile_bound_sampled(&sample, &bounds, 0.5, Direction::Upper).unwrap();
    assert!(!est.saturated);
    assert!(
        (est.value - analytic_q_upper).abs() <= 0.02,
        "upper median {} vs analytic {analytic_q_upper}",
        est.value
    );

    let median_level_lower = 0.25;
    let analytic_q_lower = normal.inverse_cdf(median_level_lower);
    let est = quantile_bound_sampled(&sample, &bounds, 0.5, Direction::Lower).unwrap();
    assert!(
        (est.value - analytic_q_lower).abs() <= 0.02,
        "lower median {} vs analytic {analytic_q_lower}",
        est.value
    );

    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(10), "criterion 5");
    println!(
        "acceptance criterion 05 (Gaussian analytic oracle at 10^6 draws): PASS in {elapsed:?}"
    );
}

#[test]
fn criterion_06_no_assumptions_limit() {
    let start = Instant::now();
    // Binary outcome, balanced propensity, effectively unbounded
    // sensitivity: the upper bound sends all unexplained mass to the
    // largest outcome value.
    let model = TableModel {
        pmfs: vec![],
        outcome: Box::new(|_, _, _| {
            csa_core::bounds::OutcomeDist::Discrete(
                DiscreteDist::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
            )
        }),
        propensity: Some(0.5),
        kind: TreatmentKind::Discrete,
    };
    let spec = SensitivitySpec::uniform(&["y"], 1e6, WeightFn::Propensity).unwrap();
    let query = CausalQuery::new(vec![0.0], vec![1.0], Functional::Expectation, vec![]).unwrap();
    let cfg = EvalConfig::default();

    let upper = bound_no_mediators(&model, &query, &spec, Direction::Upper, &cfg).unwrap();
    let expected_upper = 0.5 * 0.5 + 0.5 * 1.0;
    assert!(
        (upper - expected_upper).abs() <= 1e-3,
        "upper {upper} vs {expected_upper}"
    );
    let lower = bound_no_mediators(&model, &query, &spec, Direction::Lower, &cfg).unwrap();
    let expected_lower = 0.5 * 0.5 + 0.5 * 0.0;
    assert!(
        (lower - expected_lower).abs() <= 1e-3,
        "lower {lower} vs {expected_lower}"
    );
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(1), "criterion 6");
    println!("acceptance criterion 06 (no-assumptions limit): PASS in {elapsed:?}");
}

#[test]
fn criterion_07_unit_collapse_and_nesting() {
    let gammas: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.9).collect();

    // Discrete pathway: exact arithmetic.
    let pmf = DiscreteDist::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let mut last: Option<(f64, f64)> = None;
    for &gamma in &gammas {
        let b = RatioBounds::from_gamma(gamma, 0.0).unwrap();
        let upper =
            apply_discrete(&Functional::Expectation, &shift_discrete(&pmf, &b, Direction::Upper).unwrap())
                .unwrap();
        let lower =
            apply_discrete(&Functional::Expectation, &shift_discrete(&pmf, &b, Direction::Lower).unwrap())
                .unwrap();
        if gamma == 1.0 {
            assert_eq!(upper, lower, "discrete pathway must collapse exactly");
        }
        if let Some((plo, pup)) = last {
            assert!(upper >= pup - 1e-12 && lower <= plo + 1e-12);
        }
        last = Some((lower, upper));
    }

    // Sampled pathway: collapse exactly at the identity, nesting within
    // Monte Carlo slack 2/sqrt(k).
    let k = 10_000usize;
    let slack = 2.0 / (k as f64).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = derived_rng(107, &[1]);
    let sample =
        SampleDist::from_unsorted((0..k).map(|_| normal.sample(&mut rng)).collect()).unwrap();
    let mut last: Option<(f64, f64)> = None;
    for &gamma in &gammas {
        let b = RatioBounds::from_gamma(gamma, 0.0).unwrap();
        let upper = expectation_bound_sampled(&sample, &b, Direction::Upper);
        let lower = expectation_bound_sampled(&sample, &b, Direction::Lower);
        if gamma == 1.0 {
            assert!(
                (upper - lower).abs() <= slack,
                "sampled collapse: {upper} vs {lower}"
            );
        }
        if let Some((plo, pup)) = last {
            assert!(upper >= pup - slack && lower <= plo + slack, "gamma={gamma}");
        }
        last = Some((lower, upper));
    }

    // Mediated pathway with sampled outcomes.
    let mut rng = derived_rng(107, &[2]);
    let cell: Vec<Vec<f64>> = (0..2)
        .map(|m| {
            let shift = m as f64 * 1.5;
            let mut draws: Vec<f64> =
                (0..2_000).map(|_| normal.sample(&mut rng) + shift).collect();
            draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
            draws
        })
        .collect();
    let model = TableModel {
        pmfs: vec![Box::new(|_, _| {
            DiscreteDist::new(vec![0.0, 1.0], vec![0.6, 0.4]).unwrap()
        })],
        outcome: Box::new(move |_, m, _| {
            csa_core::bounds::OutcomeDist::Sampled(
                SampleDist::new(cell[m[0] as usize].clone()).unwrap(),
            )
        }),
        propensity: Some(0.5),
        kind: TreatmentKind::Discrete,
    };
    let query = CausalQuery::new(
        vec![0.0],
        vec![1.0, 0.0],
        Functional::Expectation,
        vec!["m".into()],
    )
    .unwrap();
    let cfg = EvalConfig::default();
    let slack = 2.0 / (2_000f64).sqrt();
    let mut last: Option<(f64, f64)> = None;
    for &gamma in &gammas {
        let spec = SensitivitySpec::uniform(&["m", "y"], gamma, WeightFn::ConstantZero).unwrap();
        let upper = bound_with_mediators(&model, &query, &spec, Direction::Upper, &cfg).unwrap();
        let lower = bound_with_mediators(&model, &query, &spec, Direction::Lower, &cfg).unwrap();
        if gamma == 1.0 {
            assert!(
                (upper - lower).abs() <= slack,
                "mediated collapse: {upper} vs {lower}"
            );
        }
        if let Some((plo, pup)) = last {
            assert!(upper >= pup - slack && lower <= plo + slack, "gamma={gamma}");
        }
        last = Some((lower, upper));
    }

    println!("acceptance criterion 07 (unit collapse + nesting ladders): PASS");
}

#[test]
fn criterion_08_benchmark_validity() {
    let start = Instant::now();
    let cases: Vec<(&str, ScmPreset, ScmTreatment, Vec<f64>, Vec<String>)> = vec![
        (
            "setting (i) binary",
            ScmPreset::SettingI,
            ScmTreatment::Binary,
            vec![1.0],
            vec![],
        ),
        (
            "setting (ii) binary",
            ScmPreset::SettingII,
            ScmTreatment::Binary,
            vec![1.0, 0.0],
            vec!["m1".into()],
        ),
        (
            "setting (iii) binary",
            ScmPreset::SettingIII,
            ScmTreatment::Binary,
            vec![1.0, 0.0, 0.0],
            vec!["m1".into(), "m2".into()],
        ),
        (
            "setting (i) continuous",
            ScmPreset::SettingI,
            ScmTreatment::Continuous,
            vec![0.6],
            vec![],
        ),
        (
            "setting (ii) continuous",
            ScmPreset::SettingII,
            ScmTreatment::Continuous,
            vec![0.9, 0.5],
            vec!["m1".into()],
        ),
        (
            "setting (iii) continuous",
            ScmPreset::SettingIII,
            ScmTreatment::Continuous,
            vec![0.2, 0.4, 0.5],
            vec!["m1".into(), "m2".into()],
        ),
    ];

    let mut failures = Vec::new();
    for (i, (name, preset, kind, treatments, mediators)) in cases.into_iter().enumerate() {
        let cfg = ValidationConfig {
            scm: ScmConfig::preset(preset, kind, 800 + i as u64),
            n: 50_000,
            grid_points: 21,
            gamma_margin: 1.05,
            delta: 0.05,
            k: 10_000,
            n_mc: 100_000,
            fit: FitConfig::default(),
            treatments,
            mediators,
            functional: Functional::Expectation,
        };
        match run_validation(&cfg) {
            Ok(report) => {
                let line = format!(
                    "{name}: coverage {:.1}% (gammas {:?})",
                    100.0 * report.coverage,
                    report
                        .gammas
                        .iter()
                        .map(|g| (g * 100.0).round() / 100.0)
                        .collect::<Vec<_>>()
                );
                if report.coverage >= 0.9 {
                    println!("acceptance criterion 08 [{line}]: PASS");
                } else {
                    println!("acceptance criterion 08 [{line}]: FAIL");
                    failures.push(line);
                }
            }
            Err(err) => {
                let line = format!("{name}: {err}");
                println!("acceptance criterion 08 [{line}]: FAIL");
                failures.push(line);
            }
        }
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(15 * 60), "criterion 8");
    assert!(
        failures.is_empty(),
        "benchmark validity failed for {} of 6 configurations: {failures:#?}\n\
         note: the continuous-treatment presets for settings (ii) and (iii) request\n\
         Beta treatment shapes that are non-positive for part of the covariate and\n\
         confounder space (about 6-8% of rows); the generator contract forbids\n\
         clamping and raises instead, so these two configurations cannot run as\n\
         parameterized",
        failures.len()
    );
    println!("acceptance criterion 08 (benchmark validity, 6 settings): PASS in {elapsed:?}");
}

#[test]
fn criterion_09_weighted_restriction_comparison() {
    let start = Instant::now();
    let expected_plain = [0.33, 0.74, 1.25];
    let rows = run_weighted_comparison(
        900,
        50_000,
        21,
        &[1.2, 1.5, 2.0],
        0.6,
        5_000,
        &FitConfig::default(),
    )
    .unwrap();
    for (row, expected) in rows.iter().zip(expected_plain) {
        assert!(
            (row.plain_mean_length - expected).abs() <= 0.15,
            "gamma {}: plain length {} vs expected {expected} +- 0.15",
            row.gamma,
            row.plain_mean_length
        );
        let ratio = row.plain_mean_length / row.weighted_mean_length;
        assert!(
            ratio >= 1.5,
            "gamma {}: plain/weighted ratio {ratio} < 1.5 ({} vs {})",
            row.gamma,
            row.plain_mean_length,
            row.weighted_mean_length
        );
    }

    // A single bound evaluation at 5,000 draws stays under a second.
    let scm = ScmConfig::preset(ScmPreset::SettingIWeighted, ScmTreatment::Continuous, 901);
    let dataset = sample_dataset(&scm, 50_000).unwrap();
    let data = ObservedData::from_dataset(&dataset, 0);
    let model = FittedModel::fit(&data, &FitConfig::default(), TreatmentKind::Continuous).unwrap();
    let spec = SensitivitySpec::uniform(&["y"], 2.0, WeightFn::ConstantZero).unwrap();
    let query = CausalQuery::new(vec![0.3], vec![0.6], Functional::Expectation, vec![]).unwrap();
    let eval = EvalConfig { k: 5_000, seed: 9 };
    let timer = Instant::now();
    let result = compute_bounds(&model, &query, &spec, &eval).unwrap();
    let single_eval = timer.elapsed();
    assert!(result.lower <= result.upper);
    assert_runtime(single_eval, Duration::from_secs(1), "single bound evaluation");

    let elapsed = start.elapsed();
    let lengths: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r.gamma, r.plain_mean_length, r.weighted_mean_length))
        .collect();
    println!(
        "acceptance criterion 09 (weighted restriction comparison {lengths:?}, single eval {single_eval:?}): PASS in {elapsed:?}"
    );
}

#[test]
fn criterion_10_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csa = env!("CARGO_BIN_EXE_csa");
    let run = |config_path: &std::path::Path| {
        let out = std::process::Command::new(csa)
            .arg("--config")
            .arg(config_path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };

    // Simulated dataset bytes.
    let data_path = dir.path().join("obs.csv");
    let sim_cfg = dir.path().join("sim.json");
    std::fs::write(
        &sim_cfg,
        format!(
            r#"{{ "command": "simulate", "seed": 67, "output": "{}",
                 "simulate": {{ "scm": {{ "preset": "setting_ii", "treatment": "binary" }}, "n": 8000 }} }}"#,
            data_path.display()
        ),
    )
    .unwrap();
    run(&sim_cfg);
    let first = std::fs::read(&data_path).unwrap();
    run(&sim_cfg);
    assert_eq!(first, std::fs::read(&data_path).unwrap(), "dataset bytes differ");

    // Sweep with bootstrap over the full pipeline.
    let sweep_out = dir.path().join("sweep.csv");
    let sweep_cfg = dir.path().join("sweep.json");
    std::fs::write(
        &sweep_cfg,
        format!(
            r#"{{
  "command": "sweep",
  "seed": 5,
  "output": "{}",
  "bound": {{
    "data": "{}",
    "columns": {{ "x": ["x"], "a": "a", "mediators": ["m1"], "y": "y" }},
    "treatment": "discrete",
    "sensitivity": {{
      "m1": {{ "type": "weighted", "gamma": 1.0, "weight": {{ "kind": "propensity" }} }},
      "y": {{ "type": "weighted", "gamma": 1.5, "weight": {{ "kind": "propensity" }} }}
    }},
    "query": {{ "x": [0.1], "treatments": [1.0, 0.0], "functional": {{ "kind": "expectation" }}, "mediators": ["m1"] }},
    "k": 2000,
    "bootstrap": {{ "replicates": 5 }}
  }},
  "sweep": {{ "nodes": ["m1"], "gammas": [1.0, 2.0, 4.0] }}
}}"#,
            sweep_out.display(),
            data_path.display()
        ),
    )
    .unwrap();
    run(&sweep_cfg);
    let first = std::fs::read(&sweep_out).unwrap();
    run(&sweep_cfg);
    assert_eq!(first, std::fs::read(&sweep_out).unwrap(), "sweep bytes differ");

    println!("acceptance criterion 10 (byte-identical outputs per config + seed): PASS");
}
