mod common;

use std::fs;

use cardio_core::metrics::evaluate;
use cardio_report::bundle::{sha256_hex, Manifest};
use cardio_report::tables::{pct, score, PerformanceRow, CALIBRATION_HEADER, PERFORMANCE_HEADER};
use cardio_report::{run, Command, ReportError, RunOptions};
use common::{parse, Fixture};

fn run_fixture(fx: &Fixture, out: &str) -> cardio_report::RunOutcome {
    let opts = RunOptions {
        out: Some(fx.base().join(out)),
        ..RunOptions::default()
    };
    run(&fx.config(), fx.base(), Command::Run, &opts).unwrap()
}

#[test]
fn fixture_bundle_has_one_row_per_learner() {
    let fx = Fixture::new(200);
    let outcome = run_fixture(&fx, "out");
    assert_eq!(outcome.manifest.status, "complete");
    let (header, rows) = parse(&fx.read("out/tables/performance.csv"));
    assert_eq!(header, PERFORMANCE_HEADER);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["logistic", "knn", "cart", "gbt_oblivious"]);
    // markdown: header line, separator, one line per model
    assert_eq!(
        fx.read("out/tables/performance.md").lines().count(),
        rows.len() + 2
    );
    assert_eq!(
        fx.read("out/tables/calibration.md").lines().count(),
        rows.len() + 2
    );
    let (cal_header, _) = parse(&fx.read("out/tables/calibration.csv"));
    assert_eq!(cal_header, CALIBRATION_HEADER);
    assert_eq!(cal_header, ["model", "ece", "brier"]);
}

#[test]
fn tables_recompute_from_persisted_predictions() {
    let fx = Fixture::new(200);
    let outcome = run_fixture(&fx, "out");
    let (_, perf) = parse(&fx.read("out/tables/performance.csv"));
    let (_, cal) = parse(&fx.read("out/tables/calibration.csv"));
    for (prow, crow) in perf.iter().zip(&cal) {
        let (_, preds) = parse(&fx.read(&format!("out/predictions/{}.csv", prow[0])));
        let probs: Vec<f64> = preds.iter().map(|r| r[2].parse().unwrap()).collect();
        let labels: Vec<u8> = preds.iter().map(|r| r[3].parse().unwrap()).collect();
        let report = evaluate(&probs, &labels, 0.5, 10).unwrap();
        assert_eq!(
            &PerformanceRow::from_report(&prow[0], &report).cells(),
            prow
        );
        assert_eq!(crow[1], score(report.ece));
        assert_eq!(crow[2], score(report.brier));
        // and the in-memory report agrees with the file
        let mem = outcome
            .evaluated
            .iter()
            .find(|e| e.primary && e.learner == prow[0])
            .unwrap();
        assert_eq!(mem.report, report);
        assert_eq!(prow[1], pct(mem.report.metrics.accuracy));
    }
}

#[test]
fn reruns_are_byte_identical_apart_from_timings() {
    let fx = Fixture::new(200);
    let a = run_fixture(&fx, "a").manifest;
    let b = run_fixture(&fx, "b").manifest;
    assert_eq!(a.config_hash, b.config_hash);
    let names: Vec<&str> = a.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(
        names,
        b.files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>()
    );
    for (fa, fb) in a.files.iter().zip(&b.files) {
        // trial logs carry per-trial wall time
        if fa.name.starts_with("trials/") {
            continue;
        }
        assert_eq!(fa, fb, "{}", fa.name);
    }
    assert_eq!(
        fx.read("a/tables/performance.csv"),
        fx.read("b/tables/performance.csv")
    );
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let fx = Fixture::new(200);
    let outcome = run_fixture(&fx, "out");
    let m = Manifest::read(&outcome.dir).unwrap();
    assert_eq!(m, outcome.manifest);
    assert!(!m.timings.is_empty());
    for f in &m.files {
        let bytes = fs::read(outcome.dir.join(&f.name)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes, "{}", f.name);
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.name);
    }
    // nothing on disk is missing from the manifest
    let mut on_disk = Vec::new();
    let mut stack = vec![outcome.dir.clone()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                on_disk.push(
                    p.strip_prefix(&outcome.dir)
                        .unwrap()
                        .to_string_lossy()
                        .into_owned(),
                );
            }
        }
    }
    on_disk.retain(|n| n != "manifest.json");
    on_disk.sort();
    let listed: Vec<String> = m.files.iter().map(|f| f.name.clone()).collect();
    assert_eq!(on_disk, listed);
    for name in [
        "tables/performance.csv",
        "tables/calibration.md",
        "stats/battery.csv",
        "figures/correlation.csv",
        "figures/confusion.csv",
        "explain/importance.csv",
        "explain/shapley.csv",
        "trials/gbt_oblivious-pso.csv",
        "models/gbt_oblivious.json",
    ] {
        assert!(m.file(name).is_some(), "{name}");
    }
}

#[test]
fn figure_data_shapes() {
    let fx = Fixture::new(200);
    run_fixture(&fx, "out");
    for model in [
        "logistic",
        "knn",
        "cart",
        "gbt_oblivious",
        "gbt_oblivious-default",
    ] {
        let (_, rel) = parse(&fx.read(&format!("out/figures/reliability/{model}.csv")));
        assert!(!rel.is_empty() && rel.len() <= 10, "{model}");
        let (h, roc) = parse(&fx.read(&format!("out/figures/roc/{model}.csv")));
        assert_eq!(h, ["threshold", "fpr", "tpr"]);
        assert_eq!(roc.last().unwrap()[1..], ["1".to_string(), "1".to_string()]);
    }
    let (header, rows) = parse(&fx.read("out/figures/correlation.csv"));
    assert_eq!(rows.len() + 1, header.len());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], header[i + 1]);
        let diag: f64 = r[i + 1].parse().unwrap();
        assert!((diag - 1.0).abs() < 1e-12);
        for j in 0..rows.len() {
            assert_eq!(r[j + 1], rows[j][i + 1]);
        }
    }
    let (_, confusion) = parse(&fx.read("out/figures/confusion.csv"));
    // four learners plus defaults of the three tuned ones
    assert_eq!(confusion.len(), 7);
    let (_, density) = parse(&fx.read("out/figures/density_sample.csv"));
    assert_eq!(density.len(), 60);
}

#[test]
fn density_sample_depends_only_on_seed() {
    let fx = Fixture::new(200);
    let config = fx.config();
    let go = |seed: u64, out: &str| {
        let opts = RunOptions {
            out: Some(fx.base().join(out)),
            seed: Some(seed),
            models: None,
        };
        run(&config, fx.base(), Command::Stats, &opts).unwrap();
        fx.read(&format!("{out}/figures/density_sample.csv"))
    };
    assert_eq!(go(1, "a"), go(1, "b"));
    assert_ne!(go(1, "a"), go(2, "c"));
}

#[test]
fn statistics_battery_covers_the_default_tests() {
    let fx = Fixture::new(400);
    let opts = RunOptions::default();
    run(&fx.config(), fx.base(), Command::Stats, &opts).unwrap();
    let (header, rows) = parse(&fx.read("out/stats/battery.csv"));
    assert_eq!(header, ["test", "feature", "statistic", "df", "p", "note"]);
    let count = |t: &str| rows.iter().filter(|r| r[0] == t).count();
    assert_eq!(count("welch_t"), 6);
    assert_eq!(count("chi_square"), 6);
    assert_eq!(count("anova"), 1);
    for r in rows.iter().filter(|r| r[5].is_empty()) {
        let p: f64 = r[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&p), "{r:?}");
    }
    let (_, ors) = parse(&fx.read("out/stats/odds_ratios.csv"));
    assert!(ors
        .iter()
        .any(|r| r[0] == "univariate" && r[1] == "age_years"));
    assert_eq!(ors.iter().filter(|r| r[0] == "ap_hi+ap_lo").count(), 2);
    // stats alone does not train anything
    assert!(!fx.base().join("out/models").exists());
}

#[test]
fn config_hash_tracks_meaningful_fields_only() {
    let fx = Fixture::new(50);
    let base = fx.config();
    let h = base.hash();
    let mut moved = base.clone();
    moved.output.dir = "elsewhere".into();
    assert_eq!(moved.hash(), h);
    let with_default = cardio_report::RunConfig::from_toml(
        &common::FIXTURE_CONFIG.replace("[split]", "[metrics]\nece_bins = 10\n\n[split]"),
    )
    .unwrap();
    assert_eq!(with_default.hash(), h);

    let mut c = base.clone();
    c.seed += 1;
    assert_ne!(c.hash(), h);
    let mut c = base.clone();
    c.split.ratio = 0.7;
    assert_ne!(c.hash(), h);
    let mut c = base.clone();
    c.learners[1].hyperparameters.insert("k".into(), 9.0);
    assert_ne!(c.hash(), h);
    let mut c = base.clone();
    c.metrics.ece_bins = 15;
    assert_ne!(c.hash(), h);
}

#[test]
fn validation_reports_every_problem_at_once() {
    let text = common::FIXTURE_CONFIG
        .replace("cohort.csv", "missing.csv")
        .replace("ratio = 0.8", "ratio = 1.5")
        .replace("kind = \"cart\"", "kind = \"svm\"")
        .replace("[tuning]", "[tuning]\nmetric = \"roc\"");
    let fx = Fixture::with_config(50, &text);
    let err = run(
        &fx.config(),
        fx.base(),
        Command::Run,
        &RunOptions::default(),
    )
    .unwrap_err();
    let ReportError::Invalid(list) = &err else {
        panic!("expected validation error, got {err}");
    };
    assert_eq!(list.len(), 4, "{list:?}");
    let text = err.to_string();
    for needle in ["missing.csv", "split.ratio", "svm", "roc"] {
        assert!(text.contains(needle), "{needle} not in {text}");
    }
    assert!(!fx.base().join("out").exists());
}

#[test]
fn unknown_fields_and_bad_hyperparameters_are_rejected() {
    assert!(cardio_report::RunConfig::from_toml(&format!(
        "{}\nbogus = 1\n",
        "seed = 1\n[data]\npath = \"x\""
    ))
    .is_err());
    let text = common::FIXTURE_CONFIG.replace("k = 7", "k = 7, depth = 3");
    let fx = Fixture::with_config(50, &text);
    let errors = fx.config().validate(fx.base(), None).unwrap_err();
    assert!(
        errors
            .iter()
            .any(|e| e.contains("knn") && e.contains("depth")),
        "{errors:?}"
    );
}

#[test]
fn failing_stage_leaves_a_partial_bundle() {
    let fx = Fixture::new(50);
    // every row fails the pressure range
    let text = fx.read("cohort.csv");
    let broken: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return format!("{l}\n");
            }
            let mut f: Vec<&str> = l.split(';').collect();
            f[5] = "900";
            format!("{}\n", f.join(";"))
        })
        .collect();
    fs::write(fx.base().join("cohort.csv"), broken).unwrap();
    let err = run(
        &fx.config(),
        fx.base(),
        Command::Run,
        &RunOptions::default(),
    )
    .unwrap_err();
    let ReportError::Stage { stage, message, .. } = &err else {
        panic!("{err}");
    };
    assert_eq!(stage, "clean");
    assert!(message.contains("no rows"), "{message}");
    let m = Manifest::read(&fx.base().join("out")).unwrap();
    assert_eq!(m.status, "partial");
    assert_eq!(m.failed_stage.as_deref(), Some("clean"));
    assert!(m.file("ingest/cleaning_summary.csv").is_some());
}

#[test]
fn models_flag_restricts_the_roster() {
    let fx = Fixture::new(200);
    let opts = RunOptions {
        models: Some(vec!["cart".into(), "knn".into()]),
        ..RunOptions::default()
    };
    let outcome = run(&fx.config(), fx.base(), Command::Evaluate, &opts).unwrap();
    let (_, rows) = parse(&fx.read("out/tables/performance.csv"));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["knn", "cart"]);
    assert!(outcome.importance.is_none());
    let opts = RunOptions {
        models: Some(vec!["svm".into()]),
        ..RunOptions::default()
    };
    assert!(matches!(
        run(&fx.config(), fx.base(), Command::Evaluate, &opts),
        Err(ReportError::Invalid(_))
    ));
}

#[test]
fn explain_targets_the_best_calibrated_booster() {
    let fx = Fixture::new(200);
    let outcome = run_fixture(&fx, "out");
    assert_eq!(outcome.explained_model.as_deref(), Some("gbt_oblivious"));
    let (_, imp) = parse(&fx.read("out/explain/importance.csv"));
    let names: Vec<&str> = imp.iter().map(|r| r[1].as_str()).collect();
    assert!(names.contains(&"cholesterol") && names.contains(&"gluc"));
    assert_eq!(imp.len(), 12);
    let (_, summary) = parse(&fx.read("out/explain/shapley_summary.csv"));
    assert_eq!(summary.len(), 2);
    let (_, attr) = parse(&fx.read("out/explain/shapley.csv"));
    assert_eq!(attr.len(), 2 * 12);
    assert!(attr.iter().all(|r| !r[3].is_empty()));
}
