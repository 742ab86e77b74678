//! Stage orchestration: ingest, clean, stats, prepare, train, tune,
//! evaluate, explain. Each stage writes its files through the bundle writer.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cardio_core::explain::{permutation_importance, shapley_mc, ImportanceReport};
use cardio_core::ingest::{read_csv_file, validate_schema, write_rejected, RawDataset};
use cardio_core::learners::{fit, LearnerKind, LearnerSpec, ModelHandle};
use cardio_core::metrics::{evaluate, roc_points, EvalReport};
use cardio_core::preprocess::{
    apply_cleaning, encode_and_standardize, impute, quantile_sorted, stratified_split, BaseTable,
    CleaningOutcome, ColumnKind, Imputer, SplitPair, CLEANING_RULES,
};
use cardio_core::stats::{
    chi_square_independence, contingency, odds_ratios, one_way_anova, pearson_matrix, welch_t_test,
};
use cardio_core::tuning::{
    bayes_opt, cv_objective, format_config, grid_search, pso_search, random_search,
    stratified_kfold, BayesSettings, PsoSettings, TrialLog,
};
use cardio_core::FeatureFrame;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{BundleWriter, Manifest};
use crate::config::{mix, salt_of, ResolvedLearner, RunConfig};
use crate::spaces::Strategy;
use crate::tables::{
    calibration_rows, csv_table, markdown_table, opt_cell, performance_rows, CalibrationRow,
    PerformanceRow, CALIBRATION_HEADER, PERFORMANCE_HEADER,
};
use crate::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Stats,
    Train,
    Tune,
    Evaluate,
    Explain,
    Run,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Stats => "stats",
            Command::Train => "train",
            Command::Tune => "tune",
            Command::Evaluate => "evaluate",
            Command::Explain => "explain",
            Command::Run => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Plan {
    stats: bool,
    train: bool,
    tune: bool,
    evaluate: bool,
    explain: bool,
}

fn plan(command: Command, config: &RunConfig) -> Plan {
    let tune = config.tuning.enabled;
    let none = Plan {
        stats: false,
        train: false,
        tune: false,
        evaluate: false,
        explain: false,
    };
    match command {
        Command::Ingest => none,
        Command::Stats => Plan {
            stats: true,
            ..none
        },
        Command::Train => Plan {
            train: true,
            ..none
        },
        Command::Tune => Plan { tune: true, ..none },
        Command::Evaluate => Plan {
            train: true,
            tune,
            evaluate: true,
            ..none
        },
        Command::Explain => Plan {
            train: true,
            tune,
            evaluate: true,
            explain: true,
            ..none
        },
        Command::Run => Plan {
            stats: true,
            train: true,
            tune,
            evaluate: true,
            explain: config.explain.enabled,
        },
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; overrides the config.
    pub out: Option<PathBuf>,
    /// Root seed; overrides the config.
    pub seed: Option<u64>,
    /// Learner names to keep.
    pub models: Option<Vec<String>>,
}

/// One evaluated model.
#[derive(Debug, Clone)]
pub struct Evaluated {
    /// File stem and table label.
    pub label: String,
    pub learner: String,
    pub kind: LearnerKind,
    /// "default" or "tuned".
    pub variant: String,
    /// Whether this is the learner's reported model.
    pub primary: bool,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub cleaned_rows: usize,
    pub evaluated: Vec<Evaluated>,
    pub explained_model: Option<String>,
    pub importance: Option<ImportanceReport>,
}

#[derive(Default)]
struct State {
    cleaned_rows: usize,
    evaluated: Vec<Evaluated>,
    explained_model: Option<String>,
    importance: Option<ImportanceReport>,
}

type StageResult<T> = Result<T, String>;

fn s<E: Display>(e: E) -> String {
    e.to_string()
}

fn timed<T>(
    w: &mut BundleWriter,
    stage: &str,
    f: impl FnOnce(&mut BundleWriter) -> StageResult<T>,
) -> Result<T, (String, String)> {
    let start = Instant::now();
    let out = f(w);
    w.time(stage, start.elapsed().as_secs_f64());
    out.map_err(|m| (stage.to_string(), m))
}

/// Runs `command` and writes the bundle. A failing stage still leaves a
/// manifest, marked partial, naming the stage.
pub fn run(
    config: &RunConfig,
    base: &Path,
    command: Command,
    opts: &RunOptions,
) -> Result<RunOutcome, ReportError> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let learners = config
        .validate(base, opts.models.as_deref())
        .map_err(ReportError::Invalid)?;
    let dir = opts.out.clone().unwrap_or_else(|| config.output_dir(base));
    let mut writer = BundleWriter::create(&dir).map_err(|source| ReportError::Output {
        path: dir.clone(),
        source,
    })?;
    let mut state = State::default();
    let result = execute(&config, base, &learners, command, &mut writer, &mut state);
    let (status, failed_stage, error) = match &result {
        Ok(()) => ("complete", None, None),
        Err((stage, msg)) => ("partial", Some(stage.clone()), Some(msg.clone())),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: cardio_core::VERSION.into(),
        command: command.name().into(),
        config_hash: config.hash(),
        seed: config.seed,
        status: status.into(),
        failed_stage,
        error,
        timings: Vec::new(),
        files: Vec::new(),
    };
    let manifest = writer
        .finish(manifest)
        .map_err(|source| ReportError::Output {
            path: dir.clone(),
            source,
        })?;
    match result {
        Ok(()) => Ok(RunOutcome {
            dir,
            manifest,
            cleaned_rows: state.cleaned_rows,
            evaluated: state.evaluated,
            explained_model: state.explained_model,
            importance: state.importance,
        }),
        Err((stage, message)) => Err(ReportError::Stage {
            stage,
            message,
            dir,
        }),
    }
}

struct Prepared {
    filled: BaseTable,
    split: SplitPair,
    train: FeatureFrame,
    test: FeatureFrame,
}

fn execute(
    config: &RunConfig,
    base: &Path,
    learners: &[ResolvedLearner],
    command: Command,
    w: &mut BundleWriter,
    state: &mut State,
) -> Result<(), (String, String)> {
    let plan = plan(command, config);
    let raw = timed(w, "ingest", |w| ingest(config, base, w))?;
    let cleaned = timed(w, "clean", |w| clean(config, &raw, w))?;
    state.cleaned_rows = cleaned.retained.records.len();
    let table = BaseTable::from_records(&cleaned.retained.records, config.features.include_bmi)
        .map_err(|e| ("clean".to_string(), s(e)))?;
    if plan.stats {
        timed(w, "stats", |w| stats(config, &table, w))?;
    }
    if !(plan.train || plan.tune) {
        return Ok(());
    }
    let prep = timed(w, "prepare", |w| prepare(config, &table, w))?;
    let mut defaults = BTreeMap::new();
    if plan.train {
        defaults = timed(w, "train", |w| train(learners, &prep, w))?;
    }
    let mut tuned = BTreeMap::new();
    if plan.tune {
        tuned = timed(w, "tune", |w| tune(config, learners, &prep, w))?;
    }
    if plan.evaluate {
        state.evaluated = timed(w, "evaluate", |w| {
            evaluate_models(config, learners, &defaults, &tuned, &prep, w)
        })?;
    }
    if plan.explain {
        let (name, report) = timed(w, "explain", |w| {
            explain(
                config,
                learners,
                &defaults,
                &tuned,
                &state.evaluated,
                &prep,
                w,
            )
        })?;
        state.explained_model = Some(name);
        state.importance = Some(report);
    }
    Ok(())
}

fn ingest(config: &RunConfig, base: &Path, w: &mut BundleWriter) -> StageResult<RawDataset> {
    let delim = config.delimiter()?;
    let raw = read_csv_file(config.data_path(base), delim).map_err(s)?;
    let mut rejected = Vec::new();
    write_rejected(&raw.rejected, &mut rejected).map_err(s)?;
    w.write("ingest/rejected_rows.csv", &rejected).map_err(s)?;
    let violations: Vec<Vec<String>> = validate_schema(&raw)
        .into_iter()
        .map(|v| vec![v.line.to_string(), v.column, v.reason])
        .collect();
    w.write_str(
        "ingest/schema_violations.csv",
        &csv_table(&["line", "column", "reason"], &violations),
    )
    .map_err(s)?;
    Ok(raw)
}

fn clean(
    config: &RunConfig,
    raw: &RawDataset,
    w: &mut BundleWriter,
) -> StageResult<CleaningOutcome> {
    let out = apply_cleaning(raw, &config.cleaning);
    let mut rows = vec![
        vec![
            "rows_read".to_string(),
            (raw.records.len() + raw.rejected.len()).to_string(),
        ],
        vec![
            "rows_rejected_at_parse".to_string(),
            raw.rejected.len().to_string(),
        ],
    ];
    for rule in CLEANING_RULES {
        rows.push(vec![
            format!("dropped_{rule}"),
            out.dropped[rule].to_string(),
        ]);
    }
    rows.push(vec![
        "rows_retained".to_string(),
        out.retained.records.len().to_string(),
    ]);
    w.write_str(
        "ingest/cleaning_summary.csv",
        &csv_table(&["item", "count"], &rows),
    )
    .map_err(s)?;
    if out.retained.records.is_empty() {
        return Err("no rows survive cleaning".into());
    }
    let table =
        BaseTable::from_records(&out.retained.records, config.features.include_bmi).map_err(s)?;
    let census = table.outlier_census().map_err(s)?;
    let rows: Vec<Vec<String>> = census
        .columns
        .iter()
        .map(|(c, idx)| vec![c.clone(), idx.len().to_string()])
        .collect();
    w.write_str(
        "ingest/outliers.csv",
        &csv_table(&["column", "iqr_outliers"], &rows),
    )
    .map_err(s)?;
    Ok(out)
}

/// Present (value, target) pairs of a column.
fn pairs(table: &BaseTable, name: &str) -> (Vec<f64>, Vec<u8>) {
    let c = table.column(name).expect("column exists");
    c.values
        .iter()
        .zip(&table.target)
        .filter_map(|(v, &t)| v.map(|v| (v, t)))
        .unzip()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn stats(config: &RunConfig, table: &BaseTable, w: &mut BundleWriter) -> StageResult<()> {
    let mut battery = Vec::new();
    let mut groups = Vec::new();
    let mut push =
        |test: &str, feature: &str, r: cardio_core::Result<cardio_core::stats::TestResult>| match r
        {
            Ok(r) => battery.push(vec![
                test.to_string(),
                feature.to_string(),
                r.statistic.to_string(),
                r.df.to_string(),
                r.p_value.to_string(),
                String::new(),
            ]),
            Err(e) => battery.push(vec![
                test.to_string(),
                feature.to_string(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ]),
        };
    for c in table
        .columns
        .iter()
        .filter(|c| c.kind == ColumnKind::Numeric)
    {
        let (v, t) = pairs(table, &c.name);
        let pos: Vec<f64> = v
            .iter()
            .zip(&t)
            .filter(|(_, &t)| t == 1)
            .map(|(v, _)| *v)
            .collect();
        let neg: Vec<f64> = v
            .iter()
            .zip(&t)
            .filter(|(_, &t)| t == 0)
            .map(|(v, _)| *v)
            .collect();
        push("welch_t", &c.name, welch_t_test(&pos, &neg));
        for (level, g) in [("0", &neg), ("1", &pos)] {
            if !g.is_empty() {
                groups.push(vec![
                    c.name.clone(),
                    "cardio".into(),
                    level.into(),
                    g.len().to_string(),
                    mean(g).to_string(),
                    median(g).to_string(),
                ]);
            }
        }
    }
    for c in table
        .columns
        .iter()
        .filter(|c| c.kind != ColumnKind::Numeric)
    {
        let (v, t) = pairs(table, &c.name);
        let rows: Vec<i64> = v.iter().map(|&v| v as i64).collect();
        let cols: Vec<i64> = t.iter().map(|&t| t as i64).collect();
        let (_, _, counts) = contingency(&rows, &cols);
        push("chi_square", &c.name, chi_square_independence(&counts));
    }
    // ap_hi across cholesterol levels
    let (hi, chol) = (
        table.column("ap_hi").unwrap(),
        table.column("cholesterol").unwrap(),
    );
    let mut by_level: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (h, c) in hi.values.iter().zip(&chol.values) {
        if let (Some(h), Some(c)) = (h, c) {
            by_level.entry(*c as i64).or_default().push(*h);
        }
    }
    push(
        "anova",
        "ap_hi~cholesterol",
        one_way_anova(&by_level.values().cloned().collect::<Vec<_>>()),
    );
    for (level, g) in &by_level {
        groups.push(vec![
            "ap_hi".into(),
            "cholesterol".into(),
            level.to_string(),
            g.len().to_string(),
            mean(g).to_string(),
            median(g).to_string(),
        ]);
    }
    w.write_str(
        "stats/battery.csv",
        &csv_table(
            &["test", "feature", "statistic", "df", "p", "note"],
            &battery,
        ),
    )
    .map_err(s)?;
    w.write_str(
        "stats/group_summary.csv",
        &csv_table(&["feature", "by", "level", "n", "mean", "median"], &groups),
    )
    .map_err(s)?;

    let mut or_rows = Vec::new();
    let or_row = |model: &str, e: &cardio_core::stats::OddsRatioEstimate| {
        vec![
            model.to_string(),
            e.feature.clone(),
            e.beta.to_string(),
            e.odds_ratio.to_string(),
            e.intercept.to_string(),
            e.converged.to_string(),
            e.separation.clone().unwrap_or_default(),
        ]
    };
    for c in &table.columns {
        let (v, t) = pairs(table, &c.name);
        match odds_ratios(&[v], std::slice::from_ref(&c.name), &t) {
            Ok(est) => or_rows.push(or_row("univariate", &est[0])),
            Err(e) => or_rows.push(vec![
                "univariate".into(),
                c.name.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ]),
        }
    }
    let lo = table.column("ap_lo").unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut y = Vec::new();
    for ((h, l), &t) in hi.values.iter().zip(&lo.values).zip(&table.target) {
        if let (Some(h), Some(l)) = (h, l) {
            a.push(*h);
            b.push(*l);
            y.push(t);
        }
    }
    if let Ok(est) = odds_ratios(&[a, b], &["ap_hi".into(), "ap_lo".into()], &y) {
        for e in &est {
            or_rows.push(or_row("ap_hi+ap_lo", e));
        }
    }
    w.write_str(
        "stats/odds_ratios.csv",
        &csv_table(
            &[
                "model",
                "feature",
                "beta",
                "odds_ratio",
                "intercept",
                "converged",
                "note",
            ],
            &or_rows,
        ),
    )
    .map_err(s)?;

    correlation_and_density(config, table, w)
}

/// Figure data: correlation matrix over complete rows and a seeded sample
/// of raw rows for density plots.
fn correlation_and_density(
    config: &RunConfig,
    table: &BaseTable,
    w: &mut BundleWriter,
) -> StageResult<()> {
    let n = table.n_rows();
    let complete: Vec<usize> = (0..n)
        .filter(|&i| table.columns.iter().all(|c| c.values[i].is_some()))
        .collect();
    let mut labels: Vec<String> = table.columns.iter().map(|c| c.name.clone()).collect();
    labels.push("cardio".into());
    let mut cols: Vec<Vec<f64>> = table
        .columns
        .iter()
        .map(|c| complete.iter().map(|&i| c.values[i].unwrap()).collect())
        .collect();
    cols.push(complete.iter().map(|&i| table.target[i] as f64).collect());
    let m = pearson_matrix(&cols, &labels).map_err(s)?;
    let mut header = vec!["feature".to_string()];
    header.extend(labels.iter().cloned());
    let rows: Vec<Vec<String>> = m
        .values
        .iter()
        .zip(&labels)
        .map(|(r, l)| {
            let mut row = vec![l.clone()];
            row.extend(
                r.iter()
                    .map(|v| v.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())),
            );
            row
        })
        .collect();
    w.write_str("figures/correlation.csv", &csv_table(&header, &rows))
        .map_err(s)?;

    let k = config.output.density_samples.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, salt_of("density")));
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    let mut header = vec!["id".to_string()];
    header.extend(table.columns.iter().map(|c| c.name.clone()));
    header.push("cardio".into());
    let rows: Vec<Vec<String>> = idx
        .iter()
        .map(|&i| {
            let mut row = vec![table.ids[i].to_string()];
            row.extend(table.columns.iter().map(|c| opt_cell(c.values[i])));
            row.push(table.target[i].to_string());
            row
        })
        .collect();
    w.write_str("figures/density_sample.csv", &csv_table(&header, &rows))
        .map_err(s)
}

#[derive(Serialize)]
struct PreprocessSummary<'a> {
    split_seed: u64,
    ratio: f64,
    train_rows: usize,
    test_rows: usize,
    train_positive_rate: f64,
    test_positive_rate: f64,
    imputer: &'a Imputer,
    scaler: &'a cardio_core::Scaler,
    columns: &'a [String],
}

fn prepare(config: &RunConfig, table: &BaseTable, w: &mut BundleWriter) -> StageResult<Prepared> {
    let split =
        stratified_split(&table.target, config.split.ratio, config.split_seed()).map_err(s)?;
    let (filled, imputer) = impute(table, &split.train_indices).map_err(s)?;
    let frame = encode_and_standardize(&filled, &split.train_indices).map_err(s)?;
    let train = frame.subset(&split.train_indices);
    let test = frame.subset(&split.test_indices);
    let summary = PreprocessSummary {
        split_seed: split.seed,
        ratio: config.split.ratio,
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        train_positive_rate: train.positive_rate(),
        test_positive_rate: test.positive_rate(),
        imputer: &imputer,
        scaler: &frame.scaler,
        columns: &frame.column_names,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(s)?;
    w.write_str("preprocess.json", &(text + "\n")).map_err(s)?;
    Ok(Prepared {
        filled,
        split,
        train,
        test,
    })
}

fn save_model(w: &mut BundleWriter, label: &str, model: &ModelHandle) -> StageResult<()> {
    let text = model.to_json().map_err(s)?;
    w.write_str(&format!("models/{label}.json"), &(text + "\n"))
        .map_err(s)
}

fn train(
    learners: &[ResolvedLearner],
    prep: &Prepared,
    w: &mut BundleWriter,
) -> StageResult<BTreeMap<String, ModelHandle>> {
    let mut out = BTreeMap::new();
    for l in learners {
        let model = fit(&l.spec, &prep.train).map_err(|e| format!("{}: {e}", l.name))?;
        save_model(w, &format!("{}-default", l.name), &model)?;
        out.insert(l.name.clone(), model);
    }
    Ok(out)
}

/// Stratified subsample of `frame` with at most `cap` rows (0 = no cap).
fn stratified_subsample(frame: &FeatureFrame, cap: usize, seed: u64) -> StageResult<FeatureFrame> {
    let n = frame.n_rows();
    if cap == 0 || n <= cap {
        return Ok(frame.clone());
    }
    let pick = stratified_split(&frame.target, cap as f64 / n as f64, seed).map_err(s)?;
    Ok(frame.subset(&pick.train_indices))
}

fn search(
    config: &RunConfig,
    learner: &ResolvedLearner,
    strategy: Strategy,
    cv: &FeatureFrame,
    folds: &[SplitPair],
) -> StageResult<TrialLog> {
    let t = &config.tuning;
    let metric = config.tuning_metric()?;
    let seed = mix(
        config.tuning_seed(),
        salt_of(&learner.name) ^ salt_of(strategy.name()),
    );
    let objective = cv_objective(&learner.spec, cv, folds, metric);
    let log = match strategy {
        Strategy::Grid => grid_search(&learner.grid, t.grid_cap, objective),
        Strategy::Random => random_search(&learner.space, t.random_budget, seed, objective),
        Strategy::Bayes => bayes_opt(
            &learner.space,
            &BayesSettings {
                budget: t.bayes_budget,
                initial_points: t.bayes_initial,
                ..BayesSettings::default()
            },
            seed,
            objective,
        ),
        Strategy::Pso => pso_search(
            &learner.space,
            &PsoSettings {
                swarm_size: t.pso_swarm,
                iterations: t.pso_iterations,
                ..PsoSettings::default()
            },
            seed,
            objective,
        ),
    };
    log.map_err(|e| format!("{} {}: {e}", learner.name, strategy))
}

fn tune(
    config: &RunConfig,
    learners: &[ResolvedLearner],
    prep: &Prepared,
    w: &mut BundleWriter,
) -> StageResult<BTreeMap<String, ModelHandle>> {
    let seed = config.tuning_seed();
    let cv = stratified_subsample(
        &prep.train,
        config.tuning.subsample,
        mix(seed, salt_of("subsample")),
    )?;
    let folds = stratified_kfold(&cv.target, config.tuning.folds, mix(seed, salt_of("folds")))
        .map_err(s)?;
    let metric = config.tuning_metric()?;
    let mut summary = Vec::new();
    let mut out = BTreeMap::new();
    for l in learners.iter().filter(|l| !l.strategies.is_empty()) {
        let mut best: Option<(f64, cardio_core::tuning::Config, Strategy)> = None;
        for &st in &l.strategies {
            let log = search(config, l, st, &cv, &folds)?;
            w.write_str(&format!("trials/{}-{}.csv", l.name, st), &log.to_csv())
                .map_err(s)?;
            let top = log.best();
            summary.push(vec![
                l.name.clone(),
                st.to_string(),
                metric.to_string(),
                log.trials.len().to_string(),
                log.failures().to_string(),
                opt_cell(top.and_then(|t| t.mean)),
                opt_cell(top.and_then(|t| t.sd)),
                top.map(|t| format_config(&t.config)).unwrap_or_default(),
            ]);
            if let Some(t) = top {
                let m = t.mean.unwrap();
                if best.as_ref().is_none_or(|(b, _, _)| m > *b) {
                    best = Some((m, t.config.clone(), st));
                }
            }
        }
        let (_, config_best, st) =
            best.ok_or_else(|| format!("{}: every tuning trial failed", l.name))?;
        let mut spec: LearnerSpec = l.spec.clone();
        for (k, v) in &config_best {
            spec.hyperparameters.insert(k.clone(), *v);
        }
        let model = fit(&spec, &prep.train).map_err(|e| format!("{}: {e}", l.name))?;
        save_model(w, &l.name, &model)?;
        summary.push(vec![
            l.name.clone(),
            format!("selected:{st}"),
            metric.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format_config(&config_best),
        ]);
        out.insert(l.name.clone(), model);
    }
    w.write_str(
        "tuning_summary.csv",
        &csv_table(
            &[
                "model",
                "strategy",
                "metric",
                "trials",
                "failures",
                "best_mean",
                "best_sd",
                "best_config",
            ],
            &summary,
        ),
    )
    .map_err(s)?;
    Ok(out)
}

fn evaluate_models(
    config: &RunConfig,
    learners: &[ResolvedLearner],
    defaults: &BTreeMap<String, ModelHandle>,
    tuned: &BTreeMap<String, ModelHandle>,
    prep: &Prepared,
    w: &mut BundleWriter,
) -> StageResult<Vec<Evaluated>> {
    let mut evaluated = Vec::new();
    for l in learners {
        let mut variants: Vec<(String, &str, bool, &ModelHandle)> = Vec::new();
        match (defaults.get(&l.name), tuned.get(&l.name)) {
            (Some(d), Some(t)) => {
                variants.push((l.name.clone(), "tuned", true, t));
                variants.push((format!("{}-default", l.name), "default", false, d));
            }
            (Some(d), None) => variants.push((l.name.clone(), "default", true, d)),
            (None, Some(t)) => variants.push((l.name.clone(), "tuned", true, t)),
            (None, None) => return Err(format!("{}: no fitted model", l.name)),
        }
        for (label, variant, primary, model) in variants {
            let probs = model
                .predict_proba(&prep.test)
                .map_err(|e| format!("{label}: {e}"))?;
            let labels = &prep.test.target;
            let report = evaluate(
                &probs,
                labels,
                config.metrics.threshold,
                config.metrics.ece_bins,
            )
            .map_err(|e| format!("{label}: {e}"))?;
            let rows: Vec<Vec<String>> = prep
                .split
                .test_indices
                .iter()
                .zip(&probs)
                .zip(labels)
                .map(|((&i, p), y)| {
                    vec![
                        i.to_string(),
                        prep.filled.ids[i].to_string(),
                        p.to_string(),
                        y.to_string(),
                    ]
                })
                .collect();
            w.write_str(
                &format!("predictions/{label}.csv"),
                &csv_table(&["index", "id", "prob", "label"], &rows),
            )
            .map_err(s)?;
            write_curves(w, &label, &probs, labels, &report)?;
            evaluated.push(Evaluated {
                label,
                learner: l.name.clone(),
                kind: l.spec.kind,
                variant: variant.to_string(),
                primary,
                report,
            });
        }
    }
    write_tables(w, config, &evaluated)?;
    Ok(evaluated)
}

fn write_curves(
    w: &mut BundleWriter,
    label: &str,
    probs: &[f64],
    labels: &[u8],
    r: &EvalReport,
) -> StageResult<()> {
    let rows: Vec<Vec<String>> = r
        .reliability_points
        .iter()
        .map(|p| {
            vec![
                p.bin_low.to_string(),
                p.bin_high.to_string(),
                p.mean_confidence.to_string(),
                p.empirical_frequency.to_string(),
                p.count.to_string(),
            ]
        })
        .collect();
    w.write_str(
        &format!("figures/reliability/{label}.csv"),
        &csv_table(
            &[
                "bin_low",
                "bin_high",
                "mean_confidence",
                "empirical_frequency",
                "count",
            ],
            &rows,
        ),
    )
    .map_err(s)?;
    let rows: Vec<Vec<String>> = roc_points(probs, labels)
        .map_err(s)?
        .into_iter()
        .map(|(t, f, tp)| vec![t.to_string(), f.to_string(), tp.to_string()])
        .collect();
    w.write_str(
        &format!("figures/roc/{label}.csv"),
        &csv_table(&["threshold", "fpr", "tpr"], &rows),
    )
    .map_err(s)
}

fn write_tables(
    w: &mut BundleWriter,
    config: &RunConfig,
    evaluated: &[Evaluated],
) -> StageResult<()> {
    let primary: Vec<&Evaluated> = evaluated.iter().filter(|e| e.primary).collect();
    let perf: Vec<PerformanceRow> = primary
        .iter()
        .map(|e| PerformanceRow::from_report(&e.learner, &e.report))
        .collect();
    let cal: Vec<CalibrationRow> = primary
        .iter()
        .map(|e| CalibrationRow::from_report(&e.learner, &e.report))
        .collect();
    let (p, c) = (performance_rows(&perf), calibration_rows(&cal));
    w.write_str(
        "tables/performance.csv",
        &csv_table(&PERFORMANCE_HEADER, &p),
    )
    .map_err(s)?;
    w.write_str(
        "tables/performance.md",
        &markdown_table(&PERFORMANCE_HEADER, &p),
    )
    .map_err(s)?;
    w.write_str(
        "tables/calibration.csv",
        &csv_table(&CALIBRATION_HEADER, &c),
    )
    .map_err(s)?;
    w.write_str(
        "tables/calibration.md",
        &markdown_table(&CALIBRATION_HEADER, &c),
    )
    .map_err(s)?;

    let mut header: Vec<&str> = PERFORMANCE_HEADER.to_vec();
    header.insert(1, "Variant");
    header.extend(["ECE", "Brier"]);
    let rows: Vec<Vec<String>> = evaluated
        .iter()
        .map(|e| {
            let mut r = PerformanceRow::from_report(&e.learner, &e.report).cells();
            r.insert(1, e.variant.clone());
            r.extend(
                CalibrationRow::from_report(&e.learner, &e.report)
                    .cells()
                    .into_iter()
                    .skip(1),
            );
            r
        })
        .collect();
    w.write_str("tables/variants.csv", &csv_table(&header, &rows))
        .map_err(s)?;
    w.write_str("tables/variants.md", &markdown_table(&header, &rows))
        .map_err(s)?;

    let rows: Vec<Vec<String>> = evaluated
        .iter()
        .map(|e| {
            let cm = &e.report.confusion;
            vec![
                e.label.clone(),
                config.metrics.threshold.to_string(),
                cm.tp.to_string(),
                cm.fp.to_string(),
                cm.tn.to_string(),
                cm.fn_.to_string(),
            ]
        })
        .collect();
    w.write_str(
        "figures/confusion.csv",
        &csv_table(&["model", "threshold", "tp", "fp", "tn", "fn"], &rows),
    )
    .map_err(s)
}

/// The reported model to explain: lowest ECE among boosting learners, or
/// among all learners when none boosts. Ties keep roster order.
pub fn explain_target(evaluated: &[Evaluated]) -> Option<&Evaluated> {
    let primary: Vec<&Evaluated> = evaluated.iter().filter(|e| e.primary).collect();
    let pool: Vec<&Evaluated> = if primary.iter().any(|e| e.kind.is_boosting()) {
        primary
            .into_iter()
            .filter(|e| e.kind.is_boosting())
            .collect()
    } else {
        primary
    };
    pool.into_iter()
        .fold(None, |best: Option<&Evaluated>, e| match best {
            Some(b) if b.report.ece <= e.report.ece => Some(b),
            _ => Some(e),
        })
}

fn explain(
    config: &RunConfig,
    learners: &[ResolvedLearner],
    defaults: &BTreeMap<String, ModelHandle>,
    tuned: &BTreeMap<String, ModelHandle>,
    evaluated: &[Evaluated],
    prep: &Prepared,
    w: &mut BundleWriter,
) -> StageResult<(String, ImportanceReport)> {
    let target = explain_target(evaluated).ok_or("no evaluated model to explain")?;
    let model = tuned
        .get(&target.learner)
        .or_else(|| defaults.get(&target.learner))
        .ok_or("explained model is missing")?;
    debug_assert!(learners.iter().any(|l| l.name == target.learner));
    let x = &config.explain;
    let seed = config.explain_seed();
    let metric = config.explain_metric()?;

    let rows = stratified_subsample(&prep.test, x.rows, mix(seed, salt_of("importance-rows")))?;
    let report = permutation_importance(model, &rows, metric, x.repeats, seed).map_err(s)?;
    let table: Vec<Vec<String>> = report
        .ranked()
        .iter()
        .enumerate()
        .map(|(r, f)| {
            vec![
                (r + 1).to_string(),
                f.name.clone(),
                f.mean_drop.to_string(),
                f.sd.to_string(),
                f.skipped.to_string(),
            ]
        })
        .collect();
    w.write_str(
        "explain/importance.csv",
        &csv_table(&["rank", "feature", "mean_drop", "sd", "skipped"], &table),
    )
    .map_err(s)?;

    let background =
        stratified_subsample(&prep.train, x.background, mix(seed, salt_of("background")))?;
    let k = x.instances.min(prep.test.n_rows());
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, salt_of("instances")));
    let mut picks = sample(&mut rng, prep.test.n_rows(), k).into_vec();
    picks.sort_unstable();
    let units = prep.test.feature_units();
    let mut attr_rows = Vec::new();
    let mut summary = Vec::new();
    for &local in &picks {
        let row = prep.split.test_indices[local];
        let a = shapley_mc(
            model,
            &prep.test,
            local,
            &background,
            x.samples,
            mix(seed, row as u64),
        )
        .map_err(s)?;
        let id = prep.filled.ids[row];
        for (u, (name, _)) in a.features.iter().zip(&units) {
            let raw = prep.filled.column(name).and_then(|c| c.values[row]);
            attr_rows.push(vec![
                row.to_string(),
                id.to_string(),
                u.name.clone(),
                opt_cell(raw),
                u.phi.to_string(),
                u.standard_error.to_string(),
            ]);
        }
        summary.push(vec![
            row.to_string(),
            id.to_string(),
            a.base_value.to_string(),
            a.output.to_string(),
            a.phi_sum().to_string(),
            a.efficiency_se.to_string(),
            a.n_samples.to_string(),
        ]);
    }
    w.write_str(
        "explain/shapley.csv",
        &csv_table(
            &[
                "index",
                "id",
                "feature",
                "raw_value",
                "phi",
                "standard_error",
            ],
            &attr_rows,
        ),
    )
    .map_err(s)?;
    w.write_str(
        "explain/shapley_summary.csv",
        &csv_table(
            &[
                "index",
                "id",
                "base_value",
                "output",
                "phi_sum",
                "efficiency_se",
                "n_samples",
            ],
            &summary,
        ),
    )
    .map_err(s)?;
    let meta = vec![
        vec!["model".to_string(), target.learner.clone()],
        vec!["importance_metric".to_string(), metric.to_string()],
        vec![
            "importance_baseline".to_string(),
            report.baseline.to_string(),
        ],
        vec!["importance_rows".to_string(), rows.n_rows().to_string()],
        vec!["repeats".to_string(), x.repeats.to_string()],
        vec![
            "background_rows".to_string(),
            background.n_rows().to_string(),
        ],
    ];
    w.write_str("explain/summary.csv", &csv_table(&["item", "value"], &meta))
        .map_err(s)?;
    Ok((target.learner.clone(), report))
}
