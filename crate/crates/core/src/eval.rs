//! Train/test evaluation of rule boosting: metrics, size/score curves and
//! benchmark reports.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_propositions, Dataset, Task};
use crate::error::{Error, Result};
use crate::learners::{boost, BoostConfig, BoostResult, Learner, RuleEnsemble};
use crate::loss::Loss;
use crate::search::{PruneStats, SearchConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How curve areas are computed; stored in report metadata.
pub const AREA_DEFINITION: &str = "arithmetic mean of the test score over ensemble sizes k = 1..max_rules";

/// Shuffled row indices split into `(train, test)`; train gets `ceil(frac * n)` rows.
pub fn split_indices(n: usize, train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!("train_frac must lie in (0, 1), got {train_frac}")));
    }
    let n_train = ((train_frac * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::DegenerateSplit { train: n_train.min(n), test: n - n_train.min(n) });
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = rows.split_off(n_train);
    Ok((rows, test))
}

pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n(), train_frac, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("ROC AUC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks of the positives
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[start]] {
            end += 1;
        }
        let mid_rank = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += idx[start..=end].iter().filter(|&&i| labels[i] > 0.0).count() as f64 * mid_rank;
        start = end + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() || targets.is_empty() {
        return Err(Error::Metric("predictions and targets differ in length".into()));
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Metric("R² is undefined for constant targets".into()));
    }
    let ss_res: f64 = preds.iter().zip(targets).map(|(p, y)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of rows where `sign(score)` matches the ±1 label; score 0 counts as -1.
pub fn accuracy(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() || labels.is_empty() {
        return Err(Error::Metric("scores and labels differ in length".into()));
    }
    let hits = scores.iter().zip(labels).filter(|(&s, &y)| (s > 0.0) == (y > 0.0)).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RocAuc,
    R2,
    Accuracy,
}

impl Metric {
    pub fn for_task(task: Task) -> Metric {
        match task {
            Task::Classification => Metric::RocAuc,
            Task::Regression => Metric::R2,
        }
    }

    pub fn score(self, scores: &[f64], targets: &[f64]) -> Result<f64> {
        match self {
            Metric::RocAuc => roc_auc(scores, targets),
            Metric::R2 => r2(scores, targets),
            Metric::Accuracy => accuracy(scores, targets),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::RocAuc => "roc_auc",
            Metric::R2 => "r2",
            Metric::Accuracy => "accuracy",
        })
    }
}

/// Score of each prefix ensemble on `test`, for `k = 1..=rules`.
pub fn size_score_curve(ens: &RuleEnsemble, test: &Dataset, metric: Metric) -> Result<Vec<(usize, f64)>> {
    let mut f = vec![0.0; test.n()];
    let mut curve = Vec::with_capacity(ens.rules.len());
    for (k, rule) in ens.rules.iter().enumerate() {
        for i in rule.extent(test)? {
            f[i] += rule.weight;
        }
        curve.push((k + 1, metric.score(&f, test.target())?));
    }
    Ok(curve)
}

/// Mean score over the curve's sizes.
pub fn area_under_size_curve(curve: &[(usize, f64)]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Metric("empty size/score curve".into()));
    }
    Ok(curve.iter().map(|&(_, s)| s).sum::<f64>() / curve.len() as f64)
}

/// Curve padded to `max_rules` sizes: sizes beyond an early-stopped
/// ensemble reuse the full ensemble.
fn padded_curve(ens: &RuleEnsemble, test: &Dataset, metric: Metric, max_rules: usize) -> Result<Vec<f64>> {
    let mut scores: Vec<f64> = size_score_curve(ens, test, metric)?.into_iter().map(|(_, s)| s).collect();
    let last = match scores.last() {
        Some(&s) => s,
        None => metric.score(&ens.predict_dataset(test)?, test.target())?,
    };
    scores.resize(max_rules, last);
    scores.truncate(max_rules);
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train_frac: f64,
    pub repetitions: usize,
    pub max_rules: usize,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
    pub learners: Vec<Learner>,
    #[serde(skip)]
    pub search: SearchConfig,
    pub max_thresholds: Option<usize>,
    /// Worker threads for independent (dataset, learner, repetition) cells.
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_frac: 0.8,
            repetitions: 5,
            max_rules: 10,
            lambda_grid: vec![0.0001, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            seed: 0,
            learners: vec![Learner::Optimal, Learner::Greedy],
            search: SearchConfig::default(),
            max_thresholds: Some(32),
            jobs: 1,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::InvalidConfig("train_frac must lie in (0, 1)".into()));
        }
        if self.repetitions == 0 || self.max_rules == 0 || self.jobs == 0 {
            return Err(Error::InvalidConfig("repetitions, max_rules and jobs must be positive".into()));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidConfig("lambda grid must be nonempty and non-negative".into()));
        }
        if self.learners.is_empty() {
            return Err(Error::InvalidConfig("no learners selected".into()));
        }
        self.search.validate()
    }
}

#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub name: String,
    pub data: Dataset,
    /// Overrides [`EvalConfig::max_rules`] for this dataset.
    pub max_rules: Option<usize>,
}

/// One report row: a (dataset, learner, repetition) cell at ensemble size `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub dataset: String,
    pub learner: Learner,
    pub lambda: f64,
    pub seed: u64,
    pub k: usize,
    pub metric: Metric,
    pub score: f64,
    pub fit_time_s: f64,
    pub nodes_expanded: u64,
    pub immediate_bound: u64,
    pub immediate_equiv: u64,
    pub propagated_bound: u64,
    pub propagated_equiv: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub learner: Learner,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub learner: Learner,
    pub metric: Metric,
    pub mean_area: f64,
    pub mean_fit_time_s: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub area_definition: String,
    pub config: EvalConfig,
    pub rows: Vec<CurvePoint>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
}

impl Report {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<report>".into(), source: e })?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn loss_for(task: Task) -> Loss {
    match task {
        Task::Classification => Loss::Logistic,
        Task::Regression => Loss::Squared,
    }
}

fn fit(train: &Dataset, cfg: &EvalConfig, learner: Learner, lambda: f64, k: usize) -> Result<BoostResult> {
    let props = build_propositions(train, cfg.max_thresholds)?;
    let bc = BoostConfig { k, lambda, learner, search: cfg.search.clone(), seed: cfg.seed };
    boost(train, &props, loss_for(train.task()), &bc)
}

/// Picks the λ whose validation curve has the largest area; the validation
/// fold is carved from the training split. Ties keep the earlier grid value.
fn select_lambda(train: &Dataset, cfg: &EvalConfig, learner: Learner, k: usize, seed: u64) -> Result<f64> {
    if cfg.lambda_grid.len() == 1 {
        return Ok(cfg.lambda_grid[0]);
    }
    let (inner, valid) = split(train, cfg.train_frac, seed ^ 0x5eed_1a4b_da00_0000)?;
    let metric = Metric::for_task(train.task());
    let mut best = (cfg.lambda_grid[0], f64::NEG_INFINITY);
    for &lambda in &cfg.lambda_grid {
        let fit = fit(&inner, cfg, learner, lambda, k)?;
        let area = padded_curve(&fit.ensemble, &valid, metric, k)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .unwrap_or(f64::NEG_INFINITY);
        if area > best.1 {
            best = (lambda, area);
        }
    }
    Ok(best.0)
}

fn run_cell(
    ds: &BenchDataset,
    cfg: &EvalConfig,
    learner: Learner,
    rep: usize,
) -> std::result::Result<Vec<CurvePoint>, CellFailure> {
    let seed = cfg.seed + rep as u64;
    let k = ds.max_rules.unwrap_or(cfg.max_rules);
    let fail = |e: Error| CellFailure { dataset: ds.name.clone(), learner, seed, error: e.to_string() };
    let (train, test) = split(&ds.data, cfg.train_frac, seed).map_err(fail)?;
    let lambda = select_lambda(&train, cfg, learner, k, seed).map_err(fail)?;
    let start = Instant::now();
    let result = fit(&train, cfg, learner, lambda, k).map_err(fail)?;
    let fit_time_s = start.elapsed().as_secs_f64();
    let metric = Metric::for_task(ds.data.task());
    let scores = padded_curve(&result.ensemble, &test, metric, k).map_err(fail)?;

    let mut cumulative = PruneStats::default();
    let mut rows = Vec::with_capacity(k);
    for (idx, score) in scores.into_iter().enumerate() {
        if let Some(round) = result.rounds.get(idx) {
            cumulative += round.stats;
        }
        rows.push(CurvePoint {
            dataset: ds.name.clone(),
            learner,
            lambda,
            seed,
            k: idx + 1,
            metric,
            score,
            fit_time_s,
            nodes_expanded: cumulative.nodes_expanded,
            immediate_bound: cumulative.immediate_bound,
            immediate_equiv: cumulative.immediate_equiv,
            propagated_bound: cumulative.propagated_bound,
            propagated_equiv: cumulative.propagated_equiv,
        });
    }
    Ok(rows)
}

fn summarize(rows: &[CurvePoint]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, Learner)> = rows.iter().map(|r| (r.dataset.clone(), r.learner)).collect();
    keys.dedup();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.to_string().cmp(&b.1.to_string())));
    keys.dedup();
    keys.into_iter()
        .map(|(dataset, learner)| {
            let cell_rows: Vec<&CurvePoint> =
                rows.iter().filter(|r| r.dataset == dataset && r.learner == learner).collect();
            let mut seeds: Vec<u64> = cell_rows.iter().map(|r| r.seed).collect();
            seeds.dedup();
            let reps = seeds.len();
            let mean_area = cell_rows.iter().map(|r| r.score).sum::<f64>() / cell_rows.len() as f64;
            let mean_fit_time_s =
                cell_rows.iter().filter(|r| r.k == 1).map(|r| r.fit_time_s).sum::<f64>() / reps as f64;
            SummaryRow { dataset, learner, metric: cell_rows[0].metric, mean_area, mean_fit_time_s, repetitions: reps }
        })
        .collect()
}

fn row_order(a: &CurvePoint, b: &CurvePoint) -> Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then(a.learner.to_string().cmp(&b.learner.to_string()))
        .then(a.seed.cmp(&b.seed))
        .then(a.k.cmp(&b.k))
}

/// Runs every (dataset, learner, repetition) cell and assembles a report.
///
/// Per cell: split, select λ on a validation fold of the training split,
/// refit on the full training split, score every ensemble size on the test
/// split. Failed cells are recorded and the run continues.
pub fn run_benchmark(cfg: &EvalConfig, datasets: &[BenchDataset]) -> Result<Report> {
    cfg.validate()?;
    let cells: Vec<(&BenchDataset, Learner, usize)> = datasets
        .iter()
        .flat_map(|ds| cfg.learners.iter().flat_map(move |&l| (0..cfg.repetitions).map(move |rep| (ds, l, rep))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| cells.par_iter().map(|&(ds, l, rep)| run_cell(ds, cfg, l, rep)).collect());

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => rows.extend(r),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(row_order);
    failures.sort_by(|a, b| a.dataset.cmp(&b.dataset).then(a.seed.cmp(&b.seed)));
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        area_definition: AREA_DEFINITION.into(),
        config: cfg.clone(),
        summary: summarize(&rows),
        rows,
        failures,
    })
}
