//! Gradient rule boosting with an optimal or greedy base learner.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{intersect_extents, ColumnData, Dataset, Op, PropositionSet, RawTable, Task, Threshold};
use crate::error::{Error, Result};
use crate::loss::{gradient_stats, risk_from_predictions, sigmoid, GradientStats, Loss, ObjectiveContext};
use crate::search::{find_best_query, PruneStats, Query, SearchConfig};

/// Rounds whose gain does not exceed this end boosting.
pub const MIN_ROUND_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Optimal,
    Greedy,
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Learner::Optimal => "optimal",
            Learner::Greedy => "greedy",
        })
    }
}

/// One atomic test of a rule, referring to a feature by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub op: Op,
    pub value: Threshold,
}

impl Condition {
    /// Evaluates against a raw CSV cell.
    pub fn holds_cell(&self, cell: &str) -> Result<bool> {
        match (&self.value, self.op) {
            (Threshold::Num(t), Op::Leq | Op::Gt) => {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Schema(format!("column {:?}: expected a number, found {cell:?}", self.feature))
                })?;
                Ok(if self.op == Op::Leq { v <= *t } else { v > *t })
            }
            (Threshold::Cat(t), Op::Eq) => Ok(cell.trim() == t),
            (Threshold::Cat(t), Op::Neq) => Ok(cell.trim() != t),
            _ => Err(Error::Schema(format!("malformed condition on {:?}", self.feature))),
        }
    }

    /// Rows of `ds` satisfying the condition.
    fn extent(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let col = ds
            .column_index(&self.feature)
            .ok_or_else(|| Error::Schema(format!("column {:?} not found", self.feature)))?;
        let n = ds.n();
        match (&ds.columns()[col].data, &self.value, self.op) {
            (ColumnData::Numeric(v), Threshold::Num(t), Op::Leq) => Ok((0..n).filter(|&i| v[i] <= *t).collect()),
            (ColumnData::Numeric(v), Threshold::Num(t), Op::Gt) => Ok((0..n).filter(|&i| v[i] > *t).collect()),
            (ColumnData::Categorical { codes, levels }, Threshold::Cat(t), Op::Eq | Op::Neq) => {
                let code = levels.iter().position(|l| l == t);
                let want_equal = self.op == Op::Eq;
                Ok((0..n).filter(|&i| (Some(codes[i] as usize) == code) == want_equal).collect())
            }
            _ => Err(Error::Schema(format!("column {:?} has the wrong type for {self}", self.feature))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.feature, self.op.symbol(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub weight: f64,
    /// Conjunction; empty means the rule always fires.
    pub conditions: Vec<Condition>,
}

impl Rule {
    pub fn from_query(query: &Query, props: &PropositionSet, ds: &Dataset, weight: f64) -> Self {
        let conditions = query
            .props
            .iter()
            .map(|&j| {
                let p = props.get(j);
                Condition { feature: ds.columns()[p.feature].name.clone(), op: p.op, value: p.threshold.clone() }
            })
            .collect();
        Rule { weight, conditions }
    }

    pub fn extent(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let mut ext: Vec<usize> = (0..ds.n()).collect();
        for c in &self.conditions {
            ext = intersect_extents(&ext, &c.extent(ds)?);
        }
        Ok(ext)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.6} if ", self.weight)?;
        if self.conditions.is_empty() {
            return f.write_str("true");
        }
        for (k, c) in self.conditions.iter().enumerate() {
            if k > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEnsemble {
    pub task: Task,
    pub lambda: f64,
    pub learner: Learner,
    pub rules: Vec<Rule>,
}

impl RuleEnsemble {
    /// The ensemble of the first `k` rules.
    pub fn prefix(&self, k: usize) -> RuleEnsemble {
        RuleEnsemble { rules: self.rules[..k.min(self.rules.len())].to_vec(), ..self.clone() }
    }

    /// Additive scores for every row of `ds`.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let mut f = vec![0.0; ds.n()];
        for rule in &self.rules {
            for i in rule.extent(ds)? {
                f[i] += rule.weight;
            }
        }
        Ok(f)
    }

    /// Score of one CSV record; `header` names the record's cells.
    pub fn predict_record(&self, header: &[String], record: &[String]) -> Result<f64> {
        let mut score = 0.0;
        for rule in &self.rules {
            let mut fires = true;
            for c in &rule.conditions {
                let col = header
                    .iter()
                    .position(|h| *h == c.feature)
                    .ok_or_else(|| Error::Schema(format!("column {:?} not found", c.feature)))?;
                if !c.holds_cell(&record[col])? {
                    fires = false;
                    break;
                }
            }
            if fires {
                score += rule.weight;
            }
        }
        Ok(score)
    }

    pub fn predict_table(&self, table: &RawTable) -> Result<Vec<f64>> {
        table.rows.iter().map(|r| self.predict_record(&table.header, r)).collect()
    }

    /// `σ(score)`, the modelled probability of the positive class.
    pub fn proba(score: f64) -> f64 {
        sigmoid(score)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ens: RuleEnsemble = serde_json::from_str(s)?;
        if ens.rules.iter().any(|r| !r.weight.is_finite()) {
            return Err(Error::InvalidData("rule weights must be finite".into()));
        }
        Ok(ens)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::Io { path: path.into(), source: e })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        Self::from_json(&s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    /// Maximum number of rules.
    pub k: usize,
    pub lambda: f64,
    pub learner: Learner,
    pub search: SearchConfig,
    /// Reserved; fitting is currently deterministic without randomness.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig { k: 10, lambda: 1.0, learner: Learner::Optimal, search: SearchConfig::default(), seed: 0 }
    }
}

/// Diagnostics of one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundInfo {
    pub objective: f64,
    pub guarantee: f64,
    pub weight: f64,
    pub coverage: usize,
    pub risk_before: f64,
    pub risk_after: f64,
    pub stats: PruneStats,
}

#[derive(Debug, Clone)]
pub struct BoostResult {
    pub ensemble: RuleEnsemble,
    pub rounds: Vec<RoundInfo>,
}

impl BoostResult {
    pub fn total_stats(&self) -> PruneStats {
        let mut total = PruneStats::default();
        for r in &self.rounds {
            total += r.stats;
        }
        total
    }
}

/// Hill-climbs from ⊤, adding whichever proposition most increases the gain.
///
/// Every proposition not yet in the query is a candidate; ties go to the
/// lowest index. Stops when no addition improves strictly.
pub fn fit_greedy_rule(props: &PropositionSet, stats: &GradientStats, ctx: &ObjectiveContext) -> Result<Query> {
    if props.is_empty() {
        return Err(Error::EmptyPropositions);
    }
    let (g, h) = (stats.g(), stats.h());
    let gain = |ext: &[usize]| {
        let (sg, sh) = ext.iter().fold((0.0, 0.0), |(a, b), &i| (a + g[i], b + h[i]));
        ctx.gain_or_zero(sg, sh)
    };
    let mut query = Query::top(props.n());
    let mut current = gain(&query.extent)?;
    loop {
        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        for j in (0..props.len()).filter(|j| !query.props.contains(j)) {
            let ext = intersect_extents(&query.extent, props.extent(j));
            let v = gain(&ext)?;
            if v > current + MIN_ROUND_GAIN && best.as_ref().is_none_or(|(_, bv, _)| v > *bv) {
                best = Some((j, v, ext));
            }
        }
        let Some((j, v, ext)) = best else { break };
        query.props.push(j);
        query.extent = ext;
        current = v;
    }
    query.props.sort_unstable();
    Ok(query)
}

/// Fits up to `cfg.k` rules by stage-wise second-order boosting from `f ≡ 0`.
pub fn boost(ds: &Dataset, props: &PropositionSet, loss: Loss, cfg: &BoostConfig) -> Result<BoostResult> {
    if cfg.k == 0 {
        return Err(Error::InvalidConfig("number of rules must be at least 1".into()));
    }
    if ds.task() == Task::Classification && loss != Loss::Logistic {
        return Err(Error::InvalidConfig("classification requires the logistic loss".into()));
    }
    if props.n() != ds.n() {
        return Err(Error::InvalidData("propositions were built from a different dataset".into()));
    }
    let n = ds.n();
    let y = ds.target();
    let ctx = ObjectiveContext::new(cfg.lambda, n)?;
    let mut f = vec![0.0; n];
    let mut ensemble = RuleEnsemble { task: ds.task(), lambda: cfg.lambda, learner: cfg.learner, rules: Vec::new() };
    let mut rounds = Vec::new();
    let mut risk = risk_from_predictions(loss, y, &f, [], cfg.lambda);

    for _ in 0..cfg.k {
        let stats = gradient_stats(loss, y, &f)?;
        let (query, objective, guarantee, search_stats) = match cfg.learner {
            Learner::Optimal => {
                let res = find_best_query(props, &stats, &ctx, &cfg.search)?;
                (res.query, res.objective, res.guarantee, res.stats)
            }
            Learner::Greedy => {
                let q = fit_greedy_rule(props, &stats, &ctx)?;
                let (sg, sh) = q.extent.iter().fold((0.0, 0.0), |(a, b), &i| (a + stats.g()[i], b + stats.h()[i]));
                let obj = ctx.gain_or_zero(sg, sh)?;
                (q, obj, 1.0, PruneStats::default())
            }
        };
        if objective <= MIN_ROUND_GAIN {
            break;
        }
        let (sg, sh) = query.extent.iter().fold((0.0, 0.0), |(a, b), &i| (a + stats.g()[i], b + stats.h()[i]));
        let weight = ctx.weight(sg, sh)?;
        for &i in &query.extent {
            f[i] += weight;
        }
        ensemble.rules.push(Rule::from_query(&query, props, ds, weight));
        let risk_after = risk_from_predictions(loss, y, &f, ensemble.rules.iter().map(|r| r.weight), cfg.lambda);
        rounds.push(RoundInfo {
            objective,
            guarantee,
            weight,
            coverage: query.extent.len(),
            risk_before: risk,
            risk_after,
            stats: search_stats,
        });
        risk = risk_after;
    }
    Ok(BoostResult { ensemble, rounds })
}
