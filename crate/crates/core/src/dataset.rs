//! Tabular data and its binarization into threshold/equality propositions.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Regression => f.write_str("regression"),
            Task::Classification => f.write_str("classification"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    /// Per-row codes into `levels`; levels are sorted and unique.
    Categorical {
        codes: Vec<u32>,
        levels: Vec<String>,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds a categorical column with sorted levels.
    pub fn categorical<S: AsRef<str>>(values: &[S]) -> Self {
        let levels: Vec<String> =
            values.iter().map(|s| s.as_ref().to_string()).collect::<BTreeSet<_>>().into_iter().collect();
        let codes =
            values.iter().map(|s| levels.binary_search_by(|l| l.as_str().cmp(s.as_ref())).unwrap() as u32).collect();
        ColumnData::Categorical { codes, levels }
    }

    fn cell_string(&self, row: usize) -> String {
        match self {
            ColumnData::Numeric(v) => v[row].to_string(),
            ColumnData::Categorical { codes, levels } => levels[codes[row] as usize].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Original class names of a binary classification target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabels {
    pub negative: String,
    pub positive: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    target: Vec<f64>,
    target_name: String,
    task: Task,
    labels: Option<ClassLabels>,
}

impl Dataset {
    /// Validates lengths, finiteness and (for classification) that targets are ±1.
    pub fn new(columns: Vec<Column>, target: Vec<f64>, target_name: impl Into<String>, task: Task) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        for c in &columns {
            if c.data.len() != n {
                return Err(Error::InvalidData(format!(
                    "column {:?} has {} entries, expected {}",
                    c.name,
                    c.data.len(),
                    n
                )));
            }
            if let ColumnData::Numeric(v) = &c.data {
                if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::MissingValue { row, column: c.name.clone() });
                }
            }
        }
        if let Some(row) = target.iter().position(|y| !y.is_finite()) {
            return Err(Error::MissingValue { row, column: "<target>".into() });
        }
        if task == Task::Classification && target.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidData("classification targets must be -1 or +1".into()));
        }
        Ok(Dataset { columns, target, target_name: target_name.into(), task, labels: None })
    }

    pub fn with_labels(mut self, labels: ClassLabels) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn labels(&self) -> Option<&ClassLabels> {
        self.labels.as_ref()
    }

    /// Rows in the given order; categorical levels are kept as-is.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
                    ColumnData::Categorical { codes, levels } => ColumnData::Categorical {
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                        levels: levels.clone(),
                    },
                },
            })
            .collect();
        Dataset {
            columns,
            target: rows.iter().map(|&r| self.target[r]).collect(),
            target_name: self.target_name.clone(),
            task: self.task,
            labels: self.labels.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.target_name);
        w.write_record(&header)?;
        for row in 0..self.n() {
            let mut record: Vec<String> = self.columns.iter().map(|c| c.data.cell_string(row)).collect();
            let y = self.target[row];
            record.push(match (&self.labels, self.task) {
                (Some(l), Task::Classification) => {
                    if y > 0.0 {
                        l.positive.clone()
                    } else {
                        l.negative.clone()
                    }
                }
                _ => y.to_string(),
            });
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<output>".into(), source: e })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// A header plus string cells, as read from a CSV file.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record?.iter().map(|s| s.trim().to_string()).collect());
        }
        Ok(RawTable { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a CSV file with a header row.
///
/// Columns whose every entry parses as a finite real become numeric, all
/// others categorical. For classification the target must have exactly two
/// distinct values; `positive_label` (default: the lexicographically greater
/// value) maps to +1 and the other to -1.
pub fn load_csv(path: &Path, target_name: &str, task: Task, positive_label: Option<&str>) -> Result<Dataset> {
    let table = RawTable::read(path)?;
    dataset_from_table(&table, target_name, task, positive_label)
}

pub fn dataset_from_table(
    table: &RawTable,
    target_name: &str,
    task: Task,
    positive_label: Option<&str>,
) -> Result<Dataset> {
    let target_col = table.column_index(target_name).ok_or_else(|| Error::TargetNotFound(target_name.to_string()))?;
    if table.rows.is_empty() {
        return Err(Error::InvalidData("file has no data rows".into()));
    }
    for (r, row) in table.rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::MissingValue { row: r + 1, column: table.header[c].clone() });
            }
        }
    }

    let cells = |c: usize| table.rows.iter().map(move |row| row[c].as_str());

    let target: Vec<f64>;
    let mut labels = None;
    match task {
        Task::Regression => {
            target = cells(target_col)
                .enumerate()
                .map(|(r, s)| {
                    parse_number(s).ok_or_else(|| {
                        Error::InvalidData(format!("non-numeric regression target {s:?} at row {}", r + 1))
                    })
                })
                .collect::<Result<_>>()?;
        }
        Task::Classification => {
            let classes: BTreeSet<&str> = cells(target_col).collect();
            if classes.len() != 2 {
                return Err(Error::ClassCount { column: target_name.to_string(), found: classes.len() });
            }
            let (lo, hi) = {
                let mut it = classes.iter();
                (*it.next().unwrap(), *it.next().unwrap())
            };
            let positive = match positive_label {
                None => hi,
                Some(p) if classes.contains(p) => p,
                Some(p) => {
                    return Err(Error::InvalidData(format!("positive label {p:?} is not a value of {target_name:?}")))
                }
            };
            let negative = if positive == hi { lo } else { hi };
            target = cells(target_col).map(|s| if s == positive { 1.0 } else { -1.0 }).collect();
            labels = Some(ClassLabels { negative: negative.to_string(), positive: positive.to_string() });
        }
    }

    let mut columns = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        if c == target_col {
            continue;
        }
        let parsed: Option<Vec<f64>> = cells(c).map(parse_number).collect();
        let data = match parsed {
            Some(v) => ColumnData::Numeric(v),
            None => ColumnData::categorical(&cells(c).collect::<Vec<_>>()),
        };
        columns.push(Column { name: name.clone(), data });
    }

    let ds = Dataset::new(columns, target, target_name, task)?;
    Ok(match labels {
        Some(l) => ds.with_labels(l),
        None => ds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Leq,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Neq,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Leq => "<=",
            Op::Gt => ">",
            Op::Eq => "==",
            Op::Neq => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Num(f64),
    Cat(String),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Num(v) => write!(f, "{v}"),
            Threshold::Cat(s) => f.write_str(s),
        }
    }
}

/// An atomic predicate on one feature together with its training extent.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    pub feature: usize,
    pub op: Op,
    pub threshold: Threshold,
    /// Strictly increasing row indices satisfying the predicate.
    pub extent: Vec<usize>,
}

impl Proposition {
    pub fn holds(&self, ds: &Dataset, row: usize) -> bool {
        match (&ds.columns[self.feature].data, &self.threshold) {
            (ColumnData::Numeric(v), Threshold::Num(t)) => match self.op {
                Op::Leq => v[row] <= *t,
                Op::Gt => v[row] > *t,
                _ => false,
            },
            (ColumnData::Categorical { codes, levels }, Threshold::Cat(t)) => {
                let equal = levels[codes[row] as usize] == *t;
                match self.op {
                    Op::Eq => equal,
                    Op::Neq => !equal,
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

/// Propositions in a fixed order that is never changed after construction.
#[derive(Debug, Clone)]
pub struct PropositionSet {
    props: Vec<Proposition>,
    n: usize,
}

impl PropositionSet {
    /// Wraps hand-built propositions, checking extents are sorted and in range.
    pub fn from_props(props: Vec<Proposition>, n: usize) -> Result<Self> {
        for (j, p) in props.iter().enumerate() {
            if !p.extent.windows(2).all(|w| w[0] < w[1]) || p.extent.last().is_some_and(|&r| r >= n) {
                return Err(Error::InvalidData(format!("proposition {j} has an invalid extent")));
            }
        }
        Ok(PropositionSet { props, n })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn props(&self) -> &[Proposition] {
        &self.props
    }

    pub fn get(&self, j: usize) -> &Proposition {
        &self.props[j]
    }

    pub fn extent(&self, j: usize) -> &[usize] {
        &self.props[j].extent
    }
}

/// Picks candidate thresholds among the observed values of a numeric column.
///
/// All distinct values are used when there are at most `max` of them;
/// otherwise `max` values at evenly spaced empirical quantiles.
fn select_thresholds(values: &[f64], max: Option<usize>) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    match max {
        Some(cap) if distinct.len() > cap => {
            let n = sorted.len();
            let mut picked: Vec<f64> = (1..=cap).map(|k| sorted[(k * n).div_ceil(cap + 1) - 1]).collect();
            picked.dedup();
            picked
        }
        _ => distinct,
    }
}

/// Binarizes every feature of `ds`.
///
/// Numeric features yield `<=` propositions at each selected threshold in
/// ascending order, then `>` propositions in the same order; categorical
/// features yield `==` per level, then `!=` per level. Propositions with an
/// empty or full extent are dropped. `max_thresholds = None` means unlimited.
pub fn build_propositions(ds: &Dataset, max_thresholds: Option<usize>) -> Result<PropositionSet> {
    if max_thresholds == Some(0) {
        return Err(Error::InvalidConfig("max_thresholds must be positive".into()));
    }
    let n = ds.n();
    let mut props = Vec::new();
    let mut push = |feature: usize, op: Op, threshold: Threshold, extent: Vec<usize>| {
        if !extent.is_empty() && extent.len() < n {
            props.push(Proposition { feature, op, threshold, extent });
        }
    };
    for (feature, column) in ds.columns.iter().enumerate() {
        match &column.data {
            ColumnData::Numeric(v) => {
                let thresholds = select_thresholds(v, max_thresholds);
                for &t in &thresholds {
                    let ext = (0..n).filter(|&i| v[i] <= t).collect();
                    push(feature, Op::Leq, Threshold::Num(t), ext);
                }
                for &t in &thresholds {
                    let ext = (0..n).filter(|&i| v[i] > t).collect();
                    push(feature, Op::Gt, Threshold::Num(t), ext);
                }
            }
            ColumnData::Categorical { codes, levels } => {
                for (code, level) in levels.iter().enumerate() {
                    let ext = (0..n).filter(|&i| codes[i] as usize == code).collect();
                    push(feature, Op::Eq, Threshold::Cat(level.clone()), ext);
                }
                for (code, level) in levels.iter().enumerate() {
                    let ext = (0..n).filter(|&i| codes[i] as usize != code).collect();
                    push(feature, Op::Neq, Threshold::Cat(level.clone()), ext);
                }
            }
        }
    }
    Ok(PropositionSet { props, n })
}

/// Intersection of two strictly increasing index lists.
pub fn intersect_extents(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = Vec::with_capacity(small.len());
    if small.len() * 16 < large.len() {
        let mut rest = large;
        for &x in small {
            match rest.binary_search(&x) {
                Ok(pos) => {
                    out.push(x);
                    rest = &rest[pos + 1..];
                }
                Err(pos) => rest = &rest[pos..],
            }
        }
        return out;
    }
    let (mut i, mut j) = (0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(small[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Whether sorted list `a` is contained in sorted list `b`.
pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut rest = b;
    for &x in a {
        match rest.binary_search(&x) {
            Ok(pos) => rest = &rest[pos + 1..],
            Err(_) => return false,
        }
    }
    true
}
