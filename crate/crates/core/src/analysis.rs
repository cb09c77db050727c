//! Correlation of circuit descriptors with classification accuracy,
//! hyperparameter summaries, run-to-run stability, and the reference fixture
//! tables shipped in `fixtures/`.
//!
//! Accuracies are percentages throughout this module.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::DatasetId;
use crate::descriptors::DescriptorRow;
use crate::error::{Error, Result};
use crate::trainer::{Loss, OptimizerKind, RunRow};

// ---------------------------------------------------------------------------
// Statistics

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!("{} points, need at least 3", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite input".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorPoint {
    pub template_id: u32,
    pub layers: u32,
    pub expr_prime: f64,
    pub ent: f64,
}

impl From<&DescriptorRow> for DescriptorPoint {
    fn from(r: &DescriptorRow) -> Self {
        DescriptorPoint { template_id: r.template_id, layers: r.layers, expr_prime: r.expr_prime, ent: r.ent }
    }
}

/// One validation accuracy of one (template, layers, dataset) in one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub run: u32,
    pub template_id: u32,
    pub layers: u32,
    pub dataset: DatasetId,
    pub acc: f64,
}

/// One hyperparameter-search accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub layers: u32,
    pub template_id: u32,
    pub dataset: DatasetId,
    pub acc: f64,
}

/// Validation accuracies of sweep rows; the run index is the repeat number.
pub fn accuracy_points_from_runs(rows: &[RunRow]) -> Result<Vec<AccuracyPoint>> {
    rows.iter()
        .map(|r| {
            let key = r.key()?;
            Ok(AccuracyPoint {
                run: key.repeat,
                template_id: r.template_id,
                layers: r.layers,
                dataset: r.dataset,
                acc: r.acc_val,
            })
        })
        .collect()
}

/// Test-split accuracies of sweep rows, as used for hyperparameter selection.
pub fn hyper_points_from_runs(rows: &[RunRow]) -> Vec<HyperPoint> {
    rows.iter()
        .map(|r| HyperPoint {
            optimizer: r.optimizer,
            loss: r.loss,
            layers: r.layers,
            template_id: r.template_id,
            dataset: r.dataset,
            acc: r.acc_test,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Correlation table

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetCorrelation {
    pub dataset: DatasetId,
    pub n_points: usize,
    pub r_expr_prime: f64,
    pub r_ent: f64,
    pub excluded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    /// Over the non-excluded datasets only.
    pub mean_excluded: f64,
    pub std_excluded: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunCorrelation {
    pub run: u32,
    pub datasets: Vec<DatasetCorrelation>,
    pub expr_prime: Summary,
    pub ent: Summary,
}

impl RunCorrelation {
    pub fn dataset(&self, id: DatasetId) -> Option<&DatasetCorrelation> {
        self.datasets.iter().find(|d| d.dataset == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub excluded: Vec<DatasetId>,
    pub runs: Vec<RunCorrelation>,
}

impl CorrelationReport {
    pub fn run(&self, run: u32) -> Option<&RunCorrelation> {
        self.runs.iter().find(|r| r.run == run)
    }
}

/// Point of a per-dataset scatter plot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub run: u32,
    pub template_id: u32,
    pub layers: u32,
    pub expr_prime: f64,
    pub ent: f64,
    pub acc: f64,
}

fn descriptor_index(descriptors: &[DescriptorPoint]) -> BTreeMap<(u32, u32), DescriptorPoint> {
    descriptors.iter().map(|d| ((d.template_id, d.layers), *d)).collect()
}

/// Joins accuracies with descriptors, grouped by (run, dataset).
///
/// An accuracy without a descriptor is an error. Descriptor keys that a run
/// lacks simply contribute no point, so incomplete runs remain usable.
pub fn scatter(
    accuracies: &[AccuracyPoint],
    descriptors: &[DescriptorPoint],
) -> Result<BTreeMap<(u32, DatasetId), Vec<ScatterRow>>> {
    let index = descriptor_index(descriptors);
    let mut out: BTreeMap<(u32, DatasetId), Vec<ScatterRow>> = BTreeMap::new();
    for a in accuracies {
        let d = index
            .get(&(a.template_id, a.layers))
            .ok_or(Error::Join { template_id: a.template_id, layers: a.layers })?;
        out.entry((a.run, a.dataset)).or_default().push(ScatterRow {
            run: a.run,
            template_id: a.template_id,
            layers: a.layers,
            expr_prime: d.expr_prime,
            ent: d.ent,
            acc: a.acc,
        });
    }
    for ((run, dataset), rows) in &mut out {
        rows.sort_by_key(|r| (r.layers, r.template_id));
        let seen: BTreeSet<(u32, u32)> = rows.iter().map(|r| (r.template_id, r.layers)).collect();
        if seen.len() != rows.len() {
            return Err(Error::KeyMismatch(format!("duplicate accuracy entries in run {run}, dataset {dataset}")));
        }
        let missing = index.len() - seen.len();
        if missing > 0 {
            log::debug!("run {run}, dataset {dataset}: {missing} descriptor key(s) without accuracy");
        }
    }
    Ok(out)
}

fn summarize(values: &[(DatasetId, f64)], exclude: &[DatasetId]) -> Summary {
    let all: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let kept: Vec<f64> = values.iter().filter(|(d, _)| !exclude.contains(d)).map(|(_, v)| *v).collect();
    let (mean, std) = mean_std(&all);
    let (mean_excluded, std_excluded) = mean_std(&kept);
    Summary { mean, std, mean_excluded, std_excluded }
}

/// Per-dataset Pearson r of Expr′ and Ent against accuracy, pooled over
/// layer configurations, with summaries per run.
pub fn correlation_table(
    accuracies: &[AccuracyPoint],
    descriptors: &[DescriptorPoint],
    exclude: &[DatasetId],
) -> Result<CorrelationReport> {
    let groups = scatter(accuracies, descriptors)?;
    let n_keys = descriptor_index(descriptors).len();
    let mut dropped: BTreeMap<u32, usize> = BTreeMap::new();
    for ((run, _), rows) in &groups {
        *dropped.entry(*run).or_default() += n_keys - rows.len();
    }
    for (run, n) in dropped.into_iter().filter(|(_, n)| *n > 0) {
        log::warn!("run {run}: {n} (template, layers, dataset) point(s) have no accuracy and are left out");
    }
    let mut runs: BTreeMap<u32, Vec<DatasetCorrelation>> = BTreeMap::new();
    for ((run, dataset), rows) in &groups {
        let acc: Vec<f64> = rows.iter().map(|r| r.acc).collect();
        let expr: Vec<f64> = rows.iter().map(|r| r.expr_prime).collect();
        let ent: Vec<f64> = rows.iter().map(|r| r.ent).collect();
        let label = |what: &str, e: Error| match e {
            Error::UndefinedCorrelation(m) => Error::UndefinedCorrelation(format!("{what}, run {run}, dataset {dataset}: {m}")),
            other => other,
        };
        runs.entry(*run).or_default().push(DatasetCorrelation {
            dataset: *dataset,
            n_points: rows.len(),
            r_expr_prime: pearson(&expr, &acc).map_err(|e| label("expr_prime", e))?,
            r_ent: pearson(&ent, &acc).map_err(|e| label("ent", e))?,
            excluded: exclude.contains(dataset),
        });
    }
    let runs = runs
        .into_iter()
        .map(|(run, datasets)| {
            let e: Vec<_> = datasets.iter().map(|d| (d.dataset, d.r_expr_prime)).collect();
            let n: Vec<_> = datasets.iter().map(|d| (d.dataset, d.r_ent)).collect();
            RunCorrelation { run, expr_prime: summarize(&e, exclude), ent: summarize(&n, exclude), datasets }
        })
        .collect();
    Ok(CorrelationReport { excluded: exclude.to_vec(), runs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledCorrelation {
    pub n_points: usize,
    pub r_expr_prime: f64,
    pub r_ent: f64,
}

/// Pearson r over all joined points at once, across datasets and runs.
pub fn pooled_correlation(accuracies: &[AccuracyPoint], descriptors: &[DescriptorPoint]) -> Result<PooledCorrelation> {
    let rows: Vec<ScatterRow> = scatter(accuracies, descriptors)?.into_values().flatten().collect();
    let acc: Vec<f64> = rows.iter().map(|r| r.acc).collect();
    let expr: Vec<f64> = rows.iter().map(|r| r.expr_prime).collect();
    let ent: Vec<f64> = rows.iter().map(|r| r.ent).collect();
    Ok(PooledCorrelation { n_points: rows.len(), r_expr_prime: pearson(&expr, &acc)?, r_ent: pearson(&ent, &acc)? })
}

// ---------------------------------------------------------------------------
// Hyperparameter grid and factorial design

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub layers: u32,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorLevel {
    pub variable: String,
    pub option: String,
    pub accuracy: f64,
}

/// Mean accuracy of each (optimizer, loss, layers) cell.
pub fn hyperparam_summary(points: &[HyperPoint]) -> Result<Vec<GridCell>> {
    let mut cells: BTreeMap<(OptimizerKind, Loss, u32), Vec<f64>> = BTreeMap::new();
    for p in points {
        cells.entry((p.optimizer, p.loss, p.layers)).or_default().push(p.acc);
    }
    let layer_set: BTreeSet<u32> = cells.keys().map(|k| k.2).collect();
    if layer_set.len() < 2 {
        return Err(Error::IncompleteDesign(format!("need two layer settings, found {layer_set:?}")));
    }
    for o in OptimizerKind::ALL {
        for l in Loss::ALL {
            for &n in &layer_set {
                if !cells.contains_key(&(o, l, n)) {
                    return Err(Error::IncompleteDesign(format!("no runs for {o}/{l}/{n} layer(s)")));
                }
            }
        }
    }
    Ok(cells
        .into_iter()
        .map(|((optimizer, loss, layers), accs)| GridCell {
            optimizer,
            loss,
            layers,
            accuracy: mean_std(&accs).0,
            n: accs.len(),
        })
        .collect())
}

/// Mean accuracy per option of each factor, averaging the grid cells over
/// the other two factors.
pub fn factorial_design(points: &[HyperPoint]) -> Result<Vec<FactorLevel>> {
    let grid = hyperparam_summary(points)?;
    let level = |variable: &str, option: String, pick: &dyn Fn(&GridCell) -> bool| FactorLevel {
        variable: variable.to_string(),
        accuracy: mean_std(&grid.iter().filter(|c| pick(c)).map(|c| c.accuracy).collect::<Vec<_>>()).0,
        option,
    };
    let mut out = Vec::new();
    for l in Loss::ALL {
        out.push(level("loss", l.to_string(), &|c| c.loss == l));
    }
    for o in OptimizerKind::ALL {
        out.push(level("optimizer", o.to_string(), &|c| c.optimizer == o));
    }
    let layer_set: BTreeSet<u32> = grid.iter().map(|c| c.layers).collect();
    for n in layer_set {
        out.push(level("layers", n.to_string(), &|c| c.layers == n));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stability

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// Mean absolute accuracy difference over matched points of all run pairs.
    pub mean_abs_diff: f64,
    /// Population standard deviation of those absolute differences.
    pub std: f64,
    pub n_pairs: usize,
    pub n_differences: usize,
}

/// Agreement between repeated runs, pooled over every pair of runs.
pub fn run_stability(points: &[AccuracyPoint]) -> Result<Stability> {
    let mut runs: BTreeMap<u32, BTreeMap<(u32, u32, DatasetId), f64>> = BTreeMap::new();
    for p in points {
        if runs.entry(p.run).or_default().insert((p.template_id, p.layers, p.dataset), p.acc).is_some() {
            return Err(Error::KeyMismatch(format!(
                "duplicate entry for template {} / {} layer(s) / {} in run {}",
                p.template_id, p.layers, p.dataset, p.run
            )));
        }
    }
    if runs.len() < 2 {
        return Err(Error::KeyMismatch(format!("need at least two runs, found {}", runs.len())));
    }
    let ids: Vec<u32> = runs.keys().copied().collect();
    let mut diffs = Vec::new();
    let mut n_pairs = 0;
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let (ra, rb) = (&runs[a], &runs[b]);
            let before = diffs.len();
            diffs.extend(ra.iter().filter_map(|(k, va)| rb.get(k).map(|vb| (va - vb).abs())));
            if diffs.len() == before {
                return Err(Error::KeyMismatch(format!("runs {a} and {b} share no keys")));
            }
            n_pairs += 1;
        }
    }
    let (mean_abs_diff, std) = mean_std(&diffs);
    Ok(Stability { mean_abs_diff, std, n_pairs, n_differences: diffs.len() })
}

// ---------------------------------------------------------------------------
// Fixtures

pub const EXPR_ENT_FILE: &str = "expr_ent.csv";
pub const VAL_FILES: [(u32, &str); 2] = [(1, "val_1layer.csv"), (2, "val_2layer.csv")];
pub const CNN_FILE: &str = "cnn.csv";
pub const PUBLISHED_FILE: &str = "published.json";

pub fn hyper_file(optimizer: OptimizerKind, loss: Loss) -> String {
    format!("hyper_{optimizer}_{loss}.csv")
}

/// A numeric CSV table whose text form survives a parse/emit round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct FixtureTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FixtureTable {
    pub fn parse(text: &str) -> Result<FixtureTable> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: {cell:?} is not a number", line + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(FixtureTable { header, rows })
    }

    pub fn emit(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
    }

    fn int(v: f64, what: &str) -> Result<u32> {
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(Error::Parse(format!("{what} {v} is not a non-negative integer")))
        }
    }

    /// Reads `template_id,layers,expr,expr_prime,ent`.
    pub fn descriptor_points(&self) -> Result<Vec<DescriptorPoint>> {
        let (t, l, e, n) = (self.column("template_id")?, self.column("layers")?, self.column("expr_prime")?, self.column("ent")?);
        self.rows
            .iter()
            .map(|r| {
                Ok(DescriptorPoint {
                    template_id: Self::int(r[t], "template_id")?,
                    layers: Self::int(r[l], "layers")?,
                    expr_prime: r[e],
                    ent: r[n],
                })
            })
            .collect()
    }

    /// Reads a validation table (`run,template_id,<datasets>...,avg`) for `layers`.
    pub fn accuracy_points(&self, layers: u32) -> Result<Vec<AccuracyPoint>> {
        let (run, t) = (self.column("run")?, self.column("template_id")?);
        let cols = self.dataset_columns()?;
        let mut out = Vec::new();
        for r in &self.rows {
            for &(dataset, c) in &cols {
                out.push(AccuracyPoint {
                    run: Self::int(r[run], "run")?,
                    template_id: Self::int(r[t], "template_id")?,
                    layers,
                    dataset,
                    acc: r[c],
                });
            }
        }
        Ok(out)
    }

    /// Reads a hyperparameter table (`layers,template_id,<datasets>...,avg`).
    pub fn hyper_points(&self, optimizer: OptimizerKind, loss: Loss) -> Result<Vec<HyperPoint>> {
        let (l, t) = (self.column("layers")?, self.column("template_id")?);
        let cols = self.dataset_columns()?;
        let mut out = Vec::new();
        for r in &self.rows {
            for &(dataset, c) in &cols {
                out.push(HyperPoint {
                    optimizer,
                    loss,
                    layers: Self::int(r[l], "layers")?,
                    template_id: Self::int(r[t], "template_id")?,
                    dataset,
                    acc: r[c],
                });
            }
        }
        Ok(out)
    }

    fn dataset_columns(&self) -> Result<Vec<(DatasetId, usize)>> {
        DatasetId::ALL.iter().map(|d| Ok((*d, self.column(d.as_str())?))).collect()
    }
}

fn read_fixture(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load_fixture_table(dir: &Path, name: &str) -> Result<FixtureTable> {
    FixtureTable::parse(&read_fixture(dir, name)?)
}

/// All fixture tables, typed.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixtures {
    pub descriptors: Vec<DescriptorPoint>,
    pub validation: Vec<AccuracyPoint>,
    pub hyper: Vec<HyperPoint>,
    pub published: Published,
}

impl Fixtures {
    pub fn load(dir: &Path) -> Result<Fixtures> {
        let descriptors = load_fixture_table(dir, EXPR_ENT_FILE)?.descriptor_points()?;
        let mut validation = Vec::new();
        for (layers, name) in VAL_FILES {
            validation.extend(load_fixture_table(dir, name)?.accuracy_points(layers)?);
        }
        let mut hyper = Vec::new();
        for o in OptimizerKind::ALL {
            for l in Loss::ALL {
                hyper.extend(load_fixture_table(dir, &hyper_file(o, l))?.hyper_points(o, l)?);
            }
        }
        let published = serde_json::from_str(&read_fixture(dir, PUBLISHED_FILE)?)?;
        Ok(Fixtures { descriptors, validation, hyper, published })
    }

    pub fn validation_run(&self, run: u32) -> Vec<AccuracyPoint> {
        self.validation.iter().filter(|p| p.run == run).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedSummary {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub mean_excluded: Vec<f64>,
    pub std_excluded: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedCorrelations {
    pub datasets: Vec<DatasetId>,
    /// Indexed `[run - 1][dataset]`.
    pub expr_prime: Vec<Vec<f64>>,
    pub ent: Vec<Vec<f64>>,
    pub expr_prime_summary: PublishedSummary,
    pub ent_summary: PublishedSummary,
    pub excluded: Vec<DatasetId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedGridCell {
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub layers: u32,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedStability {
    pub mean_abs_diff: f64,
    pub std: f64,
}

/// Reference values the fixture tables are checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Published {
    pub correlations: PublishedCorrelations,
    pub hyperparameter_grid: Vec<PublishedGridCell>,
    pub factorial: Vec<FactorLevel>,
    pub stability: PublishedStability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    /// Allowed absolute deviation; for `at_most` checks, the upper bound slack.
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Check {
        // Small slack so a tolerance written in decimal is not lost to binary rounding.
        let passed = (actual - expected).abs() <= tolerance + 1e-9;
        Check { name: name.into(), expected, actual, tolerance, passed }
    }

    pub fn at_most(name: impl Into<String>, bound: f64, actual: f64) -> Check {
        Check { name: name.into(), expected: bound, actual, tolerance: 0.0, passed: actual <= bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const R_TOLERANCE: f64 = 0.001;
pub const STD_TOLERANCE: f64 = 0.002;
pub const ACCURACY_TOLERANCE: f64 = 0.05;
pub const STABILITY_BOUND: f64 = 0.1;

/// Recomputes the correlation table, hyperparameter grid, factorial design
/// and stability from the fixture tables and compares with the published values.
///
/// Check names look like `correlation.run1.1b.expr_prime`,
/// `correlation.run1.expr_prime.mean_excluded`, `grid.adam.l2.2`,
/// `factorial.loss.l1` and `stability.mean_abs_diff`.
pub fn verify_fixtures(dir: &Path) -> Result<VerificationReport> {
    let fx = Fixtures::load(dir)?;
    let pc = &fx.published.correlations;
    let mut checks = Vec::new();

    let report = correlation_table(&fx.validation, &fx.descriptors, &pc.excluded)?;
    for (i, (pub_expr, pub_ent)) in pc.expr_prime.iter().zip(&pc.ent).enumerate() {
        let run = i as u32 + 1;
        let rc = report.run(run).ok_or_else(|| Error::KeyMismatch(format!("fixtures lack run {run}")))?;
        for (k, dataset) in pc.datasets.iter().enumerate() {
            let dc = rc.dataset(*dataset).ok_or_else(|| Error::KeyMismatch(format!("run {run} lacks dataset {dataset}")))?;
            checks.push(Check::within(format!("correlation.run{run}.{dataset}.expr_prime"), pub_expr[k], dc.r_expr_prime, R_TOLERANCE));
            checks.push(Check::within(format!("correlation.run{run}.{dataset}.ent"), pub_ent[k], dc.r_ent, R_TOLERANCE));
        }
        for (what, s, p) in [("expr_prime", &rc.expr_prime, &pc.expr_prime_summary), ("ent", &rc.ent, &pc.ent_summary)] {
            let prefix = format!("correlation.run{run}.{what}");
            checks.push(Check::within(format!("{prefix}.mean"), p.mean[i], s.mean, R_TOLERANCE));
            checks.push(Check::within(format!("{prefix}.std"), p.std[i], s.std, STD_TOLERANCE));
            checks.push(Check::within(format!("{prefix}.mean_excluded"), p.mean_excluded[i], s.mean_excluded, R_TOLERANCE));
            checks.push(Check::within(format!("{prefix}.std_excluded"), p.std_excluded[i], s.std_excluded, STD_TOLERANCE));
        }
    }

    let grid = hyperparam_summary(&fx.hyper)?;
    for cell in &fx.published.hyperparameter_grid {
        let actual = grid
            .iter()
            .find(|c| c.optimizer == cell.optimizer && c.loss == cell.loss && c.layers == cell.layers)
            .map_or(f64::NAN, |c| c.accuracy);
        let name = format!("grid.{}.{}.{}", cell.optimizer, cell.loss, cell.layers);
        checks.push(Check::within(name, cell.accuracy, actual, ACCURACY_TOLERANCE));
    }

    let factors = factorial_design(&fx.hyper)?;
    for level in &fx.published.factorial {
        let actual = factors
            .iter()
            .find(|f| f.variable == level.variable && f.option == level.option)
            .map_or(f64::NAN, |f| f.accuracy);
        let name = format!("factorial.{}.{}", level.variable, level.option);
        checks.push(Check::within(name, level.accuracy, actual, ACCURACY_TOLERANCE));
    }

    let stability = run_stability(&fx.validation)?;
    checks.push(Check::at_most("stability.mean_abs_diff", STABILITY_BOUND, stability.mean_abs_diff));

    Ok(VerificationReport { checks })
}
