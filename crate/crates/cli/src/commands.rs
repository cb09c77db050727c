use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use pqc_core::analysis::{
    self, AccuracyPoint, CorrelationReport, DescriptorPoint, Fixtures, GridCell, FactorLevel, HyperPoint,
    PooledCorrelation, Stability, VerificationReport,
};
use pqc_core::circuits::{Catalog, CircuitTemplate};
use pqc_core::datagen::{self, Dataset};
use pqc_core::descriptors::{self, DescriptorConfig, DescriptorResult, DescriptorRow};
use pqc_core::trainer::{self, RunRow};
use pqc_core::{DatasetId, Loss, OptimizerKind, RunKey};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SweepConfig;

pub const RUNS_FILE: &str = "runs.csv";
pub const RUNS_META_FILE: &str = "runs.meta.json";
pub const RECORDS_DIR: &str = "records";
pub const DESCRIPTORS_FILE: &str = "descriptors.csv";
pub const REPORT_FILE: &str = "report.json";

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Writes `<out>/<id>.csv` for every dataset and returns the paths.
pub fn cmd_datasets(seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut paths = Vec::new();
    for ds in datagen::generate_all(seed) {
        let path = out_dir.join(format!("{}.csv", ds.id));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        ds.write_csv(file)?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Clone, Debug)]
pub struct DescriptorJob {
    pub templates: Vec<u32>,
    pub layers: Vec<u32>,
    pub config: DescriptorConfig,
    pub out_dir: PathBuf,
}

/// Computes descriptors for every (template, layers) and writes `descriptors.csv`.
pub fn cmd_descriptors(job: &DescriptorJob, jobs: usize) -> Result<Vec<DescriptorResult>> {
    job.config.validate()?;
    let mut pairs: Vec<(u32, u32)> =
        job.templates.iter().flat_map(|&t| job.layers.iter().map(move |&l| (t, l))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let results = pool(jobs)?.install(|| {
        pairs
            .iter()
            .map(|&(t, l)| {
                let template = CircuitTemplate::new(t, l)?;
                let r = descriptors::describe(&template, &job.config)?;
                log::info!("template {t}, {l} layer(s): expr {:.4}, expr' {:.3}, ent {:.3}", r.expr, r.expr_prime, r.ent);
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    fs::create_dir_all(&job.out_dir)?;
    let path = job.out_dir.join(DESCRIPTORS_FILE);
    descriptors::write_descriptors_csv(File::create(&path)?, &results)?;
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub trained: usize,
    pub skipped: usize,
    pub total_rows: usize,
    pub runs_path: PathBuf,
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    started_unix: u64,
    finished_unix: u64,
    jobs: usize,
    trained: usize,
    skipped: usize,
    config: &'a SweepConfig,
}

/// Reads finished rows, tolerating a torn final line from an interrupted run.
pub fn read_existing_runs(path: &Path) -> Result<BTreeMap<RunKey, RunRow>> {
    let mut rows = BTreeMap::new();
    if !path.exists() {
        return Ok(rows);
    }
    let mut reader = csv::Reader::from_path(path)?;
    for (i, row) in reader.deserialize::<RunRow>().enumerate() {
        match row.map_err(anyhow::Error::from).and_then(|r| Ok((r.key()?, r))) {
            Ok((key, r)) => {
                rows.insert(key, r);
            }
            Err(e) => log::warn!("{}: skipping unreadable row {}: {e}", path.display(), i + 2),
        }
    }
    Ok(rows)
}

fn write_runs_sorted(path: &Path, rows: &BTreeMap<RunKey, RunRow>) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let rows: Vec<RunRow> = rows.values().cloned().collect();
    trainer::write_runs_csv(File::create(&tmp)?, &rows)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Trains every grid key missing from `<out>/runs.csv`.
///
/// Rows are appended as runs finish, through one locked writer, so an
/// interrupted sweep keeps its progress; the file is then rewritten in
/// canonical key order. Per-run JSON records go to `<out>/records/`, and
/// wall-clock information only to `runs.meta.json`.
pub fn cmd_sweep(cfg: &SweepConfig, jobs: usize) -> Result<SweepOutcome> {
    cfg.validate()?;
    let started = unix_now();
    let out = &cfg.output_dir;
    let records_dir = out.join(RECORDS_DIR);
    fs::create_dir_all(&records_dir).with_context(|| format!("creating {}", records_dir.display()))?;
    let runs_path = out.join(RUNS_FILE);

    let existing = read_existing_runs(&runs_path)?;
    let pending: Vec<RunKey> = cfg.keys().into_iter().filter(|k| !existing.contains_key(k)).collect();
    let skipped = cfg.keys().len() - pending.len();
    log::info!("{} run(s) pending, {skipped} already done", pending.len());

    // Rewrite what survived so appends start from a clean file.
    write_runs_sorted(&runs_path, &existing)?;

    let mut needed: Vec<DatasetId> = pending.iter().map(|k| k.dataset).collect();
    needed.sort();
    needed.dedup();
    let datasets: BTreeMap<DatasetId, Dataset> =
        needed.into_iter().map(|id| (id, datagen::generate(id, cfg.master_seed))).collect();

    let file = OpenOptions::new().append(true).open(&runs_path)?;
    let appender = Mutex::new(csv::WriterBuilder::new().has_headers(false).from_writer(file));
    let done = std::sync::atomic::AtomicUsize::new(0);
    let total = pending.len();

    let results: Vec<Result<RunRow>> = pool(jobs)?.install(|| {
        pending
            .par_iter()
            .map(|key| -> Result<RunRow> {
                let config = cfg.train_config(key);
                let record = trainer::train_run(&config, &datasets[&key.dataset], key.run_id())?;
                let json = serde_json::to_string_pretty(&record)?;
                fs::write(records_dir.join(format!("{}.json", record.run_id)), json + "\n")?;
                let row = RunRow::from(&record);
                {
                    let mut w = appender.lock().expect("appender lock");
                    w.serialize(&row)?;
                    w.flush()?;
                }
                let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                log::info!("[{n}/{total}] {}: val {:.1}%", row.run_id, row.acc_val);
                Ok(row)
            })
            .collect()
    });
    drop(appender);

    let mut rows = existing;
    let mut first_error = None;
    let mut trained = 0;
    for r in results {
        match r {
            Ok(row) => {
                rows.insert(row.key()?, row);
                trained += 1;
            }
            Err(e) => {
                log::error!("run failed: {e:#}");
                first_error.get_or_insert(e);
            }
        }
    }
    write_runs_sorted(&runs_path, &rows)?;
    let meta = SweepMeta { started_unix: started, finished_unix: unix_now(), jobs, trained, skipped, config: cfg };
    fs::write(out.join(RUNS_META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    if let Some(e) = first_error {
        return Err(e.context("sweep finished with failed runs"));
    }
    Ok(SweepOutcome { trained, skipped, total_rows: rows.len(), runs_path })
}

#[derive(Clone, Debug)]
pub enum CorrelateSource {
    /// Fresh `runs.csv` and `descriptors.csv`. Only rows trained with
    /// `optimizer` and `loss` enter the correlation; the hyperparameter
    /// grid uses every row.
    Files { runs: PathBuf, descriptors: PathBuf, optimizer: OptimizerKind, loss: Loss },
    /// The reference fixture tables.
    Fixtures(PathBuf),
}

#[derive(Clone, Debug, Serialize)]
pub struct FullReport {
    pub correlation: CorrelationReport,
    pub pooled: Option<PooledCorrelation>,
    pub stability: Option<Stability>,
    pub hyperparameter_grid: Option<Vec<GridCell>>,
    pub factorial: Option<Vec<FactorLevel>>,
}

fn read_descriptor_points(path: &Path) -> Result<Vec<DescriptorPoint>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows: Vec<DescriptorRow> = descriptors::read_descriptors_csv(file)?;
    Ok(rows.iter().map(DescriptorPoint::from).collect())
}

fn optional<T>(what: &str, r: pqc_core::Result<T>) -> Option<T> {
    r.map_err(|e| log::info!("{what} not reported: {e}")).ok()
}

/// Correlation report plus per-dataset scatter files.
pub fn cmd_correlate(source: &CorrelateSource, exclude: &[DatasetId], out_dir: &Path) -> Result<FullReport> {
    let (accuracies, descs, hyper): (Vec<AccuracyPoint>, Vec<DescriptorPoint>, Vec<HyperPoint>) = match source {
        CorrelateSource::Files { runs, descriptors, optimizer, loss } => {
            let file = File::open(runs).with_context(|| format!("opening {}", runs.display()))?;
            let rows = trainer::read_runs_csv(file)?;
            let selected: Vec<RunRow> =
                rows.iter().filter(|r| r.optimizer == *optimizer && r.loss == *loss).cloned().collect();
            if selected.is_empty() {
                bail!("{} has no {}/{} rows", runs.display(), optimizer.as_str(), loss.as_str());
            }
            (analysis::accuracy_points_from_runs(&selected)?, read_descriptor_points(descriptors)?, analysis::hyper_points_from_runs(&rows))
        }
        CorrelateSource::Fixtures(dir) => {
            let fx = Fixtures::load(dir)?;
            (fx.validation, fx.descriptors, fx.hyper)
        }
    };
    let correlation = analysis::correlation_table(&accuracies, &descs, exclude)?;
    let report = FullReport {
        correlation,
        pooled: optional("pooled correlation", analysis::pooled_correlation(&accuracies, &descs)),
        stability: optional("run stability", analysis::run_stability(&accuracies)),
        hyperparameter_grid: optional("hyperparameter grid", analysis::hyperparam_summary(&hyper)),
        factorial: optional("factorial design", analysis::factorial_design(&hyper)),
    };

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(REPORT_FILE), serde_json::to_string_pretty(&report)? + "\n")?;
    let mut by_dataset: BTreeMap<DatasetId, Vec<analysis::ScatterRow>> = BTreeMap::new();
    for ((_, dataset), rows) in analysis::scatter(&accuracies, &descs)? {
        by_dataset.entry(dataset).or_default().extend(rows);
    }
    for (dataset, rows) in by_dataset {
        let mut w = csv::Writer::from_path(out_dir.join(format!("scatter_{dataset}.csv")))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(report)
}

pub fn cmd_verify_fixtures(dir: &Path) -> Result<VerificationReport> {
    Ok(analysis::verify_fixtures(dir)?)
}

pub fn format_verification(report: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{status} {:<45} expected {:>9.4}  actual {:>9.4}\n", c.name, c.expected, c.actual));
    }
    let failed = report.failures().count();
    s.push_str(&format!("{} checks, {} failed\n", report.checks.len(), failed));
    s
}

/// Gate listing of one template, or an overview of all of them.
pub fn cmd_catalog(template: Option<u32>, layers: u32) -> Result<String> {
    let mut s = String::new();
    match template {
        Some(id) => {
            let t = CircuitTemplate::new(id, layers)?;
            s.push_str(&format!("template {id}, {layers} layer(s), {} parameter(s)\n", t.param_count()));
            for g in t.gate_program() {
                let control = g.control.map_or(String::new(), |c| format!(" control {c}"));
                let slot = g.slot.map_or(String::new(), |p| format!(" θ[{p}]"));
                s.push_str(&format!("  {:<4} target {}{control}{slot}\n", g.kind.name(), g.target));
            }
        }
        None => {
            let catalog = Catalog::bundled();
            for id in catalog.template_ids() {
                let t = CircuitTemplate::new(id, layers)?;
                let gates = t.gate_program();
                let entanglers = gates.iter().filter(|g| g.control.is_some()).count();
                s.push_str(&format!(
                    "{id:>2}: {:>2} gates, {:>2} parameters, {:>2} two-qubit gates\n",
                    gates.len(),
                    t.param_count(),
                    entanglers
                ));
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pqc_core::{Loss, OptimizerKind};

    fn tiny_sweep(dir: &Path) -> SweepConfig {
        SweepConfig {
            templates: vec![1, 2],
            layers: vec![1],
            datasets: vec![DatasetId::D3a],
            optimizers: vec![OptimizerKind::Adam],
            losses: vec![Loss::L2],
            epochs: 2,
            output_dir: dir.to_path_buf(),
            ..SweepConfig::test_sweep()
        }
    }

    #[test]
    fn datasets_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let paths = cmd_datasets(42, dir.path()).unwrap();
        assert_eq!(paths.len(), 9);
        let first = fs::read(&paths[4]).unwrap();
        assert_eq!(String::from_utf8_lossy(&first).lines().count(), 1501);
        cmd_datasets(42, dir.path()).unwrap();
        assert_eq!(fs::read(&paths[4]).unwrap(), first);
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(cmd_datasets(42, &blocker.join("sub")).is_err());
    }

    #[test]
    fn single_run_sweep_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig { templates: vec![1], ..tiny_sweep(dir.path()) };
        let outcome = cmd_sweep(&cfg, 1).unwrap();
        assert_eq!((outcome.trained, outcome.total_rows), (1, 1));
        assert!(dir.path().join(RECORDS_DIR).join("c01-l1-3a-adam-l2-r0.json").exists());
        assert!(dir.path().join(RUNS_META_FILE).exists());
    }

    #[test]
    fn sweep_resumes_without_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep(dir.path());
        cmd_sweep(&cfg, 1).unwrap();
        let full = fs::read_to_string(dir.path().join(RUNS_FILE)).unwrap();

        // Simulate a kill: drop the last row and tear the one before it.
        let lines: Vec<&str> = full.lines().collect();
        let torn = format!("{}\n{}", lines[0], &lines[1][..10]);
        fs::write(dir.path().join(RUNS_FILE), torn).unwrap();
        let outcome = cmd_sweep(&cfg, 2).unwrap();
        assert_eq!((outcome.trained, outcome.skipped), (2, 0));
        assert_eq!(fs::read_to_string(dir.path().join(RUNS_FILE)).unwrap(), full);

        let again = cmd_sweep(&cfg, 1).unwrap();
        assert_eq!((again.trained, again.skipped, again.total_rows), (0, 2, 2));
    }

    #[test]
    fn descriptors_file_has_one_row_per_pair() {
        let dir = tempfile::tempdir().unwrap();
        let job = DescriptorJob {
            templates: vec![1, 9],
            layers: vec![1, 2],
            config: DescriptorConfig { n_fidelity_pairs: 200, n_ent_samples: 20, ..Default::default() },
            out_dir: dir.path().to_path_buf(),
        };
        let results = cmd_descriptors(&job, 1).unwrap();
        assert_eq!(results.len(), 4);
        assert!(results[0].ent.abs() < 1e-12);
        let text = fs::read_to_string(dir.path().join(DESCRIPTORS_FILE)).unwrap();
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn correlate_selects_one_training_setting() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig {
            templates: vec![1, 6, 9],
            layers: vec![1],
            datasets: vec![DatasetId::D1a],
            losses: vec![Loss::L2],
            epochs: 1,
            output_dir: dir.path().join("sweep"),
            ..SweepConfig::test_sweep()
        };
        let outcome = cmd_sweep(&cfg, 1).unwrap();
        assert_eq!(outcome.total_rows, 6);
        let job = DescriptorJob {
            templates: cfg.templates.clone(),
            layers: vec![1],
            config: DescriptorConfig { n_fidelity_pairs: 200, n_ent_samples: 20, ..Default::default() },
            out_dir: dir.path().join("desc"),
        };
        cmd_descriptors(&job, 1).unwrap();
        let source = |optimizer, loss| CorrelateSource::Files {
            runs: outcome.runs_path.clone(),
            descriptors: job.out_dir.join(DESCRIPTORS_FILE),
            optimizer,
            loss,
        };
        let report = cmd_correlate(&source(OptimizerKind::Gd, Loss::L2), &[], &dir.path().join("report")).unwrap();
        assert_eq!(report.pooled.unwrap().n_points, 3);
        assert!(cmd_correlate(&source(OptimizerKind::Adam, Loss::L1), &[], &dir.path().join("r2")).is_err());
    }

    #[test]
    fn correlate_on_fixtures_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let report = cmd_correlate(&CorrelateSource::Fixtures(fixtures), &[DatasetId::D2a], dir.path()).unwrap();
        let run1 = report.correlation.run(1).unwrap();
        assert!((run1.dataset(DatasetId::D1b).unwrap().r_expr_prime - 0.699).abs() < 0.001);
        assert!(report.stability.is_some() && report.hyperparameter_grid.is_some());
        assert!(dir.path().join(REPORT_FILE).exists());
        assert!(dir.path().join("scatter_3c.csv").exists());

        let missing = CorrelateSource::Files {
            runs: dir.path().join("nope.csv"),
            descriptors: dir.path().join("d.csv"),
            optimizer: OptimizerKind::Adam,
            loss: Loss::L2,
        };
        assert!(cmd_correlate(&missing, &[], dir.path()).is_err());
    }

    #[test]
    fn verify_reports_named_failure_for_perturbed_cell() {
        let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let dir = tempfile::tempdir().unwrap();
        for entry in fs::read_dir(&src).unwrap() {
            let entry = entry.unwrap();
            fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
        let pristine = cmd_verify_fixtures(dir.path()).unwrap();
        assert!(pristine.get("correlation.run1.1b.expr_prime").unwrap().passed);

        // Circuit 6, 1 layer, run 1, dataset 1b: 100 -> 60.
        let path = dir.path().join("val_1layer.csv");
        let text = fs::read_to_string(&path).unwrap();
        let perturbed = text.replacen("1,6,96.5,100,", "1,6,96.5,60,", 1);
        assert_ne!(perturbed, text);
        fs::write(&path, perturbed).unwrap();
        let report = cmd_verify_fixtures(dir.path()).unwrap();
        assert!(!report.get("correlation.run1.1b.expr_prime").unwrap().passed);

        fs::remove_file(dir.path().join("expr_ent.csv")).unwrap();
        let err = cmd_verify_fixtures(dir.path()).unwrap_err();
        assert!(format!("{err:#}").contains("expr_ent.csv"));
    }

    #[test]
    fn catalog_listing() {
        let all = cmd_catalog(None, 1).unwrap();
        assert_eq!(all.lines().count(), 19);
        let one = cmd_catalog(Some(9), 1).unwrap();
        assert!(one.starts_with("template 9, 1 layer(s), 4 parameter(s)"));
        assert!(cmd_catalog(Some(20), 1).is_err());
    }
}
