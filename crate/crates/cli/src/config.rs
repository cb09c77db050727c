use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pqc_core::circuits::{N_TEMPLATES, SWEEP_TEMPLATES};
use pqc_core::{DatasetId, Loss, OptimizerKind, RunKey, TrainConfig};
use serde::{Deserialize, Serialize};

/// Grid of training runs. Also the schema of the TOML sweep file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub templates: Vec<u32>,
    pub layers: Vec<u32>,
    pub datasets: Vec<DatasetId>,
    pub optimizers: Vec<OptimizerKind>,
    pub losses: Vec<Loss>,
    pub repeats: u32,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub epochs: usize,
    pub batch_size: usize,
    /// Overrides the per-optimizer default learning rate.
    pub learning_rate: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig::test_sweep()
    }
}

impl SweepConfig {
    /// Hyperparameter search: every template but 10, both layer counts, all
    /// datasets, both optimizers and both losses.
    pub fn test_sweep() -> Self {
        SweepConfig {
            templates: SWEEP_TEMPLATES.to_vec(),
            layers: vec![1, 2],
            datasets: DatasetId::ALL.to_vec(),
            optimizers: OptimizerKind::ALL.to_vec(),
            losses: Loss::ALL.to_vec(),
            repeats: 1,
            master_seed: 42,
            output_dir: PathBuf::from("out/sweep"),
            epochs: 50,
            batch_size: 30,
            learning_rate: None,
        }
    }

    /// Final runs: all templates with Adam and L2, repeated three times.
    pub fn validation() -> Self {
        SweepConfig {
            templates: (1..=N_TEMPLATES).collect(),
            optimizers: vec![OptimizerKind::Adam],
            losses: vec![Loss::L2],
            repeats: 3,
            output_dir: PathBuf::from("out/validate"),
            ..SweepConfig::test_sweep()
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: SweepConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty()
            || self.layers.is_empty()
            || self.datasets.is_empty()
            || self.optimizers.is_empty()
            || self.losses.is_empty()
        {
            bail!("sweep lists must be non-empty");
        }
        if self.repeats == 0 {
            bail!("repeats must be at least 1");
        }
        if let Some(t) = self.templates.iter().find(|t| !(1..=N_TEMPLATES).contains(*t)) {
            bail!("unknown template {t}");
        }
        if self.layers.contains(&0) {
            bail!("layer counts must be positive");
        }
        self.train_config(&self.keys()[0]).validate()?;
        Ok(())
    }

    /// All run keys of the grid in canonical order, without duplicates.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &template_id in &self.templates {
            for &layers in &self.layers {
                for &dataset in &self.datasets {
                    for &optimizer in &self.optimizers {
                        for &loss in &self.losses {
                            for repeat in 0..self.repeats {
                                keys.push(RunKey { template_id, layers, dataset, optimizer, loss, repeat });
                            }
                        }
                    }
                }
            }
        }
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn train_config(&self, key: &RunKey) -> TrainConfig {
        let mut c = key.train_config(self.master_seed);
        c.epochs = self.epochs;
        c.batch_size = self.batch_size;
        if let Some(lr) = self.learning_rate {
            c.learning_rate = lr;
        }
        c
    }
}

/// Comma-separated ids with inclusive ranges, e.g. `1,3,5-7`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdList(pub Vec<u32>);

impl std::str::FromStr for IdList {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_id_list(s).map(IdList)
    }
}

/// Parses `1,3,5-7` into `[1, 3, 5, 6, 7]`.
pub fn parse_id_list(text: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
                if a > b {
                    bail!("empty range {part}");
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().with_context(|| format!("not a number: {part:?}"))?),
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        assert_eq!(SweepConfig::test_sweep().keys().len(), 1296);
        assert_eq!(SweepConfig::validation().keys().len(), 342 * 3);
        let keys = SweepConfig::validation().keys();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = SweepConfig::validation();
        let text = cfg.to_toml().unwrap();
        assert_eq!(toml::from_str::<SweepConfig>(&text).unwrap(), cfg);
        let partial: SweepConfig = toml::from_str("templates = [6]\ndatasets = [\"2a\", \"3c\"]\nlearning_rate = 0.02\n").unwrap();
        assert_eq!(partial.keys().len(), 2 * 2 * 2 * 2);
        assert_eq!(partial.train_config(&partial.keys()[0]).learning_rate, 0.02);
        assert!(toml::from_str::<SweepConfig>("templatez = [1]").is_err());
        assert!(toml::from_str::<SweepConfig>("datasets = [\"9z\"]").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = SweepConfig { templates: vec![20], ..SweepConfig::test_sweep() };
        assert!(cfg.validate().is_err());
        cfg.templates = vec![];
        assert!(cfg.validate().is_err());
        cfg.templates = vec![1];
        cfg.repeats = 0;
        assert!(cfg.validate().is_err());
        cfg.repeats = 1;
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
        cfg.batch_size = 30;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn id_lists() {
        assert_eq!(parse_id_list("1,3,5-7").unwrap(), vec![1, 3, 5, 6, 7]);
        assert!(parse_id_list("7-5").is_err());
        assert!(parse_id_list("a").is_err());
        assert!(parse_id_list("").is_err());
    }
}
