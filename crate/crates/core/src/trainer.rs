//! Training a circuit template as a binary classifier.
//!
//! A data point is embedded, the template is applied, and the computational
//! basis is split into two halves of eight states: indices `0..4` and `12..16`
//! vote for class -1, indices `4..12` for class +1. The model output is
//! `p(+1) - p(-1)`, which for this split equals `-<Z0 Z1>`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuits::{embed, CircuitTemplate};
use crate::datagen::{fnv1a, Dataset, DatasetId, LabeledPoint, Split};
use crate::error::{Error, Result};
use crate::sim::{Gate, GateKind, Statevector};

/// Basis indices that vote for class +1.
pub const POSITIVE_INDICES: std::ops::Range<usize> = 4..12;

pub const EARLY_STOP_PATIENCE: usize = 5;
pub const EARLY_STOP_MIN_DELTA: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    L1,
    L2,
}

impl Loss {
    pub const ALL: [Loss; 2] = [Loss::L1, Loss::L2];

    pub fn value(self, pred: f64, label: f64) -> f64 {
        let d = pred - label;
        match self {
            Loss::L1 => d.abs(),
            Loss::L2 => d * d,
        }
    }

    /// Derivative with respect to the prediction; the L1 kink gets subgradient 0.
    pub fn derivative(self, pred: f64, label: f64) -> f64 {
        let d = pred - label;
        match self {
            Loss::L1 if d == 0.0 => 0.0,
            Loss::L1 => d.signum(),
            Loss::L2 => 2.0 * d,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::L1 => "l1",
            Loss::L2 => "l2",
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Loss::L1),
            "l2" => Ok(Loss::L2),
            _ => Err(Error::Config(format!("unknown loss {s:?} (expected l1 or l2)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Gd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 2] = [OptimizerKind::Adam, OptimizerKind::Gd];

    pub fn default_learning_rate(self) -> f64 {
        match self {
            OptimizerKind::Adam => 0.05,
            OptimizerKind::Gd => 0.1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Gd => "gd",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "gd" | "sgd" => Ok(OptimizerKind::Gd),
            _ => Err(Error::Config(format!("unknown optimizer {s:?} (expected adam or gd)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub template_id: u32,
    pub layers: u32,
    pub dataset: DatasetId,
    pub loss: Loss,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_seed: u64,
    /// Finite-shot estimation of the output; `None` uses exact probabilities.
    pub shots: Option<u32>,
}

impl TrainConfig {
    /// Config with the default hyperparameters for `optimizer`.
    pub fn new(template_id: u32, layers: u32, dataset: DatasetId, optimizer: OptimizerKind, loss: Loss) -> Self {
        TrainConfig {
            template_id,
            layers,
            dataset,
            loss,
            optimizer,
            learning_rate: optimizer.default_learning_rate(),
            epochs: 50,
            batch_size: 30,
            init_seed: 0,
            shots: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(1..=900).contains(&self.batch_size) {
            return Err(Error::Config(format!("batch size {} outside 1..=900", self.batch_size)));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be positive".into()));
        }
        Ok(())
    }
}

/// Identity of one training run within a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub template_id: u32,
    pub layers: u32,
    pub dataset: DatasetId,
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub repeat: u32,
}

impl RunKey {
    /// Stable textual id, e.g. `c06-l2-2a-adam-l2-r0`.
    pub fn run_id(&self) -> String {
        format!(
            "c{:02}-l{}-{}-{}-{}-r{}",
            self.template_id, self.layers, self.dataset, self.optimizer, self.loss, self.repeat
        )
    }

    pub fn parse_run_id(id: &str) -> Result<RunKey> {
        let bad = || Error::Parse(format!("malformed run id {id:?}"));
        let parts: Vec<&str> = id.split('-').collect();
        let [c, l, d, o, loss, r] = parts.as_slice() else { return Err(bad()) };
        let num = |s: &str, prefix: char| s.strip_prefix(prefix).and_then(|n| n.parse::<u32>().ok()).ok_or_else(bad);
        Ok(RunKey {
            template_id: num(c, 'c')?,
            layers: num(l, 'l')?,
            dataset: d.parse()?,
            optimizer: o.parse()?,
            loss: loss.parse()?,
            repeat: num(r, 'r')?,
        })
    }

    /// Initialization seed for this run under `master_seed`.
    pub fn init_seed(&self, master_seed: u64) -> u64 {
        master_seed ^ fnv1a(self.run_id().as_bytes())
    }

    pub fn train_config(&self, master_seed: u64) -> TrainConfig {
        TrainConfig {
            init_seed: self.init_seed(master_seed),
            ..TrainConfig::new(self.template_id, self.layers, self.dataset, self.optimizer, self.loss)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub config: TrainConfig,
    pub params: Vec<f64>,
    /// Mean per-sample training loss of each epoch that ran.
    pub loss_trace: Vec<f64>,
    pub early_stopped: bool,
    pub acc_train: f64,
    pub acc_test: f64,
    pub acc_val: f64,
}

/// Row of `runs.csv`; accuracies are percentages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: String,
    pub template_id: u32,
    pub layers: u32,
    pub dataset: DatasetId,
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub seed: u64,
    pub acc_train: f64,
    pub acc_test: f64,
    pub acc_val: f64,
}

impl RunRow {
    pub fn key(&self) -> Result<RunKey> {
        let key = RunKey::parse_run_id(&self.run_id)?;
        let consistent = key.template_id == self.template_id
            && key.layers == self.layers
            && key.dataset == self.dataset
            && key.optimizer == self.optimizer
            && key.loss == self.loss;
        if consistent {
            Ok(key)
        } else {
            Err(Error::KeyMismatch(format!("run id {} disagrees with its columns", self.run_id)))
        }
    }
}

impl From<&RunRecord> for RunRow {
    fn from(r: &RunRecord) -> Self {
        RunRow {
            run_id: r.run_id.clone(),
            template_id: r.config.template_id,
            layers: r.config.layers,
            dataset: r.config.dataset,
            optimizer: r.config.optimizer,
            loss: r.config.loss,
            seed: r.config.init_seed,
            acc_train: 100.0 * r.acc_train,
            acc_test: 100.0 * r.acc_test,
            acc_val: 100.0 * r.acc_val,
        }
    }
}

pub fn value_from_probabilities(probs: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, p)| if POSITIVE_INDICES.contains(&i) { *p } else { -*p })
        .sum()
}

fn state_value(state: &Statevector) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if POSITIVE_INDICES.contains(&i) { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Exact model output `p(+1) - p(-1)` for one data point.
pub fn predict_value(template: &CircuitTemplate, params: &[f64], features: [f64; 2]) -> Result<f64> {
    Ok(state_value(&template.run(params, Some(features))?).clamp(-1.0, 1.0))
}

/// Model output estimated from `shots` samples of the output distribution.
pub fn predict_value_shots(
    template: &CircuitTemplate,
    params: &[f64],
    features: [f64; 2],
    shots: u32,
    rng: &mut impl Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Config("shots must be positive".into()));
    }
    let probs = template.run(params, Some(features))?.probabilities();
    let mut positive = 0u32;
    for _ in 0..shots {
        let mut u: f64 = rng.random();
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                outcome = i;
                break;
            }
            u -= p;
        }
        if POSITIVE_INDICES.contains(&outcome) {
            positive += 1;
        }
    }
    Ok((2.0 * positive as f64 - shots as f64) / shots as f64)
}

/// Label for a model output; a tie at exactly zero goes to +1.
pub fn classify(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

fn check_lengths(preds: &[f64], labels: &[f64]) -> Result<()> {
    if preds.len() == labels.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left: preds.len(), right: labels.len() })
    }
}

/// `Σ |pred - label|`.
pub fn loss_l1(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    Ok(preds.iter().zip(labels).map(|(p, y)| Loss::L1.value(*p, *y)).sum())
}

/// `Σ (pred - label)²`.
pub fn loss_l2(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    Ok(preds.iter().zip(labels).map(|(p, y)| Loss::L2.value(*p, *y)).sum())
}

const FOUR_TERM_C1: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
const FOUR_TERM_C2: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);

/// Shift rule for one gate kind as `(coefficient, shift)` pairs with
/// `df/dθ = Σ c · f(θ + s)`.
fn shift_terms(kind: GateKind) -> &'static [(f64, f64)] {
    const ROTATION: [(f64, f64); 2] = [(0.5, FRAC_PI_2), (-0.5, -FRAC_PI_2)];
    const CONTROLLED: [(f64, f64); 4] = [
        (FOUR_TERM_C1, FRAC_PI_2),
        (-FOUR_TERM_C1, -FRAC_PI_2),
        (-FOUR_TERM_C2, 3.0 * FRAC_PI_2),
        (FOUR_TERM_C2, -3.0 * FRAC_PI_2),
    ];
    if kind.is_controlled() {
        &CONTROLLED
    } else {
        &ROTATION
    }
}

/// A template bound to a parameter vector, with per-gate slot information.
struct Bound<'a> {
    template: &'a CircuitTemplate,
    gates: Vec<Gate>,
}

impl<'a> Bound<'a> {
    fn new(template: &'a CircuitTemplate, params: &[f64]) -> Result<Self> {
        Ok(Bound { template, gates: template.program(params)? })
    }

    fn forward(&self, start: &Statevector) -> Result<Statevector> {
        let mut s = start.clone();
        s.apply_all(&self.gates)?;
        Ok(s)
    }

    /// Adds `weight · ∂value/∂params` for one embedded point into `grad`
    /// and returns the unshifted value.
    fn accumulate_gradient(&self, start: &Statevector, weight_of: impl Fn(f64) -> f64, grad: &mut [f64]) -> Result<f64> {
        let n = self.gates.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(start.clone());
        for g in &self.gates {
            let mut next = prefix.last().expect("non-empty").clone();
            next.apply(g)?;
            prefix.push(next);
        }
        let value = state_value(&prefix[n]);
        let weight = weight_of(value);
        if weight == 0.0 {
            return Ok(value);
        }
        for (k, tg) in self.template.gate_program().iter().enumerate() {
            let Some(slot) = tg.slot else { continue };
            let gate = &self.gates[k];
            let theta = gate.angle.expect("parameterized gate has an angle");
            let mut d = 0.0;
            for &(c, shift) in shift_terms(gate.kind) {
                let mut s = prefix[k].clone();
                s.apply(&gate.with_angle(theta + shift))?;
                s.apply_all(&self.gates[k + 1..])?;
                d += c * state_value(&s);
            }
            grad[slot] += weight * d;
        }
        Ok(value)
    }
}

/// Gradient of the summed batch loss with respect to the template parameters,
/// by the parameter-shift rule. Only exact (analytic) outputs are supported.
pub fn gradient(
    template: &CircuitTemplate,
    params: &[f64],
    batch: &[LabeledPoint],
    loss: Loss,
    shots: Option<u32>,
) -> Result<Vec<f64>> {
    if shots.is_some() {
        return Err(Error::UnsupportedMode("parameter-shift gradients require exact outputs".into()));
    }
    let bound = Bound::new(template, params)?;
    let mut grad = vec![0.0; params.len()];
    for p in batch {
        let start = embed(p.features())?;
        let y = p.label as f64;
        bound.accumulate_gradient(&start, |v| loss.derivative(v, y), &mut grad)?;
    }
    Ok(grad)
}

/// Fraction of `points` classified correctly.
pub fn accuracy(template: &CircuitTemplate, params: &[f64], points: &[LabeledPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Domain("accuracy of an empty point set".into()));
    }
    let bound = Bound::new(template, params)?;
    let mut correct = 0usize;
    for p in points {
        let v = state_value(&bound.forward(&embed(p.features())?)?);
        if classify(v) == p.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / points.len() as f64)
}

enum Optimizer {
    Gd { lr: f64 },
    Adam { lr: f64, m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        match kind {
            OptimizerKind::Gd => Optimizer::Gd { lr },
            OptimizerKind::Adam => Optimizer::Adam { lr, m: vec![0.0; n], v: vec![0.0; n], t: 0 },
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Gd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam { lr, m, v, t } => {
                *t += 1;
                let b1t = 1.0 - Self::BETA1.powi(*t);
                let b2t = 1.0 - Self::BETA2.powi(*t);
                for i in 0..params.len() {
                    m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * grad[i];
                    v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    params[i] -= *lr * (m[i] / b1t) / ((v[i] / b2t).sqrt() + Self::EPS);
                }
            }
        }
    }
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal initial parameters drawn from `seed`.
pub fn initial_params(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed, 0);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Minibatch training on the dataset's train split, then accuracy on all splits.
///
/// The optimizer minimizes the batch-mean loss. Training stops early once the
/// epoch loss has improved by less than [`EARLY_STOP_MIN_DELTA`] for
/// [`EARLY_STOP_PATIENCE`] consecutive epochs.
pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<RunRecord> {
    let run_id = format!("c{:02}-l{}-{}-seed{}", config.template_id, config.layers, config.dataset, config.init_seed);
    train_run(config, dataset, run_id)
}

/// Trains the run `key` with default hyperparameters.
pub fn train_key(key: &RunKey, master_seed: u64, dataset: &Dataset) -> Result<RunRecord> {
    train_run(&key.train_config(master_seed), dataset, key.run_id())
}

/// As [`train`], labelling the record with `run_id`.
pub fn train_run(config: &TrainConfig, dataset: &Dataset, run_id: String) -> Result<RunRecord> {
    config.validate()?;
    if dataset.id != config.dataset {
        return Err(Error::Config(format!("config is for dataset {}, got {}", config.dataset, dataset.id)));
    }
    if config.shots.is_some() {
        return Err(Error::UnsupportedMode("training requires exact outputs".into()));
    }
    let template = CircuitTemplate::new(config.template_id, config.layers)?;
    let train_points = dataset.points_in(Split::Train);
    let embedded: Vec<(Statevector, f64)> = train_points
        .iter()
        .map(|p| Ok((embed(p.features())?, p.label as f64)))
        .collect::<Result<_>>()?;

    let mut params = initial_params(template.param_count(), config.init_seed);
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, params.len());
    let mut rng = seeded(config.init_seed, 1);
    let mut order: Vec<usize> = (0..embedded.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut stalled = 0;
    let mut early_stopped = false;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let bound = Bound::new(&template, &params)?;
            let mut grad = vec![0.0; params.len()];
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (state, y) = &embedded[i];
                let v = bound.accumulate_gradient(state, |v| scale * config.loss.derivative(v, *y), &mut grad)?;
                epoch_loss += config.loss.value(v, *y);
            }
            optimizer.step(&mut params, &grad);
        }
        let epoch_loss = epoch_loss / embedded.len() as f64;
        if let Some(prev) = loss_trace.last() {
            if prev - epoch_loss < EARLY_STOP_MIN_DELTA {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        loss_trace.push(epoch_loss);
        if stalled >= EARLY_STOP_PATIENCE {
            early_stopped = true;
            break;
        }
    }

    let acc = |s| accuracy(&template, &params, &dataset.points_in(s));
    let record = RunRecord {
        run_id,
        config: config.clone(),
        acc_train: acc(Split::Train)?,
        acc_test: acc(Split::Test)?,
        acc_val: acc(Split::Val)?,
        params,
        loss_trace,
        early_stopped,
    };
    log::debug!("{}: val acc {:.3} after {} epochs", record.run_id, record.acc_val, record.loss_trace.len());
    Ok(record)
}

pub const RUNS_CSV_HEADER: [&str; 10] =
    ["run_id", "template_id", "layers", "dataset", "optimizer", "loss", "seed", "acc_train", "acc_test", "acc_val"];

/// Writes `runs.csv`; the header is present even when there are no rows.
pub fn write_runs_csv<W: std::io::Write>(out: W, rows: &[RunRow]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(RUNS_CSV_HEADER)?;
    for r in rows {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRow>> {
    let mut reader = csv::Reader::from_reader(input);
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::generate;
    use num_complex::Complex64;

    fn value_of(amps: Vec<Complex64>) -> f64 {
        state_value(&Statevector::from_amplitudes(amps).unwrap())
    }

    #[test]
    fn class_mapping_examples() {
        let basis = |k: usize| (0..16).map(|i| Complex64::new((i == k) as u8 as f64, 0.0)).collect();
        assert_eq!(value_of(basis(0)), -1.0);
        assert_eq!(value_of(basis(5)), 1.0);
        assert_eq!(value_of(basis(15)), -1.0);
        assert!(value_of(vec![Complex64::new(1.0, 0.0); 16]).abs() < 1e-15);
        assert_eq!(POSITIVE_INDICES.len(), 8);
    }

    #[test]
    fn value_is_minus_zz_on_first_pair() {
        let t = CircuitTemplate::new(6, 1).unwrap();
        let params: Vec<f64> = (0..t.param_count()).map(|i| 0.37 * i as f64).collect();
        let s = t.run(&params, Some([0.2, 0.9])).unwrap();
        let zz: f64 = s
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| if ((i >> 3) & 1) ^ ((i >> 2) & 1) == 0 { *p } else { -*p })
            .sum();
        assert!((state_value(&s) + zz).abs() < 1e-12);
    }

    #[test]
    fn classify_tie_goes_positive() {
        assert_eq!(classify(0.3), 1);
        assert_eq!(classify(-0.7), -1);
        assert_eq!(classify(0.0), 1);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_l1(&[1.0, -1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(loss_l1(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(loss_l1(&[-1.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(loss_l2(&[-1.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(loss_l2(&[0.5], &[1.0]).unwrap(), 0.25);
        assert!(matches!(loss_l2(&[0.5], &[]), Err(Error::LengthMismatch { left: 1, right: 0 })));
        // On ±1 predictions each mismatch costs 2 under L1 and 4 under L2.
        let preds = [1.0, -1.0, -1.0, 1.0];
        let labels = [1.0, 1.0, -1.0, -1.0];
        assert_eq!(loss_l2(&preds, &labels).unwrap(), 2.0 * loss_l1(&preds, &labels).unwrap());
    }

    #[test]
    fn four_term_coefficients() {
        // Exact for f(θ) = a + b cos(θ/2 + φ) + c cos(θ + χ).
        let f = |t: f64| 0.3 + 0.7 * (t / 2.0 + 0.4).cos() - 0.2 * (t + 1.1).cos();
        let df = |t: f64| -0.35 * (t / 2.0 + 0.4).sin() + 0.2 * (t + 1.1).sin();
        for t in [-2.0, 0.0, 0.9, 3.3] {
            let est: f64 = shift_terms(GateKind::CRX).iter().map(|(c, s)| c * f(t + s)).sum();
            assert!((est - df(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn shots_estimate_converges() {
        let t = CircuitTemplate::new(4, 1).unwrap();
        let params: Vec<f64> = (0..t.param_count()).map(|i| 0.5 + 0.1 * i as f64).collect();
        let exact = predict_value(&t, &params, [0.3, 0.6]).unwrap();
        let mut rng = seeded(9, 0);
        let est = predict_value_shots(&t, &params, [0.3, 0.6], 20_000, &mut rng).unwrap();
        assert!((est - exact).abs() < 0.03, "{est} vs {exact}");
        let p = LabeledPoint { x: 0.3, y: 0.6, label: 1 };
        assert!(matches!(gradient(&t, &params, &[p], Loss::L2, Some(100)), Err(Error::UnsupportedMode(_))));
    }

    #[test]
    fn gradient_vanishes_at_perfect_fit() {
        // Targets equal to the model's own outputs: zero loss, stationary point.
        let t = CircuitTemplate::new(5, 1).unwrap();
        let params: Vec<f64> = (0..t.param_count()).map(|i| (i as f64).sin()).collect();
        let bound = Bound::new(&t, &params).unwrap();
        let mut grad = vec![0.0; params.len()];
        for f in [[0.1, 0.8], [0.5, 0.5], [0.9, 0.2]] {
            let start = embed(f).unwrap();
            let v = bound.accumulate_gradient(&start, |v| Loss::L2.derivative(v, v), &mut grad).unwrap();
            assert_eq!(Loss::L2.value(v, v), 0.0);
        }
        assert!(grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-9);
    }

    #[test]
    fn run_id_round_trip() {
        let key = RunKey {
            template_id: 6,
            layers: 2,
            dataset: DatasetId::D2a,
            optimizer: OptimizerKind::Adam,
            loss: Loss::L2,
            repeat: 3,
        };
        assert_eq!(key.run_id(), "c06-l2-2a-adam-l2-r3");
        assert_eq!(RunKey::parse_run_id(&key.run_id()).unwrap(), key);
        assert!(RunKey::parse_run_id("c06-l2-2a-adam-l2").is_err());
        assert!(RunKey::parse_run_id("x06-l2-2a-adam-l2-r0").is_err());
        assert_ne!(key.init_seed(42), RunKey { repeat: 4, ..key }.init_seed(42));
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::new(1, 1, DatasetId::D1a, OptimizerKind::Gd, Loss::L1);
        assert_eq!(c.learning_rate, 0.1);
        assert!(c.validate().is_ok());
        c.batch_size = 901;
        assert!(c.validate().is_err());
        c.batch_size = 30;
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn training_is_deterministic_and_records_trace() {
        let ds = generate(DatasetId::D3a, 1);
        let mut c = TrainConfig::new(2, 1, DatasetId::D3a, OptimizerKind::Adam, Loss::L2);
        c.epochs = 2;
        c.init_seed = 5;
        let a = train(&c, &ds).unwrap();
        let b = train(&c, &ds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss_trace.len(), 2);
        assert!((0.0..=1.0).contains(&a.acc_val));
        let row = RunRow::from(&a);
        assert_eq!(row.acc_val, 100.0 * a.acc_val);
        let wrong = generate(DatasetId::D3b, 1);
        assert!(train(&c, &wrong).is_err());
    }

    #[test]
    fn accuracy_rejects_empty() {
        let t = CircuitTemplate::new(1, 1).unwrap();
        assert!(matches!(accuracy(&t, &[0.0; 8], &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn runs_csv_round_trip() {
        let key = RunKey {
            template_id: 11,
            layers: 1,
            dataset: DatasetId::D3c,
            optimizer: OptimizerKind::Gd,
            loss: Loss::L1,
            repeat: 0,
        };
        let row = RunRow {
            run_id: key.run_id(),
            template_id: 11,
            layers: 1,
            dataset: DatasetId::D3c,
            optimizer: OptimizerKind::Gd,
            loss: Loss::L1,
            seed: key.init_seed(42),
            acc_train: 61.0,
            acc_test: 58.333333333333336,
            acc_val: 60.0,
        };
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,template_id,layers,dataset,optimizer,loss,seed,acc_train,acc_test,acc_val\n"));
        let back = read_runs_csv(buf.as_slice()).unwrap();
        let mut empty = Vec::new();
        write_runs_csv(&mut empty, &[]).unwrap();
        assert_eq!(empty, RUNS_CSV_HEADER.join(",").into_bytes().into_iter().chain([b'\n']).collect::<Vec<_>>());
        assert_eq!(back, vec![row.clone()]);
        assert_eq!(back[0].key().unwrap(), key);
        let bad = RunRow { layers: 2, ..row };
        assert!(matches!(bad.key(), Err(Error::KeyMismatch(_))));
    }
}
