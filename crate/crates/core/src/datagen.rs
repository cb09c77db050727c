//! The nine synthetic two-class datasets.
//!
//! Rows 1a–1c are separated by a boundary curve with zero, one and three bends,
//! 2a–2c interleave (two half-moon variants and a two-arm spiral), and 3a–3c
//! nest concentric regions. Every dataset has 1500 points, 750 per class,
//! normalized per axis to `[0, 1]`, with a stratified 900/300/300 split.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POINTS_PER_CLASS: usize = 750;
pub const N_POINTS: usize = 2 * POINTS_PER_CLASS;
/// Per-class split sizes (train, test, validation).
pub const SPLIT_PER_CLASS: [usize; 3] = [450, 150, 150];
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetId {
    #[serde(rename = "1a")]
    D1a,
    #[serde(rename = "1b")]
    D1b,
    #[serde(rename = "1c")]
    D1c,
    #[serde(rename = "2a")]
    D2a,
    #[serde(rename = "2b")]
    D2b,
    #[serde(rename = "2c")]
    D2c,
    #[serde(rename = "3a")]
    D3a,
    #[serde(rename = "3b")]
    D3b,
    #[serde(rename = "3c")]
    D3c,
}

impl DatasetId {
    pub const ALL: [DatasetId; 9] = [
        DatasetId::D1a,
        DatasetId::D1b,
        DatasetId::D1c,
        DatasetId::D2a,
        DatasetId::D2b,
        DatasetId::D2c,
        DatasetId::D3a,
        DatasetId::D3b,
        DatasetId::D3c,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::D1a => "1a",
            DatasetId::D1b => "1b",
            DatasetId::D1c => "1c",
            DatasetId::D2a => "2a",
            DatasetId::D2b => "2b",
            DatasetId::D2c => "2c",
            DatasetId::D3a => "3a",
            DatasetId::D3b => "3b",
            DatasetId::D3c => "3c",
        }
    }

    /// Seed used for this dataset: the master seed XOR a 64-bit FNV-1a hash of the id.
    pub fn derived_seed(self, master: u64) -> u64 {
        master ^ fnv1a(self.as_str().as_bytes())
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Val,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::Val];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    /// +1 or -1.
    pub label: i8,
}

impl LabeledPoint {
    pub fn features(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub id: DatasetId,
    pub points: Vec<LabeledPoint>,
    /// Split membership of each point, parallel to `points`.
    pub splits: Vec<Split>,
}

/// Index views into a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitViews {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub val: Vec<usize>,
}

impl Dataset {
    pub fn views(&self) -> SplitViews {
        let pick = |which: Split| -> Vec<usize> {
            self.splits.iter().enumerate().filter(|(_, s)| **s == which).map(|(i, _)| i).collect()
        };
        SplitViews { train: pick(Split::Train), test: pick(Split::Test), val: pick(Split::Val) }
    }

    pub fn points_in(&self, which: Split) -> Vec<LabeledPoint> {
        self.points.iter().zip(&self.splits).filter(|(_, s)| **s == which).map(|(p, _)| *p).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["x", "y", "label", "split"])?;
        for (p, s) in self.points.iter().zip(&self.splits) {
            let split = match s {
                Split::Train => "train",
                Split::Test => "test",
                Split::Val => "val",
            };
            writer.write_record([p.x.to_string(), p.y.to_string(), p.label.to_string(), split.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(id: DatasetId, input: R) -> Result<Dataset> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            y: f64,
            label: i8,
            split: Split,
        }
        let mut reader = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        let mut splits = Vec::new();
        for row in reader.deserialize() {
            let row: Row = row?;
            if row.label != 1 && row.label != -1 {
                return Err(Error::Parse(format!("label {} is not +1 or -1", row.label)));
            }
            points.push(LabeledPoint { x: row.x, y: row.y, label: row.label });
            splits.push(row.split);
        }
        Ok(Dataset { id, points, splits })
    }
}

/// How a dataset family draws raw points, before jitter and normalization.
enum Sampler {
    /// Draws anywhere and labels by region; rejection fills both classes.
    Labeled(fn(&mut ChaCha8Rng) -> LabeledPoint),
    /// Draws a point of the requested class directly.
    PerClass(fn(&mut ChaCha8Rng, i8) -> LabeledPoint),
}

struct Recipe {
    jitter: f64,
    sampler: Sampler,
}

fn boundary_sample(rng: &mut ChaCha8Rng, curve: fn(f64) -> f64) -> LabeledPoint {
    let (x, y): (f64, f64) = (rng.random(), rng.random());
    let label = if y > curve(x) { 1 } else { -1 };
    LabeledPoint { x, y, label }
}

fn linear(rng: &mut ChaCha8Rng) -> LabeledPoint {
    boundary_sample(rng, |x| x)
}

fn one_bend(rng: &mut ChaCha8Rng) -> LabeledPoint {
    boundary_sample(rng, |x| 0.5 + 0.25 * (PI * x).sin())
}

fn three_bends(rng: &mut ChaCha8Rng) -> LabeledPoint {
    boundary_sample(rng, |x| 0.5 + 0.25 * (3.0 * PI * x).sin())
}

const MOON_RADIUS: f64 = 0.35;

/// Class +1 is the upper arc around the origin; class -1 is the lower arc
/// centred at `(r, -offset)`, so its tips sit `offset` below the floor of the
/// first arc's hollow and a smaller offset interleaves the two more deeply.
fn moon(rng: &mut ChaCha8Rng, label: i8, offset: f64) -> LabeledPoint {
    let t = rng.random::<f64>() * PI;
    let r = MOON_RADIUS;
    if label == 1 {
        LabeledPoint { x: r * t.cos(), y: r * t.sin(), label }
    } else {
        LabeledPoint { x: r - r * t.cos(), y: -offset - r * t.sin(), label }
    }
}

fn spiral(rng: &mut ChaCha8Rng, label: i8) -> LabeledPoint {
    // 1.5 turns; sqrt weighting keeps the density roughly uniform along the arm.
    let (t0, t1) = (PI / 4.0, 3.0 * PI);
    let t = t0 + (t1 - t0) * rng.random::<f64>().sqrt();
    let phase = if label == 1 { 0.0 } else { PI };
    let rho = 0.45 * t / t1;
    LabeledPoint { x: 0.5 + rho * (t + phase).cos(), y: 0.5 + rho * (t + phase).sin(), label }
}

/// Uniform-by-area point in the annulus `inner ≤ r ≤ outer` around (0.5, 0.5).
fn annulus_point(rng: &mut ChaCha8Rng, inner: f64, outer: f64) -> (f64, f64) {
    let u: f64 = rng.random();
    let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    let a = rng.random::<f64>() * 2.0 * PI;
    (0.5 + r * a.cos(), 0.5 + r * a.sin())
}

fn nested(rng: &mut ChaCha8Rng, label: i8, inner: (f64, f64), outer: (f64, f64)) -> LabeledPoint {
    let (lo, hi) = if label == 1 { inner } else { outer };
    let (x, y) = annulus_point(rng, lo, hi);
    LabeledPoint { x, y, label }
}

const RING_WIDTH: f64 = 0.17;

/// Even bands of `⌊r / 0.17⌋` are class +1.
fn rings(rng: &mut ChaCha8Rng) -> LabeledPoint {
    let (x, y) = annulus_point(rng, 0.0, 0.5);
    let r = (x - 0.5).hypot(y - 0.5);
    let label = if (r / RING_WIDTH).floor() as i64 % 2 == 0 { 1 } else { -1 };
    LabeledPoint { x, y, label }
}

fn recipe(id: DatasetId) -> Recipe {
    let free = |jitter, f| Recipe { jitter, sampler: Sampler::Labeled(f) };
    let by_class = |jitter, f| Recipe { jitter, sampler: Sampler::PerClass(f) };
    match id {
        DatasetId::D1a => free(0.05, linear),
        DatasetId::D1b => free(0.05, one_bend),
        DatasetId::D1c => free(0.05, three_bends),
        DatasetId::D2a => by_class(0.04, |rng, l| moon(rng, l, 0.15)),
        DatasetId::D2b => by_class(0.05, |rng, l| moon(rng, l, 0.05)),
        DatasetId::D2c => by_class(0.03, spiral),
        DatasetId::D3a => by_class(0.0, |rng, l| nested(rng, l, (0.0, 0.25), (0.35, 0.5))),
        DatasetId::D3b => by_class(0.0, |rng, l| nested(rng, l, (0.15, 0.25), (0.35, 0.45))),
        DatasetId::D3c => free(0.02, rings),
    }
}

/// Generate dataset `id` from the master seed (the per-dataset seed is derived internally).
pub fn generate(id: DatasetId, master_seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(id.derived_seed(master_seed));
    let recipe = recipe(id);

    let mut points = Vec::with_capacity(N_POINTS);
    match recipe.sampler {
        Sampler::PerClass(f) => {
            for label in [1i8, -1] {
                points.extend((0..POINTS_PER_CLASS).map(|_| f(&mut rng, label)));
            }
        }
        Sampler::Labeled(f) => {
            // Rejection until both classes are full.
            let (mut pos, mut neg) = (0, 0);
            while pos < POINTS_PER_CLASS || neg < POINTS_PER_CLASS {
                let p = f(&mut rng);
                let slot = if p.label == 1 { &mut pos } else { &mut neg };
                if *slot < POINTS_PER_CLASS {
                    *slot += 1;
                    points.push(p);
                }
            }
        }
    }

    if recipe.jitter > 0.0 {
        let noise = Normal::new(0.0, recipe.jitter).expect("positive jitter");
        for p in &mut points {
            p.x += noise.sample(&mut rng);
            p.y += noise.sample(&mut rng);
        }
    }
    normalize(&mut points);
    points.shuffle(&mut rng);

    let splits = stratified_split(&points, &mut rng);
    Dataset { id, points, splits }
}

/// Min-max scale each axis onto `[0, 1]`.
fn normalize(points: &mut [LabeledPoint]) {
    let bounds = |f: fn(&LabeledPoint) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = bounds(|p| p.x);
    let (y0, y1) = bounds(|p| p.y);
    for p in points.iter_mut() {
        p.x = ((p.x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        p.y = ((p.y - y0) / (y1 - y0)).clamp(0.0, 1.0);
    }
}

fn stratified_split(points: &[LabeledPoint], rng: &mut ChaCha8Rng) -> Vec<Split> {
    let mut splits = vec![Split::Train; points.len()];
    for label in [1i8, -1] {
        let mut idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].label == label).collect();
        idx.shuffle(rng);
        let mut cursor = 0;
        for (split, take) in Split::ALL.into_iter().zip(SPLIT_PER_CLASS) {
            let end = (cursor + take).min(idx.len());
            for &i in &idx[cursor..end] {
                splits[i] = split;
            }
            cursor = end;
        }
    }
    splits
}

/// Generate all nine datasets in canonical order.
pub fn generate_all(master_seed: u64) -> Vec<Dataset> {
    DatasetId::ALL.into_iter().map(|id| generate(id, master_seed)).collect()
}
