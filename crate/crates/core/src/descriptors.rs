//! Expressibility and entangling capability of circuit templates, estimated by
//! sampling parameter vectors uniformly from `[0, 2π)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::CircuitTemplate;
use crate::error::{Error, Result};
use crate::sim::{fidelity, Statevector};

/// Upper end of the parameter sampling range; samples are drawn from `[0, PARAM_RANGE)`.
pub const PARAM_RANGE: f64 = TAU;

const FIDELITY_STREAM: u64 = 0x6669_6465_6c69_7479;
const ENT_STREAM: u64 = 0x656e_7461_6e67_6c65;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    pub n_fidelity_pairs: usize,
    pub n_histogram_bins: usize,
    pub n_ent_samples: usize,
    pub seed: u64,
    /// Embedded data point to start from; `None` starts the template from `|0000>`.
    pub fixed_features: Option<[f64; 2]>,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            n_fidelity_pairs: 5000,
            n_histogram_bins: 75,
            n_ent_samples: 1000,
            seed: 42,
            fixed_features: None,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fidelity_pairs < 100 {
            return Err(Error::Config(format!("n_fidelity_pairs {} < 100", self.n_fidelity_pairs)));
        }
        if self.n_histogram_bins < 2 {
            return Err(Error::Config(format!("n_histogram_bins {} < 2", self.n_histogram_bins)));
        }
        if self.n_ent_samples == 0 {
            return Err(Error::Config("n_ent_samples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expressibility {
    /// KL divergence from the Haar fidelity distribution, in nats.
    pub expr: f64,
    /// `-log10(expr)`; `+inf` when `expr` is exactly zero.
    pub expr_prime: f64,
    /// Set when `expr` was zero and `expr_prime` is the infinite sentinel.
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorResult {
    pub template_id: u32,
    pub layers: u32,
    pub expr: f64,
    pub expr_prime: f64,
    pub ent: f64,
    pub config: DescriptorConfig,
}

/// Row of `descriptors.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRow {
    pub template_id: u32,
    pub layers: u32,
    pub expr: f64,
    pub expr_prime: f64,
    pub ent: f64,
    pub n_pairs: usize,
    pub n_bins: usize,
    pub n_ent_samples: usize,
    pub seed: u64,
}

impl From<&DescriptorResult> for DescriptorRow {
    fn from(r: &DescriptorResult) -> Self {
        DescriptorRow {
            template_id: r.template_id,
            layers: r.layers,
            expr: r.expr,
            expr_prime: r.expr_prime,
            ent: r.ent,
            n_pairs: r.config.n_fidelity_pairs,
            n_bins: r.config.n_histogram_bins,
            n_ent_samples: r.config.n_ent_samples,
            seed: r.config.seed,
        }
    }
}

/// Density of pairwise fidelities between Haar-random states of dimension `dim`.
pub fn haar_pdf(f: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::Domain(format!("Hilbert space dimension {dim} < 2")));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(format!("fidelity {f} outside [0, 1]")));
    }
    Ok((dim - 1) as f64 * (1.0 - f).powi(dim as i32 - 2))
}

/// Exact Haar probability mass on `[lo, hi]`; the CDF is `1 - (1 - F)^(dim-1)`.
pub fn haar_bin_probability(lo: f64, hi: f64, dim: usize) -> f64 {
    let e = dim as i32 - 1;
    (1.0 - lo).powi(e) - (1.0 - hi).powi(e)
}

/// RNG for one sample lane, independent of how lanes are scheduled.
fn lane_rng(seed: u64, domain: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(lane);
    rng
}

fn random_params(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * PARAM_RANGE).collect()
}

fn prepare(template: &CircuitTemplate, params: &[f64], features: Option<[f64; 2]>) -> Result<Statevector> {
    template.run(params, features)
}

/// Fidelities of `n_fidelity_pairs` independently sampled parameter pairs.
pub fn sample_fidelities(template: &CircuitTemplate, cfg: &DescriptorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = template.param_count();
    (0..cfg.n_fidelity_pairs as u64)
        .into_par_iter()
        .map(|lane| {
            let mut rng = lane_rng(cfg.seed, FIDELITY_STREAM, lane);
            let a = prepare(template, &random_params(&mut rng, n), cfg.fixed_features)?;
            let b = prepare(template, &random_params(&mut rng, n), cfg.fixed_features)?;
            fidelity(&a, &b)
        })
        .collect()
}

/// KL divergence of the histogrammed fidelities from the Haar distribution.
pub fn expressibility(fidelities: &[f64], n_bins: usize, dim: usize) -> Result<Expressibility> {
    if fidelities.is_empty() {
        return Err(Error::Domain("no fidelity samples".into()));
    }
    if n_bins < 2 {
        return Err(Error::Config(format!("n_histogram_bins {n_bins} < 2")));
    }
    if dim < 2 {
        return Err(Error::Domain(format!("Hilbert space dimension {dim} < 2")));
    }
    let mut counts = vec![0usize; n_bins];
    for &f in fidelities {
        if !(-1e-12..=1.0 + 1e-12).contains(&f) {
            return Err(Error::Domain(format!("fidelity {f} outside [0, 1]")));
        }
        let bin = ((f.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let total = fidelities.len() as f64;
    let width = 1.0 / n_bins as f64;
    let expr: f64 = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let p = c as f64 / total;
            let q = haar_bin_probability(i as f64 * width, (i + 1) as f64 * width, dim);
            p * (p / q).ln()
        })
        .sum();
    // Rounding can push an essentially perfect match a hair below zero.
    let expr = expr.max(0.0);
    if expr == 0.0 {
        log::warn!("expressibility is exactly zero; reporting expr' as +inf");
        return Ok(Expressibility { expr, expr_prime: f64::INFINITY, saturated: true });
    }
    Ok(Expressibility { expr, expr_prime: -expr.log10(), saturated: false })
}

/// Meyer-Wallach Q via the single-qubit purity identity `Q = 2 (1 - mean Tr ρ_k²)`.
pub fn meyer_wallach_q(state: &Statevector) -> f64 {
    let n = state.n_qubits();
    let mean_purity = (0..n)
        .map(|q| state.reduced_purity(q).expect("qubit index in range"))
        .sum::<f64>()
        / n as f64;
    (2.0 * (1.0 - mean_purity)).clamp(0.0, 1.0)
}

pub const ORACLE_MAX_QUBITS: usize = 6;

/// Meyer-Wallach Q from its defining sum over qubit-deletion maps.
///
/// For each qubit `j`, `u` and `v` collect the amplitudes with bit `j` equal
/// to 0 and 1 (with that bit removed from the index), and
/// `D(u, v) = Σ_{i<k} |u_i v_k - u_k v_i|²`. The result is `(4/n) Σ_j D`.
pub fn meyer_wallach_q_oracle(state: &Statevector) -> Result<f64> {
    let n = state.n_qubits();
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::OracleSize { max: ORACLE_MAX_QUBITS, got: n });
    }
    let amps = state.amplitudes();
    let mut total = 0.0;
    for j in 0..n {
        let (mut u, mut v) = (Vec::new(), Vec::new());
        for (index, amp) in amps.iter().enumerate() {
            let bit = (index >> (n - 1 - j)) & 1;
            if bit == 0 {
                u.push(*amp);
            } else {
                v.push(*amp);
            }
        }
        let mut d = 0.0;
        for i in 0..u.len() {
            for k in i + 1..u.len() {
                d += (u[i] * v[k] - u[k] * v[i]).norm_sqr();
            }
        }
        total += d;
    }
    Ok(4.0 / n as f64 * total)
}

/// Mean Meyer-Wallach Q over `n_ent_samples` uniformly sampled parameter vectors.
pub fn entangling_capability(template: &CircuitTemplate, cfg: &DescriptorConfig) -> Result<f64> {
    cfg.validate()?;
    let n = template.param_count();
    let qs: Vec<f64> = (0..cfg.n_ent_samples as u64)
        .into_par_iter()
        .map(|lane| {
            let mut rng = lane_rng(cfg.seed, ENT_STREAM, lane);
            prepare(template, &random_params(&mut rng, n), cfg.fixed_features).map(|s| meyer_wallach_q(&s))
        })
        .collect::<Result<_>>()?;
    Ok(qs.iter().sum::<f64>() / qs.len() as f64)
}

/// All three descriptors for one template.
pub fn describe(template: &CircuitTemplate, cfg: &DescriptorConfig) -> Result<DescriptorResult> {
    let fids = sample_fidelities(template, cfg)?;
    let dim = 1usize << template.n_qubits();
    let e = expressibility(&fids, cfg.n_histogram_bins, dim)?;
    let ent = entangling_capability(template, cfg)?;
    Ok(DescriptorResult {
        template_id: template.template_id(),
        layers: template.layers(),
        expr: e.expr,
        expr_prime: e.expr_prime,
        ent,
        config: *cfg,
    })
}

pub fn write_descriptors_csv<W: std::io::Write>(out: W, results: &[DescriptorResult]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in results {
        writer.serialize(DescriptorRow::from(r))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_descriptors_csv<R: std::io::Read>(input: R) -> Result<Vec<DescriptorRow>> {
    let mut reader = csv::Reader::from_reader(input);
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}
