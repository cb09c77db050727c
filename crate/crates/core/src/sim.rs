//! Dense statevector simulator for small registers.
//!
//! Qubit 0 is the most significant bit of the basis index, so on four qubits
//! index `0b0110` is `|0110>` with qubit 1 and qubit 2 set. Gates are applied
//! in place by walking amplitude pairs; the full unitary is never built.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    X,
    RX,
    RY,
    RZ,
    CX,
    CZ,
    CRX,
    CRZ,
}

impl GateKind {
    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::CX | GateKind::CZ | GateKind::CRX | GateKind::CRZ)
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRX | GateKind::CRZ
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CX => "CX",
            GateKind::CZ => "CZ",
            GateKind::CRX => "CRX",
            GateKind::CRZ => "CRZ",
        }
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "CX" | "CNOT" => GateKind::CX,
            "CZ" => GateKind::CZ,
            "CRX" => GateKind::CRX,
            "CRZ" => GateKind::CRZ,
            other => return Err(Error::Parse(format!("unknown gate kind {other:?}"))),
        })
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete gate. Rotations use the half-angle convention `exp(-i θ P / 2)`;
/// controlled rotations act on the target when the control is `|1>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angle: Option<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize, control: Option<usize>, angle: Option<f64>) -> Result<Self> {
        match (kind.is_controlled(), control) {
            (true, None) => return Err(Error::InvalidGate(format!("{kind} needs a control qubit"))),
            (false, Some(_)) => return Err(Error::InvalidGate(format!("{kind} takes no control qubit"))),
            (true, Some(c)) if c == target => {
                return Err(Error::InvalidGate(format!("{kind} control and target are both {c}")))
            }
            _ => {}
        }
        match (kind.is_rotation(), angle) {
            (true, None) => Err(Error::InvalidGate(format!("{kind} needs an angle"))),
            (false, Some(_)) => Err(Error::InvalidGate(format!("{kind} takes no angle"))),
            _ => Ok(Gate { kind, target, control, angle }),
        }
    }

    pub fn h(target: usize) -> Self {
        Gate { kind: GateKind::H, target, control: None, angle: None }
    }

    pub fn x(target: usize) -> Self {
        Gate { kind: GateKind::X, target, control: None, angle: None }
    }

    pub fn rx(target: usize, angle: f64) -> Self {
        Gate { kind: GateKind::RX, target, control: None, angle: Some(angle) }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate { kind: GateKind::RY, target, control: None, angle: Some(angle) }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Gate { kind: GateKind::RZ, target, control: None, angle: Some(angle) }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CX control and target must differ");
        Gate { kind: GateKind::CX, target, control: Some(control), angle: None }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CZ control and target must differ");
        Gate { kind: GateKind::CZ, target, control: Some(control), angle: None }
    }

    pub fn crx(control: usize, target: usize, angle: f64) -> Self {
        assert_ne!(control, target, "CRX control and target must differ");
        Gate { kind: GateKind::CRX, target, control: Some(control), angle: Some(angle) }
    }

    pub fn crz(control: usize, target: usize, angle: f64) -> Self {
        assert_ne!(control, target, "CRZ control and target must differ");
        Gate { kind: GateKind::CRZ, target, control: Some(control), angle: Some(angle) }
    }

    /// Same gate with its angle replaced. Panics on non-rotation kinds.
    pub fn with_angle(&self, angle: f64) -> Self {
        assert!(self.kind.is_rotation(), "{} has no angle", self.kind);
        Gate { angle: Some(angle), ..*self }
    }

    /// Same rotation with `-angle`; fixed gates are self-inverse.
    pub fn inverse(&self) -> Self {
        match self.angle {
            Some(a) => self.with_angle(-a),
            None => *self,
        }
    }

    /// The single-qubit matrix acting on the target (in the control-set subspace for controlled kinds).
    fn target_matrix(&self) -> [[Complex64; 2]; 2] {
        let theta = self.angle.unwrap_or(0.0);
        let (s, c) = (theta / 2.0).sin_cos();
        match self.kind {
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::X | GateKind::CX => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::CZ => [[ONE, ZERO], [ZERO, -ONE]],
            GateKind::RX | GateKind::CRX => {
                let d = Complex64::new(c, 0.0);
                let o = Complex64::new(0.0, -s);
                [[d, o], [o, d]]
            }
            GateKind::RY => [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]],
            GateKind::RZ | GateKind::CRZ => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
        }
    }
}

/// Pure state of `n_qubits` qubits as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Statevector { n_qubits, amplitudes })
    }

    /// Computational basis state with the given index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero_state(n_qubits)?;
        if index >= state.dim() {
            return Err(Error::Domain(format!("basis index {index} >= {}", state.dim())));
        }
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = ONE;
        Ok(state)
    }

    /// Wraps raw amplitudes, normalizing them. The length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!("amplitude count {len} is not 2^n with n >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Domain("amplitudes have zero or non-finite norm".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Statevector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, index: usize) -> Result<()> {
        if index < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitIndex { index, n_qubits: self.n_qubits })
        }
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        self.check_qubit(gate.target)?;
        let control_mask = match gate.control {
            Some(c) => {
                self.check_qubit(c)?;
                if c == gate.target {
                    return Err(Error::InvalidGate(format!("{} control equals target", gate.kind)));
                }
                self.mask(c)
            }
            None => 0,
        };
        let target_mask = self.mask(gate.target);
        match gate.kind {
            // Diagonal kinds only touch phases.
            GateKind::CZ => {
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & control_mask == control_mask && i & target_mask != 0 {
                        *amp = -*amp;
                    }
                }
            }
            GateKind::RZ | GateKind::CRZ => {
                let m = gate.target_matrix();
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & control_mask == control_mask {
                        *amp *= if i & target_mask == 0 { m[0][0] } else { m[1][1] };
                    }
                }
            }
            _ => self.apply_pairs(gate.target_matrix(), target_mask, control_mask),
        }
        Ok(())
    }

    fn apply_pairs(&mut self, m: [[Complex64; 2]; 2], target_mask: usize, control_mask: usize) {
        for i in 0..self.amplitudes.len() {
            if i & target_mask != 0 || i & control_mask != control_mask {
                continue;
            }
            let j = i | target_mask;
            let a = self.amplitudes[i];
            let b = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a + m[0][1] * b;
            self.amplitudes[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Shape(format!(
                "cannot overlap {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Single-qubit reduced density matrix, all other qubits traced out.
    pub fn reduced_density_matrix(&self, qubit: usize) -> Result<[[Complex64; 2]; 2]> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let (mut p0, mut p1, mut coherence) = (0.0, 0.0, ZERO);
        for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
            let a = self.amplitudes[i];
            let b = self.amplitudes[i | mask];
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
            coherence += a * b.conj();
        }
        Ok([
            [Complex64::new(p0, 0.0), coherence],
            [coherence.conj(), Complex64::new(p1, 0.0)],
        ])
    }

    /// Bloch vector `(x, y, z)` of one qubit's reduced state.
    pub fn bloch_vector(&self, qubit: usize) -> Result<[f64; 3]> {
        let rho = self.reduced_density_matrix(qubit)?;
        Ok([2.0 * rho[0][1].re, -2.0 * rho[0][1].im, rho[0][0].re - rho[1][1].re])
    }

    /// `Tr(ρ²)` of the single-qubit reduced state.
    pub fn reduced_purity(&self, qubit: usize) -> Result<f64> {
        let rho = self.reduced_density_matrix(qubit)?;
        let (p0, p1) = (rho[0][0].re, rho[1][1].re);
        Ok(p0 * p0 + p1 * p1 + 2.0 * rho[0][1].norm_sqr())
    }
}

/// Out-of-place gate application.
pub fn apply_gate(state: &Statevector, gate: &Gate) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// `|<a|b>|²`.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}
