//! The minimally expressive data embedding and the catalog of 19 four-qubit
//! circuit templates.
//!
//! Template layouts live in `data/templates.csv` (one row per gate of a single
//! layer: `template_id,step,kind,target,control,slot`). A multi-layer template
//! repeats the one-layer program with fresh parameter slots.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Gate, GateKind, Statevector};

pub const N_QUBITS: usize = 4;
pub const N_TEMPLATES: u32 = 19;

/// Template ids used by the hyperparameter sweep (all but 10).
pub const SWEEP_TEMPLATES: [u32; 18] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 13, 14, 15, 16, 17, 18, 19];

const CATALOG_CSV: &str = include_str!("../data/templates.csv");

static CATALOG: LazyLock<Catalog> =
    LazyLock::new(|| Catalog::from_csv(CATALOG_CSV).expect("bundled template catalog is valid"));

/// One gate of a template layer. Rotations reference a parameter slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateGate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub slot: Option<usize>,
}

impl TemplateGate {
    fn bind(&self, params: &[f64]) -> Gate {
        Gate {
            kind: self.kind,
            target: self.target,
            control: self.control,
            angle: self.slot.map(|s| params[s]),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogRow {
    template_id: u32,
    step: usize,
    kind: String,
    target: usize,
    control: Option<usize>,
    slot: Option<usize>,
}

/// Single-layer gate programs for every template, keyed by id.
#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    layers: BTreeMap<u32, Vec<TemplateGate>>,
}

impl Catalog {
    /// The catalog shipped with the crate.
    pub fn bundled() -> &'static Catalog {
        &CATALOG
    }

    pub fn from_csv(text: &str) -> Result<Catalog> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut layers: BTreeMap<u32, Vec<TemplateGate>> = BTreeMap::new();
        for row in reader.deserialize() {
            let row: CatalogRow = row?;
            let kind: GateKind = row.kind.parse()?;
            let gates = layers.entry(row.template_id).or_default();
            if row.step != gates.len() {
                return Err(Error::Parse(format!(
                    "template {} step {} out of order (expected {})",
                    row.template_id,
                    row.step,
                    gates.len()
                )));
            }
            if row.target >= N_QUBITS || row.control.is_some_and(|c| c >= N_QUBITS) {
                return Err(Error::Parse(format!("template {} step {} addresses a qubit >= 4", row.template_id, row.step)));
            }
            if kind.is_rotation() != row.slot.is_some() {
                return Err(Error::Parse(format!(
                    "template {} step {}: {kind} slot assignment inconsistent",
                    row.template_id, row.step
                )));
            }
            // Validates control/target pairing.
            Gate::new(kind, row.target, row.control, row.slot.map(|_| 0.0))?;
            gates.push(TemplateGate { kind, target: row.target, control: row.control, slot: row.slot });
        }
        for (id, gates) in &layers {
            let mut slots: Vec<usize> = gates.iter().filter_map(|g| g.slot).collect();
            slots.sort_unstable();
            if slots.iter().enumerate().any(|(i, s)| i != *s) {
                return Err(Error::Parse(format!("template {id}: slots are not exactly 0..{}", slots.len())));
            }
        }
        Ok(Catalog { layers })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for (id, gates) in &self.layers {
            for (step, g) in gates.iter().enumerate() {
                writer.serialize(CatalogRow {
                    template_id: *id,
                    step,
                    kind: g.kind.name().to_string(),
                    target: g.target,
                    control: g.control,
                    slot: g.slot,
                })?;
            }
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn layer(&self, template_id: u32) -> Result<&[TemplateGate]> {
        self.layers
            .get(&template_id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownTemplate(template_id))
    }

    pub fn template_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.layers.keys().copied()
    }
}

/// A template stacked `layers` times, with its full symbolic program.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTemplate {
    template_id: u32,
    layers: u32,
    program: Vec<TemplateGate>,
    param_count: usize,
}

impl CircuitTemplate {
    pub fn new(template_id: u32, layers: u32) -> Result<Self> {
        Self::from_catalog(Catalog::bundled(), template_id, layers)
    }

    pub fn from_catalog(catalog: &Catalog, template_id: u32, layers: u32) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("a template needs at least one layer".into()));
        }
        let layer = catalog.layer(template_id)?;
        let per_layer = layer.iter().filter(|g| g.slot.is_some()).count();
        let program = (0..layers as usize)
            .flat_map(|l| {
                layer.iter().map(move |g| TemplateGate {
                    slot: g.slot.map(|s| s + l * per_layer),
                    ..*g
                })
            })
            .collect();
        Ok(CircuitTemplate {
            template_id,
            layers,
            program,
            param_count: per_layer * layers as usize,
        })
    }

    pub fn template_id(&self) -> u32 {
        self.template_id
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn n_qubits(&self) -> usize {
        N_QUBITS
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn gate_program(&self) -> &[TemplateGate] {
        &self.program
    }

    fn check_arity(&self, params: &[f64]) -> Result<()> {
        if params.len() == self.param_count {
            Ok(())
        } else {
            Err(Error::Arity {
                template_id: self.template_id,
                layers: self.layers,
                expected: self.param_count,
                got: params.len(),
            })
        }
    }

    /// Concrete gates with parameters substituted.
    pub fn program(&self, params: &[f64]) -> Result<Vec<Gate>> {
        self.check_arity(params)?;
        Ok(self.program.iter().map(|g| g.bind(params)).collect())
    }

    /// Applies the template to an existing state in place.
    pub fn apply(&self, state: &mut Statevector, params: &[f64]) -> Result<()> {
        self.check_arity(params)?;
        for g in &self.program {
            state.apply(&g.bind(params))?;
        }
        Ok(())
    }

    /// Runs `|0000>` through the embedding (when features are given) and then the template.
    pub fn run(&self, params: &[f64], features: Option<[f64; 2]>) -> Result<Statevector> {
        let mut state = match features {
            Some(f) => embed(f)?,
            None => Statevector::zero_state(N_QUBITS)?,
        };
        self.apply(&mut state, params)?;
        Ok(state)
    }
}

pub fn param_count(template_id: u32, layers: u32) -> Result<usize> {
    Ok(CircuitTemplate::new(template_id, layers)?.param_count())
}

pub fn template_program(template_id: u32, layers: u32, params: &[f64]) -> Result<Vec<Gate>> {
    CircuitTemplate::new(template_id, layers)?.program(params)
}

/// Embedding followed by the template, starting from `|0000>`.
pub fn run_circuit(template: &CircuitTemplate, params: &[f64], features: [f64; 2]) -> Result<Statevector> {
    template.run(params, Some(features))
}

/// Fixed geometry of the embedding: one data RX per qubit, then a 45° tilt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub tilt_angle: f64,
    /// RX angle for a feature of 1.0; features map linearly onto `[0, feature_scale]`.
    pub feature_scale: f64,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec { tilt_angle: FRAC_PI_4, feature_scale: PI }
    }
}

impl EmbeddingSpec {
    /// Feature `x` goes to qubits 0 and 2, feature `y` to qubits 1 and 3.
    pub fn program(&self, features: [f64; 2]) -> Result<Vec<Gate>> {
        for f in features {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Domain(format!("feature {f} outside [0, 1]")));
            }
        }
        let mut gates = Vec::with_capacity(3 * N_QUBITS);
        gates.extend((0..N_QUBITS).map(|q| Gate::rx(q, self.feature_scale * features[q % 2])));
        for q in 0..N_QUBITS {
            gates.push(Gate::ry(q, self.tilt_angle));
            gates.push(Gate::rz(q, self.tilt_angle));
        }
        Ok(gates)
    }
}

pub fn embedding_program(features: [f64; 2]) -> Result<Vec<Gate>> {
    EmbeddingSpec::default().program(features)
}

/// The embedded state for one data point.
pub fn embed(features: [f64; 2]) -> Result<Statevector> {
    let mut state = Statevector::zero_state(N_QUBITS)?;
    state.apply_all(&embedding_program(features)?)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::fidelity;

    fn counts(id: u32) -> (usize, usize, usize) {
        let layer = Catalog::bundled().layer(id).unwrap();
        let params = layer.iter().filter(|g| g.slot.is_some()).count();
        let entanglers = layer.iter().filter(|g| g.kind.is_controlled()).count();
        (layer.len(), params, entanglers)
    }

    /// (gates, parameters, two-qubit gates) per template, one layer.
    const GOLDEN: [(u32, (usize, usize, usize)); 19] = [
        (1, (8, 8, 0)),
        (2, (11, 8, 3)),
        (3, (11, 11, 3)),
        (4, (11, 11, 3)),
        (5, (28, 28, 12)),
        (6, (28, 28, 12)),
        (7, (19, 19, 3)),
        (8, (19, 19, 3)),
        (9, (11, 4, 3)),
        (10, (12, 8, 4)),
        (11, (15, 12, 3)),
        (12, (15, 12, 3)),
        (13, (16, 16, 8)),
        (14, (16, 16, 8)),
        (15, (16, 8, 8)),
        (16, (11, 11, 3)),
        (17, (11, 11, 3)),
        (18, (12, 12, 4)),
        (19, (12, 12, 4)),
    ];

    #[test]
    fn golden_gate_counts() {
        assert_eq!(Catalog::bundled().template_ids().collect::<Vec<_>>(), (1..=19).collect::<Vec<_>>());
        for (id, want) in GOLDEN {
            assert_eq!(counts(id), want, "template {id}");
        }
    }

    #[test]
    fn template_one_is_local_rotations() {
        let layer = Catalog::bundled().layer(1).unwrap();
        assert!(layer.iter().all(|g| matches!(g.kind, GateKind::RX | GateKind::RZ)));
        for q in 0..4 {
            assert_eq!(layer.iter().filter(|g| g.target == q).count(), 2);
        }
    }

    #[test]
    fn template_nine_structure() {
        let layer = Catalog::bundled().layer(9).unwrap();
        assert_eq!(layer.iter().filter(|g| g.kind == GateKind::H).count(), 4);
        assert_eq!(layer.iter().filter(|g| g.kind == GateKind::CZ).count(), 3);
        assert_eq!(param_count(9, 1).unwrap(), 4);
    }

    #[test]
    fn param_counts_scale_with_layers() {
        assert_eq!(param_count(1, 1).unwrap(), 8);
        assert_eq!(param_count(1, 2).unwrap(), 16);
        for id in 1..=19 {
            assert_eq!(param_count(id, 2).unwrap(), 2 * param_count(id, 1).unwrap());
        }
        assert!(matches!(param_count(0, 1), Err(Error::UnknownTemplate(0))));
        assert!(matches!(param_count(20, 1), Err(Error::UnknownTemplate(20))));
    }

    #[test]
    fn slots_are_used_exactly_once() {
        for id in 1..=19 {
            for layers in 1..=3 {
                let t = CircuitTemplate::new(id, layers).unwrap();
                let mut seen = vec![0usize; t.param_count()];
                for g in t.gate_program() {
                    if let Some(s) = g.slot {
                        seen[s] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "template {id} x{layers}");
            }
        }
    }

    #[test]
    fn arity_is_checked() {
        let t = CircuitTemplate::new(5, 2).unwrap();
        let err = t.program(&[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Arity { expected: 56, got: 3, .. }));
    }

    #[test]
    fn embedding_programs() {
        let zero = embedding_program([0.0, 0.0]).unwrap();
        assert_eq!(zero.len(), 12);
        assert!(zero[..4].iter().all(|g| g.kind == GateKind::RX && g.angle == Some(0.0)));
        let g = embedding_program([1.0, 0.0]).unwrap();
        let angles: Vec<f64> = g[..4].iter().map(|g| g.angle.unwrap()).collect();
        assert_eq!(angles, vec![PI, 0.0, PI, 0.0]);
        assert!(embedding_program([1.2, 0.0]).is_err());
        assert!(embedding_program([0.5, -0.1]).is_err());
    }

    #[test]
    fn zero_angles_reduce_to_tilt_only() {
        let tilt = embed([0.0, 0.0]).unwrap();
        for id in [1, 3, 4, 5, 6, 7, 8, 13, 14, 16, 17, 18, 19] {
            let t = CircuitTemplate::new(id, 1).unwrap();
            let s = run_circuit(&t, &vec![0.0; t.param_count()], [0.0, 0.0]).unwrap();
            assert!((fidelity(&s, &tilt).unwrap() - 1.0).abs() < 1e-12, "template {id}");
        }
    }

    #[test]
    fn catalog_csv_round_trip() {
        let text = Catalog::bundled().to_csv().unwrap();
        assert_eq!(text, CATALOG_CSV);
        assert_eq!(&Catalog::from_csv(&text).unwrap(), Catalog::bundled());
    }

    #[test]
    fn catalog_rejects_bad_rows() {
        let header = "template_id,step,kind,target,control,slot\n";
        assert!(Catalog::from_csv(&format!("{header}1,0,RX,0,,\n")).is_err());
        assert!(Catalog::from_csv(&format!("{header}1,0,CX,0,0,\n")).is_err());
        assert!(Catalog::from_csv(&format!("{header}1,1,RX,0,,0\n")).is_err());
        assert!(Catalog::from_csv(&format!("{header}1,0,RX,0,,1\n")).is_err());
        assert!(Catalog::from_csv(&format!("{header}1,0,RX,7,,0\n")).is_err());
    }
}
