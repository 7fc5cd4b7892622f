//! Protocol files: a JSON description of a proof system, its honest prover and its simulator,
//! with a canonical text form (sorted keys, floats at 17 significant digits).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuits::{Circuit, Gate, GateKind};
use crate::error::{QzkError, Result};
use crate::fixtures::Fixture;
use crate::qip::{prover_count, AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::{CMatrix, DensityMatrix, RegisterLayout, C64};
use crate::simulator::{sim_layout, SimBranch, SimEntry, SimulatorEnsemble};
use crate::transforms::{Guarantee, Instance};
use crate::zk::DishonestVerifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub name: String,
    pub messages: usize,
    pub registers: Registers,
    /// Prover register width; required with named registers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prover_width: Option<usize>,
    /// Per-turn register exposure; required with named registers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns: Option<Vec<TurnSpec>>,
    /// Accept iff this wire reads 1. Exactly one of `output_wire` and `accept` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_wire: Option<usize>,
    /// Accept iff some clause has every literal satisfied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept: Option<Vec<Vec<Literal>>>,
    pub verifier: Vec<CircuitSpec>,
    pub prover: Vec<CircuitSpec>,
    pub simulator: SimulatorSpec,
    pub meta: Meta,
}

/// The `V`/`M`/`P` normal form or an ordered list of named registers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Registers {
    Standard(StandardRegisters),
    Named(Vec<RegisterSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardRegisters {
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterSpec {
    pub name: String,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnSpec {
    pub exposed: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub handed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Literal {
    pub wire: usize,
    pub value: bool,
}

pub type CircuitSpec = Vec<GateSpec>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Named(NamedGate),
    Matrix(MatrixGate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedGate {
    pub gate: String,
    pub wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixGate {
    /// Rows of `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub wires: Vec<usize>,
}

/// Plain generating circuits (ancilla width read off the wires) or weighted mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimulatorSpec {
    Plain(Vec<CircuitSpec>),
    Full(FullSimulator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullSimulator {
    pub ancilla: usize,
    #[serde(default)]
    pub fail_flag: bool,
    pub entries: Vec<Vec<BranchSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub weight: f64,
    pub circuit: CircuitSpec,
}

/// Claimed completeness error `ε`, soundness gap `δ` and, optionally, the exact honest
/// acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_acc: Option<f64>,
}

impl Meta {
    pub fn guarantee(&self) -> Result<Guarantee> {
        Guarantee::new(self.epsilon, self.delta)
    }
}

fn gate_to_spec(g: &Gate) -> GateSpec {
    match &g.kind {
        GateKind::Custom(m) => GateSpec::Matrix(MatrixGate {
            matrix: (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect(),
            wires: g.wires.clone(),
        }),
        kind => GateSpec::Named(NamedGate {
            gate: kind.name().to_string(),
            wires: g.wires.clone(),
            param: match kind {
                GateKind::Ueps(e) => Some(*e),
                _ => None,
            },
        }),
    }
}

fn gate_from_spec(spec: &GateSpec) -> Result<Gate> {
    match spec {
        GateSpec::Named(g) => {
            let kind = match (g.gate.as_str(), g.param) {
                ("H", None) => GateKind::H,
                ("X", None) => GateKind::X,
                ("CNOT", None) => GateKind::Cnot,
                ("TOFFOLI", None) => GateKind::Toffoli,
                ("CSWAP", None) => GateKind::Cswap,
                ("CPHASE_I", None) => GateKind::CphaseI,
                ("UEPS", Some(e)) => GateKind::Ueps(e),
                ("UEPS", None) => return Err(QzkError::Schema("UEPS needs `param`".into())),
                (name, Some(_)) if ["H", "X", "CNOT", "TOFFOLI", "CSWAP", "CPHASE_I"].contains(&name) => {
                    return Err(QzkError::Schema(format!("{name} takes no `param`")))
                }
                (name, _) => return Err(QzkError::Schema(format!("unknown gate `{name}`"))),
            };
            Ok(Gate::new(kind, g.wires.clone()))
        }
        GateSpec::Matrix(g) => {
            let d = g.matrix.len();
            if g.matrix.iter().any(|row| row.len() != d) {
                return Err(QzkError::Schema("matrix gate must be square".into()));
            }
            let m = CMatrix::from_fn(d, d, |r, c| C64::new(g.matrix[r][c][0], g.matrix[r][c][1]));
            Ok(Gate::new(GateKind::Custom(m), g.wires.clone()))
        }
    }
}

fn circuit_to_spec(c: &Circuit) -> CircuitSpec {
    c.gates.iter().map(gate_to_spec).collect()
}

fn circuit_from_spec(spec: &CircuitSpec, layout: &RegisterLayout) -> Result<Circuit> {
    let gates = spec.iter().map(gate_from_spec).collect::<Result<Vec<_>>>()?;
    Circuit::with_gates(layout.clone(), gates)
}

fn circuits_from_specs(specs: &[CircuitSpec], layout: &RegisterLayout, what: &str) -> Result<Vec<Circuit>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| circuit_from_spec(s, layout).map_err(|e| e.context(format!("{what} circuit {}", i + 1))))
        .collect()
}

fn is_standard(ps: &ProofSystem) -> Option<(usize, usize, usize)> {
    let regs = ps.layout.registers();
    let [(v, vw), (m, mw)] = regs else { return None };
    let standard_turns = ps.turns.iter().all(|t| t.exposed == ["M"] && t.handed.is_empty());
    let out = ps.accept.is_single_output().then(|| ps.accept.output_wire())?;
    (v == "V" && m == "M" && standard_turns).then_some((*vw, *mw, out))
}

impl ProtocolFile {
    /// Describes an instance; the normal form is used whenever the system has that shape.
    pub fn from_instance(name: &str, inst: &Instance, meta: Meta) -> Self {
        let ps = &inst.ps;
        let (registers, prover_width, turns, output_wire, accept) = match is_standard(ps) {
            Some((v, m, out)) => (Registers::Standard(StandardRegisters { v, m, p: inst.honest.width }), None, None, Some(out), None),
            None => (
                Registers::Named(ps.layout.registers().iter().map(|(n, w)| RegisterSpec { name: n.clone(), width: *w }).collect()),
                Some(inst.honest.width),
                Some(ps.turns.iter().map(|t| TurnSpec { exposed: t.exposed.clone(), handed: t.handed.clone() }).collect()),
                None,
                Some(ps.accept.clauses.iter().map(|c| c.iter().map(|&(wire, value)| Literal { wire, value }).collect()).collect()),
            ),
        };
        let sim = &inst.sim;
        Self {
            name: name.to_string(),
            messages: ps.messages,
            registers,
            prover_width,
            turns,
            output_wire,
            accept,
            verifier: ps.verifier.iter().map(circuit_to_spec).collect(),
            prover: inst.honest.circuits.iter().map(circuit_to_spec).collect(),
            simulator: SimulatorSpec::Full(FullSimulator {
                ancilla: sim.ancilla,
                fail_flag: sim.fail_flag,
                entries: sim
                    .entries
                    .iter()
                    .map(|e| e.branches.iter().map(|b| BranchSpec { weight: b.weight, circuit: circuit_to_spec(&b.circuit) }).collect())
                    .collect(),
            }),
            meta,
        }
    }

    pub fn from_fixture(f: &Fixture) -> Result<Self> {
        let meta = Meta { epsilon: f.eps, delta: f.delta, p_acc: Some(f.truth.p_acc.value) };
        Ok(Self::from_instance(&f.name, &f.instance()?, meta))
    }

    fn proof_system(&self) -> Result<(ProofSystem, usize)> {
        let accept = match (&self.output_wire, &self.accept) {
            (Some(w), None) => AcceptRule::output(*w),
            (None, Some(clauses)) => AcceptRule { clauses: clauses.iter().map(|c| c.iter().map(|l| (l.wire, l.value)).collect()).collect() },
            _ => return Err(QzkError::Schema("give exactly one of `output_wire` and `accept`".into())),
        };
        let (layout, turns, width) = match &self.registers {
            Registers::Standard(r) => {
                if self.turns.is_some() || self.prover_width.is_some() {
                    return Err(QzkError::Schema("`turns` and `prover_width` only go with named registers".into()));
                }
                let layout = RegisterLayout::new([("V", r.v), ("M", r.m)])?;
                (layout, vec![Turn::exposing(&["M"]); prover_count(self.messages)], r.p)
            }
            Registers::Named(regs) => {
                let layout = RegisterLayout::new(regs.iter().map(|r| (r.name.clone(), r.width)))?;
                let turns = self.turns.as_ref().ok_or_else(|| QzkError::Schema("named registers need `turns`".into()))?;
                let width = self.prover_width.ok_or_else(|| QzkError::Schema("named registers need `prover_width`".into()))?;
                let turns = turns.iter().map(|t| Turn { exposed: t.exposed.clone(), handed: t.handed.clone() }).collect();
                (layout, turns, width)
            }
        };
        let verifier = circuits_from_specs(&self.verifier, &layout, "verifier")?;
        let ps = ProofSystem { messages: self.messages, layout, turns, verifier, accept };
        ps.validate()?;
        Ok((ps, width))
    }

    fn simulator(&self, ps: &ProofSystem) -> Result<SimulatorEnsemble> {
        let n = ps.layout.total();
        let (ancilla, fail_flag, entries): (usize, bool, Vec<Vec<(f64, &CircuitSpec)>>) = match &self.simulator {
            SimulatorSpec::Plain(circs) => {
                let top = circs.iter().flatten().flat_map(|g| match g {
                    GateSpec::Named(g) => g.wires.iter(),
                    GateSpec::Matrix(g) => g.wires.iter(),
                });
                let ancilla = top.max().map_or(0, |&w| (w + 1).saturating_sub(n));
                (ancilla, false, circs.iter().map(|c| vec![(1.0, c)]).collect())
            }
            SimulatorSpec::Full(f) => (f.ancilla, f.fail_flag, f.entries.iter().map(|e| e.iter().map(|b| (b.weight, &b.circuit)).collect()).collect()),
        };
        let layout = sim_layout(ps, ancilla, fail_flag)?;
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(j, e)| {
                let branches = e
                    .into_iter()
                    .map(|(weight, spec)| Ok(SimBranch { weight, circuit: circuit_from_spec(spec, &layout)? }))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.context(format!("simulator entry {}", j + 1)))?;
                Ok(SimEntry { branches })
            })
            .collect::<Result<Vec<_>>>()?;
        let sim = SimulatorEnsemble { ancilla, fail_flag, entries };
        sim.validate(ps)?;
        Ok(sim)
    }

    /// The validated instance described by the file.
    pub fn to_instance(&self) -> Result<Instance> {
        if !self.meta.epsilon.is_finite() || !self.meta.delta.is_finite() || self.meta.p_acc.is_some_and(|p| !p.is_finite()) {
            return Err(QzkError::Schema("meta values must be finite".into()));
        }
        let (ps, width) = self.proof_system()?;
        let exec = ps.exec_layout(width)?;
        let honest = ProverStrategy { width, circuits: circuits_from_specs(&self.prover, &exec, "prover")? };
        honest.validate(&ps)?;
        let sim = self.simulator(&ps)?;
        Instance::new(ps, honest, sim)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QzkError::Schema(e.to_string()))
    }

    /// Canonical text: sorted keys, floats with 17 significant digits, two-space indentation.
    pub fn to_canonical(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| QzkError::Schema(e.to_string()))?;
        Ok(canonical_json(&value))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QzkError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical()?).map_err(|e| QzkError::Io(format!("{}: {e}", path.display())))
    }
}

/// A dishonest verifier for the rewinding simulator: its first-step circuit over the layout
/// `[S, W, X, M]` and, optionally, the auxiliary state on `X` (default `|0…0⟩`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierFile {
    pub work: usize,
    pub aux: usize,
    pub circuit: CircuitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_state: Option<Vec<Vec<[f64; 2]>>>,
}

impl VerifierFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QzkError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| QzkError::Schema(e.to_string()).context(path.display().to_string()))
    }

    pub fn to_verifier(&self, ps: &ProofSystem) -> Result<DishonestVerifier> {
        let layout = DishonestVerifier::layout(ps, self.work, self.aux)?;
        let w1 = circuit_from_spec(&self.circuit, &layout).map_err(|e| e.context("dishonest verifier circuit"))?;
        let aux_state = match &self.aux_state {
            None => DensityMatrix::basis(self.aux, 0),
            Some(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(QzkError::Schema("auxiliary state must be square".into()));
                }
                DensityMatrix::new(CMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))?
            }
        };
        DishonestVerifier { w1, aux_state: DensityMatrix::basis(self.aux, 0) }.with_aux(aux_state)
    }
}

/// Reads and validates a protocol file.
pub fn load_protocol(path: &Path) -> Result<(Instance, Meta)> {
    let file = ProtocolFile::load(path)?;
    let inst = file.to_instance().map_err(|e| e.context(path.display().to_string()))?;
    Ok((inst, file.meta))
}

/// Canonical form of any JSON value; arrays free of objects stay on one line.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn has_object(v: &Value) -> bool {
    match v {
        Value::Object(_) => true,
        Value::Array(a) => a.iter().any(has_object),
        _ => false,
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match n.as_f64().filter(|_| n.is_f64()) {
            Some(f) => out.push_str(&format!("{f:.16e}")),
            None => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if !has_object(v) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(item, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m4_chain, unveil};

    fn export(f: &Fixture) -> ProtocolFile {
        ProtocolFile::from_fixture(f).unwrap()
    }

    #[test]
    fn fixture_round_trip_is_canonical() {
        for f in [m4_chain(0.1).unwrap(), unveil(0.0).unwrap()] {
            let file = export(&f);
            let text = file.to_canonical().unwrap();
            let back = ProtocolFile::parse(&text).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_canonical().unwrap(), text);
            let inst = back.to_instance().unwrap();
            assert_eq!(inst.ps, f.ps);
            assert_eq!(inst.honest, f.honest);
            assert_eq!(inst.sim, f.sim);
        }
    }

    #[test]
    fn chain_uses_the_normal_form() {
        let file = export(&m4_chain(0.0).unwrap());
        assert!(matches!(file.registers, Registers::Standard(StandardRegisters { v: 1, m: 1, p: 1 })));
        assert_eq!(file.output_wire, Some(0));
        let unveil_file = export(&unveil(0.0).unwrap());
        assert!(matches!(unveil_file.registers, Registers::Named(_)));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let v: Value = serde_json::json!({"b": 0.1, "a": [1, 2.5]});
        assert_eq!(canonical_json(&v), "{\n  \"a\": [1, 2.5000000000000000e0],\n  \"b\": 1.0000000000000001e-1\n}\n");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(export(&m4_chain(0.0).unwrap())).unwrap();
        v["extra"] = Value::Bool(true);
        assert!(matches!(ProtocolFile::parse(&v.to_string()), Err(QzkError::Schema(_))));
        let mut v = serde_json::to_value(export(&m4_chain(0.0).unwrap())).unwrap();
        v["meta"]["note"] = Value::Bool(true);
        assert!(ProtocolFile::parse(&v.to_string()).is_err());
    }

    #[test]
    fn non_unitary_matrix_names_the_gate() {
        let mut file = export(&m4_chain(0.0).unwrap());
        file.verifier[1].push(GateSpec::Matrix(MatrixGate { matrix: vec![vec![[1.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]], wires: vec![0] }));
        let err = file.to_instance().unwrap_err();
        assert!(matches!(err.root(), QzkError::NotUnitary { index: 1, .. }), "{err}");
        assert!(err.to_string().contains("verifier circuit 2"));
    }

    #[test]
    fn plain_simulator_infers_ancilla() {
        let mut file = export(&m4_chain(0.0).unwrap());
        let SimulatorSpec::Full(full) = &file.simulator else { panic!() };
        file.simulator = SimulatorSpec::Plain(full.entries.iter().map(|e| e[0].circuit.clone()).collect());
        assert_eq!(file.to_instance().unwrap().sim.ancilla, 1);
    }
}
