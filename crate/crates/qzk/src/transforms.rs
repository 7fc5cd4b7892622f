//! Protocol rewrites mapping a (verifier, honest prover, simulator) triple to a new triple
//! together with the completeness and soundness bounds claimed for the result.

use std::fmt;

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::qip::{ProofSystem, ProverStrategy};
use crate::qla::RegisterLayout;
use crate::simulator::{SimBranch, SimEntry, SimulatorEnsemble};

mod parallelize;
mod perfect;
mod public_coin;
mod repeat;

pub use parallelize::parallelize;
pub use perfect::{make_perfect_complete, perfect_complete_system};
pub use public_coin::to_public_coin;
pub use repeat::{binomial_tail, parallel_repeat, sequential_repeat};

/// A proof system with its honest prover and honest-verifier simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub ps: ProofSystem,
    pub honest: ProverStrategy,
    pub sim: SimulatorEnsemble,
}

impl Instance {
    pub fn new(ps: ProofSystem, honest: ProverStrategy, sim: SimulatorEnsemble) -> Result<Self> {
        ps.validate()?;
        honest.validate(&ps)?;
        sim.validate(&ps)?;
        Ok(Self { ps, honest, sim })
    }
}

/// Completeness error `ε` and soundness gap `δ` of an input system: honest acceptance at
/// least `1 − ε`, every prover accepted with probability at most `1 − δ` on no-instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarantee {
    pub eps: f64,
    pub delta: f64,
}

impl Guarantee {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) || !(0.0..=1.0).contains(&delta) {
            return Err(QzkError::Parameter(format!("ε = {eps} and δ = {delta} must lie in [0, 1]")));
        }
        Ok(Self { eps, delta })
    }

    pub fn completeness(&self) -> f64 {
        1.0 - self.eps
    }

    pub fn soundness(&self) -> f64 {
        1.0 - self.delta
    }
}

/// A claimed bound: its value at the instance parameters, the formula and a descriptive name.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub formula: String,
    pub reference: &'static str,
}

impl Bound {
    fn new(value: f64, formula: impl Into<String>, reference: &'static str) -> Self {
        Self { value: value.clamp(0.0, 1.0), formula: formula.into(), reference }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.9} ({})", self.formula, self.value, self.reference)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformReport {
    pub transform: &'static str,
    pub completeness: Bound,
    pub soundness: Bound,
    pub messages: usize,
    pub registers: Vec<(String, usize)>,
    pub prover_width: usize,
}

impl TransformReport {
    fn new(transform: &'static str, out: &Instance, completeness: Bound, soundness: Bound) -> Self {
        Self {
            transform,
            completeness,
            soundness,
            messages: out.ps.messages,
            registers: out.ps.layout.registers().to_vec(),
            prover_width: out.honest.width,
        }
    }
}

/// A protocol rewrite.
pub trait Transform: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)>;
}

/// Parameters consumed by the transforms that need them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformArgs {
    /// Copies for the repetitions.
    pub k: usize,
    /// Acceptance threshold for sequential repetition.
    pub t: usize,
    /// Exact honest acceptance for perfect completeness; computed when absent.
    pub p_acc: Option<f64>,
}

impl Default for TransformArgs {
    fn default() -> Self {
        Self { k: 2, t: 2, p_acc: None }
    }
}

pub struct Parallelize;
pub struct PublicCoin;
pub struct PerfectComplete {
    pub p_acc: Option<f64>,
}
pub struct ParallelRepeat {
    pub k: usize,
}
pub struct SequentialRepeat {
    pub k: usize,
    pub t: usize,
}

impl Transform for Parallelize {
    fn name(&self) -> &'static str {
        "parallelize"
    }
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
        parallelize(input, claims)
    }
}

impl Transform for PublicCoin {
    fn name(&self) -> &'static str {
        "public-coin"
    }
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
        to_public_coin(input, claims)
    }
}

impl Transform for PerfectComplete {
    fn name(&self) -> &'static str {
        "perfect-complete"
    }
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
        let p_acc = match self.p_acc {
            Some(p) => p,
            None => crate::qip::run(&input.ps, &input.honest)?.0,
        };
        make_perfect_complete(input, claims, p_acc)
    }
}

impl Transform for ParallelRepeat {
    fn name(&self) -> &'static str {
        "parallel-repeat"
    }
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
        parallel_repeat(input, claims, self.k)
    }
}

impl Transform for SequentialRepeat {
    fn name(&self) -> &'static str {
        "sequential-repeat"
    }
    fn apply(&self, input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
        sequential_repeat(input, claims, self.k, self.t)
    }
}

type Factory = fn(&TransformArgs) -> Box<dyn Transform>;

/// Every transform by name, in a fixed order.
pub const REGISTRY: [(&str, Factory); 5] = [
    ("parallelize", |_| Box::new(Parallelize)),
    ("public-coin", |_| Box::new(PublicCoin)),
    ("perfect-complete", |a| Box::new(PerfectComplete { p_acc: a.p_acc })),
    ("parallel-repeat", |a| Box::new(ParallelRepeat { k: a.k })),
    ("sequential-repeat", |a| Box::new(SequentialRepeat { k: a.k, t: a.t })),
];

pub fn transform_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn transform_by_name(name: &str, args: &TransformArgs) -> Result<Box<dyn Transform>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make(args))
        .ok_or_else(|| QzkError::Parameter(format!("unknown transform `{name}` (known: {})", transform_names().join(", "))))
}

/// Rejects inputs the transforms do not model: handed-over registers and failure flags.
fn check_input(input: &Instance) -> Result<()> {
    input.ps.validate()?;
    input.honest.validate(&input.ps)?;
    input.sim.validate(&input.ps)?;
    if input.ps.turns.iter().any(|t| !t.handed.is_empty()) {
        return Err(QzkError::Unsupported("transforms need a protocol that hands no registers over".into()));
    }
    if input.sim.fail_flag {
        return Err(QzkError::Unsupported("transforms need a simulator without a failure flag".into()));
    }
    Ok(())
}

/// Odd message counts gain a leading identity verifier message so the verifier moves first.
fn pad_even(ps: &ProofSystem) -> ProofSystem {
    if !ps.prover_first() {
        return ps.clone();
    }
    let mut out = ps.clone();
    out.messages += 1;
    out.verifier.insert(0, Circuit::new(ps.layout.clone()));
    out
}

/// Mixture branches of a simulator entry moved onto `layout`: verifier wires through
/// `layout_map`, ancilla wires through `ancilla_map`.
fn mapped_branches(
    sim: &SimulatorEnsemble,
    ps: &ProofSystem,
    j: usize,
    layout: &RegisterLayout,
    layout_map: &[usize],
    ancilla_map: &[usize],
) -> Result<Vec<(f64, Circuit)>> {
    if sim.fail_flag {
        return Err(QzkError::Unsupported("simulator carries a failure flag".into()));
    }
    let n = ps.layout.total();
    if layout_map.len() != n || ancilla_map.len() != sim.ancilla {
        return Err(QzkError::Dimension("simulator wire map has the wrong length".into()));
    }
    let map: Vec<usize> = layout_map.iter().chain(ancilla_map).copied().collect();
    sim.entries[j]
        .branches
        .iter()
        .map(|b| Ok((b.weight, b.circuit.relabel(layout.clone(), &map)?)))
        .collect()
}

/// Independent preparations run side by side: the Cartesian product of their branches.
fn product(layout: &RegisterLayout, parts: Vec<Vec<(f64, Circuit)>>) -> Result<Vec<(f64, Circuit)>> {
    let mut acc = vec![(1.0, Circuit::new(layout.clone()))];
    for part in parts {
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for (w, c) in &acc {
            for (pw, pc) in &part {
                if w * pw <= 0.0 {
                    continue;
                }
                let mut circ = c.clone();
                circ.append(pc)?;
                next.push((w * pw, circ));
            }
        }
        acc = next;
    }
    Ok(acc)
}

fn entry(branches: Vec<(f64, Circuit)>) -> SimEntry {
    SimEntry { branches: branches.into_iter().map(|(weight, circuit)| SimBranch { weight, circuit }).collect() }
}

/// Wire list of the `i`-th block of width `w` starting at `base`.
fn block(base: usize, i: usize, w: usize) -> Vec<usize> {
    (base + i * w..base + (i + 1) * w).collect()
}

/// Layout wires the prover may act on at turn `j`, in layout order.
fn prover_layout_wires(ps: &ProofSystem, j: usize) -> Result<Vec<usize>> {
    ps.layout.wires_of(&ps.accessible_registers(j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_every_name() {
        for name in transform_names() {
            assert_eq!(transform_by_name(name, &TransformArgs::default()).unwrap().name(), name);
        }
        assert!(transform_by_name("nope", &TransformArgs::default()).is_err());
    }

    #[test]
    fn guarantee_rejects_out_of_range() {
        assert!(Guarantee::new(1.5, 0.0).is_err());
        assert_eq!(Guarantee::new(0.25, 0.5).unwrap().soundness(), 0.5);
    }
}
