//! Public-coin form of a three-message system: the prover sends the verifier's state after its
//! first step, a single coin asks it either to finish the protocol or to show that the first
//! step can be undone.

use super::{check_input, entry, mapped_branches, product, prover_layout_wires, Bound, Guarantee, Instance, TransformReport};
use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::qip::{AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::RegisterLayout;
use crate::simulator::{sim_layout, SimulatorEnsemble, SIM};

pub fn to_public_coin(input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
    check_input(input)?;
    let ps = &input.ps;
    if ps.messages != 3 {
        return Err(QzkError::Arity(format!("public-coin conversion needs 3 messages, got {}", ps.messages)));
    }
    let n = ps.layout.total();
    let bit_name = ps.layout.fresh_name("BIT");
    let layout = ps.layout.concat(&RegisterLayout::new([(ps.layout.fresh_name("COIN"), 1), (bit_name.clone(), 1)])?)?;
    let (coin, bit) = (n, n + 1);
    let lift = |circ: &Circuit| circ.extend_layout(&layout);

    let mut w1 = Circuit::new(layout.clone());
    w1.h(coin)?.cnot(coin, bit)?;
    let mut w2 = lift(&ps.verifier[1])?.controlled(coin, false)?;
    w2.append(&lift(&ps.verifier[0])?.adjoint().controlled(coin, true)?)?;

    let first_access = prover_layout_wires(ps, 0)?;
    let mut undo: Vec<(usize, bool)> = vec![(coin, true)];
    undo.extend((0..n).filter(|w| !first_access.contains(w)).map(|w| (w, false)));
    let accept = ps.accept.with_literals(&[(coin, false)]).or(&AcceptRule { clauses: vec![undo] });

    let mut second: Vec<String> = ps.accessible_registers(1);
    second.push(bit_name);
    let pc = ProofSystem {
        messages: 3,
        layout: layout.clone(),
        turns: vec![Turn::exposing(&ps.layout.names()), Turn::exposing(&second)],
        verifier: vec![w1, w2],
        accept,
    };
    pc.validate()?;

    let honest = coin_prover(ps, &input.honest, &pc, bit)?;
    let sim = coin_simulator(ps, &input.sim, &pc, coin, bit)?;
    let out = Instance::new(pc, honest, sim)?;
    let report = TransformReport::new(
        "public-coin",
        &out,
        Bound::new(1.0 - claims.eps / 2.0, "1 − ε/2", "one-coin public-coin completeness"),
        Bound::new(0.5 + claims.soundness().sqrt() / 2.0, "1/2 + √(1−δ)/2", "one-coin public-coin soundness"),
    );
    Ok((out, report))
}

/// Honest prover: runs its first turn and the verifier's first step itself, then records the
/// coin privately, on coin 0 runs its second turn and on coin 1 sends the message back
/// untouched.
fn coin_prover(ps: &ProofSystem, honest: &ProverStrategy, pc: &ProofSystem, bit: usize) -> Result<ProverStrategy> {
    let width = honest.width + 1;
    let exec = pc.exec_layout(width)?;
    let n = ps.layout.total();
    let p0 = exec.offset("P")?;
    let map: Vec<usize> = (0..n).chain(p0..p0 + honest.width).collect();
    let mut first = honest.circuits[0].relabel(exec.clone(), &map)?;
    first.append_mapped(&ps.verifier[0], &map)?;
    let mut second = Circuit::new(exec.clone());
    second.cnot(bit, p0 + honest.width)?;
    second.append(&honest.circuits[1].relabel(exec, &map)?.controlled(bit, false)?)?;
    Ok(ProverStrategy { width, circuits: vec![first, second] })
}

/// Simulator: the first view is the simulated first view after the verifier's first step; the
/// second is an even mixture of the simulated second view (coin 0) and the first (coin 1).
fn coin_simulator(ps: &ProofSystem, sim: &SimulatorEnsemble, pc: &ProofSystem, coin: usize, bit: usize) -> Result<SimulatorEnsemble> {
    let layout = sim_layout(pc, sim.ancilla, false)?;
    let n = ps.layout.total();
    let s0 = layout.offset(SIM)?;
    let verifier_map: Vec<usize> = (0..n).collect();
    let ancilla_map: Vec<usize> = (s0..s0 + sim.ancilla).collect();
    let view = |j: usize| mapped_branches(sim, ps, j, &layout, &verifier_map, &ancilla_map);
    let after_first_step = || -> Result<Vec<(f64, Circuit)>> {
        let step = ps.verifier[0].relabel(layout.clone(), &verifier_map)?;
        product(&layout, vec![view(0)?, vec![(1.0, step)]])
    };

    let first = after_first_step()?;
    let mut flip = Circuit::new(layout.clone());
    flip.x(coin)?.x(bit)?;
    let mut second: Vec<(f64, Circuit)> = view(1)?.into_iter().map(|(w, c)| (w / 2.0, c)).collect();
    for (w, c) in product(&layout, vec![vec![(1.0, flip)], after_first_step()?])? {
        second.push((w / 2.0, c));
    }
    Ok(SimulatorEnsemble { ancilla: sim.ancilla, fail_flag: false, entries: vec![entry(first), entry(second)] })
}
