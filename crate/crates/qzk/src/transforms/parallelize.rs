//! Three-message form of an `m`-message system: the prover sends every intermediate verifier
//! snapshot at once, and the verifier either finishes the last snapshot or spot-checks one
//! transition with a swap test.

use super::{block, check_input, entry, mapped_branches, pad_even, product, prover_layout_wires, Bound, Guarantee, Instance, TransformReport};
use crate::circuits::Circuit;
use crate::error::Result;
use crate::linalg;
use crate::qip::{AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::{c, CVector, RegisterLayout};
use crate::simulator::{sim_layout, SimulatorEnsemble, SIM};

/// Wire bookkeeping of the three-message layout.
struct Shape {
    layout: RegisterLayout,
    /// Prover turns of the (padded) input; there are `k + 1` snapshot slots.
    k: usize,
    n: usize,
    x: usize,
    y: usize,
    r: Vec<usize>,
    rc: Vec<usize>,
    msg: Vec<usize>,
    b: usize,
    /// Layout wires the input prover acts on at each turn.
    access: Vec<Vec<usize>>,
}

impl Shape {
    fn new(ps: &ProofSystem) -> Result<Self> {
        let k = ps.prover_turns();
        let n = ps.layout.total();
        let access = (0..k).map(|j| prover_layout_wires(ps, j)).collect::<Result<Vec<_>>>()?;
        let msg_w = access.iter().map(Vec::len).max().unwrap_or(0);
        let r_w = (usize::BITS - (k - 1).leading_zeros()) as usize;
        let mut layout = RegisterLayout::default();
        for s in 0..=k {
            for (name, w) in ps.layout.registers() {
                layout.push(format!("{name}_{s}"), *w)?;
            }
        }
        for (name, w) in [("X", 1), ("Y", 1), ("R", r_w), ("RC", r_w), ("MSG", msg_w), ("B", 1)] {
            layout.push(name, w)?;
        }
        Ok(Self {
            x: layout.wire("X", 0)?,
            y: layout.wire("Y", 0)?,
            r: layout.wires("R")?,
            rc: layout.wires("RC")?,
            msg: layout.wires("MSG")?,
            b: layout.wire("B", 0)?,
            layout,
            k,
            n,
            access,
        })
    }

    fn slot(&self, s: usize) -> Vec<usize> {
        block(0, s, self.n)
    }

    fn slot_registers(&self, ps: &ProofSystem, s: usize) -> Vec<String> {
        ps.layout.names().into_iter().map(|name| format!("{name}_{s}")).collect()
    }

    /// Circuit over the new layout that runs `circ` (over the input layout) on slot `s`.
    fn on_slot(&self, circ: &Circuit, s: usize) -> Result<Circuit> {
        circ.relabel(self.layout.clone(), &self.slot(s))
    }

    /// Exchanges the prover-accessible wires of slot `r` with the message buffer.
    fn to_buffer(&self, r: usize) -> Result<Circuit> {
        let slot = self.slot(r);
        let a: Vec<usize> = self.access[r].iter().map(|&w| slot[w]).collect();
        let mut circ = Circuit::new(self.layout.clone());
        circ.swap_all(&a, &self.msg[..a.len()])?;
        Ok(circ)
    }

    /// Uniform superposition over the `k` challenge values on `R`.
    fn prepare_challenge(&self) -> Result<Circuit> {
        let mut circ = Circuit::new(self.layout.clone());
        if self.r.is_empty() {
            return Ok(circ);
        }
        if self.k.is_power_of_two() {
            for &w in &self.r {
                circ.h(w)?;
            }
        } else {
            let d = 1usize << self.r.len();
            let amp = 1.0 / (self.k as f64).sqrt();
            let v = CVector::from_fn(d, |i, _| c(if i < self.k { amp } else { 0.0 }));
            circ.custom(linalg::complete_basis(&[v], d), self.r.clone())?;
        }
        Ok(circ)
    }
}

/// Parallelizes `input` to three messages. Odd message counts are padded with a leading
/// verifier message first.
pub fn parallelize(input: &Instance, claims: &Guarantee) -> Result<(Instance, TransformReport)> {
    check_input(input)?;
    let ps = pad_even(&input.ps);
    let sh = Shape::new(&ps)?;
    let k = sh.k;

    let mut w1 = Circuit::new(sh.layout.clone());
    w1.h(sh.x)?.cnot(sh.x, sh.y)?;
    w1.append(&sh.prepare_challenge()?)?;
    for (&r, &rc) in sh.r.iter().zip(&sh.rc) {
        w1.cnot(r, rc)?;
    }
    for r in 0..k {
        w1.append(&sh.on_slot(&ps.verifier[r], r)?.controlled_on(&sh.r, r)?)?;
    }
    for r in 0..k {
        w1.append(&sh.to_buffer(r)?.controlled_on(&sh.r, r)?)?;
    }

    let mut w2 = Circuit::new(sh.layout.clone());
    for r in 0..k {
        w2.append(&sh.to_buffer(r)?.controlled_on(&sh.r, r)?)?;
    }
    w2.h(sh.b)?;
    w2.append(&sh.on_slot(&ps.verifier[k], k)?.controlled(sh.b, false)?)?;
    let mut test = Circuit::new(sh.layout.clone());
    for r in 0..k {
        let mut swap = Circuit::new(sh.layout.clone());
        swap.cswap_all(sh.x, &sh.slot(r), &sh.slot(r + 1))?;
        test.append(&swap.controlled_on(&sh.r, r)?)?;
    }
    test.cnot(sh.x, sh.y)?.h(sh.x)?;
    w2.append(&test.controlled(sh.b, true)?)?;

    let last = sh.slot(k);
    let accept = ps
        .accept
        .relabel(&last)
        .with_literals(&[(sh.b, false)])
        .or(&AcceptRule { clauses: vec![vec![(sh.b, true), (sh.x, false)]] });
    let first_turn: Vec<String> = (1..=k).flat_map(|s| sh.slot_registers(&ps, s)).collect();
    let ps3 = ProofSystem {
        messages: 3,
        layout: sh.layout.clone(),
        turns: vec![Turn::exposing(&first_turn), Turn::exposing(&["Y", "RC", "MSG"])],
        verifier: vec![w1, w2],
        accept,
    };
    ps3.validate()?;

    let honest = snapshot_prover(&ps, &input.honest, &sh, &ps3)?;
    let sim = snapshot_simulator(&ps, &input.sim, &sh, &ps3)?;
    let out = Instance::new(ps3, honest, sim)?;
    let m = ps.messages as f64;
    let report = TransformReport::new(
        "parallelize",
        &out,
        Bound::new(1.0 - claims.eps / 2.0, "1 − ε/2", "three-message parallelization completeness"),
        Bound::new(
            1.0 - claims.delta.powi(2) / (32.0 * (m + 1.0).powi(2)),
            "1 − δ²/(32(m+1)²)",
            "three-message parallelization soundness",
        ),
    );
    Ok((out, report))
}

/// Honest prover: prepares every snapshot with its own copy of the prover register, then
/// records the challenge `r` privately, runs the input prover's turn `r` on the buffer and swaps
/// its registers for turns `r` and `r + 1` under control of `Y`.
fn snapshot_prover(ps: &ProofSystem, honest: &ProverStrategy, sh: &Shape, ps3: &ProofSystem) -> Result<ProverStrategy> {
    let h = honest.width;
    let record = sh.rc.len();
    let width = (sh.k + 1) * h + record;
    let exec = ps3.exec_layout(width)?;
    let p0 = exec.offset("P")?;
    let full = |s: usize| -> Vec<usize> { sh.slot(s).into_iter().chain(block(p0, s, h)).collect() };

    let mut first = Circuit::new(exec.clone());
    for s in 1..=sh.k {
        let map = full(s);
        for j in 0..s {
            first.append_mapped(&ps.verifier[j], &map)?;
            first.append_mapped(&honest.circuits[j], &map)?;
        }
    }

    let mut second = Circuit::new(exec.clone());
    for (i, &w) in sh.rc.iter().enumerate() {
        second.cnot(w, p0 + (sh.k + 1) * h + i)?;
    }
    for r in 0..sh.k {
        let mut map = full(r);
        for (i, &w) in sh.access[r].iter().enumerate() {
            map[w] = sh.msg[i];
        }
        let mut turn = honest.circuits[r].relabel(exec.clone(), &map)?;
        turn.cswap_all(sh.y, &block(p0, r, h), &block(p0, r + 1, h))?;
        second.append(&turn.controlled_on(&sh.rc, r)?)?;
    }
    Ok(ProverStrategy { width, circuits: vec![first, second] })
}

/// Simulator: slot `s` holds the simulated view after input turn `s`; for the second view a
/// challenge `r` is drawn, slot `r` is advanced to the view after turn `r + 1`, and the swap
/// test's controlled swap and the buffer exchange are replayed.
fn snapshot_simulator(ps: &ProofSystem, sim: &SimulatorEnsemble, sh: &Shape, ps3: &ProofSystem) -> Result<SimulatorEnsemble> {
    let a = sim.ancilla;
    let ancilla = (sh.k + 1) * a;
    let layout = sim_layout(ps3, ancilla, false)?;
    let s0 = layout.offset(SIM)?;
    let slot_view = |s: usize, j: usize| mapped_branches(sim, ps, j, &layout, &sh.slot(s), &block(s0, s, a));

    let first = product(&layout, (1..=sh.k).map(|s| slot_view(s, s - 1)).collect::<Result<Vec<_>>>()?)?;

    let mut second = Vec::new();
    for r in 0..sh.k {
        let mut parts = Vec::new();
        for s in 0..=sh.k {
            if s == r {
                parts.push(slot_view(s, r)?);
            } else if s > 0 {
                parts.push(slot_view(s, s - 1)?);
            }
        }
        let mut tail = Circuit::new(layout.clone());
        for (i, (&rw, &cw)) in sh.r.iter().zip(&sh.rc).enumerate() {
            if (r >> (sh.r.len() - 1 - i)) & 1 == 1 {
                tail.x(rw)?.x(cw)?;
            }
        }
        tail.h(sh.x)?.cnot(sh.x, sh.y)?;
        tail.cswap_all(sh.x, &sh.slot(r), &sh.slot(r + 1))?;
        tail.append(&sh.to_buffer(r)?)?;
        parts.push(vec![(1.0, tail)]);
        for (w, circ) in product(&layout, parts)? {
            second.push((w / sh.k as f64, circ));
        }
    }
    Ok(SimulatorEnsemble { ancilla, fail_flag: false, entries: vec![entry(first), entry(second)] })
}
