//! Parallel and sequential repetition on fresh copies of the registers.

use super::{block, check_input, entry, mapped_branches, pad_even, product, Bound, Guarantee, Instance, TransformReport};
use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::qip::{AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::RegisterLayout;
use crate::simulator::{sim_layout, SimulatorEnsemble, SIM};

/// `k` copies of the verifier layout, copy `i` with register suffix `_i`.
struct Copies {
    layout: RegisterLayout,
    n: usize,
    k: usize,
}

impl Copies {
    fn new(ps: &ProofSystem, k: usize) -> Result<Self> {
        let mut layout = RegisterLayout::default();
        for i in 0..k {
            for (name, w) in ps.layout.registers() {
                layout.push(format!("{name}_{i}"), *w)?;
            }
        }
        Ok(Self { layout, n: ps.layout.total(), k })
    }

    fn wires(&self, i: usize) -> Vec<usize> {
        block(0, i, self.n)
    }

    fn on_copy(&self, circ: &Circuit, i: usize) -> Result<Circuit> {
        circ.relabel(self.layout.clone(), &self.wires(i))
    }

    fn turn(&self, t: &Turn, i: usize) -> Turn {
        Turn::exposing(&t.exposed.iter().map(|r| format!("{r}_{i}")).collect::<Vec<_>>())
    }

    fn accept(&self, ps: &ProofSystem, i: usize) -> AcceptRule {
        ps.accept.relabel(&self.wires(i))
    }

    /// Input prover circuit `circ` moved onto copy `i` and its share of `P`.
    fn prover_circuit(&self, circ: &Circuit, exec: &RegisterLayout, h: usize, i: usize) -> Result<Circuit> {
        let p0 = self.k * self.n;
        let map: Vec<usize> = self.wires(i).into_iter().chain(block(p0, i, h)).collect();
        circ.relabel(exec.clone(), &map)
    }

    /// Simulator branches of entry `j` on copy `i`, ancilla block `i`.
    fn sim_branches(&self, ps: &ProofSystem, sim: &SimulatorEnsemble, layout: &RegisterLayout, j: usize, i: usize) -> Result<Vec<(f64, Circuit)>> {
        let s0 = layout.offset(SIM)?;
        mapped_branches(sim, ps, j, layout, &self.wires(i), &block(s0, i, sim.ancilla))
    }
}

fn check_count(k: usize) -> Result<()> {
    if k == 0 {
        return Err(QzkError::Parameter("repetition needs at least one copy".into()));
    }
    Ok(())
}

/// `k` copies of a three-message system run in lock-step; accept iff every copy accepts.
pub fn parallel_repeat(input: &Instance, claims: &Guarantee, k: usize) -> Result<(Instance, TransformReport)> {
    check_input(input)?;
    check_count(k)?;
    let ps = &input.ps;
    if ps.messages != 3 {
        return Err(QzkError::Arity(format!("parallel repetition needs 3 messages, got {}", ps.messages)));
    }
    let kf = k as i32;
    let bounds = |out: &Instance| {
        TransformReport::new(
            "parallel-repeat",
            out,
            Bound::new(claims.completeness().powi(kf), format!("(1−ε)^{k}"), "parallel repetition completeness"),
            Bound::new(claims.soundness().powi(kf), format!("(1−δ)^{k}"), "parallel repetition soundness"),
        )
    };
    if k == 1 {
        return Ok((input.clone(), bounds(input)));
    }
    let cp = Copies::new(ps, k)?;
    let verifier = ps
        .verifier
        .iter()
        .map(|v| {
            let mut circ = Circuit::new(cp.layout.clone());
            for i in 0..k {
                circ.append(&cp.on_copy(v, i)?)?;
            }
            Ok(circ)
        })
        .collect::<Result<Vec<_>>>()?;
    let turns = ps
        .turns
        .iter()
        .map(|t| Turn::exposing(&(0..k).flat_map(|i| cp.turn(t, i).exposed).collect::<Vec<_>>()))
        .collect();
    let accept = (1..k).fold(cp.accept(ps, 0), |acc, i| acc.and(&cp.accept(ps, i)));
    let out_ps = ProofSystem { messages: 3, layout: cp.layout.clone(), turns, verifier, accept };
    out_ps.validate()?;

    let h = input.honest.width;
    let exec = out_ps.exec_layout(k * h)?;
    let circuits = input
        .honest
        .circuits
        .iter()
        .map(|pc| {
            let mut circ = Circuit::new(exec.clone());
            for i in 0..k {
                circ.append(&cp.prover_circuit(pc, &exec, h, i)?)?;
            }
            Ok(circ)
        })
        .collect::<Result<Vec<_>>>()?;
    let honest = ProverStrategy { width: k * h, circuits };

    let ancilla = k * input.sim.ancilla;
    let layout = sim_layout(&out_ps, ancilla, false)?;
    let entries = (0..ps.prover_turns())
        .map(|j| {
            let parts = (0..k).map(|i| cp.sim_branches(ps, &input.sim, &layout, j, i)).collect::<Result<Vec<_>>>()?;
            Ok(entry(product(&layout, parts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let sim = SimulatorEnsemble { ancilla, fail_flag: false, entries };
    let out = Instance::new(out_ps, honest, sim)?;
    let report = bounds(&out);
    Ok((out, report))
}

/// `Σ_{i ≥ t} C(k, i) p^i (1 − p)^{k − i}`.
pub fn binomial_tail(k: usize, t: usize, p: f64) -> f64 {
    let mut total = 0.0;
    let mut choose = 1.0;
    for i in 0..=k {
        if i > 0 {
            choose = choose * (k + 1 - i) as f64 / i as f64;
        }
        if i >= t {
            total += choose * p.powi(i as i32) * (1.0 - p).powi((k - i) as i32);
        }
    }
    total
}

/// Acceptance when at least `t` of the rules hold.
fn threshold(rules: &[AcceptRule], t: usize) -> AcceptRule {
    let mut clauses = Vec::new();
    let k = rules.len();
    for mask in 0usize..1 << k {
        if mask.count_ones() as usize != t {
            continue;
        }
        let mut chosen = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| rules[i].clone());
        if let Some(first) = chosen.next() {
            clauses.extend(chosen.fold(first, |acc, r| acc.and(&r)).clauses);
        }
    }
    AcceptRule { clauses }
}

/// `k` executions one after another on fresh registers; accept iff at least `t` accept.
pub fn sequential_repeat(input: &Instance, claims: &Guarantee, k: usize, t: usize) -> Result<(Instance, TransformReport)> {
    check_input(input)?;
    check_count(k)?;
    if t == 0 || t > k {
        return Err(QzkError::Parameter(format!("threshold {t} outside 1..={k}")));
    }
    let bounds = |out: &Instance| {
        TransformReport::new(
            "sequential-repeat",
            out,
            Bound::new(binomial_tail(k, t, claims.completeness()), format!("P[Bin({k}, 1−ε) ≥ {t}]"), "sequential repetition completeness"),
            Bound::new(binomial_tail(k, t, claims.soundness()), format!("P[Bin({k}, 1−δ) ≥ {t}]"), "sequential repetition soundness"),
        )
    };
    if k == 1 {
        return Ok((input.clone(), bounds(input)));
    }
    let ps = pad_even(&input.ps);
    let np = ps.prover_turns();
    let cp = Copies::new(&ps, k)?;

    let mut verifier = Vec::new();
    for i in 0..k {
        for j in 0..np {
            let mut circ = cp.on_copy(&ps.verifier[j], i)?;
            if j == 0 && i > 0 {
                let mut joined = cp.on_copy(&ps.verifier[np], i - 1)?;
                joined.append(&circ)?;
                circ = joined;
            }
            verifier.push(circ);
        }
    }
    verifier.push(cp.on_copy(&ps.verifier[np], k - 1)?);
    let turns = (0..k).flat_map(|i| ps.turns.iter().map(|t| cp.turn(t, i)).collect::<Vec<_>>()).collect();
    let rules: Vec<AcceptRule> = (0..k).map(|i| cp.accept(&ps, i)).collect();
    let out_ps = ProofSystem { messages: k * ps.messages, layout: cp.layout.clone(), turns, verifier, accept: threshold(&rules, t) };
    out_ps.validate()?;

    let h = input.honest.width;
    let exec = out_ps.exec_layout(k * h)?;
    let mut circuits = Vec::new();
    for i in 0..k {
        for pc in &input.honest.circuits {
            circuits.push(cp.prover_circuit(pc, &exec, h, i)?);
        }
    }
    let honest = ProverStrategy { width: k * h, circuits };

    let ancilla = k * input.sim.ancilla;
    let layout = sim_layout(&out_ps, ancilla, false)?;
    let finished = |i: usize| -> Result<Vec<(f64, Circuit)>> {
        let last = cp.sim_branches(&ps, &input.sim, &layout, np - 1, i)?;
        let close = ps.verifier[np].relabel(layout.clone(), &cp.wires(i))?;
        product(&layout, vec![last, vec![(1.0, close)]])
    };
    let mut entries = Vec::new();
    for i in 0..k {
        for j in 0..np {
            let mut parts = (0..i).map(&finished).collect::<Result<Vec<_>>>()?;
            parts.push(cp.sim_branches(&ps, &input.sim, &layout, j, i)?);
            entries.push(entry(product(&layout, parts)?));
        }
    }
    let sim = SimulatorEnsemble { ancilla, fail_flag: false, entries };
    let out = Instance::new(out_ps, honest, sim)?;
    let report = bounds(&out);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail_matches_direct_sum() {
        let direct = 3.0 * 0.75f64.powi(2) * 0.25 + 0.75f64.powi(3);
        assert!((binomial_tail(3, 2, 0.75) - direct).abs() < 1e-15);
        assert!((binomial_tail(4, 0, 0.3) - 1.0).abs() < 1e-15);
    }
}
