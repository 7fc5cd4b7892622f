//! Simulators that may declare failure, and the wrapper protocol that absorbs them.
//!
//! A failure-flag simulator outputs `p |0⟩⟨0| ⊗ |0…0⟩⟨0…0| + (1−p) |1⟩⟨1| ⊗ view` with the flag
//! first. The wrapper threads a flag `B` (1 = still honest) through every message: the prover
//! runs the simulator privately each round and clears `B` whenever it fails, and the verifier
//! additionally requires `B = 1`.

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::qip::{views, ProofSystem, ProverStrategy, Step, Turn};
use crate::qla::{c, CMatrix, LowRankState, RegisterLayout};
use crate::simulator::{sim_layout, SimBranch, SimEntry, SimulatorEnsemble, FLAG, SIM};
use crate::tol;

/// Failure probabilities and block-form deviations of a failure-flag simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct FailForm {
    pub probabilities: Vec<f64>,
    pub deviations: Vec<f64>,
}

/// Checks every output against the block form with the real views; rejects deviations above
/// the reported tolerance.
pub fn check_fail_form(ps: &ProofSystem, honest: &ProverStrategy, sim: &SimulatorEnsemble) -> Result<FailForm> {
    if !sim.fail_flag {
        return Err(QzkError::Precondition("simulator has no failure flag".into()));
    }
    let real = views(ps, honest)?;
    let mut probabilities = Vec::new();
    let mut deviations = Vec::new();
    for (j, view) in real.iter().enumerate() {
        let out = sim.output(ps, j)?;
        let d = view.state.dim();
        let f = out.factor();
        let p: f64 = f.rows(0, d).iter().map(|z| z.norm_sqr()).sum();
        let vf = view.state.factor();
        let mut want = CMatrix::zeros(2 * d, 1 + vf.ncols());
        want[(0, 0)] = c(p.max(0.0).sqrt());
        want.view_mut((d, 1), (d, vf.ncols())).copy_from(&(vf * c((1.0 - p).max(0.0).sqrt())));
        let dev = out.trace_distance(&LowRankState::from_factor(want))?;
        if dev > tol::REPORTED {
            return Err(QzkError::Precondition(format!(
                "simulator output {} deviates from the failure block form by {dev:.3e}",
                j + 1
            )));
        }
        probabilities.push(p);
        deviations.push(dev);
    }
    Ok(FailForm { probabilities, deviations })
}

/// Shifts every wire of a circuit over `from` by `by` into `to`.
fn shifted(circ: &Circuit, to: &RegisterLayout, by: usize) -> Result<Circuit> {
    let map: Vec<usize> = (0..circ.layout.total()).map(|w| w + by).collect();
    circ.relabel(to.clone(), &map)
}

/// Wrapper protocol, honest prover and exact simulator for a failure-flag simulator whose
/// failure probability never exceeds `p_bound`. Odd message counts gain one leading verifier
/// message that only raises `B`.
pub fn fail_wrap(
    ps: &ProofSystem,
    honest: &ProverStrategy,
    sim_fail: &SimulatorEnsemble,
    p_bound: f64,
) -> Result<(ProofSystem, ProverStrategy, SimulatorEnsemble)> {
    if !(0.0..=0.5).contains(&p_bound) {
        return Err(QzkError::Parameter(format!("failure bound {p_bound} outside [0, 1/2]")));
    }
    sim_fail.validate(ps)?;
    let form = check_fail_form(ps, honest, sim_fail)?;
    if let Some(p) = form.probabilities.iter().find(|&&p| p > p_bound + tol::REPORTED) {
        return Err(QzkError::Precondition(format!("failure probability {p} exceeds the bound {p_bound}")));
    }

    let b_name = ps.layout.fresh_name("B");
    let layout = RegisterLayout::new([(b_name.clone(), 1)])?.concat(&ps.layout)?;
    let b = 0;
    let lift = |circ: &Circuit| shifted(circ, &layout, 1);
    let mut raise = Circuit::new(layout.clone());
    raise.x(b)?;
    let mut verifier = Vec::new();
    if ps.prover_first() {
        verifier.push(raise);
        for v in &ps.verifier {
            verifier.push(lift(v)?);
        }
    } else {
        let mut first = raise;
        first.append(&lift(&ps.verifier[0])?)?;
        verifier.push(first);
        for v in &ps.verifier[1..] {
            verifier.push(lift(v)?);
        }
    }
    let turns = ps
        .turns
        .iter()
        .map(|t| {
            let mut exposed = vec![b_name.clone()];
            exposed.extend(t.exposed.iter().cloned());
            Turn { exposed, handed: t.handed.clone() }
        })
        .collect();
    let accept = ps.accept.relabel(&(1..=ps.layout.total()).collect::<Vec<_>>()).with_literals(&[(b, true)]);
    let wrapped = ProofSystem {
        messages: if ps.prover_first() { ps.messages + 1 } else { ps.messages },
        layout: layout.clone(),
        turns,
        verifier,
        accept,
    };
    wrapped.validate()?;

    let honest_w = wrap_prover(ps, honest, sim_fail, &wrapped)?;
    let sim_w = wrap_simulator(ps, sim_fail, &wrapped)?;
    Ok((wrapped, honest_w, sim_w))
}

/// Single-branch circuit of every entry; mixtures are purified by the caller first.
fn entry_circuit(sim: &SimulatorEnsemble, j: usize) -> Result<&Circuit> {
    sim.entries[j]
        .circuit()
        .ok_or_else(|| QzkError::Unsupported(format!("simulator entry {} is a mixture", j + 1)))
}

fn wrap_prover(ps: &ProofSystem, honest: &ProverStrategy, sim: &SimulatorEnsemble, wrapped: &ProofSystem) -> Result<ProverStrategy> {
    let sl = sim.layout(ps)?.total();
    let per_turn = 1 + sl;
    let np = ps.prover_turns();
    let width = honest.width + np * per_turn;
    let exec = wrapped.exec_layout(width)?;
    let p0 = exec.offset("P")?;
    let inner: Vec<usize> = (0..ps.layout.total() + honest.width)
        .map(|w| if w < ps.layout.total() { w + 1 } else { p0 + (w - ps.layout.total()) })
        .collect();
    let mut circuits = Vec::new();
    for j in 0..np {
        let base = p0 + honest.width + j * per_turn;
        let bm = base;
        let copy: Vec<usize> = (base + 1..base + 1 + sl).collect();
        let flag = copy[0];
        let mut circ = Circuit::new(exec.clone());
        circ.cnot(0, bm)?;
        circ.append_mapped(entry_circuit(sim, j)?, &copy)?;
        circ.x(flag)?.toffoli(bm, flag, 0)?.x(flag)?;
        let pj = honest.circuits[j].relabel(exec.clone(), &inner)?;
        circ.append(&pj.controlled(0, true)?)?;
        circuits.push(circ);
    }
    Ok(ProverStrategy { width, circuits })
}

fn wrap_simulator(ps: &ProofSystem, sim: &SimulatorEnsemble, wrapped: &ProofSystem) -> Result<SimulatorEnsemble> {
    let sl = sim.layout(ps)?.total();
    let np = ps.prover_turns();
    let per_turn = sl + 2;
    let ancilla = np * per_turn;
    let layout = sim_layout(wrapped, ancilla, false)?;
    let s0 = layout.offset(SIM)?;
    let b = 0;
    let sim_l = sim.layout(ps)?;
    let mut acc = Circuit::new(layout.clone());
    let mut entries = Vec::new();
    let ident: Vec<usize> = (0..wrapped.layout.total()).collect();
    for step in wrapped.schedule() {
        let j = match step {
            Step::Verifier(i) => {
                acc.append_mapped(&wrapped.verifier[i], &ident)?;
                continue;
            }
            Step::Prover(j) => j,
        };
        let base = s0 + j * per_turn;
        let copy: Vec<usize> = (base..base + sl).collect();
        let (cw, dw) = (base + sl, base + sl + 1);
        let flag = copy[0];
        acc.append_mapped(entry_circuit(sim, j)?, &copy)?;
        // c = B ∧ flag selects replacement by the simulated view; d = B ∧ ¬flag clears B.
        acc.toffoli(b, flag, cw)?;
        acc.x(flag)?.toffoli(b, flag, dw)?.x(flag)?;
        for r in ps.view_registers(j) {
            let ours = wrapped.layout.wires(&r)?;
            let theirs: Vec<usize> = sim_l.wires(&r)?.into_iter().map(|w| copy[w]).collect();
            acc.cswap_all(cw, &ours, &theirs)?;
        }
        acc.cnot(dw, b)?;
        entries.push(SimEntry::single(acc.clone()));
    }
    Ok(SimulatorEnsemble { ancilla, fail_flag: false, entries })
}

/// Runs `t` independent copies and keeps the first that did not fail, so the output fails
/// only if every copy fails.
pub fn fail_amplify(ps: &ProofSystem, sim: &SimulatorEnsemble, t: usize) -> Result<SimulatorEnsemble> {
    if t == 0 {
        return Err(QzkError::Parameter("amplification needs at least one copy".into()));
    }
    if !sim.fail_flag {
        return Err(QzkError::Precondition("simulator has no failure flag".into()));
    }
    sim.validate(ps)?;
    if t == 1 {
        return Ok(sim.clone());
    }
    let base = sim.layout(ps)?;
    let w = base.total();
    let ancilla = sim.ancilla + (t - 1) * w + (t - 1);
    let layout = sim_layout(ps, ancilla, true)?;
    let first_extra = w;
    let copy_wires = |i: usize| -> Vec<usize> {
        if i == 0 {
            (0..w).collect()
        } else {
            (first_extra + (i - 1) * w..first_extra + i * w).collect()
        }
    };
    let ctrl = |i: usize| first_extra + (t - 1) * w + (i - 1);
    let regs: Vec<String> = std::iter::once(FLAG.to_string()).chain(ps.layout.names()).collect();
    let mut entries = Vec::new();
    for entry in &sim.entries {
        let mut combos: Vec<(f64, Vec<&Circuit>)> = vec![(1.0, vec![])];
        for _ in 0..t {
            combos = combos
                .into_iter()
                .flat_map(|(wgt, picks)| {
                    entry.branches.iter().map(move |b| {
                        let mut p = picks.clone();
                        p.push(&b.circuit);
                        (wgt * b.weight, p)
                    })
                })
                .collect();
        }
        let mut branches = Vec::new();
        for (weight, picks) in combos {
            let mut circ = Circuit::new(layout.clone());
            for (i, pc) in picks.iter().enumerate() {
                circ.append_mapped(pc, &copy_wires(i))?;
            }
            for i in 1..t {
                let (f1, fi, cw) = (0, copy_wires(i)[0], ctrl(i));
                circ.x(f1)?.toffoli(f1, fi, cw)?.x(f1)?;
                for r in &regs {
                    let ours = base.wires(r)?;
                    let theirs: Vec<usize> = ours.iter().map(|&x| copy_wires(i)[x]).collect();
                    circ.cswap_all(cw, &ours, &theirs)?;
                }
            }
            branches.push(SimBranch { weight, circuit: circ });
        }
        entries.push(SimEntry { branches });
    }
    Ok(SimulatorEnsemble { ancilla, fail_flag: true, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m4_chain, m4_chain_fail_mixture, m4_chain_fail_sim};
    use crate::qip::run;
    use crate::zk::{hv_check, HvMode};

    #[test]
    fn wrapper_keeps_acceptance_and_simulates_exactly() {
        let f = m4_chain(1.0 / 3.0).unwrap();
        let p = 2f64.powi(-8);
        let sim = m4_chain_fail_sim(&f.ps, p).unwrap();
        let (ps, honest, sim_w) = fail_wrap(&f.ps, &f.honest, &sim, 0.5).unwrap();
        let acc = run(&ps, &honest).unwrap().0;
        assert!(acc >= (2.0 / 3.0) * (1.0 - p).powi(2) - 1e-9, "{acc}");
        let hv = hv_check(&ps, &honest, &sim_w, HvMode::Perfect).unwrap();
        assert!(hv.passed, "{:?}", hv.distances);
    }

    #[test]
    fn wrapper_rejects_excess_failure() {
        let f = m4_chain(0.0).unwrap();
        let sim = m4_chain_fail_sim(&f.ps, 0.4).unwrap();
        assert!(matches!(fail_wrap(&f.ps, &f.honest, &sim, 0.25), Err(QzkError::Precondition(_))));
        assert!(matches!(fail_wrap(&f.ps, &f.honest, &sim, 0.75), Err(QzkError::Parameter(_))));
    }

    #[test]
    fn amplification_multiplies_failure() {
        let f = m4_chain(0.0).unwrap();
        let sim = m4_chain_fail_mixture(&f.ps, 0.5).unwrap();
        for t in 1..=4 {
            let amp = fail_amplify(&f.ps, &sim, t).unwrap();
            let form = check_fail_form(&f.ps, &f.honest, &amp).unwrap();
            assert!(form.probabilities.iter().all(|&q| (q - 0.5f64.powi(t as i32)).abs() < 1e-10));
        }
        assert!(fail_amplify(&f.ps, &sim, 0).is_err());
    }
}
