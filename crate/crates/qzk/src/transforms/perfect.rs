//! Perfectly complete form of a system with known honest acceptance: the prover supplies a
//! qubit `B` that, together with the verifier's outcome qubit `X`, must end in a fixed state
//! the verifier can check exactly.

use super::{check_input, entry, mapped_branches, pad_even, product, Bound, Guarantee, Instance, TransformReport};
use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::linalg;
use crate::qip::{drive, AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::{c, CMatrix, CVector, PureState, RegisterLayout};
use crate::simulator::{sim_layout, SimulatorEnsemble, SIM};
use crate::tol;

/// Adds two messages so that the honest prover is accepted with certainty. `p_acc` must be the
/// exact honest acceptance of the input, at least `1 − ε`.
pub fn make_perfect_complete(input: &Instance, claims: &Guarantee, p_acc: f64) -> Result<(Instance, TransformReport)> {
    check_input(input)?;
    let eps = claims.eps;
    let out_ps = perfect_complete_system(&input.ps, eps)?;
    let measured = crate::qip::run(&input.ps, &input.honest)?.0;
    if (measured - p_acc).abs() > tol::REPORTED {
        return Err(QzkError::Precondition(format!("stated acceptance {p_acc} differs from the exact {measured}")));
    }
    if p_acc < 1.0 - eps - tol::REPORTED || p_acc <= 0.0 {
        return Err(QzkError::Precondition(format!("honest acceptance {p_acc} below 1 − ε = {}", 1.0 - eps)));
    }
    let ps = pad_even(&input.ps);
    let honest = completing_prover(&ps, &input.honest, &out_ps, eps, p_acc)?;
    let sim = completing_simulator(&ps, &input.sim, &out_ps, eps)?;
    let out = Instance::new(out_ps, honest, sim)?;
    let report = TransformReport::new(
        "perfect-complete",
        &out,
        Bound::new(1.0, "1", "perfect-completeness completeness"),
        Bound::new(1.0 - (claims.delta - eps).max(0.0).powi(2), "1 − (δ−ε)²", "perfect-completeness soundness"),
    );
    Ok((out, report))
}

/// Verifier side of the transform alone, for systems without a usable honest prover.
pub fn perfect_complete_system(input: &ProofSystem, eps: f64) -> Result<ProofSystem> {
    input.validate()?;
    if !(0.0..1.0).contains(&eps) {
        return Err(QzkError::Parameter(format!("ε = {eps} outside [0, 1)")));
    }
    if input.turns.iter().any(|t| !t.handed.is_empty()) {
        return Err(QzkError::Unsupported("transforms need a protocol that hands no registers over".into()));
    }
    if !input.accept.is_single_output() {
        return Err(QzkError::Unsupported("perfect completeness needs a single output-qubit accept rule".into()));
    }
    let ps = pad_even(input);
    let k = ps.prover_turns();
    let n = ps.layout.total();
    let b_name = ps.layout.fresh_name("B");
    let layout = ps.layout.concat(&RegisterLayout::new([(ps.layout.fresh_name("X"), 1), (b_name.clone(), 1)])?)?;
    let (x, b, y) = (n, n + 1, ps.accept.output_wire());
    let lift = |circ: &Circuit| circ.extend_layout(&layout);

    let mut verifier: Vec<Circuit> = ps.verifier[..k].iter().map(lift).collect::<Result<_>>()?;
    let mut finish = lift(&ps.verifier[k])?;
    finish.toffoli(b, y, x)?;
    verifier.push(finish);
    let mut check = Circuit::new(layout.clone());
    check.cnot(x, b)?.ueps(eps, x)?;
    verifier.push(check);

    let mut turns = ps.turns.clone();
    turns[k - 1].exposed.push(b_name.clone());
    let mut all = ps.layout.names();
    all.push(b_name);
    turns.push(Turn::exposing(&all));
    let out = ProofSystem { messages: ps.messages + 2, layout, turns, verifier, accept: AcceptRule { clauses: vec![vec![(x, false)]] } };
    out.validate()?;
    Ok(out)
}

/// Honest prover: the input prover, plus `|b⟩ = √(1−q)|0⟩ + √q|1⟩` with `q = (1−ε)/p_acc` on
/// `B` at its last input turn, and a final unitary `Z` that maps the two outcome branches to
/// `|0…0⟩|0⟩` and `|0…0⟩|1⟩` on the input registers, `P` and `B`.
fn completing_prover(ps: &ProofSystem, honest: &ProverStrategy, out: &ProofSystem, eps: f64, p_acc: f64) -> Result<ProverStrategy> {
    let k = ps.prover_turns();
    let n = ps.layout.total();
    let h = honest.width;
    let exec = out.exec_layout(h)?;
    let (x, b) = (n, n + 1);
    let p0 = exec.offset("P")?;
    let map: Vec<usize> = (0..n).chain(p0..p0 + h).collect();
    let mut circuits = honest.circuits.iter().map(|circ| circ.relabel(exec.clone(), &map)).collect::<Result<Vec<_>>>()?;
    let q = ((1.0 - eps) / p_acc).clamp(0.0, 1.0);
    let (lo, hi) = ((1.0 - q).sqrt(), q.sqrt());
    circuits[k - 1].custom(CMatrix::from_row_slice(2, 2, &[c(lo), c(-hi), c(hi), c(lo)]), vec![b])?;
    circuits.push(Circuit::new(exec.clone()));

    let total = exec.total();
    let mut state = PureState::zero(total);
    let partial = ProverStrategy { width: h, circuits: circuits.clone() };
    let mut before_last = None;
    drive(out, &partial, state.amps.as_mut_slice(), total, |j, amps| {
        if j == k - 1 {
            before_last = Some(amps.to_vec());
        }
    });
    let mut amps = CVector::from_vec(before_last.ok_or_else(|| QzkError::Arity("no prover turn".into()))?);
    out.verifier[k].apply_to(amps.as_mut_slice(), total);

    let rest: Vec<usize> = (0..total).filter(|&w| w != x).collect();
    tol::check_dense_cap("completing unitary", rest.len())?;
    let d = 1usize << rest.len();
    let split = crate::kernel::reshape(amps.as_slice(), total, &[x], &rest);
    let xi: Vec<CVector> = (0..2).map(|i| split.row(i).transpose()).collect();
    let pos_b = rest.iter().position(|&w| w == b).ok_or_else(|| QzkError::Dimension("B missing".into()))?;
    let bbit = 1usize << (rest.len() - 1 - pos_b);
    let mut from = Vec::new();
    let mut to = Vec::new();
    for (i, v) in xi.iter().enumerate() {
        let norm = v.norm();
        if norm > tol::DERIVED {
            from.push(v / c(norm));
            let mut e = CVector::zeros(d);
            e[if i == 1 { bbit } else { 0 }] = c(1.0);
            to.push(e);
        }
    }
    let z = linalg::complete_basis(&to, d) * linalg::complete_basis(&from, d).adjoint();
    circuits[k].custom(z, rest)?;
    Ok(ProverStrategy { width: h, circuits })
}

/// Simulator: the input's views with `X = 0` (and `B = 1` from the input's last turn on),
/// then `√ε|00⟩ + √(1−ε)|11⟩` on `X, B` with every other register cleared.
fn completing_simulator(ps: &ProofSystem, sim: &SimulatorEnsemble, out: &ProofSystem, eps: f64) -> Result<SimulatorEnsemble> {
    let k = ps.prover_turns();
    let n = ps.layout.total();
    let layout = sim_layout(out, sim.ancilla, false)?;
    let (x, b) = (n, n + 1);
    let s0 = layout.offset(SIM)?;
    let verifier_map: Vec<usize> = (0..n).collect();
    let ancilla_map: Vec<usize> = (s0..s0 + sim.ancilla).collect();
    let mut entries = Vec::new();
    for j in 0..k {
        let mut branches = mapped_branches(sim, ps, j, &layout, &verifier_map, &ancilla_map)?;
        if j == k - 1 {
            let mut raise = Circuit::new(layout.clone());
            raise.x(b)?;
            branches = product(&layout, vec![branches, vec![(1.0, raise)]])?;
        }
        entries.push(entry(branches));
    }
    let mut target = Circuit::new(layout.clone());
    target.ueps(eps, x)?.cnot(x, b)?;
    entries.push(entry(vec![(1.0, target)]));
    Ok(SimulatorEnsemble { ancilla: sim.ancilla, fail_flag: false, entries })
}
