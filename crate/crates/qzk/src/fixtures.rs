//! Desk-scale protocol instances with ground truth computed by the crate's own oracles.

use crate::analysis::{optimize_prover, AttackConfig};
use crate::circuits::{swap_select, Circuit};
use crate::error::{QzkError, Result};
use crate::qip::{run, AcceptRule, ProofSystem, ProverStrategy, Turn};
use crate::qla::RegisterLayout;
use crate::simulator::{sim_layout, SimEntry, SimulatorEnsemble};
use crate::transforms::{Guarantee, Instance};
use crate::zk::{hv_check, HvMode};

/// A value together with the procedure that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived<T> {
    pub value: T,
    pub oracle: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub p_acc: Derived<f64>,
    pub cheat: Derived<f64>,
    pub view_distances: Derived<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub ps: ProofSystem,
    pub honest: ProverStrategy,
    pub sim: SimulatorEnsemble,
    /// Completeness error built into the final rotation.
    pub eps: f64,
    /// Soundness gap of the family: one minus the closed-form optimal cheating acceptance of
    /// its no-instance.
    pub delta: f64,
    pub truth: GroundTruth,
}

impl Fixture {
    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.ps.clone(), self.honest.clone(), self.sim.clone())
    }

    pub fn guarantee(&self) -> Result<Guarantee> {
        Guarantee::new(self.eps, self.delta)
    }
}

/// Names accepted by [`fixture_by_name`].
pub const FIXTURE_NAMES: [&str; 4] = ["unveil", "unveil-no", "m4-chain", "m4-chain-no"];

fn vm() -> Result<RegisterLayout> {
    RegisterLayout::new([("V", 1), ("M", 1)])
}

/// Verifier and honest prover of the four-message chain; `yes = false` drops the decoding
/// step, so the verifier's qubit is measured while still maximally mixed whatever the prover
/// does.
fn m4_parts(eps: f64, yes: bool) -> Result<(ProofSystem, ProverStrategy)> {
    let l = vm()?;
    let (v, m) = (0, 1);
    let mut v1 = Circuit::new(l.clone());
    v1.h(v)?.cnot(v, m)?;
    let mut v2 = Circuit::new(l.clone());
    v2.x(m)?;
    let mut v3 = Circuit::new(l.clone());
    if yes {
        v3.cnot(v, m)?.h(v)?;
    }
    v3.ueps(eps, v)?;
    let ps = ProofSystem::normal_form(1, 1, 4, vec![v1, v2, v3], v)?;
    let exec = ps.exec_layout(1)?;
    let p = 2;
    let mut p1 = Circuit::new(exec.clone());
    p1.swap(m, p)?;
    let mut p2 = Circuit::new(exec);
    p2.x(m)?.swap(m, p)?;
    Ok((ps, ProverStrategy { width: 1, circuits: vec![p1, p2] }))
}

/// Exact simulator for the chain's views: `I/2 ⊗ |0⟩⟨0|`, then a Bell pair on `V, M`.
pub fn m4_chain_sim(ps: &ProofSystem) -> Result<SimulatorEnsemble> {
    let l = sim_layout(ps, 1, false)?;
    let (v, m, a) = (0, 1, 2);
    let mut s1 = Circuit::new(l.clone());
    s1.h(a)?.cnot(a, v)?;
    let mut s2 = Circuit::new(l);
    s2.h(v)?.cnot(v, m)?;
    Ok(SimulatorEnsemble { ancilla: 1, fail_flag: false, entries: vec![SimEntry::single(s1), SimEntry::single(s2)] })
}

/// Chain simulator that declares failure (flag `0`) with probability `p` in every round and
/// otherwise outputs the exact view. The second ancilla keeps a copy of the flag so that the
/// two outcomes are mixed rather than superposed.
pub fn m4_chain_fail_sim(ps: &ProofSystem, p: f64) -> Result<SimulatorEnsemble> {
    let l = sim_layout(ps, 2, true)?;
    let (f, v, m, a, k) = (0, 1, 2, 3, 4);
    let mut s1 = Circuit::new(l.clone());
    s1.ueps(p, f)?.cnot(f, k)?.h(a)?.toffoli(f, a, v)?;
    let mut s2 = Circuit::new(l);
    s2.ueps(p, f)?.cnot(f, k)?.h(a)?.cnot(a, m)?.cswap(f, a, v)?.x(f)?.toffoli(f, a, m)?.x(f)?;
    Ok(SimulatorEnsemble { ancilla: 2, fail_flag: true, entries: vec![SimEntry::single(s1), SimEntry::single(s2)] })
}

/// The same failing simulator as a classical mixture over branches, with no ancilla.
pub fn m4_chain_fail_mixture(ps: &ProofSystem, p: f64) -> Result<SimulatorEnsemble> {
    let l = sim_layout(ps, 0, true)?;
    let (f, v, m) = (0, 1, 2);
    let failed = Circuit::new(l.clone());
    let mut mixed0 = Circuit::new(l.clone());
    mixed0.x(f)?;
    let mut mixed1 = mixed0.clone();
    mixed1.x(v)?;
    let mut bell = mixed0.clone();
    bell.h(v)?.cnot(v, m)?;
    let q = (1.0 - p) / 2.0;
    Ok(SimulatorEnsemble {
        ancilla: 0,
        fail_flag: true,
        entries: vec![
            SimEntry::mixture(vec![(p, failed.clone()), (q, mixed0), (q, mixed1)]),
            SimEntry::mixture(vec![(p, failed), (1.0 - p, bell)]),
        ],
    })
}

/// Unveiling toy: the prover commits half of a Bell pair in `C`, the verifier flips a coin
/// into `B` (copied into the message `BC`), and the prover then sends the other
/// half in `U`. On coin 0 the verifier swaps the halves before decoding; both orders decode.
fn unveil_parts(eps: f64) -> Result<(ProofSystem, ProverStrategy)> {
    let l = RegisterLayout::new([("C", 1), ("B", 1), ("BC", 1), ("U", 1)])?;
    let (cw, b, bc, u) = (0, 1, 2, 3);
    let mut v1 = Circuit::new(l.clone());
    v1.h(b)?.cnot(b, bc)?;
    let mut v2 = Circuit::new(l.clone());
    v2.cnot(cw, u)?.h(cw)?.x(b)?.cswap(b, cw, u)?.x(b)?.ueps(eps, cw)?;
    let ps = ProofSystem {
        messages: 3,
        layout: l,
        turns: vec![Turn::exposing(&["C"]), Turn::exposing(&["U", "BC"])],
        verifier: vec![v1, v2],
        accept: AcceptRule::output(cw),
    };
    ps.validate()?;
    Ok((ps.clone(), unveil_prover(&ps)?))
}

fn unveil_prover(ps: &ProofSystem) -> Result<ProverStrategy> {
    let exec = ps.exec_layout(1)?;
    let (cw, u, p) = (exec.wire("C", 0)?, exec.wire("U", 0)?, exec.wire("P", 0)?);
    let mut p1 = Circuit::new(exec.clone());
    p1.h(p)?.cnot(p, cw)?;
    let mut p2 = Circuit::new(exec);
    p2.swap(p, u)?;
    Ok(ProverStrategy { width: 1, circuits: vec![p1, p2] })
}

/// Exact simulator for the unveiling views: `C` maximally mixed, then the coin and its copy
/// next to the Bell pair on `C, U`.
pub fn unveil_sim(ps: &ProofSystem) -> Result<SimulatorEnsemble> {
    let l = sim_layout(ps, 1, false)?;
    let (cw, b, bc, u, a) = (l.wire("C", 0)?, l.wire("B", 0)?, l.wire("BC", 0)?, l.wire("U", 0)?, l.wire("SIM", 0)?);
    let mut s1 = Circuit::new(l.clone());
    s1.h(a)?.cnot(a, cw)?;
    let mut s2 = Circuit::new(l);
    s2.h(b)?.cnot(b, bc)?.h(cw)?.cnot(cw, u)?;
    Ok(SimulatorEnsemble { ancilla: 1, fail_flag: false, entries: vec![SimEntry::single(s1), SimEntry::single(s2)] })
}

/// No-instance of the unveiling toy: the coin picks the basis (computational or Hadamard) in
/// which `C` alone is tested for `|0⟩`, so no committed state passes both tests.
fn unveil_no_parts() -> Result<(ProofSystem, ProverStrategy)> {
    let l = RegisterLayout::new([("C", 1), ("B", 1), ("BC", 1), ("U", 1), ("A", 1)])?;
    let (cw, b, bc) = (0, 1, 2);
    let mut v1 = Circuit::new(l.clone());
    v1.h(b)?.cnot(b, bc)?;
    let one = RegisterLayout::new([("T", 1)])?;
    let id = Circuit::new(one.clone());
    let mut had = Circuit::new(one);
    had.h(0)?;
    let mut v2 = swap_select(&l, &[id, had], "C", "B", &["A"])?;
    v2.x(cw)?;
    let ps = ProofSystem {
        messages: 3,
        layout: l,
        turns: vec![Turn::exposing(&["C"]), Turn::exposing(&["U", "BC"])],
        verifier: vec![v1, v2],
        accept: AcceptRule::output(cw),
    };
    ps.validate()?;
    Ok((ps.clone(), unveil_prover(&ps)?))
}

/// Gap of the chain family: its no-instance accepts every prover with probability 1/2.
pub const CHAIN_DELTA: f64 = 0.5;
/// Gap of the unveiling family: its no-instance is won with probability at most
/// `1/2 + √2/4`, the two-basis optimum.
pub const UNVEIL_DELTA: f64 = 0.5 - std::f64::consts::SQRT_2 / 4.0;

fn finish(name: &str, ps: ProofSystem, honest: ProverStrategy, sim: SimulatorEnsemble, eps: f64, delta: f64) -> Result<Fixture> {
    let p_acc = run(&ps, &honest)?.0;
    let cheat = optimize_prover(&ps, &AttackConfig { prover_width: honest.width.max(1), ..Default::default() })?.best_p;
    let dist = hv_check(&ps, &honest, &sim, HvMode::Statistical)?.distances;
    Ok(Fixture {
        name: name.to_string(),
        ps,
        honest,
        sim,
        eps,
        delta,
        truth: GroundTruth {
            p_acc: Derived { value: p_acc, oracle: "exact state-vector execution" },
            cheat: Derived { value: cheat, oracle: "alternating best-response ascent, 8 restarts" },
            view_distances: Derived { value: dist, oracle: "trace norm of simulated minus real view" },
        },
    })
}

/// Four-message chain with acceptance `1 − ε`.
pub fn m4_chain(eps: f64) -> Result<Fixture> {
    let (ps, pr) = m4_parts(eps, true)?;
    let sim = m4_chain_sim(&ps)?;
    finish("m4-chain", ps, pr, sim, eps, CHAIN_DELTA)
}

/// Chain whose verifier accepts with probability exactly 1/2 against every prover.
pub fn m4_chain_no(eps: f64) -> Result<Fixture> {
    let (ps, pr) = m4_parts(eps, false)?;
    let sim = m4_chain_sim(&ps)?;
    finish("m4-chain-no", ps, pr, sim, eps, CHAIN_DELTA)
}

/// Three-message unveiling toy with acceptance `1 − ε`.
pub fn unveil(eps: f64) -> Result<Fixture> {
    let (ps, pr) = unveil_parts(eps)?;
    let sim = unveil_sim(&ps)?;
    finish("unveil", ps, pr, sim, eps, UNVEIL_DELTA)
}

/// Two-basis test whose optimum is `1/2 + √2/4`.
pub fn unveil_no() -> Result<Fixture> {
    let (ps, pr) = unveil_no_parts()?;
    let sim = SimulatorEnsemble::honest_replay(&ps, &pr)?;
    finish("unveil-no", ps, pr, sim, 0.0, UNVEIL_DELTA)
}

pub fn fixture_by_name(name: &str, eps: f64) -> Result<Fixture> {
    match name {
        "unveil" => unveil(eps),
        "unveil-no" => unveil_no(),
        "m4-chain" => m4_chain(eps),
        "m4-chain-no" => m4_chain_no(eps),
        other => Err(QzkError::Parameter(format!("unknown fixture `{other}` (known: {})", FIXTURE_NAMES.join(", ")))),
    }
}

/// Every fixture at its default parameters (`ε = 0`).
pub fn fixture_catalog() -> Result<Vec<Fixture>> {
    FIXTURE_NAMES.iter().map(|n| fixture_by_name(n, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_acceptance_tracks_eps() {
        for eps in [0.0, 0.1, 0.25] {
            let f = m4_chain(eps).unwrap();
            assert!((f.truth.p_acc.value - (1.0 - eps)).abs() < 1e-9);
            assert!(f.truth.view_distances.value.iter().all(|&d| d < 1e-9));
        }
    }

    #[test]
    fn chain_no_instance_is_half() {
        let f = m4_chain_no(0.1).unwrap();
        assert!((f.truth.cheat.value - (1.0 - CHAIN_DELTA)).abs() < 1e-9);
    }

    #[test]
    fn unveil_yes_and_no() {
        let f = unveil(0.0).unwrap();
        assert!((f.truth.p_acc.value - 1.0).abs() < 1e-12);
        assert!(f.truth.view_distances.value.iter().all(|&d| d < 1e-12));
        assert!(crate::qip::is_public_coin(&f.ps));
        let g = unveil_no().unwrap();
        let opt = 1.0 - UNVEIL_DELTA;
        assert!((g.truth.cheat.value - opt).abs() < 1e-6, "{}", g.truth.cheat.value);
        assert!((g.truth.p_acc.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fail_sim_has_block_form() {
        let f = m4_chain(1.0 / 3.0).unwrap();
        let sim = m4_chain_fail_sim(&f.ps, 0.25).unwrap();
        let form = crate::zk::check_fail_form(&f.ps, &f.honest, &sim).unwrap();
        assert!(form.probabilities.iter().all(|&p| (p - 0.25).abs() < 1e-12));
        let mix = m4_chain_fail_mixture(&f.ps, 0.25).unwrap();
        let form = crate::zk::check_fail_form(&f.ps, &f.honest, &mix).unwrap();
        assert!(form.probabilities.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    }
}
