use proptest::prelude::*;

use qzk::circuits::Circuit;
use qzk::fixtures::{fixture_catalog, m4_chain, unveil, CHAIN_DELTA};
use qzk::qip::{is_public_coin, run, views, ProofSystem, ProverStrategy};
use qzk::simulator::SimulatorEnsemble;
use qzk::zk::{hv_check, HvMode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chain_acceptance_and_views(eps in 0.0f64..1.0) {
        let f = m4_chain(eps).unwrap();
        let (p, state) = run(&f.ps, &f.honest).unwrap();
        prop_assert!((p - (1.0 - eps)).abs() < 1e-10);
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        let vs = views(&f.ps, &f.honest).unwrap();
        prop_assert_eq!(vs.len(), f.ps.prover_turns());
        for v in &vs {
            prop_assert!((v.state.trace() - 1.0).abs() < 1e-10);
        }
        prop_assert!(hv_check(&f.ps, &f.honest, &f.sim, HvMode::Perfect).unwrap().passed);
    }

    #[test]
    fn unveil_acceptance(eps in 0.0f64..1.0) {
        let f = unveil(eps).unwrap();
        prop_assert!((run(&f.ps, &f.honest).unwrap().0 - (1.0 - eps)).abs() < 1e-10);
        prop_assert!(is_public_coin(&f.ps));
    }
}

#[test]
fn honest_replay_simulates_any_prover_exactly() {
    let ps = ProofSystem::normal_form(1, 1, 4, vec![Circuit::new(qzk::qla::RegisterLayout::new([("V", 1), ("M", 1)]).unwrap()); 3], 0).unwrap();
    let mut pr = ProverStrategy::idle(&ps, 1).unwrap();
    let exec = ps.exec_layout(1).unwrap();
    pr.circuits[0].h(exec.wire("M", 0).unwrap()).unwrap();
    pr.circuits[1].cnot(exec.wire("M", 0).unwrap(), exec.wire("P", 0).unwrap()).unwrap();
    let sim = SimulatorEnsemble::honest_replay(&ps, &pr).unwrap();
    assert!(hv_check(&ps, &pr, &sim, HvMode::Perfect).unwrap().passed);
}

#[test]
fn fixture_ground_truth_is_consistent() {
    for f in fixture_catalog().unwrap() {
        assert!((0.0..=1.0).contains(&f.truth.p_acc.value), "{}", f.name);
        assert!(f.truth.cheat.value >= f.truth.p_acc.value - 1e-9, "{}: the honest prover is one strategy", f.name);
        assert!(f.truth.view_distances.value.iter().all(|&d| d < 1e-9), "{}", f.name);
        if f.name == "m4-chain-no" {
            assert!((f.truth.cheat.value - (1.0 - CHAIN_DELTA)).abs() < 1e-9);
        }
    }
}

#[test]
fn prover_touching_private_verifier_wires_is_rejected() {
    let f = m4_chain(0.0).unwrap();
    let mut pr = f.honest.clone();
    let exec = f.ps.exec_layout(pr.width).unwrap();
    pr.circuits[0].x(exec.wire("V", 0).unwrap()).unwrap();
    assert!(pr.validate(&f.ps).is_err());
}
