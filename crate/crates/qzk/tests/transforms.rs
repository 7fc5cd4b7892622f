use qzk::analysis::{optimize_prover, AttackConfig};
use qzk::circuits::Circuit;
use qzk::fixtures::{m4_chain, unveil};
use qzk::qip::{is_public_coin, run, ProofSystem, ProverStrategy};
use qzk::qla::RegisterLayout;
use qzk::simulator::SimulatorEnsemble;
use qzk::transforms::{make_perfect_complete, parallel_repeat, parallelize, sequential_repeat, to_public_coin, transform_by_name, transform_names, Guarantee, Instance, TransformArgs};
use qzk::zk::{hv_check, HvMode};
use qzk::QzkError;

fn acceptance(inst: &Instance) -> f64 {
    run(&inst.ps, &inst.honest).unwrap().0
}

/// Three-message system whose verifier never accepts.
fn always_reject() -> Instance {
    let vm = RegisterLayout::new([("V", 1), ("M", 1)]).unwrap();
    let ps = ProofSystem::normal_form(1, 1, 3, vec![Circuit::new(vm.clone()), Circuit::new(vm)], 0).unwrap();
    let pr = ProverStrategy::idle(&ps, 1).unwrap();
    let sim = SimulatorEnsemble::honest_replay(&ps, &pr).unwrap();
    Instance::new(ps, pr, sim).unwrap()
}

#[test]
fn single_copy_repetitions_keep_acceptance() {
    let f = unveil(0.3).unwrap();
    let g = f.guarantee().unwrap();
    let (par, _) = parallel_repeat(&f.instance().unwrap(), &g, 1).unwrap();
    assert!((acceptance(&par) - 0.7).abs() < 1e-10);
    let (seq, rep) = sequential_repeat(&f.instance().unwrap(), &g, 1, 1).unwrap();
    assert!((acceptance(&seq) - 0.7).abs() < 1e-10);
    assert!((rep.completeness.value - 0.7).abs() < 1e-12);
}

#[test]
fn repetition_parameters_are_checked() {
    let f = unveil(0.0).unwrap();
    let g = f.guarantee().unwrap();
    assert!(matches!(parallel_repeat(&f.instance().unwrap(), &g, 0), Err(QzkError::Parameter(_))));
    assert!(matches!(sequential_repeat(&f.instance().unwrap(), &g, 2, 3), Err(QzkError::Parameter(_))));
}

#[test]
fn parallelized_chain_is_three_message_but_not_public_coin() {
    let f = m4_chain(0.3).unwrap();
    let (out, report) = parallelize(&f.instance().unwrap(), &f.guarantee().unwrap()).unwrap();
    assert_eq!(out.ps.messages, 3);
    assert!(!is_public_coin(&out.ps));
    assert!(acceptance(&out) >= report.completeness.value - 1e-9);
    assert!(hv_check(&out.ps, &out.honest, &out.sim, HvMode::Perfect).unwrap().passed);
}

#[test]
fn parallelize_pads_odd_message_counts() {
    let f = unveil(0.2).unwrap();
    let (out, _) = parallelize(&f.instance().unwrap(), &f.guarantee().unwrap()).unwrap();
    assert_eq!(out.ps.messages, 3);
    // Two input prover turns after padding: three snapshot slots plus the honest prover's copies.
    assert!(matches!(run(&out.ps, &out.honest), Err(QzkError::CapExceeded { .. })));
}

#[test]
fn public_coin_of_an_always_rejecting_system_is_capped_at_one_half() {
    let inst = always_reject();
    let (out, report) = to_public_coin(&inst, &Guarantee::new(1.0, 1.0).unwrap()).unwrap();
    assert!((report.soundness.value - 0.5).abs() < 1e-12);
    let best = optimize_prover(&out.ps, &AttackConfig { restarts: 3, iters: 100, ..Default::default() }).unwrap().best_p;
    assert!(best <= 0.5 + 1e-6, "{best}");
}

#[test]
fn public_coin_needs_three_messages() {
    let f = m4_chain(0.0).unwrap();
    assert!(matches!(to_public_coin(&f.instance().unwrap(), &f.guarantee().unwrap()), Err(QzkError::Arity(_))));
}

#[test]
fn perfect_completeness_checks_the_stated_acceptance() {
    let f = m4_chain(0.1).unwrap();
    let inst = f.instance().unwrap();
    let g = f.guarantee().unwrap();
    assert!(matches!(make_perfect_complete(&inst, &g, 0.95), Err(QzkError::Precondition(_))));
    let (out, _) = make_perfect_complete(&inst, &g, 0.9).unwrap();
    assert!((acceptance(&out) - 1.0).abs() < 1e-9);
    assert_eq!(out.ps.messages, 6);
}

#[test]
fn registry_transforms_apply_by_name() {
    for name in transform_names() {
        let f = if name == "parallelize" { m4_chain(0.1) } else { unveil(0.1) }.unwrap();
        let (out, report) = transform_by_name(name, &TransformArgs::default()).unwrap().apply(&f.instance().unwrap(), &f.guarantee().unwrap()).unwrap();
        assert_eq!(report.transform, name);
        assert!(acceptance(&out) >= report.completeness.value - 1e-9, "{name}");
    }
}
