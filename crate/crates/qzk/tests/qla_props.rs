use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qzk::linalg;
use qzk::qla::{fidelity, partial_trace, purify, trace_norm, uhlmann_align, DensityMatrix, LowRankState, PureState, RegisterLayout};

fn pair(seed: u64, n: usize) -> (DensityMatrix, DensityMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 << n;
    let a = DensityMatrix::new(linalg::random_density(d, 1 + (seed as usize) % d, &mut rng)).unwrap();
    let b = DensityMatrix::new(linalg::random_density(d, 1 + (seed as usize / 7) % d, &mut rng)).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fuchs_van_de_graaf(seed in any::<u64>(), n in 1usize..4) {
        let (a, b) = pair(seed, n);
        let f = fidelity(&a, &b).unwrap();
        let t = 0.5 * trace_norm(&(a.matrix() - b.matrix())).unwrap();
        prop_assert!(1.0 - f <= t + 1e-9, "1 - F = {} > T = {}", 1.0 - f, t);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn uhlmann_alignment_attains_fidelity(seed in any::<u64>(), n in 1usize..3) {
        let (a, b) = pair(seed, n);
        let (pa, layout) = purify(&a).unwrap();
        let (pb, _) = purify(&b).unwrap();
        let u = uhlmann_align(&pa, &pb, &layout, "REF").unwrap();
        prop_assert!(linalg::is_unitary(&u));
        let full = nalgebra::DMatrix::identity(1 << n, 1 << n).kronecker(&u);
        let overlap = pb.amplitudes().dotc(&(full * pa.amplitudes())).norm();
        // Square roots of near-zero eigenvalues of rank-deficient inputs carry ~1e-8 errors.
        prop_assert!((overlap - fidelity(&a, &b).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn low_rank_distance_matches_dense(seed in any::<u64>(), n in 1usize..4) {
        let (a, b) = pair(seed, n);
        let dense = trace_norm(&(a.matrix() - b.matrix())).unwrap();
        let low = LowRankState::from_density(&a).trace_distance(&LowRankState::from_density(&b)).unwrap();
        prop_assert!((dense - low).abs() < 1e-9);
        prop_assert!(dense <= 2.0 + 1e-12);
    }

    #[test]
    fn partial_trace_keeps_trace_and_positivity(seed in any::<u64>()) {
        let (a, b) = pair(seed, 1);
        let joint = a.kron(&b);
        let layout = RegisterLayout::new([("A", 1), ("B", 1)]).unwrap();
        let left = partial_trace(&joint, &layout, &["A"]).unwrap();
        prop_assert!((left.matrix() - a.matrix()).iter().all(|z| z.norm() < 1e-12));
        prop_assert!(left.eigenvalues().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), d in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(linalg::is_unitary(&linalg::haar_unitary(d, &mut rng)));
    }
}

#[test]
fn orthogonal_states_are_fully_distinguishable() {
    let a = PureState::basis(2, 0).density();
    let b = PureState::basis(2, 3).density();
    assert!((trace_norm(&(a.matrix() - b.matrix())).unwrap() - 2.0).abs() < 1e-12);
    assert!(fidelity(&a, &b).unwrap() < 1e-12);
}

#[test]
fn invalid_states_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = linalg::random_vector(4, &mut rng) * qzk::qla::C64::new(2.0, 0.0);
    assert!(PureState::new(v).is_err());
    assert!(PureState::new(nalgebra::DVector::zeros(3)).is_err());
}
