use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qkd_rawdata::infotheory::{entanglement_numbers, hsw_bound, phi, wootters_concurrence};
use qkd_rawdata::linalg::{
    c, eig_hermitian, inv_sqrt_pd, partial_trace, random_density, random_hermitian, random_unitary,
    von_neumann_entropy, ComplexMatrix, DensityOperator, Keep, Ket,
};
use qkd_rawdata::povm::{accessible_info, Povm};
use qkd_rawdata::states::{
    ancilla_ensemble, bell_diagonal_state, conditioned_ancilla, expected_table, joint_table,
    purification, Ensemble, FamilyPoint, PauliCoefficients,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A feasible family point from two unit-interval draws.
fn point(u: f64, v: f64) -> FamilyPoint {
    let eps = u;
    let hi = 2.0 * eps - 1.0;
    FamilyPoint::feasible(eps, -1.0 + v * (hi + 1.0)).unwrap()
}

fn random_povm(dim: usize, outcomes: usize, r: &mut ChaCha8Rng) -> Povm {
    let raw: Vec<Ket> = (0..outcomes)
        .map(|_| {
            Ket::from_iterator(
                dim,
                (0..dim).map(|_| c(r.sample(StandardNormal), r.sample(StandardNormal))),
            )
        })
        .collect();
    let mut frame = ComplexMatrix::zeros(dim);
    for v in &raw {
        frame = &frame + &ComplexMatrix::outer(v);
    }
    let w = inv_sqrt_pd(&frame, 1e-12).expect("frame spans the space");
    let kets: Vec<Ket> = raw.iter().map(|v| w.apply(v)).collect();
    Povm::from_kets(&kets).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=8) {
        let m = random_hermitian(dim, &mut rng(seed));
        let s = eig_hermitian(&m).unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&m) < 1e-10);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4, t in -2.0f64..2.0) {
        let mut r = rng(seed);
        let x = random_hermitian(da * db, &mut r);
        let y = random_hermitian(da * db, &mut r);
        for keep in [Keep::First, Keep::Second] {
            let lhs = partial_trace(&(&x + &y.scale(t)), (da, db), keep).unwrap();
            let rhs = &partial_trace(&x, (da, db), keep).unwrap() + &partial_trace(&y, (da, db), keep).unwrap().scale(t);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            prop_assert!((lhs.trace() - (&x + &y.scale(t)).trace()).norm() < 1e-10);
        }
        let a = random_hermitian(da, &mut r);
        let b = random_hermitian(db, &mut r);
        let ab = a.kron(&b);
        let reduced = partial_trace(&ab, (da, db), Keep::First).unwrap();
        let expected = a.scale(b.trace().re);
        prop_assert!(reduced.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), dim in 1usize..=6) {
        let mut r = rng(seed);
        let rho = random_density(dim, &mut r);
        let u = random_unitary(dim, &mut r);
        let rotated = DensityOperator::normalized((&(&u * rho.matrix()) * &u.adjoint()).hermitian_part()).unwrap();
        prop_assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rotated)).abs() < 1e-9);
        prop_assert!(von_neumann_entropy(&rho) <= (dim as f64).log2() + 1e-12);
    }

    #[test]
    fn pauli_coefficients_round_trip(seed in any::<u64>()) {
        let rho = random_density(4, &mut rng(seed));
        let coeffs = PauliCoefficients::decompose(rho.matrix()).unwrap();
        prop_assert!(coeffs.compose().max_abs_diff(rho.matrix()) < 1e-12);
        prop_assert!((coeffs.c[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_table_is_blind_to_c22(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let p = point(u, v);
        let t = joint_table(&bell_diagonal_state(&p).unwrap()).unwrap();
        prop_assert!(t.max_abs_diff(&expected_table(p.epsilon)) <= 1e-12);
        prop_assert!((t.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn separability_plus_concurrence_is_one(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let p = point(u, v);
        let n = entanglement_numbers(&p).unwrap();
        prop_assert!((n.separability + n.concurrence - 1.0).abs() <= 1e-12);
        let general = wootters_concurrence(&bell_diagonal_state(&p).unwrap()).unwrap();
        prop_assert!((general - n.concurrence).abs() <= 1e-9);
    }

    #[test]
    fn holevo_bounds_accessible_information(seed in any::<u64>(), dim in 2usize..=4, members in 2usize..=4, outcomes in 2usize..=8) {
        let mut r = rng(seed);
        let outcomes = outcomes.max(dim);
        let raw: Vec<f64> = (0..members).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let priors = raw.iter().map(|p| p / total).collect();
        let states = (0..members).map(|_| random_density(dim, &mut r)).collect();
        let ensemble = Ensemble::new(priors, states).unwrap();
        let m = random_povm(dim, outcomes, &mut r);
        prop_assert!(m.validate().is_ok());
        let info = accessible_info(&ensemble, &m).unwrap();
        prop_assert!(info <= hsw_bound(&ensemble) + 1e-10, "{info} > {}", hsw_bound(&ensemble));
    }

    #[test]
    fn phi_is_increasing_and_convex(a in 0.0f64..=1.0, b in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(phi(lo).unwrap() <= phi(hi).unwrap() + 1e-15);
        let mid = t * lo + (1.0 - t) * hi;
        prop_assert!(phi(mid).unwrap() <= t * phi(lo).unwrap() + (1.0 - t) * phi(hi).unwrap() + 1e-12);
        prop_assert!((0.0..=1.0).contains(&phi(a).unwrap()));
    }
}

#[test]
fn purification_grid() {
    for i in 0..20 {
        for j in 0..20 {
            let p = point(i as f64 / 19.0, j as f64 / 19.0);
            let pur = purification(&p).unwrap();
            let reduced =
                partial_trace(&ComplexMatrix::outer(&pur.state), (4, 4), Keep::First).unwrap();
            let rho = bell_diagonal_state(&p).unwrap();
            assert!(reduced.max_abs_diff(rho.matrix()) < 1e-12, "{p:?}");

            let closed = conditioned_ancilla(&p).unwrap();
            let projected = ancilla_ensemble(&pur.state).unwrap();
            for k in 0..4 {
                assert!((closed.priors[k] - projected.priors[k]).abs() < 1e-12);
                let diff = closed.states[k]
                    .matrix()
                    .max_abs_diff(projected.states[k].matrix());
                assert!(diff < 1e-12, "{p:?} member {k}: {diff}");
            }
        }
    }
}
