use approx::assert_relative_eq;
use proptest::prelude::*;
use qubit_riccati::numerics::{
    eigh, frobenius, identity, unitary_exp, ComplexMatrix, Propagator, TOL_EIG_PER_DIM, TOL_HERM,
};
use qubit_riccati::oracle::{random_block_hamiltonian, random_hermitian, trial_rng};
use qubit_riccati::riccati::{solve_invariant_subspace, SolverTolerances, Strategy};
use qubit_riccati::stationary::{all_stationary_states, is_density_matrix};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), n in 1usize..16) {
        let a = random_hermitian(&mut trial_rng(seed, 0), n);
        let eig = eigh(&a, TOL_HERM).unwrap();
        let tol_eig = TOL_EIG_PER_DIM * n as f64;
        prop_assert!(frobenius(&(&a - eig.reconstruct())) <= 10.0 * tol_eig * frobenius(&a).max(1.0));
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
        assert_relative_eq!(eig.eigenvalues.iter().sum::<f64>(), trace, epsilon = 1e-10 * n as f64);
    }

    #[test]
    fn unitary_group_property(seed in any::<u64>(), n in 1usize..64, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let h = random_hermitian(&mut trial_rng(seed, 1), n);
        let prop = Propagator::new(&h, TOL_HERM).unwrap();
        let lhs = prop.at(t1 + t2);
        let rhs = prop.at(t1) * prop.at(t2);
        prop_assert!(frobenius(&(&lhs - &rhs)) <= 1e-10 * n as f64);
        prop_assert!(frobenius(&(lhs.adjoint() * &lhs - identity(n))) <= 1e-10 * n as f64);
    }

    #[test]
    fn unitary_exp_at_zero_is_identity(seed in any::<u64>(), n in 1usize..10) {
        let h = random_hermitian(&mut trial_rng(seed, 2), n);
        let u = unitary_exp(&h, 0.0).unwrap();
        prop_assert!(frobenius(&(u - identity(n))) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every state produced from an accepted solution is a valid qubit
    /// density matrix and its propagated reduced state does not move.
    #[test]
    fn states_are_physical(seed in any::<u64>(), n in 1usize..4) {
        let h = random_block_hamiltonian(&mut trial_rng(seed, 3), n);
        let sols = solve_invariant_subspace(&h, &Strategy::MaxInvertibility, &SolverTolerances::default()).unwrap();
        let sol = &sols[0];
        let states = all_stationary_states(&h, sol).unwrap();
        prop_assert_eq!(states.len(), 2 * n);
        for s in &states {
            prop_assert!(is_density_matrix(&s.rho, 1e-12));
        }
        let mut energies: Vec<f64> = states.iter().map(|s| s.eigenvalue.unwrap()).collect();
        energies.sort_by(f64::total_cmp);
        let full = eigh(&h.full(), TOL_HERM).unwrap().eigenvalues;
        for (a, b) in energies.iter().zip(&full) {
            prop_assert!((a - b).abs() <= 1e-8 * frobenius(&h.full()).max(1.0));
        }
    }

    #[test]
    fn rotation_preserves_block_spectrum(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = trial_rng(seed, 4);
        let h = random_hermitian(&mut rng, n);
        let u = eigh(&random_hermitian(&mut rng, n), TOL_HERM).unwrap().eigenvectors;
        let rotated: ComplexMatrix = &u * &h * u.adjoint();
        let a = eigh(&h, TOL_HERM).unwrap().eigenvalues;
        let b = eigh(&rotated, TOL_HERM).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }
}
