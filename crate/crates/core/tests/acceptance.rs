//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use qubit_riccati::model::{
    build_commuting, build_equal_diagonal, build_spin_boson, CommutingParams,
    SpinBosonParams,
};
use qubit_riccati::numerics::{c, diag_real, eigh, frobenius, ComplexMatrix, TOL_HERM};
use qubit_riccati::oracle::{run_oracle, OracleConfig, OracleSummary};
use qubit_riccati::riccati::{
    analytic_solutions, commuting_f, residual_dual, residual_primal, solve_invariant_subspace,
    AnalyticModel, SolverTolerances, Strategy,
};
use qubit_riccati::stationary::{all_stationary_states, expectation, Branch, RiccatiState};
use qubit_riccati::verify::{
    check_nonstationary_control, check_similarity, check_stationarity, control_superposition,
    spectrum_union_defect, DEFAULT_TIMES,
};
use qubit_riccati::{BlockHamiltonian, ModelKind, RiccatiSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spin_boson(n_env: usize, g: f64, alpha: f64) -> (BlockHamiltonian, ComplexMatrix) {
    let p = SpinBosonParams { n_env, omega: 1.0, g: c(g, 0.0), alpha, beta: 0.0 };
    let (h, ops) = build_spin_boson(&p).expect("valid parameters");
    (h, ops.parity)
}

fn parity_solution(h: &BlockHamiltonian) -> RiccatiSolution {
    analytic_solutions(h, AnalyticModel::SpinBoson).expect("beta = 0").remove(0)
}

/// 1. `X = P` solves both equations at truncation.
fn parity_exactness() -> Outcome {
    let (h, p) = spin_boson(16, 0.2, 0.5);
    let norm = h.full_norm();
    let primal = frobenius(&residual_primal(&h, &p).map_err(|e| e.to_string())?);
    let dual = frobenius(&residual_dual(&h, &(-&p)).map_err(|e| e.to_string())?);
    ensure(primal <= 1e-10 * norm, || format!("primal residual {primal:.3e}"))?;
    ensure(dual <= 1e-10 * norm, || format!("dual residual {dual:.3e}"))?;
    Ok(format!("primal {primal:.2e}, dual {dual:.2e}, 1e-10*|H| = {:.2e}", 1e-10 * norm))
}

/// 2. All 32 states are stationary; the superposition control moves.
fn stationarity() -> Outcome {
    let (h, _) = spin_boson(16, 0.2, 0.5);
    let sol = parity_solution(&h);
    let states = all_stationary_states(&h, &sol).map_err(|e| e.to_string())?;
    ensure(states.len() == 32, || format!("{} states", states.len()))?;
    let mut worst: f64 = 0.0;
    for s in &states {
        worst = worst.max(check_stationarity(&h, s, &DEFAULT_TIMES).map_err(|e| e.to_string())?);
    }
    ensure(worst <= 1e-8, || format!("stationarity defect {worst:.3e}"))?;
    let (psi, gap) = control_superposition(&h, &sol.x)
        .map_err(|e| e.to_string())?
        .ok_or("no control pair")?;
    let control = check_nonstationary_control(&h, &sol.x, &psi, &DEFAULT_TIMES).map_err(|e| e.to_string())?;
    ensure(control.deviation > 1e-3, || format!("control deviation {:.3e}", control.deviation))?;
    Ok(format!(
        "max defect {worst:.2e} over {} states; control deviation {:.3e} (gap {gap:.3})",
        states.len(),
        control.deviation
    ))
}

fn r_values(states: &[RiccatiState], p: &ComplexMatrix) -> Vec<qubit_riccati::C64> {
    states.iter().map(|s| expectation(p, &s.source.env_vector)).collect()
}

/// 3. `r = <psi|P|psi>` is real and in `[-1, 1]` across the sweep.
fn spin_boson_bound() -> Outcome {
    let mut count = 0;
    let mut max_abs: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for alpha in [0.0, 0.25, 0.5] {
        for k in 0..=10 {
            let g = k as f64 / 10.0;
            let (h, p) = spin_boson(32, g, alpha);
            let states = all_stationary_states(&h, &parity_solution(&h)).map_err(|e| e.to_string())?;
            for (s, r) in states.iter().zip(r_values(&states, &p)) {
                max_abs = max_abs.max(r.re.abs());
                max_im = max_im.max(r.im.abs());
                // The printed form 1/2 [[1, ±r], [±r, 1]] of every state.
                let off = 2.0 * s.rho[(0, 1)].re;
                let sign = if s.kind() == Branch::Graph { 1.0 } else { -1.0 };
                ensure((off - sign * r.re).abs() <= 1e-12, || format!("rho form off at g={g} alpha={alpha}"))?;
                count += 1;
            }
        }
    }
    ensure(max_im <= 1e-12, || format!("imaginary part {max_im:.3e}"))?;
    ensure(max_abs <= 1.0 + 1e-12, || format!("|r| up to {max_abs}"))?;
    Ok(format!("{count} states, max |r| = {max_abs:.15}, max |Im r| = {max_im:.1e}"))
}

/// 4. Dephasing limit: ground state is a coherent state, `<P> = exp(-2 g^2)`.
fn dephasing_closed_form() -> Outcome {
    let mut parts = Vec::new();
    for g in [0.25, 0.5] {
        let (h, p) = spin_boson(40, g, 0.0);
        let states = all_stationary_states(&h, &parity_solution(&h)).map_err(|e| e.to_string())?;
        let ground = states
            .iter()
            .filter(|s| s.kind() == Branch::Graph)
            .min_by(|a, b| a.eigenvalue.unwrap().total_cmp(&b.eigenvalue.unwrap()))
            .ok_or("no graph states")?;
        let r = expectation(&p, &ground.source.env_vector).re;
        let expected = (-2.0 * g * g).exp();
        ensure((r - expected).abs() <= 1e-6, || format!("g={g}: r={r}, expected {expected}"))?;
        let e0 = ground.eigenvalue.unwrap();
        ensure((e0 + g * g).abs() <= 1e-8, || format!("g={g}: ground energy {e0}"))?;
        parts.push(format!("g={g}: r={r:.10} (exp {expected:.10})"));
    }
    Ok(parts.join(", "))
}

fn random_unitary(rng: &mut ChaCha20Rng, n: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let herm = (&a + a.adjoint()) * c(0.5, 0.0);
    eigh(&herm, TOL_HERM).unwrap().eigenvectors
}

/// Eigenvectors `[u; v]` of the full Hamiltonian with `Re <u|v> > 0`: the
/// branch on which `X` is positive.
fn positive_branch_selection(h: &BlockHamiltonian) -> Vec<usize> {
    let eig = eigh(&h.full(), TOL_HERM).unwrap();
    let n = h.n_env;
    (0..2 * n)
        .filter(|&k| {
            let w = eig.vector(k);
            w.rows(0, n).dotc(&w.rows(n, n)).re > 0.0
        })
        .collect()
}

/// 5. Commuting environment: `X = f(H1)` and the closed-form states.
fn commuting_closed_form() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let n = 8;
    let mut worst_x: f64 = 0.0;
    let mut worst_rho: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for alpha in [0.5, 2.0] {
        for rotated in [false, true] {
            let lambdas: Vec<f64> = (0..n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let xis: Vec<f64> = (0..n).map(|k| k as f64 - 3.5 + 0.4 * rng.random::<f64>()).collect();
            let rotation = rotated.then(|| random_unitary(&mut rng, n));
            let p = CommutingParams { lambdas: lambdas.clone(), xis: xis.clone(), alpha, basis_rotation: rotation.clone() };
            let h = build_commuting(&p).map_err(|e| e.to_string())?;
            let selection = positive_branch_selection(&h);
            ensure(selection.len() == n, || format!("branch selection has {} vectors", selection.len()))?;
            let sol = solve_invariant_subspace(&h, &Strategy::Explicit(selection), &SolverTolerances::default())
                .map_err(|e| e.to_string())?
                .remove(0);
            let fdiag = diag_real(&xis.iter().map(|&x| commuting_f(x, alpha)).collect::<Vec<_>>());
            let f_h1 = match &rotation {
                Some(r) => r * fdiag * r.adjoint(),
                None => fdiag,
            };
            let dx = frobenius(&(&sol.x - &f_h1));
            worst_x = worst_x.max(dx);
            ensure(dx <= 1e-8, || format!("alpha={alpha}: |X - f(H1)| = {dx:.3e}"))?;

            let basis = rotation.unwrap_or_else(|| ComplexMatrix::identity(n, n));
            let states = all_stationary_states(&h, &sol).map_err(|e| e.to_string())?;
            for s in &states {
                let v = &s.source.env_vector;
                let k = (0..n)
                    .max_by(|&a, &b| basis.column(a).dotc(v).norm().total_cmp(&basis.column(b).dotc(v).norm()))
                    .unwrap();
                let f = commuting_f(xis[k], alpha);
                let cn = 1.0 / (1.0 + f * f);
                let (expected, energy) = match s.kind() {
                    Branch::Graph => ([1.0, f, f, f * f], lambdas[k] + (xis[k].powi(2) + alpha * alpha).sqrt()),
                    Branch::Complement => ([f * f, -f, -f, 1.0], lambdas[k] - (xis[k].powi(2) + alpha * alpha).sqrt()),
                };
                for (idx, e) in expected.iter().enumerate() {
                    let d = (s.rho[(idx / 2, idx % 2)] - c(cn * e, 0.0)).norm();
                    worst_rho = worst_rho.max(d);
                }
                worst_e = worst_e.max((s.eigenvalue.unwrap() - energy).abs());
            }
            ensure(worst_rho <= 1e-10, || format!("alpha={alpha}: state mismatch {worst_rho:.3e}"))?;
            ensure(worst_e <= 1e-8, || format!("alpha={alpha}: eigenvalue mismatch {worst_e:.3e}"))?;
        }
    }
    Ok(format!("|X - f(H1)| <= {worst_x:.2e}, state mismatch <= {worst_rho:.2e}, lambda+-sqrt(xi^2+alpha^2) within {worst_e:.1e}"))
}

fn spectrum_and_similarity(h: &BlockHamiltonian, sol: &RiccatiSolution) -> Result<(f64, f64), String> {
    let union = spectrum_union_defect(h, sol).map_err(|e| e.to_string())? / h.full_norm();
    let sim = check_similarity(h, sol);
    ensure(sim.sigma_min >= 1.0 - 1e-12, || format!("sigma_min(S) = {}", sim.sigma_min))?;
    Ok((union, sim.defect))
}

/// 6. Spectrum union and block similarity, on every accepted solution built here.
fn spectrum_union(oracle: &[OracleSummary]) -> Outcome {
    let mut cases: Vec<(String, BlockHamiltonian, RiccatiSolution)> = Vec::new();
    let (h, _) = spin_boson(16, 0.2, 0.5);
    cases.push(("spin-boson".into(), h.clone(), parity_solution(&h)));
    for alpha in [0.5, 2.0] {
        let p = CommutingParams {
            lambdas: vec![0.3, -1.0, 0.8, 0.0, 1.7, -0.4, 2.2, -2.0],
            xis: vec![-3.1, -2.0, -0.7, 0.1, 0.9, 1.6, 2.4, 3.3],
            alpha,
            basis_rotation: None,
        };
        let h = build_commuting(&p).map_err(|e| e.to_string())?;
        let sol = analytic_solutions(&h, AnalyticModel::Commuting).map_err(|e| e.to_string())?.remove(0);
        cases.push((format!("commuting alpha={alpha}"), h, sol));
    }
    let (h0, v) = equal_diagonal_blocks();
    let h = build_equal_diagonal(&h0, &v).map_err(|e| e.to_string())?;
    for sol in analytic_solutions(&h, AnalyticModel::EqualDiagonal).map_err(|e| e.to_string())? {
        cases.push(("equal-diagonal".into(), h.clone(), sol));
    }
    let mut worst_union: f64 = 0.0;
    let mut worst_sim: f64 = 0.0;
    for (name, h, sol) in &cases {
        let (u, s) = spectrum_and_similarity(h, sol)?;
        ensure(u <= 1e-8, || format!("{name}: spectrum union {u:.3e}"))?;
        ensure(s <= 1e-9, || format!("{name}: similarity {s:.3e}"))?;
        worst_union = worst_union.max(u);
        worst_sim = worst_sim.max(s);
    }
    // Oracle instances: every exhaustive solution was certified with the same bounds.
    let mut oracle_solutions = 0;
    for summary in oracle {
        for t in &summary.trials {
            oracle_solutions += t.exhaustive_solutions;
            let s = t.similarity_defects.iter().copied().fold(0.0, f64::max);
            ensure(s <= 1e-9, || format!("oracle N={} trial {}: similarity {s:.3e}", t.n, t.trial))?;
            worst_sim = worst_sim.max(s);
        }
    }
    Ok(format!(
        "{} model solutions + {oracle_solutions} oracle solutions; union <= {worst_union:.2e}|H|, similarity <= {worst_sim:.2e}",
        cases.len()
    ))
}

fn equal_diagonal_blocks() -> (ComplexMatrix, ComplexMatrix) {
    let h0 = ComplexMatrix::from_row_slice(
        3,
        3,
        &[c(0.0, 0.0), c(0.3, 0.1), c(0.0, 0.0), c(0.3, -0.1), c(1.0, 0.0), c(0.2, 0.0), c(0.0, 0.0), c(0.2, 0.0), c(2.5, 0.0)],
    );
    let v = ComplexMatrix::from_row_slice(
        3,
        3,
        &[c(0.4, 0.0), c(0.0, 0.5), c(0.1, 0.0), c(0.0, -0.5), c(-0.2, 0.0), c(0.3, 0.2), c(0.1, 0.0), c(0.3, -0.2), c(0.0, 0.0)],
    );
    (h0, v)
}

/// 7. `V = 0` gives `X = 0` and the two projectors; `H+ = H-`, `V = V^dagger` gives `X = ±I`.
fn sylvester_and_identity_cases() -> Outcome {
    let h = BlockHamiltonian::new(
        ComplexMatrix::from_row_slice(3, 3, &[c(0.0, 0.0), c(0.5, 0.2), c(0.0, 0.0), c(0.5, -0.2), c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.1, 0.0), c(2.0, 0.0)]),
        diag_real(&[-1.3, 0.4, 3.1]),
        ComplexMatrix::zeros(3, 3),
        ModelKind::Custom,
    )
    .map_err(|e| e.to_string())?;
    let analytic = analytic_solutions(&h, AnalyticModel::ZeroCoupling).map_err(|e| e.to_string())?.remove(0);
    let numeric = solve_invariant_subspace(&h, &Strategy::MaxInvertibility, &SolverTolerances::default())
        .map_err(|e| e.to_string())?
        .remove(0);
    ensure(frobenius(&analytic.x) == 0.0, || "analytic X nonzero".into())?;
    ensure(frobenius(&numeric.x) <= 1e-12, || format!("numeric |X| = {:.3e}", frobenius(&numeric.x)))?;
    let states = all_stationary_states(&h, &analytic).map_err(|e| e.to_string())?;
    for s in &states {
        let expected = match s.kind() {
            Branch::Graph => diag_real(&[1.0, 0.0]),
            Branch::Complement => diag_real(&[0.0, 1.0]),
        };
        ensure(s.rho == expected, || format!("projector state {:?}", s.rho))?;
    }

    let (h0, v) = equal_diagonal_blocks();
    let h = build_equal_diagonal(&h0, &v).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for sol in analytic_solutions(&h, AnalyticModel::EqualDiagonal).map_err(|e| e.to_string())? {
        let sign = sol.x[(0, 0)].re;
        for s in all_stationary_states(&h, &sol).map_err(|e| e.to_string())? {
            let eps = if s.kind() == Branch::Graph { sign } else { -sign };
            let expected = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5 * eps, 0.0), c(0.5 * eps, 0.0), c(0.5, 0.0)]);
            worst = worst.max((&s.rho - expected).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    ensure(worst <= 1e-12, || format!("±I states off by {worst:.3e}"))?;
    Ok(format!("{} projector states exact; ±I states within {worst:.1e}", states.len()))
}

/// Criterion 8: Newton from random starts lands on the exhaustive list;
/// every listed solution certifies.
fn oracle_equivalence(oracle: &[OracleSummary], elapsed: f64) -> Outcome {
    let mut trials = 0;
    let mut converged = 0;
    let mut solutions = 0;
    for summary in oracle {
        if let Some(t) = summary.failed().next() {
            return Err(format!(
                "N={} trial {} (seed {}): {}",
                t.n,
                t.trial,
                summary.config.seed,
                t.failure.clone().unwrap_or_default()
            ));
        }
        for t in &summary.trials {
            trials += 1;
            converged += t.newton_converged();
            solutions += t.exhaustive_solutions;
            ensure(t.newton_matched() == t.newton_converged(), || format!("trial {} unmatched", t.trial))?;
            ensure(t.certified.iter().all(|&ok| ok), || format!("trial {} uncertified", t.trial))?;
        }
    }
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "{trials} instances, {solutions} exhaustive solutions certified, {converged} Newton runs all matched, {elapsed:.1} s"
    ))
}

/// 9. Local quadratic convergence of Newton on the criterion-8 instances.
fn newton_quadratic(oracle: &[OracleSummary]) -> Outcome {
    let mut fitted = 0;
    let mut worst_ratio: f64 = 0.0;
    for summary in oracle {
        for t in &summary.trials {
            for run in t.newton.iter().filter(|r| r.converged) {
                if let Some(q) = run.quadratic {
                    ensure(q.pass, || format!("N={} trial {} start {}: not quadratic", t.n, t.trial, run.start))?;
                    fitted += 1;
                    worst_ratio = worst_ratio.max(q.c);
                }
            }
        }
    }
    ensure(fitted > 0, || "no Newton run produced a fit".into())?;
    Ok(format!("{fitted} converged runs fit r_(k+1) <= 10 c r_k^2"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let oracle: Vec<OracleSummary> = (1..=4).map(|n| run_oracle(&OracleConfig::new(n, 100, 1000 + n as u64))).collect();
    let oracle_secs = start.elapsed().as_secs_f64();

    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 parity-solution exactness", parity_exactness()),
        ("2 stationarity certification", stationarity()),
        ("3 spin-boson bound |r| <= 1", spin_boson_bound()),
        ("4 dephasing-limit closed form", dephasing_closed_form()),
        ("5 commuting-model closed form", commuting_closed_form()),
        ("6 spectrum union and similarity", spectrum_union(&oracle)),
        ("7 Sylvester and ±I cases", sylvester_and_identity_cases()),
        ("8 oracle equivalence", oracle_equivalence(&oracle, oracle_secs)),
        ("9 Newton quadratic convergence", newton_quadratic(&oracle)),
    ];
    let mut failed = 0;
    for (name, outcome) in &criteria {
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
