use torth_core::datagen::{
    dump_instance, load_instance, pitprops, planted_instance, OverlapCase, PlantedParams, PITPROPS_VARIABLES,
};
use torth_core::evaluation::{column_supports, cpev, prop_adjusted_variance, DataOrCov, SuccessRule, TrialOutcome};
use torth_core::linalg::sym_eig;
use torth_core::rng::seeded;
use torth_core::solvers::{random_start, solve, CardinalityProfile, Method, SolverConfig};
use torth_core::subspace::{orthogonality_loss, sin_theta_fro};
use torth_core::{Basis, GramOperator, Matrix, SymOperator};

#[test]
fn planted_disjoint_instance_is_recovered_by_block_methods() {
    let inst = planted_instance(&PlantedParams::simulation(200, OverlapCase::Disjoint, 0.05, 3)).unwrap();
    let k = CardinalityProfile::uniform(10, 3, 200).unwrap();
    let q0 = random_start(&mut seeded(8), 200, 3).unwrap();
    for method in [Method::TOrth, Method::TOrthT] {
        let run = solve(method, &inst.a, &q0, &k, &SolverConfig::default()).unwrap();
        assert!(run.converged(), "{method:?}");
        let o = TrialOutcome::evaluate(
            inst.truth.matrix(),
            &inst.supports,
            run.components.matrix(),
            SuccessRule::default(),
        )
        .unwrap();
        assert!(o.success && o.recovered, "{method:?}: {o:?}");
        let est = run.components.orthonormalized().unwrap();
        assert!(sin_theta_fro(&inst.truth, &est).unwrap() < 0.1);
    }
}

#[test]
fn torth_output_is_orthonormal_and_sparse() {
    let inst = planted_instance(&PlantedParams::simulation(120, OverlapCase::Identical, 0.1, 5)).unwrap();
    let k = CardinalityProfile::uniform(10, 3, 120).unwrap();
    let q0 = random_start(&mut seeded(2), 120, 3).unwrap();
    let run = solve(Method::TOrth, &inst.a, &q0, &k, &SolverConfig::default()).unwrap();
    assert!(orthogonality_loss(&run.components) < 1e-24);
    // Identical supports keep the whole basis inside ten rows.
    for s in column_supports(run.components.matrix()) {
        assert!(s.k() <= 10, "{s:?}");
    }
}

#[test]
fn full_cardinality_torth_matches_standard_iteration() {
    let inst = planted_instance(&PlantedParams::simulation(60, OverlapCase::Partial, 0.05, 1)).unwrap();
    let q0 = random_start(&mut seeded(4), 60, 3).unwrap();
    let full = CardinalityProfile::full(60, 3);
    let cfg = SolverConfig::default();
    let a = solve(Method::TOrth, &inst.a, &q0, &full, &cfg).unwrap();
    let b = solve(Method::Standard, &inst.a, &q0, &full, &cfg).unwrap();
    assert!(sin_theta_fro(&a.components, &b.components).unwrap() < 1e-8);
    let top = Basis::orthonormal(sym_eig(&inst.a).vectors.leading_columns(3)).unwrap();
    assert!(sin_theta_fro(&top, &b.components).unwrap() < 1e-6);
}

#[test]
fn gram_operator_gives_the_same_run_as_its_matrix() {
    let data = torth_core::rng::gaussian_matrix(&mut seeded(6), 40, 25);
    let op = GramOperator::covariance(data);
    let dense = op.materialize();
    assert_eq!(op.dim(), 25);
    let k = CardinalityProfile::uniform(5, 2, 25).unwrap();
    let q0 = random_start(&mut seeded(1), 25, 2).unwrap();
    let cfg = SolverConfig::default();
    let a = solve(Method::TOrth, &op, &q0, &k, &cfg).unwrap();
    let b = solve(Method::TOrth, &dense, &q0, &k, &cfg).unwrap();
    assert!(sin_theta_fro(&a.components, &b.components).unwrap() < 1e-8);
}

#[test]
fn pitprops_solution_is_reproducible_and_bounded() {
    let cov = pitprops();
    assert_eq!(cov.dim(), PITPROPS_VARIABLES.len());
    let pca = Basis::orthonormal(sym_eig(&cov).vectors.leading_columns(6)).unwrap();
    let k = CardinalityProfile::new(vec![7, 2, 4, 3, 5, 4], 13).unwrap();
    let cfg = SolverConfig::default();
    let a = solve(Method::TOrthT, &cov, &pca, &k, &cfg).unwrap();
    let b = solve(Method::TOrthT, &cov, &pca, &k, &cfg).unwrap();
    assert_eq!(a.components.matrix(), b.components.matrix());
    let v: &Matrix = a.components.matrix();
    let adj = prop_adjusted_variance(DataOrCov::Cov(&cov), v).unwrap();
    let cp = cpev(DataOrCov::Cov(&cov), v).unwrap();
    // Sparse loadings cannot beat the six leading principal components.
    let best = cpev(DataOrCov::Cov(&cov), pca.matrix()).unwrap();
    assert!(adj <= cp + 1e-12 && cp <= best + 1e-12, "{adj} {cp} {best}");
    for (j, s) in column_supports(v).iter().enumerate() {
        assert_eq!(s.k(), k.as_slice()[j]);
    }
}

#[test]
fn dumped_instance_reloads_exactly() {
    let inst = planted_instance(&PlantedParams::simulation(30, OverlapCase::Partial, 0.05, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    dump_instance(dir.path(), &inst).unwrap();
    let back = load_instance(dir.path()).unwrap();
    assert_eq!(back.a.as_matrix(), inst.a.as_matrix());
    assert_eq!(back.truth.matrix(), inst.truth.matrix());
    assert_eq!(back.supports, inst.supports);
}
