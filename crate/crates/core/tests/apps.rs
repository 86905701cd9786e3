use perm_lll::apps::generate::{
    distinct_matrix, matching_graph, matrix_with_multiplicity, random_block_graph,
    random_hypergraph,
};
use perm_lll::apps::strong::{self, TransversalOptions};
use perm_lll::apps::{conjugate, hypergraph, latin, s_transversal, validate, SolverConfig};
use perm_lll::error::Error;
use perm_lll::rng::Rng;

#[test]
fn latin_transversals_are_valid_sequential_and_parallel() {
    let m = matrix_with_multiplicity(40, 4, &mut Rng::new(1));
    assert!(latin::criterion(&m).satisfied);
    for seed in 0..10 {
        for parallel in [false, true] {
            let cfg = SolverConfig {
                parallel,
                ..SolverConfig::with_seed(seed)
            };
            let solved = latin::solve(&m, &cfg).unwrap();
            let pi = solved.solution.expect("solved");
            assert!(validate::is_latin_transversal(&m, &pi));
        }
    }
}

#[test]
fn solver_refuses_failed_criterion_unless_forced() {
    let m = matrix_with_multiplicity(4, 16, &mut Rng::new(0));
    let err = latin::solve(&m, &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::CriterionFailed(_)));
    let cfg = SolverConfig {
        max_resamplings: 50,
        ..SolverConfig::default().forced()
    };
    let solved = latin::solve(&m, &cfg).unwrap();
    assert!(!solved.is_success());
    assert!(solved.solution.is_none());
}

#[test]
fn same_seed_gives_same_transversal() {
    let m = matrix_with_multiplicity(30, 3, &mut Rng::new(9));
    let a = latin::solve(&m, &SolverConfig::with_seed(5)).unwrap();
    let b = latin::solve(&m, &SolverConfig::with_seed(5)).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.execution.stats, b.execution.stats);
}

#[test]
fn s_transversal_with_many_repeats() {
    let n = 100;
    let s = 4;
    let delta = s_transversal::max_delta(n, s);
    assert!(delta > s, "max delta {delta}");
    assert!(
        !s_transversal::criterion(&matrix_with_multiplicity(n, delta + 1, &mut Rng::new(3)), s)
            .satisfied
    );
    let m = matrix_with_multiplicity(n, delta, &mut Rng::new(3));
    for seed in 0..5 {
        let solved = s_transversal::solve(&m, s, &SolverConfig::with_seed(seed)).unwrap();
        let pi = solved.solution.expect("solved");
        assert!(validate::max_color_count(&m, &pi) <= s);
    }
}

#[test]
fn conjugate_transversal_has_cycle_type_of_tau() {
    let m = distinct_matrix(30);
    let tau = conjugate::three_cycles(30).unwrap();
    // the sufficient condition is asymptotic and fails at this size
    assert!(!conjugate::criterion(&m).satisfied);
    let solved = conjugate::solve(&m, &tau, &SolverConfig::with_seed(2).forced()).unwrap();
    let sol = solved.solution.expect("solved");
    assert!(validate::is_conjugate_latin(&m, &tau, &sol.pi));
    assert_eq!(sol.pi.cycle_type(), tau.cycle_type());
}

#[test]
fn strong_coloring_of_sparse_block_graph() {
    let g = random_block_graph(8, 30, 2, &mut Rng::new(4));
    let solved = strong::solve(&g, &SolverConfig::with_seed(1)).unwrap();
    let colors = solved.solution.expect("solved");
    assert!(validate::is_strong_coloring(&g, &colors));
}

#[test]
fn independent_transversal_honors_required_vertex() {
    let g = matching_graph(8);
    let opts = TransversalOptions {
        require: Some(3),
        max_retries: 1000,
        ..TransversalOptions::default()
    };
    let out = strong::independent_transversal(&g, &opts, &SolverConfig::with_seed(6)).unwrap();
    let sel = out.selected.expect("solved");
    assert!(validate::is_independent_transversal(&g, &sel));
    assert!(sel.contains(&3));
}

#[test]
fn iterative_coloring_is_strong() {
    let g = random_block_graph(6, 25, 3, &mut Rng::new(8));
    let out = strong::strong_color_iterative(&g, &SolverConfig::with_seed(0), 1000).unwrap();
    let colors = out.coloring.expect("solved");
    assert!(validate::is_strong_coloring(&g, &colors));
    assert_eq!(out.phases.last().copied(), Some(g.n()));
}

#[test]
fn packing_at_minimal_ground_set() {
    let mut rng = Rng::new(12);
    let h1 = random_hypergraph(12, 6, 3, &mut rng);
    let h2 = random_hypergraph(12, 6, 3, &mut rng);
    let n = hypergraph::minimal_n(&h1, &h2);
    assert!(hypergraph::criterion(&h1, &h2, n).satisfied);
    if n > h1.vertices().max(h2.vertices()) {
        assert!(!hypergraph::criterion(&h1, &h2, n - 1).satisfied);
    }
    let solved = hypergraph::solve(&h1, &h2, n, &SolverConfig::with_seed(0)).unwrap();
    let p = solved.solution.expect("solved");
    assert!(validate::is_edge_disjoint_packing(&h1, &h2, &p));
}
