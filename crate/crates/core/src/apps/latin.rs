//! Latin transversals: a permutation π with all colors A(i, π(i)) distinct.
//!
//! Bad events are pairs of transversal cells `(i, j), (i', j')` of equal
//! color, i.e. two-triple events on the single permutation.

use crate::apps::pairs::{dedup_rows, PairIndex};
use crate::apps::{execute, finish, ColorMatrix, CriterionCheck, Solved, SolverConfig};
use crate::criteria::latin_alpha;
use crate::error::Result;
use crate::events::{BadEvent, Triple, TrueSet, ViolationOracle};
use crate::perm::Permutation;

pub struct LatinOracle<'a> {
    matrix: &'a ColorMatrix,
    sizes: Vec<usize>,
    index: PairIndex,
}

impl<'a> LatinOracle<'a> {
    pub fn new(matrix: &'a ColorMatrix) -> Self {
        LatinOracle {
            matrix,
            sizes: vec![matrix.n()],
            index: PairIndex::default(),
        }
    }
}

fn pair_event(p: &Permutation, i: usize, j: usize) -> BadEvent {
    BadEvent::from_triples(vec![
        Triple::new(0, i, p.apply(i)),
        Triple::new(0, j, p.apply(j)),
    ])
    .expect("distinct rows give a valid event")
}

impl ViolationOracle for LatinOracle<'_> {
    fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn reset(&mut self, perms: &[Permutation]) {
        let p = &perms[0];
        let colors = (0..self.matrix.n())
            .map(|i| self.matrix.color(i, p.apply(i)))
            .collect();
        self.index
            .rebuild(colors, self.matrix.num_colors(), |i, j| pair_event(p, i, j));
    }

    fn after_swap(&mut self, perms: &[Permutation], _k: usize, touched: &[usize]) {
        let p = &perms[0];
        let rows = dedup_rows(touched.to_vec());
        let m = self.matrix;
        self.index.update(
            &rows,
            |i| m.color(i, p.apply(i)),
            |i, j| pair_event(p, i, j),
        );
    }

    fn true_set(&self) -> &TrueSet {
        &self.index.truth
    }

    fn class_of(&self, _event: &BadEvent) -> &'static str {
        "color-pair"
    }
}

/// Existence of a root of `α ≥ (1/(n(n-1))) (1 + n(Δ-1)α)^4`, which holds
/// exactly when `Δ - 1 ≤ (27/256)(n - 1)`.
pub fn criterion(m: &ColorMatrix) -> CriterionCheck {
    let delta = m.delta();
    let alpha = latin_alpha(m.n(), delta);
    CriterionCheck {
        name: "latin",
        satisfied: alpha.is_some(),
        detail: match alpha {
            Some(a) => format!("n={} delta={} alpha={a:.6e}", m.n(), delta),
            None => format!("n={} delta={} has no positive root", m.n(), delta),
        },
    }
}

pub fn solve(m: &ColorMatrix, cfg: &SolverConfig) -> Result<Solved<Permutation>> {
    let check = criterion(m);
    check.gate(cfg.force)?;
    let mut oracle = LatinOracle::new(m);
    let exec = execute(&mut oracle, cfg)?;
    Ok(finish(check, exec, |e| e.perms[0].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::generate::{distinct_matrix, matrix_with_multiplicity};
    use crate::apps::validate::is_latin_transversal;
    use crate::engine::Status;
    use crate::events::is_true;
    use crate::perm::random_permutation;
    use crate::perm::swap;
    use crate::rng::{Rng, UniformSource};

    #[test]
    fn distinct_colors_succeed_at_once() {
        let m = distinct_matrix(12);
        let out = solve(&m, &SolverConfig::with_seed(3)).unwrap();
        assert!(out.is_success());
        assert_eq!(out.execution.stats.resamplings, 0);
        assert!(is_latin_transversal(&m, out.solution.as_ref().unwrap()));
    }

    #[test]
    fn two_by_two_has_no_transversal() {
        let m = ColorMatrix::from_rows(vec![vec![1, 2], vec![2, 1]]).unwrap();
        assert!(solve(&m, &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            max_resamplings: 200,
            ..SolverConfig::default().forced()
        };
        let out = solve(&m, &cfg).unwrap();
        assert_eq!(out.execution.status, Status::IterationLimit);
        assert!(out.solution.is_none());
    }

    #[test]
    fn criterion_threshold() {
        let mut rng = Rng::new(1);
        assert!(criterion(&matrix_with_multiplicity(256, 27, &mut rng)).satisfied);
        assert!(!criterion(&matrix_with_multiplicity(256, 28, &mut rng)).satisfied);
        assert!(criterion(&matrix_with_multiplicity(100, 10, &mut rng)).satisfied);
    }

    #[test]
    fn small_instances_solve() {
        let mut rng = Rng::new(5);
        let m = matrix_with_multiplicity(40, 4, &mut rng);
        for seed in 0..20 {
            let out = solve(&m, &SolverConfig::with_seed(seed)).unwrap();
            assert!(is_latin_transversal(&m, out.solution.as_ref().unwrap()));
        }
        let par = SolverConfig {
            parallel: true,
            ..SolverConfig::with_seed(2)
        };
        let out = solve(&m, &par).unwrap();
        assert!(is_latin_transversal(&m, out.solution.as_ref().unwrap()));
    }

    fn brute_force(m: &ColorMatrix, p: &Permutation) -> Vec<u64> {
        let mut ids = Vec::new();
        for i in 0..m.n() {
            for j in i + 1..m.n() {
                if m.color(i, p.apply(i)) == m.color(j, p.apply(j)) {
                    let ev = pair_event(p, i, j);
                    assert!(is_true(&ev, std::slice::from_ref(p)));
                    ids.push(ev.id());
                }
            }
        }
        ids.sort_unstable();
        ids
    }

    #[test]
    fn detector_matches_brute_force() {
        let mut rng = Rng::new(9);
        let m = matrix_with_multiplicity(9, 3, &mut rng);
        let mut perms = vec![random_permutation(9, &mut rng)];
        let mut o = LatinOracle::new(&m);
        o.reset(&perms);
        for _ in 0..600 {
            let r = 1 + rng.below(3);
            let mut xs: Vec<usize> = (0..9).collect();
            rng.shuffle(&mut xs);
            xs.truncate(r);
            let mates = swap(&mut perms[0], &xs, &mut rng).unwrap();
            let touched: Vec<usize> = xs.iter().chain(&mates).copied().collect();
            o.after_swap(&perms, 0, &touched);
            let mut got: Vec<u64> = o.true_set().ids().collect();
            got.sort_unstable();
            assert_eq!(got, brute_force(&m, &perms[0]));
        }
    }
}
