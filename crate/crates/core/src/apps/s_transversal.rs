//! Transversals in which every color appears at most `s` times, found by
//! partial resampling: a color seen on `s + 1` or more transversal cells is
//! fixed by swapping a uniformly random `r`-subset of its cells,
//! `r = ⌈√s⌉`.

use crate::apps::{execute, finish, ColorMatrix, CriterionCheck, Solved, SolverConfig};
use crate::criteria::check_szabo;
use crate::error::{Error, Result};
use crate::events::{BadEvent, EventId, Selection, Triple, TrueSet, ViolationOracle};
use crate::perm::Permutation;
use crate::rng::UniformSource;

/// `⌈√s⌉`.
pub fn subset_size(s: usize) -> usize {
    let mut r = (s as f64).sqrt().ceil() as usize;
    while r > 0 && (r - 1) * (r - 1) >= s {
        r -= 1;
    }
    while r * r < s {
        r += 1;
    }
    r
}

/// Tracks, per color, the rows whose transversal cell has that color. The
/// true set holds one event per over-represented color (id = color + 1)
/// listing all of its current cells.
pub struct STransversalOracle<'a> {
    matrix: &'a ColorMatrix,
    s: usize,
    r: usize,
    sizes: Vec<usize>,
    row_color: Vec<u32>,
    rows_of: Vec<Vec<usize>>,
    truth: TrueSet,
}

impl<'a> STransversalOracle<'a> {
    pub fn new(matrix: &'a ColorMatrix, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidInput("s must be at least 1".into()));
        }
        Ok(STransversalOracle {
            matrix,
            s,
            r: subset_size(s),
            sizes: vec![matrix.n()],
            row_color: Vec::new(),
            rows_of: Vec::new(),
            truth: TrueSet::new(),
        })
    }

    fn refresh(&mut self, color: u32, p: &Permutation) {
        let id = color as EventId + 1;
        let rows = &self.rows_of[color as usize];
        if rows.len() > self.s {
            let triples = rows
                .iter()
                .map(|&i| Triple::new(0, i, p.apply(i)))
                .collect();
            self.truth
                .insert(BadEvent::new(id, triples).expect("rows are distinct"));
        } else {
            self.truth.remove(id);
        }
    }
}

impl ViolationOracle for STransversalOracle<'_> {
    fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn reset(&mut self, perms: &[Permutation]) {
        let p = &perms[0];
        self.truth.clear();
        self.rows_of = vec![Vec::new(); self.matrix.num_colors()];
        self.row_color = (0..self.matrix.n())
            .map(|i| self.matrix.color(i, p.apply(i)))
            .collect();
        for (i, &c) in self.row_color.iter().enumerate() {
            self.rows_of[c as usize].push(i);
        }
        for c in 0..self.rows_of.len() {
            self.refresh(c as u32, p);
        }
    }

    fn after_swap(&mut self, perms: &[Permutation], _k: usize, touched: &[usize]) {
        let p = &perms[0];
        let mut dirty = Vec::new();
        for &i in touched {
            let old = self.row_color[i];
            let new = self.matrix.color(i, p.apply(i));
            dirty.push(old);
            if old != new {
                let bucket = &mut self.rows_of[old as usize];
                let pos = bucket
                    .iter()
                    .position(|&x| x == i)
                    .expect("row is bucketed");
                bucket.swap_remove(pos);
                self.rows_of[new as usize].push(i);
                self.row_color[i] = new;
                dirty.push(new);
            }
        }
        dirty.sort_unstable();
        dirty.dedup();
        for c in dirty {
            self.refresh(c, p);
        }
    }

    fn true_set(&self) -> &TrueSet {
        &self.truth
    }

    /// Picks a violating color by the rule, then a uniform `r`-subset of
    /// its cells; the returned event keeps the color's id.
    fn select(
        &mut self,
        _perms: &[Permutation],
        rule: &Selection,
        rng: &mut dyn UniformSource,
    ) -> Option<BadEvent> {
        let color_event = self.truth.select(rule, rng)?;
        let mut cells = color_event.triples().to_vec();
        let r = self.r.min(cells.len());
        for i in 0..r {
            let j = i + rng.below(cells.len() - i);
            cells.swap(i, j);
        }
        cells.truncate(r);
        Some(BadEvent::new(color_event.id(), cells).expect("subset of a valid event"))
    }

    fn class_of(&self, _event: &BadEvent) -> &'static str {
        "color-excess"
    }
}

/// Partial-resampling criterion
/// `e · C(s,r)⁻¹ · (n-r)!/n! · (2rn·C(Δ,r-1) + C(Δ,r)) ≤ 1`.
pub fn criterion(m: &ColorMatrix, s: usize) -> CriterionCheck {
    let r = subset_size(s);
    let delta = m.delta();
    CriterionCheck {
        name: "s-transversal",
        satisfied: check_szabo(m.n() as u64, s as u64, r as u64, delta as u64),
        detail: format!("n={} s={s} r={r} delta={delta}", m.n()),
    }
}

/// Largest Δ for which the criterion holds at `(n, s)`.
pub fn max_delta(n: usize, s: usize) -> usize {
    let r = subset_size(s) as u64;
    let ok = |d: u64| check_szabo(n as u64, s as u64, r, d);
    if !ok(1) {
        return 0;
    }
    let (mut lo, mut hi) = (1u64, (n * n) as u64 + 1);
    if ok(hi) {
        return hi as usize;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as usize
}

/// Parallel mode is not offered: partial resampling picks a random subset
/// of an event at selection time.
pub fn solve(m: &ColorMatrix, s: usize, cfg: &SolverConfig) -> Result<Solved<Permutation>> {
    if cfg.parallel {
        return Err(Error::InvalidInput(
            "s-transversal runs sequentially only".into(),
        ));
    }
    let check = criterion(m, s);
    let mut oracle = STransversalOracle::new(m, s)?;
    check.gate(cfg.force)?;
    let exec = execute(&mut oracle, cfg)?;
    Ok(finish(check, exec, |e| e.perms[0].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::generate::matrix_with_multiplicity;
    use crate::apps::validate::max_color_count;
    use crate::engine::Status;
    use crate::perm::{random_permutation, swap};
    use crate::rng::Rng;

    #[test]
    fn subset_sizes() {
        let got: Vec<usize> = [1, 2, 4, 5, 9, 10, 16, 17]
            .iter()
            .map(|&s| subset_size(s))
            .collect();
        assert_eq!(got, vec![1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn large_s_is_trivial() {
        let m = ColorMatrix::from_rows(vec![vec![1; 4]; 4]).unwrap();
        let out = solve(&m, 4, &SolverConfig::with_seed(1).forced()).unwrap();
        assert!(out.is_success());
        assert_eq!(out.execution.stats.resamplings, 0);
    }

    #[test]
    fn monochromatic_matrix_cannot_succeed() {
        let m = ColorMatrix::from_rows(vec![vec![7; 5]; 5]).unwrap();
        assert!(solve(&m, 4, &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            max_resamplings: 100,
            ..SolverConfig::default().forced()
        };
        assert_eq!(
            solve(&m, 4, &cfg).unwrap().execution.status,
            Status::IterationLimit
        );
    }

    #[test]
    fn max_delta_is_the_boundary() {
        let d = max_delta(100, 9);
        assert!(check_szabo(100, 9, 3, d as u64));
        assert!(!check_szabo(100, 9, 3, d as u64 + 1));
        assert!((250..300).contains(&d), "{d}");
    }

    #[test]
    fn solves_at_the_boundary() {
        let mut rng = Rng::new(4);
        let d = max_delta(50, 4);
        let m = matrix_with_multiplicity(50, d, &mut rng);
        assert!(criterion(&m, 4).satisfied);
        for seed in 0..10 {
            let out = solve(&m, 4, &SolverConfig::with_seed(seed)).unwrap();
            assert!(max_color_count(&m, out.solution.as_ref().unwrap()) <= 4);
        }
    }

    #[test]
    fn detector_matches_brute_force() {
        let mut rng = Rng::new(2);
        let m = matrix_with_multiplicity(10, 5, &mut rng);
        let s = 2;
        let mut perms = vec![random_permutation(10, &mut rng)];
        let mut o = STransversalOracle::new(&m, s).unwrap();
        o.reset(&perms);
        for _ in 0..600 {
            let mut xs: Vec<usize> = (0..10).collect();
            rng.shuffle(&mut xs);
            xs.truncate(1 + rng.below(3));
            let mates = swap(&mut perms[0], &xs, &mut rng).unwrap();
            let touched: Vec<usize> = xs.iter().chain(&mates).copied().collect();
            o.after_swap(&perms, 0, &touched);

            let mut expected = Vec::new();
            for c in 0..m.num_colors() as u32 {
                let rows: Vec<usize> = (0..10)
                    .filter(|&i| m.color(i, perms[0].apply(i)) == c)
                    .collect();
                if rows.len() > s {
                    let triples = rows
                        .iter()
                        .map(|&i| Triple::new(0, i, perms[0].apply(i)))
                        .collect();
                    expected.push(BadEvent::new(c as EventId + 1, triples).unwrap());
                }
            }
            assert_eq!(o.all_true(), expected);
        }
    }
}
