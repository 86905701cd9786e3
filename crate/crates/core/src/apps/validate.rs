//! Output checks written directly from the problem definitions. They do
//! not reuse any detector code.

use std::collections::{HashMap, HashSet};

use crate::apps::hypergraph::Packing;
use crate::apps::{BlockGraph, ColorMatrix, Hypergraph};
use crate::perm::Permutation;

fn transversal_labels(m: &ColorMatrix, pi: &Permutation) -> Option<Vec<i64>> {
    let rows = m.rows();
    (pi.len() == m.n()).then(|| (0..m.n()).map(|i| rows[i][pi.apply(i)]).collect())
}

/// No color repeats among the cells `(i, π(i))`.
pub fn is_latin_transversal(m: &ColorMatrix, pi: &Permutation) -> bool {
    transversal_labels(m, pi).is_some_and(|labels| {
        let set: HashSet<i64> = labels.iter().copied().collect();
        set.len() == labels.len()
    })
}

/// Largest number of transversal cells sharing one color.
pub fn max_color_count(m: &ColorMatrix, pi: &Permutation) -> usize {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for label in transversal_labels(m, pi).unwrap_or_default() {
        *counts.entry(label).or_insert(0) += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

fn cycle_lengths(p: &Permutation) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut out = Vec::new();
    for start in 0..p.len() {
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p.apply(x);
            len += 1;
        }
        if len > 0 {
            out.push(len);
        }
    }
    out.sort_unstable();
    out
}

/// Latin transversal with the same cycle type as `tau`.
pub fn is_conjugate_latin(m: &ColorMatrix, tau: &Permutation, pi: &Permutation) -> bool {
    is_latin_transversal(m, pi) && cycle_lengths(pi) == cycle_lengths(tau)
}

/// Proper coloring using colors `0..b` bijectively on every block.
pub fn is_strong_coloring(g: &BlockGraph, colors: &[usize]) -> bool {
    if colors.len() != g.n() {
        return false;
    }
    let b = g.b();
    let bijective = g.blocks().iter().all(|block| {
        let set: HashSet<usize> = block.iter().map(|&v| colors[v]).collect();
        set.len() == b && set.iter().all(|&c| c < b)
    });
    bijective && g.edges().iter().all(|&(u, v)| colors[u] != colors[v])
}

/// One vertex from each block, no two adjacent.
pub fn is_independent_transversal(g: &BlockGraph, selected: &[usize]) -> bool {
    if selected.len() != g.k() {
        return false;
    }
    let in_blocks = selected
        .iter()
        .enumerate()
        .all(|(i, v)| g.blocks()[i].contains(v));
    let chosen: HashSet<usize> = selected.iter().copied().collect();
    in_blocks
        && g.edges()
            .iter()
            .all(|(u, v)| !(chosen.contains(u) && chosen.contains(v)))
}

/// Both maps injective and no edge image of `h2` equals one of `h1`.
pub fn is_edge_disjoint_packing(h1: &Hypergraph, h2: &Hypergraph, p: &Packing) -> bool {
    let injective = |phi: &[usize]| phi.iter().collect::<HashSet<_>>().len() == phi.len();
    if p.phi1.len() != h1.vertices()
        || p.phi2.len() != h2.vertices()
        || !injective(&p.phi1)
        || !injective(&p.phi2)
    {
        return false;
    }
    let image = |phi: &[usize], e: &[usize]| {
        let mut s: Vec<usize> = e.iter().map(|&v| phi[v]).collect();
        s.sort_unstable();
        s
    };
    let first: HashSet<Vec<usize>> = h1.edges().iter().map(|e| image(&p.phi1, e)).collect();
    h2.edges()
        .iter()
        .all(|e| !first.contains(&image(&p.phi2, e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latin_checks() {
        let m = ColorMatrix::from_rows(vec![vec![1, 2], vec![2, 1]]).unwrap();
        assert!(!is_latin_transversal(&m, &Permutation::identity(2)));
        assert_eq!(max_color_count(&m, &Permutation::identity(2)), 2);
        let d = ColorMatrix::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert!(is_latin_transversal(&d, &Permutation::identity(2)));
        let tau = Permutation::from_forward(vec![1, 0]).unwrap();
        assert!(!is_conjugate_latin(&d, &tau, &Permutation::identity(2)));
        assert!(is_conjugate_latin(&d, &tau, &tau));
    }

    #[test]
    fn coloring_checks() {
        let g = BlockGraph::new(4, &[(0, 2)], vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(is_strong_coloring(&g, &[0, 1, 1, 0]));
        assert!(!is_strong_coloring(&g, &[0, 1, 0, 1]));
        assert!(!is_strong_coloring(&g, &[0, 0, 1, 0]));
        assert!(is_independent_transversal(&g, &[0, 3]));
        assert!(!is_independent_transversal(&g, &[0, 2]));
        assert!(!is_independent_transversal(&g, &[2, 0]));
    }

    #[test]
    fn packing_checks() {
        let h = Hypergraph::new(3, 2, vec![vec![0, 1]]).unwrap();
        let same = Packing {
            phi1: vec![0, 1, 2],
            phi2: vec![1, 0, 2],
        };
        assert!(!is_edge_disjoint_packing(&h, &h, &same));
        let apart = Packing {
            phi1: vec![0, 1, 2],
            phi2: vec![2, 0, 1],
        };
        assert!(is_edge_disjoint_packing(&h, &h, &apart));
    }
}
