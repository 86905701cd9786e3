//! Seeded instance generators for tests, benchmarks and the CLI.

use std::collections::BTreeSet;

use crate::apps::{BlockGraph, ColorMatrix, Hypergraph};
use crate::rng::{Rng, UniformSource};

/// Every cell its own color.
pub fn distinct_matrix(n: usize) -> ColorMatrix {
    let rows = (0..n)
        .map(|i| (0..n).map(|j| (i * n + j) as i64).collect())
        .collect();
    ColorMatrix::from_rows(rows).expect("square")
}

/// Cells shuffled and colored in runs of `delta`: every color appears
/// exactly `delta` times except possibly the last, which takes the
/// remainder.
pub fn matrix_with_multiplicity(n: usize, delta: usize, rng: &mut Rng) -> ColorMatrix {
    assert!(delta >= 1, "delta must be positive");
    let mut cells: Vec<usize> = (0..n * n).collect();
    rng.shuffle(&mut cells);
    let mut grid = vec![vec![0i64; n]; n];
    for (rank, &cell) in cells.iter().enumerate() {
        grid[cell / n][cell % n] = (rank / delta) as i64;
    }
    ColorMatrix::from_rows(grid).expect("square")
}

/// Two blocks of size `b` joined by the perfect matching `i ↔ b + i`.
pub fn matching_graph(b: usize) -> BlockGraph {
    let edges: Vec<(usize, usize)> = (0..b).map(|i| (i, b + i)).collect();
    BlockGraph::new(2 * b, &edges, vec![(0..b).collect(), (b..2 * b).collect()])
        .expect("valid blocks")
}

/// `k` consecutive blocks of size `b`; edges are the union of `delta`
/// random perfect matchings, dropping same-block pairs and repeats, so the
/// maximum degree is at most `delta`.
pub fn random_block_graph(k: usize, b: usize, delta: usize, rng: &mut Rng) -> BlockGraph {
    let n = k * b;
    let mut edges = BTreeSet::new();
    for _ in 0..delta {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        for pair in order.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u / b != v / b {
                edges.insert((u, v));
            }
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let blocks = (0..k).map(|i| (i * b..(i + 1) * b).collect()).collect();
    BlockGraph::new(n, &edges, blocks).expect("valid blocks")
}

/// `m` distinct uniformly random r-sets on `v` vertices.
pub fn random_hypergraph(v: usize, m: usize, r: usize, rng: &mut Rng) -> Hypergraph {
    let mut edges = BTreeSet::new();
    let mut guard = 0;
    while edges.len() < m {
        let mut pool: Vec<usize> = (0..v).collect();
        for i in 0..r {
            let j = i + rng.below(v - i);
            pool.swap(i, j);
        }
        let mut e = pool[..r].to_vec();
        e.sort_unstable();
        edges.insert(e);
        guard += 1;
        assert!(
            guard < 1_000_000,
            "cannot draw {m} distinct {r}-sets on {v} vertices"
        );
    }
    Hypergraph::new(v, r, edges.into_iter().collect()).expect("valid edges")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicities() {
        let mut rng = Rng::new(0);
        let m = matrix_with_multiplicity(256, 27, &mut rng);
        assert_eq!(m.delta(), 27);
        assert_eq!(m.num_colors(), 65536usize.div_ceil(27));
        let m2 = matrix_with_multiplicity(100, 10, &mut rng);
        assert!((0..m2.num_colors() as u32).all(|c| m2.positions(c).len() == 10));
    }

    #[test]
    fn block_graph_degree_bound() {
        let mut rng = Rng::new(1);
        let g = random_block_graph(20, 29, 3, &mut rng);
        assert!(g.delta() <= 3);
        assert!(g
            .edges()
            .iter()
            .all(|&(u, v)| g.block_of(u) != g.block_of(v)));
    }

    #[test]
    fn hypergraph_is_uniform() {
        let mut rng = Rng::new(2);
        let h = random_hypergraph(30, 20, 3, &mut rng);
        assert_eq!(h.edges().len(), 20);
        assert!(h.edges().iter().all(|e| e.len() == 3));
    }
}
