//! Packing two r-uniform hypergraphs into `[n]` with edge-disjoint images.
//!
//! φ1 is the identity; φ2 is the first `|V(H2)|` entries of a permutation of
//! `[n]` (the remaining domain points are dummies no event mentions). For a
//! pair of edges at most one ordering can map one onto the other, so the
//! detector materializes only that live ordering.

use std::collections::HashMap;
use std::io::BufRead;

use crate::apps::{execute, finish, CriterionCheck, Solved, SolverConfig};
use crate::criteria::check_packing;
use crate::error::{Error, Result};
use crate::events::{BadEvent, EventId, Triple, TrueSet, ViolationOracle};
use crate::io::{numbered_lines, parse_numbers, parse_one_based};
use crate::perm::Permutation;

/// r-uniform hypergraph; edges are stored sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: usize,
    r: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(vertices: usize, r: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut clean = Vec::with_capacity(edges.len());
        for (i, mut e) in edges.into_iter().enumerate() {
            e.sort_unstable();
            e.dedup();
            if e.len() != r {
                return Err(Error::InvalidInput(format!(
                    "edge {} does not have {r} distinct vertices",
                    i + 1
                )));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= vertices) {
                return Err(Error::OutOfRange {
                    index: v,
                    size: vertices,
                });
            }
            clean.push(e);
        }
        clean.sort();
        clean.dedup();
        Ok(Hypergraph {
            vertices,
            r,
            edges: clean,
        })
    }

    /// Header `v e r`, then `e` lines of `r` vertex ids (1-based).
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = numbered_lines(reader)?.into_iter();
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let h = parse_numbers(&header, hl, Some(3))?;
        let (v, e, r) = (h[0], h[1], h[2]);
        let mut edges = Vec::with_capacity(e);
        for _ in 0..e {
            let (ln, text) = lines.next().ok_or(Error::Parse {
                line: hl,
                msg: "fewer edge lines than declared".into(),
            })?;
            edges.push(parse_one_based(&text, ln, Some(r), v)?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "unexpected trailing line".into(),
            });
        }
        Hypergraph::new(v, r, edges)
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Largest number of other edges any edge meets.
    pub fn intersection_degree(&self) -> usize {
        let mut incident = vec![Vec::new(); self.vertices];
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e {
                incident[v].push(i);
            }
        }
        let mut best = 0;
        let mut seen = vec![usize::MAX; self.edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            let mut count = 0;
            for &v in e {
                for &j in &incident[v] {
                    if j != i && seen[j] != i {
                        seen[j] = i;
                        count += 1;
                    }
                }
            }
            best = best.max(count);
        }
        best
    }
}

pub struct PackingOracle<'a> {
    h2: &'a Hypergraph,
    sizes: Vec<usize>,
    h1_edges: HashMap<Vec<usize>, usize>,
    incident: Vec<Vec<usize>>,
    live: Vec<Option<EventId>>,
    truth: TrueSet,
}

impl<'a> PackingOracle<'a> {
    pub fn new(h1: &'a Hypergraph, h2: &'a Hypergraph, n: usize) -> Result<Self> {
        if h1.r != h2.r {
            return Err(Error::InvalidInput(format!(
                "uniformities differ: {} and {}",
                h1.r, h2.r
            )));
        }
        if h1.vertices > n || h2.vertices > n {
            return Err(Error::InvalidInput(format!(
                "n = {n} is smaller than a vertex set"
            )));
        }
        let h1_edges = h1
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut incident = vec![Vec::new(); h2.vertices];
        for (i, e) in h2.edges.iter().enumerate() {
            for &v in e {
                incident[v].push(i);
            }
        }
        Ok(PackingOracle {
            h2,
            sizes: vec![n],
            h1_edges,
            incident,
            live: vec![None; h2.edges.len()],
            truth: TrueSet::new(),
        })
    }

    fn refresh(&mut self, p: &Permutation, e2: usize) {
        if let Some(id) = self.live[e2].take() {
            self.truth.remove(id);
        }
        let edge = &self.h2.edges[e2];
        let mut image: Vec<usize> = edge.iter().map(|&v| p.apply(v)).collect();
        image.sort_unstable();
        if self.h1_edges.contains_key(&image) {
            let triples = edge
                .iter()
                .map(|&v| Triple::new(0, v, p.apply(v)))
                .collect();
            let ev = BadEvent::from_triples(triples).expect("edge vertices are distinct");
            self.live[e2] = Some(ev.id());
            self.truth.insert(ev);
        }
    }
}

impl ViolationOracle for PackingOracle<'_> {
    fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn reset(&mut self, perms: &[Permutation]) {
        self.truth.clear();
        for e in 0..self.h2.edges.len() {
            self.live[e] = None;
            self.refresh(&perms[0], e);
        }
    }

    fn after_swap(&mut self, perms: &[Permutation], _k: usize, touched: &[usize]) {
        let mut edges: Vec<usize> = touched
            .iter()
            .filter(|&&v| v < self.incident.len())
            .flat_map(|&v| self.incident[v].iter().copied())
            .collect();
        edges.sort_unstable();
        edges.dedup();
        for e in edges {
            self.refresh(&perms[0], e);
        }
    }

    fn true_set(&self) -> &TrueSet {
        &self.truth
    }

    fn class_of(&self, _event: &BadEvent) -> &'static str {
        "edge-pair"
    }
}

/// `(d1+1)m2 + (d2+1)m1 < C(n,r)/e`.
pub fn criterion(h1: &Hypergraph, h2: &Hypergraph, n: usize) -> CriterionCheck {
    let (m1, m2) = (h1.edges.len() as u64, h2.edges.len() as u64);
    let (d1, d2) = (
        h1.intersection_degree() as u64,
        h2.intersection_degree() as u64,
    );
    CriterionCheck {
        name: "packing",
        satisfied: check_packing(m1, m2, d1, d2, n as u64, h1.r as u64),
        detail: format!("n={n} r={} m1={m1} m2={m2} d1={d1} d2={d2}", h1.r),
    }
}

/// Smallest `n ≥ max(|V1|, |V2|)` passing the criterion.
pub fn minimal_n(h1: &Hypergraph, h2: &Hypergraph) -> usize {
    let mut n = h1.vertices.max(h2.vertices).max(h1.r);
    while !criterion(h1, h2, n).satisfied {
        n += 1;
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub phi1: Vec<usize>,
    pub phi2: Vec<usize>,
}

pub fn solve(
    h1: &Hypergraph,
    h2: &Hypergraph,
    n: usize,
    cfg: &SolverConfig,
) -> Result<Solved<Packing>> {
    let mut oracle = PackingOracle::new(h1, h2, n)?;
    let check = criterion(h1, h2, n);
    check.gate(cfg.force)?;
    let exec = execute(&mut oracle, cfg)?;
    Ok(finish(check, exec, |e| Packing {
        phi1: (0..h1.vertices).collect(),
        phi2: e.perms[0].forward()[..h2.vertices].to_vec(),
    }))
}
