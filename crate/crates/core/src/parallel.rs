//! Simulator for the parallel swapping algorithm.
//!
//! Each round works through the events true at its start in sub-rounds:
//! pick a maximal independent set, draw swap-mates for each member without
//! applying them, rank the members at random, keep the lexicographically
//! first MIS of the conflict graph and apply the surviving transpositions.
//! The output is a pure function of the instance and the seed.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::{check_sizes, initial_permutations, ExecutionLog, RunStats, Status};
use crate::error::{Error, Result};
use crate::events::{depends, BadEvent, DependencyMode, ViolationOracle};
use crate::perm::{apply_transpositions, draw_mates, Permutation};
use crate::rng::Rng;

const TAG_MIS: u64 = 1;
const TAG_RANK: u64 = 2;
const TAG_MATES: u64 = 3;

#[derive(Clone, Debug)]
pub struct ParallelConfig {
    pub mode: DependencyMode,
    /// Round cap; must be at least 1.
    pub max_rounds: u64,
    pub seed: u64,
    pub record_log: bool,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig {
            mode: DependencyMode::Standard,
            max_rounds: 100_000,
            seed: 0,
            record_log: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParallelStats {
    pub rounds: u64,
    /// Sub-rounds used by each round.
    pub subrounds: Vec<u64>,
    /// Peeling iterations of every sub-round, in execution order.
    pub peel_depths: Vec<usize>,
    pub transpositions: u64,
}

#[derive(Clone, Debug)]
pub struct ParallelOutcome {
    pub status: Status,
    pub perms: Vec<Permutation>,
    /// Resamplings in (round, sub-round, rank) order, replayable through the
    /// sequential engine.
    pub log: Option<ExecutionLog>,
    pub stats: ParallelStats,
    pub run_stats: RunStats,
}

impl ParallelOutcome {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// Directed graph on the events of one sub-round. Vertex `i` has rank
/// `rank[i]`; edges run from lower to higher rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    rank: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl ConflictGraph {
    /// `rank` must be a permutation of `0..rank.len()`.
    pub fn new(rank: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; rank.len()];
        for &r in &rank {
            if r >= rank.len() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidInput("ranking is not a permutation".into()));
            }
        }
        Ok(ConflictGraph {
            rank,
            edges: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        let n = self.len();
        for v in [from, to] {
            if v >= n {
                return Err(Error::OutOfRange { index: v, size: n });
            }
        }
        if self.rank[from] >= self.rank[to] {
            return Err(Error::Constraint(format!(
                "edge {from}->{to} runs against the ranking"
            )));
        }
        self.edges.push((from, to));
        Ok(())
    }
}

/// Builds the conflict graph: `B -> B'` when `B` is ranked first and one
/// of its swap-mates (or, for lopsided instances where independent events
/// may share a triple, one of its swap-sources) is a swap-source of `B'`.
///
/// `mates[i]` is aligned with `events[i].triples()`.
pub fn build_conflict_graph(
    events: &[BadEvent],
    mates: &[Vec<usize>],
    rank: Vec<usize>,
) -> Result<ConflictGraph> {
    if mates.len() != events.len() {
        return Err(Error::SizeMismatch {
            expected: events.len(),
            found: mates.len(),
        });
    }
    let mut g = ConflictGraph::new(rank)?;
    if g.len() != events.len() {
        return Err(Error::SizeMismatch {
            expected: events.len(),
            found: g.len(),
        });
    }
    // owner of each swap-source slot
    let mut sources: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, ev) in events.iter().enumerate() {
        for t in ev.triples() {
            sources.entry((t.k, t.x)).or_default().push(i);
        }
    }
    let mut edges = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        for (t, &z) in ev.triples().iter().zip(&mates[i]) {
            for key in [(t.k, z), (t.k, t.x)] {
                for &j in sources.get(&key).into_iter().flatten() {
                    if j != i && g.rank[i] < g.rank[j] {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    for (a, b) in edges {
        g.add_edge(a, b)?;
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lfmis {
    /// Members in rank order.
    pub members: Vec<usize>,
    /// Number of peeling iterations.
    pub peel_depth: usize,
}

/// Lexicographically first MIS by source peeling: repeatedly take every
/// remaining source, then drop the sources and their successors.
pub fn lfmis(g: &ConflictGraph) -> Result<Lfmis> {
    let n = g.len();
    let mut succ = vec![Vec::new(); n];
    let mut preds = vec![Vec::new(); n];
    for &(a, b) in &g.edges {
        succ[a].push(b);
        preds[b].push(a);
    }
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut members = Vec::new();
    let mut peel_depth = 0;
    while remaining > 0 {
        let sources: Vec<usize> = (0..n)
            .filter(|&v| alive[v] && preds[v].iter().all(|&p| !alive[p]))
            .collect();
        if sources.is_empty() {
            return Err(Error::Constraint("conflict graph has a cycle".into()));
        }
        peel_depth += 1;
        for &s in &sources {
            for &w in &succ[s] {
                if alive[w] {
                    alive[w] = false;
                    remaining -= 1;
                }
            }
        }
        for &s in &sources {
            if alive[s] {
                alive[s] = false;
                remaining -= 1;
            }
            members.push(s);
        }
    }
    members.sort_by_key(|&v| g.rank[v]);
    Ok(Lfmis {
        members,
        peel_depth,
    })
}

/// Maximal independent set under `~`, built greedily in a random order.
/// The result keeps the input order.
pub fn greedy_mis(events: &[BadEvent], mode: DependencyMode, rng: &mut Rng) -> Vec<BadEvent> {
    let mut order: Vec<usize> = (0..events.len()).collect();
    rng.shuffle(&mut order);
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if chosen
            .iter()
            .all(|&c| !depends(&events[i], &events[c], mode))
        {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| events[i].clone()).collect()
}

/// Runs the parallel algorithm from the same starting permutations the
/// sequential engine uses for `config.seed`.
pub fn run_parallel<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    config: &ParallelConfig,
) -> Result<ParallelOutcome> {
    let perms = initial_permutations(oracle.sizes(), config.seed);
    run_parallel_from(oracle, perms, config)
}

pub fn run_parallel_from<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    mut perms: Vec<Permutation>,
    config: &ParallelConfig,
) -> Result<ParallelOutcome> {
    if config.max_rounds == 0 {
        return Err(Error::Constraint("max_rounds must be at least 1".into()));
    }
    check_sizes(oracle.sizes(), &perms)?;
    oracle.reset(&perms);
    let mode = config.mode;
    let mut stats = ParallelStats::default();
    let mut run_stats = RunStats::new(perms.len());
    let mut log = config.record_log.then(ExecutionLog::new);

    loop {
        if oracle.true_set().is_empty() {
            return Ok(ParallelOutcome {
                status: Status::Success,
                perms,
                log,
                stats,
                run_stats,
            });
        }
        if stats.rounds >= config.max_rounds {
            return Ok(ParallelOutcome {
                status: Status::IterationLimit,
                perms,
                log,
                stats,
                run_stats,
            });
        }
        stats.rounds += 1;
        let round = stats.rounds;
        let mut live: Vec<BadEvent> = oracle.all_true();
        let mut sub = 0u64;
        while !live.is_empty() {
            sub += 1;
            let mis = greedy_mis(
                &live,
                mode,
                &mut Rng::derive(config.seed, &[round, sub, TAG_MIS]),
            );

            let mut mates = Vec::with_capacity(mis.len());
            for ev in &mis {
                let mut rng = Rng::derive(config.seed, &[round, sub, TAG_MATES, ev.id()]);
                let mut m = Vec::with_capacity(ev.len());
                for (k, xs) in ev.sources_by_perm() {
                    m.extend(draw_mates(perms[k].len(), &xs, &mut rng)?);
                }
                mates.push(m);
            }

            let mut by_rank: Vec<usize> = (0..mis.len()).collect();
            Rng::derive(config.seed, &[round, sub, TAG_RANK]).shuffle(&mut by_rank);
            let mut rank = vec![0; mis.len()];
            for (r, &i) in by_rank.iter().enumerate() {
                rank[i] = r;
            }
            let graph = build_conflict_graph(&mis, &mates, rank)?;
            let kept = lfmis(&graph)?;
            stats.peel_depths.push(kept.peel_depth);

            // per permutation, transpositions in rank order
            let mut per_perm: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
            for &i in &kept.members {
                for (t, &z) in mis[i].triples().iter().zip(&mates[i]) {
                    per_perm.entry(t.k).or_default().push((t.x, z));
                }
            }
            for (k, ts) in per_perm {
                stats.transpositions += ts.len() as u64;
                // sequential order: the earliest-ranked swap acts first
                let reversed: Vec<(usize, usize)> = ts.iter().rev().copied().collect();
                apply_transpositions(&mut perms[k], &reversed)?;
                let mut touched: Vec<usize> = ts.iter().flat_map(|&(x, z)| [x, z]).collect();
                touched.sort_unstable();
                touched.dedup();
                oracle.after_swap(&perms, k, &touched);
            }

            let resampled: Vec<&BadEvent> = kept.members.iter().map(|&i| &mis[i]).collect();
            for &i in &kept.members {
                run_stats.record(oracle.class_of(&mis[i]), &mis[i]);
                if let Some(log) = log.as_mut() {
                    log.push(mis[i].clone(), mates[i].clone());
                }
            }
            let before = live.len();
            live.retain(|ev| {
                oracle.true_set().contains(ev.id())
                    && !resampled
                        .iter()
                        .any(|r| r.id() == ev.id() || depends(ev, r, mode))
            });
            debug_assert!(live.len() < before, "live set must shrink every sub-round");
        }
        stats.subrounds.push(sub);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::replay;
    use crate::events::{is_true, EventId, EventSet, ExplicitOracle, Triple};
    use rand::Rng as _;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ev(id: EventId, ts: &[(usize, usize, usize)]) -> BadEvent {
        BadEvent::new(
            id,
            ts.iter().map(|&(k, x, y)| Triple::new(k, x, y)).collect(),
        )
        .unwrap()
    }

    /// Definitional LFMIS: scan in rank order, keep a vertex unless an
    /// already-kept vertex is adjacent to it.
    fn reference_lfmis(g: &ConflictGraph) -> Vec<usize> {
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by_key(|&v| g.rank()[v]);
        let mut kept: Vec<usize> = Vec::new();
        for v in order {
            let blocked = kept
                .iter()
                .any(|&u| g.edges().contains(&(u, v)) || g.edges().contains(&(v, u)));
            if !blocked {
                kept.push(v);
            }
        }
        kept
    }

    #[test]
    fn lfmis_small_examples() {
        let g = ConflictGraph::new(vec![0, 1, 2]).unwrap();
        assert_eq!(lfmis(&g).unwrap().members, vec![0, 1, 2]);

        let mut path = ConflictGraph::new(vec![0, 1, 2]).unwrap();
        path.add_edge(0, 1).unwrap();
        path.add_edge(1, 2).unwrap();
        let out = lfmis(&path).unwrap();
        assert_eq!(out.members, vec![0, 2]);
        assert_eq!(out.peel_depth, 2);

        let mut star = ConflictGraph::new(vec![0, 1, 2, 3]).unwrap();
        for leaf in 1..4 {
            star.add_edge(0, leaf).unwrap();
        }
        assert_eq!(lfmis(&star).unwrap().members, vec![0]);

        assert!(path.add_edge(2, 0).is_err());
        assert!(ConflictGraph::new(vec![0, 0]).is_err());
    }

    #[test]
    fn lfmis_matches_reference_on_random_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(0..=30);
            let mut rank: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(rank.as_mut_slice(), &mut rng);
            let mut g = ConflictGraph::new(rank.clone()).unwrap();
            let p: f64 = rng.gen_range(0.0..0.4);
            for a in 0..n {
                for b in 0..n {
                    if rank[a] < rank[b] && rng.gen_bool(p) {
                        g.add_edge(a, b).unwrap();
                    }
                }
            }
            let out = lfmis(&g).unwrap();
            assert_eq!(out.members, reference_lfmis(&g));
            assert!(out.peel_depth <= n);
        }
    }

    #[test]
    fn greedy_mis_is_maximal() {
        let independent = vec![
            ev(1, &[(0, 0, 0)]),
            ev(2, &[(0, 1, 1)]),
            ev(3, &[(0, 2, 2)]),
        ];
        let all_dep = vec![
            ev(1, &[(0, 0, 0)]),
            ev(2, &[(0, 0, 1)]),
            ev(3, &[(0, 0, 2)]),
        ];
        let path = vec![
            ev(1, &[(0, 0, 0)]),
            ev(2, &[(0, 0, 1), (0, 1, 2)]),
            ev(3, &[(0, 1, 3)]),
        ];
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            assert_eq!(
                greedy_mis(&independent, DependencyMode::Standard, &mut rng).len(),
                3
            );
            assert_eq!(
                greedy_mis(&all_dep, DependencyMode::Standard, &mut rng).len(),
                1
            );
            let m = greedy_mis(&path, DependencyMode::Standard, &mut rng);
            let ids: Vec<EventId> = m.iter().map(|e| e.id()).collect();
            assert!(ids == vec![1, 3] || ids == vec![2], "{ids:?}");
            for e in &path {
                assert!(m.iter().any(|c| depends(e, c, DependencyMode::Standard)));
            }
        }
    }

    #[test]
    fn colliding_mates_keep_only_the_first_ranked() {
        let events = vec![ev(1, &[(0, 0, 0)]), ev(2, &[(0, 1, 1)])];
        // the mate of event 1 is the source of event 2
        let mates = vec![vec![1], vec![3]];
        let g = build_conflict_graph(&events, &mates, vec![0, 1]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(lfmis(&g).unwrap().members, vec![0]);
        // ranked the other way round there is no conflict
        let g2 = build_conflict_graph(&events, &mates, vec![1, 0]).unwrap();
        assert!(g2.edges().is_empty());
        assert_eq!(lfmis(&g2).unwrap().members.len(), 2);
    }

    #[test]
    fn shared_sources_conflict_in_lopsided_mode() {
        let events = vec![
            ev(1, &[(0, 0, 0), (0, 2, 2)]),
            ev(2, &[(0, 0, 0), (0, 3, 3)]),
        ];
        assert!(!depends(&events[0], &events[1], DependencyMode::Lopsided));
        let mates = vec![vec![5, 6], vec![7, 8]];
        let g = build_conflict_graph(&events, &mates, vec![0, 1]).unwrap();
        assert_eq!(lfmis(&g).unwrap().members, vec![0]);
    }

    #[test]
    fn no_true_events_means_zero_rounds() {
        let mut o = ExplicitOracle::new(EventSet::new(vec![4], vec![]).unwrap());
        let out = run_parallel(&mut o, &ParallelConfig::default()).unwrap();
        assert!(out.is_success());
        assert_eq!(out.stats.rounds, 0);
    }

    fn random_instance(seed: u64, sizes: &[usize], count: usize, max_len: usize) -> EventSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut events = Vec::new();
        let mut id = 1;
        while events.len() < count {
            let len = rng.gen_range(1..=max_len);
            let mut ts = Vec::new();
            for _ in 0..len {
                let k = rng.gen_range(0..sizes.len());
                ts.push(Triple::new(
                    k,
                    rng.gen_range(0..sizes[k]),
                    rng.gen_range(0..sizes[k]),
                ));
            }
            if let Ok(e) = BadEvent::new(id, ts) {
                events.push(e);
                id += 1;
            }
        }
        EventSet::new(sizes.to_vec(), events).unwrap()
    }

    #[test]
    fn parallel_runs_serialize_to_sequential_runs() {
        for mode in [DependencyMode::Standard, DependencyMode::Lopsided] {
            for seed in 0..60 {
                let set = random_instance(seed, &[9, 7], 14, 3);
                let mut o = ExplicitOracle::new(set.clone());
                let cfg = ParallelConfig {
                    mode,
                    seed,
                    record_log: true,
                    ..ParallelConfig::default()
                };
                let out = run_parallel(&mut o, &cfg).unwrap();
                assert!(out.is_success());
                assert!(set.events().iter().all(|e| !is_true(e, &out.perms)));
                let log = out.log.unwrap();
                assert_eq!(log.len() as u64, out.run_stats.resamplings);
                let mut fresh = ExplicitOracle::new(set);
                let replayed = replay(
                    &mut fresh,
                    initial_permutations(&[9, 7], seed),
                    log.entries(),
                )
                .unwrap();
                assert_eq!(replayed, out.perms);
                assert_eq!(out.stats.subrounds.len() as u64, out.stats.rounds);
                assert_eq!(
                    out.stats.peel_depths.len() as u64,
                    out.stats.subrounds.iter().sum::<u64>()
                );
            }
        }
    }

    #[test]
    fn same_seed_same_parallel_run() {
        let set = random_instance(3, &[10], 12, 2);
        let cfg = ParallelConfig {
            seed: 11,
            record_log: true,
            ..ParallelConfig::default()
        };
        let a = run_parallel(&mut ExplicitOracle::new(set.clone()), &cfg).unwrap();
        let b = run_parallel(&mut ExplicitOracle::new(set), &cfg).unwrap();
        assert_eq!(a.perms, b.perms);
        assert_eq!(a.log, b.log);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn round_cap_reports_iteration_limit() {
        let set = EventSet::new(vec![2], vec![ev(1, &[(0, 0, 0)]), ev(2, &[(0, 0, 1)])]).unwrap();
        let cfg = ParallelConfig {
            max_rounds: 5,
            ..ParallelConfig::default()
        };
        let out = run_parallel(&mut ExplicitOracle::new(set), &cfg).unwrap();
        assert_eq!(out.status, Status::IterationLimit);
        assert_eq!(out.stats.rounds, 5);
    }
}
