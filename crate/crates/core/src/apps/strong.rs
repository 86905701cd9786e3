//! Strong colorings of block graphs and independent transversals.
//!
//! Three solvers live here: the direct one (one permutation per block,
//! vertex slot → color), the ordinary variable-model resampler for
//! independent transversals, and the iterative coloring that grows a
//! partial strong coloring one independent transversal at a time.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::apps::{execute, finish, BlockGraph, CriterionCheck, Solved, SolverConfig};
use crate::criteria::strong_color_alpha;
use crate::engine::Status;
use crate::error::{Error, Result};
use crate::events::{BadEvent, EventId, Selection, Triple, TrueSet, ViolationOracle};
use crate::perm::Permutation;
use crate::rng::{mix_seed, Rng, UniformSource};

/// Detector for "both ends of an edge got the same color". Edges inside a
/// block are never violated (each block's coloring is a bijection).
pub struct StrongColorOracle<'a> {
    graph: &'a BlockGraph,
    sizes: Vec<usize>,
    incident: Vec<Vec<usize>>,
    live: Vec<Option<EventId>>,
    truth: TrueSet,
}

impl<'a> StrongColorOracle<'a> {
    pub fn new(graph: &'a BlockGraph) -> Self {
        let mut incident = vec![Vec::new(); graph.n()];
        for (i, &(u, v)) in graph.edges().iter().enumerate() {
            if graph.block_of(u) != graph.block_of(v) {
                incident[u].push(i);
                incident[v].push(i);
            }
        }
        StrongColorOracle {
            graph,
            sizes: vec![graph.b(); graph.k()],
            incident,
            live: vec![None; graph.edges().len()],
            truth: TrueSet::new(),
        }
    }

    fn color(&self, perms: &[Permutation], v: usize) -> usize {
        perms[self.graph.block_of(v)].apply(self.graph.slot(v))
    }

    fn refresh(&mut self, perms: &[Permutation], e: usize) {
        if let Some(id) = self.live[e].take() {
            self.truth.remove(id);
        }
        let (u, v) = self.graph.edges()[e];
        let c = self.color(perms, u);
        if c == self.color(perms, v) {
            let g = self.graph;
            let ev = BadEvent::from_triples(vec![
                Triple::new(g.block_of(u), g.slot(u), c),
                Triple::new(g.block_of(v), g.slot(v), c),
            ])
            .expect("endpoints lie in different blocks");
            self.live[e] = Some(ev.id());
            self.truth.insert(ev);
        }
    }
}

impl ViolationOracle for StrongColorOracle<'_> {
    fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn reset(&mut self, perms: &[Permutation]) {
        self.truth.clear();
        self.live.iter_mut().for_each(|l| *l = None);
        for e in 0..self.graph.edges().len() {
            let (u, v) = self.graph.edges()[e];
            if self.graph.block_of(u) != self.graph.block_of(v) {
                self.refresh(perms, e);
            }
        }
    }

    fn after_swap(&mut self, perms: &[Permutation], k: usize, touched: &[usize]) {
        let mut edges = Vec::new();
        for &s in touched {
            edges.extend_from_slice(&self.incident[self.graph.blocks()[k][s]]);
        }
        edges.sort_unstable();
        edges.dedup();
        for e in edges {
            self.refresh(perms, e);
        }
    }

    fn true_set(&self) -> &TrueSet {
        &self.truth
    }

    fn class_of(&self, _event: &BadEvent) -> &'static str {
        "edge-color"
    }
}

/// Root of `α ≥ (1/b²)(1 + bΔα)^4`, which exists when `b ≥ (256/27)Δ`.
pub fn criterion(g: &BlockGraph) -> CriterionCheck {
    let (b, delta) = (g.b(), g.delta());
    let alpha = if b == 0 {
        None
    } else {
        strong_color_alpha(b, delta)
    };
    CriterionCheck {
        name: "strong-color",
        satisfied: alpha.is_some(),
        detail: match alpha {
            Some(a) => format!("b={b} delta={delta} alpha={a:.6e}"),
            None => format!("b={b} delta={delta} has no positive root"),
        },
    }
}

/// Per-vertex colors `0..b`.
pub fn solve(g: &BlockGraph, cfg: &SolverConfig) -> Result<Solved<Vec<usize>>> {
    let check = criterion(g);
    check.gate(cfg.force)?;
    let mut oracle = StrongColorOracle::new(g);
    let exec = execute(&mut oracle, cfg)?;
    Ok(finish(check, exec, |e| {
        (0..g.n())
            .map(|v| e.perms[g.block_of(v)].apply(g.slot(v)))
            .collect()
    }))
}

#[derive(Clone, Debug, Default)]
pub struct TransversalOptions {
    /// Per block, the vertices that may be chosen (all when `None`).
    pub allowed: Option<Vec<Vec<usize>>>,
    /// A vertex the transversal must contain; whole searches are rerun
    /// until it is picked.
    pub require: Option<usize>,
    /// Cap on reruns when `require` is set.
    pub max_retries: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransversalOutcome {
    pub status: Status,
    pub criterion: CriterionCheck,
    /// One vertex per block, on success.
    pub selected: Option<Vec<usize>>,
    pub resamplings: u64,
    /// Searches run (1 unless a required vertex was missed).
    pub attempts: u64,
}

/// Advisory check `b ≥ 4Δ`, using the smallest allowed set for `b`.
pub fn transversal_criterion(g: &BlockGraph, allowed: Option<&[Vec<usize>]>) -> CriterionCheck {
    let b = allowed.map_or(g.b(), |a| a.iter().map(Vec::len).min().unwrap_or(0));
    let delta = g.delta();
    CriterionCheck {
        name: "independent-transversal",
        satisfied: b >= 4 * delta,
        detail: format!("b={b} delta={delta} need b >= {}", 4 * delta),
    }
}

/// Ordinary resampling over one uniform choice per block: while some edge
/// has both ends chosen, redraw the choices of both of its blocks.
pub fn independent_transversal(
    g: &BlockGraph,
    opts: &TransversalOptions,
    cfg: &SolverConfig,
) -> Result<TransversalOutcome> {
    let allowed: Vec<Vec<usize>> = match &opts.allowed {
        Some(a) => {
            if a.len() != g.k() {
                return Err(Error::SizeMismatch {
                    expected: g.k(),
                    found: a.len(),
                });
            }
            for (bi, set) in a.iter().enumerate() {
                if set.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "block {} has no allowed vertex",
                        bi + 1
                    )));
                }
                if let Some(&v) = set.iter().find(|&&v| v >= g.n() || g.block_of(v) != bi) {
                    return Err(Error::InvalidInput(format!(
                        "vertex {} is not in block {}",
                        v + 1,
                        bi + 1
                    )));
                }
            }
            a.clone()
        }
        None => g.blocks().to_vec(),
    };
    if let Some(w) = opts.require {
        if w >= g.n() || !allowed[g.block_of(w)].contains(&w) {
            return Err(Error::InvalidInput(format!(
                "required vertex {} is not allowed",
                w + 1
            )));
        }
    }
    let check = transversal_criterion(g, Some(&allowed));
    check.gate(cfg.force)?;

    let max_attempts = if opts.require.is_some() {
        opts.max_retries.max(1)
    } else {
        1
    };
    let mut resamplings = 0;
    for attempt in 1..=max_attempts {
        let mut rng = Rng::derive(cfg.seed, &[attempt]);
        let (status, chosen, used) =
            search(g, &allowed, &cfg.selection, cfg.max_resamplings, &mut rng);
        resamplings += used;
        if status == Status::IterationLimit {
            return Ok(TransversalOutcome {
                status,
                criterion: check,
                selected: None,
                resamplings,
                attempts: attempt,
            });
        }
        if opts.require.is_none_or(|w| chosen[g.block_of(w)] == w) {
            return Ok(TransversalOutcome {
                status: Status::Success,
                criterion: check,
                selected: Some(chosen),
                resamplings,
                attempts: attempt,
            });
        }
    }
    Ok(TransversalOutcome {
        status: Status::IterationLimit,
        criterion: check,
        selected: None,
        resamplings,
        attempts: max_attempts,
    })
}

fn search(
    g: &BlockGraph,
    allowed: &[Vec<usize>],
    selection: &Selection,
    cap: u64,
    rng: &mut Rng,
) -> (Status, Vec<usize>, u64) {
    let mut chosen: Vec<usize> = allowed.iter().map(|a| a[rng.below(a.len())]).collect();
    let is_chosen = |chosen: &[usize], v: usize| chosen[g.block_of(v)] == v;
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, &e) in g.edges().iter().enumerate() {
        edge_ids.insert(e, i);
    }
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let mut violated: BTreeSet<usize> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| {
            g.block_of(u) != g.block_of(v) && is_chosen(&chosen, u) && is_chosen(&chosen, v)
        })
        .map(|(i, _)| i)
        .collect();
    let mut used = 0;
    while !violated.is_empty() {
        if used >= cap {
            return (Status::IterationLimit, chosen, used);
        }
        let e = match selection {
            Selection::UniformRandom => *violated
                .iter()
                .nth(rng.below(violated.len()))
                .expect("nonempty"),
            _ => *violated.iter().next().expect("nonempty"),
        };
        used += 1;
        let (u, v) = g.edges()[e];
        for block in [g.block_of(u), g.block_of(v)] {
            let old = chosen[block];
            for &w in g.neighbors(old) {
                violated.remove(&edge_ids[&key(old, w)]);
            }
            let a = &allowed[block];
            let new = a[rng.below(a.len())];
            chosen[block] = new;
            for &w in g.neighbors(new) {
                if g.block_of(w) != block && is_chosen(&chosen, w) {
                    violated.insert(edge_ids[&key(new, w)]);
                }
            }
        }
    }
    (Status::Success, chosen, used)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterativeOutcome {
    pub status: Status,
    pub criterion: CriterionCheck,
    /// Per-vertex colors `0..b`, on success.
    pub coloring: Option<Vec<usize>>,
    /// Number of colored vertices after each phase.
    pub phases: Vec<usize>,
    pub resamplings: u64,
    pub attempts: u64,
}

/// Advisory check `b ≥ 5Δ`.
pub fn iterative_criterion(g: &BlockGraph) -> CriterionCheck {
    let (b, delta) = (g.b(), g.delta());
    CriterionCheck {
        name: "strong-color-iterative",
        satisfied: b >= 5 * delta,
        detail: format!("b={b} delta={delta} need b >= {}", 5 * delta),
    }
}

/// Grows a proper partial coloring with distinct colors per block. Each
/// phase picks an uncolored vertex `w` and a color `c` its block lacks,
/// finds an independent transversal through `w` among vertices whose
/// color can move to their block's current `c`-holder without conflict,
/// gives the transversal color `c` and hands the old colors to the
/// displaced holders.
pub fn strong_color_iterative(
    g: &BlockGraph,
    cfg: &SolverConfig,
    max_retries: u64,
) -> Result<IterativeOutcome> {
    let check = iterative_criterion(g);
    check.gate(cfg.force)?;
    let b = g.b();
    let mut color: Vec<Option<usize>> = vec![None; g.n()];
    let mut phases = Vec::new();
    let (mut resamplings, mut attempts) = (0, 0);
    let mut colored = 0;

    while let Some(w) = (0..g.n()).find(|&v| color[v].is_none()) {
        let home = g.block_of(w);
        let present: BTreeSet<usize> = g.blocks()[home].iter().filter_map(|&v| color[v]).collect();
        let c = (0..b)
            .find(|x| !present.contains(x))
            .expect("an uncolored vertex leaves a color free");

        let holders: Vec<Option<usize>> = g
            .blocks()
            .iter()
            .map(|block| block.iter().copied().find(|&v| color[v] == Some(c)))
            .collect();
        let allowed: Vec<Vec<usize>> = g
            .blocks()
            .iter()
            .zip(&holders)
            .map(|(block, holder)| match *holder {
                None => block.clone(),
                Some(u) => {
                    let taken: BTreeSet<usize> =
                        g.neighbors(u).iter().filter_map(|&x| color[x]).collect();
                    block
                        .iter()
                        .copied()
                        .filter(|&v| v == u || color[v].is_none_or(|cv| !taken.contains(&cv)))
                        .collect()
                }
            })
            .collect();

        let inner_cfg = SolverConfig {
            seed: mix_seed(cfg.seed, &[phases.len() as u64]),
            force: true,
            ..cfg.clone()
        };
        let opts = TransversalOptions {
            allowed: Some(allowed),
            require: Some(w),
            max_retries,
        };
        let it = independent_transversal(g, &opts, &inner_cfg)?;
        resamplings += it.resamplings;
        attempts += it.attempts;
        let Some(selected) = it.selected else {
            return Ok(IterativeOutcome {
                status: Status::IterationLimit,
                criterion: check,
                coloring: None,
                phases,
                resamplings,
                attempts,
            });
        };
        for (bi, &v) in selected.iter().enumerate() {
            if let Some(u) = holders[bi] {
                if u != v {
                    color[u] = color[v];
                }
            }
            color[v] = Some(c);
        }
        let now = color.iter().filter(|c| c.is_some()).count();
        if now <= colored {
            return Err(Error::Constraint(
                "colored-vertex count did not increase".into(),
            ));
        }
        colored = now;
        phases.push(now);
        debug_assert!(partial_coloring_ok(g, &color));
    }
    Ok(IterativeOutcome {
        status: Status::Success,
        criterion: check,
        coloring: Some(color.into_iter().map(|c| c.expect("all colored")).collect()),
        phases,
        resamplings,
        attempts,
    })
}

fn partial_coloring_ok(g: &BlockGraph, color: &[Option<usize>]) -> bool {
    let proper = g
        .edges()
        .iter()
        .all(|&(u, v)| color[u].is_none() || color[u] != color[v]);
    let distinct = g.blocks().iter().all(|block| {
        let cs: Vec<usize> = block.iter().filter_map(|&v| color[v]).collect();
        let set: BTreeSet<usize> = cs.iter().copied().collect();
        set.len() == cs.len()
    });
    proper && distinct
}
