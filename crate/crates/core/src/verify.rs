//! Independent oracles: exact enumeration of the swap subroutine, the
//! constraint-probability bound it satisfies, and seeded Monte Carlo
//! harnesses for the probabilistic lemmas.
//!
//! Exact enumeration drives the production [`swap`] through a scripted
//! [`UniformSource`], so the code under test is the code that runs.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::least_fixed_point;
use crate::engine::{mt_bound, run, EngineConfig};
use crate::error::{Error, Result};
use crate::events::{
    is_true, prob_omega, BadEvent, DependencyMode, EventId, EventSet, ExplicitOracle, Triple,
};
use crate::parallel::{lfmis, ConflictGraph};
use crate::perm::{swap, Permutation};
use crate::rng::{Rng, UniformSource};
use crate::witness::build_witness_tree;

pub const MAX_ENUM_N: usize = 8;
pub const MAX_ENUM_R: usize = 4;

/// Monte Carlo checks pass when the estimate is within this many standard
/// errors above the bound.
pub const MC_SIGMAS: f64 = 4.0;
pub const MIN_TRIALS: u64 = 10_000;

/// Exact law of a random permutation, keyed by its forward table.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    n: usize,
    branches: u64,
    probs: BTreeMap<Vec<usize>, Ratio<u64>>,
}

impl PartialEq for ExactDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.probs == other.probs
    }
}

impl ExactDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of leaves in the branch tree that produced the law.
    pub fn branches(&self) -> u64 {
        self.branches
    }

    pub fn probability(&self, sigma: &[usize]) -> Ratio<u64> {
        self.probs.get(sigma).copied().unwrap_or_else(Ratio::zero)
    }

    pub fn total(&self) -> Ratio<u64> {
        self.probs.values().fold(Ratio::zero(), |acc, p| acc + p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], Ratio<u64>)> {
        self.probs.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Law of `f(σ)`.
    pub fn map<F: Fn(&Permutation) -> Permutation>(&self, f: F) -> ExactDistribution {
        let mut probs = BTreeMap::new();
        for (sigma, p) in &self.probs {
            let s =
                Permutation::from_forward(sigma.clone()).expect("stored tables are permutations");
            *probs
                .entry(f(&s).forward().to_vec())
                .or_insert_with(Ratio::zero) += *p;
        }
        ExactDistribution {
            n: self.n,
            branches: self.branches,
            probs,
        }
    }

    /// Joint law of `(σ(x_1), …, σ(x_r))`.
    pub fn marginal(&self, xs: &[usize]) -> BTreeMap<Vec<usize>, Ratio<u64>> {
        let mut out = BTreeMap::new();
        for (sigma, p) in &self.probs {
            let key: Vec<usize> = xs.iter().map(|&x| sigma[x]).collect();
            *out.entry(key).or_insert_with(Ratio::zero) += *p;
        }
        out
    }

    /// Probability that `σ(x) = y` for every listed pair.
    pub fn event_probability(&self, constraints: &[(usize, usize)]) -> Ratio<u64> {
        self.probs
            .iter()
            .filter(|(sigma, _)| constraints.iter().all(|&(x, y)| sigma[x] == y))
            .fold(Ratio::zero(), |acc, (_, p)| acc + p)
    }
}

/// Replays a fixed list of choices and records the bound of every draw.
struct Scripted<'a> {
    script: &'a [usize],
    bounds: Vec<usize>,
}

impl UniformSource for Scripted<'_> {
    fn below(&mut self, bound: usize) -> usize {
        let choice = self.script.get(self.bounds.len()).copied().unwrap_or(0);
        self.bounds.push(bound);
        choice
    }
}

/// Exact law of `Swap(π; xs)`, by walking every branch of the mate draws.
pub fn enumerate_swap(pi: &Permutation, xs: &[usize]) -> Result<ExactDistribution> {
    let n = pi.len();
    if n > MAX_ENUM_N || xs.len() > MAX_ENUM_R {
        return Err(Error::GuardExceeded(format!(
            "n = {n}, r = {} (limits {MAX_ENUM_N} and {MAX_ENUM_R})",
            xs.len()
        )));
    }
    let mut probs = BTreeMap::new();
    let mut script: Vec<usize> = Vec::new();
    let mut branches = 0u64;
    loop {
        let mut src = Scripted {
            script: &script,
            bounds: Vec::new(),
        };
        let mut out = pi.clone();
        swap(&mut out, xs, &mut src)?;
        let bounds = src.bounds;
        let denom: u64 = bounds.iter().map(|&b| b as u64).product();
        *probs
            .entry(out.forward().to_vec())
            .or_insert_with(Ratio::zero) += Ratio::new(1, denom);
        branches += 1;
        // odometer over the mixed-radix choice sequence
        script.resize(bounds.len(), 0);
        match (0..bounds.len()).rev().find(|&j| script[j] + 1 < bounds[j]) {
            Some(j) => {
                script.truncate(j + 1);
                script[j] += 1;
            }
            None => break,
        }
    }
    Ok(ExactDistribution { n, branches, probs })
}

/// Exact law of the range-side variant: `Swap(π⁻¹; ys)⁻¹`.
pub fn enumerate_swap2(pi: &Permutation, ys: &[usize]) -> Result<ExactDistribution> {
    Ok(enumerate_swap(&pi.inverse(), ys)?.map(Permutation::inverse))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `(n-r)! (n-q)! / (n! (n-q-r+s)!)`.
pub fn g_bound(n: usize, r: usize, s: usize, q: usize) -> Result<BigRational> {
    if s > q.min(r) {
        return Err(Error::Constraint(format!(
            "s = {s} exceeds min(q, r) = {}",
            q.min(r)
        )));
    }
    if q + r > n + s {
        return Err(Error::Constraint(format!(
            "q + r - s = {} exceeds n = {n}",
            q + r - s
        )));
    }
    let num = factorial(n - r) * factorial(n - q);
    let den = factorial(n) * factorial(n + s - q - r);
    Ok(BigRational::new(num, den))
}

fn to_big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    all_tuples(n, n)
        .into_iter()
        .map(|t| Permutation::from_forward(t).expect("tuple of all points"))
        .collect()
}

/// All ordered tuples of `r` distinct points of `0..n`.
pub fn all_tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, r: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(n, r, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    if r <= n {
        go(n, r, &mut Vec::new(), &mut vec![false; n], &mut out);
    }
    out
}

fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == q {
            out.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Outcome of one pass/fail check, with a human-readable explanation.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: u64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, cases: u64, failure: Option<String>) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed: failure.is_none(),
            cases,
            detail: failure.unwrap_or_else(|| format!("{cases} cases, no counterexample")),
        }
    }
}

/// For `n ≤ n_max`, `r ≤ r_max` and `bases` random base permutations per
/// size, the images of the swapped points are uniform over ordered tuples of
/// distinct values, and the law totals exactly one.
pub fn check_swap_uniformity(
    n_max: usize,
    r_max: usize,
    bases: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let mut cases = 0;
    for n in 1..=n_max {
        let mut rng = Rng::derive(seed, &[n as u64]);
        for _ in 0..bases {
            let pi = crate::perm::random_permutation(n, &mut rng);
            for r in 0..=r_max.min(n) {
                let falling: u64 = (0..r).map(|i| (n - i) as u64).product();
                let expected = Ratio::new(1, falling);
                for xs in all_tuples(n, r) {
                    cases += 1;
                    let d = enumerate_swap(&pi, &xs)?;
                    let fail = |why: String| {
                        Ok(CheckOutcome::new(
                            "swap-uniform",
                            cases,
                            Some(format!("pi={:?} xs={xs:?}: {why}", pi.forward())),
                        ))
                    };
                    if d.total() != Ratio::one() {
                        return fail(format!("total {}", d.total()));
                    }
                    if d.branches() != falling {
                        return fail(format!("{} branches, expected {falling}", d.branches()));
                    }
                    let marginal = d.marginal(&xs);
                    if marginal.len() as u64 != falling {
                        return fail(format!(
                            "{} image tuples, expected {falling}",
                            marginal.len()
                        ));
                    }
                    if let Some((t, p)) = marginal.iter().find(|(_, p)| **p != expected) {
                        return fail(format!(
                            "image {t:?} has probability {p}, expected {expected}"
                        ));
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("swap-uniform", cases, None))
}

/// Relabeling invariance of the swap law on either side:
/// `Swap(πτ; τ⁻¹xs) ~ Swap(π; xs)·τ` and `Swap(τπ; xs) ~ τ·Swap(π; xs)`.
pub fn check_relabeling(n_max: usize, r_max: usize) -> Result<CheckOutcome> {
    let mut cases = 0;
    for n in 1..=n_max {
        let perms = all_permutations(n);
        for pi in &perms {
            for r in 0..=r_max.min(n) {
                for xs in all_tuples(n, r) {
                    let base = enumerate_swap(pi, &xs)?;
                    for tau in &perms {
                        cases += 1;
                        let tau_inv = tau.inverse();
                        let moved: Vec<usize> = xs.iter().map(|&x| tau_inv.apply(x)).collect();
                        let domain = enumerate_swap(&pi.compose(tau)?, &moved)?;
                        let expect = base.map(|s| s.compose(tau).expect("same size"));
                        if domain != expect {
                            return Ok(CheckOutcome::new(
                                "relabel",
                                cases,
                                Some(format!(
                                    "domain relabel: pi={:?} xs={xs:?} tau={:?}",
                                    pi.forward(),
                                    tau.forward()
                                )),
                            ));
                        }
                        let range = enumerate_swap(&tau.compose(pi)?, &xs)?;
                        let expect = base.map(|s| tau.compose(s).expect("same size"));
                        if range != expect {
                            return Ok(CheckOutcome::new(
                                "relabel",
                                cases,
                                Some(format!(
                                    "range relabel: pi={:?} xs={xs:?} tau={:?}",
                                    pi.forward(),
                                    tau.forward()
                                )),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("relabel", cases, None))
}

/// The order in which the points are swapped does not change the law.
pub fn check_order_invariance(n_max: usize, r_max: usize) -> Result<CheckOutcome> {
    let mut cases = 0;
    for n in 1..=n_max {
        for pi in &all_permutations(n) {
            for r in 0..=r_max.min(n) {
                for xs in all_tuples(n, r) {
                    let base = enumerate_swap(pi, &xs)?;
                    for rho in all_tuples(r, r) {
                        cases += 1;
                        let reordered: Vec<usize> = rho.iter().map(|&i| xs[i]).collect();
                        if enumerate_swap(pi, &reordered)? != base {
                            return Ok(CheckOutcome::new(
                                "order",
                                cases,
                                Some(format!(
                                    "pi={:?} xs={xs:?} order={reordered:?}",
                                    pi.forward()
                                )),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("order", cases, None))
}

/// Swapping domain points and swapping their images give the same law.
pub fn check_swap2(n_max: usize, r_max: usize) -> Result<CheckOutcome> {
    let mut cases = 0;
    for n in 1..=n_max {
        for pi in &all_permutations(n) {
            for r in 0..=r_max.min(n) {
                for xs in all_tuples(n, r) {
                    cases += 1;
                    let ys: Vec<usize> = xs.iter().map(|&x| pi.apply(x)).collect();
                    if enumerate_swap(pi, &xs)? != enumerate_swap2(pi, &ys)? {
                        return Ok(CheckOutcome::new(
                            "swap2",
                            cases,
                            Some(format!("pi={:?} xs={xs:?}", pi.forward())),
                        ));
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("swap2", cases, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCounterexample {
    pub pi: Vec<usize>,
    pub xs: Vec<usize>,
    pub constraints: Vec<(usize, usize)>,
    pub s: usize,
    pub probability: String,
    pub bound: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub configurations: u64,
    pub counterexample: Option<BoundCounterexample>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Longest prefix `x_1..x_s` that can be paired injectively with
/// constraints `(x', y')` having `x_i = x'` or `π(x_i) = y'`.
fn matched_prefix(pi: &Permutation, xs: &[usize], constraints: &[(usize, usize)]) -> usize {
    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &c in &adj[i] {
            if !seen[c] {
                seen[c] = true;
                if owner[c].is_none_or(|j| augment(j, adj, owner, seen)) {
                    owner[c] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let adj: Vec<Vec<usize>> = xs
        .iter()
        .map(|&x| {
            (0..constraints.len())
                .filter(|&c| constraints[c].0 == x || constraints[c].1 == pi.apply(x))
                .collect()
        })
        .collect();
    let mut owner = vec![None; constraints.len()];
    let mut s = 0;
    while s < xs.len() && s < constraints.len() {
        let mut seen = vec![false; constraints.len()];
        if !augment(s, &adj, &mut owner, &mut seen) {
            break;
        }
        s += 1;
    }
    s
}

/// Checks one configuration. An ordered constraint list with a valid `s`
/// has the same probability as its set, and its bound is at least the bound
/// at the largest admissible `s` (the bound decreases in `s`), so testing
/// that largest `s` covers every ordering. Returns `None` when no `s` meets
/// the size condition.
fn bound_case(
    pi: &Permutation,
    xs: &[usize],
    dist: &ExactDistribution,
    constraints: &[(usize, usize)],
) -> Result<Option<Option<BoundCounterexample>>> {
    let (n, r, q) = (pi.len(), xs.len(), constraints.len());
    let s = matched_prefix(pi, xs, constraints);
    if q + r > n + s {
        return Ok(None);
    }
    let p = to_big(dist.event_probability(constraints));
    let bound = g_bound(n, r, s, q)?;
    Ok(Some((p > bound).then(|| BoundCounterexample {
        pi: pi.forward().to_vec(),
        xs: xs.to_vec(),
        constraints: constraints.to_vec(),
        s,
        probability: p.to_string(),
        bound: bound.to_string(),
    })))
}

pub const BOUND_SAMPLES: usize = 1000;
const EXHAUSTIVE_N: usize = 4;

/// Exhaustive over all configurations for `n ≤ 4`; 1000 sampled
/// configurations (biased towards overlapping constraints) for `n = 5, 6`.
pub fn check_constraint_bound(n_max: usize) -> Result<BoundReport> {
    if n_max > 6 {
        return Err(Error::GuardExceeded(format!("n_max = {n_max} (limit 6)")));
    }
    let mut configurations = 0u64;
    for n in 1..=n_max.min(EXHAUSTIVE_N) {
        let ys_by_q: Vec<Vec<Vec<usize>>> = (0..=n).map(|q| all_tuples(n, q)).collect();
        for pi in &all_permutations(n) {
            for r in 0..=n.min(MAX_ENUM_R) {
                for xs in all_tuples(n, r) {
                    let dist = enumerate_swap(pi, &xs)?;
                    for (q, ys_q) in ys_by_q.iter().enumerate() {
                        for xset in subsets(n, q) {
                            for ys in ys_q {
                                let cs: Vec<(usize, usize)> =
                                    xset.iter().copied().zip(ys.iter().copied()).collect();
                                if let Some(result) = bound_case(pi, &xs, &dist, &cs)? {
                                    configurations += 1;
                                    if result.is_some() {
                                        return Ok(BoundReport {
                                            configurations,
                                            counterexample: result,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for n in EXHAUSTIVE_N + 1..=n_max {
        let mut rng = Rng::derive(0x5151, &[n as u64]);
        let mut done = 0;
        while done < BOUND_SAMPLES {
            let pi = crate::perm::random_permutation(n, &mut rng);
            let r = rng.below(n.min(MAX_ENUM_R) + 1);
            let mut pool: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut pool);
            let xs = pool[..r].to_vec();
            let q = rng.below(n + 1);
            let cs = sample_constraints(&pi, &xs, q, &mut rng);
            let dist = enumerate_swap(&pi, &xs)?;
            if let Some(result) = bound_case(&pi, &xs, &dist, &cs)? {
                done += 1;
                configurations += 1;
                if result.is_some() {
                    return Ok(BoundReport {
                        configurations,
                        counterexample: result,
                    });
                }
            }
        }
    }
    Ok(BoundReport {
        configurations,
        counterexample: None,
    })
}

/// `q` constraints with distinct x' and distinct y'; the first few are tied
/// to the swapped points through a shared coordinate when possible.
#[allow(clippy::needless_range_loop)]
fn sample_constraints(
    pi: &Permutation,
    xs: &[usize],
    q: usize,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    let n = pi.len();
    let mut used_x = vec![false; n];
    let mut used_y = vec![false; n];
    let tied = rng.below(q.min(xs.len()) + 1);
    let mut out = Vec::with_capacity(q);
    let pick = |used: &mut Vec<bool>, rng: &mut Rng| {
        let free: Vec<usize> = (0..n).filter(|&v| !used[v]).collect();
        let v = free[rng.below(free.len())];
        used[v] = true;
        v
    };
    for i in 0..q {
        let (mut x, mut y) = (None, None);
        if i < tied {
            let (xi, yi) = (xs[i], pi.apply(xs[i]));
            if rng.below(2) == 0 && !used_x[xi] {
                used_x[xi] = true;
                x = Some(xi);
            } else if !used_y[yi] {
                used_y[yi] = true;
                y = Some(yi);
            }
        }
        let x = x.unwrap_or_else(|| pick(&mut used_x, rng));
        let y = y.unwrap_or_else(|| pick(&mut used_y, rng));
        out.push((x, y));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    pub z: f64,
    pub passed: bool,
}

fn summarize(trials: u64, sum: f64, sumsq: f64, bound: f64) -> MonteCarloReport {
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    let se = (var / n).sqrt();
    let excess = mean - bound;
    let z = if se > 0.0 {
        excess / se
    } else if excess <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    MonteCarloReport {
        trials,
        mean,
        std_error: se,
        bound,
        z,
        passed: excess <= MC_SIGMAS * se + 1e-12,
    }
}

const MC_CHUNK: u64 = 1024;

/// Runs `experiment(seed)` for seeds `1..=trials` (in parallel, aggregated
/// in seed order) and compares the mean of each output coordinate with the
/// matching bound.
pub fn monte_carlo_bounds<F>(
    trials: u64,
    bounds: &[f64],
    experiment: F,
) -> Result<Vec<MonteCarloReport>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!(
            "{trials} trials; at least {MIN_TRIALS} required"
        )));
    }
    let m = bounds.len();
    let chunks = trials.div_ceil(MC_CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(0.0, 0.0); m];
            for seed in c * MC_CHUNK + 1..=((c + 1) * MC_CHUNK).min(trials) {
                let values = experiment(seed)?;
                if values.len() != m {
                    return Err(Error::SizeMismatch {
                        expected: m,
                        found: values.len(),
                    });
                }
                for (a, v) in acc.iter_mut().zip(values) {
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![(0.0, 0.0); m];
    for acc in partial {
        for (t, a) in total.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    Ok(total
        .into_iter()
        .zip(bounds)
        .map(|((s, sq), &b)| summarize(trials, s, sq, b))
        .collect())
}

pub fn monte_carlo_bound<F>(trials: u64, bound: f64, experiment: F) -> Result<MonteCarloReport>
where
    F: Fn(u64) -> f64 + Sync,
{
    let mut v = monte_carlo_bounds(trials, &[bound], |s| Ok(vec![experiment(s)]))?;
    Ok(v.remove(0))
}

/// One permutation of `[4]` with three overlapping events:
/// `π(1)=1`, `π(2)=2 ∧ π(3)=3`, and `π(1)=2 ∧ π(4)=4` (1-based).
pub fn small_instance() -> EventSet {
    let ev = |id, ts: &[(usize, usize)]| {
        BadEvent::new(id, ts.iter().map(|&(x, y)| Triple::new(0, x, y)).collect())
            .expect("distinct triples")
    };
    let events = vec![
        ev(1, &[(0, 0)]),
        ev(2, &[(1, 1), (2, 2)]),
        ev(3, &[(0, 1), (3, 3)]),
    ];
    EventSet::new(vec![4], events).expect("valid instance")
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeFrequency {
    pub root: EventId,
    pub child: Option<EventId>,
    pub report: MonteCarloReport,
}

/// Frequency with which each witness tree of at most two nodes appears in
/// a run, against the product of its node probabilities.
pub fn witness_tree_frequencies(
    events: &EventSet,
    mode: DependencyMode,
    trials: u64,
) -> Result<Vec<TreeFrequency>> {
    let p: HashMap<EventId, f64> = events
        .events()
        .iter()
        .map(|e| prob_omega(e, events.sizes()).map(|pr| (e.id(), pr.value)))
        .collect::<Result<_>>()?;
    let mut shapes: Vec<(EventId, Option<EventId>)> = Vec::new();
    for e in events.events() {
        shapes.push((e.id(), None));
        for nb in events.neighborhood(e, mode) {
            shapes.push((e.id(), Some(nb.id())));
        }
    }
    let index: HashMap<(EventId, Option<EventId>), usize> =
        shapes.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let bounds: Vec<f64> = shapes
        .iter()
        .map(|&(root, child)| p[&root] * child.map_or(1.0, |c| p[&c]))
        .collect();
    let reports = monte_carlo_bounds(trials, &bounds, |seed| {
        let mut oracle = ExplicitOracle::new(events.clone());
        let cfg = EngineConfig {
            record_log: true,
            ..EngineConfig::with_seed(seed)
        };
        let out = run(&mut oracle, &cfg)?;
        let log = out.log.expect("log requested");
        let mut hit = vec![0.0; shapes.len()];
        for t in 1..=log.len() {
            let tree = build_witness_tree(log.entries(), t, mode)?;
            if tree.len() <= 2 {
                let child = tree.nodes().get(1).map(|n| n.event.id());
                if let Some(&i) = index.get(&(tree.root().event.id(), child)) {
                    hit[i] = 1.0;
                }
            }
        }
        Ok(hit)
    })?;
    Ok(shapes
        .into_iter()
        .zip(reports)
        .map(|((root, child), report)| TreeFrequency {
            root,
            child,
            report,
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EventReport {
    pub id: EventId,
    pub report: MonteCarloReport,
}

/// Weights on the boundary of the criterion (zero slack), if they exist.
pub fn boundary_weights(
    events: &EventSet,
    mode: DependencyMode,
) -> Result<crate::criteria::WeightMap> {
    least_fixed_point(events, mode, 100_000)?
        .ok_or_else(|| Error::CriterionFailed("no weighting satisfies the criterion".into()))
}

/// Mean number of resamplings of each event against its boundary weight.
pub fn resampling_expectation(
    events: &EventSet,
    mode: DependencyMode,
    trials: u64,
) -> Result<Vec<EventReport>> {
    let mu = boundary_weights(events, mode)?;
    let ids: Vec<EventId> = events.events().iter().map(BadEvent::id).collect();
    let bounds: Vec<f64> = ids
        .iter()
        .map(|&id| mu.get(id).expect("weight per event"))
        .collect();
    let reports = monte_carlo_bounds(trials, &bounds, |seed| {
        let mut oracle = ExplicitOracle::new(events.clone());
        let out = run(&mut oracle, &EngineConfig::with_seed(seed))?;
        Ok(ids
            .iter()
            .map(|id| out.stats.per_event.get(id).copied().unwrap_or(0) as f64)
            .collect())
    })?;
    Ok(ids
        .into_iter()
        .zip(reports)
        .map(|(id, report)| EventReport { id, report })
        .collect())
}

/// Frequency of each conjunction in the output against its output bound.
pub fn output_distribution(
    events: &EventSet,
    conjunctions: &[BadEvent],
    mode: DependencyMode,
    trials: u64,
) -> Result<Vec<EventReport>> {
    let mu = boundary_weights(events, mode)?;
    let bounds: Vec<f64> = conjunctions
        .iter()
        .map(|e| mt_bound(e, &mu, events, mode))
        .collect::<Result<_>>()?;
    let reports = monte_carlo_bounds(trials, &bounds, |seed| {
        let mut oracle = ExplicitOracle::new(events.clone());
        let out = run(&mut oracle, &EngineConfig::with_seed(seed))?;
        Ok(conjunctions
            .iter()
            .map(|e| if is_true(e, &out.perms) { 1.0 } else { 0.0 })
            .collect())
    })?;
    Ok(conjunctions
        .iter()
        .zip(reports)
        .map(|(e, report)| EventReport { id: e.id(), report })
        .collect())
}

/// Conjunctions used with [`small_instance`]: four single assignments and
/// one pair (1-based `π(2)=1`, `π(3)=4`, `π(4)=1`, `π(1)=3`, and
/// `π(1)=2 ∧ π(2)=1`).
pub fn small_conjunctions() -> Vec<BadEvent> {
    [
        vec![(1, 0)],
        vec![(2, 3)],
        vec![(3, 0)],
        vec![(0, 2)],
        vec![(0, 1), (1, 0)],
    ]
    .into_iter()
    .enumerate()
    .map(|(i, ts)| {
        BadEvent::new(
            100 + i as EventId,
            ts.into_iter().map(|(x, y)| Triple::new(0, x, y)).collect(),
        )
        .expect("distinct triples")
    })
    .collect()
}

/// Lexicographically first MIS straight from the definition: scan vertices
/// by rank and keep each one not adjacent to an already kept vertex.
pub fn definitional_lfmis(g: &ConflictGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by_key(|&v| g.rank()[v]);
    let mut adjacent = vec![Vec::new(); g.len()];
    for &(u, v) in g.edges() {
        adjacent[u].push(v);
        adjacent[v].push(u);
    }
    let mut kept = vec![false; g.len()];
    let mut out = Vec::new();
    for v in order {
        if !adjacent[v].iter().any(|&u| kept[u]) {
            kept[v] = true;
            out.push(v);
        }
    }
    out
}

/// Random DAG on at most `max_vertices` vertices, edges oriented by a
/// random rank.
pub fn random_dag(max_vertices: usize, rng: &mut Rng) -> ConflictGraph {
    let n = 1 + rng.below(max_vertices);
    let mut rank: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut rank);
    let density = rng.unit();
    let mut g = ConflictGraph::new(rank.clone()).expect("rank is a permutation");
    for u in 0..n {
        for v in 0..n {
            if rank[u] < rank[v] && rng.unit() < density {
                g.add_edge(u, v).expect("edge follows the rank");
            }
        }
    }
    g
}

/// Peeling LFMIS agrees with the definition on `trials` random DAGs.
pub fn check_lfmis(trials: usize, max_vertices: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed);
    for case in 0..trials {
        let g = random_dag(max_vertices, &mut rng);
        let peeled = lfmis(&g)?.members;
        let reference = definitional_lfmis(&g);
        if peeled != reference {
            return Ok(CheckOutcome::new(
                "lfmis",
                case as u64 + 1,
                Some(format!(
                    "case {case}: peel {peeled:?} vs definition {reference:?}"
                )),
            ));
        }
    }
    Ok(CheckOutcome::new("lfmis", trials as u64, None))
}

/// Names accepted by [`run_check`].
pub const CHECKS: &[&str] = &[
    "swap-uniform",
    "relabel",
    "order",
    "swap2",
    "prop51",
    "lfmis",
    "witness-tree",
    "expectation",
    "mt-distribution",
];

fn mc_outcome(name: &str, trials: u64, failures: Vec<String>, checked: usize) -> CheckOutcome {
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    let mut out = CheckOutcome::new(name, trials, failure);
    if out.passed {
        out.detail =
            format!("{checked} bounds over {trials} runs, all within {MC_SIGMAS} standard errors");
    }
    out
}

/// Runs a named check at its standard size. `trials` applies to the Monte
/// Carlo checks only.
pub fn run_check(name: &str, trials: u64) -> Result<CheckOutcome> {
    match name {
        "swap-uniform" => check_swap_uniformity(5, 3, 20, 0),
        "relabel" => check_relabeling(4, 3),
        "order" => check_order_invariance(4, 3),
        "swap2" => check_swap2(4, 3),
        "prop51" => {
            let report = check_constraint_bound(6)?;
            let failure = report.counterexample.as_ref().map(|c| format!("{c:?}"));
            Ok(CheckOutcome::new("prop51", report.configurations, failure))
        }
        "lfmis" => check_lfmis(1000, 30, 0),
        "witness-tree" => {
            let rows =
                witness_tree_frequencies(&small_instance(), DependencyMode::Standard, trials)?;
            let failures = rows
                .iter()
                .filter(|r| !r.report.passed)
                .map(|r| {
                    format!(
                        "tree {}({:?}): {:.6} > {:.6}",
                        r.root, r.child, r.report.mean, r.report.bound
                    )
                })
                .collect();
            Ok(mc_outcome(name, trials, failures, rows.len()))
        }
        "expectation" => {
            let rows = resampling_expectation(&small_instance(), DependencyMode::Standard, trials)?;
            let failures = rows
                .iter()
                .filter(|r| !r.report.passed)
                .map(|r| {
                    format!(
                        "event {}: {:.6} > {:.6}",
                        r.id, r.report.mean, r.report.bound
                    )
                })
                .collect();
            Ok(mc_outcome(name, trials, failures, rows.len()))
        }
        "mt-distribution" => {
            let rows = output_distribution(
                &small_instance(),
                &small_conjunctions(),
                DependencyMode::Standard,
                trials,
            )?;
            let failures = rows
                .iter()
                .filter(|r| !r.report.passed)
                .map(|r| {
                    format!(
                        "conjunction {}: {:.6} > {:.6}",
                        r.id, r.report.mean, r.report.bound
                    )
                })
                .collect();
            Ok(mc_outcome(name, trials, failures, rows.len()))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown check {other:?}; expected one of {}",
            CHECKS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::from_forward(v.to_vec()).unwrap()
    }

    #[test]
    fn empty_swap_is_a_point_mass() {
        let pi = p(&[2, 0, 1]);
        let d = enumerate_swap(&pi, &[]).unwrap();
        assert_eq!(d.support_len(), 1);
        assert_eq!(d.probability(&[2, 0, 1]), Ratio::one());
    }

    #[test]
    fn two_point_swap() {
        let d = enumerate_swap(&Permutation::identity(2), &[0]).unwrap();
        assert_eq!(d.probability(&[0, 1]), Ratio::new(1, 2));
        assert_eq!(d.probability(&[1, 0]), Ratio::new(1, 2));
    }

    #[test]
    fn full_swap_is_uniform() {
        let d = enumerate_swap(&Permutation::identity(3), &[0, 1, 2]).unwrap();
        assert_eq!(d.support_len(), 6);
        assert_eq!(d.branches(), 6);
        assert!(d.iter().all(|(_, pr)| pr == Ratio::new(1, 6)));
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_swap(&Permutation::identity(9), &[0]),
            Err(Error::GuardExceeded(_))
        ));
        assert!(enumerate_swap(&Permutation::identity(6), &[0, 1, 2, 3, 4]).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(
            g_bound(3, 1, 1, 1).unwrap(),
            BigRational::new(1.into(), 3.into())
        );
        assert_eq!(
            g_bound(3, 1, 0, 1).unwrap(),
            BigRational::new(2.into(), 3.into())
        );
        assert_eq!(g_bound(5, 0, 0, 3).unwrap(), BigRational::one());
        assert!(g_bound(3, 1, 2, 2).is_err());
        assert!(g_bound(3, 2, 0, 2).is_err());
    }

    #[test]
    fn tight_single_constraint() {
        let pi = Permutation::identity(3);
        let d = enumerate_swap(&pi, &[0]).unwrap();
        let cs = [(0, 2)];
        assert_eq!(matched_prefix(&pi, &[0], &cs), 1);
        assert_eq!(
            to_big(d.event_probability(&cs)),
            g_bound(3, 1, 1, 1).unwrap()
        );
    }

    #[test]
    fn disjoint_constraints_at_four() {
        let pi = Permutation::identity(4);
        let xs = [0, 1];
        let d = enumerate_swap(&pi, &xs).unwrap();
        let cs = [(2, 3), (3, 2)];
        assert_eq!(matched_prefix(&pi, &xs, &cs), 0);
        assert!(to_big(d.event_probability(&cs)) <= g_bound(4, 2, 0, 2).unwrap());
    }

    #[test]
    fn small_exhaustive_checks() {
        assert!(check_swap_uniformity(4, 3, 5, 1).unwrap().passed);
        assert!(check_relabeling(3, 2).unwrap().passed);
        assert!(check_order_invariance(3, 3).unwrap().passed);
        assert!(check_swap2(3, 3).unwrap().passed);
        let r = check_constraint_bound(3).unwrap();
        assert!(r.passed(), "{:?}", r.counterexample);
        assert!(r.configurations > 0);
    }

    #[test]
    fn monte_carlo_examples() {
        let never = monte_carlo_bound(10_000, 0.0, |_| 0.0).unwrap();
        assert!(never.passed);
        let coin = |s: u64| (Rng::new(s).below(2)) as f64;
        let fair = monte_carlo_bound(100_000, 0.5, coin).unwrap();
        assert!(fair.passed && fair.z.abs() <= 4.0, "{fair:?}");
        let biased = monte_carlo_bound(100_000, 0.4, coin).unwrap();
        assert!(!biased.passed && biased.z > 4.0);
        assert!(monte_carlo_bound(10, 0.0, |_| 0.0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let f = |s: u64| Rng::new(s).unit();
        let a = monte_carlo_bound(20_000, 0.5, f).unwrap();
        let b = monte_carlo_bound(20_000, 0.5, f).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn lfmis_matches_definition() {
        assert!(check_lfmis(200, 20, 3).unwrap().passed);
    }

    #[test]
    fn small_instance_has_boundary_weights() {
        let set = small_instance();
        let mu = boundary_weights(&set, DependencyMode::Standard).unwrap();
        let report =
            crate::criteria::check_asymmetric(&set, &mu, DependencyMode::Standard).unwrap();
        assert!(report.satisfied);
        assert!(report.epsilon < 1e-9);
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(run_check("nope", MIN_TRIALS).is_err());
    }
}
