//! Atomic bad-events over a tuple of permutations, their probability under
//! the uniform measure, the dependency relation, and violation detection.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::{splitmix64, UniformSource};

pub type EventId = u64;

/// The constraint `π_k(x) = y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub k: usize,
    pub x: usize,
    pub y: usize,
}

impl Triple {
    pub const fn new(k: usize, x: usize, y: usize) -> Self {
        Triple { k, x, y }
    }

    /// Whether the two constraints touch the same domain or range slot.
    #[inline]
    pub fn overlaps(&self, other: &Triple) -> bool {
        self.k == other.k && (self.x == other.x || self.y == other.y)
    }

    /// Overlap that makes the constraints incompatible (lopsided dependency).
    #[inline]
    pub fn conflicts(&self, other: &Triple) -> bool {
        self.k == other.k && ((self.x == other.x) != (self.y == other.y))
    }
}

/// A conjunction of constraints with an identity.
///
/// Triples are kept sorted by `(k, x, y)` and never contain two distinct
/// constraints on one domain point or one range value (such an event could
/// never hold).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BadEvent {
    id: EventId,
    triples: Vec<Triple>,
}

impl BadEvent {
    pub fn new(id: EventId, mut triples: Vec<Triple>) -> Result<Self> {
        triples.sort_unstable();
        triples.dedup();
        if triples.is_empty() {
            return Err(Error::InvalidEvent(format!("event {id} has no triples")));
        }
        for (i, a) in triples.iter().enumerate() {
            for b in &triples[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidEvent(format!(
                        "event {id}: ({}, {}, {}) and ({}, {}, {}) can never hold together",
                        a.k, a.x, a.y, b.k, b.x, b.y
                    )));
                }
            }
        }
        Ok(BadEvent { id, triples })
    }

    /// An event whose id is derived from its content.
    pub fn from_triples(triples: Vec<Triple>) -> Result<Self> {
        let mut sorted = triples;
        sorted.sort_unstable();
        sorted.dedup();
        let id = content_id(&sorted);
        BadEvent::new(id, sorted)
    }

    pub fn id(&self) -> EventId {
        self.id
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Checks every triple against the permutation sizes.
    pub fn validate(&self, sizes: &[usize]) -> Result<()> {
        for t in &self.triples {
            let n = *sizes.get(t.k).ok_or(Error::OutOfRange {
                index: t.k,
                size: sizes.len(),
            })?;
            if t.x >= n || t.y >= n {
                return Err(Error::OutOfRange {
                    index: t.x.max(t.y),
                    size: n,
                });
            }
        }
        Ok(())
    }

    /// Domain points grouped per permutation, in triple order.
    pub fn sources_by_perm(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for t in &self.triples {
            match out.last_mut() {
                Some((k, xs)) if *k == t.k => xs.push(t.x),
                _ => out.push((t.k, vec![t.x])),
            }
        }
        out
    }

    /// Number of triples in each permutation.
    pub fn counts_by_perm(&self) -> Vec<(usize, usize)> {
        self.sources_by_perm()
            .into_iter()
            .map(|(k, xs)| (k, xs.len()))
            .collect()
    }
}

/// Stable 64-bit id for a sorted triple list.
pub fn content_id(triples: &[Triple]) -> EventId {
    let mut h = 0x51_7C_C1_B7_27_22_0A_95u64;
    for t in triples {
        h = splitmix64(h ^ t.k as u64);
        h = splitmix64(h ^ t.x as u64);
        h = splitmix64(h ^ t.y as u64);
    }
    h
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyMode {
    #[default]
    Standard,
    Lopsided,
}

/// An event probability, exactly and as a float.
#[derive(Clone, Debug, PartialEq)]
pub struct Probability {
    pub exact: BigRational,
    pub value: f64,
}

/// `∏_k (n_k - r_k)! / n_k!` where `r_k` counts the event's triples in
/// permutation `k`.
pub fn prob_omega(event: &BadEvent, sizes: &[usize]) -> Result<Probability> {
    event.validate(sizes)?;
    let mut denom = BigInt::one();
    let mut value = 1.0f64;
    for (k, r) in event.counts_by_perm() {
        let n = sizes[k];
        if r > n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: r,
            });
        }
        for i in 0..r {
            denom *= BigInt::from(n - i);
            value /= (n - i) as f64;
        }
    }
    Ok(Probability {
        exact: BigRational::new(BigInt::one(), denom),
        value,
    })
}

/// The dependency relation `~`.
pub fn depends(a: &BadEvent, b: &BadEvent, mode: DependencyMode) -> bool {
    match mode {
        DependencyMode::Standard => a
            .triples
            .iter()
            .any(|s| b.triples.iter().any(|t| s.overlaps(t))),
        DependencyMode::Lopsided => {
            a.id == b.id
                || a.triples
                    .iter()
                    .any(|s| b.triples.iter().any(|t| s.conflicts(t)))
        }
    }
}

/// Whether every triple of the event holds under `perms`.
pub fn is_true(event: &BadEvent, perms: &[Permutation]) -> bool {
    event.triples.iter().all(|t| {
        perms
            .get(t.k)
            .is_some_and(|p| t.x < p.len() && p.apply(t.x) == t.y)
    })
}

/// An explicit, static list of events with per-slot indexes.
#[derive(Clone, Debug)]
pub struct EventSet {
    sizes: Vec<usize>,
    events: Vec<BadEvent>,
    /// `by_domain[k][x]`: indices of events holding a triple `(k, x, ·)`.
    by_domain: Vec<Vec<Vec<usize>>>,
    by_range: Vec<Vec<Vec<usize>>>,
}

impl EventSet {
    pub fn new(sizes: Vec<usize>, events: Vec<BadEvent>) -> Result<Self> {
        let mut by_domain: Vec<Vec<Vec<usize>>> =
            sizes.iter().map(|&n| vec![Vec::new(); n]).collect();
        let mut by_range = by_domain.clone();
        let mut ids = std::collections::HashSet::with_capacity(events.len());
        for (i, ev) in events.iter().enumerate() {
            ev.validate(&sizes)?;
            if !ids.insert(ev.id) {
                return Err(Error::InvalidEvent(format!("duplicate event id {}", ev.id)));
            }
            for t in &ev.triples {
                by_domain[t.k][t.x].push(i);
                by_range[t.k][t.y].push(i);
            }
        }
        Ok(EventSet {
            sizes,
            events,
            by_domain,
            by_range,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn events(&self) -> &[BadEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Indices of events with a triple `(k, x, ·)`.
    pub fn touching_domain(&self, k: usize, x: usize) -> &[usize] {
        &self.by_domain[k][x]
    }

    /// Indices of all events `B'` with `event ~ B'`, ascending. `event` need
    /// not belong to the set.
    pub fn neighborhood_indices(&self, event: &BadEvent, mode: DependencyMode) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for t in &event.triples {
            if t.k >= self.sizes.len() || t.x >= self.sizes[t.k] || t.y >= self.sizes[t.k] {
                continue;
            }
            for &i in self.by_domain[t.k][t.x]
                .iter()
                .chain(&self.by_range[t.k][t.y])
            {
                out.insert(i);
            }
        }
        let mut result: Vec<usize> = out
            .into_iter()
            .filter(|&i| depends(event, &self.events[i], mode))
            .collect();
        if mode == DependencyMode::Lopsided {
            // identity makes an event its own neighbour even without conflicts
            if let Some(pos) = self.events.iter().position(|e| e.id == event.id) {
                if let Err(at) = result.binary_search(&pos) {
                    result.insert(at, pos);
                }
            }
        }
        result
    }

    pub fn neighborhood(&self, event: &BadEvent, mode: DependencyMode) -> Vec<&BadEvent> {
        self.neighborhood_indices(event, mode)
            .into_iter()
            .map(|i| &self.events[i])
            .collect()
    }

    pub fn position(&self, id: EventId) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }
}

/// `{B' ∈ events : B ~ B'}`, via slot indexes.
pub fn neighborhood(event: &BadEvent, events: &EventSet, mode: DependencyMode) -> Vec<BadEvent> {
    events
        .neighborhood(event, mode)
        .into_iter()
        .cloned()
        .collect()
}

/// How the engine picks among currently true events.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Selection {
    /// Lowest event id.
    #[default]
    FirstTrue,
    UniformRandom,
    /// Lowest priority value, ties by id; unlisted events rank last.
    Priority(std::sync::Arc<std::collections::HashMap<EventId, i64>>),
}

/// The set of currently true events, kept both in id order and in an
/// indexable map for uniform sampling.
#[derive(Clone, Debug, Default)]
pub struct TrueSet {
    map: IndexMap<EventId, BadEvent>,
    ordered: BTreeSet<EventId>,
}

impl TrueSet {
    pub fn new() -> Self {
        TrueSet::default()
    }

    pub fn clear(&mut self) {
        self.map.clear();
        self.ordered.clear();
    }

    pub fn insert(&mut self, event: BadEvent) {
        let id = event.id;
        if self.map.insert(id, event).is_none() {
            self.ordered.insert(id);
        }
    }

    pub fn remove(&mut self, id: EventId) -> Option<BadEvent> {
        let removed = self.map.swap_remove(&id);
        if removed.is_some() {
            self.ordered.remove(&id);
        }
        removed
    }

    pub fn contains(&self, id: EventId) -> bool {
        self.map.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn first(&self) -> Option<&BadEvent> {
        self.ordered.iter().next().map(|id| &self.map[id])
    }

    pub fn get(&self, id: EventId) -> Option<&BadEvent> {
        self.map.get(&id)
    }

    /// All events, in id order.
    pub fn sorted(&self) -> Vec<BadEvent> {
        self.ordered.iter().map(|id| self.map[id].clone()).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = EventId> + '_ {
        self.ordered.iter().copied()
    }

    pub fn select<R: UniformSource + ?Sized>(
        &self,
        rule: &Selection,
        rng: &mut R,
    ) -> Option<&BadEvent> {
        if self.map.is_empty() {
            return None;
        }
        match rule {
            Selection::FirstTrue => self.first(),
            Selection::UniformRandom => {
                let i = rng.below(self.map.len());
                self.map.get_index(i).map(|(_, e)| e)
            }
            Selection::Priority(prio) => self
                .ordered
                .iter()
                .min_by_key(|id| (prio.get(id).copied().unwrap_or(i64::MAX), **id))
                .map(|id| &self.map[id]),
        }
    }
}

/// A detector for the currently true bad-events of an instance.
///
/// Implementations keep incremental state: after [`reset`](Self::reset) they
/// must be told about every change to the permutations through
/// [`after_swap`](Self::after_swap), and then [`true_set`](Self::true_set)
/// holds exactly the events true under the current permutations.
pub trait ViolationOracle {
    /// Sizes of the permutations.
    fn sizes(&self) -> &[usize];

    /// Rebuilds the detector state from scratch.
    fn reset(&mut self, perms: &[Permutation]);

    /// Entries `touched` of permutation `k` may have changed.
    fn after_swap(&mut self, perms: &[Permutation], k: usize, touched: &[usize]);

    fn true_set(&self) -> &TrueSet;

    /// Picks the event to resample next.
    fn select(
        &mut self,
        _perms: &[Permutation],
        rule: &Selection,
        rng: &mut dyn UniformSource,
    ) -> Option<BadEvent> {
        self.true_set().select(rule, rng).cloned()
    }

    /// Lowest-id true event.
    fn find_true(&self) -> Option<BadEvent> {
        self.true_set().first().cloned()
    }

    /// Every true event, once, in id order.
    fn all_true(&self) -> Vec<BadEvent> {
        self.true_set().sorted()
    }

    /// Label used for per-class statistics.
    fn class_of(&self, _event: &BadEvent) -> &'static str {
        "event"
    }
}

/// Detector over an explicit event list.
#[derive(Clone, Debug)]
pub struct ExplicitOracle {
    set: EventSet,
    truth: TrueSet,
}

impl ExplicitOracle {
    pub fn new(set: EventSet) -> Self {
        ExplicitOracle {
            set,
            truth: TrueSet::new(),
        }
    }

    pub fn event_set(&self) -> &EventSet {
        &self.set
    }

    fn refresh(&mut self, i: usize, perms: &[Permutation]) {
        let ev = &self.set.events[i];
        if is_true(ev, perms) {
            self.truth.insert(ev.clone());
        } else {
            self.truth.remove(ev.id);
        }
    }
}

impl ViolationOracle for ExplicitOracle {
    fn sizes(&self) -> &[usize] {
        &self.set.sizes
    }

    fn reset(&mut self, perms: &[Permutation]) {
        self.truth.clear();
        for i in 0..self.set.events.len() {
            self.refresh(i, perms);
        }
    }

    fn after_swap(&mut self, perms: &[Permutation], k: usize, touched: &[usize]) {
        for &x in touched {
            for j in 0..self.set.by_domain[k][x].len() {
                let i = self.set.by_domain[k][x][j];
                self.refresh(i, perms);
            }
        }
    }

    fn true_set(&self) -> &TrueSet {
        &self.truth
    }
}

/// Float view of an exact rational.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::random_permutation;
    use crate::rng::Rng;
    use num_traits::FromPrimitive;

    fn ev(id: EventId, ts: &[(usize, usize, usize)]) -> BadEvent {
        BadEvent::new(
            id,
            ts.iter().map(|&(k, x, y)| Triple::new(k, x, y)).collect(),
        )
        .unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from_i64(n).unwrap(), BigInt::from_i64(d).unwrap())
    }

    #[test]
    fn construction_rejects_impossible_events() {
        assert!(BadEvent::new(0, vec![Triple::new(0, 1, 2), Triple::new(0, 1, 3)]).is_err());
        assert!(BadEvent::new(0, vec![Triple::new(0, 1, 2), Triple::new(0, 4, 2)]).is_err());
        assert!(BadEvent::new(0, vec![]).is_err());
        // same slots in different permutations are fine
        assert!(BadEvent::new(0, vec![Triple::new(0, 1, 2), Triple::new(1, 1, 2)]).is_ok());
        let e = ev(3, &[(1, 0, 0), (0, 2, 1), (0, 0, 3)]);
        assert_eq!(e.triples()[0], Triple::new(0, 0, 3));
        assert_eq!(e.sources_by_perm(), vec![(0, vec![0, 2]), (1, vec![0])]);
    }

    #[test]
    fn prob_omega_examples() {
        assert_eq!(
            prob_omega(&ev(0, &[(0, 1, 2)]), &[5]).unwrap().exact,
            rat(1, 5)
        );
        let two = prob_omega(&ev(0, &[(0, 0, 1), (0, 2, 3)]), &[4]).unwrap();
        assert_eq!(two.exact, rat(1, 12));
        assert!((two.value - 1.0 / 12.0).abs() < 1e-15);
        let across = prob_omega(&ev(0, &[(0, 0, 0), (1, 0, 0)]), &[3, 3]).unwrap();
        assert_eq!(across.exact, rat(1, 9));
        assert!(prob_omega(&ev(0, &[(1, 0, 0)]), &[3]).is_err());
    }

    #[test]
    fn depends_examples() {
        let a = ev(0, &[(0, 1, 2)]);
        let b = ev(1, &[(0, 1, 3)]);
        let c = ev(2, &[(0, 3, 4)]);
        let a2 = ev(5, &[(0, 1, 2)]);
        for mode in [DependencyMode::Standard, DependencyMode::Lopsided] {
            assert!(depends(&a, &b, mode));
            assert!(!depends(&a, &c, mode));
        }
        assert!(depends(&a, &a2, DependencyMode::Standard));
        assert!(!depends(&a, &a2, DependencyMode::Lopsided));
        assert!(depends(&a, &a, DependencyMode::Lopsided));
    }

    #[test]
    fn is_true_examples() {
        let id = vec![Permutation::identity(3), Permutation::identity(3)];
        assert!(is_true(&ev(0, &[(0, 1, 1)]), &id));
        assert!(!is_true(&ev(0, &[(0, 1, 2)]), &id));
        assert!(is_true(&ev(0, &[(0, 1, 1), (1, 2, 2)]), &id));
    }

    #[test]
    fn neighborhood_examples() {
        let single = EventSet::new(vec![3], vec![ev(0, &[(0, 1, 1)])]).unwrap();
        let b = &single.events()[0];
        assert_eq!(
            neighborhood(b, &single, DependencyMode::Standard),
            vec![b.clone()]
        );

        let disjoint =
            EventSet::new(vec![4], vec![ev(0, &[(0, 0, 0)]), ev(1, &[(0, 1, 1)])]).unwrap();
        for e in disjoint.events() {
            assert_eq!(disjoint.neighborhood(e, DependencyMode::Standard), vec![e]);
        }

        let three = EventSet::new(
            vec![3],
            vec![
                ev(0, &[(0, 1, 1)]),
                ev(1, &[(0, 1, 2)]),
                ev(2, &[(0, 2, 1)]),
            ],
        )
        .unwrap();
        let n = three.neighborhood_indices(&three.events()[0], DependencyMode::Standard);
        assert_eq!(n, vec![0, 1, 2]);
    }

    #[test]
    fn event_set_rejects_duplicate_ids() {
        assert!(EventSet::new(vec![3], vec![ev(0, &[(0, 1, 1)]), ev(0, &[(0, 2, 2)])]).is_err());
        assert!(EventSet::new(vec![3], vec![ev(0, &[(0, 1, 3)])]).is_err());
    }

    fn random_event_set(rng: &mut Rng, sizes: &[usize], count: usize) -> EventSet {
        let mut events = Vec::new();
        let mut id = 0;
        while events.len() < count {
            let t = 1 + rng.below(3);
            let mut ts = Vec::new();
            for _ in 0..t {
                let k = rng.below(sizes.len());
                ts.push(Triple::new(k, rng.below(sizes[k]), rng.below(sizes[k])));
            }
            if let Ok(e) = BadEvent::new(id, ts) {
                events.push(e);
                id += 1;
            }
        }
        EventSet::new(sizes.to_vec(), events).unwrap()
    }

    #[test]
    fn indexed_neighborhood_matches_all_pairs() {
        let mut rng = Rng::new(11);
        for round in 0..10 {
            let sizes = [5 + round % 3, 6];
            let set = random_event_set(&mut rng, &sizes, 200);
            for mode in [DependencyMode::Standard, DependencyMode::Lopsided] {
                for (i, e) in set.events().iter().enumerate() {
                    let brute: Vec<usize> = set
                        .events()
                        .iter()
                        .enumerate()
                        .filter(|(_, f)| depends(e, f, mode))
                        .map(|(j, _)| j)
                        .collect();
                    assert_eq!(set.neighborhood_indices(e, mode), brute, "event {i}");
                }
            }
        }
    }

    #[test]
    fn explicit_oracle_tracks_truth_incrementally() {
        let mut rng = Rng::new(5);
        let sizes = [5, 4];
        let set = random_event_set(&mut rng, &sizes, 60);
        let mut oracle = ExplicitOracle::new(set.clone());
        let mut perms: Vec<Permutation> = sizes
            .iter()
            .map(|&n| random_permutation(n, &mut rng))
            .collect();
        oracle.reset(&perms);
        for _ in 0..300 {
            let k = rng.below(2);
            let n = sizes[k];
            let xs: Vec<usize> = vec![rng.below(n)];
            let mates = crate::perm::swap(&mut perms[k], &xs, &mut rng).unwrap();
            let touched: Vec<usize> = xs.iter().chain(&mates).copied().collect();
            oracle.after_swap(&perms, k, &touched);
            let brute: Vec<EventId> = set
                .events()
                .iter()
                .filter(|e| is_true(e, &perms))
                .map(|e| e.id())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let got: Vec<EventId> = oracle.all_true().iter().map(|e| e.id()).collect();
            assert_eq!(got, brute);
        }
    }

    #[test]
    fn true_set_selection_rules() {
        let mut s = TrueSet::new();
        let mut rng = Rng::new(0);
        assert!(s.select(&Selection::FirstTrue, &mut rng).is_none());
        s.insert(ev(9, &[(0, 0, 0)]));
        s.insert(ev(4, &[(0, 1, 1)]));
        s.insert(ev(4, &[(0, 1, 1)]));
        assert_eq!(s.len(), 2);
        assert_eq!(s.select(&Selection::FirstTrue, &mut rng).unwrap().id(), 4);
        let prio = std::sync::Arc::new([(9, -1)].into_iter().collect());
        assert_eq!(
            s.select(&Selection::Priority(prio), &mut rng).unwrap().id(),
            9
        );
        let picked = s.select(&Selection::UniformRandom, &mut rng).unwrap().id();
        assert!(picked == 4 || picked == 9);
        assert!(s.remove(4).is_some());
        assert!(s.remove(4).is_none());
        assert_eq!(s.first().unwrap().id(), 9);
    }

    proptest::proptest! {
        #[test]
        fn depends_is_symmetric(seed in proptest::prelude::any::<u64>()) {
            let mut rng = Rng::new(seed);
            let set = random_event_set(&mut rng, &[4, 4], 12);
            for a in set.events() {
                proptest::prop_assert!(depends(a, a, DependencyMode::Standard));
                for b in set.events() {
                    for mode in [DependencyMode::Standard, DependencyMode::Lopsided] {
                        proptest::prop_assert_eq!(depends(a, b, mode), depends(b, a, mode));
                    }
                }
                let p = prob_omega(a, set.sizes()).unwrap().value;
                proptest::prop_assert!(p > 0.0 && p < 1.0);
            }
        }
    }
}
