//! Local-lemma criterion checks.
//!
//! Large binomials and factorial ratios are evaluated through `ln Γ`; the
//! boundary of every inequality is accepted with a relative tolerance of
//! [`REL_TOL`].

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::events::{prob_omega, BadEvent, DependencyMode, EventId, EventSet};

/// Relative tolerance on criterion boundaries.
pub const REL_TOL: f64 = 1e-9;

/// `μ : events → [0, ∞)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightMap(HashMap<EventId, f64>);

impl WeightMap {
    pub fn new() -> Self {
        WeightMap::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (EventId, f64)>>(pairs: I) -> Result<Self> {
        let mut m = WeightMap::new();
        for (id, v) in pairs {
            m.insert(id, v)?;
        }
        Ok(m)
    }

    /// Same weight on every event of the set.
    pub fn uniform(events: &EventSet, value: f64) -> Result<Self> {
        WeightMap::from_pairs(events.events().iter().map(|e| (e.id(), value)))
    }

    pub fn insert(&mut self, id: EventId, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { id, value });
        }
        self.0.insert(id, value);
        Ok(())
    }

    pub fn get(&self, id: EventId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    fn require(&self, id: EventId) -> Result<f64> {
        self.get(id).ok_or(Error::MissingWeight(id))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSlack {
    pub id: EventId,
    pub mu: f64,
    pub rhs: f64,
    /// `μ(B) - P(B) ∏_{B'~B} (1 + μ(B'))`
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub satisfied: bool,
    pub slacks: Vec<EventSlack>,
    /// Event with the smallest ratio `μ(B) / rhs(B)`.
    pub worst_event: Option<EventId>,
    /// Largest `ε ≥ 0` with `μ(B) ≥ (1 + ε)·rhs(B)` for all `B`; `-1` when
    /// the criterion fails.
    pub epsilon: f64,
}

fn rhs(event: &BadEvent, events: &EventSet, mu: &WeightMap, mode: DependencyMode) -> Result<f64> {
    let p = prob_omega(event, events.sizes())?.value;
    let mut product = 1.0;
    for nb in events.neighborhood(event, mode) {
        product *= 1.0 + mu.require(nb.id())?;
    }
    Ok(p * product)
}

/// Evaluates `μ(B) ≥ P(B) ∏_{B'~B} (1 + μ(B'))` for every event.
pub fn check_asymmetric(
    events: &EventSet,
    mu: &WeightMap,
    mode: DependencyMode,
) -> Result<CriterionReport> {
    let mut slacks = Vec::with_capacity(events.len());
    let mut satisfied = true;
    let mut worst: Option<(f64, EventId)> = None;
    for ev in events.events() {
        let m = mu.require(ev.id())?;
        let r = rhs(ev, events, mu, mode)?;
        let slack = m - r;
        if slack < -REL_TOL * r {
            satisfied = false;
        }
        let ratio = m / r;
        if worst.is_none_or(|(w, _)| ratio < w) {
            worst = Some((ratio, ev.id()));
        }
        slacks.push(EventSlack {
            id: ev.id(),
            mu: m,
            rhs: r,
            slack,
        });
    }
    let epsilon = match (satisfied, worst) {
        (false, _) => -1.0,
        (true, None) => f64::INFINITY,
        (true, Some((ratio, _))) => {
            let eps = ratio - 1.0;
            if eps < REL_TOL {
                0.0
            } else {
                eps
            }
        }
    };
    Ok(CriterionReport {
        satisfied,
        slacks,
        worst_event: worst.map(|(_, id)| id),
        epsilon,
    })
}

/// Least fixed point of `μ ← P(B) ∏_{B'~B}(1 + μ(B'))`, iterated from zero.
///
/// The iteration is monotone; it converges exactly when some weighting
/// satisfies the asymmetric criterion, in which case the result sits on the
/// boundary (every slack is zero up to rounding).
pub fn least_fixed_point(
    events: &EventSet,
    mode: DependencyMode,
    max_iter: usize,
) -> Result<Option<WeightMap>> {
    let probs: Vec<f64> = events
        .events()
        .iter()
        .map(|e| prob_omega(e, events.sizes()).map(|p| p.value))
        .collect::<Result<_>>()?;
    let neighbors: Vec<Vec<usize>> = events
        .events()
        .iter()
        .map(|e| events.neighborhood_indices(e, mode))
        .collect();
    let mut mu = vec![0.0f64; events.len()];
    for _ in 0..max_iter {
        let next: Vec<f64> = (0..mu.len())
            .map(|i| probs[i] * neighbors[i].iter().map(|&j| 1.0 + mu[j]).product::<f64>())
            .collect();
        if next.iter().any(|v| !v.is_finite() || *v > 1e12) {
            return Ok(None);
        }
        let done = next
            .iter()
            .zip(&mu)
            .all(|(a, b)| (a - b).abs() <= 1e-15 * a.max(1e-300));
        mu = next;
        if done {
            let pairs = events
                .events()
                .iter()
                .map(|e| e.id())
                .zip(mu.iter().copied());
            return WeightMap::from_pairs(pairs).map(Some);
        }
    }
    Ok(None)
}

/// Symmetric form: `e·p·(d + 1) ≤ 1`.
pub fn check_symmetric(p: f64, d: u64) -> bool {
    std::f64::consts::E * p * (d as f64 + 1.0) <= 1.0 + 1e-12
}

/// Converts a criterion weight `x ∈ [0, 1)` to `μ = x / (1 - x)`.
pub fn mu_from_x(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Constraint(format!("x must lie in [0, 1), got {x}")));
    }
    Ok(x / (1.0 - x))
}

/// Smallest `α > 0` with `α ≥ P (1 + c α)^m`, or `None` when the two curves
/// never meet.
pub fn solve_alpha(p: f64, c: f64, m: u32) -> Option<f64> {
    assert!(
        p > 0.0 && c >= 0.0 && m >= 1,
        "solve_alpha needs P > 0, c ≥ 0, m ≥ 1"
    );
    if c == 0.0 {
        return Some(p);
    }
    if m == 1 {
        return (p * c < 1.0).then(|| p / (1.0 - p * c));
    }
    let f = |a: f64| p * (1.0 + c * a).powi(m as i32) - a;
    // f is convex; its minimum on [0, ∞) is at the stationary point
    let base = (1.0 / (p * c * m as f64)).powf(1.0 / (m as f64 - 1.0));
    let stationary = (base - 1.0) / c;
    if stationary <= 0.0 || f(stationary) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, stationary);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Some(hi)
}

/// `ln C(n, k)`; `-∞` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n <= 20 {
        return (binomial_exact(n, k).to_f64().unwrap()).ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact `C(n, k)`.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `ln((n - r)! / n!)`.
pub fn ln_falling_reciprocal(n: u64, r: u64) -> f64 {
    -(0..r).map(|i| ((n - i) as f64).ln()).sum::<f64>()
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Criterion for transversals with each color at most `s` times:
/// `e · C(s,r)⁻¹ · (n-r)!/n! · (2rn·C(Δ, r-1) + C(Δ, r)) ≤ 1`.
///
/// Returns `false` for `r` outside `1..=min(s, n)`.
pub fn check_szabo(n: u64, s: u64, r: u64, delta: u64) -> bool {
    if r == 0 || r > s || r > n {
        return false;
    }
    let neighbors = ln_add(
        ((2 * r * n) as f64).ln() + ln_binomial(delta, r - 1),
        ln_binomial(delta, r),
    );
    let lhs = 1.0 - ln_binomial(s, r) + ln_falling_reciprocal(n, r) + neighbors;
    lhs <= REL_TOL
}

/// Hypergraph packing criterion: `(d1+1)·m2 + (d2+1)·m1 < C(n, r)/e`.
pub fn check_packing(m1: u64, m2: u64, d1: u64, d2: u64, n: u64, r: u64) -> bool {
    let lhs = (d1 + 1) as f64 * m2 as f64 + (d2 + 1) as f64 * m1 as f64;
    if r > n {
        return false;
    }
    if lhs == 0.0 {
        return true;
    }
    lhs.ln() < ln_binomial(n, r) - 1.0
}

/// Latin transversal criterion: `α ≥ (1/(n(n-1))) (1 + n(Δ-1) α)^4` has a root.
pub fn latin_alpha(n: usize, delta: usize) -> Option<f64> {
    if n < 2 {
        return Some(0.0);
    }
    let p = 1.0 / (n as f64 * (n as f64 - 1.0));
    let c = n as f64 * delta.saturating_sub(1) as f64;
    solve_alpha(p, c, 4)
}

/// Strong-coloring criterion: `α ≥ (1/b²) (1 + bΔα)^4` has a root.
pub fn strong_color_alpha(b: usize, delta: usize) -> Option<f64> {
    let p = 1.0 / (b as f64 * b as f64);
    solve_alpha(p, b as f64 * delta as f64, 4)
}
