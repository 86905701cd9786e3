//! Permutations with a maintained inverse, and the randomized swap
//! subroutines that resample them.
//!
//! Indices are 0-based. A permutation maps domain points to range values;
//! "swapping entries `a` and `b`" exchanges `forward[a]` and `forward[b]`,
//! i.e. replaces `π` by `π ∘ (a b)`.

use crate::error::{Error, Result};
use crate::rng::UniformSource;

/// A bijection on `0..n` together with its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<usize> = (0..n).collect();
        Permutation {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Builds a permutation from its forward table, validating bijectivity.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (x, &y) in forward.iter().enumerate() {
            if y >= n {
                return Err(Error::OutOfRange { index: y, size: n });
            }
            if inverse[y] != usize::MAX {
                return Err(Error::NotBijection(format!("value {y} appears twice")));
            }
            inverse[y] = x;
        }
        Ok(Permutation { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// `π(x)`.
    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.forward[x]
    }

    /// `π⁻¹(y)`.
    #[inline]
    pub fn preimage(&self, y: usize) -> usize {
        self.inverse[y]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_table(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Permutation::from_forward(other.forward.iter().map(|&x| self.forward[x]).collect())
    }

    /// Exchanges entries `a` and `b`: `π ← π ∘ (a b)`.
    #[inline]
    pub fn swap_entries(&mut self, a: usize, b: usize) {
        let (ya, yb) = (self.forward[a], self.forward[b]);
        self.forward[a] = yb;
        self.forward[b] = ya;
        self.inverse[yb] = a;
        self.inverse[ya] = b;
        debug_assert!(self.inverse[self.forward[a]] == a && self.inverse[self.forward[b]] == b);
    }

    /// Checks `inverse ∘ forward = forward ∘ inverse = id`.
    pub fn is_consistent(&self) -> bool {
        self.forward.len() == self.inverse.len()
            && self
                .forward
                .iter()
                .enumerate()
                .all(|(x, &y)| y < self.len() && self.inverse[y] == x)
    }

    /// Sorted cycle lengths.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut lengths = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.forward[x];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable();
        lengths
    }

    /// Forward table shifted to 1-based values.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.forward.iter().map(|&y| y + 1).collect()
    }

    pub fn from_one_based(values: &[usize]) -> Result<Self> {
        let forward = values
            .iter()
            .map(|&v| {
                v.checked_sub(1).ok_or(Error::OutOfRange {
                    index: 0,
                    size: values.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::from_forward(forward)
    }
}

/// Uniformly random permutation of `0..n` by a full Fisher-Yates shuffle.
pub fn random_permutation<R: UniformSource + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut perm = Permutation::identity(n);
    // Swap(π; 0, 1, ..., n-1) starting from the identity
    for i in 0..n.saturating_sub(1) {
        let j = i + rng.below(n - i);
        perm.swap_entries(i, j);
    }
    perm
}

fn check_distinct(points: &[usize], n: usize) -> Result<()> {
    for (i, &p) in points.iter().enumerate() {
        if p >= n {
            return Err(Error::OutOfRange { index: p, size: n });
        }
        if points[..i].contains(&p) {
            return Err(Error::Duplicate(p));
        }
    }
    Ok(())
}

/// Draws a uniform element of `0..n` that is not in `excluded`
/// (`excluded` sorted ascending, all `< n`).
#[inline]
fn draw_excluding<R: UniformSource + ?Sized>(n: usize, excluded: &[usize], rng: &mut R) -> usize {
    let mut j = rng.below(n - excluded.len());
    for &e in excluded {
        if j >= e {
            j += 1;
        } else {
            break;
        }
    }
    j
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    let pos = v.partition_point(|&e| e < x);
    v.insert(pos, x);
}

/// The swap subroutine: for each `x_i` in order, draws a mate uniformly
/// from `0..n` minus the previously processed sources `x_1..x_{i-1}` and
/// exchanges the two entries. Returns the mates drawn.
pub fn swap<R: UniformSource + ?Sized>(
    perm: &mut Permutation,
    xs: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mates = draw_mates(perm.len(), xs, rng)?;
    for (&x, &mate) in xs.iter().zip(&mates) {
        perm.swap_entries(x, mate);
    }
    Ok(mates)
}

/// Draws the mates the swap subroutine would use for `xs` on a permutation
/// of size `n`, without applying them. Mates depend only on the positions,
/// never on the permutation's values.
pub fn draw_mates<R: UniformSource + ?Sized>(
    n: usize,
    xs: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_distinct(xs, n)?;
    let mut processed = Vec::with_capacity(xs.len());
    let mut mates = Vec::with_capacity(xs.len());
    for &x in xs {
        mates.push(draw_excluding(n, &processed, rng));
        insert_sorted(&mut processed, x);
    }
    Ok(mates)
}

/// Replays the swap subroutine with predetermined mates, rejecting mates
/// the subroutine could not have drawn.
pub fn swap_with_mates(perm: &mut Permutation, xs: &[usize], mates: &[usize]) -> Result<()> {
    let n = perm.len();
    check_distinct(xs, n)?;
    if mates.len() != xs.len() {
        return Err(Error::SizeMismatch {
            expected: xs.len(),
            found: mates.len(),
        });
    }
    for (i, (&x, &mate)) in xs.iter().zip(mates).enumerate() {
        if mate >= n {
            return Err(Error::OutOfRange {
                index: mate,
                size: n,
            });
        }
        if xs[..i].contains(&mate) {
            return Err(Error::InvalidMate { mate });
        }
        perm.swap_entries(x, mate);
    }
    Ok(())
}

/// Range-side variant: mates are drawn among range values `0..n` minus
/// `y_1..y_{i-1}`, and the entries currently holding `y_i` and the mate
/// value are exchanged. Returns the mate values drawn.
pub fn swap_range<R: UniformSource + ?Sized>(
    perm: &mut Permutation,
    ys: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = perm.len();
    check_distinct(ys, n)?;
    let mut processed = Vec::with_capacity(ys.len());
    let mut mates = Vec::with_capacity(ys.len());
    for &y in ys {
        let mate = draw_excluding(n, &processed, rng);
        let (a, b) = (perm.preimage(y), perm.preimage(mate));
        perm.swap_entries(a, b);
        mates.push(mate);
        insert_sorted(&mut processed, y);
    }
    Ok(mates)
}

/// Replaces `π` by `π ∘ t_l ∘ ⋯ ∘ t_1` for `ts = [t_1, …, t_l]`: on the
/// domain side the first listed transposition acts first.
pub fn apply_transpositions(perm: &mut Permutation, ts: &[(usize, usize)]) -> Result<()> {
    let n = perm.len();
    for &(a, b) in ts {
        for p in [a, b] {
            if p >= n {
                return Err(Error::OutOfRange { index: p, size: n });
            }
        }
    }
    // entry swaps compose on the right, so the last-listed goes in first
    for &(a, b) in ts.iter().rev() {
        perm.swap_entries(a, b);
    }
    Ok(())
}
