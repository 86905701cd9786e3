//! Shared bookkeeping for "two transversal cells share a color" detectors.
//!
//! Rows are bucketed by the color of their current cell; every pair of
//! rows in one bucket is a true event. Updates remove all pairs of the
//! affected rows under the old colors, then re-bucket and re-insert.

use std::collections::HashMap;

use crate::events::{BadEvent, EventId, TrueSet};

#[derive(Clone, Debug, Default)]
pub(crate) struct PairIndex {
    row_color: Vec<u32>,
    buckets: Vec<Vec<usize>>,
    live: HashMap<(usize, usize), EventId>,
    /// Distinct row pairs can describe the same event; count holders.
    holders: HashMap<EventId, usize>,
    pub(crate) truth: TrueSet,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl PairIndex {
    fn add(&mut self, pair: (usize, usize), ev: BadEvent) {
        self.live.insert(pair, ev.id());
        let n = self.holders.entry(ev.id()).or_insert(0);
        *n += 1;
        if *n == 1 {
            self.truth.insert(ev);
        }
    }

    fn drop_pair(&mut self, pair: (usize, usize)) {
        if let Some(id) = self.live.remove(&pair) {
            let n = self.holders.get_mut(&id).expect("held id");
            *n -= 1;
            if *n == 0 {
                self.holders.remove(&id);
                self.truth.remove(id);
            }
        }
    }

    pub(crate) fn rebuild(
        &mut self,
        colors: Vec<u32>,
        num_colors: usize,
        mut make: impl FnMut(usize, usize) -> BadEvent,
    ) {
        self.truth.clear();
        self.live.clear();
        self.holders.clear();
        self.buckets = vec![Vec::new(); num_colors];
        for (row, &c) in colors.iter().enumerate() {
            self.buckets[c as usize].push(row);
        }
        self.row_color = colors;
        for c in 0..self.buckets.len() {
            for a in 0..self.buckets[c].len() {
                for b in a + 1..self.buckets[c].len() {
                    let (i, j) = (self.buckets[c][a], self.buckets[c][b]);
                    self.add(key(i, j), make(i, j));
                }
            }
        }
    }

    /// `rows` must contain every row whose cell or event triples may have
    /// changed; `color_of` gives the new color of a row.
    pub(crate) fn update(
        &mut self,
        rows: &[usize],
        mut color_of: impl FnMut(usize) -> u32,
        mut make: impl FnMut(usize, usize) -> BadEvent,
    ) {
        for &r in rows {
            let c = self.row_color[r] as usize;
            for idx in 0..self.buckets[c].len() {
                let other = self.buckets[c][idx];
                if other != r {
                    self.drop_pair(key(r, other));
                }
            }
        }
        for &r in rows {
            let c = self.row_color[r] as usize;
            if let Some(pos) = self.buckets[c].iter().position(|&x| x == r) {
                self.buckets[c].swap_remove(pos);
            }
        }
        for &r in rows {
            let c = color_of(r);
            self.row_color[r] = c;
            self.buckets[c as usize].push(r);
        }
        for &r in rows {
            let c = self.row_color[r] as usize;
            for idx in 0..self.buckets[c].len() {
                let other = self.buckets[c][idx];
                if other != r && !self.live.contains_key(&key(r, other)) {
                    self.add(key(r, other), make(r, other));
                }
            }
        }
    }
}

/// Sorted, deduplicated copy.
pub(crate) fn dedup_rows(mut rows: Vec<usize>) -> Vec<usize> {
    rows.sort_unstable();
    rows.dedup();
    rows
}
