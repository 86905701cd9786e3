use std::io::BufRead;

use crate::error::{Error, Result};
use crate::io::{numbered_lines, parse_numbers, parse_one_based};

/// Graph whose vertices are partitioned into `k` blocks of equal size `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGraph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    /// Position of each vertex inside its block.
    slot: Vec<usize>,
}

impl BlockGraph {
    /// Edges are undirected; duplicates are merged and self-loops rejected.
    pub fn new(n: usize, edges: &[(usize, usize)], blocks: Vec<Vec<usize>>) -> Result<Self> {
        let b = blocks.first().map_or(0, Vec::len);
        let mut block_of = vec![usize::MAX; n];
        let mut slot = vec![0; n];
        for (bi, block) in blocks.iter().enumerate() {
            if block.len() != b {
                return Err(Error::InvalidInput(format!(
                    "block {} has {} vertices, expected {b}",
                    bi + 1,
                    block.len()
                )));
            }
            for (s, &v) in block.iter().enumerate() {
                if v >= n {
                    return Err(Error::OutOfRange { index: v, size: n });
                }
                if block_of[v] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "vertex {} is in two blocks",
                        v + 1
                    )));
                }
                block_of[v] = bi;
                slot[v] = s;
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidInput(format!(
                "vertex {} is in no block",
                v + 1
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut list = Vec::new();
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::OutOfRange { index: w, size: n });
                }
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at {}", u + 1)));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        for &(u, v) in &list {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(BlockGraph {
            adjacency,
            edges: list,
            blocks,
            block_of,
            slot,
        })
    }

    /// Reads the text format: header `n m k b`, then `m` lines `u v`, then
    /// `k` lines of `b` vertex ids. All ids 1-based; `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = numbered_lines(reader)?.into_iter();
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let h = parse_numbers(&header, hl, Some(4))?;
        let (n, m, k, b) = (h[0], h[1], h[2], h[3]);
        if k * b != n {
            return Err(Error::Parse {
                line: hl,
                msg: format!("k*b = {} does not equal n = {n}", k * b),
            });
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, text) = lines.next().ok_or(Error::Parse {
                line: hl,
                msg: "fewer edge lines than declared".into(),
            })?;
            let e = parse_one_based(&text, ln, Some(2), n)?;
            edges.push((e[0], e[1]));
        }
        let mut blocks = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, text) = lines.next().ok_or(Error::Parse {
                line: hl,
                msg: "fewer block lines than declared".into(),
            })?;
            blocks.push(parse_one_based(&text, ln, Some(b), n)?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "unexpected trailing line".into(),
            });
        }
        BlockGraph::new(n, &edges, blocks)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn b(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn slot(&self, v: usize) -> usize {
        self.slot[v]
    }

    /// Maximum degree.
    pub fn delta(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_small_graph() {
        let text = "4 1 2 2\n# edge\n1 3\n1 2\n3 4\n";
        let g = BlockGraph::parse(text.as_bytes()).unwrap();
        assert_eq!((g.n(), g.k(), g.b(), g.delta()), (4, 2, 2, 1));
        assert_eq!(g.edges(), &[(0, 2)]);
        assert_eq!(g.block_of(2), 1);
        assert_eq!(g.slot(3), 1);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad_id = "4 1 2 2\n1 9\n1 2\n3 4\n";
        assert!(matches!(
            BlockGraph::parse(bad_id.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let short = "4 1 2 2\n1 3\n1 2\n";
        assert!(matches!(
            BlockGraph::parse(short.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let overlap = "4 0 2 2\n1 2\n2 3\n";
        assert!(BlockGraph::parse(overlap.as_bytes()).is_err());
    }
}
