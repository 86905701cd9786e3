//! Text formats. Everything on disk is 1-based; conversion happens here.
//!
//! Event lists: a header `perms k n_1 … n_k`, then one line per event,
//! `event t k_1 x_1 y_1 … k_t x_t y_t`. Events get ids `1, 2, …` in file
//! order. `#` starts a comment.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::events::{BadEvent, EventSet, Triple};

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn numbered_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let text = line.split('#').next().unwrap_or("").trim();
        if !text.is_empty() {
            out.push((i + 1, text.to_string()));
        }
    }
    Ok(out)
}

pub(crate) fn parse_numbers(text: &str, line: usize, expect: Option<usize>) -> Result<Vec<usize>> {
    let nums = text
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("not a nonnegative integer: {t:?}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(want) = expect {
        if nums.len() != want {
            return Err(Error::Parse {
                line,
                msg: format!("expected {want} numbers, found {}", nums.len()),
            });
        }
    }
    Ok(nums)
}

/// Parses 1-based ids in `1..=limit` and returns them 0-based.
pub(crate) fn parse_one_based(
    text: &str,
    line: usize,
    expect: Option<usize>,
    limit: usize,
) -> Result<Vec<usize>> {
    parse_numbers(text, line, expect)?
        .into_iter()
        .map(|v| {
            if v == 0 || v > limit {
                Err(Error::Parse {
                    line,
                    msg: format!("id {v} outside 1..={limit}"),
                })
            } else {
                Ok(v - 1)
            }
        })
        .collect()
}

pub fn parse_event_list<R: BufRead>(reader: R) -> Result<EventSet> {
    let mut lines = numbered_lines(reader)?.into_iter();
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing `perms` header".into(),
    })?;
    let rest = header.strip_prefix("perms").ok_or(Error::Parse {
        line: hl,
        msg: "header must start with `perms`".into(),
    })?;
    let nums = parse_numbers(rest, hl, None)?;
    let (&k, sizes) = nums.split_first().ok_or(Error::Parse {
        line: hl,
        msg: "missing permutation count".into(),
    })?;
    if sizes.len() != k {
        return Err(Error::Parse {
            line: hl,
            msg: format!("declared {k} permutations but gave {} sizes", sizes.len()),
        });
    }
    let mut events = Vec::new();
    for (ln, text) in lines {
        let body = text.strip_prefix("event").ok_or(Error::Parse {
            line: ln,
            msg: "expected an `event` line".into(),
        })?;
        let nums = parse_numbers(body, ln, None)?;
        let (&t, rest) = nums.split_first().ok_or(Error::Parse {
            line: ln,
            msg: "missing triple count".into(),
        })?;
        if t == 0 || rest.len() != 3 * t {
            return Err(Error::Parse {
                line: ln,
                msg: format!(
                    "expected {t} triples (3 numbers each), found {} numbers",
                    rest.len()
                ),
            });
        }
        let mut triples = Vec::with_capacity(t);
        for c in rest.chunks_exact(3) {
            let (kk, x, y) = (c[0], c[1], c[2]);
            if kk == 0 || kk > k {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("permutation {kk} outside 1..={k}"),
                });
            }
            let n = sizes[kk - 1];
            if x == 0 || x > n || y == 0 || y > n {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("point ({x}, {y}) outside 1..={n} of permutation {kk}"),
                });
            }
            triples.push(Triple::new(kk - 1, x - 1, y - 1));
        }
        let id = events.len() as u64 + 1;
        let event = BadEvent::new(id, triples).map_err(|e| Error::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        events.push(event);
    }
    EventSet::new(sizes.to_vec(), events)
}

pub fn write_event_list<W: Write>(set: &EventSet, mut out: W) -> std::io::Result<()> {
    write!(out, "perms {}", set.sizes().len())?;
    for n in set.sizes() {
        write!(out, " {n}")?;
    }
    writeln!(out)?;
    for e in set.events() {
        write!(out, "event {}", e.len())?;
        for t in e.triples() {
            write!(out, " {} {} {}", t.k + 1, t.x + 1, t.y + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# two perms\nperms 2 3 4\nevent 1 1 1 2\nevent 2 1 2 2 2 4 1\n";
        let set = parse_event_list(text.as_bytes()).unwrap();
        assert_eq!(set.sizes(), &[3, 4]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.events()[0].id(), 1);
        assert_eq!(set.events()[1].triples()[1], Triple::new(1, 3, 0));
        let mut buf = Vec::new();
        write_event_list(&set, &mut buf).unwrap();
        let again = parse_event_list(buf.as_slice()).unwrap();
        assert_eq!(again.events(), set.events());
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("perms 1 3\nevent 1 1 4 1\n", 2),
            ("perms 1 3\nevent 2 1 1 1\n", 2),
            ("perms 1 3\nevent 1 2 1 1\n", 2),
            ("perms 2 3\n", 1),
            ("perms 1 3\n\nevent 2 1 1 1 1 1 2\n", 3),
            ("perms 1 3\nevnt 1 1 1 1\n", 2),
        ];
        for (text, line) in cases {
            match parse_event_list(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
