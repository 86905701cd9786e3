use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};

/// Square matrix of colors. Colors are stored as dense indices; the
/// original labels are kept for reporting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorMatrix {
    n: usize,
    cells: Vec<u32>,
    labels: Vec<i64>,
    positions: Vec<Vec<(usize, usize)>>,
}

impl ColorMatrix {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        let mut dense: HashMap<i64, u32> = HashMap::new();
        let mut labels = Vec::new();
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {n} columns, found {}", row.len()),
                });
            }
            for &label in row {
                let c = *dense.entry(label).or_insert_with(|| {
                    labels.push(label);
                    labels.len() as u32 - 1
                });
                cells.push(c);
            }
        }
        let mut positions = vec![Vec::new(); labels.len()];
        for i in 0..n {
            for j in 0..n {
                positions[cells[i * n + j] as usize].push((i, j));
            }
        }
        Ok(ColorMatrix {
            n,
            cells,
            labels,
            positions,
        })
    }

    /// Reads comma-separated integer rows (no header).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<i64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("not an integer color: {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        ColorMatrix::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dense color index of cell `(i, j)`.
    #[inline]
    pub fn color(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.n + j]
    }

    pub fn label(&self, color: u32) -> i64 {
        self.labels[color as usize]
    }

    pub fn num_colors(&self) -> usize {
        self.labels.len()
    }

    pub fn positions(&self, color: u32) -> &[(usize, usize)] {
        &self.positions[color as usize]
    }

    /// Largest multiplicity of any color.
    pub fn delta(&self) -> usize {
        self.positions.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.label(self.color(i, j))).collect())
            .collect()
    }
}
