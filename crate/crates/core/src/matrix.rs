//! Dense ±1 matrices and the elementary Hadamard-equivalence operations.
//!
//! Text format: a header line `"<rows> <cols>"` followed by one line per row,
//! `+` for +1 and `-` for −1.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A rectangular matrix with every entry equal to −1 or +1.
///
/// Values are immutable once built; all transformations return new matrices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&x| x != 1 && x != -1) {
            return Err(Error::InvalidParameter(format!(
                "entry ({}, {}) is {}, expected ±1",
                pos / cols,
                pos % cols,
                data[pos]
            )));
        }
        Ok(SignMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, data)
    }

    /// Builds a matrix from a closure. Panics if the closure yields anything but ±1
    /// or if a dimension is zero.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i8) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid sign matrix")
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 1)
    }

    /// Builds a square matrix from `+`/`-` row strings, e.g. `["++", "+-"]`.
    pub fn from_pattern(rows: &[&str]) -> Result<Self> {
        let parsed: Vec<Vec<i8>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| parse_row(r.trim(), i + 1))
            .collect::<Result<_>>()?;
        Self::from_rows(&parsed)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn order(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn entries(&self) -> &[i8] {
        &self.data
    }

    pub fn transpose(&self) -> SignMatrix {
        SignMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn negated(&self) -> SignMatrix {
        SignMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| -x).collect(),
        }
    }

    /// Returns a copy with `f` applied to the mutable entry buffer. Entries must stay ±1.
    pub(crate) fn with_entries(&self, f: impl FnOnce(&mut [i8])) -> SignMatrix {
        let mut data = self.data.clone();
        f(&mut data);
        debug_assert!(data.iter().all(|&x| x == 1 || x == -1));
        SignMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<SignMatrix> {
        check_indices("row", rows, self.rows)?;
        check_indices("column", cols, self.cols)?;
        let data = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        SignMatrix::new(rows.len(), cols.len(), data)
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &SignMatrix) -> Result<SignMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "cannot stack {} columns on {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SignMatrix::new(self.rows + other.rows, self.cols, data)
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &SignMatrix) -> Result<SignMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot join {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        Ok(SignMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        }))
    }

    /// Assembles the 2×2 block matrix `[a b; c d]`.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<SignMatrix> {
        a.hstack(b)?.vstack(&c.hstack(d)?)
    }

    /// Row `i` packed into 64-bit words; bit `j` is set when the entry is −1.
    pub fn row_bits(&self, i: usize) -> Vec<u64> {
        let mut words = vec![0u64; self.cols.div_ceil(64)];
        for (j, &x) in self.row(i).iter().enumerate() {
            if x < 0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        words
    }

    pub fn row_sums(&self) -> Vec<i64> {
        self.rows()
            .map(|r| r.iter().map(|&x| i64::from(x)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.cols];
        for r in self.rows() {
            for (s, &x) in sums.iter_mut().zip(r) {
                *s += i64::from(x);
            }
        }
        sums
    }

    /// Entry-wise inner product of rows `i` and `k`.
    pub fn row_dot(&self, i: usize, k: usize) -> i64 {
        self.row(i)
            .iter()
            .zip(self.row(k))
            .map(|(&a, &b)| i64::from(a * b))
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.cols + 1) * (self.rows + 1) + 8);
        out.push_str(&format!("{} {}\n", self.rows, self.cols));
        for r in self.rows() {
            out.extend(r.iter().map(|&x| if x > 0 { '+' } else { '-' }));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("bad header {header:?}: {e}"),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header must be \"rows cols\", got {header:?}"),
            });
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (lineno, line) in lines {
            if seen == rows {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "more rows than declared".into(),
                });
            }
            let row = parse_row(line, lineno)?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has {} entries, expected {cols}", row.len()),
                });
            }
            data.extend(row);
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: hline,
                msg: format!("declared {rows} rows, found {seen}"),
            });
        }
        SignMatrix::new(rows, cols, data)
    }
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<i8>> {
    line.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::Parse {
                line: lineno,
                msg: format!("unexpected character {other:?}"),
            }),
        })
        .collect()
}

fn check_indices(what: &'static str, idx: &[usize], len: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(Error::IndexOutOfRange { what, index, len }),
        None => Ok(()),
    }
}

impl fmt::Display for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SignMatrix {}x{}", self.rows, self.cols)?;
        for r in self.rows() {
            let s: String = r.iter().map(|&x| if x > 0 { '+' } else { '-' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

impl FromStr for SignMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignMatrix::parse(s)
    }
}

/// One elementary Hadamard-equivalence operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivalenceOp {
    SwapRows(usize, usize),
    SwapCols(usize, usize),
    NegateRow(usize),
    NegateCol(usize),
    /// New row `i` is old row `perm[i]`.
    PermuteRows(Vec<usize>),
    /// New column `j` is old column `perm[j]`.
    PermuteCols(Vec<usize>),
}

pub fn apply_equivalence_op(m: &SignMatrix, op: &EquivalenceOp) -> Result<SignMatrix> {
    let (r, c) = (m.n_rows(), m.n_cols());
    match *op {
        EquivalenceOp::SwapRows(a, b) => {
            check_indices("row", &[a, b], r)?;
            let mut perm: Vec<usize> = (0..r).collect();
            perm.swap(a, b);
            permute_rows(m, &perm)
        }
        EquivalenceOp::SwapCols(a, b) => {
            check_indices("column", &[a, b], c)?;
            let mut perm: Vec<usize> = (0..c).collect();
            perm.swap(a, b);
            permute_cols(m, &perm)
        }
        EquivalenceOp::NegateRow(i) => {
            check_indices("row", &[i], r)?;
            Ok(m.with_entries(|d| d[i * c..(i + 1) * c].iter_mut().for_each(|x| *x = -*x)))
        }
        EquivalenceOp::NegateCol(j) => {
            check_indices("column", &[j], c)?;
            Ok(m.with_entries(|d| d.iter_mut().skip(j).step_by(c).for_each(|x| *x = -*x)))
        }
        EquivalenceOp::PermuteRows(ref perm) => permute_rows(m, perm),
        EquivalenceOp::PermuteCols(ref perm) => permute_cols(m, perm),
    }
}

fn check_permutation(what: &'static str, perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::Dimension(format!(
            "{what} permutation has length {}, expected {len}",
            perm.len()
        )));
    }
    check_indices(what, perm, len)?;
    let mut seen = vec![false; len];
    for &p in perm {
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!(
                "{what} permutation repeats index {p}"
            )));
        }
    }
    Ok(())
}

pub fn permute_rows(m: &SignMatrix, perm: &[usize]) -> Result<SignMatrix> {
    check_permutation("row", perm, m.n_rows())?;
    Ok(SignMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| {
        m.get(perm[i], j)
    }))
}

pub fn permute_cols(m: &SignMatrix, perm: &[usize]) -> Result<SignMatrix> {
    check_permutation("column", perm, m.n_cols())?;
    Ok(SignMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| {
        m.get(i, perm[j])
    }))
}

/// Sum of all entries.
pub fn excess(m: &SignMatrix) -> i64 {
    m.entries().iter().map(|&x| i64::from(x)).sum()
}

/// Segment sums of one row of an order-21 matrix split positionally as 1 + 4 + 16.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RowSumTriple {
    pub first: i64,
    pub middle: i64,
    pub last: i64,
}

impl RowSumTriple {
    pub const fn new(first: i64, middle: i64, last: i64) -> Self {
        RowSumTriple {
            first,
            middle,
            last,
        }
    }
}

/// Row segment sums over columns `0`, `1..5` and `5..21`.
///
/// Apply to the transpose for the column triples.
pub fn row_sum_triples(m: &SignMatrix) -> Result<Vec<RowSumTriple>> {
    if m.n_rows() != 21 || m.n_cols() != 21 {
        return Err(Error::Dimension(format!(
            "segment sums need a 21x21 matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    let sum = |r: &[i8]| r.iter().map(|&x| i64::from(x)).sum::<i64>();
    Ok(m.rows()
        .map(|r| RowSumTriple::new(sum(&r[..1]), sum(&r[1..5]), sum(&r[5..])))
        .collect())
}
