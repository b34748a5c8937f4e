//! Gram matrices `R·Rᵀ` / `Rᵀ·R` and the block row-sum profile of even designs.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `M = R·Rᵀ` (row inner products).
    Left,
    /// `M′ = Rᵀ·R` (column inner products).
    Right,
}

/// A symmetric integer matrix with constant diagonal `n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl GramMatrix {
    /// Validates symmetry and the constant diagonal.
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} entries for a gram matrix of order {n}",
                entries.len()
            )));
        }
        let g = GramMatrix { n, entries };
        g.check_invariants()?;
        Ok(g)
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("gram rows must form a square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> i64) -> Result<Self> {
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(n, entries)
    }

    /// `(n−1)·I + J`.
    pub fn barba(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { n as i64 } else { 1 }).expect("valid form")
    }

    /// `(n−2)·I + 2·I₂⊗J_{n/2}`; `n` must be even.
    pub fn ehlich_even(n: usize) -> Self {
        assert!(n % 2 == 0, "ehlich_even needs an even order");
        let h = n / 2;
        Self::from_fn(n, |i, j| match (i == j, i / h == j / h) {
            (true, _) => n as i64,
            (false, true) => 2,
            (false, false) => 0,
        })
        .expect("valid form")
    }

    pub fn scalar(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { n as i64 } else { 0 }).expect("valid form")
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != n as i64 {
                return Err(Error::GramInvariant(format!(
                    "diagonal entry ({i}, {i}) is {}, expected {n}",
                    self.get(i, i)
                )));
            }
            for j in 0..i {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::GramInvariant(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn determinant(&self) -> BigInt {
        crate::det::int_determinant(&self.rows())
    }

    /// Simultaneous permutation `P·M·Pᵀ` and negation `D·M·D`: new index `i`
    /// takes old index `perm[i]`, scaled by `signs[i]`.
    pub fn conjugate(&self, perm: &[usize], signs: &[i8]) -> Result<GramMatrix> {
        let n = self.n;
        if perm.len() != n || signs.len() != n {
            return Err(Error::Dimension("conjugation size mismatch".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        GramMatrix::from_fn(n, |i, j| {
            i64::from(signs[i]) * i64::from(signs[j]) * self.get(perm[i], perm[j])
        })
    }

    /// Positive semidefiniteness by exact symmetric elimination.
    ///
    /// Each step eliminates with a positive pivot; a zero pivot is only
    /// admissible when its whole remaining row is zero.
    pub fn is_positive_semidefinite(&self) -> bool {
        let n = self.n;
        let mut a: Vec<Vec<BigInt>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(BigInt::from).collect())
            .collect();
        let mut active: Vec<usize> = (0..n).collect();
        let mut prev = BigInt::from(1);
        while let Some(&k) = active.first() {
            let pivot = a[k][k].clone();
            if pivot.is_negative() {
                return false;
            }
            let rest: Vec<usize> = active[1..].to_vec();
            if pivot.is_zero() {
                if rest.iter().any(|&j| !a[k][j].is_zero()) {
                    return false;
                }
                active.remove(0);
                continue;
            }
            for &i in &rest {
                for &j in &rest {
                    let t = &a[i][j] * &pivot - &a[i][k] * &a[k][j];
                    a[i][j] = t / &prev;
                }
            }
            prev = pivot;
            active = rest;
        }
        true
    }

    /// Text form: order on the first line, then `n` lines of integers.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for r in self.entries.chunks(self.n) {
            let line: Vec<String> = r.iter().map(i64::to_string).collect();
            out.push_str(&line.join(" "));
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
            msg: "missing order".into(),
        })?;
        let n: usize = header.parse().map_err(|e| Error::Parse {
            line: hline,
            msg: format!("bad order {header:?}: {e}"),
        })?;
        let mut entries = Vec::with_capacity(n * n);
        let mut seen = 0;
        for (lineno, line) in lines {
            let row: Vec<i64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("{e}"),
                })?;
            if row.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has {} entries, expected {n}", row.len()),
                });
            }
            entries.extend(row);
            seen += 1;
        }
        if seen != n {
            return Err(Error::Parse {
                line: hline,
                msg: format!("declared order {n}, found {seen} rows"),
            });
        }
        GramMatrix::new(n, entries)
    }

    /// Off-diagonal entries by absolute value, sorted.
    pub fn abs_entry_multiset(&self) -> Vec<u64> {
        let n = self.n;
        let mut v: Vec<u64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j).unsigned_abs())
            .collect();
        v.sort_unstable();
        v
    }

    /// Each row's multiset of absolute entries, with the list of rows sorted.
    /// Invariant under simultaneous permutation and negation.
    pub fn row_multisets(&self) -> Vec<Vec<u64>> {
        let mut rows: Vec<Vec<u64>> = self
            .entries
            .chunks(self.n)
            .map(|r| {
                let mut s: Vec<u64> = r.iter().map(|x| x.unsigned_abs()).collect();
                s.sort_unstable();
                s
            })
            .collect();
        rows.sort();
        rows
    }
}

impl fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GramMatrix {}", self.to_text())
    }
}

/// `R·Rᵀ` or `Rᵀ·R` of a square sign matrix.
pub fn gram(m: &SignMatrix, side: Side) -> Result<GramMatrix> {
    let n = m.order()?;
    let src = match side {
        Side::Left => m.clone(),
        Side::Right => m.transpose(),
    };
    let mut entries = vec![0i64; n * n];
    for i in 0..n {
        for k in i..n {
            let d = src.row_dot(i, k);
            entries[i * n + k] = d;
            entries[k * n + i] = d;
        }
    }
    GramMatrix::new(n, entries)
}

/// Constant row/column sums of the four half-order blocks of an even design
/// `[A B; C D]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockProfile {
    pub half: usize,
    /// Sums of `A`, `B`, `C` and `−D`, in that order.
    pub sums: [i64; 4],
    pub a: i64,
    pub b: i64,
    /// `|sum A| = |sum −D|`, `|sum B| = |sum C|` and `a² + b² = 2n − 2`.
    pub optimal: bool,
}

pub fn block_profile(m: &SignMatrix) -> Result<BlockProfile> {
    let n = m.order()?;
    if n % 2 != 0 {
        return Err(Error::Dimension(format!(
            "block profile needs even order, got {n}"
        )));
    }
    let h = n / 2;
    let names = ["A", "B", "C", "-D"];
    let mut sums = [0i64; 4];
    for (idx, (r0, c0)) in [(0, 0), (0, h), (h, 0), (h, h)].into_iter().enumerate() {
        let sign = if idx == 3 { -1 } else { 1 };
        let row_sum = |i: usize| -> i64 {
            (0..h).map(|j| i64::from(m.get(r0 + i, c0 + j))).sum::<i64>() * sign
        };
        let col_sum = |j: usize| -> i64 {
            (0..h).map(|i| i64::from(m.get(r0 + i, c0 + j))).sum::<i64>() * sign
        };
        let s = row_sum(0);
        if let Some(i) = (0..h).find(|&i| row_sum(i) != s) {
            return Err(Error::Structure(format!(
                "block {} row {i} sums to {}, row 0 to {s}",
                names[idx],
                row_sum(i)
            )));
        }
        if let Some(j) = (0..h).find(|&j| col_sum(j) != s) {
            return Err(Error::Structure(format!(
                "block {} column {j} sums to {}, row sums are {s}",
                names[idx],
                col_sum(j)
            )));
        }
        sums[idx] = s;
    }
    let (sa, sb) = (sums[0].abs(), sums[1].abs());
    let (a, b) = (sa.max(sb), sa.min(sb));
    let optimal = sums[0].abs() == sums[3].abs()
        && sums[1].abs() == sums[2].abs()
        && a * a + b * b == 2 * n as i64 - 2;
    Ok(BlockProfile {
        half: h,
        sums,
        a,
        b,
        optimal,
    })
}

/// Reorders and re-signs the lines of a design whose Gram matrices are both
/// signed-permutation conjugates of `(n−2)·I + 2·I₂⊗J` so that both become
/// exactly that form, then reports the block profile.
pub fn even_block_profile(m: &SignMatrix) -> Result<BlockProfile> {
    let n = m.order()?;
    if n % 2 != 0 || n < 6 {
        return Err(Error::Dimension(format!(
            "even block profile needs even order at least 6, got {n}"
        )));
    }
    let order_lines = |g: &GramMatrix| -> Result<(Vec<usize>, Vec<i8>)> {
        let first: Vec<usize> = (0..n).filter(|&j| j == 0 || g.get(0, j) != 0).collect();
        let rest: Vec<usize> = (0..n).filter(|&j| j != 0 && g.get(0, j) == 0).collect();
        let anchor = rest.first().copied().unwrap_or(0);
        let mut signs = vec![1i8; n];
        for (block, lead) in [(&first, 0), (&rest, anchor)] {
            if block.len() != n / 2 {
                return Err(Error::Structure("Gram matrix is not of the even block form".into()));
            }
            for &j in block.iter() {
                for &l in block.iter() {
                    if j != l && g.get(j, l).abs() != 2 {
                        return Err(Error::Structure(
                            "Gram matrix is not of the even block form".into(),
                        ));
                    }
                }
                if j != lead {
                    signs[j] = if g.get(lead, j) > 0 { 1 } else { -1 };
                }
            }
        }
        Ok((first.into_iter().chain(rest).collect(), signs))
    };
    let (rows, rs) = order_lines(&gram(m, Side::Left)?)?;
    let (cols, cs) = order_lines(&gram(m, Side::Right)?)?;
    let normalized = SignMatrix::from_fn(n, n, |i, j| {
        rs[rows[i]] * cs[cols[j]] * m.get(rows[i], cols[j])
    });
    block_profile(&normalized)
}
