//! Order-21 designs from 3-normalized Hadamard matrices of order 20.
//!
//! Three rows of an order-20 Hadamard matrix are brought to [`STANDARD_ROWS`]
//! by column permutations and negations. The column signs are fixed by
//! requiring the product of the three entries in each column to be `−1`,
//! which splits the columns into four types of five. The unique remaining row
//! with sum `±12` has its four `−` entries one per type; those columns come
//! first, ordered by type, followed by the rest of each type.

use std::collections::BTreeSet;

use crate::canonical::{canonical_key, CanonicalKey};
use crate::error::{Error, Result};
use crate::matrix::SignMatrix;

use super::is_hadamard;

pub const STANDARD_ROWS: [&str; 3] = [
    "--++--------++++++++",
    "-+-+----++++----++++",
    "-++-----++++++++----",
];

/// Column-type patterns on the three standard rows, in column-block order.
const TYPES: [[i8; 3]; 4] = [[-1, -1, -1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]];

/// The first row of the order-21 design without its leading `+`.
const W: &str = "----++++++++++++++++";

/// Rows 2 to 5 of the order-21 design, leading `−` removed.
const FIXED: [&str; 4] = [
    "-+++----++++++++++++",
    "+-++++++----++++++++",
    "++-+++++++++----++++",
    "+++-++++++++++++----",
];

fn parse_row(s: &str) -> Vec<i8> {
    s.chars().map(|c| if c == '-' { -1 } else { 1 }).collect()
}

/// The three standard rows as a 3×20 matrix.
pub fn standard_rows() -> SignMatrix {
    let rows: Vec<Vec<i8>> = STANDARD_ROWS.iter().map(|s| parse_row(s)).collect();
    SignMatrix::from_rows(&rows).expect("rectangular")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationTriple {
    /// Source rows brought to the standard pattern, in order.
    pub rows: [usize; 3],
    /// Source row that became the row of sum 12.
    pub excess_row: usize,
    /// `columns[k] = (source column, sign)` for normalized column `k`.
    pub columns: Vec<(usize, i8)>,
    /// The normalized Hadamard matrix.
    pub matrix: SignMatrix,
}

/// Every 3-normalization of an order-20 Hadamard matrix, over ordered row
/// triples.
pub fn three_normalizations(h: &SignMatrix) -> Result<Vec<NormalizationTriple>> {
    if h.n_rows() != 20 || !is_hadamard(h) {
        return Err(Error::Precondition(
            "input must be a Hadamard matrix of order 20".into(),
        ));
    }
    let mut out = Vec::new();
    for x in 0..20 {
        for y in 0..20 {
            for z in 0..20 {
                if x == y || y == z || x == z {
                    continue;
                }
                out.extend(normalize_triple(h, [x, y, z])?);
            }
        }
    }
    Ok(out)
}

fn normalize_triple(h: &SignMatrix, rows: [usize; 3]) -> Result<Vec<NormalizationTriple>> {
    let [x, y, z] = rows;
    // sign making the column's triple product −1, then its type
    let col_sign: Vec<i8> = (0..20).map(|j| -(h.get(x, j) * h.get(y, j) * h.get(z, j))).collect();
    let col_type: Vec<usize> = (0..20)
        .map(|j| {
            let pat = [x, y, z].map(|i| h.get(i, j) * col_sign[j]);
            TYPES.iter().position(|t| *t == pat).expect("product is −1")
        })
        .collect();
    let mut out = Vec::new();
    for w in (0..20).filter(|i| !rows.contains(i)) {
        let signed: Vec<i8> = (0..20).map(|j| h.get(w, j) * col_sign[j]).collect();
        let sum: i64 = signed.iter().map(|&v| i64::from(v)).sum();
        if sum.abs() != 12 {
            continue;
        }
        let row_sign: i8 = if sum > 0 { 1 } else { -1 };
        let minus: Vec<usize> = (0..20).filter(|&j| signed[j] * row_sign < 0).collect();
        let mut by_type = [usize::MAX; 4];
        for &j in &minus {
            by_type[col_type[j]] = j;
        }
        if by_type.contains(&usize::MAX) {
            continue;
        }
        let mut order: Vec<usize> = by_type.to_vec();
        for t in 0..4 {
            order.extend((0..20).filter(|&j| col_type[j] == t && !by_type.contains(&j)));
        }
        let mut src_rows = vec![(x, 1i8), (y, 1), (z, 1), (w, row_sign)];
        for i in (0..20).filter(|i| !rows.contains(i) && *i != w) {
            let s: i64 = (0..20).map(|j| i64::from(h.get(i, j) * col_sign[j])).sum();
            src_rows.push((i, if s < 0 { -1 } else { 1 }));
        }
        let matrix = SignMatrix::from_fn(20, 20, |a, b| {
            let (i, s) = src_rows[a];
            let j = order[b];
            s * col_sign[j] * h.get(i, j)
        });
        let sums = matrix.row_sums();
        if sums[..3] != [0, 0, 0] || sums[3] != 12 || sums[4..].iter().any(|&s| s != 4) {
            return Err(Error::Structure(format!(
                "normalization of rows {rows:?} has row sums {sums:?}"
            )));
        }
        out.push(NormalizationTriple {
            rows,
            excess_row: w,
            columns: order.iter().map(|&j| (j, col_sign[j])).collect(),
            matrix,
        });
    }
    Ok(out)
}

/// Replaces the three standard rows with the four fixed rows, adds the
/// leading column and puts the row of sum 12 first. The last 16 rows are
/// grouped by which of columns 2 to 5 holds their single `−`.
pub fn maximal_excess_21(normalized: &SignMatrix) -> Result<SignMatrix> {
    if normalized.n_rows() != 20 || !is_hadamard(normalized) {
        return Err(Error::Precondition(
            "input must be a Hadamard matrix of order 20".into(),
        ));
    }
    let std = standard_rows();
    if (0..3).any(|i| normalized.row(i) != std.row(i)) {
        return Err(Error::Precondition(
            "rows 1-3 are not in standard 3-normalized position".into(),
        ));
    }
    let w = parse_row(W);
    if normalized.row(3) != w.as_slice() {
        return Err(Error::Precondition("row 4 is not the row of sum 12".into()));
    }
    if (4..20).any(|i| normalized.row_sums()[i] != 4) {
        return Err(Error::Precondition("rows 5-20 must have sum 4".into()));
    }
    let mut rows: Vec<Vec<i8>> = Vec::with_capacity(21);
    rows.push(std::iter::once(1).chain(w).collect());
    for f in FIXED {
        rows.push(std::iter::once(-1).chain(parse_row(f)).collect());
    }
    let mut rest: Vec<usize> = (4..20).collect();
    rest.sort_by_key(|&i| (normalized.row(i)[..4].iter().position(|&x| x < 0), i));
    for i in rest {
        rows.push(std::iter::once(1).chain(normalized.row(i).iter().copied()).collect());
    }
    SignMatrix::from_rows(&rows)
}

/// Inverse of [`maximal_excess_21`]: drops rows 2 to 5 and the first column
/// and puts the three standard rows back on top.
pub fn reverse_excess_21(r: &SignMatrix) -> Result<SignMatrix> {
    if r.n_rows() != 21 || r.n_cols() != 21 {
        return Err(Error::Dimension("expected a 21×21 matrix".into()));
    }
    let std = standard_rows();
    let mut rows: Vec<Vec<i8>> = std.rows().map(<[i8]>::to_vec).collect();
    rows.push(r.row(0)[1..].to_vec());
    for i in 5..21 {
        rows.push(r.row(i)[1..].to_vec());
    }
    SignMatrix::from_rows(&rows)
}

/// Canonical keys of all order-21 designs reachable from the given order-20
/// Hadamard matrices.
pub fn enumerate_order21(h20: &[SignMatrix]) -> Result<BTreeSet<CanonicalKey>> {
    let mut keys = BTreeSet::new();
    for h in h20 {
        for t in three_normalizations(h)? {
            keys.insert(canonical_key(&maximal_excess_21(&t.matrix)?));
        }
    }
    Ok(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::paley_hadamard;
    use crate::forms::{verify_design, GramForm};
    use crate::matrix::{excess, row_sum_triples, RowSumTriple};

    #[test]
    fn standard_rows_shape() {
        let s = standard_rows();
        assert_eq!((s.n_rows(), s.n_cols()), (3, 20));
        assert!(s.row_sums().iter().all(|&x| x == 0));
        assert_eq!(s.row_dot(0, 1), 0);
        assert_eq!(s.row_dot(1, 2), 0);
        assert_eq!(STANDARD_ROWS[1].len(), 20);
    }

    #[test]
    fn paley_normalization_and_construction() {
        let h = paley_hadamard(19).unwrap();
        let norms = normalize_triple(&h, [0, 1, 2]).unwrap();
        assert!(!norms.is_empty());
        let n = &norms[0].matrix;
        let sub = n.submatrix(&(3..20).collect::<Vec<_>>(), &(0..20).collect::<Vec<_>>()).unwrap();
        assert_eq!(excess(&sub), 76);

        let r = maximal_excess_21(n).unwrap();
        let rep = verify_design(&r).unwrap();
        assert_eq!(rep.form_left, GramForm::BorderedFives { n: 21, fives: 4 });
        assert_eq!(rep.form_right, GramForm::BorderedFives { n: 21, fives: 4 });
        assert!(rep.m_equals_mprime);
        let expect = |i: usize| match i {
            0 => RowSumTriple { first: 1, middle: -4, last: 16 },
            1..=4 => RowSumTriple { first: -1, middle: 2, last: 8 },
            _ => RowSumTriple { first: 1, middle: 2, last: 2 },
        };
        let rows = row_sum_triples(&r).unwrap();
        let cols = row_sum_triples(&r.transpose()).unwrap();
        for i in 0..21 {
            assert_eq!(rows[i], expect(i));
            assert_eq!(cols[i], expect(i));
        }
        // 4×4 blocks of the last 16 rows and columns: line sums 2 on the
        // diagonal, 0 elsewhere
        for bi in 0..4 {
            for bj in 0..4 {
                let want = if bi == bj { 2 } else { 0 };
                for a in 0..4 {
                    let row: i64 = (0..4).map(|b| i64::from(r.get(5 + 4 * bi + a, 5 + 4 * bj + b))).sum();
                    let col: i64 = (0..4).map(|b| i64::from(r.get(5 + 4 * bi + b, 5 + 4 * bj + a))).sum();
                    assert_eq!((row, col), (want, want), "block ({bi}, {bj})");
                }
            }
        }
        let back = reverse_excess_21(&r).unwrap();
        assert!(is_hadamard(&back));
        let mut a: Vec<&[i8]> = back.rows().collect();
        let mut b: Vec<&[i8]> = n.rows().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_unnormalized() {
        let h = paley_hadamard(19).unwrap();
        assert!(maximal_excess_21(&h).is_err());
        assert!(three_normalizations(&SignMatrix::ones(20, 20)).is_err());
    }
}
