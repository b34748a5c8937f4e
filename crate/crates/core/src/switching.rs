//! Row and column switching.
//!
//! Four rows whose entrywise product is `±(1,…,1)` split the columns into at
//! most four types, a column and its negation counting as the same type.
//! Switching negates the entries of those four rows inside one column type.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Rows,
    Columns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwitchQuadruple {
    pub rows: [usize; 4],
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnTypePartition {
    /// Column sets ordered by their smallest member.
    pub types: Vec<Vec<usize>>,
    /// Pattern of each type's smallest column on the quadruple rows.
    pub patterns: Vec<[i8; 4]>,
}

fn product_key(bits: &[Vec<u64>], i: usize, j: usize, mask: &[u64]) -> Vec<u64> {
    let mut p: Vec<u64> = bits[i].iter().zip(&bits[j]).map(|(a, b)| a ^ b).collect();
    if p.first().is_some_and(|w| w & 1 == 1) {
        for (w, m) in p.iter_mut().zip(mask) {
            *w ^= m;
        }
    }
    p
}

fn quadruple_sign(r: &SignMatrix, rows: [usize; 4]) -> Option<i8> {
    let prod = |j: usize| rows.iter().map(|&i| r.get(i, j)).product::<i8>();
    let s = prod(0);
    (1..r.n_cols()).all(|j| prod(j) == s).then_some(s)
}

/// All row (or column) quadruples with entrywise product `±(1,…,1)`, sorted.
pub fn find_quadruples(r: &SignMatrix, axis: Axis) -> Vec<SwitchQuadruple> {
    match axis {
        Axis::Rows => row_quadruples(r),
        Axis::Columns => row_quadruples(&r.transpose()),
    }
}

fn row_quadruples(r: &SignMatrix) -> Vec<SwitchQuadruple> {
    let n = r.n_rows();
    if n < 4 || r.n_cols() == 0 {
        return Vec::new();
    }
    let bits: Vec<Vec<u64>> = (0..n).map(|i| r.row_bits(i)).collect();
    let words = bits[0].len();
    let mut mask = vec![u64::MAX; words];
    let rem = r.n_cols() % 64;
    if rem != 0 {
        mask[words - 1] = (1u64 << rem) - 1;
    }
    let mut by_product: HashMap<Vec<u64>, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            by_product
                .entry(product_key(&bits, i, j, &mask))
                .or_default()
                .push((i, j));
        }
    }
    let mut found = BTreeSet::new();
    for pairs in by_product.values() {
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for &(k, l) in &pairs[a + 1..] {
                if i == k || i == l || j == k || j == l {
                    continue;
                }
                let mut rows = [i, j, k, l];
                rows.sort_unstable();
                found.insert(rows);
            }
        }
    }
    found
        .into_iter()
        .map(|rows| SwitchQuadruple {
            rows,
            sign: quadruple_sign(r, rows).expect("pair products agree up to sign"),
        })
        .collect()
}

fn check_quadruple(r: &SignMatrix, q: &SwitchQuadruple) -> Result<()> {
    let mut seen = q.rows;
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition(format!("repeated row in {:?}", q.rows)));
    }
    if let Some(&bad) = q.rows.iter().find(|&&i| i >= r.n_rows()) {
        return Err(Error::IndexOutOfRange {
            what: "rows",
            index: bad,
            len: r.n_rows(),
        });
    }
    match quadruple_sign(r, q.rows) {
        Some(s) if s == q.sign => Ok(()),
        _ => Err(Error::Precondition(format!(
            "rows {:?} do not multiply to {}(1,…,1)",
            q.rows,
            if q.sign > 0 { "+" } else { "-" }
        ))),
    }
}

pub fn column_types(r: &SignMatrix, q: &SwitchQuadruple) -> Result<ColumnTypePartition> {
    check_quadruple(r, q)?;
    let mut index: HashMap<[i8; 4], usize> = HashMap::new();
    let mut part = ColumnTypePartition {
        types: Vec::new(),
        patterns: Vec::new(),
    };
    for j in 0..r.n_cols() {
        let pat = q.rows.map(|i| r.get(i, j));
        let norm = pat.map(|x| x * pat[0]);
        let t = *index.entry(norm).or_insert_with(|| {
            part.types.push(Vec::new());
            part.patterns.push(pat);
            part.types.len() - 1
        });
        part.types[t].push(j);
    }
    debug_assert!(part.types.len() <= 4);
    Ok(part)
}

pub fn apply_switch(r: &SignMatrix, q: &SwitchQuadruple, type_index: usize) -> Result<SignMatrix> {
    let part = column_types(r, q)?;
    let cols = part.types.get(type_index).ok_or_else(|| {
        Error::Precondition(format!(
            "type {type_index} is empty (quadruple has {} types)",
            part.types.len()
        ))
    })?;
    Ok(negate_block(r, &q.rows, cols))
}

fn negate_block(r: &SignMatrix, rows: &[usize], cols: &[usize]) -> SignMatrix {
    let c = r.n_cols();
    r.with_entries(|e| {
        for &i in rows {
            for &j in cols {
                e[i * c + j] = -e[i * c + j];
            }
        }
    })
}

/// One switch (type 0) per row quadruple, then one per column quadruple.
pub fn switch_neighbors(r: &SignMatrix) -> Vec<SignMatrix> {
    let mut out = Vec::new();
    for q in find_quadruples(r, Axis::Rows) {
        out.push(apply_switch(r, &q, 0).expect("quadruple found on r"));
    }
    let t = r.transpose();
    for q in find_quadruples(&t, Axis::Rows) {
        out.push(apply_switch(&t, &q, 0).expect("quadruple found on rᵀ").transpose());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_key;
    use crate::det::abs_determinant;

    fn sylvester(k: u32) -> SignMatrix {
        let n = 1usize << k;
        SignMatrix::from_fn(n, n, |i, j| {
            if (i & j).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        })
    }

    fn brute_force(r: &SignMatrix) -> Vec<SwitchQuadruple> {
        let n = r.n_rows();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        if let Some(sign) = quadruple_sign(r, [a, b, c, d]) {
                            out.push(SwitchQuadruple {
                                rows: [a, b, c, d],
                                sign,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn sylvester_8_quadruples() {
        let h = sylvester(3);
        let qs = find_quadruples(&h, Axis::Rows);
        assert_eq!(qs, brute_force(&h));
        assert_eq!(qs.len(), 14);
        for q in &qs {
            let x = q.rows.iter().fold(0, |acc, &i| acc ^ i);
            assert_eq!(x, 0);
            let part = column_types(&h, q).unwrap();
            assert_eq!(part.types.len(), 4);
            assert!(part.types.iter().all(|t| t.len() == 2));
        }
        assert_eq!(switch_neighbors(&h).len(), 28);
    }

    #[test]
    fn all_ones_single_quadruple() {
        let j = SignMatrix::ones(4, 4);
        let qs = find_quadruples(&j, Axis::Rows);
        assert_eq!(qs.len(), 1);
        let part = column_types(&j, &qs[0]).unwrap();
        assert_eq!(part.types, vec![vec![0, 1, 2, 3]]);
        assert!(apply_switch(&j, &qs[0], 1).is_err());
    }

    #[test]
    fn invalid_quadruple_rejected() {
        let h = sylvester(3);
        let bad = SwitchQuadruple {
            rows: [0, 1, 2, 4],
            sign: 1,
        };
        assert!(column_types(&h, &bad).is_err());
        let rep = SwitchQuadruple {
            rows: [0, 0, 1, 1],
            sign: 1,
        };
        assert!(column_types(&h, &rep).is_err());
    }

    #[test]
    fn switch_properties_on_sylvester_16() {
        let h = sylvester(4);
        let det = abs_determinant(&h).unwrap();
        for q in find_quadruples(&h, Axis::Rows).iter().take(40) {
            let part = column_types(&h, q).unwrap();
            let keys: Vec<_> = (0..part.types.len())
                .map(|t| {
                    let s = apply_switch(&h, q, t).unwrap();
                    assert_eq!(abs_determinant(&s).unwrap(), det);
                    assert_eq!(apply_switch(&s, q, t).unwrap(), h);
                    canonical_key(&s)
                })
                .collect();
            assert!(keys.windows(2).all(|w| w[0] == w[1]));
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn switches_are_involutions_on_scrambled_sylvester(seed in proptest::prelude::any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = sylvester(4);
            let mut rp: Vec<usize> = (0..16).collect();
            let mut cp: Vec<usize> = (0..16).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let rs: Vec<i8> = (0..16).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let cs: Vec<i8> = (0..16).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let m = SignMatrix::from_fn(16, 16, |i, j| rs[i] * cs[j] * h.get(rp[i], cp[j]));
            let det = abs_determinant(&m).unwrap();
            let quads = find_quadruples(&m, Axis::Rows);
            proptest::prop_assert_eq!(quads.len(), find_quadruples(&h, Axis::Rows).len());
            let q = &quads[rng.gen_range(0..quads.len())];
            let types = column_types(&m, q).unwrap().types.len();
            let t = rng.gen_range(0..types);
            let s = apply_switch(&m, q, t).unwrap();
            proptest::prop_assert_eq!(abs_determinant(&s).unwrap(), det);
            proptest::prop_assert_eq!(apply_switch(&s, q, t).unwrap(), m);
        }
    }
}
