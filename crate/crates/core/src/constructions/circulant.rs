//! Designs `[A B; Bᵀ −Aᵀ]` with circulant `A`, `B` of half order `v`.
//!
//! Both Gram matrices equal `(n−2)·I + 2·I₂⊗J` exactly when the periodic
//! autocorrelations satisfy `P_A(s) + P_B(s) = 2` for every shift `s ≠ 0`.
//! Negating or swapping `A` and `B`, and rotating either first row, are
//! Hadamard equivalences, so `A` has row sum `a`, `B` has row sum `b`
//! (`a ≥ b ≥ 0`, `a² + b² = 2n − 2`) and both rows are taken up to rotation.

use std::collections::{BTreeMap, HashMap};

use crate::canonical::{canonical_key, CanonicalKey};
use crate::error::{Error, Result};
use crate::gram::{gram, GramMatrix, Side};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SquarePair {
    pub a: i64,
    pub b: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CirculantSpec {
    pub half_order: usize,
    pub first_row_a: Vec<i8>,
    pub first_row_b: Vec<i8>,
}

impl CirculantSpec {
    pub fn assemble(&self) -> Result<SignMatrix> {
        let v = self.half_order;
        if self.first_row_a.len() != v || self.first_row_b.len() != v {
            return Err(Error::Dimension(format!(
                "circulant first rows must have length {v}"
            )));
        }
        let circ = |row: &[i8], i: usize, j: usize| row[(j + v - i) % v];
        Ok(SignMatrix::from_fn(2 * v, 2 * v, |i, j| {
            match (i < v, j < v) {
                (true, true) => circ(&self.first_row_a, i, j),
                (true, false) => circ(&self.first_row_b, i, j - v),
                // Bᵀ
                (false, true) => circ(&self.first_row_b, j, i - v),
                // −Aᵀ
                (false, false) => -circ(&self.first_row_a, j - v, i - v),
            }
        }))
    }

    pub fn row_sums(&self) -> SquarePair {
        let s = |r: &[i8]| r.iter().map(|&x| i64::from(x)).sum::<i64>();
        SquarePair {
            a: s(&self.first_row_a),
            b: s(&self.first_row_b),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CirculantDesign {
    pub spec: CirculantSpec,
    pub matrix: SignMatrix,
    pub key: CanonicalKey,
}

impl CirculantDesign {
    pub fn square_pair(&self) -> SquarePair {
        self.spec.row_sums()
    }
}

/// Representations `2n − 2 = a² + b²` with `a ≥ b ≥ 0` and `a ≡ b ≡ n/2 (mod 2)`.
pub fn square_pairs(n: usize) -> Vec<SquarePair> {
    let target = 2 * n as i64 - 2;
    let v = (n / 2) as i64;
    let mut out = Vec::new();
    let mut a = 0;
    while a * a <= target {
        let b2 = target - a * a;
        let b = (b2 as f64).sqrt().round() as i64;
        if b * b == b2 && a >= b && (v - a) % 2 == 0 && (v - b) % 2 == 0 && a <= v {
            out.push(SquarePair { a, b });
        }
        a += 1;
    }
    out.reverse();
    out
}

/// Bitmasks of `v` bits with `minus` set bits that are the least rotation of
/// their necklace.
fn necklaces(v: usize, minus: usize) -> Vec<u32> {
    let full = if v == 32 { u32::MAX } else { (1u32 << v) - 1 };
    let rot = |x: u32, s: usize| ((x >> s) | (x << (v - s))) & full;
    let mut out = Vec::new();
    if minus == 0 {
        return vec![0];
    }
    // Gosper's hack over all v-bit words with `minus` bits set
    let mut x: u64 = (1u64 << minus) - 1;
    while x < 1u64 << v {
        let w = x as u32;
        if (1..v).all(|s| rot(w, s) >= w) {
            out.push(w);
        }
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

fn signs(mask: u32, v: usize) -> Vec<i8> {
    (0..v).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// Periodic autocorrelation at shifts `1..=v/2`.
fn autocorrelation(row: &[i8]) -> Vec<i64> {
    let v = row.len();
    (1..=v / 2)
        .map(|s| (0..v).map(|i| i64::from(row[i] * row[(i + s) % v])).sum())
        .collect()
}

/// Exhaustive circulant search at order `n ≡ 2 (mod 4)`, one design per
/// Hadamard class, sorted by `(a, b)` descending and then by key.
pub fn circulant_search(n: usize) -> Result<Vec<CirculantDesign>> {
    if n % 4 != 2 {
        return Err(Error::InvalidParameter(format!(
            "circulant search needs n = 2 mod 4, got {n}"
        )));
    }
    let v = n / 2;
    if v > 31 {
        return Err(Error::InvalidParameter(format!("half order {v} is too large")));
    }
    let target = GramMatrix::ehlich_even(n);
    let mut out = Vec::new();
    for pair in square_pairs(n) {
        let minus_a = ((v as i64 - pair.a) / 2) as usize;
        let minus_b = ((v as i64 - pair.b) / 2) as usize;
        let mut by_paf: HashMap<Vec<i64>, Vec<Vec<i8>>> = HashMap::new();
        for w in necklaces(v, minus_a) {
            let row = signs(w, v);
            by_paf.entry(autocorrelation(&row)).or_default().push(row);
        }
        let mut found: BTreeMap<CanonicalKey, CirculantDesign> = BTreeMap::new();
        for w in necklaces(v, minus_b) {
            let row_b = signs(w, v);
            let want: Vec<i64> = autocorrelation(&row_b).iter().map(|p| 2 - p).collect();
            let Some(rows_a) = by_paf.get(&want) else {
                continue;
            };
            for row_a in rows_a {
                let spec = CirculantSpec {
                    half_order: v,
                    first_row_a: row_a.clone(),
                    first_row_b: row_b.clone(),
                };
                let matrix = spec.assemble()?;
                if gram(&matrix, Side::Left)? != target || gram(&matrix, Side::Right)? != target {
                    continue;
                }
                let key = canonical_key(&matrix);
                found.entry(key.clone()).or_insert(CirculantDesign { spec, matrix, key });
            }
        }
        out.extend(found.into_values());
    }
    Ok(out)
}
