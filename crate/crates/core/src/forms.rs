//! Recognition of the known optimal Gram forms and whole-design verification.
//!
//! Every template below is a "signed rank-one" pattern: after discarding signs
//! its off-diagonal entries are determined by a small support structure, and
//! the signs must factor as `d_i·d_j·t_ij`. Matching therefore needs no
//! general search: locate the support structure, derive the diagonal sign
//! vector from one row, and check the rest.

use std::fmt;

use num_bigint::BigInt;

use crate::det::determinant;
use crate::error::{Error, Result};
use crate::gram::{block_profile, gram, BlockProfile, GramMatrix, Side};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GramForm {
    /// `n·I`.
    Hadamard { n: usize },
    /// `(n−1)·I + J` with `n = k² + (k+1)²`.
    Barba { n: usize, k: usize },
    /// `(n−2)·I + 2·I₂⊗J_{n/2}`.
    EhlichEven { n: usize },
    /// Order 17: first row/column off-diagonals −3, everything else 1.
    BorderedMinus3 { n: usize },
    /// Orders 9 and 21: `fives` entries equal to 5 in the first row/column, everything else 1.
    BorderedFives { n: usize, fives: usize },
    Unknown { n: usize },
}

impl GramForm {
    pub fn name(&self) -> &'static str {
        match self {
            GramForm::Hadamard { .. } => "hadamard",
            GramForm::Barba { .. } => "barba",
            GramForm::EhlichEven { .. } => "ehlich-even",
            GramForm::BorderedMinus3 { .. } => "bordered-minus3",
            GramForm::BorderedFives { .. } => "bordered-fives",
            GramForm::Unknown { .. } => "unknown",
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, GramForm::Unknown { .. })
    }
}

impl fmt::Display for GramForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GramForm::Hadamard { n } | GramForm::EhlichEven { n } => {
                write!(f, "{}(n={n})", self.name())
            }
            GramForm::Barba { n, k } => write!(f, "barba(n={n},k={k})"),
            GramForm::BorderedMinus3 { n } => write!(f, "bordered-minus3(n={n})"),
            GramForm::BorderedFives { n, fives } => {
                write!(f, "bordered-fives(n={n},fives={fives})")
            }
            GramForm::Unknown { n } => write!(f, "unknown(n={n})"),
        }
    }
}

/// Integer `k` with `k² + (k+1)² = n`, if any.
pub fn barba_parameter(n: usize) -> Option<usize> {
    (0..).take_while(|k| k * k <= n).find(|k| k * k + (k + 1) * (k + 1) == n)
}

/// Classifies `m` up to simultaneous row/column permutation and negation.
pub fn classify_gram(m: &GramMatrix) -> GramForm {
    let n = m.order();
    if is_scalar(m) {
        return GramForm::Hadamard { n };
    }
    if let Some(k) = barba_parameter(n) {
        if matches_barba(m) {
            return GramForm::Barba { n, k };
        }
    }
    if n % 4 == 2 && matches_ehlich_even(m) {
        return GramForm::EhlichEven { n };
    }
    if n == 17 && matches_bordered(m, 3, n - 1, -1) {
        return GramForm::BorderedMinus3 { n };
    }
    let fives = match n {
        9 => Some(1),
        21 => Some(4),
        _ => None,
    };
    if let Some(fives) = fives {
        if matches_bordered(m, 5, fives, 1) {
            return GramForm::BorderedFives { n, fives };
        }
    }
    GramForm::Unknown { n }
}

/// Like [`classify_gram`] but re-validates the invariants of a matrix built
/// from raw rows.
pub fn classify_gram_rows(rows: &[Vec<i64>]) -> Result<GramForm> {
    let g = GramMatrix::from_rows(rows)?;
    Ok(classify_gram(&g))
}

fn is_scalar(m: &GramMatrix) -> bool {
    let n = m.order();
    (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j) == 0))
}

/// Checks that `m[i][j] = d_i d_j t(i,j)` for some sign vector `d`, where the
/// template `t` is nonzero wherever `m` is.
fn signs_factor(m: &GramMatrix, template: impl Fn(usize, usize) -> i64) -> bool {
    let n = m.order();
    let mut d = vec![0i64; n];
    let mut stack = Vec::new();
    for root in 0..n {
        if d[root] != 0 {
            continue;
        }
        d[root] = 1;
        stack.push(root);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let t = template(i, j);
                let v = m.get(i, j);
                if t == 0 {
                    if v != 0 {
                        return false;
                    }
                    continue;
                }
                if v.abs() != t.abs() {
                    return false;
                }
                let want = v / t * d[i];
                if d[j] == 0 {
                    d[j] = want;
                    stack.push(j);
                } else if d[j] != want {
                    return false;
                }
            }
        }
    }
    true
}

fn matches_barba(m: &GramMatrix) -> bool {
    signs_factor(m, |_, _| 1)
}

fn matches_ehlich_even(m: &GramMatrix) -> bool {
    let n = m.order();
    let h = n / 2;
    // The |2| entries must split the indices into two cliques of size n/2.
    let side: Vec<usize> = (0..n)
        .map(|j| usize::from(j != 0 && m.get(0, j) == 0))
        .collect();
    if side.iter().filter(|&&s| s == 0).count() != h {
        return false;
    }
    signs_factor(m, |i, j| if side[i] == side[j] { 2 } else { 0 })
}

/// One special index whose off-diagonal entries have absolute value `special`
/// in exactly `count` positions, all other off-diagonal entries ±1; the
/// special entries carry template sign `sign`.
fn matches_bordered(m: &GramMatrix, special: i64, count: usize, sign: i64) -> bool {
    let n = m.order();
    let hits: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| m.get(i, j).abs() == special)
        .collect();
    if hits.len() != count {
        return false;
    }
    let candidates: Vec<usize> = match hits.first() {
        Some(&(i, j)) => vec![i, j],
        None => return false,
    };
    candidates.into_iter().any(|c| {
        hits.iter().all(|&(i, j)| i == c || j == c)
            && signs_factor(m, |i, j| {
                if (i == c || j == c) && m.get(i, j).abs() == special {
                    special * sign
                } else {
                    1
                }
            })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignReport {
    pub order: usize,
    pub form_left: GramForm,
    pub form_right: GramForm,
    pub m_equals_mprime: bool,
    pub block_profile: Option<BlockProfile>,
    pub det: BigInt,
}

impl DesignReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let (odd, pow) = crate::det::factor_power_of_two(&self.det);
        let mut out = String::new();
        out.push_str(&format!("order: {}\n", self.order));
        out.push_str(&format!("det: {}\n", self.det));
        out.push_str(&format!("det_factored: {odd}x2^{pow}\n"));
        out.push_str(&format!("form_left: {}\n", self.form_left));
        out.push_str(&format!("form_right: {}\n", self.form_right));
        out.push_str(&format!("m_equals_mprime: {}\n", self.m_equals_mprime));
        if let Some(p) = &self.block_profile {
            out.push_str(&format!(
                "block_sums: {} {} {} {}\n",
                p.sums[0], p.sums[1], p.sums[2], p.sums[3]
            ));
            out.push_str(&format!("block_type: ({},{})\n", p.a, p.b));
            out.push_str(&format!("block_optimal: {}\n", p.optimal));
        }
        out
    }
}

/// Structural report for a square design: both Gram forms, whether `M = M′`,
/// the block profile for even orders (when the blocks have constant sums) and
/// the exact determinant.
pub fn verify_design(r: &SignMatrix) -> Result<DesignReport> {
    let n = r.order()?;
    let left = gram(r, Side::Left)?;
    let right = gram(r, Side::Right)?;
    let profile = if n % 2 == 0 {
        match block_profile(r) {
            Ok(p) => Some(p),
            Err(Error::Structure(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(DesignReport {
        order: n,
        form_left: classify_gram(&left),
        form_right: classify_gram(&right),
        m_equals_mprime: left == right,
        block_profile: profile,
        det: determinant(r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bordered(n: usize, special: i64, count: usize) -> GramMatrix {
        GramMatrix::from_fn(n, |i, j| match (i, j) {
            _ if i == j => n as i64,
            (0, j) | (j, 0) if j <= count => special,
            _ => 1,
        })
        .unwrap()
    }

    fn random_conjugate(m: &GramMatrix, rng: &mut ChaCha8Rng) -> GramMatrix {
        let n = m.order();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let signs: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        m.conjugate(&perm, &signs).unwrap()
    }

    #[test]
    fn templates_classify() {
        assert_eq!(
            classify_gram(&GramMatrix::scalar(4)),
            GramForm::Hadamard { n: 4 }
        );
        assert_eq!(
            classify_gram(&GramMatrix::barba(13)),
            GramForm::Barba { n: 13, k: 2 }
        );
        assert_eq!(
            classify_gram(&GramMatrix::ehlich_even(26)),
            GramForm::EhlichEven { n: 26 }
        );
        assert_eq!(
            classify_gram(&bordered(17, -3, 16)),
            GramForm::BorderedMinus3 { n: 17 }
        );
        assert_eq!(
            classify_gram(&bordered(21, 5, 4)),
            GramForm::BorderedFives { n: 21, fives: 4 }
        );
        assert_eq!(
            classify_gram(&bordered(9, 5, 1)),
            GramForm::BorderedFives { n: 9, fives: 1 }
        );
    }

    #[test]
    fn near_misses_are_unknown() {
        // three 5s at order 21
        assert_eq!(
            classify_gram(&bordered(21, 5, 3)),
            GramForm::Unknown { n: 21 }
        );
        // Barba shape at an order that is not k² + (k+1)²
        assert_eq!(classify_gram(&GramMatrix::barba(7)), GramForm::Unknown { n: 7 });
        // 5s split across two different rows
        let mut rows = bordered(21, 5, 3).rows();
        rows[5][6] = 5;
        rows[6][5] = 5;
        assert_eq!(
            classify_gram_rows(&rows).unwrap(),
            GramForm::Unknown { n: 21 }
        );
        // sign pattern that does not factor
        let mut rows = GramMatrix::barba(5).rows();
        rows[1][2] = -1;
        rows[2][1] = -1;
        assert_eq!(classify_gram_rows(&rows).unwrap(), GramForm::Unknown { n: 5 });
    }

    #[test]
    fn classification_is_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            GramMatrix::scalar(8),
            GramMatrix::barba(13),
            GramMatrix::barba(25),
            GramMatrix::ehlich_even(6),
            GramMatrix::ehlich_even(26),
            bordered(17, -3, 16),
            bordered(21, 5, 4),
            bordered(9, 5, 1),
            bordered(21, 5, 3),
        ];
        for m in &cases {
            let form = classify_gram(m);
            for _ in 0..200 {
                assert_eq!(classify_gram(&random_conjugate(m, &mut rng)), form);
            }
        }
    }

    #[test]
    fn raw_rows_are_validated() {
        assert!(classify_gram_rows(&[vec![2, 1], vec![0, 2]]).is_err());
    }
}
