//! Exact determinants by fraction-free (Bareiss) elimination.
//!
//! Every intermediate value is a minor of the input, so for ±1 matrices the
//! entries stay below the Hadamard bound. The `i128` path covers orders up to
//! about 26 without overflow; anything larger falls back to `BigInt`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::Result;
use crate::matrix::SignMatrix;

pub type ExactInteger = BigInt;

/// Exact determinant of a square sign matrix.
pub fn determinant(m: &SignMatrix) -> Result<BigInt> {
    let n = m.order()?;
    let rows: Vec<Vec<i128>> = m
        .rows()
        .map(|r| r.iter().map(|&x| i128::from(x)).collect())
        .collect();
    debug_assert_eq!(rows.len(), n);
    Ok(det_i128_or_big(rows))
}

/// Absolute value of [`determinant`].
pub fn abs_determinant(m: &SignMatrix) -> Result<BigInt> {
    determinant(m).map(|d| d.abs())
}

/// Determinant of a small integer matrix given by rows.
pub fn int_determinant(rows: &[Vec<i64>]) -> BigInt {
    let n = rows.len();
    assert!(
        rows.iter().all(|r| r.len() == n),
        "int_determinant needs a square matrix"
    );
    det_i128_or_big(
        rows.iter()
            .map(|r| r.iter().map(|&x| i128::from(x)).collect())
            .collect(),
    )
}

/// Determinant of a sign matrix in `i128`, or `None` if an intermediate overflowed.
pub fn determinant_i128(m: &SignMatrix) -> Option<i128> {
    let rows = m
        .rows()
        .map(|r| r.iter().map(|&x| i128::from(x)).collect())
        .collect();
    bareiss_i128(rows)
}

fn det_i128_or_big(rows: Vec<Vec<i128>>) -> BigInt {
    match bareiss_i128(rows.clone()) {
        Some(d) => BigInt::from(d),
        None => bareiss_big(
            rows.into_iter()
                .map(|r| r.into_iter().map(BigInt::from).collect())
                .collect(),
        ),
    }
}

fn bareiss_i128(mut a: Vec<Vec<i128>>) -> Option<i128> {
    let n = a.len();
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return Some(0);
            };
            a.swap(k, swap);
            sign = -sign;
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            let lead = a[i][k];
            for j in k + 1..n {
                let t = a[i][j]
                    .checked_mul(pivot)?
                    .checked_sub(lead.checked_mul(a[k][j])?)?;
                a[i][j] = t / prev;
            }
            a[i][k] = 0;
        }
        prev = pivot;
    }
    Some(sign * a[n - 1][n - 1])
}

fn bareiss_big(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut negate = false;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(swap) => {
                    a.swap(k, swap);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        let pivot = a[k][k].clone();
        for i in k + 1..n {
            let lead = a[i][k].clone();
            for j in k + 1..n {
                let t = &a[i][j] * &pivot - &lead * &a[k][j];
                a[i][j] = t / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = pivot;
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Writes `value` as `odd × 2^k` (the factored form used in determinant tables).
pub fn factor_power_of_two(value: &BigInt) -> (BigInt, u64) {
    if value.is_zero() {
        return (BigInt::zero(), 0);
    }
    let k = value.trailing_zeros().unwrap_or(0);
    (value >> k, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SignMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use proptest::strategy::Strategy;

    proptest::proptest! {
        #[test]
        fn bareiss_agrees_with_expansion(
            (n, bits) in (1usize..7).prop_flat_map(|n| {
                (proptest::prelude::Just(n), proptest::collection::vec(proptest::prelude::any::<bool>(), n * n))
            }),
        ) {
            let m = SignMatrix::from_fn(n, n, |i, j| if bits[i * n + j] { -1 } else { 1 });
            let rows: Vec<Vec<i64>> = m.rows().map(|r| r.iter().map(|&x| i64::from(x)).collect()).collect();
            let want = laplace(&rows);
            proptest::prop_assert_eq!(determinant(&m).unwrap(), BigInt::from(want));
            proptest::prop_assert_eq!(determinant_i128(&m), Some(i128::from(want)));
        }
    }

    fn laplace(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * laplace(&minor)
            })
            .sum()
    }

    #[test]
    fn small_cases() {
        let one = SignMatrix::ones(1, 1);
        assert_eq!(determinant(&one).unwrap(), BigInt::from(1));
        let h2 = SignMatrix::from_pattern(&["++", "+-"]).unwrap();
        assert_eq!(determinant(&h2).unwrap(), BigInt::from(-2));
        assert_eq!(determinant(&SignMatrix::ones(4, 4)).unwrap(), BigInt::zero());
        assert!(determinant(&SignMatrix::ones(2, 3)).is_err());
    }

    #[test]
    fn matches_laplace_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..=7);
            let m = SignMatrix::from_fn(n, n, |_, _| if rng.gen() { 1 } else { -1 });
            let rows: Vec<Vec<i64>> = m
                .rows()
                .map(|r| r.iter().map(|&x| i64::from(x)).collect())
                .collect();
            assert_eq!(determinant(&m).unwrap(), BigInt::from(laplace(&rows)));
        }
    }

    #[test]
    fn big_fallback_agrees() {
        // order 40: i128 intermediates overflow for dense random input
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = SignMatrix::from_fn(40, 40, |_, _| if rng.gen() { 1 } else { -1 });
        let rows: Vec<Vec<BigInt>> = m
            .rows()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        assert_eq!(determinant(&m).unwrap(), bareiss_big(rows));
    }

    #[test]
    fn factored_form() {
        let v = BigInt::from(195_312_500u64) << 21;
        assert_eq!(factor_power_of_two(&v), (BigInt::from(48_828_125u64), 23));
        assert_eq!(factor_power_of_two(&BigInt::from(12)), (BigInt::from(3), 2));
    }
}
