//! Generative constructions of Hadamard matrices and optimal designs.

mod circulant;
mod doubling;
mod order21;

pub use circulant::{circulant_search, square_pairs, CirculantDesign, CirculantSpec, SquarePair};
pub use doubling::{
    double, doubling_base, doubling_classes_exact, enumerate_doubling, DoublingReport, DoublingSpec, DoublingVariant,
};
pub use order21::{
    enumerate_order21, maximal_excess_21, reverse_excess_21, standard_rows, three_normalizations,
    NormalizationTriple, STANDARD_ROWS,
};

use crate::error::{Error, Result};
use crate::gram::{gram, GramMatrix, Side};
use crate::matrix::SignMatrix;

pub(crate) fn is_hadamard(m: &SignMatrix) -> bool {
    m.is_square()
        && gram(m, Side::Left).is_ok_and(|g| g == GramMatrix::scalar(m.n_rows()))
}

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

/// Quadratic character modulo a prime.
fn legendre(x: u64, q: u64) -> i8 {
    let x = x % q;
    if x == 0 {
        return 0;
    }
    if (1..q).any(|y| y * y % q == x) {
        1
    } else {
        -1
    }
}

/// Paley's Hadamard matrix of order `q + 1` for a prime `q ≡ 3 (mod 4)`.
pub fn paley_hadamard(q: u64) -> Result<SignMatrix> {
    if !is_prime(q) || q % 4 != 3 {
        return Err(Error::InvalidParameter(format!(
            "q = {q} must be a prime congruent to 3 mod 4"
        )));
    }
    let n = (q + 1) as usize;
    let chi: Vec<i8> = (0..q).map(|x| legendre(x, q)).collect();
    let h = SignMatrix::from_fn(n, n, |i, j| match (i, j) {
        (0, _) => 1,
        (_, 0) => -1,
        _ if i == j => 1,
        _ => chi[(j + q as usize - i) % q as usize],
    });
    debug_assert!(is_hadamard(&h));
    Ok(h)
}

/// Kronecker product of two Hadamard matrices.
pub fn kronecker(h1: &SignMatrix, h2: &SignMatrix) -> Result<SignMatrix> {
    for (name, h) in [("first", h1), ("second", h2)] {
        if !is_hadamard(h) {
            return Err(Error::Precondition(format!("{name} factor is not Hadamard")));
        }
    }
    let (n1, n2) = (h1.n_rows(), h2.n_rows());
    Ok(SignMatrix::from_fn(n1 * n2, n1 * n2, |i, j| {
        h1.get(i / n2, j / n2) * h2.get(i % n2, j % n2)
    }))
}

/// `J₄ − 2·I₄`, regular with row sums 2.
pub fn regular_four() -> SignMatrix {
    SignMatrix::from_fn(4, 4, |i, j| if i == j { -1 } else { 1 })
}

/// Borders a regular Hadamard matrix of order 16 with an all-ones row and
/// column, negating the core first if its line sums are `+4`.
pub fn border_regular_16(core: &SignMatrix) -> Result<SignMatrix> {
    if core.n_rows() != 16 || !is_hadamard(core) {
        return Err(Error::Precondition(
            "core must be a Hadamard matrix of order 16".into(),
        ));
    }
    let sums: Vec<i64> = core.row_sums().into_iter().chain(core.col_sums()).collect();
    let core = if sums.iter().all(|&s| s == -4) {
        core.clone()
    } else if sums.iter().all(|&s| s == 4) {
        core.negated()
    } else {
        return Err(Error::Precondition("core is not regular".into()));
    };
    Ok(SignMatrix::from_fn(17, 17, |i, j| {
        if i == 0 || j == 0 {
            1
        } else {
            core.get(i - 1, j - 1)
        }
    }))
}

/// The order-17 design obtained by bordering `−(K⊗K)`, `K = J₄ − 2·I₄`.
pub fn bordered_17() -> SignMatrix {
    let k = regular_four();
    let core = kronecker(&k, &k).expect("K is Hadamard").negated();
    border_regular_16(&core).expect("K⊗K is regular")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::abs_determinant;
    use crate::forms::{verify_design, GramForm};
    use num_bigint::BigInt;

    #[test]
    fn paley_orders() {
        assert_eq!(gram(&paley_hadamard(3).unwrap(), Side::Left).unwrap(), GramMatrix::scalar(4));
        let h12 = paley_hadamard(11).unwrap();
        assert_eq!(abs_determinant(&h12).unwrap(), BigInt::from(12).pow(6));
        assert!(is_hadamard(&paley_hadamard(19).unwrap()));
        for bad in [1, 2, 5, 9, 15, 21] {
            assert!(paley_hadamard(bad).is_err());
        }
    }

    #[test]
    fn kronecker_products() {
        let h2 = SignMatrix::from_pattern(&["++", "+-"]).unwrap();
        let h4 = kronecker(&h2, &h2).unwrap();
        assert!(is_hadamard(&h4));
        let k = regular_four();
        assert!(k.row_sums().iter().all(|&s| s == 2));
        let kk = kronecker(&k, &k).unwrap();
        assert_eq!(kk.n_rows(), 16);
        assert!(is_hadamard(&kk));
        assert!(kk.row_sums().iter().chain(&kk.col_sums()).all(|&s| s == 4));
        assert!(kronecker(&SignMatrix::ones(2, 2), &h2).is_err());
    }

    #[test]
    fn bordered_minus_three() {
        let r = bordered_17();
        let m = gram(&r, Side::Left).unwrap();
        assert!((1..17).all(|j| m.get(0, j) == -3));
        let rep = verify_design(&r).unwrap();
        assert_eq!(rep.form_left, GramForm::BorderedMinus3 { n: 17 });
        assert_eq!(rep.form_right, GramForm::BorderedMinus3 { n: 17 });
        let det = abs_determinant(&r).unwrap();
        assert_eq!(&det * &det, m.determinant());
        assert!(border_regular_16(&paley_hadamard(3).unwrap()).is_err());
        let h2 = SignMatrix::from_pattern(&["++", "+-"]).unwrap();
        let sylvester16 = kronecker(&kronecker(&h2, &h2).unwrap(), &kronecker(&h2, &h2).unwrap()).unwrap();
        assert!(border_regular_16(&sylvester16).is_err());
    }
}
