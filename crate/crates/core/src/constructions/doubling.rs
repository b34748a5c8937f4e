//! Order-26 designs `[A B; A −B]` and `[A A; B −B]` with `B` a row
//! permutation of an order-13 design `A` satisfying `A·Aᵀ = Aᵀ·A = 12·I + J`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canonical::{canonical_key, CanonicalKey};
use crate::decomposition::{decompose_gram, DecomposeMode};
use crate::error::{Error, Result};
use crate::gram::{gram, GramMatrix, Side};
use crate::matrix::{permute_rows, SignMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DoublingVariant {
    /// `[A B; A −B]`
    R,
    /// `[A A; B −B]`
    RPrime,
}

#[derive(Clone, Debug)]
pub struct DoublingSpec {
    pub base: SignMatrix,
    /// `B[i] = A[row_permutation[i]]`.
    pub row_permutation: Vec<usize>,
}

/// The order-13 design produced by decomposing `12·I + J`.
pub fn doubling_base() -> Result<SignMatrix> {
    decompose_gram(&GramMatrix::barba(13), DecomposeMode::First)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Structure("12I+J has no decomposition".into()))
}

pub fn double(spec: &DoublingSpec, variant: DoublingVariant) -> Result<SignMatrix> {
    let a = &spec.base;
    let n = a.n_rows();
    let target = GramMatrix::barba(n);
    // Aᵀ·A only matters up to column signs and order
    if !a.is_square() || gram(a, Side::Left)? != target {
        return Err(Error::Precondition(
            "doubling base must satisfy A·Aᵀ = (n−1)·I + J".into(),
        ));
    }
    let b = permute_rows(a, &spec.row_permutation)?;
    let neg_b = b.negated();
    match variant {
        DoublingVariant::R => SignMatrix::block2x2(a, &b, a, &neg_b),
        DoublingVariant::RPrime => SignMatrix::block2x2(a, a, &b, &neg_b),
    }
}

#[derive(Clone, Debug)]
pub struct DoublingReport {
    pub keys: BTreeSet<CanonicalKey>,
    pub samples: u64,
    /// Whether the run ended by the no-new-key rule rather than `max_samples`.
    pub saturated: bool,
}

/// Samples random row permutations and both variants, adding the keys of each
/// result and its transpose, until `patience` consecutive samples add no key.
pub fn enumerate_doubling(
    base: &SignMatrix,
    patience: u64,
    max_samples: u64,
    rng_seed: u64,
) -> Result<DoublingReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = base.n_rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut keys = BTreeSet::new();
    let mut idle = 0;
    let mut samples = 0;
    while idle < patience && samples < max_samples {
        perm.shuffle(&mut rng);
        let variant = if samples % 2 == 0 {
            DoublingVariant::R
        } else {
            DoublingVariant::RPrime
        };
        let spec = DoublingSpec {
            base: base.clone(),
            row_permutation: perm.clone(),
        };
        let r = double(&spec, variant)?;
        let fresh_r = keys.insert(canonical_key(&r));
        let fresh_t = keys.insert(canonical_key(&r.transpose()));
        samples += 1;
        if fresh_r || fresh_t {
            idle = 0;
        } else {
            idle += 1;
        }
    }
    Ok(DoublingReport {
        keys,
        samples,
        saturated: idle >= patience,
    })
}

/// Points of the projective plane of order 3 as normalized vectors over GF(3).
fn plane_points() -> Vec<[u8; 3]> {
    let mut pts = Vec::with_capacity(13);
    for code in 1..27u8 {
        let v = [code % 3, code / 3 % 3, code / 9];
        if v.iter().find(|&&x| x != 0) == Some(&1) {
            pts.push(v);
        }
    }
    pts
}

type Plane = [u16; 13];

fn relabel(perm: &[u8; 13], plane: &Plane) -> Plane {
    let mut out = plane.map(|line| {
        (0..13)
            .filter(|&p| line >> p & 1 == 1)
            .fold(0u16, |m, p| m | 1 << perm[p])
    });
    out.sort_unstable();
    out
}

/// Every class reachable as `[A B; A −B]` with `B` a row permutation of `A`,
/// or as its transpose, by exhaustive enumeration.
///
/// `A = J − 2N` for the incidence matrix `N` of the plane of order 3, whose
/// collineation group `G` has order 5616. Negating rows and applying
/// automorphisms of `A` shows that the class of the doubled matrix only
/// depends on the double coset `G·P·G` of the permutation `P`. Right cosets
/// `P·G` are labelled copies of the plane, so the double cosets are the
/// `G`-orbits on the 1,108,800 labelled planes.
pub fn doubling_classes_exact() -> Result<BTreeSet<CanonicalKey>> {
    let pts = plane_points();
    let index = |v: [u8; 3]| -> Option<usize> {
        let lead = *v.iter().find(|&&x| x != 0)?;
        let w = v.map(|x| x * lead % 3);
        pts.iter().position(|p| *p == w)
    };
    let dot = |a: &[u8; 3], b: &[u8; 3]| (0..3).map(|k| u32::from(a[k] * b[k])).sum::<u32>() % 3;
    let lines: Vec<u16> = pts
        .iter()
        .map(|l| (0..13).filter(|&p| dot(l, &pts[p]) == 0).fold(0, |m, p| m | 1 << p))
        .collect();

    // G as point permutations induced by invertible 3×3 matrices
    let mut group: BTreeSet<[u8; 13]> = BTreeSet::new();
    for code in 0..19683u32 {
        let m: Vec<u8> = (0..9).map(|k| (code / 3u32.pow(k) % 3) as u8).collect();
        let mut perm = [0u8; 13];
        let mut hit = 0u16;
        for (i, p) in pts.iter().enumerate() {
            let img = [0, 1, 2].map(|r| ((0..3).map(|c| u32::from(m[3 * r + c] * p[c])).sum::<u32>() % 3) as u8);
            let Some(j) = index(img) else { break };
            perm[i] = j as u8;
            hit |= 1 << j;
        }
        if hit == (1 << 13) - 1 {
            group.insert(perm);
        }
    }
    if group.len() != 5616 {
        return Err(Error::Structure(format!("collineation group has order {}", group.len())));
    }

    let mut base: Plane = [0; 13];
    base.copy_from_slice(&lines);
    base.sort_unstable();
    let identity: [u8; 13] = std::array::from_fn(|i| i as u8);
    // labelled planes, each with a permutation producing it
    let mut reach: HashMap<Plane, [u8; 13]> = HashMap::with_capacity(1 << 21);
    reach.insert(base, identity);
    let mut queue = VecDeque::from([base]);
    while let Some(plane) = queue.pop_front() {
        let sigma = reach[&plane];
        for a in 0..13 {
            for b in a + 1..13 {
                let mut t = identity;
                t.swap(a, b);
                let next = relabel(&t, &plane);
                reach.entry(next).or_insert_with(|| {
                    queue.push_back(next);
                    sigma.map(|x| t[x as usize])
                });
            }
        }
    }

    let a = SignMatrix::from_fn(13, 13, |p, l| if lines[l] >> p & 1 == 1 { -1 } else { 1 });
    let mut planes: Vec<&Plane> = reach.keys().collect();
    planes.sort_unstable();
    let mut seen: HashSet<Plane> = HashSet::with_capacity(reach.len());
    let mut keys = BTreeSet::new();
    for plane in planes {
        if seen.contains(plane) {
            continue;
        }
        seen.extend(group.iter().map(|g| relabel(g, plane)));
        let spec = DoublingSpec {
            base: a.clone(),
            row_permutation: reach[plane].iter().map(|&x| usize::from(x)).collect(),
        };
        let r = double(&spec, DoublingVariant::R)?;
        keys.insert(canonical_key(&r));
        keys.insert(canonical_key(&r.transpose()));
    }
    Ok(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{verify_design, GramForm};
    use crate::gram::block_profile;
    use crate::matrix::{apply_equivalence_op, EquivalenceOp};

    #[test]
    fn identity_doubling_is_five_five() {
        let base = doubling_base().unwrap();
        let spec = DoublingSpec {
            base: base.clone(),
            row_permutation: (0..13).collect(),
        };
        for variant in [DoublingVariant::R, DoublingVariant::RPrime] {
            let r = double(&spec, variant).unwrap();
            let rep = verify_design(&r).unwrap();
            assert_eq!(rep.form_left, GramForm::EhlichEven { n: 26 });
            assert_eq!(rep.form_right, GramForm::EhlichEven { n: 26 });
            let p = block_profile(&r).unwrap();
            assert_eq!((p.a, p.b), (5, 5));
        }
    }

    #[test]
    fn class_preserving_base_changes() {
        let base = doubling_base().unwrap();
        let perm: Vec<usize> = (0..13).map(|i| (5 * i + 3) % 13).collect();
        let spec = DoublingSpec {
            base: base.clone(),
            row_permutation: perm.clone(),
        };
        let r = double(&spec, DoublingVariant::R).unwrap();
        let key = canonical_key(&r);
        // negating a row of A alone, or a row of B alone
        let b_row = perm.iter().position(|&p| p == 2).unwrap();
        for (row, left) in [(4, true), (b_row, false)] {
            let flipped = SignMatrix::from_fn(26, 26, |i, j| {
                if i % 13 == row && (j < 13) == left {
                    -r.get(i, j)
                } else {
                    r.get(i, j)
                }
            });
            assert_eq!(canonical_key(&flipped), key);
        }
        // column operations on the base
        for op in [EquivalenceOp::NegateCol(7), EquivalenceOp::SwapCols(0, 11)] {
            let base2 = apply_equivalence_op(&base, &op).unwrap();
            let spec2 = DoublingSpec {
                base: base2,
                row_permutation: perm.clone(),
            };
            assert_eq!(canonical_key(&double(&spec2, DoublingVariant::R).unwrap()), key);
        }
    }

    #[test]
    fn rejects_bad_base() {
        let spec = DoublingSpec {
            base: SignMatrix::ones(13, 13),
            row_permutation: (0..13).collect(),
        };
        assert!(double(&spec, DoublingVariant::R).is_err());
    }
}
