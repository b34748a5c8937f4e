//! Hadamard equivalence: canonical keys, equivalence tests, duality and
//! automorphism counts.
//!
//! A sign matrix `R` (r×c) is encoded as a colored graph with one vertex per
//! signed line (`row_i^±` colored "row", `col_j^±` colored "column") and one
//! "pair" vertex per line joined to both of its signed vertices. `row_i^s` is
//! adjacent to `col_j^t` exactly when `s·t·R[i][j] = +1`. Color-preserving
//! automorphisms of this graph are exactly the pairs of signed permutations
//! fixing `R`, so graph isomorphism coincides with Hadamard equivalence.
//!
//! Before labeling, each line's vertices are additionally colored by the
//! histogram of `|Σ_c R[i][c]·R[j][c]·R[k][c]·R[l][c]|` over triples of other
//! lines `j < k < l`. The histogram is invariant under signed permutations, so the
//! refined coloring is still a class function and it separates lines that
//! the Gram matrices cannot.

pub mod labeling;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;

use crate::det::determinant;
use crate::error::{Error, Result};
use crate::gram::{gram, Side};
use crate::matrix::SignMatrix;
use labeling::{canonical_labeling, ColoredGraph};

const ROW: u32 = 0;
const COL: u32 = 1;
const PAIR: u32 = 2;

/// The colored graph of a sign matrix.
#[derive(Clone, Debug)]
pub struct DesignGraph {
    rows: usize,
    cols: usize,
    graph: ColoredGraph,
}

impl DesignGraph {
    pub fn new(m: &SignMatrix) -> Self {
        let (r, c) = (m.n_rows(), m.n_cols());
        let row_inv = quadruple_histograms(m);
        let col_inv = quadruple_histograms(&m.transpose());
        let mut labels: Vec<(u32, u64)> = Vec::with_capacity(3 * (r + c));
        labels.extend((0..2 * r).map(|v| (ROW, row_inv[v % r])));
        labels.extend((0..2 * c).map(|v| (COL, col_inv[v % c])));
        labels.extend(std::iter::repeat_n((PAIR, 0), r + c));
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let colors = labels
            .iter()
            .map(|l| distinct.binary_search(l).expect("present") as u32)
            .collect();
        let mut g = ColoredGraph::new(colors);
        let dg = |g: &mut ColoredGraph| {
            for i in 0..r {
                for j in 0..c {
                    let (rp, rm) = (i, r + i);
                    let (cp, cm) = (2 * r + j, 2 * r + c + j);
                    if m.get(i, j) > 0 {
                        g.add_edge(rp, cp);
                        g.add_edge(rm, cm);
                    } else {
                        g.add_edge(rp, cm);
                        g.add_edge(rm, cp);
                    }
                }
            }
            for i in 0..r {
                g.add_edge(2 * (r + c) + i, i);
                g.add_edge(2 * (r + c) + i, r + i);
            }
            for j in 0..c {
                g.add_edge(2 * (r + c) + r + j, 2 * r + j);
                g.add_edge(2 * (r + c) + r + j, 2 * r + c + j);
            }
        };
        dg(&mut g);
        DesignGraph {
            rows: r,
            cols: c,
            graph: g,
        }
    }

    pub fn graph(&self) -> &ColoredGraph {
        &self.graph
    }

    /// Kind (row, column or pair), line index and sign of a vertex.
    fn line_of(&self, v: usize) -> (u32, usize, i8) {
        let (r, c) = (self.rows, self.cols);
        if v < 2 * r {
            (ROW, v % r, if v < r { 1 } else { -1 })
        } else if v < 2 * (r + c) {
            let w = v - 2 * r;
            (COL, w % c, if w < c { 1 } else { -1 })
        } else {
            (PAIR, v - 2 * (r + c), 1)
        }
    }
}

/// Per row: hash of the histogram of `|⟨r_i ∘ r_j, r_k ∘ r_l⟩|` over
/// `j < k < l`, all different from `i`.
fn quadruple_histograms(m: &SignMatrix) -> Vec<u64> {
    let (r, c) = (m.n_rows(), m.n_cols());
    let bits: Vec<Vec<u64>> = (0..r).map(|i| m.row_bits(i)).collect();
    let words = bits.first().map_or(0, Vec::len);
    let mut hist = vec![0u32; c + 1];
    let mut ij = vec![0u64; words];
    (0..r)
        .map(|i| {
            hist.fill(0);
            for j in (0..r).filter(|&j| j != i) {
                for w in 0..words {
                    ij[w] = bits[i][w] ^ bits[j][w];
                }
                for k in (j + 1..r).filter(|&k| k != i) {
                    for l in (k + 1..r).filter(|&l| l != i) {
                        let minus: u32 = (0..words)
                            .map(|w| (ij[w] ^ bits[k][w] ^ bits[l][w]).count_ones())
                            .sum();
                        let dot = c as i64 - 2 * i64::from(minus);
                        hist[dot.unsigned_abs() as usize] += 1;
                    }
                }
            }
            hist.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &x| {
                (h ^ u64::from(x)).wrapping_mul(0x0000_0100_0000_01b3)
            })
        })
        .collect()
}

/// Result of canonically labeling a design.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    /// The canonical representative: `matrix[a][b] = s_a·t_b·R[rows[a]][cols[b]]`.
    pub matrix: SignMatrix,
    /// `(source row, sign)` for each canonical row.
    pub rows: Vec<(usize, i8)>,
    /// `(source column, sign)` for each canonical column.
    pub cols: Vec<(usize, i8)>,
    /// Order of the group of signed row/column permutation pairs fixing the
    /// matrix, including the trivial `(−I, −I)`.
    pub graph_automorphisms: BigUint,
    pub search_nodes: u64,
}

/// Labels `m` canonically. Equivalent matrices get identical `matrix` fields.
pub fn canonical_form(m: &SignMatrix) -> CanonicalForm {
    let dg = DesignGraph::new(m);
    let lab = canonical_labeling(&dg.graph);
    let mut seen_rows = vec![false; dg.rows];
    let mut seen_cols = vec![false; dg.cols];
    let mut rows = Vec::with_capacity(dg.rows);
    let mut cols = Vec::with_capacity(dg.cols);
    for &v in &lab.order {
        let (color, line, sign) = dg.line_of(v as usize);
        match color {
            ROW if !std::mem::replace(&mut seen_rows[line], true) => rows.push((line, sign)),
            COL if !std::mem::replace(&mut seen_cols[line], true) => cols.push((line, sign)),
            _ => {}
        }
    }
    let matrix = SignMatrix::from_fn(dg.rows, dg.cols, |a, b| {
        let (i, s) = rows[a];
        let (j, t) = cols[b];
        s * t * m.get(i, j)
    });
    CanonicalForm {
        matrix,
        rows,
        cols,
        graph_automorphisms: lab.group_order,
        search_nodes: lab.nodes,
    }
}

/// Byte string identifying a Hadamard-equivalence class.
///
/// Layout: rows and columns (u16 BE each); the byte length and big-endian
/// bytes of `|det|` (empty for non-square input); for each of `R·Rᵀ` and
/// `Rᵀ·R`, the histogram of absolute off-diagonal entries as (value, count)
/// u16 pairs behind a u16 length; then the canonical matrix packed row-major,
/// one bit per entry (1 for −1), most significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        hex::decode(s.trim())
            .map(CanonicalKey)
            .map_err(|e| Error::InvalidParameter(format!("bad key hex: {e}")))
    }

    /// Recovers the canonical representative stored at the end of the key.
    pub fn representative(&self) -> Result<SignMatrix> {
        let b = &self.0;
        let bad = || Error::InvalidParameter("truncated canonical key".into());
        let rd16 = |at: usize| -> Result<usize> {
            b.get(at..at + 2)
                .map(|s| usize::from(u16::from_be_bytes([s[0], s[1]])))
                .ok_or_else(bad)
        };
        let rows = rd16(0)?;
        let cols = rd16(2)?;
        let mut at = 4;
        let det_len = rd16(at)?;
        at += 2 + det_len;
        for _ in 0..2 {
            let pairs = rd16(at)?;
            at += 2 + 4 * pairs;
        }
        let bits = b.get(at..).ok_or_else(bad)?;
        if bits.len() != (rows * cols).div_ceil(8) {
            return Err(bad());
        }
        Ok(SignMatrix::from_fn(rows, cols, |i, j| {
            let k = i * cols + j;
            if bits[k / 8] >> (7 - k % 8) & 1 == 1 {
                -1
            } else {
                1
            }
        }))
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.to_hex();
        if h.len() > 24 {
            write!(f, "CanonicalKey({}…{})", &h[..12], &h[h.len() - 12..])
        } else {
            write!(f, "CanonicalKey({h})")
        }
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn push_u16(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u16::try_from(v).expect("fits in u16").to_be_bytes());
}

fn push_histogram(out: &mut Vec<u8>, values: &[u64]) {
    let mut hist: Vec<(u64, usize)> = Vec::new();
    for &v in values {
        match hist.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => hist.push((v, 1)),
        }
    }
    push_u16(out, hist.len());
    for (v, c) in hist {
        push_u16(out, v as usize);
        push_u16(out, c);
    }
}

/// Cheap equivalence invariants: dimensions, `|det|` and the Gram histograms.
fn invariant_prefix(m: &SignMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    push_u16(&mut out, m.n_rows());
    push_u16(&mut out, m.n_cols());
    if m.is_square() {
        let det = determinant(m).expect("square").abs();
        let bytes = det.to_bytes_be().1;
        push_u16(&mut out, bytes.len());
        out.extend_from_slice(&bytes);
        for side in [Side::Left, Side::Right] {
            let g = gram(m, side).expect("square");
            push_histogram(&mut out, &g.abs_entry_multiset());
        }
    } else {
        push_u16(&mut out, 0);
        for src in [m.clone(), m.transpose()] {
            let k = src.n_rows();
            let mut v: Vec<u64> = (0..k)
                .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| src.row_dot(i, j).unsigned_abs())
                .collect();
            v.sort_unstable();
            push_histogram(&mut out, &v);
        }
    }
    out
}

fn pack_bits(m: &SignMatrix, out: &mut Vec<u8>) {
    let total = m.n_rows() * m.n_cols();
    let start = out.len();
    out.resize(start + total.div_ceil(8), 0);
    for (k, &x) in m.entries().iter().enumerate() {
        if x < 0 {
            out[start + k / 8] |= 1 << (7 - k % 8);
        }
    }
}

pub fn canonical_key(m: &SignMatrix) -> CanonicalKey {
    key_from_form(m, &canonical_form(m))
}

fn key_from_form(m: &SignMatrix, form: &CanonicalForm) -> CanonicalKey {
    let mut bytes = invariant_prefix(m);
    pack_bits(&form.matrix, &mut bytes);
    CanonicalKey(bytes)
}

/// Key together with the canonical representative and automorphism data.
pub fn canonical_key_and_form(m: &SignMatrix) -> (CanonicalKey, CanonicalForm) {
    let form = canonical_form(m);
    (key_from_form(m, &form), form)
}

pub fn are_equivalent(a: &SignMatrix, b: &SignMatrix) -> bool {
    if a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols() {
        return false;
    }
    if a.is_square() {
        let da = determinant(a).expect("square").abs();
        let db = determinant(b).expect("square").abs();
        if da != db {
            return false;
        }
        for side in [Side::Left, Side::Right] {
            let ga = gram(a, side).expect("square");
            let gb = gram(b, side).expect("square");
            if ga.row_multisets() != gb.row_multisets() {
                return false;
            }
        }
    }
    canonical_form(a).matrix == canonical_form(b).matrix
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DualityStatus {
    SelfDual,
    DualPair,
}

impl fmt::Display for DualityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualityStatus::SelfDual => "self-dual",
            DualityStatus::DualPair => "dual-pair",
        })
    }
}

pub fn duality_status(r: &SignMatrix) -> Result<DualityStatus> {
    r.order()?;
    Ok(if are_equivalent(r, &r.transpose()) {
        DualityStatus::SelfDual
    } else {
        DualityStatus::DualPair
    })
}

/// Number of signed row/column permutation pairs `(P, Q)` with `P·R·Qᵀ = R`,
/// counted modulo the pair `(−I, −I)` that fixes every matrix.
pub fn automorphism_count(r: &SignMatrix) -> Result<BigInt> {
    r.order()?;
    let g = canonical_form(r).graph_automorphisms;
    Ok(BigInt::from(g / 2u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{apply_equivalence_op, EquivalenceOp};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h2() -> SignMatrix {
        SignMatrix::from_pattern(&["++", "+-"]).unwrap()
    }

    use proptest::prelude::{any, prop_assert, prop_assert_eq, Just, Strategy};

    pub(crate) fn scramble(m: &SignMatrix, rng: &mut ChaCha8Rng) -> SignMatrix {
        let mut rp: Vec<usize> = (0..m.n_rows()).collect();
        let mut cp: Vec<usize> = (0..m.n_cols()).collect();
        rp.shuffle(rng);
        cp.shuffle(rng);
        let rs: Vec<i8> = (0..m.n_rows()).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let cs: Vec<i8> = (0..m.n_cols()).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        SignMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| {
            rs[i] * cs[j] * m.get(rp[i], cp[j])
        })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn key_survives_random_equivalences(
            (r, c, bits) in (1usize..9, 1usize..9).prop_flat_map(|(r, c)| {
                (Just(r), Just(c), proptest::collection::vec(any::<bool>(), r * c))
            }),
            seed in any::<u64>(),
        ) {
            let m = SignMatrix::from_fn(r, c, |i, j| if bits[i * c + j] { -1 } else { 1 });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let other = scramble(&m, &mut rng);
            prop_assert_eq!(canonical_key(&m), canonical_key(&other));
            prop_assert!(are_equivalent(&m, &other));
        }
    }

    #[test]
    fn column_swap_keeps_key() {
        let swapped = SignMatrix::from_pattern(&["+-", "++"]).unwrap();
        assert_eq!(canonical_key(&h2()), canonical_key(&swapped));
    }

    #[test]
    fn row_negation_is_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = SignMatrix::from_fn(6, 6, |_, _| if rng.gen() { 1 } else { -1 });
        let neg = apply_equivalence_op(&m, &EquivalenceOp::NegateRow(3)).unwrap();
        assert!(are_equivalent(&m, &neg));
    }

    #[test]
    fn determinant_separates() {
        let a = SignMatrix::from_pattern(&["++", "+-"]).unwrap();
        let b = SignMatrix::ones(2, 2);
        assert!(!are_equivalent(&a, &b));
        assert!(!are_equivalent(&a, &SignMatrix::ones(2, 3)));
    }

    #[test]
    fn key_round_trips_through_hex_and_representative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = SignMatrix::from_fn(5, 7, |_, _| if rng.gen() { 1 } else { -1 });
        let key = canonical_key(&m);
        assert_eq!(CanonicalKey::from_hex(&key.to_hex()).unwrap(), key);
        let rep = key.representative().unwrap();
        assert!(are_equivalent(&rep, &m));
        assert_eq!(canonical_key(&rep), key);
    }

    #[test]
    fn symmetric_matrix_is_self_dual() {
        let m = SignMatrix::from_pattern(&["+-+", "-++", "++-"]).unwrap();
        assert_eq!(duality_status(&m).unwrap(), DualityStatus::SelfDual);
        assert!(duality_status(&SignMatrix::ones(2, 3)).is_err());
    }

    #[test]
    fn trivial_automorphism_count() {
        assert_eq!(automorphism_count(&SignMatrix::ones(1, 1)).unwrap(), BigInt::from(1));
    }

    #[test]
    fn keys_survive_random_scrambling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let r = rng.gen_range(1..=9);
            let c = rng.gen_range(1..=9);
            let m = SignMatrix::from_fn(r, c, |_, _| if rng.gen() { 1 } else { -1 });
            let k = canonical_key(&m);
            for _ in 0..3 {
                assert_eq!(canonical_key(&scramble(&m, &mut rng)), k);
            }
        }
    }
}
