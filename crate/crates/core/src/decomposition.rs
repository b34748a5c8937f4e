//! Backtracking search for sign matrices `R` with `R·Rᵀ = Rᵀ·R = M`.
//!
//! Indices `i`, `i'` whose transposition is an automorphism of `M` form a
//! block; every permutation inside a block fixes `M`, so within a block rows
//! may be taken in non-decreasing lexicographic order and, simultaneously,
//! columns in non-decreasing lexicographic order (reading `−` before `+`).
//! A new row is then described by how many `−` entries it puts into each run
//! of columns that agree on all previous rows. Column inner products are
//! bounded against `M` at every step. Full isomorph rejection happens
//! afterwards by canonical key.

use std::collections::BTreeMap;

use crate::canonical::{canonical_key, CanonicalKey};
use crate::error::{Error, Result};
use crate::gram::{gram, GramMatrix, Side};
use crate::matrix::SignMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DecomposeMode {
    #[default]
    All,
    First,
}

/// Order in which the number of `−` entries per column run is tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CountOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Clone, Debug, Default)]
pub struct DecomposeOptions {
    pub mode: DecomposeMode,
    pub count_order: CountOrder,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// One representative per class, sorted by key.
    pub designs: Vec<(CanonicalKey, SignMatrix)>,
    /// Leaves reached before isomorph rejection.
    pub leaves: u64,
    pub nodes: u64,
}

pub fn decompose_gram(m: &GramMatrix, mode: DecomposeMode) -> Result<Vec<SignMatrix>> {
    let opts = DecomposeOptions {
        mode,
        ..Default::default()
    };
    Ok(decompose_gram_with(m, &opts)?
        .designs
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

pub fn decompose_gram_with(m: &GramMatrix, opts: &DecomposeOptions) -> Result<Decomposition> {
    if !m.is_positive_semidefinite() {
        return Err(Error::Precondition(
            "Gram matrix is not positive semidefinite".into(),
        ));
    }
    let n = m.order();
    let (perm, block_of) = blocks(m);
    // t[a][b] = m[perm[a]][perm[b]]
    let t: Vec<Vec<i64>> = (0..n)
        .map(|a| (0..n).map(|b| m.get(perm[a], perm[b])).collect())
        .collect();
    let mut s = Search {
        n,
        t,
        block_of,
        order: opts.count_order,
        first_only: opts.mode == DecomposeMode::First,
        rows: Vec::with_capacity(n),
        p: vec![vec![0; n]; n],
        found: Vec::new(),
        nodes: 0,
        stop: false,
    };
    let first_groups = initial_groups(&s.block_of);
    s.extend(&first_groups);

    let mut designs: BTreeMap<CanonicalKey, SignMatrix> = BTreeMap::new();
    let leaves = s.found.len() as u64;
    for rows in s.found {
        // undo the block-sorting permutation: R[perm[a]][perm[b]] = rows[a][b]
        let mut data = vec![0i8; n * n];
        for a in 0..n {
            for b in 0..n {
                data[perm[a] * n + perm[b]] = rows[a][b];
            }
        }
        let r = SignMatrix::new(n, n, data)?;
        debug_assert!(gram(&r, Side::Left)? == *m && gram(&r, Side::Right)? == *m);
        designs.entry(canonical_key(&r)).or_insert(r);
    }
    Ok(Decomposition {
        designs: designs.into_iter().collect(),
        leaves,
        nodes: s.nodes,
    })
}

/// Sorts indices so that blocks are contiguous; returns the permutation and
/// the block id of each sorted position.
fn blocks(m: &GramMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = m.order();
    let swappable = |i: usize, j: usize| (0..n).all(|k| k == i || k == j || m.get(i, k) == m.get(j, k));
    let mut id = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if id[i] == usize::MAX {
            id[i] = next;
            for j in i + 1..n {
                if id[j] == usize::MAX && swappable(i, j) {
                    id[j] = next;
                }
            }
            next += 1;
        }
    }
    // Lines with many large off-diagonal entries constrain the search most, so
    // they go first, each followed by its block; later picks favour lines with
    // many large links back to what is already placed.
    let floor = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j).abs())
        .min()
        .unwrap_or(0);
    let heavy = |i: usize, j: usize| i != j && m.get(i, j).abs() > floor;
    let weight = |i: usize| (0..n).filter(|&j| heavy(i, j)).count();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    while perm.len() < n {
        let next = (0..n)
            .filter(|i| !perm.contains(i))
            .max_by_key(|&i| {
                let links = perm.iter().filter(|&&j| heavy(i, j)).count();
                (links, weight(i), std::cmp::Reverse(i))
            })
            .expect("unplaced line");
        perm.extend((0..n).filter(|&j| id[j] == id[next]));
    }
    let block_of = perm.iter().map(|&i| id[i]).collect();
    (perm, block_of)
}

/// A run of columns `start..start+len` agreeing on all rows so far.
#[derive(Clone, Copy, Debug)]
struct Group {
    start: usize,
    len: usize,
}

fn initial_groups(block_of: &[usize]) -> Vec<Group> {
    let mut out: Vec<Group> = Vec::new();
    for (j, &b) in block_of.iter().enumerate() {
        match out.last_mut() {
            Some(g) if block_of[g.start] == b => g.len += 1,
            _ => out.push(Group { start: j, len: 1 }),
        }
    }
    out
}

struct Search {
    n: usize,
    t: Vec<Vec<i64>>,
    block_of: Vec<usize>,
    order: CountOrder,
    first_only: bool,
    rows: Vec<Vec<i8>>,
    /// column inner products over the rows chosen so far
    p: Vec<Vec<i64>>,
    found: Vec<Vec<Vec<i8>>>,
    nodes: u64,
    stop: bool,
}

/// State of the per-row search over groups.
struct RowState<'a> {
    groups: &'a [Group],
    counts: Vec<usize>,
    /// inner products of the partial new row with each previous row
    acc: Vec<i64>,
    /// suffix sums of group sizes
    rest: Vec<i64>,
    /// whether the new row still equals its predecessor in the same block
    tied: bool,
    lex: bool,
}

impl Search {
    fn extend(&mut self, groups: &[Group]) {
        if self.stop {
            return;
        }
        self.nodes += 1;
        let k = self.rows.len();
        if k == self.n {
            self.found.push(self.rows.clone());
            if self.first_only {
                self.stop = true;
            }
            return;
        }
        let mut rest = vec![0i64; groups.len() + 1];
        for g in (0..groups.len()).rev() {
            rest[g] = rest[g + 1] + groups[g].len as i64;
        }
        let mut st = RowState {
            groups,
            counts: vec![0; groups.len()],
            acc: vec![0; k],
            rest,
            tied: true,
            lex: k > 0 && self.block_of[k] == self.block_of[k - 1],
        };
        self.choose(&mut st, 0);
    }

    fn choose(&mut self, st: &mut RowState, g: usize) {
        if self.stop {
            return;
        }
        let k = self.rows.len();
        if g == st.groups.len() {
            if (0..k).any(|i| st.acc[i] != self.t[k][i]) {
                return;
            }
            self.commit(st);
            return;
        }
        let grp = st.groups[g];
        let s = grp.len;
        let (lo, hi) = if st.lex && st.tied {
            // predecessor is constant on this group
            if self.rows[k - 1][grp.start] > 0 {
                (0, 0)
            } else {
                (0, s)
            }
        } else {
            (0, s)
        };
        let candidates: Vec<usize> = match self.order {
            CountOrder::Ascending => (lo..=hi).collect(),
            CountOrder::Descending => (lo..=hi).rev().collect(),
        };
        for mcount in candidates {
            let delta = s as i64 - 2 * mcount as i64;
            let ok = (0..k).all(|i| {
                let v = st.acc[i] + i64::from(self.rows[i][grp.start]) * delta;
                let d = self.t[k][i] - v;
                d.abs() <= st.rest[g + 1] && (d - st.rest[g + 1]) % 2 == 0
            });
            if !ok || !self.column_bounds_ok(st, g, mcount) {
                continue;
            }
            for i in 0..k {
                st.acc[i] += i64::from(self.rows[i][grp.start]) * delta;
            }
            st.counts[g] = mcount;
            let was_tied = st.tied;
            if st.lex && st.tied && self.rows[k - 1][grp.start] < 0 && mcount < s {
                st.tied = false;
            }
            self.choose(st, g + 1);
            st.tied = was_tied;
            for i in 0..k {
                st.acc[i] -= i64::from(self.rows[i][grp.start]) * delta;
            }
            if self.stop {
                return;
            }
        }
    }

    /// Checks column inner-product bounds for the parts of group `g` against
    /// each other and against the parts of already-decided groups.
    fn column_bounds_ok(&self, st: &RowState, g: usize, mcount: usize) -> bool {
        let k = self.rows.len();
        let left = (self.n - k - 1) as i64;
        let grp = st.groups[g];
        let parts: Vec<_> = split(grp, mcount).collect();
        let fits = |j: usize, l: usize, add: i64| (self.t[j][l] - (self.p[j][l] + add)).abs() <= left;
        for (a, &(ja, len_a, sa)) in parts.iter().enumerate() {
            if len_a >= 2 && !fits(ja, ja + 1, 1) {
                return false;
            }
            for &(jb, _, sb) in &parts[a + 1..] {
                if !fits(ja, jb, i64::from(sa * sb)) {
                    return false;
                }
            }
            for h in 0..g {
                for (jb, _, sb) in split(st.groups[h], st.counts[h]) {
                    if !fits(ja, jb, i64::from(sa * sb)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn commit(&mut self, st: &RowState) {
        let n = self.n;
        let mut row = vec![1i8; n];
        let mut next = Vec::with_capacity(st.groups.len() * 2);
        for (g, grp) in st.groups.iter().enumerate() {
            for (start, len, sign) in split(*grp, st.counts[g]) {
                row[start..start + len].fill(sign);
                next.push(Group { start, len });
            }
        }
        for j in 0..n {
            for l in 0..n {
                self.p[j][l] += i64::from(row[j] * row[l]);
            }
        }
        self.rows.push(row);
        if self.residual_feasible() {
            self.extend(&next);
        }
        let row = self.rows.pop().expect("pushed above");
        for j in 0..n {
            for l in 0..n {
                self.p[j][l] -= i64::from(row[j] * row[l]);
            }
        }
    }
}

impl Search {
    /// The rows still to come form `S` with `Sᵀ·S = M − P`, so the residual
    /// must be positive semidefinite of rank at most the number of missing
    /// rows. Overflow in the exact elimination means no verdict.
    fn residual_feasible(&self) -> bool {
        let n = self.n;
        let left = n - self.rows.len();
        let mut a: Vec<Vec<i128>> = (0..n)
            .map(|j| (0..n).map(|l| i128::from(self.t[j][l] - self.p[j][l])).collect())
            .collect();
        let mut active: Vec<usize> = (0..n).collect();
        let mut prev: i128 = 1;
        let mut rank = 0;
        while let Some(&k) = active.first() {
            let pivot = a[k][k];
            if pivot < 0 {
                return false;
            }
            let rest: Vec<usize> = active[1..].to_vec();
            if pivot == 0 {
                if rest.iter().any(|&j| a[k][j] != 0) {
                    return false;
                }
                active.remove(0);
                continue;
            }
            rank += 1;
            if rank > left {
                return false;
            }
            for &i in &rest {
                for &j in &rest {
                    let Some(t) = a[i][j]
                        .checked_mul(pivot)
                        .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                    else {
                        return true;
                    };
                    a[i][j] = t / prev;
                }
            }
            prev = pivot;
            active = rest;
        }
        true
    }
}

/// The `−` part then the `+` part of a group as (start, len, sign).
fn split(g: Group, minus: usize) -> impl Iterator<Item = (usize, usize, i8)> + Clone {
    [(g.start, minus, -1i8), (g.start + minus, g.len - minus, 1i8)]
        .into_iter()
        .filter(|&(_, len, _)| len > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::abs_determinant;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Whether `a = D·P·b·Pᵀ·D` for some signed permutation.
    fn signed_conjugate(a: &GramMatrix, b: &GramMatrix, perms: &[Vec<usize>]) -> bool {
        let n = a.order();
        perms.iter().any(|p| {
            (0..1u32 << n).any(|mask| {
                let s = |i: usize| if mask >> i & 1 == 1 { -1 } else { 1 };
                (0..n).all(|i| (0..n).all(|j| a.get(i, j) == s(i) * s(j) * b.get(p[i], p[j])))
            })
        })
    }

    fn brute_force_keys(m: &GramMatrix) -> BTreeSet<CanonicalKey> {
        let n = m.order();
        let target = m.determinant();
        let perms = permutations(n);
        let free = (n - 1) * (n - 1);
        let mut keys = BTreeSet::new();
        for bits in 0..1u64 << free {
            let r = SignMatrix::from_fn(n, n, |i, j| {
                if i == 0 || j == 0 {
                    1
                } else if bits >> ((i - 1) * (n - 1) + j - 1) & 1 == 1 {
                    -1
                } else {
                    1
                }
            });
            let d = abs_determinant(&r).unwrap();
            if &d * &d != target {
                continue;
            }
            let left = gram(&r, Side::Left).unwrap();
            let right = gram(&r, Side::Right).unwrap();
            if signed_conjugate(&left, m, &perms) && signed_conjugate(&right, m, &perms) {
                keys.insert(canonical_key(&r));
            }
        }
        keys
    }

    fn keys(m: &GramMatrix, order: CountOrder) -> BTreeSet<CanonicalKey> {
        let opts = DecomposeOptions {
            mode: DecomposeMode::All,
            count_order: order,
        };
        let d = decompose_gram_with(m, &opts).unwrap();
        for (_, r) in &d.designs {
            assert_eq!(&gram(r, Side::Left).unwrap(), m);
            assert_eq!(&gram(r, Side::Right).unwrap(), m);
            let det = abs_determinant(r).unwrap();
            assert_eq!(&det * &det, m.determinant());
        }
        d.designs.into_iter().map(|(k, _)| k).collect()
    }

    #[test]
    fn trivial_and_small_forms() {
        let one = GramMatrix::scalar(1);
        assert_eq!(decompose_gram(&one, DecomposeMode::All).unwrap().len(), 1);
        assert_eq!(keys(&GramMatrix::barba(5), CountOrder::Ascending).len(), 1);
        assert_eq!(keys(&GramMatrix::scalar(4), CountOrder::Ascending).len(), 1);
        assert!(keys(&GramMatrix::scalar(3), CountOrder::Ascending).is_empty());
        assert_eq!(
            decompose_gram(&GramMatrix::barba(5), DecomposeMode::First)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn rejects_indefinite() {
        let m = GramMatrix::from_rows(&[vec![3, 3, 3], vec![3, 3, -3], vec![3, -3, 3]]).unwrap();
        assert!(!m.is_positive_semidefinite());
        assert!(decompose_gram(&m, DecomposeMode::All).is_err());
    }

    #[test]
    fn matches_brute_force_up_to_order_5() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut targets = vec![
            GramMatrix::barba(5),
            GramMatrix::scalar(2),
            GramMatrix::scalar(4),
            GramMatrix::from_rows(&[vec![3, 1, 1], vec![1, 3, -1], vec![1, -1, 3]]).unwrap(),
        ];
        // symmetric R has R·Rᵀ = Rᵀ·R
        while targets.len() < 12 {
            let n = rng.gen_range(2..=5);
            let upper: Vec<i8> = (0..n * n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let r = SignMatrix::from_fn(n, n, |i, j| upper[i.min(j) * n + i.max(j)]);
            if abs_determinant(&r).unwrap() != BigInt::from(0) {
                targets.push(gram(&r, Side::Left).unwrap());
            }
        }
        for m in &targets {
            let expected = brute_force_keys(m);
            assert_eq!(keys(m, CountOrder::Ascending), expected, "{m:?}");
        }
    }

    #[test]
    fn count_order_does_not_change_classes() {
        for m in [GramMatrix::barba(5), GramMatrix::ehlich_even(6), GramMatrix::scalar(8)] {
            assert_eq!(keys(&m, CountOrder::Ascending), keys(&m, CountOrder::Descending));
        }
    }
}
