//! Loading of external matrix data with verification at load time.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::canonical::canonical_key;
use crate::constructions::paley_hadamard;
use crate::error::{Error, Result};
use crate::gram::{gram, GramMatrix, Side};
use crate::matrix::SignMatrix;

pub fn read_matrix(path: &Path) -> Result<SignMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SignMatrix::parse(&text)
}

pub fn read_gram(path: &Path) -> Result<GramMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GramMatrix::parse(&text)
}

/// Files in `dir` whose names start with `prefix` and end in `.txt`, sorted.
fn matching(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".txt"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// The Paley matrix of order 20 followed by every `h20_*.txt` in `dir`.
/// Each must be Hadamard and no two may be equivalent.
pub fn hadamard20_classes(dir: &Path) -> Result<Vec<SignMatrix>> {
    let mut out = vec![paley_hadamard(19)?];
    for p in matching(dir, "h20_")? {
        out.push(read_matrix(&p)?);
    }
    let mut keys = BTreeSet::new();
    for h in &out {
        if h.n_rows() != 20 || gram(h, Side::Left)? != GramMatrix::scalar(20) {
            return Err(Error::Precondition("order-20 fixture is not Hadamard".into()));
        }
        if !keys.insert(canonical_key(h)) {
            return Err(Error::Precondition(
                "two order-20 fixtures are equivalent".into(),
            ));
        }
    }
    Ok(out)
}

/// Every `<prefix>*.txt` Gram matrix in `dir`, checked positive semidefinite
/// with constant diagonal and pairwise non-conjugate.
pub fn gram_fixtures(dir: &Path, prefix: &str) -> Result<Vec<(PathBuf, GramMatrix)>> {
    let mut out = Vec::new();
    let mut sigs = BTreeSet::new();
    for p in matching(dir, prefix)? {
        let g = read_gram(&p)?;
        let n = g.order() as i64;
        if (0..g.order()).any(|i| g.get(i, i) != n) || !g.is_positive_semidefinite() {
            return Err(Error::GramInvariant(format!(
                "{} is not a Gram matrix of an order-{n} sign matrix",
                p.display()
            )));
        }
        let mut sig = g.row_multisets();
        sig.sort();
        if !sigs.insert(sig) {
            return Err(Error::Precondition(format!(
                "{} may be conjugate to another fixture",
                p.display()
            )));
        }
        out.push((p, g));
    }
    Ok(out)
}
