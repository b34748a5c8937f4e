//! Closure of a design under switching and Hadamard equivalence.
//!
//! A registry holds one record per Hadamard class, keyed by canonical key.
//! The closure is a breadth-first search in fixed-size batches: the
//! neighbors of a batch of unexpanded classes are keyed in parallel, then
//! merged into the registry sequentially in batch order, so the registry
//! (including its record order) does not depend on the number of workers.
//!
//! On disk a registry is a directory with `registry.txt` and one matrix file
//! per class under `reps/`. `registry.txt` is append-only; a class record is
//! `<hex key> <|det|> <provenance> <representative path>` and an expansion
//! marker is `<hex key> expanded`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Signed;
use rayon::prelude::*;

use crate::canonical::{canonical_key, CanonicalKey, DualityStatus};
use crate::det::determinant;
use crate::error::{Error, Result};
use crate::forms::{classify_gram, GramForm};
use crate::gram::{even_block_profile, gram, Side};
use crate::matrix::SignMatrix;
use crate::switching::switch_neighbors;

/// Classes expanded per merge step.
const BATCH: usize = 32;

#[derive(Clone, Debug)]
pub struct ClassRecord {
    pub key: CanonicalKey,
    pub det_abs: BigInt,
    pub gram_form: GramForm,
    pub even_type: Option<(i64, i64)>,
    pub duality: DualityStatus,
    pub dual_key: CanonicalKey,
    pub provenance: String,
    pub representative: SignMatrix,
}

impl ClassRecord {
    pub fn new(representative: SignMatrix, provenance: impl Into<String>) -> Result<Self> {
        let key = canonical_key(&representative);
        Self::with_key(key, representative, provenance.into())
    }

    fn with_key(key: CanonicalKey, representative: SignMatrix, provenance: String) -> Result<Self> {
        let dual_key = canonical_key(&representative.transpose());
        let duality = if dual_key == key {
            DualityStatus::SelfDual
        } else {
            DualityStatus::DualPair
        };
        let n = representative.order()?;
        let gram_form = classify_gram(&gram(&representative, Side::Left)?);
        let even_type = if n % 4 == 2 && matches!(gram_form, GramForm::EhlichEven { .. }) {
            even_block_profile(&representative).ok().map(|p| (p.a, p.b))
        } else {
            None
        };
        if provenance.is_empty() || provenance.contains(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!(
                "provenance {provenance:?} must be a non-empty word"
            )));
        }
        Ok(ClassRecord {
            key,
            det_abs: determinant(&representative)?.abs(),
            gram_form,
            even_type,
            duality,
            dual_key,
            provenance,
            representative,
        })
    }
}

/// Classes of one order and one `|det|`, in insertion order.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    records: Vec<ClassRecord>,
    index: HashMap<CanonicalKey, usize>,
    expanded: Vec<bool>,
    dir: Option<PathBuf>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ClassRecord] {
        &self.records
    }

    pub fn get(&self, key: &CanonicalKey) -> Option<&ClassRecord> {
        self.index.get(key).map(|&i| &self.records[i])
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.records.iter().map(|r| &r.key)
    }

    pub fn order(&self) -> Option<usize> {
        self.records.first().map(|r| r.representative.n_rows())
    }

    pub fn det_abs(&self) -> Option<&BigInt> {
        self.records.first().map(|r| &r.det_abs)
    }

    /// Whether every class has been expanded.
    pub fn is_complete(&self) -> bool {
        self.expanded.iter().all(|&e| e)
    }

    pub fn unexpanded(&self) -> usize {
        self.expanded.iter().filter(|&&e| !e).count()
    }

    /// Inserts a record unless its key is present; returns whether it was new.
    pub fn insert(&mut self, rec: ClassRecord) -> Result<bool> {
        if self.index.contains_key(&rec.key) {
            return Ok(false);
        }
        if let Some(first) = self.records.first() {
            if first.representative.n_rows() != rec.representative.n_rows() {
                return Err(Error::Registry(format!(
                    "order {} does not match registry order {}",
                    rec.representative.n_rows(),
                    first.representative.n_rows()
                )));
            }
            if first.det_abs != rec.det_abs {
                return Err(Error::Registry(format!(
                    "|det| {} does not match registry |det| {}",
                    rec.det_abs, first.det_abs
                )));
            }
        }
        let idx = self.records.len();
        if let Some(dir) = &self.dir {
            let rel = format!("reps/{idx:06}.txt");
            fs::write(dir.join(&rel), rec.representative.to_text())
                .map_err(|e| Error::io(dir.join(&rel), e))?;
            self.append_line(&format!("{} {} {} {rel}", rec.key, rec.det_abs, rec.provenance))?;
        }
        self.index.insert(rec.key.clone(), idx);
        self.records.push(rec);
        self.expanded.push(false);
        Ok(true)
    }

    /// Inserts a record marked as already expanded.
    pub fn insert_expanded(&mut self, rec: ClassRecord) -> Result<bool> {
        let key = rec.key.clone();
        let fresh = self.insert(rec)?;
        if fresh {
            self.mark_expanded(self.index[&key])?;
        }
        Ok(fresh)
    }

    fn mark_expanded(&mut self, idx: usize) -> Result<()> {
        if !self.expanded[idx] {
            self.expanded[idx] = true;
            if self.dir.is_some() {
                let line = format!("{} expanded", self.records[idx].key);
                self.append_line(&line)?;
            }
        }
        Ok(())
    }

    fn append_line(&self, line: &str) -> Result<()> {
        let dir = self.dir.as_ref().expect("persistent registry");
        let path = dir.join("registry.txt");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
    }

    /// Creates an empty persistent registry in `dir`.
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("reps")).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("registry.txt");
        if path.exists() {
            return Err(Error::Registry(format!(
                "{} already exists; resume instead",
                path.display()
            )));
        }
        File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Registry {
            dir: Some(dir.to_path_buf()),
            ..Default::default()
        })
    }

    /// Writes a copy, expansion markers included, to a fresh directory.
    pub fn save_as(&self, dir: &Path) -> Result<Registry> {
        let mut out = Registry::create(dir)?;
        for (rec, &done) in self.records.iter().zip(&self.expanded) {
            if done {
                out.insert_expanded(rec.clone())?;
            } else {
                out.insert(rec.clone())?;
            }
        }
        Ok(out)
    }

    /// Replays `dir/registry.txt`, reloading every representative. The result
    /// keeps appending to the same directory.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join("registry.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut reg = Registry::new();
        let mut expanded_keys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            match fields.as_slice() {
                [] => {}
                [key, "expanded"] => expanded_keys.push(CanonicalKey::from_hex(key)?),
                [key, det, provenance, rel] => {
                    let key = CanonicalKey::from_hex(key)?;
                    let rep_path = dir.join(rel);
                    let rep_text =
                        fs::read_to_string(&rep_path).map_err(|e| Error::io(&rep_path, e))?;
                    let rep = SignMatrix::parse(&rep_text)?;
                    let rec = ClassRecord::with_key(key, rep, provenance.to_string())?;
                    if rec.det_abs.to_string() != *det {
                        return Err(bad("recorded |det| does not match the representative"));
                    }
                    reg.insert(rec)?;
                }
                _ => return Err(bad("expected 4 fields or '<key> expanded'")),
            }
        }
        for key in expanded_keys {
            let idx = *reg
                .index
                .get(&key)
                .ok_or_else(|| Error::Registry(format!("expansion marker for unknown key {key}")))?;
            reg.expanded[idx] = true;
        }
        reg.dir = Some(dir.to_path_buf());
        Ok(reg)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Limits {
    pub max_classes: Option<usize>,
    pub max_time: Option<Duration>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QClassReport {
    pub seed_key: CanonicalKey,
    pub class_size: usize,
    /// `None` while the frontier is not exhausted.
    pub self_dual_class: Option<bool>,
    pub frontier_exhausted: bool,
    pub expanded: usize,
}

impl QClassReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed_key: {}\n", self.seed_key));
        out.push_str(&format!("class_size: {}\n", self.class_size));
        out.push_str(&format!("expanded: {}\n", self.expanded));
        out.push_str(&format!("frontier_exhausted: {}\n", self.frontier_exhausted));
        match self.self_dual_class {
            Some(b) => out.push_str(&format!("self_dual_class: {b}\n")),
            None => out.push_str("self_dual_class: unknown\n"),
        }
        out
    }
}

/// Extends `reg` to the closure of its classes under switching, starting
/// from the unexpanded classes in insertion order. `seed` is inserted first
/// when the registry is empty.
pub fn q_closure_into(reg: &mut Registry, seed: &SignMatrix, limits: &Limits) -> Result<QClassReport> {
    seed.order()?;
    let seed_key = canonical_key(seed);
    if reg.is_empty() {
        reg.insert(ClassRecord::with_key(seed_key.clone(), seed.clone(), "seed".into())?)?;
    } else if !reg.contains(&seed_key) {
        return Err(Error::Registry("seed is not in the registry being resumed".into()));
    }
    let start = Instant::now();
    let mut cursor = 0;
    let mut stopped = false;
    loop {
        let batch: Vec<usize> = (cursor..reg.len())
            .filter(|&i| !reg.expanded[i])
            .take(BATCH)
            .collect();
        if batch.is_empty() {
            break;
        }
        if limits.max_time.is_some_and(|t| start.elapsed() >= t)
            || limits.max_classes.is_some_and(|m| reg.len() >= m)
        {
            stopped = true;
            break;
        }
        cursor = batch[0];
        let neighbors: Vec<(usize, SignMatrix)> = batch
            .iter()
            .flat_map(|&i| {
                switch_neighbors(&reg.records[i].representative)
                    .into_iter()
                    .map(move |m| (i, m))
            })
            .collect();
        let keyed: Vec<(usize, CanonicalKey, SignMatrix)> = neighbors
            .into_par_iter()
            .map(|(i, m)| (i, canonical_key(&m), m))
            .collect();
        let mut fresh: Vec<(usize, CanonicalKey, SignMatrix)> = Vec::new();
        let mut pending = HashSet::new();
        for (i, key, m) in keyed {
            if !reg.contains(&key) && pending.insert(key.clone()) {
                fresh.push((i, key, m));
            }
        }
        let records: Vec<(usize, Result<ClassRecord>)> = fresh
            .into_par_iter()
            .map(|(i, key, m)| (i, ClassRecord::with_key(key, m, format!("switch:{i}"))))
            .collect();
        // records come grouped by parent, parents in batch order
        let mut next = records.into_iter().peekable();
        for &i in &batch {
            while let Some((_, rec)) = next.next_if(|(p, _)| *p == i) {
                if limits.max_classes.is_some_and(|m| reg.len() >= m) {
                    stopped = true;
                    break;
                }
                reg.insert(rec?)?;
            }
            if stopped {
                break;
            }
            reg.mark_expanded(i)?;
        }
        if stopped {
            break;
        }
    }
    let exhausted = !stopped && reg.is_complete();
    let self_dual_class = exhausted.then(|| reg.records.iter().all(|r| reg.contains(&r.dual_key)));
    Ok(QClassReport {
        seed_key,
        class_size: reg.len(),
        self_dual_class,
        frontier_exhausted: exhausted,
        expanded: reg.expanded.iter().filter(|&&e| e).count(),
    })
}

/// In-memory closure of a single seed.
pub fn q_closure(seed: &SignMatrix, limits: &Limits) -> Result<(QClassReport, Registry)> {
    let mut reg = Registry::new();
    let report = q_closure_into(&mut reg, seed, limits)?;
    Ok((report, reg))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualityClassification {
    pub self_dual: bool,
    /// Key of the transpose's class for every class.
    pub pairing: BTreeMap<CanonicalKey, CanonicalKey>,
}

pub fn classify_duality(reg: &Registry) -> Result<DualityClassification> {
    if !reg.is_complete() {
        return Err(Error::Registry(format!(
            "registry has {} unexpanded classes; finish the closure first",
            reg.unexpanded()
        )));
    }
    let pairing: BTreeMap<CanonicalKey, CanonicalKey> = reg
        .records
        .iter()
        .map(|r| (r.key.clone(), r.dual_key.clone()))
        .collect();
    let self_dual = pairing.values().all(|k| reg.contains(k));
    Ok(DualityClassification { self_dual, pairing })
}

/// Union by key; records of `b` not in `a` are appended in `b`'s order.
pub fn merge_registries(a: &Registry, b: &Registry) -> Result<Registry> {
    if let (Some(x), Some(y)) = (a.order(), b.order()) {
        if x != y {
            return Err(Error::Registry(format!("cannot merge orders {x} and {y}")));
        }
    }
    let mut out = Registry::new();
    for (reg, _) in [(a, 0), (b, 1)] {
        for (i, rec) in reg.records.iter().enumerate() {
            let fresh = out.insert(rec.clone())?;
            if fresh && reg.expanded[i] {
                let idx = out.len() - 1;
                out.expanded[idx] = true;
            }
        }
    }
    Ok(out)
}
