//! Argument parsing and dispatch for the `maxdet` binary.
//!
//! Every command produces `key: value` report lines and an exit status:
//! 0 success, 1 verification failure, 2 usage error, 3 resource limit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use maxdet::constructions::{
    bordered_17, circulant_search, doubling_base, doubling_classes_exact, enumerate_doubling,
    enumerate_order21, paley_hadamard,
};
use maxdet::fixtures::{read_gram, read_matrix};
use maxdet::{
    abs_determinant, are_equivalent, canonical_key, canonical_key_and_form, classify_duality,
    decompose_gram, determinant, duality_status, factor_power_of_two, find_quadruples, hill_climb,
    merge_registries, q_closure_into, switch_neighbors, verify_design, Axis, CanonicalKey,
    ClimbConfig, DecomposeMode, Limits, Registry, SeedStrategy, SignMatrix,
};

#[derive(Parser, Debug)]
#[command(name = "maxdet", version, about = "Maximal-determinant ±1 matrices")]
pub struct Cli {
    /// Size of the worker pool; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact determinant.
    Det { file: PathBuf },
    /// Gram forms, determinant and block profile; fails on an unknown form.
    Verify { file: PathBuf },
    /// Canonical key and canonical form.
    Canon {
        file: PathBuf,
        /// Write the canonical matrix here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hadamard equivalence of two matrices; fails when inequivalent.
    Equiv { a: PathBuf, b: PathBuf },
    /// All single-switch neighbours.
    SwitchNeighbors {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closure under switching, persisted to a registry directory.
    Qclass(QclassArgs),
    /// Generative constructions; each writes matrix files and a key manifest.
    #[command(subcommand)]
    Construct(Construct),
    /// Sign matrices R with R·Rᵀ = Rᵀ·R = M.
    Decompose {
        #[arg(long)]
        gram: PathBuf,
        /// Every class instead of the first design found.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steepest-ascent hill climbing on |det|.
    Search(SearchArgs),
    /// Merge and summarize registry directories.
    #[command(subcommand)]
    Registry(RegistryCmd),
}

#[derive(Args, Debug)]
pub struct QclassArgs {
    #[arg(long)]
    pub seed: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long)]
    pub max_classes: Option<usize>,
    /// Continue an existing registry in `--out`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Subcommand, Debug)]
pub enum Construct {
    /// Paley Hadamard matrix of order q + 1.
    Paley {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive two-circulant search, one design per class.
    Circulant {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Doubled order-13 designs by permutation sampling.
    Double {
        /// Upper bound on samples.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Stop after this many consecutive samples without a new class.
        #[arg(long, default_value_t = 10_000)]
        patience: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Enumerate double cosets instead of sampling.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Order-21 designs from order-20 Hadamard matrices.
    Excess21 {
        #[arg(long, num_args = 1.., required = true)]
        h20: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// The bordered order-17 design.
    Border17 {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    /// random, augment_hadamard_plus2 or augment_design_plus1
    #[arg(long, default_value = "random")]
    pub strategy: SeedStrategy,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum RegistryCmd {
    /// Union of two registries by key.
    Merge {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class counts, types and duality, compared with known counts.
    Report {
        dir: PathBuf,
        /// Table of known counts by order.
        #[arg(long)]
        expectations: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerificationFailed,
    Usage,
    ResourceLimit,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::VerificationFailed => 1,
            Status::Usage => 2,
            Status::ResourceLimit => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maxdet::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn status(&self) -> Status {
        use maxdet::Error as E;
        match self {
            CliError::Core(E::Io { .. } | E::Parse { .. } | E::InvalidParameter(_)) => Status::Usage,
            CliError::Core(_) => Status::VerificationFailed,
            CliError::Io { .. } | CliError::Usage(_) => Status::Usage,
        }
    }
}

#[derive(Debug)]
pub struct CommandResult {
    pub status: Status,
    pub report: String,
    pub artifacts: Vec<PathBuf>,
    pub error: Option<CliError>,
}

/// What a command hands back before status mapping.
#[derive(Default)]
struct Outcome {
    status: Option<Status>,
    report: String,
    artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.report, "{key}: {value}");
    }

    fn fail(mut self, status: Status) -> Self {
        self.status = Some(status);
        self
    }
}

pub fn run(cli: Cli) -> CommandResult {
    let outcome = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(CliError::Usage(format!("cannot start {t} threads: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(o) => CommandResult {
            status: o.status.unwrap_or(Status::Ok),
            report: o.report,
            artifacts: o.artifacts,
            error: None,
        },
        Err(e) => CommandResult {
            status: e.status(),
            report: String::new(),
            artifacts: Vec::new(),
            error: Some(e),
        },
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => CommandResult {
            status: Status::Usage,
            report: String::new(),
            artifacts: Vec::new(),
            error: Some(CliError::Usage(e.to_string())),
        },
    }
}

fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Det { file } => det(&file),
        Command::Verify { file } => verify(&file),
        Command::Canon { file, out } => canon(&file, out.as_deref()),
        Command::Equiv { a, b } => equiv(&a, &b),
        Command::SwitchNeighbors { file, out } => neighbors(&file, out.as_deref()),
        Command::Qclass(args) => qclass(&args),
        Command::Construct(c) => construct(c),
        Command::Decompose { gram, all, out } => decompose(&gram, all, out.as_deref()),
        Command::Search(args) => search(&args),
        Command::Registry(RegistryCmd::Merge { a, b, out }) => merge(&a, &b, &out),
        Command::Registry(RegistryCmd::Report { dir, expectations }) => {
            report(&dir, expectations.as_deref())
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

/// Writes each matrix as `<stem>_NNNN.txt` plus `manifest.txt` with one
/// `<file> <key> <|det|> <notes>` line per matrix.
fn emit_set(
    out: &mut Outcome,
    dir: &Path,
    stem: &str,
    items: &[(SignMatrix, CanonicalKey, String)],
) -> Result<(), CliError> {
    create_dir(dir)?;
    let mut manifest = String::new();
    for (i, (m, key, notes)) in items.iter().enumerate() {
        let name = format!("{stem}_{i:04}.txt");
        out.artifacts.push(write_file(&dir.join(&name), &m.to_text())?);
        let det = abs_determinant(m)?;
        let _ = writeln!(manifest, "{name} {key} {det} {notes}");
    }
    out.artifacts.push(write_file(&dir.join("manifest.txt"), &manifest)?);
    Ok(())
}

fn det_lines(out: &mut Outcome, m: &SignMatrix) -> Result<(), CliError> {
    let d = determinant(m)?;
    let abs = abs_determinant(m)?;
    let (odd, pow) = factor_power_of_two(&abs);
    out.line("det", &d);
    out.line("abs_det", &abs);
    out.line("det_factored", format!("{odd}x2^{pow}"));
    Ok(())
}

fn det(file: &Path) -> Result<Outcome, CliError> {
    let m = read_matrix(file)?;
    let mut out = Outcome::default();
    out.line("order", m.order()?);
    det_lines(&mut out, &m)?;
    Ok(out)
}

fn verify(file: &Path) -> Result<Outcome, CliError> {
    let rep = verify_design(&read_matrix(file)?)?;
    let mut out = Outcome {
        report: rep.to_text(),
        ..Default::default()
    };
    let known = rep.form_left.is_known() && rep.form_right.is_known();
    out.line("verified", known);
    Ok(if known { out } else { out.fail(Status::VerificationFailed) })
}

fn canon(file: &Path, dest: Option<&Path>) -> Result<Outcome, CliError> {
    let m = read_matrix(file)?;
    let (key, form) = canonical_key_and_form(&m);
    let mut out = Outcome::default();
    out.line("key", &key);
    out.line("automorphisms", &form.graph_automorphisms / 2u32);
    out.line("search_nodes", form.search_nodes);
    if m.is_square() {
        out.line("duality", duality_status(&m)?);
    }
    if let Some(p) = dest {
        out.artifacts.push(write_file(p, &form.matrix.to_text())?);
    }
    Ok(out)
}

fn equiv(a: &Path, b: &Path) -> Result<Outcome, CliError> {
    let (ma, mb) = (read_matrix(a)?, read_matrix(b)?);
    let same = are_equivalent(&ma, &mb);
    let mut out = Outcome::default();
    out.line("key_a", canonical_key(&ma));
    out.line("key_b", canonical_key(&mb));
    out.line("equivalent", same);
    Ok(if same { out } else { out.fail(Status::VerificationFailed) })
}

fn neighbors(file: &Path, dest: Option<&Path>) -> Result<Outcome, CliError> {
    let m = read_matrix(file)?;
    let own = canonical_key(&m);
    let ns = switch_neighbors(&m);
    let mut items = Vec::with_capacity(ns.len());
    let mut classes = BTreeSet::new();
    for n in ns {
        let key = canonical_key(&n);
        classes.insert(key.clone());
        items.push((n, key, String::new()));
    }
    let mut out = Outcome::default();
    out.line("row_quadruples", find_quadruples(&m, Axis::Rows).len());
    out.line("column_quadruples", find_quadruples(&m, Axis::Columns).len());
    out.line("neighbors", items.len());
    out.line("neighbor_classes", classes.len());
    out.line("new_classes", classes.iter().filter(|k| **k != own).count());
    if let Some(dir) = dest {
        emit_set(&mut out, dir, "neighbor", &items)?;
    }
    Ok(out)
}

fn qclass(args: &QclassArgs) -> Result<Outcome, CliError> {
    let seed = read_matrix(&args.seed)?;
    let mut reg = if args.resume {
        Registry::open(&args.out)?
    } else {
        Registry::create(&args.out)?
    };
    let limits = Limits {
        max_classes: args.max_classes,
        max_time: args.max_time.map(Duration::from_secs_f64),
    };
    let rep = q_closure_into(&mut reg, &seed, &limits)?;
    let mut out = Outcome {
        report: rep.to_text(),
        ..Default::default()
    };
    type_histogram(&mut out, &reg);
    out.artifacts.push(args.out.join("registry.txt"));
    out.artifacts.push(write_file(&args.out.join("report.txt"), &out.report)?);
    Ok(if rep.frontier_exhausted {
        out
    } else {
        out.fail(Status::ResourceLimit)
    })
}

fn type_histogram(out: &mut Outcome, reg: &Registry) {
    let mut types: BTreeMap<String, usize> = BTreeMap::new();
    let mut self_dual = 0;
    for rec in reg.records() {
        if let Some((a, b)) = rec.even_type {
            *types.entry(format!("type_{a}_{b}")).or_default() += 1;
        }
        if rec.key == rec.dual_key {
            self_dual += 1;
        }
    }
    for (t, c) in types {
        out.line(&t, c);
    }
    out.line("self_dual_classes", self_dual);
}

fn construct(c: Construct) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    match c {
        Construct::Paley { q, out: dir } => {
            let h = paley_hadamard(q)?;
            out.line("order", h.n_rows());
            let key = canonical_key(&h);
            out.line("key", &key);
            emit_set(&mut out, &dir, "paley", &[(h, key, format!("q={q}"))])?;
        }
        Construct::Circulant { n, out: dir } => {
            let designs = circulant_search(n)?;
            let mut types: BTreeMap<String, usize> = BTreeMap::new();
            let mut items = Vec::new();
            for d in designs {
                let p = d.square_pair();
                let dual = duality_status(&d.matrix)?;
                *types.entry(format!("type_{}_{}", p.a, p.b)).or_default() += 1;
                items.push((d.matrix, d.key, format!("({},{}) {dual}", p.a, p.b)));
            }
            out.line("designs", items.len());
            for (t, c) in types {
                out.line(&t, c);
            }
            emit_set(&mut out, &dir, "circulant", &items)?;
        }
        Construct::Double {
            samples,
            patience,
            rng_seed,
            exact,
            out: dir,
        } => {
            let keys = if exact {
                let keys = doubling_classes_exact()?;
                out.line("method", "double-cosets");
                keys
            } else {
                let rep = enumerate_doubling(&doubling_base()?, patience, samples, rng_seed)?;
                out.line("method", "sampling");
                out.line("samples", rep.samples);
                out.line("saturated", rep.saturated);
                rep.keys
            };
            out.line("classes", keys.len());
            emit_keys(&mut out, &dir, "double", keys)?;
        }
        Construct::Excess21 { h20, out: dir } => {
            let hs = h20.iter().map(|p| read_matrix(p)).collect::<Result<Vec<_>, _>>()?;
            let keys = enumerate_order21(&hs)?;
            out.line("inputs", hs.len());
            out.line("classes", keys.len());
            emit_keys(&mut out, &dir, "excess21", keys)?;
        }
        Construct::Border17 { out: dir } => {
            let r = bordered_17();
            let rep = verify_design(&r)?;
            out.line("form_left", rep.form_left);
            out.line("form_right", rep.form_right);
            let key = canonical_key(&r);
            out.line("key", &key);
            emit_set(&mut out, &dir, "border17", &[(r, key, String::new())])?;
        }
    }
    Ok(out)
}

fn emit_keys(
    out: &mut Outcome,
    dir: &Path,
    stem: &str,
    keys: BTreeSet<CanonicalKey>,
) -> Result<(), CliError> {
    let items = keys
        .into_iter()
        .map(|k| Ok((k.representative()?, k, String::new())))
        .collect::<Result<Vec<_>, maxdet::Error>>()?;
    emit_set(out, dir, stem, &items)
}

fn decompose(gram: &Path, all: bool, dest: Option<&Path>) -> Result<Outcome, CliError> {
    let m = read_gram(gram)?;
    let mode = if all { DecomposeMode::All } else { DecomposeMode::First };
    let designs = decompose_gram(&m, mode)?;
    let mut out = Outcome::default();
    out.line("order", m.order());
    out.line("classes", designs.len());
    if let Some(first) = designs.first() {
        out.line("abs_det", abs_determinant(first)?);
    }
    let items: Vec<_> = designs
        .into_iter()
        .map(|r| {
            let k = canonical_key(&r);
            (r, k, String::new())
        })
        .collect();
    for (_, k, _) in &items {
        out.line("key", k);
    }
    if let Some(dir) = dest {
        emit_set(&mut out, dir, "design", &items)?;
    }
    Ok(if items.is_empty() {
        out.fail(Status::VerificationFailed)
    } else {
        out
    })
}

fn search(args: &SearchArgs) -> Result<Outcome, CliError> {
    let base = args.base.as_deref().map(read_matrix).transpose()?;
    let cfg = ClimbConfig {
        n: args.n,
        restarts: args.restarts,
        seed_strategy: args.strategy,
        rng_seed: args.rng_seed,
        base,
    };
    let res = hill_climb(&cfg)?;
    let mut out = Outcome::default();
    out.line("strategy", res.strategy_used);
    out.line("best_restart", res.best_restart);
    out.line("steps", res.steps);
    det_lines(&mut out, &res.best)?;
    for (d, c) in res.local_maxima.iter().rev() {
        out.line("local_maximum", format!("{d} x{c}"));
    }
    out.report.push_str(&res.report.to_text());
    out.line("key", canonical_key(&res.best));
    if let Some(p) = &args.out {
        out.artifacts.push(write_file(p, &res.best.to_text())?);
    }
    Ok(out)
}

fn merge(a: &Path, b: &Path, dest: &Path) -> Result<Outcome, CliError> {
    let (ra, rb) = (Registry::open(a)?, Registry::open(b)?);
    let merged = merge_registries(&ra, &rb)?.save_as(dest)?;
    let mut out = Outcome::default();
    out.line("classes_a", ra.len());
    out.line("classes_b", rb.len());
    out.line("classes", merged.len());
    out.artifacts.push(dest.join("registry.txt"));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Expectation {
    count: usize,
    at_least: bool,
    record: Option<String>,
}

fn read_expectations(path: &Path) -> Result<BTreeMap<usize, Expectation>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Usage(format!("{}:{}: malformed expectation", path.display(), i + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        let (order, count) = match f.as_slice() {
            [o, c, ..] => (o.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        let at_least = match f.get(2) {
            Some(&"exact") => false,
            Some(&"at_least") => true,
            _ => return Err(bad()),
        };
        out.insert(
            order,
            Expectation {
                count,
                at_least,
                record: f.get(3).map(|s| s.to_string()),
            },
        );
    }
    Ok(out)
}

fn report(dir: &Path, expectations: Option<&Path>) -> Result<Outcome, CliError> {
    let reg = Registry::open(dir)?;
    let mut out = Outcome::default();
    out.line("classes", reg.len());
    out.line("unexpanded", reg.unexpanded());
    if let Some(n) = reg.order() {
        out.line("order", n);
    }
    if let Some(d) = reg.det_abs() {
        let (odd, pow) = factor_power_of_two(d);
        out.line("abs_det", d);
        out.line("det_factored", format!("{odd}x2^{pow}"));
    }
    type_histogram(&mut out, &reg);
    if reg.is_complete() && !reg.is_empty() {
        out.line("self_dual_registry", classify_duality(&reg)?.self_dual);
    }
    if let (Some(path), Some(n)) = (expectations, reg.order()) {
        match read_expectations(path)?.get(&n) {
            Some(e) => {
                let bound = if e.at_least { "at_least" } else { "exact" };
                out.line("expected_count", format!("{} ({bound})", e.count));
                let status = match reg.len().cmp(&e.count) {
                    std::cmp::Ordering::Equal => "matches",
                    std::cmp::Ordering::Less => "below",
                    std::cmp::Ordering::Greater if e.at_least => "exceeds",
                    std::cmp::Ordering::Greater => "contradicts",
                };
                out.line("count_status", status);
                if let Some(r) = &e.record {
                    out.line("record_det", r);
                }
            }
            None => out.line("expected_count", "none"),
        }
    }
    Ok(out)
}
