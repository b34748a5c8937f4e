//! Canonical labeling of vertex-colored simple graphs by individualization
//! and refinement.
//!
//! The search tree is the usual one: refine the partition to an equitable
//! one, pick a target cell, individualize each of its vertices in turn, and
//! recurse until the partition is discrete. Every node carries a hash of the
//! trace of its refinement; the canonical leaf is the maximum over all leaves
//! of (trace hash sequence, relabeled adjacency). Subtrees are pruned when their trace
//! falls below the best leaf's (unless they still match the first leaf, which
//! is how automorphisms are found), when a child lies in the same orbit as an
//! explored sibling under the automorphisms found so far that fix the current
//! path, and by backjumping to the common ancestor whenever a leaf turns out to
//! be equivalent to the first or best leaf.
//!
//! The automorphism group order is the product, over the nodes of the first
//! path, of the orbit length of the first child under the path stabilizer.

use num_bigint::BigUint;
use num_traits::One;

/// A simple undirected graph with a color per vertex.
#[derive(Clone, Debug)]
pub struct ColoredGraph {
    adj: Vec<Vec<u32>>,
    colors: Vec<u32>,
}

impl ColoredGraph {
    pub fn new(colors: Vec<u32>) -> Self {
        ColoredGraph {
            adj: vec![Vec::new(); colors.len()],
            colors,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.colors.len()
    }

    pub fn color(&self, v: usize) -> u32 {
        self.colors[v]
    }

    /// Adds the edge `u–v`. Loops and repeated edges are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v || self.adj[u].contains(&(v as u32)) {
            return;
        }
        self.adj[u].push(v as u32);
        self.adj[v].push(u as u32);
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&(v as u32))
    }

    /// The graph with vertex `order[p]` moved to position `p`, as
    /// (color sequence, adjacency rows as bitsets).
    pub fn relabeled_code(&self, order: &[u32]) -> (Vec<u32>, Vec<u64>) {
        let n = self.vertex_count();
        let mut pos = vec![0u32; n];
        for (p, &v) in order.iter().enumerate() {
            pos[v as usize] = p as u32;
        }
        let colors = order.iter().map(|&v| self.colors[v as usize]).collect();
        (colors, adjacency_code(&self.adj, order, &pos))
    }
}

fn adjacency_code(adj: &[Vec<u32>], lab: &[u32], pos: &[u32]) -> Vec<u64> {
    let n = lab.len();
    let words = n.div_ceil(64);
    let mut code = vec![0u64; n * words];
    for (p, &v) in lab.iter().enumerate() {
        let row = &mut code[p * words..(p + 1) * words];
        for &u in &adj[v as usize] {
            let q = pos[u as usize] as usize;
            row[q / 64] |= 1 << (q % 64);
        }
    }
    code
}

/// Output of [`canonical_labeling`].
#[derive(Clone, Debug)]
pub struct Labeling {
    /// `order[p]` is the vertex placed at canonical position `p`.
    pub order: Vec<u32>,
    /// Automorphisms found during the search, as vertex maps `v ↦ γ[v]`.
    /// They generate the full automorphism group.
    pub generators: Vec<Vec<u32>>,
    pub group_order: BigUint,
    /// Search tree nodes visited.
    pub nodes: u64,
}

#[derive(Clone)]
struct Partition {
    lab: Vec<u32>,
    pos: Vec<u32>,
    /// Start position of the cell holding each vertex.
    cell_of: Vec<u32>,
    /// Cell length, valid at cell start positions.
    len: Vec<u32>,
    cells: usize,
}

impl Partition {
    fn by_color(g: &ColoredGraph) -> (Partition, Vec<u32>) {
        let n = g.vertex_count();
        let mut lab: Vec<u32> = (0..n as u32).collect();
        lab.sort_by_key(|&v| (g.colors[v as usize], v));
        let mut pos = vec![0u32; n];
        let mut cell_of = vec![0u32; n];
        let mut len = vec![0u32; n];
        let mut starts = Vec::new();
        let mut start = 0usize;
        for p in 0..n {
            pos[lab[p] as usize] = p as u32;
            if p > 0 && g.colors[lab[p] as usize] != g.colors[lab[p - 1] as usize] {
                len[start] = (p - start) as u32;
                starts.push(start as u32);
                start = p;
            }
            cell_of[lab[p] as usize] = start as u32;
        }
        if n > 0 {
            len[start] = (n - start) as u32;
            starts.push(start as u32);
        }
        let cells = starts.len();
        (
            Partition {
                lab,
                pos,
                cell_of,
                len,
                cells,
            },
            starts,
        )
    }

    fn is_discrete(&self) -> bool {
        self.cells == self.lab.len()
    }

    /// Splits `v` off the front of its cell; returns the new singleton's start.
    fn individualize(&mut self, v: u32) -> u32 {
        let s = self.cell_of[v as usize] as usize;
        let l = self.len[s] as usize;
        debug_assert!(l > 1);
        let p = self.pos[v as usize] as usize;
        let w = self.lab[s];
        self.lab.swap(s, p);
        self.pos[v as usize] = s as u32;
        self.pos[w as usize] = p as u32;
        self.len[s] = 1;
        self.len[s + 1] = (l - 1) as u32;
        for q in s + 1..s + l {
            self.cell_of[self.lab[q] as usize] = (s + 1) as u32;
        }
        self.cells += 1;
        s as u32
    }

    /// First cell of minimum size among non-singleton cells.
    fn target_cell(&self) -> usize {
        let n = self.lab.len();
        let mut best: Option<(u32, usize)> = None;
        let mut p = 0;
        while p < n {
            let l = self.len[p];
            if l > 1 && best.is_none_or(|(bl, _)| l < bl) {
                best = Some((l, p));
            }
            p += l as usize;
        }
        best.expect("target_cell on a discrete partition").1
    }
}

struct Scratch {
    count: Vec<u32>,
    touched: Vec<u32>,
    touched_cells: Vec<u32>,
    marked: Vec<bool>,
    in_queue: Vec<bool>,
    queue: Vec<u32>,
    frags: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            count: vec![0; n],
            touched: Vec::new(),
            touched_cells: Vec::new(),
            marked: vec![false; n],
            in_queue: vec![false; n],
            queue: Vec::new(),
            frags: Vec::new(),
        }
    }
}

const SPLITTER: u32 = u32::MAX;
const CELLS: u32 = u32::MAX - 1;

/// Order-sensitive hash of a refinement trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Trace(u64);

impl Trace {
    fn push(&mut self, x: u32) {
        self.0 = (self.0.rotate_left(5) ^ u64::from(x)).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
}

/// Refines `p` to the coarsest equitable partition finer than it, starting
/// from the splitter cells in `initial`, and appends the refinement trace.
fn refine(g: &ColoredGraph, p: &mut Partition, initial: &[u32], s: &mut Scratch, trace: &mut Trace) {
    s.queue.clear();
    for &c in initial {
        if !s.in_queue[c as usize] {
            s.in_queue[c as usize] = true;
            s.queue.push(c);
        }
    }
    let mut head = 0;
    while head < s.queue.len() && !p.is_discrete() {
        let w = s.queue[head] as usize;
        head += 1;
        s.in_queue[w] = false;
        let wl = p.len[w] as usize;

        s.touched.clear();
        for q in w..w + wl {
            let x = p.lab[q] as usize;
            for &y in &g.adj[x] {
                let y = y as usize;
                if s.count[y] == 0 {
                    s.touched.push(y as u32);
                }
                s.count[y] += 1;
            }
        }
        s.touched_cells.clear();
        for &y in &s.touched {
            let c = p.cell_of[y as usize];
            if !s.marked[c as usize] {
                s.marked[c as usize] = true;
                s.touched_cells.push(c);
            }
        }
        s.touched_cells.sort_unstable();
        trace.push(SPLITTER);
        trace.push(w as u32);

        for ci in 0..s.touched_cells.len() {
            let c = s.touched_cells[ci] as usize;
            s.marked[c] = false;
            let cl = p.len[c] as usize;
            let first = s.count[p.lab[c] as usize];
            let uniform = p.lab[c..c + cl]
                .iter()
                .all(|&v| s.count[v as usize] == first);
            trace.push(c as u32);
            if uniform {
                trace.push(first);
                continue;
            }
            {
                let count = &s.count;
                p.lab[c..c + cl].sort_unstable_by_key(|&v| count[v as usize]);
            }
            let was_queued = s.in_queue[c];
            let mut frag_start = c;
            let mut largest = (0usize, c);
            let mut frags = std::mem::take(&mut s.frags);
            frags.clear();
            for q in c..=c + cl {
                let boundary = q == c + cl
                    || s.count[p.lab[q] as usize] != s.count[p.lab[frag_start] as usize];
                if boundary {
                    let fl = q - frag_start;
                    trace.push(s.count[p.lab[frag_start] as usize]);
                    trace.push(fl as u32);
                    p.len[frag_start] = fl as u32;
                    if fl > largest.0 {
                        largest = (fl, frag_start);
                    }
                    frags.push(frag_start);
                    frag_start = q;
                }
            }
            for &f in &frags {
                for q in f..f + p.len[f] as usize {
                    let v = p.lab[q] as usize;
                    p.pos[v] = q as u32;
                    p.cell_of[v] = f as u32;
                }
            }
            p.cells += frags.len() - 1;
            for &f in &frags {
                let enqueue = if was_queued { f != c } else { f != largest.1 };
                if enqueue && !s.in_queue[f] {
                    s.in_queue[f] = true;
                    s.queue.push(f as u32);
                }
            }
            s.frags = frags;
        }
        for &y in &s.touched {
            s.count[y as usize] = 0;
        }
    }
    for &c in &s.queue[head..] {
        s.in_queue[c as usize] = false;
    }
    s.queue.clear();
    trace.push(CELLS);
    trace.push(p.cells as u32);
}

#[derive(Clone)]
struct Leaf {
    path: Vec<u32>,
    traces: Vec<Trace>,
    lab: Vec<u32>,
    code: Vec<u64>,
}

struct Search<'g> {
    g: &'g ColoredGraph,
    scratch: Scratch,
    path: Vec<u32>,
    traces: Vec<Trace>,
    first: Option<Leaf>,
    best: Option<Leaf>,
    gens: Vec<Vec<u32>>,
    group_order: BigUint,
    nodes: u64,
}

/// Union-find orbits of the group generated by `gens`.
struct Orbits {
    parent: Vec<u32>,
}

impl Orbits {
    fn new(n: usize, gens: &[&Vec<u32>]) -> Self {
        let mut o = Orbits {
            parent: (0..n as u32).collect(),
        };
        for g in gens {
            for (v, &w) in g.iter().enumerate() {
                o.union(v as u32, w);
            }
        }
        o
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let gp = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = gp;
            v = gp;
        }
        v
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

fn common_prefix(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl<'g> Search<'g> {
    fn stabilizer_orbits(&self, level: usize) -> Orbits {
        let fixed = &self.path[..level];
        let gens: Vec<&Vec<u32>> = self
            .gens
            .iter()
            .filter(|g| fixed.iter().all(|&v| g[v as usize] == v))
            .collect();
        Orbits::new(self.g.vertex_count(), &gens)
    }

    fn compare_with(&self, other: &Leaf, level: usize) -> std::cmp::Ordering {
        for (mine, theirs) in self.traces[..=level].iter().zip(&other.traces) {
            match mine.cmp(theirs) {
                std::cmp::Ordering::Equal => {}
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }

    fn matches_first(&self, level: usize) -> bool {
        match &self.first {
            None => true,
            Some(f) => f.traces.len() > level && self.traces[..=level] == f.traces[..=level],
        }
    }

    fn record_automorphism(&mut self, from: &[u32], to: &[u32]) {
        let mut gamma = vec![0u32; from.len()];
        for (&a, &b) in from.iter().zip(to) {
            gamma[a as usize] = b;
        }
        if gamma.iter().enumerate().any(|(v, &w)| v as u32 != w) {
            self.gens.push(gamma);
        }
    }

    /// Returns `Some(k)` to unwind to the ancestor at level `k`.
    fn visit(&mut self, part: &Partition, level: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        self.nodes += 1;
        let eq_first = self.matches_first(level);
        let cmp_best = self
            .best
            .as_ref()
            .map_or(Greater, |b| self.compare_with(b, level));
        if self.first.is_some() && !eq_first && cmp_best == Less {
            return None;
        }
        if part.is_discrete() {
            return self.leaf(part, eq_first, cmp_best);
        }

        let on_first_path = self.first.is_none();
        let target = part.target_cell();
        let cell: Vec<u32> = part.lab[target..target + part.len[target] as usize].to_vec();
        let mut visited: Vec<u32> = Vec::new();
        let mut orbits: Option<(usize, Orbits)> = None;
        for &v in &cell {
            if !visited.is_empty() {
                if orbits.as_ref().is_none_or(|(n, _)| *n != self.gens.len()) {
                    orbits = Some((self.gens.len(), self.stabilizer_orbits(level)));
                }
                let (_, o) = orbits.as_mut().expect("computed above");
                let rv = o.find(v);
                if visited.iter().any(|&u| o.find(u) == rv) {
                    continue;
                }
            }
            visited.push(v);
            let mut child = part.clone();
            let start = child.individualize(v);
            let mut trace = Trace::default();
            refine(self.g, &mut child, &[start], &mut self.scratch, &mut trace);
            self.path.push(v);
            self.traces.push(trace);
            let jump = self.visit(&child, level + 1);
            self.path.pop();
            self.traces.pop();
            if let Some(k) = jump {
                if k < level {
                    return Some(k);
                }
            }
        }
        if on_first_path {
            let mut o = self.stabilizer_orbits(level);
            let root = o.find(cell[0]);
            let size = cell.iter().filter(|&&u| o.find(u) == root).count();
            self.group_order *= BigUint::from(size);
        }
        None
    }

    fn leaf(&mut self, part: &Partition, eq_first: bool, cmp_best: std::cmp::Ordering) -> Option<usize> {
        use std::cmp::Ordering::*;
        let code = adjacency_code(&self.g.adj, &part.lab, &part.pos);
        let Some(first) = &self.first else {
            let leaf = Leaf {
                path: self.path.clone(),
                traces: self.traces.clone(),
                lab: part.lab.clone(),
                code,
            };
            self.first = Some(leaf.clone());
            self.best = Some(leaf);
            return None;
        };
        let lca_first = common_prefix(&self.path, &first.path);
        if eq_first && code == first.code {
            let from = first.lab.clone();
            self.record_automorphism(&from, &part.lab);
            return Some(lca_first);
        }
        let best = self.best.as_ref().expect("best is set with first");
        let ord = match cmp_best {
            Equal => code.cmp(&best.code),
            other => other,
        };
        match ord {
            Greater => {
                self.best = Some(Leaf {
                    path: self.path.clone(),
                    traces: self.traces.clone(),
                    lab: part.lab.clone(),
                    code,
                });
                None
            }
            Equal => {
                let lca_best = common_prefix(&self.path, &best.path);
                let from = best.lab.clone();
                self.record_automorphism(&from, &part.lab);
                Some(lca_best.max(lca_first))
            }
            Less => None,
        }
    }
}

/// Computes a canonical vertex order of `g`: isomorphic colored graphs (with
/// colors matched by value) get identical relabeled graphs.
pub fn canonical_labeling(g: &ColoredGraph) -> Labeling {
    let n = g.vertex_count();
    if n == 0 {
        return Labeling {
            order: Vec::new(),
            generators: Vec::new(),
            group_order: BigUint::one(),
            nodes: 0,
        };
    }
    let (mut part, starts) = Partition::by_color(g);
    let mut scratch = Scratch::new(n);
    let mut trace = Trace::default();
    refine(g, &mut part, &starts, &mut scratch, &mut trace);
    let mut search = Search {
        g,
        scratch,
        path: Vec::new(),
        traces: vec![trace],
        first: None,
        best: None,
        gens: Vec::new(),
        group_order: BigUint::one(),
        nodes: 0,
    };
    search.visit(&part, 0);
    let best = search.best.expect("search reaches at least one leaf");
    Labeling {
        order: best.lab,
        generators: search.gens,
        group_order: search.group_order,
        nodes: search.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph_from_edges(n: usize, colors: Option<Vec<u32>>, edges: &[(usize, usize)]) -> ColoredGraph {
        let mut g = ColoredGraph::new(colors.unwrap_or_else(|| vec![0; n]));
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    fn permuted(g: &ColoredGraph, perm: &[usize]) -> ColoredGraph {
        // vertex v of g becomes perm[v]
        let n = g.vertex_count();
        let mut colors = vec![0; n];
        for v in 0..n {
            colors[perm[v]] = g.color(v);
        }
        let mut h = ColoredGraph::new(colors);
        for v in 0..n {
            for &u in g.neighbors(v) {
                h.add_edge(perm[v], perm[u as usize]);
            }
        }
        h
    }

    fn canon(g: &ColoredGraph) -> (Vec<u32>, Vec<u64>) {
        g.relabeled_code(&canonical_labeling(g).order)
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_automorphisms(g: &ColoredGraph) -> usize {
        let n = g.vertex_count();
        all_perms(n)
            .into_iter()
            .filter(|p| {
                (0..n).all(|v| g.color(v) == g.color(p[v]))
                    && (0..n).all(|v| {
                        g.neighbors(v)
                            .iter()
                            .all(|&u| g.adjacent(p[v], p[u as usize]))
                    })
            })
            .count()
    }

    #[test]
    fn isomorphism_classes_of_five_vertex_graphs() {
        // 34 isomorphism classes of simple graphs on 5 vertices
        let n = 5;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut codes = std::collections::HashSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            codes.insert(canon(&graph_from_edges(n, None, &edges)));
        }
        assert_eq!(codes.len(), 34);
    }

    #[test]
    fn group_orders_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.gen_range(1..=7);
            let colors: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.4) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph_from_edges(n, Some(colors), &edges);
            let lab = canonical_labeling(&g);
            assert_eq!(
                lab.group_order,
                BigUint::from(brute_automorphisms(&g)),
                "graph {edges:?}"
            );
            for gamma in &lab.generators {
                for v in 0..n {
                    assert_eq!(g.color(v), g.color(gamma[v] as usize));
                    for &u in g.neighbors(v) {
                        assert!(g.adjacent(gamma[v] as usize, gamma[u as usize] as usize));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_graphs() {
        // Petersen graph: automorphism group of order 120
        let outer: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let spokes: Vec<_> = (0..5).map(|i| (i, i + 5)).collect();
        let inner: Vec<_> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
        let edges: Vec<_> = [outer, spokes, inner].concat();
        let g = graph_from_edges(10, None, &edges);
        assert_eq!(canonical_labeling(&g).group_order, BigUint::from(120u32));

        // 4-cube: 384
        let edges: Vec<_> = (0..16usize)
            .flat_map(|v| (0..4).map(move |b| (v, v ^ (1 << b))))
            .filter(|&(a, b)| a < b)
            .collect();
        let g = graph_from_edges(16, None, &edges);
        assert_eq!(canonical_labeling(&g).group_order, BigUint::from(384u32));

        // empty graph on 6 vertices: 720
        let g = graph_from_edges(6, None, &[]);
        assert_eq!(canonical_labeling(&g).group_order, BigUint::from(720u32));
    }

    #[test]
    fn canonical_form_is_relabeling_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.gen_range(2..=24);
            let colors: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.3) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph_from_edges(n, Some(colors), &edges);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let h = permuted(&g, &perm);
            assert_eq!(canon(&g), canon(&h));
            assert_eq!(
                canonical_labeling(&g).group_order,
                canonical_labeling(&h).group_order
            );
        }
    }

    #[test]
    fn colors_separate_otherwise_equal_graphs() {
        let a = graph_from_edges(3, Some(vec![0, 0, 1]), &[(0, 1)]);
        let b = graph_from_edges(3, Some(vec![0, 0, 1]), &[(0, 2)]);
        assert_ne!(canon(&a), canon(&b));
    }
}
