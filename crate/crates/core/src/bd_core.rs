//! Belavin-Drinfeld data of type `A_{n-1}`: triples, runs, the graph of a
//! pair of triples and its decomposition into maximal alternating paths.
//!
//! Roots are the integers `1..n`; the X-runs of a triple are the maximal
//! intervals `[a, b]` of `[1, n]` with `{a, .., b-1}` inside `Γ1`, and the
//! Y-runs are built the same way from `Γ2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BdError {
    #[error("root {root} outside [1, {max}]")]
    RootOutOfRange { root: usize, max: usize },
    #[error("root {root} is mapped twice")]
    DuplicateSource { root: usize },
    #[error("map is not injective: {a} and {b} both map to {target}")]
    NotInjective { a: usize, b: usize, target: usize },
    #[error("map is not oriented: {root} and {next} are adjacent but their images are not")]
    NotOriented { root: usize, next: usize },
    #[error("map is not an isometry: images {image} and {next} are adjacent but {root} and {preimage} are not")]
    NotIsometry { root: usize, preimage: usize, image: usize, next: usize },
    #[error("map is not nilpotent: the orbit of {root} never leaves the domain")]
    NotNilpotent { root: usize },
    #[error("triples have different sizes {row} and {col}")]
    SizeMismatch { row: usize, col: usize },
    #[error("matrix size must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("pair is periodic: the graph contains an alternating cycle")]
    PeriodicPair,
}

/// A validated oriented nilpotent partial map `γ` on the roots `[1, n-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TripleRepr", into = "TripleRepr")]
pub struct BdTriple {
    n: usize,
    gamma: BTreeMap<usize, usize>,
    inverse: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    n: usize,
    gamma: Vec<(usize, usize)>,
}

impl TryFrom<TripleRepr> for BdTriple {
    type Error = BdError;
    fn try_from(r: TripleRepr) -> Result<Self, BdError> {
        BdTriple::new(r.n, &r.gamma)
    }
}

impl From<BdTriple> for TripleRepr {
    fn from(t: BdTriple) -> Self {
        TripleRepr { n: t.n, gamma: t.pairs() }
    }
}

impl BdTriple {
    /// Validates `(source, target)` pairs as a BD triple on `GL_n`.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self, BdError> {
        if n < 2 {
            return Err(BdError::TooSmall(n));
        }
        let mut gamma = BTreeMap::new();
        let mut inverse = BTreeMap::new();
        for &(a, b) in pairs {
            for r in [a, b] {
                if r == 0 || r >= n {
                    return Err(BdError::RootOutOfRange { root: r, max: n - 1 });
                }
            }
            if gamma.insert(a, b).is_some() {
                return Err(BdError::DuplicateSource { root: a });
            }
            if let Some(prev) = inverse.insert(b, a) {
                return Err(BdError::NotInjective { a: prev.min(a), b: prev.max(a), target: b });
            }
        }
        for (&a, &b) in &gamma {
            if let Some(&b1) = gamma.get(&(a + 1)) {
                if b1 != b + 1 {
                    return Err(BdError::NotOriented { root: a, next: a + 1 });
                }
            }
            if let Some(&a1) = inverse.get(&(b + 1)) {
                if a1 != a + 1 {
                    return Err(BdError::NotIsometry { root: a, preimage: a1, image: b, next: b + 1 });
                }
            }
        }
        for &a in gamma.keys() {
            let mut cur = a;
            let mut steps = 0;
            while let Some(&next) = gamma.get(&cur) {
                cur = next;
                steps += 1;
                if steps > n {
                    return Err(BdError::NotNilpotent { root: a });
                }
            }
        }
        Ok(Self { n, gamma, inverse })
    }

    /// The triple with empty `Γ1`.
    pub fn trivial(n: usize) -> Self {
        Self::new(n, &[]).expect("trivial triple is valid")
    }

    /// The Cremmer-Gervais triple `i ↦ i+1` on `[1, n-2]`.
    pub fn cremmer_gervais(n: usize) -> Self {
        let pairs: Vec<_> = (1..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::new(n, &pairs).expect("Cremmer-Gervais triple is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self, i: usize) -> Option<usize> {
        self.gamma.get(&i).copied()
    }

    pub fn gamma_inv(&self, i: usize) -> Option<usize> {
        self.inverse.get(&i).copied()
    }

    pub fn in_gamma1(&self, i: usize) -> bool {
        self.gamma.contains_key(&i)
    }

    pub fn in_gamma2(&self, i: usize) -> bool {
        self.inverse.contains_key(&i)
    }

    pub fn gamma1(&self) -> BTreeSet<usize> {
        self.gamma.keys().copied().collect()
    }

    pub fn gamma2(&self) -> BTreeSet<usize> {
        self.inverse.keys().copied().collect()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.gamma.iter().map(|(&a, &b)| (a, b)).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.gamma.is_empty()
    }

    /// `k_Γ = (n-1) - |Γ1|`.
    pub fn k(&self) -> usize {
        self.n - 1 - self.gamma.len()
    }

    /// The X-run containing `i`.
    pub fn x_run(&self, i: usize) -> (usize, usize) {
        run_of(|r| self.in_gamma1(r), i)
    }

    /// The Y-run containing `i`.
    pub fn y_run(&self, i: usize) -> (usize, usize) {
        run_of(|r| self.in_gamma2(r), i)
    }

    pub fn x_runs(&self) -> Vec<(usize, usize)> {
        all_runs(self.n, |r| self.in_gamma1(r))
    }

    pub fn y_runs(&self) -> Vec<(usize, usize)> {
        all_runs(self.n, |r| self.in_gamma2(r))
    }

    pub fn runs(&self) -> RunDecomposition {
        let x_runs = self.x_runs();
        let y_runs = self.y_runs();
        let run_bijection = x_runs
            .iter()
            .filter(|(a, b)| a < b)
            .map(|&(a, b)| {
                let c = self.gamma(a).expect("nontrivial run starts in Γ1");
                ((a, b), (c, c + b - a))
            })
            .collect();
        RunDecomposition { x_runs, y_runs, run_bijection }
    }

    /// The opposite triple `(Γ2, Γ1, γ⁻¹)`.
    pub fn opposite(&self) -> Self {
        Self { n: self.n, gamma: self.inverse.clone(), inverse: self.gamma.clone() }
    }
}

impl fmt::Display for BdTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gamma.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self.gamma.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn run_of(inside: impl Fn(usize) -> bool, i: usize) -> (usize, usize) {
    let mut a = i;
    while a > 1 && inside(a - 1) {
        a -= 1;
    }
    let mut b = i;
    while inside(b) {
        b += 1;
    }
    (a, b)
}

fn all_runs(n: usize, inside: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 1;
    while i <= n {
        let r = run_of(&inside, i);
        out.push(r);
        i = r.1 + 1;
    }
    out
}

/// X-runs, Y-runs and the bijection `γ` induces between the nontrivial ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDecomposition {
    pub x_runs: Vec<(usize, usize)>,
    pub y_runs: Vec<(usize, usize)>,
    pub run_bijection: Vec<((usize, usize), (usize, usize))>,
}

/// A pair `(Γr, Γc)` of triples on the same `GL_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BdPair {
    pub row: BdTriple,
    pub col: BdTriple,
}

impl BdPair {
    pub fn new(row: BdTriple, col: BdTriple) -> Result<Self, BdError> {
        if row.n != col.n {
            return Err(BdError::SizeMismatch { row: row.n, col: col.n });
        }
        Ok(Self { row, col })
    }

    pub fn from_maps(n: usize, row: &[(usize, usize)], col: &[(usize, usize)]) -> Result<Self, BdError> {
        Self::new(BdTriple::new(n, row)?, BdTriple::new(n, col)?)
    }

    pub fn trivial(n: usize) -> Self {
        Self { row: BdTriple::trivial(n), col: BdTriple::trivial(n) }
    }

    /// The pair `(Γ, Γ)`.
    pub fn diagonal(t: BdTriple) -> Self {
        Self { row: t.clone(), col: t }
    }

    pub fn n(&self) -> usize {
        self.row.n
    }

    /// The pair realising `L(X, Y) ↦ L(Yᵀ, Xᵀ)ᵀ`: `(Γc opposite, Γr opposite)`.
    pub fn opposite(&self) -> Self {
        Self { row: self.col.opposite(), col: self.row.opposite() }
    }

    pub fn graph(&self) -> PairGraph {
        PairGraph::new(self)
    }

    pub fn decompose(&self) -> PathDecomposition {
        self.graph().decompose()
    }

    pub fn is_aperiodic(&self) -> bool {
        self.decompose().is_aperiodic()
    }
}

impl fmt::Display for BdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} r=[{}] c=[{}]", self.n(), self.row, self.col)
    }
}

/// Which copy of the roots a graph vertex lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Upper,
    Lower,
}

/// A vertex of the pair graph: a root in the upper or the lower copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphVertex {
    pub level: Level,
    pub root: usize,
}

impl fmt::Display for GraphVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Level::Upper => write!(f, "{}", self.root),
            Level::Lower => write!(f, "{}'", self.root),
        }
    }
}

/// A directed edge of the pair graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GraphEdge {
    /// `i → n-i` inside one level; a loop when `i = n/2`.
    Horizontal { level: Level, from: usize, to: usize },
    /// Upper `i` to lower `γr(i)`.
    Down { from: usize, to: usize },
    /// Lower `γc(i)` to upper `i`.
    Up { from: usize, to: usize },
}

impl GraphEdge {
    pub fn source(&self) -> GraphVertex {
        match *self {
            GraphEdge::Horizontal { level, from, .. } => GraphVertex { level, root: from },
            GraphEdge::Down { from, .. } => GraphVertex { level: Level::Upper, root: from },
            GraphEdge::Up { from, .. } => GraphVertex { level: Level::Lower, root: from },
        }
    }

    pub fn target(&self) -> GraphVertex {
        match *self {
            GraphEdge::Horizontal { level, to, .. } => GraphVertex { level, root: to },
            GraphEdge::Down { to, .. } => GraphVertex { level: Level::Lower, root: to },
            GraphEdge::Up { to, .. } => GraphVertex { level: Level::Upper, root: to },
        }
    }

    pub fn is_horizontal(&self) -> bool {
        matches!(self, GraphEdge::Horizontal { .. })
    }
}

/// The graph `G_{Γr,Γc}`: inclined `Γr` edges point down, inclined `Γc`
/// edges point up, and each horizontal pair `i, n-i` carries one edge in
/// each direction (a single loop at `n/2`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGraph {
    pub n: usize,
    pub edges: Vec<GraphEdge>,
    #[serde(skip)]
    pair: Option<BdPair>,
}

impl PairGraph {
    pub fn new(pair: &BdPair) -> Self {
        let n = pair.n();
        let mut edges = Vec::new();
        for level in [Level::Upper, Level::Lower] {
            for i in 1..n {
                edges.push(GraphEdge::Horizontal { level, from: i, to: n - i });
            }
        }
        for (a, b) in pair.row.pairs() {
            edges.push(GraphEdge::Down { from: a, to: b });
        }
        for (a, b) in pair.col.pairs() {
            edges.push(GraphEdge::Up { from: b, to: a });
        }
        Self { n, edges, pair: Some(pair.clone()) }
    }

    fn pair(&self) -> &BdPair {
        self.pair.as_ref().expect("graph built from a pair")
    }

    /// The edge continuing an alternating path after `e`, if any.
    fn successor(&self, e: GraphEdge) -> Option<GraphEdge> {
        let (n, p) = (self.n, self.pair());
        match e {
            GraphEdge::Horizontal { level: Level::Upper, to, .. } => {
                p.row.gamma(to).map(|b| GraphEdge::Down { from: to, to: b })
            }
            GraphEdge::Horizontal { level: Level::Lower, to, .. } => {
                p.col.gamma_inv(to).map(|b| GraphEdge::Up { from: to, to: b })
            }
            GraphEdge::Down { to, .. } => Some(GraphEdge::Horizontal { level: Level::Lower, from: to, to: n - to }),
            GraphEdge::Up { to, .. } => Some(GraphEdge::Horizontal { level: Level::Upper, from: to, to: n - to }),
        }
    }

    /// The edge preceding `e` in an alternating path, if any.
    fn predecessor(&self, e: GraphEdge) -> Option<GraphEdge> {
        let (n, p) = (self.n, self.pair());
        match e {
            GraphEdge::Horizontal { level: Level::Upper, from, .. } => {
                p.col.gamma(from).map(|a| GraphEdge::Up { from: a, to: from })
            }
            GraphEdge::Horizontal { level: Level::Lower, from, .. } => {
                p.row.gamma_inv(from).map(|a| GraphEdge::Down { from: a, to: from })
            }
            GraphEdge::Down { from, .. } => Some(GraphEdge::Horizontal { level: Level::Upper, from: n - from, to: from }),
            GraphEdge::Up { from, .. } => Some(GraphEdge::Horizontal { level: Level::Lower, from: n - from, to: from }),
        }
    }

    /// Splits the edge set into maximal alternating paths and cycles.
    pub fn decompose(&self) -> PathDecomposition {
        let mut seen = BTreeSet::new();
        let mut paths = Vec::new();
        let mut cycles = Vec::new();
        for &e in self.edges.iter().filter(|e| e.is_horizontal()) {
            if seen.contains(&e) {
                continue;
            }
            let mut start = e;
            let mut cyclic = false;
            while let Some(p) = self.predecessor(start) {
                start = p;
                if start == e {
                    cyclic = true;
                    break;
                }
            }
            let mut seq = vec![start];
            seen.insert(start);
            let mut cur = start;
            while let Some(next) = self.successor(cur) {
                if next == start {
                    break;
                }
                seq.push(next);
                seen.insert(next);
                cur = next;
            }
            if cyclic {
                cycles.push(AlternatingPath { edges: seq });
            } else {
                paths.push(AlternatingPath { edges: seq });
            }
        }
        paths.sort_by_key(|p| p.vertices());
        cycles.sort_by_key(|p| p.vertices());
        PathDecomposition { paths, cycles }
    }

    pub fn to_dot(&self) -> String {
        self.decompose().to_dot(self.n)
    }
}

/// A maximal alternating path (or cycle) as its sequence of directed edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternatingPath {
    pub edges: Vec<GraphEdge>,
}

impl AlternatingPath {
    /// Vertex sequence; for a cycle the first vertex is repeated at the end.
    pub fn vertices(&self) -> Vec<GraphVertex> {
        let mut v: Vec<GraphVertex> = self.edges.iter().map(GraphEdge::source).collect();
        if let Some(last) = self.edges.last() {
            v.push(last.target());
        }
        v
    }

    /// The same vertex sequence traversed backwards.
    pub fn reversed(&self) -> Vec<GraphVertex> {
        let mut v = self.vertices();
        v.reverse();
        v
    }

    pub fn horizontal_edges(&self) -> impl Iterator<Item = (usize, &GraphEdge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_horizontal())
    }
}

impl fmt::Display for AlternatingPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.vertices().iter().map(ToString::to_string).collect();
        write!(f, "{}", v.join("·"))
    }
}

/// Maximal alternating paths and alternating cycles of a pair graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub paths: Vec<AlternatingPath>,
    pub cycles: Vec<AlternatingPath>,
}

impl PathDecomposition {
    pub fn is_aperiodic(&self) -> bool {
        self.cycles.is_empty()
    }

    /// DOT rendering with one colour per path and cycles drawn bold red.
    pub fn to_dot(&self, n: usize) -> String {
        const COLORS: [&str; 8] = ["blue", "darkgreen", "orange", "purple", "brown", "teal", "magenta", "olive"];
        let mut s = String::from("digraph pairgraph {\n  rankdir=TB;\n");
        for (level, tag) in [(Level::Upper, "u"), (Level::Lower, "l")] {
            let _ = writeln!(s, "  subgraph {{ rank=same;");
            for i in 1..n {
                let v = GraphVertex { level, root: i };
                let _ = writeln!(s, "    {tag}{i} [label=\"{v}\"];");
            }
            let _ = writeln!(s, "  }}");
        }
        let name = |v: GraphVertex| match v.level {
            Level::Upper => format!("u{}", v.root),
            Level::Lower => format!("l{}", v.root),
        };
        let groups = self
            .paths
            .iter()
            .enumerate()
            .map(|(k, p)| (p, COLORS[k % COLORS.len()], false))
            .chain(self.cycles.iter().map(|c| (c, "red", true)));
        for (path, color, cyc) in groups {
            for e in &path.edges {
                let style = if cyc { ", style=bold" } else { "" };
                let _ = writeln!(s, "  {} -> {} [color={color}{style}];", name(e.source()), name(e.target()));
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: &PathDecomposition) -> Vec<String> {
        d.paths.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn validation_examples() {
        assert!(BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).is_ok());
        assert!(BdTriple::new(5, &[]).is_ok());
        assert_eq!(BdTriple::new(4, &[(1, 1)]), Err(BdError::NotNilpotent { root: 1 }));
        assert_eq!(BdTriple::new(4, &[(1, 3), (3, 1)]), Err(BdError::NotNilpotent { root: 1 }));
        assert!(matches!(BdTriple::new(4, &[(1, 3), (2, 3)]), Err(BdError::NotInjective { .. })));
        assert!(matches!(BdTriple::new(4, &[(4, 1)]), Err(BdError::RootOutOfRange { .. })));
        assert!(matches!(BdTriple::new(5, &[(1, 3), (2, 1)]), Err(BdError::NotOriented { .. })));
        assert!(matches!(BdTriple::new(4, &[(1, 2), (3, 1)]), Err(BdError::NotIsometry { .. })));
    }

    #[test]
    fn runs_of_seven() {
        let t = BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).unwrap();
        assert_eq!(t.x_runs(), vec![(1, 3), (4, 5), (6, 6), (7, 7)]);
        assert_eq!(t.y_runs(), vec![(1, 2), (3, 5), (6, 6), (7, 7)]);
        let r = t.runs();
        assert_eq!(r.run_bijection, vec![((1, 3), (3, 5)), ((4, 5), (1, 2))]);
        assert_eq!(BdTriple::trivial(5).x_runs().len(), 5);
    }

    #[test]
    fn opposite_swaps_runs() {
        let t = BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).unwrap();
        let o = t.opposite();
        assert_eq!(o.x_runs(), t.y_runs());
        assert_eq!(o.y_runs(), t.x_runs());
        assert_eq!(o.opposite(), t);
    }

    #[test]
    fn gl5_paths() {
        let p = BdPair::from_maps(5, &[(1, 2), (2, 3)], &[(1, 3), (2, 4)]).unwrap();
        let d = p.decompose();
        assert!(d.is_aperiodic());
        let mut got = names(&d);
        got.sort();
        let mut want = vec!["4·1·2'·3'·1·4", "3·2·3'·2'", "1'·4'·2·3", "4'·1'"];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn gl8_cycle() {
        let p = BdPair::from_maps(8, &[(2, 3), (6, 7)], &[(6, 1), (2, 5)]).unwrap();
        let d = p.decompose();
        assert!(!d.is_aperiodic());
        let trivial = names(&d);
        assert!(trivial.contains(&"1'·7'".to_string()) && trivial.contains(&"5'·3'".to_string()));
        let c = &d.cycles[0];
        // Compare as a cyclic edge sequence.
        let want = "6·2·3'·5'·2·6·7'·1'·6";
        let verts = c.vertices();
        let k = verts.len() - 1;
        let found = (0..k).any(|r| {
            let rot: Vec<String> = (0..=k).map(|i| verts[(i + r) % k].to_string()).collect();
            rot.join("·") == want
        });
        assert!(found, "cycle {c}");
    }

    #[test]
    fn trivial_pairs_have_single_edge_paths() {
        for n in 2..8 {
            let d = BdPair::trivial(n).decompose();
            assert!(d.is_aperiodic());
            assert!(d.paths.iter().all(|p| p.edges.len() == 1));
            assert_eq!(d.paths.len(), 2 * (n - 1));
        }
        let g = BdPair::trivial(4).graph();
        let loops = g.edges.iter().filter(|e| e.source() == e.target()).count();
        assert_eq!(loops, 2);
    }

    #[test]
    fn every_edge_used_once() {
        let p = BdPair::from_maps(7, &[(1, 3), (2, 4), (4, 1)], &[(1, 3), (2, 4), (4, 1)]).unwrap();
        let g = p.graph();
        let d = g.decompose();
        let mut used: Vec<GraphEdge> = d.paths.iter().chain(&d.cycles).flat_map(|p| p.edges.clone()).collect();
        used.sort();
        let mut all = g.edges.clone();
        all.sort();
        assert_eq!(used, all);
        assert_eq!(d.paths.len(), 6);
    }

    #[test]
    fn dot_mentions_all_vertices() {
        let dot = BdPair::trivial(3).graph().to_dot();
        for v in ["u1", "u2", "l1", "l2"] {
            assert!(dot.contains(v));
        }
    }

    #[test]
    fn serde_round_trip() {
        let p = BdPair::from_maps(5, &[(1, 2), (2, 3)], &[(1, 3), (2, 4)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: BdPair = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
