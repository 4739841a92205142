//! The initial seed: block matrices `L` glued along alternating paths, the
//! bijection from off-diagonal vertices to their diagonal cells, the seed
//! functions `f_ij` as trailing principal minors, their gradients, and the
//! frozen subset.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd_core::{AlternatingPath, BdPair, GraphEdge, Level};
use crate::exactlin::{adjugate_fast, det, Rational, RationalMatrix};
use crate::sample::Sampler;

/// A vertex `(i, j)` of the `n x n` grid, 1-based.
pub type Vertex = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeedError {
    #[error("pair is periodic: the graph contains an alternating cycle")]
    PeriodicPair,
    #[error("expected {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension { expected: usize, rows: usize, cols: usize },
    #[error("({0}, {1}) is not a vertex")]
    NotAVertex(usize, usize),
    #[error("malformed block layout: {0}")]
    Layout(String),
}

/// Which of the two matrix variables an entry comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    X,
    Y,
}

/// A source entry `x_ij` or `y_ij`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub source: Source,
    pub row: usize,
    pub col: usize,
}

/// Selects `f_ii^<` (built from `X`) or `f_ii^>` (built from `Y`) on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DiagChoice {
    #[default]
    Less,
    Greater,
}

/// One block `X_I^J` or `Y_Ī^J̄` of an `L` matrix and where it sits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: Source,
    /// Source interval of rows, inclusive.
    pub source_rows: (usize, usize),
    /// Source interval of columns, inclusive.
    pub source_cols: (usize, usize),
    /// Rows of `L` covered by the block, inclusive.
    pub placement_rows: (usize, usize),
    /// Columns of `L` covered by the block, inclusive.
    pub placement_cols: (usize, usize),
    /// Source cell that lands on the main diagonal.
    pub exit_point: (usize, usize),
}

impl BlockSpec {
    fn row_offset(&self) -> isize {
        self.placement_rows.0 as isize - self.source_rows.0 as isize
    }

    fn col_offset(&self) -> isize {
        self.placement_cols.0 as isize - self.source_cols.0 as isize
    }
}

/// A square block template together with its cell-to-entry occurrence map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LMatrix {
    pub size: usize,
    pub blocks: Vec<BlockSpec>,
    pub path: AlternatingPath,
    /// Row-major `size x size` occurrence map; `None` marks a structural zero.
    occurrence: Vec<Option<Entry>>,
}

impl LMatrix {
    /// Glues the blocks defined by the horizontal edges of `path`.
    pub fn assemble(pair: &BdPair, path: &AlternatingPath) -> Result<Self, SeedError> {
        let n = pair.n();
        struct Raw {
            kind: Source,
            rows: (usize, usize),
            cols: (usize, usize),
            exit: (usize, usize),
            ro: isize,
            co: isize,
        }
        let mut raw: Vec<Raw> = Vec::new();
        for (idx, e) in path.horizontal_edges() {
            let GraphEdge::Horizontal { level, from: i, .. } = *e else { unreachable!() };
            let mut b = match level {
                Level::Upper => Raw {
                    kind: Source::X,
                    rows: (pair.row.x_run(n - i + 1).0, n),
                    cols: (1, pair.col.x_run(i).1),
                    exit: (n - i + 1, 1),
                    ro: 0,
                    co: 0,
                },
                Level::Lower => Raw {
                    kind: Source::Y,
                    rows: (1, pair.row.y_run(i).1),
                    cols: (pair.col.y_run(n - i + 1).0, n),
                    exit: (1, n - i + 1),
                    ro: 0,
                    co: 0,
                },
            };
            if let Some(prev) = raw.last() {
                let n = n as isize;
                match (path.edges.get(idx.wrapping_sub(1)), b.kind) {
                    (Some(&GraphEdge::Down { from, to }), Source::Y) => {
                        b.ro = from as isize + prev.ro - to as isize;
                        b.co = prev.co - n;
                    }
                    (Some(&GraphEdge::Up { from, to }), Source::X) => {
                        b.ro = prev.ro - n;
                        b.co = from as isize + prev.co - to as isize;
                    }
                    _ => return Err(SeedError::Layout("horizontal edges must alternate with inclined ones".into())),
                }
            }
            raw.push(b);
        }
        if raw.is_empty() {
            return Err(SeedError::Layout("path without horizontal edges".into()));
        }
        let rmin = raw.iter().map(|b| b.rows.0 as isize + b.ro).min().unwrap();
        let cmin = raw.iter().map(|b| b.cols.0 as isize + b.co).min().unwrap();
        for b in &mut raw {
            b.ro -= rmin - 1;
            b.co -= cmin - 1;
        }
        let size = raw.iter().map(|b| b.rows.1 as isize + b.ro).max().unwrap() as usize;
        let width = raw.iter().map(|b| b.cols.1 as isize + b.co).max().unwrap() as usize;
        if size != width {
            return Err(SeedError::Layout(format!("glued matrix is {size}x{width}")));
        }
        let place = |v: usize, off: isize| (v as isize + off) as usize;
        let blocks: Vec<BlockSpec> = raw
            .iter()
            .map(|b| BlockSpec {
                kind: b.kind,
                source_rows: b.rows,
                source_cols: b.cols,
                placement_rows: (place(b.rows.0, b.ro), place(b.rows.1, b.ro)),
                placement_cols: (place(b.cols.0, b.co), place(b.cols.1, b.co)),
                exit_point: b.exit,
            })
            .collect();
        let mut occurrence = vec![None; size * size];
        for b in &blocks {
            let (ro, co) = (b.row_offset(), b.col_offset());
            if place(b.exit_point.0, ro) != place(b.exit_point.1, co) {
                return Err(SeedError::Layout("exit point off the diagonal".into()));
            }
            for r in b.source_rows.0..=b.source_rows.1 {
                for c in b.source_cols.0..=b.source_cols.1 {
                    let cell = (place(r, ro) - 1) * size + place(c, co) - 1;
                    let entry = Entry { source: b.kind, row: r, col: c };
                    match occurrence[cell] {
                        Some(old) if old != entry => {
                            return Err(SeedError::Layout("blocks overlap inconsistently".into()))
                        }
                        _ => occurrence[cell] = Some(entry),
                    }
                }
            }
        }
        Ok(Self { size, blocks, path: path.clone(), occurrence })
    }

    /// Source entry at the 1-based cell `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> Option<Entry> {
        self.occurrence[(r - 1) * self.size + c - 1]
    }

    /// Source entries along the main diagonal.
    pub fn diagonal(&self) -> Vec<Entry> {
        (1..=self.size).map(|d| self.entry(d, d).expect("diagonal cells are occupied")).collect()
    }

    /// Occupied cells `((r, c), entry)`, 1-based.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), Entry)> + '_ {
        self.occurrence
            .iter()
            .enumerate()
            .filter_map(move |(k, e)| e.map(|e| ((k / self.size + 1, k % self.size + 1), e)))
    }

    /// `L(X, Y)`.
    pub fn instantiate(&self, x: &RationalMatrix, y: &RationalMatrix) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(self.size, self.size);
        for ((r, c), e) in self.cells() {
            let src = match e.source {
                Source::X => x,
                Source::Y => y,
            };
            m[(r - 1, c - 1)] = src[(e.row - 1, e.col - 1)].clone();
        }
        m
    }
}

/// Where a seed function lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionLoc {
    /// Trailing minor of `L` number `l` starting at index `s`.
    Block { l: usize, s: usize },
    /// `det X_{[i,n]}^{[i,n]}` or its `Y` counterpart.
    Diagonal { i: usize },
}

/// `(1,1)`, `(1,j)` with `j-1 ∉ Γ2^c`, and `(i,1)` with `i-1 ∉ Γ1^r`.
pub fn frozen_set(pair: &BdPair) -> BTreeSet<Vertex> {
    let n = pair.n();
    let mut frozen = BTreeSet::from([(1, 1)]);
    for j in 2..=n {
        if !pair.col.in_gamma2(j - 1) {
            frozen.insert((1, j));
        }
    }
    for i in 2..=n {
        if !pair.row.in_gamma1(i - 1) {
            frozen.insert((i, 1));
        }
    }
    frozen
}

/// The initial seed attached to an aperiodic pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSeed {
    pub pair: BdPair,
    pub l_matrices: Vec<LMatrix>,
    index: BTreeMap<Vertex, (usize, usize)>,
    frozen: BTreeSet<Vertex>,
}

impl ClusterSeed {
    pub fn build(pair: &BdPair) -> Result<Self, SeedError> {
        let n = pair.n();
        let decomposition = pair.decompose();
        if !decomposition.is_aperiodic() {
            return Err(SeedError::PeriodicPair);
        }
        let l_matrices =
            decomposition.paths.iter().map(|p| LMatrix::assemble(pair, p)).collect::<Result<Vec<_>, _>>()?;
        let mut index = BTreeMap::new();
        for (l, m) in l_matrices.iter().enumerate() {
            for d in 0..m.size {
                let e = m.entry(d + 1, d + 1).ok_or_else(|| SeedError::Layout("empty diagonal cell".into()))?;
                let ok = match e.source {
                    Source::X => e.row > e.col,
                    Source::Y => e.row < e.col,
                };
                if !ok {
                    return Err(SeedError::Layout(format!("diagonal carries {:?}", e)));
                }
                if index.insert((e.row, e.col), (l, d + 1)).is_some() {
                    return Err(SeedError::Layout(format!("({}, {}) appears twice on diagonals", e.row, e.col)));
                }
            }
        }
        if index.len() != n * n - n {
            return Err(SeedError::Layout(format!("{} of {} off-diagonal vertices covered", index.len(), n * n - n)));
        }
        Ok(Self { pair: pair.clone(), l_matrices, index, frozen: frozen_set(pair) })
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    /// All vertices in row-major order.
    pub fn vertices(&self) -> Vec<Vertex> {
        let n = self.n();
        (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j))).collect()
    }

    pub fn frozen(&self) -> &BTreeSet<Vertex> {
        &self.frozen
    }

    pub fn is_frozen(&self, v: Vertex) -> bool {
        self.frozen.contains(&v)
    }

    pub fn mutable(&self) -> Vec<Vertex> {
        self.vertices().into_iter().filter(|v| !self.is_frozen(*v)).collect()
    }

    /// Row-major mutable vertices followed by row-major frozen ones.
    pub fn ordering(&self) -> Vec<Vertex> {
        let mut v = self.mutable();
        v.extend(self.frozen.iter().copied());
        v
    }

    pub fn locate(&self, v: Vertex) -> Result<FunctionLoc, SeedError> {
        let n = self.n();
        if v.0 == 0 || v.1 == 0 || v.0 > n || v.1 > n {
            return Err(SeedError::NotAVertex(v.0, v.1));
        }
        if v.0 == v.1 {
            return Ok(FunctionLoc::Diagonal { i: v.0 });
        }
        let (l, s) = self.index[&v];
        Ok(FunctionLoc::Block { l, s })
    }

    /// The pair `(L-id, s)` of an off-diagonal vertex.
    pub fn index_of(&self, v: Vertex) -> Option<(usize, usize)> {
        self.index.get(&v).copied()
    }

    /// Total degree `N(L) - s + 1` (or `n - i + 1` on the diagonal).
    pub fn degree(&self, v: Vertex) -> usize {
        match self.locate(v).expect("valid vertex") {
            FunctionLoc::Block { l, s } => self.l_matrices[l].size - s + 1,
            FunctionLoc::Diagonal { i } => self.n() - i + 1,
        }
    }

    fn check(&self, m: &RationalMatrix) -> Result<(), SeedError> {
        let n = self.n();
        if m.rows() != n || m.cols() != n {
            return Err(SeedError::Dimension { expected: n, rows: m.rows(), cols: m.cols() });
        }
        Ok(())
    }

    /// The square matrix whose trailing minor at the returned index is `f_v`,
    /// together with that index: `(L(X, Y), s)` off the diagonal, `(X, i)` or
    /// `(Y, i)` on it.
    pub fn representation(
        &self,
        v: Vertex,
        x: &RationalMatrix,
        y: Option<&RationalMatrix>,
        diag: DiagChoice,
    ) -> Result<(RationalMatrix, usize), SeedError> {
        self.check(x)?;
        let y = y.unwrap_or(x);
        self.check(y)?;
        Ok(match self.locate(v)? {
            FunctionLoc::Block { l, s } => (self.l_matrices[l].instantiate(x, y), s),
            FunctionLoc::Diagonal { i } => match diag {
                DiagChoice::Less => (x.clone(), i),
                DiagChoice::Greater => (y.clone(), i),
            },
        })
    }

    /// `f_v(X, Y)`; with `y = None` this is the restriction to `X = Y`.
    pub fn evaluate(
        &self,
        v: Vertex,
        x: &RationalMatrix,
        y: Option<&RationalMatrix>,
        diag: DiagChoice,
    ) -> Result<Rational, SeedError> {
        let (m, s) = self.representation(v, x, y, diag)?;
        let k = m.rows() - s + 1;
        Ok(det(&m.block(s - 1, s - 1, k, k)).expect("square"))
    }

    /// `f_v(X)` on the diagonal `X = Y`.
    pub fn f(&self, v: Vertex, x: &RationalMatrix) -> Rational {
        self.evaluate(v, x, None, DiagChoice::Less).expect("valid input")
    }

    /// All seed values at `X` in row-major vertex order.
    pub fn values(&self, x: &RationalMatrix) -> Vec<Rational> {
        self.vertices().into_iter().map(|v| self.f(v, x)).collect()
    }

    /// `(∇_X f, ∇_Y f)` where `(∇_X f)_{ba} = ∂f/∂x_{ab}`.
    pub fn gradient(
        &self,
        v: Vertex,
        x: &RationalMatrix,
        y: Option<&RationalMatrix>,
        diag: DiagChoice,
    ) -> Result<(RationalMatrix, RationalMatrix), SeedError> {
        let n = self.n();
        let (m, s) = self.representation(v, x, y, diag)?;
        let k = m.rows() - s + 1;
        let adj = adjugate_fast(&m.block(s - 1, s - 1, k, k)).expect("square");
        let mut gx = RationalMatrix::zeros(n, n);
        let mut gy = RationalMatrix::zeros(n, n);
        match self.locate(v)? {
            FunctionLoc::Diagonal { i } => {
                let g = match diag {
                    DiagChoice::Less => &mut gx,
                    DiagChoice::Greater => &mut gy,
                };
                for r in 0..k {
                    for c in 0..k {
                        g[(c + i - 1, r + i - 1)] = adj[(c, r)].clone();
                    }
                }
            }
            FunctionLoc::Block { l, .. } => {
                for ((r, c), e) in self.l_matrices[l].cells() {
                    if r < s || c < s {
                        continue;
                    }
                    let a = &adj[(c - s, r - s)];
                    if a.is_zero() {
                        continue;
                    }
                    let g = match e.source {
                        Source::X => &mut gx,
                        Source::Y => &mut gy,
                    };
                    g[(e.col - 1, e.row - 1)] += a;
                }
            }
        }
        Ok((gx, gy))
    }

    /// Gradient of the restriction `f(X) = f(X, X)`.
    pub fn matn_gradient(&self, v: Vertex, x: &RationalMatrix) -> RationalMatrix {
        let (gx, gy) = self.gradient(v, x, None, DiagChoice::Less).expect("valid input");
        &gx + &gy
    }

    /// Draws `count` random integer points at which every seed function is
    /// nonzero, resampling up to `max_tries` times per point.
    pub fn generic_points(&self, sampler: &mut Sampler, count: usize, max_tries: usize) -> Option<Vec<RationalMatrix>> {
        let n = self.n();
        (0..count)
            .map(|_| {
                (0..max_tries)
                    .map(|_| sampler.square(n))
                    .find(|x| self.vertices().into_iter().all(|v| !self.f(v, x).is_zero()))
            })
            .collect()
    }

    /// Serializable description of the seed.
    pub fn summary(&self) -> SeedSummary {
        SeedSummary {
            pair: self.pair.clone(),
            l_matrices: self
                .l_matrices
                .iter()
                .map(|m| LSummary { size: m.size, path: m.path.to_string(), blocks: m.blocks.clone() })
                .collect(),
            vertices: self
                .vertices()
                .into_iter()
                .map(|v| VertexSummary {
                    vertex: v,
                    location: self.locate(v).expect("valid vertex"),
                    frozen: self.is_frozen(v),
                    degree: self.degree(v),
                })
                .collect(),
        }
    }
}

/// JSON view of a seed: blocks per `L`, location, frozen flag and degree per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub pair: BdPair,
    pub l_matrices: Vec<LSummary>,
    pub vertices: Vec<VertexSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LSummary {
    pub size: usize,
    pub path: String,
    pub blocks: Vec<BlockSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSummary {
    pub vertex: Vertex,
    pub location: FunctionLoc,
    pub frozen: bool,
    pub degree: usize,
}

impl ClusterSeed {
    /// Rebuilds the seed from the pair in `summary` and checks that the
    /// summary describes it.
    pub fn from_summary(summary: &SeedSummary) -> Result<Self, SeedError> {
        let seed = Self::build(&summary.pair)?;
        if &seed.summary() != summary {
            return Err(SeedError::Layout("summary does not match the seed of its pair".into()));
        }
        Ok(seed)
    }
}
