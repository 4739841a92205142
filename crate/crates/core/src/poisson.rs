//! The maps `γ`, `γ*` on `gl_n`, the operator `R₊` of a BD triple, the
//! bracket on the double `GL_n × GL_n`, its restriction to `X = Y`, and the
//! matrix `Ω` of log-bracket constants of a seed.

use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd_core::{BdPair, BdTriple};
use crate::exactlin::{adjugate_fast, frac, inverse, rat, Rational, RationalMatrix};
use crate::seed_builder::{ClusterSeed, DiagChoice, SeedError, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoissonError {
    #[error("log-bracket of {u:?} and {v:?} differs between sample points {p} and {q}")]
    NotLogCanonical { u: Vertex, v: Vertex, p: usize, q: usize },
    #[error("seed function {vertex:?} vanishes at sample point {point}")]
    ZeroFunctionAtPoint { vertex: Vertex, point: usize },
    #[error("need at least two sample points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

/// Traceless (`sl_n`) or ringed (`gl_n` blocks kept whole) variant of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaVariant {
    Traceless,
    Ringed,
}

/// Forward `γ` (X-runs to Y-runs) or its adjoint `γ*` (Y-runs back).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Adjoint,
}

/// `γ` of a triple extended to `gl_n`: project to the run blocks and move them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaOperator {
    pub triple: BdTriple,
    pub variant: GammaVariant,
}

impl GammaOperator {
    pub fn new(triple: BdTriple, variant: GammaVariant) -> Self {
        Self { triple, variant }
    }

    /// `(source run start, target run start, length)` for each moved block.
    fn moves(&self, dir: Direction) -> Vec<(usize, usize, usize)> {
        let t = &self.triple;
        let runs = match dir {
            Direction::Forward => t.x_runs(),
            Direction::Adjoint => t.y_runs(),
        };
        runs.into_iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| {
                let target = match dir {
                    Direction::Forward => t.gamma(a),
                    Direction::Adjoint => t.gamma_inv(a),
                };
                (a, target.expect("nontrivial run starts in the domain"), b - a + 1)
            })
            .collect()
    }

    pub fn apply(&self, z: &RationalMatrix, dir: Direction) -> RationalMatrix {
        let n = self.triple.n();
        let mut out = RationalMatrix::zeros(n, n);
        for (a, c, k) in self.moves(dir) {
            let shift = match self.variant {
                GammaVariant::Traceless => (0..k).map(|i| z[(a - 1 + i, a - 1 + i)].clone()).sum::<Rational>() / rat(k as i64),
                GammaVariant::Ringed => Rational::zero(),
            };
            for i in 0..k {
                for j in 0..k {
                    let mut v = z[(a - 1 + i, a - 1 + j)].clone();
                    if i == j {
                        v -= &shift;
                    }
                    out[(c - 1 + i, c - 1 + j)] += v;
                }
            }
        }
        out
    }

    /// Matrix of `γ` restricted to diagonal matrices, acting on the vector of
    /// diagonal entries.
    fn diagonal_matrix(&self, dir: Direction) -> RationalMatrix {
        let n = self.triple.n();
        let mut g = RationalMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = RationalMatrix::zeros(n, n);
            e[(j, j)] = Rational::one();
            let img = self.apply(&e, dir);
            for i in 0..n {
                g[(i, j)] = img[(i, i)].clone();
            }
        }
        g
    }
}

/// `(1 - γ)⁻¹` on `gl_n`. Off the diagonal `γ` is nilpotent and the Neumann
/// series terminates; on the diagonal the traceless `γ` need not be
/// nilpotent (for `n = 3`, `1 ↦ 2` it sends `h₂` to `-h₂/2`), so that part
/// uses the exact inverse of `1 - γ|_h`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    gamma: GammaOperator,
    dir: Direction,
    diagonal_inverse: RationalMatrix,
}

impl Resolvent {
    pub fn new(gamma: GammaOperator, dir: Direction) -> Self {
        let n = gamma.triple.n();
        let g = gamma.diagonal_matrix(dir);
        let diagonal_inverse = inverse(&(&RationalMatrix::identity(n) - &g)).expect("1 - γ is invertible on h");
        Self { gamma, dir, diagonal_inverse }
    }

    pub fn apply(&self, z: &RationalMatrix) -> RationalMatrix {
        let n = z.rows();
        let mut off = z.clone();
        for i in 0..n {
            off[(i, i)] = Rational::zero();
        }
        let mut acc = off.clone();
        let mut cur = off;
        while !cur.is_zero() {
            cur = self.gamma.apply(&cur, self.dir);
            acc = &acc + &cur;
        }
        for i in 0..n {
            let mut s = Rational::zero();
            for j in 0..n {
                let d = &z[(j, j)];
                if !d.is_zero() {
                    s += &self.diagonal_inverse[(i, j)] * d;
                }
            }
            acc[(i, i)] += s;
        }
        acc
    }
}

fn strict_upper(z: &RationalMatrix) -> RationalMatrix {
    RationalMatrix::from_fn(z.rows(), z.cols(), |i, j| if i < j { z[(i, j)].clone() } else { Rational::zero() })
}

fn strict_lower(z: &RationalMatrix) -> RationalMatrix {
    RationalMatrix::from_fn(z.rows(), z.cols(), |i, j| if i > j { z[(i, j)].clone() } else { Rational::zero() })
}

fn diagonal_part(z: &RationalMatrix) -> RationalMatrix {
    RationalMatrix::from_fn(z.rows(), z.cols(), |i, j| if i == j { z[(i, j)].clone() } else { Rational::zero() })
}

/// The operator `R₊` attached to one triple.
#[derive(Debug, Clone)]
pub struct RPlus {
    gamma: GammaOperator,
    forward: Resolvent,
    adjoint: Resolvent,
    s_matrix: RationalMatrix,
}

impl RPlus {
    pub fn new(triple: &BdTriple) -> Self {
        let gamma = GammaOperator::new(triple.clone(), GammaVariant::Traceless);
        let forward = Resolvent::new(gamma.clone(), Direction::Forward);
        let adjoint = Resolvent::new(gamma.clone(), Direction::Adjoint);
        let n = triple.n();
        let id = RationalMatrix::identity(n);
        let s_matrix = (&forward.apply(&id) - &adjoint.apply(&id)).scale(&frac(1, 2));
        Self { gamma, forward, adjoint, s_matrix }
    }

    /// The diagonal matrix `𝐒 = ½((1-γ)⁻¹ - (1-γ*)⁻¹)𝟙`.
    pub fn s_matrix(&self) -> &RationalMatrix {
        &self.s_matrix
    }

    /// The operator `S = ½((1-γ)⁻¹ - (1-γ*)⁻¹)` on a diagonal matrix.
    pub fn s_operator(&self, h: &RationalMatrix) -> RationalMatrix {
        diagonal_part(&(&self.forward.apply(h) - &self.adjoint.apply(h)).scale(&frac(1, 2)))
    }

    pub fn apply(&self, z: &RationalMatrix) -> RationalMatrix {
        let n = z.rows();
        let d = diagonal_part(z);
        let ge = &strict_upper(z) + &d;
        let a = self.forward.apply(&ge);
        let b = self.gamma.apply(&self.adjoint.apply(&strict_lower(z)), Direction::Adjoint);
        let c = &self.gamma.apply(&self.forward.apply(&d), Direction::Forward) + &self.adjoint.apply(&d);
        let mut out = &(&a - &b) - &c.scale(&frac(1, 2));
        let trace = z.trace();
        let trace_s = z.trace_pairing(&self.s_matrix);
        let corr = &self.s_matrix.scale(&trace) - &RationalMatrix::identity(n).scale(&trace_s);
        out = &out - &corr.scale(&frac(1, n as i64));
        out
    }
}

/// A function on the double given by its gradients `(∇_X f, ∇_Y f)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grad {
    pub x: RationalMatrix,
    pub y: RationalMatrix,
}

impl Grad {
    pub fn new(x: RationalMatrix, y: RationalMatrix) -> Self {
        Self { x, y }
    }

    /// The lift `f(X, Y) := f(X)` of a function of `X` alone.
    pub fn x_only(x: RationalMatrix) -> Self {
        let n = x.rows();
        Self { x, y: RationalMatrix::zeros(n, n) }
    }

    /// The lift `f(X, Y) := f(Y)`.
    pub fn y_only(y: RationalMatrix) -> Self {
        let n = y.rows();
        Self { x: RationalMatrix::zeros(n, n), y }
    }
}

/// A function on the double that brackets can be taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionRef {
    /// A seed function; on the diagonal the choice picks `f^<` or `f^>`.
    Cluster(Vertex, DiagChoice),
    /// The coordinate `x_ab`, 1-based.
    XEntry(usize, usize),
    /// The coordinate `y_ab`, 1-based.
    YEntry(usize, usize),
    /// `det X`.
    DetX,
}

impl fmt::Display for FunctionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionRef::Cluster((i, j), _) => write!(f, "f_{i}{j}"),
            FunctionRef::XEntry(a, b) => write!(f, "x_{a}{b}"),
            FunctionRef::YEntry(a, b) => write!(f, "y_{a}{b}"),
            FunctionRef::DetX => write!(f, "det X"),
        }
    }
}

/// Single unit at `(b, a)`: the gradient of the coordinate `x_ab`.
pub fn coordinate_gradient(n: usize, a: usize, b: usize) -> RationalMatrix {
    let mut g = RationalMatrix::zeros(n, n);
    g[(b - 1, a - 1)] = Rational::one();
    g
}

/// Gradients of a function on the double at `(X, Y)`.
pub fn gradient_of(seed: &ClusterSeed, u: FunctionRef, x: &RationalMatrix, y: &RationalMatrix) -> Result<Grad, SeedError> {
    let n = seed.n();
    Ok(match u {
        FunctionRef::Cluster(v, diag) => {
            let (gx, gy) = seed.gradient(v, x, Some(y), diag)?;
            Grad::new(gx, gy)
        }
        FunctionRef::XEntry(a, b) => Grad::x_only(coordinate_gradient(n, a, b)),
        FunctionRef::YEntry(a, b) => Grad::y_only(coordinate_gradient(n, a, b)),
        FunctionRef::DetX => Grad::x_only(adjugate_fast(x).expect("square")),
    })
}

/// Gradient of the `Y`-independent lift of the restriction of `u` to `X = Y`.
pub fn matn_gradient_of(seed: &ClusterSeed, u: FunctionRef, x: &RationalMatrix) -> Result<Grad, SeedError> {
    let g = gradient_of(seed, u, x, x)?;
    Ok(Grad::x_only(&g.x + &g.y))
}

/// Everything about one function that the bracket needs, so that pairing
/// two prepared functions costs only trace products.
#[derive(Debug, Clone)]
pub struct Prepared {
    el: RationalMatrix,
    er: RationalMatrix,
    rc_el: RationalMatrix,
    rr_er: RationalMatrix,
    x_gx: RationalMatrix,
    gx_x: RationalMatrix,
    y_gy: RationalMatrix,
    gy_y: RationalMatrix,
}

/// The bracket on the double for a pair `(Γr, Γc)`: `R₊^c` acts on `E_L`
/// and `R₊^r` on `E_R`.
#[derive(Debug, Clone)]
pub struct PoissonStructure {
    pub pair: BdPair,
    pub r_row: RPlus,
    pub r_col: RPlus,
}

impl PoissonStructure {
    pub fn new(pair: &BdPair) -> Self {
        Self { pair: pair.clone(), r_row: RPlus::new(&pair.row), r_col: RPlus::new(&pair.col) }
    }

    pub fn prepare(&self, g: &Grad, x: &RationalMatrix, y: &RationalMatrix) -> Prepared {
        let gx_x = &g.x * x;
        let gy_y = &g.y * y;
        let x_gx = x * &g.x;
        let y_gy = y * &g.y;
        let el = &gx_x + &gy_y;
        let er = &x_gx + &y_gy;
        let rc_el = self.r_col.apply(&el);
        let rr_er = self.r_row.apply(&er);
        Prepared { el, er, rc_el, rr_er, x_gx, gx_x, y_gy, gy_y }
    }

    pub fn pair_prepared(p1: &Prepared, p2: &Prepared) -> Rational {
        p1.rc_el.trace_pairing(&p2.el) - p1.rr_er.trace_pairing(&p2.er) + p1.x_gx.trace_pairing(&p2.y_gy)
            - p1.gx_x.trace_pairing(&p2.gy_y)
    }

    /// `{f¹, f²}^D(X, Y)` from gradients.
    pub fn bracket(&self, g1: &Grad, g2: &Grad, x: &RationalMatrix, y: &RationalMatrix) -> Rational {
        Self::pair_prepared(&self.prepare(g1, x, y), &self.prepare(g2, x, y))
    }

    pub fn double_bracket(
        &self,
        seed: &ClusterSeed,
        u: FunctionRef,
        v: FunctionRef,
        x: &RationalMatrix,
        y: &RationalMatrix,
    ) -> Result<Rational, SeedError> {
        Ok(self.bracket(&gradient_of(seed, u, x, y)?, &gradient_of(seed, v, x, y)?, x, y))
    }

    /// Bracket of two functions of `X` alone, via their `Y`-independent lifts at `(X, X)`.
    pub fn matn_bracket(&self, seed: &ClusterSeed, u: FunctionRef, v: FunctionRef, x: &RationalMatrix) -> Result<Rational, SeedError> {
        Ok(self.bracket(&matn_gradient_of(seed, u, x)?, &matn_gradient_of(seed, v, x)?, x, x))
    }
}

/// Constants `ω_uv = {f_u, f_v} / (f_u f_v)` in mutable-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaMatrix {
    pub ordering: Vec<Vertex>,
    pub entries: RationalMatrix,
}

impl OmegaMatrix {
    pub fn get(&self, u: Vertex, v: Vertex) -> Option<&Rational> {
        let i = self.ordering.iter().position(|&w| w == u)?;
        let j = self.ordering.iter().position(|&w| w == v)?;
        Some(&self.entries[(i, j)])
    }

    pub fn to_json(&self) -> OmegaJson {
        OmegaJson {
            ordering: self.ordering.clone(),
            entries: (0..self.entries.rows())
                .map(|i| self.entries.row(i).iter().map(ToString::to_string).collect())
                .collect(),
        }
    }
}

/// JSON form of `Ω`; rationals are `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaJson {
    pub ordering: Vec<Vertex>,
    pub entries: Vec<Vec<String>>,
}

/// `ω` at one point, in the seed's mutable-first ordering.
pub fn omega_at(
    ps: &PoissonStructure,
    seed: &ClusterSeed,
    x: &RationalMatrix,
    point: usize,
) -> Result<RationalMatrix, PoissonError> {
    let order = seed.ordering();
    let values: Vec<Rational> = order.iter().map(|&v| seed.f(v, x)).collect();
    if let Some(k) = values.iter().position(Zero::is_zero) {
        return Err(PoissonError::ZeroFunctionAtPoint { vertex: order[k], point });
    }
    let prepared: Vec<Prepared> = order
        .par_iter()
        .map(|&v| ps.prepare(&Grad::x_only(seed.matn_gradient(v, x)), x, x))
        .collect();
    let m = order.len();
    let rows: Vec<Vec<Rational>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        Rational::zero()
                    } else {
                        PoissonStructure::pair_prepared(&prepared[i], &prepared[j]) / (&values[i] * &values[j])
                    }
                })
                .collect()
        })
        .collect();
    Ok(RationalMatrix::from_entries(m, m, rows.into_iter().flatten().collect()).expect("square"))
}

/// `Ω`, checked to be the same at every sample point.
pub fn omega(seed: &ClusterSeed, points: &[RationalMatrix]) -> Result<OmegaMatrix, PoissonError> {
    if points.len() < 2 {
        return Err(PoissonError::TooFewPoints(points.len()));
    }
    let ps = PoissonStructure::new(&seed.pair);
    let ordering = seed.ordering();
    let first = omega_at(&ps, seed, &points[0], 0)?;
    for (p, x) in points.iter().enumerate().skip(1) {
        let other = omega_at(&ps, seed, x, p)?;
        for i in 0..ordering.len() {
            for j in 0..ordering.len() {
                if first[(i, j)] != other[(i, j)] {
                    return Err(PoissonError::NotLogCanonical { u: ordering[i], v: ordering[j], p: 0, q: p });
                }
            }
        }
    }
    Ok(OmegaMatrix { ordering, entries: first })
}

/// `exp(M)` for nilpotent `M` (finite series).
pub fn exp_nilpotent(m: &RationalMatrix) -> RationalMatrix {
    let n = m.rows();
    let mut acc = RationalMatrix::identity(n);
    let mut term = RationalMatrix::identity(n);
    for k in 1..=n {
        term = (&term * m).scale(&frac(1, k as i64));
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
    }
    acc
}

/// `log(U)` for unipotent `U` (finite series).
pub fn log_unipotent(u: &RationalMatrix) -> RationalMatrix {
    let n = u.rows();
    let m = u - &RationalMatrix::identity(n);
    let mut acc = RationalMatrix::zeros(n, n);
    let mut power = RationalMatrix::identity(n);
    for k in 1..=n {
        power = &power * &m;
        if power.is_zero() {
            break;
        }
        let term = power.scale(&frac(1, k as i64));
        acc = if k % 2 == 1 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// `exp(γ)(N) = exp(γ(log N))` for a unipotent triangular `N`.
pub fn gamma_group_unipotent(triple: &BdTriple, u: &RationalMatrix, dir: Direction) -> RationalMatrix {
    let g = GammaOperator::new(triple.clone(), GammaVariant::Ringed);
    exp_nilpotent(&g.apply(&log_unipotent(u), dir))
}

/// The ringed group map on invertible diagonal matrices: the entries of each
/// nontrivial run are moved to the image run, all other entries become 1.
pub fn gamma_group_diagonal(triple: &BdTriple, t: &RationalMatrix, dir: Direction) -> RationalMatrix {
    let n = triple.n();
    let g = GammaOperator::new(triple.clone(), GammaVariant::Ringed);
    let mut out = RationalMatrix::identity(n);
    for (a, c, k) in g.moves(dir) {
        for i in 0..k {
            out[(c - 1 + i, c - 1 + i)] = t[(a - 1 + i, a - 1 + i)].clone();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::det;
    use crate::sample::Sampler;
    use proptest::prelude::*;

    fn triples() -> Vec<BdTriple> {
        vec![
            BdTriple::trivial(3),
            BdTriple::new(3, &[(1, 2)]).unwrap(),
            BdTriple::cremmer_gervais(5),
            BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).unwrap(),
            BdTriple::new(5, &[(1, 3), (2, 4)]).unwrap(),
        ]
    }

    fn pi_block(t: &BdTriple, z: &RationalMatrix, runs: Vec<(usize, usize)>) -> RationalMatrix {
        // Traceless projection onto the nontrivial run blocks.
        let n = t.n();
        let mut out = RationalMatrix::zeros(n, n);
        for (a, b) in runs.into_iter().filter(|(a, b)| a < b) {
            let k = b - a + 1;
            let mean: Rational = (a..=b).map(|i| z[(i - 1, i - 1)].clone()).sum::<Rational>() / rat(k as i64);
            for i in a..=b {
                for j in a..=b {
                    out[(i - 1, j - 1)] = z[(i - 1, j - 1)].clone();
                }
                out[(i - 1, i - 1)] -= &mean;
            }
        }
        out
    }

    #[test]
    fn chevalley_generator_moves() {
        let t = BdTriple::new(3, &[(1, 2)]).unwrap();
        let g = GammaOperator::new(t, GammaVariant::Traceless);
        let mut e12 = RationalMatrix::zeros(3, 3);
        e12[(0, 1)] = rat(1);
        let mut e23 = RationalMatrix::zeros(3, 3);
        e23[(1, 2)] = rat(1);
        assert_eq!(g.apply(&e12, Direction::Forward), e23);
        assert_eq!(g.apply(&e23, Direction::Adjoint), e12);
    }

    #[test]
    fn trivial_gamma_is_zero_and_rplus_is_standard() {
        let t = BdTriple::trivial(4);
        let mut smp = Sampler::new(1, 9);
        let z = smp.square(4);
        assert!(GammaOperator::new(t.clone(), GammaVariant::Traceless).apply(&z, Direction::Forward).is_zero());
        let want = &strict_upper(&z) + &diagonal_part(&z).scale(&frac(1, 2));
        assert_eq!(RPlus::new(&t).apply(&z), want);
    }

    #[test]
    fn cartan_part_is_not_nilpotent() {
        // γ(h₂) = -h₂/2 for n = 3, 1 ↦ 2: no power of γ vanishes on h.
        let g = GammaOperator::new(BdTriple::new(3, &[(1, 2)]).unwrap(), GammaVariant::Traceless);
        let mut h = RationalMatrix::zeros(3, 3);
        h[(1, 1)] = rat(1);
        for _ in 0..10 {
            h = g.apply(&h, Direction::Forward);
            assert!(!h.is_zero());
        }
    }

    #[test]
    fn resolvent_inverts_one_minus_gamma() {
        for t in triples() {
            let n = t.n();
            let g = GammaOperator::new(t.clone(), GammaVariant::Traceless);
            let mut smp = Sampler::new(3, 9);
            let z = smp.square(n);
            for dir in [Direction::Forward, Direction::Adjoint] {
                let r = Resolvent::new(g.clone(), dir).apply(&z);
                assert_eq!(&r - &g.apply(&r, dir), z);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn gamma_identities(which in 0usize..5, s in any::<u64>()) {
            let t = triples()[which].clone();
            let g = GammaOperator::new(t.clone(), GammaVariant::Traceless);
            let z = Sampler::new(s, 9).square(t.n());
            let fwd = g.apply(&z, Direction::Forward);
            prop_assert_eq!(g.apply(&fwd, Direction::Adjoint), pi_block(&t, &z, t.x_runs()));
            prop_assert_eq!(g.apply(&g.apply(&z, Direction::Adjoint), Direction::Forward), pi_block(&t, &z, t.y_runs()));
            prop_assert_eq!(g.apply(&g.apply(&fwd, Direction::Adjoint), Direction::Forward), fwd);
        }

        #[test]
        fn gamma_adjoint_under_trace_form(which in 0usize..5, s in any::<u64>()) {
            let t = triples()[which].clone();
            let g = GammaOperator::new(t.clone(), GammaVariant::Traceless);
            let mut smp = Sampler::new(s, 9);
            let (a, b) = (smp.square(t.n()), smp.square(t.n()));
            prop_assert_eq!(
                g.apply(&a, Direction::Forward).trace_pairing(&b),
                a.trace_pairing(&g.apply(&b, Direction::Adjoint))
            );
        }

        #[test]
        fn s_is_skew_on_diagonal(which in 0usize..5, s in any::<u64>()) {
            let t = triples()[which].clone();
            let r = RPlus::new(&t);
            let mut smp = Sampler::new(s, 9);
            let h1 = diagonal_part(&smp.square(t.n()));
            let h2 = diagonal_part(&smp.square(t.n()));
            prop_assert_eq!(r.s_operator(&h1).trace_pairing(&h2), -h1.trace_pairing(&r.s_operator(&h2)));
        }

        #[test]
        fn rplus_linear_and_identity_eigenvector(which in 0usize..5, s in any::<u64>(), a in -5i64..5, b in -5i64..5) {
            let t = triples()[which].clone();
            let r = RPlus::new(&t);
            let n = t.n();
            let mut smp = Sampler::new(s, 9);
            let (z, w) = (smp.square(n), smp.square(n));
            let lhs = r.apply(&(&z.scale(&rat(a)) + &w.scale(&rat(b))));
            let rhs = &r.apply(&z).scale(&rat(a)) + &r.apply(&w).scale(&rat(b));
            prop_assert_eq!(lhs, rhs);
            let img = r.apply(&RationalMatrix::identity(n));
            let c = img[(0, 0)].clone();
            prop_assert_eq!(img, RationalMatrix::identity(n).scale(&c));
        }
    }

    fn gl5() -> BdPair {
        BdPair::from_maps(5, &[(1, 2), (2, 3)], &[(1, 3), (2, 4)]).unwrap()
    }

    #[test]
    fn bracket_is_skew_and_vanishes_on_diagonal() {
        let pair = gl5();
        let seed = ClusterSeed::build(&pair).unwrap();
        let ps = PoissonStructure::new(&pair);
        let mut smp = Sampler::new(9, 9);
        let (x, y) = (smp.square(5), smp.square(5));
        let fs = [
            FunctionRef::Cluster((2, 4), DiagChoice::Less),
            FunctionRef::Cluster((3, 3), DiagChoice::Greater),
            FunctionRef::XEntry(2, 5),
            FunctionRef::YEntry(4, 1),
        ];
        for &u in &fs {
            assert!(ps.double_bracket(&seed, u, u, &x, &y).unwrap().is_zero());
            for &v in &fs {
                let a = ps.double_bracket(&seed, u, v, &x, &y).unwrap();
                let b = ps.double_bracket(&seed, v, u, &x, &y).unwrap();
                assert_eq!(a, -b);
            }
        }
    }

    #[test]
    fn det_is_casimir() {
        for pair in [gl5(), BdPair::diagonal(BdTriple::cremmer_gervais(4)), BdPair::trivial(3)] {
            let seed = ClusterSeed::build(&pair).unwrap();
            let ps = PoissonStructure::new(&pair);
            let n = pair.n();
            let x = Sampler::new(2, 9).square(n);
            for a in 1..=n {
                for b in 1..=n {
                    assert!(ps.matn_bracket(&seed, FunctionRef::DetX, FunctionRef::XEntry(a, b), &x).unwrap().is_zero());
                }
            }
            for v in seed.vertices() {
                let f = FunctionRef::Cluster(v, DiagChoice::Less);
                assert!(ps.matn_bracket(&seed, FunctionRef::DetX, f, &x).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn biderivation_on_products() {
        let pair = gl5();
        let seed = ClusterSeed::build(&pair).unwrap();
        let ps = PoissonStructure::new(&pair);
        let x = Sampler::new(4, 9).square(5);
        let e = |a, b| Grad::x_only(coordinate_gradient(5, a, b));
        // Gradient of the product x_12 x_34 by the Leibniz rule.
        let (f, g) = (x[(0, 1)].clone(), x[(2, 3)].clone());
        let prod = Grad::x_only(&e(1, 2).x.scale(&g) + &e(3, 4).x.scale(&f));
        let h = Grad::x_only(seed.matn_gradient((2, 4), &x));
        let lhs = ps.bracket(&prod, &h, &x, &x);
        let rhs = &f * ps.bracket(&e(3, 4), &h, &x, &x) + &g * ps.bracket(&e(1, 2), &h, &x, &x);
        assert_eq!(lhs, rhs);
    }

    /// Standard Sklyanin bracket on `GL_2` with `X = [[a, b], [c, d]]`,
    /// written out by hand: `{a,b} = ab/2`, `{a,c} = ac/2`, `{a,d} = bc`,
    /// `{b,c} = 0`, `{b,d} = bd/2`, `{c,d} = cd/2`.
    fn sklyanin_gl2(x: &RationalMatrix, u: (usize, usize), v: (usize, usize)) -> Rational {
        let e = |i: usize, j: usize| x[(i - 1, j - 1)].clone();
        let half = frac(1, 2);
        let idx = |p: (usize, usize)| (p.0 - 1) * 2 + p.1 - 1;
        let (i, j) = (idx(u), idx(v));
        let table = |i: usize, j: usize| -> Rational {
            match (i, j) {
                (0, 1) => &half * e(1, 1) * e(1, 2),
                (0, 2) => &half * e(1, 1) * e(2, 1),
                (0, 3) => e(1, 2) * e(2, 1),
                (1, 2) => Rational::zero(),
                (1, 3) => &half * e(1, 2) * e(2, 2),
                (2, 3) => &half * e(2, 1) * e(2, 2),
                _ => Rational::zero(),
            }
        };
        if i < j {
            table(i, j)
        } else {
            -table(j, i)
        }
    }

    #[test]
    fn trivial_gl2_matches_sklyanin_table() {
        let pair = BdPair::trivial(2);
        let seed = ClusterSeed::build(&pair).unwrap();
        let ps = PoissonStructure::new(&pair);
        let entries = [(1, 1), (1, 2), (2, 1), (2, 2)];
        for s in 0..3 {
            let x = Sampler::new(s, 9).square(2);
            for &u in &entries {
                for &v in &entries {
                    let got = ps.matn_bracket(&seed, FunctionRef::XEntry(u.0, u.1), FunctionRef::XEntry(v.0, v.1), &x).unwrap();
                    assert_eq!(got, sklyanin_gl2(&x, u, v), "{u:?} {v:?}");
                }
            }
        }
    }

    #[test]
    fn omega_constant_small_pairs() {
        for pair in [BdPair::trivial(2), BdPair::trivial(3), BdPair::from_maps(3, &[(1, 2)], &[]).unwrap(), gl5()] {
            let seed = ClusterSeed::build(&pair).unwrap();
            let pts = seed.generic_points(&mut Sampler::new(17, 20), 3, 100).unwrap();
            let om = omega(&seed, &pts).unwrap();
            for i in 0..om.ordering.len() {
                assert!(om.entries[(i, i)].is_zero());
                for j in 0..om.ordering.len() {
                    assert_eq!(om.entries[(i, j)], -om.entries[(j, i)].clone());
                }
            }
        }
    }

    #[test]
    fn omega_needs_points() {
        let seed = ClusterSeed::build(&BdPair::trivial(2)).unwrap();
        assert_eq!(omega(&seed, &[RationalMatrix::identity(2)]), Err(PoissonError::TooFewPoints(1)));
        let z = RationalMatrix::zeros(2, 2);
        assert!(matches!(omega(&seed, &[z.clone(), z]), Err(PoissonError::ZeroFunctionAtPoint { .. })));
    }

    #[test]
    fn unipotent_log_exp_round_trip() {
        let u = Sampler::new(8, 9).upper_unipotent(5);
        assert_eq!(exp_nilpotent(&log_unipotent(&u)), u);
        assert_eq!(det(&gamma_group_unipotent(&BdTriple::cremmer_gervais(5), &u, Direction::Forward)).unwrap(), rat(1));
    }
}
