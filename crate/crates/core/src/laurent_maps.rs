//! Run-removal reductions and the unipotent matrix maps relating a seed to
//! the seed of a reduced pair.
//!
//! Removing the rightmost (or leftmost) root of a nontrivial row X-run
//! `[p+1, p+k]` gives a reduced pair. With `Z` generic and `X = U(Z)·Z` for
//! an explicit unipotent `U`, each seed function of the original pair at `X`
//! equals the matching function of the reduced pair at `Z`, multiplied by
//! the distinguished function `f̃_v(Z)` exactly on the upper part of one
//! L-matrix. Column runs are handled through the opposite pair.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd_core::{BdError, BdPair, BdTriple};
use crate::exactlin::{det, Rational, RationalMatrix};
use crate::poisson::{Direction, GammaOperator, GammaVariant};
use crate::quiver::{Quiver, QuiverError};
use crate::seed_builder::{BlockSpec, ClusterSeed, LMatrix, SeedError, Source, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaurentError {
    #[error("run [{0}, {1}] is trivial")]
    TrivialRun(usize, usize),
    #[error("[{0}, {1}] is not an X-run of the chosen side")]
    NotARowRun(usize, usize),
    #[error("distinguished minor vanishes at Z")]
    ZeroDenominator,
    #[error("leftmost coefficients did not stabilise")]
    NoFixedPoint,
    #[error("identity fails at {vertex:?}: {lhs} != {rhs}")]
    IdentityViolated { vertex: Vertex, lhs: String, rhs: String },
    #[error("degree vector not in the kernel of {matrix} at row {row:?}")]
    KernelViolation { matrix: &'static str, row: Vertex },
    #[error("exponent at {vertex:?} is {found}, expected {expected}")]
    PatternMismatch { vertex: Vertex, expected: String, found: String },
    #[error(transparent)]
    Bd(#[from] BdError),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

/// Which triple the run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// An X-run of `Γr`.
    Row,
    /// An X-run of `Γc`, reduced through the opposite pair.
    Column,
}

/// Which root of the run is deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Removal {
    Rightmost,
    Leftmost,
}

/// `𝒥(p+r, 1) = (l, s)`: the L-matrix whose diagonal carries `x_{p+r,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piercing {
    pub r: usize,
    pub l: usize,
    pub s: usize,
}

/// A run together with its reduced pair and the piercing data of the seed.
///
/// Everything indexed by `p`, `q`, `k` refers to the working pair: the pair
/// itself for [`Side::Row`], its opposite for [`Side::Column`]. Vertices in
/// public fields use the coordinates of the original pair.
#[derive(Debug, Clone)]
pub struct RunReduction {
    pub pair: BdPair,
    pub side: Side,
    pub removal: Removal,
    /// The run as given, in the triple it belongs to.
    pub run: (usize, usize),
    pub reduced_pair: BdPair,
    /// `(p+k, 1)` for rightmost removal, `(p+2, 1)` for leftmost; transposed
    /// for column runs.
    pub distinguished: Vertex,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    /// Index of `L*` in the working seed and the row `s_k` (or `s_2`).
    pub l_star: usize,
    pub s_star: usize,
    pub piercing: Vec<Piercing>,
    work: ClusterSeed,
    seed: ClusterSeed,
    reduced_seed: ClusterSeed,
}

impl RunReduction {
    fn to_work(&self, v: Vertex) -> Vertex {
        match self.side {
            Side::Row => v,
            Side::Column => (v.1, v.0),
        }
    }

    /// True when `f_v(U·Z) = f̃_v(Z)·f̃_dist(Z)` rather than `f̃_v(Z)`.
    pub fn carries_factor(&self, v: Vertex) -> bool {
        let w = self.to_work(v);
        w.0 != w.1 && self.work.index_of(w).is_some_and(|(l, s)| l == self.l_star && s < self.s_star)
    }

    pub fn seed(&self) -> &ClusterSeed {
        &self.seed
    }

    pub fn reduced_seed(&self) -> &ClusterSeed {
        &self.reduced_seed
    }
}

/// Deletes one root of a nontrivial X-run and prepares the reduced seed.
pub fn reduce_run(pair: &BdPair, side: Side, run: (usize, usize), removal: Removal) -> Result<RunReduction, LaurentError> {
    let (a, b) = run;
    if a >= b {
        return Err(LaurentError::TrivialRun(a, b));
    }
    let own = match side {
        Side::Row => &pair.row,
        Side::Column => &pair.col,
    };
    if !own.x_runs().contains(&run) {
        return Err(LaurentError::NotARowRun(a, b));
    }
    let work_pair = match side {
        Side::Row => pair.clone(),
        Side::Column => pair.opposite(),
    };
    // The working row triple is `Γc⁻¹` for column runs, whose X-run is the image run.
    let c = own.gamma(a).expect("nontrivial run starts in Γ1");
    let work_run = match side {
        Side::Row => run,
        Side::Column => (c, c + b - a),
    };
    let p = work_run.0 - 1;
    let k = work_run.1 - work_run.0 + 1;
    let q = work_pair.row.gamma(p + 1).expect("run start is in Γ1") - 1;
    let dropped = match removal {
        Removal::Rightmost => p + k - 1,
        Removal::Leftmost => p + 1,
    };
    let kept: Vec<(usize, usize)> = work_pair.row.pairs().into_iter().filter(|&(x, _)| x != dropped).collect();
    let work_reduced_pair = BdPair::new(BdTriple::new(pair.n(), &kept)?, work_pair.col.clone())?;
    let reduced_pair = match side {
        Side::Row => work_reduced_pair.clone(),
        Side::Column => work_reduced_pair.opposite(),
    };
    let seed = ClusterSeed::build(pair)?;
    let reduced_seed = ClusterSeed::build(&reduced_pair)?;
    let work = match side {
        Side::Row => seed.clone(),
        Side::Column => ClusterSeed::build(&work_pair)?,
    };
    let piercing: Vec<Piercing> = (2..=k)
        .map(|r| {
            let (l, s) = work.index_of((p + r, 1)).expect("off-diagonal vertex");
            Piercing { r, l, s }
        })
        .collect();
    let r_star = match removal {
        Removal::Rightmost => k,
        Removal::Leftmost => 2,
    };
    let star = piercing[r_star - 2];
    let dist_work = (p + r_star, 1);
    let distinguished = match side {
        Side::Row => dist_work,
        Side::Column => (1, p + r_star),
    };
    Ok(RunReduction {
        pair: pair.clone(),
        side,
        removal,
        run,
        reduced_pair,
        distinguished,
        p,
        q,
        k,
        l_star: star.l,
        s_star: star.s,
        piercing,
        work,
        seed,
        reduced_seed,
    })
}

/// The nontrivial X-runs of one side of a pair.
pub fn nontrivial_runs(pair: &BdPair, side: Side) -> Vec<(usize, usize)> {
    let t = match side {
        Side::Row => &pair.row,
        Side::Column => &pair.col,
    };
    t.x_runs().into_iter().filter(|(a, b)| a < b).collect()
}

/// `α` values at one point together with the denominator they share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alpha {
    pub values: Vec<Rational>,
    /// `f̃_v(Z)` for the distinguished vertex, computed as a minor of `L*`.
    pub denominator: Rational,
}

fn sub(m: &RationalMatrix, rows: &[usize], cols: &[usize]) -> RationalMatrix {
    let r: Vec<usize> = rows.iter().map(|i| i - 1).collect();
    let c: Vec<usize> = cols.iter().map(|j| j - 1).collect();
    m.select(&r, &c)
}

/// The `Y`-blocks of `lm` whose rows `q+1..q+k` sit on the same rows of `L` as
/// `X` rows `p+1..p+k`, i.e. the blocks glued through the run itself.
fn row_glued_y_blocks(lm: &LMatrix, p: usize, q: usize, k: usize) -> impl Iterator<Item = &BlockSpec> {
    let placed = |b: &BlockSpec, r: usize| b.placement_rows.0 + r - b.source_rows.0;
    lm.blocks.iter().filter(move |y| {
        y.kind == Source::Y
            && y.source_rows == (1, q + k)
            && lm.blocks.iter().any(|x| {
                x.kind == Source::X
                    && (x.source_rows.0..=x.source_rows.1).contains(&(p + 1))
                    && placed(x, p + 1) == placed(y, q + 1)
            })
    })
}

fn work_point(red: &RunReduction, z: &RationalMatrix) -> RationalMatrix {
    match red.side {
        Side::Row => z.clone(),
        Side::Column => z.transpose(),
    }
}

/// The `k` coefficients `α_1, …, α_k` at `Z` (in original coordinates).
pub fn alpha_coefficients(red: &RunReduction, z: &RationalMatrix) -> Result<Alpha, LaurentError> {
    alpha_work(red, &work_point(red, z))
}

fn alpha_work(red: &RunReduction, z: &RationalMatrix) -> Result<Alpha, LaurentError> {
    let lm = &red.work.l_matrices[red.l_star];
    let n_l = lm.size;
    let sk = red.s_star;
    let (q, k) = (red.q, red.k);
    let l = lm.instantiate(z, z);
    let m: Vec<usize> = (sk..=n_l).collect();
    match red.removal {
        Removal::Rightmost => {
            // Drop the entries of row q+k from every Y-block ending there.
            let mut lt = l;
            for blk in row_glued_y_blocks(lm, red.p, q, k) {
                let row = blk.placement_rows.0 + q + k - 1;
                for col in blk.placement_cols.0..=blk.placement_cols.1 {
                    lt[(row - 1, col - 1)] = Rational::zero();
                }
            }
            let den = det(&sub(&lt, &m, &m)).expect("square");
            if den.is_zero() {
                return Err(LaurentError::ZeroDenominator);
            }
            let values = (1..=k)
                .map(|kappa| {
                    let mut rows: Vec<usize> = m.iter().copied().filter(|&r| r != sk).collect();
                    rows.push(sk + kappa - k);
                    rows.sort_unstable();
                    det(&sub(&lt, &rows, &m)).expect("square") / &den
                })
                .collect();
            Ok(Alpha { values, denominator: den })
        }
        Removal::Leftmost => {
            // The minors are read from `L(Z, U₀Z)`, and `U₀` depends on `α`
            // whenever a block glued through the run lies in the columns `m`.
            // Iterate from `U₀ = 𝟙` until `α` is stable.
            let n = red.pair.n();
            let rows_all: Vec<usize> = (sk - 1..=n_l).collect();
            let mut l = l;
            let mut prev: Option<Vec<Rational>> = None;
            for _ in 0..=n_l {
                let den = det(&sub(&l, &rows_all[1..], &m)).expect("square");
                if den.is_zero() {
                    return Err(LaurentError::ZeroDenominator);
                }
                let values: Vec<Rational> = (1..=k)
                    .map(|kappa| {
                        let rows: Vec<usize> =
                            rows_all.iter().enumerate().filter(|&(i, _)| i != kappa - 1).map(|(_, &r)| r).collect();
                        let v = det(&sub(&l, &rows, &m)).expect("square") / &den;
                        if kappa % 2 == 0 {
                            -v
                        } else {
                            v
                        }
                    })
                    .collect();
                if prev.as_ref() == Some(&values) {
                    return Ok(Alpha { values, denominator: den });
                }
                let u0 = leftmost_u0(n, q, &values);
                l = lm.instantiate(z, &(&u0 * z));
                prev = Some(values);
            }
            Err(LaurentError::NoFixedPoint)
        }
    }
}

fn leftmost_u0(n: usize, q: usize, alpha: &[Rational]) -> RationalMatrix {
    let mut u0 = RationalMatrix::identity(n);
    // With `α_1 = 1` the off-diagonal terms enter with a minus sign.
    for (kappa, a) in alpha.iter().enumerate().skip(1) {
        u0[(q, q + kappa)] -= a;
    }
    u0
}

/// `U₀`, `U` and the `α` they were built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnipotentMap {
    pub alpha: Alpha,
    pub u0: RationalMatrix,
    /// Number of nonzero factors `𝟙 + γ^t(U₀ - 𝟙)` in the product.
    pub factors: usize,
    pub u: RationalMatrix,
}

/// Builds `U = ∏_{t ≥ 0} (𝟙 + γ^t(U₀ - 𝟙))` with higher `t` on the left,
/// where `γ` is the ringed row map of the working pair.
///
/// Each factor is read as `𝟙 + γ^t(n₀)`; since `n₀ = U₀ - 𝟙` squares to zero
/// this agrees with `exp(γ^t(log U₀))`.
pub fn build_u(red: &RunReduction, z: &RationalMatrix) -> Result<UnipotentMap, LaurentError> {
    build_u_work(red, &work_point(red, z))
}

fn build_u_work(red: &RunReduction, z: &RationalMatrix) -> Result<UnipotentMap, LaurentError> {
    let n = red.pair.n();
    let alpha = alpha_work(red, z)?;
    let (q, k) = (red.q, red.k);
    let u0 = match red.removal {
        Removal::Rightmost => {
            let mut u0 = RationalMatrix::identity(n);
            for kappa in 1..k {
                u0[(q + kappa - 1, q + k - 1)] += &alpha.values[kappa - 1];
            }
            u0
        }
        Removal::Leftmost => leftmost_u0(n, q, &alpha.values),
    };
    let gamma = GammaOperator::new(red.work.pair.row.clone(), GammaVariant::Ringed);
    let mut cur = &u0 - &RationalMatrix::identity(n);
    let mut u = RationalMatrix::identity(n);
    let mut factors = 0;
    while !cur.is_zero() && factors <= n {
        u = &(&RationalMatrix::identity(n) + &cur) * &u;
        cur = gamma.apply(&cur, Direction::Forward);
        factors += 1;
    }
    Ok(UnipotentMap { alpha, u0, factors, u })
}

/// The transformed point `X` and the map that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixMapReport {
    pub x: RationalMatrix,
    pub map: UnipotentMap,
    pub vertices_checked: usize,
    pub with_factor: Vec<Vertex>,
}

/// Sets `X = U(Z)·Z` (or `Z·U(Zᵀ)ᵀ` for column runs) and checks every seed
/// function against the reduced seed at `Z`.
pub fn verify_matrixmap(red: &RunReduction, z: &RationalMatrix) -> Result<MatrixMapReport, LaurentError> {
    let wz = work_point(red, z);
    let map = build_u_work(red, &wz)?;
    let wx = &map.u * &wz;
    let x = match red.side {
        Side::Row => wx,
        Side::Column => wx.transpose(),
    };
    let den = &map.alpha.denominator;
    let mut with_factor = Vec::new();
    let vertices = red.seed.vertices();
    for &v in &vertices {
        let lhs = red.seed.f(v, &x);
        let mut rhs = red.reduced_seed.f(v, z);
        if red.carries_factor(v) {
            rhs *= den;
            with_factor.push(v);
        }
        if lhs != rhs {
            return Err(LaurentError::IdentityViolated { vertex: v, lhs: lhs.to_string(), rhs: rhs.to_string() });
        }
    }
    Ok(MatrixMapReport { x, map, vertices_checked: vertices.len(), with_factor })
}

/// Degree vectors of both seeds and the exponents `λ = (d - d̃)/δ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentRelation {
    /// `δ = d̃` at the distinguished vertex.
    pub delta: i64,
    pub lambda: BTreeMap<Vertex, i64>,
}

/// Checks `B·d = 0`, `B̃·d̃ = 0` and that `λ` is the indicator of the
/// vertices carrying the extra factor in [`verify_matrixmap`].
pub fn exponent_relation(red: &RunReduction) -> Result<ExponentRelation, LaurentError> {
    let deg = |seed: &ClusterSeed, quiver: &Quiver, name: &'static str| -> Result<BTreeMap<Vertex, i64>, LaurentError> {
        let b = quiver.exchange_matrix();
        let d: Vec<i64> = b.order.iter().map(|&v| seed.degree(v) as i64).collect();
        if let Some(i) = b.apply(&d).iter().position(|&x| x != 0) {
            return Err(LaurentError::KernelViolation { matrix: name, row: b.order[i] });
        }
        Ok(b.order.iter().copied().zip(d).collect())
    };
    let d = deg(&red.seed, &Quiver::build(&red.pair)?, "B")?;
    let dt = deg(&red.reduced_seed, &Quiver::build(&red.reduced_pair)?, "B̃")?;
    let delta = dt[&red.distinguished];
    let mut lambda = BTreeMap::new();
    for (&v, &dv) in &d {
        let diff = dv - dt[&v];
        let expected = i64::from(red.carries_factor(v));
        if diff % delta != 0 || diff / delta != expected {
            return Err(LaurentError::PatternMismatch {
                vertex: v,
                expected: expected.to_string(),
                found: format!("{diff}/{delta}"),
            });
        }
        lambda.insert(v, diff / delta);
    }
    Ok(ExponentRelation { delta, lambda })
}

/// Compares every seed function of `pair` at `X` with the transposed-index
/// function of the opposite pair at `Xᵀ`; returns the first mismatch.
pub fn check_opposite(pair: &BdPair, x: &RationalMatrix) -> Result<Option<Vertex>, LaurentError> {
    let seed = ClusterSeed::build(pair)?;
    let opp = ClusterSeed::build(&pair.opposite())?;
    let xt = x.transpose();
    Ok(seed.vertices().into_iter().find(|&(i, j)| seed.f((i, j), x) != opp.f((j, i), &xt)))
}

/// `true` when `f̃_v(Z)^t · U` is integral, `t` being the number of factors;
/// for integer `Z` this bounds the denominators of `U` by powers of `f̃_v(Z)`.
pub fn denominators_are_powers(map: &UnipotentMap) -> bool {
    let mut scale = Rational::one();
    for _ in 0..map.factors {
        scale *= &map.alpha.denominator;
    }
    map.u.scale(&scale).is_integral()
}
