//! Regularity of adjacent cluster variables, toric weights, invariance
//! identities and the full verification report.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd_core::{BdPair, BdTriple};
use crate::exactlin::{det, exact_log, kernel_basis, rank, rat, to_i64, Rational, RationalMatrix};
use crate::laurent_maps::{exponent_relation, nontrivial_runs, reduce_run, verify_matrixmap, Removal, Side};
use crate::poisson::{gamma_group_diagonal, gamma_group_unipotent, omega, Direction, FunctionRef, PoissonStructure};
use crate::quiver::{compatibility, Quiver, QuiverError, Slots};
use crate::sample::Sampler;
use crate::seed_builder::{ClusterSeed, DiagChoice, FunctionLoc, SeedError, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("f at {0:?} vanishes at the sample point")]
    ZeroDenominator(Vertex),
    #[error("vertex {0:?} is frozen")]
    Frozen(Vertex),
    #[error("slot {slot} of {vertex:?} is missing")]
    MissingSlot { vertex: Vertex, slot: &'static str },
    #[error("f at {vertex:?} does not scale monomially under generator {generator}")]
    NonMonomialScaling { vertex: Vertex, generator: usize },
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

/// Both sides of the exchange relation at one vertex and one point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacentPair {
    pub vertex: Vertex,
    /// `(∏_{v→u} f_u + ∏_{u→v} f_u) / f_v`.
    pub quotient: Rational,
    /// The polynomial expression built from bordered minors.
    pub explicit: Rational,
}

impl AdjacentPair {
    pub fn agrees(&self) -> bool {
        self.quotient == self.explicit
    }
}

fn sub(m: &RationalMatrix, rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> RationalMatrix {
    let r: Vec<usize> = rows.map(|i| i - 1).collect();
    let c: Vec<usize> = cols.map(|j| j - 1).collect();
    m.select(&r, &c)
}

fn drop_col(m: &RationalMatrix, c: usize) -> RationalMatrix {
    let cols: Vec<usize> = (0..m.cols()).filter(|&j| j != c).collect();
    let rows: Vec<usize> = (0..m.rows()).collect();
    m.select(&rows, &cols)
}

fn drop_row(m: &RationalMatrix, r: usize) -> RationalMatrix {
    let rows: Vec<usize> = (0..m.rows()).filter(|&i| i != r).collect();
    let cols: Vec<usize> = (0..m.cols()).collect();
    m.select(&rows, &cols)
}

/// Computes the adjacent variable `f'_v` at `X` in two ways.
///
/// The explicit side is `f_S · det A^{2̂} - f_N · det C_{1̂}^{2̂}`. Here `A` is
/// the matrix of `f_v` widened by one row and column to the upper left, or,
/// when `f_v` has smaller degree than `f_N`, the matrix of `f_N` bordered on
/// the left by that column padded with zeros; `C` is the matrix of `f_W`.
/// Missing slots count as the constant 1, and a `C` of size one contributes 0.
pub fn adjacent_variable(seed: &ClusterSeed, quiver: &Quiver, v: Vertex, x: &RationalMatrix) -> Result<AdjacentPair, VerifyError> {
    if seed.is_frozen(v) {
        return Err(VerifyError::Frozen(v));
    }
    let fv = seed.f(v, x);
    if fv.is_zero() {
        return Err(VerifyError::ZeroDenominator(v));
    }
    let prod = |vs: std::collections::BTreeSet<Vertex>| vs.into_iter().map(|u| seed.f(u, x)).fold(Rational::one(), |a, b| a * b);
    let quotient = (prod(quiver.out_neighbours(v)) + prod(quiver.in_neighbours(v))) / &fv;

    let slots = Slots::of(&seed.pair, seed.frozen(), v);
    let rep = |u: Vertex| seed.representation(u, x, None, DiagChoice::Less);
    let fo = |u: Option<Vertex>| u.map_or_else(Rational::one, |u| seed.f(u, x));
    let (m, sv) = rep(v)?;
    let n_v = m.rows();
    let d = n_v - sv + 1;
    let north = slots.n.ok_or(VerifyError::MissingSlot { vertex: v, slot: "N" })?;
    let (mn, s1) = rep(north)?;
    let n1 = mn.rows();
    let d1 = n1 - s1 + 1;
    let a = if d < d1 {
        let t = sub(&mn, s1..=n1, s1..=n1);
        RationalMatrix::from_fn(d1, d1 + 1, |i, j| match j {
            0 if i <= d => m[(sv - 2 + i, sv - 2)].clone(),
            0 => Rational::zero(),
            _ => t[(i, j - 1)].clone(),
        })
    } else {
        sub(&m, sv - 1..=sv - 2 + d1, sv - 1..=sv - 1 + d1)
    };
    let west = slots.w.ok_or(VerifyError::MissingSlot { vertex: v, slot: "W" })?;
    let (mw, s4) = rep(west)?;
    let c = sub(&mw, s4..=mw.rows(), s4..=mw.rows());
    let dc = if c.rows() > 1 { det(&drop_col(&drop_row(&c, 0), 1)).expect("square") } else { Rational::zero() };
    let explicit = fo(slots.s) * det(&drop_col(&a, 1)).expect("square") - fo(Some(north)) * dc;
    Ok(AdjacentPair { vertex: v, quotient, explicit })
}

/// Zeroes the rows of `X` feeding the last row of the matrix of `f_v`, so
/// that `f_v` vanishes at the returned point.
pub fn frozen_witness(seed: &ClusterSeed, v: Vertex, x: &RationalMatrix) -> Result<RationalMatrix, VerifyError> {
    let n = seed.n();
    let rows: Vec<usize> = match seed.locate(v)? {
        FunctionLoc::Diagonal { .. } => vec![n],
        FunctionLoc::Block { l, .. } => {
            let lm = &seed.l_matrices[l];
            lm.cells().filter(|((r, _), _)| *r == lm.size).map(|(_, e)| e.row).collect()
        }
    };
    let mut w = x.clone();
    for r in rows {
        for c in 0..n {
            w[(r - 1, c)] = Rational::zero();
        }
    }
    Ok(w)
}

/// Integer lattice bases of the two tori and the weight of every seed function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricWeights {
    /// Exponent vectors `m` acting by `X ↦ diag(t^m)·X`.
    pub row_generators: Vec<Vec<i64>>,
    /// Exponent vectors `m'` acting by `X ↦ X·diag(t^{m'})`.
    pub col_generators: Vec<Vec<i64>>,
    /// Vertex order of the rows of `w`.
    pub order: Vec<Vertex>,
    /// One row per vertex, one column per generator (row generators first).
    pub w: Vec<Vec<i64>>,
}

impl ToricWeights {
    pub fn rank(&self) -> usize {
        let cols = self.w.first().map_or(0, Vec::len);
        rank(&RationalMatrix::from_fn(self.w.len(), cols, |i, j| rat(self.w[i][j])))
    }
}

/// Primitive integer basis of `{m : Σ m = 0, m_{γ(α)} - m_{γ(α)+1} = m_α - m_{α+1}}`.
pub fn torus_lattice(t: &BdTriple) -> Vec<Vec<i64>> {
    let n = t.n();
    let pairs = t.pairs();
    let mut c = RationalMatrix::zeros(pairs.len() + 1, n);
    for j in 0..n {
        c[(0, j)] = Rational::one();
    }
    for (r, &(a, b)) in pairs.iter().enumerate() {
        c[(r + 1, b - 1)] += rat(1);
        c[(r + 1, b)] -= rat(1);
        c[(r + 1, a - 1)] -= rat(1);
        c[(r + 1, a)] += rat(1);
    }
    let k = kernel_basis(&c);
    (0..k.cols()).map(|j| (0..n).map(|i| to_i64(&k[(i, j)]).expect("small integer basis")).collect()).collect()
}

fn power_diag(m: &[i64], t: i64) -> RationalMatrix {
    let d: Vec<Rational> = m.iter().map(|&e| rat(t).pow(e as i32)).collect();
    RationalMatrix::diagonal(&d)
}

/// Weights of all seed functions under both tori, read off by exact
/// evaluation at `t = 2` and `t = 3`.
pub fn toric_weights(seed: &ClusterSeed, quiver: &Quiver, x: &RationalMatrix) -> Result<ToricWeights, VerifyError> {
    let row_generators = torus_lattice(&seed.pair.row);
    let col_generators = torus_lattice(&seed.pair.col);
    let order = quiver.ordering();
    let base: Vec<Rational> = order.iter().map(|&v| seed.f(v, x)).collect();
    if let Some(i) = base.iter().position(Zero::is_zero) {
        return Err(VerifyError::ZeroDenominator(order[i]));
    }
    let mut w = vec![Vec::new(); order.len()];
    let gens = row_generators.iter().map(|m| (m, true)).chain(col_generators.iter().map(|m| (m, false)));
    for (g, (m, left)) in gens.enumerate() {
        let act = |t: i64| if left { &power_diag(m, t) * x } else { x * &power_diag(m, t) };
        let (x2, x3) = (act(2), act(3));
        for (i, &v) in order.iter().enumerate() {
            let e2 = exact_log(&(seed.f(v, &x2) / &base[i]), 2);
            let e3 = exact_log(&(seed.f(v, &x3) / &base[i]), 3);
            match (e2, e3) {
                (Some(a), Some(b)) if a == b => w[i].push(a),
                _ => return Err(VerifyError::NonMonomialScaling { vertex: v, generator: g }),
            }
        }
    }
    Ok(ToricWeights { row_generators, col_generators, order, w })
}

/// First seed function (with its diagonal choice) violating an identity.
pub type Violation = Option<(Vertex, DiagChoice)>;

fn all_functions(seed: &ClusterSeed) -> Vec<(Vertex, DiagChoice)> {
    seed.vertices()
        .into_iter()
        .flat_map(|v| {
            if v.0 == v.1 {
                vec![(v, DiagChoice::Less), (v, DiagChoice::Greater)]
            } else {
                vec![(v, DiagChoice::Less)]
            }
        })
        .collect()
}

fn eval(seed: &ClusterSeed, (v, d): (Vertex, DiagChoice), x: &RationalMatrix, y: &RationalMatrix) -> Rational {
    seed.evaluate(v, x, Some(y), d).expect("valid input")
}

/// A random point `(X, Y)` of the double at which every seed function is nonzero.
fn generic_double(seed: &ClusterSeed, smp: &mut Sampler) -> (RationalMatrix, RationalMatrix) {
    let n = seed.n();
    let funcs = all_functions(seed);
    loop {
        let (x, y) = (smp.square(n), smp.square(n));
        if funcs.iter().all(|&u| !eval(seed, u, &x, &y).is_zero()) {
            return (x, y);
        }
    }
}

/// `f(N₊X, exp γr(N₊)·Y) = f(X, Y)` and `f(X·exp γc*(N₋), Y·N₋) = f(X, Y)` for
/// random unipotent `N₊`, `N₋` at independent random `X`, `Y`.
pub fn unipotent_invariance(seed: &ClusterSeed, smp: &mut Sampler) -> Violation {
    let n = seed.n();
    let (x, y) = generic_double(seed, smp);
    let np = smp.upper_unipotent(n);
    let nm = smp.lower_unipotent(n);
    let left = (&np * &x, &gamma_group_unipotent(&seed.pair.row, &np, Direction::Forward) * &y);
    let right = (&x * &gamma_group_unipotent(&seed.pair.col, &nm, Direction::Adjoint), &y * &nm);
    all_functions(seed).into_iter().find(|&u| {
        let f = eval(seed, u, &x, &y);
        eval(seed, u, &left.0, &left.1) != f || eval(seed, u, &right.0, &right.1) != f
    })
}

/// `f(T₁·X·exp γc*(T₂), exp γr(T₁)·Y·T₂) / f(X, Y)` is the same at two
/// independent random points.
pub fn torus_semi_invariance(seed: &ClusterSeed, smp: &mut Sampler) -> Violation {
    let n = seed.n();
    let t1 = smp.diagonal(n);
    let t2 = smp.diagonal(n);
    let gc = gamma_group_diagonal(&seed.pair.col, &t2, Direction::Adjoint);
    let gr = gamma_group_diagonal(&seed.pair.row, &t1, Direction::Forward);
    let funcs = all_functions(seed);
    let mut ratios: Vec<Vec<Rational>> = Vec::new();
    for _ in 0..2 {
        let (x, y) = generic_double(seed, smp);
        let (x2, y2) = (&(&t1 * &x) * &gc, &(&gr * &y) * &t2);
        ratios.push(funcs.iter().map(|&u| eval(seed, u, &x2, &y2) / eval(seed, u, &x, &y)).collect());
    }
    funcs.iter().enumerate().find(|&(i, _)| ratios[0][i] != ratios[1][i]).map(|(_, &u)| u)
}

/// Euler operators of every run of both triples applied to `log f`, at `(X, Y)`.
fn run_traces(seed: &ClusterSeed, u: (Vertex, DiagChoice), x: &RationalMatrix, y: &RationalMatrix) -> Vec<Rational> {
    let f = eval(seed, u, x, y);
    let (gx, gy) = seed.gradient(u.0, x, Some(y), u.1).expect("valid input");
    let (xg, gxx, yg, gyy) = (x * &gx, &gx * x, y * &gy, &gy * y);
    let p = &seed.pair;
    let sum = |m: &RationalMatrix, (a, b): (usize, usize)| (a..=b).map(|i| m[(i - 1, i - 1)].clone()).sum::<Rational>() / &f;
    let mut out = Vec::new();
    out.extend(p.row.x_runs().into_iter().map(|r| sum(&xg, r)));
    out.extend(p.col.x_runs().into_iter().map(|r| sum(&gxx, r)));
    out.extend(p.row.y_runs().into_iter().map(|r| sum(&yg, r)));
    out.extend(p.col.y_runs().into_iter().map(|r| sum(&gyy, r)));
    out
}

/// For every X-run `Δ` of `Γr` the row Euler operator `Tr_Δ(X ∇_X log f)`,
/// for every X-run of `Γc` the column one `Tr_Δ(∇_X log f · X)`, and the same
/// for `Y` with Y-runs, are constant in `(X, Y)`.
pub fn run_trace_constancy(seed: &ClusterSeed, smp: &mut Sampler) -> Violation {
    let pts: Vec<(RationalMatrix, RationalMatrix)> = (0..2).map(|_| generic_double(seed, smp)).collect();
    all_functions(seed)
        .into_iter()
        .find(|&u| run_traces(seed, u, &pts[0].0, &pts[0].1) != run_traces(seed, u, &pts[1].0, &pts[1].1))
}

/// `{det X, x_ab} = 0` for every entry; returns the first failing entry.
pub fn casimir(seed: &ClusterSeed, ps: &PoissonStructure, x: &RationalMatrix) -> Option<(usize, usize)> {
    let n = seed.n();
    (1..=n)
        .flat_map(|a| (1..=n).map(move |b| (a, b)))
        .find(|&(a, b)| !ps.matn_bracket(seed, FunctionRef::DetX, FunctionRef::XEntry(a, b), x).expect("valid input").is_zero())
}

/// Settings for [`run_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub rng_seed: u64,
    /// Random points per check; at least 2.
    pub points: usize,
    /// Entries are drawn from `[-entry_range, entry_range]`.
    pub entry_range: i64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { rng_seed: 42, points: 3, entry_range: 20 }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Ordered list of checks with their outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pair: String,
    pub config: ReportConfig,
    /// The compatibility constant, when it was computed.
    pub lambda: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("pair {}\n", self.pair);
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        if let Some(l) = &self.lambda {
            let _ = writeln!(s, "lambda = {l}");
        }
        let _ = writeln!(s, "{}", if self.passed() { "all checks passed" } else { "verification failed" });
        s
    }
}

struct Recorder {
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn push(&mut self, name: &str, outcome: Result<String, String>) -> bool {
        let passed = outcome.is_ok();
        let detail = outcome.unwrap_or_else(|e| e);
        self.checks.push(CheckResult { name: name.into(), passed, detail });
        passed
    }
}

fn violation(v: Violation, ok: &str) -> Result<String, String> {
    match v {
        None => Ok(ok.into()),
        Some((v, d)) => Err(format!("fails for f{:?} ({d:?})", v)),
    }
}

/// Runs every check on `pair` in a fixed order. Failures become report
/// entries; checks that depend on a failed prerequisite are skipped.
pub fn run_report(pair: &BdPair, config: ReportConfig) -> VerificationReport {
    let mut rec = Recorder { checks: Vec::new() };
    let mut lambda = None;
    let finish = |rec: Recorder, lambda| VerificationReport { pair: pair.to_string(), config, lambda, checks: rec.checks };
    let n = pair.n();
    let points = config.points.max(2);
    let mut smp = Sampler::new(config.rng_seed, config.entry_range.max(2));

    let valid = BdTriple::new(n, &pair.row.pairs()).and(BdTriple::new(n, &pair.col.pairs())).map(|_| "row and column triples are valid".into());
    if !rec.push("triple validation", valid.map_err(|e| e.to_string())) {
        return finish(rec, lambda);
    }
    let dec = pair.decompose();
    let aperiodic = if dec.is_aperiodic() {
        Ok(format!("{} maximal alternating paths", dec.paths.len()))
    } else {
        Err(format!("alternating cycle {}", dec.cycles.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
    };
    if !rec.push("aperiodicity", aperiodic) {
        return finish(rec, lambda);
    }
    let seed = match ClusterSeed::build(pair) {
        Ok(s) => s,
        Err(e) => {
            rec.push("seed build", Err(e.to_string()));
            return finish(rec, lambda);
        }
    };
    rec.push("seed build", Ok(format!("{} L-matrices, {} functions", seed.l_matrices.len(), n * n)));
    let quiver = Quiver::build(pair).expect("aperiodic pair");
    let ps = PoissonStructure::new(pair);

    let runs = |smp: &mut Sampler, f: fn(&ClusterSeed, &mut Sampler) -> Violation| (0..points).find_map(|_| f(&seed, smp));
    rec.push("unipotent invariance", violation(runs(&mut smp, unipotent_invariance), "all functions invariant"));
    rec.push("torus semi-invariance", violation(runs(&mut smp, torus_semi_invariance), "all ratios constant"));
    rec.push("run-trace constancy", violation(runs(&mut smp, run_trace_constancy), "all run traces constant"));

    let Some(pts) = seed.generic_points(&mut smp, points, 1000) else {
        rec.push("generic points", Err("no point with all functions nonzero".into()));
        return finish(rec, lambda);
    };
    let cas = pts.iter().find_map(|x| casimir(&seed, &ps, x));
    rec.push("casimir", cas.map_or(Ok("{det X, x_ij} = 0".into()), |(a, b)| Err(format!("{{det X, x_{a}{b}}} != 0"))));

    let om = omega(&seed, &pts);
    let om_ok = rec.push("omega constancy", om.as_ref().map(|_| format!("constant across {points} points")).map_err(ToString::to_string));
    let b = quiver.exchange_matrix();
    if let (true, Ok(om)) = (om_ok, &om) {
        let c = compatibility(&b, om);
        if let Ok(l) = &c {
            lambda = Some(l.to_string());
        }
        let outcome = match c {
            Ok(l) if l == Rational::one() => Ok("BΩ = [λ1 0] with λ = 1".into()),
            Ok(l) => Err(format!("BΩ = [λ1 0] with λ = {l}")),
            Err(e) => Err(e.to_string()),
        };
        rec.push("compatibility", outcome);
    }
    let rk = b.rank();
    rec.push(
        "exchange rank",
        if rk == b.mutable { Ok(format!("rank {rk} = #mutable")) } else { Err(format!("rank {rk}, #mutable {}", b.mutable)) },
    );
    let want = 1 + pair.row.k() + pair.col.k();
    let got = seed.frozen().len();
    rec.push("frozen count", if got == want { Ok(format!("{got} frozen")) } else { Err(format!("{got} frozen, expected {want}")) });

    let mut bad = None;
    'outer: for x in &pts {
        for v in seed.mutable() {
            match adjacent_variable(&seed, &quiver, v, x) {
                Ok(a) if a.agrees() => {}
                Ok(a) => {
                    bad = Some(format!("at {v:?}: quotient {} != explicit {}", a.quotient, a.explicit));
                    break 'outer;
                }
                Err(e) => {
                    bad = Some(format!("at {v:?}: {e}"));
                    break 'outer;
                }
            }
        }
    }
    rec.push("adjacent regularity", bad.map_or(Ok(format!("{} mutable vertices at {points} points", b.mutable)), Err));
    let witness_fail = seed.frozen().iter().copied().find(|&v| {
        frozen_witness(&seed, v, &pts[0]).map_or(true, |w| !seed.f(v, &w).is_zero())
    });
    rec.push("frozen witnesses", witness_fail.map_or(Ok("every frozen function vanishes at a witness".into()), |v| Err(format!("no witness for {v:?}"))));

    let toric = toric_weights(&seed, &quiver, &pts[0]).map_err(|e| e.to_string()).and_then(|tw| {
        let cols = tw.row_generators.len() + tw.col_generators.len();
        for j in 0..cols {
            let col: Vec<i64> = tw.w.iter().map(|r| r[j]).collect();
            if let Some(i) = b.apply(&col).iter().position(|&e| e != 0) {
                return Err(format!("(B·W) nonzero at row {:?}, generator {j}", b.order[i]));
            }
        }
        let r = tw.rank();
        if r == pair.row.k() + pair.col.k() { Ok(format!("B·W = 0, rank W = {r}")) } else { Err(format!("rank W = {r}")) }
    });
    rec.push("toric kernel", toric);

    let mut laurent = Ok(0usize);
    'runs: for side in [Side::Row, Side::Column] {
        for run in nontrivial_runs(pair, side) {
            for removal in [Removal::Rightmost, Removal::Leftmost] {
                let tag = format!("{side:?} run [{}, {}] {removal:?}", run.0, run.1);
                let red = match reduce_run(pair, side, run, removal) {
                    Ok(r) => r,
                    Err(e) => {
                        laurent = Err(format!("{tag}: {e}"));
                        break 'runs;
                    }
                };
                let mut done = 0;
                while done < points {
                    let z = smp.square(n);
                    if red.reduced_seed().f(red.distinguished, &z).is_zero() {
                        continue;
                    }
                    if let Err(e) = verify_matrixmap(&red, &z) {
                        laurent = Err(format!("{tag}: {e}"));
                        break 'runs;
                    }
                    done += 1;
                }
                if let Err(e) = exponent_relation(&red) {
                    laurent = Err(format!("{tag}: {e}"));
                    break 'runs;
                }
                laurent = laurent.map(|c| c + 1);
            }
        }
    }
    rec.push("laurent maps", laurent.map(|c| format!("{c} run reductions verified")));
    finish(rec, lambda)
}
