//! The quiver `Q_{Γr,Γc}` on the `n x n` grid, its exchange matrix, quiver
//! mutation and the compatibility check `BΩ = [λ𝟙 0]`.
//!
//! Every mutable vertex `v = (i, j)` contributes arrows through six slots:
//! `v → N, SE, W` and `NW, E, S → v`. Slots that fall off the grid wrap
//! around through the BD maps or are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd_core::BdPair;
use crate::exactlin::{rat, Rational, RationalMatrix};
use crate::poisson::OmegaMatrix;
use crate::seed_builder::{frozen_set, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("pair is periodic: the graph contains an alternating cycle")]
    PeriodicPair,
    #[error("vertex {0:?} is frozen")]
    FrozenVertex(Vertex),
    #[error("vertex {0:?} is not in the quiver")]
    UnknownVertex(Vertex),
    #[error("BΩ entry at ({row:?}, {col:?}) is {value}, breaking the [λ1 0] pattern")]
    NotCompatible { row: Vertex, col: Vertex, value: String },
    #[error("orderings of B and Ω differ")]
    OrderingMismatch,
}

/// The six neighbour slots of a vertex after wrapping and pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slots {
    pub n: Option<Vertex>,
    pub nw: Option<Vertex>,
    pub w: Option<Vertex>,
    pub s: Option<Vertex>,
    pub se: Option<Vertex>,
    pub e: Option<Vertex>,
}

impl Slots {
    pub fn of(pair: &BdPair, frozen: &BTreeSet<Vertex>, (i, j): Vertex) -> Self {
        let n = pair.n();
        let (r, c) = (&pair.row, &pair.col);
        let north = if i > 1 {
            Some((i - 1, j))
        } else {
            c.gamma_inv(j - 1).map(|a| (n, a + 1))
        };
        let north_west = if i > 1 && j > 1 {
            Some((i - 1, j - 1))
        } else if i == 1 && j > 1 {
            c.gamma_inv(j - 1).map(|a| (n, a))
        } else if j == 1 && i > 1 {
            r.gamma(i - 1).map(|a| (a, n))
        } else {
            None
        };
        let west = if j > 1 {
            Some((i, j - 1))
        } else {
            r.gamma(i - 1).map(|a| (a + 1, n))
        };
        let south = if i < n {
            Some((i + 1, j))
        } else {
            c.gamma(j - 1).map(|a| (1, a + 1))
        };
        let south_east = if i < n && j < n {
            Some((i + 1, j + 1))
        } else if i == n && j < n {
            c.gamma(j).map(|a| (1, a + 1))
        } else if j == n && i < n {
            r.gamma_inv(i).map(|a| (a + 1, 1))
        } else {
            None
        };
        let east = if j < n {
            Some((i, j + 1))
        } else {
            r.gamma_inv(i - 1).map(|a| (a + 1, 1))
        };
        let mut sl = Slots { n: north, nw: north_west, w: west, s: south, se: south_east, e: east };
        if i == 1 && j < n && sl.e.is_some_and(|u| frozen.contains(&u)) {
            sl.e = None;
        }
        if j == 1 && i < n && sl.s.is_some_and(|u| frozen.contains(&u)) {
            sl.s = None;
        }
        sl
    }

    pub fn outgoing(&self) -> [Option<Vertex>; 3] {
        [self.n, self.se, self.w]
    }

    pub fn incoming(&self) -> [Option<Vertex>; 3] {
        [self.nw, self.e, self.s]
    }
}

/// A quiver with frozen vertices; arrows carry multiplicities so that
/// mutation stays closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    pub n: usize,
    frozen: BTreeSet<Vertex>,
    arrows: BTreeMap<(Vertex, Vertex), u32>,
}

impl Quiver {
    pub fn build(pair: &BdPair) -> Result<Self, QuiverError> {
        if !pair.is_aperiodic() {
            return Err(QuiverError::PeriodicPair);
        }
        let n = pair.n();
        let frozen = frozen_set(pair);
        let mut arrows = BTreeMap::new();
        for i in 1..=n {
            for j in 1..=n {
                let v = (i, j);
                if frozen.contains(&v) {
                    continue;
                }
                let sl = Slots::of(pair, &frozen, v);
                for u in sl.outgoing().into_iter().flatten() {
                    arrows.insert((v, u), 1);
                }
                for u in sl.incoming().into_iter().flatten() {
                    arrows.insert((u, v), 1);
                }
            }
        }
        Ok(Self { n, frozen, arrows })
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (1..=self.n).flat_map(|i| (1..=self.n).map(move |j| (i, j))).collect()
    }

    pub fn frozen(&self) -> &BTreeSet<Vertex> {
        &self.frozen
    }

    pub fn is_frozen(&self, v: Vertex) -> bool {
        self.frozen.contains(&v)
    }

    /// Row-major mutable vertices followed by row-major frozen ones.
    pub fn ordering(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.vertices().into_iter().filter(|v| !self.is_frozen(*v)).collect();
        v.extend(self.frozen.iter().copied());
        v
    }

    pub fn mutable_count(&self) -> usize {
        self.n * self.n - self.frozen.len()
    }

    pub fn arrows(&self) -> impl Iterator<Item = (Vertex, Vertex, u32)> + '_ {
        self.arrows.iter().map(|(&(a, b), &m)| (a, b, m))
    }

    pub fn multiplicity(&self, a: Vertex, b: Vertex) -> u32 {
        self.arrows.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn out_neighbours(&self, v: Vertex) -> BTreeSet<Vertex> {
        self.arrows.keys().filter(|(a, _)| *a == v).map(|&(_, b)| b).collect()
    }

    pub fn in_neighbours(&self, v: Vertex) -> BTreeSet<Vertex> {
        self.arrows.keys().filter(|(_, b)| *b == v).map(|&(a, _)| a).collect()
    }

    /// Number of arrows at `v`, counted with multiplicity.
    pub fn degree(&self, v: Vertex) -> u32 {
        self.arrows.iter().filter(|((a, b), _)| *a == v || *b == v).map(|(_, &m)| m).sum()
    }

    pub fn exchange_matrix(&self) -> ExchangeMatrix {
        let order = self.ordering();
        let m = self.mutable_count();
        let entries = order[..m]
            .iter()
            .map(|&u| {
                order
                    .iter()
                    .map(|&w| i64::from(self.multiplicity(u, w)) - i64::from(self.multiplicity(w, u)))
                    .collect()
            })
            .collect();
        ExchangeMatrix { order, mutable: m, entries }
    }

    /// Quiver mutation at a mutable vertex.
    pub fn mutate(&self, k: Vertex) -> Result<Self, QuiverError> {
        if k.0 == 0 || k.1 == 0 || k.0 > self.n || k.1 > self.n {
            return Err(QuiverError::UnknownVertex(k));
        }
        if self.is_frozen(k) {
            return Err(QuiverError::FrozenVertex(k));
        }
        let mut net: BTreeMap<(Vertex, Vertex), i64> = BTreeMap::new();
        for (&(a, b), &m) in &self.arrows {
            *net.entry((a, b)).or_default() += i64::from(m);
        }
        let ins: Vec<(Vertex, u32)> = self.arrows.iter().filter(|((_, b), _)| *b == k).map(|(&(a, _), &m)| (a, m)).collect();
        let outs: Vec<(Vertex, u32)> = self.arrows.iter().filter(|((a, _), _)| *a == k).map(|(&(_, b), &m)| (b, m)).collect();
        // Complete every two-arrow path through k.
        for &(a, ma) in &ins {
            for &(b, mb) in &outs {
                if a != b && !(self.is_frozen(a) && self.is_frozen(b)) {
                    *net.entry((a, b)).or_default() += i64::from(ma) * i64::from(mb);
                }
            }
        }
        // Cancel opposite arrows and reverse the arrows at k.
        let mut arrows = BTreeMap::new();
        let keys: BTreeSet<(Vertex, Vertex)> = net.keys().map(|&(a, b)| if a <= b { (a, b) } else { (b, a) }).collect();
        for (a, b) in keys {
            let fwd = net.get(&(a, b)).copied().unwrap_or(0);
            let bwd = net.get(&(b, a)).copied().unwrap_or(0);
            let d = fwd - bwd;
            let (mut from, mut to) = if d > 0 { (a, b) } else { (b, a) };
            if d == 0 {
                continue;
            }
            if from == k || to == k {
                std::mem::swap(&mut from, &mut to);
            }
            arrows.insert((from, to), d.unsigned_abs() as u32);
        }
        Ok(Self { n: self.n, frozen: self.frozen.clone(), arrows })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph quiver {\n");
        for v in self.vertices() {
            let shape = if self.is_frozen(v) { "box" } else { "circle" };
            let _ = writeln!(s, "  \"{},{}\" [shape={shape}, pos=\"{},{}!\"];", v.0, v.1, v.1, self.n + 1 - v.0);
        }
        for (a, b, m) in self.arrows() {
            let label = if m > 1 { format!(" [label={m}]") } else { String::new() };
            let _ = writeln!(s, "  \"{},{}\" -> \"{},{}\"{label};", a.0, a.1, b.0, b.1);
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> QuiverJson {
        QuiverJson {
            n: self.n,
            frozen: self.frozen.iter().copied().collect(),
            arrows: self.arrows().collect(),
        }
    }

    pub fn from_json(j: &QuiverJson) -> Self {
        Self {
            n: j.n,
            frozen: j.frozen.iter().copied().collect(),
            arrows: j.arrows.iter().map(|&(a, b, m)| ((a, b), m)).collect(),
        }
    }
}

/// Adjacency export of a quiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuiverJson {
    pub n: usize,
    pub frozen: Vec<Vertex>,
    pub arrows: Vec<(Vertex, Vertex, u32)>,
}

/// `b_uv = #(u → v) - #(v → u)`, rows mutable, columns all vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeMatrix {
    pub order: Vec<Vertex>,
    pub mutable: usize,
    pub entries: Vec<Vec<i64>>,
}

impl ExchangeMatrix {
    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix::from_fn(self.mutable, self.order.len(), |i, j| rat(self.entries[i][j]))
    }

    pub fn rank(&self) -> usize {
        crate::exactlin::rank(&self.to_rational())
    }

    /// `B · d` for an integer vector indexed like the columns.
    pub fn apply(&self, d: &[i64]) -> Vec<i64> {
        self.entries.iter().map(|row| row.iter().zip(d).map(|(b, x)| b * x).sum()).collect()
    }

    /// Standard matrix mutation at column/row index `k` (a mutable index).
    pub fn mutate(&self, k: usize) -> Self {
        let mut out = self.clone();
        for i in 0..self.mutable {
            for j in 0..self.order.len() {
                out.entries[i][j] = if i == k || j == k {
                    -self.entries[i][j]
                } else {
                    let (bik, bkj) = (self.entries[i][k], self.entries[k][j]);
                    self.entries[i][j] + bik.signum() * (bik * bkj).max(0)
                };
            }
        }
        out
    }
}

/// Checks `BΩ = [λ𝟙 0]` and returns `λ`.
pub fn compatibility(b: &ExchangeMatrix, omega: &OmegaMatrix) -> Result<Rational, QuiverError> {
    if b.order != omega.ordering {
        return Err(QuiverError::OrderingMismatch);
    }
    let prod = &b.to_rational() * &omega.entries;
    let lambda = prod[(0, 0)].clone();
    for i in 0..b.mutable {
        for j in 0..b.order.len() {
            let want = if i == j { lambda.clone() } else { Rational::zero() };
            if prod[(i, j)] != want {
                return Err(QuiverError::NotCompatible { row: b.order[i], col: b.order[j], value: prod[(i, j)].to_string() });
            }
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bd_core::BdTriple;
    use crate::sample::Sampler;
    use crate::seed_builder::ClusterSeed;
    use proptest::prelude::*;

    fn gl5() -> BdPair {
        BdPair::from_maps(5, &[(1, 2), (2, 3)], &[(1, 3), (2, 4)]).unwrap()
    }

    fn set(v: &[Vertex]) -> BTreeSet<Vertex> {
        v.iter().copied().collect()
    }

    #[test]
    fn gl5_neighbourhoods() {
        let q = Quiver::build(&gl5()).unwrap();
        assert_eq!(q.out_neighbours((1, 4)), set(&[(5, 2), (2, 5), (1, 3)]));
        assert_eq!(q.in_neighbours((1, 4)), set(&[(5, 1), (1, 5), (2, 4)]));
        assert_eq!(q.out_neighbours((4, 5)), set(&[(4, 4), (3, 5)]));
        assert_eq!(q.in_neighbours((4, 5)), set(&[(3, 4), (3, 1), (5, 5)]));
    }

    #[test]
    fn trivial_interior_slots() {
        let q = Quiver::build(&BdPair::trivial(5)).unwrap();
        let (i, j) = (3, 3);
        assert_eq!(q.out_neighbours((i, j)), set(&[(i - 1, j), (i + 1, j + 1), (i, j - 1)]));
        assert_eq!(q.in_neighbours((i, j)), set(&[(i - 1, j - 1), (i, j + 1), (i + 1, j)]));
    }

    #[test]
    fn trivial_three_rank_and_frozen() {
        let q = Quiver::build(&BdPair::trivial(3)).unwrap();
        assert_eq!(q.frozen().len(), 5);
        let b = q.exchange_matrix();
        assert_eq!(b.rank(), 4);
        let dot = q.to_dot();
        assert_eq!(dot.matches("shape=box").count(), 5);
        assert_eq!(dot.matches("shape=circle").count(), 4);
    }

    #[test]
    fn periodic_rejected() {
        let p = BdPair::from_maps(8, &[(2, 3), (6, 7)], &[(6, 1), (2, 5)]).unwrap();
        assert_eq!(Quiver::build(&p), Err(QuiverError::PeriodicPair));
    }

    fn corpus() -> Vec<BdPair> {
        let mut v: Vec<BdPair> = (2..=6).map(BdPair::trivial).collect();
        v.extend((3..=5).map(|n| BdPair::diagonal(BdTriple::cremmer_gervais(n))));
        v.push(gl5());
        v.push(BdPair::diagonal(BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).unwrap()));
        v.push(BdPair::from_maps(4, &[(3, 1)], &[(1, 2)]).unwrap());
        v.push(BdPair::from_maps(6, &[(1, 4), (2, 5)], &[(4, 2)]).unwrap());
        v
    }

    #[test]
    fn degree_tables_and_full_rank() {
        for p in corpus() {
            let q = Quiver::build(&p).unwrap();
            let n = p.n();
            assert_eq!(q.frozen().len(), 1 + p.row.k() + p.col.k());
            assert!(!q.is_frozen((n, n)));
            let b = q.exchange_matrix();
            assert_eq!(b.rank(), q.mutable_count(), "{p}");
            for i in 0..b.mutable {
                for j in 0..b.mutable {
                    assert_eq!(b.entries[i][j], -b.entries[j][i]);
                }
            }
            for v in q.vertices() {
                let d = q.degree(v);
                let allowed: &[u32] = match v {
                    (1, 1) => &[1, 2, 3],
                    (i, j) if (i, j) == (1, n) || (i, j) == (n, 1) => &[1, 2, 4, 5],
                    (i, j) if i == n && j == n => &[3, 4, 5],
                    (1, _) | (_, 1) => &[2, 3, 5, 6],
                    (i, j) if i == n || j == n => &[4, 5, 6],
                    _ => &[6],
                };
                assert!(allowed.contains(&d), "{p}: vertex {v:?} degree {d}");
                if q.is_frozen(v) {
                    assert!(d <= 3, "{p}: frozen {v:?} degree {d}");
                }
            }
            for i in 2..n {
                let six = p.row.in_gamma1(i - 1) && p.row.in_gamma1(i);
                assert_eq!(q.degree((i, 1)) == 6, six, "{p}: ({i},1)");
            }
        }
    }

    #[test]
    fn compatibility_gl5_and_negative_control() {
        let p = gl5();
        let seed = ClusterSeed::build(&p).unwrap();
        let pts = seed.generic_points(&mut Sampler::new(1, 20), 2, 100).unwrap();
        let om = crate::poisson::omega(&seed, &pts).unwrap();
        let q = Quiver::build(&p).unwrap();
        assert_eq!(compatibility(&q.exchange_matrix(), &om).unwrap(), rat(1));
        let mut bad = q.clone();
        bad.arrows.remove(&((1, 4), (1, 3)));
        assert!(matches!(compatibility(&bad.exchange_matrix(), &om), Err(QuiverError::NotCompatible { .. })));
    }

    #[test]
    fn json_round_trip() {
        let q = Quiver::build(&gl5()).unwrap();
        let s = serde_json::to_string(&q.to_json()).unwrap();
        let back: QuiverJson = serde_json::from_str(&s).unwrap();
        assert_eq!(Quiver::from_json(&back), q);
    }

    #[test]
    fn mutate_frozen_rejected() {
        let q = Quiver::build(&BdPair::trivial(3)).unwrap();
        assert_eq!(q.mutate((1, 1)), Err(QuiverError::FrozenVertex((1, 1))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn mutation_involutive_and_matches_matrix(which in 0usize..12, pick in any::<u64>(), steps in 0usize..4) {
            let p = corpus()[which].clone();
            let mut q = Quiver::build(&p).unwrap();
            let mut smp = Sampler::new(pick, 3);
            // Wander a little first so that multiplicities show up.
            for _ in 0..steps {
                let m = q.ordering()[smp.index(q.mutable_count())];
                q = q.mutate(m).unwrap();
            }
            let k = smp.index(q.mutable_count());
            let v = q.ordering()[k];
            let mu = q.mutate(v).unwrap();
            prop_assert_eq!(mu.mutate(v).unwrap(), q.clone());
            prop_assert_eq!(mu.exchange_matrix(), q.exchange_matrix().mutate(k));
            let b = mu.exchange_matrix();
            for i in 0..b.mutable {
                for j in 0..b.mutable {
                    prop_assert_eq!(b.entries[i][j], -b.entries[j][i]);
                }
            }
        }
    }
}
