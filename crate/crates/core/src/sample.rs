//! Seeded random sampling of exact test points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bd_core::{BdPair, BdTriple};
use crate::exactlin::{rat, RationalMatrix};

/// Deterministic source of integer matrices with entries in a symmetric range.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    range: i64,
}

impl Sampler {
    pub fn new(seed: u64, range: i64) -> Self {
        assert!(range >= 1, "entry range must be positive");
        Self { rng: ChaCha8Rng::seed_from_u64(seed), range }
    }

    pub fn int(&mut self) -> i64 {
        self.rng.random_range(-self.range..=self.range)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> RationalMatrix {
        RationalMatrix::from_fn(rows, cols, |_, _| rat(self.rng.random_range(-self.range..=self.range)))
    }

    pub fn square(&mut self, n: usize) -> RationalMatrix {
        self.matrix(n, n)
    }

    /// Unipotent upper triangular matrix with random entries above the diagonal.
    pub fn upper_unipotent(&mut self, n: usize) -> RationalMatrix {
        let mut m = RationalMatrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = rat(self.int());
            }
        }
        m
    }

    /// Unipotent lower triangular matrix with random entries below the diagonal.
    pub fn lower_unipotent(&mut self, n: usize) -> RationalMatrix {
        self.upper_unipotent(n).transpose()
    }

    /// Diagonal matrix with nonzero integer entries.
    pub fn diagonal(&mut self, n: usize) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(n, n);
        for i in 0..n {
            let mut v = 0;
            while v == 0 {
                v = self.int();
            }
            m[(i, i)] = rat(v);
        }
        m
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A random valid triple built from up to two shifted runs of roots.
    pub fn bd_triple(&mut self, n: usize) -> BdTriple {
        assert!(n >= 2, "need at least one simple root");
        loop {
            let mut pairs = Vec::new();
            for _ in 0..self.rng.random_range(0..=2) {
                if n < 3 {
                    break;
                }
                let len = self.rng.random_range(1..=((n - 1) / 2).max(1));
                let a = self.rng.random_range(1..=n - len);
                let c = self.rng.random_range(1..=n - len);
                pairs.extend((0..len).map(|i| (a + i, c + i)));
            }
            pairs.sort_unstable();
            pairs.dedup_by_key(|p| p.0);
            if let Ok(t) = BdTriple::new(n, &pairs) {
                return t;
            }
        }
    }

    /// A random aperiodic pair with at least one nontrivial triple, or the
    /// trivial pair when `n = 2` leaves no room for one.
    pub fn aperiodic_pair(&mut self, n: usize) -> BdPair {
        if n < 3 {
            return BdPair::trivial(n);
        }
        loop {
            let p = BdPair::new(self.bd_triple(n), self.bd_triple(n)).expect("same size");
            if !(p.row.is_trivial() && p.col.is_trivial()) && p.is_aperiodic() {
                return p;
            }
        }
    }
}
