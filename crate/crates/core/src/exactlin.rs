//! Exact dense linear algebra over the rationals.
//!
//! Determinants use fraction-free Bareiss elimination on an integer copy of
//! the matrix (rows are scaled by the lcm of their denominators first), so
//! every intermediate value is an integer and every division is exact.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms.
pub type Rational = BigRational;

/// Shorthand for an integer-valued rational.
pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Shorthand for `p/q`.
pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("index {index} outside [1, {size}]")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    /// Builds a matrix from integer rows; all rows must have equal length.
    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |i, j| rat(rows[i][j]))
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn diagonal(d: &[Rational]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|x| x * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(Rational::is_integer)
    }

    /// Submatrix on the given (0-based) row and column index lists, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    /// Contiguous block `[r0, r0+h) x [c0, c0+w)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        Self::from_fn(h, w, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    /// Trace form `Tr(self * other)` without materialising the product.
    pub fn trace_pairing(&self, other: &Self) -> Rational {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = Rational::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let b = &other[(k, i)];
                if !b.is_zero() {
                    acc += a * b;
                }
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Add for &RationalMatrix {
    type Output = RationalMatrix;
    fn add(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &RationalMatrix {
    type Output = RationalMatrix;
    fn sub(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &RationalMatrix {
    type Output = RationalMatrix;
    fn neg(self) -> RationalMatrix {
        RationalMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|a| -a).collect() }
    }
}

impl Mul for &RationalMatrix {
    type Output = RationalMatrix;
    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = RationalMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }
}

/// Scales every row to integers; returns the integer rows and the product of
/// the scale factors.
fn integer_rows(m: &RationalMatrix) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut scale = BigInt::one();
    let mut rows = Vec::with_capacity(m.rows);
    for i in 0..m.rows {
        let l = m.row(i).iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        rows.push(m.row(i).iter().map(|x| x.numer() * (&l / x.denom())).collect());
        scale *= l;
    }
    (rows, scale)
}

/// Fraction-free Bareiss determinant of an integer matrix (consumed).
fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Exact determinant.
pub fn det(m: &RationalMatrix) -> Result<Rational, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let (rows, scale) = integer_rows(m);
    Ok(Rational::new(bareiss_det(rows), scale))
}

/// Adjugate via cofactors, so singular inputs are handled like any other.
///
/// With `A = D M` for the diagonal row scaling `D`, `adj(M) = adj(A) D / det(D)`,
/// so every cofactor is an integer Bareiss determinant.
pub fn adjugate(m: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 1 {
        return Ok(RationalMatrix::identity(1));
    }
    let (rows, scale) = integer_rows(m);
    let factors: Vec<BigInt> =
        (0..n).map(|i| m.row(i).iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))).collect();
    let mut out = RationalMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let d = bareiss_det(minor);
            if d.is_zero() {
                continue;
            }
            let v = Rational::new(d * &factors[i], scale.clone());
            out[(j, i)] = if (i + j) % 2 == 0 { v } else { -v };
        }
    }
    Ok(out)
}

/// Adjugate through `det(M) M⁻¹` when `M` is invertible, falling back to
/// cofactors otherwise. Same values as [`adjugate`], cubic cost.
pub fn adjugate_fast(m: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    let d = det(m)?;
    if d.is_zero() {
        return adjugate(m);
    }
    Ok(inverse(m)?.scale(&d))
}

/// Determinant of the trailing principal submatrix on rows and columns
/// `[s, N]` (1-based, inclusive).
pub fn trailing_minor(m: &RationalMatrix, s: usize) -> Result<Rational, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if s == 0 || s > n {
        return Err(LinalgError::IndexOutOfRange { index: s, size: n });
    }
    det(&m.block(s - 1, s - 1, n - s + 1, n - s + 1))
}

/// Exact rank by fraction-free elimination.
pub fn rank(m: &RationalMatrix) -> usize {
    let (mut a, _) = integer_rows(m);
    let (nr, nc) = (m.rows, m.cols);
    let mut r = 0;
    for c in 0..nc {
        let Some(p) = (r..nr).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in r + 1..nr {
            if a[i][c].is_zero() {
                continue;
            }
            let (f, g) = (a[r][c].clone(), a[i][c].clone());
            let (top, bottom) = a.split_at_mut(i);
            for (x, y) in bottom[0][c..nc].iter_mut().zip(&top[r][c..nc]) {
                *x = &*x * &f - y * &g;
            }
            let content = a[i][c..].iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
            if !content.is_zero() && !content.is_one() {
                for x in &mut a[i][c..] {
                    *x = &*x / &content;
                }
            }
        }
        r += 1;
        if r == nr {
            break;
        }
    }
    r
}

/// Reduced row echelon form; returns the matrix and its pivot columns.
pub fn rref(m: &RationalMatrix) -> (RationalMatrix, Vec<usize>) {
    let mut a = m.clone();
    let (nr, nc) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !a[(i, c)].is_zero()) else { continue };
        for j in 0..nc {
            let t = a[(p, j)].clone();
            a[(p, j)] = a[(r, j)].clone();
            a[(r, j)] = t;
        }
        let inv = a[(r, c)].recip();
        for j in 0..nc {
            a[(r, j)] = &a[(r, j)] * &inv;
        }
        for i in 0..nr {
            if i != r && !a[(i, c)].is_zero() {
                let f = a[(i, c)].clone();
                for j in 0..nc {
                    let v = &a[(i, j)] - &f * &a[(r, j)];
                    a[(i, j)] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of the right kernel `{v : M v = 0}`, one column per basis vector,
/// each scaled to a primitive integer vector.
pub fn kernel_basis(m: &RationalMatrix) -> RationalMatrix {
    let (a, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut out = RationalMatrix::zeros(m.cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        out[(f, k)] = Rational::one();
        for (r, &p) in pivots.iter().enumerate() {
            out[(p, k)] = -a[(r, f)].clone();
        }
        let l = (0..m.cols).fold(BigInt::one(), |acc, i| acc.lcm(out[(i, k)].denom()));
        let g = (0..m.cols).fold(BigInt::zero(), |acc, i| acc.gcd(&(out[(i, k)].numer() * (&l / out[(i, k)].denom()))));
        let factor = Rational::new(l, g);
        for i in 0..m.cols {
            out[(i, k)] = &out[(i, k)] * &factor;
        }
    }
    out
}

/// Exact inverse.
pub fn inverse(m: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let aug = RationalMatrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            m[(i, j)].clone()
        } else if j - n == i {
            Rational::one()
        } else {
            Rational::zero()
        }
    });
    let (r, pivots) = rref(&aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return Err(LinalgError::Singular);
    }
    Ok(r.block(0, n, n, n))
}

/// Left-hand side minus right-hand side of the rectangular Desnanot-Jacobi
/// identity for an `(m-1) x m` matrix: columns `alpha < beta < gamma` are
/// deleted (0-based) and `delta` is the deleted row. Zero when the identity holds.
pub fn desnanot_jacobi_residual(
    a: &RationalMatrix,
    alpha: usize,
    beta: usize,
    gamma: usize,
    delta: usize,
) -> Result<Rational, LinalgError> {
    let m = a.cols;
    if a.rows + 1 != m {
        return Err(LinalgError::Dimension(format!("expected (m-1)xm, got {}x{}", a.rows, a.cols)));
    }
    if !(alpha < beta && beta < gamma && gamma < m && delta < a.rows) {
        return Err(LinalgError::Dimension("need alpha < beta < gamma < m and delta < m-1".into()));
    }
    let all_rows: Vec<usize> = (0..a.rows).collect();
    let rows_d: Vec<usize> = all_rows.iter().copied().filter(|&r| r != delta).collect();
    let without = |skip: &[usize]| -> Vec<usize> { (0..m).filter(|c| !skip.contains(c)).collect() };
    let d = |rows: &[usize], skip: &[usize]| det(&a.select(rows, &without(skip)));
    let lhs = d(&all_rows, &[alpha])? * d(&rows_d, &[beta, gamma])? + d(&all_rows, &[gamma])? * d(&rows_d, &[alpha, beta])?;
    let rhs = d(&all_rows, &[beta])? * d(&rows_d, &[alpha, gamma])?;
    Ok(lhs - rhs)
}

/// The alternating sum of the short Plucker-type relation: for disjoint row
/// sets `i_set` (taken in increasing order, length k) and `j_set`, disjoint column sets `l_set`
/// (|J|+1 columns) and `m_set` (k-2 columns), returns
/// `sum_l (-1)^l det A[{i_l} u J, L] det A[(I \ {i_l}) u J, L u M]`.
/// Index sets are sorted before use; the sum is zero for every matrix.
pub fn plucker_residual(
    a: &RationalMatrix,
    i_set: &[usize],
    j_set: &[usize],
    l_set: &[usize],
    m_set: &[usize],
) -> Result<Rational, LinalgError> {
    let k = i_set.len();
    if l_set.len() != j_set.len() + 1 || k < 2 || m_set.len() != k - 2 {
        return Err(LinalgError::Dimension("need |L| = |J|+1 and |M| = |I|-2".into()));
    }
    let sorted = |v: Vec<usize>| {
        let mut v = v;
        v.sort_unstable();
        v
    };
    let i_set = sorted(i_set.to_vec());
    let lm = sorted(l_set.iter().chain(m_set).copied().collect());
    let l_sorted = sorted(l_set.to_vec());
    let mut acc = Rational::zero();
    for (idx, &il) in i_set.iter().enumerate() {
        let r1 = sorted(std::iter::once(il).chain(j_set.iter().copied()).collect());
        let r2 = sorted(i_set.iter().copied().filter(|&x| x != il).chain(j_set.iter().copied()).collect());
        let term = det(&a.select(&r1, &l_sorted))? * det(&a.select(&r2, &lm))?;
        if idx % 2 == 0 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    Ok(acc)
}

/// Integer part of an integral rational, if it is one and fits in i64.
pub fn to_i64(r: &Rational) -> Option<i64> {
    use num_traits::ToPrimitive;
    r.is_integer().then(|| r.numer().to_i64()).flatten()
}

/// Exponent `w` with `value = base^w` for a rational `value` and integer
/// `base > 1`, if such an integer exists.
pub fn exact_log(value: &Rational, base: i64) -> Option<i64> {
    if value.is_zero() || value.is_negative() {
        return None;
    }
    let b = BigInt::from(base);
    let count = |x: &BigInt| -> Option<i64> {
        let mut x = x.clone();
        let mut w = 0;
        while !x.is_one() {
            let (q, r) = x.div_rem(&b);
            if !r.is_zero() {
                return None;
            }
            x = q;
            w += 1;
        }
        Some(w)
    };
    Some(count(value.numer())? - count(value.denom())?)
}
