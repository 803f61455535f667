//! Exact integer and rational linear algebra.
//!
//! Hermite and Smith normal forms are computed with extended-gcd row and
//! column operations, so every intermediate value stays an integer and the
//! transformation matrices are unimodular by construction.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub use num_bigint::BigInt;
pub use num_rational::BigRational;

use crate::error::{input, Result};

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from row vectors. All rows must have length `cols`.
    pub fn from_rows<T: Into<BigInt> + Clone>(cols: usize, rows: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return input(format!("row {i} has length {}, expected {cols}", row.len()));
            }
            data.extend(row.iter().cloned().map(Into::into));
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Convenience constructor for literal matrices in tests and examples.
    /// Panics on ragged input.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let owned: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Self::from_rows(cols, &owned).expect("ragged matrix literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Exact determinant by Bareiss fraction-free elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !m[(i, k)].is_zero()) {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)]) / &prev;
                    m[(i, j)] = v;
                }
            }
            prev = m[(k, k)].clone();
        }
        sign * &m[(n - 1, n - 1)]
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.determinant().abs().is_one()
    }

    pub fn to_rational(&self) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| BigRational::from_integer(x.clone())).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self[(r, j)]);
            self[(r, j)] = v;
        }
    }

    /// row[target] -= q * row[src]
    fn sub_row_multiple(&mut self, target: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let d = q * &self[(src, j)];
            self[(target, j)] -= d;
        }
    }


    /// Replaces rows (r, s) by (x r + y s, u r + v s).
    fn combine_rows(&mut self, r: usize, s: usize, x: &BigInt, y: &BigInt, u: &BigInt, v: &BigInt) {
        for j in 0..self.cols {
            let a = self[(r, j)].clone();
            let b = self[(s, j)].clone();
            self[(r, j)] = x * &a + y * &b;
            self[(s, j)] = u * &a + v * &b;
        }
    }

    fn combine_cols(&mut self, r: usize, s: usize, x: &BigInt, y: &BigInt, u: &BigInt, v: &BigInt) {
        for i in 0..self.rows {
            let a = self[(i, r)].clone();
            let b = self[(i, s)].clone();
            self[(i, r)] = x * &a + y * &b;
            self[(i, s)] = u * &a + v * &b;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Coefficients (g, x, y, u, v) of the unimodular 2x2 transform taking
/// (a, b) to (g, 0) with g = gcd(a, b) >= 0.
fn gcd_transform(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt, BigInt, BigInt) {
    // plain elimination when a | b; the extended gcd may otherwise swap
    // rows and stop row/column clearing from making progress
    if !a.is_zero() && b.is_multiple_of(a) {
        let sign = if a.is_negative() { -BigInt::one() } else { BigInt::one() };
        return (a.abs(), sign, BigInt::zero(), -(b / a), BigInt::one());
    }
    let e = a.extended_gcd(b);
    let (mut g, mut x, mut y) = (e.gcd, e.x, e.y);
    if g.is_negative() {
        g = -g;
        x = -x;
        y = -y;
    }
    let u = -(b / &g);
    let v = a / &g;
    (g, x, y, u, v)
}

/// Row Hermite normal form: returns (H, U) with U unimodular and U*M = H.
///
/// Pivots are positive and the entries above each pivot lie in [0, pivot).
pub fn hermite_normal_form(m: &IntegerMatrix) -> (IntegerMatrix, IntegerMatrix) {
    let mut h = m.clone();
    let mut u = IntegerMatrix::identity(m.rows);
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        for i in r + 1..m.rows {
            if h[(i, c)].is_zero() {
                continue;
            }
            let (_, x, y, p, q) = gcd_transform(&h[(r, c)], &h[(i, c)]);
            h.combine_rows(r, i, &x, &y, &p, &q);
            u.combine_rows(r, i, &x, &y, &p, &q);
        }
        if h[(r, c)].is_zero() {
            continue;
        }
        if h[(r, c)].is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        let pivot = h[(r, c)].clone();
        for i in 0..r {
            let q = h[(i, c)].div_floor(&pivot);
            h.sub_row_multiple(i, r, &q);
            u.sub_row_multiple(i, r, &q);
        }
        r += 1;
    }
    (h, u)
}

/// Smith normal form: returns (S, U, V) with U*M*V = S diagonal,
/// nonnegative, and each diagonal entry dividing the next.
pub fn smith_normal_form(m: &IntegerMatrix) -> (IntegerMatrix, IntegerMatrix, IntegerMatrix) {
    let (rows, cols) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = IntegerMatrix::identity(rows);
    let mut v = IntegerMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        // smallest nonzero entry of the trailing block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = &s[(i, j)];
                if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < s[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        s.swap_rows(t, pi);
        u.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            for i in t + 1..rows {
                if s[(i, t)].is_zero() {
                    continue;
                }
                let (_, x, y, p, q) = gcd_transform(&s[(t, t)], &s[(i, t)]);
                s.combine_rows(t, i, &x, &y, &p, &q);
                u.combine_rows(t, i, &x, &y, &p, &q);
            }
            for j in t + 1..cols {
                if s[(t, j)].is_zero() {
                    continue;
                }
                let (_, x, y, p, q) = gcd_transform(&s[(t, t)], &s[(t, j)]);
                s.combine_cols(t, j, &x, &y, &p, &q);
                v.combine_cols(t, j, &x, &y, &p, &q);
            }
            let col_clear = (t + 1..rows).all(|i| s[(i, t)].is_zero());
            if !col_clear {
                continue;
            }
            // divisibility: pull an offending row into the pivot row
            let pivot = s[(t, t)].clone();
            let offender = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !s[(i, j)].is_multiple_of(&pivot)));
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    s.sub_row_multiple(t, i, &minus_one);
                    u.sub_row_multiple(t, i, &minus_one);
                }
                None => break,
            }
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    (s, u, v)
}

/// A sublattice of Z^n given by a basis in row Hermite normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticeBasis {
    ambient_rank: usize,
    basis: IntegerMatrix,
}

impl LatticeBasis {
    /// Canonicalizes an arbitrary generating set of rows (HNF, zero rows dropped).
    pub fn from_generators(gens: &IntegerMatrix) -> Self {
        let (h, _) = hermite_normal_form(gens);
        let rows: Vec<Vec<BigInt>> =
            h.row_vecs().into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
        let basis = IntegerMatrix::from_rows(gens.cols, &rows).expect("uniform rows");
        Self { ambient_rank: gens.cols, basis }
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn rank(&self) -> usize {
        self.basis.rows
    }

    pub fn basis(&self) -> &IntegerMatrix {
        &self.basis
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.basis.row_vecs()
    }

    /// Membership test by reduction against the echelon basis.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.ambient_rank);
        let mut w = v.to_vec();
        for r in 0..self.basis.rows {
            let row = self.basis.row(r);
            let Some(p) = row.iter().position(|x| !x.is_zero()) else { continue };
            let (q, rem) = w[p].div_rem(&row[p]);
            if !rem.is_zero() {
                return false;
            }
            for (wj, rj) in w.iter_mut().zip(row) {
                *wj -= &q * rj;
            }
        }
        w.iter().all(Zero::is_zero)
    }
}

impl fmt::Debug for LatticeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeBasis(Z^{}, {:?})", self.ambient_rank, self.basis)
    }
}

/// Z-basis of {l : M l = 0}, canonical (HNF, first nonzero entry positive).
pub fn integer_kernel(m: &IntegerMatrix) -> LatticeBasis {
    let (h, u) = hermite_normal_form(&m.transpose());
    let rows: Vec<Vec<BigInt>> = (0..h.rows)
        .filter(|&i| h.row(i).iter().all(Zero::is_zero))
        .map(|i| u.row(i).to_vec())
        .collect();
    let gens = IntegerMatrix::from_rows(m.cols, &rows).expect("uniform rows");
    LatticeBasis::from_generators(&gens)
}

/// (sum parts)! / prod(parts!)
pub fn multinomial(parts: &[i64]) -> Result<BigInt> {
    if let Some(p) = parts.iter().find(|&&p| p < 0) {
        return input(format!("multinomial part {p} is negative"));
    }
    let mut acc = BigInt::one();
    let mut total: i64 = 0;
    for &p in parts {
        // running product of binomials C(total + p, p)
        for i in 1..=p {
            total += 1;
            acc *= total;
            acc /= i;
        }
    }
    Ok(acc)
}

/// Dense rational matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return input(format!("row {i} has length {}, expected {cols}", row.len()));
            }
            data.extend(row);
        }
        Ok(Self { rows: n, cols, data })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        IntegerMatrix::from_i64(rows).to_rational()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigRational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .fold(BigRational::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let data = self.data.iter().map(|a| a * c).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// self*other - other*self
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                if !m[(r, j)].is_zero() {
                    m[(r, j)] *= &inv;
                }
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    if !m[(r, j)].is_zero() {
                        let d = &f * &m[(r, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Nonzero rows of the reduced row echelon form: a canonical basis of
    /// the row space.
    pub fn row_space(&self) -> QMatrix {
        let (r, piv) = self.rref();
        let rows = (0..piv.len()).map(|i| r.row(i).to_vec()).collect();
        QMatrix::from_rows(self.cols, rows).expect("uniform rows")
    }

    /// Inverse of a square matrix, if it exists.
    pub fn inverse(&self) -> Option<QMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = QMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = BigRational::one();
        }
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return None;
        }
        let mut inv = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    /// Solves x * self = target for a row vector x, if solvable.
    pub fn solve_left(&self, target: &[BigRational]) -> Option<Vec<BigRational>> {
        // x * A = b  <=>  A^T x^T = b^T
        let at = self.transpose();
        let mut aug = QMatrix::zeros(at.rows, at.cols + 1);
        for i in 0..at.rows {
            for j in 0..at.cols {
                aug[(i, j)] = at[(i, j)].clone();
            }
            aug[(i, at.cols)] = target[i].clone();
        }
        let (r, piv) = aug.rref();
        if piv.last() == Some(&at.cols) {
            return None;
        }
        let mut x = vec![BigRational::zero(); at.cols];
        for (i, &c) in piv.iter().enumerate() {
            x[c] = r[(i, at.cols)].clone();
        }
        Some(x)
    }

    pub fn to_integer(&self) -> Option<IntegerMatrix> {
        if self.data.iter().any(|x| !x.is_integer()) {
            return None;
        }
        Some(IntegerMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.to_integer()).collect(),
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Rows spanning the rational kernel {x : M x = 0}; one row per free column
/// of the reduced echelon form.
pub fn rational_kernel(m: &QMatrix) -> QMatrix {
    let (r, piv) = m.rref();
    let free: Vec<usize> = (0..m.cols).filter(|c| !piv.contains(c)).collect();
    let rows = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); m.cols];
            v[f] = BigRational::one();
            for (i, &p) in piv.iter().enumerate() {
                v[p] = -r[(i, f)].clone();
            }
            v
        })
        .collect();
    QMatrix::from_rows(m.cols, rows).expect("uniform rows")
}

/// Incrementally maintained reduced echelon basis of a rational row space.
///
/// Rows are stored sparsely; used where the ambient dimension is a few
/// hundred and the inputs are sparse (Casimir images, evaluation matrices).
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    dim: usize,
    // (pivot column, row with leading 1 at pivot)
    rows: Vec<(usize, Vec<(usize, BigRational)>)>,
}

impl EchelonBasis {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis and inserts the remainder if nonzero.
    /// Returns true when the rank grew.
    pub fn insert(&mut self, v: &[BigRational]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut w: std::collections::BTreeMap<usize, BigRational> = v
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| (i, x.clone()))
            .collect();
        for (p, row) in &self.rows {
            if let Some(c) = w.get(p).cloned() {
                for (j, x) in row {
                    let e = w.entry(*j).or_insert_with(BigRational::zero);
                    *e -= &c * x;
                    if e.is_zero() {
                        w.remove(j);
                    }
                }
            }
        }
        let Some((&p, lead)) = w.iter().next() else { return false };
        let inv = lead.recip();
        let row: Vec<(usize, BigRational)> = w.into_iter().map(|(j, x)| (j, x * &inv)).collect();
        self.rows.push((p, row));
        true
    }

    /// Canonical reduced row echelon basis, rows sorted by pivot.
    pub fn to_matrix(&self) -> QMatrix {
        let mut rows = self.rows.clone();
        rows.sort_by_key(|(p, _)| *p);
        // back-substitute so every pivot column is clear in the other rows
        let n = rows.len();
        for i in (0..n).rev() {
            let (p, ref pr) = rows[i].clone();
            for r in rows.iter_mut().take(i) {
                let c = r.1.iter().find(|(j, _)| *j == p).map(|(_, x)| x.clone());
                if let Some(c) = c {
                    let mut acc: std::collections::BTreeMap<usize, BigRational> =
                        r.1.iter().cloned().collect();
                    for (j, x) in pr {
                        let e = acc.entry(*j).or_insert_with(BigRational::zero);
                        *e -= &c * x;
                        if e.is_zero() {
                            acc.remove(j);
                        }
                    }
                    r.1 = acc.into_iter().collect();
                }
            }
        }
        let mut m = QMatrix::zeros(n, self.dim);
        for (i, (_, row)) in rows.iter().enumerate() {
            for (j, x) in row {
                m[(i, *j)] = x.clone();
            }
        }
        m
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn hnf_two_by_two() {
        let m = IntegerMatrix::from_i64(&[&[2, 4], &[1, 3]]);
        let (h, u) = hermite_normal_form(&m);
        // 3 reduced into [0, 2) above the second pivot
        assert_eq!(h, IntegerMatrix::from_i64(&[&[1, 1], &[0, 2]]));
        assert!(u.is_unimodular());
        assert_eq!(u.mul(&m), h);
    }

    #[test]
    fn hnf_identity_and_zero() {
        let id = IntegerMatrix::identity(3);
        let (h, u) = hermite_normal_form(&id);
        assert_eq!(h, id);
        assert_eq!(u, id);
        let z = IntegerMatrix::zeros(2, 3);
        let (h, u) = hermite_normal_form(&z);
        assert!(h.is_zero());
        assert!(u.is_unimodular());
    }

    #[test]
    fn snf_examples() {
        let (s, u, v) = smith_normal_form(&IntegerMatrix::from_i64(&[&[2, 0], &[0, 3]]));
        assert_eq!(s, IntegerMatrix::from_i64(&[&[1, 0], &[0, 6]]));
        assert!(u.is_unimodular() && v.is_unimodular());

        let id = IntegerMatrix::identity(3);
        assert_eq!(smith_normal_form(&id).0, id);

        let z = IntegerMatrix::from_i64(&[&[0]]);
        assert_eq!(smith_normal_form(&z).0, z);
    }

    #[test]
    fn snf_needs_divisibility_fix() {
        let m = IntegerMatrix::from_i64(&[&[4, 0, 0], &[0, 6, 0], &[0, 0, 10]]);
        let (s, u, v) = smith_normal_form(&m);
        assert_eq!(s, IntegerMatrix::from_i64(&[&[2, 0, 0], &[0, 2, 0], &[0, 0, 60]]));
        assert_eq!(u.mul(&m).mul(&v), s);
    }

    #[test]
    fn kernel_of_p1_a_matrix() {
        let m = IntegerMatrix::from_i64(&[&[1, 1, 1], &[-1, 0, 1]]);
        let k = integer_kernel(&m);
        assert_eq!(k.rows(), vec![big(&[1, -2, 1])]);
        // enumeration oracle: every kernel vector with |l_i| <= 3
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                for c in -3i64..=3 {
                    let l = big(&[a, b, c]);
                    let in_kernel = m.mul_vec(&l).iter().all(Zero::is_zero);
                    assert_eq!(in_kernel, k.contains(&l));
                }
            }
        }
    }

    #[test]
    fn kernel_trivial_cases() {
        assert_eq!(integer_kernel(&IntegerMatrix::identity(3)).rank(), 0);
        let k = integer_kernel(&IntegerMatrix::zeros(1, 3));
        assert_eq!(k.basis(), &IntegerMatrix::identity(3));
    }

    #[test]
    fn rational_kernel_examples() {
        let k = rational_kernel(&QMatrix::from_i64(&[&[1, 1]]));
        assert_eq!(k.rows(), 1);
        assert_eq!(k.row(0), &[rat(-1), rat(1)]);

        let full = QMatrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(rational_kernel(&full).rows(), 0);

        // M built from a known 3-dimensional kernel
        let m = QMatrix::from_i64(&[&[1, 0, 2, -1, 3], &[0, 1, 1, 1, -2], &[1, 1, 3, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let k = rational_kernel(&m);
        assert_eq!(k.rows(), 3);
        for i in 0..k.rows() {
            assert!(m.mul_vec(k.row(i)).iter().all(Zero::is_zero));
        }
        assert_eq!(k.rank(), 3);
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 1]).unwrap(), BigInt::from(3));
        assert_eq!(multinomial(&[0, 0]).unwrap(), BigInt::from(1));
        assert_eq!(multinomial(&[3, 3]).unwrap(), BigInt::from(20));
        assert_eq!(multinomial(&[1, 1, 1]).unwrap(), BigInt::from(6));
        assert!(multinomial(&[1, -1]).is_err());
    }

    #[test]
    fn determinant_and_inverse() {
        let m = IntegerMatrix::from_i64(&[&[0, 2, 1], &[1, 1, 0], &[3, 0, 1]]);
        assert_eq!(m.determinant(), BigInt::from(-5));
        let q = m.to_rational();
        let inv = q.inverse().unwrap();
        assert_eq!(q.mul(&inv), QMatrix::identity(3));
        assert!(QMatrix::from_i64(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn echelon_basis_matches_rref() {
        let m = QMatrix::from_i64(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[0, 1, 1, 0], &[1, 3, 4, 4]]);
        let mut e = EchelonBasis::new(4);
        for i in 0..m.rows() {
            e.insert(m.row(i));
        }
        assert_eq!(e.rank(), 2);
        assert_eq!(e.to_matrix(), m.row_space());
    }

    #[test]
    fn solve_left_finds_combination() {
        let a = QMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 1]]);
        let x = a.solve_left(&[rat(2), rat(3), rat(5)]).unwrap();
        assert_eq!(x, vec![rat(2), rat(3)]);
        assert!(a.solve_left(&[rat(1), rat(1), rat(1)]).is_none());
    }
}
