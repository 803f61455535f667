//! Weyl-algebra differential operators in normal order and the truncated
//! Laurent-type series they act on.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{BigInt, BigRational, QMatrix};

/// Exponent pair (u, v) of a normal-ordered monomial a^u d^v.
///
/// Ordered for printing: higher total degree first, then `u`
/// lexicographically descending, then `v` descending.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TermKey {
    pub a: Vec<u32>,
    pub d: Vec<u32>,
}

impl TermKey {
    pub fn degree(&self) -> u32 {
        self.a.iter().sum::<u32>() + self.d.iter().sum::<u32>()
    }
}

impl Ord for TermKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.d.cmp(&self.d))
    }
}

impl PartialOrd for TermKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Element of the Weyl algebra on a_0..a_{n-1}, stored as a finite sum of
/// normal-ordered terms c * a^u * d^v with nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DiffOp {
    nvars: usize,
    terms: BTreeMap<TermKey, BigRational>,
}

fn falling(e: i64, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k as i64 {
        acc *= e - j;
    }
    acc
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

impl DiffOp {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(nvars, c, vec![0; nvars], vec![0; nvars])
    }

    pub fn monomial(nvars: usize, c: BigRational, a: Vec<u32>, d: Vec<u32>) -> Self {
        assert_eq!(a.len(), nvars);
        assert_eq!(d.len(), nvars);
        let mut op = Self::zero(nvars);
        op.add_term(TermKey { a, d }, c);
        op
    }

    /// The multiplication operator a_i.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut a = vec![0; nvars];
        a[i] = 1;
        Self::monomial(nvars, BigRational::one(), a, vec![0; nvars])
    }

    /// The derivation d_i = d/da_i.
    pub fn partial(nvars: usize, i: usize) -> Self {
        let mut d = vec![0; nvars];
        d[i] = 1;
        Self::monomial(nvars, BigRational::one(), vec![0; nvars], d)
    }

    /// sum_i a_i d_i + beta
    pub fn euler(nvars: usize, beta: BigRational) -> Self {
        Self::from_generator(&QMatrix::identity(nvars), beta)
    }

    /// Z_x + beta with Z_x = sum_{j,i} x_{ji} a_j d_i.
    pub fn from_generator(x: &QMatrix, beta: BigRational) -> Self {
        let n = x.rows();
        assert_eq!(n, x.cols(), "generator matrix must be square");
        let mut op = Self::constant(n, beta);
        for j in 0..n {
            for i in 0..n {
                let c = &x[(j, i)];
                if c.is_zero() {
                    continue;
                }
                let mut a = vec![0; n];
                let mut d = vec![0; n];
                a[j] = 1;
                d[i] = 1;
                op.add_term(TermKey { a, d }, c.clone());
            }
        }
        op
    }

    /// Constant-coefficient operator p(d) from the coefficients of p.
    pub fn from_symbol<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (BigRational, Vec<u32>)>,
    {
        let mut op = Self::zero(nvars);
        for (c, d) in terms {
            op.add_term(TermKey { a: vec![0; nvars], d }, c);
        }
        op
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical print order.
    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &BigRational)> {
        self.terms.iter()
    }

    /// Highest number of derivatives in a single term.
    pub fn order(&self) -> u32 {
        self.terms.keys().map(|k| k.d.iter().sum()).max().unwrap_or(0)
    }

    /// True when every term is either constant or a single a_j d_i.
    pub fn is_first_order_linear(&self) -> bool {
        self.terms.keys().all(|k| {
            let (da, dd) = (k.a.iter().sum::<u32>(), k.d.iter().sum::<u32>());
            (da == 1 && dd == 1) || (da == 0 && dd == 0)
        })
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.terms.keys().all(|k| k.a.iter().all(|&u| u == 0))
    }

    /// Recovers (x, beta) from an operator of the form Z_x + beta.
    pub fn generator(&self) -> Option<(QMatrix, BigRational)> {
        if !self.is_first_order_linear() {
            return None;
        }
        let n = self.nvars;
        let mut x = QMatrix::zeros(n, n);
        let mut beta = BigRational::zero();
        for (k, c) in &self.terms {
            match (k.a.iter().position(|&u| u == 1), k.d.iter().position(|&v| v == 1)) {
                (Some(j), Some(i)) => x[(j, i)] = c.clone(),
                _ => beta = c.clone(),
            }
        }
        Some((x, beta))
    }

    /// Minimum over terms of <w, u - v>: how far the operator can lower the
    /// weighted grading. Zero for the zero operator.
    pub fn grading_shift(&self, weights: &[i64]) -> i64 {
        self.terms
            .keys()
            .map(|k| {
                k.a.iter()
                    .zip(&k.d)
                    .zip(weights)
                    .map(|((&u, &v), &w)| w * (u as i64 - v as i64))
                    .sum::<i64>()
            })
            .min()
            .unwrap_or(0)
    }

    /// Evaluates the symbol of a constant-coefficient operator at a point.
    pub fn symbol_at(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.nvars);
        let mut acc = BigRational::zero();
        for (k, c) in &self.terms {
            let mut t = c.clone();
            for (x, &v) in point.iter().zip(&k.d) {
                if v > 0 {
                    t *= num_traits::pow(x.clone(), v as usize);
                }
            }
            acc += t;
        }
        acc
    }

    fn add_term(&mut self, key: TermKey, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(e) => {
                *e += c;
                if e.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableMismatch { expected: self.nvars, found: other.nvars });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    /// Normal-ordered product self * other, using d_i a_i = a_i d_i + 1.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.nvars;
        let mut out = Self::zero(n);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                // d^v a^u' = sum_k prod_i C(v_i,k_i) u'_i!/(u'_i-k_i)! a^{u'-k} d^{v-k}
                let bounds: Vec<u32> = (0..n).map(|i| k1.d[i].min(k2.a[i])).collect();
                let mut ks = vec![0u32; n];
                loop {
                    let mut coef = c1 * c2;
                    for i in 0..n {
                        if ks[i] > 0 {
                            let f = binomial(k1.d[i], ks[i]) * falling(k2.a[i] as i64, ks[i]);
                            coef *= BigRational::from_integer(f);
                        }
                    }
                    let a = (0..n).map(|i| k1.a[i] + k2.a[i] - ks[i]).collect();
                    let d = (0..n).map(|i| k1.d[i] - ks[i] + k2.d[i]).collect();
                    out.add_term(TermKey { a, d }, coef);
                    // odometer over 0..=bounds
                    let mut i = 0;
                    while i < n {
                        if ks[i] < bounds[i] {
                            ks[i] += 1;
                            break;
                        }
                        ks[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    /// self * other - other * self
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            let mut factors = Vec::new();
            for (prefix, exps) in [("a", &k.a), ("d", &k.d)] {
                for (i, &e) in exps.iter().enumerate() {
                    match e {
                        0 => {}
                        1 => factors.push(format!("{prefix}{i}")),
                        _ => factors.push(format!("{prefix}{i}^{e}")),
                    }
                }
            }
            if !factors.is_empty() {
                write!(f, " * {}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffOp[{}]({})", self.nvars, self)
    }
}

impl DiffOp {
    /// Parses the plain-text operator syntax produced by `Display`.
    pub fn parse(nvars: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let mut op = Self::zero(nvars);
        if text == "0" {
            return Ok(op);
        }
        for term in text.split(" + ") {
            let (coef, factors) = match term.split_once(" * ") {
                Some((c, rest)) => (c, Some(rest)),
                None => (term, None),
            };
            let c = BigRational::from_str(coef.trim())
                .map_err(|_| Error::Parse(format!("bad coefficient {coef:?}")))?;
            let mut a = vec![0u32; nvars];
            let mut d = vec![0u32; nvars];
            for factor in factors.into_iter().flat_map(|s| s.split('*')) {
                let factor = factor.trim();
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => {
                        let e = e.parse::<u32>().map_err(|_| {
                            Error::Parse(format!("bad exponent in {factor:?}"))
                        })?;
                        (b, e)
                    }
                    None => (factor, 1),
                };
                let (slot, idx) = if let Some(i) = base.strip_prefix('a') {
                    (&mut a, i)
                } else if let Some(i) = base.strip_prefix('d') {
                    (&mut d, i)
                } else {
                    return Err(Error::Parse(format!("unknown factor {factor:?}")));
                };
                let i: usize =
                    idx.parse().map_err(|_| Error::Parse(format!("bad index in {factor:?}")))?;
                if i >= nvars {
                    return Err(Error::Parse(format!(
                        "variable index {i} out of range for {nvars} variables"
                    )));
                }
                slot[i] += exp;
            }
            op.add_term(TermKey { a, d }, c);
        }
        Ok(op)
    }
}

/// Finite part of a Laurent-type series in a_0..a_{n-1}.
///
/// `truncation = Some(N)` means the stored terms are exactly the terms of
/// the underlying series with weighted grade `<w, e> <= N`; `None` marks an
/// exact finite expression (a polynomial or Laurent polynomial).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FormalSeries {
    nvars: usize,
    weights: Vec<i64>,
    truncation: Option<i64>,
    terms: BTreeMap<Vec<i64>, BigRational>,
}

impl FormalSeries {
    pub fn new(nvars: usize, weights: Vec<i64>, truncation: Option<i64>) -> Self {
        assert_eq!(weights.len(), nvars);
        Self { nvars, weights, truncation, terms: BTreeMap::new() }
    }

    /// Exact polynomial with total-degree grading.
    pub fn polynomial(nvars: usize) -> Self {
        Self::new(nvars, vec![1; nvars], None)
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut s = Self::polynomial(nvars);
        s.add_term(vec![0; nvars], c);
        s
    }

    pub fn monomial(nvars: usize, exponent: Vec<i64>, c: BigRational) -> Self {
        let mut s = Self::polynomial(nvars);
        s.add_term(exponent, c);
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn truncation(&self) -> Option<i64> {
        self.truncation
    }

    pub fn grade(&self, e: &[i64]) -> i64 {
        e.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[i64]) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &BigRational)> {
        self.terms.iter()
    }

    /// Terms sorted by weighted grade, then exponent lexicographically
    /// descending. This is the order used in files.
    pub fn sorted_terms(&self) -> Vec<(&Vec<i64>, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(e1, _), (e2, _)| self.grade(e1).cmp(&self.grade(e2)).then_with(|| e2.cmp(e1)));
        v
    }

    /// Adds c * a^e; terms above the truncation bound are discarded.
    pub fn add_term(&mut self, e: Vec<i64>, c: BigRational) {
        assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        if let Some(n) = self.truncation {
            if self.grade(&e) > n {
                return;
            }
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    /// Overwrites one coefficient; used by mutation tests.
    pub fn set_coefficient(&mut self, e: Vec<i64>, c: BigRational) {
        self.terms.remove(&e);
        self.add_term(e, c);
    }

    pub fn with_truncation(mut self, truncation: Option<i64>) -> Self {
        self.truncation = truncation;
        if let Some(n) = truncation {
            let w = self.weights.clone();
            self.terms.retain(|e, _| e.iter().zip(&w).map(|(a, b)| a * b).sum::<i64>() <= n);
        }
        self
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableMismatch { expected: self.nvars, found: other.nvars });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let truncation = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut out = Self::new(self.nvars, self.weights.clone(), truncation);
        for (e, c) in self.terms.iter().chain(&other.terms) {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::new(self.nvars, self.weights.clone(), self.truncation);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// Product of two exact expressions.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        if self.truncation.is_some() || other.truncation.is_some() {
            return Err(Error::Input("product is only defined for exact expressions".into()));
        }
        let mut out = Self::new(self.nvars, self.weights.clone(), None);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Substitutes a_i = sum_j m[i][j] b_j into an exact polynomial, giving a
    /// polynomial in `m.cols()` new variables.
    pub fn substitute_linear(&self, m: &QMatrix) -> Result<Self> {
        if m.rows() != self.nvars {
            return Err(Error::VariableMismatch { expected: self.nvars, found: m.rows() });
        }
        if self.truncation.is_some() {
            return Err(Error::Input("substitution needs an exact polynomial".into()));
        }
        let k = m.cols();
        let linear: Vec<FormalSeries> = (0..self.nvars)
            .map(|i| {
                let mut p = FormalSeries::polynomial(k);
                for j in 0..k {
                    let mut e = vec![0; k];
                    e[j] = 1;
                    p.add_term(e, m[(i, j)].clone());
                }
                p
            })
            .collect();
        let mut out = FormalSeries::polynomial(k);
        for (e, c) in &self.terms {
            let mut t = FormalSeries::constant(k, c.clone());
            for (i, &ei) in e.iter().enumerate() {
                if ei < 0 {
                    return Err(Error::Input("substitution needs nonnegative exponents".into()));
                }
                for _ in 0..ei {
                    t = t.mul(&linear[i])?;
                }
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let c = c.to_f64().unwrap_or(f64::NAN);
            let mut t = Complex64::new(c, 0.0);
            for (x, &k) in point.iter().zip(e) {
                if k != 0 {
                    t *= x.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Number of stored terms with a negative coefficient.
    pub fn negative_terms(&self) -> usize {
        self.terms.values().filter(|c| c.is_negative()).count()
    }
}

/// Terms in graded order in the operator syntax; a truncated series ends
/// with "+ O(N+1)" in the grading.
impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.sorted_terms();
        if terms.is_empty() {
            f.write_str("0")?;
        }
        for (idx, (e, c)) in terms.into_iter().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k != 0)
                .map(|(i, &k)| if k == 1 { format!("a{i}") } else { format!("a{i}^{k}") })
                .collect();
            if !factors.is_empty() {
                write!(f, " * {}", factors.join("*"))?;
            }
        }
        if let Some(n) = self.truncation {
            write!(f, " + O({})", n + 1)?;
        }
        Ok(())
    }
}

/// Applies a normal-ordered operator term by term.
///
/// If the operator can lower the grading by g, the result is certified only
/// up to `N - g` and terms above that bound are dropped.
pub fn op_apply(op: &DiffOp, s: &FormalSeries) -> Result<FormalSeries> {
    if op.nvars != s.nvars {
        return Err(Error::VariableMismatch { expected: s.nvars, found: op.nvars });
    }
    let shift = op.grading_shift(&s.weights);
    let mut out = FormalSeries::new(s.nvars, s.weights.clone(), s.truncation.map(|n| n + shift));
    for (e, c) in &s.terms {
        for (k, kc) in &op.terms {
            let mut coef = BigInt::one();
            for (&ei, &vi) in e.iter().zip(&k.d) {
                if vi > 0 {
                    coef *= falling(ei, vi);
                    if coef.is_zero() {
                        break;
                    }
                }
            }
            if coef.is_zero() {
                continue;
            }
            let new_e = (0..s.nvars).map(|i| e[i] - k.d[i] as i64 + k.a[i] as i64).collect();
            out.add_term(new_e, c * kc * BigRational::from_integer(coef));
        }
    }
    Ok(out)
}

/// Outcome of checking one operator against one series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnihilationReport {
    pub operator_index: usize,
    pub residual: FormalSeries,
    /// Highest grade at which the residual is exact; `None` when the input
    /// was an exact expression.
    pub certified_order: Option<i64>,
    pub passed: bool,
}

pub fn annihilates(op: &DiffOp, s: &FormalSeries) -> Result<AnnihilationReport> {
    annihilates_indexed(0, op, s)
}

pub fn annihilates_indexed(
    operator_index: usize,
    op: &DiffOp,
    s: &FormalSeries,
) -> Result<AnnihilationReport> {
    let residual = op_apply(op, s)?;
    Ok(AnnihilationReport {
        operator_index,
        certified_order: residual.truncation,
        passed: residual.is_empty(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{frac, rat};
    use proptest::prelude::*;

    fn op(n: usize, s: &str) -> DiffOp {
        DiffOp::parse(n, s).unwrap()
    }

    #[test]
    fn power_rule_and_euler() {
        let s = FormalSeries::monomial(1, vec![-1], rat(1));
        let r = op_apply(&DiffOp::partial(1, 0), &s).unwrap();
        assert_eq!(r, FormalSeries::monomial(1, vec![-2], rat(-1)));
        let e = DiffOp::euler(1, rat(1));
        assert!(op_apply(&e, &s).unwrap().is_empty());
    }

    #[test]
    fn canonical_commutation() {
        let d0 = DiffOp::partial(1, 0);
        let a0 = DiffOp::var(1, 0);
        assert_eq!(d0.compose(&a0).unwrap(), op(1, "1 * a0*d0 + 1"));
        assert_eq!(a0.compose(&d0).unwrap(), op(1, "1 * a0*d0"));
        let a0sq = op(1, "1 * a0^2");
        assert_eq!(d0.compose(&a0sq).unwrap(), op(1, "1 * a0^2*d0 + 2 * a0"));
    }

    #[test]
    fn print_format() {
        let box_op = op(3, "1 * d1*d2 + -1 * d0^2");
        assert_eq!(box_op.to_string(), "-1 * d0^2 + 1 * d1*d2");
        let e = DiffOp::euler(3, rat(1));
        assert_eq!(e.to_string(), "1 * a0*d0 + 1 * a1*d1 + 1 * a2*d2 + 1");
        assert_eq!(DiffOp::zero(2).to_string(), "0");
        assert_eq!(op(2, "1/2 * a1^3*d0").to_string(), "1/2 * a1^3*d0");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(DiffOp::parse(2, "1 * x0").is_err());
        assert!(DiffOp::parse(2, "1 * a5").is_err());
        assert!(DiffOp::parse(2, "q * a0").is_err());
        assert!(DiffOp::parse(2, "1 * a0^z").is_err());
    }

    /// Period series of P^1 with the interior monomial in slot 0:
    /// sum_m binom(2m, m) a1^m a2^m a0^(-2m-1), graded by m.
    fn p1_series(order: i64) -> FormalSeries {
        let mut s = FormalSeries::new(3, vec![0, 1, 0], Some(order));
        let mut c = BigInt::one();
        for m in 0..=order {
            if m > 0 {
                // binom(2m, m) = binom(2m-2, m-1) * (2m)(2m-1)/m^2
                c = c * (2 * m) * (2 * m - 1) / (m * m);
            }
            s.add_term(vec![-2 * m - 1, m, m], BigRational::from_integer(c.clone()));
        }
        s
    }

    /// Constant-term oracle: coefficient of y^0 in (a1 y + a2 / y)^(2m).
    #[test]
    fn p1_series_matches_constant_term_oracle() {
        let s = p1_series(12);
        for m in 0..=12i64 {
            let mut ct = BigInt::zero();
            for j in 0..=2 * m {
                // term a1^j a2^(2m-j) y^(2j - 2m)
                if 2 * j == 2 * m {
                    ct += crate::exact::multinomial(&[j, 2 * m - j]).unwrap();
                }
            }
            assert_eq!(s.coefficient(&[-2 * m - 1, m, m]), BigRational::from_integer(ct));
        }
    }

    #[test]
    fn box_operator_kills_p1_series() {
        let s = p1_series(12);
        let b = op(3, "1 * d1*d2 + -1 * d0^2");
        let rep = annihilates(&b, &s).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.certified_order, Some(11));
        let e = DiffOp::euler(3, rat(1));
        assert!(annihilates(&e, &s).unwrap().passed);
    }

    #[test]
    fn annihilation_trivial_cases() {
        let s = p1_series(4);
        assert!(annihilates(&DiffOp::zero(3), &s).unwrap().passed);
        let one = FormalSeries::constant(1, rat(1));
        assert!(annihilates(&DiffOp::partial(1, 0), &one).unwrap().passed);
        assert!(!annihilates(&DiffOp::var(1, 0), &one).unwrap().passed);
    }

    #[test]
    fn mismatched_variables_rejected() {
        let s = FormalSeries::constant(2, rat(1));
        assert!(op_apply(&DiffOp::partial(3, 0), &s).is_err());
        assert!(DiffOp::partial(3, 0).compose(&DiffOp::partial(2, 0)).is_err());
    }

    #[test]
    fn generator_round_trip() {
        let x = QMatrix::from_i64(&[&[0, 1], &[2, 0]]);
        let z = DiffOp::from_generator(&x, rat(-3));
        let (y, beta) = z.generator().unwrap();
        assert_eq!(y, x);
        assert_eq!(beta, rat(-3));
        assert!(op(2, "1 * d0^2").generator().is_none());
    }

    #[test]
    fn linear_substitution() {
        // (a0 + a1)^2 with a0 = b0 + b1, a1 = b1
        let mut p = FormalSeries::polynomial(2);
        p.add_term(vec![2, 0], rat(1));
        p.add_term(vec![1, 1], rat(2));
        p.add_term(vec![0, 2], rat(1));
        let m = QMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        let q = p.substitute_linear(&m).unwrap();
        let mut expect = FormalSeries::polynomial(2);
        expect.add_term(vec![2, 0], rat(1));
        expect.add_term(vec![1, 1], rat(4));
        expect.add_term(vec![0, 2], rat(4));
        assert_eq!(q, expect);
    }

    fn small_op(n: usize) -> impl Strategy<Value = DiffOp> {
        prop::collection::vec(
            (-3i64..=3, prop::collection::vec(0u32..=2, n), prop::collection::vec(0u32..=2, n)),
            0..4,
        )
        .prop_map(move |terms| {
            let mut o = DiffOp::zero(n);
            for (c, a, d) in terms {
                o = o.add(&DiffOp::monomial(n, rat(c), a, d)).unwrap();
            }
            o
        })
    }

    fn small_series(n: usize) -> impl Strategy<Value = FormalSeries> {
        prop::collection::vec((-3i64..=3, prop::collection::vec(-3i64..=3, n)), 0..5).prop_map(
            move |terms| {
                let mut s = FormalSeries::new(n, vec![1; n], Some(6));
                for (c, e) in terms {
                    s.add_term(e, rat(c));
                }
                s
            },
        )
    }

    proptest! {
        #[test]
        fn compose_is_associative(x in small_op(2), y in small_op(2), z in small_op(2)) {
            let l = x.compose(&y).unwrap().compose(&z).unwrap();
            let r = x.compose(&y.compose(&z).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn partial_var_commutator(e in prop::collection::vec(-4i64..=4, 3), i in 0usize..3, j in 0usize..3) {
            let c = DiffOp::partial(3, i).commutator(&DiffOp::var(3, j)).unwrap();
            let m = FormalSeries::monomial(3, e.clone(), rat(1));
            let lhs = op_apply(&c, &m).unwrap();
            let rhs = if i == j { m } else { FormalSeries::polynomial(3) };
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn apply_respects_composition(x in small_op(2), y in small_op(2), s in small_series(2)) {
            let xy = x.compose(&y).unwrap();
            let lhs = op_apply(&xy, &s).unwrap();
            let rhs = op_apply(&x, &op_apply(&y, &s).unwrap()).unwrap();
            // compare inside the smaller of the two certified ranges
            let n = lhs.truncation().unwrap().min(rhs.truncation().unwrap());
            prop_assert_eq!(lhs.with_truncation(Some(n)), rhs.with_truncation(Some(n)));
        }

        #[test]
        fn print_parse_round_trip(x in small_op(3)) {
            let y = DiffOp::parse(3, &x.to_string()).unwrap();
            prop_assert_eq!(y.to_string(), x.to_string());
            prop_assert_eq!(y, x);
        }
    }

    #[test]
    fn series_display() {
        let mut s = FormalSeries::new(2, vec![0, 1], Some(3));
        s.add_term(vec![0, -1], rat(1));
        s.add_term(vec![2, 1], frac(-1, 2));
        assert_eq!(s.to_string(), "1 * a1^-1 + -1/2 * a0^2*a1 + O(4)");
        assert_eq!(FormalSeries::polynomial(1).to_string(), "0");
        assert_eq!(FormalSeries::constant(1, rat(3)).to_string(), "3");
    }
}
