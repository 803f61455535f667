//! Homogeneous spaces SL_n / P: type-A root data, exterior-power
//! representations, Casimir quadrics, Segre-Veronese coordinates and the
//! subspace V of W_L cut out by linear forms.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::exact::{frac, rat, rational_kernel, BigInt, BigRational, EchelonBasis, IntegerMatrix, QMatrix};
use crate::weyl::FormalSeries;

/// Root data of SL_n. Weights are written in the fundamental-weight basis
/// (Dynkin labels); the positive root e_i - e_j (i < j) is the pair (i, j).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootDataA {
    n: usize,
}

impl RootDataA {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return input("SL_n needs n >= 2");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.n - 1
    }

    pub fn cartan(&self) -> IntegerMatrix {
        let r = self.rank();
        let mut c = IntegerMatrix::zeros(r, r);
        for i in 0..r {
            c[(i, i)] = BigInt::from(2);
            if i + 1 < r {
                c[(i, i + 1)] = BigInt::from(-1);
                c[(i + 1, i)] = BigInt::from(-1);
            }
        }
        c
    }

    pub fn positive_roots(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push((i, j));
            }
        }
        out
    }

    pub fn rho(&self) -> Vec<i64> {
        vec![1; self.rank()]
    }

    pub fn fundamental_weight(&self, k: usize) -> Vec<i64> {
        let mut w = vec![0; self.rank()];
        w[k] = 1;
        w
    }

    /// Dynkin labels of the positive root (i, j) = alpha_i + ... + alpha_{j-1}.
    pub fn root_weight(&self, (i, j): (usize, usize)) -> Vec<i64> {
        let r = self.rank();
        let mut w = vec![0; r];
        for k in i..j {
            w[k] += 2;
            if k > 0 {
                w[k - 1] -= 1;
            }
            if k + 1 < r {
                w[k + 1] -= 1;
            }
        }
        w
    }

    /// <lambda, alpha^vee> for the positive root (i, j).
    pub fn pairing(&self, lambda: &[i64], (i, j): (usize, usize)) -> i64 {
        lambda[i..j].iter().sum()
    }

    /// Invariant form with <alpha, alpha> = 2, computed in e-coordinates
    /// after projecting away the trace.
    pub fn inner(&self, lambda: &[i64], mu: &[i64]) -> BigRational {
        let eps = |w: &[i64]| -> Vec<i64> { (0..self.n).map(|i| w[i.min(w.len())..].iter().sum()).collect() };
        let (a, b) = (eps(lambda), eps(mu));
        let dot: i64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let (sa, sb): (i64, i64) = (a.iter().sum(), b.iter().sum());
        rat(dot) - frac(sa * sb, self.n as i64)
    }

    pub fn is_dominant(&self, lambda: &[i64]) -> bool {
        lambda.len() == self.rank() && lambda.iter().all(|&x| x >= 0)
    }
}

/// prod_{alpha > 0} <lambda + rho, alpha> / <rho, alpha>
pub fn weyl_dimension(root: &RootDataA, lambda: &[i64]) -> Result<BigInt> {
    if !root.is_dominant(lambda) {
        return input(format!("weight {lambda:?} is not dominant for SL_{}", root.n()));
    }
    let shifted: Vec<i64> = lambda.iter().map(|x| x + 1).collect();
    let mut d = BigRational::one();
    for alpha in root.positive_roots() {
        d *= frac(root.pairing(&shifted, alpha), root.pairing(&root.rho(), alpha));
    }
    Ok(d.to_integer())
}

/// A subset S of the simple roots (0-based); the Picard lattice of G/P_S
/// has basis the fundamental weights of the complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicChoice {
    rank: usize,
    s: BTreeSet<usize>,
}

impl ParabolicChoice {
    pub fn new(root: &RootDataA, s: impl IntoIterator<Item = usize>) -> Result<Self> {
        let s: BTreeSet<usize> = s.into_iter().collect();
        if let Some(&bad) = s.iter().find(|&&i| i >= root.rank()) {
            return input(format!("simple root index {bad} out of range for SL_{}", root.n()));
        }
        if s.len() == root.rank() {
            return input("S must be a proper subset of the simple roots");
        }
        Ok(Self { rank: root.rank(), s })
    }

    /// From the complement, 1-based as in alpha_1, ..., alpha_{n-1}.
    pub fn from_complement(root: &RootDataA, complement: &[usize]) -> Result<Self> {
        if let Some(&bad) = complement.iter().find(|&&i| i == 0 || i > root.rank()) {
            return input(format!("simple root index {bad} out of range 1..={}", root.rank()));
        }
        let c: BTreeSet<usize> = complement.iter().map(|i| i - 1).collect();
        Self::new(root, (0..root.rank()).filter(|i| !c.contains(i)))
    }

    pub fn s(&self) -> &BTreeSet<usize> {
        &self.s
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.rank).filter(|i| !self.s.contains(i)).collect()
    }

    pub fn contains_root(&self, (i, j): (usize, usize)) -> bool {
        (i..j).all(|k| self.s.contains(&k))
    }
}

/// 2 rho minus the positive roots of the Levi factor, in Dynkin labels.
pub fn anticanonical_weight(root: &RootDataA, parabolic: &ParabolicChoice) -> Result<Vec<i64>> {
    let mut w: Vec<i64> = root.rho().iter().map(|x| 2 * x).collect();
    for alpha in root.positive_roots() {
        if parabolic.contains_root(alpha) {
            for (x, y) in w.iter_mut().zip(root.root_weight(alpha)) {
                *x -= y;
            }
        }
    }
    for (k, &c) in w.iter().enumerate() {
        let in_s = parabolic.s().contains(&k);
        if (in_s && c != 0) || (!in_s && c < 2) {
            return Err(Error::Consistency(format!("anticanonical weight {w:?} has coefficient {c} at {k}")));
        }
    }
    Ok(w)
}

/// Matrices of the Chevalley generators of sl_n on a representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepData {
    n: usize,
    labels: Vec<String>,
    e: Vec<QMatrix>,
    f: Vec<QMatrix>,
    h: Vec<QMatrix>,
    highest_vector: Vec<BigRational>,
    highest_weight: Vec<i64>,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exterior power of C^n with basis the k-subsets in lexicographic order.
pub fn fundamental_rep(n: usize, k: usize) -> Result<RepData> {
    if n < 2 || k == 0 || k >= n {
        return input(format!("exterior power {k} of C^{n} is not a fundamental representation"));
    }
    let basis = subsets(n, k);
    let index: BTreeMap<&Vec<usize>, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let m = basis.len();
    // E_ab e_S: replace b by a, sign from the elements strictly between
    let unit = |a: usize, b: usize| -> QMatrix {
        let mut x = QMatrix::zeros(m, m);
        for (col, s) in basis.iter().enumerate() {
            if a == b {
                if s.contains(&a) {
                    x[(col, col)] = rat(1);
                }
                continue;
            }
            if !s.contains(&b) || s.contains(&a) {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let between = s.iter().filter(|&&c| lo < c && c < hi).count();
            let mut t: Vec<usize> = s.iter().map(|&c| if c == b { a } else { c }).collect();
            t.sort_unstable();
            let sign = if between % 2 == 0 { 1 } else { -1 };
            x[(index[&t], col)] = rat(sign);
        }
        x
    };
    let e = (0..n - 1).map(|i| unit(i, i + 1)).collect();
    let f = (0..n - 1).map(|i| unit(i + 1, i)).collect();
    let h = (0..n - 1).map(|i| unit(i, i).sub(&unit(i + 1, i + 1))).collect();
    let labels = basis
        .iter()
        .map(|s| format!("e{}", s.iter().map(|c| (c + 1).to_string()).collect::<String>()))
        .collect();
    let mut highest_vector = vec![BigRational::zero(); m];
    highest_vector[0] = rat(1);
    let root = RootDataA::new(n)?;
    Ok(RepData {
        n,
        labels,
        e,
        f,
        h,
        highest_vector,
        highest_weight: root.fundamental_weight(k - 1),
    })
}

fn matvec(m: &QMatrix, v: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); m.rows()];
    let nz: Vec<usize> = (0..v.len()).filter(|&j| !v[j].is_zero()).collect();
    for (i, o) in out.iter_mut().enumerate() {
        for &j in &nz {
            let x = &m[(i, j)];
            if !x.is_zero() {
                *o += x * &v[j];
            }
        }
    }
    out
}

/// exp(t N) v for nilpotent N.
fn exp_apply(nil: &QMatrix, t: &BigRational, v: &[BigRational]) -> Vec<BigRational> {
    let mut acc = v.to_vec();
    let mut term = v.to_vec();
    let mut k = 1i64;
    loop {
        term = matvec(nil, &term);
        if term.iter().all(Zero::is_zero) {
            return acc;
        }
        let c = t / rat(k);
        term.iter_mut().for_each(|x| *x *= &c);
        acc.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
        k += 1;
    }
}

/// Random group element in the big cell: a nonzero scalar and one
/// parameter per positive root, each in [-3, 3] with denominator <= 7.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSample {
    pub scalar: BigRational,
    pub params: Vec<BigRational>,
}

pub fn sample_group_elements(root: &RootDataA, count: usize, seed: u64) -> Vec<GroupSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roots = root.positive_roots().len();
    let draw = |rng: &mut ChaCha8Rng| {
        let d: i64 = rng.gen_range(1..=7);
        frac(rng.gen_range(-3 * d..=3 * d), d)
    };
    (0..count)
        .map(|_| {
            let mut scalar = draw(&mut rng);
            while scalar.is_zero() {
                scalar = draw(&mut rng);
            }
            let params = (0..roots).map(|_| draw(&mut rng)).collect();
            GroupSample { scalar, params }
        })
        .collect()
}

impl RepData {
    /// Builds a representation from explicit generator matrices.
    pub fn from_matrices(
        n: usize,
        labels: Vec<String>,
        e: Vec<QMatrix>,
        f: Vec<QMatrix>,
        h: Vec<QMatrix>,
        highest_vector: Vec<BigRational>,
        highest_weight: Vec<i64>,
    ) -> Result<Self> {
        let m = labels.len();
        let all_square = e.iter().chain(&f).chain(&h).all(|x| x.rows() == m && x.cols() == m);
        if e.len() != n - 1 || f.len() != n - 1 || h.len() != n - 1 || !all_square {
            return input("generator matrices do not match the representation dimension");
        }
        if highest_vector.len() != m || highest_weight.len() != n - 1 {
            return input("highest weight data has the wrong length");
        }
        Ok(Self { n, labels, e, f, h, highest_vector, highest_weight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn e(&self, i: usize) -> &QMatrix {
        &self.e[i]
    }

    pub fn f(&self, i: usize) -> &QMatrix {
        &self.f[i]
    }

    pub fn h(&self, i: usize) -> &QMatrix {
        &self.h[i]
    }

    pub fn highest_vector(&self) -> &[BigRational] {
        &self.highest_vector
    }

    pub fn highest_weight(&self) -> &[i64] {
        &self.highest_weight
    }

    /// Chevalley generators labeled e1.., f1.., h1.. (1-based).
    pub fn chevalley(&self) -> Vec<(String, QMatrix)> {
        let r = self.n - 1;
        let mut out = Vec::with_capacity(3 * r);
        for (name, ms) in [("e", &self.e), ("f", &self.f), ("h", &self.h)] {
            for (i, m) in ms.iter().enumerate() {
                out.push((format!("{name}{}", i + 1), m.clone()));
            }
        }
        out
    }

    /// Chevalley generators plus the scaling element (identity).
    pub fn symmetry_matrices(&self) -> Vec<(String, QMatrix)> {
        let mut out = self.chevalley();
        out.push(("scaling:euler".to_string(), QMatrix::identity(self.dim())));
        out
    }

    /// Images of E_ij and E_ji for every positive root (i, j), obtained by
    /// iterated brackets of the simple generators.
    pub fn root_vectors(&self) -> Vec<((usize, usize), QMatrix, QMatrix)> {
        let mut x: BTreeMap<(usize, usize), QMatrix> = BTreeMap::new();
        let mut y: BTreeMap<(usize, usize), QMatrix> = BTreeMap::new();
        for len in 1..self.n {
            for i in 0..self.n - len {
                let j = i + len;
                if len == 1 {
                    x.insert((i, j), self.e[i].clone());
                    y.insert((i, j), self.f[i].clone());
                } else {
                    let xi = self.e[i].commutator(&x[&(i + 1, j)]);
                    let yi = y[&(i + 1, j)].commutator(&self.f[i]);
                    x.insert((i, j), xi);
                    y.insert((i, j), yi);
                }
            }
        }
        x.into_iter().map(|(k, xm)| (k, xm, y.remove(&k).expect("paired"))).collect()
    }

    /// [h_i, e_j] = C_ij e_j, [h_i, f_j] = -C_ij f_j, [e_i, f_j] = delta h_i,
    /// [h_i, h_j] = 0, and e_i kills the highest vector.
    pub fn check_axioms(&self) -> Result<()> {
        let root = RootDataA::new(self.n)?;
        let c = root.cartan();
        let r = self.n - 1;
        let fail = |what: String| Err(Error::Consistency(format!("representation axiom fails: {what}")));
        for i in 0..r {
            for j in 0..r {
                let cij = BigRational::from_integer(c[(i, j)].clone());
                if self.h[i].commutator(&self.e[j]) != self.e[j].scale(&cij) {
                    return fail(format!("[h{}, e{}]", i + 1, j + 1));
                }
                if self.h[i].commutator(&self.f[j]) != self.f[j].scale(&-cij) {
                    return fail(format!("[h{}, f{}]", i + 1, j + 1));
                }
                let ef = self.e[i].commutator(&self.f[j]);
                let want = if i == j { self.h[i].clone() } else { QMatrix::zeros(self.dim(), self.dim()) };
                if ef != want {
                    return fail(format!("[e{}, f{}]", i + 1, j + 1));
                }
                if !self.h[i].commutator(&self.h[j]).is_zero() {
                    return fail(format!("[h{}, h{}]", i + 1, j + 1));
                }
            }
            if matvec(&self.e[i], &self.highest_vector).iter().any(|x| !x.is_zero()) {
                return fail(format!("e{} on the highest vector", i + 1));
            }
            let hv = matvec(&self.h[i], &self.highest_vector);
            let w = rat(self.highest_weight[i]);
            if hv.iter().zip(&self.highest_vector).any(|(a, b)| a != &(b * &w)) {
                return fail(format!("h{} eigenvalue on the highest vector", i + 1));
            }
        }
        Ok(())
    }

    /// Dual representation: -X^T for every generator.
    pub fn dual_matrices(&self) -> Vec<(String, QMatrix)> {
        self.chevalley().into_iter().map(|(l, m)| (l, m.transpose().scale(&-BigRational::one()))).collect()
    }

    /// The point scalar * prod_alpha exp(t_alpha f_alpha) v_hw.
    pub fn orbit_point(&self, g: &GroupSample) -> Vec<BigRational> {
        let mut v = self.highest_vector.clone();
        for ((_, _, y), t) in self.root_vectors().iter().zip(&g.params).rev() {
            v = exp_apply(y, t, &v);
        }
        v.iter_mut().for_each(|x| *x *= &g.scalar);
        v
    }

    pub fn sample_cone_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<BigRational>>> {
        let root = RootDataA::new(self.n)?;
        Ok(sample_group_elements(&root, count, seed).iter().map(|g| self.orbit_point(g)).collect())
    }
}

/// Quadrics in the dual coordinates u_0..u_{m-1}, stored as an echelon
/// basis over the monomials u_i u_j (i <= j).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadricSpace {
    nvars: usize,
    raw_count: usize,
    basis: QMatrix,
}

fn quad_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * m - i * (i + 1) / 2 + j
}

fn quad_monomials(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            out.push((i, j));
        }
    }
    out
}

impl QuadricSpace {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Number of generators before reduction, m(m+1)/2.
    pub fn raw_count(&self) -> usize {
        self.raw_count
    }

    pub fn basis(&self) -> &QMatrix {
        &self.basis
    }

    pub fn polynomials(&self) -> Vec<FormalSeries> {
        let mons = quad_monomials(self.nvars);
        (0..self.basis.rows())
            .map(|r| {
                let mut p = FormalSeries::polynomial(self.nvars);
                for (c, &(i, j)) in self.basis.row(r).iter().zip(&mons) {
                    let mut e = vec![0; self.nvars];
                    e[i] += 1;
                    e[j] += 1;
                    p.add_term(e, c.clone());
                }
                p
            })
            .collect()
    }

    pub fn evaluate(&self, point: &[BigRational]) -> Vec<BigRational> {
        let mons = quad_monomials(self.nvars);
        (0..self.basis.rows())
            .map(|r| {
                self.basis
                    .row(r)
                    .iter()
                    .zip(&mons)
                    .filter(|(c, _)| !c.is_zero())
                    .fold(BigRational::zero(), |acc, (c, &(i, j))| acc + c * &point[i] * &point[j])
            })
            .collect()
    }
}

/// Sparse quadratic form keyed by monomial index.
type Quad = BTreeMap<usize, BigRational>;

/// Derivation action of a matrix A (A u_j = sum_i A_ij u_i) on a quadratic.
fn derive_quad(a: &QMatrix, q: &Quad, m: usize, mons: &[(usize, usize)]) -> Quad {
    let mut out = Quad::new();
    let mut push = |idx: usize, c: BigRational| {
        let e = out.entry(idx).or_insert_with(BigRational::zero);
        *e += c;
    };
    for (&k, c) in q {
        let (x, y) = mons[k];
        for (moved, other) in [(x, y), (y, x)] {
            for i in 0..m {
                let aij = &a[(i, moved)];
                if !aij.is_zero() {
                    push(quad_index(m, i, other), c * aij);
                }
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn add_scaled(acc: &mut Quad, q: &Quad, s: &BigRational) {
    for (&k, c) in q {
        let e = acc.entry(k).or_insert_with(BigRational::zero);
        *e += c * s;
    }
}

/// Degree-2 part of the ideal of the highest-weight cone in V: the image of
/// C - <2 lambda + 2 rho, 2 lambda> on Sym^2 V*, with C the Casimir of the
/// trace form (scaled by `scale`, the scalar likewise).
pub fn casimir_quadrics_scaled(rep: &RepData, scale: &BigRational) -> Result<QuadricSpace> {
    let root = RootDataA::new(rep.n())?;
    let m = rep.dim();
    let lambda = rep.highest_weight();
    let two_l: Vec<i64> = lambda.iter().map(|x| 2 * x).collect();
    let two_l_rho: Vec<i64> = lambda.iter().map(|x| 2 * x + 2).collect();
    let target = root.inner(&two_l_rho, &two_l) * scale;

    let dual = |x: &QMatrix| x.transpose().scale(&-BigRational::one());
    let roots: Vec<(QMatrix, QMatrix)> = rep.root_vectors().iter().map(|(_, x, y)| (dual(x), dual(y))).collect();
    let hs: Vec<QMatrix> = rep.h.iter().map(dual).collect();
    let cinv = root.cartan().to_rational().inverse().expect("Cartan matrix is invertible");
    let mons = quad_monomials(m);

    let casimir = |q: &Quad| -> Quad {
        let mut acc = Quad::new();
        for (x, y) in &roots {
            add_scaled(&mut acc, &derive_quad(x, &derive_quad(y, q, m, &mons), m, &mons), scale);
            add_scaled(&mut acc, &derive_quad(y, &derive_quad(x, q, m, &mons), m, &mons), scale);
        }
        let hq: Vec<Quad> = hs.iter().map(|h| derive_quad(h, q, m, &mons)).collect();
        for a in 0..hs.len() {
            for b in 0..hs.len() {
                if !cinv[(a, b)].is_zero() {
                    add_scaled(&mut acc, &derive_quad(&hs[a], &hq[b], m, &mons), &(&cinv[(a, b)] * scale));
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        acc
    };

    // the Casimir must act on V* by the scalar <lambda, lambda + 2 rho>
    let c_lambda = {
        let l_2rho: Vec<i64> = lambda.iter().map(|x| x + 2).collect();
        root.inner(lambda, &l_2rho)
    };
    let mut cv = QMatrix::zeros(m, m);
    for (x, y) in &roots {
        cv = cv.add(&x.mul(y)).add(&y.mul(x));
    }
    for a in 0..hs.len() {
        for b in 0..hs.len() {
            cv = cv.add(&hs[a].mul(&hs[b]).scale(&cinv[(a, b)]));
        }
    }
    if cv != QMatrix::identity(m).scale(&c_lambda) {
        return Err(Error::Consistency("Casimir is not scalar on the representation".into()));
    }

    let mut basis = EchelonBasis::new(mons.len());
    for k in 0..mons.len() {
        let q: Quad = [(k, BigRational::one())].into_iter().collect();
        let mut image = casimir(&q);
        add_scaled(&mut image, &q, &-target.clone());
        let mut dense = vec![BigRational::zero(); mons.len()];
        for (idx, c) in image {
            dense[idx] = c;
        }
        basis.insert(&dense);
    }
    Ok(QuadricSpace { nvars: m, raw_count: mons.len(), basis: basis.to_matrix() })
}

pub fn casimir_quadrics(rep: &RepData) -> Result<QuadricSpace> {
    casimir_quadrics_scaled(rep, &BigRational::one())
}

/// Multi-exponents of W_L = Sym^{n_1} W_1 (x) ... (x) Sym^{n_r} W_r.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorIndexSet {
    dims: Vec<usize>,
    degrees: Vec<u32>,
    elements: Vec<Vec<Vec<u32>>>,
}

fn compositions(m: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, total, &mut vec![0; m], &mut out);
    out
}

impl TensorIndexSet {
    pub fn new(dims: &[usize], degrees: &[u32]) -> Self {
        let mut elements: Vec<Vec<Vec<u32>>> = vec![vec![]];
        for (&m, &d) in dims.iter().zip(degrees) {
            let comps = compositions(m, d);
            elements = elements
                .into_iter()
                .flat_map(|prefix| {
                    comps.iter().map(move |c| {
                        let mut p = prefix.clone();
                        p.push(c.clone());
                        p
                    })
                })
                .collect();
        }
        Self { dims: dims.to_vec(), degrees: degrees.to_vec(), elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Vec<Vec<u32>>] {
        &self.elements
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn position(&self, v: &[Vec<u32>]) -> Option<usize> {
        self.elements.binary_search_by(|x| v.cmp(x)).ok()
    }
}

/// Quadruples (u, v, w, t) of indices into the set with u + v = w + t,
/// {u, v} < {w, t}; all other binomials are differences of these.
pub fn veronese_binomials(set: &TensorIndexSet) -> Vec<(usize, usize, usize, usize)> {
    let mut groups: BTreeMap<Vec<u32>, Vec<(usize, usize)>> = BTreeMap::new();
    let flat = |v: &Vec<Vec<u32>>| -> Vec<u32> { v.iter().flatten().copied().collect() };
    let elems: Vec<Vec<u32>> = set.elements().iter().map(flat).collect();
    for i in 0..elems.len() {
        for j in i..elems.len() {
            let s: Vec<u32> = elems[i].iter().zip(&elems[j]).map(|(a, b)| a + b).collect();
            groups.entry(s).or_default().push((i, j));
        }
    }
    let mut out = Vec::new();
    for pairs in groups.values() {
        for (k, &(u, v)) in pairs.iter().enumerate() {
            for &(w, t) in &pairs[k + 1..] {
                out.push((u, v, w, t));
            }
        }
    }
    out.sort_unstable();
    out
}

/// The tensor module W_L for L = sum n_beta lambda_beta over the
/// complement of S, with its coordinates zeta_v and generator matrices.
#[derive(Clone, Debug)]
pub struct SegreVeronese {
    root: RootDataA,
    factors: Vec<RepData>,
    index: TensorIndexSet,
    rep: RepData,
}

/// The weight sum n_beta lambda_beta.
pub fn bundle_weight(root: &RootDataA, parabolic: &ParabolicChoice, coefficients: &[u32]) -> Vec<i64> {
    let mut w = vec![0; root.rank()];
    for (&b, &c) in parabolic.complement().iter().zip(coefficients) {
        w[b] = c as i64;
    }
    w
}

/// Coefficients of -K over the complement of S.
pub fn anticanonical_coefficients(root: &RootDataA, parabolic: &ParabolicChoice) -> Result<Vec<u32>> {
    let w = anticanonical_weight(root, parabolic)?;
    Ok(parabolic.complement().iter().map(|&b| w[b] as u32).collect())
}

/// W_L with every n_beta >= 1; `require_two` enforces n_beta >= 2, the
/// hypothesis under which the Veronese binomials and V-perp forms
/// describe the image of G/P in W_L.
pub fn segre_veronese(
    root: &RootDataA,
    parabolic: &ParabolicChoice,
    coefficients: &[u32],
    require_two: bool,
) -> Result<SegreVeronese> {
    let comp = parabolic.complement();
    if coefficients.len() != comp.len() {
        return input(format!(
            "bundle needs one coefficient per simple root outside S ({}), found {}",
            comp.len(),
            coefficients.len()
        ));
    }
    let min = if require_two { 2 } else { 1 };
    if let Some(c) = coefficients.iter().find(|&&c| c < min) {
        return input(format!(
            "bundle coefficient {c} < {min}: the Segre-Veronese description needs every n_beta >= 2"
        ));
    }
    let factors: Vec<RepData> =
        comp.iter().map(|&b| fundamental_rep(root.n(), b + 1)).collect::<Result<_>>()?;
    let dims: Vec<usize> = factors.iter().map(RepData::dim).collect();
    let index = TensorIndexSet::new(&dims, coefficients);
    let rep = tensor_rep(root, &factors, &index, bundle_weight(root, parabolic, coefficients))?;
    Ok(SegreVeronese { root: *root, factors, index, rep })
}

/// Action on the zeta-coordinates: M[v, v - e_j + e_k] += v_j X_jk summed
/// over factors, which is the derivative of zeta_v(g u) = (g u)^v.
fn tensor_rep(root: &RootDataA, factors: &[RepData], index: &TensorIndexSet, weight: Vec<i64>) -> Result<RepData> {
    let q = index.len();
    let lift = |pick: &dyn Fn(&RepData) -> &QMatrix| -> QMatrix {
        let mut mtx = QMatrix::zeros(q, q);
        for (row, v) in index.elements().iter().enumerate() {
            for (fi, factor) in factors.iter().enumerate() {
                let x = pick(factor);
                for (j, &vj) in v[fi].iter().enumerate() {
                    if vj == 0 {
                        continue;
                    }
                    for k in 0..factor.dim() {
                        let xjk = &x[(j, k)];
                        if xjk.is_zero() {
                            continue;
                        }
                        let mut w = v.clone();
                        w[fi][j] -= 1;
                        w[fi][k] += 1;
                        let col = index.position(&w).expect("same multidegree");
                        mtx[(row, col)] += xjk * rat(vj as i64);
                    }
                }
            }
        }
        mtx
    };
    let r = root.rank();
    let e = (0..r).map(|i| lift(&|f: &RepData| &f.e[i])).collect();
    let f = (0..r).map(|i| lift(&|f: &RepData| &f.f[i])).collect();
    let h = (0..r).map(|i| lift(&|f: &RepData| &f.h[i])).collect();
    let labels = index
        .elements()
        .iter()
        .map(|v| {
            v.iter()
                .zip(factors)
                .map(|(ex, fac)| {
                    let parts: Vec<String> = ex
                        .iter()
                        .zip(fac.labels())
                        .filter(|(&k, _)| k > 0)
                        .map(|(&k, l)| if k == 1 { l.clone() } else { format!("{l}^{k}") })
                        .collect();
                    parts.join("*")
                })
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    let hw: Vec<Vec<u32>> = factors
        .iter()
        .zip(index.degrees())
        .map(|(fac, &d)| {
            let mut c = vec![0; fac.dim()];
            let top = fac.highest_vector().iter().position(|x| !x.is_zero()).expect("nonzero");
            c[top] = d;
            c
        })
        .collect();
    let mut highest_vector = vec![BigRational::zero(); q];
    highest_vector[index.position(&hw).expect("present")] = rat(1);
    RepData::from_matrices(root.n(), labels, e, f, h, highest_vector, weight)
}

impl SegreVeronese {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn index(&self) -> &TensorIndexSet {
        &self.index
    }

    pub fn rep(&self) -> &RepData {
        &self.rep
    }

    pub fn factors(&self) -> &[RepData] {
        &self.factors
    }

    pub fn weight(&self) -> &[i64] {
        self.rep.highest_weight()
    }

    /// zeta-coordinates of the orbit point: the scalar times prod_i u_i^{v_i}
    /// with u_i the orbit point of the same group element in W_i.
    pub fn orbit_point(&self, g: &GroupSample) -> Vec<BigRational> {
        let us: Vec<Vec<BigRational>> = self
            .factors
            .iter()
            .map(|f| f.orbit_point(&GroupSample { scalar: rat(1), params: g.params.clone() }))
            .collect();
        self.index
            .elements()
            .iter()
            .map(|v| {
                let mut c = g.scalar.clone();
                for (u, ex) in us.iter().zip(v) {
                    for (x, &k) in u.iter().zip(ex) {
                        if k > 0 {
                            c *= num_traits::pow(x.clone(), k as usize);
                        }
                    }
                }
                c
            })
            .collect()
    }

    pub fn sample_cone_points(&self, count: usize, seed: u64) -> Vec<Vec<BigRational>> {
        sample_group_elements(&self.root, count, seed).iter().map(|g| self.orbit_point(g)).collect()
    }
}

/// Linear forms on W_L, one per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFormSpace {
    pub forms: QMatrix,
}

impl LinearFormSpace {
    pub fn dim(&self) -> usize {
        self.forms.rows()
    }
}

/// Linear forms vanishing on sampled points of the cone, checked against
/// dim W_L - dim V from the Weyl dimension formula. Resamples with a
/// doubled budget up to three times.
pub fn v_perp(sv: &SegreVeronese, budget: usize, seed: u64) -> Result<LinearFormSpace> {
    let q = sv.dim();
    if budget < q {
        return input(format!("sample budget {budget} is below dim W_L = {q}"));
    }
    let expected = weyl_dimension(&sv.root, sv.weight())?;
    let expected = q - num_traits::ToPrimitive::to_usize(&expected).expect("small dimension");
    let mut budget = budget;
    for round in 0..3u64 {
        let pts = sv.sample_cone_points(budget, seed.wrapping_add(round));
        let mut span = EchelonBasis::new(q);
        for p in &pts {
            span.insert(p);
        }
        let kernel = rational_kernel(&span.to_matrix());
        if kernel.rows() == expected {
            return Ok(LinearFormSpace { forms: kernel });
        }
        budget *= 2;
    }
    Err(Error::SampleRank("insufficient samples or representation-theory inconsistency".into()))
}

/// The subrepresentation generated by the highest vector under lowering
/// operators, with coordinates the pivot coordinates of its reduced
/// echelon basis. Returns the restricted representation and that basis,
/// one row per vector.
pub fn highest_weight_submodule(rep: &RepData, max_dim: usize) -> Result<(RepData, QMatrix)> {
    let q = rep.dim();
    let mut span = EchelonBasis::new(q);
    let mut queue = VecDeque::from([rep.highest_vector().to_vec()]);
    while let Some(v) = queue.pop_front() {
        if !span.insert(&v) {
            continue;
        }
        if span.rank() > max_dim {
            return input(format!("highest-weight submodule exceeds the size limit {max_dim}"));
        }
        for f in &rep.f {
            let w = matvec(f, &v);
            if w.iter().any(|x| !x.is_zero()) {
                queue.push_back(w);
            }
        }
    }
    let basis = span.to_matrix();
    let pivots: Vec<usize> = (0..basis.rows())
        .map(|r| basis.row(r).iter().position(|x| !x.is_zero()).expect("nonzero row"))
        .collect();
    let d = basis.rows();
    let restrict = |x: &QMatrix| -> Result<QMatrix> {
        let mut out = QMatrix::zeros(d, d);
        for k in 0..d {
            let image = matvec(x, basis.row(k));
            let mut back = vec![BigRational::zero(); q];
            for (l, &p) in pivots.iter().enumerate() {
                out[(l, k)] = image[p].clone();
                if !image[p].is_zero() {
                    back.iter_mut().zip(basis.row(l)).for_each(|(b, c)| *b += c * &image[p]);
                }
            }
            if back != image {
                return Err(Error::Consistency("lowering span is not stable".into()));
            }
        }
        Ok(out)
    };
    let e = rep.e.iter().map(restrict).collect::<Result<_>>()?;
    let f = rep.f.iter().map(restrict).collect::<Result<_>>()?;
    let h = rep.h.iter().map(restrict).collect::<Result<_>>()?;
    let labels = pivots.iter().map(|&p| rep.labels()[p].clone()).collect();
    let highest_vector = pivots.iter().map(|&p| rep.highest_vector()[p].clone()).collect();
    let sub = RepData::from_matrices(rep.n(), labels, e, f, h, highest_vector, rep.highest_weight().to_vec())?;
    Ok((sub, basis))
}
