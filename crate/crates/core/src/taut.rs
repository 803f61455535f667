//! Tautological systems: assembly from toric and flag data, transport along
//! equivariant injections, invariant-theory systems and enhanced systems.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, ToPrimitive, Zero};

use crate::error::{input, Error, Result};
use crate::exact::{integer_kernel, rational_kernel, rat, BigInt, BigRational, QMatrix};
use crate::flag::{
    casimir_quadrics, highest_weight_submodule, segre_veronese, v_perp, veronese_binomials, weyl_dimension,
    ParabolicChoice, RepData, RootDataA, SegreVeronese,
};
use crate::toric::AMatrix;
use crate::weyl::{op_apply, DiffOp, FormalSeries};

/// A first-order operator Z_x + beta(x).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryOp {
    pub label: String,
    pub op: DiffOp,
    /// Marks a scaling direction of the torus factor.
    pub scaling: bool,
}

impl SymmetryOp {
    pub fn new(label: impl Into<String>, x: &QMatrix, beta: BigRational, scaling: bool) -> Self {
        Self { label: label.into(), op: DiffOp::from_generator(x, beta), scaling }
    }

    pub fn matrix(&self) -> QMatrix {
        self.op.generator().expect("symmetry op is first order").0
    }

    pub fn beta(&self) -> BigRational {
        self.op.generator().expect("symmetry op is first order").1
    }
}

/// A constant-coefficient operator p(d).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialOp {
    pub label: String,
    pub op: DiffOp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TautSystem {
    variables: Vec<String>,
    symmetry: Vec<SymmetryOp>,
    polynomial: Vec<PolynomialOp>,
}

impl TautSystem {
    pub fn new(
        variables: Vec<String>,
        symmetry: Vec<SymmetryOp>,
        polynomial: Vec<PolynomialOp>,
    ) -> Result<Self> {
        let n = variables.len();
        for s in &symmetry {
            if s.op.nvars() != n {
                return Err(Error::VariableMismatch { expected: n, found: s.op.nvars() });
            }
            if !s.op.is_first_order_linear() {
                return input(format!("symmetry operator {} is not of the form Z_x + beta", s.label));
            }
        }
        for p in &polynomial {
            if p.op.nvars() != n {
                return Err(Error::VariableMismatch { expected: n, found: p.op.nvars() });
            }
            if !p.op.has_constant_coefficients() {
                return input(format!("polynomial operator {} has nonconstant coefficients", p.label));
            }
        }
        Ok(Self { variables, symmetry, polynomial })
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn symmetry_ops(&self) -> &[SymmetryOp] {
        &self.symmetry
    }

    pub fn polynomial_ops(&self) -> &[PolynomialOp] {
        &self.polynomial
    }

    /// beta over the labeled symmetry directions.
    pub fn beta(&self) -> Vec<BigRational> {
        self.symmetry.iter().map(SymmetryOp::beta).collect()
    }

    /// Symmetry operators first, then polynomial operators.
    pub fn operators(&self) -> Vec<(&str, &DiffOp)> {
        self.symmetry
            .iter()
            .map(|s| (s.label.as_str(), &s.op))
            .chain(self.polynomial.iter().map(|p| (p.label.as_str(), &p.op)))
            .collect()
    }

    pub fn num_operators(&self) -> usize {
        self.symmetry.len() + self.polynomial.len()
    }

    /// First-order constant-coefficient operators (the linear forms cutting
    /// out a subspace).
    pub fn linear_ops(&self) -> impl Iterator<Item = &PolynomialOp> {
        self.polynomial.iter().filter(|p| p.op.order() == 1)
    }
}

pub(crate) fn variable_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// d^{l+} - d^{l-}
pub fn box_operator(l: &[BigInt]) -> DiffOp {
    let part = |x: &BigInt| x.max(&BigInt::zero()).to_u32().expect("exponent fits in u32");
    let plus: Vec<u32> = l.iter().map(part).collect();
    let minus: Vec<u32> = l.iter().map(|x| part(&-x)).collect();
    DiffOp::from_symbol(l.len(), [(BigRational::one(), plus), (-BigRational::one(), minus)])
}

fn fmt_vec<T: std::fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

/// GKZ system of an A-matrix: one Euler-type operator per row with
/// beta = (1; 0, ..., 0) on (scaling; torus) and one box operator per
/// HNF basis vector of ker A.
pub fn build_toric_gkz(a: &AMatrix) -> Result<TautSystem> {
    let rows = a.rows();
    if rows[0].iter().any(|&x| x != 1) {
        return input("first row of the A-matrix must be all ones");
    }
    let p = a.num_columns();
    let mut symmetry = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let mut x = QMatrix::zeros(p, p);
        for (i, &v) in row.iter().enumerate() {
            x[(i, i)] = rat(v);
        }
        let (label, beta, scaling) =
            if k == 0 { ("scaling:euler".to_string(), rat(1), true) } else { (format!("torus:{k}"), rat(0), false) };
        symmetry.push(SymmetryOp::new(label, &x, beta, scaling));
    }
    let polynomial = integer_kernel(&a.to_matrix())
        .rows()
        .iter()
        .map(|l| PolynomialOp { label: format!("box:{}", fmt_vec(l)), op: box_operator(l) })
        .collect();
    TautSystem::new(variable_labels("a", p), symmetry, polynomial)
}

fn multisets(n: usize, size: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            cur[i] = 0;
            return;
        }
        for k in (0..=left).rev() {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, size as u32, &mut vec![0; n], &mut out);
    }
    out
}

/// Every box operator d^{l+} - d^{l-} with l in ker A and |l+| = |l-| <=
/// bound, not only those of a lattice basis. Each relation appears once,
/// signed so that its first nonzero entry is positive; the list is ordered
/// by degree, then by l descending.
pub fn binomial_generators_bounded(a: &AMatrix, degree_bound: usize) -> Vec<DiffOp> {
    let p = a.num_columns();
    let mut found: BTreeSet<(usize, std::cmp::Reverse<Vec<i64>>)> = BTreeSet::new();
    for deg in 1..=degree_bound {
        let mut groups: BTreeMap<Vec<i64>, Vec<Vec<u32>>> = BTreeMap::new();
        for m in multisets(p, deg) {
            let mut image = vec![0i64; a.num_rows()];
            for (i, &k) in m.iter().enumerate() {
                for (r, &c) in a.columns()[i].iter().enumerate() {
                    image[r] += k as i64 * c;
                }
            }
            groups.entry(image).or_default().push(m);
        }
        for members in groups.values() {
            for (x, u) in members.iter().enumerate() {
                for v in &members[x + 1..] {
                    if u.iter().zip(v).any(|(&s, &t)| s > 0 && t > 0) {
                        continue;
                    }
                    let mut l: Vec<i64> = u.iter().zip(v).map(|(&s, &t)| s as i64 - t as i64).collect();
                    if l.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                        l.iter_mut().for_each(|x| *x = -*x);
                    }
                    found.insert((deg, std::cmp::Reverse(l)));
                }
            }
        }
    }
    found
        .into_iter()
        .map(|(_, std::cmp::Reverse(l))| {
            let l: Vec<BigInt> = l.into_iter().map(BigInt::from).collect();
            box_operator(&l)
        })
        .collect()
}

/// Constant-coefficient operator as a polynomial in the d's.
pub fn symbol_polynomial(op: &DiffOp) -> Result<FormalSeries> {
    if !op.has_constant_coefficients() {
        return input("operator has nonconstant coefficients");
    }
    let mut s = FormalSeries::polynomial(op.nvars());
    for (k, c) in op.terms() {
        s.add_term(k.d.iter().map(|&v| v as i64).collect(), c.clone());
    }
    Ok(s)
}

pub fn operator_from_symbol(p: &FormalSeries) -> DiffOp {
    DiffOp::from_symbol(
        p.nvars(),
        p.terms().map(|(e, c)| (c.clone(), e.iter().map(|&x| x as u32).collect())),
    )
}

/// Equivariant injection V -> W given by a (dim W x dim V) matrix J,
/// together with the W-side matrix of every symmetry direction, keyed by
/// the label of the corresponding operator on V.
#[derive(Clone, Debug)]
pub struct Injection {
    pub matrix: QMatrix,
    pub w_generators: BTreeMap<String, QMatrix>,
    pub w_variables: Vec<String>,
}

impl Injection {
    /// Identity injection with the same matrices on both sides.
    pub fn identity(system: &TautSystem) -> Self {
        Self {
            matrix: QMatrix::identity(system.nvars()),
            w_generators: system.symmetry_ops().iter().map(|s| (s.label.clone(), s.matrix())).collect(),
            w_variables: system.variables().to_vec(),
        }
    }
}

/// Pullback of a polynomial in the V-coordinates a to W-coordinates b
/// along a = J^T b.
pub fn pullback(f: &FormalSeries, j: &QMatrix) -> Result<FormalSeries> {
    f.substitute_linear(&j.transpose())
}

/// System on W whose solutions are the pullbacks of solutions on V.
///
/// Symmetry operators use the W matrices (checked for x_W J = J x_V);
/// each polynomial operator p(d_a) becomes p(L d_b) for a left inverse L of
/// J; a basis of the left kernel of J contributes first-order operators.
pub fn transport_system(system: &TautSystem, inj: &Injection) -> Result<TautSystem> {
    let j = &inj.matrix;
    let (q, p) = (j.rows(), j.cols());
    if p != system.nvars() {
        return Err(Error::VariableMismatch { expected: system.nvars(), found: p });
    }
    if inj.w_variables.len() != q {
        return input("injection variable labels do not match its matrix");
    }
    let Some(left) = left_inverse(j) else {
        return input("injection matrix does not have full column rank");
    };
    let mut symmetry = Vec::new();
    for s in system.symmetry_ops() {
        let Some(xw) = inj.w_generators.get(&s.label) else {
            return input(format!("no W matrix supplied for {}", s.label));
        };
        if xw.rows() != q || xw.cols() != q {
            return input(format!("W matrix for {} has the wrong shape", s.label));
        }
        if xw.mul(j) != j.mul(&s.matrix()) {
            return input(format!("injection is not equivariant for {}", s.label));
        }
        symmetry.push(SymmetryOp::new(s.label.clone(), xw, s.beta(), s.scaling));
    }
    let mut polynomial = Vec::new();
    for po in system.polynomial_ops() {
        let transported = symbol_polynomial(&po.op)?.substitute_linear(&left)?;
        polynomial.push(PolynomialOp { label: po.label.clone(), op: operator_from_symbol(&transported) });
    }
    let perp = rational_kernel(&j.transpose());
    for r in 0..perp.rows() {
        let terms = (0..q).filter(|&i| !perp[(r, i)].is_zero()).map(|i| {
            let mut d = vec![0u32; q];
            d[i] = 1;
            (perp[(r, i)].clone(), d)
        });
        polynomial.push(PolynomialOp { label: format!("perp:{r}"), op: DiffOp::from_symbol(q, terms) });
    }
    TautSystem::new(inj.w_variables.clone(), symmetry, polynomial)
}

/// Some L with L J = I, when J has full column rank.
pub fn left_inverse(j: &QMatrix) -> Option<QMatrix> {
    let (q, p) = (j.rows(), j.cols());
    let mut rows = Vec::with_capacity(p);
    for k in 0..p {
        // row k of L solves x J = e_k
        let mut e = vec![BigRational::zero(); p];
        e[k] = BigRational::one();
        rows.push(j.solve_left(&e)?);
    }
    QMatrix::from_rows(q, rows).ok()
}

/// Invariant-theory system: Z_x for every labeled matrix (beta = 0) plus
/// the Euler operator sum a_i d_i - k, with no polynomial operators.
///
/// The matrices act on the coordinates as in Z_x = sum x_ji a_j d_i; for
/// a representation R on the coefficient vector use x = -R^T.
pub fn build_invariant_system(generators: &[(String, QMatrix)], degree: i64) -> Result<TautSystem> {
    if degree < 1 {
        return input("invariant degree must be at least 1");
    }
    let Some((_, first)) = generators.first() else {
        return input("at least one generator is required");
    };
    let n = first.rows();
    let mut symmetry = Vec::new();
    for (label, x) in generators {
        if x.rows() != n || x.cols() != n {
            return input(format!("generator {label} has the wrong shape"));
        }
        symmetry.push(SymmetryOp::new(label.clone(), x, BigRational::zero(), false));
    }
    symmetry.push(SymmetryOp::new("scaling:euler", &QMatrix::identity(n), rat(-degree), true));
    TautSystem::new(variable_labels("a", n), symmetry, vec![])
}

/// Homogeneous polynomials of the given degree annihilated by every
/// operator of the system, as a basis in reduced echelon form.
pub fn polynomial_solutions(system: &TautSystem, degree: usize) -> Result<Vec<FormalSeries>> {
    let n = system.nvars();
    let monomials: Vec<Vec<i64>> =
        multisets(n, degree).into_iter().map(|m| m.into_iter().map(i64::from).collect()).collect();
    // one block of rows per operator: coefficients of op(monomial)
    let mut dense: Vec<Vec<BigRational>> = Vec::new();
    for (_, op) in system.operators() {
        let mut rows: BTreeMap<Vec<i64>, Vec<BigRational>> = BTreeMap::new();
        for (col, m) in monomials.iter().enumerate() {
            let out = op_apply(op, &FormalSeries::monomial(n, m.clone(), rat(1)))?;
            for (e, c) in out.terms() {
                rows.entry(e.clone()).or_insert_with(|| vec![BigRational::zero(); monomials.len()])[col] =
                    c.clone();
            }
        }
        dense.extend(rows.into_values());
    }
    let kernel = if dense.is_empty() {
        QMatrix::identity(monomials.len())
    } else {
        rational_kernel(&QMatrix::from_rows(monomials.len(), dense)?)
    };
    let mut out = Vec::new();
    for r in 0..kernel.rows() {
        let mut f = FormalSeries::polynomial(n);
        for (c, m) in kernel.row(r).iter().zip(&monomials) {
            f.add_term(m.clone(), c.clone());
        }
        out.push(f);
    }
    Ok(out)
}

/// A tautological system together with the matrices rho_L of the symmetry
/// directions on a basis of H^0(L + K_X).
#[derive(Clone, Debug)]
pub struct EnhancedSystem {
    base: TautSystem,
    rho: Vec<QMatrix>,
}

/// Outcome of checking a tuple of series against an enhanced system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancedReport {
    /// (operator label, component index, passed)
    pub checks: Vec<(String, usize, bool)>,
    pub passed: bool,
}

/// Checks rho_L: one m x m matrix per symmetry operator, zero on scaling
/// directions, and [Z_i, Z_j] = sum c_k Z_k forcing
/// -[rho_i, rho_j] = sum c_k (rho_k - beta_k) whenever the bracket lies in
/// the span of the generators.
pub fn build_enhanced(system: &TautSystem, rho: Vec<QMatrix>) -> Result<EnhancedSystem> {
    let sym = system.symmetry_ops();
    if rho.len() != sym.len() {
        return input(format!("expected {} rho matrices, found {}", sym.len(), rho.len()));
    }
    let m = rho.first().map_or(0, QMatrix::rows);
    for (s, r) in sym.iter().zip(&rho) {
        if r.rows() != m || r.cols() != m {
            return input(format!("rho matrix for {} is not {m} x {m}", s.label));
        }
        if s.scaling && !r.is_zero() {
            return input(format!("rho must vanish on the scaling direction {}", s.label));
        }
    }
    let gens: Vec<QMatrix> = sym.iter().map(SymmetryOp::matrix).collect();
    let n = system.nvars();
    let flat = |x: &QMatrix| -> Vec<BigRational> { (0..n * n).map(|k| x[(k / n, k % n)].clone()).collect() };
    let span = QMatrix::from_rows(n * n, gens.iter().map(flat).collect())?;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let bracket = gens[i].commutator(&gens[j]);
            let Some(c) = span.solve_left(&flat(&bracket)) else { continue };
            let mut rhs = QMatrix::zeros(m, m);
            for (k, ck) in c.iter().enumerate() {
                let shifted = rho[k].sub(&QMatrix::identity(m).scale(&sym[k].beta()));
                rhs = rhs.add(&shifted.scale(ck));
            }
            let lhs = rho[i].commutator(&rho[j]).scale(&-BigRational::one());
            if lhs != rhs {
                return input(format!(
                    "rho matrices violate the bracket relation for ({}, {})",
                    sym[i].label, sym[j].label
                ));
            }
        }
    }
    Ok(EnhancedSystem { base: system.clone(), rho })
}

impl EnhancedSystem {
    pub fn base(&self) -> &TautSystem {
        &self.base
    }

    pub fn rho(&self) -> &[QMatrix] {
        &self.rho
    }

    pub fn rank(&self) -> usize {
        self.rho.first().map_or(0, QMatrix::rows)
    }

    /// Checks (Z_x + beta(x)) Pi_k = sum_l rho(x)_{kl} Pi_l for every
    /// symmetry direction and p(d) Pi_k = 0 for every polynomial operator,
    /// each within the certified range of the truncated inputs.
    pub fn verify(&self, periods: &[FormalSeries]) -> Result<EnhancedReport> {
        if periods.len() != self.rank() {
            return input(format!("expected {} series, found {}", self.rank(), periods.len()));
        }
        let mut checks = Vec::new();
        for (s, r) in self.base.symmetry_ops().iter().zip(&self.rho) {
            for (k, pk) in periods.iter().enumerate() {
                let lhs = op_apply(&s.op, pk)?;
                let mut rhs = FormalSeries::new(pk.nvars(), pk.weights().to_vec(), lhs.truncation());
                for (l, pl) in periods.iter().enumerate() {
                    if !r[(k, l)].is_zero() {
                        rhs = rhs.add(&pl.scale(&r[(k, l)]))?;
                    }
                }
                let residual = lhs.sub(&rhs)?.with_truncation(lhs.truncation());
                checks.push((s.label.clone(), k, residual.is_empty()));
            }
        }
        for po in self.base.polynomial_ops() {
            for (k, pk) in periods.iter().enumerate() {
                checks.push((po.label.clone(), k, op_apply(&po.op, pk)?.is_empty()));
            }
        }
        let passed = checks.iter().all(|c| c.2);
        Ok(EnhancedReport { checks, passed })
    }
}

/// Independent enumeration of ker A within a box, used by tests.
#[doc(hidden)]
pub fn kernel_vectors_in_box(a: &AMatrix, bound: i64) -> Vec<Vec<i64>> {
    let p = a.num_columns();
    let mut out = Vec::new();
    let mut l = vec![-bound; p];
    loop {
        let ok = (0..a.num_rows()).all(|r| (0..p).map(|i| l[i] * a.columns()[i][r]).sum::<i64>() == 0);
        if ok && l.iter().any(|&x| x != 0) {
            out.push(l.clone());
        }
        let mut i = 0;
        while i < p {
            if l[i] < bound {
                l[i] += 1;
                break;
            }
            l[i] = -bound;
            i += 1;
        }
        if i == p {
            break;
        }
    }
    out
}

/// Largest dim V for which the quadrics are computed on Sym^2 V*.
pub const MAX_QUADRIC_DIM: usize = 40;

/// Flag system on V = V(L)* realized inside W_L, with the data needed to
/// transport it to W_L.
#[derive(Clone, Debug)]
pub struct FlagSystemV {
    pub system: TautSystem,
    pub rep: RepData,
    pub injection: Injection,
}

/// Symmetry operators from the Chevalley generators (beta = 0) and the
/// scaling direction (beta = 1); polynomial operators from the quadrics.
pub fn build_flag_system_v(root: &RootDataA, parabolic: &ParabolicChoice, coefficients: &[u32]) -> Result<FlagSystemV> {
    let sv = segre_veronese(root, parabolic, coefficients, false)?;
    let expected = weyl_dimension(root, sv.weight())?;
    if expected > BigInt::from(MAX_QUADRIC_DIM) {
        return input(format!("dim V = {expected} exceeds the supported size {MAX_QUADRIC_DIM}"));
    }
    let (rep, basis) = highest_weight_submodule(sv.rep(), MAX_QUADRIC_DIM)?;
    if BigInt::from(rep.dim()) != expected {
        return Err(Error::Consistency(format!("lowering span has dimension {} not {expected}", rep.dim())));
    }
    let quadrics = casimir_quadrics(&rep)?;
    let symmetry = symmetry_ops_from(&rep);
    let polynomial = quadrics
        .polynomials()
        .iter()
        .enumerate()
        .map(|(k, q)| PolynomialOp { label: format!("quadric:{k}"), op: operator_from_symbol(q) })
        .collect();
    let system = TautSystem::new(rep.labels().to_vec(), symmetry, polynomial)?;

    // columns of J are the echelon basis of V inside W_L
    let w_rep = sv.rep();
    let j = basis.transpose();
    let injection = Injection {
        matrix: j,
        w_generators: w_rep.symmetry_matrices().into_iter().collect(),
        w_variables: w_rep.labels().to_vec(),
    };
    Ok(FlagSystemV { system, rep, injection })
}

fn symmetry_ops_from(rep: &RepData) -> Vec<SymmetryOp> {
    rep.symmetry_matrices()
        .into_iter()
        .map(|(label, x)| {
            let scaling = label == "scaling:euler";
            let beta = if scaling { BigRational::one() } else { BigRational::zero() };
            SymmetryOp::new(label, &x, beta, scaling)
        })
        .collect()
}

/// Flag system on W_L (every n_beta >= 2).
#[derive(Clone, Debug)]
pub struct FlagSystemW {
    pub system: TautSystem,
    pub segre_veronese: SegreVeronese,
    pub perp_dim: usize,
}

/// Symmetry operators from the action on W_L; first-order operators from
/// the linear forms vanishing on V; second-order Veronese binomials.
pub fn build_flag_system_w(
    root: &RootDataA,
    parabolic: &ParabolicChoice,
    coefficients: &[u32],
    seed: u64,
) -> Result<FlagSystemW> {
    let sv = segre_veronese(root, parabolic, coefficients, true)?;
    let q = sv.dim();
    let perp = v_perp(&sv, q + 10, seed)?;
    let mut polynomial = Vec::new();
    for r in 0..perp.dim() {
        let terms = (0..q).filter(|&i| !perp.forms[(r, i)].is_zero()).map(|i| {
            let mut d = vec![0u32; q];
            d[i] = 1;
            (perp.forms[(r, i)].clone(), d)
        });
        polynomial.push(PolynomialOp { label: format!("perp:{r}"), op: DiffOp::from_symbol(q, terms) });
    }
    for (k, (u, v, w, t)) in veronese_binomials(sv.index()).into_iter().enumerate() {
        let mono = |a: usize, b: usize| {
            let mut d = vec![0u32; q];
            d[a] += 1;
            d[b] += 1;
            d
        };
        let op = DiffOp::from_symbol(q, [(rat(1), mono(u, v)), (rat(-1), mono(w, t))]);
        polynomial.push(PolynomialOp { label: format!("veronese:{k}"), op });
    }
    let system = TautSystem::new(sv.rep().labels().to_vec(), symmetry_ops_from(sv.rep()), polynomial)?;
    Ok(FlagSystemW { system, perp_dim: perp.dim(), segre_veronese: sv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::toric::{a_matrix, anticanonical_sections, FanData};

    fn p1() -> AMatrix {
        a_matrix(&anticanonical_sections(&FanData::projective_space(1)).unwrap())
    }

    #[test]
    fn gkz_for_p1() {
        let s = build_toric_gkz(&p1()).unwrap();
        let ops: Vec<String> = s.operators().iter().map(|(_, o)| o.to_string()).collect();
        assert_eq!(
            ops,
            vec![
                "1 * a0*d0 + 1 * a1*d1 + 1 * a2*d2 + 1",
                "-1 * a0*d0 + 1 * a2*d2",
                "1 * d0*d2 + -1 * d1^2",
            ]
        );
        assert_eq!(s.beta(), vec![rat(1), rat(0)]);
    }

    #[test]
    fn single_column_gkz() {
        let a = AMatrix::from_columns(vec![vec![1, 0]]).unwrap();
        let s = build_toric_gkz(&a).unwrap();
        assert_eq!(s.polynomial_ops().len(), 0);
        assert_eq!(s.symmetry_ops()[0].op.to_string(), "1 * a0*d0 + 1");
    }

    #[test]
    fn gkz_for_p2_counts() {
        let a = a_matrix(&anticanonical_sections(&FanData::projective_space(2)).unwrap());
        let s = build_toric_gkz(&a).unwrap();
        assert_eq!(s.nvars(), 10);
        assert_eq!(s.symmetry_ops().len(), 3);
        assert_eq!(s.polynomial_ops().len(), 7);
    }

    #[test]
    fn bounded_binomials_for_p1() {
        let ops = binomial_generators_bounded(&p1(), 2);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].to_string(), "1 * d0*d2 + -1 * d1^2");
        assert!(binomial_generators_bounded(&p1(), 0).is_empty());
    }

    #[test]
    fn bounded_binomials_match_box_enumeration() {
        // oracle: all kernel vectors with entries in [-2, 2] and |l+| <= 2,
        // reduced to one sign
        let fan = FanData::new(2, vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], None).unwrap();
        let a = a_matrix(&anticanonical_sections(&fan).unwrap());
        assert_eq!(a.num_columns(), 9);
        assert_eq!(integer_kernel(&a.to_matrix()).rank(), 6);
        let ops: BTreeSet<String> = binomial_generators_bounded(&a, 2).iter().map(|o| o.to_string()).collect();
        let mut oracle = BTreeSet::new();
        for l in kernel_vectors_in_box(&a, 2) {
            let plus: i64 = l.iter().filter(|&&x| x > 0).sum();
            let first = *l.iter().find(|&&x| x != 0).unwrap();
            if plus <= 2 && first > 0 {
                let l: Vec<BigInt> = l.into_iter().map(BigInt::from).collect();
                oracle.insert(box_operator(&l).to_string());
            }
        }
        assert_eq!(ops, oracle);
        // every HNF box operator fitting the bound is present
        for po in build_toric_gkz(&a).unwrap().polynomial_ops() {
            if po.op.order() <= 2 {
                assert!(ops.contains(&po.op.to_string()), "{}", po.op);
            }
        }
    }

    fn sl2_on_quadratics() -> Vec<(String, QMatrix)> {
        // action on the coefficients of a0 x^2 + a1 x y + a2 y^2 under the
        // vector fields e = x d_y, f = y d_x, h = x d_x - y d_y
        let e = QMatrix::from_i64(&[&[0, 1, 0], &[0, 0, 2], &[0, 0, 0]]);
        let f = QMatrix::from_i64(&[&[0, 0, 0], &[2, 0, 0], &[0, 1, 0]]);
        let h = QMatrix::from_i64(&[&[2, 0, 0], &[0, 0, 0], &[0, 0, -2]]);
        [("e", e), ("f", f), ("h", h)]
            .into_iter()
            .map(|(l, r)| (l.to_string(), r.transpose().scale(&rat(-1))))
            .collect()
    }

    #[test]
    fn discriminant_is_the_only_quadratic_invariant() {
        let sys = build_invariant_system(&sl2_on_quadratics(), 2).unwrap();
        let sols = polynomial_solutions(&sys, 2).unwrap();
        assert_eq!(sols.len(), 1);
        let mut disc = FormalSeries::polynomial(3);
        disc.add_term(vec![0, 2, 0], rat(1));
        disc.add_term(vec![1, 0, 1], rat(-4));
        let lead = sols[0].coefficient(&[0, 2, 0]);
        assert_eq!(sols[0].scale(&(BigRational::one() / lead)), disc);
        for (_, op) in sys.operators() {
            assert!(op_apply(op, &disc).unwrap().is_empty());
        }
        let sq = FormalSeries::monomial(3, vec![2, 0, 0], rat(1));
        assert!(sys.operators().iter().any(|(_, op)| !op_apply(op, &sq).unwrap().is_empty()));
        assert!(build_invariant_system(&sl2_on_quadratics(), 0).is_err());
    }

    fn toy_injection() -> (TautSystem, Injection) {
        let e = QMatrix::from_i64(&[&[0, 1], &[0, 0]]);
        let f = QMatrix::from_i64(&[&[0, 0], &[1, 0]]);
        let h = QMatrix::from_i64(&[&[1, 0], &[0, -1]]);
        let mut gens: Vec<(String, QMatrix)> = vec![("e".into(), e), ("f".into(), f), ("h".into(), h)];
        let mut sym: Vec<SymmetryOp> =
            gens.iter().map(|(l, x)| SymmetryOp::new(l.clone(), x, rat(0), false)).collect();
        sym.push(SymmetryOp::new("scaling:euler", &QMatrix::identity(2), rat(1), true));
        gens.push(("scaling:euler".into(), QMatrix::identity(2)));
        let poly = vec![PolynomialOp { label: "q".into(), op: DiffOp::parse(2, "1 * d0*d1 + 3 * d1^2").unwrap() }];
        let sys = TautSystem::new(variable_labels("a", 2), sym, poly).unwrap();
        let j = QMatrix::from_i64(&[&[1, 0], &[0, 1], &[2, 0], &[0, 2]]);
        let w_generators = gens
            .into_iter()
            .map(|(l, x)| {
                let mut w = QMatrix::zeros(4, 4);
                for r in 0..2 {
                    for c in 0..2 {
                        w[(r, c)] = x[(r, c)].clone();
                        w[(r + 2, c + 2)] = x[(r, c)].clone();
                    }
                }
                (l, w)
            })
            .collect();
        (sys, Injection { matrix: j, w_generators, w_variables: variable_labels("b", 4) })
    }

    #[test]
    fn transport_pulls_back_solutions() {
        let (sys, inj) = toy_injection();
        let t = transport_system(&sys, &inj).unwrap();
        assert_eq!(t.nvars(), 4);
        assert_eq!(t.linear_ops().count(), 2);
        // f = a0^2 * a1 style polynomial, checked against both sides
        let mut f = FormalSeries::polynomial(2);
        f.add_term(vec![2, 1], rat(3));
        f.add_term(vec![0, 2], frac(-1, 2));
        let fw = pullback(&f, &inj.matrix).unwrap();
        for (v_op, w_op) in sys.operators().iter().zip(t.operators()) {
            let lhs = pullback(&op_apply(v_op.1, &f).unwrap(), &inj.matrix).unwrap();
            assert_eq!(lhs, op_apply(w_op.1, &fw).unwrap(), "{}", v_op.0);
        }
        for po in t.linear_ops() {
            assert!(op_apply(&po.op, &fw).unwrap().is_empty());
        }
    }

    #[test]
    fn identity_transport_is_identity() {
        let (sys, _) = toy_injection();
        assert_eq!(transport_system(&sys, &Injection::identity(&sys)).unwrap(), sys);
    }

    #[test]
    fn transport_rejects_non_equivariant_maps() {
        let (sys, mut inj) = toy_injection();
        inj.matrix[(2, 0)] = rat(0);
        inj.matrix[(2, 1)] = rat(1);
        assert!(transport_system(&sys, &inj).is_err());
    }

    #[test]
    fn enhanced_consistency_checks() {
        let (sys, _) = toy_injection();
        let zero = vec![QMatrix::zeros(1, 1); 4];
        let e = build_enhanced(&sys, zero).unwrap();
        assert_eq!(e.rank(), 1);
        // minus the defining matrices satisfy the bracket relation
        let rho: Vec<QMatrix> = sys
            .symmetry_ops()
            .iter()
            .map(|s| if s.scaling { QMatrix::zeros(2, 2) } else { s.matrix().scale(&rat(-1)) })
            .collect();
        assert!(build_enhanced(&sys, rho.clone()).is_ok());
        let flipped: Vec<QMatrix> =
            rho.iter().map(|r| r.scale(&rat(-1))).collect();
        assert!(build_enhanced(&sys, flipped).is_err());
        let mut bad = rho;
        bad[3] = QMatrix::identity(2);
        assert!(build_enhanced(&sys, bad).is_err());
    }

    fn flag(n: usize, complement: &[usize]) -> (RootDataA, ParabolicChoice) {
        let r = RootDataA::new(n).unwrap();
        let p = ParabolicChoice::from_complement(&r, complement).unwrap();
        (r, p)
    }

    /// [Z, p(d)] vanishes on the cone for every symmetry Z and quadric p,
    /// i.e. the quadric span is stable under the symmetry action.
    fn assert_ideal_stable(system: &TautSystem, points: &[Vec<BigRational>]) {
        for z in system.symmetry_ops() {
            for p in system.polynomial_ops() {
                let c = z.op.commutator(&p.op).unwrap();
                assert!(c.has_constant_coefficients(), "{} with {}", z.label, p.label);
                for pt in points {
                    assert!(c.symbol_at(pt).is_zero(), "{} with {}", z.label, p.label);
                }
            }
        }
    }

    #[test]
    fn plucker_system_on_g24() {
        let (r, p) = flag(4, &[2]);
        let fv = build_flag_system_v(&r, &p, &[1]).unwrap();
        let sys = &fv.system;
        assert_eq!(sys.variables(), ["e12", "e13", "e14", "e23", "e24", "e34"]);
        assert_eq!(sys.symmetry_ops().len(), 10);
        assert_eq!(sys.polynomial_ops().len(), 1);
        let q = symbol_polynomial(&sys.polynomial_ops()[0].op).unwrap();
        let lead = q.coefficient(&[1, 0, 0, 0, 0, 1]);
        assert!(!lead.is_zero());
        assert_eq!(q.coefficient(&[0, 1, 0, 0, 1, 0]), -lead.clone());
        assert_eq!(q.coefficient(&[0, 0, 1, 1, 0, 0]), lead);
        let pts = fv.rep.sample_cone_points(12, 3).unwrap();
        assert_ideal_stable(sys, &pts);
        // the symmetry operators close under brackets
        let ops = sys.symmetry_ops();
        let (e1, f1) = (&ops[0], &ops[3]);
        let h1 = &ops[6];
        assert_eq!(e1.op.commutator(&f1.op).unwrap(), h1.op);
    }

    #[test]
    fn projective_line_has_no_polynomial_ops() {
        let (r, p) = flag(2, &[1]);
        let fv = build_flag_system_v(&r, &p, &[1]).unwrap();
        assert_eq!(fv.system.nvars(), 2);
        assert_eq!(fv.system.symmetry_ops().len(), 4);
        assert!(fv.system.polynomial_ops().is_empty());
        assert_eq!(fv.system.beta(), vec![rat(0), rat(0), rat(0), rat(1)]);
    }

    #[test]
    fn conic_from_both_sides() {
        let (r, p) = flag(2, &[1]);
        let fv = build_flag_system_v(&r, &p, &[2]).unwrap();
        assert_eq!(fv.system.polynomial_ops().len(), 1);
        let fw = build_flag_system_w(&r, &p, &[2], 0).unwrap();
        assert_eq!(fw.perp_dim, 0);
        assert_eq!(fw.system.polynomial_ops().len(), 1);
        let moved = transport_system(&fv.system, &fv.injection).unwrap();
        let a = symbol_polynomial(&moved.polynomial_ops()[0].op).unwrap();
        let b = symbol_polynomial(&fw.system.polynomial_ops()[0].op).unwrap();
        let ratio = a.coefficient(&[1, 0, 1]) / b.coefficient(&[1, 0, 1]);
        assert_eq!(a, b.scale(&ratio));
    }

    #[test]
    fn transported_perp_matches_sampled_perp() {
        let (r, p) = flag(4, &[2]);
        let fv = build_flag_system_v(&r, &p, &[2]).unwrap();
        assert_eq!(fv.system.nvars(), 20);
        let fw = build_flag_system_w(&r, &p, &[2], 11).unwrap();
        assert_eq!(fw.perp_dim, 1);
        let moved = transport_system(&fv.system, &fv.injection).unwrap();
        let perp_moved: Vec<_> = moved.linear_ops().map(|o| symbol_polynomial(&o.op).unwrap()).collect();
        let perp_w: Vec<_> = fw.system.linear_ops().map(|o| symbol_polynomial(&o.op).unwrap()).collect();
        assert_eq!(perp_moved.len(), 1);
        assert_eq!(perp_w.len(), 1);
        let key = perp_w[0].sorted_terms()[0].0.clone();
        let ratio = perp_moved[0].coefficient(&key) / perp_w[0].coefficient(&key);
        assert_eq!(perp_moved[0], perp_w[0].scale(&ratio));
        let pts = fw.segre_veronese.sample_cone_points(6, 4);
        for (_, op) in moved.operators().iter().skip(moved.symmetry_ops().len()) {
            for pt in &pts {
                assert!(op.symbol_at(pt).is_zero());
            }
        }
    }

    #[test]
    fn full_flag_w_system() {
        let (r, p) = flag(3, &[1, 2]);
        let fw = build_flag_system_w(&r, &p, &[2, 2], 5).unwrap();
        assert_eq!(fw.system.nvars(), 36);
        assert_eq!(fw.perp_dim, 9);
        let pts = fw.segre_veronese.sample_cone_points(5, 8);
        for po in fw.system.polynomial_ops() {
            for pt in &pts {
                assert!(po.op.symbol_at(pt).is_zero(), "{}", po.label);
            }
        }
        assert_ideal_stable(
            &TautSystem::new(
                fw.system.variables().to_vec(),
                fw.system.symmetry_ops().to_vec(),
                fw.system.linear_ops().cloned().collect(),
            )
            .unwrap(),
            &pts,
        );
        assert!(build_flag_system_w(&r, &p, &[1, 2], 5).is_err());
    }

    #[test]
    fn flag_v_size_guard() {
        let (r, p) = flag(4, &[2]);
        assert!(build_flag_system_v(&r, &p, &[4]).is_err());
    }
}
