//! Toric combinatorics: class groups, canonical class, monomial sections,
//! A-matrices and the rank-one Calabi-Yau bundle criterion.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{input, Error, Result};
use crate::exact::{
    integer_kernel, rational_kernel, smith_normal_form, BigInt, BigRational, IntegerMatrix,
    LatticeBasis, QMatrix,
};

/// Rays of a fan in Z^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanData {
    dimension: usize,
    rays: Vec<Vec<i64>>,
    maximal_cones: Option<Vec<Vec<usize>>>,
}

impl FanData {
    /// Validates primitivity, distinctness and that the rays span Q^n.
    pub fn new(
        dimension: usize,
        rays: Vec<Vec<i64>>,
        maximal_cones: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        for (j, r) in rays.iter().enumerate() {
            if r.len() != dimension {
                return input(format!("ray {j} has {} entries, expected {dimension}", r.len()));
            }
            let g = r.iter().fold(0i64, |g, &x| g.gcd(&x));
            if g != 1 {
                return input(format!("ray {j} = {r:?} is not primitive"));
            }
        }
        for i in 0..rays.len() {
            if rays[i + 1..].contains(&rays[i]) {
                return input(format!("ray {:?} appears twice", rays[i]));
            }
        }
        if let Some(cones) = &maximal_cones {
            for c in cones {
                if let Some(&bad) = c.iter().find(|&&i| i >= rays.len()) {
                    return input(format!("maximal cone refers to missing ray {bad}"));
                }
            }
        }
        let fan = Self { dimension, rays, maximal_cones };
        if fan.ray_matrix().to_rational().rank() < dimension {
            return input(
                "rays do not span Q^n: some hyperplane contains all rays \
                 (standing assumption violated)",
            );
        }
        Ok(fan)
    }

    /// Fan of P^d: e_1, ..., e_d, -(e_1 + ... + e_d).
    pub fn projective_space(d: usize) -> Self {
        let mut rays: Vec<Vec<i64>> = (0..d)
            .map(|i| {
                let mut r = vec![0; d];
                r[i] = 1;
                r
            })
            .collect();
        rays.push(vec![-1; d]);
        Self::new(d, rays, None).expect("P^d fan is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn maximal_cones(&self) -> Option<&[Vec<usize>]> {
        self.maximal_cones.as_deref()
    }

    pub fn num_rays(&self) -> usize {
        self.rays.len()
    }

    /// t x n matrix with rows nu_j; it represents mu -> (<mu, nu_j>)_j.
    pub fn ray_matrix(&self) -> IntegerMatrix {
        IntegerMatrix::from_rows(self.dimension, &self.rays).expect("validated")
    }
}

/// Class-group presentation coker((Z^n)* -> (Z^t)*).
///
/// Torsion coordinates come from the Smith normal form; the free
/// coordinates are the pairings with an HNF basis of the relation lattice
/// {l : sum l_j nu_j = 0}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassGroup {
    num_rays: usize,
    torsion_orders: Vec<BigInt>,
    torsion_functionals: Vec<Vec<BigInt>>,
    relations: LatticeBasis,
}

/// A divisor class: a representative in Z^t plus its normalized
/// coordinates. Equality compares coordinates only.
#[derive(Clone, Debug)]
pub struct DivisorClass {
    pub representative: Vec<i64>,
    pub torsion: Vec<BigInt>,
    pub free: Vec<BigInt>,
}

impl PartialEq for DivisorClass {
    fn eq(&self, other: &Self) -> bool {
        self.torsion == other.torsion && self.free == other.free
    }
}

impl Eq for DivisorClass {}

impl DivisorClass {
    pub fn is_zero(&self) -> bool {
        self.torsion.iter().chain(&self.free).all(Zero::is_zero)
    }
}

impl ClassGroup {
    pub fn free_rank(&self) -> usize {
        self.relations.rank()
    }

    /// Invariant factors d > 1 of the torsion subgroup.
    pub fn torsion_orders(&self) -> &[BigInt] {
        &self.torsion_orders
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion_orders.is_empty()
    }

    /// Z-basis of the relation lattice among the rays.
    pub fn relations(&self) -> &LatticeBasis {
        &self.relations
    }

    pub fn class_of(&self, a: &[i64]) -> DivisorClass {
        assert_eq!(a.len(), self.num_rays);
        let v: Vec<BigInt> = a.iter().map(|&x| BigInt::from(x)).collect();
        let torsion = self
            .torsion_functionals
            .iter()
            .zip(&self.torsion_orders)
            .map(|(f, d)| f.iter().zip(&v).map(|(x, y)| x * y).sum::<BigInt>().mod_floor(d))
            .collect();
        let free = self.relations.basis().mul_vec(&v);
        DivisorClass { representative: a.to_vec(), torsion, free }
    }

    /// Class of the toric divisor D_j.
    pub fn divisor(&self, j: usize) -> DivisorClass {
        let mut a = vec![0; self.num_rays];
        a[j] = 1;
        self.class_of(&a)
    }

    pub fn add(&self, x: &DivisorClass, y: &DivisorClass) -> DivisorClass {
        let a: Vec<i64> = x.representative.iter().zip(&y.representative).map(|(p, q)| p + q).collect();
        self.class_of(&a)
    }

    pub fn scale(&self, k: i64, x: &DivisorClass) -> DivisorClass {
        let a: Vec<i64> = x.representative.iter().map(|p| k * p).collect();
        self.class_of(&a)
    }
}

pub fn class_group(fan: &FanData) -> ClassGroup {
    let p = fan.ray_matrix();
    let (s, u, _) = smith_normal_form(&p);
    let mut torsion_orders = Vec::new();
    let mut torsion_functionals = Vec::new();
    for i in 0..s.rows().min(s.cols()) {
        let d = s[(i, i)].clone();
        if d > BigInt::one() {
            torsion_orders.push(d);
            torsion_functionals.push(u.row(i).to_vec());
        }
    }
    ClassGroup {
        num_rays: fan.num_rays(),
        torsion_orders,
        torsion_functionals,
        relations: integer_kernel(&p.transpose()),
    }
}

/// [K_X] = -sum_j [D_j]
pub fn canonical_class(fan: &FanData, group: &ClassGroup) -> DivisorClass {
    group.class_of(&vec![-1; fan.num_rays()])
}

/// Monomial sections of the line bundle with representative c:
/// lattice points mu with <mu, nu_j> + c_j >= 0, paired with the Cox
/// exponents a_j = <mu, nu_j> + c_j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    pub bundle: Vec<i64>,
    pub monomials: Vec<Vec<i64>>,
    pub laurent_exponents: Vec<Vec<i64>>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }
}

fn pairing(mu: &[i64], nu: &[i64]) -> i64 {
    mu.iter().zip(nu).map(|(a, b)| a * b).sum()
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
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// True when some nonzero direction mu has <mu, nu_j> >= 0 for every ray.
///
/// The cone {mu : <mu, nu_j> >= 0} is pointed because the rays span, so it
/// is nontrivial iff it has an extreme ray, which is cut out by n-1
/// independent tight inequalities.
fn has_recession_direction(fan: &FanData) -> bool {
    let n = fan.dimension();
    let rays = fan.ray_matrix().to_rational();
    for sub in subsets(fan.num_rays(), n.saturating_sub(1)) {
        let rows: Vec<Vec<BigRational>> = sub.iter().map(|&j| rays.row(j).to_vec()).collect();
        let m = QMatrix::from_rows(n, rows).expect("uniform");
        let k = rational_kernel(&m);
        if k.rows() != 1 {
            continue;
        }
        let dir = k.row(0);
        for sign in [1i64, -1] {
            let ok = (0..fan.num_rays()).all(|j| {
                let s: BigRational =
                    rays.row(j).iter().zip(dir).map(|(a, b)| a * b).fold(BigRational::zero(), |x, y| x + y);
                !(s * BigInt::from(sign)).is_negative()
            });
            if ok {
                return true;
            }
        }
    }
    false
}

pub fn sections(fan: &FanData, c: &[i64]) -> Result<MonomialBasis> {
    let n = fan.dimension();
    let t = fan.num_rays();
    if c.len() != t {
        return input(format!("bundle representative has {} entries, expected {t}", c.len()));
    }
    if has_recession_direction(fan) {
        return Err(Error::Unbounded);
    }
    // bounding box from the vertices of the section polytope
    let rays = fan.ray_matrix().to_rational();
    let mut lo: Option<Vec<BigRational>> = None;
    let mut hi: Option<Vec<BigRational>> = None;
    for sub in subsets(t, n) {
        let rows: Vec<Vec<BigRational>> = sub.iter().map(|&j| rays.row(j).to_vec()).collect();
        let m = QMatrix::from_rows(n, rows).expect("uniform");
        let Some(inv) = m.inverse() else { continue };
        let rhs: Vec<BigRational> =
            sub.iter().map(|&j| BigRational::from_integer(BigInt::from(-c[j]))).collect();
        let v = inv.mul_vec(&rhs);
        let feasible = (0..t).all(|j| {
            let s = rays.row(j).iter().zip(&v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
            s >= BigRational::from_integer(BigInt::from(-c[j]))
        });
        if !feasible {
            continue;
        }
        match (&mut lo, &mut hi) {
            (Some(l), Some(h)) => {
                for i in 0..n {
                    if v[i] < l[i] {
                        l[i] = v[i].clone();
                    }
                    if v[i] > h[i] {
                        h[i] = v[i].clone();
                    }
                }
            }
            _ => {
                lo = Some(v.clone());
                hi = Some(v);
            }
        }
    }
    let mut laurent = Vec::new();
    if let (Some(lo), Some(hi)) = (lo, hi) {
        let lo: Vec<i64> = lo.iter().map(|x| x.ceil().to_integer().to_i64().unwrap()).collect();
        let hi: Vec<i64> = hi.iter().map(|x| x.floor().to_integer().to_i64().unwrap()).collect();
        let mut mu = lo.clone();
        'outer: loop {
            if fan.rays().iter().zip(c).all(|(nu, cj)| pairing(&mu, nu) + cj >= 0) {
                laurent.push(mu.clone());
            }
            for i in 0..n {
                if mu[i] < hi[i] {
                    mu[i] += 1;
                    continue 'outer;
                }
                mu[i] = lo[i];
            }
            break;
        }
    }
    laurent.sort_by(|x, y| x.iter().sum::<i64>().cmp(&y.iter().sum::<i64>()).then_with(|| x.cmp(y)));
    let monomials = laurent
        .iter()
        .map(|mu| fan.rays().iter().zip(c).map(|(nu, cj)| pairing(mu, nu) + cj).collect())
        .collect();
    Ok(MonomialBasis { bundle: c.to_vec(), monomials, laurent_exponents: laurent })
}

/// Sections of the anticanonical bundle, representative (1, ..., 1).
pub fn anticanonical_sections(fan: &FanData) -> Result<MonomialBasis> {
    sections(fan, &vec![1; fan.num_rays()])
}

/// Columns (1, mu_i) of a GKZ A-matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AMatrix {
    columns: Vec<Vec<i64>>,
}

impl AMatrix {
    /// Columns must share a length and start with 1.
    pub fn from_columns(columns: Vec<Vec<i64>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return input("A-matrix needs at least one column");
        };
        let len = first.len();
        if len == 0 {
            return input("A-matrix columns are empty");
        }
        for (i, c) in columns.iter().enumerate() {
            if c.len() != len {
                return input(format!("column {i} has length {}, expected {len}", c.len()));
            }
            if c[0] != 1 {
                return input(format!("column {i} does not start with 1"));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[Vec<i64>] {
        &self.columns
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.columns[0].len()
    }

    /// The Laurent exponent mu_i of column i.
    pub fn mu(&self, i: usize) -> &[i64] {
        &self.columns[i][1..]
    }

    pub fn to_matrix(&self) -> IntegerMatrix {
        IntegerMatrix::from_rows(self.num_columns(), &self.rows()).expect("uniform")
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.num_rows()).map(|k| self.columns.iter().map(|c| c[k]).collect()).collect()
    }

    /// Column (1, 0, ..., 0), if present.
    pub fn interior_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c[1..].iter().all(|&x| x == 0))
    }
}

pub fn a_matrix(basis: &MonomialBasis) -> AMatrix {
    let columns = basis
        .laurent_exponents
        .iter()
        .map(|mu| std::iter::once(1).chain(mu.iter().copied()).collect())
        .collect();
    AMatrix { columns }
}

/// Solves [K_X] = l [L] in the class group, returning l when it exists.
///
/// When the free part of L is nonzero, l is forced by any nonzero free
/// coordinate; otherwise l is searched over one period of the torsion
/// (trying l = 1 first).
pub fn cy_power_check(fan: &FanData, group: &ClassGroup, line: &DivisorClass) -> Option<i64> {
    let k = canonical_class(fan, group);
    let solves = |l: i64| group.scale(l, line) == k;
    if let Some(i) = line.free.iter().position(|x| !x.is_zero()) {
        let (q, r) = k.free[i].div_rem(&line.free[i]);
        if !r.is_zero() {
            return None;
        }
        let l = q.to_i64()?;
        return solves(l).then_some(l);
    }
    let period = group.torsion_orders().iter().fold(BigInt::one(), |acc, d| acc.lcm(d));
    let period = period.to_i64()?;
    std::iter::once(1).chain(0..period).find(|&l| solves(l))
}

/// Class of O(k) on P^d: k times the hyperplane class [D_0].
pub fn projective_line_bundle(group: &ClassGroup, d: usize, k: i64) -> DivisorClass {
    let mut a = vec![0; d + 1];
    a[0] = k;
    group.class_of(&a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fan(n: usize, rays: &[&[i64]]) -> FanData {
        FanData::new(n, rays.iter().map(|r| r.to_vec()).collect(), None).unwrap()
    }

    fn b(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn p2_class_group() {
        let f = FanData::projective_space(2);
        let g = class_group(&f);
        assert_eq!(g.free_rank(), 1);
        assert!(g.is_torsion_free());
        for j in 0..3 {
            assert_eq!(g.divisor(j).free, b(&[1]));
        }
        assert_eq!(canonical_class(&f, &g).free, b(&[-3]));
    }

    #[test]
    fn p1xp1_class_group() {
        let f = fan(2, &[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]]);
        let g = class_group(&f);
        assert_eq!(g.free_rank(), 2);
        assert_eq!(g.divisor(0), g.divisor(1));
        assert_eq!(g.divisor(2), g.divisor(3));
        assert_ne!(g.divisor(0), g.divisor(2));
        assert_eq!(canonical_class(&f, &g).free, b(&[-2, -2]));
    }

    #[test]
    fn affine_plane_has_trivial_class_group() {
        let f = fan(2, &[&[1, 0], &[0, 1]]);
        let g = class_group(&f);
        assert_eq!(g.free_rank(), 0);
        assert!(g.is_torsion_free());
        assert!(g.divisor(0).is_zero());
    }

    #[test]
    fn torsion_is_carried() {
        // P^2 / Z_3
        let f = fan(2, &[&[-1, -1], &[2, -1], &[-1, 2]]);
        let g = class_group(&f);
        assert_eq!(g.free_rank(), 1);
        assert_eq!(g.torsion_orders(), &[BigInt::from(3)]);
        // D_0, D_1 have the same degree but differ by torsion
        assert_eq!(g.divisor(0).free, g.divisor(1).free);
        assert_ne!(g.divisor(0), g.divisor(1));
        let k = canonical_class(&f, &g);
        assert_eq!(cy_power_check(&f, &g, &k), Some(1));
    }

    #[test]
    fn fan_validation() {
        assert!(FanData::new(2, vec![vec![2, 0], vec![0, 1]], None).is_err());
        assert!(FanData::new(2, vec![vec![1, 0], vec![1, 0], vec![0, 1]], None).is_err());
        let err = FanData::new(2, vec![vec![1, 0], vec![-1, 0]], None).unwrap_err();
        assert!(err.to_string().contains("span"));
        assert!(FanData::new(2, vec![vec![1, 0, 0]], None).is_err());
    }

    #[test]
    fn image_of_characters_is_trivial() {
        let f = fan(2, &[&[1, 0], &[0, 1], &[-1, 1], &[0, -1]]);
        let g = class_group(&f);
        for m0 in -3..=3 {
            for m1 in -3..=3 {
                let a: Vec<i64> = f.rays().iter().map(|nu| m0 * nu[0] + m1 * nu[1]).collect();
                assert!(g.class_of(&a).is_zero());
            }
        }
    }

    #[test]
    fn p2_anticanonical_sections() {
        let f = FanData::projective_space(2);
        let s = anticanonical_sections(&f).unwrap();
        assert_eq!(s.len(), 10);
        for (a, mu) in s.monomials.iter().zip(&s.laurent_exponents) {
            for (j, nu) in f.rays().iter().enumerate() {
                assert_eq!(a[j] - 1, pairing(mu, nu));
            }
        }
    }

    #[test]
    fn p1_sections() {
        let f = FanData::projective_space(1);
        let s = sections(&f, &[1, 1]).unwrap();
        assert_eq!(s.laurent_exponents, vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(s.monomials, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let a = a_matrix(&s);
        assert_eq!(a.columns(), &[vec![1, -1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn trivial_bundle_has_constants_only() {
        let f = FanData::projective_space(2);
        let s = sections(&f, &[0, 0, 0]).unwrap();
        assert_eq!(s.laurent_exponents, vec![vec![0, 0]]);
        assert_eq!(a_matrix(&s).columns(), &[vec![1, 0, 0]]);
    }

    #[test]
    fn unbounded_section_polytope_is_an_error() {
        let f = fan(2, &[&[1, 0], &[0, 1]]);
        assert!(matches!(sections(&f, &[0, 0]), Err(Error::Unbounded)));
    }

    #[test]
    fn negative_bundle_has_no_sections() {
        let f = FanData::projective_space(2);
        assert!(sections(&f, &[-1, 0, 0]).unwrap().is_empty());
    }

    #[test]
    fn cy_power_on_projective_spaces() {
        let f = FanData::projective_space(3);
        let g = class_group(&f);
        assert_eq!(cy_power_check(&f, &g, &projective_line_bundle(&g, 3, 2)), Some(-2));
        let f = FanData::projective_space(2);
        let g = class_group(&f);
        assert_eq!(cy_power_check(&f, &g, &projective_line_bundle(&g, 2, 2)), None);
        assert_eq!(cy_power_check(&f, &g, &projective_line_bundle(&g, 2, 0)), None);
        let k = canonical_class(&f, &g);
        assert_eq!(cy_power_check(&f, &g, &k), Some(1));
    }

    #[test]
    fn a_matrix_kernel_relations() {
        let f = FanData::projective_space(2);
        let a = a_matrix(&anticanonical_sections(&f).unwrap());
        assert_eq!(a.num_columns(), 10);
        assert!(a.rows()[0].iter().all(|&x| x == 1));
        let k = integer_kernel(&a.to_matrix());
        assert_eq!(k.rank(), 7);
        for l in k.rows() {
            assert!(l.iter().sum::<BigInt>().is_zero());
            for r in 1..3 {
                let s: BigInt = l.iter().zip(a.columns()).map(|(x, c)| x * c[r]).sum();
                assert!(s.is_zero());
            }
        }
    }
}
