//! Period integrals of toric hypersurfaces as exact constant-term series,
//! annihilation checks against tautological systems and torus quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{input, Error, Result};
use crate::exact::{integer_kernel, multinomial, BigInt, BigRational};
use crate::taut::TautSystem;
use crate::toric::AMatrix;
use crate::weyl::{annihilates_indexed, AnnihilationReport, DiffOp, FormalSeries};

/// Constant term in y of y^m / f(y), f = sum_i a_i y^{mu_i}, expanded
/// geometrically around the coefficient of y^0.
///
/// Grading: weight 0 on the interior variable and 1 elsewhere, so the grade
/// of a term equals its expansion step k. The series holds every term with
/// k <= `max_step`, where `max_step = step * order` and `step` is the gcd
/// of the interior entries of ker A: only multiples of `step` occur, so
/// `order` counts nonzero expansion layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodSeries {
    series: FormalSeries,
    interior: usize,
    order: usize,
    step: i64,
    numerator: Vec<i64>,
}

impl PeriodSeries {
    pub fn series(&self) -> &FormalSeries {
        &self.series
    }

    pub fn into_series(self) -> FormalSeries {
        self.series
    }

    pub fn interior_index(&self) -> usize {
        self.interior
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn max_step(&self) -> i64 {
        self.step * self.order as i64
    }

    pub fn numerator(&self) -> &[i64] {
        &self.numerator
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Complex64 {
        self.series.evaluate(point)
    }

    /// Upper bound on |Pi - partial sum| / |Pi| at a point with
    /// r = sum_{i != i0} |a_i| / |a_{i0}| < 1/2: every step-k layer is at
    /// most r^k / |a_{i0}| and |Pi| >= (1 - 2r) / ((1 - r) |a_{i0}|).
    pub fn relative_tail_bound(&self, point: &[Complex64]) -> Option<f64> {
        let r = dominance_ratio(point, self.interior);
        (r < 0.5).then(|| r.powi(self.max_step() as i32 + 1) / (1.0 - 2.0 * r))
    }

    /// Asserts the structural invariants of every stored term: total degree
    /// -1, torus weight -m, nonnegative exponents off the interior.
    pub fn check_invariants(&self, a: &AMatrix) -> Result<()> {
        for (e, c) in self.series.terms() {
            if e.iter().sum::<i64>() != -1 {
                return Err(Error::Consistency(format!("term {e:?} is not of degree -1")));
            }
            for (r, &m) in self.numerator.iter().enumerate() {
                let w: i64 = e.iter().zip(a.columns()).map(|(k, col)| k * col[r + 1]).sum();
                if w != -m {
                    return Err(Error::Consistency(format!("term {e:?} has torus weight {w}")));
                }
            }
            if e.iter().enumerate().any(|(i, &k)| i != self.interior && k < 0) {
                return Err(Error::Consistency(format!("term {e:?} has a negative exponent")));
            }
            let k = -1 - e[self.interior];
            if !c.is_integer() || (c.is_negative() != k.is_odd()) {
                return Err(Error::Consistency(format!("term {e:?} has coefficient {c}")));
            }
        }
        Ok(())
    }
}

fn dominance_ratio(point: &[Complex64], interior: usize) -> f64 {
    let rest: f64 = point.iter().enumerate().filter(|&(i, _)| i != interior).map(|(_, z)| z.norm()).sum();
    rest / point[interior].norm()
}

/// gcd of the interior entries over a basis of ker A.
fn interior_step(a: &AMatrix, interior: usize) -> i64 {
    let g = integer_kernel(&a.to_matrix())
        .rows()
        .iter()
        .fold(BigInt::zero(), |g, l| g.gcd(&l[interior]));
    if g.is_zero() {
        1
    } else {
        g.to_i64().expect("small gcd")
    }
}

pub fn period_series(a: &AMatrix, order: usize) -> Result<PeriodSeries> {
    period_series_with_numerator(a, order, &vec![0; a.num_rows() - 1])
}

/// Series for the constant term of y^m / f.
pub fn period_series_with_numerator(a: &AMatrix, order: usize, m: &[i64]) -> Result<PeriodSeries> {
    let n = a.num_rows() - 1;
    if m.len() != n {
        return input(format!("numerator exponent has {} entries, expected {n}", m.len()));
    }
    let interior = a.interior_index().ok_or(Error::NoInteriorPoint)?;
    let p = a.num_columns();
    let others: Vec<usize> = (0..p).filter(|&i| i != interior).collect();
    let step = interior_step(a, interior);
    let max_step = step * order as i64;
    let mut weights = vec![1; p];
    weights[interior] = 0;
    let mut series = FormalSeries::new(p, weights, Some(max_step));
    let target: Vec<i64> = m.iter().map(|x| -x).collect();

    // compositions (k_i)_{i != i0} with sum k_i mu_i = -m, by depth-first
    // search over the non-interior columns
    struct Search<'a> {
        a: &'a AMatrix,
        others: &'a [usize],
        target: &'a [i64],
        max_step: i64,
        counts: Vec<i64>,
        found: Vec<Vec<i64>>,
    }
    impl Search<'_> {
        fn run(&mut self, pos: usize, used: i64, weight: &mut Vec<i64>) {
            if pos == self.others.len() {
                if weight == self.target {
                    self.found.push(self.counts.clone());
                }
                return;
            }
            let mu = self.a.mu(self.others[pos]);
            for k in 0..=self.max_step - used {
                self.counts[pos] = k;
                self.run(pos + 1, used + k, weight);
                weight.iter_mut().zip(mu).for_each(|(w, x)| *w += x);
            }
            let k = self.max_step - used + 1;
            weight.iter_mut().zip(mu).for_each(|(w, x)| *w -= k * x);
            self.counts[pos] = 0;
        }
    }
    let mut search = Search {
        a,
        others: &others,
        target: &target,
        max_step,
        counts: vec![0; others.len()],
        found: Vec::new(),
    };
    search.run(0, 0, &mut vec![0; n]);

    for counts in search.found {
        let k: i64 = counts.iter().sum();
        let mut coef = multinomial(&counts)?;
        if k.is_odd() {
            coef = -coef;
        }
        let mut e = vec![0; p];
        e[interior] = -k - 1;
        for (&i, &c) in others.iter().zip(&counts) {
            e[i] = c;
        }
        series.add_term(e, BigRational::from_integer(coef));
    }
    Ok(PeriodSeries { series, interior, order, step, numerator: m.to_vec() })
}

/// Per-operator annihilation results for one series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub labels: Vec<String>,
    pub reports: Vec<AnnihilationReport>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = (&str, &AnnihilationReport)> {
        self.labels.iter().map(String::as_str).zip(&self.reports).filter(|(_, r)| !r.passed)
    }
}

pub fn verify_system(system: &TautSystem, series: &FormalSeries) -> Result<VerificationReport> {
    let ops = system.operators();
    verify_operators(ops.iter().map(|&(l, o)| (l, o)), series)
}

pub fn verify_operators<'a>(
    ops: impl IntoIterator<Item = (&'a str, &'a DiffOp)>,
    series: &FormalSeries,
) -> Result<VerificationReport> {
    let mut labels = Vec::new();
    let mut reports = Vec::new();
    for (i, (label, op)) in ops.into_iter().enumerate() {
        labels.push(label.to_string());
        reports.push(annihilates_indexed(i, op, series)?);
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok(VerificationReport { labels, reports, passed })
}

/// Trapezoidal quadrature of the torus integral of y^m / f(y) over
/// |y_k| = 1 with the normalized Haar measure.
pub fn numeric_period(a: &AMatrix, coefficients: &[Complex64], grid: usize) -> Result<Complex64> {
    numeric_period_with_numerator(a, coefficients, grid, &vec![0; a.num_rows() - 1])
}

pub fn numeric_period_with_numerator(
    a: &AMatrix,
    coefficients: &[Complex64],
    grid: usize,
    m: &[i64],
) -> Result<Complex64> {
    let n = a.num_rows() - 1;
    if coefficients.len() != a.num_columns() {
        return Err(Error::VariableMismatch { expected: a.num_columns(), found: coefficients.len() });
    }
    if grid < 8 {
        return input("quadrature grid must have at least 8 points per circle");
    }
    let interior = a.interior_index().ok_or(Error::NoInteriorPoint)?;
    if dominance_ratio(coefficients, interior) >= 1.0 {
        return Err(Error::OutsidePolydisc);
    }
    let roots: Vec<Complex64> =
        (0..grid).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / grid as f64)).collect();
    let power = |idx: &[usize], exps: &[i64]| -> Complex64 {
        // y^e on the grid: roots[(sum e_k j_k) mod grid]
        let mut t: i64 = 0;
        for (&j, &e) in idx.iter().zip(exps) {
            t += e * j as i64;
        }
        roots[t.rem_euclid(grid as i64) as usize]
    };
    let mut idx = vec![0usize; n];
    let mut acc = Complex64::zero();
    loop {
        let f: Complex64 = (0..a.num_columns()).map(|i| coefficients[i] * power(&idx, a.mu(i))).sum();
        acc += power(&idx, m) / f;
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(acc / (grid as f64).powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::taut::build_toric_gkz;
    use crate::toric::{a_matrix, anticanonical_sections, FanData};

    fn amat(d: usize) -> AMatrix {
        a_matrix(&anticanonical_sections(&FanData::projective_space(d)).unwrap())
    }

    fn binom(n: u64, k: u64) -> BigInt {
        (0..k).fold(BigInt::from(1), |acc, i| acc * (n - i) / (i + 1))
    }

    /// Constant term of (a0 y^-1 + a2 y)^k, independent of the engine.
    fn constant_term_oracle(k: u64) -> BigInt {
        if k % 2 == 1 {
            BigInt::zero()
        } else {
            binom(k, k / 2)
        }
    }

    #[test]
    fn p1_series_matches_constant_terms() {
        let a = amat(1);
        let s = period_series(&a, 12).unwrap();
        assert_eq!(s.step(), 2);
        assert_eq!(s.series().len(), 13);
        for m in 0..=12i64 {
            let c = s.series().coefficient(&[m, -2 * m - 1, m]);
            assert_eq!(c, BigRational::from_integer(constant_term_oracle(2 * m as u64)));
        }
        s.check_invariants(&a).unwrap();
    }

    #[test]
    fn zeroth_order_is_inverse_interior() {
        let s = period_series(&amat(2), 0).unwrap();
        assert_eq!(s.series().len(), 1);
        let (e, c) = s.series().terms().next().unwrap();
        assert_eq!(c, &rat(1));
        assert_eq!(e.iter().sum::<i64>(), -1);
        assert_eq!(e[s.interior_index()], -1);
    }

    #[test]
    fn p2_lowest_term() {
        let a = amat(2);
        let s = period_series(&a, 6).unwrap();
        s.check_invariants(&a).unwrap();
        // (1,0), (0,1), (-1,-1) with k = 3: -3! a^{-4}
        let cols: Vec<usize> = [[1, 0], [0, 1], [-1, -1]]
            .iter()
            .map(|mu| (0..a.num_columns()).find(|&i| a.mu(i) == mu).unwrap())
            .collect();
        let mut e = vec![0; 10];
        e[s.interior_index()] = -4;
        for c in cols {
            e[c] = 1;
        }
        assert_eq!(s.series().coefficient(&e), rat(-6));
        // an opposite pair gives k = 2: +2 a^{-3}
        let i = (0..10).find(|&i| a.mu(i) == [1, 0]).unwrap();
        let j = (0..10).find(|&i| a.mu(i) == [-1, 0]).unwrap();
        let mut e = vec![0; 10];
        e[s.interior_index()] = -3;
        e[i] = 1;
        e[j] = 1;
        assert_eq!(s.series().coefficient(&e), rat(2));
    }

    #[test]
    fn missing_interior_point() {
        let a = AMatrix::from_columns(vec![vec![1, 1], vec![1, 2]]).unwrap();
        assert!(matches!(period_series(&a, 3), Err(Error::NoInteriorPoint)));
    }

    #[test]
    fn gkz_annihilates_p1_period() {
        let a = amat(1);
        let sys = build_toric_gkz(&a).unwrap();
        let s = period_series(&a, 12).unwrap();
        let rep = verify_system(&sys, s.series()).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.reports.len(), 3);
        // corrupt one coefficient
        let mut bad = s.series().clone();
        bad.set_coefficient(vec![3, -7, 3], rat(21));
        let rep = verify_system(&sys, &bad).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.failures().count(), 1);
    }

    #[test]
    fn numerator_series_weights() {
        let a = amat(2);
        let s = period_series_with_numerator(&a, 4, &[1, 0]).unwrap();
        assert!(!s.series().is_empty());
        s.check_invariants(&a).unwrap();
        assert!(period_series_with_numerator(&a, 4, &[1]).is_err());
    }

    #[test]
    fn quadrature_agrees_with_series_on_p1() {
        let a = amat(1);
        let s = period_series(&a, 12).unwrap();
        let pt = [Complex64::new(1.0, 0.0), Complex64::new(5.0, 0.0), Complex64::new(1.0, 0.0)];
        let num = numeric_period(&a, &pt, 64).unwrap();
        let ser = s.evaluate(&pt);
        assert!(((num - ser) / ser).norm() < 1e-8);
        assert!(s.relative_tail_bound(&pt).unwrap() < 1e-8);
    }

    #[test]
    fn quadrature_edge_cases() {
        let a = amat(1);
        let unit = [Complex64::zero(), Complex64::new(1.0, 0.0), Complex64::zero()];
        assert_eq!(numeric_period(&a, &unit, 8).unwrap(), Complex64::new(1.0, 0.0));
        let pt = [Complex64::new(1.0, 0.0), Complex64::new(10.0, 0.0), Complex64::new(1.0, 0.0)];
        // 1/(a0 + y + 1/y) has Fourier coefficients rho^|k| / sqrt(a0^2 - 4),
        // so an N-point rule overshoots by exactly 2 rho^N / (1 - rho^N) times
        // the k = 0 coefficient
        let s = (96.0f64).sqrt();
        let rho = (10.0 - s) / 2.0;
        let aliasing = |n: i32| 2.0 * rho.powi(n) / (1.0 - rho.powi(n)) / s;
        let fine = numeric_period(&a, &pt, 64).unwrap();
        assert!((fine.re - 1.0 / s).abs() < 1e-15);
        let coarse = numeric_period(&a, &pt, 8).unwrap();
        assert!(((coarse - fine).re - aliasing(8)).abs() < 1e-15);
        assert!((numeric_period(&a, &pt, 12).unwrap() - fine).norm() < 1e-10);
        let outside = [Complex64::new(1.0, 0.0), Complex64::new(1.5, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(numeric_period(&a, &outside, 16), Err(Error::OutsidePolydisc)));
        assert!(numeric_period(&a, &pt, 4).is_err());
    }
}
