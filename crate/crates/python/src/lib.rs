//! Python bindings: fans, tautological systems and period series.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tautgen_core::exact::BigInt;
use tautgen_core::flag::{weyl_dimension as weyl_dim, RootDataA};
use tautgen_core::io::{to_json, ActionMatrix, Entry, FanFile, FlagFile, InvariantFile, SeriesFile, SystemFile};
use tautgen_core::period::{numeric_period as quadrature, period_series as expand, PeriodSeries};
use tautgen_core::taut::{
    build_flag_system_v, build_flag_system_w, build_invariant_system, build_toric_gkz, polynomial_solutions,
    TautSystem,
};
use tautgen_core::toric::{a_matrix, canonical_class, class_group, cy_power_check, sections, AMatrix, FanData};
use tautgen_core::{Error, FormalSeries, FORMAT_VERSION};

const DEFAULT_SEED: u64 = 1729;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A complete fan given by primitive rays.
#[pyclass(frozen, module = "tautgen")]
struct Fan {
    inner: FanData,
}

impl Fan {
    fn a_matrix(&self, bundle: Option<Vec<i64>>) -> PyResult<AMatrix> {
        let c = bundle.unwrap_or_else(|| vec![1; self.inner.num_rays()]);
        Ok(a_matrix(&sections(&self.inner, &c).map_err(err)?))
    }
}

#[pymethods]
impl Fan {
    #[new]
    #[pyo3(signature = (dimension, rays, maximal_cones=None))]
    fn new(dimension: usize, rays: Vec<Vec<i64>>, maximal_cones: Option<Vec<Vec<usize>>>) -> PyResult<Self> {
        Ok(Fan { inner: FanData::new(dimension, rays, maximal_cones).map_err(err)? })
    }

    #[staticmethod]
    fn projective_space(d: usize) -> Self {
        Fan { inner: FanData::projective_space(d) }
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn rays(&self) -> Vec<Vec<i64>> {
        self.inner.rays().to_vec()
    }

    /// (free rank, torsion orders) of the class group.
    fn class_group(&self) -> (usize, Vec<BigInt>) {
        let g = class_group(&self.inner);
        (g.free_rank(), g.torsion_orders().to_vec())
    }

    /// Whether K + sum D_j is the zero class.
    fn canonical_relation_holds(&self) -> bool {
        let g = class_group(&self.inner);
        let k = canonical_class(&self.inner, &g);
        let sum = g.class_of(&vec![1; self.inner.num_rays()]);
        g.add(&k, &sum).is_zero()
    }

    /// Characters spanning H^0 of the bundle sum c_j D_j (anticanonical by default).
    #[pyo3(signature = (bundle=None))]
    fn sections(&self, bundle: Option<Vec<i64>>) -> PyResult<Vec<Vec<i64>>> {
        let c = bundle.unwrap_or_else(|| vec![1; self.inner.num_rays()]);
        Ok(sections(&self.inner, &c).map_err(err)?.laurent_exponents)
    }

    /// The l with K = l [L] in the class group, if any.
    fn cy_power(&self, bundle: Vec<i64>) -> PyResult<Option<i64>> {
        if bundle.len() != self.inner.num_rays() {
            return Err(err(Error::VariableMismatch { expected: self.inner.num_rays(), found: bundle.len() }));
        }
        let g = class_group(&self.inner);
        Ok(cy_power_check(&self.inner, &g, &g.class_of(&bundle)))
    }

    /// GKZ system of the section matrix of a bundle.
    #[pyo3(signature = (bundle=None))]
    fn gkz_system(&self, bundle: Option<Vec<i64>>) -> PyResult<System> {
        Ok(System { inner: build_toric_gkz(&self.a_matrix(bundle)?).map_err(err)? })
    }

    /// Constant-term expansion of the anticanonical period up to `order`.
    #[pyo3(signature = (order=6))]
    fn period_series(&self, order: usize) -> PyResult<Series> {
        let p = expand(&self.a_matrix(None)?, order).map_err(err)?;
        Ok(Series { inner: p.series().clone(), period: Some(p) })
    }

    /// Torus quadrature of the anticanonical period at a coefficient vector.
    #[pyo3(signature = (coefficients, grid=64))]
    fn numeric_period(&self, coefficients: Vec<Complex64>, grid: usize) -> PyResult<Complex64> {
        quadrature(&self.a_matrix(None)?, &coefficients, grid).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&FanFile::from_fan(&self.inner)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Fan(dimension={}, rays={:?})", self.inner.dimension(), self.inner.rays())
    }
}

/// A tautological system: symmetry operators plus polynomial operators.
#[pyclass(frozen, module = "tautgen")]
struct System {
    inner: TautSystem,
}

#[pymethods]
impl System {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: SystemFile = serde_from(text)?;
        Ok(System { inner: file.to_system().map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&SystemFile::from_system(&self.inner)).map_err(err)
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables().to_vec()
    }

    #[getter]
    fn symmetry_labels(&self) -> Vec<String> {
        self.inner.symmetry_ops().iter().map(|s| s.label.clone()).collect()
    }

    /// (label, operator) pairs for the polynomial part.
    #[getter]
    fn polynomial_ops(&self) -> Vec<(String, String)> {
        self.inner.polynomial_ops().iter().map(|p| (p.label.clone(), p.op.to_string())).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.num_operators()
    }

    /// Labels of the operators that do not annihilate `series`; empty on success.
    fn failures(&self, series: &Series) -> PyResult<Vec<String>> {
        let report = tautgen_core::period::verify_system(&self.inner, &series.inner).map_err(err)?;
        Ok(report.failures().map(|(l, _)| l.to_string()).collect())
    }

    fn annihilates(&self, series: &Series) -> PyResult<bool> {
        Ok(self.failures(series)?.is_empty())
    }

    /// Polynomial solutions homogeneous of the given degree.
    fn polynomial_solutions(&self, degree: usize) -> PyResult<Vec<Series>> {
        let sols = polynomial_solutions(&self.inner, degree).map_err(err)?;
        Ok(sols.into_iter().map(|s| Series { inner: s, period: None }).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "System(variables={}, symmetry_ops={}, polynomial_ops={})",
            self.inner.nvars(),
            self.inner.symmetry_ops().len(),
            self.inner.polynomial_ops().len()
        )
    }
}

/// A truncated Laurent series with exact rational coefficients.
#[pyclass(frozen, module = "tautgen")]
struct Series {
    inner: FormalSeries,
    period: Option<PeriodSeries>,
}

#[pymethods]
impl Series {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: SeriesFile = serde_from(text)?;
        Ok(Series { inner: file.to_series().map_err(err)?, period: None })
    }

    fn to_json(&self) -> PyResult<String> {
        let file = match &self.period {
            Some(p) => SeriesFile::from_period(p),
            None => SeriesFile::from_series(&self.inner),
        };
        to_json(&file).map_err(err)
    }

    /// (exponent, coefficient) pairs with coefficients as "p/q" strings.
    fn terms(&self) -> Vec<(Vec<i64>, String)> {
        self.inner.sorted_terms().into_iter().map(|(e, c)| (e.clone(), c.to_string())).collect()
    }

    fn coefficient(&self, exponent: Vec<i64>) -> String {
        self.inner.coefficient(&exponent).to_string()
    }

    #[getter]
    fn truncation(&self) -> Option<i64> {
        self.inner.truncation()
    }

    /// Partial sum at a point; only for period series.
    fn evaluate(&self, point: Vec<Complex64>) -> PyResult<Complex64> {
        let p = self.period_or_err()?;
        check_len(p, &point)?;
        Ok(p.evaluate(&point))
    }

    /// Bound on the relative truncation error, `None` outside the region of control.
    fn tail_bound(&self, point: Vec<Complex64>) -> PyResult<Option<f64>> {
        let p = self.period_or_err()?;
        check_len(p, &point)?;
        Ok(p.relative_tail_bound(&point))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Series({} terms)", self.inner.len())
    }
}

impl Series {
    fn period_or_err(&self) -> PyResult<&PeriodSeries> {
        self.period.as_ref().ok_or_else(|| PyValueError::new_err("not a period series"))
    }
}

fn check_len(p: &PeriodSeries, point: &[Complex64]) -> PyResult<()> {
    let n = p.series().nvars();
    if point.len() != n {
        return Err(err(Error::VariableMismatch { expected: n, found: point.len() }));
    }
    Ok(())
}

fn serde_from<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Casimir (target "v") or Segre-Veronese (target "w") system of an SL_n flag variety.
#[pyfunction]
#[pyo3(signature = (n, complement, bundle=None, target="v", seed=DEFAULT_SEED))]
fn flag_system(n: usize, complement: Vec<usize>, bundle: Option<Vec<u32>>, target: &str, seed: u64) -> PyResult<System> {
    let file = FlagFile {
        format: FORMAT_VERSION.to_string(),
        kind: "A".to_string(),
        n,
        parabolic_complement: complement,
        bundle,
    };
    let (root, p, coeffs) = file.resolve().map_err(err)?;
    let inner = match target {
        "v" | "V" => build_flag_system_v(&root, &p, &coeffs).map_err(err)?.system,
        "w" | "W" => build_flag_system_w(&root, &p, &coeffs, seed).map_err(err)?.system,
        other => return Err(PyValueError::new_err(format!("unknown target {other:?}, expected \"v\" or \"w\""))),
    };
    Ok(System { inner })
}

/// Dimension of the irreducible SL_n module with the given Dynkin labels.
#[pyfunction]
fn weyl_dimension(n: usize, weight: Vec<i64>) -> PyResult<BigInt> {
    let root = RootDataA::new(n).map_err(err)?;
    weyl_dim(&root, &weight).map_err(err)
}

/// System whose degree-d polynomial solutions are the invariants of a linear
/// action; each matrix acts on the coefficient vector.
#[pyfunction]
#[pyo3(signature = (actions, degree=2))]
fn invariant_system(actions: Vec<(String, Vec<Vec<i64>>)>, degree: i64) -> PyResult<System> {
    let file = InvariantFile {
        format: FORMAT_VERSION.to_string(),
        generators: actions
            .into_iter()
            .map(|(label, m)| ActionMatrix {
                label,
                action: m.into_iter().map(|r| r.into_iter().map(Entry::Int).collect()).collect(),
            })
            .collect(),
    };
    let generators = file.operator_matrices().map_err(err)?;
    Ok(System { inner: build_invariant_system(&generators, degree).map_err(err)? })
}

#[pymodule]
pub fn tautgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FORMAT_VERSION", FORMAT_VERSION)?;
    m.add_class::<Fan>()?;
    m.add_class::<System>()?;
    m.add_class::<Series>()?;
    m.add_function(wrap_pyfunction!(flag_system, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_system, m)?)?;
    Ok(())
}
