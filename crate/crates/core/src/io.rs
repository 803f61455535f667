//! JSON file formats, all tagged with [`FORMAT_VERSION`].

use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use num_traits::One;

use crate::exact::{BigInt, BigRational, QMatrix};
use crate::flag::{anticanonical_coefficients, ParabolicChoice, RootDataA};
use crate::period::{PeriodSeries, VerificationReport};
use crate::taut::{PolynomialOp, SymmetryOp, TautSystem};
use crate::toric::{ClassGroup, DivisorClass, FanData, MonomialBasis};
use crate::weyl::{DiffOp, FormalSeries};
use crate::FORMAT_VERSION;

fn version() -> String {
    FORMAT_VERSION.to_string()
}

fn check_version(found: &str) -> Result<()> {
    if found != FORMAT_VERSION {
        return input(format!("unsupported format {found:?}, expected {FORMAT_VERSION:?}"));
    }
    Ok(())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    BigRational::from_str(s.trim()).map_err(|_| Error::Parse(format!("not a rational number: {s:?}")))
}

fn parse_integer(s: &str) -> Result<BigInt> {
    BigInt::from_str(s.trim()).map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanFile {
    #[serde(default = "version")]
    pub format: String,
    pub dimension: usize,
    pub rays: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximal_cones: Option<Vec<Vec<usize>>>,
}

impl FanFile {
    pub fn from_fan(fan: &FanData) -> Self {
        Self {
            format: version(),
            dimension: fan.dimension(),
            rays: fan.rays().to_vec(),
            maximal_cones: fan.maximal_cones().map(<[_]>::to_vec),
        }
    }

    pub fn to_fan(&self) -> Result<FanData> {
        check_version(&self.format)?;
        FanData::new(self.dimension, self.rays.clone(), self.maximal_cones.clone())
    }
}

/// Largest n accepted for SL_n input.
pub const MAX_FLAG_N: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagFile {
    #[serde(default = "version")]
    pub format: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub n: usize,
    /// Simple roots outside S, numbered from 1.
    pub parabolic_complement: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<Vec<u32>>,
}

impl FlagFile {
    /// Root data, parabolic and bundle coefficients (anticanonical when
    /// the file gives none).
    pub fn resolve(&self) -> Result<(RootDataA, ParabolicChoice, Vec<u32>)> {
        check_version(&self.format)?;
        if self.kind != "A" {
            return input(format!("only type A is supported, found {:?}", self.kind));
        }
        if self.n > MAX_FLAG_N {
            return input(format!("SL_{} exceeds the supported size n <= {MAX_FLAG_N}", self.n));
        }
        let root = RootDataA::new(self.n)?;
        let parabolic = ParabolicChoice::from_complement(&root, &self.parabolic_complement)?;
        let coefficients = match &self.bundle {
            Some(b) => b.clone(),
            None => anticanonical_coefficients(&root, &parabolic)?,
        };
        Ok((root, parabolic, coefficients))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default = "version")]
    pub format: String,
    pub variables: Vec<String>,
    pub beta: Vec<String>,
    pub symmetry_ops: Vec<String>,
    pub polynomial_ops: Vec<String>,
    /// Operator labels, symmetry operators first.
    pub provenance: Vec<String>,
}

impl SystemFile {
    pub fn from_system(system: &TautSystem) -> Self {
        Self {
            format: version(),
            variables: system.variables().to_vec(),
            beta: system.beta().iter().map(ToString::to_string).collect(),
            symmetry_ops: system.symmetry_ops().iter().map(|s| s.op.to_string()).collect(),
            polynomial_ops: system.polynomial_ops().iter().map(|p| p.op.to_string()).collect(),
            provenance: system.operators().iter().map(|(l, _)| l.to_string()).collect(),
        }
    }

    pub fn to_system(&self) -> Result<TautSystem> {
        check_version(&self.format)?;
        let (ns, np) = (self.symmetry_ops.len(), self.polynomial_ops.len());
        if self.provenance.len() != ns + np {
            return input(format!("{} provenance labels for {} operators", self.provenance.len(), ns + np));
        }
        if self.beta.len() != ns {
            return input(format!("{} beta values for {ns} symmetry operators", self.beta.len()));
        }
        let n = self.variables.len();
        let mut symmetry = Vec::with_capacity(ns);
        for ((text, label), beta) in self.symmetry_ops.iter().zip(&self.provenance).zip(&self.beta) {
            let op = DiffOp::parse(n, text)?;
            let Some((_, b)) = op.generator() else {
                return input(format!("symmetry operator {label} is not first order"));
            };
            if b != parse_rational(beta)? {
                return input(format!("beta {beta} disagrees with the constant term of {label}"));
            }
            symmetry.push(SymmetryOp { label: label.clone(), op, scaling: label.starts_with("scaling") });
        }
        let polynomial = self
            .polynomial_ops
            .iter()
            .zip(&self.provenance[ns..])
            .map(|(text, label)| Ok(PolynomialOp { label: label.clone(), op: DiffOp::parse(n, text)? }))
            .collect::<Result<_>>()?;
        TautSystem::new(self.variables.clone(), symmetry, polynomial)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub exponent: Vec<i64>,
    pub numerator: String,
    pub denominator: String,
}

/// Terms in graded order; `truncation` null means an exact expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesFile {
    #[serde(default = "version")]
    pub format: String,
    pub nvars: usize,
    pub weights: Vec<i64>,
    pub truncation: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub terms: Vec<SeriesTerm>,
}

impl SeriesFile {
    pub fn from_series(series: &FormalSeries) -> Self {
        Self {
            format: version(),
            nvars: series.nvars(),
            weights: series.weights().to_vec(),
            truncation: series.truncation(),
            interior_index: None,
            order: None,
            terms: series
                .sorted_terms()
                .into_iter()
                .map(|(e, c)| SeriesTerm {
                    exponent: e.clone(),
                    numerator: c.numer().to_string(),
                    denominator: c.denom().to_string(),
                })
                .collect(),
        }
    }

    pub fn from_period(period: &PeriodSeries) -> Self {
        Self {
            interior_index: Some(period.interior_index()),
            order: Some(period.order()),
            ..Self::from_series(period.series())
        }
    }

    pub fn to_series(&self) -> Result<FormalSeries> {
        check_version(&self.format)?;
        if self.weights.len() != self.nvars {
            return Err(Error::VariableMismatch { expected: self.nvars, found: self.weights.len() });
        }
        let mut s = FormalSeries::new(self.nvars, self.weights.clone(), self.truncation);
        for t in &self.terms {
            if t.exponent.len() != self.nvars {
                return Err(Error::VariableMismatch { expected: self.nvars, found: t.exponent.len() });
            }
            let d = parse_integer(&t.denominator)?;
            if d == BigInt::from(0) {
                return input("zero denominator in series term");
            }
            let c = BigRational::new(parse_integer(&t.numerator)?, d);
            if s.coefficient(&t.exponent) != BigRational::from_integer(0.into()) {
                return input(format!("repeated exponent {:?}", t.exponent));
            }
            s.add_term(t.exponent.clone(), c);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorResult {
    pub label: String,
    pub passed: bool,
    pub certified_order: Option<i64>,
    pub residual_terms: usize,
    /// Lowest nonzero residual term, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_residual: Option<SeriesTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(default = "version")]
    pub format: String,
    pub passed: bool,
    pub operators: Vec<OperatorResult>,
}

impl ReportFile {
    pub fn from_report(report: &VerificationReport) -> Self {
        let operators = report
            .labels
            .iter()
            .zip(&report.reports)
            .map(|(label, r)| OperatorResult {
                label: label.clone(),
                passed: r.passed,
                certified_order: r.certified_order,
                residual_terms: r.residual.len(),
                first_residual: r.residual.sorted_terms().first().map(|(e, c)| SeriesTerm {
                    exponent: (*e).clone(),
                    numerator: c.numer().to_string(),
                    denominator: c.denom().to_string(),
                }),
            })
            .collect();
        Self { format: version(), passed: report.passed, operators }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFile {
    pub torsion: Vec<String>,
    pub free: Vec<String>,
}

impl ClassFile {
    pub fn from_class(c: &DivisorClass) -> Self {
        Self {
            torsion: c.torsion.iter().map(ToString::to_string).collect(),
            free: c.free.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Class group, canonical class and monomial sections of a fan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricSummary {
    #[serde(default = "version")]
    pub format: String,
    pub free_rank: usize,
    pub torsion_orders: Vec<String>,
    pub canonical_class: ClassFile,
    pub bundle: Vec<i64>,
    pub bundle_class: ClassFile,
    /// Characters mu of the monomial sections.
    pub characters: Vec<Vec<i64>>,
    /// Cox exponents <mu, nu_j> + c_j of the same sections.
    pub sections: Vec<Vec<i64>>,
    pub cy_power: Option<i64>,
}

impl ToricSummary {
    pub fn new(group: &ClassGroup, canonical: &DivisorClass, basis: &MonomialBasis, cy_power: Option<i64>) -> Self {
        Self {
            format: version(),
            free_rank: group.free_rank(),
            torsion_orders: group.torsion_orders().iter().map(ToString::to_string).collect(),
            canonical_class: ClassFile::from_class(canonical),
            bundle: basis.bundle.clone(),
            bundle_class: ClassFile::from_class(&group.class_of(&basis.bundle)),
            characters: basis.laurent_exponents.clone(),
            sections: basis.monomials.clone(),
            cy_power,
        }
    }
}

/// Outcome of evaluating operator symbols on sampled cone points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingReport {
    #[serde(default = "version")]
    pub format: String,
    pub target: String,
    pub seed: u64,
    pub points: usize,
    pub operators: usize,
    pub linear_operators: usize,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Matrix entry written as an integer or a string "p/q".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Text(String),
}

impl Entry {
    pub fn value(&self) -> Result<BigRational> {
        match self {
            Entry::Int(k) => Ok(BigRational::from_integer((*k).into())),
            Entry::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMatrix {
    pub label: String,
    /// Action on the coefficient vector: a -> R a.
    pub action: Vec<Vec<Entry>>,
}

/// A Lie algebra acting linearly on the coefficient space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantFile {
    #[serde(default = "version")]
    pub format: String,
    pub generators: Vec<ActionMatrix>,
}

impl InvariantFile {
    /// Generator matrices in operator convention, x = -R^T.
    pub fn operator_matrices(&self) -> Result<Vec<(String, QMatrix)>> {
        check_version(&self.format)?;
        self.generators
            .iter()
            .map(|g| {
                let n = g.action.len();
                if g.action.iter().any(|r| r.len() != n) {
                    return input(format!("action matrix {} is not square", g.label));
                }
                let rows = g.action.iter().map(|r| r.iter().map(Entry::value).collect()).collect::<Result<_>>()?;
                let r = QMatrix::from_rows(n, rows)?;
                Ok((g.label.clone(), r.transpose().scale(&-BigRational::one())))
            })
            .collect()
    }
}
