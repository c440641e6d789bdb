//! Truncated expansions of `E[f(u_t)]` in powers of `t`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth::{
    classical_symmetry, classical_tree_factorial, enumerate_trees, tree_factorial, FertilityBound, GrowthRule,
};
use crate::jets::{apply_generator, elementary_differential, jet_from_spec, Field, FunctionSpec, Jet, JetError, Mode, Number, Scalar};
use crate::multiindex::{
    counting_map, elementary_differential_multi, enumerate_populated, realization_from_trees, symmetry_factor_multi,
};
use crate::rational::{factorial_q, parse_rational};
use crate::tree::ExoticTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("the classical expansion needs β ≡ 0")]
    NotDeterministic,
}

/// `du = α(u) dt + β(u) dW` started at `u0`, observed through `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeProblem {
    pub alpha: FunctionSpec,
    pub beta: FunctionSpec,
    pub f: FunctionSpec,
    pub u0: Scalar,
    pub mode: Mode,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    u0: Number,
    #[serde(default = "exact")]
    mode: Mode,
    alpha: FunctionSpec,
    beta: FunctionSpec,
    f: FunctionSpec,
}

fn exact() -> Mode {
    Mode::Exact
}

impl SdeProblem {
    pub fn new(alpha: FunctionSpec, beta: FunctionSpec, f: FunctionSpec, u0: Scalar) -> Result<Self, SeriesError> {
        let mode = u0.mode();
        if mode == Mode::Exact {
            for (name, s) in [("alpha", &alpha), ("beta", &beta), ("f", &f)] {
                if !s.is_exact_compatible() {
                    return Err(SeriesError::Invalid(format!("{name} is an exponential, which needs float mode")));
                }
            }
        }
        Ok(SdeProblem { alpha, beta, f, u0, mode })
    }

    /// Parses the JSON problem format `{"u0": "1", "mode": "exact", "alpha": {...}, "beta": {...}, "f": {...}}`.
    pub fn from_json(text: &str) -> Result<Self, SeriesError> {
        let s: SpecFile = serde_json::from_str(text).map_err(|e| SeriesError::Invalid(e.to_string()))?;
        let u0 = match s.mode {
            Mode::Exact => Scalar::Exact(s.u0.0),
            Mode::Float => Scalar::Float(f64::from_rational(&s.u0.0)),
        };
        SdeProblem::new(s.alpha, s.beta, s.f, u0)
    }

    pub fn to_json(&self) -> String {
        let u0 = match &self.u0 {
            Scalar::Exact(r) => r.clone(),
            Scalar::Float(x) => BigRational::from_float(*x).unwrap_or_default(),
        };
        let s = SpecFile { u0: Number(u0), mode: self.mode, alpha: self.alpha.clone(), beta: self.beta.clone(), f: self.f.clone() };
        serde_json::to_string(&s).expect("problem serializes")
    }

    /// Fertility bounds implied by the degrees of `α`, `β` and `f`.
    pub fn rule(&self) -> GrowthRule {
        GrowthRule { alpha: self.alpha.fertility_bound(), beta: self.beta.fertility_bound(), root: self.f.fertility_bound() }
    }

    fn jets<F: Field>(&self, order: usize) -> Result<[Jet<F>; 3], SeriesError> {
        let u0 = F::from_scalar(&self.u0)?;
        Ok([
            jet_from_spec(&self.alpha, &u0, order)?,
            jet_from_spec(&self.beta, &u0, order)?,
            jet_from_spec(&self.f, &u0, order)?,
        ])
    }

    /// Jets deep enough for every vertex of a tree with at most `edges` edges.
    /// A vertex can carry `2·edges` children; polynomials stop at their degree.
    fn tree_jets<F: Field>(&self, edges: usize) -> Result<[Jet<F>; 3], SeriesError> {
        let u0 = F::from_scalar(&self.u0)?;
        let jet = |s: &FunctionSpec| {
            let need = match s {
                FunctionSpec::Poly { .. } => match s.fertility_bound() {
                    FertilityBound::AtMost(k) => k.min(2 * edges),
                    _ => 0,
                },
                _ => 2 * edges,
            };
            jet_from_spec(s, &u0, need)
        };
        Ok([jet(&self.alpha)?, jet(&self.beta)?, jet(&self.f)?])
    }
}

/// `Σ_{k ≤ order} coeffs[k] t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    pub order: usize,
    pub coeffs: Vec<Scalar>,
    pub mode: Mode,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    order: usize,
    coeffs: BTreeMap<usize, String>,
    mode: Mode,
}

impl TruncatedSeries {
    fn from_field<F: Field>(coeffs: Vec<F>) -> Self {
        TruncatedSeries { order: coeffs.len() - 1, coeffs: coeffs.into_iter().map(F::into_scalar).collect(), mode: F::MODE }
    }

    pub fn coeff(&self, k: usize) -> Option<&Scalar> {
        self.coeffs.get(k)
    }

    pub fn to_json(&self) -> String {
        let j = SeriesJson {
            order: self.order,
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| (k, c.to_string())).collect(),
            mode: self.mode,
        };
        serde_json::to_string(&j).expect("series serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SeriesError> {
        let j: SeriesJson = serde_json::from_str(text).map_err(|e| SeriesError::Invalid(e.to_string()))?;
        let zero = Scalar::parse("0", j.mode).expect("zero parses");
        let mut coeffs = vec![zero; j.order + 1];
        for (k, c) in j.coeffs {
            if k > j.order {
                return Err(SeriesError::Invalid(format!("power {k} exceeds order {}", j.order)));
            }
            coeffs[k] = Scalar::parse(&c, j.mode).map_err(SeriesError::Invalid)?;
        }
        Ok(TruncatedSeries { order: j.order, coeffs, mode: j.mode })
    }

    /// First power where the two series differ.
    pub fn first_difference(&self, other: &TruncatedSeries) -> Option<usize> {
        (0..=self.order.max(other.order)).find(|&k| self.coeffs.get(k) != other.coeffs.get(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Trees,
    Multi,
    Operator,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trees" => Ok(Method::Trees),
            "multi" => Ok(Method::Multi),
            "operator" => Ok(Method::Operator),
            _ => Err(format!("unknown method `{s}` (expected trees, multi or operator)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trees => "trees",
            Method::Multi => "multi",
            Method::Operator => "operator",
        })
    }
}

type Levels = Arc<Vec<Vec<ExoticTree>>>;

static TREES: LazyLock<Mutex<HashMap<(usize, GrowthRule), Levels>>> = LazyLock::new(Default::default);

/// Trees admitted by `rule` up to `order` edges; cached per `(order, rule)`.
pub fn trees_up_to(order: usize, rule: &GrowthRule) -> Levels {
    let key = (order, *rule);
    if let Some(l) = TREES.lock().expect("tree cache lock").get(&key) {
        return l.clone();
    }
    let levels = Arc::new(enumerate_trees(order, Some(rule)));
    TREES.lock().expect("tree cache lock").insert(key, levels.clone());
    levels
}

fn q<F: Field>(r: &BigRational) -> F {
    F::from_rational(r)
}

/// Sums in slice order so floating results do not depend on scheduling.
fn ordered_sum<F: Field>(xs: Vec<F>) -> F {
    xs.into_iter().fold(F::zero(), |a, b| a + b)
}

fn by_trees<F: Field>(p: &SdeProblem, order: usize) -> Result<Vec<F>, SeriesError> {
    let [alpha, beta, f] = p.tree_jets::<F>(order)?;
    let levels = trees_up_to(order, &p.rule());
    levels
        .iter()
        .map(|level| {
            let terms = level
                .par_iter()
                .map(|t| {
                    let w = BigRational::from_integer(BigInt::from(t.exotic_order()))
                        / (tree_factorial(t) * BigRational::from_integer(BigInt::from(t.automorphism_count())));
                    Ok(q::<F>(&w) * elementary_differential(t, &alpha, &beta, &f)?)
                })
                .collect::<Result<Vec<F>, JetError>>()?;
            Ok(ordered_sum(terms))
        })
        .collect()
}

fn by_multiindices<F: Field>(p: &SdeProblem, order: usize) -> Result<Vec<F>, SeriesError> {
    let [alpha, beta, f] = p.tree_jets::<F>(order)?;
    let rule = p.rule();
    let levels = trees_up_to(order, &rule);
    let mut groups: HashMap<_, Vec<ExoticTree>> = HashMap::new();
    for t in levels.iter().flatten() {
        groups.entry(counting_map(t)).or_default().push(t.clone());
    }
    let mut coeffs = vec![F::zero(); order + 1];
    for g in enumerate_populated(order + 1, &rule) {
        let Some(trees) = groups.get(&g) else { continue };
        let upsilon = elementary_differential_multi(&g, &alpha, &beta, &f)?;
        let sf = BigRational::from_integer(BigInt::from(symmetry_factor_multi(&g)));
        for (k, c) in realization_from_trees(&g, trees) {
            coeffs[k] = coeffs[k].clone() + upsilon.clone() * q::<F>(&(c / &sf));
        }
    }
    Ok(coeffs)
}

fn by_operator<F: Field>(p: &SdeProblem, order: usize) -> Result<Vec<F>, SeriesError> {
    let [alpha, beta, f] = p.jets::<F>(2 * order)?;
    let mut g = f;
    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        out.push(g.value().clone() / q::<F>(&factorial_q(k)));
        if k < order {
            g = apply_generator(&g, &alpha, &beta)?;
        }
    }
    Ok(out)
}

fn by_classical<F: Field>(p: &SdeProblem, order: usize) -> Result<Vec<F>, SeriesError> {
    if p.beta.fertility_bound() != FertilityBound::Forbidden {
        return Err(SeriesError::NotDeterministic);
    }
    let [alpha, beta, f] = p.tree_jets::<F>(order)?;
    let levels = trees_up_to(order, &p.rule());
    levels
        .iter()
        .enumerate()
        .map(|(k, level)| {
            let terms = level
                .iter()
                .map(|t| {
                    let n = t.exotic_order();
                    let w = factorial_q(n)
                        / (BigRational::from_integer(BigInt::from(classical_symmetry(t) * classical_tree_factorial(t)))
                            * factorial_q(k));
                    Ok(q::<F>(&w) * elementary_differential(t, &alpha, &beta, &f)?)
                })
                .collect::<Result<Vec<F>, JetError>>()?;
            Ok(ordered_sum(terms))
        })
        .collect()
}

fn dispatch(
    p: &SdeProblem,
    order: usize,
    exact: fn(&SdeProblem, usize) -> Result<Vec<BigRational>, SeriesError>,
    float: fn(&SdeProblem, usize) -> Result<Vec<f64>, SeriesError>,
) -> Result<TruncatedSeries, SeriesError> {
    Ok(match p.mode {
        Mode::Exact => TruncatedSeries::from_field(exact(p, order)?),
        Mode::Float => TruncatedSeries::from_field(float(p, order)?),
    })
}

/// `coeff(t^k) = Σ_{edges(τ) = k} |τ|/(σ τ!) Υ(τ)`.
pub fn expand_by_trees(p: &SdeProblem, order: usize) -> Result<TruncatedSeries, SeriesError> {
    dispatch(p, order, by_trees::<BigRational>, by_trees::<f64>)
}

/// `coeff(t^k) = Σ_γ Υ(γ)/σ_F(γ) · [t^k] Π(γ)` over populated multi-indices.
pub fn expand_by_multiindices(p: &SdeProblem, order: usize) -> Result<TruncatedSeries, SeriesError> {
    dispatch(p, order, by_multiindices::<BigRational>, by_multiindices::<f64>)
}

/// `coeff(t^k) = (L^k f)(u0)/k!`.
pub fn expand_by_operator(p: &SdeProblem, order: usize) -> Result<TruncatedSeries, SeriesError> {
    dispatch(p, order, by_operator::<BigRational>, by_operator::<f64>)
}

/// Classical B-series with character `|τ|!/τ!` over β-free trees; requires `β ≡ 0`.
pub fn expand_by_classical_trees(p: &SdeProblem, order: usize) -> Result<TruncatedSeries, SeriesError> {
    dispatch(p, order, by_classical::<BigRational>, by_classical::<f64>)
}

pub fn expand(p: &SdeProblem, order: usize, method: Method) -> Result<TruncatedSeries, SeriesError> {
    match method {
        Method::Trees => expand_by_trees(p, order),
        Method::Multi => expand_by_multiindices(p, order),
        Method::Operator => expand_by_operator(p, order),
    }
}

/// Horner evaluation; mixed modes are evaluated in floating point.
pub fn evaluate_series(s: &TruncatedSeries, t: &Scalar) -> Scalar {
    match (s.mode, t) {
        (Mode::Exact, Scalar::Exact(t)) => Scalar::Exact(s.coeffs.iter().rev().fold(BigRational::default(), |acc, c| {
            acc * t + c.as_exact().expect("exact series holds exact coefficients")
        })),
        _ => {
            let t = t.to_f64();
            Scalar::Float(s.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c.to_f64()))
        }
    }
}

/// Parses a time value such as `0.1` or `1/10` into `mode`.
pub fn parse_time(text: &str, mode: Mode) -> Result<Scalar, String> {
    let r = parse_rational(text)?;
    Ok(match mode {
        Mode::Exact => Scalar::Exact(r),
        Mode::Float => Scalar::Float(f64::from_rational(&r)),
    })
}

#[cfg(test)]
mod tests;
