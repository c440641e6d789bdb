//! Derivative jets of scalar functions at the expansion point, and the generator `L`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::growth::FertilityBound;
use crate::rational::{binomial, format_rational, parse_rational};
use crate::tree::{ExoticTree, VertexKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[serde(alias = "floating")]
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("mode mismatch: {0} value used in {1} context")]
    ModeMismatch(Mode, Mode),
    #[error("derivs list has {have} entries, order {need} needs {}", need + 1)]
    DerivsTooShort { have: usize, need: usize },
    #[error("expscale functions are not representable in exact mode")]
    ExpScaleExact,
    #[error("insufficient jet order: need {need}, have {have}")]
    InsufficientOrder { need: usize, have: usize },
    #[error("jets taken at different base points")]
    BaseMismatch,
}

/// Scalar field used by jets and series: exact rationals or binary64.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;
    fn from_rational(r: &BigRational) -> Self;
    fn from_u64(n: u64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
    /// `e^x`, unavailable for exact rationals.
    fn exp(&self) -> Option<Self>;
    fn into_scalar(self) -> Scalar;
    fn from_scalar(s: &Scalar) -> Result<Self, JetError>;
}

impl Field for BigRational {
    const MODE: Mode = Mode::Exact;
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn exp(&self) -> Option<Self> {
        self.is_zero().then(BigRational::one)
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Exact(self)
    }
    fn from_scalar(s: &Scalar) -> Result<Self, JetError> {
        match s {
            Scalar::Exact(r) => Ok(r.clone()),
            Scalar::Float(_) => Err(JetError::ModeMismatch(Mode::Float, Mode::Exact)),
        }
    }
}

impl Field for f64 {
    const MODE: Mode = Mode::Float;
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Float(self)
    }
    fn from_scalar(s: &Scalar) -> Result<Self, JetError> {
        match s {
            Scalar::Float(x) => Ok(*x),
            Scalar::Exact(_) => Err(JetError::ModeMismatch(Mode::Exact, Mode::Float)),
        }
    }
}

/// Mode-tagged scalar value.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    /// Parses a rational or decimal string into the given mode.
    pub fn parse(text: &str, mode: Mode) -> Result<Scalar, String> {
        let r = parse_rational(text)?;
        Ok(match mode {
            Mode::Exact => Scalar::Exact(r),
            Mode::Float => Scalar::Float(f64::from_rational(&r)),
        })
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => f64::from_rational(r),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    fn binary(&self, other: &Scalar, op: impl Fn(BigRational, BigRational) -> BigRational, fop: impl Fn(f64, f64) -> f64) -> Result<Scalar, JetError> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(op(a.clone(), b.clone()))),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(fop(*a, *b))),
            (a, b) => Err(JetError::ModeMismatch(b.mode(), a.mode())),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, JetError> {
        self.binary(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, JetError> {
        self.binary(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, JetError> {
        self.binary(other, |a, b| a * b, |a, b| a * b)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => f.write_str(&format_rational(r)),
            Scalar::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Exact number read from a JSON string (`"3/4"`, `"-0.5"`) or a JSON number.
#[derive(Clone, Debug, PartialEq)]
pub struct Number(pub BigRational);

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(serde::de::Error::custom(format!("expected a number, found {other}"))),
        };
        parse_rational(&text).map(Number).map_err(serde::de::Error::custom)
    }
}

/// A scalar function of `u`, given symbolically or by its derivatives at `u0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionSpec {
    /// `Σ coeffs[j] u^j`
    Poly { coeffs: Vec<Number> },
    /// `c e^{λ u}`
    ExpScale { c: Number, lambda: Number },
    /// derivative values at `u0`, starting with the value itself
    Derivs { values: Vec<Number> },
}

impl FunctionSpec {
    pub fn poly(coeffs: &[BigRational]) -> Self {
        FunctionSpec::Poly { coeffs: coeffs.iter().cloned().map(Number).collect() }
    }

    pub fn poly_i64(coeffs: &[i64]) -> Self {
        FunctionSpec::Poly { coeffs: coeffs.iter().map(|&c| Number(BigRational::from_integer(c.into()))).collect() }
    }

    /// Largest derivative order that can be nonzero.
    pub fn fertility_bound(&self) -> FertilityBound {
        let last_nonzero = |xs: &[Number]| xs.iter().rposition(|x| !x.0.is_zero());
        match self {
            FunctionSpec::Poly { coeffs } => last_nonzero(coeffs).map_or(FertilityBound::Forbidden, FertilityBound::AtMost),
            FunctionSpec::ExpScale { c, .. } if c.0.is_zero() => FertilityBound::Forbidden,
            FunctionSpec::ExpScale { lambda, .. } if lambda.0.is_zero() => FertilityBound::AtMost(0),
            FunctionSpec::ExpScale { .. } => FertilityBound::Unbounded,
            FunctionSpec::Derivs { values } => last_nonzero(values).map_or(FertilityBound::Forbidden, FertilityBound::AtMost),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fertility_bound() == FertilityBound::Forbidden
    }

    /// Pointwise value, unavailable for derivative lists.
    pub fn eval_f64(&self, u: f64) -> Option<f64> {
        match self {
            FunctionSpec::Poly { coeffs } => {
                Some(coeffs.iter().rev().fold(0.0, |acc, c| acc * u + f64::from_rational(&c.0)))
            }
            FunctionSpec::ExpScale { c, lambda } => {
                Some(f64::from_rational(&c.0) * (f64::from_rational(&lambda.0) * u).exp())
            }
            FunctionSpec::Derivs { .. } => None,
        }
    }

    pub fn is_exact_compatible(&self) -> bool {
        !matches!(self, FunctionSpec::ExpScale { lambda, .. } if !lambda.0.is_zero())
    }
}

/// Derivatives `d[k] = g^{(k)}(u0)` for `k ≤ order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<F> {
    pub base: F,
    pub d: Vec<F>,
}

impl<F: Field> Jet<F> {
    pub fn new(base: F, d: Vec<F>) -> Self {
        assert!(!d.is_empty(), "a jet holds at least the value");
        Jet { base, d }
    }

    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn value(&self) -> &F {
        &self.d[0]
    }

    /// `k`-th derivative at the base point.
    pub fn deriv(&self, k: usize) -> Result<&F, JetError> {
        self.d.get(k).ok_or(JetError::InsufficientOrder { need: k, have: self.order() })
    }

    pub fn truncate(&self, order: usize) -> Jet<F> {
        Jet { base: self.base.clone(), d: self.d[..=order.min(self.order())].to_vec() }
    }
}

fn binom<F: Field>(n: usize, k: usize) -> F {
    F::from_rational(&BigRational::from_integer(BigInt::from(binomial(n, k))))
}

fn falling<F: Field>(j: usize, k: usize) -> F {
    F::from_u64(((j - k + 1)..=j).map(|x| x as u64).product::<u64>().max(1))
}

pub fn jet_from_spec<F: Field>(s: &FunctionSpec, u0: &F, order: usize) -> Result<Jet<F>, JetError> {
    let d = match s {
        FunctionSpec::Poly { coeffs } => {
            let c: Vec<F> = coeffs.iter().map(|x| F::from_rational(&x.0)).collect();
            (0..=order)
                .map(|k| {
                    let mut acc = F::zero();
                    let mut pow = F::one();
                    for j in k..c.len() {
                        acc = acc + c[j].clone() * falling::<F>(j, k) * pow.clone();
                        pow = pow * u0.clone();
                    }
                    acc
                })
                .collect()
        }
        FunctionSpec::ExpScale { c, lambda } => {
            let (c, l) = (F::from_rational(&c.0), F::from_rational(&lambda.0));
            let e = (l.clone() * u0.clone()).exp().ok_or(JetError::ExpScaleExact)?;
            let mut out = Vec::with_capacity(order + 1);
            let mut lk = F::one();
            for _ in 0..=order {
                out.push(c.clone() * lk.clone() * e.clone());
                lk = lk * l.clone();
            }
            out
        }
        FunctionSpec::Derivs { values } => {
            if values.len() <= order {
                return Err(JetError::DerivsTooShort { have: values.len(), need: order });
            }
            values[..=order].iter().map(|x| F::from_rational(&x.0)).collect()
        }
    };
    Ok(Jet::new(u0.clone(), d))
}

/// Leibniz product; the result has the smaller of the two orders.
pub fn jet_product<F: Field>(g: &Jet<F>, h: &Jet<F>) -> Result<Jet<F>, JetError> {
    if g.base != h.base {
        return Err(JetError::BaseMismatch);
    }
    let order = g.order().min(h.order());
    let d = (0..=order)
        .map(|k| {
            (0..=k).fold(F::zero(), |acc, i| acc + binom::<F>(k, i) * g.d[i].clone() * h.d[k - i].clone())
        })
        .collect();
    Ok(Jet::new(g.base.clone(), d))
}

/// Jet of `L g = α g' + ½ β² g''`, two orders shorter than `g`.
pub fn apply_generator<F: Field>(g: &Jet<F>, alpha: &Jet<F>, beta: &Jet<F>) -> Result<Jet<F>, JetError> {
    if g.order() < 2 {
        return Err(JetError::InsufficientOrder { need: 2, have: g.order() });
    }
    if g.base != alpha.base || g.base != beta.base {
        return Err(JetError::BaseMismatch);
    }
    let beta2 = jet_product(beta, beta)?;
    let order = (g.order() - 2).min(alpha.order()).min(beta2.order());
    let half = F::one() / F::from_u64(2);
    let d = (0..=order)
        .map(|j| {
            let mut acc = F::zero();
            for i in 0..=j {
                let b = binom::<F>(j, i);
                acc = acc + b.clone() * alpha.d[i].clone() * g.d[j - i + 1].clone();
                acc = acc + half.clone() * b * beta2.d[i].clone() * g.d[j - i + 2].clone();
            }
            acc
        })
        .collect();
    Ok(Jet::new(g.base.clone(), d))
}

/// `f^{(n_root)} ∏_{v ≠ root} colour(v)^{(n_v)}` at the base point.
pub fn elementary_differential<F: Field>(t: &ExoticTree, alpha: &Jet<F>, beta: &Jet<F>, f: &Jet<F>) -> Result<F, JetError> {
    let mut acc = f.deriv(t.fertility(0))?.clone();
    for v in 1..t.len() {
        let jet = match t.kind(v) {
            VertexKind::Alpha => alpha,
            _ => beta,
        };
        acc = acc * jet.deriv(t.fertility(v))?.clone();
    }
    Ok(acc)
}

/// `(L^k f)(u0)` by repeated application of the generator.
pub fn iterated_generator<F: Field>(k: usize, alpha: &Jet<F>, beta: &Jet<F>, f: &Jet<F>) -> Result<F, JetError> {
    if f.order() < 2 * k {
        return Err(JetError::InsufficientOrder { need: 2 * k, have: f.order() });
    }
    let mut g = f.truncate(2 * k);
    for _ in 0..k {
        g = apply_generator(&g, alpha, beta)?;
    }
    Ok(g.d[0].clone())
}
