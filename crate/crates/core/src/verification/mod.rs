//! Monte Carlo estimates, closed-form moments and the identity suite.

mod suite;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jets::{Field, FunctionSpec, Mode};
use crate::series::SdeProblem;

pub use suite::{identity_suite, identity_suite_with, IdentityReport, Status, StandardWeights, SuiteConfig, TreeWeights};

/// Bias constant `C` in the Monte Carlo tolerance `3·SE + C·h`.
pub const MC_BIAS_CONSTANT: f64 = 5.0;

/// Smallest accepted number of Monte Carlo paths.
pub const MIN_PATHS: usize = 100;

/// Name of the Gaussian increment generator recorded with every estimate.
pub const GENERATOR: &str = "ChaCha8Rng(seed, stream = path index) + rand_distr::StandardNormal (ziggurat)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(String),
    #[error("Monte Carlo needs a float-mode problem")]
    ExactMode,
    #[error("{0} cannot be evaluated pointwise")]
    NotPointwise(&'static str),
    #[error("all {0} paths produced non-finite values")]
    AllDiscarded(usize),
    #[error("invalid closed-form parameters: {0}")]
    Params(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub t_end: f64,
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(t_end: f64, step: f64, paths: usize, seed: u64) -> Result<Self, McError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(McError::Config(format!("t_end must be positive, got {t_end}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(McError::Config(format!("step must be positive, got {step}")));
        }
        if step > t_end {
            return Err(McError::Config(format!("step {step} exceeds t_end {t_end}")));
        }
        if paths < MIN_PATHS {
            return Err(McError::Config(format!("at least {MIN_PATHS} paths are needed, got {paths}")));
        }
        Ok(McConfig { t_end, step, paths, seed })
    }

    /// Number of Euler steps; the step is shrunk so they land exactly on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.step).round() as usize).max(1)
    }

    pub fn effective_step(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// paths that stayed finite
    pub paths: usize,
    pub discarded: usize,
    pub generator: String,
}

/// `3·SE + C·h`.
pub fn mc_tolerance(est: &McEstimate, step: f64) -> f64 {
    3.0 * est.std_error + MC_BIAS_CONSTANT * step
}

enum PointFn {
    Poly(Vec<f64>),
    Exp(f64, f64),
}

impl PointFn {
    fn new(s: &FunctionSpec, name: &'static str) -> Result<Self, McError> {
        match s {
            FunctionSpec::Poly { coeffs } => Ok(PointFn::Poly(coeffs.iter().map(|c| f64::from_rational(&c.0)).collect())),
            FunctionSpec::ExpScale { c, lambda } => Ok(PointFn::Exp(f64::from_rational(&c.0), f64::from_rational(&lambda.0))),
            FunctionSpec::Derivs { .. } => Err(McError::NotPointwise(name)),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        match self {
            PointFn::Poly(c) => c.iter().rev().fold(0.0, |acc, x| acc * u + x),
            PointFn::Exp(c, l) => c * (l * u).exp(),
        }
    }
}

/// Mean of `f(u_T)` under the Euler–Maruyama scheme with one random stream per path.
pub fn euler_maruyama_estimate(p: &SdeProblem, c: &McConfig) -> Result<McEstimate, McError> {
    if p.mode != Mode::Float {
        return Err(McError::ExactMode);
    }
    let alpha = PointFn::new(&p.alpha, "alpha")?;
    let beta = PointFn::new(&p.beta, "beta")?;
    let f = PointFn::new(&p.f, "f")?;
    let u0 = p.u0.to_f64();
    let (n, h) = (c.steps(), c.effective_step());
    let sqrt_h = h.sqrt();
    let values: Vec<Option<f64>> = (0..c.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            rng.set_stream(i as u64);
            let mut u = u0;
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                u += alpha.eval(u) * h + beta.eval(u) * sqrt_h * z;
                if !u.is_finite() {
                    return None;
                }
            }
            Some(f.eval(u)).filter(|x| x.is_finite())
        })
        .collect();
    let kept: Vec<f64> = values.into_iter().flatten().collect();
    let m = kept.len();
    if m == 0 {
        return Err(McError::AllDiscarded(c.paths));
    }
    // shifted sums keep identical samples at exactly zero variance
    let shift = kept[0];
    let (s1, s2) = kept.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - shift;
        (a + d, b + d * d)
    });
    let mf = m as f64;
    let var = if m > 1 { ((s2 - s1 * s1 / mf) / (mf - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate {
        mean: shift + s1 / mf,
        std_error: (var / mf).sqrt(),
        paths: m,
        discarded: c.paths - m,
        generator: GENERATOR.to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    OuMean,
    OuSecondMoment,
    GbmMean,
    GbmSecondMoment,
}

impl FromStr for ClosedForm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ou_mean" => Ok(ClosedForm::OuMean),
            "ou_second_moment" => Ok(ClosedForm::OuSecondMoment),
            "gbm_mean" => Ok(ClosedForm::GbmMean),
            "gbm_second_moment" => Ok(ClosedForm::GbmSecondMoment),
            _ => Err(format!("unknown closed form `{s}`")),
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClosedForm::OuMean => "ou_mean",
            ClosedForm::OuSecondMoment => "ou_second_moment",
            ClosedForm::GbmMean => "gbm_mean",
            ClosedForm::GbmSecondMoment => "gbm_second_moment",
        })
    }
}

/// OU is `du = -a u dt + σ dW`, GBM is `du = a u dt + σ u dW`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormParams {
    pub a: f64,
    pub sigma: f64,
    pub u0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub form: ClosedForm,
    pub params: ClosedFormParams,
}

impl Reference {
    pub fn eval(&self, t: f64) -> f64 {
        let ClosedFormParams { a, sigma, u0 } = self.params;
        match self.form {
            ClosedForm::OuMean => u0 * (-a * t).exp(),
            ClosedForm::OuSecondMoment => {
                let decay = (-2.0 * a * t).exp();
                // (1 - e^{-2at})/(2a), tending to t as a -> 0
                let spread = if a == 0.0 { t } else { -(-2.0 * a * t).exp_m1() / (2.0 * a) };
                u0 * u0 * decay + sigma * sigma * spread
            }
            ClosedForm::GbmMean => u0 * (a * t).exp(),
            ClosedForm::GbmSecondMoment => u0 * u0 * ((2.0 * a + sigma * sigma) * t).exp(),
        }
    }
}

pub fn closed_form_reference(form: ClosedForm, params: ClosedFormParams) -> Result<Reference, McError> {
    let ClosedFormParams { a, sigma, u0 } = params;
    if !(a.is_finite() && sigma.is_finite() && u0.is_finite()) {
        return Err(McError::Params(format!("non-finite value in a={a}, sigma={sigma}, u0={u0}")));
    }
    Ok(Reference { form, params })
}

/// Caps the global worker pool at `EXOTIC_BSERIES_THREADS` when set.
pub fn init_thread_pool() {
    if let Some(n) = std::env::var("EXOTIC_BSERIES_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        // a pool built earlier keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
