//! Prior densities and the parameter transforms used by the samplers.
//!
//! The priors follow the usual calibration setup: inverse gamma on both
//! variances, independent uniforms on the calibration parameters over finite
//! expert bounds, a uniform slab on every ρ under the full model, and a
//! Beta(α, 1) spike concentrated at 1 standing in for "input removed".
//! Bounded supports and strictly positive inverse-gamma shapes/rates are
//! enforced at construction, which is what keeps every marginal likelihood
//! in the screening identities finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inverse gamma in the shape/rate convention:
/// density `∝ x^{−shape−1} exp(−rate/x)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InvGamma<T> {
    shape: T,
    rate: T,
    /// `shape·ln(rate) − ln Γ(shape)`, precomputed.
    ln_norm: T,
}

impl<T: Scalar> InvGamma<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        if !(shape > T::zero()) || !(rate > T::zero()) {
            return Err(Error::invalid(format!(
                "inverse gamma needs positive shape and rate, got ({shape}, {rate})"
            )));
        }
        let (sf, rf) = (shape.to_f(), rate.to_f());
        let ln_norm = T::from_f(sf * rf.ln() - statrs::function::gamma::ln_gamma(sf));
        Ok(InvGamma { shape, rate, ln_norm })
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    /// Normalized log-density; `−∞` outside `(0, ∞)`.
    pub fn log_density(&self, x: T) -> T {
        if !(x > T::zero()) || !x.is_finite() {
            return T::neg_infinity();
        }
        self.ln_norm - (self.shape + T::one()) * x.ln() - self.rate / x
    }

    /// Mode `rate / (shape + 1)`.
    pub fn mode(&self) -> T {
        self.rate / (self.shape + T::one())
    }

    /// Median, via the inverse CDF.
    pub fn median(&self) -> T {
        use statrs::distribution::ContinuousCDF;
        let d = statrs::distribution::InverseGamma::new(self.shape.to_f(), self.rate.to_f())
            .expect("parameters validated at construction");
        T::from_f(d.inverse_cdf(0.5))
    }
}

/// Priors on `η = (σ², σ₀², θ)`.
///
/// Construction enforces the conditions the screening limits rely on:
/// finite θ bounds (compact support) and proper inverse-gamma variance
/// priors, whose support excludes σ² = 0 and σ₀² = 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PriorSpec<T> {
    sigma2: InvGamma<T>,
    sigma02: InvGamma<T>,
    theta_bounds: Vec<(T, T)>,
}

impl<T: Scalar> PriorSpec<T> {
    pub fn new(
        sigma2_shape: T,
        sigma2_rate: T,
        sigma02_shape: T,
        sigma02_rate: T,
        theta_bounds: Vec<(T, T)>,
    ) -> Result<Self> {
        for &(lo, hi) in &theta_bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(
                    "theta bounds must be finite (compact prior support)",
                ));
            }
            if !(lo < hi) {
                return Err(Error::invalid(format!(
                    "theta bounds need lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        Ok(PriorSpec {
            sigma2: InvGamma::new(sigma2_shape, sigma2_rate)?,
            sigma02: InvGamma::new(sigma02_shape, sigma02_rate)?,
            theta_bounds,
        })
    }

    pub fn sigma2(&self) -> &InvGamma<T> {
        &self.sigma2
    }

    pub fn sigma02(&self) -> &InvGamma<T> {
        &self.sigma02
    }

    pub fn theta_bounds(&self) -> &[(T, T)] {
        &self.theta_bounds
    }

    pub fn k(&self) -> usize {
        self.theta_bounds.len()
    }

    /// Same variance priors, no calibration block.
    pub fn without_theta(&self) -> PriorSpec<T> {
        PriorSpec {
            sigma2: self.sigma2,
            sigma02: self.sigma02,
            theta_bounds: Vec::new(),
        }
    }
}

/// Log-density of the Beta(α, 1) spike at `rho`:
/// `ln α + (α − 1) ln ρ` on `(0, 1]`.
pub fn spike_log_density<T: Scalar>(rho: T, alpha: T) -> Result<T> {
    if !(rho > T::zero() && rho <= T::one()) {
        return Err(Error::invalid(format!(
            "spike density defined on (0, 1], got rho = {rho}"
        )));
    }
    if !(alpha >= T::one()) {
        return Err(Error::invalid(format!(
            "spike shape must satisfy alpha >= 1, got {alpha}"
        )));
    }
    Ok(alpha.ln() + (alpha - T::one()) * rho.ln())
}

/// Spike hyperparameter α, one shared value with optional per-input
/// overrides. Values around 100 put the spike mass within about 1% of 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpikeConfig<T> {
    alpha: T,
    per_input: Option<Vec<T>>,
}

impl<T: Scalar> SpikeConfig<T> {
    pub const DEFAULT_ALPHA: f64 = 100.0;

    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::one()) {
            return Err(Error::invalid(format!(
                "spike alpha must be >= 1, got {alpha}"
            )));
        }
        Ok(SpikeConfig { alpha, per_input: None })
    }

    pub fn per_input(alphas: Vec<T>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("per-input alpha list is empty"));
        }
        if alphas.iter().any(|&a| !(a >= T::one())) {
            return Err(Error::invalid("every spike alpha must be >= 1"));
        }
        let first = alphas[0];
        Ok(SpikeConfig { alpha: first, per_input: Some(alphas) })
    }

    /// α for input `l`.
    pub fn alpha_for(&self, l: usize) -> T {
        match &self.per_input {
            Some(v) => v[l],
            None => self.alpha,
        }
    }

    /// The α vector for `p` inputs.
    pub fn alphas(&self, p: usize) -> Result<Vec<T>> {
        match &self.per_input {
            Some(v) if v.len() != p => Err(Error::dim(format!(
                "{} spike alphas for p = {p} inputs",
                v.len()
            ))),
            Some(v) => Ok(v.clone()),
            None => Ok(vec![self.alpha; p]),
        }
    }
}

impl<T: Scalar> Default for SpikeConfig<T> {
    fn default() -> Self {
        SpikeConfig {
            alpha: T::from_f(Self::DEFAULT_ALPHA),
            per_input: None,
        }
    }
}

/// Prior over the model space `{0, 1}^p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ModelSpacePrior<T> {
    /// Equal probability for every subset (τ_ℓ = 1/2 for all ℓ).
    Constant,
    /// Independent Bernoulli inclusion probabilities τ_ℓ ∈ (0, 1).
    Bernoulli(Vec<T>),
}

impl<T: Scalar> ModelSpacePrior<T> {
    pub fn bernoulli(taus: Vec<T>) -> Result<Self> {
        if taus.iter().any(|&t| !(t > T::zero() && t < T::one())) {
            return Err(Error::invalid(
                "inclusion probabilities must lie strictly inside (0, 1)",
            ));
        }
        Ok(ModelSpacePrior::Bernoulli(taus))
    }

    /// Log prior mass of the subset encoded by `gamma_bits`, up to a
    /// γ-independent constant.
    pub fn log_mass(&self, gamma_bits: u32, p: usize) -> Result<T> {
        match self {
            ModelSpacePrior::Constant => Ok(T::zero()),
            ModelSpacePrior::Bernoulli(taus) => {
                if taus.len() != p {
                    return Err(Error::dim(format!(
                        "{} inclusion probabilities for p = {p}",
                        taus.len()
                    )));
                }
                let mut s = T::zero();
                for (l, &tau) in taus.iter().enumerate() {
                    s = s + if gamma_bits >> l & 1 == 1 {
                        tau.ln()
                    } else {
                        (T::one() - tau).ln()
                    };
                }
                Ok(s)
            }
        }
    }
}

/// Joint log-prior of `(θ, σ², σ₀²)`: independent uniforms over the θ
/// bounds times the two inverse gammas. Returns `−∞` outside the support
/// rather than erroring, so Metropolis rejection handles excursions
/// uniformly.
pub fn log_prior_eta<T: Scalar>(theta: &[T], sigma2: T, sigma02: T, spec: &PriorSpec<T>) -> T {
    if theta.len() != spec.k() {
        return T::neg_infinity();
    }
    let mut lp = spec.sigma2.log_density(sigma2) + spec.sigma02.log_density(sigma02);
    for (&t, &(lo, hi)) in theta.iter().zip(spec.theta_bounds()) {
        if !(t >= lo && t <= hi) {
            return T::neg_infinity();
        }
        lp = lp - (hi - lo).ln();
    }
    lp
}

// --- parameter transforms ---------------------------------------------------

/// Constrained-space parameter block of the full model.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector<T> {
    pub rho: Vec<T>,
    pub sigma2: T,
    pub sigma02: T,
    pub theta: Vec<T>,
}

impl<T: Scalar> ParamVector<T> {
    pub fn dim(&self) -> usize {
        self.rho.len() + 2 + self.theta.len()
    }
}

#[inline]
fn logit<T: Scalar>(x: T) -> T {
    (x / (T::one() - x)).ln()
}

#[inline]
fn sigmoid<T: Scalar>(u: T) -> T {
    if u >= T::zero() {
        T::one() / (T::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

/// `ln σ'(u)`, the log-derivative of the inverse logit, evaluated stably.
#[inline]
fn ln_sigmoid_deriv<T: Scalar>(u: T) -> T {
    let a = u.abs();
    -a - T::from_f(2.0) * (-a).exp().ln_1p()
}

/// Map constrained parameters to the unconstrained sampling space.
///
/// Layout: `[logit ρ_1.., ln σ², ln σ₀², scaled-logit θ_1..]`. The returned
/// log-Jacobian is that of the *inverse* map ([`from_unconstrained`]), i.e.
/// the term added to the log-posterior so the samplers target the correct
/// transformed density.
pub fn to_unconstrained<T: Scalar>(
    params: &ParamVector<T>,
    bounds: &[(T, T)],
) -> Result<(Vec<T>, T)> {
    if params.theta.len() != bounds.len() {
        return Err(Error::dim(format!(
            "{} theta values for {} bounds",
            params.theta.len(),
            bounds.len()
        )));
    }
    let mut z = Vec::with_capacity(params.dim());
    for &r in &params.rho {
        if !(r > T::zero() && r < T::one()) {
            return Err(Error::invalid(format!(
                "rho must lie in the open interval (0, 1) for the logit transform, got {r}"
            )));
        }
        z.push(logit(r));
    }
    if !(params.sigma2 > T::zero()) || !(params.sigma02 > T::zero()) {
        return Err(Error::invalid("variances must be positive"));
    }
    z.push(params.sigma2.ln());
    z.push(params.sigma02.ln());
    for (&t, &(lo, hi)) in params.theta.iter().zip(bounds) {
        if !(t > lo && t < hi) {
            return Err(Error::invalid(format!(
                "theta value {t} outside the open bounds ({lo}, {hi})"
            )));
        }
        z.push(logit((t - lo) / (hi - lo)));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite transform output"));
    }
    let (_, log_jac) = from_unconstrained(&z, params.rho.len(), bounds);
    Ok((z, log_jac))
}

/// Inverse of [`to_unconstrained`]; returns the parameters and the
/// log-Jacobian `ln |d params / d z|`.
pub fn from_unconstrained<T: Scalar>(
    z: &[T],
    p: usize,
    bounds: &[(T, T)],
) -> (ParamVector<T>, T) {
    let k = bounds.len();
    assert_eq!(z.len(), p + 2 + k, "state layout mismatch");
    let mut log_jac = T::zero();
    let mut rho = Vec::with_capacity(p);
    for &u in &z[..p] {
        rho.push(sigmoid(u));
        log_jac = log_jac + ln_sigmoid_deriv(u);
    }
    let sigma2 = z[p].exp();
    let sigma02 = z[p + 1].exp();
    log_jac = log_jac + z[p] + z[p + 1];
    let mut theta = Vec::with_capacity(k);
    for (&u, &(lo, hi)) in z[p + 2..].iter().zip(bounds) {
        theta.push(lo + (hi - lo) * sigmoid(u));
        log_jac = log_jac + (hi - lo).ln() + ln_sigmoid_deriv(u);
    }
    (ParamVector { rho, sigma2, sigma02, theta }, log_jac)
}
