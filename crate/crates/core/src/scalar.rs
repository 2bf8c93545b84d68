//! Floating-point abstraction the numeric core is generic over.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{de::DeserializeOwned, Serialize};

/// ln(2π), the constant of Gaussian log-densities.
pub const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Scalar type of the numeric core (`f32` or `f64`).
///
/// Everything the samplers and linear algebra need is routed through this
/// trait so the whole pipeline can be instantiated at either precision.
/// Random draws are trait methods rather than bounds on `rand` traits, which
/// keeps call sites free of distribution bounds.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, used for configuration values and constants.
    fn from_f(x: f64) -> Self;

    /// Conversion to `f64`, used for diagnostics and serialization.
    fn to_f(self) -> f64;

    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw on `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn ln_2pi() -> Self {
        Self::from_f(LN_2PI)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f(self) -> f64 {
        self
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_f(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}
