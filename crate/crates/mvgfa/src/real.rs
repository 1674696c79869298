//! Scalar abstraction for the model math.
//!
//! Everything numerical in this crate is generic over [`Real`], which packs
//! the float arithmetic the model needs together with the distribution draws
//! the samplers need. `f32` and `f64` are the two implementations; `f64` is
//! what the command-line front end uses.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Display
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals and tolerances.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;

    fn ln_gamma(self) -> Self;

    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn uniform<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Gamma draw in the shape/rate parameterization, clamped away from
    /// zero: tiny shapes (the 1e-3 hyperparameters) otherwise underflow to
    /// exactly 0.0, which the model forbids for precisions.
    fn gamma_draw<G: Rng + ?Sized>(rng: &mut G, shape: Self, rate: Self) -> Self;

    /// Beta draw, clamped to the open interval (0, 1).
    fn beta_draw<G: Rng + ?Sized>(rng: &mut G, a: Self, b: Self) -> Self;

    fn normal_draw<G: Rng + ?Sized>(rng: &mut G, mean: Self, sd: Self) -> Self {
        mean + sd * Self::standard_normal(rng)
    }
}

macro_rules! impl_real {
    ($t:ty, $lgamma:path) => {
        impl Real for $t {
            #[inline]
            fn of(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn ln_gamma(self) -> Self {
                $lgamma(self)
            }

            #[inline]
            fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn uniform<G: Rng + ?Sized>(rng: &mut G) -> Self {
                rng.random()
            }

            fn gamma_draw<G: Rng + ?Sized>(rng: &mut G, shape: Self, rate: Self) -> Self {
                let g = Gamma::new(shape, 1.0 / rate)
                    .expect("gamma parameters must be positive and finite");
                g.sample(rng).max(<$t>::MIN_POSITIVE)
            }

            fn beta_draw<G: Rng + ?Sized>(rng: &mut G, a: Self, b: Self) -> Self {
                let d = Beta::new(a, b).expect("beta parameters must be positive and finite");
                let x: $t = d.sample(rng);
                x.clamp(<$t>::MIN_POSITIVE, 1.0 - <$t>::EPSILON)
            }
        }
    };
}

impl_real!(f32, libm::lgammaf);
impl_real!(f64, libm::lgamma);

/// `ln(2π)` at the requested precision.
pub fn ln_two_pi<R: Real>() -> R {
    R::of(std::f64::consts::TAU.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn gamma_draw_tiny_shape_stays_positive() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        for _ in 0..5000 {
            let x = f64::gamma_draw(&mut rng, 1e-3, 1e-3);
            assert!(x > 0.0, "gamma draw must be strictly positive, got {x}");
        }
    }

    #[test]
    fn beta_draw_stays_in_open_interval() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        for _ in 0..5000 {
            let x = f64::beta_draw(&mut rng, 0.5, 0.5);
            assert!(x > 0.0 && x < 1.0);
        }
    }

    #[test]
    fn ln_gamma_matches_known_values() {
        // Γ(5) = 24, Γ(0.5) = √π.
        assert!((Real::ln_gamma(5.0f64) - 24.0f64.ln()).abs() < 1e-12);
        assert!((Real::ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }
}
