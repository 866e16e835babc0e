//! Pointwise distances between density values.
//!
//! [`DistanceKind::eval_pointwise`] returns the summand of a distance between
//! two densities at one point: `f(p/q)·q` for the f-divergences and
//! `(p - q)²` for the squared distance. Summing (or integrating) over the
//! observation space is the loss engine's job.
//!
//! Zero conventions: `0·ln(0/q) = 0`, `p·ln(p/0) = +∞` for `p > 0`, the
//! reverse KL summand vanishes at `q = 0`, and the chi-square summand at
//! `q = 0` is `0` when `p = 0` and `+∞` otherwise. No combination of
//! non-negative inputs produces NaN.
//!
//! The KL and reverse-KL summands may be negative at individual points;
//! only their totals over a normalized pair are non-negative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum DistanceKind<R> {
    /// `|p - q|`
    Absolute,
    /// `(√p - √q)²`
    Hellinger,
    /// `(p - q)² / q`
    ChiSquare,
    /// `p ln(p/q)`
    Kl,
    /// `q ln(q/p)`
    ReverseKl,
    /// `(p - q)²`, the only member that is not an f-divergence.
    Squared,
    /// `q |(p/q)^α - 1|^{1/α} = |p^α - q^α|^{1/α}`, `α ∈ (0, 1]`.
    Alpha(R),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceParseError {
    #[error("unknown distance '{0}' (expected abs, hellinger, chi2, kl, rkl, sq or alpha:<value>)")]
    Unknown(String),
    #[error("alpha must lie in (0, 1], got '{0}'")]
    BadAlpha(String),
}

impl<R: Real> DistanceKind<R> {
    /// Builds an α-distance; `α` outside `(0, 1]` is rejected.
    pub fn alpha(alpha: R) -> Option<Self> {
        (alpha > R::zero() && alpha <= R::one()).then_some(Self::Alpha(alpha))
    }

    /// The exponent `β` with `d(σp, σq) = σ^β d(p, q)`.
    pub fn scaling_exponent(&self) -> R {
        match self {
            Self::Squared => R::lit(2.0),
            _ => R::one(),
        }
    }

    pub fn is_f_divergence(&self) -> bool {
        !matches!(self, Self::Squared)
    }

    pub fn eval_pointwise(&self, p: R, q: R) -> R {
        let zero = R::zero();
        match *self {
            Self::Absolute => (p - q).abs(),
            Self::Hellinger => {
                // √p - √q = (p - q) / (√p + √q) keeps nearly equal arguments
                // from cancelling.
                let s = p.sqrt() + q.sqrt();
                if s == zero {
                    return zero;
                }
                let d = (p - q) / s;
                d * d
            }
            Self::ChiSquare => {
                if q == zero {
                    if p == zero {
                        zero
                    } else {
                        R::infinity()
                    }
                } else {
                    let d = p - q;
                    d * d / q
                }
            }
            Self::Kl => x_ln_x_over_y(p, q),
            Self::ReverseKl => x_ln_x_over_y(q, p),
            Self::Squared => {
                let d = p - q;
                d * d
            }
            Self::Alpha(alpha) => {
                if alpha == R::one() {
                    Self::Absolute.eval_pointwise(p, q)
                } else if alpha == R::lit(0.5) {
                    Self::Hellinger.eval_pointwise(p, q)
                } else if q == zero {
                    p
                } else {
                    // q |(p/q)^α - 1|^{1/α}, with the ratio kept in log1p/expm1
                    // form so nearly equal arguments do not cancel.
                    let r = ((p - q) / q).ln_1p() * alpha;
                    q * r.exp_m1().abs().powf(alpha.recip())
                }
            }
        }
    }

    /// Short name used on the command line.
    pub fn name(&self) -> String {
        match self {
            Self::Absolute => "abs".into(),
            Self::Hellinger => "hellinger".into(),
            Self::ChiSquare => "chi2".into(),
            Self::Kl => "kl".into(),
            Self::ReverseKl => "rkl".into(),
            Self::Squared => "sq".into(),
            Self::Alpha(a) => format!("alpha:{a}"),
        }
    }

    /// One member of every kind; the α-distance uses `alpha`.
    pub fn catalog(alpha: R) -> [Self; 7] {
        [
            Self::Absolute,
            Self::Hellinger,
            Self::ChiSquare,
            Self::Kl,
            Self::ReverseKl,
            Self::Squared,
            Self::Alpha(alpha),
        ]
    }
}

/// `x ln(x/y)` with the conventions `0 ln(0/y) = 0` and `x ln(x/0) = +∞`.
fn x_ln_x_over_y<R: Real>(x: R, y: R) -> R {
    if x == R::zero() {
        R::zero()
    } else if y == R::zero() {
        R::infinity()
    } else {
        x * (x.ln() - y.ln())
    }
}

impl<R: Real> fmt::Display for DistanceKind<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl<R: Real + FromStr> FromStr for DistanceKind<R> {
    type Err = DistanceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Ok(match t.as_str() {
            "abs" | "absolute" => Self::Absolute,
            "hellinger" | "h" => Self::Hellinger,
            "chi2" | "chi_square" => Self::ChiSquare,
            "kl" => Self::Kl,
            "rkl" | "reverse_kl" => Self::ReverseKl,
            "sq" | "squared" => Self::Squared,
            other => {
                let v = other
                    .strip_prefix("alpha:")
                    .ok_or_else(|| DistanceParseError::Unknown(s.to_string()))?;
                let a: R = v.parse().map_err(|_| DistanceParseError::BadAlpha(v.to_string()))?;
                Self::alpha(a).ok_or_else(|| DistanceParseError::BadAlpha(v.to_string()))?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type D = DistanceKind<f64>;

    #[test]
    fn pointwise_examples() {
        assert_eq!(D::Hellinger.eval_pointwise(0.25, 0.25), 0.0);
        assert_eq!(D::Absolute.eval_pointwise(0.5, 0.25), 0.25);
        let kl = D::Kl.eval_pointwise(0.5, 0.25);
        assert!((kl - 0.5 * 2f64.ln()).abs() < 1e-15);
        let base = D::Squared.eval_pointwise(0.2, 0.7);
        let scaled = D::Squared.eval_pointwise(0.6, 2.1);
        assert!((scaled / base - 9.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_exponents() {
        assert_eq!(D::Hellinger.scaling_exponent(), 1.0);
        assert_eq!(D::Squared.scaling_exponent(), 2.0);
        assert_eq!(D::Alpha(0.5).scaling_exponent(), 1.0);
        for d in D::catalog(0.3) {
            assert_eq!(d.is_f_divergence(), d.scaling_exponent() == 1.0);
        }
    }

    #[test]
    fn zero_conventions() {
        assert_eq!(D::Kl.eval_pointwise(0.0, 0.3), 0.0);
        assert_eq!(D::Kl.eval_pointwise(0.3, 0.0), f64::INFINITY);
        assert_eq!(D::ReverseKl.eval_pointwise(0.3, 0.0), 0.0);
        assert_eq!(D::ReverseKl.eval_pointwise(0.0, 0.3), f64::INFINITY);
        assert_eq!(D::ChiSquare.eval_pointwise(0.0, 0.0), 0.0);
        assert_eq!(D::ChiSquare.eval_pointwise(0.1, 0.0), f64::INFINITY);
        for d in D::catalog(0.3) {
            for &(p, q) in &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)] {
                assert!(!d.eval_pointwise(p, q).is_nan(), "{d} at ({p},{q})");
            }
        }
    }

    #[test]
    fn parse_and_display() {
        for d in D::catalog(0.25) {
            let back: D = d.name().parse().unwrap();
            assert_eq!(back, d);
        }
        assert_eq!("alpha:0.5".parse::<D>().unwrap(), D::Alpha(0.5));
        assert!("alpha:0".parse::<D>().is_err());
        assert!("alpha:1.5".parse::<D>().is_err());
        assert!("euclid".parse::<D>().is_err());
    }

    #[test]
    fn alpha_special_cases_are_identical() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (p, q) = (i as f64 / 20.0, j as f64 / 7.0);
                assert_eq!(
                    D::Alpha(1.0).eval_pointwise(p, q).to_bits(),
                    D::Absolute.eval_pointwise(p, q).to_bits()
                );
                assert_eq!(
                    D::Alpha(0.5).eval_pointwise(p, q).to_bits(),
                    D::Hellinger.eval_pointwise(p, q).to_bits()
                );
            }
        }
    }

    proptest! {
        #[test]
        fn scaling_law(sigma in 1e-3f64..4.0, p in 1e-6f64..2.0, q in 1e-6f64..2.0, alpha in 0.05f64..1.0) {
            for d in D::catalog(alpha) {
                let beta = d.scaling_exponent();
                let lhs = d.eval_pointwise(sigma * p, sigma * q);
                let rhs = sigma.powf(beta) * d.eval_pointwise(p, q);
                // Rounding σp and σq perturbs p - q; the α-distance raises that
                // perturbation to the power 1/α.
                let amplify = match d { D::Alpha(a) => 1.0 / a, _ => 2.0 };
                let cond = (p + q) / (p - q).abs();
                let rel = 1e-12 + 4.0 * amplify * f64::EPSILON * cond;
                prop_assert!((lhs - rhs).abs() <= rel * rhs.abs().max(1e-300) + 1e-300,
                    "{} : {} vs {}", d, lhs, rhs);
            }
        }

        #[test]
        fn identity_of_indiscernibles(p in 1e-6f64..2.0, q in 1e-6f64..2.0, alpha in 0.05f64..1.0) {
            for d in D::catalog(alpha) {
                prop_assert_eq!(d.eval_pointwise(p, p), 0.0);
                let v = d.eval_pointwise(p, q);
                if !matches!(d, D::Kl | D::ReverseKl) {
                    prop_assert!(v >= 0.0);
                    if p != q { prop_assert!(v > 0.0); }
                }
            }
        }

        #[test]
        fn closed_forms(p in 0.0f64..2.0, q in 1e-9f64..2.0) {
            let h = (p.sqrt() - q.sqrt()).powi(2);
            let v = D::Hellinger.eval_pointwise(p, q);
            prop_assert!((v - h).abs() <= 4.0 * f64::EPSILON * (p + q), "{} vs {}", v, h);
            let c = (p - q) * (p - q) / q;
            prop_assert_eq!(D::ChiSquare.eval_pointwise(p, q), c);
        }
    }
}
