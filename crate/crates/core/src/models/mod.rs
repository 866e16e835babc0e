//! Parametric models, priors, hypotheses and the distributions over the
//! parameter that they induce.
//!
//! A [`ThetaDistribution`] is the common currency: the posterior `p(θ|D)`,
//! the restricted prior `p(θ|Θ)` of a composite hypothesis, and the atoms of a
//! simple or mixture hypothesis all have that type, and every predictive
//! probability is an expectation of the likelihood under one of them.

mod bernoulli;
pub mod exact;
mod hypothesis;
mod theta;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, NumericsError, QuadratureSettings};

pub use bernoulli::{
    bernoulli_evidence, bernoulli_predictive, composite_likelihood, ln_bernoulli_evidence,
    ln_bernoulli_predictive, Bernoulli,
};
pub use hypothesis::{Hypothesis, HypothesisParseError};
pub use theta::{Moments, ThetaDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("zero prior mass on hypothesis {0}")]
    ZeroPriorMass(String),
    #[error("parameter {value} outside the model domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("parameter {0} must be interior to the domain")]
    Boundary(f64),
    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("zero evidence: the data have probability zero under the prior")]
    ZeroEvidence,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

/// Counts of ones and zeros in a binary sample; the sufficient statistic of
/// the Bernoulli model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CountSummary {
    pub ones: u64,
    pub zeros: u64,
}

impl CountSummary {
    pub const fn new(ones: u64, zeros: u64) -> Self {
        Self { ones, zeros }
    }

    pub const fn total(&self) -> u64 {
        self.ones + self.zeros
    }

    /// Relabels the alphabet `0 <-> 1`.
    pub const fn swapped(&self) -> Self {
        Self {
            ones: self.zeros,
            zeros: self.ones,
        }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bits(bits: &str) -> std::result::Result<Self, (usize, char)> {
        let mut c = Self::default();
        for (i, ch) in bits.chars().enumerate() {
            match ch {
                '0' => c.zeros += 1,
                '1' => c.ones += 1,
                other => return Err((i, other)),
            }
        }
        Ok(c)
    }

    /// `n₁ / n`, undefined for empty data.
    pub fn ml_estimate(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.ones as f64 / self.total() as f64)
    }
}

impl fmt::Display for CountSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n1={},n0={}", self.ones, self.zeros)
    }
}

/// An i.i.d. sample stored as a histogram of distinct observation values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    entries: Vec<(f64, u64)>,
}

impl Sample {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_observations(xs: &[f64]) -> Self {
        let mut s = Self::empty();
        for &x in xs {
            s.push(x, 1);
        }
        s
    }

    fn push(&mut self, x: f64, count: u64) {
        if count == 0 {
            return;
        }
        match self.entries.binary_search_by(|(v, _)| v.total_cmp(&x)) {
            Ok(i) => self.entries[i].1 += count,
            Err(i) => self.entries.insert(i, (x, count)),
        }
    }

    /// The sample extended by further observations.
    pub fn with_appended(&self, xs: &[f64]) -> Self {
        let mut s = self.clone();
        for &x in xs {
            s.push(x, 1);
        }
        s
    }

    pub fn with_appended_counts(&self, value: f64, count: u64) -> Self {
        let mut s = self.clone();
        s.push(value, count);
        s
    }

    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn len(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The binary counts, if every observation is `0` or `1`.
    pub fn as_counts(&self) -> Option<CountSummary> {
        let mut c = CountSummary::default();
        for &(v, k) in &self.entries {
            if v == 1.0 {
                c.ones += k;
            } else if v == 0.0 {
                c.zeros += k;
            } else {
                return None;
            }
        }
        Some(c)
    }
}

impl From<CountSummary> for Sample {
    fn from(c: CountSummary) -> Self {
        let mut s = Self::empty();
        s.push(0.0, c.zeros);
        s.push(1.0, c.ones);
        s
    }
}

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

/// Piecewise-linear prior density through `(θ, density)` nodes, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePrior {
    nodes: Vec<(f64, f64)>,
}

impl TablePrior {
    /// Validates that abscissae increase strictly, densities are finite and
    /// non-negative, and the interpolant integrates to 1 within `1e-8`.
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(ModelError::InvalidPrior("table needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ModelError::InvalidPrior("table abscissae must increase".into()));
        }
        if nodes.iter().any(|&(t, p)| !t.is_finite() || !p.is_finite() || p < 0.0) {
            return Err(ModelError::InvalidPrior("table densities must be finite and >= 0".into()));
        }
        let mass: f64 = nodes
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(ModelError::InvalidPrior(format!("table integrates to {mass}, not 1")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn density(&self, theta: f64) -> f64 {
        let n = &self.nodes;
        if theta < n[0].0 || theta > n[n.len() - 1].0 {
            return 0.0;
        }
        let i = n.partition_point(|&(t, _)| t <= theta).clamp(1, n.len() - 1);
        let (t0, p0) = n[i - 1];
        let (t1, p1) = n[i];
        p0 + (p1 - p0) * (theta - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prior {
    Uniform,
    Beta { a: f64, b: f64 },
    /// `√I₁(θ) / J`.
    Jeffreys,
    Table(TablePrior),
}

impl Prior {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self::Beta { a, b })
        } else {
            Err(ModelError::InvalidPrior(format!("beta parameters must be positive, got ({a}, {b})")))
        }
    }

    /// Conjugate Beta parameters when this prior is a Beta law on `[0, 1]`.
    pub fn beta_parameters(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Uniform => Some((1.0, 1.0)),
            Self::Beta { a, b } => Some((a, b)),
            Self::Jeffreys => Some((0.5, 0.5)),
            Self::Table(_) => None,
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Beta { a, b } => write!(f, "beta:{a},{b}"),
            Self::Jeffreys => f.write_str("jeffreys"),
            Self::Table(t) => write!(f, "table[{} nodes]", t.nodes.len()),
        }
    }
}

impl std::str::FromStr for Prior {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "uniform" => Ok(Self::Uniform),
            "jeffreys" => Ok(Self::Jeffreys),
            _ => {
                let rest = t
                    .strip_prefix("beta:")
                    .ok_or_else(|| ModelError::InvalidPrior(format!("unknown prior '{s}'")))?;
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| ModelError::InvalidPrior(format!("expected beta:a,b in '{s}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| ModelError::InvalidPrior(format!("bad number '{v}' in '{s}'")))
                };
                Self::beta(parse(a)?, parse(b)?)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSpace {
    Finite(Vec<f64>),
    Continuous { lo: f64, hi: f64 },
}

/// Range of a sufficient statistic over futures of a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub enum StatisticSpace {
    Finite(Vec<f64>),
    Continuous { lo: f64, hi: f64 },
}

/// Factorization `p(x|θ) = h(x) g(T(x)|θ)` of the likelihood of `m` future
/// observations.
pub trait SufficientKernel: Send + Sync {
    fn statistic_space(&self, m: u64) -> StatisticSpace;

    /// `T(x)` for a concrete future.
    fn statistic(&self, future: &[f64]) -> f64;

    /// `ln g(t|θ)`.
    fn ln_g(&self, t: f64, m: u64, theta: f64) -> f64;

    /// `ln h_β(t)`, the density of `∫ h(x)^β δ(T(x) - t) dx`; `None` when the
    /// kernel cannot supply it for this `β`.
    fn ln_h_beta(&self, t: f64, m: u64, beta: f64) -> Option<f64>;
}

/// Cloning into a shared trait object; implemented for every `Clone` model.
pub trait ModelClone {
    fn clone_arc(&self) -> Arc<dyn ParametricModel>;
}

impl<T: ParametricModel + Clone + 'static> ModelClone for T {
    fn clone_arc(&self) -> Arc<dyn ParametricModel> {
        Arc::new(self.clone())
    }
}

/// A one-dimensional i.i.d. model `p(x|θ)` with `θ ∈ Ω = [lo, hi]`.
pub trait ParametricModel: ModelClone + Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn domain(&self) -> (f64, f64);

    fn observation_space(&self) -> ObservationSpace;

    /// `ln p(x|θ)` of a single observation.
    fn log_likelihood(&self, x: f64, theta: f64) -> f64;

    fn sample_log_likelihood(&self, data: &Sample, theta: f64) -> f64 {
        data.entries()
            .iter()
            .map(|&(x, k)| k as f64 * self.log_likelihood(x, theta))
            .sum()
    }

    fn fisher_information_analytic(&self, _theta: f64) -> Option<f64> {
        None
    }

    fn sufficient_kernel(&self) -> Option<&dyn SufficientKernel> {
        None
    }

    /// Whether the conjugate Beta closed forms apply.
    fn is_bernoulli(&self) -> bool {
        false
    }
}

/// Which of the two equivalent expressions of the Fisher information to
/// evaluate numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherForm {
    /// `E[(∂ ln p)²]`
    ScoreSquared,
    /// `-E[∂² ln p]`
    NegativeHessian,
}

fn check_interior(model: &dyn ParametricModel, theta: f64) -> Result<()> {
    let (lo, hi) = model.domain();
    if !(theta > lo && theta < hi) {
        return Err(ModelError::Boundary(theta));
    }
    Ok(())
}

/// `I₁(θ)`: the model's analytic value when it has one, otherwise the
/// numerical expectation of the squared score.
pub fn fisher_information(model: &dyn ParametricModel, theta: f64) -> Result<f64> {
    check_interior(model, theta)?;
    match model.fisher_information_analytic(theta) {
        Some(v) => Ok(v),
        None => fisher_information_numeric(model, theta, FisherForm::ScoreSquared),
    }
}

/// Numerical `I₁(θ)` by finite differences of `ln p(x|θ)` in `θ`, summed over
/// a finite alphabet or integrated over a continuous observation range.
pub fn fisher_information_numeric(
    model: &dyn ParametricModel,
    theta: f64,
    form: FisherForm,
) -> Result<f64> {
    check_interior(model, theta)?;
    let (lo, hi) = model.domain();
    let h = match form {
        FisherForm::ScoreSquared => 1e-5 * (1.0 + theta.abs()),
        FisherForm::NegativeHessian => 1e-3 * (1.0 + theta.abs()),
    }
    .min(0.25 * (theta - lo))
    .min(0.25 * (hi - theta));
    let summand = |x: f64| -> f64 {
        let l0 = model.log_likelihood(x, theta);
        let p = l0.exp();
        if p == 0.0 {
            return 0.0;
        }
        let lp = model.log_likelihood(x, theta + h);
        let lm = model.log_likelihood(x, theta - h);
        match form {
            FisherForm::ScoreSquared => {
                let s = (lp - lm) / (2.0 * h);
                p * s * s
            }
            FisherForm::NegativeHessian => {
                let lpp = model.log_likelihood(x, theta + 2.0 * h);
                let lmm = model.log_likelihood(x, theta - 2.0 * h);
                -p * (16.0 * (lp + lm) - 30.0 * l0 - lpp - lmm) / (12.0 * h * h)
            }
        }
    };
    match model.observation_space() {
        ObservationSpace::Finite(xs) => Ok(xs.iter().map(|&x| summand(x)).sum()),
        ObservationSpace::Continuous { lo, hi } => {
            let s = QuadratureSettings::default();
            Ok(numerics::integrate(summand, lo, hi, &s)?)
        }
    }
}

/// `J = ∫_Ω √I₁(θ) dθ`.
pub fn jeffreys_normalizer(model: &dyn ParametricModel) -> Result<f64> {
    let (lo, hi) = model.domain();
    let s = QuadratureSettings::default().with_rel_tol(1e-12);
    let mut failure = None;
    let v = numerics::integrate_beta_type(
        |t: f64| {
            if !(t > lo && t < hi) {
                return 0.0;
            }
            match fisher_information(model, t) {
                Ok(i) => i.sqrt(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        &s,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v.value),
    }
}

/// The prior as a distribution over `θ` for this model.
pub fn prior_distribution(model: &dyn ParametricModel, prior: &Prior) -> Result<ThetaDistribution> {
    ThetaDistribution::prior(model, prior)
}

/// `p(θ|D)`.
pub fn posterior_distribution(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
) -> Result<ThetaDistribution> {
    ThetaDistribution::posterior(model, prior, data)
}

/// `p(θ|Θ)` for a hypothesis: the restricted and renormalized prior for
/// interval unions, weighted atoms for simple and mixture hypotheses.
pub fn hypothesis_distribution(
    model: &dyn ParametricModel,
    prior: &Prior,
    h: &Hypothesis,
) -> Result<ThetaDistribution> {
    let (lo, hi) = model.domain();
    let check = |v: f64| {
        if v >= lo && v <= hi {
            Ok(())
        } else {
            Err(ModelError::OutOfDomain { value: v, lo, hi })
        }
    };
    match h {
        Hypothesis::Simple(t) => {
            check(*t)?;
            Ok(ThetaDistribution::atoms(vec![(1.0, *t)]))
        }
        Hypothesis::Mixture(components) => {
            for &(_, t) in components {
                check(t)?;
            }
            Ok(ThetaDistribution::atoms(components.clone()))
        }
        Hypothesis::IntervalUnion(pieces) => {
            for &(a, b) in pieces {
                check(a)?;
                check(b)?;
            }
            let base = ThetaDistribution::prior(model, prior)?;
            base.restrict(pieces).map_err(|e| match e {
                ModelError::ZeroPriorMass(_) => ModelError::ZeroPriorMass(h.to_string()),
                other => other,
            })
        }
    }
}

/// `p(θ|D)` evaluated pointwise.
pub fn posterior_density(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
) -> Result<impl Fn(f64) -> f64> {
    let post = ThetaDistribution::posterior(model, prior, data)?;
    Ok(move |t: f64| post.density(t).unwrap_or(0.0))
}

/// Posterior mean and central moments up to order `k_max`.
pub fn posterior_moments(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    k_max: usize,
) -> Result<Moments> {
    if k_max < 1 {
        return Err(ModelError::Unsupported("k_max must be at least 1".into()));
    }
    ThetaDistribution::posterior(model, prior, data)?.moments(k_max)
}

/// Mean and central moments of `p(θ|Θ)`.
pub fn hypothesis_moments(
    model: &dyn ParametricModel,
    prior: &Prior,
    h: &Hypothesis,
    k_max: usize,
) -> Result<Moments> {
    if k_max < 1 {
        return Err(ModelError::Unsupported("k_max must be at least 1".into()));
    }
    hypothesis_distribution(model, prior, h)?.moments(k_max)
}

/// Posterior probability `P[Θ|D]` of an interval union.
pub fn posterior_mass(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    pieces: &[(f64, f64)],
) -> Result<f64> {
    Ok(ThetaDistribution::posterior(model, prior, data)?.ln_mass(pieces)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_from_bits() {
        assert_eq!(CountSummary::from_bits("0101"), Ok(CountSummary::new(2, 2)));
        assert_eq!(CountSummary::from_bits(""), Ok(CountSummary::new(0, 0)));
        assert_eq!(CountSummary::from_bits("01x"), Err((2, 'x')));
        assert_eq!(CountSummary::new(3, 1).swapped(), CountSummary::new(1, 3));
    }

    #[test]
    fn sample_histogram() {
        let s = Sample::from_observations(&[1.0, 0.0, 1.0, 2.0]);
        assert_eq!(s.len(), 4);
        assert_eq!(s.as_counts(), None);
        let c: Sample = CountSummary::new(3, 2).into();
        assert_eq!(c.as_counts(), Some(CountSummary::new(3, 2)));
        assert_eq!(c.with_appended(&[1.0]).as_counts(), Some(CountSummary::new(4, 2)));
    }

    #[test]
    fn table_prior_validation() {
        assert!(TablePrior::new(vec![(0.0, 1.0), (1.0, 1.0)]).is_ok());
        assert!(TablePrior::new(vec![(0.0, 1.0), (1.0, 1.5)]).is_err());
        assert!(TablePrior::new(vec![(0.0, 2.0), (0.0, 2.0)]).is_err());
        let t = TablePrior::new(vec![(0.0, 0.0), (0.5, 2.0), (1.0, 0.0)]).unwrap();
        assert_eq!(t.density(0.25), 1.0);
        assert_eq!(t.density(1.5), 0.0);
    }

    #[test]
    fn prior_literals() {
        assert_eq!("uniform".parse::<Prior>().unwrap(), Prior::Uniform);
        assert_eq!("jeffreys".parse::<Prior>().unwrap(), Prior::Jeffreys);
        assert_eq!("beta:2,5".parse::<Prior>().unwrap(), Prior::Beta { a: 2.0, b: 5.0 });
        assert!("beta:0,5".parse::<Prior>().is_err());
        assert!("cauchy".parse::<Prior>().is_err());
    }

    #[test]
    fn bernoulli_fisher_information() {
        let m = Bernoulli;
        assert!((fisher_information(&m, 0.5).unwrap() - 4.0).abs() < 1e-12);
        assert!((fisher_information(&m, 0.9).unwrap() - 1.0 / 0.09).abs() < 1e-9);
        for &t in &[0.05, 0.3, 0.5, 0.77] {
            let a = fisher_information(&m, t).unwrap();
            let s = fisher_information_numeric(&m, t, FisherForm::ScoreSquared).unwrap();
            let h = fisher_information_numeric(&m, t, FisherForm::NegativeHessian).unwrap();
            assert!((s - a).abs() < 1e-6 * a, "{t}: {s} vs {a}");
            assert!((h - a).abs() < 1e-6 * a, "{t}: {h} vs {a}");
            let mirrored = fisher_information(&m, 1.0 - t).unwrap();
            assert!((mirrored - a).abs() < 1e-9 * a);
        }
        assert!(matches!(fisher_information(&m, 0.0), Err(ModelError::Boundary(_))));
    }

    #[test]
    fn bernoulli_jeffreys_normalizer_is_pi() {
        let j = jeffreys_normalizer(&Bernoulli).unwrap();
        assert!((j - std::f64::consts::PI).abs() < 1e-9, "{j}");
        let pj_half = fisher_information(&Bernoulli, 0.5).unwrap().sqrt() / j;
        assert!((pj_half - 2.0 / std::f64::consts::PI).abs() < 1e-9);
    }
}
