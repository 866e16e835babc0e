use crate::numerics::{self, ln_beta};

use super::{
    hypothesis_distribution, CountSummary, Hypothesis, ObservationSpace, ParametricModel, Prior,
    Result, Sample, StatisticSpace, SufficientKernel,
};

/// `x ln θ` with `0 · ln 0 = 0`.
pub(crate) fn x_ln(x: f64, theta: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * theta.ln()
    }
}

/// `ln(θ^{m₁} (1-θ)^{m₀})`.
pub(crate) fn ln_sequence_probability(theta: f64, ones: f64, zeros: f64) -> f64 {
    let a = x_ln(ones, theta);
    let b = if zeros == 0.0 { 0.0 } else { zeros * (-theta).ln_1p() };
    a + b
}

/// The Bernoulli model `p(1|θ) = θ` on `Ω = [0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bernoulli;

impl ParametricModel for Bernoulli {
    fn name(&self) -> &str {
        "bernoulli"
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(vec![0.0, 1.0])
    }

    fn log_likelihood(&self, x: f64, theta: f64) -> f64 {
        if x == 1.0 {
            theta.ln()
        } else if x == 0.0 {
            (-theta).ln_1p()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample_log_likelihood(&self, data: &Sample, theta: f64) -> f64 {
        match data.as_counts() {
            Some(c) => ln_sequence_probability(theta, c.ones as f64, c.zeros as f64),
            None => f64::NEG_INFINITY,
        }
    }

    fn fisher_information_analytic(&self, theta: f64) -> Option<f64> {
        Some(1.0 / (theta * (1.0 - theta)))
    }

    fn sufficient_kernel(&self) -> Option<&dyn SufficientKernel> {
        Some(self)
    }

    fn is_bernoulli(&self) -> bool {
        true
    }
}

/// `T(x) = m₁`, `g(t|θ) = θ^t (1-θ)^{m-t}`, `h ≡ 1`, `h_β(t) = C(m, t)`.
impl SufficientKernel for Bernoulli {
    fn statistic_space(&self, m: u64) -> StatisticSpace {
        StatisticSpace::Finite((0..=m).map(|t| t as f64).collect())
    }

    fn statistic(&self, future: &[f64]) -> f64 {
        future.iter().filter(|&&x| x == 1.0).count() as f64
    }

    fn ln_g(&self, t: f64, m: u64, theta: f64) -> f64 {
        ln_sequence_probability(theta, t, m as f64 - t)
    }

    fn ln_h_beta(&self, t: f64, m: u64, _beta: f64) -> Option<f64> {
        numerics::log_binomial(m, t as u64).ok()
    }
}

/// `ln p(D)` under the uniform prior: `ln(n₁! n₀! / (n+1)!)`.
pub fn ln_bernoulli_evidence(d: CountSummary) -> f64 {
    ln_beta(d.ones as f64 + 1.0, d.zeros as f64 + 1.0)
}

/// `p(D) = n₁! n₀! / (n+1)!` under the uniform prior.
pub fn bernoulli_evidence(d: CountSummary) -> f64 {
    ln_bernoulli_evidence(d).exp()
}

/// `ln p(x|D)` of one future sequence with counts `future`, uniform prior.
pub fn ln_bernoulli_predictive(d: CountSummary, future: CountSummary) -> f64 {
    let (n1, n0) = (d.ones as f64, d.zeros as f64);
    let (m1, m0) = (future.ones as f64, future.zeros as f64);
    ln_beta(n1 + m1 + 1.0, n0 + m0 + 1.0) - ln_beta(n1 + 1.0, n0 + 1.0)
}

/// `p(x|D)` of one future sequence with counts `future`, uniform prior.
pub fn bernoulli_predictive(d: CountSummary, future: CountSummary) -> f64 {
    ln_bernoulli_predictive(d, future).exp()
}

/// `p(x|Θ)` of one future Bernoulli sequence with counts `future`.
pub fn composite_likelihood(h: &Hypothesis, future: CountSummary, prior: &Prior) -> Result<f64> {
    let dist = hypothesis_distribution(&Bernoulli, prior, h)?;
    Ok(dist
        .ln_expect_bernoulli(future.ones as f64, future.zeros as f64)?
        .exp())
}
