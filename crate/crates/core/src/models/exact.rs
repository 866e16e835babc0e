//! Bernoulli closed forms under the uniform prior, generic over any ordered
//! [`Field`]. Instantiated with rationals they reproduce small tables
//! without rounding; with `f64` they serve as an independent float path.
//!
//! Factorial ratios are evaluated as rising products so the float
//! instantiation does not overflow for large counts.

use std::fmt;

use serde::Serialize;

use super::CountSummary;
use crate::scalar::Field;

/// `Π_{i=0}^{k-1} (start + i)`.
fn rising<F: Field>(start: u64, k: u64) -> F {
    (0..k).fold(F::one(), |acc, i| acc * F::from_count(start + i))
}

pub fn binomial<F: Field>(m: u64, t: u64) -> F {
    let t = t.min(m - t);
    (0..t).fold(F::one(), |acc, i| acc * F::from_count(m - i) / F::from_count(i + 1))
}

/// `p(D) = n₁! n₀! / (n+1)!`.
pub fn evidence<F: Field>(d: CountSummary) -> F {
    // n₁! n₀! / (n+1)! = n₁! / ((n₀+1) (n₀+2) ... (n+1))
    rising::<F>(1, d.ones) / rising::<F>(d.zeros + 1, d.ones + 1)
}

/// `p(x|D)` of one future sequence with counts `future`.
pub fn predictive<F: Field>(d: CountSummary, future: CountSummary) -> F {
    let n = d.total();
    rising::<F>(d.ones + 1, future.ones) * rising::<F>(d.zeros + 1, future.zeros)
        / rising::<F>(n + 2, future.total())
}

/// Point and interval hypotheses; intervals carry the uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactHypothesis<F> {
    Point(F),
    Interval(F, F),
}

impl<F: Field + fmt::Display> fmt::Display for ExactHypothesis<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point(t) => write!(f, "point:{t}"),
            Self::Interval(a, b) => write!(f, "interval:{a},{b}"),
        }
    }
}

/// `p(x|Θ)` of one future sequence with counts `future`.
pub fn sequence_probability<F: Field>(h: &ExactHypothesis<F>, future: CountSummary) -> F {
    let (m1, m0) = (future.ones, future.zeros);
    match h {
        ExactHypothesis::Point(t) => {
            t.powu(m1 as u32) * (F::one() - t.clone()).powu(m0 as u32)
        }
        ExactHypothesis::Interval(a, b) => {
            // ∫_a^b θ^{m₁} (1-θ)^{m₀} dθ by expanding (1-θ)^{m₀}.
            let mut acc = F::zero();
            for j in 0..=m0 {
                let e = (m1 + j + 1) as u32;
                let term = binomial::<F>(m0, j) * (b.powu(e) - a.powu(e)) / F::from_count(e as u64);
                if j % 2 == 0 {
                    acc = acc + term;
                } else {
                    acc = acc - term;
                }
            }
            acc / (b.clone() - a.clone())
        }
    }
}

/// Distances whose pointwise kernel is rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactDistance {
    Absolute,
    Squared,
    ChiSquare,
}

impl ExactDistance {
    pub fn kernel<F: Field>(&self, p: F, q: F) -> F {
        match self {
            Self::Absolute => (p - q).abs(),
            Self::Squared => {
                let d = p - q;
                d.clone() * d
            }
            Self::ChiSquare => {
                let d = p - q.clone();
                d.clone() * d / q
            }
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "abs" | "absolute" => Some(Self::Absolute),
            "sq" | "squared" => Some(Self::Squared),
            "chi2" | "chi_square" => Some(Self::ChiSquare),
            _ => None,
        }
    }
}

/// `Σ_t C(m,t) d(p(x_t|Θ), p(x_t|D))` with `x_t` any sequence with `t` ones.
pub fn hat_loss<F: Field>(h: &ExactHypothesis<F>, d: CountSummary, m: u64, dist: ExactDistance) -> F {
    (0..=m).fold(F::zero(), |acc, t| {
        let fut = CountSummary::new(t, m - t);
        acc + binomial::<F>(m, t) * dist.kernel(sequence_probability(h, fut), predictive::<F>(d, fut))
    })
}

/// Probabilities of `00`, of the two mixed sequences together, and of `11`.
pub fn two_step_cells<F: Field>(p: impl Fn(CountSummary) -> F) -> [F; 3] {
    let mixed = p(CountSummary::new(1, 1));
    [
        p(CountSummary::new(0, 2)),
        mixed.clone() + mixed,
        p(CountSummary::new(2, 0)),
    ]
}

/// Verdict of the fair-versus-vague comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Fair,
    DontKnow,
    Tie,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fair => "fair",
            Self::DontKnow => "don't know",
            Self::Tie => "tie",
        })
    }
}

/// One row of the two-step table: predictive cells for data `D` and the
/// absolute-distance losses of the fair point and the vague interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrRow<F> {
    pub label: String,
    pub data: CountSummary,
    pub cells: [F; 3],
    pub err_fair: F,
    pub err_vague: F,
    pub verdict: Verdict,
}

pub fn fair<F: Field>() -> ExactHypothesis<F> {
    ExactHypothesis::Point(F::from_ratio(1, 2))
}

pub fn vague<F: Field>() -> ExactHypothesis<F> {
    ExactHypothesis::Interval(F::zero(), F::one())
}

pub fn err_row<F: Field>(label: &str, data: CountSummary) -> ErrRow<F> {
    let err_fair = hat_loss(&fair::<F>(), data, 2, ExactDistance::Absolute);
    let err_vague = hat_loss(&vague::<F>(), data, 2, ExactDistance::Absolute);
    let verdict = if err_fair < err_vague {
        Verdict::Fair
    } else if err_vague < err_fair {
        Verdict::DontKnow
    } else {
        Verdict::Tie
    };
    ErrRow {
        label: label.to_string(),
        data,
        cells: two_step_cells(|x| predictive::<F>(data, x)),
        err_fair,
        err_vague,
        verdict,
    }
}

/// The data rows `∅`, `01`, `0101` and a long alternating sequence
/// (`n₁ = n₀ = 500`).
pub fn err_table<F: Field>() -> Vec<ErrRow<F>> {
    vec![
        err_row("{}", CountSummary::new(0, 0)),
        err_row("01", CountSummary::new(1, 1)),
        err_row("0101", CountSummary::new(2, 2)),
        err_row("(01)^500", CountSummary::new(500, 500)),
    ]
}

/// Two-step cells of the fair point and the vague interval.
pub fn hypothesis_cells<F: Field>() -> [[F; 3]; 2] {
    [
        two_step_cells(|x| sequence_probability(&fair::<F>(), x)),
        two_step_cells(|x| sequence_probability(&vague::<F>(), x)),
    ]
}
