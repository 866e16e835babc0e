//! Sequential moment fitting: for large `n` the best predictive hypothesis
//! is found by matching the moments of `p(θ|Θ)` to those of the posterior,
//! one order at a time, keeping the best fitting members at each level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::log_log_slope;
use crate::distances::DistanceKind;
use crate::loss::{LossContext, LossError, LossSpec};
use crate::models::{
    hypothesis_moments, posterior_moments, CountSummary, Hypothesis, ModelError, ParametricModel, Prior, Sample,
};
use crate::selector::{HypothesisClass, SelectError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmfError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Class(#[from] SelectError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, SmfError>;

/// Residual scales for "perfect fit" and for ties between survivors, both
/// relative to `max(1, |μ_k^D|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmfTolerances {
    pub perfect_fit: f64,
    pub tie: f64,
}

impl Default for SmfTolerances {
    fn default() -> Self {
        Self {
            perfect_fit: 1e-9,
            tie: 1e-9,
        }
    }
}

/// Survivors of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Survivors {
    /// Members with their fitted moment at this level.
    Members(Vec<(Hypothesis, f64)>),
    /// Every interval centred at `center` that fits inside the domain; the
    /// continuous class after matching the mean.
    CenteredIntervals { center: f64, max_half_width: f64 },
}

impl Survivors {
    pub fn len(&self) -> Option<usize> {
        match self {
            Self::Members(m) => Some(m.len()),
            Self::CenteredIntervals { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn hypotheses(&self) -> Vec<Hypothesis> {
        match self {
            Self::Members(m) => m.iter().map(|(h, _)| h.clone()).collect(),
            Self::CenteredIntervals { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmfLevel {
    pub k: usize,
    /// `μ_1` is the mean, higher orders are central moments.
    pub target: f64,
    /// Smallest residual `|μ_k^Θ - μ_k^D|` over the previous survivors.
    pub residual: f64,
    pub survivors: Survivors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmfTrace {
    pub levels: Vec<SmfLevel>,
    /// First order without a perfect fit; `None` if every order up to
    /// `k_max` was fitted.
    pub k_star: Option<usize>,
    pub k_max: usize,
    /// `H_{k*}`, or the last level's survivors when `k_star` is `None`.
    pub selected: Vec<Hypothesis>,
}

impl SmfTrace {
    /// First member of the selected set.
    pub fn winner(&self) -> Option<&Hypothesis> {
        self.selected.first()
    }
}

/// `θ̄^D, μ_2^D, ..., μ_{k_max}^D`.
pub fn posterior_moment_targets(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    k_max: usize,
) -> Result<Vec<f64>> {
    Ok(posterior_moments(model, prior, data, k_max)?.fitting_sequence())
}

/// Central moment `μ_k` of the uniform law on an interval of half-width `h`.
fn uniform_central(h: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        h.powi(k as i32) / (k as f64 + 1.0)
    }
}

/// Runs moment fitting over `class` up to order `k_max` (at least 2),
/// stopping at the first order without a perfect fit.
pub fn smf_select(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    class: &HypothesisClass,
    k_max: usize,
    tol: SmfTolerances,
) -> Result<SmfTrace> {
    if k_max < 2 {
        return Err(SmfError::Unsupported("moment fitting needs k_max >= 2".into()));
    }
    let targets = posterior_moment_targets(model, prior, data, k_max)?;
    if *class == HypothesisClass::Intervals {
        return interval_smf(model, prior, &targets, k_max, tol);
    }
    let members = class.materialize(model.domain())?;
    let moments: Vec<Vec<f64>> = members
        .par_iter()
        .map(|h| Ok(hypothesis_moments(model, prior, h, k_max)?.fitting_sequence()))
        .collect::<Result<_>>()?;
    let mut alive: Vec<usize> = (0..members.len()).collect();
    let mut levels = Vec::new();
    let mut k_star = None;
    for k in 1..=k_max {
        let target = targets[k - 1];
        let scale = target.abs().max(1.0);
        let residual = |i: usize| (moments[i][k - 1] - target).abs();
        let best = alive.iter().map(|&i| residual(i)).fold(f64::INFINITY, f64::min);
        alive.retain(|&i| residual(i) <= best + tol.tie * scale);
        levels.push(SmfLevel {
            k,
            target,
            residual: best,
            survivors: Survivors::Members(alive.iter().map(|&i| (members[i].clone(), moments[i][k - 1])).collect()),
        });
        if best > tol.perfect_fit * scale {
            k_star = Some(k);
            break;
        }
    }
    Ok(SmfTrace {
        levels,
        k_star,
        k_max,
        selected: alive.iter().map(|&i| members[i].clone()).collect(),
    })
}

/// Moment fitting over all intervals under a uniform prior: the mean fixes
/// the centre `θ̄`, the variance the half-width `√(3 μ_2)`; higher orders
/// are checked against that single interval.
fn interval_smf(
    model: &dyn ParametricModel,
    prior: &Prior,
    targets: &[f64],
    k_max: usize,
    tol: SmfTolerances,
) -> Result<SmfTrace> {
    if *prior != Prior::Uniform {
        return Err(SmfError::Unsupported(
            "moment fitting over all intervals needs the uniform prior".into(),
        ));
    }
    let (lo, hi) = model.domain();
    let center = targets[0];
    let max_half = (center - lo).min(hi - center);
    let mut levels = vec![SmfLevel {
        k: 1,
        target: center,
        residual: 0.0,
        survivors: Survivors::CenteredIntervals {
            center,
            max_half_width: max_half,
        },
    }];
    let wanted = (3.0 * targets[1]).sqrt();
    let half = wanted.min(max_half);
    let h = Hypothesis::interval(center - half, center + half)?;
    let mut k_star = None;
    for k in 2..=k_max {
        let target = targets[k - 1];
        let fitted = uniform_central(half, k);
        let residual = (fitted - target).abs();
        levels.push(SmfLevel {
            k,
            target,
            residual,
            survivors: Survivors::Members(vec![(h.clone(), fitted)]),
        });
        if residual > tol.perfect_fit * target.abs().max(1.0) {
            k_star = Some(k);
            break;
        }
    }
    Ok(SmfTrace {
        levels,
        k_star,
        k_max,
        selected: vec![h],
    })
}

/// Hypothesis classes whose scale follows the data size, as the large-`n`
/// analysis requires of `μ_k^Θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaledClass {
    /// All intervals; their widths adapt through the fit itself.
    Intervals,
    /// All points. Only the posterior mean survives the first level, so the
    /// class materializes as that single point.
    AllPoints,
    /// `count` points centred at `center`, spaced `spread/√n` apart.
    Points { center: f64, count: u64, spread: f64 },
}

impl ScaledClass {
    /// The class at sample size `n` given the posterior mean `mean`.
    pub fn at(&self, n: u64, mean: f64) -> HypothesisClass {
        match *self {
            Self::Intervals => HypothesisClass::Intervals,
            Self::AllPoints => HypothesisClass::Explicit(vec![Hypothesis::Simple(mean)]),
            Self::Points { center, count, spread } => {
                let step = spread / (n.max(1) as f64).sqrt();
                let mid = (count as f64 - 1.0) / 2.0;
                HypothesisClass::Explicit(
                    (0..count)
                        .map(|i| Hypothesis::Simple((center + (i as f64 - mid) * step).clamp(0.0, 1.0)))
                        .collect(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem12Row {
    pub n: u64,
    pub data: CountSummary,
    pub winner: Hypothesis,
    pub k_star: Option<usize>,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem12Report {
    pub rows: Vec<Theorem12Row>,
    pub slope: Option<f64>,
    /// `-k β / 2 + slack` with `k` the smallest `k*` seen (`k_max` when
    /// every order was fitted).
    pub bound: f64,
    pub passed: bool,
}

/// Slack added to the loss decay bound.
pub const THEOREM12_SLACK: f64 = 0.4;
const THEOREM12_K_MAX: usize = 6;

/// First `n` draws of a seeded Bernoulli(`θ`) stream, as counts.
pub fn synthetic_counts(theta: f64, n: u64, seed: u64) -> CountSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ones = (0..n).filter(|_| rng.random::<f64>() < theta).count() as u64;
    CountSummary::new(ones, n - ones)
}

/// Fits the class at each `n` to seeded Bernoulli(`θ_true`) data and
/// regresses the hat loss of the winner on `n` in log-log scale.
#[allow(clippy::too_many_arguments)]
pub fn verify_theorem12(
    model: &dyn ParametricModel,
    prior: &Prior,
    class: &ScaledClass,
    d: DistanceKind<f64>,
    m: u64,
    ns: &[u64],
    theta_true: f64,
    seed: u64,
) -> Result<Theorem12Report> {
    if !model.is_bernoulli() {
        return Err(SmfError::Unsupported("synthetic data are Bernoulli draws".into()));
    }
    let spec = LossSpec::hat(m, d);
    let rows = ns
        .iter()
        .map(|&n| {
            let data = synthetic_counts(theta_true, n, seed);
            let sample: Sample = data.into();
            let mean = posterior_moment_targets(model, prior, &sample, 1)?[0];
            let trace = smf_select(model, prior, &sample, &class.at(n, mean), THEOREM12_K_MAX, SmfTolerances::default())?;
            let winner = trace
                .winner()
                .cloned()
                .ok_or_else(|| SmfError::Unsupported("moment fitting selected nothing".into()))?;
            let loss = LossContext::new(model, prior, &sample)?.evaluate(&winner, &spec)?.value;
            Ok(Theorem12Row {
                n,
                data,
                winner,
                k_star: trace.k_star,
                loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    let slope = log_log_slope(&xs, &ys);
    let k = rows
        .iter()
        .map(|r| r.k_star.unwrap_or(THEOREM12_K_MAX))
        .min()
        .unwrap_or(1);
    let bound = -(k as f64) * d.scaling_exponent() / 2.0 + THEOREM12_SLACK;
    Ok(Theorem12Report {
        passed: slope.is_some_and(|s| s <= bound),
        rows,
        slope,
        bound,
    })
}
