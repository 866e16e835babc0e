//! Predictive losses of a hypothesis.
//!
//! The hat loss compares the hypothesis' predictive `p(x|Θ)` for `m` future
//! observations with the Bayesian predictive `p(x|D)`; the tilde loss
//! compares it with `p(x|θ)` and averages over the posterior `p(θ|D)`.
//! Offline mode predicts the `m` observations one at a time while the data
//! grow, and averages the one-step losses over the intermediate histories.
//!
//! Three evaluation methods are interchangeable where they apply: literal
//! enumeration of all futures, a sum over the values of a sufficient
//! statistic, and closed forms of the Hellinger loss for the Bernoulli model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distances::DistanceKind;
use crate::models::{
    hypothesis_distribution, Hypothesis, ModelError, ObservationSpace, ParametricModel, Prior,
    Sample, StatisticSpace, ThetaDistribution,
};
use crate::numerics::{self, ln_gamma, CompensatedSum, QuadratureSettings};

/// Largest number of futures enumerated by brute force.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 24;
/// Largest number of intermediate histories visited in offline mode.
pub const OFFLINE_STATE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("method infeasible: {0}")]
    Infeasible(String),
    #[error("sufficient-statistic reduction inapplicable: {0}")]
    NoReduction(String),
    #[error("invalid loss specification: {0}")]
    InvalidSpec(String),
}

impl From<numerics::NumericsError> for LossError {
    fn from(e: numerics::NumericsError) -> Self {
        Self::Model(e.into())
    }
}

pub type Result<T> = std::result::Result<T, LossError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Hat,
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Batch,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    BruteForce,
    SufficientStat,
    HellingerClosedForm,
}

macro_rules! str_enum {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
                    $($s => Ok(Self::$v),)*
                    other => Err(format!("unknown value '{other}'")),
                }
            }
        }
    };
}

str_enum!(Which { Hat => "hat", Tilde => "tilde" });
str_enum!(Mode { Batch => "batch", Offline => "offline" });
str_enum!(Method {
    Auto => "auto",
    BruteForce => "brute_force",
    SufficientStat => "sufficient_stat",
    HellingerClosedForm => "hellinger_closed_form",
});

/// What to evaluate and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub which: Which,
    /// Number of future observations.
    pub m: u64,
    pub mode: Mode,
    pub distance: DistanceKind<f64>,
    pub method: Method,
}

impl LossSpec {
    /// Batch mode with automatic method selection.
    pub fn new(which: Which, m: u64, distance: DistanceKind<f64>) -> Self {
        Self {
            which,
            m,
            mode: Mode::Batch,
            distance,
            method: Method::Auto,
        }
    }

    pub fn hat(m: u64, distance: DistanceKind<f64>) -> Self {
        Self::new(Which::Hat, m, distance)
    }

    pub fn tilde(m: u64, distance: DistanceKind<f64>) -> Self {
        Self::new(Which::Tilde, m, distance)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(LossError::InvalidSpec("horizon m must be at least 1".into()));
        }
        if self.method == Method::HellingerClosedForm && self.distance != DistanceKind::Hellinger {
            return Err(LossError::InvalidSpec(
                "the Hellinger closed form requires the Hellinger distance".into(),
            ));
        }
        Ok(())
    }
}

/// A loss value with the method that produced it. `error_bound` is the
/// accumulated quadrature error estimate when an integral over `θ` or over a
/// continuous statistic was involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEvaluation {
    pub value: f64,
    pub method: Method,
    pub error_bound: Option<f64>,
}

impl LossEvaluation {
    fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            method,
            error_bound: None,
        }
    }

    fn numeric(value: f64, error: f64, method: Method) -> Self {
        Self {
            value,
            method,
            error_bound: Some(error),
        }
    }
}

/// `exp(ln_weight + β s) d(e^{a-s}, e^{b-s})` with `s = max(a, b)`: one term
/// of a statistic sum with both densities given in log space.
fn scaled_term(dist: &DistanceKind<f64>, beta: f64, ln_weight: f64, a: f64, b: f64) -> f64 {
    let s = a.max(b);
    if s == f64::NEG_INFINITY {
        return 0.0;
    }
    let d = dist.eval_pointwise((a - s).exp(), (b - s).exp());
    if d == 0.0 {
        0.0
    } else {
        d * (ln_weight + beta * s).exp()
    }
}

/// Tolerances for the outer `θ'` integral of tilde losses.
const TILDE_ABS_TOL: f64 = 1e-15;

/// Posterior and model bundled for repeated loss evaluation over many
/// hypotheses.
pub struct LossContext<'a> {
    model: &'a dyn ParametricModel,
    prior: Prior,
    data: Sample,
    posterior: ThetaDistribution,
}

impl<'a> LossContext<'a> {
    pub fn new(model: &'a dyn ParametricModel, prior: &Prior, data: &Sample) -> Result<Self> {
        Ok(Self {
            model,
            prior: prior.clone(),
            data: data.clone(),
            posterior: ThetaDistribution::posterior(model, prior, data)?,
        })
    }

    pub fn model(&self) -> &dyn ParametricModel {
        self.model
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn data(&self) -> &Sample {
        &self.data
    }

    pub fn posterior(&self) -> &ThetaDistribution {
        &self.posterior
    }

    pub fn hypothesis_distribution(&self, h: &Hypothesis) -> Result<ThetaDistribution> {
        Ok(hypothesis_distribution(self.model, &self.prior, h)?)
    }

    /// The method `auto` resolves to for this model and specification.
    pub fn resolve_method(&self, spec: &LossSpec) -> Method {
        match spec.method {
            Method::Auto => {
                if self.model.is_bernoulli()
                    && spec.distance == DistanceKind::Hellinger
                    && spec.which == Which::Tilde
                    && spec.mode == Mode::Batch
                {
                    Method::HellingerClosedForm
                } else if self.reduction_available(&spec.distance, spec.m) {
                    Method::SufficientStat
                } else {
                    Method::BruteForce
                }
            }
            other => other,
        }
    }

    fn reduction_available(&self, dist: &DistanceKind<f64>, m: u64) -> bool {
        match self.model.sufficient_kernel() {
            Some(k) => match k.statistic_space(m) {
                StatisticSpace::Finite(ts) => ts
                    .first()
                    .is_some_and(|&t| k.ln_h_beta(t, m, dist.scaling_exponent()).is_some()),
                StatisticSpace::Continuous { lo, hi } => {
                    k.ln_h_beta(0.5 * (lo + hi), m, dist.scaling_exponent()).is_some()
                }
            },
            None => false,
        }
    }

    pub fn evaluate(&self, h: &Hypothesis, spec: &LossSpec) -> Result<LossEvaluation> {
        let hd = self.hypothesis_distribution(h)?;
        self.evaluate_distribution(&hd, spec)
    }

    /// Loss of the hypothesis whose parameter law is `hd`.
    pub fn evaluate_distribution(&self, hd: &ThetaDistribution, spec: &LossSpec) -> Result<LossEvaluation> {
        spec.validate()?;
        let method = self.resolve_method(spec);
        match spec.mode {
            Mode::Batch => self.batch(&self.posterior, hd, spec.which, spec.m, &spec.distance, method),
            Mode::Offline => self.offline(hd, spec, method),
        }
    }

    fn batch(
        &self,
        post: &ThetaDistribution,
        hd: &ThetaDistribution,
        which: Which,
        m: u64,
        dist: &DistanceKind<f64>,
        method: Method,
    ) -> Result<LossEvaluation> {
        match method {
            Method::SufficientStat | Method::Auto => self.sufficient_stat(post, hd, which, m, dist),
            Method::BruteForce => self.brute_force(post, hd, which, m, dist),
            Method::HellingerClosedForm => {
                if !self.model.is_bernoulli() || *dist != DistanceKind::Hellinger {
                    return Err(LossError::InvalidSpec(
                        "the Hellinger closed form requires the Bernoulli model and the Hellinger distance"
                            .into(),
                    ));
                }
                let (bc, err) = bernoulli_bhattacharyya(post, hd, which, m)?;
                Ok(LossEvaluation {
                    value: (2.0 - 2.0 * bc).max(0.0),
                    method,
                    error_bound: err.map(|e| 2.0 * e),
                })
            }
        }
    }

    // -- sufficient statistic -------------------------------------------------

    fn sufficient_stat(
        &self,
        post: &ThetaDistribution,
        hd: &ThetaDistribution,
        which: Which,
        m: u64,
        dist: &DistanceKind<f64>,
    ) -> Result<LossEvaluation> {
        let k = self
            .model
            .sufficient_kernel()
            .ok_or_else(|| LossError::NoReduction(format!("model '{}' has no sufficient statistic", self.model.name())))?;
        let beta = dist.scaling_exponent();
        let ln_g_mixed = |law: &ThetaDistribution, t: f64| -> Result<f64> {
            Ok(law.ln_expect_exp(|th| k.ln_g(t, m, th))?)
        };
        match k.statistic_space(m) {
            StatisticSpace::Finite(ts) => {
                let ln_h: Vec<f64> = ts
                    .iter()
                    .map(|&t| {
                        k.ln_h_beta(t, m, beta).ok_or_else(|| {
                            LossError::NoReduction(format!("no h_β for {dist} (β = {beta})"))
                        })
                    })
                    .collect::<Result<_>>()?;
                let bern = self.model.is_bernoulli();
                let sweep = |law: &ThetaDistribution| -> Result<Vec<f64>> {
                    if bern {
                        Ok(law.ln_expect_bernoulli_sweep(m)?)
                    } else {
                        ts.iter().map(|&t| ln_g_mixed(law, t)).collect()
                    }
                };
                let lg_h = sweep(hd)?;
                match which {
                    Which::Hat => {
                        let lg_d = sweep(post)?;
                        let sum: CompensatedSum<f64> = (0..ts.len())
                            .map(|i| scaled_term(dist, beta, ln_h[i], lg_h[i], lg_d[i]))
                            .collect();
                        Ok(LossEvaluation::exact(sum.value(), Method::SufficientStat))
                    }
                    Which::Tilde => {
                        let mf = m as f64;
                        let inner = |th: f64| -> f64 {
                            // The Bernoulli kernel shares ln θ and ln(1-θ) across t.
                            let (l1, l0) = if bern { (th.ln(), (-th).ln_1p()) } else { (0.0, 0.0) };
                            let ln_g = |t: f64| {
                                if bern {
                                    let z = mf - t;
                                    (if t == 0.0 { 0.0 } else { t * l1 }) + if z == 0.0 { 0.0 } else { z * l0 }
                                } else {
                                    k.ln_g(t, m, th)
                                }
                            };
                            let s: CompensatedSum<f64> = ts
                                .iter()
                                .enumerate()
                                .map(|(i, &t)| scaled_term(dist, beta, ln_h[i], lg_h[i], ln_g(t)))
                                .collect();
                            s.value()
                        };
                        self.tilde_outer(post, inner, Method::SufficientStat)
                    }
                }
            }
            StatisticSpace::Continuous { lo, hi } => {
                let settings = QuadratureSettings::default();
                let ln_h = |t: f64| k.ln_h_beta(t, m, beta).unwrap_or(f64::NEG_INFINITY);
                match which {
                    Which::Hat => {
                        let mut failure = None;
                        let r = numerics::integrate_with_error(
                            |t: f64| match (ln_g_mixed(hd, t), ln_g_mixed(post, t)) {
                                (Ok(a), Ok(b)) => scaled_term(dist, beta, ln_h(t), a, b),
                                (Err(e), _) | (_, Err(e)) => {
                                    failure.get_or_insert(e);
                                    0.0
                                }
                            },
                            lo,
                            hi,
                            &settings,
                        )?;
                        if let Some(e) = failure {
                            return Err(e);
                        }
                        Ok(LossEvaluation::numeric(r.value, r.error, Method::SufficientStat))
                    }
                    Which::Tilde => {
                        let inner = |th: f64| -> f64 {
                            numerics::integrate(
                                |t: f64| {
                                    let a = ln_g_mixed(hd, t).unwrap_or(f64::NAN);
                                    scaled_term(dist, beta, ln_h(t), a, k.ln_g(t, m, th))
                                },
                                lo,
                                hi,
                                &settings,
                            )
                            .unwrap_or(f64::NAN)
                        };
                        self.tilde_outer(post, inner, Method::SufficientStat)
                    }
                }
            }
        }
    }

    /// `∫ p(θ'|D) inner(θ') dθ'`, with infinite inner values propagated.
    fn tilde_outer(
        &self,
        post: &ThetaDistribution,
        inner: impl Fn(f64) -> f64,
        method: Method,
    ) -> Result<LossEvaluation> {
        // A hypothesis that rules out futures the posterior allows has an
        // infinite loss for every interior θ'; detect it before integrating.
        let probe = post.mean()?;
        let v = inner(probe);
        if v == f64::INFINITY {
            return Ok(LossEvaluation::exact(f64::INFINITY, method));
        }
        if v.is_nan() {
            return Err(LossError::Model(ModelError::Numerics(
                numerics::NumericsError::NonFiniteIntegrand { x: probe },
            )));
        }
        if !post.is_atomic() && diverges_at_edges(post, &inner) {
            return Ok(LossEvaluation::exact(f64::INFINITY, method));
        }
        let (value, error) = post.expect_with_error(&inner, TILDE_ABS_TOL)?;
        Ok(LossEvaluation::numeric(value, error, method))
    }

    // -- brute force -----------------------------------------------------------

    fn brute_force(
        &self,
        post: &ThetaDistribution,
        hd: &ThetaDistribution,
        which: Which,
        m: u64,
        dist: &DistanceKind<f64>,
    ) -> Result<LossEvaluation> {
        let alphabet = match self.model.observation_space() {
            ObservationSpace::Finite(xs) => xs,
            ObservationSpace::Continuous { .. } => {
                return Err(LossError::Infeasible(
                    "brute force requires a finite observation alphabet".into(),
                ))
            }
        };
        let futures = enumerate_futures(alphabet.len(), m)?;
        let observed = |x: &[usize]| Sample::from_observations(&x.iter().map(|&i| alphabet[i]).collect::<Vec<_>>());
        let ln_ph: Vec<f64> = futures
            .iter()
            .map(|x| hd.ln_expect_likelihood(self.model, &observed(x)))
            .collect::<std::result::Result<_, _>>()?;
        match which {
            Which::Hat => {
                let mut sum = CompensatedSum::default();
                for (x, &lh) in futures.iter().zip(&ln_ph) {
                    let ld = post.ln_expect_likelihood(self.model, &observed(x))?;
                    sum.add(dist.eval_pointwise(lh.exp(), ld.exp()));
                }
                Ok(LossEvaluation::exact(sum.value(), Method::BruteForce))
            }
            Which::Tilde => {
                let ph: Vec<f64> = ln_ph.iter().map(|v| v.exp()).collect();
                let inner = |th: f64| -> f64 {
                    let ll: Vec<f64> = alphabet.iter().map(|&x| self.model.log_likelihood(x, th)).collect();
                    let s: CompensatedSum<f64> = futures
                        .iter()
                        .zip(&ph)
                        .map(|(x, &p)| {
                            let lq: f64 = x.iter().map(|&i| ll[i]).sum();
                            dist.eval_pointwise(p, lq.exp())
                        })
                        .collect();
                    s.value()
                };
                self.tilde_outer(post, inner, Method::BruteForce)
            }
        }
    }

    // -- offline ---------------------------------------------------------------

    fn offline(&self, hd: &ThetaDistribution, spec: &LossSpec, method: Method) -> Result<LossEvaluation> {
        let alphabet = match self.model.observation_space() {
            ObservationSpace::Finite(xs) => xs,
            ObservationSpace::Continuous { .. } => {
                return Err(LossError::Infeasible("offline mode requires a finite observation alphabet".into()))
            }
        };
        let states = offline_state_count(alphabet.len() as u64, spec.m);
        if states > OFFLINE_STATE_LIMIT {
            return Err(LossError::Infeasible(format!(
                "offline mode visits {states} histories, above the limit of {OFFLINE_STATE_LIMIT}"
            )));
        }
        let mut total = CompensatedSum::default();
        let mut error = 0.0;
        let mut any_numeric = false;
        for j in 0..spec.m {
            for counts in compositions(j, alphabet.len()) {
                let mut history = Sample::empty();
                for (&x, &c) in alphabet.iter().zip(&counts) {
                    history = history.with_appended_counts(x, c);
                }
                let ln_multi = ln_gamma(j as f64 + 1.0)
                    - counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>();
                let ln_w = ln_multi + self.posterior.ln_expect_likelihood(self.model, &history)?;
                if ln_w == f64::NEG_INFINITY {
                    continue;
                }
                let mut grown = self.data.clone();
                for &(x, c) in history.entries() {
                    grown = grown.with_appended_counts(x, c);
                }
                let post = ThetaDistribution::posterior(self.model, &self.prior, &grown)?;
                let one = self.batch(&post, hd, spec.which, 1, &spec.distance, method)?;
                let w = ln_w.exp();
                total.add(w * one.value);
                if let Some(e) = one.error_bound {
                    error += w * e;
                    any_numeric = true;
                }
            }
        }
        Ok(LossEvaluation {
            value: total.value(),
            method,
            error_bound: any_numeric.then_some(error),
        })
    }
}

/// Whether `p(θ'|D) inner(θ')` fails to be integrable at an outer end of the
/// posterior support. A non-integrable singularity makes `ε · f(edge ± ε)`
/// stay bounded away from zero as `ε` shrinks; an integrable one sends it to
/// zero.
fn diverges_at_edges(post: &ThetaDistribution, inner: &impl Fn(f64) -> f64) -> bool {
    let support = post.support();
    let (Some(&(lo, _)), Some(&(_, hi))) = (support.first(), support.last()) else {
        return false;
    };
    let scaled = |t: f64, eps: f64| match post.density(t) {
        Some(p) if p > 0.0 => p * inner(t) * eps,
        _ => 0.0,
    };
    [(lo, 1.0), (hi, -1.0)].into_iter().any(|(edge, dir)| {
        let coarse = scaled(edge + dir * 1e-8, 1e-8);
        let fine = scaled(edge + dir * 1e-13, 1e-13);
        fine.is_finite() && fine > 1e-300 && fine >= 0.5 * coarse
            || fine == f64::INFINITY
    })
}

/// Every sequence of `m` symbol indices below `k`, in lexicographic order.
fn enumerate_futures(k: usize, m: u64) -> Result<Vec<Vec<usize>>> {
    let alphabet = k;
    let k = k as u64;
    let count = (0..m).try_fold(1u64, |acc, _| acc.checked_mul(k).filter(|&c| c <= BRUTE_FORCE_LIMIT));
    let count = count.ok_or_else(|| {
        LossError::Infeasible(format!(
            "brute force needs |X|^m <= {BRUTE_FORCE_LIMIT}, got {k}^{m}"
        ))
    })?;
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; m as usize];
    for _ in 0..count {
        out.push(idx.clone());
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < alphabet {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// `Σ_{j<m} C(j + k - 1, k - 1)`, saturating.
fn offline_state_count(k: u64, m: u64) -> u64 {
    let mut total = 0u64;
    for j in 0..m {
        let mut c = 1u64;
        for i in 0..k.saturating_sub(1) {
            c = c.saturating_mul(j + 1 + i) / (i + 1);
        }
        total = total.saturating_add(c);
    }
    total
}

/// All ways to write `j` as an ordered sum of `k` non-negative counts.
fn compositions(j: u64, k: usize) -> Vec<Vec<u64>> {
    if k == 1 {
        return vec![vec![j]];
    }
    let mut out = Vec::new();
    for first in 0..=j {
        for mut rest in compositions(j - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Bhattacharyya coefficient `Σ_x √(p(x|Θ) q(x))` underlying the Hellinger
/// loss `2 - 2·BC`, for the Bernoulli model. The hat version compares with
/// `p(x|D)`, the tilde version averages `q = p(x|θ')` over `post`.
///
/// A simple hypothesis `θ` under the tilde loss integrates
/// `(√(θθ') + √((1-θ)(1-θ')))^m` against the posterior; every other case
/// sums `C(m,t) √g(t|Θ) E[√g(t|·)]` over `t`, with the expectation of the
/// square-rooted likelihood in closed form for Beta laws.
pub fn bernoulli_bhattacharyya(
    post: &ThetaDistribution,
    hd: &ThetaDistribution,
    which: Which,
    m: u64,
) -> Result<(f64, Option<f64>)> {
    if let (Which::Tilde, ThetaDistribution::Atoms(atoms)) = (which, hd) {
        if let [(_, theta)] = atoms.as_slice() {
            let th = *theta;
            let mf = m as f64;
            let ln_bc = post.ln_expect_exp(|tp| {
                let c = (th * tp).sqrt() + ((1.0 - th) * (1.0 - tp)).sqrt();
                mf * c.ln()
            })?;
            return Ok((ln_bc.exp(), None));
        }
    }
    let lg_h = hd.ln_expect_bernoulli_sweep(m)?;
    let mut sum = CompensatedSum::default();
    for (t, &lh) in lg_h.iter().enumerate() {
        if lh == f64::NEG_INFINITY {
            continue;
        }
        let t_u = t as u64;
        let ln_c = numerics::log_binomial(m, t_u)?;
        let other = match which {
            Which::Hat => 0.5 * post.ln_expect_bernoulli(t as f64, (m - t_u) as f64)?,
            Which::Tilde => post.ln_expect_bernoulli(0.5 * t as f64, 0.5 * (m - t_u) as f64)?,
        };
        sum.add((ln_c + 0.5 * lh + other).exp());
    }
    Ok((sum.value(), None))
}

/// `Loss_d^m(Θ, D)`; `spec.which` must be [`Which::Hat`].
pub fn loss_hat(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    h: &Hypothesis,
    spec: &LossSpec,
) -> Result<LossEvaluation> {
    if spec.which != Which::Hat {
        return Err(LossError::InvalidSpec("loss_hat needs which = hat".into()));
    }
    LossContext::new(model, prior, data)?.evaluate(h, spec)
}

/// `L̃oss_d^m(Θ, D)`; `spec.which` must be [`Which::Tilde`].
pub fn loss_tilde(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    h: &Hypothesis,
    spec: &LossSpec,
) -> Result<LossEvaluation> {
    if spec.which != Which::Tilde {
        return Err(LossError::InvalidSpec("loss_tilde needs which = tilde".into()));
    }
    LossContext::new(model, prior, data)?.evaluate(h, spec)
}

/// Batch loss forced through the sufficient-statistic sum.
pub fn loss_via_sufficient_stat(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    h: &Hypothesis,
    spec: &LossSpec,
) -> Result<LossEvaluation> {
    let spec = spec.with_method(Method::SufficientStat).with_mode(Mode::Batch);
    LossContext::new(model, prior, data)?.evaluate(h, &spec)
}

/// Batch loss by enumerating every future sequence.
pub fn loss_brute_force(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    h: &Hypothesis,
    spec: &LossSpec,
) -> Result<LossEvaluation> {
    let spec = spec.with_method(Method::BruteForce).with_mode(Mode::Batch);
    LossContext::new(model, prior, data)?.evaluate(h, &spec)
}

/// Offline loss `E[Σ_k Loss^1(Θ, D_k) | D]`.
pub fn loss_offline(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    h: &Hypothesis,
    spec: &LossSpec,
) -> Result<LossEvaluation> {
    let spec = spec.with_mode(Mode::Offline);
    LossContext::new(model, prior, data)?.evaluate(h, &spec)
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

/// Largest deviation between two evaluations of the same losses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub cases: usize,
    /// `max |a - b| / max(1, |b|)`, zero when the two values are identical.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1.0)
    }
}

fn agreement(deviations: impl IntoIterator<Item = f64>, tolerance: f64) -> AgreementReport {
    let (cases, max_deviation) = deviations
        .into_iter()
        .fold((0, 0.0f64), |(n, worst), d| (n + 1, if d.is_nan() { f64::NAN } else { worst.max(d) }));
    AgreementReport {
        cases,
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    }
}

/// Sufficient-statistic sums against enumeration of all futures, for both
/// losses, every distance and every horizon in `ms`.
pub fn verify_theorem5(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    hypotheses: &[Hypothesis],
    distances: &[DistanceKind<f64>],
    ms: &[u64],
) -> Result<AgreementReport> {
    let ctx = LossContext::new(model, prior, data)?;
    let mut devs = Vec::new();
    for h in hypotheses {
        for &d in distances {
            for &m in ms {
                for which in [Which::Hat, Which::Tilde] {
                    let spec = LossSpec::new(which, m, d);
                    let a = ctx.evaluate(h, &spec.with_method(Method::SufficientStat))?.value;
                    let b = ctx.evaluate(h, &spec.with_method(Method::BruteForce))?.value;
                    devs.push(deviation(a, b));
                }
            }
        }
    }
    Ok(agreement(devs, 1e-12))
}

/// Spread of `Loss - L̃oss` across hypotheses, and whether both losses
/// select the same hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstancyReport {
    pub distance: DistanceKind<f64>,
    pub m: u64,
    pub gaps: Vec<f64>,
    pub std_dev: f64,
    pub argmin_agreement: bool,
    pub passed: bool,
}

/// For the squared and reverse KL distances `Loss - L̃oss` does not depend
/// on the hypothesis.
pub fn verify_theorem6(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    hypotheses: &[Hypothesis],
    d: DistanceKind<f64>,
    m: u64,
) -> Result<ConstancyReport> {
    if hypotheses.is_empty() {
        return Err(LossError::InvalidSpec("no hypotheses to compare".into()));
    }
    let ctx = LossContext::new(model, prior, data)?;
    let pairs = hypotheses
        .iter()
        .map(|h| Ok((ctx.evaluate(h, &LossSpec::hat(m, d))?.value, ctx.evaluate(h, &LossSpec::tilde(m, d))?.value)))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let std_dev = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt();
    let argmin = |v: &[f64]| (0..v.len()).fold(0, |best, i| if v[i] < v[best] { i } else { best });
    let hat: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tilde: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let best = tilde[argmin(&tilde)];
    let argmin_agreement = tilde[argmin(&hat)] <= best + 1e-12 * best.abs().max(1.0);
    Ok(ConstancyReport {
        distance: d,
        m,
        passed: std_dev < 1e-8 && argmin_agreement,
        gaps,
        std_dev,
        argmin_agreement,
    })
}

/// Offline tilde loss against `m` times the one-step tilde loss.
pub fn verify_offline_additivity(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    hypotheses: &[Hypothesis],
    distances: &[DistanceKind<f64>],
    ms: &[u64],
) -> Result<AgreementReport> {
    let ctx = LossContext::new(model, prior, data)?;
    let mut devs = Vec::new();
    for h in hypotheses {
        for &d in distances {
            let one = ctx.evaluate(h, &LossSpec::tilde(1, d))?.value;
            for &m in ms {
                let offline = ctx.evaluate(h, &LossSpec::tilde(m, d).with_mode(Mode::Offline))?.value;
                devs.push(deviation(offline, m as f64 * one));
            }
        }
    }
    Ok(agreement(devs, 1e-10))
}
