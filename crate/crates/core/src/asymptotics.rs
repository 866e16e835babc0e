//! Large-`m` behaviour of the Hellinger loss and the estimators it leads to:
//! IMAP for points, the ML×MAP objective and its likelihood level sets for
//! composite hypotheses, and numeric checks of the asymptotic expansions.

use serde::Serialize;
use thiserror::Error;

use crate::loss::{bernoulli_bhattacharyya, LossError, Which};
use crate::models::{
    fisher_information, jeffreys_normalizer, hypothesis_distribution, Hypothesis, ModelError, ParametricModel,
    Prior, Sample, ThetaDistribution,
};
use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("{0}")]
    Unsupported(String),
    #[error("hypothesis has zero prior mass")]
    ZeroMass,
}

impl From<NumericsError> for AsymptoticsError {
    fn from(e: NumericsError) -> Self {
        Self::Model(e.into())
    }
}

pub type Result<T> = std::result::Result<T, AsymptoticsError>;

const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEstimate {
    pub theta: f64,
    /// Log of the maximized objective at the estimate.
    pub ln_objective: f64,
    /// The maximizer sits at the edge of the parameter domain.
    pub at_boundary: bool,
}

/// Maximizes `objective` over the model domain, staying a relative `1e-12`
/// away from its edges, then polishes the result.
fn interior_maximum(model: &dyn ParametricModel, objective: impl Fn(f64) -> f64) -> Result<PointEstimate> {
    let (lo, hi) = model.domain();
    let margin = 1e-12 * (hi - lo);
    let (a, b) = (lo + margin, hi - margin);
    let found = numerics::maximize_1d(&objective, a, b, 1e-9 * (hi - lo))?;
    let theta = numerics::polish_maximum(&objective, found.argument, 1e-4 * (hi - lo), a, b);
    let theta = if objective(theta) >= found.value - 1e-12 * found.value.abs() {
        theta
    } else {
        found.argument
    };
    let edge = 1e-8 * (hi - lo);
    Ok(PointEstimate {
        theta,
        ln_objective: objective(theta),
        at_boundary: theta - lo < edge || hi - theta < edge,
    })
}

/// `argmax p(θ|D) / √I₁(θ)`, the point the Hellinger loss selects as
/// `m → ∞`. The objective is `ln p(θ|D) - ½ ln I₁(θ)`.
pub fn imap(model: &dyn ParametricModel, prior: &Prior, data: &Sample) -> Result<PointEstimate> {
    let post = ThetaDistribution::posterior(model, prior, data)?;
    interior_maximum(model, |t: f64| -> f64 {
        let ld = post.ln_density(t).unwrap_or(f64::NEG_INFINITY);
        match fisher_information(model, t) {
            Ok(i) if i > 0.0 && ld.is_finite() => ld - 0.5 * i.ln(),
            _ => -f64::MAX,
        }
    })
}

/// The posterior mode `argmax p(θ|D)`, with objective `ln p(θ|D)`.
pub fn map_estimate(model: &dyn ParametricModel, prior: &Prior, data: &Sample) -> Result<PointEstimate> {
    let post = ThetaDistribution::posterior(model, prior, data)?;
    interior_maximum(model, |t: f64| -> f64 {
        match post.ln_density(t) {
            Some(ld) if ld.is_finite() => ld,
            _ => -f64::MAX,
        }
    })
}

/// `-ln p(D|θ) + ½ ln(m / 8π) + ln J`, the description-length form of the
/// point Hellinger loss under the Jeffreys prior (`J` its normalizer).
pub fn mdl_objective(model: &dyn ParametricModel, data: &Sample, theta: f64, m: u64) -> Result<f64> {
    let j = jeffreys_normalizer(model)?;
    Ok(-model.sample_log_likelihood(data, theta) + 0.5 * (m as f64 / EIGHT_PI).ln() + j.ln())
}

// ---------------------------------------------------------------------------
// Composite hypotheses
// ---------------------------------------------------------------------------

/// `ln(P[Θ|D] / √P[Θ])`.
pub fn ln_mlxmap_objective(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    pieces: &[(f64, f64)],
) -> Result<f64> {
    let prior_law = ThetaDistribution::prior(model, prior)?;
    let post = ThetaDistribution::posterior(model, prior, data)?;
    ln_mlxmap_with(&prior_law, &post, pieces)
}

fn ln_mlxmap_with(prior_law: &ThetaDistribution, post: &ThetaDistribution, pieces: &[(f64, f64)]) -> Result<f64> {
    let ln_prior = prior_law.ln_mass(pieces)?;
    if ln_prior == f64::NEG_INFINITY {
        return Err(AsymptoticsError::ZeroMass);
    }
    Ok(post.ln_mass(pieces)? - 0.5 * ln_prior)
}

/// `P[Θ|D] / √P[Θ]`: 1 for the whole domain, 0 in the limit of a point.
pub fn mlxmap_objective(model: &dyn ParametricModel, prior: &Prior, data: &Sample, pieces: &[(f64, f64)]) -> Result<f64> {
    Ok(ln_mlxmap_objective(model, prior, data, pieces)?.exp())
}

/// `ln[(1/√P[Θ]) ∫_Θ p(θ|D) √(p(θ)/√I₁(θ)) dθ]`, the composite factor of the
/// large-`m` Hellinger loss.
pub fn ln_hellinger_composite_factor(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    pieces: &[(f64, f64)],
) -> Result<f64> {
    let prior_law = ThetaDistribution::prior(model, prior)?;
    let post = ThetaDistribution::posterior(model, prior, data)?;
    ln_hellinger_with(model, &prior_law, &post, pieces)
}

fn ln_hellinger_with(
    model: &dyn ParametricModel,
    prior_law: &ThetaDistribution,
    post: &ThetaDistribution,
    pieces: &[(f64, f64)],
) -> Result<f64> {
    let ln_prior = prior_law.ln_mass(pieces)?;
    if ln_prior == f64::NEG_INFINITY {
        return Err(AsymptoticsError::ZeroMass);
    }
    let ln_post = post.ln_mass(pieces)?;
    if ln_post == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let restricted = post.restrict(pieces)?;
    let weight = |t: f64| match (prior_law.ln_density(t), fisher_information(model, t)) {
        (Some(lp), Ok(i)) if i > 0.0 => (0.5 * lp - 0.25 * i.ln()).exp(),
        _ => 0.0,
    };
    let e = restricted.expect_with(weight, 1e-300)?;
    Ok(ln_post + e.ln() - 0.5 * ln_prior)
}

/// Which composite objective a level-set search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelObjective {
    /// `P[Θ|D]/√P[Θ]`, maximized by likelihood level sets for any prior.
    #[default]
    MlMap,
    /// The composite factor of the large-`m` Hellinger loss, maximized by
    /// level sets of `p(D|θ) √(p(θ)/√I₁(θ))`.
    HellingerAsymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetResult {
    /// `ln γ` of the selected level; `-∞` when the whole domain wins.
    pub ln_gamma: f64,
    pub set: Hypothesis,
    pub objective: f64,
    pub ln_objective: f64,
    /// The level function is flat at the selected level, so the open and
    /// closed level sets differ; the better one is returned.
    pub plateau: bool,
    pub kind: LevelObjective,
}

const LEVEL_GRID: usize = 4096;

type Pieces = Vec<(f64, f64)>;

struct LevelProblem<'a> {
    model: &'a dyn ParametricModel,
    prior_law: ThetaDistribution,
    post: ThetaDistribution,
    kind: LevelObjective,
    data: &'a Sample,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl LevelProblem<'_> {
    fn level(&self, t: f64) -> f64 {
        let ll = self.model.sample_log_likelihood(self.data, t);
        match self.kind {
            LevelObjective::MlMap => ll,
            LevelObjective::HellingerAsymptotic => {
                match (self.prior_law.ln_density(t), fisher_information(self.model, t)) {
                    (Some(lp), Ok(i)) if i > 0.0 => ll + 0.5 * lp - 0.25 * i.ln(),
                    _ => f64::NEG_INFINITY,
                }
            }
        }
    }

    fn objective(&self, pieces: &[(f64, f64)]) -> Result<f64> {
        if pieces.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        match self.kind {
            LevelObjective::MlMap => ln_mlxmap_with(&self.prior_law, &self.post, pieces),
            LevelObjective::HellingerAsymptotic => ln_hellinger_with(self.model, &self.prior_law, &self.post, pieces),
        }
        .or_else(|e| match e {
            AsymptoticsError::ZeroMass => Ok(f64::NEG_INFINITY),
            e => Err(e),
        })
    }

    /// `{θ : ℓ(θ) ≥ g}` (or `> g` when `open`), with crossings located by
    /// bisection between grid nodes.
    fn level_set(&self, g: f64, open: bool) -> Vec<(f64, f64)> {
        let inside = |v: f64| if open { v > g } else { v >= g };
        let cross = |a: f64, b: f64| numerics::bisect_root(|t| self.level(t) - g, a, b, 1e-15);
        let mut out = Vec::new();
        let mut start = inside(self.values[0]).then_some(self.nodes[0]);
        for i in 1..self.nodes.len() {
            let (was, now) = (inside(self.values[i - 1]), inside(self.values[i]));
            match (was, now) {
                (false, true) => start = Some(cross(self.nodes[i - 1], self.nodes[i])),
                (true, false) => {
                    let end = cross(self.nodes[i - 1], self.nodes[i]);
                    if let Some(s) = start.take() {
                        if end > s {
                            out.push((s, end));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            let end = *self.nodes.last().unwrap();
            if end > s {
                out.push((s, end));
            }
        }
        out
    }

    /// Best of the closed and open level sets at `g`, and whether they differ.
    fn best_at(&self, g: f64) -> Result<(Pieces, f64, bool)> {
        let closed = self.level_set(g, false);
        let open = self.level_set(g, true);
        if closed == open {
            let v = self.objective(&closed)?;
            return Ok((closed, v, false));
        }
        let (vc, vo) = (self.objective(&closed)?, self.objective(&open)?);
        Ok(if vo > vc { (open, vo, true) } else { (closed, vc, true) })
    }
}

/// Maximizes the chosen composite objective over the level sets of the
/// matching level function. Levels are swept on a log-spaced grid of
/// `resolution` depths below the maximum, then refined by golden-section
/// search around the best grid level.
pub fn level_set_search(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    resolution: usize,
    kind: LevelObjective,
) -> Result<LevelSetResult> {
    if resolution < 3 {
        return Err(AsymptoticsError::Unsupported("level-set search needs a resolution of at least 3".into()));
    }
    let (lo, hi) = model.domain();
    let mut problem = LevelProblem {
        model,
        prior_law: ThetaDistribution::prior(model, prior)?,
        post: ThetaDistribution::posterior(model, prior, data)?,
        kind,
        data,
        nodes: Vec::new(),
        values: Vec::new(),
    };
    let mut nodes: Vec<f64> = (0..=LEVEL_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / LEVEL_GRID as f64)
        .collect();
    *nodes.last_mut().unwrap() = hi;
    let peak = numerics::maximize_1d(
        |t| {
            let v = problem.level(t);
            if v.is_nan() { -f64::MAX } else { v.max(-f64::MAX) }
        },
        lo,
        hi,
        1e-12 * (hi - lo),
    )?;
    nodes.push(peak.argument);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    problem.values = nodes.iter().map(|&t| problem.level(t)).collect();
    problem.nodes = nodes;

    let top = problem.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bottom = problem
        .values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !top.is_finite() {
        return Err(AsymptoticsError::Unsupported("level function is nowhere finite".into()));
    }

    // Candidate levels: the maximum, depths log-spaced below it, and the
    // lowest finite value (whole support).
    let span = (top - bottom).max(0.0);
    let mut levels = vec![top];
    if span > 0.0 {
        let (d_lo, d_hi) = ((1e-9 * span.max(1.0)).min(span).ln(), span.ln());
        for i in 0..resolution {
            let d = (d_lo + (d_hi - d_lo) * i as f64 / (resolution - 1) as f64).exp();
            levels.push(top - d);
        }
    }
    levels.push(bottom);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut evaluated = Vec::with_capacity(levels.len());
    for (i, &g) in levels.iter().enumerate() {
        let (_, v, _) = problem.best_at(g)?;
        evaluated.push(v);
        if v > best.1 {
            best = (i, v);
        }
    }

    // Refine in ln(depth) between the neighbours of the best grid level.
    let mut chosen = levels[best.0];
    let depth = |g: f64| (top - g).max(1e-300).ln();
    if best.0 > 0 && best.0 + 1 < levels.len() && span > 0.0 {
        let (a, b) = (depth(levels[best.0 - 1]), depth(levels[best.0 + 1]));
        let refine = numerics::maximize_1d(
            |ld| problem.best_at(top - ld.exp()).map(|r| r.1.max(-f64::MAX)).unwrap_or(-f64::MAX),
            a.min(b),
            a.max(b),
            1e-10,
        )?;
        if refine.value > best.1 {
            chosen = top - refine.argument.exp();
        }
    }
    let (pieces, ln_objective, plateau) = problem.best_at(chosen)?;
    let plateau = plateau || span <= 1e-12 * top.abs().max(1.0);
    let set = Hypothesis::interval_union(pieces)?;
    let ln_gamma = if chosen == bottom && pieces_cover(&set, lo, hi) {
        f64::NEG_INFINITY
    } else {
        chosen
    };
    Ok(LevelSetResult {
        ln_gamma,
        set,
        objective: ln_objective.exp(),
        ln_objective,
        plateau,
        kind,
    })
}

fn pieces_cover(h: &Hypothesis, lo: f64, hi: f64) -> bool {
    matches!(h, Hypothesis::IntervalUnion(p) if p.len() == 1 && p[0] == (lo, hi))
}

// ---------------------------------------------------------------------------
// Ellipsoid radius and the erf maximization
// ---------------------------------------------------------------------------

/// Maximizer `x*` of `erf(x)/√x` on `x > 0`.
pub fn erf_sqrt_maximizer() -> Result<f64> {
    let f = |x: f64| numerics::erf(x).ln() - 0.5 * x.ln();
    let r = numerics::maximize_1d(f, 1e-3, 5.0, 1e-10)?;
    Ok(numerics::polish_maximum(f, r.argument, 1e-4, 1e-3, 5.0))
}

/// `(ρ̃, ρ̃/√d)` where `ρ̃` maximizes `γ(d/2, ρ²/2) / ρ^{d/2}`.
pub fn ellipsoid_rho(d: u32) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(AsymptoticsError::Unsupported("dimension must be at least 1".into()));
    }
    let h = 0.5 * d as f64;
    let f = |r: f64| {
        numerics::ln_lower_incomplete_gamma(h, 0.5 * r * r)
            .map(|v| v - h * r.ln())
            .unwrap_or(-f64::MAX)
    };
    let hi = 3.0 + 2.0 * (d as f64).sqrt();
    let r = numerics::maximize_1d(f, 1e-3, hi, 1e-10)?;
    let rho = numerics::polish_maximum(f, r.argument, 1e-4, 1e-3, hi);
    Ok((rho, rho / (d as f64).sqrt()))
}

// ---------------------------------------------------------------------------
// Numeric checks of the expansions
// ---------------------------------------------------------------------------

/// One horizon of an asymptotic check. `exact` is the Hellinger tilde loss;
/// `ratio` compares `2 - loss` with its leading-order expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub m: u64,
    pub exact: f64,
    pub asymptotic: f64,
    pub ratio: f64,
}

fn require_bernoulli(model: &dyn ParametricModel) -> Result<()> {
    if model.is_bernoulli() {
        Ok(())
    } else {
        Err(AsymptoticsError::Unsupported(
            "asymptotic checks use the Bernoulli Bhattacharyya closed form".into(),
        ))
    }
}

/// Point hypothesis `θ`: `2 - loss ≈ 2 (8π/m)^{1/2} p(θ|D)/√I₁(θ)`.
pub fn verify_theorem8(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    theta: f64,
    ms: &[u64],
) -> Result<Vec<AsymptoticRow>> {
    require_bernoulli(model)?;
    let post = ThetaDistribution::posterior(model, prior, data)?;
    let point = ThetaDistribution::atoms(vec![(1.0, theta)]);
    let density = post.density(theta).unwrap_or(0.0);
    let info = fisher_information(model, theta)?;
    ms.iter()
        .map(|&m| {
            let (bc, _) = bernoulli_bhattacharyya(&post, &point, Which::Tilde, m)?;
            let lead = (EIGHT_PI / m as f64).sqrt() * density / info.sqrt();
            Ok(AsymptoticRow {
                m,
                exact: 2.0 - 2.0 * bc,
                asymptotic: 2.0 - 2.0 * lead,
                ratio: bc / lead,
            })
        })
        .collect()
}

/// The Jeffreys-prior form of the point expansion,
/// `2 - 2 (8π/m)^{1/2} p(D|θ) / (J p(D))`.
pub fn theorem8_jeffreys_form(model: &dyn ParametricModel, data: &Sample, theta: f64, m: u64) -> Result<f64> {
    let j = jeffreys_normalizer(model)?;
    let prior_law = ThetaDistribution::prior(model, &Prior::Jeffreys)?;
    let ln_evidence = prior_law.ln_expect_likelihood(model, data)?;
    let ln_lik = model.sample_log_likelihood(data, theta);
    Ok(2.0 - 2.0 * (EIGHT_PI / m as f64).sqrt() * (ln_lik - ln_evidence).exp() / j)
}

/// Composite `Θ`: `2 - loss ≈ 2 (8π/m)^{1/4} (1/√P[Θ]) ∫_Θ p(θ|D) √(p(θ)/√I₁(θ)) dθ`.
pub fn verify_theorem10(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    pieces: &[(f64, f64)],
    ms: &[u64],
) -> Result<Vec<AsymptoticRow>> {
    require_bernoulli(model)?;
    let post = ThetaDistribution::posterior(model, prior, data)?;
    let h = Hypothesis::interval_union(pieces.to_vec())?;
    let law = hypothesis_distribution(model, prior, &h)?;
    let factor = ln_hellinger_composite_factor(model, prior, data, pieces)?.exp();
    ms.iter()
        .map(|&m| {
            let (bc, _) = bernoulli_bhattacharyya(&post, &law, Which::Tilde, m)?;
            let lead = (EIGHT_PI / m as f64).powf(0.25) * factor;
            Ok(AsymptoticRow {
                m,
                exact: 2.0 - 2.0 * bc,
                asymptotic: 2.0 - 2.0 * lead,
                ratio: bc / lead,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `|ratio - 1|` against `m` over the rows.
pub fn ratio_error_slope(rows: &[AsymptoticRow]) -> Option<f64> {
    let xs: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    log_log_slope(&xs, &ys)
}
