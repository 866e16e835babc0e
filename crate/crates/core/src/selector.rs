//! Hypothesis classes and the selectors built on them: the loss minimizer
//! and, for comparison, MAP and ML.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::loss::{LossContext, LossError, LossSpec, Method};
use crate::models::{
    hypothesis_distribution, posterior_distribution, Hypothesis, ModelError, ParametricModel, Prior, Sample,
    ThetaDistribution,
};

/// Largest class `phi_select` materializes.
pub const MAX_CLASS_SIZE: u64 = 1_000_000;

/// Relative tolerance under which two losses count as tied.
pub const TIE_RELATIVE: f64 = 1e-10;
/// Absolute floor for ties: the roundoff of a vanishing loss built from
/// probabilities of order one.
pub const TIE_ABSOLUTE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("hypothesis class is empty")]
    EmptyClass,
    #[error("hypothesis class has {0} members, above the limit of {MAX_CLASS_SIZE}")]
    TooLarge(u64),
    #[error("invalid hypothesis class: {0}")]
    InvalidClass(String),
    #[error("MAP undefined across densities and masses")]
    MixedKinds,
    #[error("evaluating {hypothesis}: {source}")]
    Member {
        hypothesis: String,
        #[source]
        source: LossError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, SelectError>;

/// A class of candidate hypotheses over the parameter domain `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisClass {
    Explicit(Vec<Hypothesis>),
    /// `resolution` equally spaced points including both ends of the domain.
    PointGrid(u64),
    /// Intervals `[c - w/2, c + w/2]` clipped to the domain, for
    /// `centers` equally spaced midpoints and `widths` linearly spaced widths
    /// from `min_width` to the domain length.
    IntervalGrid {
        centers: u64,
        widths: u64,
        min_width: f64,
    },
    /// Equal-weight mixtures of `l` points drawn with repetition from a
    /// point grid of the given resolution.
    MixtureGrid { l: u64, points: u64 },
    /// Every interval of positive length inside the domain. Only the moment
    /// fitting selector handles this class; it cannot be materialized.
    Intervals,
}

impl HypothesisClass {
    /// Parses `a|b|c` into an explicit class.
    pub fn parse_explicit(s: &str) -> std::result::Result<Self, crate::models::HypothesisParseError> {
        s.split('|')
            .map(|h| h.parse())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Self::Explicit)
    }

    /// Number of members without materializing them (`None` when unbounded).
    pub fn size(&self) -> Option<u64> {
        match self {
            Self::Explicit(v) => Some(v.len() as u64),
            Self::PointGrid(n) => Some(*n),
            Self::IntervalGrid { centers, widths, .. } => centers.checked_mul(*widths),
            Self::MixtureGrid { l, points } => multiset_count(*points, *l),
            Self::Intervals => None,
        }
    }

    pub fn materialize(&self, domain: (f64, f64)) -> Result<Vec<Hypothesis>> {
        match self.size() {
            None => {
                return Err(SelectError::InvalidClass(
                    "the class of all intervals cannot be enumerated".into(),
                ))
            }
            Some(0) => return Err(SelectError::EmptyClass),
            Some(n) if n > MAX_CLASS_SIZE => return Err(SelectError::TooLarge(n)),
            Some(_) => {}
        }
        let (lo, hi) = domain;
        let len = hi - lo;
        let members = match self {
            Self::Explicit(v) => v.clone(),
            Self::PointGrid(n) => grid(lo, hi, *n).into_iter().map(Hypothesis::Simple).collect(),
            Self::IntervalGrid {
                centers,
                widths,
                min_width,
            } => {
                if !(*min_width > 0.0 && *min_width <= len) {
                    return Err(SelectError::InvalidClass(format!(
                        "minimum width {min_width} outside (0, {len}]"
                    )));
                }
                let mut out = Vec::new();
                for i in 0..*centers {
                    let c = lo + (i as f64 + 0.5) / *centers as f64 * len;
                    for w in grid(*min_width, len, *widths) {
                        let (a, b) = ((c - 0.5 * w).max(lo), (c + 0.5 * w).min(hi));
                        let h = Hypothesis::interval(a, b)?;
                        if !out.contains(&h) {
                            out.push(h);
                        }
                    }
                }
                out
            }
            Self::MixtureGrid { l, points } => {
                if *l == 0 {
                    return Err(SelectError::EmptyClass);
                }
                let pts = grid(lo, hi, *points);
                let mut out = Vec::new();
                let mut idx = vec![0usize; *l as usize];
                loop {
                    out.push(Hypothesis::uniform_mixture(&idx.iter().map(|&i| pts[i]).collect::<Vec<_>>())?);
                    // next non-decreasing index tuple
                    let Some(pos) = idx.iter().rposition(|&i| i + 1 < pts.len()) else {
                        break;
                    };
                    let v = idx[pos] + 1;
                    idx[pos..].iter_mut().for_each(|i| *i = v);
                }
                out
            }
            Self::Intervals => unreachable!(),
        };
        if members.is_empty() {
            return Err(SelectError::EmptyClass);
        }
        Ok(members)
    }
}

impl fmt::Display for HypothesisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(|h| h.to_string()).collect();
                f.write_str(&parts.join("|"))
            }
            Self::PointGrid(n) => write!(f, "points:{n}"),
            Self::IntervalGrid {
                centers,
                widths,
                min_width,
            } => write!(f, "intervals:{centers},{widths},{min_width}"),
            Self::MixtureGrid { l, points } => write!(f, "mixtures:{l},{points}"),
            Self::Intervals => f.write_str("all-intervals"),
        }
    }
}

fn grid(lo: f64, hi: f64, n: u64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `C(n + l - 1, l)`, or `None` on overflow.
fn multiset_count(n: u64, l: u64) -> Option<u64> {
    if n == 0 {
        return Some(0);
    }
    let mut c: u128 = 1;
    for i in 0..l as u128 {
        c = c * (n as u128 + i) / (i + 1);
        if c > u64::MAX as u128 {
            return None;
        }
    }
    Some(c as u64)
}

/// Index of the best score (first on ties) and every index tied with it.
fn best_with_ties(scores: &[f64], minimize: bool) -> (usize, Vec<usize>) {
    let key = |v: f64| if minimize { v } else { -v };
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if key(v) < key(scores[best]) {
            best = i;
        }
    }
    let b = scores[best];
    let ties = scores
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == b || (v - b).abs() <= TIE_RELATIVE * b.abs() + TIE_ABSOLUTE)
        .map(|(i, _)| i)
        .collect();
    (best, ties)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub winner: Hypothesis,
    pub winner_loss: f64,
    /// Every member with its loss, in materialization order.
    pub losses: Vec<(Hypothesis, f64)>,
    /// Members tied with the winner, the winner included.
    pub ties: Vec<Hypothesis>,
    pub method: Method,
}

/// The member of `class` with the smallest loss. Members are evaluated in
/// parallel; ties go to the first member in materialization order.
pub fn phi_select(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    class: &HypothesisClass,
    spec: &LossSpec,
) -> Result<SelectionReport> {
    let members = class.materialize(model.domain())?;
    let ctx = LossContext::new(model, prior, data).map_err(|e| SelectError::Member {
        hypothesis: "posterior".into(),
        source: e,
    })?;
    select_members(&ctx, members, spec)
}

/// [`phi_select`] over an already materialized list, sharing a context.
pub fn select_members(ctx: &LossContext<'_>, members: Vec<Hypothesis>, spec: &LossSpec) -> Result<SelectionReport> {
    if members.is_empty() {
        return Err(SelectError::EmptyClass);
    }
    let values: Vec<f64> = members
        .par_iter()
        .map(|h| {
            ctx.evaluate(h, spec)
                .map(|e| e.value)
                .and_then(|v| {
                    if v.is_nan() {
                        Err(LossError::InvalidSpec("loss evaluated to NaN".into()))
                    } else {
                        Ok(v)
                    }
                })
                .map_err(|source| SelectError::Member {
                    hypothesis: h.to_string(),
                    source,
                })
        })
        .collect::<Result<_>>()?;
    let (best, ties) = best_with_ties(&values, true);
    Ok(SelectionReport {
        winner: members[best].clone(),
        winner_loss: values[best],
        ties: ties.iter().map(|&i| members[i].clone()).collect(),
        losses: members.into_iter().zip(values).collect(),
        method: ctx.resolve_method(spec),
    })
}

/// Outcome of an argmax selector; `scores` are on log scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgmaxReport {
    pub winner: Hypothesis,
    pub scores: Vec<(Hypothesis, f64)>,
    pub ties: Vec<Hypothesis>,
}

fn argmax_report(members: Vec<Hypothesis>, scores: Vec<f64>) -> ArgmaxReport {
    let (best, ties) = best_with_ties(&scores, false);
    ArgmaxReport {
        winner: members[best].clone(),
        ties: ties.iter().map(|&i| members[i].clone()).collect(),
        scores: members.into_iter().zip(scores).collect(),
    }
}

fn ln_posterior_score(h: &Hypothesis, post: &ThetaDistribution) -> Result<f64> {
    Ok(match h {
        Hypothesis::Simple(t) => post.ln_density(*t).unwrap_or(f64::NEG_INFINITY),
        Hypothesis::Mixture(c) => {
            let parts: Vec<f64> = c
                .iter()
                .map(|&(w, t)| w.ln() + post.ln_density(t).unwrap_or(f64::NEG_INFINITY))
                .collect();
            crate::numerics::ln_sum_exp(&parts)
        }
        Hypothesis::IntervalUnion(p) => post.ln_mass(p)?,
    })
}

/// Posterior MAP within `class`: points (and point mixtures) compare
/// posterior densities, interval unions compare posterior masses. A class
/// mixing both kinds is rejected.
pub fn map_select(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    class: &HypothesisClass,
) -> Result<ArgmaxReport> {
    let members = class.materialize(model.domain())?;
    let composite = members.iter().filter(|h| h.is_interval()).count();
    if composite != 0 && composite != members.len() {
        return Err(SelectError::MixedKinds);
    }
    let post = posterior_distribution(model, prior, data)?;
    let scores = members
        .iter()
        .map(|h| ln_posterior_score(h, &post))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_report(members, scores))
}

/// MAP by posterior mass `P[Θ|D]` for every member, points included. Under
/// a prior with a density, points carry no mass, so a composite member
/// always wins against them.
pub fn map_select_by_mass(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    class: &HypothesisClass,
) -> Result<ArgmaxReport> {
    let members = class.materialize(model.domain())?;
    let post = posterior_distribution(model, prior, data)?;
    let scores = members
        .iter()
        .map(|h| match h {
            Hypothesis::IntervalUnion(p) => Ok(post.ln_mass(p)?),
            _ if post.is_atomic() => ln_posterior_score(h, &post),
            _ => Ok(f64::NEG_INFINITY),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_report(members, scores))
}

/// Maximum composite likelihood `p(D|Θ)` within `class`.
pub fn ml_select(
    model: &dyn ParametricModel,
    prior: &Prior,
    data: &Sample,
    class: &HypothesisClass,
) -> Result<ArgmaxReport> {
    let members = class.materialize(model.domain())?;
    let scores = members
        .par_iter()
        .map(|h| {
            let law = hypothesis_distribution(model, prior, h)?;
            Ok(law.ln_expect_likelihood(model, data)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_report(members, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::DistanceKind;
    use crate::models::{Bernoulli, CountSummary};

    fn data(ones: u64, zeros: u64) -> Sample {
        CountSummary::new(ones, zeros).into()
    }

    fn fair_vague() -> HypothesisClass {
        HypothesisClass::parse_explicit("point:0.5|interval:0,1").unwrap()
    }

    fn abs_hat(m: u64) -> LossSpec {
        LossSpec::hat(m, DistanceKind::Absolute)
    }

    #[test]
    fn table_verdicts() {
        let u = Prior::Uniform;
        let r = phi_select(&Bernoulli, &u, &data(2, 2), &fair_vague(), &abs_hat(2)).unwrap();
        assert_eq!(r.winner, Hypothesis::Simple(0.5));
        let r = phi_select(&Bernoulli, &u, &data(1, 1), &fair_vague(), &abs_hat(2)).unwrap();
        assert!(r.winner.is_interval());
        let r = phi_select(&Bernoulli, &u, &data(0, 0), &fair_vague(), &abs_hat(2)).unwrap();
        assert!(r.winner.is_interval());
        assert_eq!(r.winner_loss, 0.0);
        assert_eq!(r.ties.len(), 1);
        assert_eq!(r.losses.len(), 2);
    }

    #[test]
    fn regime_flip() {
        let u = Prior::Uniform;
        let r = phi_select(&Bernoulli, &u, &data(20, 20), &fair_vague(), &abs_hat(2)).unwrap();
        assert_eq!(r.winner, Hypothesis::Simple(0.5));
        let r = phi_select(&Bernoulli, &u, &data(1, 1), &fair_vague(), &abs_hat(12)).unwrap();
        assert!(r.winner.is_interval());
    }

    #[test]
    fn point_grid_finds_laplace_rule() {
        let spec = LossSpec::tilde(1, DistanceKind::ReverseKl);
        let r = phi_select(&Bernoulli, &Prior::Uniform, &data(3, 1), &HypothesisClass::PointGrid(10_001), &spec)
            .unwrap();
        let Hypothesis::Simple(t) = r.winner else { panic!() };
        assert!((t - 2.0 / 3.0).abs() <= 1e-4, "{t}");
    }

    #[test]
    fn single_member_and_empty_classes() {
        let one = HypothesisClass::parse_explicit("point:0.5").unwrap();
        let r = phi_select(&Bernoulli, &Prior::Uniform, &data(2, 2), &one, &abs_hat(2)).unwrap();
        assert_eq!(r.winner, Hypothesis::Simple(0.5));
        let empty = HypothesisClass::Explicit(vec![]);
        assert_eq!(
            phi_select(&Bernoulli, &Prior::Uniform, &data(2, 2), &empty, &abs_hat(2)),
            Err(SelectError::EmptyClass)
        );
        assert!(matches!(
            HypothesisClass::PointGrid(2_000_000).materialize((0.0, 1.0)),
            Err(SelectError::TooLarge(_))
        ));
    }

    #[test]
    fn grids_materialize() {
        let pts = HypothesisClass::PointGrid(5).materialize((0.0, 1.0)).unwrap();
        assert_eq!(pts[4], Hypothesis::Simple(1.0));
        assert_eq!(pts[1], Hypothesis::Simple(0.25));
        let ivs = HypothesisClass::IntervalGrid { centers: 4, widths: 3, min_width: 0.1 }
            .materialize((0.0, 1.0))
            .unwrap();
        assert!(ivs.iter().all(|h| h.is_interval() && h.length() > 0.0));
        let mix = HypothesisClass::MixtureGrid { l: 2, points: 3 };
        assert_eq!(mix.size(), Some(6));
        assert_eq!(mix.materialize((0.0, 1.0)).unwrap().len(), 6);
        assert!(HypothesisClass::Intervals.materialize((0.0, 1.0)).is_err());
    }

    #[test]
    fn map_and_ml() {
        let u = Prior::Uniform;
        assert_eq!(map_select(&Bernoulli, &u, &data(3, 3), &fair_vague()), Err(SelectError::MixedKinds));
        for d in [data(0, 0), data(5, 5), data(40, 40)] {
            let r = map_select_by_mass(&Bernoulli, &u, &d, &fair_vague()).unwrap();
            assert!(r.winner.is_interval());
        }
        let nested = HypothesisClass::parse_explicit("interval:0.3,0.6|interval:0.2,0.7").unwrap();
        let r = map_select(&Bernoulli, &u, &data(4, 5), &nested).unwrap();
        assert_eq!(r.winner, Hypothesis::interval(0.2, 0.7).unwrap());
        let r = ml_select(&Bernoulli, &u, &data(3, 3), &fair_vague()).unwrap();
        assert_eq!(r.winner, Hypothesis::Simple(0.5));
        assert_eq!(r.ties.len(), 1);
        for d in [data(0, 0), data(1, 0)] {
            let r = ml_select(&Bernoulli, &u, &d, &fair_vague()).unwrap();
            assert_eq!(r.ties.len(), 2, "{:?}", r.scores);
        }
    }

    #[test]
    fn ml_never_prefers_added_low_likelihood_mass() {
        let u = Prior::Uniform;
        let class = HypothesisClass::parse_explicit("interval:0.6,0.8|interval:0.6,0.9|interval:0.1,0.8").unwrap();
        let r = ml_select(&Bernoulli, &u, &data(7, 3), &class).unwrap();
        assert_eq!(r.winner, Hypothesis::interval(0.6, 0.8).unwrap());
    }
}
