use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelError, Result};

/// A simple, composite or mixture hypothesis about the model parameter.
///
/// Literals: `point:0.5`, `interval:0.2,0.6`, `interval:0.1,0.2;0.5,0.6`
/// for unions, and `mixture:0.3@0.2,0.7@0.9` (`weight@point`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Simple(f64),
    /// Sorted, pairwise disjoint, non-degenerate intervals.
    IntervalUnion(Vec<(f64, f64)>),
    /// `(weight, point)` pairs; weights sum to one.
    Mixture(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("bad hypothesis '{literal}': {reason}")]
pub struct HypothesisParseError {
    pub literal: String,
    pub reason: String,
}

impl Hypothesis {
    pub fn point(theta: f64) -> Result<Self> {
        if theta.is_finite() {
            Ok(Self::Simple(theta))
        } else {
            Err(ModelError::InvalidHypothesis(format!("point {theta} is not finite")))
        }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::interval_union(vec![(a, b)])
    }

    pub fn interval_union(mut pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(ModelError::InvalidHypothesis("empty interval union".into()));
        }
        for &(a, b) in &pieces {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(ModelError::InvalidHypothesis(format!("interval [{a}, {b}] is empty")));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        if let Some(w) = pieces.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(ModelError::InvalidHypothesis(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        Ok(Self::IntervalUnion(pieces))
    }

    /// Mixture of points with the given weights, normalized to sum to one.
    pub fn mixture(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(ModelError::InvalidHypothesis("mixture without points".into()));
        }
        if components
            .iter()
            .any(|&(w, t)| !(w >= 0.0 && w.is_finite() && t.is_finite()))
        {
            return Err(ModelError::InvalidHypothesis("mixture weights must be finite and >= 0".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if !(total > 0.0) {
            return Err(ModelError::InvalidHypothesis("mixture weights sum to zero".into()));
        }
        Ok(Self::Mixture(components.into_iter().map(|(w, t)| (w / total, t)).collect()))
    }

    /// Equal-weight mixture.
    pub fn uniform_mixture(points: &[f64]) -> Result<Self> {
        Self::mixture(points.iter().map(|&t| (1.0, t)).collect())
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, Self::Simple(_))
    }

    /// Composite hypotheses are the ones with a (restricted) prior mass.
    pub fn is_interval(&self) -> bool {
        matches!(self, Self::IntervalUnion(_))
    }

    /// Total length of an interval union.
    pub fn length(&self) -> f64 {
        match self {
            Self::IntervalUnion(p) => p.iter().map(|&(a, b)| b - a).sum(),
            _ => 0.0,
        }
    }

    /// The hypothesis under the relabeling `θ -> 1 - θ`.
    pub fn mirrored(&self) -> Self {
        match self {
            Self::Simple(t) => Self::Simple(1.0 - t),
            Self::IntervalUnion(p) => {
                let mut q: Vec<_> = p.iter().map(|&(a, b)| (1.0 - b, 1.0 - a)).collect();
                q.reverse();
                Self::IntervalUnion(q)
            }
            Self::Mixture(c) => Self::Mixture(c.iter().map(|&(w, t)| (w, 1.0 - t)).collect()),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Simple(t) => write!(f, "point:{t}"),
            Self::IntervalUnion(p) => {
                f.write_str("interval:")?;
                for (i, (a, b)) in p.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{a},{b}")?;
                }
                Ok(())
            }
            Self::Mixture(c) => {
                f.write_str("mixture:")?;
                for (i, (w, t)) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}@{t}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Hypothesis {
    type Err = HypothesisParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let fail = |reason: String| HypothesisParseError {
            literal: s.to_string(),
            reason,
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| fail(format!("'{}' is not a number", v.trim())))
        };
        let (kind, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| fail("expected point:, interval: or mixture:".into()))?;
        let built = match kind.trim().to_ascii_lowercase().as_str() {
            "point" => Self::point(num(body)?),
            "interval" => {
                let mut pieces = Vec::new();
                for part in body.split(';') {
                    let (a, b) = part
                        .split_once(',')
                        .ok_or_else(|| fail(format!("interval '{part}' needs two endpoints")))?;
                    pieces.push((num(a)?, num(b)?));
                }
                Self::interval_union(pieces)
            }
            "mixture" => {
                let mut comps = Vec::new();
                for part in body.split(',') {
                    let (w, t) = part
                        .split_once('@')
                        .ok_or_else(|| fail(format!("mixture component '{part}' is not weight@point")))?;
                    comps.push((num(w)?, num(t)?));
                }
                Self::mixture(comps)
            }
            other => return Err(fail(format!("unknown hypothesis kind '{other}'"))),
        };
        built.map_err(|e| fail(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        for lit in [
            "point:0.5",
            "interval:0.2,0.6",
            "interval:0.1,0.2;0.5,0.6",
            "mixture:0.3@0.2,0.7@0.9",
        ] {
            let h: Hypothesis = lit.parse().unwrap();
            assert_eq!(h.to_string(), lit);
            assert_eq!(h.to_string().parse::<Hypothesis>().unwrap(), h);
        }
    }

    #[test]
    fn mixture_weights_are_normalized() {
        let h: Hypothesis = "mixture:1@0,3@1".parse().unwrap();
        assert_eq!(h, Hypothesis::Mixture(vec![(0.25, 0.0), (0.75, 1.0)]));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "point",
            "point:x",
            "interval:0.6,0.2",
            "interval:0.1,0.5;0.4,0.6",
            "mixture:0@0.5",
            "mixture:0.5",
            "ball:0.5",
        ] {
            assert!(bad.parse::<Hypothesis>().is_err(), "{bad}");
        }
        let touching: Hypothesis = "interval:0.1,0.2;0.2,0.3".parse().unwrap();
        assert!((touching.length() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mirror_is_an_involution() {
        let h: Hypothesis = "interval:0.1,0.2;0.5,0.75".parse().unwrap();
        assert_eq!(h.mirrored(), Hypothesis::IntervalUnion(vec![(0.25, 0.5), (0.8, 0.9)]));
        let mixture = Hypothesis::uniform_mixture(&[0.0, 0.25]).unwrap();
        assert_eq!(mixture.mirrored().mirrored(), mixture);
    }
}
