//! Parsing of data, hypothesis classes and exact hypothesis literals.

use phi_core::Rational as BigRational;
use phi_core::models::exact::ExactHypothesis;
use phi_core::models::{CountSummary, Hypothesis};
use phi_core::selector::HypothesisClass;

/// A malformed command-line value; reported with exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, ParseError>;

/// `0101`-style observations or `n1=2,n0=2` counts; the empty string is
/// empty data.
pub fn parse_data(s: &str) -> Result<CountSummary> {
    let t = s.trim();
    if t.contains('=') {
        return parse_counts(t);
    }
    CountSummary::from_bits(t).map_err(|(i, ch)| {
        ParseError(format!("data '{t}': unexpected '{ch}' at position {i} (expected 0, 1 or n1=..,n0=..)"))
    })
}

fn parse_counts(s: &str) -> Result<CountSummary> {
    let (mut ones, mut zeros) = (None, None);
    let mut offset = 0;
    for part in s.split(',') {
        let at = offset;
        offset += part.len() + 1;
        let bad = |why: &str| ParseError(format!("counts '{s}': {why} in '{part}' at position {at}"));
        let (key, value) = part.split_once('=').ok_or_else(|| bad("missing '='"))?;
        let n: u64 = value.trim().parse().map_err(|_| bad("not a count"))?;
        let slot = match key.trim() {
            "n1" => &mut ones,
            "n0" => &mut zeros,
            _ => return Err(bad("unknown key (expected n1 or n0)")),
        };
        if slot.replace(n).is_some() {
            return Err(bad("repeated key"));
        }
    }
    Ok(CountSummary::new(ones.unwrap_or(0), zeros.unwrap_or(0)))
}

/// Combines `--data` and `--counts`, which must agree when both are given.
pub fn resolve_data(data: Option<&str>, counts: Option<&str>) -> Result<CountSummary> {
    let a = data.map(parse_data).transpose()?;
    let b = counts.map(parse_counts).transpose()?;
    match (a, b) {
        (Some(a), Some(b)) if a != b => Err(ParseError(format!(
            "--data gives n1={},n0={} but --counts gives n1={},n0={}",
            a.ones, a.zeros, b.ones, b.zeros
        ))),
        (Some(a), _) => Ok(a),
        (None, Some(b)) => Ok(b),
        (None, None) => Ok(CountSummary::default()),
    }
}

pub fn parse_hypothesis(s: &str) -> Result<Hypothesis> {
    s.parse().map_err(|e: phi_core::models::HypothesisParseError| ParseError(e.to_string()))
}

/// `a|b|c` lists, or one of the generated classes `points:N`,
/// `intervals:CENTERS,WIDTHS,MIN_WIDTH`, `mixtures:L,N` and `all-intervals`.
pub fn parse_class(s: &str) -> Result<HypothesisClass> {
    let t = s.trim();
    let count = |v: &str| {
        v.trim()
            .parse::<u64>()
            .map_err(|_| ParseError(format!("class '{t}': '{v}' is not a count")))
    };
    let args = |body: &str, n: usize| -> Result<Vec<String>> {
        let parts: Vec<String> = body.split(',').map(|p| p.trim().to_string()).collect();
        if parts.len() == n {
            Ok(parts)
        } else {
            Err(ParseError(format!("class '{t}': expected {n} comma-separated values")))
        }
    };
    if t == "all-intervals" {
        return Ok(HypothesisClass::Intervals);
    }
    if let Some(body) = t.strip_prefix("points:") {
        return Ok(HypothesisClass::PointGrid(count(body)?));
    }
    if let Some(body) = t.strip_prefix("intervals:") {
        let a = args(body, 3)?;
        let min_width: f64 = a[2]
            .parse()
            .map_err(|_| ParseError(format!("class '{t}': '{}' is not a width", a[2])))?;
        return Ok(HypothesisClass::IntervalGrid {
            centers: count(&a[0])?,
            widths: count(&a[1])?,
            min_width,
        });
    }
    if let Some(body) = t.strip_prefix("mixtures:") {
        let a = args(body, 2)?;
        return Ok(HypothesisClass::MixtureGrid {
            l: count(&a[0])?,
            points: count(&a[1])?,
        });
    }
    let mut members = Vec::new();
    for (i, part) in t.split('|').enumerate() {
        let h = parse_hypothesis(part).map_err(|e| ParseError(format!("class member {}: {e}", i + 1)))?;
        members.push(h);
    }
    Ok(HypothesisClass::Explicit(members))
}

/// Decimal (`0.25`, `1e-2`) or fraction (`1/3`) literal as an exact
/// rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    phi_core::scalar::parse_rational(s)
        .ok_or_else(|| ParseError(format!("'{}' is not an exact number (use a decimal or p/q)", s.trim())))
}

/// `point:p` or a single `interval:a,b` with exact endpoints in `[0, 1]`.
pub fn parse_exact_hypothesis(s: &str) -> Result<ExactHypothesis<BigRational>> {
    let t = s.trim();
    let (kind, body) = t
        .split_once(':')
        .ok_or_else(|| ParseError(format!("hypothesis '{t}': expected point: or interval:")))?;
    let unit = |v: BigRational| {
        let zero = BigRational::from_integer(0.into());
        let one = BigRational::from_integer(1.into());
        if v >= zero && v <= one {
            Ok(v)
        } else {
            Err(ParseError(format!("hypothesis '{t}': {v} lies outside [0, 1]")))
        }
    };
    match kind.trim() {
        "point" => Ok(ExactHypothesis::Point(unit(parse_rational(body)?)?)),
        "interval" => {
            let (a, b) = body
                .split_once(',')
                .filter(|_| !body.contains(';'))
                .ok_or_else(|| ParseError(format!("hypothesis '{t}': exact mode takes a single interval a,b")))?;
            let (a, b) = (unit(parse_rational(a)?)?, unit(parse_rational(b)?)?);
            if a >= b {
                return Err(ParseError(format!("hypothesis '{t}': empty interval")));
            }
            Ok(ExactHypothesis::Interval(a, b))
        }
        other => Err(ParseError(format!(
            "hypothesis '{t}': exact mode supports point and interval, not '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_forms() {
        assert_eq!(parse_data("0101").unwrap(), CountSummary::new(2, 2));
        assert_eq!(parse_data("").unwrap(), CountSummary::new(0, 0));
        assert_eq!(parse_data("n1=7,n0=3").unwrap(), CountSummary::new(7, 3));
        assert_eq!(parse_data("n0=3, n1=7").unwrap(), CountSummary::new(7, 3));
        let e = parse_data("01x1").unwrap_err();
        assert!(e.0.contains("'x' at position 2"), "{e}");
        let e = parse_data("n1=2,nx=3").unwrap_err();
        assert!(e.0.contains("'nx=3' at position 5"), "{e}");
        assert!(parse_data("n1=2,n1=3").is_err());
    }

    #[test]
    fn data_and_counts_must_agree() {
        assert_eq!(resolve_data(Some("0101"), Some("n1=2,n0=2")).unwrap(), CountSummary::new(2, 2));
        assert!(resolve_data(Some("011"), Some("n1=1,n0=2")).is_err());
        assert_eq!(resolve_data(None, None).unwrap(), CountSummary::new(0, 0));
    }

    #[test]
    fn classes() {
        assert_eq!(parse_class("points:5").unwrap(), HypothesisClass::PointGrid(5));
        assert_eq!(parse_class("all-intervals").unwrap(), HypothesisClass::Intervals);
        let c = parse_class("point:0.5|interval:0,1").unwrap();
        assert_eq!(c.to_string(), "point:0.5|interval:0,1");
        let e = parse_class("point:0.5|pint:1").unwrap_err();
        assert!(e.0.starts_with("class member 2"), "{e}");
        assert!(parse_class("intervals:3,4").is_err());
    }

    #[test]
    fn exact_literals() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(parse_rational("0.5").unwrap(), half);
        assert_eq!(parse_rational("1/2").unwrap(), half);
        assert_eq!(parse_rational("1").unwrap(), BigRational::from_integer(1.into()));
        assert_eq!(parse_rational("5e-1").unwrap(), half);
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(parse_exact_hypothesis("point:0.5").unwrap(), ExactHypothesis::Point(half));
        assert!(parse_exact_hypothesis("interval:0.1,0.2;0.3,0.4").is_err());
        assert!(parse_exact_hypothesis("interval:0.6,0.2").is_err());
        assert!(parse_exact_hypothesis("point:3/2").is_err());
    }
}
