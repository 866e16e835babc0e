//! Losses and IMAP are invariant under `φ = θ²`, checked against a model
//! that only exposes its likelihood (no conjugate or sufficient-statistic
//! shortcuts).

use phi_core::asymptotics::imap;
use phi_core::loss::{LossContext, LossSpec, Method};
use phi_core::models::{Bernoulli, CountSummary, Hypothesis, ObservationSpace, ParametricModel, Prior, Sample};
use phi_core::selector::{ml_select, HypothesisClass};
use phi_core::Distance;

/// `p(1|φ) = √φ`.
#[derive(Debug, Clone, Copy)]
struct SqrtBernoulli;

impl ParametricModel for SqrtBernoulli {
    fn name(&self) -> &str {
        "sqrt-bernoulli"
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(vec![0.0, 1.0])
    }

    fn log_likelihood(&self, x: f64, phi: f64) -> f64 {
        let p = phi.sqrt();
        if x == 1.0 {
            p.ln()
        } else {
            (-p).ln_1p()
        }
    }
}

/// Uniform on `θ` pushed forward to `φ = θ²`.
fn pushed_prior() -> Prior {
    Prior::beta(0.5, 1.0).unwrap()
}

fn data(ones: u64, zeros: u64) -> Sample {
    CountSummary::new(ones, zeros).into()
}

fn squared(h: &Hypothesis) -> Hypothesis {
    match h {
        Hypothesis::Simple(t) => Hypothesis::Simple(t * t),
        Hypothesis::IntervalUnion(p) => Hypothesis::IntervalUnion(p.iter().map(|&(a, b)| (a * a, b * b)).collect()),
        Hypothesis::Mixture(c) => Hypothesis::Mixture(c.iter().map(|&(w, t)| (w, t * t)).collect()),
    }
}

#[test]
fn losses_do_not_depend_on_the_parametrization() {
    let hypotheses = [
        Hypothesis::Simple(0.4),
        Hypothesis::interval(0.2, 0.7).unwrap(),
        Hypothesis::mixture(vec![(0.25, 0.1), (0.75, 0.8)]).unwrap(),
    ];
    for (ones, zeros) in [(3, 2), (0, 4), (6, 1)] {
        let d = data(ones, zeros);
        let base = LossContext::new(&Bernoulli, &Prior::Uniform, &d).unwrap();
        let other = LossContext::new(&SqrtBernoulli, &pushed_prior(), &d).unwrap();
        for h in &hypotheses {
            for dist in [Distance::Absolute, Distance::Hellinger, Distance::Kl, Distance::ReverseKl, Distance::Squared] {
                for m in [1, 3] {
                    for spec in [LossSpec::hat(m, dist), LossSpec::tilde(m, dist)] {
                        let a = base.evaluate(h, &spec.with_method(Method::BruteForce)).unwrap().value;
                        let b = other.evaluate(&squared(h), &spec).unwrap().value;
                        assert!(
                            (a - b).abs() <= 1e-8 * a.abs().max(1e-3),
                            "{h} {dist} m={m} {:?}: {a} vs {b}",
                            spec.which
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn generic_model_resolves_to_brute_force() {
    let d = data(2, 1);
    let ctx = LossContext::new(&SqrtBernoulli, &pushed_prior(), &d).unwrap();
    let e = ctx.evaluate(&Hypothesis::Simple(0.25), &LossSpec::hat(2, Distance::Absolute)).unwrap();
    assert_eq!(e.method, Method::BruteForce);
    assert!(ctx
        .evaluate(&Hypothesis::Simple(0.25), &LossSpec::hat(2, Distance::Absolute).with_method(Method::SufficientStat))
        .is_err());
}

#[test]
fn imap_follows_the_reparametrization() {
    for (ones, zeros) in [(3, 2), (1, 6), (10, 10)] {
        let d = data(ones, zeros);
        let theta = imap(&Bernoulli, &Prior::Uniform, &d).unwrap().theta;
        let phi = imap(&SqrtBernoulli, &pushed_prior(), &d).unwrap().theta;
        assert!((phi - theta * theta).abs() < 1e-6, "D=({ones},{zeros}): {phi} vs {}", theta * theta);
    }
}

#[test]
fn composite_likelihood_selection_is_invariant() {
    let class = HypothesisClass::Explicit(vec![
        Hypothesis::interval(0.1, 0.3).unwrap(),
        Hypothesis::interval(0.4, 0.9).unwrap(),
        Hypothesis::Simple(0.5),
    ]);
    let HypothesisClass::Explicit(members) = &class else { unreachable!() };
    let mapped = HypothesisClass::Explicit(members.iter().map(squared).collect());
    let d = data(4, 3);
    let a = ml_select(&Bernoulli, &Prior::Uniform, &d, &class).unwrap();
    let b = ml_select(&SqrtBernoulli, &pushed_prior(), &d, &mapped).unwrap();
    assert_eq!(squared(&a.winner), b.winner);
    for ((_, x), (_, y)) in a.scores.iter().zip(&b.scores) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}
