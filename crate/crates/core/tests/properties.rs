use phi_core::asymptotics::ln_mlxmap_objective;
use phi_core::loss::{LossContext, LossSpec, Method, Which};
use phi_core::models::{Bernoulli, CountSummary, Hypothesis, Prior, Sample};
use phi_core::selector::{phi_select, HypothesisClass};
use phi_core::smf::{smf_select, Survivors, SmfTolerances};
use phi_core::Distance;
use proptest::prelude::*;

fn hypothesis() -> impl Strategy<Value = Hypothesis> {
    prop_oneof![
        (0.01..0.99f64).prop_map(Hypothesis::Simple),
        (0.0..0.9f64, 0.02..1.0f64).prop_map(|(a, w)| Hypothesis::interval(a, (a + w).min(1.0)).unwrap()),
        (0.05..0.95f64, 0.01..0.99f64, 0.01..0.99f64)
            .prop_map(|(w, s, t)| Hypothesis::mixture(vec![(w, s), (1.0 - w, t)]).unwrap()),
    ]
}

fn distance() -> impl Strategy<Value = Distance> {
    (0usize..7, 0.1..1.0f64).prop_map(|(i, alpha)| Distance::catalog(alpha)[i])
}

fn which() -> impl Strategy<Value = Which> {
    prop_oneof![Just(Which::Hat), Just(Which::Tilde)]
}

fn sample(ones: u64, zeros: u64) -> Sample {
    CountSummary::new(ones, zeros).into()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabeling_zeros_and_ones_mirrors_the_loss(
        ones in 0u64..12, zeros in 0u64..12, h in hypothesis(), d in distance(), w in which(), m in 1u64..5,
    ) {
        let spec = LossSpec::new(w, m, d);
        let a = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(ones, zeros)).unwrap().evaluate(&h, &spec).unwrap().value;
        let b = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(zeros, ones)).unwrap().evaluate(&h.mirrored(), &spec).unwrap().value;
        prop_assert!(close(a, b, 1e-9), "{} vs {}", a, b);
    }

    #[test]
    fn losses_are_non_negative(
        ones in 0u64..12, zeros in 0u64..12, h in hypothesis(), d in distance(), w in which(), m in 1u64..5,
    ) {
        let v = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(ones, zeros)).unwrap()
            .evaluate(&h, &LossSpec::new(w, m, d)).unwrap().value;
        prop_assert!(v >= -1e-12, "{}", v);
    }

    #[test]
    fn sufficient_statistic_matches_enumeration(
        ones in 0u64..10, zeros in 0u64..10, h in hypothesis(), d in distance(), w in which(), m in 1u64..7,
    ) {
        let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(ones, zeros)).unwrap();
        let spec = LossSpec::new(w, m, d);
        let a = ctx.evaluate(&h, &spec.with_method(Method::SufficientStat)).unwrap().value;
        let b = ctx.evaluate(&h, &spec.with_method(Method::BruteForce)).unwrap().value;
        prop_assert!(close(a, b, 1e-10), "{} vs {}", a, b);
    }

    #[test]
    fn hat_minus_tilde_is_the_same_for_every_hypothesis(
        ones in 0u64..10, zeros in 0u64..10, g in hypothesis(), h in hypothesis(), m in 1u64..5, rkl in any::<bool>(),
    ) {
        let d = if rkl { Distance::ReverseKl } else { Distance::Squared };
        let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(ones, zeros)).unwrap();
        let gap = |x: &Hypothesis| {
            ctx.evaluate(x, &LossSpec::hat(m, d)).unwrap().value - ctx.evaluate(x, &LossSpec::tilde(m, d)).unwrap().value
        };
        let (a, b) = (gap(&g), gap(&h));
        prop_assume!(a.is_finite() && b.is_finite());
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn hellinger_closed_form_matches_the_statistic_sum(
        ones in 0u64..10, zeros in 0u64..10, h in hypothesis(), m in 1u64..8,
    ) {
        let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &sample(ones, zeros)).unwrap();
        let spec = LossSpec::tilde(m, Distance::Hellinger);
        let a = ctx.evaluate(&h, &spec.with_method(Method::HellingerClosedForm)).unwrap().value;
        let b = ctx.evaluate(&h, &spec.with_method(Method::SufficientStat)).unwrap().value;
        prop_assert!(close(a, b, 1e-9), "{} vs {}", a, b);
    }

    #[test]
    fn mlxmap_objective_mirrors_with_the_data(
        ones in 0u64..20, zeros in 0u64..20, a in 0.0..0.95f64, w in 0.01..1.0f64, pa in 0.5..4.0f64, pb in 0.5..4.0f64,
    ) {
        let b = (a + w).min(1.0);
        let left = ln_mlxmap_objective(&Bernoulli, &Prior::beta(pa, pb).unwrap(), &sample(ones, zeros), &[(a, b)]).unwrap();
        let right = ln_mlxmap_objective(&Bernoulli, &Prior::beta(pb, pa).unwrap(), &sample(zeros, ones), &[(1.0 - b, 1.0 - a)]).unwrap();
        prop_assert!((left - right).abs() <= 1e-9 * left.abs().max(1.0), "{} vs {}", left, right);
    }

    #[test]
    fn ties_go_to_the_first_member(
        ones in 0u64..10, zeros in 0u64..10, g in hypothesis(), h in hypothesis(), d in distance(), m in 1u64..4,
    ) {
        let class = HypothesisClass::Explicit(vec![g.clone(), h.clone(), g.clone()]);
        let r = phi_select(&Bernoulli, &Prior::Uniform, &sample(ones, zeros), &class, &LossSpec::hat(m, d)).unwrap();
        prop_assert!(r.ties.contains(&r.winner));
        let twins = r.ties.iter().filter(|x| **x == g).count();
        if r.winner == g {
            prop_assert_eq!(twins, 2);
        } else {
            prop_assert_eq!(&r.winner, &h);
        }
        let min = r.losses.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.winner_loss, min);
    }

    #[test]
    fn moment_fitting_levels_are_nested(
        ones in 0u64..30, zeros in 0u64..30, members in prop::collection::vec(hypothesis(), 1..8),
    ) {
        let class = HypothesisClass::Explicit(members.clone());
        let trace = smf_select(&Bernoulli, &Prior::Uniform, &sample(ones, zeros), &class, 5, SmfTolerances::default()).unwrap();
        let mut previous = members;
        for level in &trace.levels {
            let Survivors::Members(kept) = &level.survivors else { panic!("explicit classes keep members") };
            prop_assert!(!kept.is_empty());
            for (h, fitted) in kept {
                prop_assert!(previous.contains(h));
                let residual = (fitted - level.target).abs();
                prop_assert!(residual - level.residual <= 1e-9 * level.target.abs().max(1.0));
            }
            previous = kept.iter().map(|x| x.0.clone()).collect();
        }
        prop_assert!(trace.selected.iter().all(|h| previous.contains(h)));
        if let Some(k) = trace.k_star {
            prop_assert_eq!(trace.levels.len(), k);
        }
    }
}
