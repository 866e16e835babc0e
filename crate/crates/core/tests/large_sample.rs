use phi_core::asymptotics::{level_set_search, ln_hellinger_composite_factor, ln_mlxmap_objective, LevelObjective};
use phi_core::loss::LossSpec;
use phi_core::models::{Bernoulli, Hypothesis, Prior, Sample};
use phi_core::selector::{phi_select, HypothesisClass};
use phi_core::smf::{posterior_moment_targets, smf_select, synthetic_counts, SmfTolerances};
use phi_core::Distance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn centered(center: f64, half: f64) -> Hypothesis {
    Hypothesis::interval(center - half, center + half).unwrap()
}

#[test]
fn moment_fitting_winner_is_independent_of_m_and_d() {
    let data: Sample = synthetic_counts(0.3, 10_000, 7).into();
    let targets = posterior_moment_targets(&Bernoulli, &Prior::Uniform, &data, 2).unwrap();
    let (mean, var) = (targets[0], targets[1]);
    // Three members match the mean; among them the variances are 0,
    // 0.81 μ₂ and 4 μ₂. The last member misses the mean.
    let half = (3.0 * var).sqrt();
    let class = HypothesisClass::Explicit(vec![
        Hypothesis::Simple(mean),
        centered(mean, 2.0 * half),
        centered(mean, 0.9 * half),
        Hypothesis::Simple(mean + 0.003),
    ]);
    let trace = smf_select(&Bernoulli, &Prior::Uniform, &data, &class, 4, SmfTolerances::default()).unwrap();
    assert_eq!(trace.k_star, Some(2));
    let winner = trace.winner().unwrap().clone();
    assert_eq!(winner, centered(mean, 0.9 * half));
    for d in Distance::catalog(0.5) {
        for m in [1, 2, 4] {
            let r = phi_select(&Bernoulli, &Prior::Uniform, &data, &class, &LossSpec::hat(m, d)).unwrap();
            if m == 1 {
                // One observation sees only the mean, so the mean-matching
                // members tie exactly.
                assert!(r.ties.contains(&winner), "{d} m=1: {:?}", r.losses);
                assert_eq!(r.ties.len(), 3, "{d} m=1: {:?}", r.losses);
            } else {
                assert_eq!(r.winner, winner, "{d} m={m}: {:?}", r.losses);
            }
        }
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a: f64 = rng.random_range(0.0..1.0);
    let b: f64 = rng.random_range(0.0..1.0);
    (a.min(b), a.max(b))
}

#[test]
fn level_sets_dominate_random_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prior = Prior::beta(2.0, 3.0).unwrap();
    for (ones, zeros) in [(30, 12), (4, 20), (1, 1)] {
        let data: Sample = phi_core::models::CountSummary::new(ones, zeros).into();
        for kind in [LevelObjective::MlMap, LevelObjective::HellingerAsymptotic] {
            let best = level_set_search(&Bernoulli, &prior, &data, 200, kind).unwrap();
            for _ in 0..1_000 {
                let (a, b) = random_interval(&mut rng);
                if b - a < 1e-6 {
                    continue;
                }
                let other = match kind {
                    LevelObjective::MlMap => ln_mlxmap_objective(&Bernoulli, &prior, &data, &[(a, b)]),
                    LevelObjective::HellingerAsymptotic => {
                        ln_hellinger_composite_factor(&Bernoulli, &prior, &data, &[(a, b)])
                    }
                }
                .unwrap();
                assert!(
                    other <= best.ln_objective + 1e-6,
                    "{kind:?} D=({ones},{zeros}) [{a}, {b}]: {other} > {}",
                    best.ln_objective
                );
            }
        }
    }
}
