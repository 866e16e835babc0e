//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use phi_core::asymptotics::{
    ellipsoid_rho, erf_sqrt_maximizer, imap, level_set_search, ln_mlxmap_objective, ratio_error_slope,
    verify_theorem10, verify_theorem8, LevelObjective,
};
use phi_core::loss::{LossContext, LossSpec, Method, Mode, Which};
use phi_core::models::exact::{self, Verdict};
use phi_core::models::{Bernoulli, CountSummary, Hypothesis, Prior, Sample, ThetaDistribution};
use phi_core::selector::{phi_select, select_members, HypothesisClass};
use phi_core::smf::{smf_select, verify_theorem12, ScaledClass, SmfTolerances};
use phi_core::{Distance, ExactErrTable, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn counts(ones: u64, zeros: u64) -> Sample {
    CountSummary::new(ones, zeros).into()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * b.abs().max(1.0)
}

fn fair_vague() -> HypothesisClass {
    HypothesisClass::Explicit(vec![Hypothesis::Simple(0.5), Hypothesis::interval(0.0, 1.0).unwrap()])
}

fn random_hypothesis(rng: &mut ChaCha8Rng) -> Hypothesis {
    match rng.random_range(0..3) {
        0 => Hypothesis::Simple(rng.random_range(0.02..0.98)),
        1 => {
            let a: f64 = rng.random_range(0.0..0.8);
            Hypothesis::interval(a, a + rng.random_range(0.05..(1.0 - a))).unwrap()
        }
        _ => Hypothesis::mixture(vec![
            (rng.random_range(0.1..1.0), rng.random_range(0.05..0.95)),
            (rng.random_range(0.1..1.0), rng.random_range(0.05..0.95)),
        ])
        .unwrap(),
    }
}

fn c1_err_table() -> Outcome {
    let start = Instant::now();
    let t: ExactErrTable = exact::err_table();
    let expected = [(q(1, 3), q(0, 1)), (q(1, 5), q(2, 15)), (q(1, 7), q(4, 21))];
    let ok = t
        .iter()
        .zip(&expected)
        .all(|(row, (f, v))| row.err_fair == *f && row.err_vague == *v);
    let elapsed = start.elapsed();
    let shown: Vec<String> = t[..3].iter().map(|r| format!("{}/{}", r.err_fair, r.err_vague)).collect();
    Ok((ok && within(elapsed, 1.0), format!("{} in {elapsed:.2?}", shown.join(" "))))
}

fn c2_cells() -> Outcome {
    let t: ExactErrTable = exact::err_table();
    let rows = [
        [q(1, 3), q(1, 3), q(1, 3)],
        [q(3, 10), q(4, 10), q(3, 10)],
        [q(2, 7), q(3, 7), q(2, 7)],
    ];
    let data_ok = t.iter().zip(&rows).all(|(r, e)| r.cells == *e);
    let [f, v] = exact::hypothesis_cells::<Rational>();
    let hyp_ok = f == [q(1, 4), q(1, 2), q(1, 4)] && v == [q(1, 3), q(1, 3), q(1, 3)];
    Ok((data_ok && hyp_ok, format!("p(x|0101) = {:?}", t[2].cells.iter().map(|c| c.to_string()).collect::<Vec<_>>())))
}

fn c3_regime_flip() -> Outcome {
    let start = Instant::now();
    let u = Prior::Uniform;
    let a = phi_select(&Bernoulli, &u, &counts(20, 20), &fair_vague(), &LossSpec::hat(2, Distance::Absolute)).map_err(err)?;
    let b = phi_select(&Bernoulli, &u, &counts(1, 1), &fair_vague(), &LossSpec::hat(12, Distance::Absolute)).map_err(err)?;
    let exact_rows = (
        exact::err_row::<Rational>("", CountSummary::new(20, 20)).verdict,
        exact::hat_loss(&exact::fair::<Rational>(), CountSummary::new(1, 1), 12, exact::ExactDistance::Absolute)
            > exact::hat_loss(&exact::vague::<Rational>(), CountSummary::new(1, 1), 12, exact::ExactDistance::Absolute),
    );
    let ok = a.winner == Hypothesis::Simple(0.5)
        && b.winner.is_interval()
        && exact_rows == (Verdict::Fair, true)
        && within(start.elapsed(), 5.0);
    Ok((ok, format!("(20,20),m=2 -> {}; (1,1),m=12 -> {}", a.winner, b.winner)))
}

fn c4_laplace() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = HypothesisClass::PointGrid(100_000);
    let step = 1.0 / 99_999.0;
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let (n1, n0) = (rng.random_range(0..30u64), rng.random_range(0..30u64));
        let m = if i % 2 == 0 { 1 } else { 3 };
        let spec = LossSpec::tilde(m, Distance::ReverseKl);
        let r = phi_select(&Bernoulli, &Prior::Uniform, &counts(n1, n0), &grid, &spec).map_err(err)?;
        let Hypothesis::Simple(t) = r.winner else { return Err("non-point winner".into()) };
        let laplace = (n1 as f64 + 1.0) / ((n1 + n0) as f64 + 2.0);
        worst = worst.max((t - laplace).abs() / step);
    }
    let elapsed = start.elapsed();
    Ok((worst <= 1.0 && within(elapsed, 30.0), format!("max |argmin - laplace| = {worst:.3} grid steps in {elapsed:.2?}")))
}

fn c5_sufficient_stat() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..10 {
        let d = counts(rng.random_range(0..15), rng.random_range(0..15));
        let h = random_hypothesis(&mut rng);
        let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &d).map_err(err)?;
        for dist in Distance::catalog(rng.random_range(0.1..1.0)) {
            for m in 1..=12 {
                for which in [Which::Hat, Which::Tilde] {
                    let spec = LossSpec::new(which, m, dist);
                    let a = ctx.evaluate(&h, &spec.with_method(Method::SufficientStat)).map_err(err)?.value;
                    let b = ctx.evaluate(&h, &spec.with_method(Method::BruteForce)).map_err(err)?.value;
                    if a != b {
                        worst = worst.max((a - b).abs() / b.abs().max(1.0));
                    }
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= 1e-12 && within(elapsed, 60.0),
        format!("{cases} cases, max deviation {worst:.2e} in {elapsed:.2?}"),
    ))
}

fn c6_additive_constant() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = counts(4, 7);
    let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &d).map_err(err)?;
    let hs: Vec<Hypothesis> = (0..20).map(|_| random_hypothesis(&mut rng)).collect();
    let mut worst_sd: f64 = 0.0;
    let mut agree = true;
    for dist in [Distance::Squared, Distance::ReverseKl] {
        let gaps: Vec<f64> = hs
            .iter()
            .map(|h| {
                let hat = ctx.evaluate(h, &LossSpec::hat(5, dist))?.value;
                let tilde = ctx.evaluate(h, &LossSpec::tilde(5, dist))?.value;
                Ok(hat - tilde)
            })
            .collect::<Result<_, phi_core::loss::LossError>>()
            .map_err(err)?;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt();
        worst_sd = worst_sd.max(sd);
        let grid = HypothesisClass::PointGrid(101).materialize((0.0, 1.0)).map_err(err)?;
        let classes = [hs.clone(), fair_vague().materialize((0.0, 1.0)).map_err(err)?, grid];
        for class in classes {
            for m in [1, 5] {
                let a = select_members(&ctx, class.clone(), &LossSpec::hat(m, dist)).map_err(err)?;
                let b = select_members(&ctx, class.clone(), &LossSpec::tilde(m, dist)).map_err(err)?;
                agree &= a.winner == b.winner;
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((
        worst_sd < 1e-8 && agree && within(elapsed, 60.0),
        format!("max sd {worst_sd:.2e}, argmin agreement {agree} in {elapsed:.2?}"),
    ))
}

fn c7_imap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_j, mut worst_u, mut worst_grid): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let n = rng.random_range(2..=100u64);
        let n1 = rng.random_range(1..n);
        let d = counts(n1, n - n1);
        let j = imap(&Bernoulli, &Prior::Jeffreys, &d).map_err(err)?;
        worst_j = worst_j.max((j.theta - n1 as f64 / n as f64).abs());
        let u = imap(&Bernoulli, &Prior::Uniform, &d).map_err(err)?;
        let closed = (n1 as f64 + 0.5) / (n as f64 + 1.0);
        worst_u = worst_u.max((u.theta - closed).abs());
        // Grid oracle on θ^{n1+1/2}(1-θ)^{n0+1/2}.
        let f = |t: f64| (n1 as f64 + 0.5) * t.ln() + ((n - n1) as f64 + 0.5) * (1.0 - t).ln();
        let best = (1..200_000).map(|i| i as f64 / 200_000.0).fold((0.0, f64::NEG_INFINITY), |b, t| {
            let v = f(t);
            if v > b.1 { (t, v) } else { b }
        });
        worst_grid = worst_grid.max((best.0 - closed).abs());
    }
    Ok((
        worst_j <= 1e-9 && worst_u <= 1e-6 && worst_grid <= 1e-5,
        format!("jeffreys {worst_j:.1e}, uniform {worst_u:.1e}, grid oracle {worst_grid:.1e}"),
    ))
}

fn c8_rho_table() -> Outcome {
    let table = [(1, 1.400), (2, 1.121), (3, 1.009), (4, 0.947), (5, 0.907), (10, 0.819), (100, 0.721)];
    let mut ok = true;
    let mut values = Vec::new();
    for (d, expected) in table {
        let (_, v) = ellipsoid_rho(d).map_err(err)?;
        ok &= (v - expected).abs() <= 0.002;
        values.push(v);
    }
    let limit = std::f64::consts::FRAC_1_SQRT_2;
    let (_, far) = ellipsoid_rho(10_000).map_err(err)?;
    let trend = values.windows(2).all(|w| w[1] < w[0]) && far < values[6] && far > limit && far - limit < 0.005;
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.5}")).collect();
    Ok((ok && trend, format!("{}; d=10^4 -> {far:.5}", shown.join(" "))))
}

fn c9_erf() -> Outcome {
    let x = erf_sqrt_maximizer().map_err(err)?;
    let (rho, _) = ellipsoid_rho(1).map_err(err)?;
    let near_one = (x - 1.0).abs() <= 0.01;
    let consistent = (rho - std::f64::consts::SQRT_2 * x).abs() <= 1e-6;
    Ok((
        near_one && consistent,
        format!(
            "x* = {x:.12} ({:.3}% from 1), |rho(1) - sqrt2 x*| = {:.1e}",
            100.0 * (x - 1.0).abs(),
            (rho - std::f64::consts::SQRT_2 * x).abs()
        ),
    ))
}

fn c10_level_sets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let u = Prior::Uniform;
    let mut worst: f64 = f64::NEG_INFINITY;
    for d in [counts(50, 50), counts(7, 3), counts(2, 9)] {
        let r = level_set_search(&Bernoulli, &u, &d, 200, LevelObjective::MlMap).map_err(err)?;
        for _ in 0..10_000 {
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0);
            let (a, b) = (a.min(b), a.max(b));
            if b - a < 1e-9 {
                continue;
            }
            let other = ln_mlxmap_objective(&Bernoulli, &u, &d, &[(a, b)]).map_err(err)?.exp();
            worst = worst.max(other - r.objective);
        }
    }
    let r = level_set_search(&Bernoulli, &u, &counts(50, 50), 200, LevelObjective::MlMap).map_err(err)?;
    let Hypothesis::IntervalUnion(p) = &r.set else { return Err("level set is not an interval".into()) };
    let half = (p[0].1 - p[0].0) / 2.0;
    let sd = ThetaDistribution::beta(51.0, 51.0).moments(2).map_err(err)?.variance().sqrt();
    let rel = (half / (std::f64::consts::SQRT_2 * sd) - 1.0).abs();
    Ok((
        worst <= 1e-6 && rel <= 0.05,
        format!("max excess of random intervals {worst:.2e}; half-width {half:.5} vs sqrt2 sd {:.5}", std::f64::consts::SQRT_2 * sd),
    ))
}

fn c11_point_expansion() -> Outcome {
    let start = Instant::now();
    let ms = [100, 1_000, 10_000, 1_000_000];
    let rows = verify_theorem8(&Bernoulli, &Prior::Uniform, &counts(5, 5), 0.5, &ms).map_err(err)?;
    let at_1e4 = rows.iter().find(|r| r.m == 10_000).map(|r| r.ratio).unwrap_or(f64::NAN);
    let slope = ratio_error_slope(&rows).unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.ratio)).collect();
    Ok((
        (at_1e4 - 1.0).abs() <= 0.05 && (-0.7..=-0.3).contains(&slope) && within(elapsed, 10.0),
        format!("ratios {} ; error slope {slope:.3} (required [-0.7, -0.3]) in {elapsed:.2?}", ratios.join(" ")),
    ))
}

fn c12_composite_expansion() -> Outcome {
    let rows = verify_theorem10(&Bernoulli, &Prior::Uniform, &counts(10, 10), &[(0.4, 0.6)], &[100, 10_000, 1_000_000])
        .map_err(err)?;
    let last = rows.last().map(|r| r.ratio).unwrap_or(f64::NAN);
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.ratio)).collect();
    Ok(((last - 1.0).abs() <= 0.10, format!("ratios {}", ratios.join(" "))))
}

fn c13_offline() -> Outcome {
    let start = Instant::now();
    let ctx = LossContext::new(&Bernoulli, &Prior::Uniform, &counts(2, 3)).map_err(err)?;
    let hs = [
        Hypothesis::Simple(0.5),
        Hypothesis::interval(0.2, 0.7).unwrap(),
        Hypothesis::uniform_mixture(&[0.3, 0.8]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for h in &hs {
        for dist in Distance::catalog(0.5) {
            let one = ctx.evaluate(h, &LossSpec::tilde(1, dist)).map_err(err)?.value;
            for m in [1u64, 2, 3, 5] {
                let off = ctx
                    .evaluate(h, &LossSpec::tilde(m, dist).with_mode(Mode::Offline))
                    .map_err(err)?
                    .value;
                let target = m as f64 * one;
                if !close(off, target, 0.0) {
                    worst = worst.max((off - target).abs() / target.abs().max(1.0));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((worst <= 1e-10 && within(elapsed, 60.0), format!("max deviation {worst:.2e} in {elapsed:.2?}")))
}

fn c14_smf() -> Outcome {
    let tol = SmfTolerances::default();
    let binary = smf_select(&Bernoulli, &Prior::Uniform, &counts(10, 10), &fair_vague(), 6, tol).map_err(err)?;
    let binary_ok = binary.selected == vec![Hypothesis::Simple(0.5)] && binary.k_star == Some(2);
    let iv = smf_select(&Bernoulli, &Prior::Uniform, &counts(2, 2), &HypothesisClass::Intervals, 6, tol).map_err(err)?;
    let Some(Hypothesis::IntervalUnion(p)) = iv.winner() else { return Err("no interval selected".into()) };
    let half = (3.0f64 / 28.0).sqrt();
    let interval_ok = (p[0].0 - (0.5 - half)).abs() <= 1e-12 && (p[0].1 - (0.5 + half)).abs() <= 1e-12;
    Ok((
        binary_ok && interval_ok,
        format!("binary -> {:?} (k* = {:?}); interval -> [{:.12}, {:.12}]", binary.selected, binary.k_star, p[0].0, p[0].1),
    ))
}

fn c15_moment_fit_decay() -> Outcome {
    let start = Instant::now();
    let ns = [100, 1_000, 10_000];
    // Each run must meet both the -k*β/2 + 0.4 rule and the bound quoted
    // for that configuration.
    let runs = [
        ("intervals abs m=2", ScaledClass::Intervals, Distance::Absolute, 2, -1.1),
        ("intervals abs m=3", ScaledClass::Intervals, Distance::Absolute, 3, -1.1),
        ("points abs m=2", ScaledClass::AllPoints, Distance::Absolute, 2, -0.4),
        ("points sq m=2", ScaledClass::AllPoints, Distance::Squared, 2, -0.8),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, class, d, m, quoted) in runs {
        let r = verify_theorem12(&Bernoulli, &Prior::Uniform, &class, d, m, &ns, 0.3, 12).map_err(err)?;
        let slope = r.slope.unwrap_or(f64::NAN);
        let passed = r.passed && slope <= quoted;
        ok &= passed;
        parts.push(format!(
            "{label}: losses [{}] slope {slope:.3} <= min({:.2}, {quoted:.2}) {}",
            r.rows.iter().map(|row| format!("{:.2e}", row.loss)).collect::<Vec<_>>().join(" "),
            r.bound,
            if passed { "ok" } else { "violated" }
        ));
    }
    let elapsed = start.elapsed();
    Ok((ok && within(elapsed, 120.0), format!("{} in {elapsed:.2?}", parts.join("; "))))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 15] = [
        ("two-step Err table, exact", c1_err_table),
        ("predictive cells, exact", c2_cells),
        ("regime flip", c3_regime_flip),
        ("Laplace rule on a 10^5 grid", c4_laplace),
        ("sufficient statistic equals brute force", c5_sufficient_stat),
        ("hat - tilde constant for sq and rkl", c6_additive_constant),
        ("IMAP closed forms", c7_imap),
        ("ellipsoid radius table", c8_rho_table),
        ("erf(x)/sqrt(x) maximizer near 1", c9_erf),
        ("level-set dominance and half-width", c10_level_sets),
        ("point Hellinger asymptotics", c11_point_expansion),
        ("composite Hellinger asymptotics", c12_composite_expansion),
        ("offline equals m times one step", c13_offline),
        ("moment fitting examples", c14_smf),
        ("moment fitting loss decay", c15_moment_fit_decay),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria fail: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
