use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::numerics::{
    self, beta_cdf_sweep, ln_beta, ln_beta_interval_mass, ln_beta_ratio, ln_interval_from_tails,
    ln_rising_prefix, ln_sum_exp, CompensatedSum, NumericsError, QuadratureSettings, RISING_PRODUCT_LIMIT,
};

use super::bernoulli::ln_sequence_probability;
use super::{fisher_information, ModelError, ParametricModel, Prior, Result, Sample};

type LnDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Mean and central moments `μ_0 = 1, μ_1 = 0, μ_2, ..., μ_{k_max}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    central: Vec<f64>,
}

impl Moments {
    pub fn new(mean: f64, central: Vec<f64>) -> Self {
        Self { mean, central }
    }

    pub fn k_max(&self) -> usize {
        self.central.len() - 1
    }

    /// `μ_k`; zero beyond the computed order is not assumed, so `k` must not
    /// exceed [`Self::k_max`].
    pub fn central(&self, k: usize) -> f64 {
        self.central[k]
    }

    pub fn variance(&self) -> f64 {
        self.central.get(2).copied().unwrap_or(0.0)
    }

    /// `μ_1 = mean` followed by `μ_2..μ_{k_max}`, the moment sequence matched
    /// level by level in moment fitting.
    pub fn fitting_sequence(&self) -> Vec<f64> {
        std::iter::once(self.mean)
            .chain(self.central.iter().skip(2).copied())
            .collect()
    }
}

/// A probability distribution over the model parameter.
#[derive(Clone)]
pub enum ThetaDistribution {
    /// `(weight, θ)` point masses with weights summing to one.
    Atoms(Vec<(f64, f64)>),
    Beta(BetaLaw),
    Density(Arc<DensityLaw>),
}

/// `Beta(a, b)` on `[0, 1]`, optionally conditioned on a union of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaLaw {
    pub a: f64,
    pub b: f64,
    support: Option<Vec<(f64, f64)>>,
    /// `ln P_{Beta(a,b)}[support]`.
    ln_mass: f64,
    ln_beta_ab: f64,
}

/// A density known up to normalization on a union of intervals.
pub struct DensityLaw {
    ln_unnorm: LnDensity,
    pieces: Vec<(f64, f64)>,
    breakpoints: Vec<f64>,
    ln_norm: f64,
}

impl fmt::Debug for DensityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityLaw")
            .field("pieces", &self.pieces)
            .field("ln_norm", &self.ln_norm)
            .finish_non_exhaustive()
    }
}

impl fmt::Debug for ThetaDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
            Self::Beta(b) => f.debug_tuple("Beta").field(b).finish(),
            Self::Density(d) => f.debug_tuple("Density").field(d).finish(),
        }
    }
}

// ---------------------------------------------------------------------------
// Quadrature helpers
// ---------------------------------------------------------------------------

/// Relative accuracy of expectations under continuous laws.
const PIECE_REL_TOL: f64 = 1e-12;

fn law_settings(abs_tol: f64) -> QuadratureSettings<f64> {
    QuadratureSettings {
        rel_tol: PIECE_REL_TOL,
        abs_tol: abs_tol.max(1e-300),
        max_depth: 60,
    }
}

/// Integrates over `[lo, hi]`, with the sine-squared substitution when the
/// piece touches a support edge (where Beta-type singularities live).
/// Subdivision exhaustion with a tight error bound is accepted.
fn quad(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, edge: bool, abs_tol: f64) -> Result<(f64, f64)> {
    if !(hi > lo) {
        return Ok((0.0, 0.0));
    }
    let s = law_settings(abs_tol);
    let r = if edge {
        numerics::integrate_beta_type(&mut *f, lo, hi, &s)
    } else {
        numerics::integrate_with_error(&mut *f, lo, hi, &s)
    };
    match r {
        Ok(i) => Ok((i.value, i.error)),
        Err(NumericsError::DepthExhausted { estimate, error_bound })
            if error_bound <= 1e-8 * estimate.abs() + abs_tol =>
        {
            Ok((estimate, error_bound))
        }
        Err(e) => Err(e.into()),
    }
}

/// Integrates `f` over each piece split at the breakpoints that fall inside
/// it; returns the value and the summed error estimate.
///
/// Breakpoints cluster around the bulk of the mass, so interior windows are
/// integrated first, narrowest first, and the remaining ones only need
/// accuracy relative to the running total.
fn quad_pieces(
    f: &mut dyn FnMut(f64) -> f64,
    pieces: &[(f64, f64)],
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<(f64, f64)> {
    let mut windows = Vec::new();
    for &(lo, hi) in pieces {
        let mut pts = vec![lo];
        pts.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi));
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let last = pts.len() - 2;
        windows.extend(pts.windows(2).enumerate().map(|(i, w)| (w[0], w[1], i == 0 || i == last)));
    }
    windows.sort_by(|a, b| a.2.cmp(&b.2).then((a.1 - a.0).total_cmp(&(b.1 - b.0))));
    let share = PIECE_REL_TOL / windows.len().max(1) as f64;
    let mut total = CompensatedSum::<f64>::default();
    let mut error = 0.0;
    for (lo, hi, edge) in windows {
        let tol = abs_tol.max(share * total.value().abs());
        let (v, e) = quad(f, lo, hi, edge, tol)?;
        total.add(v);
        error += e;
    }
    Ok((total.value(), error))
}

/// Replaces NaN by `-∞` and clamps infinities so the optimizer can compare.
fn sane(v: f64) -> f64 {
    if v.is_nan() {
        -f64::MAX
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

/// Locates the maximum of `h` on `[lo, hi]` and returns it with breakpoints
/// that bracket the peak at multiples of its curvature scale.
fn peak_breakpoints(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<(f64, Vec<f64>)> {
    let width = hi - lo;
    let (a, b) = (lo + 1e-12 * width, hi - 1e-12 * width);
    let best = numerics::maximize_1d(|x| sane(h(x)), a, b, 1e-10 * width)?;
    let x = best.argument;
    let step = (1e-4 * width).min(0.5 * (x - lo)).min(0.5 * (hi - x));
    let scale = if step > 0.0 {
        let c = (h(x + step) - 2.0 * h(x) + h(x - step)) / (step * step);
        if c < 0.0 && c.is_finite() {
            (1.0 / (-c).sqrt()).min(width)
        } else {
            width / 16.0
        }
    } else {
        width / 16.0
    };
    let mut pts = vec![x];
    for k in [1.0, 3.0, 8.0, 20.0] {
        pts.push(x - k * scale);
        pts.push(x + k * scale);
    }
    pts.retain(|&p| p > lo && p < hi);
    Ok((best.value, pts))
}

/// `ln ∫ exp(h)` over the pieces, shifted by the located maximum.
fn ln_integral_exp(h: &dyn Fn(f64) -> f64, pieces: &[(f64, f64)], hints: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut bps: Vec<f64> = hints.to_vec();
    let mut shift = f64::NEG_INFINITY;
    for &(lo, hi) in pieces {
        let (v, pts) = peak_breakpoints(h, lo, hi)?;
        shift = shift.max(v);
        bps.extend(pts);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    if !(shift > -f64::MAX) {
        return Ok((f64::NEG_INFINITY, bps));
    }
    let mut f = |x: f64| {
        let v = (h(x) - shift).exp();
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    let (total, _) = quad_pieces(&mut f, pieces, &bps, 0.0)?;
    Ok((total.ln() + shift, bps))
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

// ---------------------------------------------------------------------------
// Beta law
// ---------------------------------------------------------------------------

impl BetaLaw {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            support: None,
            ln_mass: 0.0,
            ln_beta_ab: ln_beta(a, b),
        }
    }

    pub fn support(&self) -> Vec<(f64, f64)> {
        self.support.clone().unwrap_or_else(|| vec![(0.0, 1.0)])
    }

    pub fn is_restricted(&self) -> bool {
        self.support.is_some()
    }

    /// `ln P_{Beta(a', b')}[support]` for shifted parameters.
    fn ln_support_mass(&self, a: f64, b: f64) -> f64 {
        match &self.support {
            None => 0.0,
            Some(p) => {
                let parts: Vec<f64> = p.iter().map(|&(lo, hi)| ln_beta_interval_mass(a, b, lo, hi)).collect();
                ln_sum_exp(&parts)
            }
        }
    }

    fn ln_density(&self, t: f64) -> f64 {
        let inside = match &self.support {
            None => (0.0..=1.0).contains(&t),
            Some(p) => p.iter().any(|&(lo, hi)| t >= lo && t <= hi),
        };
        if !inside {
            return f64::NEG_INFINITY;
        }
        ln_sequence_probability(t, self.a - 1.0, self.b - 1.0) - self.ln_beta_ab - self.ln_mass
    }

    fn unrestricted_mean_sd(&self) -> (f64, f64) {
        let s = self.a + self.b;
        let mu = self.a / s;
        (mu, (mu * (1.0 - mu) / (s + 1.0)).sqrt())
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (mu, sd) = self.unrestricted_mean_sd();
        let mut pts = vec![mu];
        for k in [1.5, 3.0, 6.0, 12.0] {
            pts.push(mu - k * sd);
            pts.push(mu + k * sd);
        }
        pts.retain(|&p| p > 0.0 && p < 1.0);
        pts
    }

    /// Central moments of the unrestricted law by the recurrence
    /// `(a+b+k) μ_{k+1} = k [μ(1-μ) μ_{k-1} + (1-2μ) μ_k]`.
    fn unrestricted_moments(&self, k_max: usize) -> Moments {
        let s = self.a + self.b;
        let mu = self.a / s;
        let mut c = vec![1.0, 0.0];
        for k in 1..k_max {
            let kf = k as f64;
            let next = kf * (mu * (1.0 - mu) * c[k - 1] + (1.0 - 2.0 * mu) * c[k]) / (s + kf);
            c.push(next);
        }
        c.truncate(k_max + 1);
        Moments::new(mu, c)
    }
}

/// Moments of the uniform law on a union of intervals, about its mean.
fn uniform_union_moments(pieces: &[(f64, f64)], k_max: usize) -> Moments {
    let len: f64 = pieces.iter().map(|&(a, b)| b - a).sum();
    let mean = pieces.iter().map(|&(a, b)| (b - a) * 0.5 * (a + b)).sum::<f64>() / len;
    let mut c = vec![1.0, 0.0];
    for k in 2..=k_max {
        let e = k as i32 + 1;
        let s: f64 = pieces
            .iter()
            .map(|&(a, b)| (b - mean).powi(e) - (a - mean).powi(e))
            .sum();
        c.push(s / (e as f64 * len));
    }
    c.truncate(k_max + 1);
    Moments::new(mean, c)
}

// ---------------------------------------------------------------------------
// Generic density law
// ---------------------------------------------------------------------------

impl DensityLaw {
    fn new(ln_unnorm: LnDensity, pieces: Vec<(f64, f64)>, hints: &[f64]) -> Result<Self> {
        let (ln_norm, breakpoints) = ln_integral_exp(&*ln_unnorm, &pieces, hints)?;
        if !ln_norm.is_finite() {
            return Err(if ln_norm == f64::NEG_INFINITY {
                ModelError::ZeroEvidence
            } else {
                ModelError::InvalidPrior("density is not integrable".into())
            });
        }
        Ok(Self {
            ln_unnorm,
            pieces,
            breakpoints,
            ln_norm,
        })
    }

    fn ln_density(&self, t: f64) -> f64 {
        if self.pieces.iter().any(|&(lo, hi)| t >= lo && t <= hi) {
            (self.ln_unnorm)(t) - self.ln_norm
        } else {
            f64::NEG_INFINITY
        }
    }
}

// ---------------------------------------------------------------------------
// ThetaDistribution
// ---------------------------------------------------------------------------

impl ThetaDistribution {
    /// Weighted point masses; weights are normalized.
    pub fn atoms(mut components: Vec<(f64, f64)>) -> Self {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if total > 0.0 && total != 1.0 {
            for c in &mut components {
                c.0 /= total;
            }
        }
        Self::Atoms(components)
    }

    pub fn beta(a: f64, b: f64) -> Self {
        Self::Beta(BetaLaw::new(a, b))
    }

    /// Distribution with density `exp(ln_unnorm)` (renormalized) on `pieces`.
    pub fn from_ln_density(
        ln_unnorm: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pieces: Vec<(f64, f64)>,
    ) -> Result<Self> {
        Ok(Self::Density(Arc::new(DensityLaw::new(Arc::new(ln_unnorm), pieces, &[])?)))
    }

    /// The prior over `Ω` for this model.
    pub fn prior(model: &dyn ParametricModel, prior: &Prior) -> Result<Self> {
        let (lo, hi) = model.domain();
        if model.is_bernoulli() {
            if let Some((a, b)) = prior.beta_parameters() {
                return Ok(Self::beta(a, b));
            }
        }
        let (ln_unnorm, pieces, hints): (LnDensity, Vec<(f64, f64)>, Vec<f64>) = match prior {
            Prior::Uniform => (Arc::new(|_| 0.0), vec![(lo, hi)], vec![]),
            Prior::Beta { a, b } => {
                let (a, b, w) = (*a, *b, hi - lo);
                (
                    Arc::new(move |t| ln_sequence_probability((t - lo) / w, a - 1.0, b - 1.0)),
                    vec![(lo, hi)],
                    vec![],
                )
            }
            Prior::Jeffreys => {
                let owned = model.clone_arc();
                fisher_information(model, 0.5 * (lo + hi))?;
                (
                    Arc::new(move |t| match fisher_information(&*owned, t) {
                        Ok(i) => 0.5 * i.ln(),
                        Err(_) => f64::NEG_INFINITY,
                    }),
                    vec![(lo, hi)],
                    vec![],
                )
            }
            Prior::Table(t) => {
                let nodes = t.nodes();
                let (t0, t1) = (nodes[0].0.max(lo), nodes[nodes.len() - 1].0.min(hi));
                if !(t1 > t0) {
                    return Err(ModelError::InvalidPrior("table does not overlap the domain".into()));
                }
                let table = t.clone();
                let hints = nodes.iter().map(|n| n.0).collect();
                (Arc::new(move |x| table.density(x).ln()), vec![(t0, t1)], hints)
            }
        };
        Ok(Self::Density(Arc::new(DensityLaw::new(ln_unnorm, pieces, &hints)?)))
    }

    /// `p(θ|D) ∝ p(D|θ) p(θ)`.
    pub fn posterior(model: &dyn ParametricModel, prior: &Prior, data: &Sample) -> Result<Self> {
        if model.is_bernoulli() {
            if let Some((a, b)) = prior.beta_parameters() {
                let c = data
                    .as_counts()
                    .ok_or_else(|| ModelError::InvalidData("Bernoulli observations must be 0 or 1".into()))?;
                return Ok(Self::beta(a + c.ones as f64, b + c.zeros as f64));
            }
        }
        let base = Self::prior(model, prior)?;
        if data.is_empty() {
            return Ok(base);
        }
        let law = match base {
            Self::Density(law) => law,
            _ => unreachable!("non-conjugate priors are densities"),
        };
        let data = data.clone();
        let owned = model.clone_arc();
        let base_law = law.clone();
        let ln_unnorm: LnDensity = Arc::new(move |t| {
            let lp = (base_law.ln_unnorm)(t);
            if lp == f64::NEG_INFINITY {
                lp
            } else {
                lp + owned.sample_log_likelihood(&data, t)
            }
        });
        Ok(Self::Density(Arc::new(DensityLaw::new(
            ln_unnorm,
            law.pieces.clone(),
            &law.breakpoints,
        )?)))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Atoms(_))
    }

    /// Intervals carrying the mass of a continuous law; the atom locations
    /// as degenerate intervals otherwise.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Atoms(a) => a.iter().map(|&(_, t)| (t, t)).collect(),
            Self::Beta(b) => b.support(),
            Self::Density(d) => d.pieces.clone(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Atoms(_) => Vec::new(),
            Self::Beta(b) => b.breakpoints(),
            Self::Density(d) => d.breakpoints.clone(),
        }
    }

    /// `ln p(θ)`; `None` for point masses.
    pub fn ln_density(&self, t: f64) -> Option<f64> {
        match self {
            Self::Atoms(_) => None,
            Self::Beta(b) => Some(b.ln_density(t)),
            Self::Density(d) => Some(d.ln_density(t)),
        }
    }

    pub fn density(&self, t: f64) -> Option<f64> {
        self.ln_density(t).map(f64::exp)
    }

    /// `E[f(θ)]` with a quadrature error estimate (zero for point masses);
    /// `abs_tol` is the absolute accuracy requested for continuous laws.
    pub fn expect_with_error(&self, mut f: impl FnMut(f64) -> f64, abs_tol: f64) -> Result<(f64, f64)> {
        match self {
            Self::Atoms(a) => Ok((
                a.iter().map(|&(w, t)| if w == 0.0 { 0.0 } else { w * f(t) }).sum(),
                0.0,
            )),
            _ => {
                let mut g = |t: f64| {
                    let ld = self.ln_density(t).unwrap_or(f64::NEG_INFINITY);
                    if ld == f64::NEG_INFINITY {
                        0.0
                    } else {
                        f(t) * ld.exp()
                    }
                };
                quad_pieces(&mut g, &self.support(), &self.breakpoints(), abs_tol)
            }
        }
    }

    pub fn expect_with(&self, f: impl FnMut(f64) -> f64, abs_tol: f64) -> Result<f64> {
        Ok(self.expect_with_error(f, abs_tol)?.0)
    }

    pub fn expect(&self, f: impl FnMut(f64) -> f64) -> Result<f64> {
        self.expect_with(f, 1e-15)
    }

    /// `ln E[exp(g(θ))]`, evaluated with a shift so that tiny expectations
    /// keep full relative precision.
    pub fn ln_expect_exp(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        match self {
            Self::Atoms(a) => {
                let terms: Vec<f64> = a
                    .iter()
                    .filter(|c| c.0 > 0.0)
                    .map(|&(w, t)| w.ln() + g(t))
                    .collect();
                Ok(ln_sum_exp(&terms))
            }
            _ => {
                let h = |t: f64| {
                    let ld = self.ln_density(t).unwrap_or(f64::NEG_INFINITY);
                    if ld == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        g(t) + ld
                    }
                };
                Ok(ln_integral_exp(&h, &self.support(), &self.breakpoints())?.0)
            }
        }
    }

    /// `ln E[θ^{m₁} (1-θ)^{m₀}]`, closed form for atoms and Beta laws.
    pub fn ln_expect_bernoulli(&self, ones: f64, zeros: f64) -> Result<f64> {
        match self {
            Self::Atoms(_) => self.ln_expect_exp(|t| ln_sequence_probability(t, ones, zeros)),
            Self::Beta(law) => {
                let (a, b) = (law.a + ones, law.b + zeros);
                Ok(ln_beta_ratio(law.a, law.b, ones, zeros) + law.ln_support_mass(a, b) - law.ln_mass)
            }
            Self::Density(_) => self.ln_expect_exp(|t| ln_sequence_probability(t, ones, zeros)),
        }
    }

    /// `ln E[θ^t (1-θ)^{m-t}]` for `t = 0..=m`.
    pub fn ln_expect_bernoulli_sweep(&self, m: u64) -> Result<Vec<f64>> {
        match self {
            Self::Beta(law) => {
                let mut out: Vec<f64> = if m <= RISING_PRODUCT_LIMIT {
                    let ones = ln_rising_prefix(law.a, m);
                    let zeros = ln_rising_prefix(law.b, m);
                    let all = ln_rising_prefix(law.a + law.b, m)[m as usize];
                    (0..=m as usize)
                        .map(|t| ones[t] + zeros[m as usize - t] - all - law.ln_mass)
                        .collect()
                } else {
                    let mf = m as f64;
                    let base = law.ln_beta_ab + law.ln_mass;
                    (0..=m)
                        .map(|t| {
                            let t = t as f64;
                            ln_beta(law.a + t, law.b + mf - t) - base
                        })
                        .collect()
                };
                if let Some(pieces) = &law.support {
                    let mut mass = vec![Vec::with_capacity(pieces.len()); m as usize + 1];
                    for &(lo, hi) in pieces {
                        let at_lo = beta_cdf_sweep(law.a, law.b, m, lo);
                        let at_hi = beta_cdf_sweep(law.a, law.b, m, hi);
                        for (t, (l, h)) in at_lo.iter().zip(&at_hi).enumerate() {
                            mass[t].push(ln_interval_from_tails(l.0, l.1, h.0, h.1));
                        }
                    }
                    for (o, parts) in out.iter_mut().zip(&mass) {
                        *o += ln_sum_exp(parts);
                    }
                }
                Ok(out)
            }
            _ => (0..=m)
                .map(|t| self.ln_expect_bernoulli(t as f64, (m - t) as f64))
                .collect(),
        }
    }

    /// `ln E[p(x|θ)]` for a future sample `x`.
    pub fn ln_expect_likelihood(&self, model: &dyn ParametricModel, future: &Sample) -> Result<f64> {
        if model.is_bernoulli() {
            let c = future
                .as_counts()
                .ok_or_else(|| ModelError::InvalidData("Bernoulli observations must be 0 or 1".into()))?;
            return self.ln_expect_bernoulli(c.ones as f64, c.zeros as f64);
        }
        self.ln_expect_exp(|t| model.sample_log_likelihood(future, t))
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.moments(1)?.mean)
    }

    /// Mean and central moments up to order `k_max`.
    pub fn moments(&self, k_max: usize) -> Result<Moments> {
        match self {
            Self::Atoms(a) => {
                let mean: f64 = a.iter().map(|&(w, t)| w * t).sum();
                let c = (0..=k_max)
                    .map(|k| a.iter().map(|&(w, t)| w * (t - mean).powi(k as i32)).sum())
                    .collect();
                Ok(Moments::new(mean, central_prefix(c)))
            }
            Self::Beta(law) if !law.is_restricted() => Ok(law.unrestricted_moments(k_max)),
            Self::Beta(law) if law.a == 1.0 && law.b == 1.0 => Ok(uniform_union_moments(&law.support(), k_max)),
            _ => {
                let span = self
                    .support()
                    .iter()
                    .fold(0.0f64, |m, &(lo, hi)| m.max(lo.abs()).max(hi.abs()));
                let mean = self.expect_with(|t| t, 1e-15 * span.max(1e-300))?;
                let var = self.expect_with(|t| (t - mean) * (t - mean), 0.0)?;
                let mut c = vec![1.0, 0.0];
                if k_max >= 2 {
                    c.push(var);
                }
                for k in 3..=k_max {
                    let scale = 1e-13 * var.powf(0.5 * k as f64);
                    c.push(self.expect_with(|t| (t - mean).powi(k as i32), scale)?);
                }
                c.truncate(k_max + 1);
                Ok(Moments::new(mean, c))
            }
        }
    }

    /// `ln P[θ ∈ pieces]`.
    pub fn ln_mass(&self, pieces: &[(f64, f64)]) -> Result<f64> {
        match self {
            Self::Atoms(a) => {
                let w: f64 = a
                    .iter()
                    .filter(|&&(_, t)| pieces.iter().any(|&(lo, hi)| t >= lo && t <= hi))
                    .map(|c| c.0)
                    .sum();
                Ok(w.ln())
            }
            Self::Beta(law) => {
                let inside = intersect(&law.support(), pieces);
                let parts: Vec<f64> = inside
                    .iter()
                    .map(|&(lo, hi)| ln_beta_interval_mass(law.a, law.b, lo, hi))
                    .collect();
                Ok(ln_sum_exp(&parts) - law.ln_mass)
            }
            Self::Density(d) => {
                let inside = intersect(&d.pieces, pieces);
                if inside.is_empty() {
                    return Ok(f64::NEG_INFINITY);
                }
                let h = |t: f64| d.ln_density(t);
                Ok(ln_integral_exp(&h, &inside, &d.breakpoints)?.0)
            }
        }
    }

    /// The law conditioned on `θ ∈ pieces`.
    pub fn restrict(&self, pieces: &[(f64, f64)]) -> Result<Self> {
        let zero = || ModelError::ZeroPriorMass(format!("{pieces:?}"));
        match self {
            Self::Atoms(a) => {
                let kept: Vec<(f64, f64)> = a
                    .iter()
                    .copied()
                    .filter(|&(w, t)| w > 0.0 && pieces.iter().any(|&(lo, hi)| t >= lo && t <= hi))
                    .collect();
                if kept.is_empty() {
                    return Err(zero());
                }
                Ok(Self::atoms(kept))
            }
            Self::Beta(law) => {
                let support = intersect(&law.support(), pieces);
                let mut out = BetaLaw {
                    a: law.a,
                    b: law.b,
                    support: Some(support.clone()),
                    ln_mass: 0.0,
                    ln_beta_ab: law.ln_beta_ab,
                };
                if support.is_empty() {
                    return Err(zero());
                }
                out.ln_mass = out.ln_support_mass(law.a, law.b);
                if !(out.ln_mass > f64::NEG_INFINITY) {
                    return Err(zero());
                }
                Ok(Self::Beta(out))
            }
            Self::Density(d) => {
                let inside = intersect(&d.pieces, pieces);
                if inside.is_empty() {
                    return Err(zero());
                }
                let law = DensityLaw::new(d.ln_unnorm.clone(), inside, &d.breakpoints).map_err(|e| match e {
                    ModelError::ZeroEvidence => zero(),
                    other => other,
                })?;
                Ok(Self::Density(Arc::new(law)))
            }
        }
    }
}

fn central_prefix(mut c: Vec<f64>) -> Vec<f64> {
    if c.len() > 1 {
        c[0] = 1.0;
        c[1] = 0.0;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Bernoulli, CountSummary, Hypothesis, TablePrior};
    use approx::assert_relative_eq;

    fn uniform_table() -> Prior {
        Prior::Table(TablePrior::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap())
    }

    fn data(ones: u64, zeros: u64) -> Sample {
        CountSummary::new(ones, zeros).into()
    }

    #[test]
    fn conjugate_posterior() {
        let p = ThetaDistribution::posterior(&Bernoulli, &Prior::Uniform, &data(1, 1)).unwrap();
        assert_relative_eq!(p.density(0.5).unwrap(), 1.5, max_relative = 1e-14);
        let j = ThetaDistribution::posterior(&Bernoulli, &Prior::Jeffreys, &data(3, 4)).unwrap();
        match j {
            ThetaDistribution::Beta(ref b) => assert_eq!((b.a, b.b), (3.5, 4.5)),
            _ => panic!("expected a Beta law"),
        }
        let total = j.expect(|_| 1.0).unwrap();
        assert_relative_eq!(total, 1.0, max_relative = 1e-10);
        let empty = ThetaDistribution::posterior(&Bernoulli, &Prior::beta(2.0, 5.0).unwrap(), &Sample::empty()).unwrap();
        assert_relative_eq!(empty.density(0.3).unwrap(), 30.0 * 0.3 * 0.7f64.powi(4), max_relative = 1e-12);
    }

    #[test]
    fn posterior_moment_examples() {
        let m = |a, b, k| {
            ThetaDistribution::posterior(&Bernoulli, &Prior::Uniform, &data(a, b))
                .unwrap()
                .moments(k)
                .unwrap()
        };
        assert_eq!(m(1, 1, 2).mean, 0.5);
        assert_relative_eq!(m(1, 1, 2).variance(), 1.0 / 20.0, max_relative = 1e-14);
        assert_relative_eq!(m(2, 2, 2).variance(), 1.0 / 28.0, max_relative = 1e-14);
        assert_relative_eq!(m(0, 0, 2).variance(), 1.0 / 12.0, max_relative = 1e-14);
        let sym = m(6, 6, 7);
        for k in [3, 5, 7] {
            assert!(sym.central(k).abs() < 1e-18);
        }
        for (a, b) in [(3u64, 1u64), (0, 9), (17, 4)] {
            assert_eq!(m(a, b, 1).mean, (a as f64 + 1.0) / ((a + b) as f64 + 2.0));
        }
    }

    #[test]
    fn recurrence_matches_quadrature() {
        let d = data(7, 3);
        let closed = ThetaDistribution::posterior(&Bernoulli, &Prior::Uniform, &d).unwrap().moments(6).unwrap();
        let numeric = ThetaDistribution::posterior(&Bernoulli, &uniform_table(), &d).unwrap();
        assert!(matches!(numeric, ThetaDistribution::Density(_)));
        let numeric = numeric.moments(6).unwrap();
        assert_relative_eq!(closed.mean, numeric.mean, max_relative = 1e-11);
        for k in 2..=6 {
            assert_relative_eq!(closed.central(k), numeric.central(k), max_relative = 1e-8);
        }
    }

    #[test]
    fn hypothesis_moment_examples() {
        let prior = ThetaDistribution::beta(1.0, 1.0);
        let iv = prior.restrict(&[(0.2, 0.8)]).unwrap().moments(4).unwrap();
        assert_relative_eq!(iv.mean, 0.5, max_relative = 1e-15);
        assert_relative_eq!(iv.variance(), 0.03, max_relative = 1e-13);
        assert_relative_eq!(iv.central(4), 0.6f64.powi(4) / 80.0, max_relative = 1e-12);
        let mix = ThetaDistribution::atoms(vec![(0.5, 0.0), (0.5, 1.0)]).moments(2).unwrap();
        assert_eq!((mix.mean, mix.variance()), (0.5, 0.25));
        let point = ThetaDistribution::atoms(vec![(1.0, 0.5)]).moments(3).unwrap();
        assert_eq!((point.mean, point.variance(), point.central(3)), (0.5, 0.0, 0.0));
    }

    #[test]
    fn restricted_beta_against_quadrature() {
        let pieces = [(0.1, 0.25), (0.3, 0.4)];
        let law = ThetaDistribution::beta(3.0, 5.0).restrict(&pieces).unwrap();
        let table = ThetaDistribution::from_ln_density(
            |t| ln_sequence_probability(t, 2.0, 4.0),
            pieces.to_vec(),
        )
        .unwrap();
        let a = law.moments(4).unwrap();
        let b = table.moments(4).unwrap();
        assert_relative_eq!(a.mean, b.mean, max_relative = 1e-10);
        for k in 2..=4 {
            assert_relative_eq!(a.central(k), b.central(k), max_relative = 1e-7);
        }
        let sweep = law.ln_expect_bernoulli_sweep(9).unwrap();
        for (t, v) in sweep.iter().enumerate() {
            let direct = table.ln_expect_bernoulli(t as f64, 9.0 - t as f64).unwrap();
            assert_relative_eq!(*v, direct, max_relative = 1e-10);
        }
        assert_relative_eq!(law.ln_mass(&[(0.0, 1.0)]).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sweep_matches_pointwise_for_large_horizon() {
        let law = ThetaDistribution::beta(11.0, 11.0).restrict(&[(0.4, 0.6)]).unwrap();
        let m = 2000;
        let sweep = law.ln_expect_bernoulli_sweep(m).unwrap();
        for t in [0u64, 1, 700, 1000, 1999, 2000] {
            let v = law.ln_expect_bernoulli(t as f64, (m - t) as f64).unwrap();
            assert_relative_eq!(sweep[t as usize], v, max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_mass_is_rejected() {
        let table = Prior::Table(TablePrior::new(vec![(0.0, 4.0), (0.5, 0.0), (1.0, 0.0)]).unwrap());
        let h = Hypothesis::interval(0.7, 0.9).unwrap();
        let err = crate::models::hypothesis_distribution(&Bernoulli, &table, &h).unwrap_err();
        assert!(matches!(err, ModelError::ZeroPriorMass(_)), "{err:?}");
    }

    #[test]
    fn density_path_normalizes() {
        let p = ThetaDistribution::posterior(&Bernoulli, &uniform_table(), &data(40, 25)).unwrap();
        assert_relative_eq!(p.expect(|_| 1.0).unwrap(), 1.0, max_relative = 1e-9);
        let peaked = ThetaDistribution::posterior(&Bernoulli, &uniform_table(), &data(30_000, 10_000)).unwrap();
        assert_relative_eq!(peaked.expect(|_| 1.0).unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(peaked.mean().unwrap(), 30_001.0 / 40_002.0, max_relative = 1e-10);
    }
}
