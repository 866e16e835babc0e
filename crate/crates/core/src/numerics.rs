//! Special functions and deterministic one-dimensional integration and
//! optimization.
//!
//! Everything here is generic over [`Real`] and free of global state.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("non-finite integrand at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("quadrature subdivision exhausted (estimate {estimate}, error bound {error_bound})")]
    DepthExhausted { estimate: f64, error_bound: f64 },
    #[error("non-finite objective value at x = {x}")]
    NonFiniteObjective { x: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings<R> {
    pub rel_tol: R,
    pub abs_tol: R,
    /// Maximum number of bisections applied to any one subinterval.
    pub max_depth: u32,
}

impl<R: Real> Default for QuadratureSettings<R> {
    fn default() -> Self {
        Self {
            rel_tol: R::lit(1e-10),
            abs_tol: R::lit(1e-14),
            max_depth: 60,
        }
    }
}

impl<R: Real> QuadratureSettings<R> {
    pub fn new(rel_tol: R, abs_tol: R, max_depth: u32) -> Result<Self> {
        let s = Self {
            rel_tol,
            abs_tol,
            max_depth,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_rel_tol(mut self, rel_tol: R) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > R::zero()) || !(self.abs_tol > R::zero()) {
            return Err(NumericsError::InvalidSettings(
                "tolerances must be strictly positive".into(),
            ));
        }
        if self.max_depth < 1 {
            return Err(NumericsError::InvalidSettings("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<R> {
    pub value: R,
    pub error: R,
}

// Gauss-Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment<R> {
    a: R,
    b: R,
    value: R,
    error: R,
    depth: u32,
}

fn gauss_kronrod_15<R: Real, F: FnMut(R) -> R>(f: &mut F, a: R, b: R) -> Result<(R, R)> {
    let half = R::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let sample = |f: &mut F, x: R| -> Result<R> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFiniteIntegrand { x: x.as_f64() })
        }
    };

    let fc = sample(f, center)?;
    let mut res_k = fc * R::lit(WGK[7]);
    let mut res_g = fc * R::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [R::zero(); 7];
    let mut fv2 = [R::zero(); 7];
    for j in 0..7 {
        let dx = half_len * R::lit(XGK[j]);
        let f1 = sample(f, center - dx)?;
        let f2 = sample(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + R::lit(WGK[j]) * (f1 + f2);
        res_abs = res_abs + R::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + R::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = R::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + R::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let value = res_k * half_len;
    res_abs = res_abs * scale;
    res_asc = res_asc * scale;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != R::zero() && err != R::zero() {
        let ratio = (R::lit(200.0) * err / res_asc).powf(R::lit(1.5));
        err = if ratio < R::one() { res_asc * ratio } else { res_asc };
    }
    let floor = R::lit(50.0) * R::epsilon() * res_abs;
    if res_abs > R::min_positive_value() / (R::lit(50.0) * R::epsilon()) && floor > err {
        err = floor;
    }
    Ok((value, err))
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`, returning the
/// value together with its error estimate.
///
/// Subintervals are bisected in order of decreasing error estimate. The
/// integrand is never sampled at the endpoints, so integrable endpoint
/// singularities are admissible (see [`integrate_beta_type`] for the
/// `x^{-1/2}` case, which converges much faster after substitution).
pub fn integrate_with_error<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    a: R,
    b: R,
    settings: &QuadratureSettings<R>,
) -> Result<Integral<R>> {
    settings.validate()?;
    if !(a <= b) {
        return Err(NumericsError::Domain(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: R::zero(),
            error: R::zero(),
        });
    }
    let (value, error) = gauss_kronrod_15(&mut f, a, b)?;
    let mut segments = vec![Segment {
        a,
        b,
        value,
        error,
        depth: 0,
    }];
    // Each subdivision adds one segment; the cap keeps runaway integrands
    // from allocating without bound.
    let max_segments = 4096usize.max(8 * settings.max_depth as usize);
    loop {
        let total = segments.iter().fold(R::zero(), |s, g| s + g.value);
        let err_sum = segments.iter().fold(R::zero(), |s, g| s + g.error);
        let target = settings.abs_tol.max(settings.rel_tol * total.abs());
        if err_sum <= target {
            return Ok(Integral {
                value: total,
                error: err_sum,
            });
        }
        let pick = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.depth < settings.max_depth)
            .fold(None::<(usize, R)>, |best, (i, s)| match best {
                Some((_, e)) if e >= s.error => best,
                _ => Some((i, s.error)),
            });
        let idx = match pick {
            Some((i, _)) if segments.len() < max_segments => i,
            _ => {
                return Err(NumericsError::DepthExhausted {
                    estimate: total.as_f64(),
                    error_bound: err_sum.as_f64(),
                })
            }
        };
        let seg = segments[idx];
        let mid = R::lit(0.5) * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval no longer splittable in this precision.
            segments[idx].depth = settings.max_depth;
            continue;
        }
        let (lv, le) = gauss_kronrod_15(&mut f, seg.a, mid)?;
        let (rv, re) = gauss_kronrod_15(&mut f, mid, seg.b)?;
        segments[idx] = Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
            depth: seg.depth + 1,
        };
        segments.insert(
            idx + 1,
            Segment {
                a: mid,
                b: seg.b,
                value: rv,
                error: re,
                depth: seg.depth + 1,
            },
        );
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<R: Real, F: FnMut(R) -> R>(
    f: F,
    a: R,
    b: R,
    settings: &QuadratureSettings<R>,
) -> Result<R> {
    integrate_with_error(f, a, b, settings).map(|i| i.value)
}

/// Integrates over `[a, b]` after the substitution `x = a + (b - a) sin²(u)`,
/// which removes `(x - a)^{-1/2}` and `(b - x)^{-1/2}` endpoint singularities
/// (Beta-type integrands such as the Jeffreys prior).
pub fn integrate_beta_type<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    a: R,
    b: R,
    settings: &QuadratureSettings<R>,
) -> Result<Integral<R>> {
    if !(a <= b) {
        return Err(NumericsError::Domain(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    let width = b - a;
    let two = R::lit(2.0);
    integrate_with_error(
        |u: R| {
            let s = u.sin();
            let x = (a + width * s * s).min(b);
            let jac = width * (two * u).sin();
            if jac == R::zero() {
                R::zero()
            } else {
                f(x) * jac
            }
        },
        R::zero(),
        R::FRAC_PI_2(),
        settings,
    )
}

/// Sums adaptive integrals over consecutive pieces `[p0, p1], [p1, p2], ...`.
pub fn integrate_pieces<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    breakpoints: &[R],
    settings: &QuadratureSettings<R>,
) -> Result<Integral<R>> {
    let mut total = Integral {
        value: R::zero(),
        error: R::zero(),
    };
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let piece = integrate_with_error(&mut f, w[0], w[1], settings)?;
            total.value = total.value + piece.value;
            total.error = total.error + piece.error;
        }
    }
    Ok(total)
}

/// Neumaier-compensated summation; the result depends only on the order in
/// which terms are added.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSum<R> {
    sum: R,
    carry: R,
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self {
            sum: R::zero(),
            carry: R::zero(),
        }
    }
}

impl<R: Real> CompensatedSum<R> {
    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if !t.is_finite() {
            self.sum = t;
            return;
        }
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> R {
        if self.sum.is_finite() {
            self.sum + self.carry
        } else {
            self.sum
        }
    }
}

impl<R: Real> FromIterator<R> for CompensatedSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimResult<R> {
    pub argument: R,
    pub value: R,
    pub bracket_width: R,
}

const PRESCAN_POINTS: usize = 64;

/// Maximizes `f` on `[lo, hi]`: a 64-interval uniform pre-scan locates the
/// best grid point, then golden-section search narrows the bracket formed by
/// its two neighbours until it is no wider than `tol`.
pub fn maximize_1d<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    lo: R,
    hi: R,
    tol: R,
) -> Result<OptimResult<R>> {
    if !(lo < hi) {
        return Err(NumericsError::Domain(format!("empty search interval [{lo}, {hi}]")));
    }
    if !(tol > R::zero()) {
        return Err(NumericsError::InvalidSettings("tolerance must be positive".into()));
    }
    let mut eval = |x: R| -> Result<R> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFiniteObjective { x: x.as_f64() })
        }
    };
    let step = (hi - lo) / R::from_count(PRESCAN_POINTS as u64);
    let grid_point = |i: usize| {
        if i == PRESCAN_POINTS {
            hi
        } else {
            lo + step * R::from_count(i as u64)
        }
    };
    let mut best_i = 0usize;
    let mut best_x = lo;
    let mut best_v = eval(lo)?;
    for i in 1..=PRESCAN_POINTS {
        let x = grid_point(i);
        let v = eval(x)?;
        if v > best_v {
            best_i = i;
            best_x = x;
            best_v = v;
        }
    }
    let mut a = grid_point(best_i.saturating_sub(1));
    let mut b = grid_point((best_i + 1).min(PRESCAN_POINTS));

    let inv_phi = R::lit(0.618_033_988_749_894_9);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
        // Stalled in floating point.
        if !(c > a || d < b) {
            break;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    if best_x < a || best_x > b {
        // Golden section drifted away from a grid point that still wins; keep
        // the bracket consistent with the returned argument.
        a = (best_x - tol * R::lit(0.5)).max(lo);
        b = (best_x + tol * R::lit(0.5)).min(hi);
    }
    Ok(OptimResult {
        argument: best_x,
        value: best_v,
        bracket_width: (b - a).min(tol),
    })
}

/// Sharpens a maximizer of a smooth function beyond the `sqrt(eps)` limit of
/// comparison-based search by bisecting on the sign of the central-difference
/// derivative inside `[x0 - radius, x0 + radius] ∩ [lo, hi]`.
///
/// Returns `x0` unchanged when the derivative does not change sign there
/// (boundary maximum).
pub fn polish_maximum<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    x0: R,
    radius: R,
    lo: R,
    hi: R,
) -> R {
    // Five-point stencil: truncation O(h^4) lets h stay large enough that
    // rounding noise in f does not swamp the derivative.
    let h = R::lit(1e-4) * (R::one() + x0.abs()).min(radius.max(R::lit(1e-12)) * R::lit(1e2));
    let mut deriv = |x: R| {
        let step = h.min((x - lo) * R::lit(0.5)).min((hi - x) * R::lit(0.5));
        if !(step > R::zero()) {
            return R::zero();
        }
        let (f2p, f1p, f1m, f2m) = (f(x + step + step), f(x + step), f(x - step), f(x - step - step));
        (R::lit(8.0) * (f1p - f1m) - (f2p - f2m)) / (R::lit(12.0) * step)
    };
    let mut a = (x0 - radius).max(lo);
    let mut b = (x0 + radius).min(hi);
    let mut da = deriv(a);
    let db = deriv(b);
    if !(da > R::zero() && db < R::zero()) {
        return x0;
    }
    for _ in 0..200 {
        let m = R::lit(0.5) * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let dm = deriv(m);
        if !dm.is_finite() {
            return x0;
        }
        if dm > R::zero() {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    let _ = da;
    R::lit(0.5) * (a + b)
}

/// Finds a root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ
/// in sign.
pub fn bisect_root<R: Real, F: FnMut(R) -> R>(mut f: F, mut a: R, mut b: R, tol: R) -> R {
    let mut fa = f(a);
    for _ in 0..400 {
        let m = R::lit(0.5) * (a + b);
        if b - a <= tol || !(m > a && m < b) {
            break;
        }
        let fm = f(m);
        if (fm > R::zero()) == (fa > R::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    R::lit(0.5) * (a + b)
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn ln_gamma<R: Real>(x: R) -> R {
    if !(x > R::zero()) {
        return R::nan();
    }
    if x < R::lit(0.5) {
        return ln_gamma(x + R::one()) - x.ln();
    }
    if x >= R::lit(10.0) {
        // Stirling series through the x^{-13} term.
        let inv = x.recip();
        let inv2 = inv * inv;
        let coeffs = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360_360.0,
            1.0 / 156.0,
        ];
        let series = inv * coeffs.iter().rev().fold(R::zero(), |acc, &c| acc * inv2 + R::lit(c));
        return (x - R::lit(0.5)) * x.ln() - x + R::lit(0.918_938_533_204_672_7) + series;
    }
    let z = x - R::one();
    let mut acc = R::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + R::lit(c) / (z + R::from_count(i as u64));
    }
    let t = z + R::lit(LANCZOS_G + 0.5);
    R::lit(0.918_938_533_204_672_7) + (z + R::lit(0.5)) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta<R: Real>(a: R, b: R) -> R {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Longest rising factorial evaluated as a product rather than through
/// `ln Γ` differences.
pub const RISING_PRODUCT_LIMIT: u64 = 4096;

/// `ln x^(k)` for `k = 0..=n`, where `x^(k) = x (x+1) ... (x+k-1)`.
pub fn ln_rising_prefix<R: Real>(x: R, n: u64) -> Vec<R> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = CompensatedSum::default();
    out.push(R::zero());
    for i in 0..n {
        acc.add((x + R::from_count(i)).ln());
        out.push(acc.value());
    }
    out
}

/// `ln B(a + s, b + t) - ln B(a, b)`. Integer offsets with `s + t` up to
/// [`RISING_PRODUCT_LIMIT`] use rising factorials, which keep full relative
/// precision when `a` and `b` are large.
pub fn ln_beta_ratio<R: Real>(a: R, b: R, s: R, t: R) -> R {
    let whole = |v: R| v >= R::zero() && v.fract() == R::zero();
    if whole(s) && whole(t) && s + t <= R::from_count(RISING_PRODUCT_LIMIT) {
        let (s, t) = (s.as_f64() as u64, t.as_f64() as u64);
        let rise = |x: R, k: u64| {
            (0..k).fold(CompensatedSum::default(), |mut acc, i| {
                acc.add((x + R::from_count(i)).ln());
                acc
            })
        };
        let mut acc = rise(a, s);
        acc.add(rise(b, t).value());
        acc.add(-rise(a + b, s + t).value());
        return acc.value();
    }
    ln_beta(a + s, b + t) - ln_beta(a, b)
}

/// `ln(e^a + e^b)` without overflow; `-inf` is the identity.
pub fn ln_add_exp<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
pub fn ln_sub_exp<R: Real>(a: R, b: R) -> R {
    if b == R::neg_infinity() {
        return a;
    }
    if b >= a {
        return R::neg_infinity();
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `ln Σ exp(x_i)`.
pub fn ln_sum_exp<R: Real>(xs: &[R]) -> R {
    let m = xs.iter().fold(R::neg_infinity(), |m, &x| m.max(x));
    if m == R::neg_infinity() || !m.is_finite() {
        return m;
    }
    let s = xs.iter().fold(R::zero(), |s, &x| s + (x - m).exp());
    m + s.ln()
}

/// The error function, accurate to about `1e-15` in `f64`; `erf(-x) = -erf(x)`
/// holds exactly.
pub fn erf<R: Real>(x: R) -> R {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let magnitude = if ax < R::lit(3.0) {
        // erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (1*3*...*(2n+1)),
        // all terms positive.
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        let mut k = R::one();
        loop {
            term = term * R::lit(2.0) * x2 / (R::lit(2.0) * k + R::one());
            sum = sum + term;
            if term <= sum * R::epsilon() {
                break;
            }
            k = k + R::one();
        }
        R::FRAC_2_SQRT_PI() * (-x2).exp() * sum
    } else if ax < R::lit(9.0) {
        R::one() - erfc_continued_fraction(ax)
    } else {
        R::one()
    };
    if x < R::zero() {
        -magnitude
    } else {
        magnitude
    }
}

/// `erfc(x)` for `x >= 3` via the Laplace continued fraction (modified Lentz).
fn erfc_continued_fraction<R: Real>(x: R) -> R {
    let tiny = R::lit(1e-300).max(R::min_positive_value());
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut f = x;
    let mut c = x;
    let mut d = R::zero();
    for n in 1..500u64 {
        let an = R::from_count(n) * R::lit(0.5);
        d = x + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - R::one()).abs() < R::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (R::PI().sqrt() * f)
}

/// `ln γ(a, x)`, the log of the lower incomplete Gamma function.
pub fn ln_lower_incomplete_gamma<R: Real>(a: R, x: R) -> Result<R> {
    if !(a > R::zero()) {
        return Err(NumericsError::Domain(format!("incomplete gamma needs a > 0, got {a}")));
    }
    if !(x >= R::zero()) {
        return Err(NumericsError::Domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    if x == R::zero() {
        return Ok(R::neg_infinity());
    }
    if x.is_infinite() {
        return Ok(ln_gamma(a));
    }
    if x < a + R::one() {
        let mut ap = a;
        let mut del = a.recip();
        let mut sum = del;
        for _ in 0..100_000 {
            ap = ap + R::one();
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * R::epsilon() {
                break;
            }
        }
        Ok(-x + a * x.ln() + sum.ln())
    } else {
        let ln_upper = ln_upper_incomplete_gamma_cf(a, x);
        let ln_gamma_a = ln_gamma(a);
        Ok(ln_gamma_a + (-(ln_upper - ln_gamma_a).exp()).ln_1p())
    }
}

/// `ln Γ(a, x)` by continued fraction, valid for `x >= a + 1`.
fn ln_upper_incomplete_gamma_cf<R: Real>(a: R, x: R) -> R {
    let tiny = R::lit(1e-300).max(R::min_positive_value());
    let mut b = x + R::one() - a;
    let mut c = tiny.recip();
    let mut d = b.recip();
    let mut h = d;
    for i in 1..100_000u64 {
        let fi = R::from_count(i);
        let an = -fi * (fi - a);
        b = b + R::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - R::one()).abs() < R::epsilon() {
            break;
        }
    }
    -x + a * x.ln() + h.ln()
}

/// The lower incomplete Gamma function `γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt`.
pub fn lower_incomplete_gamma<R: Real>(a: R, x: R) -> Result<R> {
    ln_lower_incomplete_gamma(a, x).map(|l| l.exp())
}

/// Continued fraction for the incomplete Beta function (modified Lentz).
fn beta_cf<R: Real>(a: R, b: R, x: R) -> R {
    let tiny = R::lit(1e-300).max(R::min_positive_value());
    let qab = a + b;
    let qap = a + R::one();
    let qam = a - R::one();
    let mut c = R::one();
    let mut d = R::one() - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    let max_iter = 10_000 + (20.0 * a.max(b).as_f64().sqrt()) as u64;
    for m in 1..max_iter {
        let m = R::from_count(m);
        let m2 = R::lit(2.0) * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = R::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = R::one() + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = R::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = R::one() + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - R::one()).abs() < R::epsilon() {
            break;
        }
    }
    h
}

/// Log of the regularized incomplete Beta function and of its complement:
/// returns `(ln I_x(a, b), ln(1 - I_x(a, b)))`, each accurate in relative
/// terms even when the other is close to zero.
pub fn ln_beta_cdf<R: Real>(a: R, b: R, x: R) -> (R, R) {
    if x <= R::zero() {
        return (R::neg_infinity(), R::zero());
    }
    if x >= R::one() {
        return (R::zero(), R::neg_infinity());
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + R::one()) / (a + b + R::lit(2.0)) {
        let ln_i = ln_front + beta_cf(a, b, x).ln() - a.ln();
        (ln_i, (-ln_i.exp()).ln_1p())
    } else {
        let ln_c = ln_front + beta_cf(b, a, R::one() - x).ln() - b.ln();
        ((-ln_c.exp()).ln_1p(), ln_c)
    }
}

/// Regularized incomplete Beta function `I_x(a, b)`.
pub fn beta_cdf<R: Real>(a: R, b: R, x: R) -> R {
    ln_beta_cdf(a, b, x).0.exp()
}

/// `ln P(lo < θ <= hi)` for `θ ~ Beta(a, b)`, computed from whichever tail
/// representation avoids cancellation.
pub fn ln_beta_interval_mass<R: Real>(a: R, b: R, lo: R, hi: R) -> R {
    if !(hi > lo) {
        return R::neg_infinity();
    }
    let (li_hi, lc_hi) = ln_beta_cdf(a, b, hi);
    let (li_lo, lc_lo) = ln_beta_cdf(a, b, lo);
    ln_interval_from_tails(li_lo, lc_lo, li_hi, lc_hi)
}

/// Combines `(ln F(lo), ln(1-F(lo)))` and `(ln F(hi), ln(1-F(hi)))` into
/// `ln(F(hi) - F(lo))`.
pub fn ln_interval_from_tails<R: Real>(li_lo: R, lc_lo: R, li_hi: R, lc_hi: R) -> R {
    let half = R::lit(0.5).ln();
    if li_hi <= half {
        ln_sub_exp(li_hi, li_lo)
    } else if lc_lo <= half {
        ln_sub_exp(lc_lo, lc_hi)
    } else {
        // Both tails are at least 1/2 away from the interval.
        (R::one() - li_lo.exp() - lc_hi.exp()).max(R::zero()).ln()
    }
}

/// For `t = 0..=m`, the pair `(ln I_x(t+α, m-t+β), ln(1 - I_x(t+α, m-t+β)))`
/// computed in `O(m)` from two continued-fraction evaluations and the
/// telescoping identity `I_x(p, q) - I_x(p+1, q-1) = x^p (1-x)^{q-1} / (p B(p, q))`.
pub fn beta_cdf_sweep<R: Real>(alpha: R, beta: R, m: u64, x: R) -> Vec<(R, R)> {
    let n = m as usize + 1;
    if x <= R::zero() {
        return vec![(R::neg_infinity(), R::zero()); n];
    }
    if x >= R::one() {
        return vec![(R::zero(), R::neg_infinity()); n];
    }
    let mf = R::from_count(m);
    let lx = x.ln();
    let l1x = (-x).ln_1p();
    // ln of I(t) - I(t+1), t = 0..m-1.
    let steps: Vec<R> = (0..m)
        .map(|t| {
            let p = R::from_count(t) + alpha;
            let q = mf - R::from_count(t) + beta;
            p * lx + (q - R::one()) * l1x - p.ln() - ln_beta(p, q)
        })
        .collect();
    let (li_last, _) = ln_beta_cdf(mf + alpha, beta, x);
    let (_, lc_first) = ln_beta_cdf(alpha, mf + beta, x);
    let mut lower = vec![R::neg_infinity(); n];
    let mut acc = li_last;
    lower[n - 1] = acc;
    for t in (0..n - 1).rev() {
        acc = ln_add_exp(acc, steps[t]);
        lower[t] = acc;
    }
    let mut upper = vec![R::neg_infinity(); n];
    let mut acc = lc_first;
    upper[0] = acc;
    for t in 1..n {
        acc = ln_add_exp(acc, steps[t - 1]);
        upper[t] = acc;
    }
    lower
        .into_iter()
        .zip(upper)
        .map(|(li, lc)| (li.min(R::zero()), lc.min(R::zero())))
        .collect()
}

/// `ln C(m, t)`; exact integer arithmetic for `m <= 60`.
pub fn log_binomial(m: u64, t: u64) -> Result<f64> {
    if t > m {
        return Err(NumericsError::Domain(format!("binomial C({m}, {t}) with t > m")));
    }
    if m <= 60 {
        return Ok((binomial_exact(m, t) as f64).ln());
    }
    Ok(ln_gamma((m + 1) as f64) - ln_gamma((t + 1) as f64) - ln_gamma((m - t + 1) as f64))
}

/// `C(m, t)` as an exact integer; callers keep `m <= 60` so the result fits.
pub fn binomial_exact(m: u64, t: u64) -> u128 {
    let t = t.min(m - t);
    let mut c: u128 = 1;
    for i in 0..t {
        c = c * (m - i) as u128 / (i + 1) as u128;
    }
    c
}
