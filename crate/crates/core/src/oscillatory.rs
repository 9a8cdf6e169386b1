//! Exponential sums over the numerators of a curve, their oscillatory-integral
//! counterparts, stationary points and the resonance census.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::curve::Curve;
use crate::error::{invalid, Result};
use crate::quad::{integrate, integrate_capped, QuadResult};
use crate::scalar::{centered_frac, dist_to_int, CompensatedSum, Real};

/// `e(x) = exp(2 pi i x)`.
#[inline]
pub fn e<T: Real>(x: T) -> Complex<T> {
    let (sin, cos) = (T::TAU() * centered_frac(x)).sin_cos();
    Complex::new(cos, sin)
}

fn nonzero(k: i64) -> Result<()> {
    if k == 0 {
        return Err(invalid("frequency k must be nonzero"));
    }
    Ok(())
}

/// Half-width `mu = (xi - eta)/2` of the window around a stationary point.
pub fn window_half_width(curve: &Curve) -> f64 {
    (curve.xi() - curve.eta()) / 2.0
}

/// `sum_{eta q < a <= xi q} e(k q f(a/q))`.
pub fn exp_sum<T: Real>(curve: &Curve, k: i64, q: u64) -> Result<Complex<T>> {
    nonzero(k)?;
    if q == 0 {
        return Err(invalid("q must be positive"));
    }
    let (a_lo, a_hi) = curve.numerator_range(q);
    let qt = T::from_int(q as i64);
    let kt = T::from_int(k);
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for a in a_lo..=a_hi {
        // k q f(a/q) mod 1 only depends on q f(a/q) mod 1.
        let v = qt * curve.f(T::from_int(a) / qt);
        let w = e(kt * centered_frac(v));
        re.add(w.re);
        im.add(w.im);
    }
    Ok(Complex::new(re.value(), im.value()))
}

/// Summation ranges for `h` attached to a frequency `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexBounds {
    pub k: i64,
    /// `floor(inf k f') - 1`
    pub big_h_minus: i64,
    /// `ceil(sup k f') + 1`
    pub big_h_plus: i64,
    /// `ceil(inf k f') + 1`
    pub h_minus: i64,
    /// `floor(sup k f') - 1`
    pub h_plus: i64,
}

impl IndexBounds {
    /// `max(|H-|, |H+|)`
    pub fn big_h(&self) -> i64 {
        self.big_h_minus.abs().max(self.big_h_plus.abs())
    }

    /// `H- <= h <= H+`
    pub fn full_range(&self) -> std::ops::RangeInclusive<i64> {
        self.big_h_minus..=self.big_h_plus
    }

    /// `h- < h < h+`, the frequencies with an interior stationary point.
    pub fn stationary_range(&self) -> std::ops::RangeInclusive<i64> {
        (self.h_minus + 1)..=(self.h_plus - 1)
    }

    pub fn is_degenerate(&self) -> bool {
        self.stationary_range().is_empty()
    }
}

/// Extremes of `k f'` on `[eta, xi]`, exact for polynomial curves.
fn derivative_extremes(curve: &Curve, k: i64) -> (Extreme, Extreme) {
    let (lo, hi) = match curve.exact_form() {
        Some(p) => {
            let d = p.derivative();
            let kr = BigRational::from_integer(k.into());
            (Extreme::Exact(d.eval_exact(curve.eta_exact()) * &kr), Extreme::Exact(d.eval_exact(curve.xi_exact()) * kr))
        }
        None => {
            let kf = k as f64;
            (Extreme::Float(kf * curve.f1(curve.eta())), Extreme::Float(kf * curve.f1(curve.xi())))
        }
    };
    if lo.value() <= hi.value() {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

enum Extreme {
    Exact(BigRational),
    Float(f64),
}

impl Extreme {
    fn value(&self) -> f64 {
        match self {
            Extreme::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Extreme::Float(x) => *x,
        }
    }

    fn floor(&self) -> i64 {
        match self {
            Extreme::Exact(r) => r.floor().to_integer().to_i64().expect("index bound fits in i64"),
            Extreme::Float(x) => x.floor() as i64,
        }
    }

    fn ceil(&self) -> i64 {
        match self {
            Extreme::Exact(r) => r.ceil().to_integer().to_i64().expect("index bound fits in i64"),
            Extreme::Float(x) => x.ceil() as i64,
        }
    }

    /// `self < h`
    fn strictly_below(&self, h: i64) -> bool {
        match self {
            Extreme::Exact(r) => r < &BigRational::from_integer(h.into()),
            Extreme::Float(x) => *x < h as f64,
        }
    }

    /// `self > h`
    fn strictly_above(&self, h: i64) -> bool {
        match self {
            Extreme::Exact(r) => r > &BigRational::from_integer(h.into()),
            Extreme::Float(x) => *x > h as f64,
        }
    }
}

/// `H-`, `H+`, `h-`, `h+` from the endpoint values of `k f'` (which is monotone).
pub fn index_bounds(curve: &Curve, k: i64) -> Result<IndexBounds> {
    nonzero(k)?;
    let (inf, sup) = derivative_extremes(curve, k);
    Ok(IndexBounds {
        k,
        big_h_minus: inf.floor() - 1,
        big_h_plus: sup.ceil() + 1,
        h_minus: inf.ceil() + 1,
        h_plus: sup.floor() - 1,
    })
}

/// Stationary point `beta_h` of `k f(beta) - h beta` and the phase value there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint<T> {
    pub k: i64,
    pub h: i64,
    pub beta_h: T,
    /// `||k f(beta_h) - h beta_h||`
    pub lambda_h: T,
    /// `|k f'(beta_h) - h|`
    pub residual: T,
}

/// Solves `k f'(beta) = h` on `[eta, xi]` by Newton's method from the midpoint,
/// falling back to bisection whenever a step leaves the bracket.
pub fn stationary_point<T: Real>(curve: &Curve, k: i64, h: i64) -> Result<PhasePoint<T>> {
    nonzero(k)?;
    let (inf, sup) = derivative_extremes(curve, k);
    if !(inf.strictly_below(h) && sup.strictly_above(h)) {
        return Err(invalid(format!(
            "h = {h} is not strictly between inf and sup of {k} f' ({}, {})",
            inf.value(),
            sup.value()
        )));
    }
    let kt = T::from_int(k);
    let ht = T::from_int(h);
    let g = |b: T| kt * curve.f1(b) - ht;
    let mut lo = T::lit(curve.eta());
    let mut hi = T::lit(curve.xi());
    let g_lo_negative = g(lo) < T::zero();
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0) * (ht.abs() + T::one())) * kt.abs();
    let two = T::lit(2.0);
    let mut x = (lo + hi) / two;
    for _ in 0..200 {
        let gx = g(x);
        if gx.abs() <= tol / T::lit(4.0) {
            break;
        }
        if (gx < T::zero()) == g_lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let step = gx / (kt * curve.f2(x));
        let newton = x - step;
        let next = if newton > lo && newton < hi { newton } else { (lo + hi) / two };
        if next == x {
            break;
        }
        x = next;
    }
    let residual = g(x).abs();
    if residual > tol {
        return Err(invalid(format!("stationary point for (k, h) = ({k}, {h}) left residual {residual}")));
    }
    let lambda_h = dist_to_int(kt * curve.f(x) - ht * x);
    Ok(PhasePoint { k, h, beta_h: x, lambda_h, residual })
}

/// Phase cycles per initial panel for [`block_integral`]. The weighted sum over
/// `q` is smooth between its peaks, and error control refines where needed.
pub const BLOCK_CYCLES_PER_PANEL: f64 = 1.0;

/// Absolute error target per unit length for the oscillatory integrals.
fn unit_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// Phase cycles of `q (k f(beta) - h beta)` over `[a, b]`; `k f' - h` is monotone,
/// so its modulus peaks at an endpoint.
fn phase_advance<T: Real>(curve: &Curve, k: T, h: T, q: T, a: T, b: T) -> T {
    let ra = (k * curve.eval_extended_d1(a) - h).abs();
    let rb = (k * curve.eval_extended_d1(b) - h).abs();
    q * ra.max(rb) * (b - a)
}

/// `q int_lo^hi e(q (k f(beta) - h beta)) d beta` with error estimate, using
/// the extended curve outside `[eta, xi]`.
pub fn osc_integral_with_error<T: Real>(curve: &Curve, k: i64, h: i64, q: u64, lo: T, hi: T) -> Result<QuadResult<T>> {
    nonzero(k)?;
    if q == 0 {
        return Err(invalid("q must be positive"));
    }
    let (kt, ht, qt) = (T::from_int(k), T::from_int(h), T::from_int(q as i64));
    let integrand = |b: T| e(qt * centered_frac(kt * curve.eval_extended(b) - ht * b));
    let advance = |a: T, b: T| phase_advance(curve, kt, ht, qt, a, b);
    let r = integrate(integrand, advance, lo, hi, unit_tolerance::<T>() * (hi - lo))?;
    Ok(QuadResult { value: r.value * qt, error: r.error * qt, panels: r.panels })
}

/// `q int_lo^hi e(q (k f(beta) - h beta)) d beta`.
pub fn osc_integral<T: Real>(curve: &Curve, k: i64, h: i64, q: u64, lo: T, hi: T) -> Result<Complex<T>> {
    osc_integral_with_error(curve, k, h, q, lo, hi).map(|r| r.value)
}

/// `sum_{q=a}^{b} q e(q phi)`, in closed form away from integer `phi`.
pub fn weighted_geometric_sum(phi: f64, a: u64, b: u64) -> Complex<f64> {
    if a > b {
        return Complex::new(0.0, 0.0);
    }
    let phi = centered_frac(phi);
    let z = e(phi);
    let w = Complex::new(1.0, 0.0) - z;
    if w.norm() * (b as f64) < 1.0 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for q in a..=b {
            let t = e(q as f64 * phi) * q as f64;
            re.add(t.re);
            im.add(t.im);
        }
        return Complex::new(re.value(), im.value());
    }
    let za = e(a as f64 * phi);
    let zb = e((b + 1) as f64 * phi);
    (za * a as f64 - zb * (b + 1) as f64) / w + z * (za - zb) / (w * w)
}

/// `sum_{Q < q <= 2Q} q int_lo^hi e(q (k f(beta) - h beta)) d beta`.
///
/// The `q`-sum is taken inside the integral as a weighted geometric sum, so
/// the cost does not grow with the number of denominators.
pub fn block_integral(curve: &Curve, k: i64, h: i64, q_bound: f64, lo: f64, hi: f64) -> Result<QuadResult<f64>> {
    nonzero(k)?;
    let a = q_bound.floor() as u64 + 1;
    let b = (2.0 * q_bound).floor() as u64;
    if a > b {
        return Ok(QuadResult { value: Complex::new(0.0, 0.0), error: 0.0, panels: 0 });
    }
    let (kf, hf) = (k as f64, h as f64);
    let weight: f64 = (a..=b).map(|q| q as f64).sum();
    let integrand = |beta: f64| weighted_geometric_sum(kf * curve.eval_extended(beta) - hf * beta, a, b);
    let advance = |x: f64, y: f64| phase_advance(curve, kf, hf, b as f64, x, y);
    integrate_capped(integrand, advance, lo, hi, unit_tolerance::<f64>() * (hi - lo) * weight, BLOCK_CYCLES_PER_PANEL)
}

/// Both sides of the truncated Poisson summation for one `(k, q)`.
#[derive(Debug, Clone, Serialize)]
pub struct SumIntegralReport {
    pub k: i64,
    pub q: u64,
    pub bounds: IndexBounds,
    pub exp_sum_re: f64,
    pub exp_sum_im: f64,
    pub integral_re: f64,
    pub integral_im: f64,
    pub difference: f64,
    /// `|difference| / log(2 + H)`
    pub normalized: f64,
}

/// Compares `exp_sum(k, q)` with `sum_{H- <= h <= H+} q int_eta^xi e(q (k f - h beta))`.
pub fn sum_integral_compare(curve: &Curve, k: i64, q: u64) -> Result<SumIntegralReport> {
    let bounds = index_bounds(curve, k)?;
    let s: Complex<f64> = exp_sum(curve, k, q)?;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for h in bounds.full_range() {
        let v: Complex<f64> = osc_integral(curve, k, h, q, curve.eta(), curve.xi())?;
        re.add(v.re);
        im.add(v.im);
    }
    let integral = Complex::new(re.value(), im.value());
    let difference = (s - integral).norm();
    Ok(SumIntegralReport {
        k,
        q,
        bounds,
        exp_sum_re: s.re,
        exp_sum_im: s.im,
        integral_re: integral.re,
        integral_im: integral.im,
        difference,
        normalized: difference / (2.0 + bounds.big_h() as f64).ln(),
    })
}

/// All stationary points `h- < h < h+` for frequency `k`.
pub fn phase_points(curve: &Curve, k: i64) -> Result<Vec<PhasePoint<f64>>> {
    let bounds = index_bounds(curve, k)?;
    bounds.stationary_range().map(|h| stationary_point(curve, k, h)).collect()
}

/// Number of pairs `(k, h)`, `0 < |k| <= K`, `h- < h < h+`, with `lambda_h <= 1/Q`.
pub fn small_lambda_census(curve: &Curve, k_max: u64, q_bound: f64) -> Result<u64> {
    if !(q_bound > 0.0) {
        return Err(invalid(format!("Q must be positive, got {q_bound}")));
    }
    let threshold = 1.0 / q_bound;
    let mut total = 0;
    for k in 1..=k_max as i64 {
        for kk in [k, -k] {
            total += phase_points(curve, kk)?.iter().filter(|p| p.lambda_h <= threshold).count() as u64;
        }
    }
    Ok(total)
}
