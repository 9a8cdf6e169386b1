//! Selberg majorant and minorant trigonometric polynomials for `J = (-delta, delta)`.
//!
//! The coefficients come from Vaaler's extremal approximation of the sawtooth,
//! combined with the Fejer kernel. For `0 < |k| <= K`, with `t = |k|/(K+1)`,
//!
//! ```text
//! S(k) = Phi(t) sin(2 pi k delta)/(pi k) +/- (1 - t) cos(2 pi k delta)/(K+1)
//! Phi(t) = pi t (1 - t) cot(pi t) + t
//! ```
//!
//! and `S(0) = 2 delta +/- 1/(K+1)`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{invalid, Error, Result};
use crate::lattice::{count, CountOptions, CountQuery, Mode};
use crate::oscillatory::e;
use crate::scalar::{centered_frac, CompensatedSum, Real};

/// Smallest grid accepted by [`SelbergPolynomial::verify`].
pub const MIN_VERIFY_GRID: usize = 1000;

/// Violations listed individually in a report; the rest are only counted.
const MAX_LISTED: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Majorant,
    Minorant,
}

impl Sign {
    fn factor<T: Real>(self) -> T {
        match self {
            Sign::Majorant => T::one(),
            Sign::Minorant => -T::one(),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Sign::Majorant => Sign::Minorant,
            Sign::Minorant => Sign::Majorant,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Majorant => "plus",
            Sign::Minorant => "minus",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "majorant" => Ok(Sign::Majorant),
            "minus" | "-" | "minorant" => Ok(Sign::Minorant),
            _ => Err(invalid(format!("unknown sign `{s}` (expected plus or minus)"))),
        }
    }
}

/// `Phi(t) = pi t (1 - t) cot(pi t) + t` on `[0, 1)`, with `Phi(0) = 1`.
fn vaaler_phi<T: Real>(t: T) -> T {
    if t == T::zero() {
        return T::one();
    }
    let pt = T::PI() * t;
    pt * (T::one() - t) / pt.tan() + t
}

/// Fourier coefficient `sin(2 pi k delta)/(pi k)` of the indicator of `(-delta, delta)`.
pub fn indicator_coefficient<T: Real>(k: i64, delta: T) -> T {
    if k == 0 {
        return delta + delta;
    }
    let kt = T::from_int(k);
    (T::TAU() * centered_frac(kt * delta)).sin() / (T::PI() * kt)
}

/// A real trigonometric polynomial of degree at most `K` bounding the
/// indicator of `(-delta, delta)` on the torus from above or below.
#[derive(Debug, Clone, PartialEq)]
pub struct SelbergPolynomial<T> {
    sign: Sign,
    k_max: usize,
    delta: T,
    /// `coeffs[K + k]` holds `S(k)` for `k = -K..=K`.
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SelbergPolynomial<T> {
    pub fn build(sign: Sign, k_max: usize, delta: T) -> Result<Self> {
        check_params(k_max, delta)?;
        let kp1 = T::from_int(k_max as i64 + 1);
        let s = sign.factor::<T>();
        let k = k_max as i64;
        let coeffs = (-k..=k)
            .map(|j| {
                let t = T::from_int(j.abs()) / kp1;
                let fejer = (T::one() - t) / kp1;
                let value = if j == 0 {
                    delta + delta + s / kp1
                } else {
                    let phase = T::TAU() * centered_frac(T::from_int(j) * delta);
                    vaaler_phi(t) * indicator_coefficient(j, delta) + s * fejer * phase.cos()
                };
                Complex::new(value, T::zero())
            })
            .collect();
        Ok(Self { sign, k_max, delta, coeffs })
    }

    /// Wraps arbitrary coefficients `S(-K), ..., S(K)` without checking the
    /// extremal properties; [`verify`](Self::verify) reports what holds.
    pub fn from_coefficients(sign: Sign, delta: T, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(invalid(format!("expected 2K+1 coefficients, got {}", coeffs.len())));
        }
        let k_max = coeffs.len() / 2;
        check_params(k_max, delta)?;
        Ok(Self { sign, k_max, delta, coeffs })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// `S(k)`, zero outside `|k| <= K`.
    pub fn coeff(&self, k: i64) -> Complex<T> {
        if k.unsigned_abs() as usize > self.k_max {
            return Complex::new(T::zero(), T::zero());
        }
        self.coeffs[(k + self.k_max as i64) as usize]
    }

    /// Coefficients for `k = -K..=K` in order.
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// `2 delta +/- 1/(K+1)`, the integral over one period.
    pub fn expected_mean(&self) -> T {
        self.delta + self.delta + self.sign.factor::<T>() / T::from_int(self.k_max as i64 + 1)
    }

    /// Unit-scale tolerance for floating comparisons in `T`.
    fn tolerance(&self, floor: f64) -> T {
        T::lit(floor).max(T::epsilon() * T::from_int(16 * (self.k_max as i64 + 1)))
    }

    /// `sum_{|k| <= K} S(k) e(k alpha)`, summed with compensation.
    pub fn eval(&self, alpha: T) -> T {
        let alpha = alpha - alpha.floor();
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(self.coeff(0).re);
        im.add(self.coeff(0).im);
        for k in 1..=self.k_max as i64 {
            let w = e(T::from_int(k) * alpha);
            let pos = self.coeff(k) * w;
            let neg = self.coeff(-k) * w.conj();
            re.add(pos.re);
            re.add(neg.re);
            im.add(pos.im);
            im.add(neg.im);
        }
        let residue = im.value();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(T::one(), |a, b| a + b);
        debug_assert!(
            residue.abs() <= self.tolerance(1e-12) * scale,
            "imaginary residue {residue} in Selberg evaluation"
        );
        re.value()
    }

    /// Checks the extremal properties on the grid `alpha_j = j/N`, `0 <= j < N`.
    pub fn verify(&self, grid_size: usize) -> Result<VerifyReport<T>> {
        if grid_size < MIN_VERIFY_GRID {
            return Err(invalid(format!("verify grid must have at least {MIN_VERIFY_GRID} points, got {grid_size}")));
        }
        let companion = Self::build(self.sign.opposite(), self.k_max, self.delta)?;
        let tol = self.tolerance(1e-9);
        let table = TrigTable::new(grid_size);
        let delta = self.delta;
        let sign = self.sign;

        let (listed, total, worst) = (0..grid_size)
            .into_par_iter()
            .with_min_len(256)
            .fold(
                || (Vec::new(), 0usize, T::neg_infinity()),
                |(mut listed, mut total, mut worst), j| {
                    let alpha = T::from_int(j as i64) / T::from_int(grid_size as i64);
                    let mine = table.eval(self, j);
                    let other = table.eval(&companion, j);
                    let d = crate::scalar::dist_to_int(alpha);
                    // The majorant must dominate the closed interval, the
                    // minorant must sit below the open one.
                    let (excess, kind) = match sign {
                        Sign::Majorant => {
                            let chi = if d <= delta { T::one() } else { T::zero() };
                            (chi - mine, ViolationKind::BelowIndicator)
                        }
                        Sign::Minorant => {
                            let chi = if d < delta { T::one() } else { T::zero() };
                            (mine - chi, ViolationKind::AboveIndicator)
                        }
                    };
                    let order_gap = match sign {
                        Sign::Majorant => other - mine,
                        Sign::Minorant => mine - other,
                    };
                    for (gap, kind) in [(excess, kind), (order_gap, ViolationKind::Crossing)] {
                        worst = worst.max(gap);
                        if gap > tol {
                            total += 1;
                            if listed.len() < MAX_LISTED {
                                listed.push(Violation { alpha, value: mine, kind });
                            }
                        }
                    }
                    (listed, total, worst)
                },
            )
            .reduce(
                || (Vec::new(), 0, T::neg_infinity()),
                |(mut a, ta, wa), (b, tb, wb)| {
                    a.extend(b);
                    a.sort_by(|x: &Violation<T>, y| x.alpha.partial_cmp(&y.alpha).unwrap_or(std::cmp::Ordering::Equal));
                    a.truncate(MAX_LISTED);
                    (a, ta + tb, wa.max(wb))
                },
            );

        let mean_error = (self.coeff(0).re - self.expected_mean()).abs();
        let zero_tol = self.tolerance(1e-14);
        let c0 = self.coeff(0).norm();
        let slack = T::epsilon() * T::lit(4.0);
        let k = self.k_max as i64;
        let domination_violations: Vec<i64> =
            (-k..=k).filter(|&j| self.coeff(j).norm() > c0 * (T::one() + slack) + T::min_positive_value()).collect();
        let bound = T::one() / T::from_int(k + 1);
        let mut max_proximity_gap = T::zero();
        let mut proximity_violations = Vec::new();
        for j in (-k..=k).filter(|&j| j != 0) {
            let gap = (self.coeff(j) - Complex::new(indicator_coefficient(j, delta), T::zero())).norm();
            max_proximity_gap = max_proximity_gap.max(gap);
            if gap > bound + slack {
                proximity_violations.push(j);
            }
        }
        let symmetry_error = (1..=k)
            .map(|j| (self.coeff(-j) - self.coeff(j).conj()).norm())
            .fold(T::zero(), T::max);

        Ok(VerifyReport {
            sign: self.sign,
            k_max: self.k_max,
            delta: self.delta,
            grid_size,
            tolerance: tol,
            sandwich_violations: listed,
            sandwich_violation_count: total,
            worst_sandwich_excess: worst,
            mean: self.coeff(0).re,
            mean_error,
            mean_ok: mean_error <= zero_tol,
            symmetry_error,
            domination_violations,
            max_proximity_gap,
            proximity_violations,
            negative_integral: self.coeff(0).re < T::zero(),
        })
    }

    /// Writes the coefficients as CSV with columns `k,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let k = self.k_max as i64;
        for (j, c) in (-k..=k).zip(&self.coeffs) {
            w.serialize(CoeffRow { k: j, re: c.re.as_f64(), im: c.im.as_f64() })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn dump_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads coefficients written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(sign: Sign, delta: T, reader: R) -> Result<Self> {
        let mut rows: Vec<CoeffRow> = csv::Reader::from_reader(reader).deserialize().collect::<Result<_, _>>()?;
        rows.sort_by_key(|r| r.k);
        let k = rows.len() as i64 / 2;
        if rows.iter().map(|r| r.k).ne(-k..=k) {
            return Err(invalid("coefficient rows must cover k = -K..=K exactly once"));
        }
        let coeffs = rows.iter().map(|r| Complex::new(T::lit(r.re), T::lit(r.im))).collect();
        Self::from_coefficients(sign, delta, coeffs)
    }
}

fn check_params<T: Real>(k_max: usize, delta: T) -> Result<()> {
    if k_max == 0 {
        return Err(invalid("K must be a positive integer"));
    }
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return Err(invalid(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CoeffRow {
    k: i64,
    re: f64,
    im: f64,
}

/// `cos` and `sin` of `2 pi m / N` for exact grid evaluation by index arithmetic.
struct TrigTable<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> TrigTable<T> {
    fn new(n: usize) -> Self {
        let nt = T::from_int(n as i64);
        let (cos, sin) = (0..n)
            .map(|m| {
                let theta = T::TAU() * centered_frac(T::from_int(m as i64) / nt);
                (theta.cos(), theta.sin())
            })
            .unzip();
        Self { cos, sin }
    }

    fn eval(&self, p: &SelbergPolynomial<T>, j: usize) -> T {
        let n = self.cos.len();
        let k = p.k_max;
        let step = j % n;
        let mut idx = ((n - step) * (k % n)) % n; // index of -K * j mod N
        let mut acc = CompensatedSum::new();
        for c in &p.coeffs {
            acc.add(c.re * self.cos[idx] - c.im * self.sin[idx]);
            idx += step;
            if idx >= n {
                idx -= n;
            }
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A majorant below the indicator.
    BelowIndicator,
    /// A minorant above the indicator.
    AboveIndicator,
    /// Majorant below minorant.
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation<T> {
    pub alpha: T,
    pub value: T,
    pub kind: ViolationKind,
}

/// Outcome of [`SelbergPolynomial::verify`]. Failures are listed, not raised.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport<T> {
    pub sign: Sign,
    pub k_max: usize,
    pub delta: T,
    pub grid_size: usize,
    pub tolerance: T,
    /// The first violations in grid order.
    pub sandwich_violations: Vec<Violation<T>>,
    pub sandwich_violation_count: usize,
    /// Largest amount by which a sandwich or ordering inequality is exceeded (`<= 0` when strict).
    pub worst_sandwich_excess: T,
    pub mean: T,
    pub mean_error: T,
    pub mean_ok: bool,
    pub symmetry_error: T,
    /// Indices with `|S(k)| > |S(0)|`.
    pub domination_violations: Vec<i64>,
    pub max_proximity_gap: T,
    /// Indices with `|S(k) - sin(2 pi k delta)/(pi k)| > 1/(K+1)`.
    pub proximity_violations: Vec<i64>,
    /// Set when `S(0) < 0`, which happens for minorants with `2 delta < 1/(K+1)`.
    pub negative_integral: bool,
}

impl<T: Real> VerifyReport<T> {
    pub fn sandwich_ok(&self) -> bool {
        self.sandwich_violation_count == 0
    }

    /// All properties hold. A negative integral is flagged but not a failure.
    pub fn passed(&self) -> bool {
        self.sandwich_ok()
            && self.mean_ok
            && self.domination_violations.is_empty()
            && self.proximity_violations.is_empty()
    }
}

/// Both sides of the Selberg sandwich applied to the dyadic-block count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichCounts {
    pub lower: f64,
    pub count: u64,
    pub upper: f64,
}

impl SandwichCounts {
    /// `lower <= count <= upper` up to `slack`.
    pub fn brackets(&self, slack: f64) -> bool {
        self.lower <= self.count as f64 + slack && self.count as f64 <= self.upper + slack
    }
}

/// Cosine series `c_0 + 2 sum_{k>=1} c_k cos(2 pi k alpha)` by Clenshaw
/// recurrence in `x = cos(2 pi alpha)`.
fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs[1..].iter().rev() {
        let b0 = 2.0 * x * b1 - b2 + 2.0 * c;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}

/// Sums `S-` and `S+` over `q f(a/q)` for `Q < q <= 2Q`, `eta q < a <= xi q`,
/// alongside the exact count of the same block.
pub fn sandwich_counts(curve: &Curve, q_bound: f64, delta: f64, k_max: usize) -> Result<SandwichCounts> {
    let query = CountQuery::new(q_bound, delta, Mode::Tilde)?;
    let plus = SelbergPolynomial::<f64>::build(Sign::Majorant, k_max, delta)?;
    let minus = SelbergPolynomial::<f64>::build(Sign::Minorant, k_max, delta)?;
    // Both polynomials are real and even: keep S(0..=K).
    let cp: Vec<f64> = (0..=k_max as i64).map(|k| plus.coeff(k).re).collect();
    let cm: Vec<f64> = (0..=k_max as i64).map(|k| minus.coeff(k).re).collect();

    let partials: Vec<(f64, f64)> = query
        .denominators()
        .collect::<Vec<_>>()
        .par_chunks(16)
        .map(|qs| {
            let mut lo = CompensatedSum::new();
            let mut hi = CompensatedSum::new();
            for &q in qs {
                let (a_lo, a_hi) = curve.numerator_range(q);
                let qf = q as f64;
                for a in a_lo..=a_hi {
                    let v = qf * curve.f(a as f64 / qf);
                    let x = (std::f64::consts::TAU * centered_frac(v)).cos();
                    lo.add(clenshaw(&cm, x));
                    hi.add(clenshaw(&cp, x));
                }
            }
            (lo.value(), hi.value())
        })
        .collect();
    let lower: CompensatedSum<f64> = partials.iter().map(|p| p.0).collect();
    let upper: CompensatedSum<f64> = partials.iter().map(|p| p.1).collect();
    let exact = count(curve, &query, &CountOptions::default())?;
    Ok(SandwichCounts { lower: lower.value(), count: exact.count, upper: upper.value() })
}

#[cfg(test)]
mod tests {
    use super::*;

    use astro_float::{BigFloat, Consts, RoundingMode};

    fn build(sign: Sign, k: usize, delta: f64) -> SelbergPolynomial<f64> {
        SelbergPolynomial::build(sign, k, delta).unwrap()
    }

    #[test]
    fn zero_coefficient_examples() {
        assert!((build(Sign::Majorant, 9, 0.1).coeff(0).re - 0.3).abs() < 1e-15);
        assert!((build(Sign::Minorant, 9, 0.1).coeff(0).re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn first_coefficient_close_to_indicator() {
        let p = build(Sign::Majorant, 100, 0.25);
        let target = (std::f64::consts::TAU * 0.25).sin() / std::f64::consts::PI;
        for k in [-1, 1] {
            assert!((p.coeff(k).re - target).abs() <= 1.0 / 101.0);
        }
    }

    #[test]
    fn degree_and_symmetry() {
        let p = build(Sign::Minorant, 7, 0.2);
        assert_eq!(p.coeffs().len(), 15);
        assert_eq!(p.coeff(8), Complex::new(0.0, 0.0));
        for k in 1..=7 {
            assert_eq!(p.coeff(-k), p.coeff(k).conj());
            assert_eq!(p.coeff(k).im, 0.0);
        }
    }

    #[test]
    fn eval_examples() {
        for k in [3, 20, 200] {
            for delta in [0.05, 0.3] {
                assert!(build(Sign::Majorant, k, delta).eval(0.0) >= 1.0);
                assert!(build(Sign::Minorant, k, delta).eval(0.5) <= 0.0);
                let p = build(Sign::Majorant, k, delta);
                for alpha in [0.0, 0.123, -0.77, 0.5] {
                    assert!((p.eval(alpha) - p.eval(alpha + 1.0)).abs() < 1e-12);
                }
            }
        }
    }

    /// Direct evaluation at 256-bit precision as an oracle for `eval` and the
    /// grid table.
    fn eval_big(p: &SelbergPolynomial<f64>, alpha: f64) -> f64 {
        let prec = 256;
        let rm = RoundingMode::ToEven;
        let mut cc = Consts::new().unwrap();
        let two_pi = cc.pi(prec, rm).mul(&BigFloat::from_u8(2, prec), prec, rm);
        let a = BigFloat::from_f64(alpha, prec);
        let mut acc = BigFloat::from_f64(p.coeff(0).re, prec);
        for k in 1..=p.k_max() as i64 {
            let arg = two_pi.mul(&a, prec, rm).mul(&BigFloat::from_i64(k, prec), prec, rm);
            let c = arg.cos(prec, rm, &mut cc);
            let s = BigFloat::from_f64(p.coeff(k).re + p.coeff(-k).re, prec);
            acc = acc.add(&s.mul(&c, prec, rm), prec, rm);
        }
        acc.to_string().parse().unwrap()
    }

    #[test]
    fn eval_matches_extended_precision() {
        let p = build(Sign::Majorant, 1000, 0.1);
        for alpha in [0.0, 0.05, 0.1, 0.3333, 0.5, 0.9] {
            assert!((p.eval(alpha) - eval_big(&p, alpha)).abs() < 1e-12, "alpha = {alpha}");
        }
        let table = TrigTable::new(1000);
        for j in [0usize, 1, 37, 100, 999] {
            let alpha = j as f64 / 1000.0;
            assert!((table.eval(&p, j) - eval_big(&p, alpha)).abs() < 1e-11, "j = {j}");
        }
    }

    #[test]
    fn verify_passes_for_constructed_polynomials() {
        let r = build(Sign::Majorant, 50, 0.1).verify(100_000).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(!r.negative_integral);
    }

    #[test]
    fn verify_flags_negative_minorant_integral() {
        let r = build(Sign::Minorant, 10, 0.01).verify(100_000).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.negative_integral);
        assert!((r.mean - (0.02 - 1.0 / 11.0)).abs() < 1e-15);
    }

    #[test]
    fn verify_reports_tampered_coefficients() {
        let p = build(Sign::Majorant, 20, 0.1);
        let mut coeffs = p.coeffs().to_vec();
        coeffs[20].re -= 0.05;
        let tampered = SelbergPolynomial::from_coefficients(Sign::Majorant, 0.1, coeffs).unwrap();
        let r = tampered.verify(10_000).unwrap();
        assert!(!r.sandwich_ok());
        assert!(!r.mean_ok);
        assert!(!r.passed());
        assert!(!r.sandwich_violations.is_empty());
    }

    #[test]
    fn verify_rejects_small_grid() {
        assert!(build(Sign::Majorant, 5, 0.1).verify(999).is_err());
    }

    #[test]
    fn build_validation() {
        assert!(SelbergPolynomial::build(Sign::Majorant, 0, 0.1).is_err());
        assert!(SelbergPolynomial::build(Sign::Majorant, 5, 0.5).is_err());
        assert!(SelbergPolynomial::build(Sign::Minorant, 5, 0.0).is_err());
        assert!(SelbergPolynomial::<f64>::from_coefficients(Sign::Minorant, 0.1, vec![]).is_err());
    }

    #[test]
    fn single_precision_passes_with_scaled_tolerance() {
        let p = SelbergPolynomial::<f32>::build(Sign::Minorant, 30, 0.2).unwrap();
        let r = p.verify(5000).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn csv_round_trip() {
        let p = build(Sign::Minorant, 6, 0.15);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,re,im\n-6,"));
        let back = SelbergPolynomial::read_csv(Sign::Minorant, 0.15, buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn sign_parsing() {
        assert_eq!("plus".parse::<Sign>().unwrap(), Sign::Majorant);
        assert_eq!("minus".parse::<Sign>().unwrap(), Sign::Minorant);
        assert!("up".parse::<Sign>().is_err());
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let p = build(Sign::Majorant, 40, 0.07);
        let c: Vec<f64> = (0..=40).map(|k| p.coeff(k).re).collect();
        for alpha in [0.0, 0.01, 0.2, 0.49] {
            let x = (std::f64::consts::TAU * alpha).cos();
            assert!((clenshaw(&c, x) - p.eval(alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_brackets_block_count() {
        let c = Curve::builtin("parabola").unwrap();
        let s = sandwich_counts(&c, 512.0, 0.1, 64).unwrap();
        assert!(s.brackets(1e-6), "{s:?}");
    }

    #[test]
    fn sandwich_gap_shrinks_with_degree() {
        let c = Curve::builtin("parabola").unwrap();
        let gaps: Vec<f64> = [16, 64, 256]
            .iter()
            .map(|&k| {
                let s = sandwich_counts(&c, 64.0, 0.3, k).unwrap();
                assert!(s.brackets(1e-6));
                s.upper - s.lower
            })
            .collect();
        assert!(gaps[2] < gaps[0], "{gaps:?}");
    }

    #[test]
    fn sandwich_of_empty_count() {
        let c = Curve::builtin("exp").unwrap();
        let s = sandwich_counts(&c, 32.0, 1e-9, 16).unwrap();
        assert_eq!(s.count, 0);
        assert!(s.lower <= 0.0 && 0.0 <= s.upper, "{s:?}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn sandwich_holds_pointwise(k in 1usize..120, delta in 0.001f64..0.499, alpha in 0.0f64..1.0) {
            let plus = build(Sign::Majorant, k, delta);
            let minus = build(Sign::Minorant, k, delta);
            let d = crate::scalar::dist_to_int(alpha);
            let closed = if d <= delta { 1.0 } else { 0.0 };
            let open = if d < delta { 1.0 } else { 0.0 };
            proptest::prop_assert!(plus.eval(alpha) >= closed - 1e-9);
            proptest::prop_assert!(minus.eval(alpha) <= open + 1e-9);
            proptest::prop_assert!((plus.coeff(0).re - (2.0 * delta + 1.0 / (k as f64 + 1.0))).abs() < 1e-14);
        }
    }
}
