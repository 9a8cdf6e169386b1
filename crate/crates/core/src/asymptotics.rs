//! Main terms, error bounds, the choice of the Selberg degree `K`, and the
//! chain of intermediate sums `N_0 ... N_5` as numerical diagnostics.
//!
//! `log` is the natural logarithm throughout.

use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{invalid, Error, Result};
use crate::harness::SweepRecord;
use crate::lattice::{count, CountOptions, CountQuery, Mode};
use crate::oscillatory::{block_integral, exp_sum, index_bounds, stationary_point, window_half_width};
use crate::scalar::CompensatedSum;

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_REGIME_C: f64 = 1.0;

/// Parameters of the error bound: Hölder exponent, the `Q^epsilon` allowance,
/// `Q`, `delta`, and the constant in front of the regime threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeParams {
    pub theta: f64,
    pub epsilon: f64,
    pub q: f64,
    pub delta: f64,
    pub regime_c: f64,
}

impl RegimeParams {
    pub fn new(theta: f64, q: f64, delta: f64) -> Self {
        Self { theta, epsilon: DEFAULT_EPSILON, q, delta, regime_c: DEFAULT_REGIME_C }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_regime_c(mut self, regime_c: f64) -> Self {
        self.regime_c = regime_c;
        self
    }

    fn check(&self) -> Result<f64> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(invalid(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(invalid(format!("Q must exceed 1, got {}", self.q)));
        }
        if !(self.delta > 0.0) {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.regime_c > 0.0) {
            return Err(invalid(format!("regime_c must be positive, got {}", self.regime_c)));
        }
        Ok(self.q.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `delta >= T(Q, theta)`
    One,
    /// `delta < T(Q, theta)`
    Two,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::One => "one",
            Regime::Two => "two",
        })
    }
}

/// `3 (xi - eta) delta Q^2` for the dyadic block, `(xi - eta) delta Q^2` for the full range.
pub fn main_term(eta: f64, xi: f64, q: f64, delta: f64, mode: Mode) -> f64 {
    let base = (xi - eta) * delta * q * q;
    match mode {
        Mode::Full => base,
        Mode::Tilde => 3.0 * base,
    }
}

/// Exact count minus the main term.
pub fn error_term(curve: &Curve, q: f64, delta: f64, mode: Mode, opts: &CountOptions) -> Result<f64> {
    let r = count(curve, &CountQuery::new(q, delta, mode)?, opts)?;
    Ok(r.count as f64 - main_term(curve.eta(), curve.xi(), q, delta, mode))
}

/// `regime_c * Q^((1 - 2 theta)/(2 - theta)) * (log Q)^(-(5 - theta)/(2 - theta))`.
pub fn regime_threshold(params: &RegimeParams) -> Result<f64> {
    let l = params.check()?;
    let t = params.theta;
    Ok(params.regime_c * params.q.powf((1.0 - 2.0 * t) / (2.0 - t)) * l.powf(-(5.0 - t) / (2.0 - t)))
}

pub fn regime(params: &RegimeParams) -> Result<Regime> {
    let threshold = regime_threshold(params)?;
    Ok(if params.delta >= threshold { Regime::One } else { Regime::Two })
}

/// The three balancing choices of `K` before flooring: the first equalizes
/// `Q^2/K` with `delta K^(1/2) Q^(3/2) log Q`, the second `Q^2/K` with
/// `delta (K Q)^((3 - theta)/2)`, the third the last two terms, which happens
/// at `K = Q^(theta/(2 - theta)) (log Q)^(2/(2 - theta))`.
pub fn candidate_k(params: &RegimeParams) -> Result<[f64; 3]> {
    let l = params.check()?;
    let (t, q, d) = (params.theta, params.q, params.delta);
    Ok([
        d.powf(-2.0 / 3.0) * q.cbrt() * l.powf(-2.0 / 3.0),
        d.powf(-2.0 / (5.0 - t)) * q.powf((1.0 + t) / (5.0 - t)),
        q.powf(t / (2.0 - t)) * l.powf(2.0 / (2.0 - t)),
    ])
}

/// The three terms `Q^2/K`, `delta K^(1/2) Q^(3/2) log Q`, `delta (K Q)^((3 - theta)/2)`
/// of the simplified error bound at a given `K`.
pub fn polished_terms(params: &RegimeParams, k: f64) -> Result<[f64; 3]> {
    let l = params.check()?;
    let (t, q, d) = (params.theta, params.q, params.delta);
    Ok([q * q / k, d * k.sqrt() * q.powf(1.5) * l, d * (k * q).powf((3.0 - t) / 2.0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KChoice {
    pub regime: Regime,
    pub k: u64,
    /// The formula value before flooring.
    pub k_real: f64,
    /// `delta K > 1`, assumed when the bound is derived.
    pub delta_k_exceeds_one: bool,
    /// `K <= Q^(1 - 2 epsilon / 3)`, the other working assumption.
    pub k_within_q_bound: bool,
}

fn big_pow(base: f64, exponent: &BigFloat, p: usize, cc: &mut Consts) -> BigFloat {
    BigFloat::from_f64(base, p).pow(exponent, p, RoundingMode::ToEven, cc)
}

/// The chosen `K` formula at 192 bits, for flooring values that land close to
/// an integer in double precision.
fn k_formula_big(regime: Regime, params: &RegimeParams) -> f64 {
    let p = 192;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("astro-float constants");
    let num = |x: f64| BigFloat::from_f64(x, p);
    let q = num(params.q);
    let l = q.ln(p, rm, &mut cc);
    let value = match regime {
        Regime::One => {
            let e = num(-2.0).div(&num(3.0), p, rm);
            let d = big_pow(params.delta, &e, p, &mut cc);
            let q13 = q.pow(&num(1.0).div(&num(3.0), p, rm), p, rm, &mut cc);
            d.mul(&q13, p, rm).mul(&l.pow(&e, p, rm, &mut cc), p, rm)
        }
        Regime::Two => {
            let five_minus = num(5.0).sub(&num(params.theta), p, rm);
            let e_d = num(-2.0).div(&five_minus, p, rm);
            let e_q = num(1.0).add(&num(params.theta), p, rm).div(&five_minus, p, rm);
            big_pow(params.delta, &e_d, p, &mut cc).mul(&q.pow(&e_q, p, rm, &mut cc), p, rm)
        }
    };
    value.floor().to_string().parse().unwrap_or(f64::NAN)
}

/// `K = floor(delta^(-2/3) Q^(1/3) (log Q)^(-2/3))` in regime one and
/// `K = floor(delta^(-2/(5 - theta)) Q^((1 + theta)/(5 - theta)))` in regime two.
pub fn choose_k(params: &RegimeParams) -> Result<KChoice> {
    let regime = regime(params)?;
    let [k1, k2, _] = candidate_k(params)?;
    let k_real = match regime {
        Regime::One => k1,
        Regime::Two => k2,
    };
    let mut k = k_real.floor();
    if (k_real - k_real.round()).abs() <= 1e-9 * k_real.max(1.0) {
        k = k_formula_big(regime, params);
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(invalid(format!("K = floor({k_real}) < 1: (Q, delta) outside the admissible range")));
    }
    let k_int = k as u64;
    Ok(KChoice {
        regime,
        k: k_int,
        k_real,
        delta_k_exceeds_one: params.delta * k > 1.0,
        k_within_q_bound: k <= params.q.powf(1.0 - 2.0 * params.epsilon / 3.0),
    })
}

/// The bound for the regime selected by [`regime`].
pub fn error_bound(params: &RegimeParams) -> Result<f64> {
    error_bound_in(params, regime(params)?)
}

/// `delta^(2/3) Q^(5/3) (log Q)^(2/3)` (regime one) or
/// `delta^(2/(5 - theta)) Q^(3(3 - theta)/(5 - theta))` (regime two).
pub fn error_bound_in(params: &RegimeParams, regime: Regime) -> Result<f64> {
    let l = params.check()?;
    let (t, q, d) = (params.theta, params.q, params.delta);
    Ok(match regime {
        Regime::One => d.powf(2.0 / 3.0) * q.powf(5.0 / 3.0) * l.powf(2.0 / 3.0),
        Regime::Two => d.powf(2.0 / (5.0 - t)) * q.powf(3.0 * (3.0 - t) / (5.0 - t)),
    })
}

/// `Q^(-(1 + theta)/(3 - theta) + epsilon) <= delta < 1/2`.
pub fn admissible_delta(params: &RegimeParams) -> bool {
    let t = params.theta;
    let floor = params.q.powf(-(1.0 + t) / (3.0 - t) + params.epsilon);
    params.delta >= floor && params.delta < 0.5
}

/// `log` guarded below by 1, so bound forms stay positive at `K = 1, 2`.
fn lg(x: f64) -> f64 {
    x.max(std::f64::consts::E).ln()
}

/// One step of the chain: the measured gap and the size of the bound it is
/// compared against (constant 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepError {
    pub step: String,
    pub difference: f64,
    pub bound: f64,
    pub ratio: f64,
}

impl StepError {
    fn new(step: &str, difference: f64, bound: f64) -> Self {
        // An empty step (no stationary points) has nothing to bound.
        let ratio = if difference == 0.0 { 0.0 } else { difference / bound };
        Self { step: step.to_string(), difference, bound, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundChain {
    pub k_max: u64,
    pub q: f64,
    pub delta: f64,
    pub theta: f64,
    pub epsilon: f64,
    /// `3 (xi - eta) delta Q^2`
    pub main: f64,
    pub n0_plus: f64,
    pub n0_minus: f64,
    /// `(2 delta + 1/(K+1)) ((xi - eta) Q (3Q + 1)/2 + Q)`
    pub n0_plus_bound: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub step_errors: Vec<StepError>,
    /// Pairs `(k, h)` with `lambda_h <= 1/Q`, removed between `N_3` and `N_4`.
    pub small_lambda_pairs: u64,
    pub log_k: f64,
    pub log_q: f64,
}

/// Moduli of the inner sums for one frequency `k > 0`; by conjugate symmetry
/// they agree with those for `-k`.
#[derive(Debug, Clone, Copy, Default)]
struct FrequencyTerms {
    exp: f64,
    full: f64,
    stationary: f64,
    nonresonant: f64,
    windowed: f64,
    harmonic: f64,
    small_lambda: u64,
}

fn add(acc: &mut (CompensatedSum<f64>, CompensatedSum<f64>), z: Complex<f64>) {
    acc.0.add(z.re);
    acc.1.add(z.im);
}

fn modulus(acc: &(CompensatedSum<f64>, CompensatedSum<f64>)) -> f64 {
    Complex::new(acc.0.value(), acc.1.value()).norm()
}

fn frequency_terms(curve: &Curve, q_bound: f64, k: i64) -> Result<FrequencyTerms> {
    let q_lo = q_bound.floor() as u64 + 1;
    let q_hi = (2.0 * q_bound).floor() as u64;
    let mut exp = (CompensatedSum::new(), CompensatedSum::new());
    for q in q_lo..=q_hi {
        add(&mut exp, exp_sum(curve, k, q)?);
    }
    let bounds = index_bounds(curve, k)?;
    let mu = window_half_width(curve);
    let (eta, xi) = (curve.eta(), curve.xi());
    let mut full = (CompensatedSum::new(), CompensatedSum::new());
    let mut stationary = (CompensatedSum::new(), CompensatedSum::new());
    let mut nonresonant = (CompensatedSum::new(), CompensatedSum::new());
    let mut windowed = (CompensatedSum::new(), CompensatedSum::new());
    let mut harmonic = 0.0;
    let mut small_lambda = 0;
    let interior = bounds.stationary_range();
    for h in bounds.full_range() {
        let value = block_integral(curve, k, h, q_bound, eta, xi)?.value;
        add(&mut full, value);
        if !interior.contains(&h) {
            continue;
        }
        add(&mut stationary, value);
        harmonic += 1.0 / (h - bounds.h_minus) as f64 + 1.0 / (bounds.h_plus - h) as f64;
        let point = stationary_point::<f64>(curve, k, h)?;
        if point.lambda_h <= 1.0 / q_bound {
            small_lambda += 1;
            continue;
        }
        add(&mut nonresonant, value);
        add(&mut windowed, block_integral(curve, k, h, q_bound, point.beta_h - mu, point.beta_h + mu)?.value);
    }
    Ok(FrequencyTerms {
        exp: modulus(&exp),
        full: modulus(&full),
        stationary: modulus(&stationary),
        nonresonant: modulus(&nonresonant),
        windowed: modulus(&windowed),
        harmonic,
        small_lambda,
    })
}

/// Computes `N_0^+/-` and `N_1, ..., N_5` for the block `Q < q <= 2Q` and each
/// `delta`, reusing the per-frequency sums (only the weight `delta + 1/K`
/// depends on `delta`).
pub fn bound_chains(curve: &Curve, q_bound: f64, deltas: &[f64], k_max: u64, epsilon: f64) -> Result<Vec<BoundChain>> {
    if k_max == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if !(q_bound >= 1.0) {
        return Err(invalid(format!("Q must be at least 1, got {q_bound}")));
    }
    for &d in deltas {
        if !(d > 0.0 && d < 0.5) {
            return Err(invalid(format!("delta must lie in (0, 1/2), got {d}")));
        }
    }
    let terms: Vec<FrequencyTerms> = (1..=k_max as i64)
        .into_par_iter()
        .map(|k| frequency_terms(curve, q_bound, k))
        .collect::<Result<_>>()?;
    let sum = |f: fn(&FrequencyTerms) -> f64| 2.0 * terms.iter().map(f).sum::<f64>();
    let [s1, s2, s3, s4, s5] = [
        sum(|t| t.exp),
        sum(|t| t.full),
        sum(|t| t.stationary),
        sum(|t| t.nonresonant),
        sum(|t| t.windowed),
    ];
    let harmonic = sum(|t| t.harmonic);
    let small_lambda_pairs = 2 * terms.iter().map(|t| t.small_lambda).sum::<u64>();

    let q_lo = q_bound.floor() as u64 + 1;
    let q_hi = (2.0 * q_bound).floor() as u64;
    let pairs: u64 = (q_lo..=q_hi)
        .map(|q| {
            let (lo, hi) = curve.numerator_range(q);
            (hi - lo + 1).max(0) as u64
        })
        .sum();

    let (q, k) = (q_bound, k_max as f64);
    let theta = curve.theta();
    let width = curve.xi() - curve.eta();
    Ok(deltas
        .iter()
        .map(|&delta| {
            let w = delta + 1.0 / k;
            let [n1, n2, n3, n4, n5] = [s1, s2, s3, s4, s5].map(|s| w * s);
            let lk = lg(k);
            let step_errors = vec![
                StepError::new("N1-N2", (n1 - n2).abs(), w * k * q * lk),
                StepError::new("N2-N3", (n2 - n3).abs(), delta * k.sqrt() * q.powf(1.5) + q.powf(1.5) / k.sqrt()),
                StepError::new(
                    "N3-N4",
                    (n3 - n4).abs(),
                    w * q.powf(1.5) * (k.powf(1.5) * q.powf(epsilon - 1.0) + k.sqrt() * lk),
                ),
                StepError::new("N4-N5", (n4 - n5).abs(), w * q * harmonic),
                StepError::new("N4-N5 simplified", (n4 - n5).abs(), w * q * k * lk),
                StepError::new(
                    "N5",
                    n5,
                    w * (q.powf(0.5 + epsilon) * k.powf(1.5)
                        + q.powf(1.5) * k.sqrt() * lk
                        + (q * k).powf((3.0 - theta) / 2.0)),
                ),
                StepError::new(
                    "N1",
                    n1,
                    (delta * k + 1.0)
                        * q
                        * (q.sqrt() * lk / k.sqrt()
                            + lk
                            + k.sqrt() * q.powf(epsilon - 0.5)
                            + (k * q).powf((1.0 - theta) / 2.0)),
                ),
            ];
            let inv = 1.0 / (k + 1.0);
            BoundChain {
                k_max,
                q,
                delta,
                theta,
                epsilon,
                main: 3.0 * width * delta * q * q,
                n0_plus: pairs as f64 * (2.0 * delta + inv),
                n0_minus: pairs as f64 * (2.0 * delta - inv),
                n0_plus_bound: (2.0 * delta + inv) * (width * q * (3.0 * q + 1.0) / 2.0 + q),
                n1,
                n2,
                n3,
                n4,
                n5,
                step_errors,
                small_lambda_pairs,
                log_k: k.ln(),
                log_q: q.ln(),
            }
        })
        .collect())
}

pub fn bound_chain(curve: &Curve, q_bound: f64, delta: f64, k_max: u64, epsilon: f64) -> Result<BoundChain> {
    Ok(bound_chains(curve, q_bound, &[delta], k_max, epsilon)?.remove(0))
}

/// Least-squares line through `(log Q, log |E|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// `log |E| - (intercept + slope log Q)` per used record.
    pub residuals: Vec<f64>,
    pub used: usize,
    /// `Q` values of records dropped because `E = 0`.
    pub dropped_zero: Vec<f64>,
    pub schedule: String,
}

/// Fits `log |E|` against `log Q` over `(Q, E)` points.
pub fn fit_power_law(points: &[(f64, f64)], schedule: &str) -> Result<ExponentFit> {
    let (used, dropped): (Vec<_>, Vec<_>) = points.iter().partition(|(_, e)| *e != 0.0);
    if used.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|(q, _)| q.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, e)| e.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("exponent fit needs at least two distinct Q values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(ExponentFit {
        slope,
        intercept,
        residuals,
        used: used.len(),
        dropped_zero: dropped.iter().map(|(q, _)| *q).collect(),
        schedule: schedule.to_string(),
    })
}

/// Slope of `log |E|` against `log Q` across sweep records.
pub fn exponent_fit(records: &[SweepRecord], schedule: &str) -> Result<ExponentFit> {
    let points: Vec<(f64, f64)> = records.iter().filter_map(|r| Some((r.q, r.error?))).collect();
    fit_power_law(&points, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn main_term_examples() {
        assert!(close(main_term(1.0, 2.0, 10.0, 0.1, Mode::Tilde), 30.0, 1e-14));
        assert!(close(main_term(1.0, 2.0, 10.0, 0.1, Mode::Full), 10.0, 1e-14));
        assert_eq!(main_term(1.0, 1.0, 10.0, 0.1, Mode::Full), 0.0);
    }

    #[test]
    fn error_term_examples() {
        let p = Curve::builtin("parabola").unwrap();
        let e = error_term(&p, 2.0, 0.3, Mode::Full, &CountOptions::default()).unwrap();
        assert!((e - 0.8).abs() < 1e-12);
        // q = 2 and a = 4 give 2 f(2) = 8 exactly.
        let e = error_term(&p, 1.0, 1e-6, Mode::Tilde, &CountOptions::default()).unwrap();
        assert!((e - (1.0 - 3e-6)).abs() < 1e-12);
    }

    /// `(Q, theta)` threshold at 256 bits.
    fn threshold_big(theta: f64, q: f64) -> f64 {
        let p = 256;
        let rm = RoundingMode::ToEven;
        let mut cc = Consts::new().unwrap();
        let n = |x: f64| BigFloat::from_f64(x, p);
        let qb = n(q);
        let l = qb.ln(p, rm, &mut cc);
        let two_minus = n(2.0).sub(&n(theta), p, rm);
        let e1 = n(1.0).sub(&n(2.0 * theta), p, rm).div(&two_minus, p, rm);
        let e2 = n(theta).sub(&n(5.0), p, rm).div(&two_minus, p, rm);
        let v = qb.pow(&e1, p, rm, &mut cc).mul(&l.pow(&e2, p, rm, &mut cc), p, rm);
        v.to_string().parse().unwrap()
    }

    #[test]
    fn regime_examples() {
        let t = regime_threshold(&RegimeParams::new(0.75, 1e4, 0.01)).unwrap();
        assert!(close(t, threshold_big(0.75, 1e4), 1e-12));
        assert!(t < 0.01);
        assert_eq!(regime(&RegimeParams::new(0.75, 1e4, 0.01)).unwrap(), Regime::One);
        assert_eq!(regime(&RegimeParams::new(0.75, 1e4, 1e-6)).unwrap(), Regime::Two);
        assert!(regime(&RegimeParams::new(0.75, 1.0, 0.1)).is_err());
    }

    #[test]
    fn small_theta_threshold_is_below_one_half_at_desk_scale() {
        // With the threshold constant 1 and natural log, theta = 1/4 and
        // Q = 10^6 give T ~ 0.0416, so delta = 0.49 lands in regime one.
        let params = RegimeParams::new(0.25, 1e6, 0.49);
        let t = regime_threshold(&params).unwrap();
        assert!(close(t, threshold_big(0.25, 1e6), 1e-12));
        assert!((t - 0.0416).abs() < 1e-3, "{t}");
        assert_eq!(regime(&params).unwrap(), Regime::One);
        // A large enough constant restores the footnote regime.
        assert_eq!(regime(&params.with_regime_c(20.0)).unwrap(), Regime::Two);
    }

    #[test]
    fn choose_k_examples() {
        let c = choose_k(&RegimeParams::new(0.75, 1e4, 0.01)).unwrap();
        assert_eq!(c.regime, Regime::One);
        assert_eq!(c.k, 105);
        assert!(c.delta_k_exceeds_one);
        let c = choose_k(&RegimeParams::new(0.75, 1e4, 1e-6)).unwrap();
        assert_eq!(c.regime, Regime::Two);
        let want = (1e4f64.powf(1.75 / 4.25) * 10f64.powf(12.0 / 4.25)).floor() as u64;
        assert_eq!(c.k, want);
        let c = choose_k(&RegimeParams::new(0.75, 30.0, 0.45)).unwrap();
        assert!(!c.delta_k_exceeds_one, "{c:?}");
    }

    #[test]
    fn choose_k_rejects_tiny_k() {
        assert_eq!(choose_k(&RegimeParams::new(0.75, 2.0, 0.49)).unwrap().k, 1);
        assert!(choose_k(&RegimeParams::new(0.75, 2.0, 100.0)).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let b = error_bound_in(&RegimeParams::new(1.0, 1000.0, 0.1), Regime::One).unwrap();
        let want = 0.1f64.powf(2.0 / 3.0) * 1000f64.powf(5.0 / 3.0) * 1000f64.ln().powf(2.0 / 3.0);
        assert!(close(b, want, 1e-14));
        assert!((b - 7.8e4).abs() < 0.05e4);
        let b = error_bound_in(&RegimeParams::new(0.5, 1e4, 1e-4), Regime::Two).unwrap();
        assert!(close(b, 1e-4f64.powf(4.0 / 9.0) * 1e4f64.powf(7.5 / 4.5), 1e-14));
        let p = RegimeParams::new(1.0, std::f64::consts::E, 0.25);
        let b = error_bound_in(&p, Regime::One).unwrap();
        assert!(close(b, 0.25f64.powf(2.0 / 3.0) * std::f64::consts::E.powf(5.0 / 3.0), 1e-14));
        // At Q = e the selected branch is the second one (T = 1/e > 1/4).
        assert_eq!(regime(&p).unwrap(), Regime::Two);
        assert_eq!(error_bound(&p).unwrap(), error_bound_in(&p, Regime::Two).unwrap());
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissible_delta(&RegimeParams::new(1.0, 1e4, 0.1)));
        assert!(!admissible_delta(&RegimeParams::new(1.0, 1e4, 0.5)));
        assert!(!admissible_delta(&RegimeParams::new(1.0, 1e4, 1e-4)));
    }

    #[test]
    fn exponent_fit_exact_power_law() {
        let pts: Vec<(f64, f64)> = (10..16).map(|i| {
            let q = 2f64.powi(i);
            (q, q.powf(1.5))
        }).collect();
        let fit = fit_power_law(&pts, "synthetic").unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-9);
        assert_eq!(fit.used, 6);
    }

    #[test]
    fn exponent_fit_drops_zero_errors() {
        let mut pts: Vec<(f64, f64)> = (1..6).map(|i| (10f64.powi(i), -(10f64.powi(i)).powi(2))).collect();
        pts.push((5.0, 0.0));
        let fit = fit_power_law(&pts, "s").unwrap();
        assert_eq!(fit.dropped_zero, vec![5.0]);
        assert!((fit.slope - 2.0).abs() < 1e-9);
        assert!(matches!(fit_power_law(&pts[..3], "s"), Err(Error::InsufficientData { needed: 4, got: 3 })));
    }

    #[test]
    fn bound_chain_minimal_k() {
        let p = Curve::builtin("parabola").unwrap();
        let c = bound_chain(&p, 16.0, 0.2, 1, DEFAULT_EPSILON).unwrap();
        assert!(c.n1 >= 0.0);
        assert!(c.step_errors.iter().all(|s| s.difference.is_finite() && s.ratio.is_finite()));
        // parabola at k = 1 has no interior stationary points
        assert_eq!(c.n3, 0.0);
    }

    #[test]
    fn bound_chain_report() {
        let p = Curve::builtin("parabola").unwrap();
        let c = bound_chain(&p, 64.0, 0.1, 6, DEFAULT_EPSILON).unwrap();
        assert!(c.n0_plus >= c.main - 3.0 * 64.0);
        assert!(c.n0_plus <= c.n0_plus_bound + 1e-9);
        assert!(c.n0_minus <= c.main + 1e-9);
        assert!(c.step_errors.iter().all(|s| s.ratio.is_finite()), "{c:?}");
        assert_eq!(c.step_errors.len(), 7);
        assert!((c.log_q - 64f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bound_chains_share_per_frequency_sums() {
        let p = Curve::builtin("parabola").unwrap();
        let both = bound_chains(&p, 32.0, &[0.1, 0.2], 4, DEFAULT_EPSILON).unwrap();
        let single = bound_chain(&p, 32.0, 0.2, 4, DEFAULT_EPSILON).unwrap();
        assert_eq!(both[1], single);
        let scale = (0.2 + 0.25) / (0.1 + 0.25);
        assert!(close(both[1].n2, both[0].n2 * scale, 1e-12));
    }

    /// 256-bit evaluation of the two `K` formulas and the threshold.
    fn choose_k_big(theta: f64, q: f64, delta: f64) -> (Regime, u64) {
        let p = 256;
        let rm = RoundingMode::ToEven;
        let mut cc = Consts::new().unwrap();
        let n = |x: f64| BigFloat::from_f64(x, p);
        let regime = if delta >= threshold_big(theta, q) { Regime::One } else { Regime::Two };
        let (qb, db) = (n(q), n(delta));
        let l = qb.ln(p, rm, &mut cc);
        let k = match regime {
            Regime::One => {
                let m23 = n(-2.0).div(&n(3.0), p, rm);
                let k3 = db.pow(&m23, p, rm, &mut cc).mul(&qb.pow(&n(1.0).div(&n(3.0), p, rm), p, rm, &mut cc), p, rm);
                k3.mul(&l.pow(&m23, p, rm, &mut cc), p, rm)
            }
            Regime::Two => {
                let d = n(5.0).sub(&n(theta), p, rm);
                db.pow(&n(-2.0).div(&d, p, rm), p, rm, &mut cc)
                    .mul(&qb.pow(&n(1.0).add(&n(theta), p, rm).div(&d, p, rm), p, rm, &mut cc), p, rm)
            }
        };
        (regime, k.floor().to_string().parse::<f64>().unwrap() as u64)
    }

    #[test]
    fn choose_k_matches_extended_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let theta = rng.gen_range(0.05..1.0);
            let q = 10f64.powf(rng.gen_range(2.0..8.0));
            let delta = 10f64.powf(rng.gen_range(-5.0..-0.31));
            let (regime, k) = choose_k_big(theta, q, delta);
            match choose_k(&RegimeParams::new(theta, q, delta)) {
                Ok(c) => {
                    assert_eq!(c.regime, regime);
                    assert_eq!(c.k, k, "theta {theta} Q {q} delta {delta}");
                }
                Err(_) => assert_eq!(k, 0),
            }
        }
    }

    #[test]
    fn branch_continuity_at_threshold() {
        for &theta in &[0.1, 0.3, 0.5, 0.75, 0.95] {
            for &q in &[1e3, 1e5, 1e8] {
                let t = regime_threshold(&RegimeParams::new(theta, q, 0.1)).unwrap();
                let p = RegimeParams::new(theta, q, t);
                let ratio = error_bound_in(&p, Regime::One).unwrap() / error_bound_in(&p, Regime::Two).unwrap();
                let l = q.ln();
                assert!(ratio >= l.powi(-4) && ratio <= l.powi(4), "theta {theta} Q {q}: {ratio}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn main_term_block_is_three_times_full(q in 1.0f64..1e6, delta in 1e-6f64..0.5) {
            let full = main_term(1.0, 2.0, q, delta, Mode::Full);
            proptest::prop_assert!((main_term(1.0, 2.0, q, delta, Mode::Tilde) - 3.0 * full).abs() <= 1e-12 * full);
        }

        #[test]
        fn chosen_k_balances_its_pair(theta in 0.05f64..0.999, lq in 2.0f64..9.0, ld in -6.0f64..-0.31) {
            let p = RegimeParams::new(theta, 10f64.powf(lq), 10f64.powf(ld));
            let [k1, k2, k3] = candidate_k(&p).unwrap();
            let t1 = polished_terms(&p, k1).unwrap();
            proptest::prop_assert!(close(t1[0], t1[1], 1e-9));
            let t2 = polished_terms(&p, k2).unwrap();
            proptest::prop_assert!(close(t2[0], t2[2], 1e-9));
            let t3 = polished_terms(&p, k3).unwrap();
            proptest::prop_assert!(close(t3[1], t3[2], 1e-9));
        }

        #[test]
        fn admissibility_is_monotone(theta in 0.05f64..1.0, lq in 1.0f64..8.0, d1 in 1e-8f64..0.5, d2 in 1e-8f64..0.5) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let q = 10f64.powf(lq);
            if admissible_delta(&RegimeParams::new(theta, q, lo)) {
                proptest::prop_assert!(admissible_delta(&RegimeParams::new(theta, q, hi)));
            }
        }
    }
}
