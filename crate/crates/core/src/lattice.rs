//! Exact enumeration of rational points near a curve.
//!
//! `N(Q, delta)` counts pairs `(a, q)` with `1 <= q <= Q`, `eta*q < a <= xi*q` and
//! `||q f(a/q)|| < delta`; the dyadic-block variant restricts to `Q < q <= 2Q`.
//! Pairs are not required to be coprime.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::{Duration, Instant};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, Shape};
use crate::error::{invalid, Error, Result};
use crate::poly::{rational_from_f64, ExactThreshold, Polynomial};
use crate::scalar::dist_to_int_fast;

/// Relative half-width of the band around `delta` inside which a floating
/// membership decision is re-done at higher precision.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Working precision (bits) for re-deciding near-threshold samples of
/// non-polynomial curves.
const ESCALATION_BITS: usize = 320;

/// Denominators per parallel work item.
const Q_CHUNK: u64 = 32;

/// Distance from `x` to the nearest integer; rejects non-finite input.
pub fn dist_to_int(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("dist_to_int of non-finite value {x}")));
    }
    Ok(crate::scalar::dist_to_int(x))
}

/// Which denominators a query covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `1 <= q <= Q`
    Full,
    /// The dyadic block `Q < q <= 2Q`.
    Tilde,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Tilde => "tilde",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "tilde" | "dyadic-block" | "dyadic" => Ok(Mode::Tilde),
            _ => Err(invalid(format!("unknown mode `{s}` (expected full or tilde)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountQuery {
    pub q_bound: f64,
    pub delta: f64,
    pub mode: Mode,
    delta_exact: Option<BigRational>,
}

impl CountQuery {
    pub fn new(q_bound: f64, delta: f64, mode: Mode) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid(format!("delta must lie in (0, 1/2), got {delta}")));
        }
        if !q_bound.is_finite() || q_bound <= 0.0 {
            return Err(invalid(format!("Q must be positive and finite, got {q_bound}")));
        }
        if mode == Mode::Full && q_bound < 1.0 {
            return Err(invalid(format!("full mode needs Q >= 1, got {q_bound}")));
        }
        if q_bound > 1e15 {
            return Err(invalid(format!("Q = {q_bound} is beyond enumeration range")));
        }
        Ok(Self { q_bound, delta, mode, delta_exact: None })
    }

    /// A query whose threshold is an exact rational (`"3/10"` rather than the
    /// nearest double). Floating decisions use the rounded value; near-threshold
    /// samples and the exact path use the rational.
    pub fn with_exact_delta(q_bound: f64, delta: BigRational, mode: Mode) -> Result<Self> {
        let approx = num_traits::ToPrimitive::to_f64(&delta).unwrap_or(f64::NAN);
        let mut query = Self::new(q_bound, approx, mode)?;
        let half = BigRational::new(1.into(), 2.into());
        if delta <= BigRational::from_integer(0.into()) || delta >= half {
            return Err(invalid(format!("delta must lie in (0, 1/2), got {delta}")));
        }
        query.delta_exact = Some(delta);
        Ok(query)
    }

    /// Denominators covered by the query (possibly empty).
    pub fn denominators(&self) -> RangeInclusive<u64> {
        match self.mode {
            Mode::Full => 1..=self.q_bound.floor() as u64,
            Mode::Tilde => (self.q_bound.floor() as u64 + 1)..=(2.0 * self.q_bound).floor() as u64,
        }
    }

    pub fn threshold(&self) -> ExactThreshold {
        let value = match &self.delta_exact {
            Some(r) => r.clone(),
            None => rational_from_f64(self.delta).expect("validated finite delta"),
        };
        ExactThreshold::new(value).expect("validated positive delta")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub query: CountQuery,
    pub curve_id: String,
    pub count: u64,
    /// `(q, count_q)` for every denominator, when requested.
    pub per_q: Option<Vec<(u64, u64)>>,
    /// Samples whose floating decision fell inside the boundary band and were
    /// re-decided at higher precision.
    pub boundary_hits: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CountOptions {
    /// Worker threads; `0` uses the ambient rayon pool.
    pub workers: usize,
    pub per_q: bool,
}

impl CountOptions {
    pub fn workers(workers: usize) -> Self {
        Self { workers, per_q: false }
    }
}

#[derive(Debug, Default, Clone)]
struct Tally {
    count: u64,
    hits: u64,
    per_q: Vec<(u64, u64)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        self.hits += other.hits;
        self.per_q.extend(other.per_q);
        self
    }
}

pub(crate) fn with_workers<R: Send>(workers: usize, job: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Runs `per_q` over chunks of the denominator range in parallel and reduces in order.
fn tally_denominators<F>(range: RangeInclusive<u64>, opts: &CountOptions, per_q: F) -> Tally
where
    F: Fn(u64, &mut Scratch) -> (u64, u64) + Sync,
{
    let (start, end) = (*range.start(), *range.end());
    if start > end {
        return Tally::default();
    }
    let chunks: Vec<(u64, u64)> = (start..=end)
        .step_by(Q_CHUNK as usize)
        .map(|lo| (lo, (lo + Q_CHUNK - 1).min(end)))
        .collect();
    let keep = opts.per_q;
    let run = || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut scratch = Scratch::default();
                let mut t = Tally::default();
                for q in lo..=hi {
                    let (c, h) = per_q(q, &mut scratch);
                    t.count += c;
                    t.hits += h;
                    if keep {
                        t.per_q.push((q, c));
                    }
                }
                t
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge)
    };
    with_workers(opts.workers, run)
}

/// Per-worker state for high-precision re-decisions.
#[derive(Default)]
struct Scratch {
    consts: Option<Consts>,
}

impl Scratch {
    fn consts(&mut self) -> &mut Consts {
        self.consts.get_or_insert_with(|| Consts::new().expect("astro-float constants"))
    }
}

#[inline(always)]
fn float_block<F: Fn(f64) -> f64, D: FnMut(i64) -> bool>(
    f: &F,
    q: u64,
    (a_lo, a_hi): (i64, i64),
    delta: f64,
    mut decide: D,
) -> (u64, u64) {
    let qf = q as f64;
    let mut count = 0u64;
    let mut hits = 0u64;
    for a in a_lo..=a_hi {
        let v = qf * f(a as f64 / qf);
        let d = dist_to_int_fast(v);
        if (d - delta).abs() <= BOUNDARY_BAND * v.abs().max(1.0) {
            hits += 1;
            count += decide(a) as u64;
        } else if d < delta {
            count += 1;
        }
    }
    (count, hits)
}

fn big_from_rational(r: &BigRational, prec: usize, cc: &mut Consts) -> BigFloat {
    let rm = RoundingMode::ToEven;
    let n = BigFloat::parse(&r.numer().to_string(), Radix::Dec, prec, rm, cc);
    let d = BigFloat::parse(&r.denom().to_string(), Radix::Dec, prec, rm, cc);
    n.div(&d, prec, rm)
}

/// `||q f(a/q)|| < delta` evaluated with `ESCALATION_BITS` of precision.
fn decide_big(shape: &Shape, a: i64, q: u64, delta: &BigFloat, cc: &mut Consts) -> bool {
    let p = ESCALATION_BITS;
    let rm = RoundingMode::ToEven;
    let qb = BigFloat::from_u64(q, p);
    let x = BigFloat::from_i64(a, p).div(&qb, p, rm);
    let v = shape.eval_big(&x, p, cc).mul(&qb, p, rm);
    let half = BigFloat::from_f64(0.5, p);
    let nearest = v.add(&half, p, rm).floor();
    let d = v.sub(&nearest, p, rm).abs();
    matches!(d.cmp(delta), Some(c) if c < 0)
}

/// Counts pairs with floating evaluation of `q f(a/q)`; samples within the
/// boundary band of `delta` are re-decided exactly (polynomial curves) or in
/// extended precision.
pub fn count(curve: &Curve, query: &CountQuery, opts: &CountOptions) -> Result<CountResult> {
    let start = Instant::now();
    let threshold = query.threshold();
    let tally = match curve.shape() {
        Shape::Poly { f, .. } => {
            let exact = |a: i64, q: u64, _: &mut Scratch| f.dist_below(a, q, &threshold);
            run_float(curve, query, opts, |x| f.eval_f64(x), exact)
        }
        shape => {
            let delta_big = {
                let mut cc = Consts::new().expect("astro-float constants");
                big_from_rational(threshold.value(), ESCALATION_BITS, &mut cc)
            };
            let decide = |a: i64, q: u64, scratch: &mut Scratch| decide_big(shape, a, q, &delta_big, scratch.consts());
            match shape {
                Shape::Exp => run_float(curve, query, opts, f64::exp, decide),
                Shape::Sqrt => run_float(curve, query, opts, f64::sqrt, decide),
                _ => run_float(curve, query, opts, |x| curve.f(x), decide),
            }
        }
    };
    Ok(finish(curve, query, tally, opts.per_q, start))
}

fn run_float<F, E>(curve: &Curve, query: &CountQuery, opts: &CountOptions, f: F, exact: E) -> Tally
where
    F: Fn(f64) -> f64 + Sync,
    E: Fn(i64, u64, &mut Scratch) -> bool + Sync,
{
    tally_denominators(query.denominators(), opts, |q, scratch| {
        float_block(&f, q, curve.numerator_range(q), query.delta, |a| exact(a, q, scratch))
    })
}

fn finish(curve: &Curve, query: &CountQuery, tally: Tally, keep_per_q: bool, start: Instant) -> CountResult {
    CountResult {
        query: query.clone(),
        curve_id: curve.id().to_string(),
        count: tally.count,
        per_q: keep_per_q.then_some(tally.per_q),
        boundary_hits: tally.hits,
        elapsed: start.elapsed(),
    }
}

/// Counts pairs deciding every membership in exact rational arithmetic.
pub fn count_exact(curve: &Curve, query: &CountQuery, opts: &CountOptions) -> Result<CountResult> {
    let start = Instant::now();
    let poly: &Polynomial = curve.exact_form().ok_or_else(|| Error::MissingExactForm(curve.id().to_string()))?;
    let threshold = query.threshold();
    let tally = tally_denominators(query.denominators(), opts, |q, _| {
        let (lo, hi) = curve.numerator_range(q);
        let c = (lo..=hi).filter(|&a| poly.dist_below(a, q, &threshold)).count() as u64;
        (c, 0)
    });
    Ok(finish(curve, query, tally, opts.per_q, start))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSum {
    pub total: u64,
    /// `(Q / 2^r, Ñ(Q / 2^r, delta))` for `r = 1, 2, ...`, ending with the first
    /// block past `2^(r-1) > Q`, which is always empty.
    pub blocks: Vec<(f64, u64)>,
}

/// `N(Q, delta)` assembled from dyadic blocks `Ñ(Q / 2^r, delta)`.
pub fn dyadic_sum(curve: &Curve, q_bound: f64, delta: f64, opts: &CountOptions) -> Result<DyadicSum> {
    if !(q_bound > 0.0 && q_bound.is_finite()) {
        return Err(invalid(format!("Q must be positive, got {q_bound}")));
    }
    let mut blocks = Vec::new();
    let mut r = 1i32;
    loop {
        let scaled = q_bound / 2f64.powi(r);
        let query = CountQuery::new(scaled, delta, Mode::Tilde)?;
        blocks.push((scaled, count(curve, &query, opts)?.count));
        if 2f64.powi(r - 1) > q_bound {
            break;
        }
        r += 1;
    }
    Ok(DyadicSum { total: blocks.iter().map(|b| b.1).sum(), blocks })
}
