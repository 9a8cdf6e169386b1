//! Curve model: evaluation of `f`, `f'`, `f''` on `[eta, xi]`, the Hölder data of
//! `f''`, and the C² quadratic-jet extension of `f` to the whole real line.

use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::poly::{parse_rational, Polynomial};
use crate::scalar::Real;

/// Seed for the sampled pairs in [`Curve::estimate_lip`].
pub const LIP_SEED: u64 = 0x5eed_11b5;

/// Grid size used to validate `f2_lower` and the sign of `f''`.
pub const VALIDATION_GRID: usize = 10_000;

/// Samples used for the Hölder estimate recorded at construction.
const LIP_SAMPLES: usize = 1_000;

/// Hölder exponent assigned to the builtin (smooth) curves.
pub const BUILTIN_THETA: f64 = 0.75;

/// The analytic form of a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Rational-coefficient polynomial; carries its exact form.
    Poly { f: Polynomial, d1: Polynomial, d2: Polynomial },
    /// `e^x`
    Exp,
    /// `sqrt(x)`, requires `eta > 0`
    Sqrt,
    /// Upper unit semicircle `sqrt(1 - x^2)`, requires `[eta, xi]` inside `(-1, 1)`
    CircleArc,
}

impl Shape {
    pub fn poly(f: Polynomial) -> Self {
        let d1 = f.derivative();
        let d2 = d1.derivative();
        Shape::Poly { f, d1, d2 }
    }

    #[inline]
    fn f<T: Real>(&self, x: T) -> T {
        match self {
            Shape::Poly { f, .. } => f.eval(x),
            Shape::Exp => x.exp(),
            Shape::Sqrt => x.sqrt(),
            Shape::CircleArc => (T::one() - x * x).sqrt(),
        }
    }

    #[inline]
    fn d1<T: Real>(&self, x: T) -> T {
        match self {
            Shape::Poly { d1, .. } => d1.eval(x),
            Shape::Exp => x.exp(),
            Shape::Sqrt => T::lit(0.5) / x.sqrt(),
            Shape::CircleArc => -x / (T::one() - x * x).sqrt(),
        }
    }

    #[inline]
    fn d2<T: Real>(&self, x: T) -> T {
        match self {
            Shape::Poly { d2, .. } => d2.eval(x),
            Shape::Exp => x.exp(),
            Shape::Sqrt => -T::lit(0.25) / (x * x * x).sqrt(),
            Shape::CircleArc => {
                let s = T::one() - x * x;
                -T::one() / (s * s * s).sqrt()
            }
        }
    }

    fn d3<T: Real>(&self, x: T) -> T {
        match self {
            Shape::Poly { d2, .. } => d2.derivative().eval(x),
            Shape::Exp => x.exp(),
            Shape::Sqrt => T::lit(0.375) / (x * x * x * x * x).sqrt(),
            Shape::CircleArc => {
                let s = T::one() - x * x;
                -T::lit(3.0) * x / (s * s * s * s * s).sqrt()
            }
        }
    }

    /// `f(x)` at `prec` bits, used to re-decide near-threshold samples.
    pub(crate) fn eval_big(&self, x: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        let rm = RoundingMode::ToEven;
        match self {
            Shape::Poly { f, .. } => {
                let mut acc = BigFloat::from_i64(0, prec);
                for c in f.coeffs().iter().rev() {
                    let num = BigFloat::parse(&c.numer().to_string(), astro_float::Radix::Dec, prec, rm, cc);
                    let den = BigFloat::parse(&c.denom().to_string(), astro_float::Radix::Dec, prec, rm, cc);
                    acc = acc.mul(x, prec, rm).add(&num.div(&den, prec, rm), prec, rm);
                }
                acc
            }
            Shape::Exp => x.exp(prec, rm, cc),
            Shape::Sqrt => x.sqrt(prec, rm),
            Shape::CircleArc => {
                let one = BigFloat::from_i64(1, prec);
                one.sub(&x.mul(x, prec, rm), prec, rm).sqrt(prec, rm)
            }
        }
    }
}

/// A C² curve on `[eta, xi]` with `|f''|` bounded away from zero.
///
/// Endpoints are stored exactly so that the interval test `eta*q < a <= xi*q`
/// is decided in integer arithmetic.
#[derive(Clone)]
pub struct Curve {
    id: String,
    eta: BigRational,
    xi: BigRational,
    eta_f: f64,
    xi_f: f64,
    shape: Shape,
    theta: f64,
    f2_lower: f64,
    f2_sign: f64,
    lip_estimate: f64,
    /// `(f, f', f'')` at `eta` and at `xi`
    left_jet: [f64; 3],
    right_jet: [f64; 3],
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("id", &self.id)
            .field("eta", &self.eta_f)
            .field("xi", &self.xi_f)
            .field("shape", &self.shape)
            .field("theta", &self.theta)
            .field("f2_lower", &self.f2_lower)
            .finish()
    }
}

impl Curve {
    /// Builds and validates a curve.
    ///
    /// When `f2_lower` is `None` the minimum of `|f''|` over the validation grid is used.
    pub fn new(
        id: impl Into<String>,
        shape: Shape,
        eta: BigRational,
        xi: BigRational,
        theta: f64,
        f2_lower: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        let fail = |reason: String| Error::InvalidCurve { id: id.clone(), reason };
        if eta >= xi {
            return Err(fail(format!("need eta < xi, got [{eta}, {xi}]")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(fail(format!("theta must lie in (0, 1), got {theta}")));
        }
        let eta_f = eta.to_f64().ok_or_else(|| fail("eta not representable".into()))?;
        let xi_f = xi.to_f64().ok_or_else(|| fail("xi not representable".into()))?;
        match shape {
            Shape::Sqrt if eta_f <= 0.0 => return Err(fail("sqrt needs eta > 0".into())),
            Shape::CircleArc if eta_f <= -1.0 || xi_f >= 1.0 => {
                return Err(fail("circle-arc needs [eta, xi] inside (-1, 1)".into()))
            }
            _ => {}
        }

        let mut grid_min = f64::INFINITY;
        let mut signs = (false, false);
        for i in 0..=VALIDATION_GRID {
            let x = eta_f + (xi_f - eta_f) * i as f64 / VALIDATION_GRID as f64;
            let v = shape.d2(x);
            if !v.is_finite() {
                return Err(fail(format!("f'' not finite at {x}")));
            }
            if v > 0.0 {
                signs.0 = true;
            } else if v < 0.0 {
                signs.1 = true;
            }
            grid_min = grid_min.min(v.abs());
        }
        if grid_min == 0.0 || (signs.0 && signs.1) {
            return Err(fail("f'' vanishes or changes sign on [eta, xi]".into()));
        }
        let f2_lower = match f2_lower {
            Some(b) if !(b > 0.0) => return Err(fail(format!("f2_lower must be positive, got {b}"))),
            Some(b) if b > grid_min => {
                return Err(fail(format!("f2_lower {b} exceeds grid minimum {grid_min} of |f''|")))
            }
            Some(b) => b,
            None => grid_min,
        };
        let f2_sign = if signs.0 { 1.0 } else { -1.0 };
        let jet = |x: f64| [shape.f(x), shape.d1(x), shape.d2(x)];
        let mut curve = Self {
            left_jet: jet(eta_f),
            right_jet: jet(xi_f),
            id,
            eta,
            xi,
            eta_f,
            xi_f,
            shape,
            theta,
            f2_lower,
            f2_sign,
            lip_estimate: 0.0,
        };
        curve.lip_estimate = curve.estimate_lip(theta, LIP_SAMPLES)?;
        if !curve.lip_estimate.is_finite() {
            return Err(Error::InvalidCurve {
                id: curve.id,
                reason: "Hölder estimate of f'' is not finite".into(),
            });
        }
        Ok(curve)
    }

    pub fn polynomial(id: impl Into<String>, poly: Polynomial, eta: BigRational, xi: BigRational, theta: f64) -> Result<Self> {
        Self::new(id, Shape::poly(poly), eta, xi, theta, None)
    }

    /// Looks up a curve from the builtin registry.
    pub fn builtin(name: &str) -> Result<Self> {
        let int = |n: i64| BigRational::from_integer(n.into());
        let half = BigRational::new(1.into(), 2.into());
        match name {
            "parabola" => Self::new(name, Shape::poly(Polynomial::from_ints(&[0, 0, 1])), int(1), int(2), BUILTIN_THETA, Some(2.0)),
            "cubic" => Self::new(name, Shape::poly(Polynomial::from_ints(&[0, 0, 0, 1])), int(1), int(2), BUILTIN_THETA, Some(6.0)),
            "exp" => Self::new(name, Shape::Exp, int(0), int(1), BUILTIN_THETA, Some(1.0)),
            // |f''| = x^{-3/2}/4 >= 2^{-7/2} ~ 0.08839 on [1, 2]
            "sqrt" => Self::new(name, Shape::Sqrt, int(1), int(2), BUILTIN_THETA, Some(0.088)),
            "circle-arc" => Self::new(name, Shape::CircleArc, -half.clone(), half, BUILTIN_THETA, Some(1.0)),
            _ => Err(Error::UnknownCurve(name.to_string())),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["parabola", "cubic", "exp", "sqrt", "circle-arc"]
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta_f
    }

    pub fn xi(&self) -> f64 {
        self.xi_f
    }

    pub fn eta_exact(&self) -> &BigRational {
        &self.eta
    }

    pub fn xi_exact(&self) -> &BigRational {
        &self.xi
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn f2_lower(&self) -> f64 {
        self.f2_lower
    }

    /// Sign of `f''` on the interval (`1.0` or `-1.0`).
    pub fn f2_sign(&self) -> f64 {
        self.f2_sign
    }

    /// Hölder quotient of `f''` recorded at construction (exponent `theta`).
    pub fn lip_estimate(&self) -> f64 {
        self.lip_estimate
    }

    pub fn exact_form(&self) -> Option<&Polynomial> {
        match &self.shape {
            Shape::Poly { f, .. } => Some(f),
            _ => None,
        }
    }

    #[inline]
    pub fn f<T: Real>(&self, x: T) -> T {
        self.shape.f(x)
    }

    #[inline]
    pub fn f1<T: Real>(&self, x: T) -> T {
        self.shape.d1(x)
    }

    #[inline]
    pub fn f2<T: Real>(&self, x: T) -> T {
        self.shape.d2(x)
    }

    /// `f'''` where the shape has one; used for panel sizing diagnostics only.
    pub fn f3<T: Real>(&self, x: T) -> T {
        self.shape.d3(x)
    }

    /// `f` extended to all of R: the quadratic Taylor jet at `xi` to the right and
    /// at `eta` to the left.
    pub fn eval_extended<T: Real>(&self, beta: T) -> T {
        match self.side(beta) {
            Side::Inside => self.shape.f(beta),
            Side::Left => jet_value(&self.left_jet, beta - T::lit(self.eta_f)),
            Side::Right => jet_value(&self.right_jet, beta - T::lit(self.xi_f)),
        }
    }

    pub fn eval_extended_d1<T: Real>(&self, beta: T) -> T {
        match self.side(beta) {
            Side::Inside => self.shape.d1(beta),
            Side::Left => T::lit(self.left_jet[1]) + (beta - T::lit(self.eta_f)) * T::lit(self.left_jet[2]),
            Side::Right => T::lit(self.right_jet[1]) + (beta - T::lit(self.xi_f)) * T::lit(self.right_jet[2]),
        }
    }

    pub fn eval_extended_d2<T: Real>(&self, beta: T) -> T {
        match self.side(beta) {
            Side::Inside => self.shape.d2(beta),
            Side::Left => T::lit(self.left_jet[2]),
            Side::Right => T::lit(self.right_jet[2]),
        }
    }

    #[inline]
    fn side<T: Real>(&self, beta: T) -> Side {
        if beta < T::lit(self.eta_f) {
            Side::Left
        } else if beta > T::lit(self.xi_f) {
            Side::Right
        } else {
            Side::Inside
        }
    }

    /// Largest `|f''(x) - f''(y)| / |x - y|^theta` over sampled pairs in `[eta, xi]`.
    ///
    /// The samples are the two endpoints followed by a seeded uniform stream, so
    /// the sample set for `n` is a prefix of the one for `n + 1`.
    pub fn estimate_lip(&self, theta: f64, samples: usize) -> Result<f64> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid(format!("theta must lie in (0, 1], got {theta}")));
        }
        if samples < 2 {
            return Err(invalid("estimate_lip needs at least 2 samples"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(LIP_SEED);
        let mut xs = vec![self.eta_f, self.xi_f];
        xs.extend((2..samples).map(|_| rng.gen_range(self.eta_f..=self.xi_f)));
        let vals: Vec<f64> = xs.iter().map(|&x| self.shape.d2(x)).collect();
        let mut best = 0.0f64;
        for i in 0..xs.len() {
            for j in 0..i {
                let dx = (xs[i] - xs[j]).abs();
                if dx > 0.0 {
                    best = best.max((vals[i] - vals[j]).abs() / dx.powf(theta));
                }
            }
        }
        Ok(best)
    }

    /// Integer range `[a_lo, a_hi]` of numerators with `eta*q < a <= xi*q`, computed exactly.
    pub fn numerator_range(&self, q: u64) -> (i64, i64) {
        let q = BigInt::from(q);
        let floor_times = |r: &BigRational| -> i64 {
            (r.numer() * &q).div_floor(r.denom()).to_i64().expect("numerator range fits in i64")
        };
        (floor_times(&self.eta) + 1, floor_times(&self.xi))
    }
}

enum Side {
    Left,
    Inside,
    Right,
}

#[inline]
fn jet_value<T: Real>(jet: &[f64; 3], d: T) -> T {
    T::lit(0.5) * d * d * T::lit(jet[2]) + d * T::lit(jet[1]) + T::lit(jet[0])
}

/// A curve as written in a config file or on the command line.
///
/// Accepted forms are a bare builtin name (`parabola`), or a TOML inline table:
/// `{ name = "exp" }` or
/// `{ poly = ["0", "0", "1"], eta = "1", xi = "2", theta = 0.75, id = "my-parabola" }`.
/// Coefficients and endpoints may be integers, decimals, or `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CurveSpec {
    Builtin(String),
    Poly { id: Option<String>, coeffs: Vec<String>, eta: String, xi: String, theta: f64 },
}

impl CurveSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.starts_with('{') {
            return Ok(CurveSpec::Builtin(text.to_string()));
        }
        let doc: toml::Table = format!("curve = {text}")
            .parse()
            .map_err(|e| Error::Config(format!("bad curve spec `{text}`: {e}")))?;
        Self::from_toml(&doc["curve"])
    }

    pub fn from_toml(value: &toml::Value) -> Result<Self> {
        let cfg = |m: String| Error::Config(m);
        match value {
            toml::Value::String(s) => Ok(CurveSpec::Builtin(s.clone())),
            toml::Value::Table(t) => {
                if let Some(name) = t.get("name") {
                    let name = name.as_str().ok_or_else(|| cfg("curve.name must be a string".into()))?;
                    return Ok(CurveSpec::Builtin(name.to_string()));
                }
                let coeffs = t
                    .get("poly")
                    .and_then(|p| p.as_array())
                    .ok_or_else(|| cfg("curve needs `name` or `poly = [...]`".into()))?
                    .iter()
                    .map(number_text)
                    .collect::<Result<Vec<_>>>()?;
                let field = |k: &str| -> Result<String> {
                    number_text(t.get(k).ok_or_else(|| cfg(format!("poly curve needs `{k}`")))?)
                };
                let theta = match t.get("theta") {
                    None => BUILTIN_THETA,
                    Some(v) => v
                        .as_float()
                        .or_else(|| v.as_integer().map(|i| i as f64))
                        .ok_or_else(|| cfg("theta must be a number".into()))?,
                };
                let id = t.get("id").and_then(|v| v.as_str()).map(str::to_string);
                Ok(CurveSpec::Poly { id, coeffs, eta: field("eta")?, xi: field("xi")?, theta })
            }
            _ => Err(cfg("curve must be a name or a table".into())),
        }
    }

    pub fn build(&self) -> Result<Curve> {
        match self {
            CurveSpec::Builtin(name) => Curve::builtin(name),
            CurveSpec::Poly { id, coeffs, eta, xi, theta } => {
                let poly = Polynomial::from_strs(coeffs)?;
                let id = id.clone().unwrap_or_else(|| format!("poly[{}]", coeffs.join(",")));
                Curve::polynomial(id, poly, parse_rational(eta)?, parse_rational(xi)?, *theta)
            }
        }
    }
}

fn number_text(v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) if f.is_finite() => Ok(f.to_string()),
        _ => Err(Error::Config(format!("expected a number or \"p/q\" string, got {v}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn parabola() -> Curve {
        Curve::builtin("parabola").unwrap()
    }

    #[test]
    fn extended_examples() {
        let p = parabola();
        assert_eq!(p.eval_extended(1.5), 2.25);
        assert_eq!(p.eval_extended(3.0), 9.0);
        assert_eq!(p.eval_extended_d2(5.0), 2.0);
        // the jet of a quadratic reproduces it on both sides
        assert_eq!(p.eval_extended(-1.0), 1.0);

        let e = Curve::builtin("exp").unwrap();
        assert_eq!(e.eval_extended_d2(-1.0), 1.0);
        assert!((e.eval_extended_d1(0.5) - 0.5f64.exp()).abs() < 1e-15);
        assert!((e.eval_extended_d1(0.5f64) - 1.64872).abs() < 1e-5);
    }

    #[test]
    fn seam_finite_differences_at_xi() {
        let e = Curve::builtin("exp").unwrap();
        let h = 1e-6;
        let b = 1.0 + h;
        // one-sided differences straddling the seam all see e
        assert!(((e.eval_extended(b) - e.eval_extended(1.0)) / h - E).abs() < 1e-5);
        assert!(((e.eval_extended_d1(b) - e.eval_extended_d1(1.0)) / h - E).abs() < 1e-5);
        assert!((e.eval_extended_d2(b) - E).abs() < 1e-5);
        assert!(((e.eval_extended(1.0) - e.eval_extended(1.0 - h)) / h - E).abs() < 1e-5);
    }

    #[test]
    fn seam_continuity_both_endpoints() {
        for name in Curve::builtin_names() {
            let c = Curve::builtin(name).unwrap();
            let h = 1e-7;
            for (p, dir) in [(c.eta(), -1.0), (c.xi(), 1.0)] {
                let x = p + dir * h;
                let taylor = c.f(p) + dir * h * c.f1(p);
                let scale = 1.0 + c.f(p).abs() + c.f1(p).abs() + c.f2(p).abs();
                assert!((c.eval_extended(x) - taylor).abs() <= 1e-10 * scale, "{name} at {p}");
            }
        }
    }

    #[test]
    fn extension_second_derivative_frozen() {
        for name in Curve::builtin_names() {
            let c = Curve::builtin(name).unwrap();
            for k in 1..20 {
                let d = k as f64 * 0.37;
                assert_eq!(c.eval_extended_d2(c.xi() + d), c.f2(c.xi()));
                assert_eq!(c.eval_extended_d2(c.eta() - d), c.f2(c.eta()));
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        for name in Curve::builtin_names() {
            let c = Curve::builtin(name).unwrap();
            for i in 1..50 {
                let x = c.eta() + (c.xi() - c.eta()) * i as f64 / 50.0;
                let h = 1e-5;
                let d1 = (c.f(x + h) - c.f(x - h)) / (2.0 * h);
                let d2 = (c.f1(x + h) - c.f1(x - h)) / (2.0 * h);
                let d3 = (c.f2(x + h) - c.f2(x - h)) / (2.0 * h);
                assert!((d1 - c.f1(x)).abs() <= 1e-6 * c.f1(x).abs().max(1.0), "{name} f' at {x}");
                assert!((d2 - c.f2(x)).abs() <= 1e-6 * c.f2(x).abs().max(1.0), "{name} f'' at {x}");
                assert!((d3 - c.f3(x)).abs() <= 1e-6 * c.f3(x).abs().max(1.0), "{name} f''' at {x}");
            }
        }
    }

    #[test]
    fn lip_estimates() {
        let p = parabola();
        assert_eq!(p.estimate_lip(0.5, 1000).unwrap(), 0.0);
        let e = Curve::builtin("exp").unwrap().estimate_lip(1.0, 1000).unwrap();
        assert!((2.6..=E).contains(&e), "exp estimate {e}");
        let c = Curve::builtin("cubic").unwrap().estimate_lip(1.0, 1000).unwrap();
        assert!((c - 6.0).abs() < 0.01, "cubic estimate {c}");
        assert!(p.estimate_lip(0.0, 10).is_err());
        assert!(p.estimate_lip(1.5, 10).is_err());
        assert!(p.estimate_lip(0.5, 1).is_err());
    }

    #[test]
    fn lip_monotone_in_samples() {
        let c = Curve::builtin("sqrt").unwrap();
        let mut last = 0.0;
        for n in [2, 3, 5, 10, 50, 200, 400] {
            let v = c.estimate_lip(0.6, n).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn registry() {
        let p = parabola();
        assert_eq!((p.eta(), p.xi(), p.f2_lower()), (1.0, 2.0, 2.0));
        assert!(p.exact_form().is_some());
        let e = Curve::builtin("exp").unwrap();
        assert_eq!((e.eta(), e.xi(), e.f2_lower()), (0.0, 1.0, 1.0));
        assert!(e.exact_form().is_none());
        assert!(matches!(Curve::builtin("nosuch"), Err(Error::UnknownCurve(_))));
        for name in Curve::builtin_names() {
            let c = Curve::builtin(name).unwrap();
            assert!(c.lip_estimate().is_finite());
        }
    }

    #[test]
    fn exact_form_agrees_with_f() {
        for name in ["parabola", "cubic"] {
            let c = Curve::builtin(name).unwrap();
            let poly = c.exact_form().unwrap();
            for i in 0..=10_000 {
                let x = c.eta() + (c.xi() - c.eta()) * i as f64 / 10_000.0;
                let exact = poly.eval_exact(&BigRational::from_float(x).unwrap()).to_f64().unwrap();
                assert!((c.f(x) - exact).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_degenerate_curves() {
        let int = |n: i64| BigRational::from_integer(n.into());
        let line = Curve::polynomial("line", Polynomial::from_ints(&[1, 2]), int(0), int(1), 0.5);
        assert!(matches!(line, Err(Error::InvalidCurve { .. })));
        let inflect = Curve::polynomial("x3", Polynomial::from_ints(&[0, 0, 0, 1]), int(-1), int(1), 0.5);
        assert!(inflect.is_err());
        let backwards = Curve::polynomial("p", Polynomial::from_ints(&[0, 0, 1]), int(2), int(1), 0.5);
        assert!(backwards.is_err());
        let bad_theta = Curve::polynomial("p", Polynomial::from_ints(&[0, 0, 1]), int(1), int(2), 1.0);
        assert!(bad_theta.is_err());
        let too_high = Curve::new("p", Shape::poly(Polynomial::from_ints(&[0, 0, 1])), int(1), int(2), 0.5, Some(2.5));
        assert!(too_high.is_err());
    }

    #[test]
    fn numerator_range_is_exact() {
        let c = Curve::builtin("circle-arc").unwrap();
        // -q/2 < a <= q/2
        assert_eq!(c.numerator_range(4), (-1, 2));
        assert_eq!(c.numerator_range(5), (-2, 2));
        let p = parabola();
        assert_eq!(p.numerator_range(1), (2, 2));
        assert_eq!(p.numerator_range(7), (8, 14));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(CurveSpec::parse("parabola").unwrap(), CurveSpec::Builtin("parabola".into()));
        assert_eq!(CurveSpec::parse("{ name = \"exp\" }").unwrap(), CurveSpec::Builtin("exp".into()));
        let s = CurveSpec::parse("{ poly = [\"1/2\", 0, 3], eta = \"1/3\", xi = 2, theta = 0.5 }").unwrap();
        let c = s.build().unwrap();
        assert_eq!(c.exact_form().unwrap(), &Polynomial::from_strs(&["1/2", "0", "3"]).unwrap());
        assert_eq!(c.eta_exact(), &BigRational::new(1.into(), 3.into()));
        assert_eq!(c.theta(), 0.5);
        assert_eq!(c.f2_lower(), 6.0);
        assert!(CurveSpec::parse("{ poly = [0, 1], eta = 0, xi = 1 }").unwrap().build().is_err());
        assert!(CurveSpec::parse("{ eta = 0 }").is_err());
    }

    #[test]
    fn big_eval_matches_f64() {
        let mut cc = Consts::new().unwrap();
        for name in Curve::builtin_names() {
            let c = Curve::builtin(name).unwrap();
            let x = 0.5 * (c.eta() + c.xi()) + 0.01;
            let v = c.shape().eval_big(&BigFloat::from_f64(x, 256), 256, &mut cc);
            let back: f64 = v.to_string().parse().unwrap();
            assert!((back - c.f(x)).abs() < 1e-14, "{name}");
        }
    }
}
