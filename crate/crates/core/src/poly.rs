//! Polynomials with rational coefficients and exact evaluation of `q f(a/q)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Parses `"p/q"`, a decimal such as `"-0.125"`, or an integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || invalid(format!("cannot parse `{s}` as a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(invalid(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid(format!("{x} is not finite")))
}

fn to_i128(x: &BigInt) -> Option<i128> {
    x.to_i128()
}

/// A polynomial `c_0 + c_1 x + ... + c_d x^d` with rational coefficients.
#[derive(Clone)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
    coeffs_f64: Vec<f64>,
    /// `c_i * D` for the common denominator `D`.
    int_coeffs: Vec<BigInt>,
    int_coeffs_small: Option<Vec<i128>>,
    denom: BigInt,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial(")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        let denom = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let int_coeffs: Vec<BigInt> =
            coeffs.iter().map(|c| (c * BigRational::from_integer(denom.clone())).to_integer()).collect();
        let int_coeffs_small = int_coeffs.iter().map(to_i128).collect::<Option<Vec<_>>>();
        let coeffs_f64 = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        Self { coeffs, coeffs_f64, int_coeffs, int_coeffs_small, denom }
    }

    pub fn from_strs<S: AsRef<str>>(coeffs: &[S]) -> Result<Self> {
        Ok(Self::new(coeffs.iter().map(|c| parse_rational(c.as_ref())).collect::<Result<_>>()?))
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Horner evaluation with coefficients rounded to `f64`.
    #[inline]
    pub fn eval<T: Real>(&self, x: T) -> T {
        self.coeffs_f64.iter().rev().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
    }

    #[inline]
    pub(crate) fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs_f64.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    fn scale_exponent(&self) -> u32 {
        self.degree().max(1) as u32
    }

    fn scaled_small(&self, a: i64, q: u64) -> Option<(i128, i128)> {
        let coeffs = self.int_coeffs_small.as_ref()?;
        let e = self.scale_exponent();
        let a = a as i128;
        let q = i128::try_from(q).ok()?;
        // numerator = sum n_i a^i q^(e-i); Horner in a with q-weights
        let mut numer: i128 = 0;
        let mut a_pow: i128 = 1;
        for (i, &n) in coeffs.iter().enumerate() {
            let q_pow = q.checked_pow(e - i as u32)?;
            numer = numer.checked_add(n.checked_mul(a_pow)?.checked_mul(q_pow)?)?;
            if i + 1 < coeffs.len() {
                a_pow = a_pow.checked_mul(a)?;
            }
        }
        let den = to_i128(&self.denom)?.checked_mul(q.checked_pow(e - 1)?)?;
        Some((numer, den))
    }

    fn scaled_big(&self, a: i64, q: u64) -> (BigInt, BigInt) {
        let e = self.scale_exponent();
        let a = BigInt::from(a);
        let q = BigInt::from(q);
        let mut numer = BigInt::zero();
        let mut a_pow = BigInt::one();
        for (i, n) in self.int_coeffs.iter().enumerate() {
            numer += n * &a_pow * num_traits::pow(q.clone(), (e as usize) - i);
            a_pow *= &a;
        }
        let den = &self.denom * num_traits::pow(q, e as usize - 1);
        (numer, den)
    }

    /// `q f(a/q)` as an exact rational.
    pub fn scaled_value(&self, a: i64, q: u64) -> BigRational {
        match self.scaled_small(a, q) {
            Some((n, d)) => BigRational::new(n.into(), d.into()),
            None => {
                let (n, d) = self.scaled_big(a, q);
                BigRational::new(n, d)
            }
        }
    }

    /// Decides `||q f(a/q)|| < delta` exactly.
    pub fn dist_below(&self, a: i64, q: u64, delta: &ExactThreshold) -> bool {
        if let (Some((n, m)), Some((r, s))) = (self.scaled_small(a, q), delta.small) {
            if let Some(less) = dist_below_small(n, m, r, s) {
                return less;
            }
        }
        let (n, m) = self.scaled_big(a, q);
        let rem = n.mod_floor(&m);
        let other = &m - &rem;
        let dnum = if rem < other { rem } else { other };
        dnum * &delta.denom < &delta.numer * m
    }
}

fn dist_below_small(n: i128, m: i128, r: i128, s: i128) -> Option<bool> {
    let rem = n.rem_euclid(m);
    let dnum = rem.min(m - rem);
    Some(dnum.checked_mul(s)? < r.checked_mul(m)?)
}

/// A positive rational threshold `r/s`, kept in both big and machine-word form.
#[derive(Debug, Clone)]
pub struct ExactThreshold {
    pub(crate) numer: BigInt,
    pub(crate) denom: BigInt,
    small: Option<(i128, i128)>,
    value: BigRational,
}

impl ExactThreshold {
    pub fn new(value: BigRational) -> Result<Self> {
        if !value.is_positive() {
            return Err(invalid(format!("threshold {value} must be positive")));
        }
        let numer = value.numer().clone();
        let denom = value.denom().clone();
        let small = to_i128(&numer).zip(to_i128(&denom));
        Ok(Self { numer, denom, small, value })
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/10").unwrap(), r(3, 10));
        assert_eq!(parse_rational("-0.125").unwrap(), r(-1, 8));
        assert_eq!(parse_rational("2").unwrap(), r(2, 1));
        assert_eq!(parse_rational("1.5e2").unwrap(), r(150, 1));
        assert_eq!(parse_rational("0.1").unwrap(), r(1, 10));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn scaled_value_parabola() {
        let p = Polynomial::from_ints(&[0, 0, 1]);
        assert_eq!(p.scaled_value(3, 2), r(9, 2));
        assert_eq!(p.scaled_value(4, 2), r(8, 1));
        let t = ExactThreshold::new(r(3, 10)).unwrap();
        assert!(!p.dist_below(3, 2, &t));
        assert!(p.dist_below(4, 2, &t));
    }

    #[test]
    fn constant_and_linear_scaling() {
        let c = Polynomial::from_strs(&["1/3"]).unwrap();
        assert_eq!(c.scaled_value(5, 6), r(2, 1));
        let l = Polynomial::from_strs(&["0", "1/2"]).unwrap();
        assert_eq!(l.scaled_value(5, 7), r(5, 2));
    }

    #[test]
    fn big_and_small_paths_agree() {
        let p = Polynomial::from_strs(&["1/7", "-2/3", "5/11", "1"]).unwrap();
        let t = ExactThreshold::new(r(1, 4)).unwrap();
        for q in 1..40u64 {
            for a in -50..50i64 {
                let (n, m) = p.scaled_big(a, q);
                assert_eq!(p.scaled_value(a, q), BigRational::new(n.clone(), m.clone()));
                let x = BigRational::new(a.into(), (q as i64).into());
                assert_eq!(p.scaled_value(a, q), p.eval_exact(&x) * BigRational::from_integer(q.into()));
                let rem = n.mod_floor(&m);
                let other = &m - &rem;
                let d = BigRational::new(rem.min(other), m);
                assert_eq!(p.dist_below(a, q, &t), d < r(1, 4));
            }
        }
    }

    #[test]
    fn derivative_and_eval() {
        let p = Polynomial::from_ints(&[1, 0, 0, 1]);
        let d2 = p.derivative().derivative();
        assert_eq!(d2, Polynomial::from_ints(&[0, 6]));
        assert_eq!(d2.eval(2.0f64), 12.0);
        assert_eq!(Polynomial::from_ints(&[4]).derivative().degree(), 0);
    }
}
