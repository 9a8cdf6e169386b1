//! Adaptive Gauss-Kronrod quadrature for oscillatory complex integrands.
//!
//! The interval is first cut into panels over which the phase advances by at
//! most [`CYCLES_PER_PANEL`] cycles, then each panel is refined by bisection
//! until its G7/K15 difference meets its share of the absolute tolerance.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Maximum phase advance, in cycles, of a panel before refinement.
pub const CYCLES_PER_PANEL: f64 = 0.125;

/// Hard limit on the number of panels per integral.
pub const MAX_PANELS: usize = 50_000_000;

const MAX_DEPTH: u32 = 40;

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

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: Complex<T>,
    /// Sum of the per-panel G7/K15 differences.
    pub error: T,
    pub panels: usize,
}

/// Kronrod estimate and |K15 - G7| on `[a, b]`.
fn gk15<T: Real, F: Fn(T) -> Complex<T>>(f: &F, a: T, b: T) -> (Complex<T>, T) {
    let two = T::lit(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = half * T::lit(XGK[i]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[i / 2]);
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).norm())
}

/// Integrates `f` over `[lo, hi]`.
///
/// `advance(a, b)` must bound the number of phase cycles of `f` on `[a, b]`;
/// `abs_tol` is the absolute error target for the whole interval.
pub fn integrate<T, F, A>(f: F, advance: A, lo: T, hi: T, abs_tol: T) -> Result<QuadResult<T>>
where
    T: Real,
    F: Fn(T) -> Complex<T>,
    A: Fn(T, T) -> T,
{
    integrate_capped(f, advance, lo, hi, abs_tol, T::lit(CYCLES_PER_PANEL))
}

/// [`integrate`] with a custom cap on the phase advance per initial panel.
pub fn integrate_capped<T, F, A>(f: F, advance: A, lo: T, hi: T, abs_tol: T, cap: T) -> Result<QuadResult<T>>
where
    T: Real,
    F: Fn(T) -> Complex<T>,
    A: Fn(T, T) -> T,
{
    if !(lo < hi) {
        return Err(crate::error::invalid(format!("integration bounds must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let width = hi - lo;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut error = T::zero();
    let mut panels = 0usize;

    // Depth-first over a stack keeps panels in increasing order.
    let mut stack: Vec<(T, T, u32, bool)> = vec![(lo, hi, 0, false)];
    while let Some((a, b, depth, resolved)) = stack.pop() {
        let mid = (a + b) / T::lit(2.0);
        let splittable = depth < MAX_DEPTH && a < mid && mid < b;
        if !resolved {
            if advance(a, b) > cap && splittable {
                stack.push((mid, b, depth + 1, false));
                stack.push((a, mid, depth + 1, false));
                continue;
            }
        }
        let (value, err) = gk15(&f, a, b);
        let share = abs_tol * (b - a) / width;
        if err > share && splittable {
            stack.push((mid, b, depth + 1, true));
            stack.push((a, mid, depth + 1, true));
            continue;
        }
        re.add(value.re);
        im.add(value.im);
        error += err;
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::Quadrature { achieved: f64::INFINITY, target: abs_tol.as_f64() });
        }
    }
    if error > abs_tol {
        return Err(Error::Quadrature { achieved: error.as_f64(), target: abs_tol.as_f64() });
    }
    Ok(QuadResult { value: Complex::new(re.value(), im.value()), error, panels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_phase(_: f64, _: f64) -> f64 {
        0.0
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(|x: f64| Complex::new(x.powi(5), 1.0), no_phase, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value.re - 64.0 / 6.0).abs() < 1e-13);
        assert!((r.value.im - 2.0).abs() < 1e-14);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn oscillatory_exponential() {
        // int_0^1 e(w x) dx = (e(w) - 1) / (2 pi i w)
        let omega = 100.5;
        let f = |x: f64| {
            let t = std::f64::consts::TAU * omega * x;
            Complex::new(t.cos(), t.sin())
        };
        let r = integrate(f, |a, b| omega * (b - a), 0.0, 1.0, 1e-12).unwrap();
        let t = std::f64::consts::TAU * omega;
        let exact = Complex::new(t.sin(), 1.0 - t.cos()) / t;
        assert!((r.value - exact).norm() < 1e-12);
        assert!(r.panels >= 8 * 100);
    }

    #[test]
    fn refines_singular_derivative() {
        let r = integrate(|x: f64| Complex::new(x.sqrt(), 0.0), no_phase, 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-10);
        assert!(r.panels > 1);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| Complex::new(1.0 / x, 0.0), no_phase, 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(integrate(|_: f64| Complex::new(1.0, 0.0), no_phase, 1.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn single_precision() {
        let r = integrate(|x: f32| Complex::new(x.cos(), x.sin()), |_, _| 0.0, 0.0f32, 1.0, 1e-5).unwrap();
        assert!((r.value.re - 1f32.sin()).abs() < 1e-5);
        assert!((r.value.im - (1.0 - 1f32.cos())).abs() < 1e-5);
    }
}
