//! Adaptive Gauss–Kronrod (G10/K21) quadrature.

use crate::error::{Error, Result};
use crate::num::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_643_414,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Absolute and relative error targets. The effective target is the larger of the two.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
}

impl<T: Real> Tolerance<T> {
    /// Requested tolerances, floored a little above machine precision for `T`.
    pub fn new(abs: f64, rel: f64) -> Self {
        let floor = T::epsilon() * T::lit(50.0);
        Tolerance {
            abs: T::lit(abs),
            rel: T::lit(rel).max(floor),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
    pub converged: bool,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    splittable: bool,
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[10]);
    let mut res_g = T::zero();
    for j in 0..10 {
        let dx = half * T::lit(XGK[j]);
        let sum = f(center - dx) + f(center + dx);
        res_k = res_k + T::lit(WGK[j]) * sum;
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * sum;
        }
    }
    (res_k * half, ((res_k - res_g) * half).abs())
}

/// Single 21-point Kronrod panel, used as a fixed high-order rule on short segments.
pub fn kronrod21<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T) -> T {
    kronrod(&mut f, a, b).0
}

/// Globally adaptive bisection on `[a, b]`. Never fails; check `converged`.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    tol: Tolerance<T>,
    max_intervals: usize,
) -> Estimate<T> {
    let (value, error) = kronrod(&mut f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        value,
        error,
        splittable: true,
    }];
    let mut total = value;
    let mut total_err = error;
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target && total.is_finite() {
            return Estimate {
                value: total,
                error: total_err,
                intervals: panels.len(),
                converged: true,
            };
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        let Some(i) = worst else { break };
        if panels.len() >= max_intervals {
            break;
        }
        let p = panels.swap_remove(i);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(mid > p.a && mid < p.b)
            || (p.b - p.a).abs() <= T::epsilon() * T::lit(100.0) * p.a.abs().max(p.b.abs())
        {
            panels.push(Panel {
                splittable: false,
                ..p
            });
            continue;
        }
        let (v1, e1) = kronrod(&mut f, p.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, p.b);
        total = total - p.value + v1 + v2;
        total_err = total_err - p.error + e1 + e2;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
            splittable: true,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
            splittable: true,
        });
    }
    // Recompute the sums from scratch; the running totals drift.
    let value = panels.iter().fold(T::zero(), |s, p| s + p.value);
    let error = panels.iter().fold(T::zero(), |s, p| s + p.error);
    let target = tol.abs.max(tol.rel * value.abs());
    Estimate {
        value,
        error,
        intervals: panels.len(),
        converged: error <= target && value.is_finite() && error.is_finite(),
    }
}

/// `∫_a^∞ f(x) dx` through `x = a + scale·t/(1−t)`.
pub fn adaptive_semi_infinite<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    scale: T,
    tol: Tolerance<T>,
    max_intervals: usize,
) -> Estimate<T> {
    let one = T::one();
    adaptive(
        |t: T| {
            let u = one - t;
            let x = a + scale * t / u;
            let y = f(x);
            if y == T::zero() {
                y
            } else {
                y * scale / (u * u)
            }
        },
        T::zero(),
        one,
        tol,
        max_intervals,
    )
}

/// Adaptive integration that reports non-convergence as an error.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: Tolerance<T>,
    what: &str,
) -> Result<T> {
    let est = adaptive(f, a, b, tol, 2000);
    if est.converged {
        Ok(est.value)
    } else {
        Err(Error::numerical(
            what,
            est.error.to_f64_lossy(),
            tol.abs.max(tol.rel * est.value.abs()).to_f64_lossy(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let v = kronrod21(|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn log_endpoint_singularity() {
        let est = adaptive(|x: f64| -x.ln(), 0.0, 1.0, Tolerance::new(1e-12, 1e-12), 500);
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let est = adaptive(|x: f64| (50.0 * x).cos(), 0.0, 3.0, Tolerance::new(1e-13, 1e-12), 500);
        assert!((est.value - (150.0f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_exponential() {
        let est = adaptive_semi_infinite(|x: f64| (-2.0 * x).exp(), 1.0, 0.5, Tolerance::new(1e-14, 1e-12), 500);
        assert!((est.value - (-2.0f64).exp() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_reported() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::new(1e-12, 1e-12), "1/x");
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let est = adaptive(|x: f32| x.sin(), 0.0, std::f32::consts::PI, Tolerance::new(1e-6, 1e-6), 100);
        assert!(est.converged);
        assert!((est.value - 2.0).abs() < 1e-5);
    }
}
