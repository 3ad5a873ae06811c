//! Exponential integral.

use crate::num::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// `E₁(x) = ∫_x^∞ e^{−t}/t dt` for `x > 0`. Returns `+∞` at zero and `NaN` for negative input.
pub fn exp_integral_e1<T: Real>(x: T) -> T {
    if x < T::zero() || x.is_nan() {
        return T::nan();
    }
    if x == T::zero() {
        return T::infinity();
    }
    let eps = T::epsilon();
    if x <= T::one() {
        // −γ − ln x − Σ (−x)^k / (k·k!)
        let mut term = T::one();
        let mut sum = T::zero();
        let mut k = 1;
        loop {
            let kf = T::from_i32(k).unwrap();
            term = -term * x / kf;
            let add = term / kf;
            sum = sum + add;
            if add.abs() < eps * sum.abs().max(eps) || k > 200 {
                break;
            }
            k += 1;
        }
        -T::lit(EULER_GAMMA) - x.ln() - sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = T::min_positive_value() / eps;
        let mut b = x + T::one();
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..500 {
            let fi = T::from_i32(i).unwrap();
            let an = -fi * fi;
            b = b + T::lit(2.0);
            d = T::one() / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h = h * del;
            if (del - T::one()).abs() <= eps {
                break;
            }
        }
        h * (-x).exp()
    }
}
