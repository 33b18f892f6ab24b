//! Special functions: the complex dilogarithm and log-factorials.

use nalgebra::Complex;

use crate::scalar::Real;

// B_{2k} / (2k+1)! for k = 1..=10.
#[allow(clippy::excessive_precision)]
const BERNOULLI_ODD: [f64; 10] = [
    1.0 / 36.0,
    -1.0 / 3600.0,
    1.0 / 211_680.0,
    -1.0 / 10_886_400.0,
    1.0 / 526_901_760.0,
    -4.064_761_645_144_225_5e-11,
    8.921_691_020_456_452_6e-13,
    -1.993_929_586_072_107_6e-14,
    4.518_980_029_619_918_2e-16,
    -1.035_651_761_218_124_7e-17,
];

fn clog<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re.hypot(z.im).ln(), z.im.atan2(z.re))
}

/// `-ln(w)` where `w = 1 - z` is supplied directly, so callers can form it
/// without cancellation.
fn neg_log_from<T: Real>(w: Complex<T>) -> Complex<T> {
    let l = clog(w);
    Complex::new(-l.re, -l.im)
}

/// Bernoulli-accelerated series `Li2 = u - u^2/4 + sum b_k u^(2k+1)` in
/// `u = -ln(1 - z)`; accurate for `|u| < 2`.
fn bernoulli_series<T: Real>(u: Complex<T>) -> Complex<T> {
    let u2 = u * u;
    let mut acc = Complex::new(T::zero(), T::zero());
    for b in BERNOULLI_ODD.iter().rev() {
        acc = acc * u2 + Complex::new(T::lit(*b), T::zero());
    }
    let quarter = Complex::new(T::lit(0.25), T::zero());
    u - u2 * quarter + acc * u2 * u
}

/// Complex dilogarithm on the closed unit disc, given `z` and `1 - z`.
///
/// `one_minus_z` is taken separately because near `z = 1` the subtraction
/// loses most of its digits; callers that know a cancellation-free form of
/// `1 - z` should pass it.
pub fn dilog_unit_disc<T: Real>(z: Complex<T>, one_minus_z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let zeta2 = T::pi() * T::pi() / T::lit(6.0);
    if one_minus_z.re == T::zero() && one_minus_z.im == T::zero() {
        return Complex::new(zeta2, T::zero());
    }
    if z.re <= half {
        bernoulli_series(neg_log_from(one_minus_z))
    } else {
        // Li2(z) = -Li2(1 - z) + zeta(2) - ln z ln(1 - z)
        let lz = clog(z);
        let l1z = clog(one_minus_z);
        let reflected = bernoulli_series(Complex::new(-lz.re, -lz.im));
        Complex::new(zeta2, T::zero()) - reflected - lz * l1z
    }
}

/// Complex dilogarithm `Li2(z) = sum_{k>=1} z^k / k^2` for any `z` off the
/// branch cut `(1, inf)`.
pub fn dilog<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    if z.norm_sqr() <= T::one() {
        return dilog_unit_disc(z, one - z);
    }
    // Li2(z) = -Li2(1/z) - zeta(2) - ln^2(-z) / 2
    let inv = one / z;
    let l = clog(Complex::new(-z.re, -z.im));
    let zeta2 = T::pi() * T::pi() / T::lit(6.0);
    let half = Complex::new(T::lit(0.5), T::zero());
    -dilog_unit_disc(inv, one - inv) - Complex::new(zeta2, T::zero()) - l * l * half
}

/// `ln(n!)` for `n = 0..len`, by cumulative summation.
pub fn ln_factorials<T: Real>(len: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(len);
    let mut acc = T::zero();
    for n in 0..len {
        if n > 1 {
            acc += T::from_index(n).ln();
        }
        out.push(acc);
    }
    out
}
