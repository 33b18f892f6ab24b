//! Matrix elements of the harmonic-oscillator displacement operator.
//!
//! Everything here is expressed through
//! `<m|D(a)|n> = sqrt(n!/m!) a^(m-n) e^(-a^2/2) L_n^(m-n)(a^2)` for `m >= n`
//! and real `a`, with `D(a) = exp(a (b^dag - b))`. The lower-index element
//! uses `(-a)^(n-m)` instead. Laguerre polynomials are generated by forward
//! recurrence in `n`, carrying a separate log scale so that large
//! displacements (hundreds of zero-point widths) neither overflow nor lose
//! the exponentially small prefactor.

use nalgebra::DMatrix;

use crate::scalar::Real;
use crate::special::ln_factorials;

fn rescale_limit<T: Real>() -> T {
    T::lit(1e30)
}

// Scaled Laguerre values L_n^(k)(x) for n = 0..len, returned as (mantissa,
// natural-log scale) pairs.
fn laguerre_run<T: Real>(len: usize, k: usize, x: T) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let kf = T::from_index(k);
    let limit = rescale_limit::<T>();
    let log_limit = limit.ln();
    let mut scale = T::zero();
    let mut prev = T::zero();
    let mut cur = T::one();
    out.push((cur, scale));
    for n in 0..len.saturating_sub(1) {
        let nf = T::from_index(n);
        let next = if n == 0 {
            T::one() + kf - x
        } else {
            ((T::lit(2.0) * nf + T::one() + kf - x) * cur - (nf + kf) * prev) / (nf + T::one())
        };
        prev = cur;
        cur = next;
        if cur.abs() > limit || prev.abs() > limit {
            cur /= limit;
            prev /= limit;
            scale += log_limit;
        }
        out.push((cur, scale));
    }
    out
}

/// `<hi|D(alpha)|lo>` for `hi >= lo`, given precomputed log-factorials.
fn upper_element<T: Real>(lo: usize, hi: usize, alpha: T, lnf: &[T]) -> T {
    let j = hi - lo;
    if alpha == T::zero() {
        return if j == 0 { T::one() } else { T::zero() };
    }
    let x = alpha * alpha;
    let run = laguerre_run(lo + 1, j, x);
    let (mant, scale) = run[lo];
    combine(lo, j, alpha, x, mant, scale, lnf)
}

fn combine<T: Real>(lo: usize, j: usize, alpha: T, x: T, mant: T, scale: T, lnf: &[T]) -> T {
    if mant == T::zero() {
        return T::zero();
    }
    let half = T::lit(0.5);
    let log_mag =
        half * (lnf[lo] - lnf[lo + j]) + T::from_index(j) * alpha.abs().ln() - half * x + scale + mant.abs().ln();
    let mut v = log_mag.exp();
    if mant < T::zero() {
        v = -v;
    }
    if alpha < T::zero() && j % 2 == 1 {
        v = -v;
    }
    v
}

/// `<m|D(alpha)|n>` for real `alpha`.
pub fn displacement_element<T: Real>(m: usize, n: usize, alpha: T) -> T {
    let lnf = ln_factorials::<T>(m.max(n) + 1);
    if m >= n {
        upper_element(n, m, alpha, &lnf)
    } else {
        upper_element(m, n, -alpha, &lnf)
    }
}

/// Overlap `integral psi_m(x) psi_n(x - d) dx` of unit-frequency oscillator
/// eigenfunctions (`psi_0 ~ exp(-x^2/2)`), i.e. `<m|D(d/sqrt 2)|n>`.
///
/// The `(0, 0)` element is positive; other signs follow the Laguerre formula,
/// so `overlap(n, m, d) = overlap(m, n, -d)`.
pub fn displaced_overlap<T: Real>(n: usize, m: usize, d: T) -> T {
    displacement_element(m, n, d / T::lit(2.0).sqrt())
}

/// Overlaps `displaced_overlap(n, m, d)` for `m = 0..len` at fixed `n`.
pub fn overlap_row<T: Real>(n: usize, len: usize, d: T) -> Vec<T> {
    let alpha = d / T::lit(2.0).sqrt();
    let lnf = ln_factorials::<T>(n.max(len) + 1);
    (0..len)
        .map(|m| {
            if m >= n {
                upper_element(n, m, alpha, &lnf)
            } else {
                upper_element(m, n, -alpha, &lnf)
            }
        })
        .collect()
}

/// Full `dim x dim` matrix `<m|D(alpha)|n>` for real `alpha`, built one
/// diagonal at a time in `O(dim^2)`.
pub fn displacement_matrix<T: Real>(dim: usize, alpha: T) -> DMatrix<T> {
    let mag = displacement_magnitudes(dim, alpha);
    DMatrix::from_fn(dim, dim, |m, n| {
        if m >= n || (n - m) % 2 == 0 {
            mag[(m, n)]
        } else {
            -mag[(m, n)]
        }
    })
}

/// Symmetric matrix `S_mn = <max|D(alpha)|min>`; the displacement matrix
/// itself differs from it by `(-1)^(n-m)` above the diagonal.
pub fn displacement_magnitudes<T: Real>(dim: usize, alpha: T) -> DMatrix<T> {
    let mut out = DMatrix::zeros(dim, dim);
    if dim == 0 {
        return out;
    }
    if alpha == T::zero() {
        out.fill_with_identity();
        return out;
    }
    let lnf = ln_factorials::<T>(dim);
    let x = alpha * alpha;
    for j in 0..dim {
        let run = laguerre_run(dim - j, j, x);
        for (lo, &(mant, scale)) in run.iter().enumerate() {
            let v = combine(lo, j, alpha, x, mant, scale, &lnf);
            out[(lo + j, lo)] = v;
            out[(lo, lo + j)] = v;
        }
    }
    out
}

/// Matrices of `cos(kappa X)` and `sin(kappa X)` with `X = b + b^dag`, in the
/// first `dim` oscillator states.
///
/// Uses `exp(i kappa X) = D(i kappa)`, whose elements are `i^|m-n|` times the
/// real magnitudes of [`displacement_magnitudes`].
pub fn trig_position_matrices<T: Real>(dim: usize, kappa: T) -> (DMatrix<T>, DMatrix<T>) {
    let mag = displacement_magnitudes(dim, kappa);
    let mut c = DMatrix::zeros(dim, dim);
    let mut s = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        for m in 0..dim {
            let j = m.abs_diff(n);
            let v = mag[(m, n)];
            match j % 4 {
                0 => c[(m, n)] = v,
                1 => s[(m, n)] = v,
                2 => c[(m, n)] = -v,
                _ => s[(m, n)] = -v,
            }
        }
    }
    (c, s)
}

/// Matrix of `X^2` with `X = b + b^dag`, exactly projected onto the first
/// `dim` states (not the square of the truncated `X`).
pub fn position_squared<T: Real>(dim: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        out[(n, n)] = T::from_index(2 * n + 1);
        if n + 2 < dim {
            let v = T::from_index((n + 1) * (n + 2)).sqrt();
            out[(n, n + 2)] = v;
            out[(n + 2, n)] = v;
        }
    }
    out
}
