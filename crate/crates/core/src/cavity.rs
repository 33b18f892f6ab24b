//! Hybridisation of the loop mode with two cavity modes in the
//! single-excitation subspace.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::ResonanceCurve;

/// Renormalised cavity frequencies and couplings (`g / 2 pi`), all in GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub f_a: f64,
    pub f_b: f64,
    pub g_a: f64,
    pub g_b: f64,
    /// When set, `g_b` is ignored and taken as `sqrt(f_b / f_a) g_a`.
    #[serde(default)]
    pub tie_couplings: bool,
}

impl CavityParams {
    pub fn new(f_a: f64, f_b: f64, g_a: f64, g_b: f64) -> Self {
        CavityParams {
            f_a,
            f_b,
            g_a,
            g_b,
            tie_couplings: false,
        }
    }

    /// Couplings with `g_b` slaved to `g_a` by the mode-frequency ratio.
    pub fn tied(f_a: f64, f_b: f64, g_a: f64) -> Self {
        CavityParams {
            f_a,
            f_b,
            g_a,
            g_b: (f_b / f_a).sqrt() * g_a,
            tie_couplings: true,
        }
    }

    pub fn effective_g_b(&self) -> f64 {
        if self.tie_couplings {
            (self.f_b / self.f_a).sqrt() * self.g_a
        } else {
            self.g_b
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_a > 0.0 && self.f_b.is_finite()) || !(self.f_a < self.f_b) {
            return Err(Error::InvalidSpec(format!(
                "cavity frequencies must satisfy 0 < f_a < f_b, got {} and {}",
                self.f_a, self.f_b
            )));
        }
        if !(self.g_a >= 0.0 && self.g_a.is_finite())
            || !(self.effective_g_b() >= 0.0)
            || !self.effective_g_b().is_finite()
        {
            return Err(Error::InvalidSpec(
                "cavity couplings must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The three single-excitation eigenfrequencies, ascending.
pub fn hybridize(f_q: f64, cav: &CavityParams) -> Result<[f64; 3]> {
    if !(f_q > 0.0) || !f_q.is_finite() {
        return Err(Error::domain("f_q", f_q));
    }
    cav.validate()?;
    let g_b = cav.effective_g_b();
    #[rustfmt::skip]
    let m = Matrix3::new(
        f_q, cav.g_a, g_b,
        cav.g_a, cav.f_a, 0.0,
        g_b, 0.0, cav.f_b,
    );
    let eig = SymmetricEigen::new(m);
    let mut out = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Replaces `f_hybridized` with the lowest dressed branch at every point.
pub fn dressed_branch(curve: &ResonanceCurve, cav: &CavityParams) -> Result<ResonanceCurve> {
    let mut out = curve.clone();
    for p in &mut out.points {
        p.f_hybridized = Some(hybridize(p.f_bare, cav)?[0]);
    }
    Ok(out)
}
