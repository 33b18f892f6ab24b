//! Circuit parameters, unit conversions and the weak-link constitutive
//! relations.
//!
//! Units: energies are frequency equivalents `E/h` in GHz, fluxes are in
//! units of the flux quantum, phases in radians, capacitances in fF and
//! inductances in pH.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::dilog_unit_disc;

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum `h / 2e`, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

// Phi0^2 / (4 pi^2 h), expressed in GHz * pH.
fn inductive_constant() -> f64 {
    let pi = std::f64::consts::PI;
    FLUX_QUANTUM * FLUX_QUANTUM / (4.0 * pi * pi * PLANCK) / 1e-12 / 1e9
}

// e^2 / (4 h), expressed in GHz * fF.
fn charging_constant() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PLANCK) / 1e-15 / 1e9
}

/// Inductive energy `Phi0^2 / (4 pi^2 L) / h` in GHz for an inductance in pH.
pub fn inductance_to_energy<T: Real>(l_ph: T) -> Result<T> {
    if !(l_ph > T::zero()) || !l_ph.is_finite() {
        return Err(Error::domain("inductance_ph", l_ph.as_f64()));
    }
    Ok(T::lit(inductive_constant()) / l_ph)
}

/// Inverse of [`inductance_to_energy`].
pub fn energy_to_inductance<T: Real>(e_ghz: T) -> Result<T> {
    if !(e_ghz > T::zero()) || !e_ghz.is_finite() {
        return Err(Error::domain("inductive_energy_ghz", e_ghz.as_f64()));
    }
    Ok(T::lit(inductive_constant()) / e_ghz)
}

/// Charging energy `e^2 / (4 C) / h` in GHz for a capacitance in fF.
pub fn capacitance_to_charging_energy<T: Real>(c_ff: T) -> Result<T> {
    if !(c_ff > T::zero()) || !c_ff.is_finite() {
        return Err(Error::domain("capacitance_ff", c_ff.as_f64()));
    }
    Ok(T::lit(charging_constant()) / c_ff)
}

/// Inverse of [`capacitance_to_charging_energy`].
pub fn charging_energy_to_capacitance<T: Real>(e_ghz: T) -> Result<T> {
    if !(e_ghz > T::zero()) || !e_ghz.is_finite() {
        return Err(Error::domain("charging_energy_ghz", e_ghz.as_f64()));
    }
    Ok(T::lit(charging_constant()) / e_ghz)
}

/// External flux through the loop, in flux quanta.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxPoint<T: Real>(pub T);

impl<T: Real> FluxPoint<T> {
    pub fn new(phi_ext: T) -> Result<Self> {
        if !phi_ext.is_finite() {
            return Err(Error::domain("phi_ext", phi_ext.as_f64()));
        }
        Ok(FluxPoint(phi_ext))
    }

    #[inline]
    pub fn phi_ext(self) -> T {
        self.0
    }

    /// Reduced flux phase `2 pi Phi_ext / Phi0`.
    #[inline]
    pub fn phase(self) -> T {
        T::two_pi() * self.0
    }
}

/// How the weak link is modelled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeakLinkModel<T: Real> {
    /// Josephson element with a skewed energy-phase relation.
    Jj { e0: T, chi: T },
    /// Phase-slip element with its series parasitic inductance.
    Qps { e_q: T, e_lq: T },
}

impl<T: Real> WeakLinkModel<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeakLinkModel::Jj { e0, chi } => {
                if !(e0 > T::zero()) || !e0.is_finite() {
                    return Err(Error::InvalidSpec(format!("e0 must be positive, got {e0}")));
                }
                check_chi(chi)?;
            }
            WeakLinkModel::Qps { e_q, e_lq } => {
                if !(e_q > T::zero()) || !e_q.is_finite() {
                    return Err(Error::InvalidSpec(format!("e_q must be positive, got {e_q}")));
                }
                if !(e_lq > T::zero()) || !e_lq.is_finite() {
                    return Err(Error::InvalidSpec(format!("e_lq must be positive, got {e_lq}")));
                }
            }
        }
        Ok(())
    }
}

/// Circuit energies of the shunted loop and the weak-link variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec<T: Real> {
    /// Common-mode (heavy) charging energy.
    pub e_c_sigma: T,
    /// Differential-mode (light) charging energy.
    pub e_c_delta: T,
    /// Series inductive energy.
    pub e_ls: T,
    /// Parallel inductive energy.
    pub e_lp: T,
    pub weak_link: WeakLinkModel<T>,
}

impl<T: Real> CircuitSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("e_c_sigma", self.e_c_sigma),
            ("e_c_delta", self.e_c_delta),
            ("e_ls", self.e_ls),
            ("e_lp", self.e_lp),
        ];
        for (name, v) in named {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.e_c_sigma < self.e_c_delta) {
            return Err(Error::InvalidSpec(format!(
                "e_c_sigma ({}) must be below e_c_delta ({})",
                self.e_c_sigma, self.e_c_delta
            )));
        }
        self.weak_link.validate()
    }

    pub fn is_jj(&self) -> bool {
        matches!(self.weak_link, WeakLinkModel::Jj { .. })
    }

    /// Returns a copy with a different weak-link model.
    pub fn with_weak_link(mut self, weak_link: WeakLinkModel<T>) -> Self {
        self.weak_link = weak_link;
        self
    }

    /// Charging energies as the diagonal `(E_Csigma, E_Cdelta)`.
    pub fn charging(&self) -> [T; 2] {
        [self.e_c_sigma, self.e_c_delta]
    }
}

/// Lumped element values of the physical device.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalElements<T: Real> {
    pub c_b: T,
    pub c_s: T,
    pub l_p: T,
    pub l_s: T,
    pub l_q: T,
}

impl<T: Real> PhysicalElements<T> {
    /// `E_Cdelta = e^2 / 4 C_S`.
    pub fn e_c_delta(&self) -> Result<T> {
        capacitance_to_charging_energy(self.c_s)
    }

    /// `E_Csigma = e^2 / 4 (C_S + 2 C_B)`.
    pub fn e_c_sigma(&self) -> Result<T> {
        capacitance_to_charging_energy(self.c_s + self.c_b + self.c_b)
    }

    /// Circuit energies for a Josephson weak link.
    pub fn jj_spec(&self, e0: T, chi: T) -> Result<CircuitSpec<T>> {
        let spec = CircuitSpec {
            e_c_sigma: self.e_c_sigma()?,
            e_c_delta: self.e_c_delta()?,
            e_ls: inductance_to_energy(self.l_s)?,
            e_lp: inductance_to_energy(self.l_p)?,
            weak_link: WeakLinkModel::Jj { e0, chi },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Circuit energies for a phase-slip weak link.
    pub fn qps_spec(&self, e_q: T) -> Result<CircuitSpec<T>> {
        let spec = CircuitSpec {
            e_c_sigma: self.e_c_sigma()?,
            e_c_delta: self.e_c_delta()?,
            e_ls: inductance_to_energy(self.l_s)?,
            e_lp: inductance_to_energy(self.l_p)?,
            weak_link: WeakLinkModel::Qps {
                e_q,
                e_lq: inductance_to_energy(self.l_q)?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ratio of the parallel (geometric) inductance to the weak link's
    /// small-signal inductance. Above one the loop has several metastable wells.
    pub fn beta(&self, e0: T) -> Result<T> {
        Ok(self.l_p / energy_to_inductance(e0)?)
    }
}

fn check_chi<T: Real>(chi: T) -> Result<()> {
    if !(chi >= T::zero() && chi <= T::one()) {
        return Err(Error::domain("chi", chi.as_f64()));
    }
    Ok(())
}

/// Wraps a phase into `[-pi, pi]`.
pub fn wrap_phase<T: Real>(phi: T) -> T {
    phi - T::two_pi() * (phi / T::two_pi()).round()
}

// Phase sits on the CPR discontinuity of the sawtooth limit.
fn on_sawtooth_jump<T: Real>(phi: T) -> bool {
    let w = wrap_phase(phi).abs();
    let slack = T::default_epsilon() * T::lit(8.0) * (T::one() + phi.abs());
    (T::pi() - w).abs() <= slack
}

// 1 + 2 chi cos(phi) + chi^2, free of cancellation near phi = pi.
fn skew_denominator<T: Real>(phi: T, chi: T) -> T {
    let c = (phi * T::lit(0.5)).cos();
    let gap = T::one() - chi;
    gap * gap + T::lit(4.0) * chi * c * c
}

/// Energy-phase relation of the skewed junction,
/// `E(phi) = -E0 (1 + chi) sum_k (-chi)^(k-1) cos(k phi) / k^2`.
///
/// For `0 < chi < 1` this is evaluated through the closed form
/// `E0 (1 + chi) / chi * Re Li2(-chi e^{i phi})` (or the rapidly converging
/// series when `chi` is small); `chi = 1` uses the exact parabolic limit.
pub fn cpr_energy<T: Real>(phi: T, e0: T, chi: T) -> Result<T> {
    check_chi(chi)?;
    if chi == T::zero() {
        return Ok(-e0 * phi.cos());
    }
    if chi == T::one() {
        let w = wrap_phase(phi);
        return Ok(e0 * (w * w * T::lit(0.5) - T::pi() * T::pi() / T::lit(6.0)));
    }
    if chi < T::lit(0.25) {
        return Ok(-e0 * (T::one() + chi) * alternating_series(phi, chi));
    }
    let half = phi * T::lit(0.5);
    let z = Complex::new(-chi * phi.cos(), -chi * phi.sin());
    let c = half.cos();
    let one_minus_z = Complex::new((T::one() - chi) + T::lit(2.0) * chi * c * c, chi * phi.sin());
    let li2 = dilog_unit_disc(z, one_minus_z);
    Ok(e0 * (T::one() + chi) / chi * li2.re)
}

// sum_k (-chi)^(k-1) cos(k phi) / k^2 for small chi.
fn alternating_series<T: Real>(phi: T, chi: T) -> T {
    let eps = T::default_epsilon() * T::lit(1e-2);
    let mut sum = T::zero();
    let mut weight = T::one();
    let mut k = 1usize;
    while weight.abs() > eps && k <= 10_000 {
        let kf = T::from_index(k);
        sum += weight * (kf * phi).cos() / (kf * kf);
        weight *= -chi;
        k += 1;
    }
    sum
}

/// Derivative `dE/dphi` of [`cpr_energy`] (the current-phase relation in
/// energy units).
pub fn cpr_current<T: Real>(phi: T, e0: T, chi: T) -> Result<T> {
    check_chi(chi)?;
    if chi == T::zero() {
        return Ok(e0 * phi.sin());
    }
    if chi == T::one() {
        if on_sawtooth_jump(phi) {
            return Err(Error::SingularPoint { phi: phi.as_f64() });
        }
        return Ok(e0 * wrap_phase(phi));
    }
    let c = (phi * T::lit(0.5)).cos();
    let re = (T::one() - chi) + T::lit(2.0) * chi * c * c;
    let angle = (chi * phi.sin()).atan2(re);
    Ok(e0 * (T::one() + chi) / chi * angle)
}

/// Second derivative `d^2E/dphi^2` of [`cpr_energy`].
pub fn cpr_curvature<T: Real>(phi: T, e0: T, chi: T) -> Result<T> {
    check_chi(chi)?;
    if chi == T::zero() {
        return Ok(e0 * phi.cos());
    }
    if chi == T::one() {
        if on_sawtooth_jump(phi) {
            return Err(Error::SingularPoint { phi: phi.as_f64() });
        }
        return Ok(e0);
    }
    let c = (phi * T::lit(0.5)).cos();
    let num = T::lit(2.0) * c * c - (T::one() - chi);
    Ok(e0 * (T::one() + chi) * num / skew_denominator(phi, chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn inductance_examples() {
        let e = inductance_to_energy(8.0f64).unwrap();
        assert!((e - 2.0433e4).abs() < 2.0, "{e}");
        let e2 = inductance_to_energy(16.0f64).unwrap();
        assert!((e / e2 - 2.0).abs() < 1e-14);
        let l = energy_to_inductance(452.0f64).unwrap();
        assert!((inductance_to_energy(l).unwrap() - 452.0).abs() < 1e-10);
        assert!(inductance_to_energy(0.0f64).is_err());
        assert!(inductance_to_energy(-3.0f64).is_err());
    }

    #[test]
    fn charging_examples() {
        let ecd = capacitance_to_charging_energy(10.0f64).unwrap();
        assert!((ecd - 0.97).abs() < 5e-3, "{ecd}");
        let ecs = capacitance_to_charging_energy(10.0f64 + 2.0 * 646.0).unwrap();
        assert!((ecs - 7.4e-3).abs() < 1e-4, "{ecs}");
        let half = capacitance_to_charging_energy(20.0f64).unwrap();
        assert!((ecd / half - 2.0).abs() < 1e-14);
        assert!(capacitance_to_charging_energy(0.0f64).is_err());
    }

    #[test]
    fn device_elements_reproduce_fitted_scales() {
        let el = PhysicalElements::<f64> {
            c_b: 646.0,
            c_s: 10.0,
            l_p: 362.0,
            l_s: 288.0,
            l_q: 8.0,
        };
        let spec: CircuitSpec<f64> = el.jj_spec(973.0, 0.0).unwrap();
        assert!((spec.e_lp - 452.0).abs() < 1.0);
        assert!((spec.e_ls - 568.0).abs() < 1.0);
        assert!(el.beta(973.0).unwrap() > 1.0);
    }

    #[test]
    fn cpr_trivial_values() {
        assert_eq!(cpr_energy(0.0, 1.0, 0.0).unwrap(), -1.0);
        assert!((cpr_current(PI / 2.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cpr_curvature(0.0, 1.0, 0.0).unwrap(), 1.0);
        let root = (-0.5f64).acos();
        assert!(cpr_curvature(root, 1.0, 0.5).unwrap().abs() < 1e-14);
        assert!((root - 2.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_limit_values() {
        let e = cpr_energy(PI, 1.0, 1.0).unwrap();
        assert!((e - PI * PI / 3.0).abs() < 1e-12);
        assert_eq!(cpr_curvature(0.3, 1.0, 1.0).unwrap(), 1.0);
        assert!((cpr_current(1.0f64, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(cpr_current(PI, 1.0, 1.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(
            cpr_curvature(-3.0 * PI, 1.0, 1.0),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn chi_outside_unit_interval_rejected() {
        assert!(cpr_energy(0.1, 1.0, -0.1).is_err());
        assert!(cpr_current(0.1, 1.0, 1.1).is_err());
        assert!(cpr_curvature(0.1, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn small_and_large_chi_branches_meet() {
        // both evaluation routes are valid near the switch-over
        for &phi in &[0.0, 0.7, 2.5, -3.0] {
            let a: f64 = cpr_energy(phi, 1.0, 0.2499999).unwrap();
            let b: f64 = cpr_energy(phi, 1.0, 0.2500001).unwrap();
            assert!((a - b).abs() < 1e-6, "{phi}: {a} {b}");
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let e = cpr_energy(0.7f32, 1.0, 0.9).unwrap();
        let e64 = cpr_energy(0.7f64, 1.0, 0.9).unwrap();
        assert!((e as f64 - e64).abs() < 1e-5);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = CircuitSpec {
            e_c_sigma: 0.0074,
            e_c_delta: 0.97,
            e_ls: 568.0,
            e_lp: 452.0,
            weak_link: WeakLinkModel::Jj {
                e0: 973.0,
                chi: 0.99995,
            },
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"weak_link\":{\"jj\":{\"e0\":973.0"));
        let back: CircuitSpec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let bad = s.replace("e_ls", "e_lss");
        let err = serde_json::from_str::<CircuitSpec<f64>>(&bad).unwrap_err().to_string();
        assert!(err.contains("e_lss"), "{err}");
    }

    #[test]
    fn spec_validation() {
        let mut spec = CircuitSpec {
            e_c_sigma: 0.0074,
            e_c_delta: 0.97,
            e_ls: 568.0,
            e_lp: 452.0,
            weak_link: WeakLinkModel::Jj { e0: 973.0, chi: 0.5 },
        };
        assert!(spec.validate().is_ok());
        spec.e_c_sigma = 2.0;
        assert!(spec.validate().is_err());
        spec.e_c_sigma = 0.0074;
        spec.weak_link = WeakLinkModel::Qps { e_q: 60.0, e_lq: -1.0 };
        assert!(spec.validate().is_err());
    }
}
