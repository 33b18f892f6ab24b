//! Parameter sets fitted to the measured device, plus the simplified
//! single-loop circuit used for spectral comparisons.

use crate::cavity::CavityParams;
use crate::circuit::{inductance_to_energy, CircuitSpec, WeakLinkModel};
use crate::spectra::{SimpleSpec, SimpleVariant};

/// Skewness of the near-sawtooth junction fit.
pub const SAWTOOTH_CHI: f64 = 1.0 - 5e-5;

/// Josephson model with a near-sawtooth energy-phase relation.
pub fn jj_sawtooth() -> CircuitSpec<f64> {
    CircuitSpec {
        e_c_sigma: 7.4e-3,
        e_c_delta: 0.97,
        e_ls: 568.0,
        e_lp: 452.0,
        weak_link: WeakLinkModel::Jj {
            e0: 973.0,
            chi: SAWTOOTH_CHI,
        },
    }
}

/// Same loop with a sinusoidal junction.
pub fn jj_sinusoidal() -> CircuitSpec<f64> {
    jj_sawtooth().with_weak_link(WeakLinkModel::Jj { e0: 973.0, chi: 0.0 })
}

/// Near-sawtooth fit with the larger junction energy quoted alongside the
/// lifetime measurements. The data do not single out either value.
pub fn jj_sawtooth_large_e0() -> CircuitSpec<f64> {
    jj_sawtooth().with_weak_link(WeakLinkModel::Jj {
        e0: 1055.0,
        chi: SAWTOOTH_CHI,
    })
}

/// Series inductance of the phase-slip element, pH.
pub const QPS_SERIES_INDUCTANCE_PH: f64 = 8.0;

/// Phase-slip model of the same device.
pub fn qps_plateau() -> CircuitSpec<f64> {
    CircuitSpec {
        e_c_sigma: 5.2e-3,
        e_c_delta: 0.97,
        e_ls: 840.0,
        e_lp: 305.0,
        weak_link: WeakLinkModel::Qps {
            e_q: 60.0,
            e_lq: inductance_to_energy(QPS_SERIES_INDUCTANCE_PH).expect("positive inductance"),
        },
    }
}

/// Renormalised cavity modes with the couplings of the Josephson fit.
pub fn cavity_jj() -> CavityParams {
    CavityParams::new(8.07, 12.02, 1.73, 2.12)
}

/// Renormalised cavity modes with the couplings of the phase-slip fit.
pub fn cavity_qps() -> CavityParams {
    CavityParams::new(8.07, 12.02, 2.19, 2.67)
}

/// Cavity parameters obtained from the finite-element coupled-mode fit.
pub fn cavity_simulated() -> CavityParams {
    CavityParams::new(8.07, 12.02, 1.89, 2.26)
}

/// Lumped-element estimate of the loaded loop frequency, GHz.
pub const SIMULATED_LOOP_FREQUENCY: f64 = 10.08;

/// Simplified single-loop circuit, Josephson variant.
pub fn simple_jj(flux: f64) -> SimpleSpec<f64> {
    SimpleSpec {
        e_c: 1.0,
        e_l: 0.1,
        variant: SimpleVariant::Jj { e_j: 3.0, chi: 0.99 },
        flux,
    }
}

/// Simplified single-loop circuit, phase-slip variant.
pub fn simple_qps(flux: f64) -> SimpleSpec<f64> {
    SimpleSpec {
        e_c: 1.0,
        e_l: 0.1,
        variant: SimpleVariant::Qps { e_lq: 3.0, e_q: 5.0 },
        flux,
    }
}
