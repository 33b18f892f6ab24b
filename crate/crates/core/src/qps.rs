//! Quantum treatment of the phase-slip loop.
//!
//! The light `delta` mode is eliminated adiabatically. What remains at each
//! lattice value `zeta = 2 pi m` is a harmonic well in `sigma`; all wells
//! share one curvature and differ only in their flux-dependent offsets. The
//! phase-slip term couples neighbouring wells with matrix elements
//! `(E_Q / 2) <m'| n>` between displaced oscillator states, which are used
//! in second-order perturbation theory and to estimate where the occupied
//! well is abandoned during a flux ramp.

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSpec, FluxPoint, WeakLinkModel};
use crate::error::{Error, Result};
use crate::oscillator::overlap_row;
use crate::sweep::{CurvePoint, InitialWell, JumpEvent, ResonanceCurve, SweepDirection};

const TAU: f64 = std::f64::consts::TAU;

/// Parameters of the reduced one-dimensional problem shared by all wells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellBasis {
    /// Oscillator frequency of the reduced `sigma` mode, GHz.
    pub f_osc: f64,
    /// Zero-point phase width: `sigma - sigma_m = sigma_zpf (b + b^dag)`.
    pub sigma_zpf: f64,
    /// Distance between neighbouring well centres in `sigma`, rad.
    pub well_spacing: f64,
    /// Same distance in units of the unit-frequency oscillator coordinate.
    pub d: f64,
    /// Inductive energy setting the flux parabola of the well offsets, GHz.
    pub e_l_eff: f64,
    /// Zero-point energy of the eliminated `delta` mode, GHz.
    pub delta_zero_point: f64,
    e_lp: f64,
    e_lq: f64,
    e_q: f64,
}

/// One well at a given flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellEntry {
    pub m: i64,
    /// Centre of the well in `sigma`, rad.
    pub sigma: f64,
    /// Bottom of the reduced potential including the `delta` zero point, GHz.
    pub energy: f64,
}

fn qps_params(spec: &CircuitSpec<f64>) -> Result<(f64, f64)> {
    spec.validate()?;
    match spec.weak_link {
        WeakLinkModel::Qps { e_q, e_lq } => Ok((e_q, e_lq)),
        WeakLinkModel::Jj { .. } => Err(Error::Precondition("expected a phase-slip circuit".into())),
    }
}

impl WellBasis {
    pub fn new(spec: &CircuitSpec<f64>) -> Result<Self> {
        let (e_q, e_lq) = qps_params(spec)?;
        let k_delta = spec.e_ls + spec.e_lp + e_lq;
        let k_sigma = 4.0 * spec.e_ls * (spec.e_lp + e_lq) / k_delta;
        let sigma_zpf = (2.0 * spec.e_c_sigma / k_sigma).sqrt().sqrt();
        let well_spacing = std::f64::consts::PI * e_lq / (spec.e_lp + e_lq);
        Ok(WellBasis {
            f_osc: (8.0 * spec.e_c_sigma * k_sigma).sqrt(),
            sigma_zpf,
            well_spacing,
            d: well_spacing / (2f64.sqrt() * sigma_zpf),
            e_l_eff: spec.e_lp * e_lq / (spec.e_lp + e_lq),
            delta_zero_point: 0.5 * (8.0 * spec.e_c_delta * k_delta).sqrt(),
            e_lp: spec.e_lp,
            e_lq,
            e_q,
        })
    }

    /// Well `m` at flux `phi_ext`.
    pub fn entry(&self, flux: f64, m: i64) -> WellEntry {
        let off = TAU * (flux - m as f64);
        // branch phase delta - sigma at the minimum
        let phi = -(self.e_lq * TAU * m as f64 + self.e_lp * TAU * flux) / (self.e_lp + self.e_lq);
        WellEntry {
            m,
            sigma: -0.5 * phi,
            energy: 0.5 * self.e_l_eff * off * off + self.delta_zero_point,
        }
    }

    /// Energy of oscillator level `n` in well `m`.
    pub fn level(&self, flux: f64, m: i64, n: usize) -> f64 {
        self.entry(flux, m).energy + self.f_osc * (n as f64 + 0.5)
    }

    /// Mean of the Poisson-like distribution of `|<m|n>|^2` over `m`.
    pub fn mean_overlap_index(&self) -> f64 {
        0.5 * self.d * self.d
    }

    /// Level cutoff that captures the overlap distribution far into its
    /// tail: mean plus fourteen standard deviations plus a margin.
    pub fn auto_cutoff(&self) -> usize {
        let mean = self.mean_overlap_index();
        (mean + 14.0 * mean.sqrt() + 60.0).ceil() as usize
    }

    pub fn e_q(&self) -> f64 {
        self.e_q
    }
}

/// Adiabatic reduction of the phase-slip circuit at one flux, well `m`.
///
/// The light-mode Hamiltonian is harmonic for every frozen `sigma_0`, so
/// its ground energy is the minimum over `delta` plus
/// `sqrt(8 E_Cdelta k_delta) / 2`; the resulting potential in `sigma_0` is an
/// exact parabola.
pub fn born_oppenheimer_reduce(
    spec: &CircuitSpec<f64>,
    flux: FluxPoint<f64>,
    m: i64,
) -> Result<(WellBasis, WellEntry)> {
    let basis = WellBasis::new(spec)?;
    Ok((basis, basis.entry(flux.phi_ext(), m)))
}

/// Ground energy of the light mode with `sigma` frozen at `sigma0`.
pub fn light_mode_ground_energy(spec: &CircuitSpec<f64>, flux: f64, m: i64, sigma0: f64) -> Result<f64> {
    let (_, e_lq) = qps_params(spec)?;
    let k = spec.e_ls + spec.e_lp + e_lq;
    // V(delta) = E_LS (s + d)^2 / 2 + E_LP (s - d - a)^2 / 2 + E_LQ (s - d - z)^2 / 2
    let a = TAU * flux;
    let z = TAU * m as f64;
    let lin = spec.e_ls * sigma0 - spec.e_lp * (sigma0 - a) - e_lq * (sigma0 - z);
    let delta = -lin / k;
    let v = 0.5 * spec.e_ls * (sigma0 + delta).powi(2)
        + 0.5 * spec.e_lp * (sigma0 - delta - a).powi(2)
        + 0.5 * e_lq * (sigma0 - delta - z).powi(2);
    Ok(v + 0.5 * (8.0 * spec.e_c_delta * k).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtOptions {
    /// Oscillator levels per neighbouring well; `None` picks
    /// [`WellBasis::auto_cutoff`].
    pub level_cutoff: Option<usize>,
    /// Gaps below this (GHz) are treated as a resonance, not a shift.
    pub degeneracy_floor: f64,
    /// Include the same-index partner in the neighbouring well. Away from
    /// integer-spaced degeneracies it is a regular, non-resonant term.
    pub include_same_index: bool,
    /// Degenerate partners coupled more weakly than this (GHz) are crossed
    /// diabatically and left out instead of raising a resonance.
    pub diabatic_below: f64,
}

impl Default for PtOptions {
    fn default() -> Self {
        PtOptions {
            level_cutoff: None,
            degeneracy_floor: 1e-6,
            include_same_index: true,
            diabatic_below: 0.0,
        }
    }
}

/// Second-order shift of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtShift {
    pub level: usize,
    /// GHz.
    pub shift: f64,
    /// Partner with the largest contribution, as `(well, level)`.
    pub dominant_partner: (i64, usize),
    /// `|<zeta = 2 pi, m| V |zeta = 0, n>|` in GHz, indexed by `m`.
    pub couplings: Vec<f64>,
}

/// Couplings `(E_Q / 2) |<m|n>|` from level `n` to levels `m < cutoff` of a
/// neighbouring well.
pub fn couplings(basis: &WellBasis, n: usize, cutoff: usize) -> Vec<f64> {
    overlap_row(n, cutoff, basis.d)
        .into_iter()
        .map(|o| 0.5 * basis.e_q * o.abs())
        .collect()
}

/// Second-order shift of level `n` of well `m0` at `flux` from both
/// neighbouring wells.
pub fn pt_shift(basis: &WellBasis, n: usize, m0: i64, flux: f64, opts: &PtOptions) -> Result<PtShift> {
    let cutoff = opts.level_cutoff.unwrap_or_else(|| basis.auto_cutoff()).max(n + 1);
    let g = couplings(basis, n, cutoff);
    pt_shift_with(basis, n, m0, flux, &g, opts)
}

fn pt_shift_with(basis: &WellBasis, n: usize, m0: i64, flux: f64, g: &[f64], opts: &PtOptions) -> Result<PtShift> {
    let e_n = basis.level(flux, m0, n);
    let mut shift = 0.0;
    let mut best = (0.0, (m0 + 1, 0usize));
    let mut last_terms = 0.0;
    for nb in [m0 - 1, m0 + 1] {
        let base = basis.entry(flux, nb).energy;
        for (m, &gm) in g.iter().enumerate() {
            if m == n && !opts.include_same_index {
                continue;
            }
            let gap = e_n - (base + basis.f_osc * (m as f64 + 0.5));
            if gap.abs() < opts.degeneracy_floor {
                if gm <= opts.diabatic_below {
                    continue;
                }
                return Err(Error::Resonance {
                    level: n,
                    well: nb,
                    partner: m,
                    gap,
                });
            }
            let term = gm * gm / gap;
            if term.abs() > best.0 {
                best = (term.abs(), (nb, m));
            }
            shift += term;
        }
        last_terms += g.last().map_or(0.0, |gl| {
            gl * gl / (e_n - (base + basis.f_osc * (g.len() as f64 - 0.5))).abs()
        });
    }
    if shift != 0.0 && last_terms > 1e-3 * shift.abs() {
        return Err(Error::NotConverged(format!(
            "perturbative shift of level {n} not converged at {} levels",
            g.len()
        )));
    }
    Ok(PtShift {
        level: n,
        shift,
        dominant_partner: best.1,
        couplings: g.to_vec(),
    })
}

/// How the bare frequency is assembled from the shifts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// `f_osc + dE_1 - dE_0`.
    #[default]
    BothLevels,
    /// `f_osc + dE_1`.
    UpperOnly,
}

/// Critical-flux rule: leave the well once the resonant coupling, as a
/// rate, exceeds `factor * ramp_rate` (flux quanta per second, i.e. wells
/// crossed per second).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePolicy {
    /// Flux quanta per second.
    pub ramp_rate: f64,
    #[serde(default = "unit")]
    pub factor: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy {
            ramp_rate: 1e4,
            factor: 1.0,
        }
    }
}

impl RatePolicy {
    /// Threshold in Hz.
    pub fn threshold_hz(&self) -> f64 {
        self.factor * self.ramp_rate
    }
}

/// Flux offset (from well `m0`'s own centre) at which the ground state of
/// the occupied well is degenerate with level `k` of the next well.
pub fn crossing_offset(basis: &WellBasis, k: usize) -> f64 {
    0.5 + k as f64 * basis.f_osc / (2.0 * std::f64::consts::PI.powi(2) * basis.e_l_eff * 2.0)
}

/// Index of the neighbouring-well level closest to resonance with the
/// occupied ground state at flux offset `offset` from the well centre.
pub fn resonant_index(basis: &WellBasis, offset: f64) -> Option<usize> {
    let span = 2.0 * std::f64::consts::PI.powi(2) * basis.e_l_eff * (2.0 * offset.abs() - 1.0);
    if span < -0.5 * basis.f_osc {
        return None;
    }
    Some((span / basis.f_osc).round().max(0.0) as usize)
}

/// Result of the critical-flux search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalFlux {
    /// Up-sweep critical flux for a system starting in well 0.
    pub flux: FluxPoint<f64>,
    /// Index of the resonant level in the lower neighbouring well.
    pub level_index: usize,
    /// Resonant coupling, GHz.
    pub coupling_ghz: f64,
}

/// Smallest flux above `1/2` at which the ground state of well 0 is resonant
/// with a level of well 1 whose coupling rate exceeds the policy threshold.
pub fn critical_flux(spec: &CircuitSpec<f64>, policy: &RatePolicy) -> Result<CriticalFlux> {
    let basis = WellBasis::new(spec)?;
    if !(policy.ramp_rate >= 0.0 && policy.factor >= 0.0) {
        return Err(Error::Precondition("ramp rate and factor must be non-negative".into()));
    }
    let threshold_ghz = policy.threshold_hz() * 1e-9;
    let cutoff = basis.auto_cutoff();
    let g = couplings(&basis, 0, cutoff);
    g.iter()
        .position(|gk| *gk >= threshold_ghz)
        .map(|k| CriticalFlux {
            flux: FluxPoint(crossing_offset(&basis, k)),
            level_index: k,
            coupling_ghz: g[k],
        })
        .ok_or_else(|| {
            Error::NotFound(format!(
                "no resonant coupling above {threshold_ghz} GHz within {cutoff} levels"
            ))
        })
}

/// One row of the coupling-versus-index table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub level_index: usize,
    pub coupling_ghz: f64,
    pub resonant: bool,
}

/// Couplings from the ground state of the occupied well to every level of
/// the neighbouring well, flagging the level resonant at `flux_offset`.
pub fn coupling_table(spec: &CircuitSpec<f64>, flux_offset: f64, count: Option<usize>) -> Result<Vec<CouplingRow>> {
    let basis = WellBasis::new(spec)?;
    let cutoff = count.unwrap_or_else(|| basis.auto_cutoff());
    let res = resonant_index(&basis, flux_offset);
    Ok(couplings(&basis, 0, cutoff)
        .into_iter()
        .enumerate()
        .map(|(k, c)| CouplingRow {
            level_index: k,
            coupling_ghz: c,
            resonant: Some(k) == res,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpsCurveOptions {
    pub pt: PtOptions,
    pub policy: RatePolicy,
    pub mode: ShiftMode,
    pub initial_well: InitialWell,
}

impl Default for QpsCurveOptions {
    fn default() -> Self {
        QpsCurveOptions {
            pt: PtOptions::default(),
            policy: RatePolicy::default(),
            mode: ShiftMode::BothLevels,
            initial_well: InitialWell::GlobalMinimum,
        }
    }
}

/// Bare resonance frequency of well `m0` at `flux` from the perturbed
/// levels 0 and 1.
pub fn perturbed_frequency(
    basis: &WellBasis,
    m0: i64,
    flux: f64,
    mode: ShiftMode,
    pt: &PtOptions,
    rows: &[Vec<f64>; 2],
) -> Result<f64> {
    let s1 = pt_shift_with(basis, 1, m0, flux, &rows[1], pt)?.shift;
    let s0 = match mode {
        ShiftMode::BothLevels => pt_shift_with(basis, 0, m0, flux, &rows[0], pt)?.shift,
        ShiftMode::UpperOnly => 0.0,
    };
    Ok(basis.f_osc + s1 - s0)
}

/// Resonance curve of the phase-slip model along a monotone flux list.
///
/// The occupied well is left when the flux offset from its centre passes the
/// critical offset of [`critical_flux`] (mirrored for down sweeps), or when
/// perturbation theory hits an exact resonance whose coupling exceeds the
/// rate threshold. Weaker exact crossings are passed diabatically.
pub fn qps_resonance_curve(spec: &CircuitSpec<f64>, fluxes: &[f64], opts: &QpsCurveOptions) -> Result<ResonanceCurve> {
    let basis = WellBasis::new(spec)?;
    if fluxes.is_empty() {
        return Err(Error::Precondition("no flux points".into()));
    }
    let up = fluxes.windows(2).all(|w| w[1] > w[0]);
    let down = fluxes.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Precondition("flux values must be strictly monotone".into()));
    }
    let direction = if up { SweepDirection::Up } else { SweepDirection::Down };
    let step: i64 = if up { 1 } else { -1 };
    let crit = critical_flux(spec, &opts.policy)?.flux.phi_ext();
    let pt = PtOptions {
        diabatic_below: opts.pt.diabatic_below.max(opts.policy.threshold_hz() * 1e-9),
        ..opts.pt
    };
    let cutoff = opts.pt.level_cutoff.unwrap_or_else(|| basis.auto_cutoff()).max(2);
    let rows = [couplings(&basis, 0, cutoff), couplings(&basis, 1, cutoff)];

    let mut well = match opts.initial_well {
        InitialWell::GlobalMinimum => fluxes[0].round() as i64,
        InitialWell::Index(m) => m,
    };
    let mut points = Vec::with_capacity(fluxes.len());
    let mut jumps = Vec::new();
    for (i, &flux) in fluxes.iter().enumerate() {
        let mut jumped = false;
        // a ramp can carry the state across several wells between points
        loop {
            let offset = (flux - well as f64) * step as f64;
            if offset < crit {
                break;
            }
            let at = well as f64 + step as f64 * crit;
            jumps.push(JumpEvent {
                from_well: well,
                to_well: well + step,
                critical_flux: at,
                bracket: (at, at),
            });
            well += step;
            jumped = true;
        }
        let f = match perturbed_frequency(&basis, well, flux, opts.mode, &pt, &rows) {
            Ok(f) => f,
            Err(Error::Resonance { well: partner, .. }) if i > 0 => {
                // a strongly coupled resonance ends the branch as well
                jumps.push(JumpEvent {
                    from_well: well,
                    to_well: partner,
                    critical_flux: flux,
                    bracket: (fluxes[i - 1], flux),
                });
                well = partner;
                jumped = true;
                perturbed_frequency(&basis, well, flux, opts.mode, &pt, &rows)?
            }
            Err(e) => return Err(e),
        };
        points.push(CurvePoint {
            flux,
            f_bare: f,
            f_hybridized: None,
            well_index: well,
            jumped,
        });
    }
    Ok(ResonanceCurve {
        points,
        direction,
        jumps,
    })
}
