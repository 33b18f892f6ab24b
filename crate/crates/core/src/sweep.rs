//! Semiclassical flux sweeps: follow the occupied well point by point and
//! jump to a neighbouring well when it disappears.

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSpec, FluxPoint};
use crate::error::{Error, Result};
use crate::landscape::{build_potential, find_minima, MinimaOptions, MinimumRecord, WellStatus};

/// Which well the sweep starts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialWell {
    GlobalMinimum,
    Index(i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    /// Strictly monotone flux values, in flux quanta.
    pub flux_values: Vec<f64>,
    pub initial_well: InitialWell,
    pub spec: CircuitSpec<f64>,
}

impl SweepPlan {
    /// Evenly spaced plan from `start` to `stop` inclusive.
    pub fn linear(spec: CircuitSpec<f64>, start: f64, stop: f64, n_points: usize, initial_well: InitialWell) -> Self {
        SweepPlan {
            flux_values: linspace(start, stop, n_points),
            initial_well,
            spec,
        }
    }

    pub fn validate(&self) -> Result<SweepDirection> {
        self.spec.validate()?;
        if self.flux_values.is_empty() {
            return Err(Error::Precondition("sweep plan has no flux points".into()));
        }
        if let Some(bad) = self.flux_values.iter().find(|f| !f.is_finite()) {
            return Err(Error::domain("phi_ext", *bad));
        }
        let up = self.flux_values.windows(2).all(|w| w[1] > w[0]);
        let down = self.flux_values.windows(2).all(|w| w[1] < w[0]);
        match (up, down) {
            (true, _) => Ok(SweepDirection::Up),
            (_, true) => Ok(SweepDirection::Down),
            _ => Err(Error::Precondition(
                "sweep flux values must be strictly monotone".into(),
            )),
        }
    }
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub flux: f64,
    pub f_bare: f64,
    pub f_hybridized: Option<f64>,
    pub well_index: i64,
    pub jumped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub from_well: i64,
    pub to_well: i64,
    /// Midpoint of the final bracket.
    pub critical_flux: f64,
    /// Last flux where the old well existed and first where it did not.
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCurve {
    pub points: Vec<CurvePoint>,
    pub direction: SweepDirection,
    pub jumps: Vec<JumpEvent>,
}

impl ResonanceCurve {
    pub fn jump_fluxes(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.critical_flux).collect()
    }

    /// Hybridised frequencies where present, otherwise bare ones.
    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f_hybridized.unwrap_or(p.f_bare)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub minima: MinimaOptions<f64>,
    /// Width (flux quanta) to which a vanishing point is bracketed.
    pub refine_tol: f64,
    /// Half-width of the well window searched for the global minimum.
    pub search_half_width: i64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            minima: MinimaOptions::default(),
            refine_tol: 1e-4,
            search_half_width: 3,
        }
    }
}

fn point(flux: f64, rec: &MinimumRecord<f64>, jumped: bool) -> CurvePoint {
    CurvePoint {
        flux,
        f_bare: rec.f_low(),
        f_hybridized: None,
        well_index: rec.well_index,
        jumped,
    }
}

/// Lowest minimum in a window of wells around the flux.
pub fn global_minimum(spec: &CircuitSpec<f64>, flux: f64, opts: &SweepOptions) -> Result<MinimumRecord<f64>> {
    let field = build_potential(spec, FluxPoint::new(flux)?)?;
    let c = flux.round() as i64;
    let w = opts.search_half_width;
    let rep = find_minima(&field, c - w..=c + w, &opts.minima);
    rep.minima
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::NotFound(format!("no minimum near flux {flux}")))
}

fn track(
    spec: &CircuitSpec<f64>,
    flux: f64,
    well: i64,
    start: Option<&[f64]>,
    opts: &SweepOptions,
) -> Result<Option<MinimumRecord<f64>>> {
    let field = build_potential(spec, FluxPoint::new(flux)?)?;
    match field.locate_well(well, start, &opts.minima)? {
        WellStatus::Found(rec) => Ok(Some(rec)),
        WellStatus::Vanished(_) => Ok(None),
    }
}

/// Runs one sweep with default options.
pub fn run_sweep(plan: &SweepPlan) -> Result<ResonanceCurve> {
    run_sweep_with(plan, &SweepOptions::default())
}

pub fn run_sweep_with(plan: &SweepPlan, opts: &SweepOptions) -> Result<ResonanceCurve> {
    let direction = plan.validate()?;
    let spec = &plan.spec;
    let first = plan.flux_values[0];
    let mut current = match plan.initial_well {
        InitialWell::GlobalMinimum => global_minimum(spec, first, opts)?,
        InitialWell::Index(n) => {
            track(spec, first, n, None, opts)?.ok_or(Error::InitialWellAbsent { well: n, flux: first })?
        }
    };
    let mut points = vec![point(first, &current, false)];
    let mut jumps = Vec::new();
    let mut last_flux = first;

    for &flux in &plan.flux_values[1..] {
        if let Some(rec) = track(spec, flux, current.well_index, Some(&current.position), opts)? {
            points.push(point(flux, &rec, false));
            current = rec;
            last_flux = flux;
            continue;
        }
        // bracket the vanishing flux, keeping the refined points that still
        // have the well
        let (mut good, mut bad) = (last_flux, flux);
        while (bad - good).abs() > opts.refine_tol {
            let mid = 0.5 * (good + bad);
            match track(spec, mid, current.well_index, Some(&current.position), opts)? {
                Some(rec) => {
                    points.push(point(mid, &rec, false));
                    current = rec;
                    good = mid;
                }
                None => bad = mid,
            }
        }
        let from = current.well_index;
        let mut best: Option<MinimumRecord<f64>> = None;
        for cand in [from - 1, from + 1] {
            if let Some(rec) = track(spec, flux, cand, None, opts)? {
                if best.as_ref().is_none_or(|b| rec.value < b.value) {
                    best = Some(rec);
                }
            }
        }
        let next = best.ok_or(Error::VanishedWell {
            well: from,
            flux,
            min_eigenvalue: f64::NAN,
        })?;
        jumps.push(JumpEvent {
            from_well: from,
            to_well: next.well_index,
            critical_flux: 0.5 * (good + bad),
            bracket: (good, bad),
        });
        points.push(point(flux, &next, true));
        current = next;
        last_flux = flux;
    }
    Ok(ResonanceCurve {
        points,
        direction,
        jumps,
    })
}

/// Up and down sweeps over `[flux_lo, flux_hi]`, each starting from the
/// global minimum at its first flux. The two branches run in parallel.
pub fn hysteresis_pair(
    spec: &CircuitSpec<f64>,
    flux_lo: f64,
    flux_hi: f64,
    n_points: usize,
    opts: &SweepOptions,
) -> Result<(ResonanceCurve, ResonanceCurve)> {
    if !(flux_lo < flux_hi) {
        return Err(Error::Precondition(format!(
            "hysteresis range needs flux_lo < flux_hi, got {flux_lo} and {flux_hi}"
        )));
    }
    let up = SweepPlan::linear(*spec, flux_lo, flux_hi, n_points, InitialWell::GlobalMinimum);
    let down = SweepPlan::linear(*spec, flux_hi, flux_lo, n_points, InitialWell::GlobalMinimum);
    let (a, b) = rayon::join(|| run_sweep_with(&up, opts), || run_sweep_with(&down, opts));
    Ok((a?, b?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::WeakLinkModel;
    use crate::presets;

    #[test]
    fn non_monotone_plan_rejected() {
        let plan = SweepPlan {
            flux_values: vec![0.0, 0.1, 0.05],
            initial_well: InitialWell::GlobalMinimum,
            spec: presets::jj_sawtooth(),
        };
        assert!(matches!(run_sweep(&plan), Err(Error::Precondition(_))));
    }

    #[test]
    fn absent_initial_well_is_an_error() {
        let plan = SweepPlan::linear(presets::jj_sinusoidal(), 0.9, 1.0, 3, InitialWell::Index(0));
        assert!(matches!(run_sweep(&plan), Err(Error::InitialWellAbsent { .. })));
    }

    #[test]
    fn pure_lc_is_flat() {
        let spec = presets::jj_sawtooth().with_weak_link(WeakLinkModel::Jj { e0: 1e-6, chi: 0.0 });
        let plan = SweepPlan::linear(spec, -1.0, 1.0, 41, InitialWell::GlobalMinimum);
        let curve = run_sweep(&plan).unwrap();
        let f0 = curve.points[0].f_bare;
        assert!(curve.points.iter().all(|p| (p.f_bare - f0).abs() < 1e-6));
    }

    #[test]
    fn jumps_change_well_by_one() {
        let plan = SweepPlan::linear(presets::jj_sinusoidal(), -0.5, 2.5, 301, InitialWell::GlobalMinimum);
        let curve = run_sweep(&plan).unwrap();
        assert!(!curve.jumps.is_empty());
        for w in curve.points.windows(2) {
            let dw = w[1].well_index - w[0].well_index;
            if w[1].jumped {
                assert_eq!(dw.abs(), 1);
            } else {
                assert_eq!(dw, 0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let plan = SweepPlan::linear(presets::jj_sawtooth(), -1.5, 2.0, 176, InitialWell::Index(0));
        assert_eq!(run_sweep(&plan).unwrap(), run_sweep(&plan).unwrap());
    }

    #[test]
    fn reversal_without_jump_retraces_branch() {
        let spec = presets::jj_sawtooth();
        let fwd = SweepPlan::linear(spec, 0.0, 1.2, 61, InitialWell::Index(0));
        let a = run_sweep(&fwd).unwrap();
        let mut back = fwd.clone();
        back.flux_values.reverse();
        back.initial_well = InitialWell::Index(0);
        let b = run_sweep(&back).unwrap();
        for (p, q) in a.points.iter().zip(b.points.iter().rev()) {
            assert_eq!(p.well_index, q.well_index);
            assert!((p.f_bare - q.f_bare).abs() < 1e-9);
        }
    }

    #[test]
    fn sinusoidal_branch_is_mirror_symmetric() {
        // fine steps end each relaxation on the rounding floor of the energy
        let up = run_sweep(&SweepPlan::linear(
            presets::jj_sinusoidal(),
            -0.5,
            0.5,
            501,
            InitialWell::Index(0),
        ))
        .unwrap();
        assert!(up.jumps.is_empty());
        let n = up.points.len();
        for i in 0..n / 2 {
            assert!((up.points[i].f_bare - up.points[n - 1 - i].f_bare).abs() < 1e-9);
        }
    }
}
