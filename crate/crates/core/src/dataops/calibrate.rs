//! Coil voltage to external flux.
//!
//! Jumps of the same sweep direction repeat once per flux quantum, which
//! fixes the period. Sweeps started from the same state escape at equal
//! distances on either side of zero flux, so the midpoint of the first up
//! jump and the first down jump is the zero offset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::SweepDirection;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBranch {
    pub direction: SweepDirection,
    /// `(coil voltage, resonance frequency in GHz)` in sweep order.
    #[serde(default)]
    pub points: Vec<(f64, f64)>,
    /// Jump voltages in sweep order. Detected from `points` when empty.
    #[serde(default)]
    pub jump_voltages: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInput {
    pub branches: Vec<CalibrationBranch>,
    /// Frequency step (GHz) that counts as a jump when detecting from points.
    #[serde(default = "default_jump_step")]
    pub jump_step_ghz: f64,
}

fn default_jump_step() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub volts_per_phi0: f64,
    pub volts_per_phi0_se: f64,
    pub zero_offset_volts: f64,
    pub zero_offset_se: f64,
    /// Per-branch periods, for inspection.
    pub branch_periods: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Calibration {
    pub fn flux(&self, volts: f64) -> f64 {
        (volts - self.zero_offset_volts) / self.volts_per_phi0
    }

    pub fn volts(&self, flux: f64) -> f64 {
        self.zero_offset_volts + flux * self.volts_per_phi0
    }
}

/// Voltages halfway between consecutive points whose frequencies differ by
/// more than `step`.
pub fn detect_jumps(points: &[(f64, f64)], step: f64) -> Vec<f64> {
    points
        .windows(2)
        .filter(|w| (w[1].1 - w[0].1).abs() > step)
        .map(|w| 0.5 * (w[0].0 + w[1].0))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn calibrate_flux(input: &CalibrationInput) -> Result<Calibration> {
    let mut series = Vec::new();
    for (i, b) in input.branches.iter().enumerate() {
        let jumps = if b.jump_voltages.is_empty() {
            detect_jumps(&b.points, input.jump_step_ghz)
        } else {
            b.jump_voltages.clone()
        };
        if jumps.len() < 2 {
            return Err(Error::Precondition(format!(
                "branch {i} has {} jump(s); at least two are needed for a period",
                jumps.len()
            )));
        }
        if jumps.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("branch {i} has a non-finite jump voltage")));
        }
        // orient so that voltages increase along the sweep
        let sign = match b.direction {
            SweepDirection::Up => 1.0,
            SweepDirection::Down => -1.0,
        };
        series.push((
            b.direction,
            jumps.iter().map(|v| sign * v).collect::<Vec<_>>(),
            jumps[0],
        ));
    }
    let first = |dir: SweepDirection| -> Vec<f64> { series.iter().filter(|s| s.0 == dir).map(|s| s.2).collect() };
    let (ups, downs) = (first(SweepDirection::Up), first(SweepDirection::Down));
    if ups.is_empty() || downs.is_empty() {
        return Err(Error::Precondition(
            "need at least one branch in each sweep direction".into(),
        ));
    }

    // common slope, separate intercepts
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut branch_periods = Vec::new();
    for (_, v, _) in &series {
        let k: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        let (km, vm) = (mean(&k), mean(v));
        let (bxy, bxx) = k.iter().zip(v).fold((0.0, 0.0), |(a, b), (ki, vi)| {
            (a + (ki - km) * (vi - vm), b + (ki - km).powi(2))
        });
        branch_periods.push(bxy / bxx);
        sxy += bxy;
        sxx += bxx;
    }
    let period = sxy / sxx;
    if !(period > 0.0) {
        return Err(Error::Precondition(
            "jump voltages do not advance along the sweep".into(),
        ));
    }
    let n: usize = series.iter().map(|s| s.1.len()).sum();
    let dof = n.saturating_sub(series.len() + 1);
    let ssr: f64 = series
        .iter()
        .map(|(_, v, _)| {
            let km = (v.len() as f64 - 1.0) / 2.0;
            let vm = mean(v);
            v.iter()
                .enumerate()
                .map(|(i, vi)| (vi - vm - period * (i as f64 - km)).powi(2))
                .sum::<f64>()
        })
        .sum();
    let sigma = if dof > 0 { (ssr / dof as f64).sqrt() } else { 0.0 };

    let offset = 0.5 * (mean(&ups) + mean(&downs));
    let offset_se = 0.5 * sigma * (1.0 / ups.len() as f64 + 1.0 / downs.len() as f64).sqrt();

    let mut warnings = Vec::new();
    let (lo, hi) = branch_periods
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(*p), b.max(*p)));
    if (hi - lo) > 0.05 * period {
        warnings.push(format!(
            "branch periods spread by {:.1}% of the mean; calibration quality is poor",
            100.0 * (hi - lo) / period
        ));
    }
    Ok(Calibration {
        volts_per_phi0: period,
        volts_per_phi0_se: sigma / sxx.sqrt(),
        zero_offset_volts: offset,
        zero_offset_se: offset_se,
        branch_periods,
        warnings,
    })
}
