//! Synthetic traces and calibration sweeps with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::dataops::calibrate::{CalibrationBranch, CalibrationInput};
use crate::dataops::decay::{ShotTrace, TraceMeta};
use crate::error::{Error, Result};
use crate::sweep::SweepDirection;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceModel {
    /// Decay rate, 1/s. Zero means no decay.
    pub rate: f64,
    /// s.
    pub window: f64,
    /// Sampling interval, s.
    pub dt: f64,
    pub n_traces: usize,
    pub low: f64,
    pub high: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
}

impl Default for TraceModel {
    fn default() -> Self {
        TraceModel {
            rate: 1.0 / 600.0,
            window: 4000.0,
            dt: 1.0,
            n_traces: 200,
            low: 0.2,
            high: 1.0,
            noise: 0.03,
        }
    }
}

fn trace_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Two-level traces with exponentially distributed decay times. Each trace
/// draws its decay time first from its own stream, so decay times do not
/// depend on the window or sampling.
pub fn synthesize_traces(model: &TraceModel, seed: u64) -> Result<Vec<ShotTrace>> {
    if !(model.rate >= 0.0 && model.rate.is_finite()) {
        return Err(Error::Precondition(format!(
            "decay rate must be non-negative, got {}",
            model.rate
        )));
    }
    if !(model.window > 0.0 && model.dt > 0.0 && model.noise >= 0.0) {
        return Err(Error::Precondition(
            "window and dt must be positive, noise non-negative".into(),
        ));
    }
    let n_samples = (model.window / model.dt).round() as usize + 1;
    let noise = Normal::new(0.0, model.noise).map_err(|e| Error::Precondition(e.to_string()))?;
    Ok((0..model.n_traces)
        .map(|i| {
            let mut rng = trace_rng(seed, i);
            let decay = if model.rate > 0.0 {
                Exp::new(model.rate).expect("positive rate").sample(&mut rng)
            } else {
                f64::INFINITY
            };
            let time: Vec<f64> = (0..n_samples).map(|k| k as f64 * model.dt).collect();
            let s21 = time
                .iter()
                .map(|&t| {
                    let level = if t >= decay { model.high } else { model.low };
                    level + if model.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 }
                })
                .collect();
            ShotTrace {
                time,
                s21,
                meta: TraceMeta {
                    delta_phi: None,
                    run_id: Some(format!("synthetic-{seed}-{i}")),
                    window_s: Some(model.window),
                },
            }
        })
        .collect())
}

/// Up and down jump voltages for a loop that escapes at `flux_escape` from a
/// symmetric start, with Gaussian jitter of `jitter` volts on every jump.
pub fn synthesize_calibration(
    period: f64,
    offset: f64,
    flux_escape: f64,
    jumps_per_branch: usize,
    jitter: f64,
    seed: u64,
) -> CalibrationInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = |v: f64| {
        if jitter > 0.0 {
            v + jitter * rng.sample::<f64, _>(rand_distr::StandardNormal)
        } else {
            v
        }
    };
    let up = (0..jumps_per_branch)
        .map(|k| j(offset + period * (flux_escape + k as f64)))
        .collect();
    let down = (0..jumps_per_branch)
        .map(|k| j(offset - period * (flux_escape + k as f64)))
        .collect();
    CalibrationInput {
        branches: vec![
            CalibrationBranch {
                direction: SweepDirection::Up,
                points: Vec::new(),
                jump_voltages: up,
            },
            CalibrationBranch {
                direction: SweepDirection::Down,
                points: Vec::new(),
                jump_voltages: down,
            },
        ],
        jump_step_ghz: 1e-3,
    }
}
