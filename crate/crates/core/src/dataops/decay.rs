//! Single-shot decay detection on transmission traces.
//!
//! Convention: the trace starts on the low transmission level and a decay
//! shows up as a rise above the threshold. Traces recorded the other way up
//! can be handled with [`Level::High`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    /// Flux offset from the reference point, flux quanta.
    #[serde(default)]
    pub delta_phi: Option<f64>,
    #[serde(default)]
    pub run_id: Option<String>,
    /// Measurement window, s. Defaults to the span of the timestamps.
    #[serde(default)]
    pub window_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotTrace {
    pub time: Vec<f64>,
    pub s21: Vec<f64>,
    #[serde(default)]
    pub meta: TraceMeta,
}

impl ShotTrace {
    pub fn validate(&self) -> Result<()> {
        if self.time.is_empty() || self.time.len() != self.s21.len() {
            return Err(Error::Precondition(
                "trace needs equal, non-zero numbers of times and samples".into(),
            ));
        }
        if !self.time.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Precondition("trace timestamps must increase strictly".into()));
        }
        Ok(())
    }

    pub fn window(&self) -> f64 {
        self.meta
            .window_s
            .unwrap_or_else(|| self.time[self.time.len() - 1] - self.time[0])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    #[default]
    Low,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementProtocol {
    /// Probe frequency used to place the system in its well, GHz.
    pub f_ref: f64,
    /// Reference flux, flux quanta.
    pub phi_ref: f64,
    /// Flux step away from the reference before waiting, flux quanta.
    pub delta_phi: f64,
    /// Readout frequency, GHz.
    pub f_rout: f64,
    /// Discrimination level in transmission units; inferred per trace when
    /// absent.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Consecutive samples beyond the threshold that count as a decay.
    #[serde(default = "default_debounce")]
    pub debounce: usize,
    /// Level occupied before the decay.
    #[serde(default)]
    pub initial_level: Level,
}

fn default_debounce() -> usize {
    3
}

impl Default for MeasurementProtocol {
    fn default() -> Self {
        MeasurementProtocol {
            f_ref: 6.7285,
            phi_ref: 1.516,
            delta_phi: 0.0215,
            f_rout: 6.7321,
            threshold: None,
            debounce: default_debounce(),
            initial_level: Level::Low,
        }
    }
}

impl MeasurementProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_ref.is_finite() && self.f_rout.is_finite()) || self.f_ref == self.f_rout {
            return Err(Error::Config("f_ref and f_rout must be finite and distinct".into()));
        }
        if !(self.delta_phi > 0.0) {
            return Err(Error::Config(format!(
                "delta_phi must be positive, got {}",
                self.delta_phi
            )));
        }
        if self.debounce == 0 {
            return Err(Error::Config("debounce must be at least one sample".into()));
        }
        if self.threshold.is_some_and(|t| !t.is_finite()) {
            return Err(Error::Config("threshold must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeSample {
    /// s.
    pub duration: f64,
    /// No decay inside the window; `duration` is then the window length.
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub sample: LifetimeSample,
    pub threshold: Option<f64>,
    pub warnings: Vec<String>,
}

/// Two-cluster split of the samples minimising the within-cluster variance.
/// Returns `(low mean, high mean, pooled standard deviation, n_low, n_high)`.
fn two_means(values: &[f64]) -> Option<(f64, f64, f64, usize, usize)> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n < 2 {
        return None;
    }
    let mut pre = vec![0.0; n + 1];
    let mut pre2 = vec![0.0; n + 1];
    for i in 0..n {
        pre[i + 1] = pre[i] + v[i];
        pre2[i + 1] = pre2[i] + v[i] * v[i];
    }
    let ss = |a: usize, b: usize| {
        let m = (b - a) as f64;
        pre2[b] - pre2[a] - (pre[b] - pre[a]).powi(2) / m
    };
    let (k, w) = (1..n)
        .map(|k| (k, ss(0, k) + ss(k, n)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    Some((
        pre[k] / k as f64,
        (pre[n] - pre[k]) / (n - k) as f64,
        (w.max(0.0) / n as f64).sqrt(),
        k,
        n - k,
    ))
}

/// Threshold halfway between the two levels of a clearly two-level trace.
pub fn infer_threshold(values: &[f64], min_cluster: usize) -> Option<f64> {
    let (lo, hi, sd, nl, nh) = two_means(values)?;
    (nl >= min_cluster && nh >= min_cluster && hi - lo > 8.0 * sd + 1e-12 * (lo.abs() + hi.abs()))
        .then_some(0.5 * (lo + hi))
}

pub fn detect_decay(trace: &ShotTrace, protocol: &MeasurementProtocol) -> Result<Detection> {
    trace.validate()?;
    protocol.validate()?;
    let window = trace.window();
    let censored = LifetimeSample {
        duration: window,
        censored: true,
    };
    let mut warnings = Vec::new();
    let threshold = match protocol.threshold {
        Some(t) => {
            if let Some(mid) = infer_threshold(&trace.s21, protocol.debounce) {
                let (lo, hi, ..) = two_means(&trace.s21).expect("two-level trace");
                if !(t > lo && t < hi) {
                    warnings.push(format!(
                        "threshold {t} is not between the trace levels (split at {mid})"
                    ));
                }
            }
            t
        }
        None => match infer_threshold(&trace.s21, protocol.debounce) {
            Some(t) => t,
            None => {
                warnings.push("trace shows no two distinct levels; treated as undecayed".into());
                return Ok(Detection {
                    sample: censored,
                    threshold: None,
                    warnings,
                });
            }
        },
    };
    let beyond = |s: f64| match protocol.initial_level {
        Level::Low => s >= threshold,
        Level::High => s <= threshold,
    };
    let mut run = 0;
    for (i, &s) in trace.s21.iter().enumerate() {
        if beyond(s) {
            run += 1;
            if run == protocol.debounce {
                let start = i + 1 - protocol.debounce;
                if start == 0 {
                    warnings.push("trace starts beyond the threshold".into());
                }
                return Ok(Detection {
                    sample: LifetimeSample {
                        duration: (trace.time[start] - trace.time[0]).min(window),
                        censored: false,
                    },
                    threshold: Some(threshold),
                    warnings,
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(Detection {
        sample: censored,
        threshold: Some(threshold),
        warnings,
    })
}

/// Independent detections, run in parallel.
pub fn detect_all(traces: &[ShotTrace], protocol: &MeasurementProtocol) -> Result<Vec<Detection>> {
    traces.par_iter().map(|t| detect_decay(t, protocol)).collect()
}
