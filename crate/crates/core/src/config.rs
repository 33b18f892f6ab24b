//! JSON run configuration shared by the command-line tool and the shipped
//! presets. Every block is optional; commands check for the ones they need.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityParams;
use crate::circuit::CircuitSpec;
use crate::dataops::{Binning, MeasurementProtocol, TraceModel};
use crate::error::{Error, Result};
use crate::fit::{FreeParam, NelderMeadOptions};
use crate::qps::{RatePolicy, ShiftMode};
use crate::spectra::SimpleSpec;
use crate::sweep::{linspace, InitialWell};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub circuit: Option<CircuitSpec<f64>>,
    #[serde(default)]
    pub cavity: Option<CavityParams>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub qps: Option<QpsBlock>,
    #[serde(default)]
    pub cpr: Option<CprBlock>,
    #[serde(default)]
    pub landscape: Option<LandscapeBlock>,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default)]
    pub fit: Option<FitBlock>,
    #[serde(default)]
    pub protocol: Option<MeasurementProtocol>,
    #[serde(default)]
    pub lifetimes: Option<LifetimesBlock>,
    #[serde(default)]
    pub synth: Option<TraceModel>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Flux grid from `start` to `stop` (either direction) in steps of `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    #[serde(default = "global_minimum")]
    pub initial_well: InitialWell,
    /// Also run the reverse sweep from the global minimum at `stop`.
    #[serde(default)]
    pub hysteresis: bool,
}

fn global_minimum() -> InitialWell {
    InitialWell::GlobalMinimum
}

impl SweepBlock {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return Err(Error::Config(
                "sweep.start and sweep.stop must be finite and distinct".into(),
            ));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config(format!("sweep.step must be positive, got {}", self.step)));
        }
        if (self.stop - self.start).abs() / self.step > 1e7 {
            return Err(Error::Config("sweep has more than 1e7 points".into()));
        }
        Ok(())
    }

    pub fn fluxes(&self) -> Vec<f64> {
        let n = ((self.stop - self.start).abs() / self.step).round() as usize + 1;
        linspace(self.start, self.stop, n)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpsBlock {
    #[serde(default)]
    pub policy: Option<RatePolicy>,
    #[serde(default)]
    pub mode: ShiftMode,
    /// Levels per neighbouring well in the perturbative sums.
    #[serde(default)]
    pub level_cutoff: Option<usize>,
    /// Flux offset from the well centre for the coupling table; the critical
    /// flux when absent.
    #[serde(default)]
    pub coupling_offset: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CprCurve {
    pub e0: f64,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CprBlock {
    pub phi_min: f64,
    pub phi_max: f64,
    pub points: usize,
    /// Curves to tabulate; the junction of `circuit` when empty.
    #[serde(default)]
    pub curves: Vec<CprCurve>,
}

impl CprBlock {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || !(self.phi_min < self.phi_max) || !self.phi_max.is_finite() || !self.phi_min.is_finite()
        {
            return Err(Error::Config(format!(
                "empty phase range: need phi_min < phi_max and points > 0, got [{}, {}] with {} points",
                self.phi_min, self.phi_max, self.points
            )));
        }
        Ok(())
    }
}

/// Energy map over `(sigma, delta)` at one flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeBlock {
    pub flux: f64,
    /// `[min, max, points]`.
    pub sigma: (f64, f64, usize),
    pub delta: (f64, f64, usize),
    /// Lattice value for the phase-slip variant.
    #[serde(default)]
    pub zeta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub jj: SimpleSpec<f64>,
    pub qps: SimpleSpec<f64>,
    pub flux_start: f64,
    pub flux_stop: f64,
    pub flux_points: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Flux of the level-by-level comparison; the `flux` of the specs when
    /// absent.
    #[serde(default)]
    pub compare_flux: Option<f64>,
    /// Highest transition compared.
    #[serde(default = "default_compare_up_to")]
    pub compare_up_to: usize,
}

fn default_levels() -> usize {
    8
}

fn default_compare_up_to() -> usize {
    5
}

impl SpectrumBlock {
    pub fn validate(&self) -> Result<()> {
        self.jj.validate()?;
        self.qps.validate()?;
        if self.flux_points == 0 || self.compare_up_to == 0 || self.compare_up_to >= self.levels {
            return Err(Error::Config(
                "spectrum needs flux_points > 0 and 0 < compare_up_to < levels".into(),
            ));
        }
        Ok(())
    }

    pub fn fluxes(&self) -> Vec<f64> {
        linspace(self.flux_start, self.flux_stop, self.flux_points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    pub free: Vec<FreeParam>,
    #[serde(default = "global_minimum")]
    pub initial_well: InitialWell,
    #[serde(default)]
    pub options: NelderMeadOptions,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimesBlock {
    #[serde(default)]
    pub binning: Binning,
}

impl RunConfig {
    /// Parses a configuration; unknown or missing keys are reported by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block that is present.
    pub fn validate(&self) -> Result<()> {
        let wrap = |block: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Config(m) => Error::Config(m),
                other => Error::Config(format!("{block}: {other}")),
            })
        };
        if let Some(c) = &self.circuit {
            wrap("circuit", c.validate())?;
        }
        if let Some(c) = &self.cavity {
            wrap("cavity", c.validate())?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(c) = &self.cpr {
            c.validate()?;
        }
        if let Some(s) = &self.spectrum {
            wrap("spectrum", s.validate())?;
        }
        if let Some(p) = &self.protocol {
            wrap("protocol", p.validate())?;
        }
        if let Some(f) = &self.fit {
            if f.free.is_empty() {
                return Err(Error::Config("fit.free is empty".into()));
            }
        }
        if let Some(l) = &self.landscape {
            if l.sigma.2 == 0 || l.delta.2 == 0 {
                return Err(Error::Config("landscape grid needs at least one point per axis".into()));
            }
        }
        Ok(())
    }

    pub fn require<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing `{name}` block")))
    }
}
