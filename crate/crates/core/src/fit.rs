//! Least-squares matching of model resonance curves to observed ones with a
//! bounded Nelder-Mead simplex.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cavity::{dressed_branch, CavityParams};
use crate::circuit::{CircuitSpec, WeakLinkModel};
use crate::error::{Error, Result};
use crate::qps::{qps_resonance_curve, QpsCurveOptions};
use crate::sweep::{run_sweep_with, InitialWell, SweepOptions, SweepPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    E0,
    Chi,
    EQ,
    GA,
    GB,
}

impl FitParam {
    pub fn name(self) -> &'static str {
        match self {
            FitParam::E0 => "e0",
            FitParam::Chi => "chi",
            FitParam::EQ => "e_q",
            FitParam::GA => "g_a",
            FitParam::GB => "g_b",
        }
    }

    fn get(self, spec: &CircuitSpec<f64>, cav: &CavityParams) -> Result<f64> {
        match (self, spec.weak_link) {
            (FitParam::E0, WeakLinkModel::Jj { e0, .. }) => Ok(e0),
            (FitParam::Chi, WeakLinkModel::Jj { chi, .. }) => Ok(chi),
            (FitParam::EQ, WeakLinkModel::Qps { e_q, .. }) => Ok(e_q),
            (FitParam::GA, _) => Ok(cav.g_a),
            (FitParam::GB, _) => Ok(cav.g_b),
            _ => Err(Error::Precondition(format!(
                "parameter {} does not exist in this weak-link model",
                self.name()
            ))),
        }
    }

    fn set(self, spec: &mut CircuitSpec<f64>, cav: &mut CavityParams, v: f64) {
        match (self, &mut spec.weak_link) {
            (FitParam::E0, WeakLinkModel::Jj { e0, .. }) => *e0 = v,
            (FitParam::Chi, WeakLinkModel::Jj { chi, .. }) => *chi = v,
            (FitParam::EQ, WeakLinkModel::Qps { e_q, .. }) => *e_q = v,
            (FitParam::GA, _) => cav.g_a = v,
            (FitParam::GB, _) => cav.g_b = v,
            _ => unreachable!("checked in FitProblem::validate"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParam {
    pub param: FitParam,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedPoint {
    pub flux: f64,
    /// GHz.
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Initial simplex edge in the unit box.
    pub initial_step: f64,
    /// Stop when the simplex is smaller than this in the unit box...
    pub x_tol: f64,
    /// ...and the spread of losses is below this (GHz^2).
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 2000,
            initial_step: 0.05,
            x_tol: 1e-10,
            f_tol: 1e-18,
        }
    }
}

/// Observed curve plus the model to match against it. The starting point of
/// the search is the parameter set in `spec` and `cavity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitProblem {
    pub observed: Vec<ObservedPoint>,
    pub initial_well: InitialWell,
    pub spec: CircuitSpec<f64>,
    pub cavity: CavityParams,
    pub free: Vec<FreeParam>,
    #[serde(default)]
    pub options: NelderMeadOptions,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::Precondition("no free parameters".into()));
        }
        if self.observed.is_empty() {
            return Err(Error::Precondition("no observed points".into()));
        }
        for (i, fp) in self.free.iter().enumerate() {
            if !(fp.lo.is_finite() && fp.hi.is_finite() && fp.lo < fp.hi) {
                return Err(Error::Precondition(format!("bad bounds for {}", fp.param.name())));
            }
            if self.free[..i].iter().any(|q| q.param == fp.param) {
                return Err(Error::Precondition(format!("{} listed twice", fp.param.name())));
            }
            fp.param.get(&self.spec, &self.cavity)?;
        }
        self.spec.validate()?;
        self.cavity.validate()
    }

    fn fluxes(&self) -> Vec<f64> {
        self.observed.iter().map(|p| p.flux).collect()
    }

    /// Model frequencies at the observed fluxes for the given parameters.
    pub fn model(&self, spec: &CircuitSpec<f64>, cav: &CavityParams) -> Result<Vec<f64>> {
        let fluxes = self.fluxes();
        let bare = if spec.is_jj() {
            let plan = SweepPlan {
                flux_values: fluxes,
                initial_well: self.initial_well,
                spec: *spec,
            };
            run_sweep_with(&plan, &SweepOptions::default())?
        } else {
            let opts = QpsCurveOptions {
                initial_well: self.initial_well,
                ..Default::default()
            };
            qps_resonance_curve(spec, &fluxes, &opts)?
        };
        // refined points around jumps are not observed
        let dressed = dressed_branch(&bare, cav)?;
        let mut out = Vec::with_capacity(self.observed.len());
        let mut it = dressed.points.iter();
        for p in &self.observed {
            let hit = it
                .find(|q| q.flux == p.flux)
                .ok_or_else(|| Error::NotFound(format!("model has no point at flux {}", p.flux)))?;
            out.push(hit.f_hybridized.unwrap_or(hit.f_bare));
        }
        Ok(out)
    }

    fn apply(&self, unit: &[f64]) -> (CircuitSpec<f64>, CavityParams) {
        let mut spec = self.spec;
        let mut cav = self.cavity;
        for (fp, u) in self.free.iter().zip(unit) {
            fp.param
                .set(&mut spec, &mut cav, fp.lo + u.clamp(0.0, 1.0) * (fp.hi - fp.lo));
        }
        if cav.tie_couplings {
            cav.g_b = cav.effective_g_b();
        }
        (spec, cav)
    }

    fn loss(&self, unit: &[f64]) -> f64 {
        let (spec, cav) = self.apply(unit);
        match self.model(&spec, &cav) {
            Ok(m) => m.iter().zip(&self.observed).map(|(a, b)| (a - b.f).powi(2)).sum(),
            Err(e) => {
                log::debug!("loss evaluation failed: {e}");
                f64::INFINITY
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub parameters: BTreeMap<String, f64>,
    pub spec: CircuitSpec<f64>,
    pub cavity: CavityParams,
    /// Sum of squared residuals, GHz^2.
    pub loss: f64,
    /// GHz.
    pub rms: f64,
    /// Model minus observed, GHz.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub rejected_steps: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

pub const NON_UNIQUE_WARNING: &str = "fitted parameters are not unique: other combinations can describe the same data";

/// Minimises the sum of squared frequency residuals over the free parameters.
pub fn fit(problem: &FitProblem) -> Result<FitReport> {
    problem.validate()?;
    let start: Vec<f64> = problem
        .free
        .iter()
        .map(|fp| {
            let v = fp.param.get(&problem.spec, &problem.cavity).expect("validated");
            ((v - fp.lo) / (fp.hi - fp.lo)).clamp(0.0, 1.0)
        })
        .collect();
    let mut rejected = 0usize;
    let mut f = |x: &[f64]| {
        let l = problem.loss(x);
        if !l.is_finite() {
            rejected += 1;
        }
        l
    };
    let nm = nelder_mead(&mut f, &start, &problem.options);
    if !nm.value.is_finite() {
        return Err(Error::NotConverged("no finite loss found in the search region".into()));
    }
    let (spec, cavity) = problem.apply(&nm.x);
    let model = problem.model(&spec, &cavity)?;
    let residuals: Vec<f64> = model.iter().zip(&problem.observed).map(|(a, b)| a - b.f).collect();
    let loss = residuals.iter().map(|r| r * r).sum::<f64>();
    let mut parameters = BTreeMap::new();
    for fp in &problem.free {
        parameters.insert(fp.param.name().to_string(), fp.param.get(&spec, &cavity)?);
    }
    let mut warnings = vec![NON_UNIQUE_WARNING.to_string()];
    if !nm.converged {
        warnings.push(format!("stopped at the iteration limit ({})", problem.options.max_iter));
    }
    if rejected > 0 {
        warnings.push(format!("{rejected} trial points gave no finite loss and were rejected"));
    }
    Ok(FitReport {
        parameters,
        spec,
        cavity,
        loss,
        rms: (loss / residuals.len() as f64).sqrt(),
        residuals,
        iterations: nm.iterations,
        evaluations: nm.evaluations,
        rejected_steps: rejected,
        converged: nm.converged,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead on the unit box; trial points are clamped into it.
pub fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, start: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = start.len();
    let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let x0 = clamp(start.to_vec());
    let v0 = eval(&x0, &mut evals);
    simplex.push((x0.clone(), v0));
    for i in 0..n {
        let mut x = x0.clone();
        // step inwards when the start sits on the upper bound
        x[i] = if x[i] + opts.initial_step <= 1.0 {
            x[i] + opts.initial_step
        } else {
            x[i] - opts.initial_step
        };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < opts.x_tol && (worst - best).abs() <= opts.f_tol.max(1e-15 * best.abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let xr = along(1.0);
        let vr = eval(&xr, &mut evals);
        if vr < best {
            let xe = along(2.0);
            let ve = eval(&xe, &mut evals);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
            continue;
        }
        let (xc, vc) = if vr < worst {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if vc < vr.min(worst) {
            simplex[n] = (xc, vc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        iterations,
        evaluations: evals,
        converged,
    }
}
