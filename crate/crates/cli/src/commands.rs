use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};
use weaklink::circuit::{cpr_current, cpr_curvature, cpr_energy, FluxPoint, WeakLinkModel};
use weaklink::config::{CprBlock, CprCurve};
use weaklink::dataops::{calibrate_flux, detect_all, lifetime_histogram, synthesize_traces, CalibrationInput};
use weaklink::export::{self, Series};
use weaklink::fit::{fit as run_fit, FitProblem};
use weaklink::landscape::{build_potential, find_minima, MinimaOptions};
use weaklink::qps::{coupling_table, critical_flux, qps_resonance_curve, PtOptions, QpsCurveOptions};
use weaklink::spectra::{compare_spectra, spectrum_jj, spectrum_qps, SpectrumOptions};
use weaklink::sweep::{run_sweep_with, SweepOptions, SweepPlan};
use weaklink::{dressed_branch, CircuitSpec, Error, InitialWell, ResonanceCurve, Result};

use crate::context::{read, Context};

fn circuit(ctx: &Context) -> Result<CircuitSpec> {
    ctx.cfg.require(&ctx.cfg.circuit, "circuit").copied()
}

fn done(ctx: &Context, mut extra: Value) -> Result<Value> {
    if let Some(map) = extra.as_object_mut() {
        map.insert("files".into(), json!(ctx.files()));
        map.insert("config_sha256".into(), json!(ctx.hash));
    }
    Ok(extra)
}

pub fn cpr(ctx: &Context, phi_min: Option<f64>, phi_max: Option<f64>, points: Option<usize>) -> Result<Value> {
    let tau = std::f64::consts::TAU;
    let mut block = ctx.cfg.cpr.clone().unwrap_or(CprBlock {
        phi_min: -tau,
        phi_max: tau,
        points: 801,
        curves: Vec::new(),
    });
    block.phi_min = phi_min.unwrap_or(block.phi_min);
    block.phi_max = phi_max.unwrap_or(block.phi_max);
    block.points = points.unwrap_or(block.points);
    block.validate()?;
    let curves = if block.curves.is_empty() {
        match ctx.cfg.circuit.map(|c| c.weak_link) {
            Some(WeakLinkModel::Jj { e0, chi }) => vec![CprCurve { e0, chi }],
            _ => {
                return Err(Error::Config(
                    "no curves: give cpr.curves or a Josephson circuit".into(),
                ))
            }
        }
    } else {
        block.curves.clone()
    };
    // the exact sawtooth is undefined at odd multiples of pi; leave a gap
    let or_gap = |r: Result<f64>| match r {
        Ok(v) => Ok(v),
        Err(Error::SingularPoint { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    };
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for c in &curves {
        let mut pts = Vec::with_capacity(block.points);
        for phi in weaklink::sweep::linspace(block.phi_min, block.phi_max, block.points) {
            let e = cpr_energy(phi, c.e0, c.chi)?;
            let i = or_gap(cpr_current(phi, c.e0, c.chi))?;
            let k = or_gap(cpr_curvature(phi, c.e0, c.chi))?;
            rows.push([phi, c.e0, c.chi, e, i, k]);
            pts.push((phi, i));
        }
        series.push((format!("chi = {}", c.chi), pts));
    }
    if ctx.format.csv() {
        ctx.write("cpr.csv", &export::cpr_csv(&rows, &ctx.header()))?;
    }
    if ctx.format.svg() {
        let s: Vec<Series> = series
            .iter()
            .map(|(n, p)| Series {
                name: n,
                points: p.clone(),
                markers: false,
            })
            .collect();
        ctx.write(
            "cpr.svg",
            &export::svg_plot(
                "Current-phase relation",
                "phase (rad)",
                "current (GHz/rad)",
                &s,
                &ctx.header(),
            ),
        )?;
    }
    done(ctx, json!({ "curves": curves.len(), "points": block.points }))
}

fn resonance_curve(
    ctx: &Context,
    spec: &CircuitSpec,
    fluxes: Vec<f64>,
    initial: InitialWell,
) -> Result<ResonanceCurve> {
    let curve = if spec.is_jj() {
        let plan = SweepPlan {
            flux_values: fluxes,
            initial_well: initial,
            spec: *spec,
        };
        run_sweep_with(&plan, &SweepOptions::default())?
    } else {
        let q = ctx.cfg.qps.unwrap_or_default();
        let opts = QpsCurveOptions {
            pt: PtOptions {
                level_cutoff: q.level_cutoff,
                ..Default::default()
            },
            policy: q.policy.unwrap_or_default(),
            mode: q.mode,
            initial_well: initial,
        };
        qps_resonance_curve(spec, &fluxes, &opts)?
    };
    match &ctx.cfg.cavity {
        Some(cav) => dressed_branch(&curve, cav),
        None => Ok(curve),
    }
}

fn curve_series(curve: &ResonanceCurve) -> Vec<(f64, f64)> {
    // break the line at jumps
    let mut pts = Vec::with_capacity(curve.points.len() + curve.jumps.len());
    for p in &curve.points {
        if p.jumped {
            pts.push((f64::NAN, f64::NAN));
        }
        pts.push((p.flux, p.f_hybridized.unwrap_or(p.f_bare)));
    }
    pts
}

pub fn sweep(ctx: &Context) -> Result<Value> {
    let spec = circuit(ctx)?;
    let block = *ctx.cfg.require(&ctx.cfg.sweep, "sweep")?;
    let up = resonance_curve(ctx, &spec, block.fluxes(), block.initial_well)?;
    let mut curves = vec![("sweep", up)];
    if block.hysteresis {
        let mut back = block.fluxes();
        back.reverse();
        let down = resonance_curve(ctx, &spec, back, InitialWell::GlobalMinimum)?;
        curves[0].0 = "sweep_forward";
        curves.push(("sweep_reverse", down));
    }
    let mut summary = Vec::new();
    for (name, c) in &curves {
        if ctx.format.csv() {
            ctx.write(&format!("{name}.csv"), &export::curve_csv(c, &ctx.header()))?;
        }
        summary.push(json!({
            "name": name,
            "points": c.points.len(),
            "jumps": c.jumps.iter().map(|j| json!({
                "from_well": j.from_well,
                "to_well": j.to_well,
                "critical_flux": j.critical_flux,
            })).collect::<Vec<_>>(),
        }));
    }
    if ctx.format.svg() {
        let series: Vec<(String, Vec<(f64, f64)>)> =
            curves.iter().map(|(n, c)| (n.to_string(), curve_series(c))).collect();
        let s: Vec<Series> = series
            .iter()
            .map(|(n, p)| Series {
                name: n,
                points: p.clone(),
                markers: false,
            })
            .collect();
        let y = if ctx.cfg.cavity.is_some() {
            "dressed frequency (GHz)"
        } else {
            "frequency (GHz)"
        };
        ctx.write(
            "sweep.svg",
            &export::svg_plot("Resonance curve", "flux (flux quanta)", y, &s, &ctx.header()),
        )?;
    }
    done(ctx, json!({ "curves": summary }))
}

pub fn spectrum(ctx: &Context) -> Result<Value> {
    let block = ctx.cfg.require(&ctx.cfg.spectrum, "spectrum")?.clone();
    let fluxes = block.fluxes();
    let levels = block.levels;
    let solve = |flux: f64| -> Result<(weaklink::Spectrum, weaklink::Spectrum)> {
        let j = spectrum_jj(&block.jj.at_flux(flux), levels, &SpectrumOptions::jj())?;
        let q = spectrum_qps(&block.qps.at_flux(flux), levels, &SpectrumOptions::qps())?;
        Ok((j, q))
    };
    let results: Vec<(weaklink::Spectrum, weaklink::Spectrum)> =
        fluxes.par_iter().map(|f| solve(*f)).collect::<Result<_>>()?;
    let compare_flux = block.compare_flux.unwrap_or(block.jj.flux);
    let (cj, cq) = match fluxes.iter().position(|f| *f == compare_flux) {
        Some(i) => results[i].clone(),
        None => solve(compare_flux)?,
    };
    let deltas = compare_spectra(&cj, &cq, block.compare_up_to)?;
    let unconverged = results
        .iter()
        .zip(&fluxes)
        .filter(|((j, q), _)| !(j.all_converged() && q.all_converged()))
        .map(|(_, f)| *f)
        .collect::<Vec<_>>();
    let rows = |pick: fn(&(weaklink::Spectrum, weaklink::Spectrum)) -> &weaklink::Spectrum| -> Vec<(f64, Vec<f64>)> {
        fluxes
            .iter()
            .zip(&results)
            .map(|(f, r)| (*f, pick(r).eigenvalues.clone()))
            .collect()
    };
    let (jj_rows, qps_rows) = (rows(|r| &r.0), rows(|r| &r.1));
    if ctx.format.csv() {
        ctx.write("spectrum_jj.csv", &export::spectrum_csv(&jj_rows, &ctx.header()))?;
        ctx.write("spectrum_qps.csv", &export::spectrum_csv(&qps_rows, &ctx.header()))?;
        let mut header = ctx.header();
        header.push(format!("compare_flux_phi0={compare_flux}"));
        ctx.write("comparison.csv", &export::comparison_csv(&deltas, &header))?;
    }
    if ctx.format.svg() {
        let mut series = Vec::new();
        for (name, rows) in [("JJ", &jj_rows), ("QPS", &qps_rows)] {
            for j in 1..=block.compare_up_to {
                let pts = rows.iter().map(|(f, e)| (*f, e[j] - e[0])).collect::<Vec<_>>();
                series.push((format!("{name} 0-{j}"), pts));
            }
        }
        let s: Vec<Series> = series
            .iter()
            .map(|(n, p)| Series {
                name: n,
                points: p.clone(),
                markers: n.starts_with("QPS"),
            })
            .collect();
        ctx.write(
            "spectrum.svg",
            &export::svg_plot(
                "Transition energies",
                "flux (flux quanta)",
                "E_j - E_0 (GHz)",
                &s,
                &ctx.header(),
            ),
        )?;
    }
    done(
        ctx,
        json!({
            "flux_points": fluxes.len(),
            "compare_flux": compare_flux,
            "deltas_ghz": deltas,
            "unconverged_fluxes": unconverged,
        }),
    )
}

pub fn fit(ctx: &Context, data: &Path) -> Result<Value> {
    let spec = circuit(ctx)?;
    let cavity = *ctx.cfg.require(&ctx.cfg.cavity, "cavity")?;
    let block = ctx.cfg.require(&ctx.cfg.fit, "fit")?.clone();
    let observed = export::parse_observed_csv(&read(data)?)?;
    let problem = FitProblem {
        observed,
        initial_well: block.initial_well,
        spec,
        cavity,
        free: block.free,
        options: block.options,
    };
    let report = run_fit(&problem)?;
    let value = serde_json::to_value(&report).expect("report serialises");
    ctx.write_json("fit_report.json", value)?;
    done(
        ctx,
        json!({
            "parameters": report.parameters,
            "rms_ghz": report.rms,
            "converged": report.converged,
            "warnings": report.warnings,
        }),
    )
}

pub fn calibrate(ctx: &Context, files: &[PathBuf]) -> Result<Value> {
    let mut merged: Option<CalibrationInput> = None;
    for f in files {
        let input: CalibrationInput =
            serde_json::from_str(&read(f)?).map_err(|e| Error::Config(format!("{}: {e}", f.display())))?;
        match &mut merged {
            Some(m) => m.branches.extend(input.branches),
            None => merged = Some(input),
        }
    }
    let input = merged.expect("clap requires at least one file");
    let cal = calibrate_flux(&input)?;
    let value = serde_json::to_value(&cal).expect("calibration serialises");
    ctx.write_json("calibration.json", value.clone())?;
    done(ctx, json!({ "calibration": value }))
}

fn expand(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in patterns {
        let matches = glob::glob(p).map_err(|e| Error::Config(format!("bad pattern `{p}`: {e}")))?;
        let before = paths.len();
        for m in matches {
            paths.push(m.map_err(|e| Error::Io(e.into()))?);
        }
        if paths.len() == before {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no trace files match `{p}`"),
            )));
        }
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

pub fn lifetimes(ctx: &Context, patterns: &[String]) -> Result<Value> {
    let paths = expand(patterns)?;
    let protocol = ctx.cfg.protocol.unwrap_or_default();
    let traces = paths
        .iter()
        .map(|p| export::parse_trace_csv(&read(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>>>()?;
    let detections = detect_all(&traces, &protocol)?;
    let samples: Vec<_> = detections.iter().map(|d| d.sample).collect();
    let binning = ctx.cfg.lifetimes.clone().unwrap_or_default().binning;
    let hist = lifetime_histogram(&samples, &binning)?;
    if ctx.format.csv() {
        ctx.write("histogram.csv", &export::histogram_csv(&hist, &ctx.header()))?;
    }
    if ctx.format.svg() {
        let mut pts = Vec::new();
        for (k, c) in hist.counts.iter().enumerate() {
            pts.push((hist.edges[k], *c as f64));
            pts.push((hist.edges[k + 1], *c as f64));
        }
        let title = format!("Lifetimes ({:.0}% censored)", 100.0 * hist.censored_fraction());
        let s = [Series {
            name: "decayed",
            points: pts,
            markers: false,
        }];
        ctx.write(
            "histogram.svg",
            &export::svg_plot(&title, "lifetime (s)", "count", &s, &ctx.header()),
        )?;
    }
    let per_trace: Vec<Value> = paths
        .iter()
        .zip(&detections)
        .map(|(p, d)| {
            json!({
                "file": p.display().to_string(),
                "duration_s": d.sample.duration,
                "censored": d.sample.censored,
                "threshold": d.threshold,
                "warnings": d.warnings,
            })
        })
        .collect();
    ctx.write_json(
        "lifetimes.json",
        json!({
            "traces": per_trace,
            "censored": hist.censored,
            "total": hist.total,
            "censored_fraction": hist.censored_fraction(),
            "censored_stderr": hist.censored_stderr(),
        }),
    )?;
    done(
        ctx,
        json!({
            "traces": hist.total,
            "censored": hist.censored,
            "censored_fraction": hist.censored_fraction(),
        }),
    )
}

pub fn landscape(ctx: &Context) -> Result<Value> {
    let spec = circuit(ctx)?;
    let block = *ctx.cfg.require(&ctx.cfg.landscape, "landscape")?;
    let field = build_potential(&spec, FluxPoint::new(block.flux)?)?;
    let grid = field.grid(block.sigma, block.delta, block.zeta)?;
    if ctx.format.csv() {
        let mut header = ctx.header();
        header.push("coord1=sigma_rad coord2=delta_rad".into());
        ctx.write("landscape.csv", &export::landscape_csv(&grid, &header))?;
    }
    let c = block.flux.round() as i64;
    let report = find_minima(&field, c - 3..=c + 3, &MinimaOptions::default());
    let minima: Vec<Value> = report
        .minima
        .iter()
        .map(|m| {
            json!({
                "well_index": m.well_index,
                "position": m.position,
                "energy_ghz": m.value,
                "mode_freqs_ghz": m.mode_freqs,
            })
        })
        .collect();
    done(
        ctx,
        json!({ "flux": block.flux, "grid_points": grid.len(), "minima": minima }),
    )
}

pub fn qps_couplings(ctx: &Context) -> Result<Value> {
    let spec = circuit(ctx)?;
    if spec.is_jj() {
        return Err(Error::Config("qps-couplings needs a phase-slip circuit".into()));
    }
    let q = ctx.cfg.qps.unwrap_or_default();
    let crit = critical_flux(&spec, &q.policy.unwrap_or_default())?;
    let offset = q.coupling_offset.unwrap_or(crit.flux.0);
    let rows = coupling_table(&spec, offset, q.level_cutoff)?;
    if ctx.format.csv() {
        let mut header = ctx.header();
        header.push(format!("flux_offset_phi0={offset}"));
        ctx.write("couplings.csv", &export::couplings_csv(&rows, &header))?;
    }
    if ctx.format.svg() {
        let pts = rows
            .iter()
            .filter(|r| r.coupling_ghz > 0.0)
            .map(|r| (r.level_index as f64, r.coupling_ghz.log10()))
            .collect();
        let s = [Series {
            name: "coupling",
            points: pts,
            markers: false,
        }];
        ctx.write(
            "couplings.svg",
            &export::svg_plot(
                "Inter-well coupling",
                "level index",
                "log10 coupling (GHz)",
                &s,
                &ctx.header(),
            ),
        )?;
    }
    done(
        ctx,
        json!({
            "critical_flux": crit.flux.0,
            "resonant_level": crit.level_index,
            "resonant_coupling_ghz": crit.coupling_ghz,
            "table_offset": offset,
            "levels": rows.len(),
        }),
    )
}

pub fn synth_traces(ctx: &Context) -> Result<Value> {
    let model = ctx.cfg.synth.unwrap_or_default();
    let traces = synthesize_traces(&model, ctx.seed)?;
    let mut header = ctx.header();
    header.push(format!("seed={}", ctx.seed));
    for (i, t) in traces.iter().enumerate() {
        ctx.write(&format!("traces/trace_{i:04}.csv"), &export::trace_csv(t, &header))?;
    }
    done(ctx, json!({ "traces": traces.len(), "seed": ctx.seed }))
}
