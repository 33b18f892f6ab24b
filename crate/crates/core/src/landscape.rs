//! Classical potential of the loop, its minima and their normal modes.
//!
//! Coordinates are the node phases `(sigma, delta)`. For the Josephson
//! variant the potential only couples them through `u = sigma + delta`
//! (quadratic, minimised at `u = 0`) and the branch phase
//! `phi = delta - sigma`, which carries the corrugation. Well `n` is the valley
//! with `phi` near `-2 pi n`; it is the global minimum near `Phi_ext = n`.
//! The phase-slip variant adds the discrete coordinate `zeta = 2 pi m`, and
//! its wells are labelled by `m`.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};

use crate::circuit::{cpr_current, cpr_curvature, cpr_energy, CircuitSpec, FluxPoint, WeakLinkModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Potential energy of a circuit at fixed external flux.
#[derive(Clone, Copy, Debug)]
pub struct PotentialField<T: Real> {
    pub spec: CircuitSpec<T>,
    pub flux: FluxPoint<T>,
}

/// A located local minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimumRecord<T: Real> {
    /// `(sigma, delta)` for the Josephson variant, `(sigma, delta, zeta)` for
    /// the phase-slip variant.
    pub position: Vec<T>,
    pub value: T,
    /// Hessian with respect to `(sigma, delta)`.
    pub hessian: DMatrix<T>,
    pub mode_freqs: Vec<T>,
    pub well_index: i64,
}

impl<T: Real> MinimumRecord<T> {
    /// Lowest normal-mode frequency.
    pub fn f_low(&self) -> T {
        self.mode_freqs[0]
    }

    pub fn sigma_delta(&self) -> Vector2<T> {
        Vector2::new(self.position[0], self.position[1])
    }

    /// Branch phase `delta - sigma`.
    pub fn branch_phase(&self) -> T {
        self.position[1] - self.position[0]
    }
}

/// A well that was searched for but has no local minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct VanishedWell<T: Real> {
    pub well_index: i64,
    /// Where the relaxation ended up (often inside a neighbouring well).
    pub last_position: Vec<T>,
    /// Smallest Hessian eigenvalue seen at the seed; diagnostic only.
    pub min_eigenvalue: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedFailure {
    pub well_index: i64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaReport<T: Real> {
    pub minima: Vec<MinimumRecord<T>>,
    pub vanished: Vec<VanishedWell<T>>,
    pub failures: Vec<SeedFailure>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimaOptions<T: Real> {
    /// Gradient-norm convergence target, GHz/rad.
    pub tol: T,
    pub max_iter: usize,
    /// Smallest Hessian eigenvalue (GHz/rad^2) still counted as a minimum.
    pub vanish_eps: T,
    /// Positions closer than this (rad) are the same minimum.
    pub dedup_dist: T,
}

impl<T: Real> Default for MinimaOptions<T> {
    fn default() -> Self {
        MinimaOptions {
            tol: T::lit(1e-8),
            max_iter: 200,
            vanish_eps: T::lit(1e-6),
            dedup_dist: T::lit(1e-3),
        }
    }
}

/// Builds the potential for a validated spec.
pub fn build_potential<T: Real>(spec: &CircuitSpec<T>, flux: FluxPoint<T>) -> Result<PotentialField<T>> {
    spec.validate()?;
    Ok(PotentialField { spec: *spec, flux })
}

fn branch_label<T: Real>(phi: T) -> i64 {
    (-phi / T::two_pi()).round().as_f64() as i64
}

impl<T: Real> PotentialField<T> {
    pub fn dimensionality(&self) -> usize {
        if self.spec.is_jj() {
            2
        } else {
            3
        }
    }

    // Phase across the parallel inductor, sigma - delta - 2 pi Phi.
    fn loop_phase(&self, sigma: T, delta: T) -> T {
        sigma - delta - self.flux.phase()
    }

    /// Energy at `(sigma, delta)` (Josephson) or `(sigma, delta, zeta)`
    /// (phase-slip; `zeta` should lie on the lattice `2 pi m`).
    pub fn value(&self, coords: &[T]) -> Result<T> {
        let s = &self.spec;
        let (sigma, delta) = (coords[0], coords[1]);
        let u = sigma + delta;
        let p = self.loop_phase(sigma, delta);
        let base = T::lit(0.5) * (s.e_ls * u * u + s.e_lp * p * p);
        match s.weak_link {
            WeakLinkModel::Jj { e0, chi } => Ok(base + cpr_energy(delta - sigma, e0, chi)?),
            WeakLinkModel::Qps { e_lq, .. } => {
                let zeta = *coords
                    .get(2)
                    .ok_or_else(|| Error::Precondition("phase-slip potential needs (sigma, delta, zeta)".into()))?;
                let q = sigma - delta - zeta;
                Ok(base + T::lit(0.5) * e_lq * q * q)
            }
        }
    }

    /// Gradient with respect to `(sigma, delta)`.
    pub fn gradient(&self, coords: &[T]) -> Result<Vector2<T>> {
        let s = &self.spec;
        let (sigma, delta) = (coords[0], coords[1]);
        let u = s.e_ls * (sigma + delta);
        let p = s.e_lp * self.loop_phase(sigma, delta);
        // d/dsigma of E(delta - sigma) is -E', d/ddelta is +E'
        let w = match s.weak_link {
            WeakLinkModel::Jj { e0, chi } => -cpr_current(delta - sigma, e0, chi)?,
            WeakLinkModel::Qps { e_lq, .. } => e_lq * (sigma - delta - zeta_of(coords)?),
        };
        Ok(Vector2::new(u + p + w, u - p - w))
    }

    /// Hessian with respect to `(sigma, delta)`.
    pub fn hessian(&self, coords: &[T]) -> Result<Matrix2<T>> {
        let s = &self.spec;
        let (sigma, delta) = (coords[0], coords[1]);
        let c = match s.weak_link {
            WeakLinkModel::Jj { e0, chi } => cpr_curvature(delta - sigma, e0, chi)?,
            WeakLinkModel::Qps { e_lq, .. } => e_lq,
        };
        let diag = s.e_ls + s.e_lp + c;
        let off = s.e_ls - s.e_lp - c;
        Ok(Matrix2::new(diag, off, off, diag))
    }

    /// Seed for well `n`: the exact minimum in the sawtooth limit (Josephson)
    /// or the exact minimum of the quadratic section (phase-slip).
    pub fn well_seed(&self, n: i64) -> Vec<T> {
        let s = &self.spec;
        let nf = T::lit(n as f64);
        match s.weak_link {
            WeakLinkModel::Jj { e0, .. } => {
                let phi = -T::two_pi() * (e0 * nf + s.e_lp * self.flux.phi_ext()) / (s.e_lp + e0);
                vec![-phi * T::lit(0.5), phi * T::lit(0.5)]
            }
            WeakLinkModel::Qps { e_lq, .. } => {
                let zeta = T::two_pi() * nf;
                // branch phase delta - sigma balances the two inductors
                let phi = -(e_lq * zeta + s.e_lp * self.flux.phase()) / (s.e_lp + e_lq);
                vec![-phi * T::lit(0.5), phi * T::lit(0.5), zeta]
            }
        }
    }

    /// Well label of a position.
    pub fn label(&self, coords: &[T]) -> i64 {
        match self.spec.weak_link {
            WeakLinkModel::Jj { .. } => branch_label(coords[1] - coords[0]),
            WeakLinkModel::Qps { .. } => (coords[2] / T::two_pi()).round().as_f64() as i64,
        }
    }

    /// Energy grid over `(sigma, delta)` for plotting; `zeta` is used only by
    /// the phase-slip variant.
    pub fn grid(&self, sigma: (T, T, usize), delta: (T, T, usize), zeta: T) -> Result<Vec<(T, T, T)>> {
        let mut out = Vec::with_capacity(sigma.2 * delta.2);
        for i in 0..sigma.2 {
            let a = lerp(sigma, i);
            for j in 0..delta.2 {
                let b = lerp(delta, j);
                out.push((a, b, self.value(&[a, b, zeta])?));
            }
        }
        Ok(out)
    }
}

fn lerp<T: Real>(range: (T, T, usize), i: usize) -> T {
    if range.2 <= 1 {
        return range.0;
    }
    range.0 + (range.1 - range.0) * T::from_index(i) / T::from_index(range.2 - 1)
}

fn zeta_of<T: Real>(coords: &[T]) -> Result<T> {
    coords
        .get(2)
        .copied()
        .ok_or_else(|| Error::Precondition("phase-slip potential needs (sigma, delta, zeta)".into()))
}

// Newton step with the Hessian eigenvalues replaced by their magnitudes, so
// negative curvature is descended at the local curvature scale.
fn saddle_free_step<T: Real>(h: &Matrix2<T>, g: &Vector2<T>) -> Vector2<T> {
    let eig = SymmetricEigen::new(*h);
    let floor = h.abs().max().max(T::one()) * T::lit(1e-8);
    let mut dir = Vector2::zeros();
    for i in 0..2 {
        let v = eig.eigenvectors.column(i);
        let lam = eig.eigenvalues[i].abs().max(floor);
        dir -= v * (v.dot(g) / lam);
    }
    dir
}

fn min_eigenvalue<T: Real>(h: &Matrix2<T>) -> T {
    // symmetric 2x2 closed form
    let mean = (h[(0, 0)] + h[(1, 1)]) * T::lit(0.5);
    let half_diff = (h[(0, 0)] - h[(1, 1)]) * T::lit(0.5);
    mean - (half_diff * half_diff + h[(0, 1)] * h[(0, 1)]).sqrt()
}

/// Normal-mode frequencies `sqrt(8 lambda)` from the eigenvalues of
/// `E_C^(1/2) H E_C^(1/2)`, ascending.
pub fn normal_modes<T: Real>(hessian: &DMatrix<T>, charging: &[T]) -> Result<Vec<T>> {
    let n = hessian.nrows();
    if hessian.ncols() != n || charging.len() != n {
        return Err(Error::Precondition("Hessian and charging dimensions differ".into()));
    }
    let roots: Vec<T> = charging.iter().map(|c| c.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| roots[i] * hessian[(i, j)] * roots[j]);
    let eig = SymmetricEigen::new(scaled);
    let mut lambdas: Vec<T> = eig.eigenvalues.iter().copied().collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if !(lambdas[0] > T::zero()) {
        return Err(Error::VanishedWell {
            well: 0,
            flux: f64::NAN,
            min_eigenvalue: lambdas[0].as_f64(),
        });
    }
    Ok(lambdas.into_iter().map(|l| (T::lit(8.0) * l).sqrt()).collect())
}

/// Outcome of relaxing one seed.
#[derive(Clone, Debug)]
pub enum WellStatus<T: Real> {
    Found(MinimumRecord<T>),
    Vanished(VanishedWell<T>),
}

impl<T: Real> PotentialField<T> {
    /// Relaxes from `start` (or the analytic seed) and checks that the result
    /// is a minimum carrying label `well`.
    pub fn locate_well(&self, well: i64, start: Option<&[T]>, opts: &MinimaOptions<T>) -> Result<WellStatus<T>> {
        let seed = match start {
            Some(s) => s.to_vec(),
            None => self.well_seed(well),
        };
        if !self.spec.is_jj() {
            return self.qps_well(well).map(WellStatus::Found);
        }
        let seed_h = self.hessian(&seed)?;
        let pos = self.relax(&seed, well, opts)?;
        let label = self.label(&pos);
        let h = self.hessian(&pos)?;
        let lam = min_eigenvalue(&h);
        if label != well || !(lam > opts.vanish_eps) {
            return Ok(WellStatus::Vanished(VanishedWell {
                well_index: well,
                last_position: pos,
                min_eigenvalue: min_eigenvalue(&seed_h).min(lam),
            }));
        }
        self.record(pos, h, well).map(WellStatus::Found)
    }

    fn record(&self, pos: Vec<T>, h: Matrix2<T>, well: i64) -> Result<MinimumRecord<T>> {
        let hd = DMatrix::from_fn(2, 2, |i, j| h[(i, j)]);
        let mode_freqs = normal_modes(&hd, &self.spec.charging())?;
        Ok(MinimumRecord {
            value: self.value(&pos)?,
            position: pos,
            hessian: hd,
            mode_freqs,
            well_index: well,
        })
    }

    fn qps_well(&self, m: i64) -> Result<MinimumRecord<T>> {
        let pos = self.well_seed(m);
        let h = self.hessian(&pos)?;
        self.record(pos, h, m)
    }

    // Damped Newton descent. The sum coordinate is quadratic, so the search
    // is really one-dimensional in the branch phase; steps in it are capped
    // to keep the iterate from hopping over a barrier.
    fn relax(&self, start: &[T], well: i64, opts: &MinimaOptions<T>) -> Result<Vec<T>> {
        let max_step = T::lit(0.5);
        let mut x = Vector2::new(start[0], start[1]);
        let mut f = self.value(x.as_slice())?;
        for _ in 0..opts.max_iter {
            let g = self.gradient(x.as_slice())?;
            if g.norm() < opts.tol {
                return Ok(vec![x[0], x[1]]);
            }
            let h = self.hessian(x.as_slice())?;
            let mut dir = if min_eigenvalue(&h) > T::zero() {
                -h.try_inverse().unwrap_or_else(Matrix2::identity) * g
            } else {
                saddle_free_step(&h, &g)
            };
            let len = dir.norm();
            if len > max_step {
                dir *= max_step / len;
            }
            // near the minimum the energy is flat to rounding; do not let that
            // veto Newton steps
            let slack = T::default_epsilon() * T::lit(64.0) * (T::one() + f.abs());
            let mut t = T::one();
            let mut moved = false;
            for _ in 0..60 {
                let trial = x + dir * t;
                if trial == x {
                    break;
                }
                let ft = self.value(trial.as_slice())?;
                if ft <= f + slack {
                    x = trial;
                    f = ft;
                    moved = true;
                    break;
                }
                t *= T::lit(0.5);
            }
            if !moved {
                // no descent possible in floating point: accept if stationary
                let g = self.gradient(x.as_slice())?;
                if g.norm() < opts.tol * T::lit(1e3) {
                    return Ok(vec![x[0], x[1]]);
                }
                return Err(Error::NotConverged(format!(
                    "line search stalled for well {well} (|grad| = {})",
                    g.norm()
                )));
            }
        }
        Err(Error::NotConverged(format!(
            "Newton relaxation for well {well} exceeded {} iterations",
            opts.max_iter
        )))
    }
}

/// Locates every minimum whose well index lies in `window`.
pub fn find_minima<T: Real>(
    field: &PotentialField<T>,
    window: RangeInclusive<i64>,
    opts: &MinimaOptions<T>,
) -> MinimaReport<T> {
    let mut report = MinimaReport {
        minima: Vec::new(),
        vanished: Vec::new(),
        failures: Vec::new(),
    };
    for n in window {
        match field.locate_well(n, None, opts) {
            Ok(WellStatus::Found(rec)) => {
                let dup = report.minima.iter().any(|r: &MinimumRecord<T>| {
                    let d: T = r
                        .position
                        .iter()
                        .zip(&rec.position)
                        .map(|(a, b)| (*a - *b) * (*a - *b))
                        .fold(T::zero(), |acc, v| acc + v);
                    d.sqrt() < opts.dedup_dist
                });
                if !dup {
                    report.minima.push(rec);
                }
            }
            Ok(WellStatus::Vanished(v)) => report.vanished.push(v),
            Err(e) => report.failures.push(SeedFailure {
                well_index: n,
                reason: e.to_string(),
            }),
        }
    }
    report
}

/// Energy of the saddle between two adjacent wells, measured from `well_a`.
///
/// The saddle is first bracketed along the branch phase (the corrugation
/// direction, with the sum coordinate held at its optimum `u = 0`) and then
/// polished by Newton on the full gradient.
pub fn barrier_height<T: Real>(
    field: &PotentialField<T>,
    well_a: &MinimumRecord<T>,
    well_b: &MinimumRecord<T>,
) -> Result<T> {
    let (e0, chi) = match field.spec.weak_link {
        WeakLinkModel::Jj { e0, chi } => (e0, chi),
        WeakLinkModel::Qps { .. } => {
            return Err(Error::Precondition(
                "phase-slip wells are not joined by a continuous path".into(),
            ))
        }
    };
    if (well_a.well_index - well_b.well_index).abs() != 1 {
        return Err(Error::Precondition("barrier_height needs adjacent wells".into()));
    }
    let merged = Error::MergedWells {
        well_a: well_a.well_index,
        well_b: well_b.well_index,
    };
    let pa = well_a.branch_phase();
    let pb = well_b.branch_phase();
    let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
    let f = |phi: T| field.value(&[-phi * T::lit(0.5), phi * T::lit(0.5)]);

    let saddle_phi = if chi == T::one() {
        // the ridge is the CPR kink between the two wells
        let k = ((lo + hi) * T::lit(0.5) / T::pi()).floor();
        let odd = if (k.as_f64() as i64).rem_euclid(2) == 1 {
            k
        } else {
            k + T::one()
        };
        let kink = odd * T::pi();
        if !(kink > lo && kink < hi) {
            return Err(merged);
        }
        kink
    } else {
        let peak = golden_max(&f, lo, hi)?;
        // Newton on dV/dphi = E_LP (phi + 2 pi Phi) + E'(phi)
        let mut phi = peak;
        let s = &field.spec;
        for _ in 0..50 {
            let g = s.e_lp * (phi + field.flux.phase()) + cpr_current(phi, e0, chi)?;
            let c = s.e_lp + cpr_curvature(phi, e0, chi)?;
            if c >= T::zero() {
                break;
            }
            let step = g / c;
            phi -= step;
            if step.abs() < T::default_epsilon() * T::lit(16.0) * (T::one() + phi.abs()) {
                break;
            }
        }
        if !(phi > lo && phi < hi) {
            phi = peak;
        }
        phi
    };
    let top = f(saddle_phi)?;
    let inner_max = top - f(lo)?.max(f(hi)?);
    if !(inner_max > T::zero()) {
        return Err(merged);
    }
    Ok(top - well_a.value)
}

fn golden_max<T: Real, F: Fn(T) -> Result<T>>(f: &F, lo: T, hi: T) -> Result<T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() < T::lit(1e-12) * (T::one() + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d)?;
        }
    }
    Ok((a + b) * T::lit(0.5))
}
