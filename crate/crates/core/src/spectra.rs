//! Exact spectra of the simplified single-loop circuits.
//!
//! Josephson variant: `4 E_C n^2 + E_L (phi - 2 pi Phi)^2 / 2 + E_WSi(phi)`
//! in the oscillator basis of the full quadratic curvature `E_L + E_J`,
//! centred on `2 pi Phi`. The skewed energy-phase relation enters harmonic
//! by harmonic through exact `cos(k phi)` matrix elements.
//!
//! Phase-slip variant: `4 E_C n^2 + E_L (phi - 2 pi Phi)^2 / 2 +
//! E_LQ (phi - zeta)^2 / 2 - E_Q cos(2 pi n_zeta)` with `zeta = 2 pi m`.
//! Each lattice site `m` carries its own oscillator basis centred on that
//! site's parabola, so the diagonal blocks are exact and the phase-slip term
//! becomes a hopping between neighbouring sites weighted by displaced
//! overlaps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::{displacement_matrix, position_squared, trig_position_matrices};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SimpleVariant<T> {
    Jj { e_j: T, chi: T },
    Qps { e_lq: T, e_q: T },
}

/// Simplified circuit at one flux point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleSpec<T> {
    pub e_c: T,
    pub e_l: T,
    pub variant: SimpleVariant<T>,
    /// External flux in flux quanta.
    pub flux: T,
}

impl<T: Real> SimpleSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e_c", self.e_c), ("e_l", self.e_l)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.flux.is_finite() {
            return Err(Error::domain("flux", self.flux.as_f64()));
        }
        match self.variant {
            SimpleVariant::Jj { e_j, chi } => {
                if !(e_j >= T::zero()) || !e_j.is_finite() {
                    return Err(Error::InvalidSpec(format!("e_j must be non-negative, got {e_j}")));
                }
                if !(chi >= T::zero() && chi < T::one()) {
                    return Err(Error::domain("chi", chi.as_f64()));
                }
            }
            SimpleVariant::Qps { e_lq, e_q } => {
                if !(e_lq > T::zero()) || !e_lq.is_finite() {
                    return Err(Error::InvalidSpec(format!("e_lq must be positive, got {e_lq}")));
                }
                if !(e_q >= T::zero()) || !e_q.is_finite() {
                    return Err(Error::InvalidSpec(format!("e_q must be non-negative, got {e_q}")));
                }
            }
        }
        Ok(())
    }

    pub fn at_flux(mut self, flux: T) -> Self {
        self.flux = flux;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDims {
    pub oscillator: usize,
    /// Number of lattice sites (phase-slip variant only).
    pub wells: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    /// Lowest eigenvalues, ascending, GHz.
    pub eigenvalues: Vec<T>,
    pub basis_dims: BasisDims,
    /// Per level: stable to `tol` under basis doubling.
    pub converged: Vec<bool>,
}

impl<T: Real> Spectrum<T> {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }

    /// Transition energies `E_j - E_0`.
    pub fn transitions(&self) -> Vec<T> {
        let e0 = self.eigenvalues[0];
        self.eigenvalues.iter().map(|e| *e - e0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub oscillator_dim: usize,
    pub max_oscillator_dim: usize,
    /// Sites `m` in `[c - half_wells, c + half_wells]` around the nearest
    /// site `c` to the flux.
    pub half_wells: usize,
    pub max_half_wells: usize,
    pub tol: f64,
}

impl SpectrumOptions {
    pub fn jj() -> Self {
        SpectrumOptions {
            oscillator_dim: 200,
            max_oscillator_dim: 1600,
            half_wells: 0,
            max_half_wells: 0,
            tol: 1e-6,
        }
    }

    pub fn qps() -> Self {
        SpectrumOptions {
            oscillator_dim: 64,
            max_oscillator_dim: 256,
            half_wells: 4,
            max_half_wells: 16,
            tol: 1e-6,
        }
    }
}

fn lowest<T: Real>(h: DMatrix<T>, n: usize) -> Vec<T> {
    let mut ev: Vec<T> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev.truncate(n);
    ev
}

/// Hamiltonian matrix of the Josephson variant in `dim` oscillator states.
pub fn jj_hamiltonian<T: Real>(spec: &SimpleSpec<T>, dim: usize) -> Result<DMatrix<T>> {
    spec.validate()?;
    let (e_j, chi) = match spec.variant {
        SimpleVariant::Jj { e_j, chi } => (e_j, chi),
        SimpleVariant::Qps { .. } => return Err(Error::Precondition("expected a Josephson spec".into())),
    };
    let half = T::lit(0.5);
    let k_b = spec.e_l + e_j;
    let omega = (T::lit(8.0) * spec.e_c * k_b).sqrt();
    // phase zero-point scale: phi - phi_c = ell (b + b^dag)
    let ell = (T::lit(2.0) * spec.e_c / k_b).sqrt().sqrt();
    let center = T::two_pi() * spec.flux;

    let mut h = position_squared::<T>(dim) * (-half * e_j * ell * ell);
    for n in 0..dim {
        h[(n, n)] += omega * (T::from_index(n) + half);
    }
    if e_j == T::zero() {
        return Ok(h);
    }
    let cutoff = T::lit(1e-14) * e_j;
    let mut weight = T::one(); // (-chi)^(k-1)
    for k in 1..=4000usize {
        let kf = T::from_index(k);
        let c_k = -e_j * (T::one() + chi) * weight / (kf * kf);
        weight *= -chi;
        let kappa = kf * ell;
        let (c, s) = trig_position_matrices::<T>(dim, kappa);
        let (ck, sk) = ((kf * center).cos(), (kf * center).sin());
        let biggest = c.amax().max(s.amax());
        h += (c * ck - s * sk) * c_k;
        let spread = kappa * kappa > T::lit(4.0) * T::from_index(dim);
        if (c_k.abs() * biggest < cutoff && spread) || c_k == T::zero() {
            break;
        }
    }
    Ok(h)
}

/// Hamiltonian of the phase-slip variant: `dim` oscillator states on each of
/// the sites `wells`, ordered site-major.
pub fn qps_hamiltonian<T: Real>(spec: &SimpleSpec<T>, dim: usize, wells: &[i64]) -> Result<DMatrix<T>> {
    spec.validate()?;
    let (e_lq, e_q) = match spec.variant {
        SimpleVariant::Qps { e_lq, e_q } => (e_lq, e_q),
        SimpleVariant::Jj { .. } => return Err(Error::Precondition("expected a phase-slip spec".into())),
    };
    let half = T::lit(0.5);
    let k = spec.e_l + e_lq;
    let omega = (T::lit(8.0) * spec.e_c * k).sqrt();
    let ell = (T::lit(2.0) * spec.e_c / k).sqrt().sqrt();
    let e_eff = spec.e_l * e_lq / k;
    // neighbouring sites' parabola minima are this far apart in phase
    let spacing = T::two_pi() * e_lq / k;
    let beta = spacing / (T::lit(2.0) * ell);
    // <i, m+1 | j, m> = <i|D(-beta)|j>
    let hop = displacement_matrix::<T>(dim, -beta) * (-half * e_q);

    let n = dim * wells.len();
    let mut h = DMatrix::zeros(n, n);
    for (a, &m) in wells.iter().enumerate() {
        let off = T::two_pi() * (spec.flux - T::lit(m as f64));
        let e_well = half * e_eff * off * off;
        for i in 0..dim {
            h[(a * dim + i, a * dim + i)] = e_well + omega * (T::from_index(i) + half);
        }
        if a + 1 < wells.len() {
            if wells[a + 1] != m + 1 {
                return Err(Error::Precondition("well sites must be consecutive".into()));
            }
            let r = (a + 1) * dim;
            let c = a * dim;
            h.view_mut((r, c), (dim, dim)).copy_from(&hop);
            h.view_mut((c, r), (dim, dim)).copy_from(&hop.transpose());
        }
    }
    Ok(h)
}

fn site_window<T: Real>(flux: T, half_wells: usize) -> Vec<i64> {
    let c = (flux + T::lit(0.5)).floor().as_f64() as i64;
    let h = half_wells as i64;
    (c - h..=c + h).collect()
}

fn compare_levels<T: Real>(coarse: &[T], fine: &[T], tol: T) -> Vec<bool> {
    coarse.iter().zip(fine).map(|(a, b)| (*a - *b).abs() < tol).collect()
}

/// Lowest `n_levels` eigenvalues of the Josephson variant.
///
/// The oscillator basis is doubled until every requested level moves by less
/// than `opts.tol`, or `opts.max_oscillator_dim` is reached (then the result
/// carries per-level flags).
pub fn spectrum_jj<T: Real>(spec: &SimpleSpec<T>, n_levels: usize, opts: &SpectrumOptions) -> Result<Spectrum<T>> {
    let tol = T::lit(opts.tol);
    let mut dim = opts.oscillator_dim.max(n_levels + 2);
    let mut coarse = lowest(jj_hamiltonian(spec, dim)?, n_levels);
    loop {
        let next = dim * 2;
        let fine = lowest(jj_hamiltonian(spec, next)?, n_levels);
        let converged = compare_levels(&coarse, &fine, tol);
        let done = converged.iter().all(|c| *c);
        if done || next * 2 > opts.max_oscillator_dim.max(next) {
            if !done {
                log::warn!("josephson spectrum not converged at oscillator dimension {next}");
            }
            return Ok(Spectrum {
                eigenvalues: fine,
                basis_dims: BasisDims {
                    oscillator: next,
                    wells: None,
                },
                converged,
            });
        }
        dim = next;
        coarse = fine;
    }
}

/// Lowest `n_levels` eigenvalues of the phase-slip variant.
///
/// The oscillator dimension is doubled until the levels stop moving, then
/// the site window is doubled; each growth step re-checks the other
/// direction. The finer oscillator result is returned.
pub fn spectrum_qps<T: Real>(spec: &SimpleSpec<T>, n_levels: usize, opts: &SpectrumOptions) -> Result<Spectrum<T>> {
    let tol = T::lit(opts.tol);
    let mut dim = opts.oscillator_dim.max(n_levels + 2);
    let mut half = opts.half_wells.max(1);
    let eval = |dim: usize, half: usize| -> Result<Vec<T>> {
        Ok(lowest(
            qps_hamiltonian(spec, dim, &site_window(spec.flux, half))?,
            n_levels,
        ))
    };
    let mut base = eval(dim, half)?;
    loop {
        let more_ho = eval(dim * 2, half)?;
        let ho_ok = compare_levels(&base, &more_ho, tol);
        if !ho_ok.iter().all(|c| *c) && dim * 4 <= opts.max_oscillator_dim {
            dim *= 2;
            base = more_ho;
            continue;
        }
        let more_sites = eval(dim, half * 2)?;
        let site_ok = compare_levels(&base, &more_sites, tol);
        if !site_ok.iter().all(|c| *c) && half * 2 <= opts.max_half_wells.max(1) {
            half *= 2;
            base = more_sites;
            continue;
        }
        let converged: Vec<bool> = ho_ok.iter().zip(&site_ok).map(|(a, b)| *a && *b).collect();
        if !converged.iter().all(|c| *c) {
            log::warn!(
                "phase-slip spectrum not converged (oscillator {dim}, sites {})",
                2 * half + 1
            );
        }
        return Ok(Spectrum {
            eigenvalues: more_ho,
            basis_dims: BasisDims {
                oscillator: dim * 2,
                wells: Some(2 * half + 1),
            },
            converged,
        });
    }
}

/// `|(E_j - E_0)^JJ - (E_j - E_0)^QPS|` for `j = 1..=k`.
pub fn compare_spectra<T: Real>(jj: &Spectrum<T>, qps: &Spectrum<T>, k: usize) -> Result<Vec<T>> {
    for (name, s) in [("josephson", jj), ("phase-slip", qps)] {
        if s.eigenvalues.len() <= k {
            return Err(Error::Precondition(format!(
                "{name} spectrum has fewer than {} levels",
                k + 1
            )));
        }
        if !s.converged[..=k].iter().all(|c| *c) {
            return Err(Error::NotConverged(format!(
                "{name} spectrum not converged up to level {k}"
            )));
        }
    }
    let a = jj.transitions();
    let b = qps.transitions();
    Ok((1..=k).map(|j| (a[j] - b[j]).abs()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::displaced_overlap;
    use crate::presets::{simple_jj, simple_qps};

    fn small() -> SpectrumOptions {
        SpectrumOptions {
            oscillator_dim: 100,
            max_oscillator_dim: 400,
            half_wells: 3,
            max_half_wells: 12,
            tol: 1e-6,
        }
    }

    #[test]
    fn harmonic_ladder_without_junction() {
        let spec = SimpleSpec {
            variant: SimpleVariant::Jj { e_j: 0.0, chi: 0.5 },
            ..simple_jj(0.3)
        };
        let s = spectrum_jj(&spec, 5, &small()).unwrap();
        let t = s.transitions();
        for (j, v) in t.iter().enumerate() {
            assert!((v - j as f64 * 0.8f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn jj_matrix_symmetric() {
        let h = jj_hamiltonian(&simple_jj(0.21), 120).unwrap();
        assert!((&h - h.transpose()).amax() < 1e-12);
    }

    #[test]
    fn qps_matrix_symmetric() {
        let h = qps_hamiltonian(&simple_qps(0.21), 30, &[-1, 0, 1, 2]).unwrap();
        assert!((&h - h.transpose()).amax() < 1e-12);
    }

    #[test]
    fn jj_variational_monotone() {
        let spec = simple_jj(0.37);
        let a = lowest(jj_hamiltonian(&spec, 60).unwrap(), 8);
        let b = lowest(jj_hamiltonian(&spec, 120).unwrap(), 8);
        for (x, y) in a.iter().zip(&b) {
            assert!(*y <= *x + 1e-10);
        }
    }

    #[test]
    fn qps_variational_monotone() {
        let spec = simple_qps(0.37);
        let sites = [-2, -1, 0, 1, 2];
        let a = lowest(qps_hamiltonian(&spec, 20, &sites).unwrap(), 8);
        let b = lowest(qps_hamiltonian(&spec, 40, &sites).unwrap(), 8);
        for (x, y) in a.iter().zip(&b) {
            assert!(*y <= *x + 1e-10);
        }
    }

    #[test]
    fn jj_flux_periodicity() {
        let a = spectrum_jj(&simple_jj(0.3), 8, &small()).unwrap();
        let b = spectrum_jj(&simple_jj(1.3), 8, &small()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn qps_flux_periodicity() {
        // shifting the flux by one quantum and the sites by one is exact
        let a = lowest(
            qps_hamiltonian(&simple_qps(0.3), 40, &[-3, -2, -1, 0, 1, 2, 3]).unwrap(),
            8,
        );
        let b = lowest(
            qps_hamiltonian(&simple_qps(1.3), 40, &[-2, -1, 0, 1, 2, 3, 4]).unwrap(),
            8,
        );
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn decoupled_wells_give_shifted_ladders() {
        let spec = SimpleSpec {
            variant: SimpleVariant::Qps { e_lq: 3.0, e_q: 0.0 },
            ..simple_qps(0.2)
        };
        let h = qps_hamiltonian(&spec, 10, &[-1, 0, 1]).unwrap();
        let ev = lowest(h, 5);
        let k: f64 = 3.1;
        let omega = (8.0 * k).sqrt();
        let e_eff = 0.3 / k;
        let tau = 2.0 * std::f64::consts::PI;
        let mut want: Vec<f64> = [-1.0, 0.0, 1.0]
            .iter()
            .flat_map(|m: &f64| {
                (0..10).map(move |i| 0.5 * e_eff * (tau * (0.2 - m)).powi(2) + omega * (i as f64 + 0.5))
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stiff_wells_form_tight_binding_band() {
        // large stiffness: only the lowest oscillator state matters and the
        // site energies become flat, leaving a cosine band
        let e_c: f64 = 20.0;
        let e_lq = 40.0;
        let e_l = 1e-12;
        let e_q = 2.0;
        let spec = SimpleSpec {
            e_c,
            e_l,
            variant: SimpleVariant::Qps { e_lq, e_q },
            flux: 0.0,
        };
        let sites: Vec<i64> = (-15..=15).collect();
        let h = qps_hamiltonian(&spec, 12, &sites).unwrap();
        let ev = lowest(h, sites.len());
        let k = e_l + e_lq;
        let ell = (2.0 * e_c / k).sqrt().sqrt();
        let d = 2.0 * std::f64::consts::PI * e_lq / k / (2f64.sqrt() * ell);
        let t = 0.5 * e_q * displaced_overlap(0, 0, d);
        // oracle: explicit open-chain tight-binding diagonalisation
        let n = sites.len();
        let mut tb = DMatrix::<f64>::zeros(n, n);
        let zero_point = 0.5 * (8.0 * e_c * k).sqrt();
        for i in 0..n {
            tb[(i, i)] = zero_point;
            if i + 1 < n {
                tb[(i, i + 1)] = -t;
                tb[(i + 1, i)] = -t;
            }
        }
        let want = lowest(tb, n);
        let width = ev[n - 1] - ev[0];
        let want_width = want[n - 1] - want[0];
        assert!(want_width > 0.0);
        assert!(
            (width - want_width).abs() < 1e-3 * want_width,
            "{width} vs {want_width}"
        );
    }

    #[test]
    fn compare_refuses_unconverged() {
        let s = Spectrum {
            eigenvalues: vec![0.0, 1.0, 2.0],
            basis_dims: BasisDims {
                oscillator: 1,
                wells: None,
            },
            converged: vec![true, false, true],
        };
        assert!(compare_spectra(&s, &s, 2).is_err());
        let ok = Spectrum {
            converged: vec![true; 3],
            ..s
        };
        assert_eq!(compare_spectra(&ok, &ok, 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn vanishing_nonlinearity_reduces_both_to_one_oscillator() {
        // without phase slips a single site is an oscillator of stiffness
        // E_L + E_LQ; a junction-free loop of that stiffness must agree
        let qps = SimpleSpec {
            variant: SimpleVariant::Qps { e_lq: 3.0, e_q: 0.0 },
            ..simple_qps(0.0)
        };
        let jj = SimpleSpec {
            e_l: 3.1,
            variant: SimpleVariant::Jj { e_j: 0.0, chi: 0.0 },
            ..simple_jj(0.0)
        };
        let conv = |eigenvalues: Vec<f64>| Spectrum {
            converged: vec![true; eigenvalues.len()],
            eigenvalues,
            basis_dims: BasisDims {
                oscillator: 40,
                wells: Some(1),
            },
        };
        let a = conv(lowest(jj_hamiltonian(&jj, 40).unwrap(), 6));
        let b = conv(lowest(qps_hamiltonian(&qps, 40, &[0]).unwrap(), 6));
        let d = compare_spectra(&a, &b, 5).unwrap();
        assert!(d.iter().all(|v| *v < 1e-10), "{d:?}");
    }
}
