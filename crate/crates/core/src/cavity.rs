//! Rectangular cavity modes, effective-permittivity loading, and the
//! qubit–cavity two-mode model.
//!
//! Axis convention: `a` is the width (x), `b` the height (y), `d` the depth
//! (z). Mode indices `(m, n, p)` count half wavelengths along (x, y, z), and
//! the TE/TM families are defined with respect to [`RectCavity::longitudinal`]
//! (z by default). TE₁₀₁ is then the mode with one half wave across the width
//! and one along the depth.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::C_LIGHT;
use crate::eigen::{eig_sym, eig_sym_vectors};
use crate::error::{ensure_finite, ensure_positive, Error, Result, Validity};
use crate::quantum::{quartic_matrix, CONVERGENCE_TOL, RECHECK_STEP};

/// Above this `g / f` the rotating-wave coupling is questionable.
pub const RWA_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeFamily {
    TE,
    TM,
}

impl fmt::Display for ModeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeFamily::TE => "TE",
            ModeFamily::TM => "TM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectCavity {
    /// Width along x, m.
    pub a: f64,
    /// Height along y, m.
    pub b: f64,
    /// Depth along z, m.
    pub d: f64,
    #[serde(default = "unit_eps")]
    pub eps_eff: f64,
    /// Axis the TE/TM labels refer to.
    #[serde(default)]
    pub longitudinal: Axis,
}

fn unit_eps() -> f64 {
    1.0
}

impl RectCavity {
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        let cavity = RectCavity {
            a,
            b,
            d,
            eps_eff: 1.0,
            longitudinal: Axis::Z,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn with_eps(self, eps_eff: f64) -> Result<Self> {
        let cavity = RectCavity { eps_eff, ..self };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(&[("a", self.a), ("b", self.b), ("d", self.d)])?;
        ensure_finite(&[("eps_eff", self.eps_eff)])?;
        if self.eps_eff < 1.0 {
            return Err(Error::Domain(format!("eps_eff must be >= 1, got {}", self.eps_eff)));
        }
        Ok(())
    }
}

/// Checks the index rules: TE needs at least one transverse half wave and
/// `p_long ≥ 1`; TM needs both transverse indices ≥ 1.
fn check_indices(cavity: &RectCavity, m: u32, n: u32, p: u32, family: ModeFamily) -> Result<()> {
    let (t1, t2, l) = match cavity.longitudinal {
        Axis::X => (n, p, m),
        Axis::Y => (m, p, n),
        Axis::Z => (m, n, p),
    };
    let ok = match family {
        ModeFamily::TE => l >= 1 && (t1, t2) != (0, 0),
        ModeFamily::TM => t1 >= 1 && t2 >= 1,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ModeIndex {
            family: family.to_string(),
            m,
            n,
            p,
        })
    }
}

/// `f = c / (2√ε) · √((m/a)² + (n/b)² + (p/d)²)`.
pub fn mode_frequency(cavity: &RectCavity, m: u32, n: u32, p: u32, family: ModeFamily) -> Result<f64> {
    cavity.validate()?;
    check_indices(cavity, m, n, p, family)?;
    let k2 = (f64::from(m) / cavity.a).powi(2) + (f64::from(n) / cavity.b).powi(2) + (f64::from(p) / cavity.d).powi(2);
    Ok(C_LIGHT / (2.0 * cavity.eps_eff.sqrt()) * k2.sqrt())
}

/// Effective permittivity that brings a mode down to `f_target`.
pub fn loading_for_target(
    cavity: &RectCavity,
    m: u32,
    n: u32,
    p: u32,
    family: ModeFamily,
    f_target: f64,
) -> Result<f64> {
    ensure_positive(&[("f_target", f_target)])?;
    let empty = RectCavity {
        eps_eff: 1.0,
        ..*cavity
    };
    let f_empty = mode_frequency(&empty, m, n, p, family)?;
    if f_target > f_empty {
        return Err(Error::UnreachableLoading { f_target, f_empty });
    }
    Ok((f_empty / f_target).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityMode {
    pub family: ModeFamily,
    pub m: u32,
    pub n: u32,
    pub p: u32,
    pub f_hz: f64,
}

/// All valid TE and TM modes with indices up to `max_index` and frequency at
/// most `f_max`, ascending by frequency (ties keep TE before TM, then index order).
pub fn mode_table(cavity: &RectCavity, max_index: u32, f_max: f64) -> Result<Vec<CavityMode>> {
    cavity.validate()?;
    let mut modes = Vec::new();
    for family in [ModeFamily::TE, ModeFamily::TM] {
        for m in 0..=max_index {
            for n in 0..=max_index {
                for p in 0..=max_index {
                    if let Ok(f_hz) = mode_frequency(cavity, m, n, p, family) {
                        if f_hz <= f_max {
                            modes.push(CavityMode { family, m, n, p, f_hz });
                        }
                    }
                }
            }
        }
    }
    modes.sort_by(|x, y| x.f_hz.total_cmp(&y.f_hz));
    Ok(modes)
}

/// Cavity mode coupled to a weakly anharmonic qubit, all rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub f_cavity: f64,
    pub f_qubit: f64,
    pub lambda_q: f64,
    pub g: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    /// (cavity, qubit) Fock truncations.
    #[serde(default = "default_dims")]
    pub dims: (usize, usize),
}

pub const DEFAULT_DIMS: (usize, usize) = (5, 12);

fn default_dims() -> (usize, usize) {
    DEFAULT_DIMS
}

impl CoupledSystem {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(&[("f_cavity", self.f_cavity), ("f_qubit", self.f_qubit)])?;
        ensure_finite(&[
            ("lambda_q", self.lambda_q),
            ("g", self.g),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
        ])?;
        let mut problems = Vec::new();
        for (name, v) in [
            ("g", self.g),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
        ] {
            if v < 0.0 {
                problems.push(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.dims.0 < 2 || self.dims.1 < 2 {
            problems.push(format!("truncations must be >= 2, got {:?}", self.dims));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(problems.join("; ")))
        }
    }

    fn hamiltonian(&self, dims: (usize, usize)) -> Result<DMatrix<f64>> {
        let (nc, nq) = dims;
        let hq = self.qubit_hamiltonian(nq)?;
        let dim = nc * nq;
        let mut h = DMatrix::zeros(dim, dim);
        for c in 0..nc {
            for i in 0..nq {
                for j in 0..nq {
                    h[(c * nq + i, c * nq + j)] = hq[(i, j)];
                }
                h[(c * nq + i, c * nq + i)] += self.f_cavity * c as f64;
            }
        }
        // g (a†b + ab†): |c, q+1⟩ ↔ |c+1, q⟩ with amplitude g√(c+1)√(q+1).
        for c in 0..nc - 1 {
            for q in 0..nq - 1 {
                let v = self.g * ((c + 1) as f64).sqrt() * ((q + 1) as f64).sqrt();
                let (r, s) = (c * nq + q + 1, (c + 1) * nq + q);
                h[(r, s)] = v;
                h[(s, r)] = v;
            }
        }
        Ok(h)
    }

    fn qubit_hamiltonian(&self, nq: usize) -> Result<DMatrix<f64>> {
        let x4 = quartic_matrix(nq)?;
        let mut h = x4 * (0.25 * self.lambda_q * self.f_qubit);
        for k in 0..nq {
            h[(k, k)] += self.f_qubit * k as f64;
        }
        Ok(DMatrix::from_fn(
            nq,
            nq,
            |i, j| if i <= j { h[(i, j)] } else { h[(j, i)] },
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedSpectrum {
    /// Ascending dressed levels `E/h`, Hz.
    pub levels: Vec<f64>,
    /// `E(1,0) − E(0,0)`.
    pub f_cavity_dressed: f64,
    /// `E(0,1) − E(0,0)`.
    pub f_qubit_dressed: f64,
    /// `[E(1,1) − E(0,1)] − [E(1,0) − E(0,0)]`.
    pub chi: f64,
    /// Level index of the dressed state assigned to each bare label
    /// `(cavity photons, qubit level)`, in the order (0,0), (1,0), (0,1), (1,1).
    pub labels: [((usize, usize), usize); 4],
}

const TRACKED: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Diagonalizes the two-mode Hamiltonian and identifies the dressed states
/// by their largest overlap with bare product states.
pub fn dressed_spectrum(system: &CoupledSystem) -> Result<DressedSpectrum> {
    dressed_spectrum_with(system, Validity::Soft)
}

pub fn dressed_spectrum_with(system: &CoupledSystem, validity: Validity) -> Result<DressedSpectrum> {
    system.validate()?;
    let ratio = system.g / system.f_cavity.min(system.f_qubit);
    validity.check(ratio <= RWA_LIMIT, || {
        format!("g/f = {ratio:.3} exceeds {RWA_LIMIT}; counter-rotating terms are neglected")
    })?;
    let (nc, nq) = system.dims;
    let h = system.hamiltonian((nc, nq))?;
    let eig = eig_sym_vectors(&h)?;

    // Convergence of the levels that carry the tracked labels.
    let larger = eig_sym(&system.hamiltonian((nc + RECHECK_STEP, nq + RECHECK_STEP))?)?;
    let checked = 6.min(eig.values.len());
    let scale = system.f_cavity.max(system.f_qubit);
    let rel_change = eig
        .values
        .iter()
        .zip(&larger)
        .take(checked)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    if !(rel_change <= CONVERGENCE_TOL) {
        return Err(Error::Convergence {
            dim: nc * nq,
            rel_change,
        });
    }

    // Bare basis: cavity Fock states times qubit eigenstates.
    let qubit = eig_sym_vectors(&system.qubit_hamiltonian(nq)?)?;
    let candidates = (2 * TRACKED.len() + 4).min(eig.values.len());
    let mut pairs = Vec::new();
    for (t, &(c, q)) in TRACKED.iter().enumerate() {
        if c >= nc || q >= nq {
            return Err(Error::InvalidDimension {
                dim: nc.min(nq),
                min: 2,
            });
        }
        for k in 0..candidates {
            let amp: f64 = (0..nq)
                .map(|i| qubit.vectors[(i, q)] * eig.vectors[(c * nq + i, k)])
                .sum();
            pairs.push((amp * amp, t, k));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assigned = [usize::MAX; 4];
    let mut used = vec![false; candidates];
    for (_, t, k) in pairs {
        if assigned[t] == usize::MAX && !used[k] {
            assigned[t] = k;
            used[k] = true;
        }
    }
    let e = |t: usize| eig.values[assigned[t]];
    let labels = [
        (TRACKED[0], assigned[0]),
        (TRACKED[1], assigned[1]),
        (TRACKED[2], assigned[2]),
        (TRACKED[3], assigned[3]),
    ];
    Ok(DressedSpectrum {
        f_cavity_dressed: e(1) - e(0),
        f_qubit_dressed: e(2) - e(0),
        chi: (e(3) - e(2)) - (e(1) - e(0)),
        labels,
        levels: eig.values,
    })
}

/// Second-order dispersive shift `2g²/Δ₀ − 2g²/Δ₁` with `Δ_j = f_{j,j+1} − f_c`
/// taken from the first-order qubit transitions `f_q(1 + 3λ(j+1))`.
pub fn chi_perturbative(system: &CoupledSystem) -> f64 {
    let f01 = system.f_qubit * (1.0 + 3.0 * system.lambda_q);
    let f12 = system.f_qubit * (1.0 + 6.0 * system.lambda_q);
    let g2 = system.g * system.g;
    2.0 * g2 / (f01 - system.f_cavity) - 2.0 * g2 / (f12 - system.f_cavity)
}

fn s21_at(system: &CoupledSystem, f: f64) -> Complex64 {
    let i = Complex64::i();
    let qubit = i * (f - system.f_qubit) + 0.5 * system.gamma;
    let loading = if system.g == 0.0 {
        Complex64::from(0.0)
    } else if qubit.norm() == 0.0 {
        return Complex64::from(0.0);
    } else {
        system.g * system.g / qubit
    };
    let num = (system.kappa1 * system.kappa2).sqrt();
    num / (i * (f - system.f_cavity) + 0.5 * (system.kappa1 + system.kappa2) + loading)
}

/// Input–output transmission
/// `√(κ₁κ₂) / (i(f − f_c) + (κ₁+κ₂)/2 + g²/(i(f − f_q) + γ/2))`, in input order.
pub fn s21_coupled(system: &CoupledSystem, freqs: &[f64]) -> Result<Vec<(f64, Complex64)>> {
    system.validate()?;
    if system.kappa1 + system.kappa2 <= 0.0 {
        return Err(Error::Domain("at least one port rate must be positive".into()));
    }
    Ok(freqs.par_iter().map(|&f| (f, s21_at(system, f))).collect())
}

/// Local maxima of `|S21|` on a sampled sweep, each refined by a parabola
/// through its neighbours. Maxima below `min_fraction` of the largest are dropped.
pub fn transmission_peaks(samples: &[(f64, Complex64)], min_fraction: f64) -> Vec<f64> {
    let mag: Vec<f64> = samples.iter().map(|s| s.1.norm()).collect();
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for k in 1..mag.len().saturating_sub(1) {
        if mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] >= min_fraction * top {
            let (y0, y1, y2) = (mag[k - 1], mag[k], mag[k + 1]);
            let h = samples[k + 1].0 - samples[k].0;
            let den = y0 - 2.0 * y1 + y2;
            let shift = if den < 0.0 { 0.5 * h * (y0 - y2) / den } else { 0.0 };
            peaks.push(samples[k].0 + shift.clamp(-h, h));
        }
    }
    peaks
}
