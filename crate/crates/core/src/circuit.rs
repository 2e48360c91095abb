//! Lumped Kineticon circuit: a capacitor shunting a nonlinear kinetic
//! inductor, its classical energies, and the derived quantum parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{H, HBAR};
use crate::error::{ensure_finite, ensure_positive, Error, Result, Validity};
use crate::quantum::LAMBDA_VALIDITY;

/// Above this `|Φ/Φ*|` the quadratic inductance law is only a rough guide.
pub const FLUX_SOFT_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticonCircuit {
    /// Zero-bias kinetic inductance, H.
    pub l0k: f64,
    /// Shunt capacitance, F.
    pub c: f64,
    /// Characteristic current I*, A.
    pub istar: f64,
}

/// Quantities that follow from a [`KineticonCircuit`] (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedCircuit {
    pub f_r: f64,
    pub z0: f64,
    /// Φ* = I*·L0k.
    pub phi_star: f64,
    pub phi_zpf: f64,
    pub q_zpf: f64,
    pub i_zpf: f64,
    /// E_k = Φ*² / 2L0k.
    pub ek: f64,
    /// λ = −φ_zpf² / Φ*², always negative.
    pub lambda: f64,
}

impl KineticonCircuit {
    pub fn new(l0k: f64, c: f64, istar: f64) -> Result<Self> {
        ensure_positive(&[("L0k", l0k), ("C", c), ("I*", istar)])?;
        Ok(KineticonCircuit { l0k, c, istar })
    }

    /// Circuit resonating at `f_r` with the given inductor.
    pub fn with_frequency(l0k: f64, f_r: f64, istar: f64) -> Result<Self> {
        Self::new(l0k, capacitor_for_frequency(l0k, f_r)?, istar)
    }

    pub fn phi_star(&self) -> f64 {
        self.istar * self.l0k
    }

    pub fn ek(&self) -> f64 {
        let phi_star = self.phi_star();
        phi_star * phi_star / (2.0 * self.l0k)
    }

    /// `L_k(Φ) = L0k (1 + Φ²/Φ*²)`.
    pub fn nonlinear_inductance(&self, phi: f64) -> Result<f64> {
        self.nonlinear_inductance_with(phi, Validity::Soft)
    }

    pub fn nonlinear_inductance_with(&self, phi: f64, validity: Validity) -> Result<f64> {
        ensure_finite(&[("Phi", phi)])?;
        let ratio = (phi / self.phi_star()).abs();
        if ratio >= 1.0 {
            return Err(Error::Validity(format!(
                "|Phi/Phi*| = {ratio:.3} >= 1, outside the weak-nonlinearity expansion"
            )));
        }
        validity.check(ratio < FLUX_SOFT_LIMIT, || {
            format!("|Phi/Phi*| = {ratio:.3} exceeds {FLUX_SOFT_LIMIT}")
        })?;
        Ok(self.l0k * (1.0 + ratio * ratio))
    }

    /// `(U_C, U_L)` with `U_C = C Φ̇²/2` and `U_L = E_k (Φ²/Φ*² − Φ⁴/Φ*⁴)`.
    pub fn energies(&self, phi: f64, phidot: f64) -> Result<(f64, f64)> {
        ensure_finite(&[("Phi", phi), ("Phidot", phidot)])?;
        let u_c = 0.5 * self.c * phidot * phidot;
        let x2 = (phi / self.phi_star()).powi(2);
        let u_l = self.ek() * (x2 - x2 * x2);
        Ok((u_c, u_l))
    }

    pub fn derive(&self) -> DerivedCircuit {
        let f_r = 1.0 / (2.0 * PI * (self.l0k * self.c).sqrt());
        let z0 = (self.l0k / self.c).sqrt();
        let phi_star = self.phi_star();
        let phi_zpf = (HBAR * z0 / 2.0).sqrt();
        let q_zpf = (HBAR / (2.0 * z0)).sqrt();
        let i_zpf = (H * f_r / (2.0 * self.l0k)).sqrt();
        DerivedCircuit {
            f_r,
            z0,
            phi_star,
            phi_zpf,
            q_zpf,
            i_zpf,
            ek: self.ek(),
            lambda: -(phi_zpf * phi_zpf) / (phi_star * phi_star),
        }
    }

    /// Relative anharmonicity `3 I_zpf² / I*²`.
    pub fn alpha_perturbative(&self) -> Result<f64> {
        self.alpha_perturbative_with(Validity::Soft)
    }

    pub fn alpha_perturbative_with(&self, validity: Validity) -> Result<f64> {
        let d = self.derive();
        validity.check(d.lambda.abs() < LAMBDA_VALIDITY, || {
            format!(
                "|lambda| = {:e} outside the weak-anharmonic regime (< {LAMBDA_VALIDITY:e})",
                d.lambda.abs()
            )
        })?;
        Ok(3.0 * d.i_zpf * d.i_zpf / (self.istar * self.istar))
    }
}

/// `C = 1 / ((2π f_r)² L0k)`.
pub fn capacitor_for_frequency(l0k: f64, f_r: f64) -> Result<f64> {
    ensure_positive(&[("L0k", l0k), ("f_r", f_r)])?;
    let w = 2.0 * PI * f_r;
    Ok(1.0 / (w * w * l0k))
}
