//! Superconductor parameters and the nanowire geometry → circuit bridge.
//!
//! Internal units are strict SI: Δ in joules, N(0) in J⁻¹·m⁻³, ρ_n in Ω·m.
//! The eV/µm-based literature units are converted once, in
//! [`Material::from_lab_units`].

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{self, H, HBAR, K_B, MEV};
use crate::error::{ensure_positive, Error, Result, Validity};

/// Weak-coupling BCS ratio Δ/(k_B T_c).
pub const BCS_GAP_RATIO: f64 = 1.764;
/// Default phonon pair-breaking efficiency ξ.
pub const DEFAULT_XI: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Material {
    pub name: String,
    /// Critical temperature, K.
    pub tc: f64,
    /// Gap parameter Δ, J.
    pub delta: f64,
    /// Single-spin density of states at the Fermi level, J⁻¹·m⁻³.
    pub n0: Option<f64>,
    /// Normal-state resistivity, Ω·m.
    pub rho_n: Option<f64>,
    /// Phonon pair-breaking efficiency.
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NanowireGeometry {
    pub width: f64,
    pub length: f64,
    pub thickness: f64,
}

impl NanowireGeometry {
    pub fn new(width: f64, length: f64, thickness: f64) -> Result<Self> {
        ensure_positive(&[("width", width), ("length", length), ("thickness", thickness)])?;
        Ok(NanowireGeometry {
            width,
            length,
            thickness,
        })
    }

    /// Square footprint (`l = w`).
    pub fn square(side: f64, thickness: f64) -> Result<Self> {
        Self::new(side, side, thickness)
    }

    pub fn volume(&self) -> f64 {
        self.width * self.length * self.thickness
    }

    /// Number of squares along the current path.
    pub fn squares(&self) -> f64 {
        self.length / self.width
    }
}

/// Convention for the thermal quasiparticle factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThermalConvention {
    /// `exp(-2Δ / k_B T)`.
    #[default]
    PairGap,
    /// `exp(-Δ / k_B T)`, single-quasiparticle Boltzmann factor.
    SingleGap,
}

impl Material {
    /// Validated constructor in SI units.
    pub fn new(
        name: impl Into<String>,
        tc: f64,
        delta: f64,
        n0: Option<f64>,
        rho_n: Option<f64>,
        xi: f64,
    ) -> Result<Self> {
        let name = name.into();
        let mut problems = Vec::new();
        if !(tc.is_finite() && tc > 0.0) {
            problems.push(format!("Tc must be positive, got {tc}"));
        }
        if !(delta.is_finite() && delta > 0.0) {
            problems.push(format!("Delta must be positive, got {delta}"));
        }
        if let Some(n) = n0.filter(|n| !(n.is_finite() && *n > 0.0)) {
            problems.push(format!("N0 must be positive, got {n}"));
        }
        if let Some(r) = rho_n.filter(|r| !(r.is_finite() && *r > 0.0)) {
            problems.push(format!("rho_n must be positive, got {r}"));
        }
        if !(xi > 0.0 && xi <= 1.0) {
            problems.push(format!("xi must lie in (0, 1], got {xi}"));
        }
        if !problems.is_empty() {
            return Err(Error::Domain(format!("material `{name}`: {}", problems.join("; "))));
        }
        Ok(Material {
            name,
            tc,
            delta,
            n0,
            rho_n,
            xi,
        })
    }

    /// Constructor in laboratory units: Δ in meV, N(0) in eV⁻¹·µm⁻³,
    /// ρ_n in µΩ·cm.
    pub fn from_lab_units(
        name: impl Into<String>,
        tc_k: f64,
        delta_mev: f64,
        n0_ev_um3: Option<f64>,
        rho_n_uohm_cm: Option<f64>,
        xi: f64,
    ) -> Result<Self> {
        Self::new(
            name,
            tc_k,
            delta_mev * MEV,
            n0_ev_um3.map(constants::dos_from_ev_um3),
            rho_n_uohm_cm.map(constants::resistivity_from_uohm_cm),
            xi,
        )
    }

    /// Thin-film TiN: N(0) = 8.7×10⁹ eV⁻¹µm⁻³, Δ = 0.5 meV.
    /// T_c is the BCS estimate Δ/(1.764 k_B) ≈ 3.3 K.
    pub fn tin() -> Self {
        Self::builtin("TiN", None, 0.5, Some(8.7e9))
    }

    /// Thin-film NbN: N(0) = 2×10¹⁰ eV⁻¹µm⁻³, Δ = 1.1 meV.
    /// T_c is the BCS estimate ≈ 7.2 K.
    pub fn nbn() -> Self {
        Self::builtin("NbN", None, 1.1, Some(2e10))
    }

    /// NbTiN with T_c = 15 K and Δ set by a 1.4 THz gap frequency.
    /// No density of states is shipped.
    pub fn nbtin() -> Self {
        Self::builtin("NbTiN", Some(15.0), gap_from_frequency(1.4e12) / MEV, None)
    }

    /// Aluminium with a 90 GHz gap frequency (Δ ≈ 0.186 meV) and T_c = 1.2 K.
    pub fn al() -> Self {
        Self::builtin("Al", Some(1.2), gap_from_frequency(90e9) / MEV, None)
    }

    // Resistivities are deliberately left unset. Typical thin-film values for
    // reference only: TiN ~100 µΩ·cm, NbN ~200 µΩ·cm, NbTiN ~100 µΩ·cm,
    // Al ~1 µΩ·cm.
    fn builtin(name: &str, tc: Option<f64>, delta_mev: f64, n0: Option<f64>) -> Self {
        let delta = delta_mev * MEV;
        let tc = tc.unwrap_or(delta / (BCS_GAP_RATIO * K_B));
        Material::new(name, tc, delta, n0.map(constants::dos_from_ev_um3), None, DEFAULT_XI)
            .expect("built-in material parameters are valid")
    }

    pub fn builtins() -> Vec<Material> {
        vec![Self::tin(), Self::nbn(), Self::nbtin(), Self::al()]
    }

    pub fn with_rho_n(mut self, rho_n: f64) -> Result<Self> {
        ensure_positive(&[("rho_n", rho_n)])?;
        self.rho_n = Some(rho_n);
        Ok(self)
    }

    /// Pair-breaking threshold `2Δ/h`, Hz.
    pub fn gap_frequency(&self) -> f64 {
        2.0 * self.delta / H
    }

    fn require_rho_n(&self) -> Result<f64> {
        self.rho_n.ok_or_else(|| Error::IncompleteMaterial {
            material: self.name.clone(),
            field: "rho_n",
        })
    }

    fn require_n0(&self) -> Result<f64> {
        self.n0.ok_or_else(|| Error::IncompleteMaterial {
            material: self.name.clone(),
            field: "N0",
        })
    }

    /// Depairing-scale current density `J* = √(π N(0) Δ³ / ħ ρ_n)`, A/m².
    pub fn jstar(&self) -> Result<f64> {
        let rho = self.require_rho_n()?;
        let n0 = self.require_n0()?;
        Ok((PI * n0 * self.delta.powi(3) / (HBAR * rho)).sqrt())
    }

    /// Characteristic current `I* = J* w t`.
    pub fn istar(&self, geometry: &NanowireGeometry) -> Result<f64> {
        Ok(self.jstar()? * geometry.width * geometry.thickness)
    }

    /// Sheet kinetic inductance `L_s = ħ R_s / πΔ` with `R_s = ρ_n / t`, H/□.
    pub fn sheet_inductance(&self, thickness: f64) -> Result<f64> {
        ensure_positive(&[("thickness", thickness)])?;
        let rho = self.require_rho_n()?;
        Ok(HBAR * rho / (PI * self.delta * thickness))
    }

    /// `(L0k, I*)` of a nanowire whose inductance is purely kinetic.
    pub fn nanowire_lumped(&self, geometry: &NanowireGeometry) -> Result<(f64, f64)> {
        let l0k = self.sheet_inductance(geometry.thickness)? * geometry.squares();
        Ok((l0k, self.istar(geometry)?))
    }

    /// Relative anharmonicity from the nanowire volume,
    /// `α = 3 h f_r / (2 N(0) Δ² V)`. Independent of ρ_n.
    pub fn alpha_volume(&self, f_r: f64, volume: f64) -> Result<f64> {
        ensure_positive(&[("f_r", f_r), ("volume", volume)])?;
        Ok(3.0 * H * f_r / (2.0 * self.condensation_energy_density()? * volume))
    }

    /// `N(0) Δ²`, J/m³.
    pub fn condensation_energy_density(&self) -> Result<f64> {
        Ok(self.require_n0()? * self.delta * self.delta)
    }

    pub fn qp_thermal_factor(&self, temperature: f64, convention: ThermalConvention) -> Result<f64> {
        ensure_positive(&[("T", temperature)])?;
        let gap = match convention {
            ThermalConvention::PairGap => 2.0 * self.delta,
            ThermalConvention::SingleGap => self.delta,
        };
        Ok((-gap / (K_B * temperature)).exp())
    }

    /// Mean quasiparticles per absorbed phonon, `ξ h ν / Δ`.
    pub fn qp_per_phonon(&self, nu: f64, validity: Validity) -> Result<f64> {
        ensure_positive(&[("nu", nu)])?;
        let energy = H * nu;
        validity.check(energy > 2.0 * self.delta, || {
            format!(
                "phonon at {nu:e} Hz is below the pair-breaking threshold 2Delta/h = {:e} Hz",
                self.gap_frequency()
            )
        })?;
        Ok(self.xi * energy / self.delta)
    }
}

/// Relative recombination-rate factor `(T_c / T_c,ref)⁻³`.
pub fn recombination_scaling(tc_ref: f64, tc: f64) -> Result<f64> {
    ensure_positive(&[("Tc_ref", tc_ref), ("Tc", tc)])?;
    Ok((tc / tc_ref).powi(-3))
}

/// Δ giving the requested gap frequency `2Δ/h`, J.
pub fn gap_from_frequency(gap_frequency: f64) -> f64 {
    0.5 * H * gap_frequency
}

/// Immutable-after-load set of named materials.
#[derive(Debug, Clone)]
pub struct MaterialRegistry {
    materials: Vec<Material>,
}

impl Default for MaterialRegistry {
    fn default() -> Self {
        MaterialRegistry {
            materials: Material::builtins(),
        }
    }
}

impl MaterialRegistry {
    pub fn empty() -> Self {
        MaterialRegistry { materials: Vec::new() }
    }

    /// Adds or replaces (by case-insensitive name) a material.
    pub fn insert(&mut self, material: Material) {
        match self
            .materials
            .iter_mut()
            .find(|m| m.name.eq_ignore_ascii_case(&material.name))
        {
            Some(slot) => *slot = material,
            None => self.materials.push(material),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownMaterial {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.materials.iter().map(|m| m.name.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }
}
