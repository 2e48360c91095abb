//! Physical constants (CODATA 2018 exact and recommended values).

use std::f64::consts::PI;

/// Label written into sweep provenance headers.
pub const CONSTANTS_VERSION: &str = "CODATA-2018";

/// Planck constant, J·s (exact).
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = H / (2.0 * PI);
/// Elementary charge, C (exact). Also the joule value of one electron-volt.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s (exact).
pub const C_LIGHT: f64 = 299_792_458.0;

pub const EV: f64 = E_CHARGE;
pub const MEV: f64 = 1e-3 * EV;

/// Converts a density of states given in eV⁻¹·µm⁻³ to J⁻¹·m⁻³.
pub fn dos_from_ev_um3(n0: f64) -> f64 {
    n0 / EV * 1e18
}

/// Inverse of [`dos_from_ev_um3`].
pub fn dos_to_ev_um3(n0: f64) -> f64 {
    n0 * EV * 1e-18
}

/// µΩ·cm to Ω·m.
pub fn resistivity_from_uohm_cm(rho: f64) -> f64 {
    rho * 1e-8
}
