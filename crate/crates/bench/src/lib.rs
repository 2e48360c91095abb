//! Shared inputs for the benchmarks.

use std::collections::BTreeMap;

use kineticon::sweep::{AlphaMethod, AxisSpec, Scale, SCHEMA_VERSION};
use kineticon::{build_hamiltonian, ResonatorDesign, ResonatorNetwork, SweepConfig, SweepMode};

/// `f_r = 100 GHz`, `L = 1 nH`, `I* = 10 µA`.
pub const F_R: f64 = 100e9;
pub const LAMBDA: f64 = -3.313_035_075e-4;

/// Oscillator Hamiltonian at the reference point.
pub fn hamiltonian(dim: usize) -> nalgebra::DMatrix<f64> {
    build_hamiltonian(F_R, LAMBDA, dim).expect("valid reference point")
}

/// `alpha_vs_L_Istar` over an `n × n` log grid.
pub fn alpha_grid(n: usize, diagonalize: bool) -> SweepConfig {
    let axis = |name: &str, start, stop| AxisSpec {
        name: name.into(),
        start,
        stop,
        points: n,
        scale: Scale::Log,
    };
    SweepConfig {
        schema_version: SCHEMA_VERSION,
        mode: SweepMode::AlphaVsLIstar,
        axes: vec![axis("L_nH", 0.1, 10.0), axis("Istar_uA", 1.0, 100.0)],
        fixed: BTreeMap::from([("f_r_GHz".to_string(), 100.0)]),
        materials: Vec::new(),
        output: None,
        network: None,
        method: if diagonalize {
            AlphaMethod::Diagonalization
        } else {
            AlphaMethod::Perturbative
        },
        dim: None,
        kerr: Default::default(),
        strict: false,
    }
}

/// Default half-wave readout resonator.
pub fn resonator() -> ResonatorNetwork {
    ResonatorDesign::default().build().expect("default design builds")
}
