//! Design and simulation of qubits whose inductor is a superconducting
//! nanowire (kinetic inductance).
//!
//! * [`quantum`]: truncated Fock-space quartic oscillator and its eigenspectrum
//! * [`circuit`]: lumped nonlinear LC circuit and derived quantum parameters
//! * [`materials`]: superconductor records and nanowire geometry
//! * [`resonator`]: ABCD-matrix Fabry–Perot readout resonator with Kerr shift
//! * [`cavity`]: rectangular 3-D cavity modes and qubit–cavity coupling
//! * [`sweep`]: JSON-configured design-space sweeps
//! * [`export`]: result tables and their CSV / gnuplot-block forms

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod circuit;
pub mod constants;
pub mod eigen;
mod error;
pub mod export;
pub mod materials;
pub mod quantum;
pub mod resonator;
pub mod sweep;

pub use cavity::{
    dressed_spectrum, loading_for_target, mode_frequency, s21_coupled, CoupledSystem, DressedSpectrum, ModeFamily,
    RectCavity,
};
pub use circuit::{capacitor_for_frequency, DerivedCircuit, KineticonCircuit};
pub use eigen::{eig_sym, eig_sym_vectors, SymmetricEigen};
pub use error::{Error, ReasonCode, Result, Validity};
pub use export::{Cell, OutputFormat, Table};
pub use materials::{Material, MaterialRegistry, NanowireGeometry, ThermalConvention};
pub use num_complex::Complex64;
pub use quantum::{
    build_hamiltonian, build_ladder_ops, perturbative_level, spectrum, spectrum_with, FockSpectrum, LadderOps,
};
pub use resonator::{readout_ok, KerrConvention, Nanowire, ResonanceResult, ResonatorDesign, ResonatorNetwork};
pub use sweep::{parse_config, run_sweep, SweepConfig, SweepMode, SweepResult};
