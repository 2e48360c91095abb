//! Truncated Fock-space model of the weakly anharmonic oscillator
//!
//! `H/h = f_r [a†a + 1/2 + (λ/4)(a† + a)⁴]`
//!
//! All matrices are expressed in frequency units (H/h, hertz), which keeps the
//! entries near the GHz scale instead of ħ-scale joules.

use nalgebra::DMatrix;

use crate::eigen::eig_sym;
use crate::error::{ensure_finite, ensure_positive, Error, Result, Validity};

/// Default Fock truncation.
pub const DEFAULT_DIM: usize = 40;
/// Truncation increment used by the convergence re-check.
pub const RECHECK_STEP: usize = 10;
/// Maximum relative change of the checked levels between `dim` and `dim + 10`.
pub const CONVERGENCE_TOL: f64 = 1e-9;
/// Number of lowest levels that must be converged (they define f01 and f12).
pub const CHECKED_LEVELS: usize = 3;
/// Above this |λ| the weak-anharmonic expansion is no longer trusted.
pub const LAMBDA_VALIDITY: f64 = 1e-2;

/// Truncated annihilation and creation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOps {
    pub dim: usize,
    /// `a[(n-1, n)] = √n`.
    pub a: DMatrix<f64>,
    pub adag: DMatrix<f64>,
}

impl LadderOps {
    /// `[a, a†]`; equals the identity except for the `1 - dim` corner left
    /// by the truncation.
    pub fn commutator(&self) -> DMatrix<f64> {
        &self.a * &self.adag - &self.adag * &self.a
    }

    /// `a + a†`, the reduced flux operator.
    pub fn position(&self) -> DMatrix<f64> {
        &self.a + &self.adag
    }
}

pub fn build_ladder_ops(dim: usize) -> Result<LadderOps> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    let a = DMatrix::from_fn(dim, dim, |m, n| if n == m + 1 { (n as f64).sqrt() } else { 0.0 });
    let adag = a.transpose();
    Ok(LadderOps { dim, a, adag })
}

/// Matrix of `(a + a†)⁴` restricted to the lowest `dim` Fock states.
///
/// The power is taken in a space padded by four levels so every retained
/// element equals the untruncated operator's matrix element.
pub fn quartic_matrix(dim: usize) -> Result<DMatrix<f64>> {
    let ops = build_ladder_ops(dim + 4)?;
    let x = ops.position();
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    Ok(x4.view((0, 0), (dim, dim)).into_owned())
}

/// `H/h` of the quartic oscillator in the Fock basis, entries in hertz.
pub fn build_hamiltonian(f_r: f64, lambda: f64, dim: usize) -> Result<DMatrix<f64>> {
    ensure_finite(&[("f_r", f_r), ("lambda", lambda)])?;
    ensure_positive(&[("f_r", f_r)])?;
    if dim < 4 {
        return Err(Error::InvalidDimension { dim, min: 4 });
    }
    let x4 = quartic_matrix(dim)?;
    let mut h = x4 * (0.25 * lambda * f_r);
    for n in 0..dim {
        h[(n, n)] += f_r * (n as f64 + 0.5);
    }
    // Exact symmetry regardless of rounding in the products.
    let h = DMatrix::from_fn(dim, dim, |i, j| if i <= j { h[(i, j)] } else { h[(j, i)] });
    Ok(h)
}

/// Energy levels and transition frequencies of the truncated oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSpectrum {
    pub dim: usize,
    /// Ascending `E_n / h` in hertz.
    pub levels: Vec<f64>,
    pub f01: f64,
    pub f12: f64,
    /// `|f01 - f12| / f01`.
    pub alpha_rel: f64,
    /// `|f01 - f12|` in hertz.
    pub alpha_abs: f64,
}

impl FockSpectrum {
    fn from_levels(dim: usize, levels: Vec<f64>) -> Self {
        let f01 = levels[1] - levels[0];
        let f12 = levels[2] - levels[1];
        let alpha_abs = (f01 - f12).abs();
        FockSpectrum {
            dim,
            levels,
            f01,
            f12,
            alpha_rel: alpha_abs / f01,
            alpha_abs,
        }
    }

    /// Transition frequency `E_{n+1} - E_n`.
    pub fn transition(&self, n: usize) -> Option<f64> {
        Some(self.levels.get(n + 1)? - self.levels.get(n)?)
    }
}

/// Diagonalizes the quartic oscillator, re-checking convergence at `dim + 10`.
pub fn spectrum(f_r: f64, lambda: f64, dim: usize) -> Result<FockSpectrum> {
    spectrum_with(f_r, lambda, dim, Validity::Soft)
}

pub fn spectrum_with(f_r: f64, lambda: f64, dim: usize, validity: Validity) -> Result<FockSpectrum> {
    validity.check(lambda.abs() < LAMBDA_VALIDITY, || {
        format!(
            "|lambda| = {:e} outside the weak-anharmonic regime (< {LAMBDA_VALIDITY:e})",
            lambda.abs()
        )
    })?;
    if lambda.abs() * (dim * dim) as f64 > 10.0 {
        log::warn!(
            "|lambda|*dim^2 = {:.3}: high Fock states are strongly perturbed, relying on the convergence re-check",
            lambda.abs() * (dim * dim) as f64
        );
    }
    spectrum_quiet(f_r, lambda, dim)
}

/// [`spectrum`] without the validity check or warnings; sweeps report
/// out-of-range points once instead of per point.
pub(crate) fn spectrum_quiet(f_r: f64, lambda: f64, dim: usize) -> Result<FockSpectrum> {
    let levels = eig_sym(&build_hamiltonian(f_r, lambda, dim)?)?;
    let larger = eig_sym(&build_hamiltonian(f_r, lambda, dim + RECHECK_STEP)?)?;
    let rel_change = levels
        .iter()
        .zip(&larger)
        .take(CHECKED_LEVELS)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    if !(rel_change <= CONVERGENCE_TOL) {
        return Err(Error::Convergence { dim, rel_change });
    }
    Ok(FockSpectrum::from_levels(dim, levels))
}

/// First-order perturbative level `E_n/h = f_r[n + 1/2 + (λ/4)(6n² + 6n + 3)]`.
///
/// Closed form with no truncation; used as the oracle for [`spectrum`].
pub fn perturbative_level(f_r: f64, lambda: f64, n: u32) -> Result<f64> {
    ensure_finite(&[("f_r", f_r), ("lambda", lambda)])?;
    let n = f64::from(n);
    Ok(f_r * (n + 0.5 + 0.25 * lambda * (6.0 * n * n + 6.0 * n + 3.0)))
}

/// First-order transition `f_{n→n+1} = f_r(1 + 3λ(n+1))`.
pub fn perturbative_transition(f_r: f64, lambda: f64, n: u32) -> Result<f64> {
    Ok(perturbative_level(f_r, lambda, n + 1)? - perturbative_level(f_r, lambda, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GHZ: f64 = 1e9;

    #[test]
    fn ladder_smallest() {
        let ops = build_ladder_ops(2).unwrap();
        assert_eq!(ops.a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(ops.adag, ops.a.transpose());
    }

    #[test]
    fn ladder_dim3_element() {
        let ops = build_ladder_ops(3).unwrap();
        assert!((ops.a[(1, 2)] - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn ladder_commutator_dim4() {
        let c = build_ladder_ops(4).unwrap().commutator();
        let diag: Vec<f64> = (0..4).map(|i| c[(i, i)].round()).collect();
        assert_eq!(diag, vec![1.0, 1.0, 1.0, -3.0]);
    }

    #[test]
    fn ladder_rejects_dim_one() {
        assert_eq!(
            build_ladder_ops(1).unwrap_err(),
            Error::InvalidDimension { dim: 1, min: 2 }
        );
    }

    #[test]
    fn harmonic_hamiltonian_diagonal() {
        let h = build_hamiltonian(100.0 * GHZ, 0.0, 6).unwrap();
        let diag: Vec<f64> = (0..6).map(|i| h[(i, i)] / GHZ).collect();
        assert_eq!(diag, vec![50.0, 150.0, 250.0, 350.0, 450.0, 550.0]);
        assert_eq!(h.clone() - DMatrix::from_diagonal(&h.diagonal()), DMatrix::zeros(6, 6));
    }

    #[test]
    fn ground_diagonal_element() {
        let h = build_hamiltonian(100.0 * GHZ, -1e-3, 40).unwrap();
        assert!((h[(0, 0)] - 49.925 * GHZ).abs() < 1e-3);
    }

    #[test]
    fn hamiltonian_is_symmetric_and_couples_four_apart() {
        let h = build_hamiltonian(7.3 * GHZ, -4e-4, 12).unwrap();
        assert_eq!(h, h.transpose());
        assert!(h[(0, 4)] != 0.0);
        assert_eq!(h[(0, 5)], 0.0);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn quartic_padding_gives_exact_edge_elements() {
        // <n|(a+a†)^4|n> = 6n² + 6n + 3 must hold on the last retained level too.
        let dim = 8;
        let x4 = quartic_matrix(dim).unwrap();
        let n = (dim - 1) as f64;
        assert!((x4[(dim - 1, dim - 1)] - (6.0 * n * n + 6.0 * n + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_rejects_bad_input() {
        assert!(matches!(build_hamiltonian(f64::NAN, 0.0, 6), Err(Error::Domain(_))));
        assert!(matches!(
            build_hamiltonian(1.0, f64::INFINITY, 6),
            Err(Error::Domain(_))
        ));
        assert!(matches!(build_hamiltonian(-1.0, 0.0, 6), Err(Error::Domain(_))));
        assert!(matches!(
            build_hamiltonian(1.0, 0.0, 3),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn harmonic_spectrum() {
        let s = spectrum(100.0 * GHZ, 0.0, 30).unwrap();
        assert!((s.f01 - 100.0 * GHZ).abs() < 1e-3);
        assert!((s.f12 - 100.0 * GHZ).abs() < 1e-3);
        assert!(s.alpha_rel < 1e-14);
    }

    #[test]
    fn weak_anharmonicity_matches_factor_three() {
        let s = spectrum(100.0 * GHZ, -1e-4, 40).unwrap();
        assert!((s.alpha_rel - 3e-4).abs() / 3e-4 < 0.01);
    }

    #[test]
    fn first_transition_shift() {
        let s = spectrum(100.0 * GHZ, -1e-3, 60).unwrap();
        assert!((s.f01 - 99.7 * GHZ).abs() / (99.7 * GHZ) < 1e-3);
    }

    #[test]
    fn perturbative_examples() {
        assert_eq!(perturbative_level(3.0, 0.0, 4).unwrap(), 13.5);
        assert!((perturbative_level(100.0 * GHZ, -1e-3, 0).unwrap() - 49.925 * GHZ).abs() < 1e-3);
        assert!((perturbative_level(100.0 * GHZ, -1e-3, 1).unwrap() - 149.625 * GHZ).abs() < 1e-3);
        assert!(perturbative_level(f64::NAN, 0.0, 0).is_err());
    }

    #[test]
    fn strict_mode_rejects_large_lambda() {
        let err = spectrum_with(100.0 * GHZ, -2e-2, 40, Validity::Strict).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
    }

    #[test]
    fn truncation_failure_is_reported() {
        // Strong negative quartic: the truncated well is not converged.
        let err = spectrum(100.0 * GHZ, -0.05, 20).unwrap_err();
        assert!(matches!(err, Error::Convergence { dim: 20, .. }), "{err:?}");
    }
}
