//! Dense real symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-style shifts (the classic `tred2`/`tql2` pair).
//! Eigenvalues come back sorted ascending; eigenvectors, when requested, are
//! the matching columns of an orthogonal matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated on input.
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// Largest `‖Hv − λv‖ / ‖H‖` over all returned pairs (Frobenius norm of `H`).
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        let scale = h.norm().max(f64::MIN_POSITIVE);
        (0..self.values.len())
            .map(|k| {
                let v = self.vectors.column(k);
                (h * v - v * self.values[k]).norm() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eig_sym(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(h)?;
    let (values, _) = decompose(h, false)?;
    Ok(values)
}

/// Eigenvalues and eigenvectors of a real symmetric matrix.
pub fn eig_sym_vectors(h: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_symmetric(h)?;
    let (values, vectors) = decompose(h, true)?;
    Ok(SymmetricEigen { values, vectors })
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Domain(format!(
            "matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let scale = h.amax();
    if scale == 0.0 {
        return Ok(());
    }
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    let rel = worst / scale;
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(rel));
    }
    Ok(())
}

fn decompose(h: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    // Work on the symmetrized matrix so tiny asymmetries cannot leak in.
    let mut v = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, want_vectors);
    tql(&mut v, &mut d, &mut e, want_vectors)?;
    sort_ascending(&mut d, &mut v, want_vectors);
    Ok((d, v))
}

/// Householder reduction. On exit `d` holds the diagonal, `e[1..]` the
/// subdiagonal, and `v` the accumulated orthogonal transform.
fn tridiagonalize(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e[..i].iter_mut() {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if want_vectors && h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal (d, e).
fn tql(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64], want_vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= f64::EPSILON * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] == 0, so m < n always holds here.
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNoConvergence(MAX_QL_ITERATIONS));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d[(l + 2)..].iter_mut() {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let hk = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * hk;
                            v[(k, i)] = c * v[(k, i)] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_ascending(d: &mut [f64], v: &mut DMatrix<f64>, want_vectors: bool) {
    let n = d.len();
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if want_vectors {
                v.swap_columns(i, k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_two_by_two() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(eig_sym(&h).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn swap_matrix() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let vals = eig_sym(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15);
        assert!((vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_by_one_and_empty() {
        let h = DMatrix::from_element(1, 1, 3.5);
        assert_eq!(eig_sym(&h).unwrap(), vec![3.5]);
        assert!(eig_sym(&DMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_sym(&h), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn non_square_rejected() {
        let h = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eig_sym(&h), Err(Error::Domain(_))));
    }

    #[test]
    fn vectors_are_orthonormal_with_small_residual() {
        let n = 9;
        let h = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let eig = eig_sym_vectors(&h).unwrap();
        assert!(eig.max_residual(&h) < 1e-12);
        let gram = eig.vectors.transpose() * &eig.vectors;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-13);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn repeated_eigenvalues() {
        let mut h = DMatrix::identity(5, 5) * 2.0;
        h[(0, 0)] = -1.0;
        let eig = eig_sym_vectors(&h).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 2.0, 2.0, 2.0]);
        assert!(eig.max_residual(&h) < 1e-15);
    }
}
