//! Spectral stability analysis of the synchronized state.

use super::coupling::CouplingMatrix;
use crate::error::{Error, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric row-major matrix by cyclic Jacobi rotations,
/// sorted in descending order. Iterates until the off-diagonal Frobenius norm
/// is below `1e-10` (relative to the matrix norm when that exceeds one).
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: matrix.len(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[i * n + j] - matrix[j * n + i]).abs();
            if gap > 0.0 {
                return Err(Error::NonSymmetric { row: i, col: j, gap });
            }
        }
    }
    let mut a = matrix.to_vec();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Descending spectrum of a coupling Laplacian; the largest value is 0.
pub fn laplacian_spectrum(coupling: &CouplingMatrix) -> Result<Vec<f64>> {
    symmetric_eigenvalues(coupling.entries(), coupling.size())
}

/// Critical coupling `eps0 = L_g / (-lambda_2)` for identity linking.
pub fn critical_coupling(coupling: &CouplingMatrix, largest_lyapunov: f64) -> Result<f64> {
    let spectrum = laplacian_spectrum(coupling)?;
    critical_coupling_from_spectrum(&spectrum, largest_lyapunov)
}

pub fn critical_coupling_from_spectrum(spectrum: &[f64], largest_lyapunov: f64) -> Result<f64> {
    let lambda2 = spectrum.get(1).copied().unwrap_or(0.0);
    let scale = spectrum.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if lambda2 >= -1e-9 * scale {
        return Err(Error::DisconnectedGraph { lambda2 });
    }
    Ok(largest_lyapunov / -lambda2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_graph(n: usize) -> CouplingMatrix {
        let mut e = vec![1.0; n * n];
        for i in 0..n {
            e[i * n + i] = -((n - 1) as f64);
        }
        CouplingMatrix::from_dense(n, e).unwrap()
    }

    /// det(A - x I) by cofactor expansion, for tiny matrices.
    fn char_poly(a: &[f64], n: usize, x: f64) -> f64 {
        fn det(m: &[f64], n: usize) -> f64 {
            if n == 1 {
                return m[0];
            }
            (0..n)
                .map(|c| {
                    let minor: Vec<f64> = (1..n)
                        .flat_map(|r| (0..n).filter(move |&k| k != c).map(move |k| m[r * n + k]))
                        .collect();
                    let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                    sign * m[c] * det(&minor, n - 1)
                })
                .sum()
        }
        let mut m = a.to_vec();
        for i in 0..n {
            m[i * n + i] -= x;
        }
        det(&m, n)
    }

    #[test]
    fn one_by_one() {
        let a = CouplingMatrix::from_dense(1, vec![0.0]).unwrap();
        assert_eq!(laplacian_spectrum(&a).unwrap(), vec![0.0]);
    }

    #[test]
    fn complete_graph_spectrum() {
        for n in 2..=6 {
            let a = complete_graph(n);
            let eig = laplacian_spectrum(&a).unwrap();
            assert!(eig[0].abs() < 1e-10);
            for v in &eig[1..] {
                assert!((v + n as f64).abs() < 1e-10, "{eig:?}");
            }
            if n <= 4 {
                for &v in &eig {
                    assert!(char_poly(a.entries(), n, v).abs() < 1e-8);
                }
                assert!(char_poly(a.entries(), n, -(n as f64)).abs() < 1e-9);
                assert!(char_poly(a.entries(), n, 0.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn disconnected_components() {
        let w = 0.5;
        let e = vec![
            -w, w, 0.0, 0.0, //
            w, -w, 0.0, 0.0, //
            0.0, 0.0, -w, w, //
            0.0, 0.0, w, -w,
        ];
        let a = CouplingMatrix::from_dense(4, e).unwrap();
        let eig = laplacian_spectrum(&a).unwrap();
        assert_eq!(eig.iter().filter(|v| v.abs() < 1e-10).count(), 2);
        assert!(matches!(critical_coupling(&a, 0.9), Err(Error::DisconnectedGraph { .. })));
    }

    #[test]
    fn critical_coupling_complete_graph() {
        for n in 2..=5 {
            let a = complete_graph(n);
            assert!((critical_coupling(&a, 0.9).unwrap() - 0.9 / n as f64).abs() < 1e-10);
            assert_eq!(critical_coupling(&a, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_nonsymmetric() {
        let err = symmetric_eigenvalues(&[1.0, 2.0, 3.0, 4.0], 2).unwrap_err();
        assert!(matches!(err, Error::NonSymmetric { .. }));
    }

    #[test]
    fn matches_closed_form_two_by_two() {
        let (a, b, c) = (2.0, 0.7, -1.5);
        let eig = symmetric_eigenvalues(&[a, b, b, c], 2).unwrap();
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((eig[0] - (mid + rad)).abs() < 1e-12);
        assert!((eig[1] - (mid - rad)).abs() < 1e-12);
    }
}
