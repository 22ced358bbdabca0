//! Small dense matrix helpers for pointwise metric work.
//!
//! Link dimensions are tiny (grids are capped at 3, constant-frame products
//! rarely exceed 6), so plain row-major `Vec<f64>` routines are simpler and
//! faster to audit than pulling in a linear-algebra crate.

/// Invert a square matrix (row-major, `n x n`) by Gauss-Jordan elimination
/// with partial pivoting. Returns `None` when a pivot falls below `eps`.
pub fn invert(a: &[f64], n: usize, eps: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col].abs() <= eps {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                m[row * n + k] -= factor * m[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

/// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
/// Converges to machine precision in a handful of sweeps for the tiny
/// matrices used here.
pub fn sym_min_eigenvalue(a: &[f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    if n == 1 {
        return a[0];
    }
    let mut m = a.to_vec();
    // Symmetrize defensively; callers pass symmetric data.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i * n + j].abs());
            }
        }
        let scale = (0..n).map(|i| m[i * n + i].abs()).fold(1e-300, f64::max);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}

/// Determinant by LU with partial pivoting.
pub fn det(a: &[f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut d = 1.0f64;
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            d = -d;
        }
        d *= m[col * n + col];
        let inv_p = 1.0 / m[col * n + col];
        for row in (col + 1)..n {
            let f = m[row * n + col] * inv_p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_3x3() {
        let a = [2.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 1.0];
        let inv = invert(&a, 3, 1e-14).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[i * 3 + k] * inv[k * 3 + j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "product {i}{j} = {s}");
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(invert(&a, 2, 1e-14).is_none());
    }

    #[test]
    fn min_eigenvalue_of_known_matrix() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        assert!((sym_min_eigenvalue(&a, 2) - 1.0).abs() < 1e-12);
        // Diagonal case in 3d.
        let d = [0.9, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.3];
        assert!((sym_min_eigenvalue(&d, 3) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let a = [1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 1.0, 0.0, 6.0];
        // det = 1*(24-0) - 2*(0-5) + 3*(0-4) = 24 + 10 - 12 = 22
        assert!((det(&a, 3) - 22.0).abs() < 1e-12);
    }
}
