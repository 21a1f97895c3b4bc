//! Small dense matrix kernels for the pointwise `n x n` operations.
//!
//! Matrices are row-major `&[f64]` slices of length `n*n`. The `n = 2` paths
//! are closed-form because they run once per grid point per step; a one-sided
//! Jacobi SVD backs the general case.

/// Singular value decomposition `a = u * diag(sigma) * v^t`.
///
/// `sigma` is sorted descending and nonnegative; `u` and `v` have orthonormal
/// columns (determinant +1 or -1).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
}

#[inline]
pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

#[inline]
pub fn frobenius_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `out = a * b` for row-major `n x n` matrices.
pub fn matmul(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// `out = a^t * a`.
pub fn gram(a: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[k * n + i] * a[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

/// Determinant; closed form up to `n = 3`, LU with partial pivoting beyond.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            let mut lu = a.to_vec();
            let mut det = 1.0;
            for col in 0..n {
                let mut piv = col;
                for row in col + 1..n {
                    if lu[row * n + col].abs() > lu[piv * n + col].abs() {
                        piv = row;
                    }
                }
                if lu[piv * n + col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    for k in 0..n {
                        lu.swap(col * n + k, piv * n + k);
                    }
                    det = -det;
                }
                let d = lu[col * n + col];
                det *= d;
                for row in col + 1..n {
                    let f = lu[row * n + col] / d;
                    for k in col..n {
                        lu[row * n + k] -= f * lu[col * n + k];
                    }
                }
            }
            det
        }
    }
}

#[inline]
fn rotation2(theta: f64) -> [f64; 4] {
    let (s, c) = theta.sin_cos();
    [c, -s, s, c]
}

/// Closed-form SVD of a 2x2 matrix.
///
/// Splits `a` into its rotation part `q*R(phi2)` and reflection part
/// `r*Ref(phi1)`; the singular values are `q + r` and `|q - r|` and the
/// factor angles are half-sums of `phi1`, `phi2`.
pub fn svd2(a: &[f64]) -> Svd {
    let (m00, m01, m10, m11) = (a[0], a[1], a[2], a[3]);
    let e = 0.5 * (m00 + m11);
    let f = 0.5 * (m00 - m11);
    let g = 0.5 * (m10 + m01);
    let h = 0.5 * (m10 - m01);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let s1 = q + r;
    let s2 = q - r;
    let phi2 = h.atan2(e);
    let phi1 = g.atan2(f);
    let alpha = 0.5 * (phi1 + phi2);
    let beta = 0.5 * (phi1 - phi2);
    let u = rotation2(alpha);
    let mut v = rotation2(beta);
    let sigma = if s2 >= 0.0 {
        [s1, s2]
    } else {
        // fold diag(1,-1) into v so sigma stays nonnegative
        v[1] = -v[1];
        v[3] = -v[3];
        [s1, -s2]
    };
    Svd { u: u.to_vec(), sigma: sigma.to_vec(), v: v.to_vec() }
}

/// One-sided Jacobi SVD for general `n`; used as the fallback and as the
/// reference routine in tests.
pub fn svd_jacobi(a: &[f64], n: usize) -> Svd {
    let mut w = a.to_vec(); // columns converge to u_i * sigma_i
    let mut v = identity(n);
    let eps = f64::EPSILON;
    for _sweep in 0..60 {
        let mut converged = true;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for k in 0..n {
                    let wp = w[k * n + p];
                    let wq = w[k * n + q];
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() + f64::MIN_POSITIVE {
                    continue;
                }
                converged = false;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let wp = w[k * n + p];
                    let wq = w[k * n + q];
                    w[k * n + p] = c * wp - s * wq;
                    w[k * n + q] = s * wp + c * wq;
                    let vp = v[k * n + p];
                    let vq = v[k * n + q];
                    v[k * n + p] = c * vp - s * vq;
                    v[k * n + q] = s * vp + c * vq;
                }
            }
        }
        if converged {
            break;
        }
    }
    let mut sigma = vec![0.0; n];
    let mut u = vec![0.0; n * n];
    for col in 0..n {
        let mut norm = 0.0;
        for k in 0..n {
            norm += w[k * n + col] * w[k * n + col];
        }
        let norm = norm.sqrt();
        sigma[col] = norm;
        if norm > 0.0 {
            for k in 0..n {
                u[k * n + col] = w[k * n + col] / norm;
            }
        }
    }
    // complete u columns lost to zero singular values
    for col in 0..n {
        if sigma[col] > 0.0 {
            continue;
        }
        for cand in 0..n {
            let mut e = vec![0.0; n];
            e[cand] = 1.0;
            for other in 0..n {
                if other == col || sigma[other] == 0.0 && other > col {
                    continue;
                }
                let mut dot = 0.0;
                for k in 0..n {
                    dot += e[k] * u[k * n + other];
                }
                for k in 0..n {
                    e[k] -= dot * u[k * n + other];
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                for k in 0..n {
                    u[k * n + col] = e[k] / norm;
                }
                break;
            }
        }
    }
    // sort descending, permuting u and v columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut su = vec![0.0; n * n];
    let mut sv = vec![0.0; n * n];
    let mut ss = vec![0.0; n];
    for (new, &old) in order.iter().enumerate() {
        ss[new] = sigma[old];
        for k in 0..n {
            su[k * n + new] = u[k * n + old];
            sv[k * n + new] = v[k * n + old];
        }
    }
    Svd { u: su, sigma: ss, v: sv }
}

pub fn svd(a: &[f64], n: usize) -> Svd {
    match n {
        1 => {
            let s = a[0].abs();
            let u = if a[0] < 0.0 { vec![-1.0] } else { vec![1.0] };
            Svd { u, sigma: vec![s], v: vec![1.0] }
        }
        2 => svd2(a),
        _ => svd_jacobi(a, n),
    }
}

/// Singular values only, descending.
pub fn singular_values(a: &[f64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![a[0].abs()],
        2 => svd2(a).sigma,
        _ => svd_jacobi(a, n).sigma,
    }
}

/// Smallest singular value.
pub fn min_singular_value(a: &[f64], n: usize) -> f64 {
    *singular_values(a, n).last().unwrap()
}

/// Nearest orthogonal matrix `u * v^t` from the SVD; the caller guarantees
/// nonsingularity (the value is otherwise not unique).
pub fn orthogonal_polar_factor(a: &[f64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![if a[0] < 0.0 { -1.0 } else { 1.0 }],
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            if det >= 0.0 {
                // nearest rotation
                let e = a[0] + a[3];
                let h = a[2] - a[1];
                let norm = e.hypot(h);
                vec![e / norm, -h / norm, h / norm, e / norm]
            } else {
                // nearest reflection
                let f = a[0] - a[3];
                let g = a[2] + a[1];
                let norm = f.hypot(g);
                vec![f / norm, g / norm, g / norm, -f / norm]
            }
        }
        _ => {
            let Svd { u, v, .. } = svd_jacobi(a, n);
            let vt = transpose(&v, n);
            let mut out = vec![0.0; n * n];
            matmul(&u, &vt, n, &mut out);
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(svd: &Svd, n: usize) -> Vec<f64> {
        let mut us = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                us[i * n + j] = svd.u[i * n + j] * svd.sigma[j];
            }
        }
        let vt = transpose(&svd.v, n);
        let mut out = vec![0.0; n * n];
        matmul(&us, &vt, n, &mut out);
        out
    }

    fn orthogonality_defect(m: &[f64], n: usize) -> f64 {
        let mut g = vec![0.0; n * n];
        gram(m, n, &mut g);
        for i in 0..n {
            g[i * n + i] -= 1.0;
        }
        frobenius_norm(&g)
    }

    #[test]
    fn svd2_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = svd2(&a);
            let r = reconstruct(&s, 2);
            for k in 0..4 {
                assert!((r[k] - a[k]).abs() < 1e-12, "reconstruction failed: {a:?}");
            }
            assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= 0.0);
            assert!(orthogonality_defect(&s.u, 2) < 1e-13);
            assert!(orthogonality_defect(&s.v, 2) < 1e-13);
        }
    }

    #[test]
    fn svd2_agrees_with_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s2 = svd2(&a);
            let sj = svd_jacobi(&a, 2);
            assert!((s2.sigma[0] - sj.sigma[0]).abs() < 1e-10);
            assert!((s2.sigma[1] - sj.sigma[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_handles_larger_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [3usize, 4, 5] {
            for _ in 0..200 {
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = svd_jacobi(&a, n);
                let r = reconstruct(&s, n);
                for k in 0..n * n {
                    assert!((r[k] - a[k]).abs() < 1e-10);
                }
                assert!(orthogonality_defect(&s.u, n) < 1e-10);
                assert!(orthogonality_defect(&s.v, n) < 1e-10);
            }
        }
    }

    #[test]
    fn polar_factor_of_diagonal_stretch_is_identity() {
        let q = orthogonal_polar_factor(&[2.0, 0.0, 0.0, 0.5], 2);
        let expect = [1.0, 0.0, 0.0, 1.0];
        for k in 0..4 {
            assert!((q[k] - expect[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn polar_factor_preserves_negative_determinant() {
        let q = orthogonal_polar_factor(&[0.0, 2.0, 1.0, 0.0], 2);
        let expect = [0.0, 1.0, 1.0, 0.0];
        for k in 0..4 {
            assert!((q[k] - expect[k]).abs() < 1e-15);
        }
        assert!(determinant(&q, 2) < 0.0);
    }

    #[test]
    fn polar_factor_matches_svd_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5000 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            if min_singular_value(&a, 2) < 1e-6 {
                continue;
            }
            let q = orthogonal_polar_factor(&a, 2);
            let s = svd2(&a);
            let vt = transpose(&s.v, 2);
            let mut uvt = vec![0.0; 4];
            matmul(&s.u, &vt, 2, &mut uvt);
            for k in 0..4 {
                assert!((q[k] - uvt[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn polar_factor_preserves_det_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 10_000 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            if min_singular_value(&a, 2) < 1e-9 {
                continue;
            }
            let q = orthogonal_polar_factor(&a, 2);
            assert_eq!(
                determinant(&a, 2) > 0.0,
                determinant(&q, 2) > 0.0,
                "det sign flipped for {a:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&[3.0], 1), 3.0);
        assert_eq!(determinant(&[1.0, 2.0, 3.0, 4.0], 2), -2.0);
        let m4 = identity(4);
        assert!((determinant(&m4, 4) - 1.0).abs() < 1e-15);
        // block diag(2x2 swap, 2x2 identity) has det -1
        let mut m = identity(4);
        m[0] = 0.0;
        m[1] = 1.0;
        m[4] = 1.0;
        m[5] = 0.0;
        assert!((determinant(&m, 4) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_svd_still_orthogonal() {
        // rank-1 matrix
        let a = [1.0, 2.0, 2.0, 4.0];
        let s = svd(&a, 2);
        assert!(s.sigma[1].abs() < 1e-12);
        assert!(orthogonality_defect(&s.u, 2) < 1e-12);
        let r = reconstruct(&s, 2);
        for k in 0..4 {
            assert!((r[k] - a[k]).abs() < 1e-12);
        }
    }
}
