//! Dense linear algebra on `D×D` arrays for the one- and two-dimensional
//! beliefs this crate handles.

use crate::scalar::Scalar;

pub type Vector<T, const D: usize> = [T; D];
pub type Matrix<T, const D: usize> = [[T; D]; D];

pub fn zeros<T: Scalar, const D: usize>() -> Matrix<T, D> {
    [[T::zero(); D]; D]
}

pub fn identity<T: Scalar, const D: usize>() -> Matrix<T, D> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_vec<T: Scalar, const D: usize>(m: &Matrix<T, D>, v: &Vector<T, D>) -> Vector<T, D> {
    let mut out = [T::zero(); D];
    for i in 0..D {
        out[i] = (0..D).map(|j| m[i][j] * v[j]).sum();
    }
    out
}

pub fn mat_mul<T: Scalar, const D: usize>(a: &Matrix<T, D>, b: &Matrix<T, D>) -> Matrix<T, D> {
    let mut out = zeros();
    for i in 0..D {
        for j in 0..D {
            out[i][j] = (0..D).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose<T: Scalar, const D: usize>(a: &Matrix<T, D>) -> Matrix<T, D> {
    let mut out = zeros();
    for i in 0..D {
        for j in 0..D {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub fn dot<T: Scalar, const D: usize>(a: &Vector<T, D>, b: &Vector<T, D>) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn sub<T: Scalar, const D: usize>(a: &Vector<T, D>, b: &Vector<T, D>) -> Vector<T, D> {
    let mut out = *a;
    for (o, &y) in out.iter_mut().zip(b) {
        *o = *o - y;
    }
    out
}

pub fn norm<T: Scalar, const D: usize>(a: &Vector<T, D>) -> T {
    dot(a, a).sqrt()
}

/// Lower Cholesky factor of a symmetric positive-definite matrix; `None` if a
/// pivot is not strictly positive.
pub fn cholesky<T: Scalar, const D: usize>(a: &Matrix<T, D>) -> Option<Matrix<T, D>> {
    let mut l = zeros::<T, D>();
    for i in 0..D {
        for j in 0..=i {
            let s: T = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let pivot = a[i][i] - s;
                if !(pivot > T::zero()) {
                    return None;
                }
                l[i][j] = pivot.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_solve<T: Scalar, const D: usize>(
    l: &Matrix<T, D>,
    b: &Vector<T, D>,
) -> Vector<T, D> {
    let mut y = [T::zero(); D];
    for i in 0..D {
        let s: T = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    y
}

/// Solves `Lᵀ x = y` for lower-triangular `L`.
pub fn backward_solve_transposed<T: Scalar, const D: usize>(
    l: &Matrix<T, D>,
    y: &Vector<T, D>,
) -> Vector<T, D> {
    let mut x = [T::zero(); D];
    for i in (0..D).rev() {
        let s: T = (i + 1..D).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}

pub fn solve_spd<T: Scalar, const D: usize>(
    a: &Matrix<T, D>,
    b: &Vector<T, D>,
) -> Option<Vector<T, D>> {
    let l = cholesky(a)?;
    Some(backward_solve_transposed(&l, &forward_solve(&l, b)))
}

pub fn inverse_spd<T: Scalar, const D: usize>(a: &Matrix<T, D>) -> Option<Matrix<T, D>> {
    let l = cholesky(a)?;
    let mut inv = zeros::<T, D>();
    for j in 0..D {
        let mut e = [T::zero(); D];
        e[j] = T::one();
        let col = backward_solve_transposed(&l, &forward_solve(&l, &e));
        for i in 0..D {
            inv[i][j] = col[i];
        }
    }
    // symmetrize round-off
    for i in 0..D {
        for j in 0..i {
            let m = (inv[i][j] + inv[j][i]) * crate::scalar::lit(0.5);
            inv[i][j] = m;
            inv[j][i] = m;
        }
    }
    Some(inv)
}

/// `ln det` from a Cholesky factor.
pub fn log_det_from_cholesky<T: Scalar, const D: usize>(l: &Matrix<T, D>) -> T {
    let two = T::one() + T::one();
    (0..D).map(|i| two * l[i][i].ln()).sum()
}

pub fn trace<T: Scalar, const D: usize>(a: &Matrix<T, D>) -> T {
    (0..D).map(|i| a[i][i]).sum()
}

/// Smallest eigenvalue of a symmetric matrix, closed form for `D ≤ 2`.
pub fn min_eigenvalue_symmetric<T: Scalar, const D: usize>(a: &Matrix<T, D>) -> Option<T> {
    match D {
        1 => Some(a[0][0]),
        2 => {
            let half = crate::scalar::lit::<T>(0.5);
            let mean = (a[0][0] + a[1][1]) * half;
            let diff = (a[0][0] - a[1][1]) * half;
            let radius = (diff * diff + a[0][1] * a[1][0]).max(T::zero()).sqrt();
            Some(mean - radius)
        }
        _ => None,
    }
}

/// Rotation matrix for a counter-clockwise angle.
pub fn rotation<T: Scalar>(angle: T) -> Matrix<T, 2> {
    let (s, c) = angle.sin_cos();
    [[c, -s], [s, c]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs_input() {
        let a: Matrix<f64, 2> = [[4.0, 1.2], [1.2, 2.0]];
        let l = cholesky(&a).unwrap();
        let back = mat_mul(&l, &transpose(&l));
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&[[1.0, 2.0], [2.0, 1.0]]).is_none());
        assert!(cholesky(&[[0.0f64]]).is_none());
    }

    #[test]
    fn inverse_and_solve_agree() {
        let a: Matrix<f64, 2> = [[3.0, -0.5], [-0.5, 1.5]];
        let b = [1.0, 2.0];
        let x = solve_spd(&a, &b).unwrap();
        let y = mat_vec(&inverse_spd(&a).unwrap(), &b);
        assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
        let ax = mat_vec(&a, &x);
        assert!((ax[0] - 1.0).abs() < 1e-14 && (ax[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_of_diagonal_and_rotated() {
        assert_eq!(
            min_eigenvalue_symmetric(&[[2.0, 0.0], [0.0, 5.0]]),
            Some(2.0)
        );
        let r = rotation(0.7f64);
        let a = mat_mul(&mat_mul(&r, &[[2.0, 0.0], [0.0, 5.0]]), &transpose(&r));
        assert!((min_eigenvalue_symmetric(&a).unwrap() - 2.0).abs() < 1e-12);
    }
}
