//! Direct solvers for the banded systems the integrators produce: a Thomas
//! sweep for tridiagonal systems with constant off-diagonals (real or
//! complex), and a block-Thomas sweep for the 2x2-block systems of two-stage
//! implicit Runge-Kutta methods.

use num_complex::ComplexFloat;
use num_traits::{Float, NumCast, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn floor_of<T: ComplexFloat>() -> T::Real {
    let t: Option<T::Real> = NumCast::from(1e-300);
    match t {
        Some(v) if v > T::Real::zero() => v,
        _ => T::Real::min_positive_value(),
    }
}

/// Solve `M x = rhs` where `M` is tridiagonal with the given diagonal and a
/// constant value on both off-diagonals. No pivoting; a pivot whose magnitude
/// falls below the floor is reported as a singular shift.
pub fn solve_tridiagonal_const_offdiag<T>(off: T, diag: &[T], rhs: &[T]) -> Result<Vec<T>>
where
    T: ComplexFloat,
{
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty tridiagonal system".into()));
    }
    let floor = floor_of::<T>();

    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];

    let mut denom = diag[0];
    if denom.abs() < floor {
        return Err(Error::SingularShift { row: 0 });
    }
    c[0] = off / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off * c[i - 1];
        if denom.abs() < floor {
            return Err(Error::SingularShift { row: i });
        }
        if i + 1 < n {
            c[i] = off / denom;
        }
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }

    let mut x = d;
    for i in (0..n - 1).rev() {
        let correction = c[i] * x[i + 1];
        x[i] = x[i] - correction;
    }
    Ok(x)
}

#[inline]
fn mat_mul<F: Scalar>(a: &[F; 4], b: &[F; 4]) -> [F; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn mat_vec<F: Scalar>(a: &[F; 4], v: &[F; 2]) -> [F; 2] {
    [a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]]
}

fn invert2<F: Scalar>(a: &[F; 4], row: usize) -> Result<[F; 4]> {
    let det = a[0] * a[3] - a[1] * a[2];
    if det.abs() < crate::scalar::pivot_floor::<F>() {
        return Err(Error::SingularShift { row });
    }
    let inv_det = det.recip();
    Ok([
        a[3] * inv_det,
        -a[1] * inv_det,
        -a[2] * inv_det,
        a[0] * inv_det,
    ])
}

/// Solve a block-tridiagonal system with 2x2 blocks: varying diagonal blocks
/// `diag[i]` (row-major) and the same constant block `off` coupling each grid
/// point to both neighbours. Block-Thomas elimination without pivoting.
pub fn solve_block2_tridiagonal<F: Scalar>(
    diag: &[[F; 4]],
    off: [F; 4],
    rhs: &[[F; 2]],
) -> Result<Vec<[F; 2]>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty block-tridiagonal system".into()));
    }

    let mut c = vec![[F::zero(); 4]; n];
    let mut d = vec![[F::zero(); 2]; n];

    let inv = invert2(&diag[0], 0)?;
    c[0] = mat_mul(&inv, &off);
    d[0] = mat_vec(&inv, &rhs[0]);
    for i in 1..n {
        let bc = mat_mul(&off, &c[i - 1]);
        let denom = [
            diag[i][0] - bc[0],
            diag[i][1] - bc[1],
            diag[i][2] - bc[2],
            diag[i][3] - bc[3],
        ];
        let inv = invert2(&denom, i)?;
        if i + 1 < n {
            c[i] = mat_mul(&inv, &off);
        }
        let bd = mat_vec(&off, &d[i - 1]);
        d[i] = mat_vec(&inv, &[rhs[i][0] - bd[0], rhs[i][1] - bd[1]]);
    }

    let mut x = d;
    for i in (0..n - 1).rev() {
        let cx = mat_vec(&c[i], &x[i + 1]);
        x[i][0] -= cx[0];
        x[i][1] -= cx[1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn tridiagonal_matches_dense_reference() {
        // 4x4 complex system, compare against hand-expanded elimination
        let diag: Vec<Complex<f64>> = (0..4)
            .map(|i| Complex::new(3.0 + i as f64, 0.5 * i as f64))
            .collect();
        let off = Complex::new(-1.0, 0.25);
        let x_true: Vec<Complex<f64>> = (0..4)
            .map(|i| Complex::new(1.0 - i as f64, 0.3 * i as f64))
            .collect();
        let mut rhs = vec![Complex::new(0.0, 0.0); 4];
        for i in 0..4 {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += off * x_true[i - 1];
            }
            if i < 3 {
                rhs[i] += off * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal_const_offdiag(off, &diag, &rhs).unwrap();
        for i in 0..4 {
            assert!((x[i] - x_true[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn tridiagonal_zero_pivot_is_singular() {
        let diag = vec![0.0f64, 1.0];
        let rhs = vec![1.0, 1.0];
        let err = solve_tridiagonal_const_offdiag(0.0, &diag, &rhs).unwrap_err();
        assert!(matches!(err, Error::SingularShift { row: 0 }));
    }

    #[test]
    fn block2_matches_scalar_decoupled_case() {
        // with diagonal blocks diag(a, b) and off = diag(o, o) the system
        // decouples into two scalar tridiagonal solves
        let n = 6;
        let diag: Vec<[f64; 4]> = (0..n)
            .map(|i| [4.0 + i as f64, 0.0, 0.0, 5.0 + i as f64])
            .collect();
        let off = [-1.0, 0.0, 0.0, -1.0];
        let rhs: Vec<[f64; 2]> = (0..n).map(|i| [1.0 + i as f64, 2.0 - i as f64]).collect();

        let x = solve_block2_tridiagonal(&diag, off, &rhs).unwrap();

        for stage in 0..2 {
            let d: Vec<f64> = diag.iter().map(|b| b[3 * stage]).collect();
            let r: Vec<f64> = rhs.iter().map(|v| v[stage]).collect();
            let xs = solve_tridiagonal_const_offdiag(-1.0, &d, &r).unwrap();
            for i in 0..n {
                assert!((x[i][stage] - xs[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn block2_random_system_residual() {
        // residual check on a fixed pseudo-random coupled system
        let n = 25;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let diag: Vec<[f64; 4]> = (0..n)
            .map(|_| [6.0 + next(), next(), next(), 6.0 + next()])
            .collect();
        let off = [-1.0 + 0.1 * next(), 0.2 * next(), 0.2 * next(), -1.0];
        let rhs: Vec<[f64; 2]> = (0..n).map(|_| [next(), next()]).collect();

        let x = solve_block2_tridiagonal(&diag, off, &rhs).unwrap();

        for i in 0..n {
            let mut r = mat_vec(&diag[i], &x[i]);
            if i > 0 {
                let lo = mat_vec(&off, &x[i - 1]);
                r[0] += lo[0];
                r[1] += lo[1];
            }
            if i + 1 < n {
                let hi = mat_vec(&off, &x[i + 1]);
                r[0] += hi[0];
                r[1] += hi[1];
            }
            assert!((r[0] - rhs[i][0]).abs() < 1e-12);
            assert!((r[1] - rhs[i][1]).abs() < 1e-12);
        }
    }
}
