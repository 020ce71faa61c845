//! Discrete 1D Dirichlet Laplacian on (0, 1): tridiagonal application,
//! complex-shifted resolvent solves, and an exact spectral propagator used as
//! the test oracle.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal_const_offdiag;
use crate::scalar::Scalar;

/// Grid samples at the interior points x_i = i h, i = 1..=M.
pub type StateVector<F> = Vec<F>;

/// Max norm over the grid.
pub fn max_norm<F: Scalar>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |acc, x| acc.max(x.abs()))
}

/// Second-difference operator with homogeneous Dirichlet boundary values:
/// tridiagonal with diagonal -2/h^2 and off-diagonals 1/h^2, h = 1/(M+1).
///
/// Symmetric negative definite with eigenpairs
/// lambda_m = -(4/h^2) sin^2(m pi h / 2), v_m(x_i) = sin(m pi x_i).
#[derive(Debug, Clone)]
pub struct DirichletLaplacian1D<F> {
    interior_points: usize,
    mesh_width: F,
    scale: F,
}

impl<F: Scalar> DirichletLaplacian1D<F> {
    pub fn new(interior_points: usize) -> Result<Self> {
        if interior_points == 0 {
            return Err(Error::InvalidInput(
                "operator needs at least one interior point".into(),
            ));
        }
        let mesh_width = F::from_usize(interior_points + 1).recip();
        Ok(Self {
            interior_points,
            mesh_width,
            scale: (mesh_width * mesh_width).recip(),
        })
    }

    pub fn interior_points(&self) -> usize {
        self.interior_points
    }

    pub fn mesh_width(&self) -> F {
        self.mesh_width
    }

    /// 1/h^2.
    pub fn scale(&self) -> F {
        self.scale
    }

    /// Interior grid point x_{i+1} = (i+1) h for the storage index i.
    pub fn grid_point(&self, index: usize) -> F {
        F::from_usize(index + 1) * self.mesh_width
    }

    pub fn grid(&self) -> Vec<F> {
        (0..self.interior_points).map(|i| self.grid_point(i)).collect()
    }

    /// Sample a pointwise function on the interior grid.
    pub fn sample(&self, f: impl Fn(F) -> F) -> StateVector<F> {
        (0..self.interior_points)
            .map(|i| f(self.grid_point(i)))
            .collect()
    }

    /// Eigenvalue lambda_m = -(4/h^2) sin^2(m pi h / 2), m = 1..=M.
    pub fn eigenvalue(&self, m: usize) -> F {
        let half = F::from_usize(m) * F::PI() * self.mesh_width / F::from_f64(2.0);
        let s = half.sin();
        -F::from_f64(4.0) * self.scale * s * s
    }

    /// Unnormalized eigenvector sin(m pi x_i).
    pub fn eigenvector(&self, m: usize) -> StateVector<F> {
        self.sample(|x| (F::from_usize(m) * F::PI() * x).sin())
    }

    /// Tridiagonal product A v with zero Dirichlet padding at both ends.
    pub fn apply(&self, v: &[F]) -> Result<StateVector<F>> {
        let m = self.interior_points;
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: v.len(),
            });
        }
        let two = F::from_f64(2.0);
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let left = if i > 0 { v[i - 1] } else { F::zero() };
            let right = if i + 1 < m { v[i + 1] } else { F::zero() };
            out.push(self.scale * (left - two * v[i] + right));
        }
        Ok(out)
    }

    /// Solve (z I - A) x = b by complex Thomas elimination without pivoting.
    ///
    /// Allocates its own workspace, so concurrent invocations are safe.
    pub fn resolvent_solve(&self, z: Complex<F>, b: &[Complex<F>]) -> Result<Vec<Complex<F>>> {
        let m = self.interior_points;
        if b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: b.len(),
            });
        }
        let two = F::from_f64(2.0);
        let diag_value = z + two * self.scale;
        let diag = vec![diag_value; m];
        let off = Complex::new(-self.scale, F::zero());
        solve_tridiagonal_const_offdiag(off, &diag, b)
    }

    /// e^{tau A} v through the full sine eigendecomposition; exact up to
    /// round-off, used as the quadrature oracle. Dense transform, so the size
    /// is capped.
    pub fn exact_propagator(&self, tau: F, v: &[F]) -> Result<StateVector<F>> {
        let m = self.interior_points;
        if m > 8192 {
            return Err(Error::InvalidInput(format!(
                "exact propagator capped at 8192 interior points, got {m}"
            )));
        }
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: v.len(),
            });
        }
        if tau == F::zero() {
            return Ok(v.to_vec());
        }
        let pi_h = F::PI() * self.mesh_width;
        // forward sine transform
        let mut coef = Vec::with_capacity(m);
        for mode in 1..=m {
            let mut c = F::zero();
            let freq = F::from_usize(mode) * pi_h;
            for (i, &vi) in v.iter().enumerate() {
                c += vi * (freq * F::from_usize(i + 1)).sin();
            }
            coef.push(c * (tau * self.eigenvalue(mode)).exp());
        }
        // inverse transform with the 2/(M+1) normalization
        let norm = F::from_f64(2.0) / F::from_usize(m + 1);
        let mut out = Vec::with_capacity(m);
        for i in 1..=m {
            let mut s = F::zero();
            let x = F::from_usize(i) * pi_h;
            for (mode, &c) in coef.iter().enumerate() {
                s += c * (F::from_usize(mode + 1) * x).sin();
            }
            out.push(s * norm);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_apply() {
        // M=1, h=1/2: A = [-8]
        let op = DirichletLaplacian1D::<f64>::new(1).unwrap();
        assert_eq!(op.apply(&[1.0]).unwrap(), vec![-8.0]);
    }

    #[test]
    fn apply_is_linear_at_zero() {
        let op = DirichletLaplacian1D::<f64>::new(17).unwrap();
        let out = op.apply(&[0.0; 17]).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn eigenvector_identity() {
        let op = DirichletLaplacian1D::<f64>::new(31).unwrap();
        for m in [1usize, 2, 7, 31] {
            let v = op.eigenvector(m);
            let av = op.apply(&v).unwrap();
            let lam = op.eigenvalue(m);
            for (a, x) in av.iter().zip(&v) {
                assert_relative_eq!(*a, lam * x, max_relative = 1e-12, epsilon = 1e-12 * lam.abs());
            }
        }
    }

    #[test]
    fn single_point_resolvent() {
        // M=1: (z - (-8)) x = b with z=1: x = b/9
        let op = DirichletLaplacian1D::<f64>::new(1).unwrap();
        let x = op
            .resolvent_solve(Complex::new(1.0, 0.0), &[Complex::new(9.0, 0.0)])
            .unwrap();
        assert!((x[0] - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn resolvent_zero_rhs() {
        let op = DirichletLaplacian1D::<f64>::new(9).unwrap();
        let x = op
            .resolvent_solve(Complex::new(0.5, 2.0), &[Complex::new(0.0, 0.0); 9])
            .unwrap();
        assert!(x.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn resolvent_eigen_oracle() {
        let op = DirichletLaplacian1D::<f64>::new(63).unwrap();
        let z = Complex::new(3.0, 11.0);
        for m in [1usize, 5, 40] {
            let v = op.eigenvector(m);
            let b: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
            let x = op.resolvent_solve(z, &b).unwrap();
            let expected_factor = (z - op.eigenvalue(m)).finv();
            for (xi, &vi) in x.iter().zip(&v) {
                assert!(
                    (xi - expected_factor * vi).norm() <= 1e-10 * expected_factor.norm(),
                    "mode {m}"
                );
            }
        }
    }

    #[test]
    fn resolvent_residual_on_random_shifts() {
        // 200 random (z, b): residual below 1e-12 (|z| + 4/h^2) ||x||_inf
        let op = DirichletLaplacian1D::<f64>::new(127).unwrap();
        let m = 127;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..200 {
            let z = Complex::new(
                rng.random_range(-1e4f64..1e2),
                rng.random_range(-1e5f64..1e5),
            );
            let b: Vec<Complex<f64>> = (0..m)
                .map(|_| Complex::new(rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0)))
                .collect();
            let x = op.resolvent_solve(z, &b).unwrap();
            // residual (zI - A)x - b
            let xnorm = x.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
            let s = op.scale();
            let mut worst = 0.0f64;
            for i in 0..m {
                let left = if i > 0 { x[i - 1] } else { Complex::new(0.0, 0.0) };
                let right = if i + 1 < m { x[i + 1] } else { Complex::new(0.0, 0.0) };
                let ax = (left - x[i] * 2.0 + right) * s;
                let r = z * x[i] - ax - b[i];
                worst = worst.max(r.norm());
            }
            let bound = 1e-12 * (z.norm() + 4.0 * s) * xnorm;
            assert!(worst <= bound, "residual {worst:e} vs bound {bound:e} at z={z}");
        }
    }

    #[test]
    fn resolvent_round_trip() {
        // b = (zI - A)x reconstructs x
        let op = DirichletLaplacian1D::<f64>::new(63).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = Complex::new(-40.0, 250.0);
        let x_true: Vec<Complex<f64>> = (0..63)
            .map(|_| Complex::new(rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0)))
            .collect();
        let s = op.scale();
        let mut b = vec![Complex::new(0.0, 0.0); 63];
        for i in 0..63 {
            let left = if i > 0 { x_true[i - 1] } else { Complex::new(0.0, 0.0) };
            let right = if i + 1 < 63 { x_true[i + 1] } else { Complex::new(0.0, 0.0) };
            b[i] = z * x_true[i] - (left - x_true[i] * 2.0 + right) * s;
        }
        let x = op.resolvent_solve(z, &b).unwrap();
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).norm() < 1e-10 * e.norm().max(1e-10));
        }
    }

    #[test]
    fn propagator_identity_at_zero_time() {
        let op = DirichletLaplacian1D::<f64>::new(33).unwrap();
        let v: Vec<f64> = (0..33).map(|i| (i as f64).sin()).collect();
        assert_eq!(op.exact_propagator(0.0, &v).unwrap(), v);
    }

    #[test]
    fn propagator_diagonal_on_eigenvectors() {
        let op = DirichletLaplacian1D::<f64>::new(33).unwrap();
        let tau = 0.003;
        for m in [1usize, 4, 20] {
            let v = op.eigenvector(m);
            let pv = op.exact_propagator(tau, &v).unwrap();
            let factor = (tau * op.eigenvalue(m)).exp();
            for (p, &x) in pv.iter().zip(&v) {
                assert_relative_eq!(*p, factor * x, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn propagator_three_mode_reference() {
        // M=3, tau=0.01, v=[1,1,1]: direct 3-mode summation
        let op = DirichletLaplacian1D::<f64>::new(3).unwrap();
        let v = [1.0, 1.0, 1.0];
        let mut expected = [0.0f64; 3];
        let h = 0.25;
        for m in 1..=3usize {
            let lam = op.eigenvalue(m);
            let vm: Vec<f64> = (1..=3)
                .map(|i| (m as f64 * std::f64::consts::PI * i as f64 * h).sin())
                .collect();
            let inner: f64 = v.iter().zip(&vm).map(|(a, b)| a * b).sum();
            let coef = inner * 2.0 / 4.0 * (0.01 * lam).exp();
            for i in 0..3 {
                expected[i] += coef * vm[i];
            }
        }
        let got = op.exact_propagator(0.01, &v).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert_relative_eq!(g, e, max_relative = 1e-13);
        }
    }

    #[test]
    fn propagator_semigroup_property() {
        let op = DirichletLaplacian1D::<f64>::new(127).unwrap();
        let v = op.sample(|x| if x <= 0.5 { 0.0 } else { 1.0 });
        let one_shot = op.exact_propagator(0.05, &v).unwrap();
        let two_step = op
            .exact_propagator(0.02, &op.exact_propagator(0.03, &v).unwrap())
            .unwrap();
        for (a, b) in one_shot.iter().zip(&two_step) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_is_max_norm_contraction() {
        let op = DirichletLaplacian1D::<f64>::new(255).unwrap();
        let v = op.sample(|x| if x <= 0.5 { 0.0 } else { 1.0 });
        let mut state = v.clone();
        for _ in 0..5 {
            state = op.exact_propagator(0.01, &state).unwrap();
            assert!(max_norm(&state) <= max_norm(&v) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn propagator_size_cap() {
        let op = DirichletLaplacian1D::<f64>::new(8193).unwrap();
        let v = vec![0.0; 8193];
        assert!(op.exact_propagator(0.1, &v).is_err());
    }

    #[test]
    fn step_data_sampling_conventions() {
        // half-open convention: x <= 0.5 samples to 0
        let step = |x: f64| if x <= 0.5 { 0.0 } else { 1.0 };
        let op3 = DirichletLaplacian1D::<f64>::new(3).unwrap();
        assert_eq!(op3.sample(step), vec![0.0, 0.0, 1.0]);
        let op1 = DirichletLaplacian1D::<f64>::new(1).unwrap();
        assert_eq!(op1.sample(step), vec![0.0]);
        let smooth = op3.sample(|x| (std::f64::consts::PI * x).sin());
        let s22 = 0.5f64.sqrt();
        assert_relative_eq!(smooth[0], s22, max_relative = 1e-15);
        assert_relative_eq!(smooth[1], 1.0, max_relative = 1e-15);
        assert_relative_eq!(smooth[2], s22, max_relative = 1e-15);
    }
}
