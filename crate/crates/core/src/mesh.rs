//! Graded time partitions.
//!
//! The canonical graded mesh on [0, T] is t_n = T (n/N)^gamma with
//! gamma = 1/(1 - beta), which realizes stepsizes
//! tau_n <= gamma (T/N) (t_n/T)^beta and a first step t_1 = T N^{-gamma}.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct TimeMesh<F> {
    horizon: F,
    beta: F,
    gamma: F,
    points: Vec<F>,
    max_step: F,
}

impl<F: Scalar> TimeMesh<F> {
    /// Build the graded partition t_n = T (n/N)^{1/(1-beta)}, n = 0..N.
    pub fn graded(horizon: F, steps: usize, beta: F) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidInput(format!(
                "mesh needs at least 2 steps, got {steps}"
            )));
        }
        Self::graded_relaxed(horizon, steps, beta)
    }

    /// Same construction without the step-count floor; the single-step case
    /// only arises for the uniform sweeps of the reference integrators.
    pub(crate) fn graded_relaxed(horizon: F, steps: usize, beta: F) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("mesh needs at least 1 step".into()));
        }
        if !(beta >= F::zero() && beta < F::one()) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grading exponent must lie in [0, 1), got {beta}"
            )));
        }
        if !(horizon > F::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let gamma = (F::one() - beta).recip();
        let n_f = F::from_usize(steps);
        let points: Vec<F> = (0..=steps)
            .map(|n| horizon * (F::from_usize(n) / n_f).powf(gamma))
            .collect();

        let mesh = Self {
            horizon,
            beta,
            gamma,
            max_step: points[steps] - points[steps - 1],
            points,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Uniform partition (beta = 0).
    pub fn uniform(horizon: F, steps: usize) -> Result<Self> {
        Self::graded(horizon, steps, F::zero())
    }

    fn validate(&self) -> Result<()> {
        let n = self.steps();
        let slack = F::from_f64(8.0) * F::epsilon();
        let mut largest = F::zero();
        for i in 1..=n {
            let tau = self.points[i] - self.points[i - 1];
            if !(tau > F::zero()) {
                return Err(Error::InvalidInput(format!(
                    "mesh points not strictly increasing at index {i}"
                )));
            }
            largest = largest.max(tau);
            // grading bound tau_n <= gamma (T/N) (t_n/T)^beta, up to round-off
            let bound = self.gamma * (self.horizon / F::from_usize(n))
                * (self.points[i] / self.horizon).powf(self.beta);
            if tau > bound * (F::one() + slack) {
                return Err(Error::InvalidInput(format!(
                    "grading bound violated at index {i}: step {tau:e} exceeds {bound:e}"
                )));
            }
        }
        debug_assert!(largest <= self.max_step * (F::one() + slack));
        Ok(())
    }

    pub fn horizon(&self) -> F {
        self.horizon
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    /// Derived exponent 1/(1 - beta).
    pub fn gamma(&self) -> F {
        self.gamma
    }

    /// Number of steps N (the mesh has N + 1 points).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn point(&self, n: usize) -> F {
        self.points[n]
    }

    /// Stepsize tau_n = t_n - t_{n-1}, for n in 1..=N.
    pub fn tau(&self, n: usize) -> F {
        self.points[n] - self.points[n - 1]
    }

    /// Largest stepsize; the graded construction attains it on the last step.
    pub fn max_step(&self) -> F {
        self.max_step
    }

    /// A k-step method needs beta > 1 - 1/k (strict) on this family of meshes.
    pub fn supports_order(&self, k: usize) -> bool {
        assert!(k >= 1);
        self.beta > F::one() - F::from_usize(k).recip()
    }

    /// Debug dump, one row per step: n, t_n, tau_n.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,t_n,tau_n")?;
        for n in 1..=self.steps() {
            writeln!(w, "{},{:e},{:e}", n, self.point(n), self.tau(n))?;
        }
        Ok(())
    }
}

/// Step count of the graded mesh whose stepsizes realize tau_n ≈ tau t_n^beta
/// (grading measured in absolute time): N = ceil(gamma T^{1-beta} / tau).
///
/// This is the mapping the convergence studies label their rows with.
pub fn steps_for_nominal_step<F: Scalar>(horizon: F, tau: F, beta: F) -> Result<usize> {
    if !(tau > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "nominal stepsize must be positive, got {tau}"
        )));
    }
    if !(beta >= F::zero() && beta < F::one()) {
        return Err(Error::InvalidInput(format!(
            "grading exponent must lie in [0, 1), got {beta}"
        )));
    }
    let gamma = (F::one() - beta).recip();
    let n = gamma * horizon.powf(F::one() - beta) / tau;
    // nudge below exact integers so a 1-ulp overshoot in powf cannot bump N
    let n = (n * (F::one() - F::from_f64(4.0) * F::epsilon())).ceil();
    let n = n.to_f64() as usize;
    Ok(n.max(2))
}
