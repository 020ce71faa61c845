//! Problem descriptions: initial data and pointwise nonlinearity.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{DirichletLaplacian1D, StateVector};
use crate::scalar::Scalar;

type PointFn<F> = Arc<dyn Fn(F) -> F + Send + Sync>;
type SourceFn<F> = Arc<dyn Fn(F, F) -> F + Send + Sync>;

/// A semilinear problem u' - A u = f(t, u) on (0, T] with pointwise initial
/// data and a nonlinearity acting diagonally on grid values. The u-derivative
/// of f is carried for the implicit reference integrators' Newton solves.
#[derive(Clone)]
pub struct ProblemSpec<F> {
    label: String,
    horizon: F,
    initial: PointFn<F>,
    source: SourceFn<F>,
    source_du: SourceFn<F>,
}

impl<F: Scalar> ProblemSpec<F> {
    pub fn new(
        label: impl Into<String>,
        horizon: F,
        initial: impl Fn(F) -> F + Send + Sync + 'static,
        source: impl Fn(F, F) -> F + Send + Sync + 'static,
        source_du: impl Fn(F, F) -> F + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            horizon,
            initial: Arc::new(initial),
            source: Arc::new(source),
            source_du: Arc::new(source_du),
        }
    }

    /// The cubic reaction f(u) = u - u^3 with the discontinuous unit step
    /// initial data (0 on (0, 1/2], 1 on (1/2, 1)).
    pub fn allen_cahn_step(horizon: F) -> Self {
        let half = F::from_f64(0.5);
        Self::new(
            "allen_cahn_step",
            horizon,
            move |x| if x <= half { F::zero() } else { F::one() },
            |_t, u| u - u * u * u,
            |_t, u| F::one() - F::from_f64(3.0) * u * u,
        )
    }

    /// Same cubic reaction with smooth, boundary-compatible initial data
    /// sin(pi x); separates nonsmooth-data effects from scheme errors.
    pub fn allen_cahn_sine(horizon: F) -> Self {
        Self::new(
            "allen_cahn_sine",
            horizon,
            |x| (F::PI() * x).sin(),
            |_t, u| u - u * u * u,
            |_t, u| F::one() - F::from_f64(3.0) * u * u,
        )
    }

    /// Pure heat flow (f = 0) from the step data; linear, so the spectral
    /// propagator is an exact reference for it.
    pub fn heat_step(horizon: F) -> Self {
        let half = F::from_f64(0.5);
        Self::new(
            "heat_step",
            horizon,
            move |x| if x <= half { F::zero() } else { F::one() },
            |_t, _u| F::zero(),
            |_t, _u| F::zero(),
        )
    }

    pub fn by_label(label: &str, horizon: F) -> Result<Self> {
        match label {
            "allen_cahn_step" => Ok(Self::allen_cahn_step(horizon)),
            "allen_cahn_sine" => Ok(Self::allen_cahn_sine(horizon)),
            "heat_step" => Ok(Self::heat_step(horizon)),
            other => Err(Error::Config(format!(
                "unknown problem label '{other}' (known: allen_cahn_step, allen_cahn_sine, heat_step)"
            ))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn horizon(&self) -> F {
        self.horizon
    }

    pub fn initial_value(&self, x: F) -> F {
        (self.initial)(x)
    }

    pub fn source_value(&self, t: F, u: F) -> F {
        (self.source)(t, u)
    }

    pub fn source_derivative(&self, t: F, u: F) -> F {
        (self.source_du)(t, u)
    }

    /// Sample the initial data on the operator's interior grid.
    pub fn initial_state(&self, op: &DirichletLaplacian1D<F>) -> StateVector<F> {
        op.sample(|x| self.initial_value(x))
    }

    /// Apply the nonlinearity pointwise to grid values.
    pub fn source_state(&self, t: F, u: &[F]) -> StateVector<F> {
        u.iter().map(|&ui| self.source_value(t, ui)).collect()
    }

    pub fn source_derivative_state(&self, t: F, u: &[F]) -> StateVector<F> {
        u.iter().map(|&ui| self.source_derivative(t, ui)).collect()
    }
}

impl<F: Scalar> fmt::Debug for ProblemSpec<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_data_half_open_at_jump() {
        let p = ProblemSpec::<f64>::allen_cahn_step(0.5);
        assert_eq!(p.initial_value(0.5), 0.0);
        assert_eq!(p.initial_value(0.5 + 1e-12), 1.0);
        assert_eq!(p.initial_value(0.25), 0.0);
    }

    #[test]
    fn cubic_reaction_and_derivative() {
        let p = ProblemSpec::<f64>::allen_cahn_step(0.5);
        assert_eq!(p.source_value(0.0, 2.0), 2.0 - 8.0);
        assert_eq!(p.source_derivative(0.0, 2.0), 1.0 - 12.0);
        assert_eq!(p.source_value(1.0, 0.0), 0.0);
    }

    #[test]
    fn labels_round_trip() {
        for label in ["allen_cahn_step", "allen_cahn_sine", "heat_step"] {
            let p = ProblemSpec::<f64>::by_label(label, 1.0).unwrap();
            assert_eq!(p.label(), label);
        }
        assert!(ProblemSpec::<f64>::by_label("nope", 1.0).is_err());
    }
}
