//! Variable-stepsize exponential multistep integration of semilinear
//! parabolic problems with nonsmooth initial data.
//!
//! The scheme advances u' - A u = f(t, u) on a time mesh graded toward t = 0,
//! evaluating the operator exponentials through quadrature on a hyperbola
//! contour: each step costs 2K+1 (K+1 after conjugate reduction) shifted
//! tridiagonal solves (z - A)^{-1}, and the source history enters through the
//! Laplace transform of its Lagrange extrapolation. Crank-Nicolson, 2-stage
//! Gauss and 2-stage Radau IIA steppers on uniform meshes are included as
//! baselines, plus a study harness that reproduces convergence tables.
//!
//! Everything is generic over the working scalar ([`Scalar`]: `f32` or
//! `f64`); the `*64` aliases below name the double-precision instantiations
//! the benchmark tolerances are calibrated for.

pub mod contour;
pub mod error;
pub mod extrapolation;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod problem;
pub mod reference;
mod scalar;

pub use contour::{k_schedule, quadrature_apply, quadrature_apply_full, ContourParams, ContourRule};
pub use error::{Error, Result};
pub use extrapolation::ExtrapolationStencil;
pub use harness::{
    emit_csv, emit_table, estimate_order, run_study, successive_difference, ConvergenceReport,
    SingleRunConfig, StudyConfig, StudyMethod,
};
pub use integrator::{
    exp_euler_step, multistep_step, regularity_probe, solve, solve_with_alpha, SolutionHistory,
};
pub use mesh::{steps_for_nominal_step, TimeMesh};
pub use operator::{max_norm, DirichletLaplacian1D, StateVector};
pub use problem::ProblemSpec;
pub use reference::{implicit_step, solve_uniform, ImplicitMethod, ImplicitStepperConfig};
pub use scalar::Scalar;


pub type TimeMesh64 = TimeMesh<f64>;
pub type ContourRule64 = ContourRule<f64>;
pub type ContourParams64 = ContourParams<f64>;
pub type ExtrapolationStencil64 = ExtrapolationStencil<f64>;
pub type DirichletLaplacian1D64 = DirichletLaplacian1D<f64>;
pub type StateVector64 = StateVector<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type SolutionHistory64 = SolutionHistory<f64>;
pub type StudyConfig64 = StudyConfig<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
