//! Baseline one-step implicit integrators on uniform meshes: Crank-Nicolson,
//! 2-stage Gauss, and 2-stage Radau IIA, each fully implicit with Newton on
//! the stage equations.
//!
//! Newton converges on the scaled residual ||F||_inf <= tol * scale with
//! scale = 1 + (1 + c tau/h^2) max(||U||_inf, 1); the residual contains
//! tau*(A U) terms of size tau/h^2 whose f64 evaluation noise makes an
//! absolute test meaningless on fine grids. One extra iteration after the
//! test first passes drives the stages to their round-off floor, which the
//! finest successive differences need.

use crate::error::{Error, Result};
use crate::integrator::SolutionHistory;
use crate::linalg::{solve_block2_tridiagonal, solve_tridiagonal_const_offdiag};
use crate::mesh::TimeMesh;
use crate::operator::{max_norm, DirichletLaplacian1D, StateVector};
use crate::problem::ProblemSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicitMethod {
    CrankNicolson,
    Gauss2,
    Radau2,
}

impl ImplicitMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::CrankNicolson => "crank_nicolson",
            Self::Gauss2 => "gauss2",
            Self::Radau2 => "radau2",
        }
    }

    /// Classical convergence order on smooth problems.
    pub fn classical_order(self) -> usize {
        match self {
            Self::CrankNicolson => 2,
            Self::Gauss2 => 4,
            Self::Radau2 => 3,
        }
    }

    /// Stability function r(z) of the scalar one-step map.
    pub fn stability_function(self, z: f64) -> f64 {
        match self {
            Self::CrankNicolson => (1.0 + z / 2.0) / (1.0 - z / 2.0),
            Self::Gauss2 => {
                (1.0 + z / 2.0 + z * z / 12.0) / (1.0 - z / 2.0 + z * z / 12.0)
            }
            Self::Radau2 => (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ImplicitStepperConfig<F> {
    pub method: ImplicitMethod,
    pub newton_tol: F,
    pub newton_max_iter: usize,
}

impl<F: Scalar> ImplicitStepperConfig<F> {
    pub fn new(method: ImplicitMethod) -> Self {
        Self {
            method,
            newton_tol: F::from_f64(1e-12),
            newton_max_iter: 50,
        }
    }
}

/// Butcher data for the two-stage methods. `update` holds d = b^T a^{-1}: the
/// step update u+ = u + d_1 (U_1 - u) + d_2 (U_2 - u), which avoids re-summing
/// the large tau*(A U) terms (Radau IIA is stiffly accurate, d = (0, 1)).
struct TwoStageTableau {
    a: [[f64; 2]; 2],
    c: [f64; 2],
    update: [f64; 2],
}

fn tableau(method: ImplicitMethod) -> TwoStageTableau {
    let s3 = 3.0f64.sqrt();
    match method {
        // 4th-order Gauss-Legendre
        ImplicitMethod::Gauss2 => TwoStageTableau {
            a: [[0.25, 0.25 - s3 / 6.0], [0.25 + s3 / 6.0, 0.25]],
            c: [0.5 - s3 / 6.0, 0.5 + s3 / 6.0],
            update: [-s3, s3],
        },
        // 3rd-order Radau IIA
        ImplicitMethod::Radau2 => TwoStageTableau {
            a: [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]],
            c: [1.0 / 3.0, 1.0],
            update: [0.0, 1.0],
        },
        ImplicitMethod::CrankNicolson => unreachable!("CN uses the trapezoidal form"),
    }
}

/// One step of the configured method from (t_prev, u_prev) with stepsize tau.
pub fn implicit_step<F: Scalar>(
    config: &ImplicitStepperConfig<F>,
    op: &DirichletLaplacian1D<F>,
    spec: &ProblemSpec<F>,
    t_prev: F,
    tau: F,
    u_prev: &[F],
) -> Result<StateVector<F>> {
    if !(tau > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "stepsize must be positive, got {tau}"
        )));
    }
    match config.method {
        ImplicitMethod::CrankNicolson => trapezoid_step(config, op, spec, t_prev, tau, u_prev),
        _ => two_stage_step(config, op, spec, t_prev, tau, u_prev),
    }
}

/// Crank-Nicolson as Newton on the full trapezoidal residual
/// G(v) = v - u - tau/2 [(A u + f(t, u)) + (A v + f(t + tau, v))].
fn trapezoid_step<F: Scalar>(
    config: &ImplicitStepperConfig<F>,
    op: &DirichletLaplacian1D<F>,
    spec: &ProblemSpec<F>,
    t_prev: F,
    tau: F,
    u_prev: &[F],
) -> Result<StateVector<F>> {
    let m = op.interior_points();
    if u_prev.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u_prev.len(),
        });
    }
    let half_tau = tau / F::from_f64(2.0);
    let t_next = t_prev + tau;

    let au = op.apply(u_prev)?;
    let fu = spec.source_state(t_prev, u_prev);
    let frozen: Vec<F> = (0..m)
        .map(|i| u_prev[i] + half_tau * (au[i] + fu[i]))
        .collect();

    let stiff_scale = F::one() + F::from_f64(2.0) * tau * op.scale();
    let mut v = u_prev.to_vec();
    let mut polish = 1usize;
    let mut residual_norm = F::infinity();
    for _ in 0..config.newton_max_iter {
        let av = op.apply(&v)?;
        let fv = spec.source_state(t_next, &v);
        let residual: Vec<F> = (0..m)
            .map(|i| v[i] - half_tau * (av[i] + fv[i]) - frozen[i])
            .collect();
        residual_norm = max_norm(&residual);
        if residual_norm <= config.newton_tol * (F::one() + stiff_scale * max_norm(&v).max(F::one()))
        {
            if polish == 0 {
                return Ok(v);
            }
            polish -= 1;
        }
        // J = I - tau/2 (A + diag f_u)
        let diag: Vec<F> = v
            .iter()
            .map(|&vi| {
                F::one()
                    - half_tau * (-F::from_f64(2.0) * op.scale() + spec.source_derivative(t_next, vi))
            })
            .collect();
        let delta = solve_tridiagonal_const_offdiag(-half_tau * op.scale(), &diag, &residual)?;
        for (vi, d) in v.iter_mut().zip(&delta) {
            *vi -= *d;
        }
    }
    Err(Error::NewtonDiverged {
        iterations: config.newton_max_iter,
        residual: residual_norm.to_f64(),
    })
}

/// Two-stage IRK by Newton on the stage equations
/// F_p = U_p - u - tau sum_q a_pq (A U_q + f(t + c_q tau, U_q)); each Newton
/// solve is one block-tridiagonal sweep over the grid.
fn two_stage_step<F: Scalar>(
    config: &ImplicitStepperConfig<F>,
    op: &DirichletLaplacian1D<F>,
    spec: &ProblemSpec<F>,
    t_prev: F,
    tau: F,
    u_prev: &[F],
) -> Result<StateVector<F>> {
    let m = op.interior_points();
    if u_prev.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u_prev.len(),
        });
    }
    let tab = tableau(config.method);
    let a: [[F; 2]; 2] = [
        [F::from_f64(tab.a[0][0]), F::from_f64(tab.a[0][1])],
        [F::from_f64(tab.a[1][0]), F::from_f64(tab.a[1][1])],
    ];
    let stage_times = [
        t_prev + F::from_f64(tab.c[0]) * tau,
        t_prev + F::from_f64(tab.c[1]) * tau,
    ];

    let mut stages = [u_prev.to_vec(), u_prev.to_vec()];
    let stiff_scale = F::one() + F::from_f64(4.0) * tau * op.scale();
    let off_coupling = -tau * op.scale();
    let two_scale = -F::from_f64(2.0) * op.scale();

    let mut polish = 1usize;
    let mut residual_norm = F::infinity();
    for _ in 0..config.newton_max_iter {
        let k0 = stage_rate(op, spec, stage_times[0], &stages[0])?;
        let k1 = stage_rate(op, spec, stage_times[1], &stages[1])?;
        let mut residual = vec![[F::zero(); 2]; m];
        for i in 0..m {
            residual[i][0] = stages[0][i] - u_prev[i] - tau * (a[0][0] * k0[i] + a[0][1] * k1[i]);
            residual[i][1] = stages[1][i] - u_prev[i] - tau * (a[1][0] * k0[i] + a[1][1] * k1[i]);
        }
        residual_norm = residual
            .iter()
            .map(|r| r[0].abs().max(r[1].abs()))
            .fold(F::zero(), F::max);
        let state_norm = max_norm(&stages[0]).max(max_norm(&stages[1])).max(F::one());
        if residual_norm <= config.newton_tol * (F::one() + stiff_scale * state_norm) {
            if polish == 0 {
                break;
            }
            polish -= 1;
        }

        // diagonal blocks  I - tau a .* (-2/h^2 + f_u(U_q));  off blocks  -tau a / h^2
        let mut diag = vec![[F::zero(); 4]; m];
        for i in 0..m {
            let d0 = two_scale + spec.source_derivative(stage_times[0], stages[0][i]);
            let d1 = two_scale + spec.source_derivative(stage_times[1], stages[1][i]);
            diag[i] = [
                F::one() - tau * a[0][0] * d0,
                -tau * a[0][1] * d1,
                -tau * a[1][0] * d0,
                F::one() - tau * a[1][1] * d1,
            ];
        }
        let off = [
            off_coupling * a[0][0],
            off_coupling * a[0][1],
            off_coupling * a[1][0],
            off_coupling * a[1][1],
        ];
        let delta = solve_block2_tridiagonal(&diag, off, &residual)?;
        for i in 0..m {
            stages[0][i] -= delta[i][0];
            stages[1][i] -= delta[i][1];
        }
    }
    let state_norm = max_norm(&stages[0]).max(max_norm(&stages[1])).max(F::one());
    if !(residual_norm <= config.newton_tol * (F::one() + stiff_scale * state_norm)) {
        return Err(Error::NewtonDiverged {
            iterations: config.newton_max_iter,
            residual: residual_norm.to_f64(),
        });
    }

    // u+ = u + d1 (U_1 - u) + d2 (U_2 - u); stiffly accurate Radau IIA is U_2
    if tab.update == [0.0, 1.0] {
        let [_, u_next] = stages;
        return Ok(u_next);
    }
    let d = [F::from_f64(tab.update[0]), F::from_f64(tab.update[1])];
    let mut out = u_prev.to_vec();
    for i in 0..m {
        out[i] += d[0] * (stages[0][i] - u_prev[i]) + d[1] * (stages[1][i] - u_prev[i]);
    }
    Ok(out)
}

fn stage_rate<F: Scalar>(
    op: &DirichletLaplacian1D<F>,
    spec: &ProblemSpec<F>,
    t: F,
    u: &[F],
) -> Result<StateVector<F>> {
    let mut rate = op.apply(u)?;
    for (r, &ui) in rate.iter_mut().zip(u) {
        *r += spec.source_value(t, ui);
    }
    Ok(rate)
}

/// Sweep the configured method over a uniform mesh with N steps.
pub fn solve_uniform<F: Scalar>(
    config: &ImplicitStepperConfig<F>,
    op: &DirichletLaplacian1D<F>,
    spec: &ProblemSpec<F>,
    horizon: F,
    n_steps: usize,
) -> Result<SolutionHistory<F>> {
    let mesh = TimeMesh::graded_relaxed(horizon, n_steps, F::zero())?;
    let tau = horizon / F::from_usize(n_steps);

    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(spec.initial_state(op));
    for n in 1..=n_steps {
        let t_prev = F::from_usize(n - 1) * tau;
        let u = implicit_step(config, op, spec, t_prev, tau, states.last().expect("nonempty"))
            .map_err(|e| Error::StepFailure {
                step: n,
                time: (t_prev + tau).to_f64(),
                reason: e.to_string(),
            })?;
        states.push(u);
    }
    Ok(SolutionHistory::new(
        mesh,
        states,
        config.method.classical_order(),
        0,
    ))
}
