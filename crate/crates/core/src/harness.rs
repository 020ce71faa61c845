//! Configuration-driven convergence studies: successive-refinement difference
//! tables, order estimation, and CSV/text emission.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::contour::k_schedule;
use crate::error::{Error, Result};
use crate::integrator;
use crate::mesh::{steps_for_nominal_step, TimeMesh};
use crate::operator::{max_norm, DirichletLaplacian1D};
use crate::problem::ProblemSpec;
use crate::reference::{solve_uniform, ImplicitMethod, ImplicitStepperConfig};
use crate::scalar::Scalar;
use crate::SolutionHistory;

/// Method selector for a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMethod {
    /// Exponential k-step scheme on the graded mesh.
    Exponential { order: usize },
    /// One-step implicit baseline on the uniform mesh.
    Implicit(ImplicitMethod),
}

impl StudyMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp_k1" => Ok(Self::Exponential { order: 1 }),
            "exp_k2" => Ok(Self::Exponential { order: 2 }),
            "exp_k3" => Ok(Self::Exponential { order: 3 }),
            "crank_nicolson" => Ok(Self::Implicit(ImplicitMethod::CrankNicolson)),
            "gauss2" => Ok(Self::Implicit(ImplicitMethod::Gauss2)),
            "radau2" => Ok(Self::Implicit(ImplicitMethod::Radau2)),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (known: exp_k1, exp_k2, exp_k3, crank_nicolson, gauss2, radau2)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Exponential { order } => format!("exp_k{order}"),
            Self::Implicit(m) => m.label().to_string(),
        }
    }
}

/// One convergence study: a (T, tau) grid of solves of a single method.
#[derive(Debug, Clone)]
pub struct StudyConfig<F> {
    pub problem: String,
    pub method: StudyMethod,
    pub t_values: Vec<F>,
    /// Nominal stepsizes, coarsest to finest, each half the previous.
    pub tau_values: Vec<F>,
    pub beta: F,
    pub alpha: F,
    /// c in the node schedule K = ceil(c ln(1/tau)).
    pub k_multiplier: F,
    pub spatial_points: usize,
    pub out_path: Option<String>,
}

impl<F: Scalar> StudyConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() {
            return Err(Error::Config("t_values must not be empty".into()));
        }
        if self.tau_values.len() < 3 {
            return Err(Error::Config(
                "tau_values needs at least 3 entries for order estimation".into(),
            ));
        }
        for w in self.tau_values.windows(2) {
            let ratio = w[0] / w[1];
            if (ratio - F::from_f64(2.0)).abs() > F::from_f64(1e-9) {
                return Err(Error::Config(format!(
                    "tau_values must halve step to step, got ratio {ratio}"
                )));
            }
        }
        if !(self.beta >= F::zero() && self.beta < F::one()) {
            return Err(Error::Config(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if self.spatial_points == 0 {
            return Err(Error::Config("spatial_points must be positive".into()));
        }
        if !(self.k_multiplier > F::zero()) {
            return Err(Error::Config("k_mult must be positive".into()));
        }
        Ok(())
    }

    /// Parse the flat key/value config format (see the repository README).
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_flat_config(text)?;
        let mut cfg = StudyConfig {
            problem: "allen_cahn_step".to_string(),
            method: StudyMethod::Exponential { order: 2 },
            t_values: Vec::new(),
            tau_values: Vec::new(),
            beta: F::from_f64(0.75),
            alpha: F::FRAC_PI_4(),
            k_multiplier: F::from_f64(10.0),
            spatial_points: 1023,
            out_path: None,
        };
        let mut seen_method = false;
        for (key, value) in &kv {
            match key.as_str() {
                "schema" => {}
                "problem" => cfg.problem = value.clone(),
                "method" => {
                    cfg.method = StudyMethod::parse(value)?;
                    seen_method = true;
                }
                "t_values" => cfg.t_values = parse_number_list(value)?,
                "tau_values" => cfg.tau_values = parse_number_list(value)?,
                "beta" => cfg.beta = parse_number(value)?,
                "alpha" => cfg.alpha = parse_number(value)?,
                "k_mult" => cfg.k_multiplier = parse_number(value)?,
                "spatial_points" => {
                    cfg.spatial_points = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad spatial_points '{value}'")))?
                }
                "out" => cfg.out_path = Some(value.clone()),
                other => {
                    return Err(Error::Config(format!("unknown config key '{other}'")));
                }
            }
        }
        if !seen_method {
            return Err(Error::Config("config is missing 'method'".into()));
        }
        if cfg.t_values.is_empty() {
            return Err(Error::Config("config is missing 't_values'".into()));
        }
        if cfg.tau_values.is_empty() {
            return Err(Error::Config("config is missing 'tau_values'".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One (T, tau) cell of a study.
#[derive(Debug, Clone)]
pub struct CellResult<F> {
    pub method: String,
    pub t_final: F,
    pub tau: F,
    pub steps: usize,
    pub contour_nodes: usize,
    /// max-norm distance to the half-stepsize solve; absent on the finest row
    /// of each T and on failed cells.
    pub diff_norm: Option<F>,
    pub order_two_point: Option<F>,
    pub order_least_squares: Option<F>,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

/// Per-horizon order estimates.
#[derive(Debug, Clone, Copy)]
pub struct OrderSummary<F> {
    pub t_final: F,
    pub two_point: F,
    pub least_squares: F,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport<F> {
    pub cells: Vec<CellResult<F>>,
    pub orders: Vec<OrderSummary<F>>,
    pub failures: usize,
}

/// Max-norm of the difference of final states of two solves that must share
/// the horizon and the spatial grid.
pub fn successive_difference<F: Scalar>(
    coarse: &SolutionHistory<F>,
    fine: &SolutionHistory<F>,
) -> Result<F> {
    let a = coarse.final_state();
    let b = fine.final_state();
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let ta = coarse.mesh().horizon();
    let tb = fine.mesh().horizon();
    if (ta - tb).abs() > F::from_f64(8.0) * F::epsilon() * ta.abs().max(tb.abs()) {
        return Err(Error::InvalidInput(format!(
            "histories end at different horizons: {ta} vs {tb}"
        )));
    }
    let diff: Vec<F> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    Ok(max_norm(&diff))
}

/// Order estimates from a coarse-to-fine difference sequence: the two-point
/// value log2 of the last pair's ratio, and the negated least-squares slope
/// of log2(d) against the refinement index.
pub fn estimate_order<F: Scalar>(diffs: &[F]) -> Result<(F, F)> {
    if diffs.len() < 2 {
        return Err(Error::InvalidInput(
            "order estimation needs at least two differences".into(),
        ));
    }
    if diffs.iter().any(|d| !(*d > F::zero())) {
        return Err(Error::InvalidInput(
            "order estimation needs positive differences".into(),
        ));
    }
    let n = diffs.len();
    let two_point = (diffs[n - 2] / diffs[n - 1]).log2();

    let ys: Vec<F> = diffs.iter().map(|d| d.log2()).collect();
    let xbar = F::from_usize(n - 1) / F::from_f64(2.0);
    let ybar = ys.iter().fold(F::zero(), |a, &y| a + y) / F::from_usize(n);
    let mut num = F::zero();
    let mut den = F::zero();
    for (i, &y) in ys.iter().enumerate() {
        let dx = F::from_usize(i) - xbar;
        num += dx * (y - ybar);
        den += dx * dx;
    }
    Ok((two_point, -(num / den)))
}

/// Solved cell: the history plus the (steps, contour nodes) it was run with.
type SolvedCell<F> = (SolutionHistory<F>, usize, usize);

fn run_cell<F: Scalar>(config: &StudyConfig<F>, t_final: F, tau: F) -> Result<SolvedCell<F>> {
    let op = DirichletLaplacian1D::new(config.spatial_points)?;
    let spec = ProblemSpec::by_label(&config.problem, t_final)?;
    match config.method {
        StudyMethod::Exponential { order } => {
            let steps = steps_for_nominal_step(t_final, tau, config.beta)?;
            let mesh = TimeMesh::graded(t_final, steps.max(order + 1), config.beta)?;
            let nodes = k_schedule(tau, config.k_multiplier);
            let history =
                integrator::solve_with_alpha(&op, &spec, &mesh, order, nodes, config.alpha)?;
            Ok((history, steps, nodes))
        }
        StudyMethod::Implicit(method) => {
            let ratio = (t_final / tau).to_f64();
            let steps = ratio.round() as usize;
            if steps == 0 || (ratio - steps as f64).abs() > 1e-9 * ratio.abs() {
                return Err(Error::Config(format!(
                    "uniform method needs tau dividing T, got T = {t_final}, tau = {tau}"
                )));
            }
            let stepper = ImplicitStepperConfig::new(method);
            let history = solve_uniform(&stepper, &op, &spec, t_final, steps)?;
            Ok((history, steps, 0))
        }
    }
}

/// Run every (T, tau) solve of the study (cells in parallel), then assemble
/// successive differences and order estimates. Failed cells are recorded and
/// skipped; everything downstream of a failed solve within its T column is
/// left empty.
pub fn run_study<F: Scalar>(config: &StudyConfig<F>) -> Result<ConvergenceReport<F>> {
    config.validate()?;
    let jobs: Vec<(F, F)> = config
        .t_values
        .iter()
        .flat_map(|&t| config.tau_values.iter().map(move |&tau| (t, tau)))
        .collect();

    let outcomes: Vec<(Result<SolvedCell<F>>, f64)> = jobs
        .par_iter()
        .map(|&(t, tau)| {
            let start = Instant::now();
            let out = run_cell(config, t, tau);
            (out, start.elapsed().as_secs_f64())
        })
        .collect();

    let label = config.method.label();
    let n_tau = config.tau_values.len();
    let mut cells = Vec::with_capacity(jobs.len());
    let mut orders = Vec::new();
    let mut failures = 0usize;

    for (ti, &t_final) in config.t_values.iter().enumerate() {
        let row = &outcomes[ti * n_tau..(ti + 1) * n_tau];
        // column of diffs for this horizon
        let mut diffs: Vec<Option<F>> = vec![None; n_tau];
        for i in 0..n_tau - 1 {
            if let (Ok(coarse), Ok(fine)) = (&row[i].0, &row[i + 1].0) {
                diffs[i] = successive_difference(&coarse.0, &fine.0).ok();
            }
        }
        // longest contiguous run of diffs from the coarse end; a failed solve
        // truncates the order estimate rather than corrupting it
        let full: Vec<F> = diffs
            .iter()
            .take(n_tau - 1)
            .map_while(|d| *d)
            .collect();
        let order_pair = if full.len() >= 2 {
            estimate_order(&full).ok()
        } else {
            None
        };
        if let Some((two_point, least_squares)) = order_pair {
            orders.push(OrderSummary {
                t_final,
                two_point,
                least_squares,
            });
        }

        for (i, &tau) in config.tau_values.iter().enumerate() {
            let (outcome, wall) = &row[i];
            let is_last = i == n_tau - 1;
            match outcome {
                Ok((_, steps, nodes)) => cells.push(CellResult {
                    method: label.clone(),
                    t_final,
                    tau,
                    steps: *steps,
                    contour_nodes: *nodes,
                    diff_norm: diffs[i],
                    order_two_point: if is_last { order_pair.map(|p| p.0) } else { None },
                    order_least_squares: if is_last { order_pair.map(|p| p.1) } else { None },
                    wall_seconds: *wall,
                    error: None,
                }),
                Err(e) => {
                    failures += 1;
                    cells.push(CellResult {
                        method: label.clone(),
                        t_final,
                        tau,
                        steps: 0,
                        contour_nodes: 0,
                        diff_norm: None,
                        order_two_point: None,
                        order_least_squares: None,
                        wall_seconds: *wall,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }

    Ok(ConvergenceReport {
        cells,
        orders,
        failures,
    })
}

fn fmt_opt<F: Scalar>(v: Option<F>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// CSV emission; one row per cell, order estimates on the finest row of each
/// horizon. Deterministic except for the wall_seconds column.
pub fn emit_csv<F: Scalar>(report: &ConvergenceReport<F>) -> String {
    let mut out = String::new();
    out.push_str("method,T,tau,N,K,diff_norm,order_two_point,order_lsq,wall_seconds\n");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            c.method,
            c.t_final,
            c.tau,
            c.steps,
            c.contour_nodes,
            fmt_opt(c.diff_norm),
            fmt_opt(c.order_two_point),
            fmt_opt(c.order_least_squares),
            c.wall_seconds,
        );
    }
    out
}

/// Text table mirroring the reference layout: cells grouped by horizon with
/// an order-of-convergence row closing each group.
pub fn emit_table<F: Scalar>(report: &ConvergenceReport<F>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>10} {:>12} {:>8} {:>5} {:>13} {:>10}",
        "method", "T", "tau", "N", "K", "diff_norm", "wall_s"
    );
    let mut current_t: Option<F> = None;
    for c in &report.cells {
        if let Some(t) = current_t {
            if t != c.t_final {
                emit_order_row(&mut out, report, t);
            }
        }
        current_t = Some(c.t_final);
        let diff = c
            .diff_norm
            .map(|d| format!("{d:.3e}"))
            .unwrap_or_else(|| if c.error.is_some() { "FAILED".into() } else { "-".into() });
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>12} {:>8} {:>5} {:>13} {:>10.3}",
            c.method,
            format!("{}", c.t_final),
            format!("{}", c.tau),
            c.steps,
            c.contour_nodes,
            diff,
            c.wall_seconds,
        );
    }
    if let Some(t) = current_t {
        emit_order_row(&mut out, report, t);
    }
    out
}

fn emit_order_row<F: Scalar>(out: &mut String, report: &ConvergenceReport<F>, t: F) {
    if let Some(o) = report.orders.iter().find(|o| o.t_final == t) {
        let _ = writeln!(
            out,
            "order of convergence at T={}: two-point {:.2}, least-squares {:.2}",
            t, o.two_point, o.least_squares
        );
    } else {
        let _ = writeln!(out, "order of convergence at T={t}: unavailable");
    }
}

/// Single-run description for the `solve` subcommand.
#[derive(Debug, Clone)]
pub struct SingleRunConfig<F> {
    pub problem: String,
    pub method: StudyMethod,
    pub t_final: F,
    pub tau: F,
    pub beta: F,
    pub alpha: F,
    pub k_multiplier: F,
    pub spatial_points: usize,
    pub out_path: Option<String>,
}

impl<F: Scalar> SingleRunConfig<F> {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_flat_config(text)?;
        let mut cfg = SingleRunConfig {
            problem: "allen_cahn_step".to_string(),
            method: StudyMethod::Exponential { order: 2 },
            t_final: F::from_f64(0.5),
            tau: F::from_f64(1.0 / 64.0),
            beta: F::from_f64(0.75),
            alpha: F::FRAC_PI_4(),
            k_multiplier: F::from_f64(10.0),
            spatial_points: 1023,
            out_path: None,
        };
        for (key, value) in &kv {
            match key.as_str() {
                "schema" => {}
                "problem" => cfg.problem = value.clone(),
                "method" => cfg.method = StudyMethod::parse(value)?,
                "t_final" => cfg.t_final = parse_number(value)?,
                "tau" => cfg.tau = parse_number(value)?,
                "beta" => cfg.beta = parse_number(value)?,
                "alpha" => cfg.alpha = parse_number(value)?,
                "k_mult" => cfg.k_multiplier = parse_number(value)?,
                "spatial_points" => {
                    cfg.spatial_points = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad spatial_points '{value}'")))?
                }
                "out" => cfg.out_path = Some(value.clone()),
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    /// Run the single solve described by the config.
    pub fn run(&self) -> Result<SolutionHistory<F>> {
        let study = StudyConfig {
            problem: self.problem.clone(),
            method: self.method,
            t_values: vec![self.t_final],
            tau_values: vec![self.tau],
            beta: self.beta,
            alpha: self.alpha,
            k_multiplier: self.k_multiplier,
            spatial_points: self.spatial_points,
            out_path: None,
        };
        run_cell(&study, self.t_final, self.tau).map(|(history, _, _)| history)
    }
}

/// Flat `key = value` lines; '#' starts a comment; a `schema = 1` line is
/// required.
fn parse_flat_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut schema_seen = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key == "schema" {
            if value != "1" {
                return Err(Error::Config(format!(
                    "unsupported schema version '{value}' (expected 1)"
                )));
            }
            schema_seen = true;
        }
        out.push((key, value));
    }
    if !schema_seen {
        return Err(Error::Config("config is missing 'schema = 1'".into()));
    }
    Ok(out)
}

/// Number literal: decimal or a p/q fraction.
pub fn parse_number<F: Scalar>(s: &str) -> Result<F> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number '{s}'")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number '{s}'")))?;
        if d == 0.0 {
            return Err(Error::Config(format!("zero denominator in '{s}'")));
        }
        Ok(F::from_f64(n / d))
    } else {
        s.parse::<f64>()
            .map(F::from_f64)
            .map_err(|_| Error::Config(format!("bad number '{s}'")))
    }
}

fn parse_number_list<F: Scalar>(s: &str) -> Result<Vec<F>> {
    s.split(',').map(parse_number).collect()
}
