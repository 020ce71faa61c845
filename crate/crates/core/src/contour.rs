//! Hyperbola contour rules for inverse-Laplace quadrature of the propagator.
//!
//! The contour is Gamma_lambda = { lambda (1 - sin(alpha + i s)) : s real },
//! discretized with 2K+1 trapezoid nodes z_l = lambda (1 - sin(alpha + i l h))
//! and weights w_l = (lambda h / 2 pi) cos(alpha + i l h). With
//! theta = 1 - 1/K, d = alpha/2, a(theta) = arccosh(1/((1-theta) sin alpha)),
//! h = a(theta)/K and lambda = 2 pi d K (1-theta) / (tau a(theta)), the sum
//!
//!   sum_l w_l e^{tau z_l} (z_l - A)^{-1} r(z_l)
//!
//! converges geometrically in K to the time-tau propagation of r.

use std::io::Write;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-(K, alpha) quantities: everything in the rule except the time scale.
/// Building one of these once and calling [`ContourParams::rule_for`] per step
/// avoids re-evaluating the transcendental node functions.
#[derive(Debug, Clone)]
pub struct ContourParams<F> {
    alpha: F,
    half_count: usize,
    theta: F,
    half_width: F,
    a_theta: F,
    spacing: F,
    // sin/cos of (alpha + i l h) for l = 0..=K
    sin_tab: Vec<Complex<F>>,
    cos_tab: Vec<Complex<F>>,
}

impl<F: Scalar> ContourParams<F> {
    pub fn new(half_count: usize, alpha: F) -> Result<Self> {
        if half_count < 2 {
            return Err(Error::InvalidInput(format!(
                "contour needs K >= 2 nodes, got {half_count}"
            )));
        }
        if !(alpha > F::zero() && alpha < F::FRAC_PI_2()) {
            return Err(Error::InvalidInput(format!(
                "contour half-angle must lie in (0, pi/2), got {alpha}"
            )));
        }
        let k_f = F::from_usize(half_count);
        let theta = F::one() - k_f.recip();
        let arg = ((F::one() - theta) * alpha.sin()).recip();
        if arg < F::one() {
            // cannot happen for K >= 2, alpha < pi/2
            return Err(Error::InvalidInput(format!(
                "arccosh domain violation: (1-theta) sin(alpha) >= 1 (argument {arg})"
            )));
        }
        let a_theta = arg.acosh();
        let spacing = a_theta / k_f;
        let mut sin_tab = Vec::with_capacity(half_count + 1);
        let mut cos_tab = Vec::with_capacity(half_count + 1);
        for l in 0..=half_count {
            let s = Complex::new(alpha, F::from_usize(l) * spacing);
            sin_tab.push(s.sin());
            cos_tab.push(s.cos());
        }
        Ok(Self {
            alpha,
            half_count,
            theta,
            half_width: alpha / F::from_f64(2.0),
            a_theta,
            spacing,
            sin_tab,
            cos_tab,
        })
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn a_theta(&self) -> F {
        self.a_theta
    }

    pub fn spacing(&self) -> F {
        self.spacing
    }

    /// Instantiate the rule for one stepsize: lambda = 2 pi d K (1-theta) / (tau a).
    pub fn rule_for(&self, tau: F) -> Result<ContourRule<F>> {
        if !(tau > F::zero()) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "contour needs a positive stepsize, got {tau}"
            )));
        }
        let k = self.half_count;
        let k_f = F::from_usize(k);
        let two_pi = F::PI() + F::PI();
        let lambda =
            two_pi * self.half_width * k_f * (F::one() - self.theta) / (tau * self.a_theta);

        let mut nodes = vec![Complex::new(F::zero(), F::zero()); 2 * k + 1];
        let mut weights = vec![Complex::new(F::zero(), F::zero()); 2 * k + 1];
        let weight_scale = lambda * self.spacing / two_pi;
        for l in 0..=k {
            let z = (Complex::new(F::one(), F::zero()) - self.sin_tab[l]) * lambda;
            let w = self.cos_tab[l] * weight_scale;
            nodes[k + l] = z;
            weights[k + l] = w;
            // conjugate symmetry holds exactly by construction
            nodes[k - l] = z.conj();
            weights[k - l] = w.conj();
        }
        Ok(ContourRule {
            alpha: self.alpha,
            half_count: k,
            theta: self.theta,
            half_width: self.half_width,
            a_theta: self.a_theta,
            spacing: self.spacing,
            lambda,
            tau,
            nodes,
            weights,
        })
    }
}

/// One quadrature rule: the 2K+1 nodes and weights on Gamma_lambda for a
/// specific stepsize tau.
#[derive(Debug, Clone)]
pub struct ContourRule<F> {
    alpha: F,
    half_count: usize,
    theta: F,
    half_width: F,
    a_theta: F,
    spacing: F,
    lambda: F,
    tau: F,
    nodes: Vec<Complex<F>>,
    weights: Vec<Complex<F>>,
}

impl<F: Scalar> ContourRule<F> {
    pub fn build(tau: F, half_count: usize, alpha: F) -> Result<Self> {
        ContourParams::new(half_count, alpha)?.rule_for(tau)
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    /// d = alpha / 2.
    pub fn half_width(&self) -> F {
        self.half_width
    }

    pub fn a_theta(&self) -> F {
        self.a_theta
    }

    /// h = a(theta) / K.
    pub fn spacing(&self) -> F {
        self.spacing
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    /// The stepsize this rule was built for.
    pub fn tau(&self) -> F {
        self.tau
    }

    /// Node z_l for l in -K..=K.
    pub fn node(&self, l: isize) -> Complex<F> {
        self.nodes[(l + self.half_count as isize) as usize]
    }

    /// Weight w_l for l in -K..=K.
    pub fn weight(&self, l: isize) -> Complex<F> {
        self.weights[(l + self.half_count as isize) as usize]
    }

    /// Diagnostic dump, one row per node: l, Re z, Im z, Re w, Im w.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "l,re_z,im_z,re_w,im_w")?;
        let k = self.half_count as isize;
        for l in -k..=k {
            let z = self.node(l);
            let wt = self.weight(l);
            writeln!(w, "{},{:e},{:e},{:e},{:e}", l, z.re, z.im, wt.re, wt.im)?;
        }
        Ok(())
    }
}

/// Node-count schedule K = ceil(c ln(1/tau)), floored at 8.
pub fn k_schedule<F: Scalar>(tau_max: F, multiplier: F) -> usize {
    let raw = (multiplier * tau_max.recip().ln()).ceil().to_f64();
    if raw.is_finite() && raw > 8.0 {
        raw as usize
    } else {
        8
    }
}

/// Evaluate Re[ w_0 e^{tau z_0} R(z_0) + 2 sum_{l=1}^{K} w_l e^{tau z_l} R(z_l) ]
/// where R(z) = resolvent(z, rhs(z)). Valid when the node function satisfies
/// r(conj z) = conj r(z), which holds for real data; the negative-l terms are
/// then the conjugates of the positive-l ones.
///
/// The node terms are independent and could be evaluated concurrently
/// (the resolvent callback must then be safe for concurrent invocation); the
/// reduction is a fixed-order sum from l = 0 upward so results stay
/// bit-reproducible.
pub fn quadrature_apply<F, R, G>(
    rule: &ContourRule<F>,
    tau: F,
    mut resolvent: R,
    mut rhs_at_node: G,
) -> Result<Vec<F>>
where
    F: Scalar,
    R: FnMut(Complex<F>, &[Complex<F>]) -> Result<Vec<Complex<F>>>,
    G: FnMut(Complex<F>) -> Result<Vec<Complex<F>>>,
{
    check_tau(rule, tau)?;
    let two = F::from_f64(2.0);
    let mut acc: Vec<F> = Vec::new();
    for l in 0..=rule.half_count() as isize {
        let term = node_term(rule, tau, l, &mut resolvent, &mut rhs_at_node)?;
        if acc.is_empty() {
            acc = term.iter().map(|c| c.re).collect();
        } else {
            if term.len() != acc.len() {
                return Err(Error::DimensionMismatch {
                    expected: acc.len(),
                    got: term.len(),
                });
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += two * t.re;
            }
        }
    }
    ensure_finite(&acc)?;
    Ok(acc)
}

/// Full 2K+1 summation without the conjugate-pair reduction; for node
/// functions without conjugate symmetry (arbitrary complex data), and as the
/// reference the reduced form is tested against.
pub fn quadrature_apply_full<F, R, G>(
    rule: &ContourRule<F>,
    tau: F,
    mut resolvent: R,
    mut rhs_at_node: G,
) -> Result<Vec<F>>
where
    F: Scalar,
    R: FnMut(Complex<F>, &[Complex<F>]) -> Result<Vec<Complex<F>>>,
    G: FnMut(Complex<F>) -> Result<Vec<Complex<F>>>,
{
    check_tau(rule, tau)?;
    let k = rule.half_count() as isize;
    let mut acc: Vec<F> = Vec::new();
    for l in -k..=k {
        let term = node_term(rule, tau, l, &mut resolvent, &mut rhs_at_node)?;
        if acc.is_empty() {
            acc = term.iter().map(|c| c.re).collect();
        } else {
            if term.len() != acc.len() {
                return Err(Error::DimensionMismatch {
                    expected: acc.len(),
                    got: term.len(),
                });
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t.re;
            }
        }
    }
    ensure_finite(&acc)?;
    Ok(acc)
}

fn check_tau<F: Scalar>(rule: &ContourRule<F>, tau: F) -> Result<()> {
    let slack = F::from_f64(4.0) * F::epsilon() * rule.tau();
    if (tau - rule.tau()).abs() > slack {
        return Err(Error::InvalidInput(format!(
            "rule was built for tau = {:e} but applied with tau = {:e}",
            rule.tau(),
            tau
        )));
    }
    Ok(())
}

fn node_term<F, R, G>(
    rule: &ContourRule<F>,
    tau: F,
    l: isize,
    resolvent: &mut R,
    rhs_at_node: &mut G,
) -> Result<Vec<Complex<F>>>
where
    F: Scalar,
    R: FnMut(Complex<F>, &[Complex<F>]) -> Result<Vec<Complex<F>>>,
    G: FnMut(Complex<F>) -> Result<Vec<Complex<F>>>,
{
    let z = rule.node(l);
    let exponent = z * tau;
    if exponent.re > F::from_f64(700.0) {
        return Err(Error::NonFinite {
            context: format!("contour exponent tau*Re(z) = {:e} at node {l}", exponent.re),
        });
    }
    let factor = rule.weight(l) * exponent.exp();
    let rhs = rhs_at_node(z)?;
    let mut x = resolvent(z, &rhs)?;
    for xi in x.iter_mut() {
        *xi *= factor;
    }
    Ok(x)
}

fn ensure_finite<F: Scalar>(v: &[F]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "quadrature output".into(),
        });
    }
    Ok(())
}
