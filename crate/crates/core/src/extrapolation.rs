//! Lagrange extrapolation of the nonlinearity history and its Laplace
//! transform.
//!
//! For a k-step scheme the source term on (t_{n-1}, t_n] is replaced by the
//! degree-(k-1) polynomial through the k most recent values f(t_{n-j}, u_{n-j});
//! the contour quadrature needs its Laplace transform, which is evaluated from
//! monomial coefficients in the shifted variable s = t - t_{n-1} via
//! L{s^m}(z) = m!/z^{m+1}.

use log::warn;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{pivot_floor, Scalar};

/// Practical cap on the extrapolation order.
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone)]
pub struct ExtrapolationStencil<F> {
    nodes: Vec<F>,
    shift: F,
    /// coeffs[j-1][m] is the coefficient of s^m in L_{j,n}(s), where j = 1
    /// indexes the most recent node t_{n-1}.
    coeffs: Vec<Vec<F>>,
}

impl<F: Scalar> ExtrapolationStencil<F> {
    /// Build the stencil on the history nodes t_{n-k} < ... < t_{n-1}.
    pub fn build(nodes: &[F]) -> Result<Self> {
        let k = nodes.len();
        if k == 0 || k > MAX_ORDER {
            return Err(Error::InvalidInput(format!(
                "stencil order must lie in 1..={MAX_ORDER}, got {k}"
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(
                    "stencil nodes must be strictly increasing".into(),
                ));
            }
        }
        let shift = nodes[k - 1];
        // shifted nodes, most recent first: s_j = t_{n-j} - t_{n-1}, j = 1..k
        let shifted: Vec<F> = (0..k).map(|j| nodes[k - 1 - j] - shift).collect();

        if k >= 2 {
            let mut min_gap = F::infinity();
            let mut max_gap = F::zero();
            for w in nodes.windows(2) {
                let gap = w[1] - w[0];
                min_gap = min_gap.min(gap);
                max_gap = max_gap.max(gap);
            }
            if max_gap / min_gap > F::from_f64(1e6) {
                warn!(
                    "extrapolation stencil spacing ratio {:e} exceeds 1e6; \
                     coefficients may be ill-conditioned",
                    (max_gap / min_gap).to_f64()
                );
            }
        }

        let mut coeffs = Vec::with_capacity(k);
        for j in 0..k {
            coeffs.push(lagrange_monomials(&shifted, j));
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            shift,
            coeffs,
        })
    }

    /// Order-1 stencil: constant extrapolation of the latest value.
    pub fn constant(node: F) -> Self {
        Self {
            nodes: vec![node],
            shift: node,
            coeffs: vec![vec![F::one()]],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    /// The shift t_{n-1} the monomial basis is centered on.
    pub fn shift(&self) -> F {
        self.shift
    }

    /// Monomial coefficient c_{j,m}; j in 1..=k, m in 0..k.
    pub fn coefficient(&self, j: usize, m: usize) -> F {
        self.coeffs[j - 1][m]
    }

    /// Evaluate L_{j,n}(s) in the time domain.
    pub fn evaluate(&self, j: usize, s: F) -> F {
        let c = &self.coeffs[j - 1];
        let mut acc = F::zero();
        for &cm in c.iter().rev() {
            acc = acc * s + cm;
        }
        acc
    }

    /// Laplace transform of L_{j,n}: sum_m c_{j,m} m! / z^{m+1}.
    pub fn laplace_at(&self, j: usize, z: Complex<F>) -> Result<Complex<F>> {
        if z.norm_sqr().sqrt() < pivot_floor::<F>() {
            return Err(Error::InvalidInput(
                "Laplace transform evaluated too close to z = 0".into(),
            ));
        }
        let c = &self.coeffs[j - 1];
        let inv = z.finv();
        let mut power = inv; // 1/z^{m+1}
        let mut factorial = F::one();
        let mut acc = power * c[0];
        for (m, &cm) in c.iter().enumerate().skip(1) {
            power *= inv;
            factorial *= F::from_usize(m);
            acc += power * (cm * factorial);
        }
        Ok(acc)
    }

    /// ghat(z) = sum_j Lhat_{j,n}(z) f_{n-j} for the history ordered most
    /// recent first (f_history[j-1] = f(t_{n-j}, u_{n-j})).
    pub fn ghat_at(&self, f_history: &[Vec<F>], z: Complex<F>) -> Result<Vec<Complex<F>>> {
        let k = self.order();
        if f_history.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: f_history.len(),
            });
        }
        let dim = f_history[0].len();
        let mut acc = vec![Complex::new(F::zero(), F::zero()); dim];
        for (j, f) in f_history.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.len(),
                });
            }
            let lhat = self.laplace_at(j + 1, z)?;
            for (a, &fi) in acc.iter_mut().zip(f) {
                *a += lhat * fi;
            }
        }
        Ok(acc)
    }
}

/// Monomial coefficients of the Lagrange basis polynomial that is 1 at
/// nodes[j] and 0 at the others, by divided differences of the indicator
/// data followed by Newton-to-monomial expansion.
fn lagrange_monomials<F: Scalar>(nodes: &[F], j: usize) -> Vec<F> {
    let k = nodes.len();
    // divided-difference coefficients of the data e_j
    let mut dd: Vec<F> = (0..k)
        .map(|i| if i == j { F::one() } else { F::zero() })
        .collect();
    for level in 1..k {
        for i in (level..k).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    // expand the Newton form dd[0] + dd[1](s - x_0) + dd[2](s - x_0)(s - x_1) + ...
    // from the innermost coefficient outward
    let mut mono = vec![F::zero(); k];
    mono[0] = dd[k - 1];
    let mut degree = 0;
    for i in (0..k - 1).rev() {
        // mono <- mono * (s - x_i) + dd[i]
        degree += 1;
        for m in (1..=degree).rev() {
            mono[m] = mono[m - 1] - nodes[i] * mono[m];
        }
        mono[0] = dd[i] - nodes[i] * mono[0];
    }
    mono
}
