//! Gauss-Legendre rules with adaptive bisection.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Chebyshev-like initial guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Refines `[a, b]` by bisection until the one-panel and two-panel
    /// estimates agree to `max(abs_tol, rel_tol·|I|)`.
    pub fn adaptive(
        &self,
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        let whole = self.integrate(f, a, b);
        self.refine(f, a, b, whole, abs_tol, rel_tol, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        abs_tol: f64,
        rel_tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.integrate(f, a, mid);
        let right = self.integrate(f, mid, b);
        let halves = left + right;
        let err = (halves - whole).abs();
        // Differences at the level of rounding in the panel sums cannot shrink.
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if err <= abs_tol.max(rel_tol * halves.abs()).max(floor) {
            return Ok(halves);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature { estimate: err });
        }
        let l = self.refine(f, a, mid, left, 0.5 * abs_tol, rel_tol, depth + 1)?;
        let r = self.refine(f, mid, b, right, 0.5 * abs_tol, rel_tol, depth + 1)?;
        Ok(l + r)
    }

    /// Equal-width panels over `[a, b]`, each refined adaptively.
    pub fn composite(
        &self,
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        panels: usize,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        let h = (b - a) / panels as f64;
        let per_panel = abs_tol / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                let hi = if i + 1 == panels { b } else { lo + h };
                self.adaptive(f, lo, hi, per_panel, rel_tol)
            })
            .sum()
    }
}

const MAX_DEPTH: u32 = 40;

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two_and_polynomials_exact() {
        for n in [1, 2, 5, 10, 20] {
            let gl = GaussLegendre::new(n);
            assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            // exact for degree 2n-1
            let deg = 2 * n - 1;
            let v = gl.integrate(&|x: f64| x.powi(deg as i32) + x.powi((deg - 1) as i32), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0) + 1.0 / deg as f64;
            assert_relative_eq!(v, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let gl = GaussLegendre::new(10);
        let v = gl
            .adaptive(&|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-13, 1e-13)
            .unwrap();
        assert_relative_eq!(v, 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan(), max_relative = 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let gl = GaussLegendre::new(2);
        let err = gl
            .adaptive(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-15, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
