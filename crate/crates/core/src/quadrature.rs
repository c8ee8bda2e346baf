//! Gauss–Legendre quadrature.

use crate::basis::legendre;

/// Node count per subinterval used throughout unless overridden.
pub const DEFAULT_QUAD_NODES: usize = 24;

/// An `n`-point Gauss–Legendre rule on `[−1, 1]`, exact for polynomials of
/// degree `≤ 2n − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `p_n`, found by Newton iteration from the
    /// Tricomi initial guesses; weights are `2 / ((1 − x²) p_n'(x)²)`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss–Legendre rule needs at least one node");
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let p = legendre(n, x);
                let p_prev = legendre(n - 1, x);
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            // final derivative at the converged root
            let p = legendre(n, x);
            let p_prev = legendre(n - 1, x);
            if x * x != 1.0 {
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // roots come out descending; store ascending and mirror
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(node, weight)` pairs on `[−1, 1]`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `∫_a^b f` by the affine-mapped rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}

impl Default for GaussLegendre {
    fn default() -> Self {
        Self::new(DEFAULT_QUAD_NODES)
    }
}
