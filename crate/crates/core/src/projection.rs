//! Hybrid-basis coefficients of functions and kernels.
//!
//! `f_{km} = ⟨f, b_{km}⟩ / ⟨b_{km}, b_{km}⟩` with the normalisation
//! `⟨b_{km}, b_{km}⟩ = 1/(q(2m+1))` taken in closed form. Inner products are
//! evaluated by a Gauss–Legendre rule applied block by block.

use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::basis::{legendre_all, BasisConfig};
use crate::operators::{OpMatrix, OpRole};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Coefficients of `Cᵀ B(t)`, indexed by flat hybrid position.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    values: DVector<f64>,
    cfg: BasisConfig,
}

impl CoeffVector {
    pub fn new(values: DVector<f64>, cfg: BasisConfig) -> Result<Self> {
        if values.len() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: values.len(),
            });
        }
        Ok(Self { values, cfg })
    }

    pub fn from_slice(values: &[f64], cfg: BasisConfig) -> Result<Self> {
        Self::new(DVector::from_column_slice(values), cfg)
    }

    pub fn zeros(cfg: BasisConfig) -> Self {
        Self {
            values: DVector::zeros(cfg.dim()),
            cfg,
        }
    }

    /// Coefficients of the constant function `c`: `c` at every `(k, 0)`.
    pub fn constant(c: f64, cfg: BasisConfig) -> Self {
        let mut values = DVector::zeros(cfg.dim());
        for block in 0..cfg.q() {
            values[block * cfg.r()] = c;
        }
        Self { values, cfg }
    }

    pub fn cfg(&self) -> &BasisConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// The `r` coefficients of one-based block `k`.
    pub fn block(&self, k: usize) -> &[f64] {
        let r = self.cfg.r();
        &self.values.as_slice()[(k - 1) * r..k * r]
    }
}

impl Index<usize> for CoeffVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Galerkin matrix `G` of a kernel: `g(t, s) ≃ Bᵀ(t) G B(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    cfg: BasisConfig,
}

impl KernelMatrix {
    pub fn cfg(&self) -> &BasisConfig {
        &self.cfg
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_op_matrix(self) -> OpMatrix {
        OpMatrix::new(OpRole::G, self.cfg, self.entries).expect("kernel matrix is rq x rq")
    }
}

/// Maps the Gauss node `x ∈ [−1, 1]` onto block `block` (zero-based).
fn node_to_t(cfg: &BasisConfig, block: usize, x: f64) -> f64 {
    (x + (2 * block + 1) as f64) / (2.0 * cfg.q() as f64)
}

/// Legendre values at every node: `table[node * r + m] = p_m(x_node)`.
fn legendre_table(quad: &GaussLegendre, r: usize) -> Vec<f64> {
    let mut table = vec![0.0; quad.len() * r];
    for (n, x) in quad.nodes().iter().enumerate() {
        legendre_all(*x, &mut table[n * r..(n + 1) * r]);
    }
    table
}

/// Coefficient vector of `f` on `[0, 1)`.
///
/// Within block `k` the substitution `x = 2qt − 2k + 1` gives
/// `f_{km} = ((2m+1)/2)·∫₋₁¹ f(t(x)) p_m(x) dx`.
pub fn project_function<F>(mut f: F, cfg: &BasisConfig, quad: &GaussLegendre) -> Result<CoeffVector>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = cfg.r();
    let table = legendre_table(quad, r);
    let mut values = DVector::zeros(cfg.dim());
    for block in 0..cfg.q() {
        let out = &mut values.as_mut_slice()[block * r..(block + 1) * r];
        for (n, (x, w)) in quad.iter().enumerate() {
            let fx = f(node_to_t(cfg, block, x))?;
            for (m, slot) in out.iter_mut().enumerate() {
                *slot += w * fx * table[n * r + m];
            }
        }
        for (m, slot) in out.iter_mut().enumerate() {
            *slot *= (2 * m + 1) as f64 * 0.5;
        }
    }
    Ok(CoeffVector { values, cfg: *cfg })
}

/// Kernel matrix `G` of `g(t, s)` by tensor-product quadrature over every
/// pair of blocks.
pub fn project_kernel<G>(mut g: G, cfg: &BasisConfig, quad: &GaussLegendre) -> Result<KernelMatrix>
where
    G: FnMut(f64, f64) -> Result<f64>,
{
    let r = cfg.r();
    let nodes = quad.len();
    let table = legendre_table(quad, r);
    let mut entries = DMatrix::zeros(cfg.dim(), cfg.dim());
    let mut samples = vec![0.0; nodes * nodes];
    let mut partial = vec![0.0; nodes * r];
    for bt in 0..cfg.q() {
        for bs in 0..cfg.q() {
            for (a, xa) in quad.nodes().iter().enumerate() {
                let t = node_to_t(cfg, bt, *xa);
                for (b, xb) in quad.nodes().iter().enumerate() {
                    samples[a * nodes + b] = g(t, node_to_t(cfg, bs, *xb))?;
                }
            }
            // contract over s first: partial[a][j] = Σ_b w_b g(a, b) p_j(x_b)
            partial.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..nodes {
                for (b, wb) in quad.weights().iter().enumerate() {
                    let gw = wb * samples[a * nodes + b];
                    for j in 0..r {
                        partial[a * r + j] += gw * table[b * r + j];
                    }
                }
            }
            for i in 0..r {
                for j in 0..r {
                    let mut acc = 0.0;
                    for (a, wa) in quad.weights().iter().enumerate() {
                        acc += wa * table[a * r + i] * partial[a * r + j];
                    }
                    let norm = (2 * i + 1) as f64 * (2 * j + 1) as f64 * 0.25;
                    entries[(bt * r + i, bs * r + j)] = norm * acc;
                }
            }
        }
    }
    Ok(KernelMatrix { entries, cfg: *cfg })
}

/// Coefficient vectors `Y₀⁽ⁱ⁾` of the constant initial values `y⁽ⁱ⁾(0)`.
pub fn project_initial_conditions(values: &[f64], cfg: &BasisConfig) -> Vec<CoeffVector> {
    values
        .iter()
        .map(|v| CoeffVector::constant(*v, *cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::basis_vector;
    use approx::assert_abs_diff_eq;

    fn cfg(r: usize, q: usize) -> BasisConfig {
        BasisConfig::new(r, q).unwrap()
    }

    #[test]
    fn constant_one() {
        let c = cfg(3, 4);
        let v = project_function(|_| Ok(1.0), &c, &GaussLegendre::default()).unwrap();
        assert_abs_diff_eq!(
            v.values().clone(),
            CoeffVector::constant(1.0, c).into_values(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn example_right_hand_sides() {
        let c = cfg(3, 4);
        let gl = GaussLegendre::default();
        let e2 = std::f64::consts::E.powi(2);
        let f1 = project_function(|t| Ok(t.exp() - t / 4.0 * (e2 + 1.0)), &c, &gl).unwrap();
        assert_abs_diff_eq!(f1[0], 0.873944, epsilon = 1e-6);
        assert_abs_diff_eq!(f1[1], -0.120293, epsilon = 1e-6);
        assert_abs_diff_eq!(f1[2], 0.0059084, epsilon = 1e-7);

        let f2 = project_function(|t| Ok(2.0 - t / 2.0), &c, &gl).unwrap();
        assert_abs_diff_eq!(f2[0], 1.9375, epsilon = 1e-14);
        assert_abs_diff_eq!(f2[1], -0.0625, epsilon = 1e-14);
        assert_abs_diff_eq!(f2[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn evaluation_errors_propagate() {
        let c = cfg(2, 2);
        let err = project_function(
            |t| {
                if t > 0.6 {
                    Err(Error::InvalidProblem(format!("bad t = {t}")))
                } else {
                    Ok(t)
                }
            },
            &c,
            &GaussLegendre::new(4),
        );
        assert!(err.is_err());
        let err = project_kernel(
            |_, s| {
                if s > 0.9 {
                    Err(Error::OutOfDomain { t: s })
                } else {
                    Ok(1.0)
                }
            },
            &c,
            &GaussLegendre::new(4),
        );
        assert!(err.is_err());
    }

    #[test]
    fn zero_kernel() {
        let c = cfg(3, 4);
        let g = project_kernel(|_, _| Ok(0.0), &c, &GaussLegendre::default()).unwrap();
        assert!(g.matrix().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn separable_kernel_is_outer_product() {
        let c = cfg(3, 4);
        let gl = GaussLegendre::default();
        let g = project_kernel(|t, s| Ok(-s * t), &c, &gl).unwrap();
        let u = project_function(|t| Ok(-t), &c, &gl).unwrap();
        let v = project_function(Ok, &c, &gl).unwrap();
        let outer = u.values() * v.values().transpose();
        assert_abs_diff_eq!(g.matrix().clone(), outer, epsilon = 1e-14);
        assert_abs_diff_eq!(g.matrix()[(0, 0)], -1.0 / 64.0, epsilon = 1e-15);
        let sv = g.matrix().clone().singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[1] < 1e-10);
    }

    #[test]
    fn kernel_entry_matches_direct_double_quadrature() {
        // independent route: nested 1-D integrals of g·B_i(t)·B_j(s) over full blocks
        let c = cfg(2, 3);
        let gl = GaussLegendre::new(20);
        let kernel = |t: f64, s: f64| (t - 2.0 * s).sin() + t * s * s;
        let g = project_kernel(|t, s| Ok(kernel(t, s)), &c, &gl).unwrap();
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                let (bi, bj) = (i / 2, j / 2);
                let (ta, tb) = (bi as f64 / 3.0, (bi + 1) as f64 / 3.0);
                let (sa, sb) = (bj as f64 / 3.0, (bj + 1) as f64 / 3.0);
                let num = gl.integrate(ta, tb, |t| {
                    let bt = basis_vector(t, &c).unwrap()[i];
                    gl.integrate(sa, sb, |s| kernel(t, s) * basis_vector(s, &c).unwrap()[j]) * bt
                });
                let ni = 1.0 / (3.0 * (2 * (i % 2) + 1) as f64);
                let nj = 1.0 / (3.0 * (2 * (j % 2) + 1) as f64);
                assert_abs_diff_eq!(g.matrix()[(i, j)], num / (ni * nj), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn best_approximation_residual_is_orthogonal() {
        let c = cfg(3, 4);
        let gl = GaussLegendre::default();
        let fv = project_function(|t| Ok(t.exp()), &c, &gl).unwrap();
        for idx in c.indices() {
            let (a, b) = ((idx.k() - 1) as f64 / 4.0, idx.k() as f64 / 4.0);
            let ip = gl.integrate(a, b, |t| {
                let bv = basis_vector(t, &c).unwrap();
                (t.exp() - bv.dot(fv.values())) * bv[idx.flat()]
            });
            assert!(ip.abs() < 1e-8, "{idx:?}: {ip}");
        }
    }

    #[test]
    fn initial_conditions() {
        let c = cfg(3, 4);
        let ys = project_initial_conditions(&[1.0, 1.0, 1.0], &c);
        assert_eq!(ys.len(), 3);
        for y in &ys {
            assert_eq!(
                y.as_slice(),
                &[1., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0.]
            );
        }
        let ys = project_initial_conditions(&[0.0, 0.0], &c);
        assert!(ys.iter().all(|y| y.as_slice().iter().all(|v| *v == 0.0)));
        let ys = project_initial_conditions(&[2.5], &cfg(1, 3));
        assert_eq!(ys[0].as_slice(), &[2.5, 2.5, 2.5]);
    }

    #[test]
    fn coeff_vector_length_checked() {
        assert!(CoeffVector::from_slice(&[1.0, 2.0], cfg(3, 1)).is_err());
        let v = CoeffVector::from_slice(&[1.0, 2.0, 3.0, 4.0], cfg(2, 2)).unwrap();
        assert_eq!(v.block(2), &[3.0, 4.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// Piecewise polynomials of degree < r aligned with the blocks are reproduced.
            #[test]
            fn reproduces_piecewise_polynomials(
                r in 1usize..6,
                q in 1usize..6,
                seed in proptest::collection::vec(-3.0f64..3.0, 36),
                ts in proptest::collection::vec(0.0f64..1.0, 1000),
            ) {
                let c = cfg(r, q);
                // monomial coefficients per block
                let poly = |t: f64| -> f64 {
                    let block = c.block_of(t).unwrap();
                    (0..r).map(|d| seed[(block * r + d) % seed.len()] * t.powi(d as i32)).sum()
                };
                let fv = project_function(|t| Ok(poly(t)), &c, &GaussLegendre::default()).unwrap();
                for t in ts {
                    let approx = basis_vector(t, &c).unwrap().dot(fv.values());
                    prop_assert!((approx - poly(t)).abs() < 1e-10, "t={} {} vs {}", t, approx, poly(t));
                }
            }
        }
    }
}
