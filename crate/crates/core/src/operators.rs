//! Operational matrices of the hybrid basis.
//!
//! * `P`: `∫₀ᵗ B(s) ds ≃ P B(t)`, block upper-triangular with diagonal blocks
//!   `E` and strict-upper blocks `H`.
//! * `L = ∫₀¹ B Bᵀ dt`, diagonal.
//! * `J = (Pᵀ)⁻¹`, the derivative transform acting on coefficient vectors.
//! * `C̃`: the Galerkin matrix of multiplication by `Cᵀ B(t)`, so that
//!   `B Bᵀ C = C̃ B` holds after projection onto the basis.
//!
//! The product of two degree-`r−1` polynomials reaches degree `2r−2`, so
//! `B Bᵀ C = C̃ B` is only a projection-level identity. It is exact under an
//! integral against `B`, which is the only place the solver uses it.

use nalgebra::{DMatrix, DVector};

use crate::basis::{legendre_all, BasisConfig};
use crate::projection::CoeffVector;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// LU pivots below this magnitude are treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpRole {
    P,
    L,
    J,
    G,
    Ctilde,
    Vtilde,
}

/// A dense `rq × rq` matrix tagged with the role it plays.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    role: OpRole,
    cfg: BasisConfig,
    entries: DMatrix<f64>,
}

impl OpMatrix {
    pub fn new(role: OpRole, cfg: BasisConfig, entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != cfg.dim() || entries.ncols() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self { role, cfg, entries })
    }

    pub fn role(&self) -> OpRole {
        self.role
    }

    pub fn cfg(&self) -> &BasisConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// The `r × r` diagonal block `E` of `P`.
///
/// Row `m` holds the Legendre coefficients of `∫₋₁ˣ p_m`, scaled by `1/2q`
/// and truncated at degree `r − 1`.
pub fn integration_block_e(cfg: &BasisConfig) -> DMatrix<f64> {
    let r = cfg.r();
    let scale = 1.0 / (2.0 * cfg.q() as f64);
    let mut e = DMatrix::zeros(r, r);
    e[(0, 0)] = scale;
    if r > 1 {
        e[(0, 1)] = scale;
    }
    for m in 1..r {
        let c = scale / (2 * m + 1) as f64;
        e[(m, m - 1)] = -c;
        if m + 1 < r {
            e[(m, m + 1)] = c;
        }
    }
    e
}

/// The `r × r` strict-upper block `H` of `P`: `1/q` in the corner, zero elsewhere.
pub fn integration_block_h(cfg: &BasisConfig) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(cfg.r(), cfg.r());
    h[(0, 0)] = 1.0 / cfg.q() as f64;
    h
}

/// Operational matrix of integration `P`.
pub fn build_p(cfg: &BasisConfig) -> OpMatrix {
    let (r, q) = (cfg.r(), cfg.q());
    let e = integration_block_e(cfg);
    let h = integration_block_h(cfg);
    let mut p = DMatrix::zeros(cfg.dim(), cfg.dim());
    for bi in 0..q {
        p.view_mut((bi * r, bi * r), (r, r)).copy_from(&e);
        for bj in bi + 1..q {
            p.view_mut((bi * r, bj * r), (r, r)).copy_from(&h);
        }
    }
    OpMatrix {
        role: OpRole::P,
        cfg: *cfg,
        entries: p,
    }
}

/// Product-integral matrix `L = ∫₀¹ B Bᵀ dt`: diagonal blocks
/// `D = (1/q)·diag(1, 1/3, …, 1/(2r−1))`.
pub fn build_l(cfg: &BasisConfig) -> OpMatrix {
    let diag = DVector::from_iterator(
        cfg.dim(),
        cfg.indices()
            .map(|idx| 1.0 / (cfg.q() as f64 * (2 * idx.m() + 1) as f64)),
    );
    OpMatrix {
        role: OpRole::L,
        cfg: *cfg,
        entries: DMatrix::from_diagonal(&diag),
    }
}

/// Derivative transform `J = (Pᵀ)⁻¹`, by LU factorisation of `Pᵀ`.
pub fn build_j(cfg: &BasisConfig) -> Result<OpMatrix> {
    let pt = build_p(cfg).entries.transpose();
    let entries = lu_inverse(pt)?;
    Ok(OpMatrix {
        role: OpRole::J,
        cfg: *cfg,
        entries,
    })
}

/// Inverse by partial-pivot LU, rejecting pivots below [`SINGULAR_PIVOT`].
pub(crate) fn lu_inverse(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lu = a.lu();
    let pivot = min_pivot(lu.u().diagonal().iter());
    if n > 0 && pivot < SINGULAR_PIVOT {
        return Err(Error::Singular { pivot });
    }
    lu.solve(&DMatrix::identity(n, n))
        .ok_or(Error::Singular { pivot })
}

pub(crate) fn min_pivot<'a>(diag: impl Iterator<Item = &'a f64>) -> f64 {
    diag.fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
}

/// `S[i][m][j] = ∫₋₁¹ p_i p_m p_j dx` for `i, m, j < r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleProductTensor {
    r: usize,
    values: Vec<f64>,
}

impl TripleProductTensor {
    /// Node count making the rule exact for the degree-`3(r−1)` integrand.
    pub fn quadrature_nodes(r: usize) -> usize {
        (3 * (r - 1) + 1).div_ceil(2) + 2
    }

    /// # Panics
    /// If `r == 0`.
    pub fn new(r: usize) -> Self {
        assert!(r > 0, "triple-product tensor needs r >= 1");
        let gl = GaussLegendre::new(Self::quadrature_nodes(r));
        let mut values = vec![0.0; r * r * r];
        let mut p = vec![0.0; r];
        for (x, w) in gl.iter() {
            legendre_all(x, &mut p);
            for i in 0..r {
                for m in 0..r {
                    let wim = w * p[i] * p[m];
                    for j in 0..r {
                        values[(i * r + m) * r + j] += wim * p[j];
                    }
                }
            }
        }
        // odd total degree integrates to zero; drop the rounding noise
        for i in 0..r {
            for m in 0..r {
                for j in 0..r {
                    if (i + m + j) % 2 == 1 {
                        values[(i * r + m) * r + j] = 0.0;
                    }
                }
            }
        }
        Self { r, values }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, i: usize, m: usize, j: usize) -> f64 {
        self.values[(i * self.r + m) * self.r + j]
    }

    /// Raw `C̃` for a coefficient vector of length `r·q`.
    pub fn coeff_matrix(&self, c: &DVector<f64>, cfg: &BasisConfig) -> DMatrix<f64> {
        let r = self.r;
        debug_assert_eq!(r, cfg.r());
        debug_assert_eq!(c.len(), cfg.dim());
        let mut out = DMatrix::zeros(cfg.dim(), cfg.dim());
        for block in 0..cfg.q() {
            let base = block * r;
            for i in 0..r {
                for j in 0..r {
                    let mut acc = 0.0;
                    for m in 0..r {
                        acc += c[base + m] * self.get(i, m, j);
                    }
                    out[(base + i, base + j)] = acc * (2 * j + 1) as f64 * 0.5;
                }
            }
        }
        out
    }

    /// `C̃[u]·L·w` without forming either matrix. Entry `(k, i)` equals
    /// `(1/2q)·Σ_{m,j} S[i][m][j]·u_{km}·w_{kj}`, i.e. `∫ b_{ki}·u·w`.
    pub fn product_integral(
        &self,
        u: &DVector<f64>,
        w: &DVector<f64>,
        cfg: &BasisConfig,
    ) -> DVector<f64> {
        let r = self.r;
        let scale = 0.5 / cfg.q() as f64;
        let mut out = DVector::zeros(cfg.dim());
        for block in 0..cfg.q() {
            let base = block * r;
            for i in 0..r {
                let mut acc = 0.0;
                for m in 0..r {
                    for j in 0..r {
                        acc += self.get(i, m, j) * u[base + m] * w[base + j];
                    }
                }
                out[base + i] = scale * acc;
            }
        }
        out
    }
}

/// Coefficient matrix `C̃` of `C`: block-diagonal with
/// `C̃ₖ[i][j] = Σ_m c_{km}·((2j+1)/2)·S[i][m][j]`.
pub fn coeff_matrix(c: &CoeffVector) -> OpMatrix {
    let cfg = *c.cfg();
    let tensor = TripleProductTensor::new(cfg.r());
    OpMatrix {
        role: OpRole::Ctilde,
        cfg,
        entries: tensor.coeff_matrix(c.values(), &cfg),
    }
}
