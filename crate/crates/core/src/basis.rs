//! Legendre polynomials, block-pulse functions and the hybrid basis on `[0, 1)`.
//!
//! The hybrid function `b_{km}` is the Legendre polynomial `p_m` mapped onto
//! the `k`-th of `q` equal subintervals and zero elsewhere. The stacked basis
//! vector `B(t)` lists the `r` functions of block 1, then block 2, and so on,
//! so the flat position of `(k, m)` is `(k − 1)·r + m`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Legendre order `r` per block and number of blocks `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisConfig {
    r: usize,
    q: usize,
}

impl BasisConfig {
    pub fn new(r: usize, q: usize) -> Result<Self> {
        if r == 0 || q == 0 {
            return Err(Error::InvalidConfig { r, q });
        }
        Ok(Self { r, q })
    }

    /// Polynomials per block (degrees `0..r`).
    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of blocks.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Dimension `r·q` of the approximation space.
    pub fn dim(&self) -> usize {
        self.r * self.q
    }

    /// Zero-based block containing `t`, or an error when `t ∉ [0, 1)`.
    pub fn block_of(&self, t: f64) -> Result<usize> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::OutOfDomain { t });
        }
        // q·t can round up to q for t just below 1.
        Ok(((t * self.q as f64).floor() as usize).min(self.q - 1))
    }

    /// Local Legendre coordinate `2qt − 2k + 1 ∈ [−1, 1)` of `t` in block `block` (zero-based).
    pub(crate) fn local_coord(&self, block: usize, t: f64) -> f64 {
        2.0 * self.q as f64 * t - (2 * block + 1) as f64
    }

    /// Iterator over every hybrid index in flat order.
    pub fn indices(&self) -> impl Iterator<Item = HybridIndex> + '_ {
        (0..self.dim()).map(move |flat| HybridIndex {
            k: flat / self.r + 1,
            m: flat % self.r,
            flat,
        })
    }
}

/// Position of `b_{km}` inside `B(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HybridIndex {
    k: usize,
    m: usize,
    flat: usize,
}

impl HybridIndex {
    /// Index of block `k ∈ 1..=q`, Legendre degree `m ∈ 0..r`.
    pub fn new(k: usize, m: usize, cfg: &BasisConfig) -> Result<Self> {
        if k == 0 || k > cfg.q || m >= cfg.r {
            return Err(Error::InvalidProblem(format!(
                "hybrid index (k = {k}, m = {m}) outside r = {}, q = {}",
                cfg.r, cfg.q
            )));
        }
        Ok(Self {
            k,
            m,
            flat: (k - 1) * cfg.r + m,
        })
    }

    pub fn from_flat(flat: usize, cfg: &BasisConfig) -> Result<Self> {
        if flat >= cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: flat + 1,
            });
        }
        Ok(Self {
            k: flat / cfg.r + 1,
            m: flat % cfg.r,
            flat,
        })
    }

    /// One-based block index.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Legendre degree.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Zero-based position in `B(t)`.
    pub fn flat(&self) -> usize {
        self.flat
    }
}

/// Legendre polynomial `p_m(x)` by the three-term recurrence
/// `(j+1) p_{j+1} = (2j+1) x p_j − j p_{j−1}`.
pub fn legendre(m: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = x;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[m] = p_m(x)` for `m < out.len()`.
pub(crate) fn legendre_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 1..out.len().saturating_sub(1) {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
    }
}

/// Value of the single hybrid function `b_{km}(t)`.
pub fn hybrid_eval(idx: HybridIndex, t: f64, cfg: &BasisConfig) -> Result<f64> {
    let block = cfg.block_of(t)?;
    if block + 1 != idx.k {
        return Ok(0.0);
    }
    Ok(legendre(idx.m, cfg.local_coord(block, t)))
}

/// The stacked vector `B(t)` of length `r·q`. Only the `r` entries of the
/// block containing `t` can be nonzero.
pub fn basis_vector(t: f64, cfg: &BasisConfig) -> Result<DVector<f64>> {
    let block = cfg.block_of(t)?;
    let mut out = DVector::zeros(cfg.dim());
    let x = cfg.local_coord(block, t);
    let start = block * cfg.r;
    legendre_all(x, &mut out.as_mut_slice()[start..start + cfg.r]);
    Ok(out)
}
