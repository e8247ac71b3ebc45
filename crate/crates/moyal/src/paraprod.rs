//! Elementary two-sided pseudodifferential operators T_{a,b} u =
//! sum_j a_j Delta_j(u) b_j, the M_k coefficient seminorms, and the Bony
//! splitting of an operator product into low/high paraproducts plus the
//! resonant part.


use num_complex::Complex64;

use crate::lp::DyadicPartition;
use crate::operator::{spectral_norm, NcOperator};
use crate::symbol::{quantize, Symbol};
use crate::{MoyalError, Result};

/// Default highest seminorm order kept by the suites.
pub const K_MAX: usize = 4;

/// One coefficient of an elementary operator: its symbol (the representation
/// in which derivatives act exactly) plus the quantized matrix.
#[derive(Debug, Clone)]
pub struct Coefficient {
    pub symbol: Symbol,
    pub op: NcOperator,
}

impl Coefficient {
    pub fn from_symbol(symbol: Symbol, n: usize) -> Result<Self> {
        let op = quantize(&symbol, n)?;
        Ok(Coefficient { symbol, op })
    }

    /// The identity coefficient: symbol is the grid delta at the origin, so
    /// all symbol-route derivatives vanish identically.
    pub fn identity(grid: &crate::symbol::GridSpec, n: usize) -> Self {
        let symbol = Symbol::delta(grid.clone());
        let op = NcOperator::identity(grid.theta(), n);
        Coefficient { symbol, op }
    }
}

/// A dyadically indexed coefficient sequence a = {a_j}, one entry per block.
#[derive(Debug, Clone)]
pub struct CoefficientSequence {
    pub entries: Vec<Coefficient>,
}

impl CoefficientSequence {
    pub fn identity(grid: &crate::symbol::GridSpec, n: usize, blocks: usize) -> Self {
        CoefficientSequence {
            entries: (0..blocks).map(|_| Coefficient::identity(grid, n)).collect(),
        }
    }

    /// The sequence a_j = S_{j-3} w used by the low paraproduct.
    pub fn lowpass_history(
        w: &Symbol,
        partition: &DyadicPartition,
        n: usize,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(partition.blocks());
        for j in 0..partition.blocks() {
            let s = partition.lowpass(w, j as isize - 3);
            entries.push(Coefficient::from_symbol(s, n)?);
        }
        Ok(CoefficientSequence { entries })
    }

    /// The sequence a_j = S_j w: every block active, seminorms controlled by
    /// ||w||_inf.
    pub fn lowpass_aligned(
        w: &Symbol,
        partition: &DyadicPartition,
        n: usize,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(partition.blocks());
        for j in 0..partition.blocks() {
            let s = partition.lowpass(w, j as isize);
            entries.push(Coefficient::from_symbol(s, n)?);
        }
        Ok(CoefficientSequence { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CoefficientSequence {
            entries: self
                .entries
                .iter()
                .map(|e| Coefficient {
                    symbol: Symbol::new(e.symbol.grid.clone(), e.symbol.data.clone() * c),
                    op: e.op.scale(c),
                })
                .collect(),
        }
    }
}

/// All multi-indices (a1, a2) with a1 + a2 <= k.
pub fn multi_indices(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 0..=k {
        for a1 in 0..=total {
            out.push((a1, total - a1));
        }
    }
    out
}

/// D^alpha on the symbol side: multiplication by t1^a1 t2^a2.
fn symbol_d_alpha(f: &Symbol, alpha: (usize, usize)) -> Symbol {
    let m = f.grid.points();
    let mut out = f.clone();
    for i in 0..m {
        for j in 0..m {
            let t = f.grid.node(i, j);
            let w = t[0].powi(alpha.0 as i32) * t[1].powi(alpha.1 as i32);
            out.data[[i, j]] *= w;
        }
    }
    out
}

/// M_k(a) = sup over blocks j and |alpha| <= k of 2^(-|alpha| j)
/// ||D^alpha a_j||_inf, with the derivatives taken on the symbol side and the
/// norm on the quantized matrix. The derivative weights t^alpha amplify any
/// grid-edge mass, so the quantization here runs without the boundary gate.
pub fn m_seminorm(a: &CoefficientSequence, k: usize, n: usize) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (j, coeff) in a.entries.iter().enumerate() {
        for alpha in multi_indices(k) {
            let total = alpha.0 + alpha.1;
            let norm = if total == 0 {
                spectral_norm(&coeff.op.entries)
            } else {
                let d = symbol_d_alpha(&coeff.symbol, alpha);
                let total_mass: f64 = d.data.iter().map(|z| z.norm()).sum();
                if total_mass == 0.0 {
                    0.0
                } else {
                    spectral_norm(&crate::symbol::quantize_unchecked(&d, n)?.entries)
                }
            };
            sup = sup.max((2.0f64).powi(-((total * j) as i32)) * norm);
        }
    }
    Ok(sup)
}

/// T_{a,b} u = sum_j a_j quantize(Delta_j u) b_j.
pub fn elementary_apply(
    a: &CoefficientSequence,
    b: &CoefficientSequence,
    u: &Symbol,
    partition: &DyadicPartition,
    n: usize,
) -> Result<NcOperator> {
    if a.len() != partition.blocks() || b.len() != partition.blocks() {
        return Err(MoyalError::IndexRange {
            got: a.len().min(b.len()),
            want: partition.blocks(),
        });
    }
    let theta = u.grid.theta();
    let mut acc = NcOperator::zeros(theta, n);
    for j in 0..partition.blocks() {
        let block = quantize(&partition.block(u, j), n)?;
        acc = acc.add(&a.entries[j].op.mul(&block).mul(&b.entries[j].op));
    }
    Ok(acc)
}

/// The three pieces of the Bony decomposition of an operator product.
#[derive(Debug, Clone)]
pub struct BonySplit {
    pub low: NcOperator,
    pub high: NcOperator,
    pub resonant: NcOperator,
}

impl BonySplit {
    pub fn total(&self) -> NcOperator {
        self.low.add(&self.high).add(&self.resonant)
    }
}

/// Bony split of the product uv from the symbols of u and v:
///   low  = sum_{j >= 3} S_{j-3}(u) Delta_j(v),
///   high = sum_{j >= 3} Delta_j(u) S_{j-3}(v),
///   resonant = sum_{|j-k| <= 2} Delta_j(u) Delta_k(v).
/// The three sums rearrange exactly to S_J(u) S_J(v), so for band-limited
/// operands the reconstruction defect is pure matrix roundoff.
pub fn bony_split(
    u: &Symbol,
    v: &Symbol,
    partition: &DyadicPartition,
    n: usize,
) -> Result<BonySplit> {
    u.same_grid(v)?;
    let theta = u.grid.theta();
    let blocks = partition.blocks();
    let u_blocks: Vec<NcOperator> = (0..blocks)
        .map(|j| quantize(&partition.block(u, j), n))
        .collect::<Result<_>>()?;
    let v_blocks: Vec<NcOperator> = (0..blocks)
        .map(|j| quantize(&partition.block(v, j), n))
        .collect::<Result<_>>()?;

    let mut low = NcOperator::zeros(theta, n);
    let mut high = NcOperator::zeros(theta, n);
    for j in 3..blocks {
        let su = quantize(&partition.lowpass(u, j as isize - 3), n)?;
        let sv = quantize(&partition.lowpass(v, j as isize - 3), n)?;
        low = low.add(&su.mul(&v_blocks[j]));
        high = high.add(&u_blocks[j].mul(&sv));
    }
    let mut resonant = NcOperator::zeros(theta, n);
    for j in 0..blocks {
        for k in 0..blocks {
            if (j as isize - k as isize).abs() <= 2 {
                resonant = resonant.add(&u_blocks[j].mul(&v_blocks[k]));
            }
        }
    }
    Ok(BonySplit { low, high, resonant })
}

/// Reconstruction tolerance for non-band-limited operands:
/// 2 (||u - S_J u||_2 ||v||_inf + ||u||_inf ||v - S_J v||_2) plus roundoff.
pub fn reconstruction_tolerance(
    u: &Symbol,
    v: &Symbol,
    partition: &DyadicPartition,
    n: usize,
) -> Result<f64> {
    let j = partition.j_max as isize;
    let tail = |w: &Symbol| -> Result<f64> {
        let low = partition.lowpass(w, j);
        let diff = Symbol::new(w.grid.clone(), &w.data - &low.data);
        quantize(&diff, n)?.lp_norm(2.0)
    };
    let tu = tail(u)?;
    let tv = tail(v)?;
    let nu = quantize(u, n)?.lp_norm(f64::INFINITY)?;
    let nv = quantize(v, n)?.lp_norm(f64::INFINITY)?;
    Ok(2.0 * (tu * nv + nu * tv) + 1e-10)
}
