//! Kernel-side multiplier estimates: the L1 norm of the inverse Fourier
//! transform of m(xi) Psi(2^-j xi). This is a purely commutative computation
//! on its own dense grid, independent of the symbol grid.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::lp::psi_profile;
use crate::Result;

/// Grid size per axis for kernel evaluation.
pub const KERNEL_GRID: usize = 512;

/// Diagnostics accompanying the kernel norm.
#[derive(Debug, Clone, Copy)]
pub struct KernelNorm {
    pub l1: f64,
    /// fraction of |kernel| mass on the outermost 2% of the real grid
    pub edge_fraction: f64,
}

/// || (m Psi_j)^vee ||_L1(R^2) by a dense discrete Fourier transform.
///
/// The frequency window scales with the block: the annulus supp Psi_j lives
/// in 2^(j-1) <= |xi| <= 2^(j+1), sampled with KERNEL_GRID points per axis on
/// [-w, w) with w = 12.8 * 2^j, which resolves the dilated kernel uniformly
/// in j. Callers assert the symbol estimates |d^a m| <= C |xi|^(s-|a|);
/// here m is only evaluated.
pub fn mikhlin_kernel_norm<F: Fn([f64; 2]) -> f64 + Sync>(m: F, j: i32) -> Result<KernelNorm> {
    let mf = KERNEL_GRID;
    let scale = (2.0f64).powi(j);
    let w = 12.8 * scale; // frequency half-width
    let dxi = 2.0 * w / mf as f64;
    // tabulate m(xi) Psi(2^-j xi)
    let table = Array2::from_shape_fn((mf, mf), |(a, b)| {
        let xi = [-w + a as f64 * dxi, -w + b as f64 * dxi];
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let cut = psi_profile(r / scale);
        if cut == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(m(xi) * cut, 0.0)
        }
    });

    // separable centered DFT onto the dual real grid:
    // x_k = (k - mf/2) * dx with dx = 2 pi / (mf dxi)
    let dx = std::f64::consts::TAU / (mf as f64 * dxi);
    let offset = |k: usize| k as f64 - (mf / 2) as f64;

    // phase table e^{i xi_b x_i}, shared by both axes (square grid)
    let phases: Vec<Vec<Complex64>> = (0..mf)
        .into_par_iter()
        .map(|i| {
            let x = offset(i) * dx;
            (0..mf)
                .map(|b| {
                    let xi = -w + b as f64 * dxi;
                    Complex64::from_polar(1.0, xi * x)
                })
                .collect()
        })
        .collect();

    // half[a][i] = sum_b table[a, b] e^{i xi_b x_i}
    let half: Vec<Vec<Complex64>> = (0..mf)
        .into_par_iter()
        .map(|a| {
            (0..mf)
                .map(|i| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..mf {
                        let v = table[[a, b]];
                        if v.re != 0.0 {
                            acc += v * phases[i][b];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let norm_const = dxi * dxi / std::f64::consts::TAU; // (2 pi)^(-d/2) h^2 at d = 2
    let rows: Vec<(f64, f64)> = (0..mf)
        .into_par_iter()
        .map(|i| {
            let mut mass = 0.0;
            let mut edge = 0.0;
            let edge_band = mf / 50;
            for k in 0..mf {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..mf {
                    acc += half[a][k] * phases[i][a];
                }
                let v = acc.norm() * norm_const * dx * dx;
                mass += v;
                if i < edge_band || i >= mf - edge_band || k < edge_band || k >= mf - edge_band {
                    edge += v;
                }
            }
            (mass, edge)
        })
        .collect();

    let l1: f64 = rows.iter().map(|r| r.0).sum();
    let edge: f64 = rows.iter().map(|r| r.1).sum();
    Ok(KernelNorm { l1, edge_fraction: if l1 > 0.0 { edge / l1 } else { 0.0 } })
}
