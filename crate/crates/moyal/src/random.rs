//! Seeded random element generators shared by the test suites and the
//! verification runner. Everything is driven by ChaCha8 so that identical
//! seeds reproduce identical draws across platforms.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::operator::NcOperator;
use crate::symbol::{GridSpec, Symbol};
use crate::theta::ThetaData;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::new(
        r * (std::f64::consts::TAU * u2).cos(),
        r * (std::f64::consts::TAU * u2).sin(),
    )
}

/// Random smooth symbol supported in the ball |t| <= radius. Smoothness at
/// the grid scale matters: the Fock cutoff low-passes the envelope variable,
/// so only symbols resolved by both the grid and the truncation round-trip
/// cleanly through quantize/dequantize.
pub const SMOOTH_WIDTH: f64 = 0.55;

pub fn band_limited_symbol(grid: &GridSpec, radius: f64, rng: &mut ChaCha8Rng) -> Symbol {
    smooth_symbol(grid, radius, SMOOTH_WIDTH, 12, rng)
}

/// Superposition of `n_bumps` Gaussian bumps of width `sigma`, centers kept
/// 6 sigma away from the ball boundary so the hard cutoff at `radius` clips
/// only sub-1e-8 tails and the samples stay smooth at the grid scale.
pub fn smooth_symbol(
    grid: &GridSpec,
    radius: f64,
    sigma: f64,
    n_bumps: usize,
    rng: &mut ChaCha8Rng,
) -> Symbol {
    let m = grid.points();
    let c_max = (radius - 6.0 * sigma).max(0.0);
    let centers: Vec<([f64; 2], Complex64)> = (0..n_bumps)
        .map(|_| {
            let r = c_max * rng.random::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            ([r * phi.cos(), r * phi.sin()], gaussian_pair(rng))
        })
        .collect();
    let mut data = Array2::<Complex64>::zeros((m, m));
    for i in 1..m {
        for j in 1..m {
            let t = grid.node(i, j);
            if t[0] * t[0] + t[1] * t[1] > radius * radius {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, w) in &centers {
                let d2 = (t[0] - c[0]).powi(2) + (t[1] - c[1]).powi(2);
                acc += w * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            data[[i, j]] = acc;
        }
    }
    Symbol::new(grid.clone(), data)
}

/// Random symbol with the reflection-conjugate symmetry f(-t) = conj(f(t)),
/// so its quantization is Hermitian.
pub fn hermitian_band_limited_symbol(
    grid: &GridSpec,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Symbol {
    let mut sym = band_limited_symbol(grid, radius, rng);
    let m = grid.points();
    let data = sym.data.clone();
    for i in 1..m {
        for j in 1..m {
            let (ri, rj) = (m - i, m - j);
            let avg = 0.5 * (data[[i, j]] + data[[ri, rj]].conj());
            sym.data[[i, j]] = avg;
            sym.data[[ri, rj]] = avg.conj();
        }
    }
    // the origin node must be real
    let c = m / 2;
    sym.data[[c, c]] = Complex64::new(sym.data[[c, c]].re, 0.0);
    sym
}

/// Normalize a symbol so its quantization has unit L2 norm (approximately,
/// through the Parseval pairing).
pub fn normalize_symbol(sym: &mut Symbol) {
    let n = sym.parseval_norm();
    if n > 0.0 {
        sym.data.mapv_inplace(|z| z / n);
    }
}

/// Random Hermitian symbol concentrated at the origin: a real mixture of
/// radial Gaussian shells of varying width plus even angular harmonics. The
/// shapes are linearly independent across draws even on grids too cramped
/// for positional bump diversity, and every component is smooth at the
/// scale of the widest admissible truncation window. No hard cutoff: the
/// Gaussian decay puts the tails far below rounding by mid-grid.
pub fn radial_mixture_symbol(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Symbol {
    let widths = [1.05, 1.12, 1.19, 1.25];
    let coeffs: Vec<[f64; 3]> = widths
        .iter()
        .map(|_| {
            [
                gaussian_pair(rng).re,
                0.6 * gaussian_pair(rng).re,
                0.6 * gaussian_pair(rng).re,
            ]
        })
        .collect();
    let m = grid.points();
    let mut data = Array2::<Complex64>::zeros((m, m));
    for i in 1..m {
        for j in 1..m {
            let t = grid.node(i, j);
            let r2 = t[0] * t[0] + t[1] * t[1];
            let mut acc = 0.0;
            for (w, c) in widths.iter().zip(&coeffs) {
                let g = (-r2 / (2.0 * w * w)).exp();
                // polynomial even harmonics keep the Hermitian grid symmetry
                // and the entire-function smoothness of the samples
                let h1 = 0.25 * (t[0] * t[0] - t[1] * t[1]);
                let h2 = 0.5 * t[0] * t[1];
                acc += g * (c[0] + c[1] * h1 + c[2] * h2);
            }
            data[[i, j]] = Complex64::new(acc, 0.0);
        }
    }
    Symbol::new(grid.clone(), data)
}

/// Dense random operator with iid complex Gaussian entries.
pub fn dense_operator(theta: ThetaData, n: usize, rng: &mut ChaCha8Rng) -> NcOperator {
    let data = Array2::from_shape_fn((n, n), |_| gaussian_pair(rng));
    NcOperator::new(theta, data)
}

/// Dense random Hermitian operator.
pub fn hermitian_operator(theta: ThetaData, n: usize, rng: &mut ChaCha8Rng) -> NcOperator {
    dense_operator(theta, n, rng).symmetrize()
}
