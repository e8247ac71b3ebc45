//! Truncation masks: finite-cutoff identities are asserted on the leading
//! block of a matrix, since the Fock cutoff corrupts the boundary rows/columns.

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;

/// Default edge-mask width, one eighth of the truncation size.
pub fn default_mask(n: usize) -> usize {
    n / 8
}

/// View of the leading (n - k) x (n - k) block.
pub fn leading_block(a: &Array2<Complex64>, k: usize) -> ArrayView2<'_, Complex64> {
    let n = a.nrows();
    let keep = n.saturating_sub(k).max(1);
    a.slice(s![..keep, ..keep])
}

/// Frobenius norm of the leading block after masking k edge rows/columns.
pub fn masked_frobenius(a: &Array2<Complex64>, k: usize) -> f64 {
    leading_block(a, k)
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest singular value of the masked leading block.
pub fn masked_op_norm(a: &Array2<Complex64>, k: usize) -> f64 {
    crate::operator::spectral_norm(&leading_block(a, k).to_owned())
}
