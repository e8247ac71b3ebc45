//! Truncated matrix model of an element of the noncommutative plane.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, SVDInto, UPLO};
use num_complex::Complex64;

use crate::theta::ThetaData;
use crate::{MoyalError, Result};

/// Hermitian-input tolerance for the functional calculus.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// An element of the truncated operator algebra: an `N x N` complex matrix in
/// the oscillator basis, together with the deformation data fixing the trace
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NcOperator {
    pub theta: ThetaData,
    pub entries: Array2<Complex64>,
}

impl NcOperator {
    pub fn new(theta: ThetaData, entries: Array2<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "operator must be square");
        NcOperator { theta, entries }
    }

    pub fn zeros(theta: ThetaData, n: usize) -> Self {
        NcOperator::new(theta, Array2::zeros((n, n)))
    }

    pub fn identity(theta: ThetaData, n: usize) -> Self {
        NcOperator::new(theta, Array2::eye(n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Conjugate transpose. An involution, isometric for every Schatten norm.
    pub fn adjoint(&self) -> NcOperator {
        let n = self.dim();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.entries[[j, i]].conj();
            }
        }
        NcOperator::new(self.theta, out)
    }

    /// The normalized trace det(2 pi theta)^(1/2) * sum of diagonal entries.
    pub fn trace(&self) -> Complex64 {
        let raw: Complex64 = self.entries.diag().iter().sum();
        raw * self.theta.trace_unit()
    }

    /// Lp norm as a weighted Schatten norm: (trace_unit * sum sigma_k^p)^(1/p)
    /// for finite p, and the largest singular value for p = infinity.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(MoyalError::BadExponent(p));
        }
        if p.is_infinite() {
            return Ok(spectral_norm(&self.entries));
        }
        let sv = singular_values(&self.entries);
        let sum: f64 = sv.iter().map(|s| s.powf(p)).sum();
        Ok((self.theta.trace_unit() * sum).powf(1.0 / p))
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.entries)
    }

    /// Hermiticity defect ||u - u*|| in the Frobenius norm, relative to ||u||.
    pub fn hermitian_residual(&self) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let d = self.entries[[i, j]] - self.entries[[j, i]].conj();
                num += d.norm_sqr();
                den += self.entries[[i, j]].norm_sqr();
            }
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// (u + u*)/2.
    pub fn symmetrize(&self) -> NcOperator {
        let adj = self.adjoint();
        NcOperator::new(self.theta, (&self.entries + &adj.entries) * Complex64::new(0.5, 0.0))
    }

    /// Eigenvalues and unitary of a Hermitian operator (input symmetrized
    /// after checking the residual against `HERMITIAN_TOL`), normalized so
    /// that u = V diag(w) V* with eigenvectors in the columns of V.
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<Complex64>)> {
        let res = self.hermitian_residual();
        if res > HERMITIAN_TOL {
            return Err(MoyalError::NotHermitian { residual: res, tol: HERMITIAN_TOL });
        }
        let sym = self.symmetrize();
        let (vals, vecs) = sym.entries.eigh(UPLO::Lower)?;
        // LAPACK sees the row-major buffer as the transposed (= conjugate)
        // matrix, so the eigenvectors of u are the conjugated columns
        Ok((vals, vecs.mapv(|z| z.conj())))
    }

    /// Hermitian functional calculus: eigendecompose u = V diag(w) V* and
    /// return V diag(F(w)) V*.
    pub fn hermitian_calculus<F: Fn(f64) -> f64>(&self, f: F) -> Result<NcOperator> {
        let (vals, vecs) = self.eigh()?;
        let fw: Array1<Complex64> =
            vals.iter().map(|&w| Complex64::new(f(w), 0.0)).collect();
        Ok(NcOperator::new(self.theta, conjugate_diag(&vecs, &fw)))
    }

    /// Matrix product, checking that both operands carry the same theta.
    pub fn mul(&self, rhs: &NcOperator) -> NcOperator {
        assert_eq!(self.theta, rhs.theta, "operands carry different theta");
        NcOperator::new(self.theta, self.entries.dot(&rhs.entries))
    }

    pub fn add(&self, rhs: &NcOperator) -> NcOperator {
        NcOperator::new(self.theta, &self.entries + &rhs.entries)
    }

    pub fn sub(&self, rhs: &NcOperator) -> NcOperator {
        NcOperator::new(self.theta, &self.entries - &rhs.entries)
    }

    pub fn scale(&self, c: Complex64) -> NcOperator {
        NcOperator::new(self.theta, &self.entries * c)
    }

    /// Inner product tau(u* v), the GNS pairing.
    pub fn inner(&self, rhs: &NcOperator) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.entries.iter().zip(rhs.entries.iter()) {
            acc += a.conj() * b;
        }
        acc * self.theta.trace_unit()
    }
}

/// V diag(d) V*.
pub fn conjugate_diag(v: &Array2<Complex64>, d: &Array1<Complex64>) -> Array2<Complex64> {
    let mut scaled = v.clone();
    for (mut col, &w) in scaled.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|z| z * w);
    }
    let mut vh = Array2::zeros((v.ncols(), v.nrows()));
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            vh[[j, i]] = v[[i, j]].conj();
        }
    }
    scaled.dot(&vh)
}

pub fn singular_values(a: &Array2<Complex64>) -> Vec<f64> {
    let (_, sv, _) = a
        .clone()
        .svd_into(false, false)
        .expect("SVD failed on finite matrix");
    let mut out: Vec<f64> = sv.to_vec();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

pub fn spectral_norm(a: &Array2<Complex64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Frobenius norm of the raw matrix (no trace weight).
pub fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
