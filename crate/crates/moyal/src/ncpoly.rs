//! Noncommutative polynomials: formal sums of scalar-weighted words in n
//! variables, evaluated either on matrices (operator product) or on symbols
//! (twisted convolution).

use num_complex::Complex64;

use crate::operator::NcOperator;
use crate::symbol::{twisted_convolution, Symbol};
use crate::{MoyalError, Result};

/// sum_w c_w X_{w_1} X_{w_2} ... X_{w_k}; variables are zero-based indices.
#[derive(Debug, Clone)]
pub struct NcPolynomial {
    pub arity: usize,
    pub terms: Vec<(Complex64, Vec<usize>)>,
}

impl NcPolynomial {
    pub fn new(arity: usize, terms: Vec<(Complex64, Vec<usize>)>) -> Self {
        for (_, word) in &terms {
            for &v in word {
                assert!(v < arity, "variable index {v} out of arity {arity}");
            }
        }
        NcPolynomial { arity, terms }
    }

    /// The single variable X_i.
    pub fn variable(arity: usize, i: usize) -> Self {
        NcPolynomial::new(arity, vec![(Complex64::new(1.0, 0.0), vec![i])])
    }

    /// X_i X_j - X_j X_i.
    pub fn commutator(arity: usize, i: usize, j: usize) -> Self {
        NcPolynomial::new(
            arity,
            vec![
                (Complex64::new(1.0, 0.0), vec![i, j]),
                (Complex64::new(-1.0, 0.0), vec![j, i]),
            ],
        )
    }

    /// Jordan product (X_i X_j + X_j X_i) / 2.
    pub fn jordan(arity: usize, i: usize, j: usize) -> Self {
        NcPolynomial::new(
            arity,
            vec![
                (Complex64::new(0.5, 0.0), vec![i, j]),
                (Complex64::new(0.5, 0.0), vec![j, i]),
            ],
        )
    }

    /// Evaluation homomorphism on matrices.
    pub fn eval(&self, args: &[NcOperator]) -> Result<NcOperator> {
        if args.len() != self.arity {
            return Err(MoyalError::ArityMismatch { arity: self.arity, got: args.len() });
        }
        let theta = args
            .first()
            .map(|a| a.theta)
            .ok_or(MoyalError::ArityMismatch { arity: self.arity, got: 0 })?;
        let n = args[0].dim();
        let mut acc = NcOperator::zeros(theta, n);
        for (c, word) in &self.terms {
            if word.is_empty() {
                acc = acc.add(&NcOperator::identity(theta, n).scale(*c));
                continue;
            }
            let mut prod = args[word[0]].clone();
            for &v in &word[1..] {
                prod = prod.mul(&args[v]);
            }
            acc = acc.add(&prod.scale(*c));
        }
        Ok(acc)
    }

    /// Evaluation in the symbol algebra, with products realized as twisted
    /// convolutions. Constant terms use the grid delta (the symbol of the
    /// identity).
    pub fn eval_symbols(&self, args: &[Symbol]) -> Result<Symbol> {
        if args.len() != self.arity {
            return Err(MoyalError::ArityMismatch { arity: self.arity, got: args.len() });
        }
        let grid = args
            .first()
            .map(|a| a.grid.clone())
            .ok_or(MoyalError::ArityMismatch { arity: self.arity, got: 0 })?;
        let mut acc = Symbol::zeros(grid.clone());
        for (c, word) in &self.terms {
            let mut prod = if word.is_empty() {
                Symbol::delta(grid.clone())
            } else {
                args[word[0]].clone()
            };
            for &v in &word[1..] {
                prod = twisted_convolution(&prod, &args[v])?;
            }
            for (a, p) in acc.data.iter_mut().zip(prod.data.iter()) {
                *a += c * p;
            }
        }
        Ok(acc)
    }
}
