//! Hilbert spaces, dense operators, and the small set of primitives the rest
//! of the crate is built from.
//!
//! A [`HilbertSpace`] is an ordered list of tagged tensor factors (system or
//! environment) with a capped total dimension. Every [`DenseOperator`] carries
//! its space, and all binary operations check the spaces match, so factor
//! bookkeeping mistakes fail fast instead of producing silently misaligned
//! matrices.

mod dense;
mod space;
mod vector;

pub use dense::{
    evolve, partial_trace, uhlmann_fidelity, CMatrix, DenseOperator, OperatorDump, HERMITIAN_TOL,
    UNITARY_TOL,
};
pub use space::{Factor, FactorKind, HilbertSpace, DEFAULT_DIM_CAP};
pub use vector::UnitVector3;

pub(crate) use dense::{max_abs, ONE, ZERO};

use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("a Hilbert space needs at least one factor")]
    EmptySpace,
    #[error("tensor factors must have dimension >= 1")]
    ZeroDimensionFactor,
    #[error("total dimension exceeds the cap of {cap}")]
    DimCapExceeded { cap: usize },
    #[error("matrix dimension {found} does not match space dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pauli index {0} out of range (0..=3)")]
    PauliIndex(usize),
    #[error("vector is not unit length (norm {norm})")]
    NotUnitVector { norm: f64 },
    #[error("operator is not Hermitian (max |A - A^H| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not unitary (max |A^H A - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("density operator trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },
    #[error("factor list must be strictly increasing indices below {n_factors}")]
    InvalidFactorList { n_factors: usize },
    #[error("expected a single-factor operator for embedding")]
    NotSingleFactor,
    #[error("factor {site} does not exist or has mismatched dimension")]
    BadEmbedSite { site: usize },
}

/// 2x2 Pauli matrix: 0 = identity, 1..=3 = sigma_x, sigma_y, sigma_z.
pub fn pauli_matrix(j: usize) -> Result<CMatrix, OperatorError> {
    let z = ZERO;
    let o = ONE;
    let i = Complex64::new(0.0, 1.0);
    let rows = match j {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => return Err(OperatorError::PauliIndex(j)),
    };
    Ok(CMatrix::from_row_slice(2, 2, &rows))
}

/// Pauli operator on a single system qubit.
pub fn pauli(j: usize) -> Result<DenseOperator, OperatorError> {
    Ok(DenseOperator::from_raw(HilbertSpace::qubit(), pauli_matrix(j)?))
}

/// `n . sigma` for a unit direction, on a single system qubit.
///
/// Hermitian and involutive: `sigma_n(n)^2 = I`.
pub fn sigma_n(n: &UnitVector3) -> DenseOperator {
    let [x, y, z] = n.components();
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(z, 0.0),
            Complex64::new(x, -y),
            Complex64::new(x, y),
            Complex64::new(-z, 0.0),
        ],
    );
    DenseOperator::from_raw(HilbertSpace::qubit(), m)
}

/// Embeds a single-factor operator at factor `site` of `space`, acting as
/// identity on all other factors.
pub fn embed(
    op: &DenseOperator,
    site: usize,
    space: &Arc<HilbertSpace>,
) -> Result<DenseOperator, OperatorError> {
    if op.space().n_factors() != 1 {
        return Err(OperatorError::NotSingleFactor);
    }
    let target = space.factor(site).ok_or(OperatorError::BadEmbedSite { site })?;
    if target.dim != op.dim() {
        return Err(OperatorError::BadEmbedSite { site });
    }
    let dims: Vec<usize> = space.factors().iter().map(|f| f.dim).collect();
    let before: usize = dims[..site].iter().product();
    let after: usize = dims[site + 1..].iter().product();
    let m = CMatrix::identity(before, before)
        .kronecker(op.entries())
        .kronecker(&CMatrix::identity(after, after));
    Ok(DenseOperator::from_raw(space.clone(), m))
}
