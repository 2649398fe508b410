use std::sync::Arc;

use super::OperatorError;

/// Default cap on total Hilbert-space dimension (2^12).
///
/// Guards against accidental exponential blow-up when assembling spaces from
/// scenario input. Override per construction with [`HilbertSpace::with_cap`].
pub const DEFAULT_DIM_CAP: usize = 1 << 12;

/// Role of a tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    System,
    Environment,
}

/// One tensor factor: its role and local dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub dim: usize,
}

impl Factor {
    pub fn system(dim: usize) -> Self {
        Factor { kind: FactorKind::System, dim }
    }

    pub fn environment(dim: usize) -> Self {
        Factor { kind: FactorKind::Environment, dim }
    }
}

/// An ordered tensor product of tagged factors.
///
/// Operators carry an `Arc<HilbertSpace>`; all binary operations require
/// structurally equal spaces. Factor 0 is the most significant index in the
/// row-major matrix layout (`kron(A, B)` puts `A` on factor 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
    dim: usize,
}

impl HilbertSpace {
    /// Space with the default dimension cap.
    pub fn new(factors: Vec<Factor>) -> Result<Arc<Self>, OperatorError> {
        Self::with_cap(factors, DEFAULT_DIM_CAP)
    }

    /// Space with an explicit dimension cap.
    pub fn with_cap(factors: Vec<Factor>, cap: usize) -> Result<Arc<Self>, OperatorError> {
        if factors.is_empty() {
            return Err(OperatorError::EmptySpace);
        }
        let mut dim: usize = 1;
        for f in &factors {
            if f.dim == 0 {
                return Err(OperatorError::ZeroDimensionFactor);
            }
            dim = dim
                .checked_mul(f.dim)
                .filter(|&d| d <= cap)
                .ok_or(OperatorError::DimCapExceeded { cap })?;
        }
        Ok(Arc::new(HilbertSpace { factors, dim }))
    }

    /// Single system qubit.
    pub fn qubit() -> Arc<Self> {
        Self::new(vec![Factor::system(2)]).expect("qubit space")
    }

    /// `n` system qubits.
    pub fn qubits(n: usize) -> Result<Arc<Self>, OperatorError> {
        Self::new(vec![Factor::system(2); n])
    }

    /// Single environment factor of dimension `dim`.
    pub fn environment(dim: usize) -> Result<Arc<Self>, OperatorError> {
        Self::new(vec![Factor::environment(dim)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> Option<Factor> {
        self.factors.get(i).copied()
    }

    /// Indices of system factors, in order.
    pub fn system_indices(&self) -> Vec<usize> {
        self.indices_of(FactorKind::System)
    }

    /// Indices of environment factors, in order.
    pub fn environment_indices(&self) -> Vec<usize> {
        self.indices_of(FactorKind::Environment)
    }

    fn indices_of(&self, kind: FactorKind) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Product of all system factor dimensions.
    pub fn system_dim(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.kind == FactorKind::System)
            .map(|f| f.dim)
            .product()
    }

    /// Row-major strides: `stride[i]` = product of dimensions after factor `i`.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.factors[i + 1].dim;
        }
        s
    }

    /// Whether every factor is a system factor.
    pub fn is_system_only(&self) -> bool {
        self.factors.iter().all(|f| f.kind == FactorKind::System)
    }

    /// Concatenated factor list of `self` then `other` (used by `kron`).
    pub fn compose(&self, other: &HilbertSpace) -> Result<Arc<Self>, OperatorError> {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self::new(factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_strides() {
        let s = HilbertSpace::new(vec![
            Factor::system(2),
            Factor::system(2),
            Factor::environment(3),
        ])
        .unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.strides(), vec![6, 3, 1]);
        assert_eq!(s.system_indices(), vec![0, 1]);
        assert_eq!(s.environment_indices(), vec![2]);
        assert_eq!(s.system_dim(), 4);
    }

    #[test]
    fn cap_enforced() {
        let too_big = HilbertSpace::new(vec![Factor::system(2); 13]);
        assert!(matches!(too_big, Err(OperatorError::DimCapExceeded { .. })));
        let ok = HilbertSpace::with_cap(vec![Factor::system(2); 13], 1 << 13);
        assert!(ok.is_ok());
    }

    #[test]
    fn empty_and_zero_rejected() {
        assert!(matches!(HilbertSpace::new(vec![]), Err(OperatorError::EmptySpace)));
        assert!(matches!(
            HilbertSpace::new(vec![Factor::system(0)]),
            Err(OperatorError::ZeroDimensionFactor)
        ));
    }
}
