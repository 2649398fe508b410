//! Seeded random generation of operators, frames, and states.
//!
//! All randomness in this crate flows through caller-provided RNGs; the
//! counter-based ChaCha generator gives identical streams for identical seeds
//! regardless of platform.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use std::sync::Arc;

use crate::operators::{CMatrix, DenseOperator, HilbertSpace, UnitVector3};

/// The crate-wide deterministic RNG: ChaCha12 seeded from a u64.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

/// Standard-normal sample.
fn randn(rng: &mut impl Rng) -> f64 {
    Normal::new(0.0, 1.0).unwrap().sample(rng)
}

/// Random Hermitian matrix with Gaussian entries, unnormalized.
pub fn random_hermitian_matrix(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(randn(rng), 0.0);
        for j in i + 1..dim {
            let z = Complex64::new(randn(rng) * 0.5f64.sqrt(), randn(rng) * 0.5f64.sqrt());
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random Hermitian operator on the given (single-factor or composite) space.
pub fn random_hermitian(space: &Arc<HilbertSpace>, rng: &mut impl Rng) -> DenseOperator {
    DenseOperator::new(space.clone(), random_hermitian_matrix(space.dim(), rng)).unwrap()
}

/// Uniformly random point on the unit sphere.
pub fn random_unit_vector(rng: &mut impl Rng) -> UnitVector3 {
    loop {
        let v = Vector3::new(randn(rng), randn(rng), randn(rng));
        if v.norm() > 1e-6 {
            return UnitVector3::try_new(v / v.norm()).unwrap();
        }
    }
}

/// Haar-ish random rotation: Gram-Schmidt of a Gaussian 3x3, det fixed to +1.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let mut cols: Vec<Vector3<f64>> = Vec::with_capacity(3);
        for _ in 0..3 {
            cols.push(Vector3::new(randn(rng), randn(rng), randn(rng)));
        }
        let mut q: Vec<Vector3<f64>> = Vec::with_capacity(3);
        let mut ok = true;
        for v in cols {
            let mut u = v;
            for w in &q {
                u -= w * v.dot(w);
            }
            if u.norm() < 1e-8 {
                ok = false;
                break;
            }
            q.push(u / u.norm());
        }
        if !ok {
            continue;
        }
        let mut r = Matrix3::from_columns(&q);
        if r.determinant() < 0.0 {
            let c2 = -r.column(2);
            r.set_column(2, &c2);
        }
        return r;
    }
}

/// Orthonormal frame as three unit vectors (columns of a random rotation).
pub fn random_frame(rng: &mut impl Rng) -> [UnitVector3; 3] {
    let r = random_rotation(rng);
    [0, 1, 2].map(|j| {
        let c = r.column(j);
        UnitVector3::normalized(c[0], c[1], c[2]).unwrap()
    })
}

/// Pair of Hilbert-Schmidt-orthonormal Hermitian operators on `space`.
///
/// `tr(B_i B_j) = delta_ij` with zero overlap between the pair.
pub fn random_hs_orthonormal_pair(
    space: &Arc<HilbertSpace>,
    rng: &mut impl Rng,
) -> (DenseOperator, DenseOperator) {
    loop {
        let a = random_hermitian(space, rng);
        let b = random_hermitian(space, rng);
        let na = a.hs_norm();
        if na < 1e-8 {
            continue;
        }
        let a = a.scale(1.0 / na);
        let overlap = a.hs_inner(&b).re;
        let b = &b - &a.scale(overlap);
        let nb = b.hs_norm();
        if nb < 1e-8 {
            continue;
        }
        return (a, b.scale(1.0 / nb));
    }
}

/// Random full-rank density matrix `G G^dagger / tr(G G^dagger)`.
pub fn random_density(space: &Arc<HilbertSpace>, rng: &mut impl Rng) -> DenseOperator {
    let d = space.dim();
    let mut g = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = Complex64::new(randn(rng), randn(rng));
        }
    }
    let w = &g * g.adjoint();
    let tr = w.diagonal().sum().re;
    DenseOperator::new(space.clone(), w / Complex64::new(tr, 0.0)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let mut r1 = rng_from_seed(41);
        let mut r2 = rng_from_seed(41);
        let a = random_hermitian_matrix(3, &mut r1);
        let b = random_hermitian_matrix(3, &mut r2);
        assert_eq!(a, b);
        let mut r3 = rng_from_seed(42);
        let c = random_hermitian_matrix(3, &mut r3);
        assert_ne!(a, c);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let err = (r.transpose() * r - Matrix3::identity()).abs().max();
            assert!(err < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_pair_is_orthonormal() {
        let mut rng = rng_from_seed(11);
        let space = HilbertSpace::environment(3).unwrap();
        let (a, b) = random_hs_orthonormal_pair(&space, &mut rng);
        assert!((a.hs_inner(&a).re - 1.0).abs() < 1e-12);
        assert!((b.hs_inner(&b).re - 1.0).abs() < 1e-12);
        assert!(a.hs_inner(&b).norm() < 1e-12);
        assert!(a.is_hermitian(1e-12) && b.is_hermitian(1e-12));
    }

    #[test]
    fn density_is_valid() {
        let mut rng = rng_from_seed(13);
        let space = HilbertSpace::qubits(2).unwrap();
        let rho = random_density(&space, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let (vals, _) = rho.eigh().unwrap();
        assert!(vals.iter().all(|&v| v > -1e-12));
    }
}
