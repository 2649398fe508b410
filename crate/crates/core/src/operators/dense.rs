use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::HilbertSpace;
use super::OperatorError;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance scale for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance scale for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex operator bound to the Hilbert space it acts on.
///
/// Every binary operation checks that both operands live on structurally
/// equal spaces; mixing spaces is a programming error and panics.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    space: Arc<HilbertSpace>,
    entries: CMatrix,
}

/// Matrix interchange format: factor dimensions plus row-major real and
/// imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDump {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DenseOperator {
    /// Wraps a matrix after checking it is square with the space's dimension.
    pub fn new(space: Arc<HilbertSpace>, entries: CMatrix) -> Result<Self, OperatorError> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: space.dim(),
                found: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(DenseOperator { space, entries })
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        DenseOperator { space, entries: CMatrix::identity(d, d) }
    }

    pub fn zeros(space: Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        DenseOperator { space, entries: CMatrix::zeros(d, d) }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { space: self.space.clone(), entries: self.entries.adjoint() }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diagonal().sum()
    }

    /// Hilbert-Schmidt inner product `tr(self^dagger other)`.
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        self.assert_same_space(other);
        let mut acc = ZERO;
        for j in 0..self.entries.ncols() {
            for i in 0..self.entries.nrows() {
                acc += self.entries[(i, j)].conj() * other.entries[(i, j)];
            }
        }
        acc
    }

    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    /// Largest singular value, from the Hermitian eigenproblem of `A^dagger A`.
    pub fn op_norm(&self) -> f64 {
        op_norm(&self.entries)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        DenseOperator { space: self.space.clone(), entries: &self.entries * s }
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs(&(&self.entries - self.entries.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol * (1.0 + self.max_abs())
    }

    pub fn require_hermitian(&self) -> Result<(), OperatorError> {
        let dev = self.hermiticity_deviation();
        if dev > HERMITIAN_TOL * (1.0 + self.max_abs()) {
            return Err(OperatorError::NotHermitian { deviation: dev });
        }
        Ok(())
    }

    /// `max |A^dagger A - I|` over entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.entries.adjoint() * &self.entries - CMatrix::identity(d, d)))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn require_unitary(&self) -> Result<(), OperatorError> {
        let dev = self.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(OperatorError::NotUnitary { deviation: dev });
        }
        Ok(())
    }

    /// Tensor product; the result space is the concatenated factor list.
    pub fn kron(&self, other: &Self) -> Result<Self, OperatorError> {
        let space = self.space.compose(other.space())?;
        Ok(DenseOperator { space, entries: self.entries.kronecker(&other.entries) })
    }

    /// `U self U^dagger`.
    pub fn conjugated_by(&self, u: &Self) -> Self {
        self.assert_same_space(u);
        DenseOperator {
            space: self.space.clone(),
            entries: &u.entries * &self.entries * u.entries.adjoint(),
        }
    }

    /// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
    ///
    /// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, CMatrix), OperatorError> {
        self.require_hermitian()?;
        Ok(eigh_sorted(&self.entries))
    }

    /// Hermitian square root of a positive semidefinite operator.
    ///
    /// Eigenvalues are clamped to zero within `psd_tol * (1 + |A|)`;
    /// more negative spectra are an error.
    pub fn psd_sqrt(&self, psd_tol: f64) -> Result<Self, OperatorError> {
        self.require_hermitian()?;
        let (vals, vecs) = eigh_sorted(&self.entries);
        let floor = -psd_tol * (1.0 + self.max_abs());
        if let Some(&min) = vals.first() {
            if min < floor {
                return Err(OperatorError::NotPositive { min_eigenvalue: min });
            }
        }
        let d = self.dim();
        let mut diag = CMatrix::zeros(d, d);
        for (i, &v) in vals.iter().enumerate() {
            diag[(i, i)] = Complex64::new(v.max(0.0).sqrt(), 0.0);
        }
        let entries = &vecs * diag * vecs.adjoint();
        Ok(DenseOperator { space: self.space.clone(), entries })
    }

    /// Matrix exponential by Pade approximation with scaling and squaring.
    ///
    /// Works for arbitrary (non-Hermitian) operators; `evolve` uses the
    /// cheaper Hermitian eigendecomposition instead.
    pub fn expm(&self) -> Self {
        DenseOperator { space: self.space.clone(), entries: expm_pade(&self.entries) }
    }

    pub fn dump(&self) -> OperatorDump {
        let d = self.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                re[i][j] = self.entries[(i, j)].re;
                im[i][j] = self.entries[(i, j)].im;
            }
        }
        OperatorDump { dims: self.space.factors().iter().map(|f| f.dim).collect(), re, im }
    }

    /// Rebuilds an operator from a dump on the given space.
    pub fn from_dump(space: Arc<HilbertSpace>, dump: &OperatorDump) -> Result<Self, OperatorError> {
        let dims: Vec<usize> = space.factors().iter().map(|f| f.dim).collect();
        if dims != dump.dims {
            return Err(OperatorError::DimensionMismatch {
                expected: space.dim(),
                found: dump.dims.iter().product(),
            });
        }
        let d = space.dim();
        if dump.re.len() != d || dump.im.len() != d {
            return Err(OperatorError::DimensionMismatch { expected: d, found: dump.re.len() });
        }
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            if dump.re[i].len() != d || dump.im[i].len() != d {
                return Err(OperatorError::DimensionMismatch { expected: d, found: dump.re[i].len() });
            }
            for j in 0..d {
                m[(i, j)] = Complex64::new(dump.re[i][j], dump.im[i][j]);
            }
        }
        DenseOperator::new(space, m)
    }

    pub(crate) fn assert_same_space(&self, other: &Self) {
        assert_eq!(self.space, other.space, "operators live on different spaces");
    }

    pub(crate) fn from_raw(space: Arc<HilbertSpace>, entries: CMatrix) -> Self {
        debug_assert_eq!(entries.nrows(), space.dim());
        DenseOperator { space, entries }
    }
}

impl std::ops::Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        self.assert_same_space(rhs);
        DenseOperator { space: self.space.clone(), entries: &self.entries + &rhs.entries }
    }
}

impl std::ops::Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        self.assert_same_space(rhs);
        DenseOperator { space: self.space.clone(), entries: &self.entries - &rhs.entries }
    }
}

impl std::ops::Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.assert_same_space(rhs);
        DenseOperator { space: self.space.clone(), entries: &self.entries * &rhs.entries }
    }
}

impl std::ops::Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        DenseOperator { space: self.space.clone(), entries: -&self.entries }
    }
}

/// Unitary generated by a Hermitian operator: `exp(-i h t)`.
pub fn evolve(h: &DenseOperator, t: f64) -> Result<DenseOperator, OperatorError> {
    h.require_hermitian()?;
    let (vals, vecs) = eigh_sorted(h.entries());
    let d = h.dim();
    let mut diag = CMatrix::zeros(d, d);
    for (i, &v) in vals.iter().enumerate() {
        diag[(i, i)] = Complex64::new(0.0, -v * t).exp();
    }
    let entries = &vecs * diag * vecs.adjoint();
    Ok(DenseOperator::from_raw(h.space().clone(), entries))
}

/// Partial trace keeping the listed factors (strictly increasing indices).
///
/// The result lives on the space formed by the kept factors in order.
pub fn partial_trace(op: &DenseOperator, keep: &[usize]) -> Result<DenseOperator, OperatorError> {
    let space = op.space();
    let k = space.n_factors();
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= k {
        return Err(OperatorError::InvalidFactorList { n_factors: k });
    }
    let strides = space.strides();
    let factors = space.factors();
    let traced: Vec<usize> = (0..k).filter(|i| !keep.contains(i)).collect();

    // Flat offsets contributed by every kept multi-index and traced multi-index.
    let kept_offsets = enumerate_offsets(keep, factors, &strides);
    let traced_offsets = enumerate_offsets(&traced, factors, &strides);

    let kept_space = HilbertSpace::new(keep.iter().map(|&i| factors[i]).collect())?;
    let dk = kept_space.dim();
    let mut out = CMatrix::zeros(dk, dk);
    let m = op.entries();
    for (a, &oa) in kept_offsets.iter().enumerate() {
        for (b, &ob) in kept_offsets.iter().enumerate() {
            let mut acc = ZERO;
            for &oe in &traced_offsets {
                acc += m[(oa + oe, ob + oe)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DenseOperator::from_raw(kept_space, out))
}

/// Flat index offsets of all multi-indices over the chosen factors,
/// enumerated in row-major order of those factors.
fn enumerate_offsets(
    chosen: &[usize],
    factors: &[super::space::Factor],
    strides: &[usize],
) -> Vec<usize> {
    let total: usize = chosen.iter().map(|&i| factors[i].dim).product();
    let mut offsets = vec![0usize; total];
    let mut repeat = 1usize;
    for &i in chosen.iter().rev() {
        let dim = factors[i].dim;
        let stride = strides[i];
        let block = repeat * dim;
        for chunk_start in (0..total).step_by(block) {
            for v in 0..dim {
                for r in 0..repeat {
                    offsets[chunk_start + v * repeat + r] += v * stride;
                }
            }
        }
        repeat = block;
    }
    offsets
}

/// Uhlmann fidelity `tr sqrt(sqrt(tau) rho sqrt(tau))` of two density
/// operators; square-root convention, so pure states give `|<psi|phi>|`.
pub fn uhlmann_fidelity(rho: &DenseOperator, tau: &DenseOperator) -> Result<f64, OperatorError> {
    rho.assert_same_space(tau);
    validate_density(rho)?;
    validate_density(tau)?;
    // Nuclear norm of sqrt(rho) sqrt(tau). Eigenvalues of the sandwiched
    // product would square the singular values, and taking sqrt afterwards
    // turns eps-level noise on zero modes into sqrt(eps); singular values
    // keep that noise at eps, which matters when comparing nearly identical
    // states. They come from the Hermitian dilation so the robust
    // eigendecomposition path is used.
    let sr = rho.psd_sqrt(1e-8)?;
    let st = tau.psd_sqrt(1e-8)?;
    let prod = sr.entries() * st.entries();
    let d = prod.nrows();
    let mut dilation = CMatrix::zeros(2 * d, 2 * d);
    dilation.view_mut((0, d), (d, d)).copy_from(&prod);
    dilation.view_mut((d, 0), (d, d)).copy_from(&prod.adjoint());
    let (vals, _) = eigh_sorted(&dilation);
    let f = 0.5 * vals.iter().map(|v| v.abs()).sum::<f64>();
    Ok(f.min(1.0))
}

fn validate_density(rho: &DenseOperator) -> Result<(), OperatorError> {
    let dev = rho.hermiticity_deviation();
    if dev > 1e-10 * (1.0 + rho.max_abs()) {
        return Err(OperatorError::NotHermitian { deviation: dev });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-10 {
        return Err(OperatorError::NotUnitTrace { trace: tr.re });
    }
    let m = (rho.entries() + rho.entries().adjoint()) * Complex64::new(0.5, 0.0);
    let (vals, _) = eigh_sorted(&m);
    if let Some(&min) = vals.first() {
        if min < -1e-8 {
            return Err(OperatorError::NotPositive { min_eigenvalue: min });
        }
    }
    Ok(())
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn op_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let (vals, _) = eigh_sorted(&gram);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Hermitian eigendecomposition sorted by ascending eigenvalue.
///
/// The underlying QL iteration can emit NaN on inputs with exact zero
/// patterns (e.g. two-corner densities). Conjugating by a dense unitary
/// preserves the spectrum and breaks the pattern, so that path is retried
/// once before giving up.
pub(crate) fn eigh_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    if let Some(out) = eigh_attempt(m) {
        return out;
    }
    let q = dft_unitary(m.nrows());
    let rotated = q.adjoint() * m * &q;
    let hermitized = (&rotated + rotated.adjoint()) * Complex64::new(0.5, 0.0);
    let (vals, vecs) =
        eigh_attempt(&hermitized).expect("eigendecomposition failed on densified input");
    (vals, q * vecs)
}

fn eigh_attempt(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let d = m.nrows();
    let mut vecs = CMatrix::zeros(d, d);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    Some((vals, vecs))
}

fn dft_unitary(d: usize) -> CMatrix {
    let scale = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| {
        Complex64::from_polar(scale, std::f64::consts::TAU * ((j * k) % d) as f64 / d as f64)
    })
}

/// Pade-13 scaling-and-squaring matrix exponential.
fn expm_pade(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let d = a.nrows();
    let id = CMatrix::identity(d, d);
    // 1-norm: max absolute column sum.
    let norm = (0..d)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as u32 } else { 0 };
    let a1 = a / Complex64::new(2f64.powi(s as i32), 0.0);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let c = |k: usize| Complex64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &a1 * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
