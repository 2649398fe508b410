//! Structured Hamiltonians of a driven qubit register coupled to quantum
//! environments, and their canonical per-site noise decomposition.
//!
//! The represented family is
//!
//! ```text
//! H = omega * sum_i w_i P_i (x) 1_E            (signal, P_i system Pauli strings)
//!   + sum_k c_k Q_k (x) A_k                    (noise, A_k on one environment factor)
//!   + sum_m c0_m 1_S (x) A0_m                  (trivial part, system identity)
//! ```
//!
//! on a space whose factors are `sites` system qubits followed by the
//! environment factors (one per site for independent environments, a single
//! shared factor for a common environment). The trivial part commutes with
//! every system control and is carried unchanged through all transformations.
//!
//! `standard_form` canonicalizes one site's noise `sum_j c_j sigma_j (x) A_j`
//! into `sum_j b_j sigma_(n_j) (x) B_j` with `b_1 >= b_2 >= b_3 >= 0`, an
//! orthonormal right-handed frame `n_j`, and environment operators
//! orthonormal in the Hilbert-Schmidt inner product. The construction
//! diagonalizes the real symmetric overlap matrix `O_ik = Re tr(C_i C_k)` of
//! the coupling-weighted environment operators `C_j = c_j A_j`; eigenvalues
//! are the `b_j^2`, eigenvectors the frame. The number of nonzero `b_j` is
//! the noise rank, which decides which decoupling strategies are available.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

use crate::operators::{
    pauli_matrix, sigma_n, CMatrix, DenseOperator, Factor, FactorKind, HilbertSpace,
    OperatorError, UnitVector3, DEFAULT_DIM_CAP,
};

/// Default relative tolerance for counting noise rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("coupling constants must be finite")]
    NonFiniteCoupling,
    #[error("pauli string has {found} sites, hamiltonian has {expected}")]
    StringLength { expected: usize, found: usize },
    #[error("invalid pauli character {0:?}")]
    BadPauliChar(char),
    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("environment operator must live on a single environment factor")]
    BadEnvOperatorSpace,
    #[error("environment operator dimension {found} does not match factor dimension {expected}")]
    EnvDimMismatch { expected: usize, found: usize },
    #[error("independent-environment model needs one dimension per site")]
    EnvModelShape,
    #[error("environment target refers to site {site}, but the model has no per-site factor")]
    BadEnvTarget { site: usize },
    #[error("site {site} carries a multi-site noise term; per-site standard form is undefined")]
    MultiSiteNoise { site: usize },
    #[error("site {site} couples to more than one environment factor")]
    MixedEnvFactors { site: usize },
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("overlap matrix has significantly negative eigenvalue {0:.3e}")]
    NegativeOverlap(f64),
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(j: usize) -> Option<Self> {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].get(j).copied()
    }

    pub fn matrix(self) -> CMatrix {
        pauli_matrix(self.index()).unwrap()
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self, HamiltonianError> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(HamiltonianError::BadPauliChar(other)),
        }
    }
}

/// A Pauli string over a fixed number of sites, e.g. `IXZ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    pub fn new(paulis: Vec<Pauli>) -> Self {
        PauliString(paulis)
    }

    /// Parses `"IXZ"`-style labels.
    pub fn parse(s: &str) -> Result<Self, HamiltonianError> {
        s.chars().map(Pauli::from_char).collect::<Result<Vec<_>, _>>().map(PauliString)
    }

    /// Single-site operator `p` at `site` among `n` sites.
    pub fn single(n: usize, site: usize, p: Pauli) -> Result<Self, HamiltonianError> {
        if site >= n {
            return Err(HamiltonianError::SiteOutOfRange { site, sites: n });
        }
        let mut v = vec![Pauli::I; n];
        v[site] = p;
        Ok(PauliString(v))
    }

    pub fn n_sites(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, site: usize) -> Pauli {
        self.0[site]
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.0
    }

    /// Sites with a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Dense matrix on the `2^n` system space, site 0 outermost.
    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for p in &self.0 {
            m = m.kronecker(&p.matrix());
        }
        m
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

/// Expands a matrix on `n` qubits in the Pauli-string basis.
///
/// Returns `(P, c_P)` with `M = sum c_P P`, sorted by string, coefficients
/// below `1e-14 * (1 + max|M|)` dropped. Cost is `O(n 4^n)` via recursive
/// half-trace block combinations with subtree pruning.
pub fn pauli_decompose(m: &CMatrix) -> Result<Vec<(PauliString, Complex64)>, HamiltonianError> {
    let d = m.nrows();
    if d == 0 || !d.is_power_of_two() || m.ncols() != d {
        return Err(HamiltonianError::NotPowerOfTwo(d));
    }
    let scale = crate::operators::max_abs(m);
    let tol = 1e-14 * (1.0 + scale);
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    decompose_rec(m.clone(), &mut prefix, &mut out, tol);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn decompose_rec(
    m: CMatrix,
    prefix: &mut Vec<Pauli>,
    out: &mut Vec<(PauliString, Complex64)>,
    tol: f64,
) {
    let d = m.nrows();
    if d == 1 {
        let c = m[(0, 0)];
        if c.norm() > tol {
            out.push((PauliString::new(prefix.clone()), c));
        }
        return;
    }
    let h = d / 2;
    let a = m.view((0, 0), (h, h));
    let b = m.view((0, h), (h, h));
    let c = m.view((h, 0), (h, h));
    let dd = m.view((h, h), (h, h));
    let half = Complex64::new(0.5, 0.0);
    let ihalf = Complex64::new(0.0, 0.5);
    // M = I (x) (A+D)/2 + X (x) (B+C)/2 + Y (x) i(B-C)/2 + Z (x) (A-D)/2
    let blocks = [
        (Pauli::I, (a + dd) * half),
        (Pauli::X, (b + c) * half),
        (Pauli::Y, (b - c) * ihalf),
        (Pauli::Z, (a - dd) * half),
    ];
    for (p, r) in blocks {
        // Leaf coefficients of a subtree are bounded by its max entry.
        if crate::operators::max_abs(&r) <= tol {
            continue;
        }
        prefix.push(p);
        decompose_rec(r, prefix, out, tol);
        prefix.pop();
    }
}

/// Canonical form of a weighted Pauli-string sum: merged, pruned, sorted.
pub fn canonical_terms(terms: Vec<(f64, PauliString)>) -> Vec<(f64, PauliString)> {
    let mut terms = terms;
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
    for (w, s) in terms {
        if let Some(last) = merged.last_mut() {
            if last.1 == s {
                last.0 += w;
                continue;
            }
        }
        merged.push((w, s));
    }
    let scale = merged.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max);
    merged.retain(|(w, _)| w.abs() > 1e-14 * (1.0 + scale));
    merged
}

/// Matrix of `sum_i w_i P_i` on the `2^n` system space.
pub fn terms_matrix(terms: &[(f64, PauliString)], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for (w, s) in terms {
        m += s.matrix() * Complex64::new(*w, 0.0);
    }
    m
}

/// Environment structure: one factor per site, or one shared factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvModel {
    Independent { dims: Vec<usize> },
    Common { dim: usize },
}

/// Which environment factor a term couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvTarget {
    Site(usize),
    Shared,
}

/// One noise term `coupling * string (x) env_op`, with `env_op` on the
/// environment factor at index `env_factor` of the full space.
#[derive(Debug, Clone)]
pub struct NoiseTerm {
    pub coupling: f64,
    pub string: PauliString,
    pub env_factor: usize,
    pub env_op: DenseOperator,
}

/// Uncontrollable part `coupling * 1_S (x) env_op`: commutes with all system
/// pulses, so no pulse sequence can modify it.
#[derive(Debug, Clone)]
pub struct TrivialTerm {
    pub coupling: f64,
    pub env_factor: usize,
    pub env_op: DenseOperator,
}

/// Per-site couplings `c[j]`, `a[j]` for j = 0 (trivial), 1..=3 (x, y, z).
pub struct SiteCoupling {
    pub c: [f64; 4],
    pub a: [DenseOperator; 4],
}

/// A structured system-environment Hamiltonian. See the module docs for the
/// represented family and factor layout.
#[derive(Debug, Clone)]
pub struct SEHamiltonian {
    space: Arc<HilbertSpace>,
    omega: f64,
    sites: usize,
    env: EnvModel,
    signal: Vec<(f64, PauliString)>,
    noise: Vec<NoiseTerm>,
    trivial: Vec<TrivialTerm>,
}

impl SEHamiltonian {
    /// General constructor; the typed builders below cover the common cases.
    pub fn from_parts(
        omega: f64,
        sites: usize,
        env: EnvModel,
        signal: Vec<(f64, PauliString)>,
        noise: Vec<(f64, PauliString, EnvTarget, DenseOperator)>,
        trivial: Vec<(f64, EnvTarget, DenseOperator)>,
    ) -> Result<Self, HamiltonianError> {
        Self::from_parts_with_cap(omega, sites, env, signal, noise, trivial, DEFAULT_DIM_CAP)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts_with_cap(
        omega: f64,
        sites: usize,
        env: EnvModel,
        signal: Vec<(f64, PauliString)>,
        noise: Vec<(f64, PauliString, EnvTarget, DenseOperator)>,
        trivial: Vec<(f64, EnvTarget, DenseOperator)>,
        cap: usize,
    ) -> Result<Self, HamiltonianError> {
        if !omega.is_finite() {
            return Err(HamiltonianError::NonFiniteCoupling);
        }
        let env_dims: Vec<usize> = match &env {
            EnvModel::Independent { dims } => {
                if dims.len() != sites {
                    return Err(HamiltonianError::EnvModelShape);
                }
                dims.clone()
            }
            EnvModel::Common { dim } => vec![*dim],
        };
        let mut factors: Vec<Factor> = vec![Factor::system(2); sites];
        factors.extend(env_dims.iter().map(|&d| Factor::environment(d)));
        let space = HilbertSpace::with_cap(factors, cap)?;

        let resolve = |t: EnvTarget| -> Result<usize, HamiltonianError> {
            match (t, &env) {
                (EnvTarget::Site(s), EnvModel::Independent { .. }) => {
                    if s >= sites {
                        return Err(HamiltonianError::SiteOutOfRange { site: s, sites });
                    }
                    Ok(sites + s)
                }
                (EnvTarget::Shared, EnvModel::Common { .. }) => Ok(sites),
                (EnvTarget::Site(s), EnvModel::Common { .. }) => {
                    Err(HamiltonianError::BadEnvTarget { site: s })
                }
                (EnvTarget::Shared, EnvModel::Independent { .. }) => {
                    Err(HamiltonianError::EnvModelShape)
                }
            }
        };
        let check_env_op = |op: &DenseOperator, factor: usize| -> Result<(), HamiltonianError> {
            let f = op.space().factors();
            if f.len() != 1 || f[0].kind != FactorKind::Environment {
                return Err(HamiltonianError::BadEnvOperatorSpace);
            }
            let expected = space.factor(factor).unwrap().dim;
            if op.dim() != expected {
                return Err(HamiltonianError::EnvDimMismatch { expected, found: op.dim() });
            }
            op.require_hermitian()?;
            Ok(())
        };

        for (w, s) in &signal {
            if !w.is_finite() {
                return Err(HamiltonianError::NonFiniteCoupling);
            }
            if s.n_sites() != sites {
                return Err(HamiltonianError::StringLength { expected: sites, found: s.n_sites() });
            }
        }
        let mut noise_terms = Vec::with_capacity(noise.len());
        for (c, s, target, op) in noise {
            if !c.is_finite() {
                return Err(HamiltonianError::NonFiniteCoupling);
            }
            if s.n_sites() != sites {
                return Err(HamiltonianError::StringLength { expected: sites, found: s.n_sites() });
            }
            let env_factor = resolve(target)?;
            check_env_op(&op, env_factor)?;
            noise_terms.push(NoiseTerm { coupling: c, string: s, env_factor, env_op: op });
        }
        let mut trivial_terms = Vec::with_capacity(trivial.len());
        for (c, target, op) in trivial {
            if !c.is_finite() {
                return Err(HamiltonianError::NonFiniteCoupling);
            }
            let env_factor = resolve(target)?;
            check_env_op(&op, env_factor)?;
            trivial_terms.push(TrivialTerm { coupling: c, env_factor, env_op: op });
        }
        Ok(SEHamiltonian {
            space,
            omega,
            sites,
            env,
            signal: canonical_terms(signal),
            noise: noise_terms,
            trivial: trivial_terms,
        })
    }

    /// `omega sigma_3 (x) 1 + sum_j c_j sigma_j (x) A_j + c_0 1 (x) A_0`
    /// for one qubit with one environment factor.
    pub fn single_qubit(
        omega: f64,
        c: [f64; 4],
        a: [DenseOperator; 4],
    ) -> Result<Self, HamiltonianError> {
        Self::n_qubit_common(omega, vec![SiteCoupling { c, a }])
    }

    /// `n` qubits, each with its own environment factor.
    pub fn n_qubit_independent(
        omega: f64,
        site_couplings: Vec<SiteCoupling>,
    ) -> Result<Self, HamiltonianError> {
        let sites = site_couplings.len();
        let dims: Vec<usize> = site_couplings.iter().map(|sc| sc.a[0].dim()).collect();
        let env = EnvModel::Independent { dims };
        let (signal, noise, trivial) =
            Self::per_site_parts(sites, site_couplings, |s| EnvTarget::Site(s))?;
        Self::from_parts(omega, sites, env, signal, noise, trivial)
    }

    /// `n` qubits all coupled to one shared environment factor.
    pub fn n_qubit_common(
        omega: f64,
        site_couplings: Vec<SiteCoupling>,
    ) -> Result<Self, HamiltonianError> {
        let sites = site_couplings.len();
        let dim = site_couplings.first().map(|sc| sc.a[0].dim()).unwrap_or(1);
        let env = EnvModel::Common { dim };
        let (signal, noise, trivial) =
            Self::per_site_parts(sites, site_couplings, |_| EnvTarget::Shared)?;
        Self::from_parts(omega, sites, env, signal, noise, trivial)
    }

    #[allow(clippy::type_complexity)]
    fn per_site_parts(
        sites: usize,
        site_couplings: Vec<SiteCoupling>,
        target: impl Fn(usize) -> EnvTarget,
    ) -> Result<
        (
            Vec<(f64, PauliString)>,
            Vec<(f64, PauliString, EnvTarget, DenseOperator)>,
            Vec<(f64, EnvTarget, DenseOperator)>,
        ),
        HamiltonianError,
    > {
        let mut signal = Vec::with_capacity(sites);
        let mut noise = Vec::new();
        let mut trivial = Vec::new();
        for (site, sc) in site_couplings.into_iter().enumerate() {
            signal.push((1.0, PauliString::single(sites, site, Pauli::Z)?));
            let [a0, ax, ay, az] = sc.a;
            for (j, (op, pauli)) in
                [(ax, Pauli::X), (ay, Pauli::Y), (az, Pauli::Z)].into_iter().enumerate()
            {
                let c = sc.c[j + 1];
                if c != 0.0 {
                    noise.push((c, PauliString::single(sites, site, pauli)?, target(site), op));
                }
            }
            if sc.c[0] != 0.0 {
                trivial.push((sc.c[0], target(site), a0));
            }
        }
        Ok((signal, noise, trivial))
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn env(&self) -> &EnvModel {
        &self.env
    }

    pub fn signal_terms(&self) -> &[(f64, PauliString)] {
        &self.signal
    }

    pub fn noise_terms(&self) -> &[NoiseTerm] {
        &self.noise
    }

    pub fn trivial_terms(&self) -> &[TrivialTerm] {
        &self.trivial
    }

    /// Environment factor canonically associated with a site.
    pub fn site_env_factor(&self, site: usize) -> usize {
        match self.env {
            EnvModel::Independent { .. } => self.sites + site,
            EnvModel::Common { .. } => self.sites,
        }
    }

    /// Product of environment factor dimensions.
    pub fn env_total_dim(&self) -> usize {
        self.space.dim() >> self.sites
    }

    /// Standalone single-factor space of the environment factor at `factor`.
    pub fn env_factor_space(&self, factor: usize) -> Arc<HilbertSpace> {
        let dim = self.space.factor(factor).expect("env factor exists").dim;
        HilbertSpace::environment(dim).expect("single env factor")
    }

    fn env_part_matrix(&self, env_factor: usize, op: &DenseOperator) -> CMatrix {
        let env_dims: Vec<usize> =
            self.space.factors()[self.sites..].iter().map(|f| f.dim).collect();
        let idx = env_factor - self.sites;
        let before: usize = env_dims[..idx].iter().product();
        let after: usize = env_dims[idx + 1..].iter().product();
        CMatrix::identity(before, before)
            .kronecker(op.entries())
            .kronecker(&CMatrix::identity(after, after))
    }

    /// Signal part `omega * sum_i w_i P_i` on the system space only.
    pub fn system_signal_matrix(&self) -> CMatrix {
        terms_matrix(&self.signal, self.sites) * Complex64::new(self.omega, 0.0)
    }

    pub fn signal_matrix(&self) -> DenseOperator {
        let env_dim = self.env_total_dim();
        let m = self.system_signal_matrix().kronecker(&CMatrix::identity(env_dim, env_dim));
        DenseOperator::new(self.space.clone(), m).unwrap()
    }

    pub fn noise_matrix(&self) -> DenseOperator {
        let d = self.space.dim();
        let mut m = CMatrix::zeros(d, d);
        for t in &self.noise {
            let env = self.env_part_matrix(t.env_factor, &t.env_op);
            m += t.string.matrix().kronecker(&env) * Complex64::new(t.coupling, 0.0);
        }
        DenseOperator::new(self.space.clone(), m).unwrap()
    }

    pub fn trivial_matrix(&self) -> DenseOperator {
        let d = self.space.dim();
        let sys_dim = 1usize << self.sites;
        let mut m = CMatrix::zeros(d, d);
        for t in &self.trivial {
            let env = self.env_part_matrix(t.env_factor, &t.env_op);
            m += CMatrix::identity(sys_dim, sys_dim).kronecker(&env)
                * Complex64::new(t.coupling, 0.0);
        }
        DenseOperator::new(self.space.clone(), m).unwrap()
    }

    /// Full dense matrix of the Hamiltonian.
    pub fn matrix(&self) -> DenseOperator {
        let m = self.signal_matrix().into_entries()
            + self.noise_matrix().into_entries()
            + self.trivial_matrix().into_entries();
        DenseOperator::new(self.space.clone(), m).unwrap()
    }

    /// Combined environment operators `C_j = sum c A` for the three Pauli
    /// axes of one site's noise, on the standalone space of that site's
    /// environment factor.
    ///
    /// Errors if any noise term touching the site also touches another site,
    /// or if the site's terms couple to different environment factors.
    pub fn site_noise_operators(
        &self,
        site: usize,
    ) -> Result<[DenseOperator; 3], HamiltonianError> {
        if site >= self.sites {
            return Err(HamiltonianError::SiteOutOfRange { site, sites: self.sites });
        }
        let mut factor: Option<usize> = None;
        let mut parts: [Vec<(f64, &DenseOperator)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for t in &self.noise {
            if t.string.get(site) == Pauli::I {
                continue;
            }
            if t.string.weight() > 1 {
                return Err(HamiltonianError::MultiSiteNoise { site });
            }
            match factor {
                None => factor = Some(t.env_factor),
                Some(f) if f != t.env_factor => {
                    return Err(HamiltonianError::MixedEnvFactors { site })
                }
                _ => {}
            }
            let axis = t.string.get(site).index() - 1;
            parts[axis].push((t.coupling, &t.env_op));
        }
        let factor = factor.unwrap_or_else(|| self.site_env_factor(site));
        let env_space = self.env_factor_space(factor);
        Ok(parts.map(|axis_terms| {
            let mut acc = DenseOperator::zeros(env_space.clone());
            for (c, op) in axis_terms {
                acc = &acc + &op.scale(c);
            }
            acc
        }))
    }

    /// Same Hamiltonian with signal weights and noise terms replaced
    /// (used by map application and symmetrization).
    pub(crate) fn with_replaced_terms(
        &self,
        signal: Vec<(f64, PauliString)>,
        noise: Vec<NoiseTerm>,
    ) -> SEHamiltonian {
        SEHamiltonian {
            space: self.space.clone(),
            omega: self.omega,
            sites: self.sites,
            env: self.env.clone(),
            signal: canonical_terms(signal),
            noise,
            trivial: self.trivial.clone(),
        }
    }
}

/// Canonical per-site noise decomposition. See the module docs.
#[derive(Debug, Clone)]
pub struct StandardForm {
    /// Singular strengths, descending: `b_1 >= b_2 >= b_3 >= 0`.
    pub b: [f64; 3],
    /// Orthonormal right-handed noise frame.
    pub frame: [UnitVector3; 3],
    /// Hilbert-Schmidt-orthonormal environment operators (zero where `b_j` is zero).
    pub env_ops: [DenseOperator; 3],
    /// Rotation with the frame vectors as columns.
    pub rotation: Matrix3<f64>,
    /// Set when the noise vanishes and the frame is an arbitrary convention.
    pub arbitrary_frame: bool,
}

impl StandardForm {
    /// `sum_j b_j sigma_(n_j) (x) B_j` on qubit (x) environment-factor space.
    pub fn reconstruct_noise(&self) -> DenseOperator {
        let env_space = self.env_ops[0].space().clone();
        let qubit = HilbertSpace::qubit();
        let d = 2 * env_space.dim();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..3 {
            if self.b[j] == 0.0 {
                continue;
            }
            m += sigma_n(&self.frame[j])
                .entries()
                .kronecker(self.env_ops[j].entries())
                * Complex64::new(self.b[j], 0.0);
        }
        let space = HilbertSpace::new(
            qubit.factors().iter().chain(env_space.factors()).copied().collect(),
        )
        .unwrap();
        DenseOperator::new(space, m).unwrap()
    }
}

/// Number of noise axes with strength above `tol * (1 + b_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseRank {
    pub rank: usize,
}

pub fn noise_rank(sf: &StandardForm, tol: f64) -> NoiseRank {
    let cut = tol * (1.0 + sf.b[0]);
    NoiseRank { rank: sf.b.iter().filter(|&&b| b > cut).count() }
}

/// Canonicalizes one site's noise into its standard form.
///
/// Deterministic conventions, applied in order: eigenvalues descending with
/// lexicographic tie-break, each frame vector's largest-magnitude component
/// positive (the environment operator flips with it), right-handedness
/// restored by flipping the third axis.
pub fn standard_form(h: &SEHamiltonian, site: usize) -> Result<StandardForm, HamiltonianError> {
    let ctil = h.site_noise_operators(site)?;
    let env_space = ctil[0].space().clone();

    let mut o = Matrix3::zeros();
    for i in 0..3 {
        for k in i..3 {
            let v = ctil[i].hs_inner(&ctil[k]).re;
            o[(i, k)] = v;
            o[(k, i)] = v;
        }
    }
    let scale = (0..3).map(|i| o[(i, i)]).fold(0.0f64, f64::max);
    if scale <= 1e-28 {
        // No noise at all: strengths zero, frame is a pure convention.
        return Ok(StandardForm {
            b: [0.0; 3],
            frame: [UnitVector3::x_axis(), UnitVector3::y_axis(), UnitVector3::z_axis()],
            env_ops: [
                DenseOperator::zeros(env_space.clone()),
                DenseOperator::zeros(env_space.clone()),
                DenseOperator::zeros(env_space),
            ],
            rotation: Matrix3::identity(),
            arbitrary_frame: true,
        });
    }

    let eig = o.symmetric_eigen();
    let mut cand: Vec<(f64, Vector3<f64>)> = (0..3)
        .map(|j| {
            let mut v = Vector3::new(
                eig.eigenvectors[(0, j)],
                eig.eigenvectors[(1, j)],
                eig.eigenvectors[(2, j)],
            );
            v /= v.norm();
            // Tie-break normalization: first component above noise positive.
            if let Some(lead) = v.iter().find(|c| c.abs() > 1e-12) {
                if *lead < 0.0 {
                    v = -v;
                }
            }
            (eig.eigenvalues[j], v)
        })
        .collect();
    let tie = 1e-12 * (1.0 + scale);
    cand.sort_by(|a, b| {
        if (a.0 - b.0).abs() > tie {
            b.0.partial_cmp(&a.0).unwrap()
        } else {
            // Equal strengths: lexicographically largest vector first.
            b.1.iter().partial_cmp(a.1.iter()).unwrap()
        }
    });
    // The eigensolver's basis loses orthogonality (~sqrt(eps)) when two
    // eigenvalues nearly coincide, and that leaks straight into the
    // cross-overlaps of the normalized environment operators. Re-orthogonalize
    // in dominance order; the residual cross-terms are then eigenvalue-level
    // (eps), not eigenvector-level (sqrt(eps)).
    for k in 0..3 {
        let (head, tail) = cand.split_at_mut(k);
        let vk = &mut tail[0].1;
        for (_, vi) in head.iter() {
            *vk -= *vi * vi.dot(vk);
        }
        *vk /= vk.norm();
    }

    let mut b = [0.0f64; 3];
    let mut frame_v = [Vector3::zeros(); 3];
    let mut env_ops: Vec<DenseOperator> = Vec::with_capacity(3);
    let neg_floor = -1e-12 * (1.0 + scale);
    // Eigenvalues carry roundoff of order eps * |O|; strengths are their
    // square roots, so the zero cut must act on the eigenvalues.
    let zero_cut = 1e-13 * scale;
    for (k, (lambda, v)) in cand.iter().enumerate() {
        if *lambda < neg_floor {
            return Err(HamiltonianError::NegativeOverlap(*lambda));
        }
        b[k] = if *lambda > zero_cut { lambda.sqrt() } else { 0.0 };
        frame_v[k] = *v;
    }
    for k in 0..3 {
        if b[k] == 0.0 {
            env_ops.push(DenseOperator::zeros(env_space.clone()));
            continue;
        }
        let mut ck = DenseOperator::zeros(env_space.clone());
        for j in 0..3 {
            ck = &ck + &ctil[j].scale(frame_v[k][j]);
        }
        // The operator norm, not sqrt(lambda): the eigenvalue carries
        // absolute roundoff ~eps * |O| which would mis-normalize weak axes.
        b[k] = ck.hs_norm();
        if k > 0 && b[k] > b[k - 1] {
            // Rounding can invert an exact tie; the clamp keeps descending
            // order bit-exact.
            b[k] = b[k - 1];
        }
        env_ops.push(ck.scale(1.0 / b[k]));
    }

    // Sign convention: largest-magnitude component of each axis positive.
    for k in 0..3 {
        let m = (0..3)
            .max_by(|&i, &j| frame_v[k][i].abs().partial_cmp(&frame_v[k][j].abs()).unwrap())
            .unwrap();
        if frame_v[k][m] < 0.0 {
            frame_v[k] = -frame_v[k];
            env_ops[k] = -&env_ops[k];
        }
    }
    // Right-handed frame: flip the weakest axis if needed.
    if frame_v[0].cross(&frame_v[1]).dot(&frame_v[2]) < 0.0 {
        frame_v[2] = -frame_v[2];
        env_ops[2] = -&env_ops[2];
    }

    let frame = frame_v.map(|v| UnitVector3::try_new(v / v.norm()).unwrap());
    let rotation = Matrix3::from_columns(&frame_v);
    let env_ops: [DenseOperator; 3] = env_ops.try_into().unwrap();
    Ok(StandardForm { b, frame, env_ops, rotation, arbitrary_frame: false })
}

/// Builds the Hamiltonian whose site noise points along the frame directions:
/// `sum_j strengths_j sigma_(dirs_j) (x) ops_j` plus the usual signal. Used to
/// set up scenarios with a known standard form.
#[allow(clippy::too_many_arguments)]
pub fn single_qubit_with_frame(
    omega: f64,
    strengths: [f64; 3],
    dirs: [UnitVector3; 3],
    ops: [DenseOperator; 3],
) -> Result<SEHamiltonian, HamiltonianError> {
    let mut noise = Vec::new();
    for j in 0..3 {
        if strengths[j] == 0.0 {
            continue;
        }
        let [nx, ny, nz] = dirs[j].components();
        for (component, pauli) in [(nx, Pauli::X), (ny, Pauli::Y), (nz, Pauli::Z)] {
            if component.abs() > 0.0 {
                noise.push((
                    strengths[j] * component,
                    PauliString::single(1, 0, pauli)?,
                    EnvTarget::Shared,
                    ops[j].clone(),
                ));
            }
        }
    }
    let dim = ops[0].dim();
    SEHamiltonian::from_parts(
        omega,
        1,
        EnvModel::Common { dim },
        vec![(1.0, PauliString::single(1, 0, Pauli::Z)?)],
        noise,
        vec![],
    )
}
