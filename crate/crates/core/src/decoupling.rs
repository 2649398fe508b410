//! Pulse schedules and the noise shaping they induce.
//!
//! A cyclic sequence of instantaneous system unitaries `g_i` applied at times
//! `0 = t_0 < t_1 < ... < t_(n-1)` within a cycle of duration `T` generates,
//! to first order in `T`, evolution under the averaged Hamiltonian
//!
//! ```text
//! H_eff = sum_i p_i U_i H U_i^dagger,    U_i = (g_i ... g_1 g_0)^dagger,
//! p_i = (t_(i+1) - t_i) / T
//! ```
//!
//! i.e. a unital, convex mixture of unitary conjugations applied to `H`.
//! [`schedule_to_map`] builds that mixture; [`apply_map`] pushes a structured
//! Hamiltonian through it, keeping the signal / noise / trivial split intact.
//!
//! On top of these two primitives sit the strategy-level operations:
//! projections onto a qubit axis, the decoupling direction read off a rank-2
//! standard form, feasibility and slowdown of single-axis decoupling,
//! permutation symmetrization to collective form, merit optimization of the
//! projection axis for rank-3 noise, and sparse X-pulse site patterns that
//! remove finite-range correlated noise at a signal cost `alpha`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

use crate::hamiltonian::{
    noise_rank, pauli_decompose, standard_form, terms_matrix, HamiltonianError, NoiseTerm,
    Pauli, PauliString, SEHamiltonian, StandardForm, DEFAULT_RANK_TOL,
};
use crate::numerics::fibonacci_sphere_point;
use crate::operators::{
    embed, max_abs, sigma_n, CMatrix, DenseOperator, HilbertSpace, OperatorError, UnitVector3,
};

#[derive(Debug, Error)]
pub enum DecouplingError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("schedule needs equally many gates and times, at least one each")]
    ScheduleShape,
    #[error("schedule times must satisfy 0 = t_0 < t_1 < ... < duration")]
    ScheduleTimes,
    #[error("branch probabilities must be nonnegative and sum to 1 (got {sum})")]
    Probabilities { sum: f64 },
    #[error("map branches must act on the system factors of the Hamiltonian")]
    MapSpace,
    #[error("noise rank {rank} leaves no protected axis; reduce to parallel form first")]
    RankTooHigh { rank: usize },
    #[error("operation is defined for single-qubit Hamiltonians, got {sites} sites")]
    SingleQubitOnly { sites: usize },
    #[error("site {site} noise is not parallel (rank > 1); project it onto one axis first")]
    NotParallel { site: usize },
    #[error("site {site} noise axis differs from the common direction")]
    MixedDirections { site: usize },
    #[error("signal contains multi-site terms; symmetrization handles single-site signals")]
    MultiSiteSignal,
    #[error("brute-force permutation average is limited to 7 sites, got {sites}")]
    OracleTooLarge { sites: usize },
    #[error("site pattern needs 1 <= k < n, got k = {k}, n = {n}")]
    BadPattern { n: usize, k: usize },
    #[error("transformed operator has non-real Pauli coefficients (imag {0:.3e})")]
    ComplexCoefficient(f64),
}

/// Instantaneous unitaries at given offsets within one cycle.
///
/// `gates[i]` fires at `times[i]`; the segment after the last gate runs to
/// `duration`. Gates act on system factors only.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    gates: Vec<DenseOperator>,
    times: Vec<f64>,
    duration: f64,
}

impl PulseSchedule {
    pub fn new(
        gates: Vec<DenseOperator>,
        times: Vec<f64>,
        duration: f64,
    ) -> Result<Self, DecouplingError> {
        if gates.is_empty() || gates.len() != times.len() {
            return Err(DecouplingError::ScheduleShape);
        }
        if times[0] != 0.0
            || !duration.is_finite()
            || duration <= 0.0
            || times.windows(2).any(|w| w[0] >= w[1])
            || *times.last().unwrap() >= duration
        {
            return Err(DecouplingError::ScheduleTimes);
        }
        let space = gates[0].space().clone();
        if !space.is_system_only() {
            return Err(DecouplingError::MapSpace);
        }
        for g in &gates {
            if g.space() != &space {
                return Err(DecouplingError::MapSpace);
            }
            g.require_unitary()?;
        }
        Ok(PulseSchedule { gates, times, duration })
    }

    /// Half-cycle flip about a Pauli axis: identity at 0, the flip at T/2.
    pub fn pi_axis(axis: Pauli, duration: f64) -> Result<Self, DecouplingError> {
        let space = HilbertSpace::qubit();
        let id = DenseOperator::identity(space.clone());
        let flip = DenseOperator::new(space, axis.matrix())?;
        PulseSchedule::new(vec![id, flip], vec![0.0, duration / 2.0], duration)
    }

    /// Half-cycle flip about an arbitrary qubit axis.
    pub fn pi_direction(r: &UnitVector3, duration: f64) -> Result<Self, DecouplingError> {
        let id = DenseOperator::identity(HilbertSpace::qubit());
        PulseSchedule::new(vec![id, sigma_n(r)], vec![0.0, duration / 2.0], duration)
    }

    pub fn gates(&self) -> &[DenseOperator] {
        &self.gates
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        self.gates[0].space()
    }

    /// Same pulse pattern compressed or stretched to a new cycle duration.
    pub fn rescaled(&self, duration: f64) -> Result<Self, DecouplingError> {
        let s = duration / self.duration;
        PulseSchedule::new(
            self.gates.clone(),
            self.times.iter().map(|t| t * s).collect(),
            duration,
        )
    }

    /// Product of all gates in one cycle, in firing order.
    pub fn cycle_unitary(&self) -> DenseOperator {
        let mut u = DenseOperator::identity(self.space().clone());
        for g in &self.gates {
            u = g * &u;
        }
        u
    }

    /// Segment durations, one per gate, ending at `duration`.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.times.len());
        for i in 0..self.times.len() {
            let end = self.times.get(i + 1).copied().unwrap_or(self.duration);
            out.push(end - self.times[i]);
        }
        out
    }
}

/// Convex mixture of unitary conjugations `P -> sum_i p_i U_i P U_i^dagger`.
#[derive(Debug, Clone)]
pub struct UnitalMap {
    branches: Vec<(f64, DenseOperator)>,
}

impl UnitalMap {
    pub fn new(branches: Vec<(f64, DenseOperator)>) -> Result<Self, DecouplingError> {
        if branches.is_empty() {
            return Err(DecouplingError::Probabilities { sum: 0.0 });
        }
        let sum: f64 = branches.iter().map(|(p, _)| p).sum();
        if branches.iter().any(|(p, _)| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
            return Err(DecouplingError::Probabilities { sum });
        }
        let space = branches[0].1.space().clone();
        if !space.is_system_only() {
            return Err(DecouplingError::MapSpace);
        }
        for (_, u) in &branches {
            if u.space() != &space {
                return Err(DecouplingError::MapSpace);
            }
            u.require_unitary()?;
        }
        Ok(UnitalMap { branches })
    }

    pub fn branches(&self) -> &[(f64, DenseOperator)] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches[0].1.dim()
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        self.branches[0].1.space()
    }

    /// Applies the mixture to a plain matrix on the branch space.
    pub fn transform(&self, m: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (p, u) in &self.branches {
            out += (u.entries() * m * u.entries().adjoint()) * Complex64::new(*p, 0.0);
        }
        out
    }

    /// The identity is a fixed point; returns the deviation `|E(1) - 1|`.
    pub fn unitality_deviation(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.transform(&CMatrix::identity(d, d)) - CMatrix::identity(d, d)))
    }
}

/// First-order averaged map of a pulse schedule.
///
/// Branch `i` is `(p_i, W_i^dagger)` with `W_i` the accumulated gate product
/// through segment `i` and `p_i` its fraction of the cycle.
pub fn schedule_to_map(schedule: &PulseSchedule) -> Result<UnitalMap, DecouplingError> {
    let segs = schedule.segment_lengths();
    let mut w = DenseOperator::identity(schedule.space().clone());
    let mut branches = Vec::with_capacity(segs.len());
    for (g, tau) in schedule.gates().iter().zip(&segs) {
        w = g * &w;
        branches.push((tau / schedule.duration(), w.adjoint()));
    }
    UnitalMap::new(branches)
}

/// Equal mixture of identity and a flip about `r`, on one qubit:
/// projects qubit operators onto the `r` axis.
pub fn projection_map(r: &UnitVector3) -> UnitalMap {
    let space = HilbertSpace::qubit();
    UnitalMap::new(vec![
        (0.5, DenseOperator::identity(space)),
        (0.5, sigma_n(r)),
    ])
    .expect("projection branches are valid")
}

/// Per-site axis projection within an `n`-qubit register.
pub fn site_axis_projection(
    n: usize,
    site: usize,
    axis: Pauli,
) -> Result<UnitalMap, DecouplingError> {
    let space = HilbertSpace::qubits(n)?;
    let local = DenseOperator::new(HilbertSpace::qubit(), axis.matrix())?;
    let flip = embed(&local, site, &space)?;
    Ok(UnitalMap::new(vec![(0.5, DenseOperator::identity(space)), (0.5, flip)])?)
}

/// Pushes a structured Hamiltonian through a unital map.
///
/// Signal weights and each noise term's Pauli string are conjugated and
/// re-expanded in the string basis; couplings fold into the expansion
/// coefficients. Environment operators, the trivial part, and `omega` are
/// untouched.
pub fn apply_map(map: &UnitalMap, h: &SEHamiltonian) -> Result<SEHamiltonian, DecouplingError> {
    if map.dim() != 1usize << h.sites() {
        return Err(DecouplingError::MapSpace);
    }
    let signal_in = terms_matrix(h.signal_terms(), h.sites());
    let signal = decompose_real(&map.transform(&signal_in))?;
    let mut noise = Vec::new();
    for t in h.noise_terms() {
        let transformed = map.transform(&t.string.matrix());
        for (w, s) in decompose_real(&transformed)? {
            noise.push(NoiseTerm {
                coupling: t.coupling * w,
                string: s,
                env_factor: t.env_factor,
                env_op: t.env_op.clone(),
            });
        }
    }
    Ok(h.with_replaced_terms(signal, noise))
}

fn decompose_real(m: &CMatrix) -> Result<Vec<(f64, PauliString)>, DecouplingError> {
    let terms = pauli_decompose(m).map_err(DecouplingError::Hamiltonian)?;
    let scale = terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(terms.len());
    for (s, c) in terms {
        if c.im.abs() > 1e-12 * (1.0 + scale) {
            return Err(DecouplingError::ComplexCoefficient(c.im));
        }
        out.push((c.re, s));
    }
    Ok(out)
}

/// Protected axis of rank-at-most-2 noise and its signal retention.
#[derive(Debug, Clone, Copy)]
pub struct DecouplingDirection {
    /// Projection axis orthogonal to both noise axes, sign-fixed to `r3 >= 0`.
    pub r: UnitVector3,
    /// Signal retention `z . r`; the effective precession is `omega * r3`.
    pub r3: f64,
    /// False when `r3` is negligible: the noise can be removed but the
    /// signal dies with it.
    pub feasible: bool,
}

/// Reads the protected axis off a standard form: `r = n_1 x n_2`.
pub fn decoupling_direction(sf: &StandardForm) -> Result<DecouplingDirection, DecouplingError> {
    if sf.arbitrary_frame {
        return Ok(DecouplingDirection { r: UnitVector3::z_axis(), r3: 1.0, feasible: true });
    }
    let rank = noise_rank(sf, DEFAULT_RANK_TOL).rank;
    if rank > 2 {
        return Err(DecouplingError::RankTooHigh { rank });
    }
    let c = sf.frame[0].cross(&sf.frame[1]);
    let mut r = UnitVector3::try_new(c / c.norm()).expect("cross of orthonormal axes is unit");
    let mut r3 = r.components()[2];
    if r3 < 0.0 {
        r = r.flipped();
        r3 = -r3;
    }
    Ok(DecouplingDirection { r, r3, feasible: r3 > 1e-9 })
}

/// Whether one noise axis is a combination of the other two, and the time
/// cost of removing it.
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Least-squares combination `C_3 ~ alpha_1 C_1 + alpha_2 C_2`;
    /// `None` when both candidate axes vanish while the target does not.
    pub alphas: Option<(f64, f64)>,
    /// Signal slowdown `(1 + alpha_1^2 + alpha_2^2)^(-1/2)` of the removing
    /// pulse sequence (1 when no removal is needed; meaningful when feasible).
    pub slowdown: f64,
    /// Hilbert-Schmidt residual of the best combination.
    pub residual: f64,
}

/// Tests whether the third noise axis of a single-qubit Hamiltonian can be
/// cancelled against the first two.
pub fn feasibility(h: &SEHamiltonian) -> Result<FeasibilityReport, DecouplingError> {
    if h.sites() != 1 {
        return Err(DecouplingError::SingleQubitOnly { sites: h.sites() });
    }
    let ctil = h.site_noise_operators(0)?;
    let target_norm = ctil[2].hs_norm();
    let base_norm = ctil[0].hs_norm().hypot(ctil[1].hs_norm());
    if target_norm <= 1e-14 * (1.0 + base_norm) {
        return Ok(FeasibilityReport {
            feasible: true,
            alphas: Some((0.0, 0.0)),
            slowdown: 1.0,
            residual: 0.0,
        });
    }
    if base_norm <= 1e-14 * (1.0 + target_norm) {
        return Ok(FeasibilityReport {
            feasible: false,
            alphas: None,
            slowdown: 1.0,
            residual: target_norm,
        });
    }
    let mut g = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            g[(i, j)] = ctil[i].hs_inner(&ctil[j]).re;
        }
    }
    let v = Vector2::new(ctil[0].hs_inner(&ctil[2]).re, ctil[1].hs_inner(&ctil[2]).re);
    // Minimum-norm least squares through the eigendecomposition of the Gram.
    let eig = g.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut alpha = Vector2::zeros();
    for j in 0..2 {
        let lam = eig.eigenvalues[j];
        if lam > 1e-12 * lmax {
            let u = Vector2::new(eig.eigenvectors[(0, j)], eig.eigenvectors[(1, j)]);
            alpha += u * (u.dot(&v) / lam);
        }
    }
    // Direct operator residual; the quadratic expansion would square the
    // conditioning and turn eps-level cancellation into sqrt(eps).
    let combo = &ctil[0].scale(alpha[0]) + &ctil[1].scale(alpha[1]);
    let residual = (&ctil[2] - &combo).hs_norm();
    let feasible = residual <= 1e-8 * target_norm;
    let slowdown = 1.0 / (1.0 + alpha.norm_squared()).sqrt();
    Ok(FeasibilityReport { feasible, alphas: Some((alpha[0], alpha[1])), slowdown, residual })
}

/// Result of permutation symmetrization.
#[derive(Debug, Clone)]
pub struct Symmetrized {
    /// The averaged Hamiltonian: collective coupling along the common axis.
    pub h: SEHamiltonian,
    /// Mean coupling `(1/N) sum_a c_a` along the common axis.
    pub c_bar: f64,
    /// Normalized collective environment operator on the full environment,
    /// `(1/(N c_bar)) sum_a c_a A_a`; zero operator when `c_bar` vanishes.
    pub a_bar: DenseOperator,
    /// The common noise axis (`None` when every site is noise-free).
    pub direction: Option<UnitVector3>,
}

/// Averages a parallel-noise Hamiltonian over all system-site permutations.
///
/// Requires every site's noise to be rank at most 1 with a shared axis; the
/// per-site couplings may differ in strength and sign. The output couples the
/// collective spin component along the axis to the mean environment operator.
pub fn symmetrize(h: &SEHamiltonian) -> Result<Symmetrized, DecouplingError> {
    let n = h.sites();
    let mut couplings = Vec::with_capacity(n);
    let mut env_ops: Vec<Option<DenseOperator>> = Vec::with_capacity(n);
    let mut factors = Vec::with_capacity(n);
    let mut direction: Option<UnitVector3> = None;
    for site in 0..n {
        let sf = standard_form(h, site)?;
        let rank = noise_rank(&sf, DEFAULT_RANK_TOL).rank;
        if rank > 1 {
            return Err(DecouplingError::NotParallel { site });
        }
        if rank == 0 {
            couplings.push(0.0);
            env_ops.push(None);
            factors.push(h.site_env_factor(site));
            continue;
        }
        let (atil, sign) = canonical_env_sign(&sf.env_ops[0]);
        match &direction {
            None => direction = Some(sf.frame[0]),
            Some(d) => {
                if (d.dot(&sf.frame[0]).abs() - 1.0).abs() > 1e-10 {
                    return Err(DecouplingError::MixedDirections { site });
                }
                // Frame signs are canonical, so matching axes are equal, not
                // opposite; the coupling sign lives in `sign`.
            }
        }
        couplings.push(sign * sf.b[0]);
        env_ops.push(Some(atil));
        // site_noise_operators already verified the factor is unique.
        let factor = h
            .noise_terms()
            .iter()
            .find(|t| t.string.get(site) != Pauli::I)
            .map(|t| t.env_factor)
            .unwrap_or_else(|| h.site_env_factor(site));
        factors.push(factor);
    }

    // Signal: average single-site weights over sites; identity strings pass
    // through; anything multi-site has no compact permutation average here.
    let mut axis_weight = [0.0f64; 3];
    let mut identity_weight = 0.0;
    for (w, s) in h.signal_terms() {
        match s.weight() {
            0 => identity_weight += w,
            1 => {
                let site = s.support()[0];
                axis_weight[s.get(site).index() - 1] += w / n as f64;
            }
            _ => return Err(DecouplingError::MultiSiteSignal),
        }
    }
    let mut signal: Vec<(f64, PauliString)> = Vec::new();
    if identity_weight != 0.0 {
        signal.push((identity_weight, PauliString::identity(n)));
    }
    for site in 0..n {
        for (j, &w) in axis_weight.iter().enumerate() {
            if w != 0.0 {
                signal.push((
                    w,
                    PauliString::single(n, site, Pauli::from_index(j + 1).unwrap())
                        .map_err(DecouplingError::Hamiltonian)?,
                ));
            }
        }
    }

    // Noise: every system site couples to every source site's environment
    // operator with weight c_a / N along the common axis.
    let mut noise = Vec::new();
    if let Some(dir) = &direction {
        let comps = dir.components();
        for site in 0..n {
            for a in 0..n {
                let Some(atil) = &env_ops[a] else { continue };
                if couplings[a] == 0.0 {
                    continue;
                }
                for (j, &comp) in comps.iter().enumerate() {
                    if comp.abs() <= 1e-15 {
                        continue;
                    }
                    noise.push(NoiseTerm {
                        coupling: couplings[a] / n as f64 * comp,
                        string: PauliString::single(n, site, Pauli::from_index(j + 1).unwrap())
                            .map_err(DecouplingError::Hamiltonian)?,
                        env_factor: factors[a],
                        env_op: atil.clone(),
                    });
                }
            }
        }
    }
    let h_sym = h.with_replaced_terms(signal, noise);

    let c_bar = couplings.iter().sum::<f64>() / n as f64;
    let env_space = full_environment_space(h)?;
    let mut a_bar = DenseOperator::zeros(env_space.clone());
    if c_bar.abs() > 1e-14 * couplings.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0) {
        for a in 0..n {
            let Some(atil) = &env_ops[a] else { continue };
            let env_pos = factors[a] - n;
            let emb = embed(atil, env_pos, &env_space)?;
            a_bar = &a_bar + &emb.scale(couplings[a] / (n as f64 * c_bar));
        }
    }
    Ok(Symmetrized { h: h_sym, c_bar, a_bar, direction })
}

fn full_environment_space(h: &SEHamiltonian) -> Result<Arc<HilbertSpace>, DecouplingError> {
    let env_factors: Vec<_> = h.space().factors()[h.sites()..].to_vec();
    Ok(HilbertSpace::new(env_factors)?)
}

/// Fixes the sign of a Hermitian operator so its largest-magnitude entry has
/// positive real part (positive imaginary part when the real part vanishes).
/// Returns the canonical operator and the sign that was applied.
fn canonical_env_sign(op: &DenseOperator) -> (DenseOperator, f64) {
    let m = op.entries();
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_norm = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z.norm() > best_norm {
                best_norm = z.norm();
                best = z;
            }
        }
    }
    let sign = if best.re.abs() > 1e-12 * best_norm {
        best.re.signum()
    } else if best.im != 0.0 {
        best.im.signum()
    } else {
        1.0
    };
    (op.scale(sign), sign)
}

/// Brute-force average of the full Hamiltonian matrix over all `N!` system
/// permutations. Exponential; meant as an oracle for small registers.
pub fn permutation_average(h: &SEHamiltonian) -> Result<DenseOperator, DecouplingError> {
    use itertools::Itertools;
    let n = h.sites();
    if n > 7 {
        return Err(DecouplingError::OracleTooLarge { sites: n });
    }
    let m = h.matrix().into_entries();
    let d = m.nrows();
    let mut acc = CMatrix::zeros(d, d);
    let mut count = 0usize;
    for perm in (0..n).permutations(n) {
        let sigma = system_basis_permutation(h, &perm);
        for i in 0..d {
            for j in 0..d {
                acc[(sigma[i], sigma[j])] += m[(i, j)];
            }
        }
        count += 1;
    }
    let avg = acc / Complex64::new(count as f64, 0.0);
    Ok(DenseOperator::new(h.space().clone(), avg)?)
}

/// Basis-index action of a system-site permutation (identity on environment
/// factors): site `i` of the image holds what site `perm^-1(i)` held.
fn system_basis_permutation(h: &SEHamiltonian, perm: &[usize]) -> Vec<usize> {
    let space = h.space();
    let n = h.sites();
    let strides = space.strides();
    let dims: Vec<usize> = space.factors().iter().map(|f| f.dim).collect();
    let mut inv = vec![0usize; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let d = space.dim();
    let mut out = vec![0usize; d];
    for x in 0..d {
        let mut digits = vec![0usize; dims.len()];
        let mut rem = x;
        for (f, &s) in strides.iter().enumerate() {
            digits[f] = rem / s;
            rem %= s;
        }
        let mut y = 0usize;
        for f in 0..dims.len() {
            let src = if f < n { inv[f] } else { f };
            y += digits[src] * strides[f];
        }
        out[x] = y;
    }
    out
}

/// Outcome of optimizing the projection axis against fluctuating couplings.
#[derive(Debug, Clone)]
pub enum DirectionOutcome {
    /// Best finite trade-off between retained signal and residual noise
    /// variance: merit `= (r.z)^2 / sum_j b_j^2 var_j (r.n_j)^2`.
    Optimized { direction: UnitVector3, merit: f64 },
    /// The variance form has a null direction with signal overlap: noise can
    /// be removed with finite signal retention, so the merit diverges.
    Unbounded { direction: UnitVector3 },
}

/// Maximizes signal retention against residual noise variance over the
/// sphere of projection axes.
///
/// `variances[j]` is the variance of the fluctuating coupling along standard
/// form axis `j`. Deterministic multi-start (32 lattice points) projected
/// gradient ascent; merit maxima are compared and the best kept.
pub fn optimize_direction(sf: &StandardForm, variances: [f64; 3]) -> DirectionOutcome {
    let z = Vector3::new(0.0, 0.0, 1.0);
    let mut q = Matrix3::zeros();
    for j in 0..3 {
        let njv: Vector3<f64> = sf.frame[j].as_vector();
        q += njv * njv.transpose() * (sf.b[j] * sf.b[j] * variances[j]);
    }
    let eig = q.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    // Null directions with signal overlap make the merit divergent.
    let mut z_null = Vector3::zeros();
    for j in 0..3 {
        if eig.eigenvalues[j] <= 1e-12 * (1.0 + lmax) {
            let v = Vector3::new(
                eig.eigenvectors[(0, j)],
                eig.eigenvectors[(1, j)],
                eig.eigenvectors[(2, j)],
            );
            z_null += v * v.dot(&z);
        }
    }
    if z_null.norm() > 1e-9 {
        let mut dir = z_null / z_null.norm();
        if dir.z < 0.0 {
            dir = -dir;
        }
        return DirectionOutcome::Unbounded {
            direction: UnitVector3::try_new(dir).expect("normalized"),
        };
    }

    // Scale-normalize so the gradient tolerance is dimensionless.
    let tr = q.trace();
    let qs = q / tr;
    let merit_of = |r: &Vector3<f64>| -> f64 {
        let u = r.dot(&z);
        (u * u) / (qs * r).dot(r).max(1e-300)
    };
    let grad_tangent = |r: &Vector3<f64>| -> Vector3<f64> {
        let u = r.dot(&z);
        let v = (qs * r).dot(r).max(1e-300);
        let grad = (z * (2.0 * u * v) - qs * r * (2.0 * u * u)) / (v * v);
        grad - r * grad.dot(r)
    };

    let mut best: Option<(f64, Vector3<f64>)> = None;
    for k in 0..32 {
        let p = fibonacci_sphere_point(k, 32);
        let mut r = Vector3::new(p[0], p[1], p[2]);
        let mut step = 0.5;
        for _ in 0..500 {
            let g = grad_tangent(&r);
            if g.norm() <= 1e-8 * (1.0 + merit_of(&r)) {
                break;
            }
            let mut advanced = false;
            while step > 1e-14 {
                let cand = (r + g * step).normalize();
                if merit_of(&cand) > merit_of(&r) {
                    r = cand;
                    step = (step * 1.5).min(2.0);
                    advanced = true;
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        let m = merit_of(&r);
        if best.as_ref().map(|(bm, _)| m > *bm).unwrap_or(true) {
            best = Some((m, r));
        }
    }
    let (merit_scaled, mut dir) = best.expect("at least one start");
    if dir.z < 0.0 {
        dir = -dir;
    }
    DirectionOutcome::Optimized {
        direction: UnitVector3::try_new(dir.normalize()).expect("normalized"),
        merit: merit_scaled / tr,
    }
}

/// One layer of a site-pattern scheme: the same flip on a set of sites,
/// cycled at a relative period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeLayer {
    pub gate: Pauli,
    pub sites: Vec<usize>,
    pub period: usize,
}

/// Sparse flip pattern that removes diagonal correlated noise of range at
/// most `k` while keeping a `1/(k+1)`-ish fraction of the signal.
///
/// Sites at multiples of `k+1` are left unpulsed (any window of `k+1`
/// consecutive sites contains exactly one of them, so every multi-site term
/// of range `<= k` has a flipped support site); all others receive the X
/// layer. The Z layer on every site removes transverse noise first. Layers
/// apply as per-site two-branch projections, in listed order.
#[derive(Debug, Clone)]
pub struct CorrelatedScheme {
    n: usize,
    k: usize,
    x_sites: Vec<usize>,
    alpha: f64,
}

pub fn correlated_scheme(n: usize, k: usize) -> Result<CorrelatedScheme, DecouplingError> {
    if k == 0 || k >= n {
        return Err(DecouplingError::BadPattern { n, k });
    }
    let x_sites: Vec<usize> = (0..n).filter(|s| s % (k + 1) != 0).collect();
    let kept = n - x_sites.len();
    Ok(CorrelatedScheme { n, k, x_sites, alpha: kept as f64 / n as f64 })
}

impl CorrelatedScheme {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sites receiving the X layer.
    pub fn x_sites(&self) -> &[usize] {
        &self.x_sites
    }

    /// Sites whose signal survives.
    pub fn kept_sites(&self) -> Vec<usize> {
        (0..self.n).filter(|s| s % (self.k + 1) == 0).collect()
    }

    /// Surviving signal fraction.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn layers(&self) -> Vec<SchemeLayer> {
        vec![
            SchemeLayer { gate: Pauli::Z, sites: (0..self.n).collect(), period: 1 },
            SchemeLayer { gate: Pauli::X, sites: self.x_sites.clone(), period: 2 },
        ]
    }

    /// Applies the scheme's per-site projections to a Hamiltonian.
    pub fn apply(&self, h: &SEHamiltonian) -> Result<SEHamiltonian, DecouplingError> {
        let mut cur = h.clone();
        for layer in self.layers() {
            for &site in &layer.sites {
                cur = apply_map(&site_axis_projection(self.n, site, layer.gate)?, &cur)?;
            }
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{single_qubit_with_frame, EnvModel, EnvTarget, SiteCoupling};
    use crate::operators::{pauli, Factor};
    use crate::sampling::{
        random_hermitian, random_hs_orthonormal_pair, random_unit_vector, rng_from_seed,
    };
    use rand::Rng;

    fn env_identity(dim: usize) -> DenseOperator {
        DenseOperator::identity(HilbertSpace::environment(dim).unwrap())
    }

    fn env_op(m: CMatrix) -> DenseOperator {
        let d = m.nrows();
        DenseOperator::new(HilbertSpace::environment(d).unwrap(), m).unwrap()
    }

    #[test]
    fn half_cycle_flip_gives_even_mixture() {
        let sched = PulseSchedule::pi_axis(Pauli::Z, 2.0).unwrap();
        let map = schedule_to_map(&sched).unwrap();
        assert_eq!(map.branches().len(), 2);
        assert!((map.branches()[0].0 - 0.5).abs() < 1e-15);
        assert!((map.branches()[1].0 - 0.5).abs() < 1e-15);
        let z = pauli(3).unwrap();
        assert!(max_abs(&(map.branches()[1].1.entries() - z.entries())) < 1e-15);
        assert!(map.unitality_deviation() < 1e-15);
    }

    #[test]
    fn three_gate_schedule_probabilities() {
        let space = HilbertSpace::qubit();
        let id = DenseOperator::identity(space);
        let x = pauli(1).unwrap();
        let y = pauli(2).unwrap();
        let t = 3.0;
        let sched = PulseSchedule::new(
            vec![id, x.clone(), y.clone()],
            vec![0.0, 0.2 * t, 0.5 * t],
            t,
        )
        .unwrap();
        let map = schedule_to_map(&sched).unwrap();
        let ps: Vec<f64> = map.branches().iter().map(|(p, _)| *p).collect();
        assert!((ps[0] - 0.2).abs() < 1e-15);
        assert!((ps[1] - 0.3).abs() < 1e-15);
        assert!((ps[2] - 0.5).abs() < 1e-15);
        // branch 2 unitary = (Y X)^dagger
        let w2 = &y * &x;
        assert!(max_abs(&(map.branches()[2].1.entries() - w2.adjoint().entries())) < 1e-14);
    }

    #[test]
    fn trivial_schedule_is_identity_channel() {
        let space = HilbertSpace::qubit();
        let sched =
            PulseSchedule::new(vec![DenseOperator::identity(space)], vec![0.0], 1.0).unwrap();
        let map = schedule_to_map(&sched).unwrap();
        assert_eq!(map.branches().len(), 1);
        let mut rng = rng_from_seed(5);
        let env_space = HilbertSpace::environment(2).unwrap();
        let h = SEHamiltonian::single_qubit(
            0.9,
            [0.0, 0.7, -0.3, 0.4],
            [
                env_identity(2),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
            ],
        )
        .unwrap();
        let h2 = apply_map(&map, &h).unwrap();
        assert!((h.matrix().entries() - h2.matrix().entries()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn schedule_validation() {
        let space = HilbertSpace::qubit();
        let id = DenseOperator::identity(space.clone());
        assert!(matches!(
            PulseSchedule::new(vec![], vec![], 1.0),
            Err(DecouplingError::ScheduleShape)
        ));
        assert!(matches!(
            PulseSchedule::new(vec![id.clone(), id.clone()], vec![0.0, 1.0], 1.0),
            Err(DecouplingError::ScheduleTimes)
        ));
        assert!(matches!(
            PulseSchedule::new(vec![id.clone(), id.clone()], vec![0.1, 0.5], 1.0),
            Err(DecouplingError::ScheduleTimes)
        ));
        // non-unitary gate
        let bad = DenseOperator::new(space, CMatrix::zeros(2, 2)).unwrap();
        assert!(PulseSchedule::new(vec![bad], vec![0.0], 1.0).is_err());
    }

    #[test]
    fn map_validation() {
        let space = HilbertSpace::qubit();
        let id = DenseOperator::identity(space.clone());
        assert!(matches!(
            UnitalMap::new(vec![(0.6, id.clone()), (0.6, id.clone())]),
            Err(DecouplingError::Probabilities { .. })
        ));
        // environment factor in a branch space is rejected
        let mixed = HilbertSpace::new(vec![Factor::environment(2)]).unwrap();
        let env_id = DenseOperator::identity(mixed);
        assert!(matches!(UnitalMap::new(vec![(1.0, env_id)]), Err(DecouplingError::MapSpace)));
    }

    #[test]
    fn projection_tilts_signal_axis() {
        // pi_r(sigma_3) = r3 sigma_r for r = (1,1,1)/sqrt(3)
        let r = UnitVector3::normalized(1.0, 1.0, 1.0).unwrap();
        let map = projection_map(&r);
        let z = pauli(3).unwrap();
        let got = map.transform(z.entries());
        let want = sigma_n(&r).scale(1.0 / 3f64.sqrt());
        assert!(max_abs(&(&got - want.entries())) < 1e-14);
    }

    #[test]
    fn apply_map_matches_direct_projection_formula() {
        // pi_r(H) = omega r3 sigma_r (x) 1 + sigma_r (x) sum_j r_j C_j
        let mut rng = rng_from_seed(606);
        for _ in 0..20 {
            let env_space = HilbertSpace::environment(3).unwrap();
            let a: Vec<DenseOperator> =
                (0..3).map(|_| random_hermitian(&env_space, &mut rng)).collect();
            let c: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let omega = 0.5 + rng.random::<f64>();
            let h = SEHamiltonian::single_qubit(
                omega,
                [0.0, c[0], c[1], c[2]],
                [env_identity(3), a[0].clone(), a[1].clone(), a[2].clone()],
            )
            .unwrap();
            let r = random_unit_vector(&mut rng);
            let h_eff = apply_map(&projection_map(&r), &h).unwrap();
            let rc = r.components();
            let mut want = sigma_n(&r)
                .entries()
                .kronecker(&CMatrix::identity(3, 3))
                * Complex64::new(omega * rc[2], 0.0);
            let mut env_sum = CMatrix::zeros(3, 3);
            for j in 0..3 {
                env_sum += a[j].entries() * Complex64::new(c[j] * rc[j], 0.0);
            }
            want += sigma_n(&r).entries().kronecker(&env_sum);
            let got = h_eff.matrix();
            assert!(max_abs(&(got.entries() - &want)) < 1e-12);
        }
    }

    #[test]
    fn direction_from_tilted_frame() {
        // n1 = x, n2 = (y+z)/sqrt(2) -> r = (z-y)/sqrt(2), r3 = 1/sqrt(2)
        let env_space = HilbertSpace::environment(2).unwrap();
        let mut rng = rng_from_seed(77);
        let (b1, b2) = random_hs_orthonormal_pair(&env_space, &mut rng);
        let n1 = UnitVector3::x_axis();
        let n2 = UnitVector3::normalized(0.0, 1.0, 1.0).unwrap();
        let n3 = UnitVector3::normalized(0.0, -1.0, 1.0).unwrap();
        let h = single_qubit_with_frame(
            1.0,
            [1.9, 0.8, 0.0],
            [n1, n2, n3],
            [b1, b2, DenseOperator::zeros(env_space)],
        )
        .unwrap();
        let sf = standard_form(&h, 0).unwrap();
        let dir = decoupling_direction(&sf).unwrap();
        assert!(dir.feasible);
        assert!((dir.r3 - 1.0 / 2f64.sqrt()).abs() < 1e-10);
        let [x, y, z] = dir.r.components();
        assert!(x.abs() < 1e-10);
        assert!((y + 1.0 / 2f64.sqrt()).abs() < 1e-10);
        assert!((z - 1.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn direction_edge_cases() {
        let env_space = HilbertSpace::environment(2).unwrap();
        let s = 0.5f64.sqrt();
        // rank 3 errors: mutually orthonormal env operators on all three axes
        let h3 = SEHamiltonian::single_qubit(
            1.0,
            [0.0, 1.0, 0.8, 0.6],
            [
                env_identity(2),
                env_op(Pauli::X.matrix()).scale(s),
                env_op(Pauli::Y.matrix()).scale(s),
                env_op(Pauli::Z.matrix()).scale(s),
            ],
        )
        .unwrap();
        let sf3 = standard_form(&h3, 0).unwrap();
        assert!(matches!(
            decoupling_direction(&sf3),
            Err(DecouplingError::RankTooHigh { rank: 3 })
        ));
        // noise in the x-y plane leaves the z axis: r3 = 1
        let hz = single_qubit_with_frame(
            1.0,
            [1.0, 0.5, 0.0],
            [UnitVector3::x_axis(), UnitVector3::y_axis(), UnitVector3::z_axis()],
            [
                env_op(Pauli::Z.matrix()).scale(s),
                env_op(Pauli::X.matrix()).scale(s),
                DenseOperator::zeros(env_space),
            ],
        )
        .unwrap();
        let dir = decoupling_direction(&standard_form(&hz, 0).unwrap()).unwrap();
        assert!((dir.r3 - 1.0).abs() < 1e-12);
        // noise plane containing z: r3 = 0, infeasible
        let hx = single_qubit_with_frame(
            1.0,
            [1.0, 0.5, 0.0],
            [UnitVector3::z_axis(), UnitVector3::y_axis(), UnitVector3::x_axis()],
            [
                env_op(Pauli::Z.matrix()).scale(0.5f64.sqrt()),
                env_op(Pauli::X.matrix()).scale(0.5f64.sqrt()),
                DenseOperator::zeros(HilbertSpace::environment(2).unwrap()),
            ],
        )
        .unwrap();
        let dir = decoupling_direction(&standard_form(&hx, 0).unwrap()).unwrap();
        assert!(!dir.feasible);
        assert!(dir.r3.abs() < 1e-10);
    }

    #[test]
    fn rank2_projection_removes_noise_and_keeps_scaled_signal() {
        let mut rng = rng_from_seed(909);
        for _ in 0..20 {
            let env_space = HilbertSpace::environment(2).unwrap();
            let (b1, b2) = random_hs_orthonormal_pair(&env_space, &mut rng);
            let frame = crate::sampling::random_frame(&mut rng);
            let r3_gen = frame[0].cross(&frame[1]).z;
            if r3_gen.abs() < 0.05 {
                continue;
            }
            let strengths = [1.0 + rng.random::<f64>(), 0.3 + 0.5 * rng.random::<f64>(), 0.0];
            let omega = 1.0;
            let h = single_qubit_with_frame(
                omega,
                strengths,
                frame,
                [b1, b2, DenseOperator::zeros(env_space)],
            )
            .unwrap();
            let sf = standard_form(&h, 0).unwrap();
            let dir = decoupling_direction(&sf).unwrap();
            let h_eff = apply_map(&projection_map(&dir.r), &h).unwrap();
            assert!(h_eff.noise_matrix().max_abs() < 1e-10);
            let want = sigma_n(&dir.r)
                .entries()
                .kronecker(&CMatrix::identity(2, 2))
                * Complex64::new(omega * dir.r3, 0.0);
            assert!(max_abs(&(h_eff.matrix().entries() - &want)) < 1e-10);
        }
    }

    #[test]
    fn feasibility_frozen_example() {
        // c = (1, 0, 1), A3 = A1: alpha = (1, 0), slowdown 1/sqrt(2)
        let a1 = env_op(Pauli::Z.matrix());
        let h = SEHamiltonian::single_qubit(
            1.0,
            [0.0, 1.0, 0.0, 1.0],
            [env_identity(2), a1.clone(), env_identity(2), a1],
        )
        .unwrap();
        let rep = feasibility(&h).unwrap();
        assert!(rep.feasible);
        let (a1c, a2c) = rep.alphas.unwrap();
        assert!((a1c - 1.0).abs() < 1e-10);
        assert!(a2c.abs() < 1e-10);
        assert!((rep.slowdown - 1.0 / 2f64.sqrt()).abs() < 1e-10);
        assert!(rep.residual < 1e-10);
    }

    #[test]
    fn feasibility_orthogonal_target_is_infeasible() {
        let mut rng = rng_from_seed(1212);
        let env_space = HilbertSpace::environment(3).unwrap();
        let (a1, a2) = random_hs_orthonormal_pair(&env_space, &mut rng);
        // build a third operator orthogonal to both
        let mut a3 = random_hermitian(&env_space, &mut rng);
        for b in [&a1, &a2] {
            a3 = &a3 - &b.scale(b.hs_inner(&a3).re);
        }
        a3 = a3.scale(1.0 / a3.hs_norm());
        let h = SEHamiltonian::single_qubit(
            1.0,
            [0.0, 0.8, 0.5, 0.9],
            [env_identity(3), a1, a2, a3.clone()],
        )
        .unwrap();
        let rep = feasibility(&h).unwrap();
        assert!(!rep.feasible);
        assert!((rep.residual - 0.9).abs() < 1e-9);
        // zero target is trivially feasible
        let h0 = SEHamiltonian::single_qubit(
            1.0,
            [0.0, 0.8, 0.5, 0.0],
            [
                env_identity(3),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
                DenseOperator::zeros(env_space),
            ],
        )
        .unwrap();
        let rep0 = feasibility(&h0).unwrap();
        assert!(rep0.feasible);
        assert_eq!(rep0.alphas, Some((0.0, 0.0)));
        assert!((rep0.slowdown - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasibility_slowdown_matches_decoupling_direction() {
        // When C3 = a1 C1 + a2 C2, the protected axis is (-a1, -a2, 1)/norm
        // and its z-component equals the slowdown.
        let mut rng = rng_from_seed(1313);
        for _ in 0..10 {
            let env_space = HilbertSpace::environment(2).unwrap();
            let (e1, e2) = random_hs_orthonormal_pair(&env_space, &mut rng);
            let (c1, c2) = (0.5 + rng.random::<f64>(), 0.4 + rng.random::<f64>());
            let (a1t, a2t) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let a3 = &e1.scale(a1t * c1 / 1.0) + &e2.scale(a2t * c2 / 1.0);
            let h = SEHamiltonian::from_parts(
                1.0,
                1,
                EnvModel::Common { dim: 2 },
                vec![(1.0, PauliString::single(1, 0, Pauli::Z).unwrap())],
                vec![
                    (c1, PauliString::single(1, 0, Pauli::X).unwrap(), EnvTarget::Shared, e1.clone()),
                    (c2, PauliString::single(1, 0, Pauli::Y).unwrap(), EnvTarget::Shared, e2.clone()),
                    (1.0, PauliString::single(1, 0, Pauli::Z).unwrap(), EnvTarget::Shared, a3),
                ],
                vec![],
            )
            .unwrap();
            let rep = feasibility(&h).unwrap();
            assert!(rep.feasible, "constructed combination must be feasible");
            let (al1, al2) = rep.alphas.unwrap();
            assert!((al1 - a1t).abs() < 1e-9);
            assert!((al2 - a2t).abs() < 1e-9);
            let sf = standard_form(&h, 0).unwrap();
            let dir = decoupling_direction(&sf).unwrap();
            let norm = (1.0 + al1 * al1 + al2 * al2).sqrt();
            let want = [-al1 / norm, -al2 / norm, 1.0 / norm];
            let got = dir.r.components();
            for j in 0..3 {
                assert!((got[j] - want[j]).abs() < 1e-8, "axis component {j}");
            }
            assert!((dir.r3 - rep.slowdown).abs() < 1e-9);
        }
    }

    fn parallel_chain(
        omega: f64,
        couplings: &[f64],
        shared_env_op: &CMatrix,
        independent: bool,
    ) -> SEHamiltonian {
        let dim = shared_env_op.nrows();
        let mk = |c: f64| SiteCoupling {
            c: [0.0, 0.0, 0.0, c],
            a: [
                env_identity(dim),
                env_identity(dim),
                env_identity(dim),
                env_op(shared_env_op.clone()),
            ],
        };
        let sites: Vec<SiteCoupling> = couplings.iter().map(|&c| mk(c)).collect();
        if independent {
            SEHamiltonian::n_qubit_independent(omega, sites).unwrap()
        } else {
            SEHamiltonian::n_qubit_common(omega, sites).unwrap()
        }
    }

    #[test]
    fn symmetrize_mean_coupling_and_shared_env() {
        // couplings (1, 2, 3) with identical unit-norm env op: c_bar = 2, A_bar = op
        let op = Pauli::Z.matrix() * Complex64::new(0.5f64.sqrt(), 0.0);
        let h = parallel_chain(1.0, &[1.0, 2.0, 3.0], &op, false);
        let sym = symmetrize(&h).unwrap();
        assert!((sym.c_bar - 2.0).abs() < 1e-10);
        assert!(max_abs(&(sym.a_bar.entries() - &op)) < 1e-10);
        let d = sym.direction.unwrap().components();
        assert!((d[2] - 1.0).abs() < 1e-10);
        // matches the brute-force permutation average
        let oracle = permutation_average(&h).unwrap();
        assert!(max_abs(&(sym.h.matrix().entries() - oracle.entries())) < 1e-10);
        // idempotent
        let sym2 = symmetrize(&sym.h).unwrap();
        assert!(max_abs(&(sym2.h.matrix().entries() - sym.h.matrix().entries())) < 1e-10);
        // identical couplings: H unchanged
        let hu = parallel_chain(1.0, &[1.5, 1.5], &op, false);
        let symu = symmetrize(&hu).unwrap();
        assert!(max_abs(&(symu.h.matrix().entries() - hu.matrix().entries())) < 1e-10);
    }

    #[test]
    fn symmetrize_antisymmetric_couplings_cancel() {
        // Opposite couplings to one shared environment operator average to
        // zero exactly; with independent environments the difference operator
        // survives, so the shared-bath setting is the cancellation claim.
        let op = Pauli::X.matrix() * Complex64::new(0.5f64.sqrt(), 0.0);
        let h = parallel_chain(1.0, &[1.0, -1.0], &op, false);
        let sym = symmetrize(&h).unwrap();
        assert!(sym.c_bar.abs() < 1e-12);
        assert!(sym.h.noise_matrix().max_abs() < 1e-12);
        assert!(sym.a_bar.max_abs() < 1e-12);
        let oracle = permutation_average(&h).unwrap();
        assert!(max_abs(&(sym.h.matrix().entries() - oracle.entries())) < 1e-12);
    }

    #[test]
    fn symmetrize_independent_envs_match_oracle() {
        let mut rng = rng_from_seed(1414);
        for trial in 0..6 {
            let n = 2 + trial % 3;
            let couplings: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            // same axis (y), per-site random Hermitian env ops on dim 2
            let mut noise = Vec::new();
            for (site, &c) in couplings.iter().enumerate() {
                let a = random_hermitian(&HilbertSpace::environment(2).unwrap(), &mut rng);
                noise.push((
                    c,
                    PauliString::single(n, site, Pauli::Y).unwrap(),
                    EnvTarget::Site(site),
                    a,
                ));
            }
            let signal: Vec<(f64, PauliString)> =
                (0..n).map(|s| (1.0, PauliString::single(n, s, Pauli::Z).unwrap())).collect();
            let h = SEHamiltonian::from_parts(
                0.8,
                n,
                EnvModel::Independent { dims: vec![2; n] },
                signal,
                noise,
                vec![],
            )
            .unwrap();
            let sym = symmetrize(&h).unwrap();
            let oracle = permutation_average(&h).unwrap();
            let err = max_abs(&(sym.h.matrix().entries() - oracle.entries()));
            assert!(err < 1e-10, "trial {trial}: oracle mismatch {err}");
            if let Some(d) = sym.direction {
                assert!((d.components()[1].abs() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn symmetrize_rejects_nonparallel_site() {
        let env_space = HilbertSpace::environment(2).unwrap();
        let mut rng = rng_from_seed(1515);
        let (b1, b2) = random_hs_orthonormal_pair(&env_space, &mut rng);
        let h = SEHamiltonian::from_parts(
            1.0,
            2,
            EnvModel::Common { dim: 2 },
            vec![
                (1.0, PauliString::single(2, 0, Pauli::Z).unwrap()),
                (1.0, PauliString::single(2, 1, Pauli::Z).unwrap()),
            ],
            vec![
                (1.0, PauliString::single(2, 0, Pauli::X).unwrap(), EnvTarget::Shared, b1),
                (0.7, PauliString::single(2, 0, Pauli::Y).unwrap(), EnvTarget::Shared, b2.clone()),
                (0.5, PauliString::single(2, 1, Pauli::Z).unwrap(), EnvTarget::Shared, b2),
            ],
            vec![],
        )
        .unwrap();
        assert!(matches!(symmetrize(&h), Err(DecouplingError::NotParallel { site: 0 })));
    }

    #[test]
    fn permutation_unitary_moves_sites() {
        let op = Pauli::Z.matrix();
        let h = parallel_chain(1.0, &[1.0, 0.0], &op, false);
        // swap: sigma applied to basis indices
        let sigma = system_basis_permutation(&h, &[1, 0]);
        // |01e> (indices: site0=0, site1=1) maps to |10e>
        // x = 0*str0 + 1*str1 + e; dims (2,2,2): strides (4,2,1)
        assert_eq!(sigma[2], 4);
        assert_eq!(sigma[4], 2);
        assert_eq!(sigma[0], 0);
        assert_eq!(sigma[6], 6);
    }

    #[test]
    fn optimize_direction_matches_closed_form() {
        // full-rank noise: maximum merit is z^T Q^-1 z at r || Q^-1 z
        let mut rng = rng_from_seed(1616);
        for _ in 0..10 {
            let frame = crate::sampling::random_frame(&mut rng);
            let b = [1.0 + rng.random::<f64>(), 0.5 + rng.random::<f64>(), 0.2 + rng.random::<f64>()];
            let var = [0.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>()];
            let env_space = HilbertSpace::environment(2).unwrap();
            let sf = StandardForm {
                b,
                frame,
                env_ops: [
                    DenseOperator::zeros(env_space.clone()),
                    DenseOperator::zeros(env_space.clone()),
                    DenseOperator::zeros(env_space),
                ],
                rotation: Matrix3::from_columns(&[
                    frame[0].as_vector(),
                    frame[1].as_vector(),
                    frame[2].as_vector(),
                ]),
                arbitrary_frame: false,
            };
            let mut q = Matrix3::zeros();
            for j in 0..3 {
                let nj = sf.frame[j].as_vector();
                q += nj * nj.transpose() * (b[j] * b[j] * var[j]);
            }
            let z = Vector3::new(0.0, 0.0, 1.0);
            let qinv = q.try_inverse().unwrap();
            let want_merit = (qinv * z).dot(&z);
            let want_dir = (qinv * z).normalize();
            match optimize_direction(&sf, var) {
                DirectionOutcome::Optimized { direction, merit } => {
                    assert!(
                        (merit - want_merit).abs() < 1e-6 * want_merit,
                        "merit {merit} vs {want_merit}"
                    );
                    let got = Vector3::from_column_slice(&direction.components());
                    let overlap = got.dot(&want_dir).abs();
                    assert!(overlap > 1.0 - 1e-6, "direction overlap {overlap}");
                }
                DirectionOutcome::Unbounded { .. } => panic!("full-rank case must be bounded"),
            }
        }
    }

    #[test]
    fn optimize_direction_detects_divergence() {
        // rank-2 noise whose free axis has z overlap: merit diverges along n3
        let mut rng = rng_from_seed(1717);
        loop {
            let frame = crate::sampling::random_frame(&mut rng);
            if frame[2].components()[2].abs() < 0.2 {
                continue;
            }
            let env_space = HilbertSpace::environment(2).unwrap();
            let sf = StandardForm {
                b: [1.3, 0.7, 0.0],
                frame,
                env_ops: [
                    DenseOperator::zeros(env_space.clone()),
                    DenseOperator::zeros(env_space.clone()),
                    DenseOperator::zeros(env_space),
                ],
                rotation: Matrix3::from_columns(&[
                    frame[0].as_vector(),
                    frame[1].as_vector(),
                    frame[2].as_vector(),
                ]),
                arbitrary_frame: false,
            };
            match optimize_direction(&sf, [1.0, 1.0, 1.0]) {
                DirectionOutcome::Unbounded { direction } => {
                    let overlap = direction
                        .as_vector()
                        .dot(&frame[2].as_vector())
                        .abs();
                    assert!(overlap > 1.0 - 1e-9);
                    assert!(direction.components()[2] > 0.0);
                }
                DirectionOutcome::Optimized { .. } => panic!("rank-2 with z overlap diverges"),
            }
            break;
        }
    }

    #[test]
    fn scheme_patterns() {
        let s = correlated_scheme(4, 1).unwrap();
        assert_eq!(s.x_sites(), &[1, 3]);
        assert_eq!(s.kept_sites(), vec![0, 2]);
        assert!((s.alpha() - 0.5).abs() < 1e-15);
        let s = correlated_scheme(6, 2).unwrap();
        assert_eq!(s.x_sites(), &[1, 2, 4, 5]);
        assert_eq!(s.kept_sites(), vec![0, 3]);
        assert!((s.alpha() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(correlated_scheme(4, 0), Err(DecouplingError::BadPattern { .. })));
        assert!(matches!(correlated_scheme(4, 4), Err(DecouplingError::BadPattern { .. })));
        let layers = correlated_scheme(4, 1).unwrap().layers();
        assert_eq!(layers[0].gate, Pauli::Z);
        assert_eq!(layers[0].sites, vec![0, 1, 2, 3]);
        assert_eq!(layers[1].period, 2);
    }

    #[test]
    fn scheme_removes_short_range_diagonal_noise() {
        // N = 4, k = 1: nearest-neighbor ZZ and transverse singles die;
        // the range-2 ZZ pair on kept sites (0, 2) survives.
        let n = 4;
        let env = env_identity(1);
        let mut noise = Vec::new();
        for a in 0..n - 1 {
            let mut p = vec![Pauli::I; n];
            p[a] = Pauli::Z;
            p[a + 1] = Pauli::Z;
            noise.push((0.5 + 0.1 * a as f64, PauliString::new(p), EnvTarget::Shared, env.clone()));
        }
        noise.push((0.7, PauliString::single(n, 0, Pauli::X).unwrap(), EnvTarget::Shared, env.clone()));
        noise.push((0.4, PauliString::single(n, 2, Pauli::Y).unwrap(), EnvTarget::Shared, env.clone()));
        let mut long = vec![Pauli::I; n];
        long[0] = Pauli::Z;
        long[2] = Pauli::Z;
        noise.push((0.9, PauliString::new(long.clone()), EnvTarget::Shared, env.clone()));
        let signal: Vec<(f64, PauliString)> =
            (0..n).map(|s| (1.0, PauliString::single(n, s, Pauli::Z).unwrap())).collect();
        let h = SEHamiltonian::from_parts(
            1.0,
            n,
            EnvModel::Common { dim: 1 },
            signal,
            noise,
            vec![],
        )
        .unwrap();
        let scheme = correlated_scheme(n, 1).unwrap();
        let h2 = scheme.apply(&h).unwrap();
        // surviving noise: exactly the range-2 pair on sites {0, 2}
        let survivors: Vec<_> = h2.noise_terms().iter().collect();
        assert_eq!(survivors.len(), 1);
        assert_eq!(survivors[0].string, PauliString::new(long));
        assert!((survivors[0].coupling - 0.9).abs() < 1e-12);
        // signal survives exactly on kept sites
        let mut weights = vec![0.0; n];
        for (w, s) in h2.signal_terms() {
            assert_eq!(s.weight(), 1);
            weights[s.support()[0]] += w;
        }
        assert!((weights[0] - 1.0).abs() < 1e-12);
        assert!(weights[1].abs() < 1e-15);
        assert!((weights[2] - 1.0).abs() < 1e-12);
        assert!(weights[3].abs() < 1e-15);
    }
}
