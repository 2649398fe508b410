//! The repository's acceptance gate as executable checks.
//!
//! Each function exercises one numbered end-to-end guarantee with fixed
//! tolerances and returns a [`CriterionReport`] whose table is emitted by
//! the command-line runner; [`run_all`] produces the whole ordered set.
//! Thresholds and scenario recipes live here and nowhere else, so the
//! integration tests and the runner cannot drift apart.
//!
//! Reports carry wall-clock runtime separately from the table because
//! artifacts must be byte-identical across reruns; time never enters a
//! table, only the pass flag when a budget is exceeded.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::decoupling::{
    apply_map, correlated_scheme, decoupling_direction, permutation_average, projection_map,
    schedule_to_map, symmetrize, DecouplingError, PulseSchedule,
};
use crate::dynamics::{
    ghz_input, trotter_error, DynamicsError, NoiseDistribution, ParallelNoiseChannel,
    PulsedEvolution,
};
use crate::hamiltonian::{
    single_qubit_with_frame, standard_form, EnvModel, EnvTarget, HamiltonianError, Pauli,
    PauliString, SEHamiltonian, SiteCoupling,
};
use crate::metrology::{
    classical_fisher, ghz_qfi_measured, local_fluctuation_rate, optimal_time, parallel_bound,
    qfi_from_fidelity, qfi_ghz_gaussian, scaling_fit, FisherInfo, MetrologyError,
    SUPER_SQL_RATE_COEFF,
};
use crate::numerics::linear_fit;
use crate::operators::{
    embed, max_abs, sigma_n, CMatrix, DenseOperator, HilbertSpace, OperatorError, UnitVector3,
};
use crate::sampling::{random_frame, random_hermitian, random_hs_orthonormal_pair, rng_from_seed};

/// Seed the acceptance gate runs under unless overridden.
pub const DEFAULT_SEED: u64 = 0x0DD5_EED5;

/// One table value; `Unbounded` renders as the literal token `unbounded`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Unbounded,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<FisherInfo> for Cell {
    fn from(v: FisherInfo) -> Self {
        match v {
            FisherInfo::Finite(f) => Cell::Float(f),
            FisherInfo::Unbounded => Cell::Unbounded,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| (*c).to_owned()).collect(), rows: Vec::new() }
    }

    /// Rows must match the header width; a mismatch is a bug in the
    /// criterion that built the row.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width vs header");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub index: usize,
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub table: Table,
    pub runtime: Duration,
}

#[derive(Debug, Error)]
enum CriteriaError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Decoupling(#[from] DecouplingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
}

fn criterion(
    index: usize,
    name: &'static str,
    budget: Option<Duration>,
    body: impl FnOnce(&mut Table) -> Result<(bool, String), CriteriaError>,
) -> CriterionReport {
    let start = Instant::now();
    let mut table = Table::default();
    let (mut pass, mut summary) = match body(&mut table) {
        Ok(outcome) => outcome,
        Err(e) => (false, format!("errored: {e}")),
    };
    let runtime = start.elapsed();
    if let Some(limit) = budget {
        if runtime > limit {
            pass = false;
            summary = format!("{summary}; over time budget {limit:?} at {runtime:?}");
        }
    }
    CriterionReport { index, name, pass, summary, table, runtime }
}

/// 1: 500 random single-qubit couplings round-trip through their canonical
/// form with orthonormal environment operators and sorted strengths.
pub fn standard_form_roundtrip(seed: u64) -> CriterionReport {
    criterion(1, "standard-form-roundtrip", Some(Duration::from_secs(10)), |table| {
        *table = Table::new(&[
            "trials",
            "max_reconstruction_err",
            "max_orthonormality_err",
            "unsorted_count",
        ]);
        let mut rng = rng_from_seed(seed);
        let trials = 500usize;
        let mut max_rec = 0.0f64;
        let mut max_orth = 0.0f64;
        let mut unsorted = 0usize;
        for _ in 0..trials {
            let dim = 2 + (rng.random::<u64>() % 3) as usize;
            let env_space = HilbertSpace::environment(dim)?;
            let omega = 0.5 + rng.random::<f64>();
            let mut c = [0.0f64; 4];
            for slot in &mut c {
                *slot = 4.0 * rng.random::<f64>() - 2.0;
            }
            let a = [
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
            ];
            let h = SEHamiltonian::single_qubit(omega, c, a)?;
            let sf = standard_form(&h, 0)?;
            if !(sf.b[0] >= sf.b[1] && sf.b[1] >= sf.b[2] && sf.b[2] >= 0.0) {
                unsorted += 1;
            }
            let rec = sf.reconstruct_noise();
            max_rec = max_rec.max(max_abs(&(rec.entries() - h.noise_matrix().entries())));
            for i in 0..3 {
                for j in 0..3 {
                    if sf.b[i] > 0.0 && sf.b[j] > 0.0 {
                        let want = if i == j { 1.0 } else { 0.0 };
                        let got = sf.env_ops[i].hs_inner(&sf.env_ops[j]).re;
                        max_orth = max_orth.max((got - want).abs());
                    }
                }
            }
        }
        table.push(vec![trials.into(), max_rec.into(), max_orth.into(), unsorted.into()]);
        let pass = max_rec <= 1e-8 && max_orth <= 1e-8 && unsorted == 0;
        Ok((
            pass,
            format!(
                "{trials} roundtrips: reconstruction <= {max_rec:.2e}, \
                 orthonormality <= {max_orth:.2e}"
            ),
        ))
    })
}

/// 2: 200 random two-axis noise scenarios are removed exactly by the
/// projection onto the protected direction, keeping `omega r3 sigma_r`.
pub fn rank_two_decoupling(seed: u64) -> CriterionReport {
    criterion(2, "rank-two-decoupling", Some(Duration::from_secs(10)), |table| {
        *table = Table::new(&["trials", "max_noise_residual", "max_signal_err", "max_r3_err"]);
        let mut rng = rng_from_seed(seed);
        let trials = 200usize;
        let mut max_noise = 0.0f64;
        let mut max_signal = 0.0f64;
        let mut max_r3 = 0.0f64;
        for _ in 0..trials {
            let frame = loop {
                let f = random_frame(&mut rng);
                if f[2].components()[2].abs() > 1e-2 {
                    break f;
                }
            };
            let r3_expected = frame[2].components()[2].abs();
            let env_space = HilbertSpace::environment(2 + (rng.random::<u64>() % 2) as usize)?;
            let (b1_op, b2_op) = random_hs_orthonormal_pair(&env_space, &mut rng);
            let omega = 0.5 + rng.random::<f64>();
            let strengths = [
                0.8 + 0.7 * rng.random::<f64>(),
                0.1 + 0.6 * rng.random::<f64>(),
                0.0,
            ];
            let zero = DenseOperator::zeros(env_space.clone());
            let h =
                single_qubit_with_frame(omega, strengths, frame, [b1_op, b2_op, zero])?;
            let sf = standard_form(&h, 0)?;
            let dir = decoupling_direction(&sf)?;
            max_r3 = max_r3.max((dir.r3 - r3_expected).abs());
            let mapped = apply_map(&projection_map(&dir.r), &h)?;
            max_noise = max_noise.max(mapped.noise_matrix().max_abs());
            let expected =
                embed(&sigma_n(&dir.r), 0, h.space())?.scale(omega * r3_expected);
            max_signal = max_signal
                .max(max_abs(&(mapped.signal_matrix().entries() - expected.entries())));
        }
        table.push(vec![trials.into(), max_noise.into(), max_signal.into(), max_r3.into()]);
        let pass = max_noise <= 1e-9 && max_signal <= 1e-9 && max_r3 <= 1e-9;
        Ok((
            pass,
            format!(
                "{trials} scenarios: residual noise <= {max_noise:.2e}, \
                 signal error <= {max_signal:.2e}"
            ),
        ))
    })
}

/// 3: the distance between the exact pulsed propagator and its first-order
/// target falls off as `1/m` over `m = 16..1024`.
///
/// Cycles are closed (gate product is the identity) with asymmetric segment
/// lengths; symmetric or self-inverse cycles converge one order faster and
/// would sit outside the slope window.
pub fn trotter_convergence(seed: u64) -> CriterionReport {
    criterion(3, "trotter-convergence", Some(Duration::from_secs(60)), |table| {
        *table = Table::new(&["scenario", "slope", "error_m16", "error_m1024"]);
        let mut rng = rng_from_seed(seed);
        let scenarios = 20usize;
        let ms = [16usize, 32, 64, 128, 256, 512, 1024];
        let total_time = 1.0;
        let mut slopes = Vec::with_capacity(scenarios);
        for scenario in 0..scenarios {
            let dim = 2 + (rng.random::<u64>() % 2) as usize;
            let env_space = HilbertSpace::environment(dim)?;
            let omega = 0.5 + rng.random::<f64>();
            let c = [
                0.0,
                0.2 + 0.6 * rng.random::<f64>(),
                0.2 + 0.6 * rng.random::<f64>(),
                0.2 + 0.6 * rng.random::<f64>(),
            ];
            let h = SEHamiltonian::single_qubit(
                omega,
                c,
                [
                    DenseOperator::identity(env_space.clone()),
                    random_hermitian(&env_space, &mut rng),
                    random_hermitian(&env_space, &mut rng),
                    random_hermitian(&env_space, &mut rng),
                ],
            )?;
            let axis = if rng.random::<bool>() { Pauli::X } else { Pauli::Y };
            let gate =
                DenseOperator::new(HilbertSpace::qubit(), axis.matrix())?;
            // Closed asymmetric cycle: u != 1 - v keeps first-order terms
            // from cancelling pairwise between repetitions.
            let (u, v) = loop {
                let u = 0.10 + 0.20 * rng.random::<f64>();
                let v = 0.45 + 0.25 * rng.random::<f64>();
                if (u - (1.0 - v)).abs() > 0.05 {
                    break (u, v);
                }
            };
            let id = DenseOperator::identity(HilbertSpace::qubit());
            let cycle = PulseSchedule::new(
                vec![id, gate.clone(), gate],
                vec![0.0, u, v],
                1.0,
            )?;
            let h_eff = apply_map(&schedule_to_map(&cycle)?, &h)?;
            let mut errors = Vec::with_capacity(ms.len());
            for &m in &ms {
                let pe = PulsedEvolution::new(&h, cycle.rescaled(total_time / m as f64)?, m)?;
                errors.push(trotter_error(&pe, &h_eff)?);
            }
            let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            let (slope, _, _) = linear_fit(&xs, &ys);
            table.push(vec![
                scenario.into(),
                slope.into(),
                errors[0].into(),
                (*errors.last().unwrap()).into(),
            ]);
            slopes.push(slope);
        }
        let worst =
            slopes.iter().map(|s| (s + 1.0).abs()).fold(0.0f64, f64::max);
        let pass = worst <= 0.15;
        Ok((pass, format!("{scenarios} scenarios: slopes within {worst:.3} of -1")))
    })
}

/// 4: the half-cycle flip about the signal axis removes transverse noise
/// without touching the signal at all.
pub fn transverse_invariance() -> CriterionReport {
    criterion(4, "transverse-invariance", None, |table| {
        *table = Table::new(&["r3_err", "signal_change", "noise_residual"]);
        let mut rng = rng_from_seed(0xC4);
        let env_space = HilbertSpace::environment(3)?;
        let h = SEHamiltonian::single_qubit(
            1.1,
            [0.0, 0.7, 0.4, 0.0],
            [
                DenseOperator::identity(env_space.clone()),
                random_hermitian(&env_space, &mut rng),
                random_hermitian(&env_space, &mut rng),
                DenseOperator::identity(env_space.clone()),
            ],
        )?;
        let sf = standard_form(&h, 0)?;
        let dir = decoupling_direction(&sf)?;
        let r3_err = (dir.r3 - 1.0).abs();
        let mapped = apply_map(&projection_map(&UnitVector3::z_axis()), &h)?;
        let signal_change =
            max_abs(&(mapped.signal_matrix().entries() - h.signal_matrix().entries()));
        let noise_residual = mapped.noise_matrix().max_abs();
        table.push(vec![r3_err.into(), signal_change.into(), noise_residual.into()]);
        let pass = r3_err <= 1e-12 && signal_change <= 1e-12 && noise_residual <= 1e-12;
        Ok((
            pass,
            format!("signal change {signal_change:.2e}, residual {noise_residual:.2e}"),
        ))
    })
}

/// 5: the best rate under a shared Gaussian shift is `0.4289 n / sigma`
/// within 1% across a small grid.
pub fn ghz_gaussian_constant() -> CriterionReport {
    criterion(5, "ghz-gaussian-constant", Some(Duration::from_secs(5)), |table| {
        *table = Table::new(&["n", "sigma", "rate", "expected", "rel_err"]);
        let mut worst = 0.0f64;
        for &n in &[1usize, 2, 4, 8] {
            for &sigma in &[0.5, 1.0, 2.0] {
                let opt = optimal_time(n, sigma)?;
                let expected = 0.4289 * n as f64 / sigma;
                let rel = (opt.rate - expected).abs() / expected;
                worst = worst.max(rel);
                table.push(vec![
                    n.into(),
                    sigma.into(),
                    opt.rate.into(),
                    expected.into(),
                    rel.into(),
                ]);
            }
        }
        let pass = worst <= 0.01;
        Ok((pass, format!("12 grid points, worst deviation {:.3}%", worst * 100.0)))
    })
}

/// 6: the information rate never exceeds `n sqrt(F_cl)` on a 640-point
/// grid, and the achieved peak sits at `exp(-1/2)/sqrt(2)` of the bound.
pub fn bound_never_violated() -> CriterionReport {
    criterion(6, "parallel-bound", None, |table| {
        *table = Table::new(&["n", "sigma", "max_rate", "bound", "ratio_at_opt"]);
        let sigmas = [0.1, 0.5, 1.0, 2.0];
        let mut points = 0usize;
        let mut violations = 0usize;
        let mut worst_ratio_err = 0.0f64;
        for n in 1..=8usize {
            for &sigma in &sigmas {
                let dist = NoiseDistribution::Gaussian { mean: 0.0, sigma };
                let bound = match parallel_bound(n, &dist)? {
                    FisherInfo::Finite(b) => b,
                    FisherInfo::Unbounded => unreachable!("gaussian bound is finite"),
                };
                let t_max = 4.0 / (n as f64 * sigma);
                let mut max_rate = 0.0f64;
                for j in 1..=20usize {
                    let t = t_max * j as f64 / 20.0;
                    let rate = qfi_ghz_gaussian(n, sigma, t) / t;
                    points += 1;
                    if rate > bound + 1e-9 {
                        violations += 1;
                    }
                    max_rate = max_rate.max(rate);
                }
                let ratio = optimal_time(n, sigma)?.rate / bound;
                worst_ratio_err = worst_ratio_err.max((ratio - SUPER_SQL_RATE_COEFF).abs());
                table.push(vec![
                    n.into(),
                    sigma.into(),
                    max_rate.into(),
                    bound.into(),
                    ratio.into(),
                ]);
            }
        }
        let pass = violations == 0 && worst_ratio_err <= 0.002 && points == 640;
        Ok((
            pass,
            format!(
                "{points} points, {violations} violations, \
                 peak ratio within {worst_ratio_err:.1e} of exp(-1/2)/sqrt(2)"
            ),
        ))
    })
}

/// 7: independent per-site fluctuations plus symmetrization give measured
/// rates growing as `n^1.5`, matching `n^1.5 / (sqrt(2e) sigma)` pointwise.
pub fn super_sql_scaling() -> CriterionReport {
    criterion(7, "super-sql-scaling", Some(Duration::from_secs(5)), |table| {
        *table = Table::new(&["n", "t_opt", "rate", "expected", "rel_err"]);
        let sigma = 1.0;
        let mut pts = Vec::new();
        let mut worst = 0.0f64;
        for &n in &[2usize, 4, 8, 16, 32, 64] {
            let opt = local_fluctuation_rate(n, sigma)?;
            let sigma_bar = sigma / (n as f64).sqrt();
            let qfi = ghz_qfi_measured(n, sigma_bar, opt.time, 0.9, 1e-3)?;
            let rate = qfi / opt.time;
            let expected = SUPER_SQL_RATE_COEFF * (n as f64).powf(1.5) / sigma;
            let rel = (rate - expected).abs() / expected;
            worst = worst.max(rel);
            pts.push((n as f64, rate));
            table.push(vec![
                n.into(),
                opt.time.into(),
                rate.into(),
                expected.into(),
                rel.into(),
            ]);
        }
        let fit = scaling_fit(&pts)?;
        let pass = (fit.exponent - 1.5).abs() <= 0.05 && worst <= 0.005;
        Ok((
            pass,
            format!("exponent {:.4}, worst rate deviation {:.3}%", fit.exponent, worst * 100.0),
        ))
    })
}

/// 8: the sampled standard deviation of the mean of `n` independent
/// Gaussian couplings matches `sigma / sqrt(n)` within three standard
/// errors at 10^4 draws.
pub fn variance_reduction(seed: u64) -> CriterionReport {
    criterion(8, "variance-reduction", None, |table| {
        *table = Table::new(&["n", "sampled_std", "expected", "std_errors_off"]);
        let sigma = 1.0;
        let draws = 10_000usize;
        let mut pass = true;
        for &n in &[4usize, 16] {
            let s = crate::metrology::mc_mean_coupling_std(n, sigma, draws, seed + n as u64)?;
            let expected = sigma / (n as f64).sqrt();
            let se = s / (2.0 * (draws as f64 - 1.0)).sqrt();
            let off = (s - expected).abs() / se;
            pass &= off <= 3.0;
            table.push(vec![n.into(), s.into(), expected.into(), off.into()]);
        }
        Ok((pass, format!("{draws} draws per n, deviations within 3 standard errors: {pass}")))
    })
}

/// 9: equal and opposite couplings to one shared environment operator
/// cancel exactly under permutation averaging, and the structured average
/// matches the explicit sum over all site permutations.
pub fn antisymmetric_elimination(seed: u64) -> CriterionReport {
    criterion(9, "antisymmetric-elimination", None, |table| {
        *table = Table::new(&["check", "n", "residual"]);
        let mut rng = rng_from_seed(seed);
        let env_space = HilbertSpace::environment(3)?;
        let shared = random_hermitian(&env_space, &mut rng);
        let id = || DenseOperator::identity(env_space.clone());
        let site = |c3: f64, op: &DenseOperator| SiteCoupling {
            c: [0.0, 0.0, 0.0, c3],
            a: [id(), id(), id(), op.clone()],
        };
        let h = SEHamiltonian::n_qubit_common(
            1.0,
            vec![site(1.0, &shared), site(-1.0, &shared)],
        )?;
        let sym = symmetrize(&h)?;
        let cancel_residual = sym.h.noise_matrix().max_abs();
        table.push(vec!["antisymmetric-cancel".into(), 2usize.into(), cancel_residual.into()]);
        let mut pass = cancel_residual <= 1e-12 && sym.c_bar.abs() <= 1e-12;

        // Structured average vs the explicit n! sum, distinct couplings and
        // per-site operators on a shared environment.
        let small = HilbertSpace::environment(2)?;
        for n in 2..=4usize {
            let sites: Vec<SiteCoupling> = (0..n)
                .map(|_| {
                    let c3 = 2.0 * rng.random::<f64>() - 1.0;
                    let op = random_hermitian(&small, &mut rng);
                    SiteCoupling {
                        c: [0.0, 0.0, 0.0, c3],
                        a: [
                            DenseOperator::identity(small.clone()),
                            DenseOperator::identity(small.clone()),
                            DenseOperator::identity(small.clone()),
                            op,
                        ],
                    }
                })
                .collect();
            let h = SEHamiltonian::n_qubit_common(0.8, sites)?;
            let sym = symmetrize(&h)?;
            let oracle = permutation_average(&h)?;
            let diff = max_abs(&(sym.h.matrix().entries() - oracle.entries()));
            pass &= diff <= 1e-10;
            table.push(vec!["permutation-oracle".into(), n.into(), diff.into()]);
        }
        Ok((pass, format!("cancellation residual {cancel_residual:.2e}, oracle match: {pass}")))
    })
}

/// 10: on a 6-site chain the sparse flip pattern with range 1 removes all
/// nearest-neighbor diagonal noise, keeps half the signal, and the kept
/// block reaches `(n alpha)^2 t^2` information.
pub fn correlated_scheme_chain() -> CriterionReport {
    criterion(10, "correlated-scheme-chain", None, |table| {
        *table = Table::new(&["check", "value", "expected"]);
        let n = 6usize;
        let mut rng = rng_from_seed(0xC10);
        let env_space = HilbertSpace::environment(2)?;
        let shared = random_hermitian(&env_space, &mut rng);
        let zz = |i: usize| -> Result<PauliString, HamiltonianError> {
            let mut paulis = vec![Pauli::I; n];
            paulis[i] = Pauli::Z;
            paulis[i + 1] = Pauli::Z;
            Ok(PauliString::new(paulis))
        };
        let mut noise = Vec::new();
        for i in 0..n - 1 {
            noise.push((0.3 + 0.1 * i as f64, zz(i)?, EnvTarget::Shared, shared.clone()));
        }
        noise.push((0.45, PauliString::single(n, 2, Pauli::X)?, EnvTarget::Shared, shared.clone()));
        noise.push((0.35, PauliString::single(n, 4, Pauli::Y)?, EnvTarget::Shared, shared.clone()));
        let signal: Vec<(f64, PauliString)> = (0..n)
            .map(|s| Ok((1.0, PauliString::single(n, s, Pauli::Z)?)))
            .collect::<Result<_, HamiltonianError>>()?;
        let omega = 1.0;
        let h = SEHamiltonian::from_parts(
            omega,
            n,
            EnvModel::Common { dim: 2 },
            signal,
            noise,
            vec![],
        )?;
        let scheme = correlated_scheme(n, 1)?;
        let mapped = scheme.apply(&h)?;

        let noise_residual = mapped.noise_matrix().max_abs();
        table.push(vec!["noise_residual".into(), noise_residual.into(), 0.0.into()]);
        let alpha = scheme.alpha();
        table.push(vec!["alpha".into(), alpha.into(), 0.5.into()]);

        // Surviving signal: full weight on sites 0, 2, 4, nothing elsewhere.
        let mut expected_signal = CMatrix::zeros(1 << n, 1 << n);
        for s in scheme.kept_sites() {
            expected_signal += PauliString::single(n, s, Pauli::Z)?.matrix();
        }
        let signal_err = max_abs(
            &(mapped.system_signal_matrix() - expected_signal * Complex64::new(omega, 0.0)),
        );
        table.push(vec!["signal_err".into(), signal_err.into(), 0.0.into()]);

        // Kept block is noiseless: information of its extreme state grows as
        // (alpha n t)^2 = 9 t^2 here.
        let kept = scheme.kept_sites().len();
        let t = 0.6;
        let family = |theta: f64| {
            ParallelNoiseChannel::new(
                kept,
                theta,
                t,
                NoiseDistribution::Discrete { points: vec![0.0], weights: vec![1.0] },
            )
            .expect("valid noiseless channel")
            .ghz_reduced_state()
        };
        let qfi = qfi_from_fidelity(family, omega, 1e-3)?;
        let expected_qfi = (kept as f64 * t) * (kept as f64 * t);
        let qfi_rel = (qfi - expected_qfi).abs() / expected_qfi;
        table.push(vec!["qfi".into(), qfi.into(), expected_qfi.into()]);

        let pass = noise_residual <= 1e-10
            && (alpha - 0.5).abs() <= 1e-15
            && signal_err <= 1e-10
            && qfi_rel <= 0.005;
        Ok((
            pass,
            format!(
                "noise residual {noise_residual:.2e}, alpha {alpha}, \
                 kept-block qfi within {:.3}%",
                qfi_rel * 100.0
            ),
        ))
    })
}

/// 11: an equally gapped discrete shift spectrum revives the coherence
/// fully at the gap period, and its location information is unbounded.
pub fn discrete_revival() -> CriterionReport {
    criterion(11, "discrete-revival", None, |table| {
        *table = Table::new(&["quantity", "value"]);
        let (c_bar, l0, gap) = (0.8, -1.3, 0.37);
        let points: Vec<f64> = (0..6).map(|k| c_bar * (l0 + gap * k as f64)).collect();
        let weights = {
            let raw = [5.0, 4.0, 3.0, 2.0, 1.0, 1.0];
            let total: f64 = raw.iter().sum();
            raw.iter().map(|w| w / total).collect::<Vec<f64>>()
        };
        let dist = NoiseDistribution::Discrete { points, weights };
        let n = 4usize;
        let revival_x = std::f64::consts::TAU / (gap * c_bar);
        let t_revival = revival_x / n as f64;
        let at_revival =
            ParallelNoiseChannel::new(n, 0.9, t_revival, dist.clone())?.ghz_coherence().norm();
        let midway =
            ParallelNoiseChannel::new(n, 0.9, 0.5 * t_revival, dist.clone())?.ghz_coherence().norm();
        let fisher = classical_fisher(&dist)?;
        table.push(vec!["revival_time".into(), t_revival.into()]);
        table.push(vec!["coherence_at_revival".into(), at_revival.into()]);
        table.push(vec!["coherence_midway".into(), midway.into()]);
        table.push(vec!["classical_fisher".into(), fisher.into()]);
        let pass = (at_revival - 1.0).abs() <= 1e-10 && midway < 0.99 && fisher.is_unbounded();
        Ok((
            pass,
            format!("|coherence| at revival {at_revival:.12}, midway {midway:.3}, fisher unbounded: {}",
                fisher.is_unbounded()),
        ))
    })
}

/// 12: the fidelity route through the full channel matrix agrees with the
/// closed form on a 56-point grid within 0.5%.
pub fn qfi_oracle_agreement() -> CriterionReport {
    criterion(12, "qfi-oracle-agreement", None, |table| {
        *table = Table::new(&["n", "sigma", "t", "measured", "closed_form", "rel_err"]);
        let omega = 0.9;
        let mut worst = 0.0f64;
        let mut count = 0usize;
        for &n in &[1usize, 2, 3, 4] {
            let input = ghz_input(n)?;
            for &sigma in &[0.3, 0.7] {
                for j in 0..7usize {
                    let t = 0.1 + 0.15 * j as f64;
                    let family = |theta: f64| {
                        ParallelNoiseChannel::new(
                            n,
                            theta,
                            t,
                            NoiseDistribution::Gaussian { mean: 0.0, sigma },
                        )
                        .expect("valid channel")
                        .apply(&input)
                        .expect("matching dimensions")
                    };
                    let measured = qfi_from_fidelity(family, omega, 1e-3)?;
                    let closed = qfi_ghz_gaussian(n, sigma, t);
                    let rel = (measured - closed).abs() / closed;
                    worst = worst.max(rel);
                    count += 1;
                    table.push(vec![
                        n.into(),
                        sigma.into(),
                        t.into(),
                        measured.into(),
                        closed.into(),
                        rel.into(),
                    ]);
                }
            }
        }
        let pass = worst <= 0.005 && count >= 50;
        Ok((pass, format!("{count} points, worst deviation {:.3}%", worst * 100.0)))
    })
}

/// Number of criteria [`run_one`] can produce.
pub const CRITERIA_COUNT: usize = 12;

/// One criterion by index (1-based); the per-criterion seeds derive from
/// the master seed here so every runner agrees on them.
pub fn run_one(index: usize, seed: u64) -> Option<CriterionReport> {
    Some(match index {
        1 => standard_form_roundtrip(seed),
        2 => rank_two_decoupling(seed.wrapping_add(1)),
        3 => trotter_convergence(seed.wrapping_add(2)),
        4 => transverse_invariance(),
        5 => ghz_gaussian_constant(),
        6 => bound_never_violated(),
        7 => super_sql_scaling(),
        8 => variance_reduction(seed.wrapping_add(3)),
        9 => antisymmetric_elimination(seed.wrapping_add(4)),
        10 => correlated_scheme_chain(),
        11 => discrete_revival(),
        12 => qfi_oracle_agreement(),
        _ => return None,
    })
}

/// All criteria in index order under one master seed.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    (1..=CRITERIA_COUNT).filter_map(|i| run_one(i, seed)).collect()
}
