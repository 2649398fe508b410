//! Frequency-estimation figures of merit: quantum Fisher information from
//! state overlaps, classical information of the shift distribution, the
//! rate bound for parallel strategies, and optimal interrogation times.
//!
//! All information numbers follow one convention, recorded in
//! [`QFI_CONVENTION`]: the collective generator is half the sum of the
//! single-site `sigma_3` operators, fidelity is the square-root overlap
//! `tr sqrt(sqrt(tau) rho sqrt(tau))`, and the information extracted from a
//! fidelity pair is `8 (1 - F) / dtheta^2`. Mixing conventions silently
//! rescales every rate by a power of two, so the helpers here are the only
//! place the three choices are made.

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dynamics::{DynamicsError, NoiseDistribution, ParallelNoiseChannel};
use crate::numerics::{golden_section_max, linear_fit};
use crate::operators::{uhlmann_fidelity, DenseOperator, OperatorError};
use crate::sampling::rng_from_seed;

/// The three sign/normalization choices every number in this module assumes.
pub const QFI_CONVENTION: &str = "generator S3/2; fidelity tr sqrt(sqrt(tau) rho sqrt(tau)); \
     information 8(1 - F)/dtheta^2";

/// Default parameter step for [`qfi_from_fidelity`].
pub const DEFAULT_QFI_STEP: f64 = 1e-4;

/// `exp(-1/2) / sqrt(2)`: the peak of `t exp(-t^2 / 2)` over `t > 0`, which
/// sets the best rate per unit time under Gaussian dephasing at `n / sigma`
/// times this constant.
pub const SUPER_SQL_RATE_COEFF: f64 = 0.428_881_942_480_353_1;

#[derive(Debug, Error)]
pub enum MetrologyError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("parameter step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("width must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("need at least one qubit")]
    NoQubits,
    #[error("information must be positive and finite, got {0}")]
    BadInformation(f64),
    #[error("repetition count must be at least 1")]
    BadRepetitions,
    #[error("time budget must be positive and finite, got total {total}, per probe {per_probe}")]
    BadTimeBudget { total: f64, per_probe: f64 },
    #[error("need at least {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("power-law fit needs strictly positive coordinates")]
    NonPositivePoint,
    #[error("prior width must be nonnegative and finite, got {0}")]
    BadWidth(f64),
    #[error("need at least {needed} samples, got {got}")]
    BadDraws { needed: usize, got: usize },
}

/// Quantum Fisher information of a state family at `theta`, from the
/// fidelity of the pair `family(theta -+ dtheta / 2)`.
///
/// The symmetric pair cancels the cubic term of the overlap expansion, so
/// the discretization error is `O(dtheta^2)` for smooth families. Negative
/// round-off results are clamped to zero.
pub fn qfi_from_fidelity(
    family: impl Fn(f64) -> DenseOperator,
    theta: f64,
    dtheta: f64,
) -> Result<f64, MetrologyError> {
    if !dtheta.is_finite() || dtheta <= 0.0 {
        return Err(MetrologyError::BadStep(dtheta));
    }
    let rho = family(theta - 0.5 * dtheta);
    let tau = family(theta + 0.5 * dtheta);
    let f = uhlmann_fidelity(&rho, &tau)?;
    Ok((8.0 * (1.0 - f) / (dtheta * dtheta)).max(0.0))
}

/// Closed-form information of the extreme superposition of `n` qubits after
/// time `t` of collective dephasing with Gaussian width `sigma`:
/// `n^2 t^2 exp(-n^2 sigma^2 t^2)`.
pub fn qfi_ghz_gaussian(n: usize, sigma: f64, t: f64) -> f64 {
    let nt = n as f64 * t;
    nt * nt * (-(nt * sigma) * (nt * sigma)).exp()
}

/// Information of the same state measured numerically, through the two-level
/// block the extreme coherence lives in.
///
/// The channel acts on the all-zeros/all-ones pair as an isolated qubit, so
/// the reduced family carries the full information at any `n` while the cost
/// stays 2 x 2.
pub fn ghz_qfi_measured(
    n: usize,
    sigma: f64,
    t: f64,
    omega: f64,
    dtheta: f64,
) -> Result<f64, MetrologyError> {
    let dist = NoiseDistribution::Gaussian { mean: 0.0, sigma };
    // Validates n, t, omega, sigma once; the closure only shifts omega.
    ParallelNoiseChannel::new(n, omega, t, dist.clone())?;
    qfi_from_fidelity(
        |theta| {
            ParallelNoiseChannel::new(n, theta, t, dist.clone())
                .expect("parameters validated above")
                .ghz_reduced_state()
        },
        omega,
        dtheta,
    )
}

/// Fisher information of a location family, which is infinite whenever the
/// density has an edge a shift moves detectably.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FisherInfo {
    Finite(f64),
    Unbounded,
}

impl FisherInfo {
    pub fn value(&self) -> Option<f64> {
        match self {
            FisherInfo::Finite(v) => Some(*v),
            FisherInfo::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, FisherInfo::Unbounded)
    }
}

/// Classical Fisher information of the shift distribution as a location
/// family, `integral p'(x)^2 / p(x) dx`.
///
/// Point masses shift rigidly, so any support test detects an arbitrarily
/// small displacement: discrete distributions are unbounded. A tabulated
/// density is unbounded exactly when its support has an edge inside the
/// grid, i.e. a node at (relative) zero adjacent to a live one; flat zero
/// runs carry no information and are skipped.
pub fn classical_fisher(dist: &NoiseDistribution) -> Result<FisherInfo, MetrologyError> {
    dist.validate().map_err(MetrologyError::Dynamics)?;
    match dist {
        NoiseDistribution::Gaussian { sigma, .. } => Ok(FisherInfo::Finite(1.0 / (sigma * sigma))),
        NoiseDistribution::Discrete { .. } => Ok(FisherInfo::Unbounded),
        NoiseDistribution::Tabulated { grid, values } => {
            let max_p = values.iter().cloned().fold(0.0_f64, f64::max);
            let tiny = 1e-12 * max_p;
            let dead = |i: usize| values[i] <= tiny;
            if (0..grid.len() - 1).any(|i| dead(i) != dead(i + 1)) {
                return Ok(FisherInfo::Unbounded);
            }
            let m = grid.len();
            let slope = |i: usize, k: usize| (values[k] - values[i]) / (grid[k] - grid[i]);
            let integrand: Vec<f64> = (0..m)
                .map(|i| {
                    if dead(i) {
                        return 0.0;
                    }
                    let dp = if i == 0 {
                        slope(0, 1)
                    } else if i == m - 1 {
                        slope(m - 2, m - 1)
                    } else {
                        slope(i - 1, i + 1)
                    };
                    dp * dp / values[i]
                })
                .collect();
            let mut total = 0.0;
            for i in 0..m - 1 {
                total += 0.5 * (integrand[i] + integrand[i + 1]) * (grid[i + 1] - grid[i]);
            }
            Ok(FisherInfo::Finite(total))
        }
    }
}

/// Best information rate `F / t` attainable by `n` qubits run in parallel
/// against the given shift distribution: `n sqrt(F_cl)`.
pub fn parallel_bound(n: usize, dist: &NoiseDistribution) -> Result<FisherInfo, MetrologyError> {
    if n == 0 {
        return Err(MetrologyError::NoQubits);
    }
    Ok(match classical_fisher(dist)? {
        FisherInfo::Finite(f) => FisherInfo::Finite(n as f64 * f.sqrt()),
        FisherInfo::Unbounded => FisherInfo::Unbounded,
    })
}

/// Interrogation time maximizing information per unit time, and the rate
/// achieved there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTime {
    pub time: f64,
    pub rate: f64,
}

/// Maximizes `qfi_ghz_gaussian(n, sigma, t) / t = n^2 t exp(-n^2 sigma^2 t^2)`
/// over `t`. The peak sits at `1 / (n sigma sqrt(2))` with rate
/// [`SUPER_SQL_RATE_COEFF`] `* n / sigma`; the search window `[0, 10 / (n sigma)]`
/// brackets it with a wide margin.
pub fn optimal_time(n: usize, sigma: f64) -> Result<OptimalTime, MetrologyError> {
    if n == 0 {
        return Err(MetrologyError::NoQubits);
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(MetrologyError::BadSigma(sigma));
    }
    let nf = n as f64;
    let hi = 10.0 / (nf * sigma);
    let rate = |t: f64| nf * nf * t * (-(nf * sigma * t) * (nf * sigma * t)).exp();
    let (time, best) = golden_section_max(rate, 0.0, hi, 1e-11 * hi);
    Ok(OptimalTime { time, rate: best })
}

/// Best rate for an arbitrary shift distribution, through its
/// characteristic function: maximizes `n^2 t |char(n t)|^2` over
/// `t in [0, 10 / (n sd)]`.
///
/// A compact-support density has a lobed coherence (Fourier sidelobes), so
/// the rate is multimodal and plain golden section could lock onto a
/// sidelobe. A 512-point scan brackets the global peak first; golden
/// section then refines inside the bracket.
pub fn optimal_rate(n: usize, dist: &NoiseDistribution) -> Result<OptimalTime, MetrologyError> {
    if n == 0 {
        return Err(MetrologyError::NoQubits);
    }
    dist.validate().map_err(MetrologyError::Dynamics)?;
    let sd = dist.std_dev();
    if !(sd > 0.0) {
        return Err(MetrologyError::BadSigma(sd));
    }
    let nf = n as f64;
    let hi = 10.0 / (nf * sd);
    let rate = |t: f64| {
        let g = dist.characteristic(nf * t).norm();
        nf * nf * t * g * g
    };
    const SCAN: usize = 512;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..=SCAN {
        let v = rate(hi * k as f64 / SCAN as f64);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let lo_t = hi * best_k.saturating_sub(1) as f64 / SCAN as f64;
    let hi_t = hi * (best_k + 1).min(SCAN) as f64 / SCAN as f64;
    let (time, best) = golden_section_max(rate, lo_t, hi_t, 1e-11 * hi);
    Ok(OptimalTime { time, rate: best })
}

/// Optimal rate when every site sees its own independent fluctuation of
/// width `sigma` instead of one shared shift.
///
/// The extreme coherence only feels the site average, whose width is
/// `sigma / sqrt(n)`, so the peak rate gains an extra `sqrt(n)` over the
/// common-shift case.
pub fn local_fluctuation_rate(n: usize, sigma: f64) -> Result<OptimalTime, MetrologyError> {
    if n == 0 {
        return Err(MetrologyError::NoQubits);
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(MetrologyError::BadSigma(sigma));
    }
    optimal_time(n, sigma / (n as f64).sqrt())
}

/// Power law `y = coeff * x^exponent` fitted on log-log axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub coeff: f64,
    /// Root-mean-square residual of `ln y` against the fitted line.
    pub rms_residual: f64,
}

pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit, MetrologyError> {
    if points.len() < 4 {
        return Err(MetrologyError::NotEnoughPoints { needed: 4, got: points.len() });
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0 || !x.is_finite() || !y.is_finite()) {
        return Err(MetrologyError::NonPositivePoint);
    }
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let (slope, intercept, rms) = linear_fit(&xs, &ys);
    Ok(ScalingFit { exponent: slope, coeff: intercept.exp(), rms_residual: rms })
}

/// How the repetition count entering the precision bound is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecisionSpec {
    Repetitions(u64),
    /// A total time budget split into probes of fixed duration.
    TotalTime { total: f64, per_probe: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionEstimate {
    pub repetitions: f64,
    pub variance: f64,
    pub std_dev: f64,
}

/// Saturated precision bound `variance = 1 / (repetitions * information)`.
pub fn cramer_rao(qfi: f64, spec: &PrecisionSpec) -> Result<PrecisionEstimate, MetrologyError> {
    if !qfi.is_finite() || qfi <= 0.0 {
        return Err(MetrologyError::BadInformation(qfi));
    }
    let repetitions = match *spec {
        PrecisionSpec::Repetitions(0) => return Err(MetrologyError::BadRepetitions),
        PrecisionSpec::Repetitions(nu) => nu as f64,
        PrecisionSpec::TotalTime { total, per_probe } => {
            if !total.is_finite() || total <= 0.0 || !per_probe.is_finite() || per_probe <= 0.0 {
                return Err(MetrologyError::BadTimeBudget { total, per_probe });
            }
            total / per_probe
        }
    };
    let variance = 1.0 / (repetitions * qfi);
    Ok(PrecisionEstimate { repetitions, variance, std_dev: variance.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystematicFloor {
    pub floor: f64,
    /// The environment side contributes no shift at all, so the floor is
    /// exactly zero rather than merely small.
    pub trivial_environment: bool,
}

/// Bias floor left by an imperfectly known coupling constant.
///
/// When the environment sits in an eigenstate of its coupling operator with
/// eigenvalue `level`, the coupling shifts the estimated frequency by
/// `coupling * level`. No amount of averaging removes it, so a prior of
/// width `prior_width` on the coupling leaves a systematic of size
/// `prior_width * |level|`.
pub fn systematic_error_floor(
    prior_width: f64,
    level: f64,
) -> Result<SystematicFloor, MetrologyError> {
    if !prior_width.is_finite() || prior_width < 0.0 {
        return Err(MetrologyError::BadWidth(prior_width));
    }
    if !level.is_finite() {
        return Err(MetrologyError::BadWidth(level));
    }
    Ok(SystematicFloor { floor: prior_width * level.abs(), trivial_environment: level == 0.0 })
}

/// Sample standard deviation (over `draws` trials) of the mean of `n_sites`
/// independent `N(0, sigma)` couplings. Converges to `sigma / sqrt(n_sites)`.
pub fn mc_mean_coupling_std(
    n_sites: usize,
    sigma: f64,
    draws: usize,
    seed: u64,
) -> Result<f64, MetrologyError> {
    if n_sites == 0 {
        return Err(MetrologyError::NoQubits);
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(MetrologyError::BadSigma(sigma));
    }
    if draws < 2 {
        return Err(MetrologyError::BadDraws { needed: 2, got: draws });
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, sigma).expect("width validated above");
    let inv = 1.0 / n_sites as f64;
    let means: Vec<f64> = (0..draws)
        .map(|_| (0..n_sites).map(|_| normal.sample(&mut rng)).sum::<f64>() * inv)
        .collect();
    let grand = means.iter().sum::<f64>() / draws as f64;
    let ss: f64 = means.iter().map(|m| (m - grand) * (m - grand)).sum();
    Ok((ss / (draws as f64 - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CMatrix, DenseOperator, HilbertSpace};
    use num_complex::Complex64;

    fn phase_qubit(theta: f64, t: f64) -> DenseOperator {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        let off = Complex64::from_polar(0.5, -theta * t);
        m[(0, 1)] = off;
        m[(1, 0)] = off.conj();
        DenseOperator::new(HilbertSpace::qubit(), m).unwrap()
    }

    #[test]
    fn pure_phase_family_information_is_t_squared() {
        let t = 1.3;
        let qfi = qfi_from_fidelity(|th| phase_qubit(th, t), 0.4, DEFAULT_QFI_STEP).unwrap();
        assert!((qfi - t * t).abs() / (t * t) < 1e-4, "qfi {qfi}");
    }

    #[test]
    fn step_halving_is_consistent_on_mixed_family() {
        let (n, sigma, t, omega) = (3, 0.5, 0.2, 0.9);
        let a = ghz_qfi_measured(n, sigma, t, omega, 1e-3).unwrap();
        let b = ghz_qfi_measured(n, sigma, t, omega, 5e-4).unwrap();
        assert!((a - b).abs() / b < 2e-3, "a {a} b {b}");
        let closed = qfi_ghz_gaussian(n, sigma, t);
        assert!((b - closed).abs() / closed < 5e-3, "b {b} closed {closed}");
    }

    #[test]
    fn rejects_bad_step() {
        assert!(matches!(
            qfi_from_fidelity(|th| phase_qubit(th, 1.0), 0.0, 0.0),
            Err(MetrologyError::BadStep(_))
        ));
    }

    #[test]
    fn optimal_time_matches_closed_form() {
        let (n, sigma) = (16usize, 1.0);
        let opt = optimal_time(n, sigma).unwrap();
        let t_star = 1.0 / (n as f64 * sigma * 2f64.sqrt());
        let rate_star = SUPER_SQL_RATE_COEFF * n as f64 / sigma;
        assert!((opt.time - t_star).abs() / t_star < 1e-6, "t {}", opt.time);
        assert!((opt.rate - rate_star).abs() / rate_star < 1e-10, "rate {}", opt.rate);
        // The peak rate is the closed-form information at the peak, per time.
        let check = qfi_ghz_gaussian(n, sigma, opt.time) / opt.time;
        assert!((opt.rate - check).abs() / check < 1e-12);
    }

    #[test]
    fn optimal_rate_generalizes_gaussian_case() {
        let (n, sigma) = (3usize, 0.8);
        let closed = optimal_time(n, sigma).unwrap();
        let dist = NoiseDistribution::Gaussian { mean: 0.4, sigma };
        let generic = optimal_rate(n, &dist).unwrap();
        assert!((generic.rate - closed.rate).abs() / closed.rate < 1e-9);
        assert!((generic.time - closed.time).abs() / closed.time < 1e-6);
        let single = NoiseDistribution::Discrete { points: vec![1.0], weights: vec![1.0] };
        assert!(matches!(optimal_rate(n, &single), Err(MetrologyError::BadSigma(_))));
    }

    #[test]
    fn optimal_rate_finds_the_global_lobe() {
        // Triangle density: lobed |char| (Fourier sidelobes), so a blind
        // golden section could stop on a sidelobe far past the main peak.
        let tri = NoiseDistribution::Tabulated {
            grid: vec![-1.0, 0.0, 1.0],
            values: vec![0.0, 1.0, 0.0],
        };
        let n = 1usize;
        let opt = optimal_rate(n, &tri).unwrap();
        // Independent oracle: dense scan over the same window.
        let rate = |t: f64| {
            let g = tri.characteristic(t).norm();
            t * g * g
        };
        let hi = 10.0 / tri.std_dev();
        let scan_best = (0..20000)
            .map(|k| rate(hi * k as f64 / 19999.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(opt.rate >= scan_best - 1e-9 * scan_best, "{} vs {scan_best}", opt.rate);
        assert!(opt.time < 3.0, "main lobe sits below t = 3, got {}", opt.time);
    }

    #[test]
    fn local_fluctuations_gain_sqrt_n() {
        let opt = local_fluctuation_rate(16, 1.0).unwrap();
        let expected = SUPER_SQL_RATE_COEFF * 64.0; // n^(3/2) / sigma
        assert!((opt.rate - expected).abs() / expected < 1e-9, "rate {}", opt.rate);
    }

    #[test]
    fn classical_fisher_gaussian_and_discrete() {
        let g = NoiseDistribution::Gaussian { mean: 0.3, sigma: 0.7 };
        match classical_fisher(&g).unwrap() {
            FisherInfo::Finite(f) => assert!((f - 1.0 / 0.49).abs() < 1e-12),
            FisherInfo::Unbounded => panic!("gaussian is finite"),
        }
        let d = NoiseDistribution::Discrete { points: vec![-1.0, 1.0], weights: vec![0.5, 0.5] };
        assert!(classical_fisher(&d).unwrap().is_unbounded());
    }

    #[test]
    fn tabulated_gaussian_matches_inverse_variance() {
        let sigma = 0.8_f64;
        let m = 241;
        let grid: Vec<f64> =
            (0..m).map(|i| -6.0 * sigma + 12.0 * sigma * i as f64 / (m - 1) as f64).collect();
        let mut values: Vec<f64> =
            grid.iter().map(|x| (-(x * x) / (2.0 * sigma * sigma)).exp()).collect();
        let mut integral = 0.0;
        for i in 0..m - 1 {
            integral += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
        }
        values.iter_mut().for_each(|v| *v /= integral);
        let dist = NoiseDistribution::Tabulated { grid, values };
        match classical_fisher(&dist).unwrap() {
            FisherInfo::Finite(f) => {
                let expected = 1.0 / (sigma * sigma);
                assert!((f - expected).abs() / expected < 1e-2, "fisher {f}");
            }
            FisherInfo::Unbounded => panic!("well-resolved bell density is finite"),
        }
    }

    #[test]
    fn density_with_support_edge_is_unbounded() {
        // Triangle on [-1, 1]: vanishes linearly at both ends.
        let grid: Vec<f64> = (0..101).map(|i| -1.0 + 0.02 * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|x| 1.0 - x.abs()).collect();
        let dist = NoiseDistribution::Tabulated { grid, values };
        assert!(classical_fisher(&dist).unwrap().is_unbounded());
    }

    #[test]
    fn parallel_bound_scales_with_n_over_sigma() {
        let g = NoiseDistribution::Gaussian { mean: 0.0, sigma: 0.5 };
        match parallel_bound(4, &g).unwrap() {
            FisherInfo::Finite(b) => assert!((b - 8.0).abs() < 1e-12),
            FisherInfo::Unbounded => panic!("finite"),
        }
        let d = NoiseDistribution::Discrete { points: vec![0.0], weights: vec![1.0] };
        assert!(parallel_bound(4, &d).unwrap().is_unbounded());
        assert!(matches!(parallel_bound(0, &g), Err(MetrologyError::NoQubits)));
    }

    #[test]
    fn optimal_rate_stays_below_parallel_bound() {
        for &(n, sigma) in &[(1usize, 0.5), (4, 1.0), (16, 2.0)] {
            let opt = optimal_time(n, sigma).unwrap();
            let bound = parallel_bound(n, &NoiseDistribution::Gaussian { mean: 0.0, sigma })
                .unwrap()
                .value()
                .unwrap();
            assert!(opt.rate <= bound, "rate {} bound {bound}", opt.rate);
            assert!((opt.rate / bound - SUPER_SQL_RATE_COEFF).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_fit_recovers_power_law() {
        let points: Vec<(f64, f64)> =
            [2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        let fit = scaling_fit(&points).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.coeff - 3.0).abs() < 1e-12);
        assert!(fit.rms_residual < 1e-12);
        assert!(matches!(
            scaling_fit(&points[..3]),
            Err(MetrologyError::NotEnoughPoints { needed: 4, got: 3 })
        ));
        let bad = vec![(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(matches!(scaling_fit(&bad), Err(MetrologyError::NonPositivePoint)));
    }

    #[test]
    fn cramer_rao_arithmetic() {
        let p = cramer_rao(50.0, &PrecisionSpec::Repetitions(200)).unwrap();
        assert!((p.variance - 1e-4).abs() < 1e-18);
        assert!((p.std_dev - 1e-2).abs() < 1e-16);
        let q = cramer_rao(50.0, &PrecisionSpec::TotalTime { total: 10.0, per_probe: 0.1 }).unwrap();
        assert!((q.repetitions - 100.0).abs() < 1e-12);
        assert!((q.variance - 2e-4).abs() < 1e-18);
        assert!(matches!(
            cramer_rao(0.0, &PrecisionSpec::Repetitions(1)),
            Err(MetrologyError::BadInformation(_))
        ));
        assert!(matches!(
            cramer_rao(1.0, &PrecisionSpec::Repetitions(0)),
            Err(MetrologyError::BadRepetitions)
        ));
    }

    #[test]
    fn systematic_floor_cases() {
        let s = systematic_error_floor(0.01, -0.8).unwrap();
        assert!((s.floor - 0.008).abs() < 1e-15);
        assert!(!s.trivial_environment);
        let z = systematic_error_floor(0.01, 0.0).unwrap();
        assert_eq!(z.floor, 0.0);
        assert!(z.trivial_environment);
        assert!(matches!(systematic_error_floor(-1.0, 1.0), Err(MetrologyError::BadWidth(_))));
    }

    #[test]
    fn mc_mean_std_concentrates_and_is_deterministic() {
        let (n, sigma, draws) = (16usize, 1.0, 4000usize);
        let s = mc_mean_coupling_std(n, sigma, draws, 7).unwrap();
        let expected = sigma / (n as f64).sqrt();
        let se = s / (2.0 * (draws as f64 - 1.0)).sqrt();
        assert!((s - expected).abs() < 3.0 * se, "s {s} expected {expected} se {se}");
        assert_eq!(s, mc_mean_coupling_std(n, sigma, draws, 7).unwrap());
        assert_ne!(s, mc_mean_coupling_std(n, sigma, draws, 8).unwrap());
    }
}
