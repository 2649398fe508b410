//! Scenario files: the declarative JSON input every command consumes.
//!
//! A scenario names a system-environment Hamiltonian, an optional control
//! strategy, a frequency-shift distribution, and sweep grids. Unknown fields
//! are rejected so typos surface as parse errors with a field name instead
//! of silently defaulting.

use std::path::Path;
use std::sync::Arc;

use ddm_core::dynamics::NoiseDistribution;
use ddm_core::hamiltonian::{EnvModel, EnvTarget, PauliString, SEHamiltonian};
use ddm_core::operators::{
    CMatrix, DenseOperator, HilbertSpace, UnitVector3, DEFAULT_DIM_CAP,
};
use ddm_core::sampling::{random_hermitian, rng_from_seed};
use num_complex::Complex64;
use serde::Deserialize;

use crate::emit::sha256_hex;
use crate::CliError;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Scenario(msg.into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default)]
    pub strategy: Option<StrategySpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Coupling variances along the three standard-form axes, used when the
    /// noise rank is 3 and only a trade-off direction exists.
    #[serde(default)]
    pub axis_variances: Option<[f64; 3]>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    /// When non-empty, only artifacts whose file stem appears here are
    /// written (the manifest is always written).
    #[serde(default)]
    pub outputs: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub omega: f64,
    pub sites: usize,
    pub env: EnvSpec,
    pub terms: Vec<TermSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    /// "common" (one shared factor) or "independent" (one factor per site).
    pub model: String,
    pub dims: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub c: f64,
    /// Pauli letters, one per site, e.g. "IXZ". All-identity strings are
    /// uncontrollable terms: they commute with every pulse.
    pub paulis: String,
    /// Required for multi-site strings under the independent model; single
    /// non-identity letters default to their own site's factor.
    #[serde(default)]
    pub site: Option<usize>,
    pub env_op: EnvOpSpec,
}

/// Inline matrix, diagonal, or named preset. Presets: "identity",
/// "pauli_x", "pauli_y", "pauli_z" (dimension 2), "number_op" (diag 0..d),
/// "random_hermitian:<seed>".
#[derive(Deserialize)]
#[serde(untagged)]
pub enum EnvOpSpec {
    Preset(String),
    Matrix(Vec<Vec<MatEntry>>),
    Diag { diag: Vec<f64> },
}

/// A matrix entry: bare real or `[re, im]`.
#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
pub enum MatEntry {
    Re(f64),
    Pair([f64; 2]),
}

impl MatEntry {
    fn complex(self) -> Complex64 {
        match self {
            MatEntry::Re(x) => Complex64::new(x, 0.0),
            MatEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    None,
    Projection { r: [f64; 3] },
    Schedule { file: String },
    Symmetrize,
    Correlated { k: usize },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian {
        #[serde(default)]
        mean: f64,
        sigma: f64,
        /// "collective" (default): one shift for all sites. "local_iid":
        /// independent per-site shifts; the symmetrized mean coupling then
        /// fluctuates with width sigma / sqrt(N).
        #[serde(default)]
        fluctuation: Option<String>,
    },
    Discrete {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    #[serde(default)]
    pub m: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub duration: f64,
    pub pulses: Vec<PulseSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub t: f64,
    /// Pauli letters, one per site; applied as an instantaneous gate.
    pub gate: String,
}

impl ScenarioFile {
    /// Parses and validates; returns the scenario plus the sha256 of the
    /// raw bytes for the manifest.
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let scen: ScenarioFile = serde_json::from_slice(&bytes)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        scen.validate()?;
        Ok((scen, sha256_hex(&bytes)))
    }

    fn validate(&self) -> Result<(), CliError> {
        let grids: [(&str, Option<usize>); 4] = [
            ("n", self.sweep.n.as_ref().map(Vec::len)),
            ("sigma", self.sweep.sigma.as_ref().map(Vec::len)),
            ("t", self.sweep.t.as_ref().map(Vec::len)),
            ("m", self.sweep.m.as_ref().map(Vec::len)),
        ];
        for (name, len) in grids {
            if len == Some(0) {
                return Err(bad(format!("sweep grid \"{name}\" is empty")));
            }
        }
        if let Some(NoiseSpec::Gaussian { fluctuation: Some(f), .. }) = &self.noise {
            if f != "collective" && f != "local_iid" {
                return Err(bad(format!(
                    "fluctuation must be \"collective\" or \"local_iid\", got \"{f}\""
                )));
            }
        }
        Ok(())
    }

    pub fn require_hamiltonian(&self) -> Result<&HamiltonianSpec, CliError> {
        self.hamiltonian
            .as_ref()
            .ok_or_else(|| bad("scenario has no \"hamiltonian\" section"))
    }

    pub fn require_noise(&self) -> Result<NoiseDistribution, CliError> {
        let spec = self
            .noise
            .as_ref()
            .ok_or_else(|| bad("scenario has no \"noise\" section"))?;
        let dist = match spec {
            NoiseSpec::Gaussian { mean, sigma, .. } => {
                NoiseDistribution::Gaussian { mean: *mean, sigma: *sigma }
            }
            NoiseSpec::Discrete { points, weights } => NoiseDistribution::Discrete {
                points: points.clone(),
                weights: weights.clone(),
            },
            NoiseSpec::Tabulated { grid, values } => NoiseDistribution::Tabulated {
                grid: grid.clone(),
                values: values.clone(),
            },
        };
        dist.validate().map_err(|e| bad(format!("noise: {e}")))?;
        Ok(dist)
    }

    /// True when the Gaussian noise is tagged as independent per-site
    /// fluctuations rather than one collective shift.
    pub fn local_iid(&self) -> bool {
        matches!(
            &self.noise,
            Some(NoiseSpec::Gaussian { fluctuation: Some(f), .. }) if f == "local_iid"
        )
    }

    pub fn projection_axis(r: [f64; 3]) -> Result<UnitVector3, CliError> {
        UnitVector3::normalized(r[0], r[1], r[2])
            .map_err(|e| bad(format!("projection axis: {e}")))
    }
}

pub fn dim_cap_from_env() -> Result<usize, CliError> {
    match std::env::var("DDM_DIM_CAP") {
        Ok(s) => s
            .parse::<usize>()
            .map_err(|_| bad(format!("DDM_DIM_CAP must be an integer, got \"{s}\""))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn build_env_op(
    spec: &EnvOpSpec,
    space: Arc<HilbertSpace>,
    context: &str,
) -> Result<DenseOperator, CliError> {
    let dim = space.dim();
    let op = match spec {
        EnvOpSpec::Preset(name) => match name.as_str() {
            "identity" => DenseOperator::identity(space),
            "pauli_x" | "pauli_y" | "pauli_z" => {
                if dim != 2 {
                    return Err(bad(format!(
                        "{context}: preset \"{name}\" needs an environment of dimension 2, got {dim}"
                    )));
                }
                let j = match name.as_bytes()[6] {
                    b'x' => 1,
                    b'y' => 2,
                    _ => 3,
                };
                let m = ddm_core::operators::pauli_matrix(j).expect("index in range");
                DenseOperator::new(space, m).expect("pauli is 2x2")
            }
            "number_op" => {
                let mut m = CMatrix::zeros(dim, dim);
                for i in 0..dim {
                    m[(i, i)] = Complex64::new(i as f64, 0.0);
                }
                DenseOperator::new(space, m).expect("square by construction")
            }
            other => {
                if let Some(seed) = other.strip_prefix("random_hermitian:") {
                    let seed: u64 = seed.parse().map_err(|_| {
                        bad(format!("{context}: bad seed in \"{other}\""))
                    })?;
                    random_hermitian(&space, &mut rng_from_seed(seed))
                } else {
                    return Err(bad(format!(
                        "{context}: unknown env_op preset \"{other}\""
                    )));
                }
            }
        },
        EnvOpSpec::Matrix(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(bad(format!(
                    "{context}: env_op matrix must be {dim}x{dim}"
                )));
            }
            let mut m = CMatrix::zeros(dim, dim);
            for (i, row) in rows.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    m[(i, j)] = e.complex();
                }
            }
            DenseOperator::new(space, m).expect("square by construction")
        }
        EnvOpSpec::Diag { diag } => {
            if diag.len() != dim {
                return Err(bad(format!(
                    "{context}: diag must have {dim} entries"
                )));
            }
            let mut m = CMatrix::zeros(dim, dim);
            for (i, v) in diag.iter().enumerate() {
                m[(i, i)] = Complex64::new(*v, 0.0);
            }
            DenseOperator::new(space, m).expect("square by construction")
        }
    };
    op.require_hermitian()
        .map_err(|e| bad(format!("{context}: env_op: {e}")))?;
    Ok(op)
}

impl HamiltonianSpec {
    pub fn build(&self, cap: usize) -> Result<SEHamiltonian, CliError> {
        let env = match self.env.model.as_str() {
            "common" => {
                if self.env.dims.len() != 1 {
                    return Err(bad("env model \"common\" takes exactly one dim"));
                }
                EnvModel::Common { dim: self.env.dims[0] }
            }
            "independent" => {
                if self.env.dims.len() != self.sites {
                    return Err(bad(format!(
                        "env model \"independent\" needs {} dims, got {}",
                        self.sites,
                        self.env.dims.len()
                    )));
                }
                EnvModel::Independent { dims: self.env.dims.clone() }
            }
            other => {
                return Err(bad(format!(
                    "env model must be \"common\" or \"independent\", got \"{other}\""
                )))
            }
        };

        let mut noise = Vec::new();
        let mut trivial = Vec::new();
        for (idx, term) in self.terms.iter().enumerate() {
            let context = format!("terms[{idx}]");
            let string = PauliString::parse(&term.paulis)
                .map_err(|e| bad(format!("{context}: {e}")))?;
            if string.n_sites() != self.sites {
                return Err(bad(format!(
                    "{context}: paulis \"{}\" has {} letters, scenario has {} sites",
                    term.paulis,
                    string.n_sites(),
                    self.sites
                )));
            }
            let target = match &env {
                EnvModel::Common { .. } => {
                    if term.site.is_some() {
                        return Err(bad(format!(
                            "{context}: \"site\" is meaningless under the common env model"
                        )));
                    }
                    EnvTarget::Shared
                }
                EnvModel::Independent { .. } => {
                    let site = match (term.site, string.support().as_slice()) {
                        (Some(s), _) => s,
                        (None, [only]) => *only,
                        (None, _) => {
                            return Err(bad(format!(
                                "{context}: \"site\" is required when paulis \"{}\" does not \
                                 single out one site",
                                term.paulis
                            )))
                        }
                    };
                    EnvTarget::Site(site)
                }
            };
            let factor_dim = match (&env, target) {
                (EnvModel::Common { dim }, _) => *dim,
                (EnvModel::Independent { dims }, EnvTarget::Site(s)) => {
                    *dims.get(s).ok_or_else(|| {
                        bad(format!("{context}: site {s} out of range"))
                    })?
                }
                _ => unreachable!(),
            };
            let space = HilbertSpace::environment(factor_dim)
                .map_err(|e| bad(format!("{context}: {e}")))?;
            let op = build_env_op(&term.env_op, space, &context)?;
            if string.is_identity() {
                trivial.push((term.c, target, op));
            } else {
                noise.push((term.c, string, target, op));
            }
        }

        let signal = (0..self.sites)
            .map(|s| {
                PauliString::single(self.sites, s, ddm_core::hamiltonian::Pauli::Z)
                    .map(|p| (1.0, p))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("hamiltonian: {e}")))?;
        SEHamiltonian::from_parts_with_cap(self.omega, self.sites, env, signal, noise, trivial, cap)
            .map_err(|e| bad(format!("hamiltonian: {e}")))
    }
}

impl ScheduleFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn build(&self, sites: usize) -> Result<ddm_core::decoupling::PulseSchedule, CliError> {
        let mut gates = Vec::with_capacity(self.pulses.len());
        let mut times = Vec::with_capacity(self.pulses.len());
        let space = HilbertSpace::qubits(sites).map_err(|e| bad(format!("schedule: {e}")))?;
        for (idx, p) in self.pulses.iter().enumerate() {
            let string = PauliString::parse(&p.gate)
                .map_err(|e| bad(format!("pulses[{idx}]: {e}")))?;
            if string.n_sites() != sites {
                return Err(bad(format!(
                    "pulses[{idx}]: gate \"{}\" has {} letters, scenario has {sites} sites",
                    p.gate,
                    string.n_sites()
                )));
            }
            let gate = DenseOperator::new(space.clone(), string.matrix())
                .expect("pauli string matches space");
            gates.push(gate);
            times.push(p.t);
        }
        ddm_core::decoupling::PulseSchedule::new(gates, times, self.duration)
            .map_err(|e| bad(format!("schedule: {e}")))
    }
}
