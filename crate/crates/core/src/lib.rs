//! Qubit ensembles coupled to quantum environments: dense operator algebra,
//! pulse-sequence engineering of effective Hamiltonians, dephasing channels,
//! and Fisher-information analysis of frequency estimation.
//!
//! Layering, bottom up:
//!
//! * [`operators`]: Hilbert spaces with tagged tensor factors, dense complex
//!   operators, Pauli algebra, evolution, partial trace, Uhlmann fidelity.
//! * [`hamiltonian`]: structured system-environment Hamiltonians
//!   `omega*S + sum_j c_j P_j (x) A_j` and their per-site standard form.
//! * [`decoupling`]: pulse schedules, the unital maps they generate to first
//!   order, noise-axis projections, feasibility of single-axis decoupling,
//!   permutation symmetrization, and site-pattern schemes for correlated noise.
//! * [`dynamics`]: exact pulsed propagators, effective-Hamiltonian convergence
//!   measurement, and the collective dephasing channel for parallel noise.
//! * [`metrology`]: quantum Fisher information of GHZ probes under that
//!   channel, classical-information bounds, optimal interrogation times, and
//!   scaling fits.
//! * [`criteria`]: self-contained end-to-end checks with pass/fail reports,
//!   shared by the test suite and the `reproduce-paper` CLI command.

pub mod criteria;
pub mod decoupling;
pub mod dynamics;
pub mod hamiltonian;
pub mod metrology;
pub mod numerics;
pub mod operators;
pub mod sampling;
