//! Pulsed-evolution error against the cycle-averaged target over a grid of
//! cycle counts, plus a log-log convergence fit.

use ddm_core::criteria::{Cell, Table};
use ddm_core::decoupling::{apply_map, schedule_to_map};
use ddm_core::dynamics::{trotter_error, PulsedEvolution};
use ddm_core::numerics::linear_fit;
use rayon::prelude::*;

use crate::emit::fmt_g12;
use crate::scenario::{ScheduleFile, StrategySpec};
use crate::CliError;

use super::RunCtx;

/// Errors below this are eigensolver noise, not convergence signal; they
/// are excluded from the fit.
const ERROR_FLOOR: f64 = 1e-12;

pub fn run(ctx: &RunCtx) -> Result<(), CliError> {
    let scen = ctx.scenario()?;
    let h = scen.require_hamiltonian()?.build(ctx.dim_cap)?;
    let file = match &scen.strategy {
        Some(StrategySpec::Schedule { file }) => file,
        _ => {
            return Err(CliError::Scenario(
                "evolve needs a schedule strategy: {\"kind\": \"schedule\", \"file\": ...}".into(),
            ))
        }
    };
    let sched = ScheduleFile::load(&ctx.scenario_dir().join(file))?.build(h.sites())?;
    let h_eff = apply_map(&schedule_to_map(&sched)?, &h)?;

    let ms: Vec<usize> = scen
        .sweep
        .m
        .clone()
        .unwrap_or_else(|| (4..=10).map(|k| 1usize << k).collect());

    let errors: Vec<f64> = ms
        .par_iter()
        .map(|&m| -> Result<f64, CliError> {
            if m == 0 {
                return Err(CliError::Scenario("m grid contains 0".into()));
            }
            let per_cycle = sched
                .rescaled(sched.duration() / m as f64)
                .map_err(|e| CliError::Compute(e.to_string()))?;
            let pe = PulsedEvolution::new(&h, per_cycle, m)?;
            Ok(trotter_error(&pe, &h_eff)?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    // Fit only the points carrying signal; m values must differ for a slope.
    let fit_points: Vec<(f64, f64)> = ms
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > ERROR_FLOOR)
        .map(|(&m, &e)| ((m as f64).ln(), e.ln()))
        .collect();
    let order = if fit_points.len() >= 2 {
        let xs: Vec<f64> = fit_points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = fit_points.iter().map(|p| p.1).collect();
        let (slope, _, _) = linear_fit(&xs, &ys);
        -slope
    } else {
        // Everything at the floor: the schedule already commutes exactly.
        0.0
    };

    let mut table = Table::new(&["m", "error", "fitted_order"]);
    for (&m, &e) in ms.iter().zip(&errors) {
        table.push(vec![
            Cell::Int(m as i64),
            Cell::Float(e),
            Cell::Float(order),
        ]);
    }

    let mut emitter = ctx.emitter()?;
    emitter.write_table("convergence", &table)?;
    emitter.finish("evolve", ctx.scenario_hash(), ctx.seed)?;

    println!(
        "convergence over {} cycle counts: fitted order = {}",
        ms.len(),
        fmt_g12(order)
    );
    if fit_points.len() < ms.len() {
        println!(
            "{} of {} points at the error floor (< {})",
            ms.len() - fit_points.len(),
            ms.len(),
            fmt_g12(ERROR_FLOOR)
        );
    }
    Ok(())
}
