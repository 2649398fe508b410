//! Estimation-rate table over the (N, sigma) grid: optimal interrogation
//! time, rate F/t, the parallel bound, and their ratio. Discrete spectra get
//! a revival column and a coherence-vs-time artifact instead of a bound.

use std::f64::consts::TAU;

use ddm_core::criteria::{Cell, Table};
use ddm_core::dynamics::NoiseDistribution;
use ddm_core::metrology::{
    local_fluctuation_rate, optimal_rate, optimal_time, parallel_bound, FisherInfo,
};
use rayon::prelude::*;

use crate::emit::fmt_g12;
use crate::CliError;

use super::{n_grid, RunCtx};

const QFI_COLUMNS: [&str; 6] = ["N", "sigma", "t_opt", "qfi_rate", "bound", "ratio"];

fn ratio_cell(rate: f64, bound: &FisherInfo) -> Cell {
    match bound {
        FisherInfo::Finite(b) => Cell::Float(rate / b),
        FisherInfo::Unbounded => Cell::Unbounded,
    }
}

pub fn run(ctx: &RunCtx) -> Result<(), CliError> {
    let scen = ctx.scenario()?;
    let dist = scen.require_noise()?;
    let ns = n_grid(scen);
    let mut emitter = ctx.emitter()?;

    let table = match &dist {
        NoiseDistribution::Gaussian { mean, sigma } => {
            let sigmas = scen.sweep.sigma.clone().unwrap_or_else(|| vec![*sigma]);
            let local = scen.local_iid();
            let grid: Vec<(usize, f64)> = ns
                .iter()
                .flat_map(|&n| sigmas.iter().map(move |&s| (n, s)))
                .collect();
            let rows = grid
                .par_iter()
                .map(|&(n, s)| -> Result<Vec<Cell>, CliError> {
                    // Independent per-site shifts average down to an
                    // effective collective width sigma / sqrt(N).
                    let (opt, s_eff) = if local {
                        (local_fluctuation_rate(n, s)?, s / (n as f64).sqrt())
                    } else {
                        (optimal_time(n, s)?, s)
                    };
                    let bound =
                        parallel_bound(n, &NoiseDistribution::Gaussian { mean: *mean, sigma: s_eff })?;
                    Ok(vec![
                        Cell::Int(n as i64),
                        Cell::Float(s),
                        Cell::Float(opt.time),
                        Cell::Float(opt.rate),
                        Cell::from(bound),
                        ratio_cell(opt.rate, &bound),
                    ])
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&QFI_COLUMNS);
            for row in rows {
                table.push(row);
            }
            table
        }
        NoiseDistribution::Tabulated { .. } => {
            let rows = ns
                .par_iter()
                .map(|&n| -> Result<Vec<Cell>, CliError> {
                    let opt = optimal_rate(n, &dist)?;
                    let bound = parallel_bound(n, &dist)?;
                    Ok(vec![
                        Cell::Int(n as i64),
                        Cell::Float(dist.std_dev()),
                        Cell::Float(opt.time),
                        Cell::Float(opt.rate),
                        Cell::from(bound),
                        ratio_cell(opt.rate, &bound),
                    ])
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&QFI_COLUMNS);
            for row in rows {
                table.push(row);
            }
            table
        }
        NoiseDistribution::Discrete { points, .. } => {
            discrete_table(ctx, &mut emitter, &ns, &dist, points)?
        }
    };

    println!("qfi table: {} rows", table.rows.len());
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Float(f) => fmt_g12(*f),
                Cell::Text(t) => t.clone(),
                Cell::Unbounded => "unbounded".into(),
            })
            .collect();
        println!("  {}", cells.join("  "));
    }

    emitter.write_table("qfi_table", &table)?;
    emitter.finish("qfi", ctx.scenario_hash(), ctx.seed)?;
    Ok(())
}

/// Smallest gap between distinct spectrum points; the coherence revives at
/// t = 2 pi / (N * gap) when the gaps are commensurate.
fn min_gap(points: &[f64]) -> Option<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 1e-12)
        .min_by(|a, b| a.partial_cmp(b).expect("finite gaps"))
}

fn discrete_table(
    ctx: &RunCtx,
    emitter: &mut crate::emit::Emitter,
    ns: &[usize],
    dist: &NoiseDistribution,
    points: &[f64],
) -> Result<Table, CliError> {
    let gap = min_gap(points).ok_or_else(|| {
        CliError::Scenario(
            "discrete noise needs at least two distinct points for a revival".into(),
        )
    })?;

    let mut table = Table::new(&["N", "sigma", "t_opt", "qfi_rate", "bound", "ratio", "revival"]);
    let mut revival_curve = Table::new(&["N", "t", "coherence"]);
    for &n in ns {
        let t_rev = TAU / (n as f64 * gap);
        let coherence = dist.characteristic(n as f64 * t_rev).norm();
        // Rate carried by the GHZ coherence surviving at the revival.
        let rate = (n as f64 * t_rev).powi(2) * coherence * coherence / t_rev;
        table.push(vec![
            Cell::Int(n as i64),
            Cell::Float(dist.std_dev()),
            Cell::Float(t_rev),
            Cell::Float(rate),
            Cell::Unbounded,
            Cell::Unbounded,
            Cell::Float(coherence),
        ]);
        let t_grid: Vec<f64> = match &ctx.scenario()?.sweep.t {
            Some(ts) => ts.clone(),
            None => (0..=63).map(|k| t_rev * 1.05 * k as f64 / 63.0).collect(),
        };
        for t in t_grid {
            revival_curve.push(vec![
                Cell::Int(n as i64),
                Cell::Float(t),
                Cell::Float(dist.characteristic(n as f64 * t).norm()),
            ]);
        }
    }
    emitter.write_table("revival", &revival_curve)?;
    Ok(table)
}
