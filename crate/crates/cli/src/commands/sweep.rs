//! Scaling exponent of the estimation metric over an N grid: rate at the
//! optimal time by default, or the raw information at a fixed time when the
//! scenario pins one.

use ddm_core::dynamics::NoiseDistribution;
use ddm_core::metrology::{local_fluctuation_rate, optimal_rate, optimal_time, scaling_fit};
use rayon::prelude::*;

use crate::emit::{fmt_g12, JVal};
use crate::CliError;

use super::{n_grid, RunCtx};

pub fn run(ctx: &RunCtx) -> Result<(), CliError> {
    let scen = ctx.scenario()?;
    let dist = scen.require_noise()?;
    let ns = n_grid(scen);
    let local = scen.local_iid();

    let fixed_t = scen.sweep.t.as_ref().map(|ts| ts[0]);
    let (metric, values) = match fixed_t {
        Some(t) => {
            // Information at one shared time; the characteristic function
            // carries the full dephasing attenuation.
            let vals = ns
                .par_iter()
                .map(|&n| -> Result<f64, CliError> {
                    let char_mag = match (&dist, local) {
                        (NoiseDistribution::Gaussian { mean, sigma }, true) => {
                            let eff = NoiseDistribution::Gaussian {
                                mean: *mean,
                                sigma: sigma / (n as f64).sqrt(),
                            };
                            eff.characteristic(n as f64 * t).norm()
                        }
                        _ => dist.characteristic(n as f64 * t).norm(),
                    };
                    Ok((n as f64 * t).powi(2) * char_mag * char_mag)
                })
                .collect::<Result<Vec<_>, _>>()?;
            ("qfi_at_fixed_t", vals)
        }
        None => {
            let vals = ns
                .par_iter()
                .map(|&n| -> Result<f64, CliError> {
                    let opt = match (&dist, local) {
                        (NoiseDistribution::Gaussian { sigma, .. }, false) => {
                            optimal_time(n, *sigma)?
                        }
                        (NoiseDistribution::Gaussian { sigma, .. }, true) => {
                            local_fluctuation_rate(n, *sigma)?
                        }
                        (NoiseDistribution::Tabulated { .. }, _) => optimal_rate(n, &dist)?,
                        (NoiseDistribution::Discrete { .. }, _) => {
                            return Err(CliError::Scenario(
                                "discrete noise has no finite optimal time; give a fixed t \
                                 in sweep.t"
                                    .into(),
                            ))
                        }
                    };
                    Ok(opt.rate)
                })
                .collect::<Result<Vec<_>, _>>()?;
            ("rate_at_optimal_t", vals)
        }
    };

    let points: Vec<(f64, f64)> = ns.iter().map(|&n| n as f64).zip(values).collect();
    let fit = scaling_fit(&points)?;

    let doc = JVal::obj(vec![
        ("metric", JVal::Str(metric.into())),
        ("beta", JVal::Num(fit.exponent)),
        ("coeff", JVal::Num(fit.coeff)),
        ("residual", JVal::Num(fit.rms_residual)),
        (
            "points",
            JVal::Arr(
                points
                    .iter()
                    .map(|&(n, y)| JVal::Arr(vec![JVal::Num(n), JVal::Num(y)]))
                    .collect(),
            ),
        ),
    ]);

    let mut emitter = ctx.emitter()?;
    emitter.write_json("scaling.json", &doc)?;
    emitter.finish("sweep", ctx.scenario_hash(), ctx.seed)?;

    println!(
        "{metric} over N = {:?}: beta = {} (residual {})",
        ns,
        fmt_g12(fit.exponent),
        fmt_g12(fit.rms_residual)
    );
    Ok(())
}
