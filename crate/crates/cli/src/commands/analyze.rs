//! Per-site noise canonicalization: strengths, frame, rank, the protected
//! axis when one exists, and the effect of the scenario's strategy.

use ddm_core::decoupling::{
    apply_map, correlated_scheme, decoupling_direction, feasibility, optimize_direction,
    projection_map, schedule_to_map, symmetrize, DirectionOutcome,
};
use ddm_core::hamiltonian::{
    noise_rank, standard_form, HamiltonianError, SEHamiltonian, DEFAULT_RANK_TOL,
};
use ddm_core::operators::UnitVector3;

use crate::emit::{fmt_g12, JVal};
use crate::scenario::{ScenarioFile, ScheduleFile, StrategySpec};
use crate::CliError;

use super::RunCtx;

fn vec3(v: &UnitVector3) -> JVal {
    JVal::Arr(v.components().iter().map(|&x| JVal::Num(x)).collect())
}

fn vec3_str(v: &UnitVector3) -> String {
    let c = v.components();
    format!("[{}, {}, {}]", fmt_g12(c[0]), fmt_g12(c[1]), fmt_g12(c[2]))
}

pub fn run(ctx: &RunCtx) -> Result<(), CliError> {
    let scen = ctx.scenario()?;
    let h = scen.require_hamiltonian()?.build(ctx.dim_cap)?;
    let variances = scen.axis_variances.unwrap_or([1.0; 3]);

    let mut site_blocks = Vec::new();
    for site in 0..h.sites() {
        let sf = match standard_form(&h, site) {
            Ok(sf) => sf,
            // Multi-site noise has no per-site frame; the scheme-level
            // strategies below still apply, so report and move on.
            Err(HamiltonianError::MultiSiteNoise { .. }) => {
                site_blocks.push(JVal::obj(vec![
                    ("site", JVal::UInt(site as u64)),
                    ("verdict", JVal::Str("multi-site noise".into())),
                ]));
                println!("site {site}: multi-site noise, no per-site frame");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let rank = noise_rank(&sf, DEFAULT_RANK_TOL).rank;
        let mut block = vec![
            ("site", JVal::UInt(site as u64)),
            (
                "b",
                JVal::Arr(sf.b.iter().map(|&x| JVal::Num(x)).collect()),
            ),
            (
                "frame",
                JVal::Arr(sf.frame.iter().map(vec3).collect()),
            ),
            ("arbitrary_frame", JVal::Bool(sf.arbitrary_frame)),
            ("rank", JVal::UInt(rank as u64)),
        ];
        println!(
            "site {site}: rank {rank}, b = [{}, {}, {}]",
            fmt_g12(sf.b[0]),
            fmt_g12(sf.b[1]),
            fmt_g12(sf.b[2])
        );
        for (j, n) in sf.frame.iter().enumerate() {
            println!("  n{} = {}", j + 1, vec3_str(n));
        }
        if rank <= 2 {
            let dir = decoupling_direction(&sf)?;
            block.push(("verdict", JVal::Str("project".into())));
            block.push(("r", vec3(&dir.r)));
            block.push(("r3", JVal::Num(dir.r3)));
            block.push(("feasible", JVal::Bool(dir.feasible)));
            println!(
                "  recommended r = {} (r3 = {}, {})",
                vec3_str(&dir.r),
                fmt_g12(dir.r3),
                if dir.feasible { "feasible" } else { "signal lost" }
            );
        } else {
            // Full-rank noise: no exact protected axis, only a trade-off.
            let (r, merit) = match optimize_direction(&sf, variances) {
                DirectionOutcome::Optimized { direction, merit } => {
                    (direction, JVal::Num(merit))
                }
                DirectionOutcome::Unbounded { direction } => {
                    (direction, JVal::Str("unbounded".into()))
                }
            };
            block.push((
                "verdict",
                JVal::Str("reduce to parallel noise".into()),
            ));
            block.push(("r", vec3(&r)));
            block.push(("r3", JVal::Num(r.components()[2])));
            block.push(("merit", merit));
            println!(
                "  rank 3: reduce to parallel noise along r = {}",
                vec3_str(&r)
            );
        }
        site_blocks.push(JVal::obj(block));
    }

    let mut doc = vec![
        ("name", JVal::Str(scen.name.clone())),
        ("omega", JVal::Num(h.omega())),
        ("sites", JVal::UInt(h.sites() as u64)),
        ("site_analysis", JVal::Arr(site_blocks)),
    ];

    if h.sites() == 1 {
        let rep = feasibility(&h)?;
        let alphas = match rep.alphas {
            Some((a1, a2)) => JVal::Arr(vec![JVal::Num(a1), JVal::Num(a2)]),
            None => JVal::Arr(vec![]),
        };
        doc.push((
            "feasibility",
            JVal::obj(vec![
                ("feasible", JVal::Bool(rep.feasible)),
                ("alphas", alphas),
                ("slowdown", JVal::Num(rep.slowdown)),
                ("residual", JVal::Num(rep.residual)),
            ]),
        ));
        println!(
            "third-axis removal: {} (slowdown = {}, residual = {})",
            if rep.feasible { "feasible" } else { "infeasible" },
            fmt_g12(rep.slowdown),
            fmt_g12(rep.residual)
        );
    }

    let mut emitter = ctx.emitter()?;
    if let Some(strategy) = &scen.strategy {
        if let Some(block) = strategy_block(ctx, scen, &h, strategy, &mut emitter)? {
            doc.push(("strategy", block));
        }
    }

    emitter.write_json("analysis.json", &JVal::Obj(
        doc.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    ))?;
    emitter.finish("analyze", ctx.scenario_hash(), ctx.seed)?;
    Ok(())
}

/// Applies the declared strategy and reports what is left of the noise.
fn strategy_block(
    ctx: &RunCtx,
    scen: &ScenarioFile,
    h: &SEHamiltonian,
    strategy: &StrategySpec,
    emitter: &mut crate::emit::Emitter,
) -> Result<Option<JVal>, CliError> {
    let residual_block = |kind: &str, mapped: &SEHamiltonian| {
        JVal::obj(vec![
            ("kind", JVal::Str(kind.into())),
            ("residual_noise", JVal::Num(mapped.noise_matrix().max_abs())),
            ("signal_norm", JVal::Num(mapped.signal_matrix().hs_norm())),
        ])
    };
    let block = match strategy {
        StrategySpec::None => None,
        StrategySpec::Projection { r } => {
            if h.sites() != 1 {
                return Err(CliError::Scenario(
                    "projection strategy applies to single-site scenarios".into(),
                ));
            }
            let axis = ScenarioFile::projection_axis(*r)?;
            let mapped = apply_map(&projection_map(&axis), h)?;
            Some(residual_block("projection", &mapped))
        }
        StrategySpec::Schedule { file } => {
            let sched = ScheduleFile::load(&ctx.scenario_dir().join(file))?;
            let map = schedule_to_map(&sched.build(h.sites())?)?;
            let mapped = apply_map(&map, h)?;
            Some(residual_block("schedule", &mapped))
        }
        StrategySpec::Symmetrize => {
            let sym = symmetrize(h)?;
            let direction = match &sym.direction {
                Some(d) => vec3(d),
                None => JVal::Arr(vec![]),
            };
            Some(JVal::obj(vec![
                ("kind", JVal::Str("symmetrize".into())),
                ("c_bar", JVal::Num(sym.c_bar)),
                ("direction", direction),
            ]))
        }
        StrategySpec::Correlated { k } => {
            let scheme = correlated_scheme(h.sites(), *k)?;
            let mapped = scheme.apply(h)?;
            let layers = scheme
                .layers()
                .iter()
                .map(|l| {
                    JVal::obj(vec![
                        ("gate", JVal::Str(l.gate.to_char().to_string())),
                        (
                            "sites",
                            JVal::Arr(l.sites.iter().map(|&s| JVal::UInt(s as u64)).collect()),
                        ),
                        ("period", JVal::UInt(l.period as u64)),
                    ])
                })
                .collect();
            emitter.write_json(
                "recipe.json",
                &JVal::obj(vec![
                    ("n", JVal::UInt(scheme.n() as u64)),
                    ("k", JVal::UInt(scheme.k() as u64)),
                    ("layers", JVal::Arr(layers)),
                    ("alpha", JVal::Num(scheme.alpha())),
                    (
                        "kept_sites",
                        JVal::Arr(
                            scheme.kept_sites().iter().map(|&s| JVal::UInt(s as u64)).collect(),
                        ),
                    ),
                ]),
            )?;
            println!(
                "correlated scheme: kept {} of {} sites (alpha = {})",
                scheme.kept_sites().len(),
                scheme.n(),
                fmt_g12(scheme.alpha())
            );
            Some(residual_block("correlated", &mapped))
        }
    };
    let _ = scen;
    Ok(block)
}
