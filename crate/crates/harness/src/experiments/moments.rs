use std::time::Instant;

use anyhow::Result;
use asymflow::asymptotics::{moment, MomentReport};
use asymflow::datagen::{generic_field, paired_mode, random_divfree, GenericDataSpec};
use asymflow::harmonics::modes_of_degree;
use serde::Serialize;

use super::RunContext;
use crate::config::MomentParams;

#[derive(Serialize)]
struct RandomSummary {
    fields: usize,
    degrees: Vec<usize>,
    /// Largest `|M| / scale` per degree over all fields, modes and routes.
    worst_by_degree: Vec<f64>,
    worst_seed: u64,
}

pub fn run(ctx: &mut RunContext<'_>, p: &MomentParams) -> Result<()> {
    let rgrid = p.random_grid.spec()?;
    let mut worst = vec![0.0_f64; p.low_degrees.len()];
    let mut worst_seed = ctx.config.seed;
    let mut slowest = 0.0_f64;
    let mut rows = Vec::new();
    for i in 0..p.random_fields {
        let seed = ctx.config.seed + i as u64;
        let t0 = Instant::now();
        let u = random_divfree(seed, rgrid, p.random_support, p.random_smoothness, 1.0)?;
        let mut field_worst = 0.0_f64;
        for (slot, &k) in p.low_degrees.iter().enumerate() {
            for m in modes_of_degree(2, k)? {
                for j in 1..=2 {
                    let r = moment(&u, &m, j, None)?;
                    let v = r.relative_magnitude();
                    field_worst = field_worst.max(v);
                    worst[slot] = worst[slot].max(v);
                }
            }
        }
        if field_worst >= worst.iter().cloned().fold(0.0, f64::max) {
            worst_seed = seed;
        }
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        rows.push(vec![seed as f64, field_worst]);
    }
    ctx.phase("random fields");
    if p.random_fields > 0 {
        let all = worst.iter().cloned().fold(0.0, f64::max);
        ctx.result(
            "random",
            RandomSummary {
                fields: p.random_fields,
                degrees: p.low_degrees.clone(),
                worst_by_degree: worst,
                worst_seed,
            },
        )?;
        ctx.write_trace(
            "random_moments.csv",
            &["seed", "max_relative_moment"],
            &rows,
        )?;
        ctx.at_most("random_low_degree_moments", all, 1e-8)?;
    }

    let grid = ctx.config.grid.spec()?;
    let template = ctx
        .config
        .data
        .as_ref()
        .and_then(|d| d.generic_spec().copied())
        .unwrap_or(GenericDataSpec::new(3, 1, 2, 1.0, 1.0)?);
    let mut reports: Vec<MomentReport> = Vec::new();
    for &kp in &p.generic_kprimes {
        let t0 = Instant::now();
        let spec = GenericDataSpec {
            kprime: kp,
            ..template
        };
        spec.validate(2)?;
        let u = generic_field(&spec, grid)?;
        let (m, _) = paired_mode(&spec)?;
        let r = moment(&u, &m, spec.alpha, Some(&spec))?;
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        ctx.at_most(
            &format!("generic_k{kp}_route_spread"),
            r.max_relative_spread(),
            1e-2,
        )?;
        ctx.at_least(
            &format!("generic_k{kp}_relative_magnitude"),
            r.relative_magnitude(),
            1e-6,
        )?;
        reports.push(r);
    }
    ctx.phase("generic fields");
    if !reports.is_empty() {
        ctx.result("generic", &reports)?;
    }
    ctx.runtime_check("slowest_field_seconds", slowest, 30.0);
    Ok(())
}
