use anyhow::{Context, Result};
use asymflow::asymptotics::initial_slope_check;
use asymflow::datagen::paired_mode;
use asymflow::harmonics::mode;

use super::{initial_data, record_norm, RunContext};
use crate::config::SlopeParams;
use crate::manifest::Check;

pub fn run(ctx: &mut RunContext<'_>, p: &SlopeParams) -> Result<()> {
    let grid = ctx.config.grid.spec()?;
    let source = ctx.config.data.clone().context("missing data source")?;
    let data = initial_data(&source, grid, ctx.config.seed)?;
    record_norm(ctx, &data.u)?;
    let spec = data.spec.context("slopes needs generic data")?;
    let m = match ctx.config.modes.first() {
        Some(s) => mode(2, s.k, s.l)?,
        None => paired_mode(&spec)?.0,
    };
    let rep = initial_slope_check(&data.omega, &data.u, &m, spec.alpha, &p.dts, p.step.into())?;
    ctx.phase("slopes");
    let rows: Vec<Vec<f64>> = rep
        .dts
        .iter()
        .zip(&rep.quotients)
        .map(|(h, q)| vec![*h, *q])
        .collect();
    ctx.write_trace("slope.csv", &["dt", "difference_quotient"], &rows)?;
    let label = format!("a{}_{} component {}", m.kprime(), m.l(), spec.alpha);
    let departs = if rep.conclusive { 1.0 } else { 0.0 };
    ctx.check(
        Check::at_least("departs_from_noise_floor", departs, 1.0)
            .with_note(format!("{label}, noise floor {:e}", rep.noise_floor)),
    )?;
    let name = "slope_vs_moment";
    let mismatch = rep.relative_mismatch.unwrap_or(f64::NAN);
    let sign = match rep.sign {
        Some(s) if s > 0 => "slope has the sign of C M",
        Some(_) => "slope has the sign of -C M",
        None => "sign undetermined",
    };
    ctx.check(Check::at_most(name, mismatch, ctx.tol(name, 0.15)).with_note(sign))?;
    ctx.result("slope_sign", rep.sign)?;
    ctx.result("slope", &rep)?;
    let t = ctx.elapsed();
    ctx.runtime_check("runtime_seconds", t, 600.0);
    Ok(())
}
