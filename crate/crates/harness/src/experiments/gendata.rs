use anyhow::{Context, Result};
use asymflow::asymptotics::{moment, support_radius};
use asymflow::datagen::{closed_form_moment, hamiltonian, paired_mode};
use asymflow::fields::{divergence, gradient};
use asymflow::spectral::SpectralDiff;
use serde::Serialize;

use super::{initial_data, record_norm, RunContext};
use crate::config::GendataParams;

#[derive(Serialize)]
struct Summary {
    amplitude: Option<f64>,
    max_vorticity: f64,
    support_radius: f64,
    closed_form_moment: Option<f64>,
}

pub fn run(ctx: &mut RunContext<'_>, p: &GendataParams) -> Result<()> {
    let grid = ctx.config.grid.spec()?;
    let source = ctx.config.data.clone().context("missing data source")?;
    let data = initial_data(&source, grid, ctx.config.seed)?;
    record_norm(ctx, &data.u)?;
    ctx.write_vector("u0", &data.u)?;
    ctx.write_scalar("omega0", &data.omega)?;
    let mut grad_scale = 0.0_f64;
    for c in data.u.components() {
        grad_scale = grad_scale.max(gradient(c)?.max_abs());
    }
    let relative = |v: f64| {
        if grad_scale > 0.0 {
            v / grad_scale
        } else {
            0.0
        }
    };
    let fd = divergence(&data.u)?;
    let fd_inner = (0..grid.len())
        .filter(|&i| grid.ring(i) >= 3)
        .fold(0.0_f64, |m, i| m.max(fd.values()[i].abs()));
    ctx.result("fd_divergence", relative(fd_inner))?;
    let spectral = SpectralDiff::new(grid).divergence(&data.u).max_abs();
    ctx.at_most("spectral_divergence", relative(spectral), 1e-6)?;
    let mut closed = None;
    if let Some(spec) = data.spec {
        if p.write_hamiltonian {
            ctx.write_scalar("hamiltonian", &hamiltonian(&spec, grid)?)?;
        }
        let (m, _) = paired_mode(&spec)?;
        let r = moment(&data.u, &m, spec.alpha, Some(&spec))?;
        ctx.at_least(
            "paired_moment_relative_magnitude",
            r.relative_magnitude(),
            1e-6,
        )?;
        ctx.result("moment", &r)?;
        closed = Some(closed_form_moment(&spec, 2)?);
    }
    ctx.result(
        "data",
        Summary {
            amplitude: data.spec.map(|s| s.amplitude),
            max_vorticity: data.omega.max_abs(),
            support_radius: support_radius(&data.omega, 1e-12),
            closed_form_moment: closed,
        },
    )?;
    ctx.phase("generate");
    Ok(())
}
