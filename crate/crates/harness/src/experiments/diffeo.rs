use anyhow::Result;
use asymflow::datagen::RandomStream;
use asymflow::euler2d::{invert_diffeo, roundtrip_error, FlowMap};
use asymflow::fields::{gradient, VectorField};
use asymflow::Error;
use serde::Serialize;

use super::RunContext;
use crate::config::DiffeoParams;

#[derive(Serialize)]
struct Summary {
    maps: usize,
    worst_roundtrip: f64,
    worst_seed: u64,
    min_determinant: f64,
    folded_map_rejected: bool,
}

/// `id + w` with `w = c grad psi` for a random compact `psi`, scaled so that
/// `max |dw| = amplitude`.
fn random_map(seed: u64, grid: asymflow::fields::GridSpec, p: &DiffeoParams) -> Result<FlowMap> {
    let psi = RandomStream::new(seed, p.support, p.smoothness, 1.0)?;
    let w = VectorField::from_fn(grid, |x, y| {
        let (_, px, py) = psi.eval(x, y);
        [px, py]
    });
    let mut dmax = 0.0_f64;
    for c in w.components() {
        dmax = dmax.max(gradient(c)?.max_abs());
    }
    anyhow::ensure!(dmax > 0.0, "random displacement vanishes");
    Ok(FlowMap::from_displacement(w.scale(p.amplitude / dmax))?)
}

pub fn run(ctx: &mut RunContext<'_>, p: &DiffeoParams) -> Result<()> {
    let grid = ctx.config.grid.spec()?;
    let l = grid.extent();
    let mut worst = 0.0_f64;
    let mut worst_seed = ctx.config.seed;
    let mut min_det = f64::INFINITY;
    let mut rows = Vec::new();
    for i in 0..p.maps {
        let seed = ctx.config.seed + i as u64;
        let phi = random_map(seed, grid, p)?;
        min_det = min_det.min(
            phi.determinant()?
                .values()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min),
        );
        let inv = invert_diffeo(&phi)?;
        let e = roundtrip_error(&phi, &inv) / l;
        if e >= worst {
            worst = e;
            worst_seed = seed;
        }
        rows.push(vec![seed as f64, e]);
    }
    ctx.phase("random maps");
    let folded = FlowMap::from_displacement(VectorField::from_fn(grid, |x, _| {
        [-2.0 * x * (-x * x).exp(), 0.0]
    }))?;
    let rejected = matches!(invert_diffeo(&folded), Err(Error::NotDiffeomorphism { .. }));
    ctx.write_trace("roundtrip.csv", &["seed", "roundtrip_over_extent"], &rows)?;
    ctx.result(
        "diffeo",
        Summary {
            maps: p.maps,
            worst_roundtrip: worst,
            worst_seed,
            min_determinant: min_det,
            folded_map_rejected: rejected,
        },
    )?;
    ctx.at_most("roundtrip_over_extent", worst, 1e-6)?;
    ctx.at_least("min_jacobian_determinant", min_det, f64::MIN_POSITIVE)?;
    ctx.at_least("folded_map_rejected", if rejected { 1.0 } else { 0.0 }, 1.0)?;
    Ok(())
}
