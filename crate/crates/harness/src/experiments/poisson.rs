use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use asymflow::fields::{laplacian, ScalarField};
use asymflow::harmonics::{gauss_legendre, mode, modes_of_degree};
use asymflow::poisson::{
    poisson_solve_asym, poisson_solve_asym_3d, FreeSpacePoisson, RadialProfile, Remainder,
    SpatialSource,
};
use serde::Serialize;

use super::RunContext;
use crate::config::{ModeSel, PoissonCase, PoissonParams};

/// Unit bump on the annulus `1 < r < 2`.
fn bump(r: f64) -> f64 {
    if r <= 1.0 || r >= 2.0 {
        0.0
    } else {
        let s = 2.0 * r - 3.0;
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// `int_1^2 f(r) dr` by Gauss-Legendre.
fn annulus_integral(f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(200);
    x.iter()
        .zip(&w)
        .map(|(x, w)| 0.5 * w * f(1.5 + 0.5 * x))
        .sum()
}

pub fn run(ctx: &mut RunContext<'_>, p: &PoissonParams) -> Result<()> {
    match p.case {
        PoissonCase::Newtonian => newtonian(ctx, p),
        PoissonCase::DegreeSelectivity => selectivity(ctx, p),
    }
}

#[derive(Serialize)]
struct NewtonianTable {
    total_source: f64,
    coefficient: f64,
    leading_term: f64,
    oracle: f64,
    relative_error: f64,
    far_field_relative_error: f64,
    radial_points: usize,
}

fn newtonian(ctx: &mut RunContext<'_>, p: &PoissonParams) -> Result<()> {
    let f = |x: &[f64; 3]| bump((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
    let radii = RadialProfile::log_grid(p.r_min, p.r_max, p.radial_points);
    let src = SpatialSource::new(&f, radii)?;
    let e = poisson_solve_asym_3d(&src, p.delta, p.p, 0)?;
    ctx.phase("solve");
    let total = 4.0 * PI * annulus_integral(|r| bump(r) * r * r);
    let y00 = 1.0 / (4.0 * PI).sqrt();
    let c = e
        .coefficient(0, 1)
        .context("weight excludes the r^{-1} term")?;
    let oracle = -total / (4.0 * PI);
    let lead = c * y00;
    let rel = (lead - oracle).abs() / oracle.abs();
    // u_0(r) Y_00 = lead / r + rest; beyond the support rest must vanish
    let Remainder::Radial(parts) = &e.remainder_field else {
        bail!("expected a radial remainder");
    };
    let rest = &parts[0].1;
    let mut far = 0.0_f64;
    for (&r, &v) in rest.radii().iter().zip(rest.values()) {
        if r >= 4.0 && r <= 0.5 * p.r_max {
            let u = lead / r + v * y00;
            far = far.max((u - oracle / r).abs() / (oracle / r).abs());
        }
    }
    ctx.result(
        "newtonian",
        NewtonianTable {
            total_source: total,
            coefficient: c,
            leading_term: lead,
            oracle,
            relative_error: rel,
            far_field_relative_error: far,
            radial_points: p.radial_points,
        },
    )?;
    ctx.result("expansion", &e)?;
    ctx.at_most("newtonian_leading_term", rel, 1e-3)?;
    ctx.at_most("newtonian_far_field", far, 1e-3)?;
    ctx.at_most("radial_points", p.radial_points as f64, 4096.0)?;
    let t = ctx.elapsed();
    ctx.runtime_check("runtime_seconds", t, 10.0);
    Ok(())
}

#[derive(Serialize)]
struct CoefficientRow {
    k: usize,
    l: usize,
    value: f64,
    relative: f64,
}

fn selectivity(ctx: &mut RunContext<'_>, p: &PoissonParams) -> Result<()> {
    let grid = ctx.config.grid.spec()?;
    let target = ctx
        .config
        .modes
        .first()
        .copied()
        .unwrap_or(ModeSel::new(2, 1));
    let m = mode(2, target.k, target.l)?;
    let g = ScalarField::from_fn(grid, |x, y| m.eval_poly(&[x, y]) * bump(x.hypot(y)));
    let e = poisson_solve_asym(&g, p.delta, p.p)?;
    ctx.phase("solve");
    let c = e
        .coefficient(target.k, target.l)
        .context("weight excludes the target degree")?;
    // -C int H^2 b = -C int_1^2 r^{2k+1} b(r) dr for an orthonormal h
    let oracle =
        -annulus_integral(|r| r.powi(2 * target.k as i32 + 1) * bump(r)) / (2 * target.k) as f64;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for term in &e.terms {
        for (i, v) in term.coeffs.iter().enumerate() {
            let rel = v.abs() / c.abs();
            rows.push(CoefficientRow {
                k: term.kprime,
                l: i + 1,
                value: *v,
                relative: rel,
            });
            if (term.kprime, i + 1) != (target.k, target.l) {
                worst = worst.max(rel);
            }
        }
    }
    let degrees = e.terms.iter().map(|t| t.kprime).max().unwrap_or(0);
    let modes_checked: usize = (0..=degrees)
        .map(|k| modes_of_degree(2, k).map(|v| v.len()).unwrap_or(0))
        .sum();
    let full = FreeSpacePoisson::new(grid).solve(&g);
    let lap = laplacian(&full)?;
    let half = 0.5 * grid.extent();
    let mut resid = 0.0_f64;
    for i in 0..grid.len() {
        let (x, y) = grid.point(i);
        if x.abs() <= half && y.abs() <= half {
            resid = resid.max((lap.values()[i] - g.values()[i]).abs());
        }
    }
    let resid = resid / g.max_abs();
    ctx.result("coefficients", &rows)?;
    ctx.result("oracle", oracle)?;
    ctx.result("modes_checked", modes_checked)?;
    ctx.result("remainder_exponent", e.remainder_exponent)?;
    ctx.at_most("off_target_coefficients", worst, 1e-6)?;
    ctx.at_most(
        "target_vs_radial_quadrature",
        (c - oracle).abs() / oracle.abs(),
        1e-4,
    )?;
    ctx.at_most("laplacian_residual_inner_half", resid, 1e-3)?;
    let rows: Vec<Vec<f64>> = e
        .terms
        .iter()
        .flat_map(|t| {
            t.coeffs
                .iter()
                .enumerate()
                .map(move |(i, v)| vec![t.kprime as f64, (i + 1) as f64, *v])
        })
        .collect();
    ctx.write_trace("coefficients.csv", &["k", "l", "value"], &rows)?;
    let t = ctx.elapsed();
    ctx.runtime_check("runtime_seconds", t, 60.0);
    Ok(())
}
