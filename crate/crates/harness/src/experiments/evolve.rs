use std::collections::BTreeMap;
use std::f64::consts::PI;

use anyhow::{Context, Result};
use asymflow::asymptotics::{
    angular_profile, coefficient_from_vorticity, coefficient_lagrangian, coefficient_scale,
    eigenfunction_residual_samples, shell_fit_expansion, CoefficientMethod, CoefficientTrace,
    RadialFitOptions, ShellFitOptions,
};
use asymflow::datagen::paired_mode;
use asymflow::euler2d::{
    diagnostics, Diagnostics, EulerState, LagrangianIntegrator, LagrangianState, SemiLagrangian,
};
use asymflow::harmonics::{mode, HarmonicMode};
use asymflow::Error;
use serde::Serialize;

use super::{initial_data, record_norm, RunContext};
use crate::config::{EvolveParams, ModeSel};
use crate::manifest::{Check, Checkpoint};

const DEFAULT_DEGREES: [usize; 5] = [0, 1, 2, 3, 4];

fn label(t: &CoefficientTrace) -> String {
    format!("a{}_{}_j{}_{}", t.k, t.l, t.j, t.method.tag())
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checkpoint times: the regular cadence plus the requested probe times.
fn checkpoint_times(tau: f64, every: f64, extra: &[f64]) -> Vec<f64> {
    let n = (tau / every - 1e-9).ceil() as usize;
    let mut t: Vec<f64> = (0..=n).map(|c| (c as f64 * every).min(tau)).collect();
    t.extend_from_slice(extra);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| same_time(*a, *b));
    t
}

struct Tracked {
    mode: HarmonicMode,
    j: usize,
    euler: CoefficientTrace,
    lagrangian: Option<CoefficientTrace>,
    shell: Option<CoefficientTrace>,
}

#[derive(Serialize)]
struct Drifts {
    energy: f64,
    enstrophy: f64,
    circulation: f64,
    impulse: f64,
    max_vorticity_overshoot: f64,
    volume_defect: f64,
    transport_error: f64,
    divergence: f64,
}

fn drifts(d: &[Diagnostics]) -> Drifts {
    let d0 = &d[0];
    let rel = |a: f64, b: f64| {
        if b == 0.0 {
            (a - b).abs()
        } else {
            (a - b).abs() / b.abs()
        }
    };
    let mut out = Drifts {
        energy: 0.0,
        enstrophy: 0.0,
        circulation: 0.0,
        impulse: 0.0,
        max_vorticity_overshoot: 0.0,
        volume_defect: 0.0,
        transport_error: 0.0,
        divergence: 0.0,
    };
    let circ_scale = d0.abs_vorticity.max(f64::MIN_POSITIVE);
    let imp_scale = d0.first_moment_abs.max(f64::MIN_POSITIVE);
    for s in d {
        out.energy = out.energy.max(rel(s.energy, d0.energy));
        out.enstrophy = out.enstrophy.max(rel(s.enstrophy, d0.enstrophy));
        out.circulation = out
            .circulation
            .max((s.circulation - d0.circulation).abs() / circ_scale);
        let dp = (s.impulse[0] - d0.impulse[0]).hypot(s.impulse[1] - d0.impulse[1]);
        out.impulse = out.impulse.max(dp / imp_scale);
        if d0.max_vorticity > 0.0 {
            out.max_vorticity_overshoot = out
                .max_vorticity_overshoot
                .max(s.max_vorticity / d0.max_vorticity - 1.0);
        }
        out.volume_defect = out.volume_defect.max(s.volume_defect);
        out.transport_error = out.transport_error.max(s.transport_error);
        out.divergence = out.divergence.max(s.divergence);
    }
    out
}

/// `max |a| / noise floor` of a trace; zero when the trace is identically 0.
fn floor_ratio(t: &CoefficientTrace) -> f64 {
    let m = t.max_abs();
    if m == 0.0 {
        0.0
    } else {
        m / t.noise_floor()
    }
}

pub fn run(ctx: &mut RunContext<'_>, p: &EvolveParams) -> Result<()> {
    let config = ctx.config;
    let grid = config.grid.spec()?;
    let source = config.data.clone().context("missing data source")?;
    let data = initial_data(&source, grid, config.seed)?;
    record_norm(ctx, &data.u)?;
    let omega0 = data.omega.clone();
    let mut sl = SemiLagrangian::new(grid, p.step.into());
    let mut st = sl.initial_state(omega0.clone())?;
    let limit0 = sl.max_dt(&st);
    let dt = match config.dt {
        Some(dt) if dt > limit0 => {
            return Err(Error::Cfl { dt, limit: limit0 }).context("configured dt");
        }
        Some(dt) => dt,
        None => p.dt_fraction * limit0,
    };
    ctx.result("dt", dt)?;
    ctx.result("max_dt_initial", limit0)?;
    if let Some(spec) = data.spec {
        ctx.result("data_spec", spec)?;
    }

    let mut sel: Vec<ModeSel> = if config.modes.is_empty() {
        ModeSel::of_degrees(&DEFAULT_DEGREES)
    } else {
        config.modes.clone()
    };
    sel.extend(ModeSel::of_degrees(&p.suppressed_degrees));
    sel.sort();
    sel.dedup();
    let mut tracked = Vec::new();
    for s in &sel {
        let m = mode(2, s.k, s.l)?;
        for j in 1..=2 {
            let scale = coefficient_scale(&omega0, &m, j);
            let extra = p.route_agreement && s.k <= p.shell_kmax;
            tracked.push(Tracked {
                euler: CoefficientTrace::new(&m, j, CoefficientMethod::MomentIntegral, scale),
                lagrangian: extra
                    .then(|| CoefficientTrace::new(&m, j, CoefficientMethod::Lagrangian, scale)),
                shell: extra
                    .then(|| CoefficientTrace::new(&m, j, CoefficientMethod::ShellFit, scale)),
                mode: m.clone(),
                j,
            });
        }
    }

    let mut extra_times = Vec::new();
    extra_times.extend(p.eigen_time);
    extra_times.extend(p.crosscheck.map(|c| c.t));
    let times = checkpoint_times(config.tau, p.checkpoint_every, &extra_times);
    let mut diags = Vec::new();
    let mut cfl_reductions = 0usize;
    let mut cross_velocity = None;
    let mut eigen_state: Option<EulerState> = None;
    let mut shell_failures = 0usize;
    for (c, &target) in times.iter().enumerate() {
        while st.t < target && !same_time(st.t, target) {
            let mut h = dt.min(target - st.t);
            let limit = sl.max_dt(&st);
            if h > limit {
                if cfl_reductions == 0 {
                    ctx.warn(format!(
                        "CFL: step reduced from {h:.6e} to {limit:.6e} at t = {:.6}",
                        st.t
                    ))?;
                }
                cfl_reductions += 1;
                h = limit;
            }
            st = sl.step(&st, h)?;
        }
        let t = if c == 0 { 0.0 } else { target };
        let d = diagnostics(sl.ops(), &st, &omega0)?;
        let fit = if p.route_agreement {
            match shell_fit_expansion(&st.u, p.shell_kmax, ShellFitOptions::default()) {
                Ok(f) => Some(f),
                Err(e) => {
                    shell_failures += 1;
                    ctx.warn(format!("t = {t:.6}: shell fit failed: {e}"))?;
                    None
                }
            }
        } else {
            None
        };
        let mut coefficients = BTreeMap::new();
        for tr in &mut tracked {
            let e = coefficient_from_vorticity(&st.omega, &tr.mode, tr.j)?;
            tr.euler.push(t, e)?;
            coefficients.insert(label(&tr.euler), e);
            if let Some(lt) = &mut tr.lagrangian {
                let v = coefficient_lagrangian(&st.phi, &omega0, &tr.mode, tr.j)?;
                lt.push(t, v)?;
                coefficients.insert(label(lt), v);
            }
            if let Some(sf) = &mut tr.shell {
                let v = fit
                    .as_ref()
                    .and_then(|f| f.coefficient(tr.j, tr.mode.kprime(), tr.mode.l()))
                    .unwrap_or(f64::NAN);
                sf.push(t, v)?;
                coefficients.insert(label(sf), v);
            }
        }
        if p.field_every > 0 && c % p.field_every == 0 {
            ctx.write_scalar(&format!("omega_{c:04}"), &st.omega)?;
        }
        if let Some(cc) = p.crosscheck {
            if same_time(t, cc.t) {
                cross_velocity = Some(st.u.clone());
            }
        }
        if p.eigen_time.is_some_and(|te| same_time(t, te)) {
            eigen_state = Some(st.clone());
        }
        ctx.writer().push_checkpoint(Checkpoint {
            t,
            diagnostics: Some(d.clone()),
            coefficients,
        })?;
        diags.push(d);
    }
    ctx.phase("evolve");
    let sw: Vec<String> = sl.warnings().to_vec();
    ctx.writer().add_warnings(sw)?;
    if cfl_reductions > 0 {
        ctx.warn(format!("CFL: {cfl_reductions} steps were shortened"))?;
    }

    let dcols = [
        "t",
        "energy",
        "enstrophy",
        "circulation",
        "impulse_x",
        "impulse_y",
        "max_vorticity",
        "volume_defect",
        "transport_error",
        "divergence",
    ];
    let drows: Vec<Vec<f64>> = diags
        .iter()
        .map(|d| {
            vec![
                d.t,
                d.energy,
                d.enstrophy,
                d.circulation,
                d.impulse[0],
                d.impulse[1],
                d.max_vorticity,
                d.volume_defect,
                d.transport_error,
                d.divergence,
            ]
        })
        .collect();
    ctx.write_trace("diagnostics.csv", &dcols, &drows)?;
    let all: Vec<&CoefficientTrace> = tracked
        .iter()
        .flat_map(|t| {
            std::iter::once(&t.euler)
                .chain(t.lagrangian.as_ref())
                .chain(t.shell.as_ref())
        })
        .collect();
    let labels: Vec<String> = all.iter().map(|t| label(t)).collect();
    let mut cols = vec!["t"];
    cols.extend(labels.iter().map(String::as_str));
    let crows: Vec<Vec<f64>> = (0..times.len())
        .map(|i| {
            let mut r = vec![all[0].samples[i].0];
            r.extend(all.iter().map(|t| t.samples[i].1));
            r
        })
        .collect();
    ctx.write_trace("coefficients.csv", &cols, &crows)?;
    let floors: BTreeMap<String, f64> = tracked
        .iter()
        .map(|t| (label(&t.euler), t.euler.noise_floor()))
        .collect();
    ctx.result("noise_floors", &floors)?;

    let dr = drifts(&diags);
    if p.conservation {
        ctx.at_most("energy_drift", dr.energy, 5e-3)?;
        ctx.at_most("circulation_drift", dr.circulation, 1e-3)?;
        ctx.at_most("impulse_drift", dr.impulse, 1e-3)?;
        ctx.at_most("enstrophy_drift", dr.enstrophy, 2e-2)?;
        ctx.at_most("max_vorticity_overshoot", dr.max_vorticity_overshoot, 1e-2)?;
        ctx.at_most("volume_defect", dr.volume_defect, 1e-3)?;
        ctx.at_most("transport_error", dr.transport_error, 1e-2)?;
    }
    ctx.result("drifts", &dr)?;

    if !p.suppressed_degrees.is_empty() {
        let mut worst = (0.0_f64, String::new());
        for tr in tracked
            .iter()
            .filter(|t| p.suppressed_degrees.contains(&t.mode.kprime()))
        {
            let r = floor_ratio(&tr.euler);
            if r >= worst.0 {
                worst = (r, label(&tr.euler));
            }
        }
        let name = "suppressed_over_noise_floor";
        let c = Check::at_most(name, worst.0, ctx.tol(name, 10.0)).with_note(worst.1);
        ctx.check(c)?;
    }

    if p.stationary {
        let mut worst = (0.0_f64, String::new());
        for tr in &tracked {
            let r = floor_ratio(&tr.euler);
            if r >= worst.0 {
                worst = (r, label(&tr.euler));
            }
        }
        let name = "stationary_over_noise_floor";
        let c = Check::at_most(name, worst.0, ctx.tol(name, 10.0)).with_note(worst.1);
        ctx.check(c)?;
        ctx.at_most("stationary_energy_drift", dr.energy, 1e-6)?;
    }

    if p.route_agreement {
        let mut lag = (f64::NAN, String::new());
        let mut shell = (f64::NAN, String::new());
        let mut compared = 0usize;
        // Errors are relative to |(a^1, a^2)| of the mode at the same time.
        let magnitude = |tr: &CoefficientTrace, i: usize| {
            tracked
                .iter()
                .map(|o| &o.euler)
                .filter(|o| o.k == tr.k && o.kprime == tr.kprime && o.l == tr.l)
                .map(|o| o.samples[i].1.powi(2))
                .sum::<f64>()
                .sqrt()
        };
        for tr in &tracked {
            let floor = tr.euler.noise_floor();
            for (i, &(t, e)) in tr.euler.samples.iter().enumerate() {
                let size = magnitude(&tr.euler, i);
                if !(size > 10.0 * floor) {
                    continue;
                }
                compared += 1;
                let at = format!("{} at t = {t:.3}", label(&tr.euler));
                if let Some(lt) = &tr.lagrangian {
                    let r = (lt.samples[i].1 - e).abs() / size;
                    if !(r <= lag.0) {
                        lag = (r, at.clone());
                    }
                }
                if let Some(sf) = &tr.shell {
                    let r = (sf.samples[i].1 - e).abs() / size;
                    if !(r <= shell.0) || r.is_nan() {
                        shell = (r, at.clone());
                    }
                }
            }
        }
        let note = |w: &(f64, String)| {
            if compared == 0 {
                "no coefficient above its noise floor".to_string()
            } else {
                format!("worst: {}", w.1)
            }
        };
        let n = "lagrangian_vs_eulerian";
        ctx.check(Check::at_most(n, lag.0, ctx.tol(n, 2e-2)).with_note(note(&lag)))?;
        let n = "shell_fit_vs_eulerian";
        ctx.check(Check::at_most(n, shell.0, ctx.tol(n, 5e-2)).with_note(note(&shell)))?;
        ctx.result("route_comparisons", compared)?;
        ctx.result("shell_fit_failures", shell_failures)?;
    }

    if let (Some(te), Some(es)) = (p.eigen_time, eigen_state) {
        let (k, j) = match data.spec {
            Some(s) => (paired_mode(&s)?.0.kprime(), s.alpha),
            None => (3, 1),
        };
        let opts = RadialFitOptions::default();
        let prof = angular_profile(&es.omega, k, j, opts)?;
        let floor = tracked
            .iter()
            .find(|t| t.mode.kprime() == k && t.j == j)
            .map(|t| 10.0 * t.euler.noise_floor())
            .unwrap_or(0.0);
        let rows: Vec<Vec<f64>> = prof
            .iter()
            .enumerate()
            .map(|(i, v)| vec![2.0 * PI * i as f64 / prof.len() as f64, *v])
            .collect();
        ctx.write_trace("angular_profile.csv", &["theta", "a"], &rows)?;
        let name = "eigenfunction_residual";
        let limit = ctx.tol(name, 1e-2);
        let c = match eigenfunction_residual_samples(&prof, k, floor) {
            Ok(r) => Check::at_most(name, r, limit),
            Err(e) => Check::at_most(name, f64::NAN, limit).with_note(e.to_string()),
        };
        ctx.check(c.with_note(format!("a_{k} component {j} at t = {te}")))?;
        ctx.phase("eigenfunction");
    }

    if let Some(cc) = p.crosscheck {
        let su = cross_velocity.context("crosscheck time was not reached")?;
        let li = LagrangianIntegrator::new(grid);
        let u0 = sl.ops().biot_savart(&omega0)?;
        let ls = li.advance_to(LagrangianState::new(u0), cc.t, cc.dt)?;
        let ul = ls.velocity()?;
        let rel = ul.sub(&su).l2_norm() / su.l2_norm();
        ctx.at_most("lagrangian_integrator_vs_semi_lagrangian", rel, 1e-2)?;
        ctx.phase("crosscheck");
    }
    Ok(())
}
