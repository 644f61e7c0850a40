//! Semi-Lagrangian vorticity transport with flow-map bookkeeping.

use rayon::prelude::*;

use super::{EulerOps, EulerState, FlowMap};
use crate::error::{Error, Result};
use crate::fields::{CubicInterpolator, Extension, GridSpec, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Courant number bound `dt max|u| / h`.
    pub cfl: f64,
    /// Back-trace passes with the updated velocity.
    pub corrector_iterations: usize,
    /// Restore `int omega`, `int x omega`, `int y omega` after each step.
    pub moment_fixer: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            corrector_iterations: 2,
            moment_fixer: false,
        }
    }
}

/// Velocity linear in time between two snapshots.
struct Segment<'a> {
    u0: &'a VectorField,
    u1: &'a VectorField,
    it: CubicInterpolator,
}

impl Segment<'_> {
    /// Velocity at `(x, y)` and fractional time `s` in `[0, 1]`.
    #[inline]
    fn eval(&self, x: f64, y: f64, s: f64) -> [f64; 2] {
        match self.it.stencil(x, y) {
            None => [0.0, 0.0],
            Some(st) => {
                let a = [
                    self.it.apply(&st, self.u0.component(0).values()),
                    self.it.apply(&st, self.u0.component(1).values()),
                ];
                if s == 0.0 {
                    return a;
                }
                let b = [
                    self.it.apply(&st, self.u1.component(0).values()),
                    self.it.apply(&st, self.u1.component(1).values()),
                ];
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            }
        }
    }

    /// RK4 from `p` at fractional time `s0` over a signed step `dt`.
    #[inline]
    fn rk4(&self, p: [f64; 2], s0: f64, ds: f64, dt: f64) -> [f64; 2] {
        let k1 = self.eval(p[0], p[1], s0);
        let k2 = self.eval(
            p[0] + 0.5 * dt * k1[0],
            p[1] + 0.5 * dt * k1[1],
            s0 + 0.5 * ds,
        );
        let k3 = self.eval(
            p[0] + 0.5 * dt * k2[0],
            p[1] + 0.5 * dt * k2[1],
            s0 + 0.5 * ds,
        );
        let k4 = self.eval(p[0] + dt * k3[0], p[1] + dt * k3[1], s0 + ds);
        [
            p[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            p[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}

/// Stateful stepper: caches operators, the initial moments and warnings.
pub struct SemiLagrangian {
    ops: EulerOps,
    options: StepOptions,
    targets: [f64; 3],
    /// Particles carrying initial vorticity above the tail threshold.
    carriers: Option<Vec<bool>>,
    previous_u: Option<VectorField>,
    warnings: Vec<String>,
}

fn weighted_moments(w: &ScalarField) -> [f64; 3] {
    [
        w.integrate(),
        w.integrate_against(|x, _| x),
        w.integrate_against(|_, y| y),
    ]
}

impl SemiLagrangian {
    pub fn new(grid: GridSpec, options: StepOptions) -> Self {
        Self {
            ops: EulerOps::new(grid),
            options,
            targets: [0.0; 3],
            carriers: None,
            previous_u: None,
            warnings: Vec::new(),
        }
    }

    pub fn ops(&self) -> &EulerOps {
        &self.ops
    }

    pub fn options(&self) -> &StepOptions {
        &self.options
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Builds the initial state and records the moments to preserve.
    pub fn initial_state(&mut self, omega0: ScalarField) -> Result<EulerState> {
        self.targets = weighted_moments(&omega0);
        let cut = 1e-12 * omega0.max_abs();
        self.carriers = Some(omega0.values().iter().map(|v| v.abs() > cut).collect());
        self.previous_u = None;
        EulerState::new(&self.ops, omega0)
    }

    /// Largest admissible step for the current velocity.
    pub fn max_dt(&self, state: &EulerState) -> f64 {
        let m = state.u.magnitude().max_abs();
        if m == 0.0 {
            f64::INFINITY
        } else {
            self.options.cfl * state.grid().h() / m
        }
    }

    pub fn step(&mut self, state: &EulerState, dt: f64) -> Result<EulerState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let limit = self.max_dt(state);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let grid = *state.grid();
        let n = grid.len();
        let it_zero = CubicInterpolator::new(grid, Extension::Zero);
        let it_clamp = CubicInterpolator::new(grid, Extension::Clamp);
        let mut u_next = match &self.previous_u {
            Some(prev) => state.u.scale(2.0).sub(prev),
            None => state.u.clone(),
        };
        let mut departures = Vec::new();
        let mut omega_next = state.omega.clone();
        for _ in 0..=self.options.corrector_iterations {
            let seg = Segment {
                u0: &state.u,
                u1: &u_next,
                it: it_clamp,
            };
            departures = (0..n)
                .into_par_iter()
                .map(|i| {
                    let (x, y) = grid.point(i);
                    seg.rk4([x, y], 1.0, -1.0, -dt)
                })
                .collect::<Vec<[f64; 2]>>();
            let vals: Vec<f64> = departures
                .par_iter()
                .map(|p| it_zero.eval(&state.omega, p[0], p[1]))
                .collect();
            omega_next = ScalarField::new(grid, vals)?;
            if self.options.moment_fixer {
                self.fix_moments(&mut omega_next)?;
            }
            u_next = self.ops.biot_savart(&omega_next)?;
        }
        let psi = self.advance_back_map(&state.psi, &departures)?;
        let seg = Segment {
            u0: &state.u,
            u1: &u_next,
            it: it_clamp,
        };
        let (xs, ys) = state.phi.node_images();
        let l = grid.extent();
        let mut escaped = 0usize;
        let moved: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| seg.rk4([xs[i], ys[i]], 0.0, 1.0, dt))
            .collect();
        let mut w = Vec::with_capacity(n);
        for (i, p) in moved.iter().enumerate() {
            let carries = self.carriers.as_ref().is_none_or(|c| c[i]);
            if carries && (p[0].abs() > l || p[1].abs() > l) {
                escaped += 1;
            }
            let (x, y) = grid.point(i);
            w.push([p[0] - x, p[1] - y]);
        }
        if escaped > 0 {
            self.warnings.push(format!(
                "t = {:.6}: {escaped} vorticity-carrying particles left the domain (truncation)",
                state.t + dt
            ));
        }
        let phi = FlowMap::from_displacement(pairs_to_field(grid, w)?)?;
        self.previous_u = Some(state.u.clone());
        Ok(EulerState {
            t: state.t + dt,
            omega: omega_next,
            u: u_next,
            phi,
            psi,
        })
    }

    /// `psi^{n+1} = psi^n o X_back`.
    fn advance_back_map(&self, psi: &FlowMap, departures: &[[f64; 2]]) -> Result<FlowMap> {
        let grid = *psi.grid();
        let it = CubicInterpolator::new(grid, Extension::Clamp);
        let w: Vec<[f64; 2]> = departures
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let d = it.eval_vector(psi.displacement(), p[0], p[1]);
                let (x, y) = grid.point(i);
                [p[0] + d[0] - x, p[1] + d[1] - y]
            })
            .collect();
        FlowMap::from_displacement(pairs_to_field(grid, w)?)
    }

    /// Adds `|omega| (c0 + c1 x + c2 y)` so that the three moments match the
    /// initial ones.
    fn fix_moments(&self, omega: &mut ScalarField) -> Result<()> {
        let grid = *omega.grid();
        let current = weighted_moments(omega);
        let rhs = nalgebra::Vector3::from_fn(|i, _| self.targets[i] - current[i]);
        let mut m = nalgebra::Matrix3::zeros();
        for idx in 0..grid.len() {
            let a = omega.values()[idx].abs();
            if a == 0.0 {
                continue;
            }
            let (x, y) = grid.point(idx);
            let wgt = a * grid.trapezoid_weight(idx);
            let b = [1.0, x, y];
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] += wgt * b[r] * b[c];
                }
            }
        }
        let Some(coef) = m.lu().solve(&rhs) else {
            return Ok(());
        };
        for idx in 0..grid.len() {
            let a = omega.values()[idx].abs();
            if a == 0.0 {
                continue;
            }
            let (x, y) = grid.point(idx);
            omega.values_mut()[idx] += a * (coef[0] + coef[1] * x + coef[2] * y);
        }
        Ok(())
    }

    /// Steps of at most `dt` until `t_target` is reached exactly.
    pub fn advance_to(&mut self, state: EulerState, t_target: f64, dt: f64) -> Result<EulerState> {
        let mut s = state;
        while s.t < t_target - 1e-12 * t_target.abs().max(1.0) {
            let h = dt.min(t_target - s.t);
            s = self.step(&s, h)?;
        }
        Ok(s)
    }
}

fn pairs_to_field(grid: GridSpec, w: Vec<[f64; 2]>) -> Result<VectorField> {
    let (a, b): (Vec<f64>, Vec<f64>) = w.into_iter().map(|p| (p[0], p[1])).unzip();
    Ok(VectorField::from_pair(
        ScalarField::new(grid, a)?,
        ScalarField::new(grid, b)?,
    ))
}

/// One semi-Lagrangian step with default options (no history, fresh kernel).
pub fn step_semi_lagrangian(state: &EulerState, dt: f64) -> Result<EulerState> {
    let mut s = SemiLagrangian::new(*state.grid(), StepOptions::default());
    s.targets = weighted_moments(&state.omega);
    s.step(state, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vorticity_is_stationary() {
        let g = GridSpec::new(2.0, 32).unwrap();
        let mut sl = SemiLagrangian::new(g, StepOptions::default());
        let s0 = sl.initial_state(ScalarField::zeros(g)).unwrap();
        let s1 = sl.step(&s0, 0.1).unwrap();
        assert_eq!(s1.omega.max_abs(), 0.0);
        assert_eq!(s1.phi.displacement().max_abs(), 0.0);
        assert_eq!(s1.psi.displacement().max_abs(), 0.0);
    }

    #[test]
    fn radial_vorticity_is_steady() {
        let g = GridSpec::new(7.0, 224).unwrap();
        let w0 = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) * 0.5).exp());
        let mut sl = SemiLagrangian::new(g, StepOptions::default());
        let mut s = sl.initial_state(w0.clone()).unwrap();
        let dt = 0.9 * sl.max_dt(&s);
        for _ in 0..3 {
            let next = sl.step(&s, dt).unwrap();
            let change = next.omega.sub(&s.omega).max_abs() / w0.max_abs();
            assert!(change < 1e-6, "{change}");
            s = next;
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let g = GridSpec::new(3.0, 64).unwrap();
        let w0 = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp() * x);
        let mut sl = SemiLagrangian::new(g, StepOptions::default());
        let s = sl.initial_state(w0).unwrap();
        let dt = 2.0 * sl.max_dt(&s);
        assert!(matches!(sl.step(&s, dt), Err(Error::Cfl { .. })));
    }

    #[test]
    fn fixer_restores_moments() {
        let g = GridSpec::new(3.0, 64).unwrap();
        let w0 = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) * 2.0).exp() * (1.0 + 0.3 * x));
        let opts = StepOptions {
            moment_fixer: true,
            ..StepOptions::default()
        };
        let mut sl = SemiLagrangian::new(g, opts);
        let s0 = sl.initial_state(w0.clone()).unwrap();
        let m0 = weighted_moments(&w0);
        let mut s = s0;
        for _ in 0..3 {
            let dt = sl.max_dt(&s);
            s = sl.step(&s, dt).unwrap();
        }
        let m = weighted_moments(&s.omega);
        for i in 0..3 {
            assert!(
                (m[i] - m0[i]).abs() < 1e-13 * w0.map(f64::abs).integrate(),
                "{m:?} {m0:?}"
            );
        }
    }
}
