//! Planar incompressible Euler flow: `Q(u)`, pressure, Biot-Savart,
//! semi-Lagrangian vorticity transport, flow maps and the conjugated Euler
//! vector field.

mod flowmap;
mod lagrangian;
mod stepper;

pub use flowmap::{
    compose_diffeo, invert_diffeo, invert_diffeo_with, roundtrip_error, FlowMap, InversionOptions,
};
pub use lagrangian::{euler_vectorfield, LagrangianIntegrator, LagrangianState};
pub use stepper::{step_semi_lagrangian, SemiLagrangian, StepOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{
    curl, derivative, Axis, CubicInterpolator, Extension, GridSpec, ScalarField, VectorField,
};
use crate::poisson::{grad_inv_laplace, FreeSpacePoisson};

/// `Q(u) = tr (du)^2 = (d_1 u_1)^2 + 2 (d_2 u_1)(d_1 u_2) + (d_2 u_2)^2`.
pub fn q_form(u: &VectorField) -> Result<ScalarField> {
    let ux = derivative(u.component(0), Axis::X, 1)?;
    let uy = derivative(u.component(0), Axis::Y, 1)?;
    let vx = derivative(u.component(1), Axis::X, 1)?;
    let vy = derivative(u.component(1), Axis::Y, 1)?;
    let v = (0..ux.values().len())
        .map(|i| {
            let (a, b, c, d) = (
                ux.values()[i],
                uy.values()[i],
                vx.values()[i],
                vy.values()[i],
            );
            a * a + 2.0 * b * c + d * d
        })
        .collect();
    ScalarField::new(*u.grid(), v)
}

/// `omega = d_1 u_2 - d_2 u_1`.
pub fn vorticity(u: &VectorField) -> Result<ScalarField> {
    curl(u)
}

/// `grad Delta^{-1} Q(u)`; the pressure gradient is its negative.
pub fn pressure_gradient(u: &VectorField) -> Result<VectorField> {
    grad_inv_laplace(&q_form(u)?)
}

/// `u = grad^perp Delta^{-1} omega`.
pub fn biot_savart(omega: &ScalarField) -> Result<VectorField> {
    EulerOps::new(*omega.grid()).biot_savart(omega)
}

/// Velocity at arbitrary points by direct summation of the planar kernel
/// `(x - y)^perp / (2 pi |x - y|^2)` against the sampled vorticity. Meant for
/// points away from the support.
pub fn biot_savart_at(omega: &ScalarField, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let g = omega.grid();
    let cut = 1e-12 * omega.max_abs();
    let src: Vec<(f64, f64, f64)> = (0..g.len())
        .filter_map(|i| {
            let v = omega.values()[i];
            (v.abs() > cut).then(|| {
                let (x, y) = g.point(i);
                (x, y, v * g.trapezoid_weight(i))
            })
        })
        .collect();
    points
        .par_iter()
        .map(|p| {
            let (mut a, mut b) = (0.0, 0.0);
            for &(x, y, w) in &src {
                let (dx, dy) = (p[0] - x, p[1] - y);
                let r2 = dx * dx + dy * dy;
                if r2 > 0.0 {
                    a -= w * dy / r2;
                    b += w * dx / r2;
                }
            }
            let c = 0.5 / std::f64::consts::PI;
            [c * a, c * b]
        })
        .collect()
}

/// Grid operators sharing one free-space Poisson kernel.
pub struct EulerOps {
    grid: GridSpec,
    poisson: FreeSpacePoisson,
}

impl EulerOps {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            poisson: FreeSpacePoisson::new(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn poisson(&self) -> &FreeSpacePoisson {
        &self.poisson
    }

    pub fn biot_savart(&self, omega: &ScalarField) -> Result<VectorField> {
        omega.check_finite()?;
        Ok(self.poisson.perp_gradient(omega))
    }

    pub fn stream_function(&self, omega: &ScalarField) -> ScalarField {
        self.poisson.solve(omega)
    }

    pub fn pressure_gradient(&self, u: &VectorField) -> Result<VectorField> {
        let q = q_form(u)?;
        q.check_finite()?;
        Ok(self.poisson.gradient(&q))
    }
}

/// Snapshot of the evolution.
#[derive(Debug, Clone)]
pub struct EulerState {
    pub t: f64,
    pub omega: ScalarField,
    pub u: VectorField,
    pub phi: FlowMap,
    pub psi: FlowMap,
}

impl EulerState {
    pub fn new(ops: &EulerOps, omega0: ScalarField) -> Result<Self> {
        let u = ops.biot_savart(&omega0)?;
        let grid = *omega0.grid();
        Ok(Self {
            t: 0.0,
            omega: omega0,
            u,
            phi: FlowMap::identity(grid),
            psi: FlowMap::identity(grid),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.omega.grid()
    }
}

/// Conserved quantities and error indicators of a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `(1/2) int |u|^2 dx` on the grid.
    pub energy: f64,
    /// `-(1/2) int psi omega dx`.
    pub energy_stream: f64,
    pub enstrophy: f64,
    pub circulation: f64,
    pub impulse: [f64; 2],
    pub abs_vorticity: f64,
    pub first_moment_abs: f64,
    pub max_vorticity: f64,
    pub volume_defect: f64,
    /// `||omega - omega_0 o psi||_2 / ||omega_0||_2`.
    pub transport_error: f64,
    /// `max|div u| / max|grad u|` by finite differences.
    pub divergence: f64,
}

pub fn diagnostics(
    ops: &EulerOps,
    state: &EulerState,
    omega0: &ScalarField,
) -> Result<Diagnostics> {
    let w = &state.omega;
    let u = &state.u;
    let speed2 = u
        .component(0)
        .zip_with(u.component(1), |a, b| a * a + b * b);
    let stream = ops.stream_function(w);
    let it = CubicInterpolator::new(*w.grid(), Extension::Zero);
    let (xs, ys) = state.psi.node_images();
    let pulled = ScalarField::new(
        *w.grid(),
        (0..xs.len())
            .map(|i| it.eval(omega0, xs[i], ys[i]))
            .collect(),
    )?;
    let div = crate::fields::divergence(u)?;
    let grad_scale = derivative(u.component(0), Axis::X, 1)?
        .max_abs()
        .max(derivative(u.component(0), Axis::Y, 1)?.max_abs())
        .max(derivative(u.component(1), Axis::X, 1)?.max_abs());
    let g = w.grid();
    let inner_div = (0..g.len())
        .filter(|&i| g.ring(i) >= 3)
        .fold(0.0_f64, |m, i| m.max(div.values()[i].abs()));
    Ok(Diagnostics {
        t: state.t,
        energy: 0.5 * speed2.integrate(),
        energy_stream: -0.5 * stream.zip_with(w, |a, b| a * b).integrate(),
        enstrophy: w.map(|v| v * v).integrate(),
        circulation: w.integrate(),
        impulse: [w.integrate_against(|x, _| x), w.integrate_against(|_, y| y)],
        abs_vorticity: w.map(f64::abs).integrate(),
        first_moment_abs: w.map(f64::abs).integrate_against(|x, y| x.hypot(y)),
        max_vorticity: w.max_abs(),
        volume_defect: state.phi.max_volume_defect()?,
        transport_error: w.sub(&pulled).l2_norm() / omega0.l2_norm().max(f64::MIN_POSITIVE),
        divergence: if grad_scale > 0.0 {
            inner_div / grad_scale
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(3.0, 64).unwrap()
    }

    #[test]
    fn q_form_examples() {
        let g = grid();
        let c = VectorField::from_fn(g, |_, _| [1.0, -2.0]);
        assert!(q_form(&c).unwrap().max_abs() < 1e-12);
        let shear = VectorField::from_fn(g, |_, y| [y, 0.0]);
        assert!(q_form(&shear).unwrap().max_abs() < 1e-12);
        let strain = VectorField::from_fn(g, |x, y| [x, -y]);
        let q = q_form(&strain).unwrap();
        assert!(q.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn vorticity_examples() {
        let g = grid();
        assert!(
            vorticity(&VectorField::from_fn(g, |_, _| [3.0, 1.0]))
                .unwrap()
                .max_abs()
                < 1e-12
        );
        let rot = vorticity(&VectorField::from_fn(g, |x, y| [-y, x])).unwrap();
        assert!(rot.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        let h = |x: f64, y: f64| (-(x * x + y * y)).exp() * x;
        let u = VectorField::from_fn(g, |x, y| {
            let e = (-(x * x + y * y)).exp();
            [2.0 * x * y * e, (1.0 - 2.0 * x * x) * e]
        });
        let w = vorticity(&u).unwrap();
        let lap = crate::fields::laplacian(&ScalarField::from_fn(g, h)).unwrap();
        assert!(w.sub(&lap).l2_norm_inner(0.8) < 1e-3 * lap.l2_norm_inner(0.8));
    }

    #[test]
    fn radial_vorticity_gives_tangential_speed() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let bump = |r: f64| {
            if r < 2.0 {
                (-1.0 / (1.0 - (r / 2.0).powi(2))).exp()
            } else {
                0.0
            }
        };
        let w = ScalarField::from_fn(g, |x, y| bump(x.hypot(y)));
        let u = biot_savart(&w).unwrap();
        let (nodes, weights) = crate::harmonics::gauss_legendre(64);
        for &(ix, iy) in &[(80usize, 64usize), (100, 90), (64, 120)] {
            let (x, y) = g.point(g.index(ix, iy));
            let r = x.hypot(y);
            let b = r.min(2.0);
            let circ: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(t, wt)| {
                    let s = 0.5 * b * (t + 1.0);
                    wt * 0.5 * b * s * bump(s)
                })
                .sum();
            let speed = circ / r;
            let ut = (-y * u.component(0).at(ix, iy) + x * u.component(1).at(ix, iy)) / r;
            let ur = (x * u.component(0).at(ix, iy) + y * u.component(1).at(ix, iy)) / r;
            assert!((ut - speed).abs() < 1e-6 * speed.max(1e-3), "{ut} {speed}");
            assert!(ur.abs() < 1e-6 * speed, "{ur}");
        }
    }

    #[test]
    fn circulation_far_field() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let w = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) * 4.0).exp());
        let gamma = w.integrate();
        let u = biot_savart(&w).unwrap();
        let it = CubicInterpolator::new(g, Extension::Zero);
        for r in [8.0, 15.0] {
            let s = it.eval_vector(&u, r * 0.6, r * 0.8);
            let speed = s[0].hypot(s[1]);
            let want = gamma / (2.0 * std::f64::consts::PI * r);
            assert!((speed - want).abs() < 1e-6 * want, "{speed} {want}");
        }
        let e = crate::fields::decay_exponent(&u.magnitude(), (0, 0)).unwrap();
        assert!((e + 1.0).abs() < 0.05, "{e}");
        let far = biot_savart_at(&w, &[[12.0, 16.0]]);
        let want = gamma / (2.0 * std::f64::consts::PI * 20.0);
        assert!((far[0][0] + 0.8 * want).abs() < 1e-12 * want);
        assert!((far[0][1] - 0.6 * want).abs() < 1e-12 * want);
    }
}
