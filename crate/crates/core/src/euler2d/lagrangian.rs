//! The Euler equations as an ODE on `(phi, v)` with `v = u o phi`.

use rayon::prelude::*;

use super::{invert_diffeo, EulerOps, FlowMap};
use crate::error::{Error, Result};
use crate::fields::{CubicInterpolator, Extension, GridSpec, ScalarField, VectorField};

fn compose_values(it: &CubicInterpolator, f: &VectorField, map: &FlowMap) -> Result<VectorField> {
    let (xs, ys) = map.node_images();
    let (a, b): (Vec<f64>, Vec<f64>) = xs
        .par_iter()
        .zip(ys.par_iter())
        .map(|(&x, &y)| {
            let v = it.eval_vector(f, x, y);
            (v[0], v[1])
        })
        .unzip();
    let g = *f.grid();
    Ok(VectorField::from_pair(
        ScalarField::new(g, a)?,
        ScalarField::new(g, b)?,
    ))
}

/// `E(phi, v) = (v, (grad Delta^{-1} Q(v o phi^{-1})) o phi)`.
pub fn euler_vectorfield(
    ops: &EulerOps,
    phi: &FlowMap,
    v: &VectorField,
) -> Result<(VectorField, VectorField)> {
    if v.max_abs() == 0.0 {
        return Ok((v.clone(), VectorField::zeros(*v.grid())));
    }
    let it = CubicInterpolator::new(*v.grid(), Extension::Clamp);
    let psi = invert_diffeo(phi)?;
    let u = compose_values(&it, v, &psi)?;
    let e = ops.pressure_gradient(&u)?;
    let e2 = compose_values(&it, &e, phi)?;
    Ok((v.clone(), e2))
}

#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub t: f64,
    pub phi: FlowMap,
    /// `v = u o phi`.
    pub v: VectorField,
}

impl LagrangianState {
    pub fn new(u0: VectorField) -> Self {
        Self {
            t: 0.0,
            phi: FlowMap::identity(*u0.grid()),
            v: u0,
        }
    }

    /// Eulerian velocity `v o phi^{-1}`.
    pub fn velocity(&self) -> Result<VectorField> {
        let it = CubicInterpolator::new(*self.v.grid(), Extension::Clamp);
        compose_values(&it, &self.v, &invert_diffeo(&self.phi)?)
    }
}

/// Classical RK4 on `(phi, v)`.
pub struct LagrangianIntegrator {
    ops: EulerOps,
}

impl LagrangianIntegrator {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            ops: EulerOps::new(grid),
        }
    }

    pub fn ops(&self) -> &EulerOps {
        &self.ops
    }

    fn stage(
        &self,
        s: &LagrangianState,
        k: Option<&(VectorField, VectorField)>,
        c: f64,
    ) -> Result<(VectorField, VectorField)> {
        match k {
            None => euler_vectorfield(&self.ops, &s.phi, &s.v),
            Some((dw, dv)) => {
                let phi = FlowMap::from_displacement(s.phi.displacement().add(&dw.scale(c)))?;
                let v = s.v.add(&dv.scale(c));
                euler_vectorfield(&self.ops, &phi, &v)
            }
        }
    }

    pub fn step(&self, s: &LagrangianState, dt: f64) -> Result<LagrangianState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let k1 = self.stage(s, None, 0.0)?;
        let k2 = self.stage(s, Some(&k1), 0.5 * dt)?;
        let k3 = self.stage(s, Some(&k2), 0.5 * dt)?;
        let k4 = self.stage(s, Some(&k3), dt)?;
        let comb = |a: &VectorField, b: &VectorField, c: &VectorField, d: &VectorField| {
            a.add(&b.scale(2.0))
                .add(&c.scale(2.0))
                .add(d)
                .scale(dt / 6.0)
        };
        let w = s.phi.displacement().add(&comb(&k1.0, &k2.0, &k3.0, &k4.0));
        let v = s.v.add(&comb(&k1.1, &k2.1, &k3.1, &k4.1));
        let phi = FlowMap::from_displacement(w)?;
        phi.check_orientation()?;
        Ok(LagrangianState {
            t: s.t + dt,
            phi,
            v,
        })
    }

    pub fn advance_to(
        &self,
        state: LagrangianState,
        t_target: f64,
        dt: f64,
    ) -> Result<LagrangianState> {
        let mut s = state;
        while s.t < t_target - 1e-12 * t_target.abs().max(1.0) {
            let h = dt.min(t_target - s.t);
            s = self.step(&s, h)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_velocity_gives_zero_field() {
        let g = GridSpec::new(2.0, 32).unwrap();
        let ops = EulerOps::new(g);
        let (a, b) =
            euler_vectorfield(&ops, &FlowMap::identity(g), &VectorField::zeros(g)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn identity_map_gives_pressure_gradient() {
        let g = GridSpec::new(4.0, 96).unwrap();
        let ops = EulerOps::new(g);
        let u = VectorField::from_fn(g, |x, y| {
            let e = (-(x * x + y * y)).exp();
            [2.0 * y * e * x, -2.0 * x * e * x + e]
        });
        let (_, e2) = euler_vectorfield(&ops, &FlowMap::identity(g), &u).unwrap();
        let p = ops.pressure_gradient(&u).unwrap();
        assert!(e2.sub(&p).max_abs() < 1e-10 * p.max_abs());
    }
}
