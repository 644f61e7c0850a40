//! Near-identity diffeomorphisms `phi = id + w` sampled on the node grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{
    derivative, Axis, CubicInterpolator, Extension, GridSpec, ScalarField, VectorField,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    w: VectorField,
}

impl FlowMap {
    pub fn identity(grid: GridSpec) -> Self {
        Self {
            w: VectorField::zeros(grid),
        }
    }

    pub fn from_displacement(w: VectorField) -> Result<Self> {
        if w.dim() != 2 {
            return Err(Error::UnsupportedDimension(w.dim()));
        }
        w.check_finite()?;
        Ok(Self { w })
    }

    pub fn grid(&self) -> &GridSpec {
        self.w.grid()
    }

    pub fn displacement(&self) -> &VectorField {
        &self.w
    }

    /// `phi(x, y)`; the displacement is clamped outside the grid.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let it = CubicInterpolator::new(*self.grid(), Extension::Clamp);
        let d = it.eval_vector(&self.w, x, y);
        [x + d[0], y + d[1]]
    }

    /// Images of all nodes.
    pub fn node_images(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid();
        (0..g.len())
            .map(|i| {
                let (x, y) = g.point(i);
                (
                    x + self.w.component(0).values()[i],
                    y + self.w.component(1).values()[i],
                )
            })
            .unzip()
    }

    /// Entries `(d1 phi1, d2 phi1, d1 phi2, d2 phi2)` of `d phi`.
    pub fn jacobian(&self) -> Result<[ScalarField; 4]> {
        let (w1, w2) = (self.w.component(0), self.w.component(1));
        Ok([
            derivative(w1, Axis::X, 1)?.map(|v| v + 1.0),
            derivative(w1, Axis::Y, 1)?,
            derivative(w2, Axis::X, 1)?,
            derivative(w2, Axis::Y, 1)?.map(|v| v + 1.0),
        ])
    }

    pub fn determinant(&self) -> Result<ScalarField> {
        let [a, b, c, d] = self.jacobian()?;
        let v = (0..a.values().len())
            .map(|i| a.values()[i] * d.values()[i] - b.values()[i] * c.values()[i])
            .collect();
        ScalarField::new(*self.grid(), v)
    }

    /// `sup |det d phi - 1|` over nodes at least two rings inside the boundary.
    pub fn max_volume_defect(&self) -> Result<f64> {
        let det = self.determinant()?;
        let g = self.grid();
        Ok((0..g.len())
            .filter(|&i| g.ring(i) >= 2)
            .fold(0.0_f64, |m, i| m.max((det.values()[i] - 1.0).abs())))
    }

    /// Errors unless `det d phi > 0` at every node.
    pub fn check_orientation(&self) -> Result<()> {
        let det = self.determinant()?;
        let g = self.grid();
        for i in 0..g.len() {
            let v = det.values()[i];
            if !(v > 0.0) {
                let (x, y) = g.point(i);
                return Err(Error::NotDiffeomorphism { det: v, x, y });
            }
        }
        Ok(())
    }
}

/// `phi o psi`, sampled on the nodes of `psi`.
pub fn compose_diffeo(phi: &FlowMap, psi: &FlowMap) -> Result<FlowMap> {
    if phi.grid() != psi.grid() {
        return Err(Error::InvalidGrid("maps live on different grids".into()));
    }
    let grid = *psi.grid();
    let it = CubicInterpolator::new(grid, Extension::Clamp);
    let (xs, ys) = psi.node_images();
    let pairs: Vec<[f64; 2]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let d = it.eval_vector(phi.displacement(), xs[i], ys[i]);
            let (x, y) = grid.point(i);
            [xs[i] - x + d[0], ys[i] - y + d[1]]
        })
        .collect();
    FlowMap::from_displacement(split(grid, pairs)?)
}

fn split(grid: GridSpec, pairs: Vec<[f64; 2]>) -> Result<VectorField> {
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().map(|p| (p[0], p[1])).unzip();
    Ok(VectorField::from_pair(
        ScalarField::new(grid, a)?,
        ScalarField::new(grid, b)?,
    ))
}

/// Tolerance and iteration cap of [`invert_diffeo`].
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 500,
        }
    }
}

/// `phi^{-1}` by the damped fixed point `y <- y + lambda (x - phi(y))`.
/// The tolerance is relative to the extent.
pub fn invert_diffeo(phi: &FlowMap) -> Result<FlowMap> {
    invert_diffeo_with(phi, InversionOptions::default())
}

pub fn invert_diffeo_with(phi: &FlowMap, opts: InversionOptions) -> Result<FlowMap> {
    phi.check_orientation()?;
    let grid = *phi.grid();
    let it = CubicInterpolator::new(grid, Extension::Clamp);
    let tol = opts.tolerance * grid.extent();
    let w = phi.displacement();
    let solved: Vec<std::result::Result<[f64; 2], (f64, usize)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = grid.point(i);
            let mut lambda = 1.0;
            let mut p = [
                x - w.component(0).values()[i],
                y - w.component(1).values()[i],
            ];
            let mut last = f64::INFINITY;
            for iter in 0..opts.max_iterations {
                let d = it.eval_vector(w, p[0], p[1]);
                let r = [x - p[0] - d[0], y - p[1] - d[1]];
                let res = r[0].hypot(r[1]);
                if res <= tol {
                    return Ok(p);
                }
                if res > last {
                    lambda *= 0.5;
                    if lambda < 1e-3 {
                        return Err((res, iter));
                    }
                }
                last = res;
                p = [p[0] + lambda * r[0], p[1] + lambda * r[1]];
            }
            Err((last, opts.max_iterations))
        })
        .collect();
    let mut pairs = Vec::with_capacity(grid.len());
    for (i, s) in solved.into_iter().enumerate() {
        match s {
            Ok(p) => {
                let (x, y) = grid.point(i);
                pairs.push([p[0] - x, p[1] - y]);
            }
            Err((residual, iterations)) => {
                return Err(Error::InversionFailed {
                    residual,
                    iterations,
                });
            }
        }
    }
    FlowMap::from_displacement(split(grid, pairs)?)
}

/// `sup |phi(phi_inv(x)) - x|` over the nodes.
pub fn roundtrip_error(phi: &FlowMap, phi_inv: &FlowMap) -> f64 {
    let grid = *phi.grid();
    let (xs, ys) = phi_inv.node_images();
    (0..grid.len())
        .map(|i| {
            let p = phi.eval(xs[i], ys[i]);
            let (x, y) = grid.point(i);
            (p[0] - x).hypot(p[1] - y)
        })
        .fold(0.0, f64::max)
}
