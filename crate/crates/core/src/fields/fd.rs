//! Fourth-order finite differences on the uniform grid.
//!
//! Interior nodes use central stencils; the outermost rings fall back to
//! shifted (one-sided) windows of the same width.

use super::{ScalarField, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// nodes `xs` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let m = order;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Stencil tables for one derivative order on an `n`-point line.
struct Stencil {
    half: usize,
    /// `windows[s]` holds weights for a window starting `s` nodes left of the
    /// evaluation point, `s` in `0..=2*half`.
    windows: Vec<Vec<f64>>,
}

impl Stencil {
    fn new(order: usize, h: f64) -> Self {
        let half = if order <= 2 { 2 } else { 3 };
        let width = 2 * half + 1;
        let scale = h.powi(order as i32);
        let windows = (0..width)
            .map(|shift| {
                let xs: Vec<f64> = (0..width).map(|k| k as f64 - shift as f64).collect();
                fornberg_weights(0.0, &xs, order)
                    .into_iter()
                    .map(|w| w / scale)
                    .collect()
            })
            .collect();
        Self { half, windows }
    }

    /// Applies the stencil along a strided line.
    fn apply(&self, line: impl Fn(usize) -> f64, n: usize, out: &mut impl FnMut(usize, f64)) {
        let width = 2 * self.half + 1;
        for i in 0..n {
            let start = if i < self.half {
                0
            } else if i + self.half >= n {
                n - width
            } else {
                i - self.half
            };
            let w = &self.windows[i - start];
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * line(start + k);
            }
            out(i, acc);
        }
    }
}

/// `order`-th derivative along `axis` (order 0..=4).
pub fn derivative(f: &ScalarField, axis: Axis, order: usize) -> Result<ScalarField> {
    if order == 0 {
        return Ok(f.clone());
    }
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    let grid = *f.grid();
    let n = grid.n();
    let st = Stencil::new(order, grid.h());
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    match axis {
        Axis::X => {
            for iy in 0..n {
                let row = &v[iy * n..(iy + 1) * n];
                st.apply(|i| row[i], n, &mut |i, val| out[iy * n + i] = val);
            }
        }
        Axis::Y => {
            for ix in 0..n {
                st.apply(|i| v[i * n + ix], n, &mut |i, val| out[i * n + ix] = val);
            }
        }
    }
    ScalarField::new(grid, out)
}

/// Mixed partial `d^a/dx^a d^b/dy^b`.
pub fn partial(f: &ScalarField, a: usize, b: usize) -> Result<ScalarField> {
    let fx = derivative(f, Axis::X, a)?;
    derivative(&fx, Axis::Y, b)
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    Ok(VectorField::from_pair(
        derivative(f, Axis::X, 1)?,
        derivative(f, Axis::Y, 1)?,
    ))
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    Ok(derivative(f, Axis::X, 2)?.add(&derivative(f, Axis::Y, 2)?))
}

pub fn divergence(u: &VectorField) -> Result<ScalarField> {
    Ok(derivative(u.component(0), Axis::X, 1)?.add(&derivative(u.component(1), Axis::Y, 1)?))
}

/// Scalar curl `d_x u_2 - d_y u_1`.
pub fn curl(u: &VectorField) -> Result<ScalarField> {
    Ok(derivative(u.component(1), Axis::X, 1)?.sub(&derivative(u.component(0), Axis::Y, 1)?))
}

/// Perpendicular gradient `(-d_y f, d_x f)`.
pub fn perp_gradient(f: &ScalarField) -> Result<VectorField> {
    Ok(VectorField::from_pair(
        derivative(f, Axis::Y, 1)?.scale(-1.0),
        derivative(f, Axis::X, 1)?,
    ))
}
