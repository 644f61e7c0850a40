//! Bicubic (tensor cubic-Lagrange) interpolation on the node grid.

use super::{GridSpec, ScalarField, VectorField};

/// Behaviour for query points outside `[-L, L]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Outside points evaluate to zero (compactly supported data).
    Zero,
    /// Outside points are clamped onto the boundary.
    Clamp,
}

/// Precomputed stencil location and weights for one query point.
#[derive(Debug, Clone, Copy)]
pub struct CubicStencil {
    bx: usize,
    by: usize,
    wx: [f64; 4],
    wy: [f64; 4],
}

fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at 0, 1, 2, 3
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Cubic interpolator over a uniform grid.
#[derive(Debug, Clone, Copy)]
pub struct CubicInterpolator {
    grid: GridSpec,
    extension: Extension,
}

impl CubicInterpolator {
    pub fn new(grid: GridSpec, extension: Extension) -> Self {
        Self { grid, extension }
    }

    fn axis(&self, x: f64) -> Option<(usize, [f64; 4])> {
        let n = self.grid.n();
        let mut t = (x + self.grid.extent()) / self.grid.h();
        let last = (n - 1) as f64;
        if !(0.0..=last).contains(&t) {
            match self.extension {
                Extension::Zero => return None,
                Extension::Clamp => t = t.clamp(0.0, last),
            }
        }
        let i = (t.floor() as usize).min(n - 2);
        let base = i.saturating_sub(1).min(n - 4);
        Some((base, lagrange4(t - base as f64)))
    }

    pub fn stencil(&self, x: f64, y: f64) -> Option<CubicStencil> {
        let (bx, wx) = self.axis(x)?;
        let (by, wy) = self.axis(y)?;
        Some(CubicStencil { bx, by, wx, wy })
    }

    #[inline]
    pub fn apply(&self, s: &CubicStencil, values: &[f64]) -> f64 {
        let n = self.grid.n();
        let mut acc = 0.0;
        for (j, wyj) in s.wy.iter().enumerate() {
            let row = &values[(s.by + j) * n + s.bx..(s.by + j) * n + s.bx + 4];
            let r = s.wx[0] * row[0] + s.wx[1] * row[1] + s.wx[2] * row[2] + s.wx[3] * row[3];
            acc += wyj * r;
        }
        acc
    }

    pub fn eval(&self, f: &ScalarField, x: f64, y: f64) -> f64 {
        debug_assert_eq!(*f.grid(), self.grid);
        match self.stencil(x, y) {
            Some(s) => self.apply(&s, f.values()),
            None => 0.0,
        }
    }

    pub fn eval_vector(&self, u: &VectorField, x: f64, y: f64) -> [f64; 2] {
        match self.stencil(x, y) {
            Some(s) => [
                self.apply(&s, u.component(0).values()),
                self.apply(&s, u.component(1).values()),
            ],
            None => [0.0, 0.0],
        }
    }

    /// Samples `f` at the points `(xs[i], ys[i])`.
    pub fn resample(&self, f: &ScalarField, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| self.eval(f, x, y))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_bicubic_polynomials() {
        let g = GridSpec::new(2.0, 20).unwrap();
        let p = |x: f64, y: f64| 1.0 + x - x.powi(3) * y.powi(2) + 0.5 * y.powi(3) * x;
        let f = ScalarField::from_fn(g, p);
        let it = CubicInterpolator::new(g, Extension::Zero);
        for &(x, y) in &[(0.013, -0.4), (1.99, 1.9), (-2.0, -2.0), (-1.95, 0.77)] {
            assert!((it.eval(&f, x, y) - p(x, y)).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_extension_outside() {
        let g = GridSpec::new(1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |_, _| 1.0);
        let zero = CubicInterpolator::new(g, Extension::Zero);
        let clamp = CubicInterpolator::new(g, Extension::Clamp);
        assert_eq!(zero.eval(&f, 1.5, 0.0), 0.0);
        assert!((clamp.eval(&f, 1.5, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_interpolated_exactly() {
        let g = GridSpec::new(1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y.exp());
        let it = CubicInterpolator::new(g, Extension::Zero);
        for idx in [0, 17, 100, 255] {
            let (x, y) = g.point(idx);
            assert!((it.eval(&f, x, y) - f.values()[idx]).abs() < 1e-13);
        }
    }
}
