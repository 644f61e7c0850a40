//! Grid-sampled fields on the square `[-L, L]^2`, finite differences,
//! interpolation, weighted norms and decay-rate estimates.

mod fd;
mod interp;
pub mod io;
pub(crate) mod norm;

pub use fd::{
    curl, derivative, divergence, fornberg_weights, gradient, laplacian, partial, perp_gradient,
    Axis,
};
pub use interp::{CubicInterpolator, Extension};
pub use norm::{decay_exponent, shell_rms, weighted_norm, WeightSpec, WeightedNorm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor grid with `n` nodes per axis spanning `[-extent, extent]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    extent: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(extent: f64, n: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {extent}"
            )));
        }
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 16, got {n}"
            )));
        }
        Ok(Self { extent, n })
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.extent
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing `2L / (n - 1)`.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.extent / (self.n - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.h()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index: `ix` runs along x, `iy` along y.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.coord(idx % self.n), self.coord(idx / self.n))
    }

    /// Trapezoid weight of node `idx` (half weights on edges, quarter on corners).
    #[inline]
    pub fn trapezoid_weight(&self, idx: usize) -> f64 {
        let h = self.h();
        let edge = |i: usize| if i == 0 || i + 1 == self.n { 0.5 } else { 1.0 };
        edge(idx % self.n) * edge(idx / self.n) * h * h
    }

    /// Max-norm distance (in rings) of node `idx` from the boundary.
    #[inline]
    pub fn ring(&self, idx: usize) -> usize {
        let (ix, iy) = (idx % self.n, idx / self.n);
        ix.min(iy).min(self.n - 1 - ix).min(self.n - 1 - iy)
    }
}

/// Real samples on a [`GridSpec`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.point(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn check_finite(&self) -> Result<()> {
        let count = self.values.iter().filter(|v| !v.is_finite()).count();
        if count > 0 {
            return Err(Error::NonFinite {
                count,
                total: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with a second field on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Pointwise multiplication by a function of position.
    pub fn mul_fn(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                let (x, y) = self.grid.point(idx);
                v * f(x, y)
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoid quadrature over the grid.
    pub fn integrate(&self) -> f64 {
        compensated_sum(
            self.values
                .iter()
                .enumerate()
                .map(|(idx, &v)| v * self.grid.trapezoid_weight(idx)),
        )
    }

    /// Trapezoid quadrature of `self * f(x, y)`.
    pub fn integrate_against(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        compensated_sum(self.values.iter().enumerate().map(|(idx, &v)| {
            if v == 0.0 {
                return 0.0;
            }
            let (x, y) = self.grid.point(idx);
            v * f(x, y) * self.grid.trapezoid_weight(idx)
        }))
    }

    pub fn l2_norm(&self) -> f64 {
        self.map(|v| v * v).integrate().sqrt()
    }

    /// L2 norm restricted to nodes with `|x|_inf <= fraction * L`.
    pub fn l2_norm_inner(&self, fraction: f64) -> f64 {
        let lim = fraction * self.grid.extent() * (1.0 + 1e-12);
        compensated_sum(self.values.iter().enumerate().map(|(idx, &v)| {
            let (x, y) = self.grid.point(idx);
            if x.abs() <= lim && y.abs() <= lim {
                v * v * self.grid.trapezoid_weight(idx)
            } else {
                0.0
            }
        }))
        .sqrt()
    }
}

/// A `d`-component vector field whose components share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidParameter(
                "vector field needs a component".into(),
            ));
        };
        let grid = *first.grid();
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::InvalidGrid(
                "components live on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn from_pair(u: ScalarField, v: ScalarField) -> Self {
        assert_eq!(u.grid(), v.grid(), "components live on different grids");
        Self {
            components: vec![u, v],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_pair(ScalarField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let u = ScalarField::from_fn(grid, |x, y| f(x, y)[0]);
        let v = ScalarField::from_fn(grid, |x, y| f(x, y)[1]);
        Self::from_pair(u, v)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b));
        Self {
            components: components.collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b));
        Self {
            components: components.collect(),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        self.components
            .iter()
            .try_for_each(ScalarField::check_finite)
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = *self.grid();
        let values = (0..grid.len())
            .map(|idx| {
                self.components
                    .iter()
                    .map(|c| c.values()[idx].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm_inner(&self, fraction: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm_inner(fraction).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Smooth cutoff: 0 for `rho <= 1`, 1 for `rho >= 2`, `C^inf` in between.
pub fn eval_chi(rho: f64) -> f64 {
    fn bump_primitive(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    let a = bump_primitive(rho - 1.0);
    let b = bump_primitive(2.0 - rho);
    if a + b == 0.0 {
        // only reachable through NaN input
        return f64::NAN;
    }
    a / (a + b)
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
