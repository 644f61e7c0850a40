//! Radial profiles and the per-harmonic radial Green's function in `d = 3`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{modes_of_degree, SphereQuadrature};

/// Samples `g(r_i)` on a strictly increasing positive radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    r: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() || r.len() < 3 {
            return Err(Error::InvalidParameter(
                "radial grid needs >= 3 matching samples".into(),
            ));
        }
        if !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "radial grid must be positive and increasing".into(),
            ));
        }
        Ok(Self { r, values })
    }

    /// `n` logarithmically spaced radii in `[r_min, r_max]`.
    pub fn log_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
        let (a, b) = (r_min.ln(), r_max.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    pub fn from_fn(r: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = r.iter().map(|&s| f(s)).collect();
        Self::new(r, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `int s^power g(s) ds` over the grid (trapezoid in `log s`).
    pub fn moment(&self, power: f64) -> f64 {
        let f: Vec<f64> = self
            .r
            .iter()
            .zip(&self.values)
            .map(|(s, g)| s.powf(power + 1.0) * g)
            .collect();
        let mut acc = 0.0;
        for i in 1..f.len() {
            acc += 0.5 * (f[i] + f[i - 1]) * (self.r[i] / self.r[i - 1]).ln();
        }
        acc
    }

    /// Cumulative `int_{r_0}^{r_i} s^power g ds` at every node.
    fn cumulative(&self, power: f64) -> Vec<f64> {
        let f: Vec<f64> = self
            .r
            .iter()
            .zip(&self.values)
            .map(|(s, g)| s.powf(power + 1.0) * g)
            .collect();
        let mut out = vec![0.0; f.len()];
        for i in 1..f.len() {
            out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * (self.r[i] / self.r[i - 1]).ln();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            r: self.r.clone(),
            values,
        }
    }

    /// Slope of `log |g|` against `log r` over radii in `[a, b]`.
    pub fn decay_exponent(&self, a: f64, b: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .r
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s >= a && **s <= b)
            .map(|(s, g)| (s.ln(), g.abs().ln()))
            .collect();
        if pts.len() < 2 || pts.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::UndefinedExponent);
        }
        Ok(crate::fields::norm::linear_slope(&pts))
    }
}

/// Solution `u_{k'}` of `u'' + 2u'/r - k'(k'+1) u / r^2 = g` that is regular at
/// the origin and decays at infinity.
pub fn solve_radial(g: &RadialProfile, kprime: usize) -> RadialProfile {
    let k = kprime as f64;
    let inner = g.cumulative(k + 2.0);
    let outer_cum = g.cumulative(1.0 - k);
    let total = *outer_cum.last().unwrap();
    let values = g
        .r
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            -(r.powf(-(k + 1.0)) * inner[i] + r.powf(k) * (total - outer_cum[i])) / (2.0 * k + 1.0)
        })
        .collect();
    RadialProfile {
        r: g.r.clone(),
        values,
    }
}

/// Source in `R^3` given pointwise, sampled on a radial grid.
pub struct SpatialSource<'a> {
    f: &'a (dyn Fn(&[f64; 3]) -> f64 + Sync),
    radii: Vec<f64>,
    quadrature: SphereQuadrature,
}

impl<'a> SpatialSource<'a> {
    pub fn new(f: &'a (dyn Fn(&[f64; 3]) -> f64 + Sync), radii: Vec<f64>) -> Result<Self> {
        RadialProfile::new(radii.clone(), vec![0.0; radii.len()])?;
        Ok(Self {
            f,
            radii,
            quadrature: SphereQuadrature::default_for(3),
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        (self.f)(x)
    }

    /// Projections `g_{k';l}(r) = int_{S^2} g(r theta) h_{k';l}(theta)` for all `l`.
    pub fn project(&self, kprime: usize) -> Result<Vec<RadialProfile>> {
        let modes = modes_of_degree(3, kprime)?;
        let q = &self.quadrature;
        let basis: Vec<Vec<f64>> = modes
            .iter()
            .map(|m| {
                q.points
                    .iter()
                    .zip(&q.weights)
                    .map(|(p, w)| w * m.eval_sphere(p))
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<f64>> = self
            .radii
            .par_iter()
            .map(|&r| {
                let samples: Vec<f64> = q
                    .points
                    .iter()
                    .map(|p| (self.f)(&[r * p[0], r * p[1], r * p[2]]))
                    .collect();
                basis
                    .iter()
                    .map(|b| b.iter().zip(&samples).map(|(w, s)| w * s).sum())
                    .collect()
            })
            .collect();
        (0..modes.len())
            .map(|l| {
                RadialProfile::new(self.radii.clone(), rows.iter().map(|row| row[l]).collect())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(r: f64) -> f64 {
        if r <= 1.0 || r >= 2.0 {
            0.0
        } else {
            let s = 2.0 * r - 3.0;
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    /// Second-order finite-difference BVP for the same ODE on a uniform grid.
    fn bvp_oracle(g: impl Fn(f64) -> f64, kprime: usize, r_max: f64, n: usize) -> Vec<(f64, f64)> {
        let lam = (kprime * (kprime + 1)) as f64;
        let h = r_max / n as f64;
        // unknowns at r_i = i h, i = 1..n-1; u(0) regular, u(r_max) from the decaying tail
        let m = n - 1;
        let (mut a, mut b, mut c, mut d) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 0..m {
            let r = (i + 1) as f64 * h;
            a[i] = 1.0 / (h * h) - 1.0 / (r * h);
            b[i] = -2.0 / (h * h) - lam / (r * r);
            c[i] = 1.0 / (h * h) + 1.0 / (r * h);
            d[i] = g(r);
        }
        // Robin condition u' = -(k'+1) u / r at r_max absorbed via a ghost relation
        let rb = r_max;
        let ratio = 1.0 / (1.0 + (kprime as f64 + 1.0) * h / rb);
        b[m - 1] += c[m - 1] * ratio;
        c[m - 1] = 0.0;
        for i in 1..m {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut u = vec![0.0; m];
        u[m - 1] = d[m - 1] / b[m - 1];
        for i in (0..m - 1).rev() {
            u[i] = (d[i] - c[i] * u[i + 1]) / b[i];
        }
        (0..m).map(|i| ((i + 1) as f64 * h, u[i])).collect()
    }

    #[test]
    fn green_function_matches_bvp() {
        for kprime in [0usize, 2] {
            let r = RadialProfile::log_grid(1e-3, 50.0, 4000);
            let g = RadialProfile::from_fn(r, bump).unwrap();
            let u = solve_radial(&g, kprime);
            let oracle = bvp_oracle(bump, kprime, 50.0, 20000);
            let h = 50.0 / 20000.0;
            for &target in &[0.5, 1.5, 3.0, 10.0] {
                let idx = u.radii().partition_point(|&r| r < target);
                let r = u.radii()[idx];
                let j = (r / h).floor() as usize - 1;
                let t = (r - oracle[j].0) / h;
                let want = oracle[j].1 * (1.0 - t) + oracle[j + 1].1 * t;
                let got = u.values()[idx];
                assert!(
                    (got - want).abs() < 2e-3 * want.abs(),
                    "k'={kprime} r={r}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn projection_of_zonal_source() {
        let y20 = crate::harmonics::mode(3, 2, 1).unwrap();
        let f = move |x: &[f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            y20.eval_poly(x) * bump(r)
        };
        let src = SpatialSource::new(&f, RadialProfile::log_grid(0.5, 3.0, 64)).unwrap();
        let p2 = src.project(2).unwrap();
        let p1 = src.project(1).unwrap();
        for (i, &r) in src.radii().iter().enumerate() {
            assert!((p2[0].values()[i] - r * r * bump(r)).abs() < 1e-12);
            assert!(p2[1..5].iter().all(|p| p.values()[i].abs() < 1e-12));
            assert!(p1.iter().all(|p| p.values()[i].abs() < 1e-12));
        }
    }
}
