use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fd::partial;
use super::interp::{CubicInterpolator, Extension};
use super::{compensated_sum, ScalarField, VectorField};
use crate::error::{Error, Result};

/// Parameters `(m, p, delta)` of the weighted Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub m: usize,
    pub p: f64,
    pub delta: f64,
}

impl WeightSpec {
    pub fn new(m: usize, p: f64, delta: f64) -> Result<Self> {
        if m > 4 {
            return Err(Error::UnsupportedOrder(m));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (1, inf), got {p}"
            )));
        }
        Ok(Self { m, p, delta })
    }
}

/// Result of [`weighted_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub value: f64,
    /// Largest fraction (over multi-indices) of the `p`-th power integral
    /// contributed by the outer tenth of the quadrature box.
    pub truncation: f64,
}

/// Anything that exposes grid components.
pub trait FieldLike {
    fn parts(&self) -> &[ScalarField];
}

impl FieldLike for ScalarField {
    fn parts(&self) -> &[ScalarField] {
        std::slice::from_ref(self)
    }
}

impl FieldLike for VectorField {
    fn parts(&self) -> &[ScalarField] {
        self.components()
    }
}

/// `sum_{|alpha|<=m} || <x>^{delta+|alpha|} d^alpha f ||_{L^p}` on the grid.
///
/// The outermost two rings (three for third and fourth derivatives) are
/// excluded because they carry one-sided stencils.
pub fn weighted_norm(f: &impl FieldLike, w: WeightSpec) -> Result<WeightedNorm> {
    let parts = f.parts();
    for c in parts {
        c.check_finite()?;
    }
    if w.m > 4 {
        return Err(Error::UnsupportedOrder(w.m));
    }
    let grid = *parts[0].grid();
    let h2 = grid.h() * grid.h();
    let mut value = 0.0;
    let mut truncation = 0.0_f64;
    for order in 0..=w.m {
        let skip = if order >= 3 { 3 } else { 2 };
        let inner = grid.extent() - skip as f64 * grid.h();
        let band = 0.9 * inner;
        for a in 0..=order {
            let derivs: Vec<ScalarField> = parts
                .iter()
                .map(|c| partial(c, a, order - a))
                .collect::<Result<_>>()?;
            let mut total = Vec::with_capacity(grid.len());
            let mut outer = Vec::new();
            for idx in 0..grid.len() {
                if grid.ring(idx) < skip {
                    continue;
                }
                let (x, y) = grid.point(idx);
                let bracket = (1.0 + x * x + y * y).sqrt();
                let mag = derivs
                    .iter()
                    .map(|d| d.values()[idx].powi(2))
                    .sum::<f64>()
                    .sqrt();
                let term = (bracket.powf(w.delta + order as f64) * mag).powf(w.p) * h2;
                total.push(term);
                if x.abs().max(y.abs()) >= band {
                    outer.push(term);
                }
            }
            let total = compensated_sum(total);
            let outer = compensated_sum(outer);
            value += total.powf(1.0 / w.p);
            if total > 0.0 {
                truncation = truncation.max(outer / total);
            }
        }
    }
    Ok(WeightedNorm { value, truncation })
}

/// Root-mean-square of `f` over the circle of radius `r`.
pub fn shell_rms(f: &ScalarField, r: f64, n_theta: usize) -> f64 {
    let it = CubicInterpolator::new(*f.grid(), Extension::Zero);
    let mean_sq = (0..n_theta)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n_theta as f64;
            it.eval(f, r * th.cos(), r * th.sin()).powi(2)
        })
        .sum::<f64>()
        / n_theta as f64;
    mean_sq.sqrt()
}

/// Least-squares slope of `log |d^alpha f|` against `log r` over shells in
/// `[L/2, 0.9 L]`.
pub fn decay_exponent(f: &ScalarField, alpha: (usize, usize)) -> Result<f64> {
    let order = alpha.0 + alpha.1;
    if order > 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    f.check_finite()?;
    let g = partial(f, alpha.0, alpha.1)?;
    let l = f.grid().extent();
    let shells = 16;
    let n_theta = 256;
    let mut pts = Vec::with_capacity(shells);
    for i in 0..shells {
        let r = l * (0.5 + 0.4 * i as f64 / (shells - 1) as f64);
        let rms = shell_rms(&g, r, n_theta);
        if !(rms > f64::MIN_POSITIVE) {
            return Err(Error::UndefinedExponent);
        }
        pts.push((r.ln(), rms.ln()));
    }
    Ok(linear_slope(&pts))
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{eval_chi, GridSpec};

    fn bracket_power(grid: GridSpec, beta: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| (1.0 + x * x + y * y).powf(-beta / 2.0))
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = GridSpec::new(3.0, 32).unwrap();
        let w = WeightSpec::new(3, 2.0, 0.7).unwrap();
        let n = weighted_norm(&ScalarField::zeros(g), w).unwrap();
        assert_eq!(n.value, 0.0);
    }

    #[test]
    fn order_limit_and_non_finite() {
        assert!(WeightSpec::new(5, 2.0, 0.0).is_err());
        let g = GridSpec::new(3.0, 32).unwrap();
        let mut f = ScalarField::zeros(g);
        f.values_mut()[40] = f64::INFINITY;
        let w = WeightSpec::new(0, 2.0, 0.0).unwrap();
        assert!(matches!(weighted_norm(&f, w), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn decay_of_bracket_power() {
        let g = GridSpec::new(40.0, 256).unwrap();
        let f = bracket_power(g, 2.0);
        let e0 = decay_exponent(&f, (0, 0)).unwrap();
        assert!((e0 + 2.0).abs() < 0.05, "{e0}");
        let e1 = decay_exponent(&f, (1, 0)).unwrap();
        assert!((e1 + 3.0).abs() < 0.1, "{e1}");
    }

    #[test]
    fn decay_of_homogeneous_tail() {
        let g = GridSpec::new(30.0, 256).unwrap();
        let f = ScalarField::from_fn(g, |x, y| {
            let r = (x * x + y * y).sqrt();
            eval_chi(r) * (3.0 * y.atan2(x)).cos() / r.powi(3)
        });
        let e = decay_exponent(&f, (0, 0)).unwrap();
        assert!((e + 3.0).abs() < 0.05, "{e}");
    }

    #[test]
    fn vanishing_shells_are_an_error() {
        let g = GridSpec::new(10.0, 64).unwrap();
        let f = ScalarField::from_fn(g, |x, y| if x * x + y * y < 4.0 { 1.0 } else { 0.0 });
        assert!(matches!(
            decay_exponent(&f, (0, 0)),
            Err(Error::UndefinedExponent)
        ));
    }
}
