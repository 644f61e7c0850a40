//! Initial growth rate of a far-field coefficient against `C_{k'} M_{k'}^j`.

use serde::{Deserialize, Serialize};

use super::coefficients::{coefficient_from_vorticity, coefficient_scale};
use super::moments::moment;
use crate::error::{Error, Result};
use crate::euler2d::{SemiLagrangian, StepOptions};
use crate::fields::{ScalarField, VectorField};
use crate::harmonics::HarmonicMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub kprime: usize,
    pub l: usize,
    pub j: usize,
    pub dts: Vec<f64>,
    /// Difference quotients `(a(dt) - a(0)) / dt`.
    pub quotients: Vec<f64>,
    pub extrapolated: f64,
    /// Direct-route moment `M_{k'}^j(u_0)`.
    pub moment: f64,
    /// `C_{k'} |M|`.
    pub expected_magnitude: f64,
    /// `+1` if the slope has the sign of `C_{k'} M`, `-1` if the opposite;
    /// `None` when inconclusive.
    pub sign: Option<i8>,
    /// `| |slope| - C |M| | / (C |M|)`.
    pub relative_mismatch: Option<f64>,
    pub noise_floor: f64,
    pub conclusive: bool,
}

/// Value at `h = 0` of the polynomial through `(h_i, d_i)` (Neville).
pub fn richardson_limit(h: &[f64], d: &[f64]) -> Result<f64> {
    if h.is_empty() || h.len() != d.len() {
        return Err(Error::InvalidParameter(
            "need matching, non-empty step and value lists".into(),
        ));
    }
    let mut p = d.to_vec();
    let n = h.len();
    for m in 1..n {
        for i in 0..n - m {
            let den = h[i + m] - h[i];
            if den == 0.0 {
                return Err(Error::InvalidParameter("repeated step size".into()));
            }
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / den;
        }
    }
    Ok(p[0])
}

/// Difference quotients of the coefficient from single semi-Lagrangian steps
/// of each size in `dts`, extrapolated to `dt -> 0`.
pub fn initial_slope_check(
    omega0: &ScalarField,
    u0: &VectorField,
    mode: &HarmonicMode,
    j: usize,
    dts: &[f64],
    options: StepOptions,
) -> Result<SlopeReport> {
    let grid = *omega0.grid();
    let mut dts = dts.to_vec();
    dts.sort_by(|a, b| b.total_cmp(a));
    let a0 = coefficient_from_vorticity(omega0, mode, j)?;
    let floor = a0
        .abs()
        .max(64.0 * f64::EPSILON * coefficient_scale(omega0, mode, j));
    let mut quotients = Vec::with_capacity(dts.len());
    let mut smallest_change = f64::INFINITY;
    for &dt in &dts {
        let mut run = SemiLagrangian::new(grid, options);
        let s0 = run.initial_state(omega0.clone())?;
        let s1 = run.step(&s0, dt)?;
        let a1 = coefficient_from_vorticity(&s1.omega, mode, j)?;
        smallest_change = smallest_change.min((a1 - a0).abs());
        quotients.push((a1 - a0) / dt);
    }
    let extrapolated = richardson_limit(&dts, &quotients)?;
    let m = moment(u0, mode, j, None)?.direct;
    let c = mode.coefficient_constant().unwrap_or(0.0);
    let expected = c * m.abs();
    let conclusive = smallest_change > 10.0 * floor && expected > 0.0;
    let (sign, mismatch) = if conclusive {
        let s = if extrapolated * c * m > 0.0 { 1 } else { -1 };
        (
            Some(s),
            Some((extrapolated.abs() - expected).abs() / expected),
        )
    } else {
        (None, None)
    };
    Ok(SlopeReport {
        kprime: mode.kprime(),
        l: mode.l(),
        j,
        dts,
        quotients,
        extrapolated,
        moment: m,
        expected_magnitude: expected,
        sign,
        relative_mismatch: mismatch,
        noise_floor: floor,
        conclusive,
    })
}
