//! Far-field velocity coefficients `a_{k';l}^j(t)` from the vorticity, in
//! the Eulerian and the Lagrangian frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler2d::FlowMap;
use crate::fields::{derivative, Axis, ScalarField};
use crate::harmonics::{HarmonicMode, Polynomial};

/// Samples below this fraction of `max|omega|` are dropped from moment
/// quadratures.
pub const TAIL_THRESHOLD: f64 = 1e-12;

fn check_args(omega: &ScalarField, mode: &HarmonicMode, j: usize) -> Result<()> {
    if mode.d() != 2 {
        return Err(Error::UnsupportedDimension(mode.d()));
    }
    if !(j == 1 || j == 2) {
        return Err(Error::InvalidParameter(format!(
            "component index {j} out of range"
        )));
    }
    omega.check_finite()?;
    let g = omega.grid();
    let peak = omega.max_abs();
    let edge = (0..g.len())
        .filter(|&i| g.ring(i) < 2)
        .fold(0.0_f64, |m, i| m.max(omega.values()[i].abs()));
    if edge > TAIL_THRESHOLD * peak {
        return Err(Error::InsufficientDecay(format!(
            "vorticity reaches {:.2e} of its peak on the boundary; k' = {} needs compact support",
            edge / peak,
            mode.kprime()
        )));
    }
    Ok(())
}

/// `(grad^perp H)_j` as a polynomial.
pub fn perp_gradient_component(mode: &HarmonicMode, j: usize) -> Polynomial {
    if j == 1 {
        mode.gradient()[1].scale(-1.0)
    } else {
        mode.gradient()[0].clone()
    }
}

fn constant(mode: &HarmonicMode) -> f64 {
    // d = 2, k' = 0: grad H vanishes, so the value of C is immaterial.
    mode.coefficient_constant().unwrap_or(0.0)
}

fn truncated(omega: &ScalarField) -> ScalarField {
    let cut = TAIL_THRESHOLD * omega.max_abs();
    omega.map(|v| if v.abs() < cut { 0.0 } else { v })
}

/// `C_{k'} int (grad^perp H_{k';l})_j omega dx`, the Stokes form.
pub fn coefficient_from_vorticity(
    omega: &ScalarField,
    mode: &HarmonicMode,
    j: usize,
) -> Result<f64> {
    check_args(omega, mode, j)?;
    let p = perp_gradient_component(mode, j);
    if p.is_zero() {
        return Ok(0.0);
    }
    Ok(constant(mode) * truncated(omega).integrate_against(|x, y| p.eval(&[x, y])))
}

/// `-C_{k'} int H_{k';l} (Div omega)_j dx` with finite-difference
/// derivatives of `omega`; `(Div omega)_j = (grad^perp omega)_j`.
pub fn coefficient_divergence_form(
    omega: &ScalarField,
    mode: &HarmonicMode,
    j: usize,
) -> Result<f64> {
    check_args(omega, mode, j)?;
    let w = truncated(omega);
    let div = if j == 1 {
        derivative(&w, Axis::Y, 1)?.scale(-1.0)
    } else {
        derivative(&w, Axis::X, 1)?
    };
    let h = mode.polynomial();
    Ok(-constant(mode) * div.integrate_against(|x, y| h.eval(&[x, y])))
}

/// `C_{k'} int omega_0 (grad^perp H)_j o phi dx`.
///
/// In the plane `(d phi)^{-T} (omega_0 J) (d phi)^{-1} det(d phi) = omega_0 J`
/// for the rotation `J`, so no Jacobian enters.
pub fn coefficient_lagrangian(
    phi: &FlowMap,
    omega0: &ScalarField,
    mode: &HarmonicMode,
    j: usize,
) -> Result<f64> {
    check_args(omega0, mode, j)?;
    let p = perp_gradient_component(mode, j);
    if p.is_zero() {
        return Ok(0.0);
    }
    let w = truncated(omega0);
    let g = *w.grid();
    let (xs, ys) = phi.node_images();
    let vals: Vec<f64> = (0..g.len())
        .map(|i| {
            let v = w.values()[i];
            if v == 0.0 {
                0.0
            } else {
                v * p.eval(&[xs[i], ys[i]])
            }
        })
        .collect();
    Ok(constant(mode) * ScalarField::new(g, vals)?.integrate())
}

/// The matrix form `C_{k'} int ((grad H) o phi)^T (d phi)^{-T} Omega_0 (d phi)^{-1} dx`
/// with `Omega_0 = omega_0 J`, evaluated literally with finite-difference
/// Jacobians.
pub fn coefficient_lagrangian_matrix(
    phi: &FlowMap,
    omega0: &ScalarField,
    mode: &HarmonicMode,
    j: usize,
) -> Result<f64> {
    check_args(omega0, mode, j)?;
    phi.check_orientation()?;
    let w = truncated(omega0);
    let g = *w.grid();
    let [a, b, c, d] = phi.jacobian()?;
    let grad = mode.gradient();
    let (xs, ys) = phi.node_images();
    let col = j - 1;
    let vals: Vec<f64> = (0..g.len())
        .map(|i| {
            let om = w.values()[i];
            if om == 0.0 {
                return 0.0;
            }
            let (a, b, c, d) = (a.values()[i], b.values()[i], c.values()[i], d.values()[i]);
            let det = a * d - b * c;
            // inverse of [[a, b], [c, d]]
            let inv = [[d / det, -b / det], [-c / det, a / det]];
            let omat = [[0.0, om], [-om, 0.0]];
            let mut m = [[0.0; 2]; 2];
            for r in 0..2 {
                for s in 0..2 {
                    m[r][s] = (0..2)
                        .map(|p| {
                            (0..2)
                                .map(|q| inv[p][r] * omat[p][q] * inv[q][s])
                                .sum::<f64>()
                        })
                        .sum();
                }
            }
            let pt = [xs[i], ys[i]];
            (0..2)
                .map(|al| grad[al].eval(&pt) * m[al][col])
                .sum::<f64>()
        })
        .collect();
    Ok(constant(mode) * ScalarField::new(g, vals)?.integrate())
}

/// How a coefficient sample was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientMethod {
    MomentIntegral,
    Lagrangian,
    ShellFit,
}

impl CoefficientMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::MomentIntegral => "moment-integral",
            Self::Lagrangian => "lagrangian",
            Self::ShellFit => "shell-fit",
        }
    }
}

/// Time series of one coefficient `a^j_{k';l}` by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrace {
    pub k: usize,
    pub kprime: usize,
    pub l: usize,
    /// 1-based velocity component.
    pub j: usize,
    pub method: CoefficientMethod,
    pub samples: Vec<(f64, f64)>,
    /// `int |(grad^perp H)_j| |omega_0| dx`-type magnitude used for the
    /// noise floor.
    pub scale: f64,
}

impl CoefficientTrace {
    pub fn new(mode: &HarmonicMode, j: usize, method: CoefficientMethod, scale: f64) -> Self {
        Self {
            k: mode.kprime() + mode.d() - 2,
            kprime: mode.kprime(),
            l: mode.l(),
            j,
            method,
            samples: Vec::new(),
            scale,
        }
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if !(t > last) {
                return Err(Error::InvalidParameter(format!(
                    "trace times must increase: {t} after {last}"
                )));
            }
        }
        self.samples.push((t, value));
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| (s.0 - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|s| s.1)
    }

    /// `max(|a(0)|, 64 eps scale)`: the value the functional returns on data
    /// where it vanishes exactly.
    pub fn noise_floor(&self) -> f64 {
        let v0 = self.value_at(0.0).map(f64::abs).unwrap_or(0.0);
        v0.max(64.0 * f64::EPSILON * self.scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.1.abs()))
    }

    /// Rows `(t, value)` for CSV export.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|&(t, v)| vec![t, v]).collect()
    }
}

/// `int |(grad^perp H)_j| |omega| dx`.
pub fn coefficient_scale(omega: &ScalarField, mode: &HarmonicMode, j: usize) -> f64 {
    let p = perp_gradient_component(mode, j);
    omega
        .map(f64::abs)
        .integrate_against(|x, y| p.eval(&[x, y]).abs())
}
