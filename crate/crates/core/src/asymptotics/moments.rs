//! Moments `M^j_{k'} = int H d_j Q(u_0) dx` by three routes.

use serde::{Deserialize, Serialize};

use crate::datagen::{closed_form_moment, paired_mode, GenericDataSpec};
use crate::error::{Error, Result};
use crate::fields::{decay_exponent, ScalarField, VectorField};
use crate::harmonics::HarmonicMode;
use crate::spectral::SpectralDiff;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub kprime: usize,
    pub l: usize,
    /// 1-based component index.
    pub j: usize,
    /// `int H d_j Q dx`.
    pub direct: f64,
    /// `-int (d_j H) Q dx`.
    pub stokes: f64,
    /// `-int sum (d_b d_a d_j H) u_a u_b dx`.
    pub stokes3: f64,
    /// Closed form for the generic field, converted to the normalized mode.
    pub closed_form: Option<f64>,
    pub epsilon: Option<f64>,
    /// `int |H| |d_j Q| dx`, the size against which a zero is judged.
    pub scale: f64,
}

impl MomentReport {
    /// Largest pairwise relative disagreement among the available routes.
    pub fn max_relative_spread(&self) -> f64 {
        let mut v = vec![self.direct, self.stokes, self.stokes3];
        v.extend(self.closed_form);
        let mut worst = 0.0_f64;
        for a in &v {
            for b in &v {
                let m = a.abs().max(b.abs());
                if m > 0.0 {
                    worst = worst.max((a - b).abs() / m);
                }
            }
        }
        worst
    }

    /// Largest route magnitude relative to `scale`.
    pub fn relative_magnitude(&self) -> f64 {
        let m = self
            .direct
            .abs()
            .max(self.stokes.abs())
            .max(self.stokes3.abs());
        if self.scale == 0.0 {
            0.0
        } else {
            m / self.scale
        }
    }
}

/// `Q(u) = sum_{i,j} (d_j u_i)(d_i u_j)` with Fourier derivatives; `u` must
/// vanish near the boundary.
pub fn q_form_spectral(u: &VectorField, sd: &SpectralDiff) -> ScalarField {
    let a = sd.transform(u.component(0));
    let b = sd.transform(u.component(1));
    let ux = sd.partial_from(&a, 1, 0);
    let uy = sd.partial_from(&a, 0, 1);
    let vx = sd.partial_from(&b, 1, 0);
    let vy = sd.partial_from(&b, 0, 1);
    let mut q = ux.zip_with(&ux, |p, q| p * q);
    for (i, v) in q.values_mut().iter_mut().enumerate() {
        *v += 2.0 * uy.values()[i] * vx.values()[i] + vy.values()[i] * vy.values()[i];
    }
    q
}

fn deriv_index(j: usize) -> (usize, usize) {
    if j == 1 {
        (1, 0)
    } else {
        (0, 1)
    }
}

fn check_velocity_decay(u: &VectorField, kprime: usize) -> Result<()> {
    let grid = u.grid();
    let peak = u.max_abs();
    if peak == 0.0 {
        return Ok(());
    }
    let edge = (0..grid.len())
        .filter(|&i| grid.ring(i) < 4)
        .fold(0.0_f64, |m, i| {
            m.max(u.component(0).values()[i].abs())
                .max(u.component(1).values()[i].abs())
        });
    if edge <= 1e-12 * peak {
        return Ok(());
    }
    let need = -((kprime + 1) as f64);
    for c in u.components() {
        if let Ok(e) = decay_exponent(c, (0, 0)) {
            if e > need {
                return Err(Error::InsufficientDecay(format!(
                    "velocity decays like r^{e:.2}, need <= {need}"
                )));
            }
        }
    }
    Ok(())
}

/// All three routes for `(mode, j)`; pass the spec for generic data to add
/// the closed form.
pub fn moment(
    u0: &VectorField,
    mode: &HarmonicMode,
    j: usize,
    spec: Option<&GenericDataSpec>,
) -> Result<MomentReport> {
    if mode.d() != 2 || u0.dim() != 2 {
        return Err(Error::UnsupportedDimension(mode.d()));
    }
    if !(j == 1 || j == 2) {
        return Err(Error::InvalidParameter(format!(
            "component index {j} out of range"
        )));
    }
    u0.check_finite()?;
    check_velocity_decay(u0, mode.kprime())?;
    let grid = *u0.grid();
    let sd = SpectralDiff::new(grid);
    let q = q_form_spectral(u0, &sd);
    let (a, b) = deriv_index(j);
    let djq = sd.partial(&q, a, b);
    let p = mode.polynomial();
    let dj = p.diff(j - 1);
    let direct = djq.integrate_against(|x, y| p.eval(&[x, y]));
    let scale = djq
        .map(f64::abs)
        .integrate_against(|x, y| p.eval(&[x, y]).abs());
    let stokes = -q.integrate_against(|x, y| dj.eval(&[x, y]));
    let mut stokes3 = 0.0;
    for al in 0..2 {
        for be in 0..2 {
            let d3 = dj.diff(al).diff(be);
            if d3.is_zero() {
                continue;
            }
            let prod = u0.component(al).zip_with(u0.component(be), |s, t| s * t);
            stokes3 -= prod.integrate_against(|x, y| d3.eval(&[x, y]));
        }
    }
    let closed_form = match spec {
        Some(s) if s.alpha == j => {
            let (m, factor) = paired_mode(s)?;
            if m.id() == mode.id() {
                Some(closed_form_moment(s, 2)? / factor)
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(MomentReport {
        kprime: mode.kprime(),
        l: mode.l(),
        j,
        direct,
        stokes,
        stokes3,
        closed_form,
        epsilon: spec.map(|s| s.epsilon),
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generic_field, random_divfree};
    use crate::fields::GridSpec;
    use crate::harmonics::mode;

    #[test]
    fn zero_field() {
        let g = GridSpec::new(3.0, 32).unwrap();
        let r = moment(&VectorField::zeros(g), &mode(2, 3, 1).unwrap(), 1, None).unwrap();
        assert_eq!((r.direct, r.stokes, r.stokes3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn generic_routes_agree_with_closed_form() {
        let s = GenericDataSpec::new(3, 1, 2, 1.0, 1.0).unwrap();
        let g = GridSpec::new(2.1, 512).unwrap();
        let u = generic_field(&s, g).unwrap();
        let (m, _) = paired_mode(&s).unwrap();
        let r = moment(&u, &m, 1, Some(&s)).unwrap();
        assert!(r.max_relative_spread() < 5e-3, "{r:?}");
        assert!(r.direct.abs() > 1e-3 * r.scale);
    }

    #[test]
    fn low_degree_moments_vanish() {
        let g = GridSpec::new(2.7, 256).unwrap();
        let u = random_divfree(7, g, 2.5, 3, 1.0).unwrap();
        for k in 0..3 {
            for m in crate::harmonics::modes_of_degree(2, k).unwrap() {
                for j in 1..=2 {
                    let r = moment(&u, &m, j, None).unwrap();
                    assert!(
                        r.direct.abs() <= 1e-8 * r.scale.max(f64::MIN_POSITIVE) || r.scale == 0.0,
                        "{r:?}"
                    );
                    assert!(r.stokes.abs() <= 1e-8 * r.scale || r.scale == 0.0, "{r:?}");
                }
            }
        }
    }
}
