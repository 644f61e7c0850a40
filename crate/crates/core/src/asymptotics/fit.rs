//! Far-field fits of the velocity and the eigenfunction test for the
//! extracted angular profiles.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::coefficients::TAIL_THRESHOLD;
use crate::error::{Error, Result};
use crate::euler2d::biot_savart_at;
use crate::fields::{curl, CubicInterpolator, Extension, ScalarField, VectorField};
use crate::harmonics::{eigenvalue, modes_of_degree, HarmonicMode};
use crate::poisson::{AsymptoticExpansion, ExpansionTerm, Remainder};

/// Largest `|x|` where `|omega| > rel max|omega|`.
pub fn support_radius(omega: &ScalarField, rel: f64) -> f64 {
    let g = omega.grid();
    let cut = rel * omega.max_abs();
    (0..g.len())
        .filter(|&i| omega.values()[i].abs() > cut)
        .map(|i| {
            let (x, y) = g.point(i);
            x.hypot(y)
        })
        .fold(0.0, f64::max)
}

/// Shells used by [`shell_fit_expansion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellFitOptions {
    /// Innermost radius; by default three cells outside the support of the
    /// finite-difference curl (cut at `1e-4` of its peak, boundary rings
    /// excluded).
    pub r_min: Option<f64>,
    /// Outermost radius; by default three cells inside the boundary.
    pub r_max: Option<f64>,
    pub shells: usize,
    pub n_theta: usize,
    pub max_condition: f64,
}

impl Default for ShellFitOptions {
    fn default() -> Self {
        Self {
            r_min: None,
            r_max: None,
            shells: 8,
            n_theta: 128,
            max_condition: 1e10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellFit {
    pub expansion: AsymptoticExpansion,
    pub r_min: f64,
    pub r_max: f64,
    pub condition_number: f64,
    /// `||u - fit|| / ||u||` over the samples (0 when `u` vanishes there).
    pub relative_residual: f64,
}

impl ShellFit {
    /// Coefficient of `h_{k;l} / r^k` in component `j` (1-based).
    pub fn coefficient(&self, j: usize, k: usize, l: usize) -> Option<f64> {
        self.expansion
            .terms
            .iter()
            .find(|t| t.k == k && t.component == Some(j))
            .and_then(|t| t.coeffs.get(l - 1).copied())
    }
}

/// Solves `min ||A c - b||` by SVD and returns `(c, cond(A))`.
fn least_squares(
    a: DMatrix<f64>,
    b: &DVector<f64>,
    max_condition: f64,
) -> Result<(DVector<f64>, f64)> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(cond <= max_condition) {
        return Err(Error::IllConditioned(cond));
    }
    let c = svd
        .solve(b, 0.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((c, cond))
}

/// Least-squares fit of both velocity components on shells outside the
/// vorticity support to `sum_{k <= kmax} sum_l c^j_{k;l} h_{k;l}(theta) / r^k`.
pub fn shell_fit_expansion(
    u: &VectorField,
    kmax: usize,
    opts: ShellFitOptions,
) -> Result<ShellFit> {
    if u.dim() != 2 {
        return Err(Error::UnsupportedDimension(u.dim()));
    }
    if kmax > 6 {
        return Err(Error::UnsupportedDegree { d: 2, kprime: kmax });
    }
    u.check_finite()?;
    let g = *u.grid();
    let h = g.h();
    let r_min = match opts.r_min {
        Some(r) => r,
        None => {
            let mut w = curl(u)?;
            for i in 0..g.len() {
                if g.ring(i) < 3 {
                    w.values_mut()[i] = 0.0;
                }
            }
            support_radius(&w, 1e-4) + 3.0 * h
        }
    };
    let r_max = opts.r_max.unwrap_or(g.extent() - 3.0 * h);
    if !(r_min > 0.0 && r_min < r_max && r_max <= g.extent())
        || opts.shells < 1
        || opts.n_theta < 4 * kmax + 2
    {
        return Err(Error::InvalidParameter(format!(
            "no usable far-field shells in [{r_min:.3}, {r_max:.3}] for extent {}",
            g.extent()
        )));
    }
    let modes: Vec<HarmonicMode> = (0..=kmax)
        .map(|k| modes_of_degree(2, k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let it = CubicInterpolator::new(g, Extension::Zero);
    let mut pts = Vec::new();
    for s in 0..opts.shells {
        let r = if opts.shells == 1 {
            r_min
        } else {
            r_min + (r_max - r_min) * s as f64 / (opts.shells - 1) as f64
        };
        for m in 0..opts.n_theta {
            let th = 2.0 * PI * m as f64 / opts.n_theta as f64;
            pts.push((r, th));
        }
    }
    let a = DMatrix::from_fn(pts.len(), modes.len(), |i, c| {
        let (r, th) = pts[i];
        modes[c].eval_angle(th) / r.powi(modes[c].kprime() as i32)
    });
    let mut terms = Vec::new();
    let mut cond = 0.0_f64;
    let (mut res2, mut norm2) = (0.0, 0.0);
    for j in 1..=2 {
        let b = DVector::from_iterator(
            pts.len(),
            pts.iter()
                .map(|&(r, th)| it.eval(u.component(j - 1), r * th.cos(), r * th.sin())),
        );
        let (c, k) = least_squares(a.clone(), &b, opts.max_condition)?;
        cond = cond.max(k);
        res2 += (&a * &c - &b).norm_squared();
        norm2 += b.norm_squared();
        let mut col = 0;
        for k in 0..=kmax {
            let dim = if k == 0 { 1 } else { 2 };
            terms.push(ExpansionTerm {
                k,
                kprime: k,
                component: Some(j),
                coeffs: c.rows(col, dim).iter().copied().collect(),
            });
            col += dim;
        }
    }
    let expansion = AsymptoticExpansion {
        d: 2,
        delta: kmax as f64 - 0.5,
        p: 2.0,
        terms,
        remainder: None,
        remainder_exponent: None,
        remainder_field: Remainder::None,
    };
    let relative_residual = if norm2 > 0.0 {
        (res2 / norm2).sqrt()
    } else {
        0.0
    };
    Ok(ShellFit {
        expansion,
        r_min,
        r_max,
        condition_number: cond,
        relative_residual,
    })
}

/// Sampling of the per-direction radial fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialFitOptions {
    /// Radii span `[inner, outer]` times the support radius.
    pub inner: f64,
    pub outer: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Highest power `r^{-k}` in the fit.
    pub kmax: usize,
}

impl Default for RadialFitOptions {
    fn default() -> Self {
        Self {
            inner: 4.0,
            outer: 40.0,
            n_r: 60,
            n_theta: 64,
            kmax: 10,
        }
    }
}

/// `a^j_k(theta_m)` at `theta_m = 2 pi m / n_theta`, from a separate
/// least-squares fit of `u_j(r, theta_m) = sum_{q <= kmax} c_q r^{-q}` along
/// every ray. The velocity is evaluated by direct Biot-Savart summation of
/// `omega` at radii beyond the grid, so no angular structure is assumed.
pub fn angular_profile(
    omega: &ScalarField,
    k: usize,
    j: usize,
    opts: RadialFitOptions,
) -> Result<Vec<f64>> {
    if !(j == 1 || j == 2) {
        return Err(Error::InvalidParameter(format!(
            "component index {j} out of range"
        )));
    }
    if k > opts.kmax || opts.n_r <= opts.kmax || !(opts.inner > 1.0 && opts.outer > opts.inner) {
        return Err(Error::InvalidParameter(
            "radial fit needs kmax >= k, n_r > kmax, 1 < inner < outer".into(),
        ));
    }
    omega.check_finite()?;
    let rs = support_radius(omega, TAIL_THRESHOLD).max(omega.grid().h());
    let (r0, r1) = (opts.inner * rs, opts.outer * rs);
    // Chebyshev nodes in s = r0 / r
    let s1 = r0 / r1;
    let svals: Vec<f64> = (0..opts.n_r)
        .map(|i| {
            let c = (PI * (i as f64 + 0.5) / opts.n_r as f64).cos();
            0.5 * (1.0 + s1) + 0.5 * (1.0 - s1) * c
        })
        .collect();
    let a = DMatrix::from_fn(opts.n_r, opts.kmax + 1, |i, q| svals[i].powi(q as i32));
    let mut pts = Vec::with_capacity(opts.n_r * opts.n_theta);
    for m in 0..opts.n_theta {
        let th = 2.0 * PI * m as f64 / opts.n_theta as f64;
        for s in &svals {
            let r = r0 / s;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let vel = biot_savart_at(omega, &pts);
    let svd = a.svd(true, true);
    let mut out = Vec::with_capacity(opts.n_theta);
    for m in 0..opts.n_theta {
        let b = DVector::from_iterator(
            opts.n_r,
            (0..opts.n_r).map(|i| vel[m * opts.n_r + i][j - 1]),
        );
        let c = svd
            .solve(&b, 0.0)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        out.push(c[k] * r0.powi(k as i32));
    }
    Ok(out)
}

/// Relative residual `||a'' + lambda a|| / ||a||` of equispaced samples on
/// the circle, with Fourier second derivatives. `floor` is the norm below
/// which the test is inconclusive.
pub fn eigenfunction_residual_samples(samples: &[f64], kprime: usize, floor: f64) -> Result<f64> {
    let n = samples.len();
    if n < 2 * kprime + 2 {
        return Err(Error::InvalidParameter(format!(
            "{n} samples cannot resolve degree {kprime}"
        )));
    }
    let norm = (samples.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if !(norm > floor) {
        return Err(Error::Inconclusive(format!(
            "profile norm {norm:e} below floor {floor:e}"
        )));
    }
    let mut planner = FftPlanner::new();
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut data);
    let lambda = eigenvalue(2, kprime)?;
    for (i, c) in data.iter_mut().enumerate() {
        let f = crate::spectral::bin_frequency(i, n) as f64;
        *c *= lambda - f * f;
    }
    planner.plan_fft_inverse(n).process(&mut data);
    let res = (data.iter().map(|c| (c.re / n as f64).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(res / norm)
}

/// [`eigenfunction_residual_samples`] on 128 samples of `f(theta)`.
pub fn eigenfunction_residual(f: impl Fn(f64) -> f64, d: usize, kprime: usize) -> Result<f64> {
    if d != 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let n = 128;
    let s: Vec<f64> = (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect();
    eigenfunction_residual_samples(&s, kprime, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler2d::biot_savart;
    use crate::fields::{eval_chi, GridSpec};
    use crate::harmonics::mode;

    #[test]
    fn exact_eigenfunctions() {
        let h31 = mode(2, 3, 1).unwrap();
        assert!(eigenfunction_residual(|t| h31.eval_angle(t), 2, 3).unwrap() < 1e-10);
        let h21 = mode(2, 2, 1).unwrap();
        assert!(eigenfunction_residual(|t| h21.eval_angle(t), 2, 3).unwrap() >= 1.0);
        assert!(matches!(
            eigenfunction_residual(|_| 0.0, 2, 3),
            Err(Error::Inconclusive(_))
        ));
        assert!(eigenfunction_residual(|t| t.cos(), 3, 1).is_err());
    }

    #[test]
    fn fit_recovers_single_term() {
        let g = GridSpec::new(6.0, 256).unwrap();
        let h = mode(2, 3, 1).unwrap();
        let u = VectorField::from_fn(g, |x, y| {
            let r = x.hypot(y);
            let v = if r == 0.0 {
                0.0
            } else {
                eval_chi(r) * h.eval_angle(y.atan2(x)) / r.powi(3)
            };
            [v, 0.0]
        });
        let opts = ShellFitOptions {
            r_min: Some(2.5),
            r_max: Some(5.5),
            ..Default::default()
        };
        let fit = shell_fit_expansion(&u, 6, opts).unwrap();
        for term in &fit.expansion.terms {
            for (l, c) in term.coeffs.iter().enumerate() {
                let want = if term.k == 3 && l == 0 && term.component == Some(1) {
                    1.0
                } else {
                    0.0
                };
                assert!((c - want).abs() < 1e-6, "{term:?}");
            }
        }
        let zero = shell_fit_expansion(&VectorField::zeros(g), 6, opts).unwrap();
        assert!(zero
            .expansion
            .terms
            .iter()
            .all(|t| t.coeffs.iter().all(|c| *c == 0.0)));
    }

    #[test]
    fn circulation_term_from_fit_and_profile() {
        let g = GridSpec::new(4.0, 128).unwrap();
        let w = ScalarField::from_fn(g, |x, y| {
            let r2 = (x * x + y * y) / 1.0;
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        });
        let gamma = w.integrate();
        let u = biot_savart(&w).unwrap();
        let opts = ShellFitOptions {
            r_min: Some(1.5),
            ..Default::default()
        };
        let fit = shell_fit_expansion(&u, 4, opts).unwrap();
        // u_2 = Gamma cos / (2 pi r) = Gamma / (2 sqrt(pi)) h_{1;1} / r
        let want = gamma / (2.0 * PI.sqrt());
        assert!(
            (fit.coefficient(2, 1, 1).unwrap() - want).abs() < 1e-6 * want,
            "{fit:?}"
        );
        assert!(fit.coefficient(1, 3, 1).unwrap().abs() < 1e-6 * want);
        let prof = angular_profile(&w, 1, 2, RadialFitOptions::default()).unwrap();
        for (m, v) in prof.iter().enumerate() {
            let th = 2.0 * PI * m as f64 / prof.len() as f64;
            assert!(
                (v - gamma * th.cos() / (2.0 * PI)).abs() < 1e-8 * gamma,
                "{m} {v}"
            );
        }
        let res = eigenfunction_residual_samples(&prof, 1, 0.0).unwrap();
        assert!(res < 1e-5, "{res}");
    }
}
