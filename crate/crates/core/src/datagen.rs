//! Initial data: the Hamiltonian field with a non-vanishing moment, its
//! closed-form moment, and random compactly supported divergence-free fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};
use crate::harmonics::{gauss_legendre, mode, poly, HarmonicMode, Polynomial};
use crate::spectral::SpectralDiff;

/// Parameters of the generic field. `alpha` and `beta` are 1-based
/// coordinate indices spanning the plane of `z = x_alpha + i x_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericDataSpec {
    pub kprime: usize,
    pub alpha: usize,
    pub beta: usize,
    pub epsilon: f64,
    pub amplitude: f64,
    /// `sigma` in `a = amplitude * exp(-sigma / (1 - s^2))`.
    #[serde(default = "unit_sharpness")]
    pub sharpness: f64,
}

fn unit_sharpness() -> f64 {
    1.0
}

impl GenericDataSpec {
    pub fn new(
        kprime: usize,
        alpha: usize,
        beta: usize,
        epsilon: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let s = Self {
            kprime,
            alpha,
            beta,
            epsilon,
            amplitude,
            sharpness: 1.0,
        };
        s.validate(3)?;
        Ok(s)
    }

    pub fn with_sharpness(self, sharpness: f64) -> Result<Self> {
        let s = Self { sharpness, ..self };
        s.validate(3)?;
        Ok(s)
    }

    /// Checks the spec against ambient dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.kprime < 3 {
            return Err(Error::InvalidParameter(format!(
                "generic data needs k' >= 3, got {}",
                self.kprime
            )));
        }
        if !(d == 2 || d == 3) {
            return Err(Error::UnsupportedDimension(d));
        }
        let ok = |i: usize| (1..=d).contains(&i);
        if !ok(self.alpha) || !ok(self.beta) || self.alpha == self.beta {
            return Err(Error::InvalidParameter(format!(
                "coordinate pair ({}, {}) invalid in d = {d}",
                self.alpha, self.beta
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(
                "epsilon must be positive, amplitude finite".into(),
            ));
        }
        if !(self.sharpness > 0.0 && self.sharpness.is_finite()) {
            return Err(Error::InvalidParameter("sharpness must be positive".into()));
        }
        Ok(())
    }

    fn ell(&self) -> usize {
        self.kprime - 1
    }

    /// Affine map of `rho in (eps^2, 4 eps^2)` onto `(-1, 1)` and its slope.
    fn s_of(&self, rho: f64) -> (f64, f64) {
        let e2 = self.epsilon * self.epsilon;
        ((2.0 * rho - 5.0 * e2) / (3.0 * e2), 2.0 / (3.0 * e2))
    }

    /// The bump `a(rho)`, `rho = |x|^2`.
    pub fn bump(&self, rho: f64) -> f64 {
        let (s, _) = self.s_of(rho);
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-self.sharpness / (1.0 - s * s)).exp()
        }
    }

    /// `a'(rho)`.
    pub fn bump_derivative(&self, rho: f64) -> f64 {
        let (s, ds) = self.s_of(rho);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        self.bump(rho) * (-2.0 * self.sharpness * s / (q * q)) * ds
    }

    /// `a''(rho)`.
    pub fn bump_second_derivative(&self, rho: f64) -> f64 {
        let (s, ds) = self.s_of(rho);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        let sg = self.sharpness;
        let f1 = -2.0 * sg * s / (q * q);
        let f2 = -2.0 * sg / (q * q) - 8.0 * sg * s * s / (q * q * q);
        self.bump(rho) * (f1 * f1 + f2) * ds * ds
    }

    /// `F = 2 Re z^l + |z|^{2l}`, its derivatives along `x_alpha`, `x_beta`,
    /// and its planar Laplacian.
    fn polynomial_part(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        let z = Complex64::new(x[self.alpha - 1], x[self.beta - 1]);
        let l = self.ell() as u32;
        let rho1 = z.norm_sqr();
        let zl1 = z.powu(l - 1);
        let f = 2.0 * (zl1 * z).re + rho1.powi(l as i32);
        let lf = l as f64;
        let w = 2.0 * lf * rho1.powi(l as i32 - 1);
        let fa = 2.0 * lf * zl1.re + w * z.re;
        let fb = -2.0 * lf * zl1.im + w * z.im;
        let lap = 4.0 * lf * lf * rho1.powi(l as i32 - 1);
        (f, fa, fb, lap)
    }

    /// `grad H` at `x` (length `d`).
    pub fn hamiltonian_gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let rho: f64 = x.iter().map(|v| v * v).sum();
        let a = self.bump(rho);
        if a == 0.0 {
            return vec![0.0; x.len()];
        }
        let da = self.bump_derivative(rho);
        let (f, fa, fb, _) = self.polynomial_part(x);
        let mut g: Vec<f64> = x.iter().map(|&xi| 2.0 * xi * da * f).collect();
        g[self.alpha - 1] += fa * a;
        g[self.beta - 1] += fb * a;
        g
    }

    /// Planar `Delta H` (`d = 2`).
    pub fn hamiltonian_laplacian_at(&self, x: &[f64]) -> f64 {
        let rho = x[0] * x[0] + x[1] * x[1];
        let a = self.bump(rho);
        if a == 0.0 {
            return 0.0;
        }
        let (da, dda) = (self.bump_derivative(rho), self.bump_second_derivative(rho));
        let (f, fa, fb, lap) = self.polynomial_part(x);
        let xa = x[self.alpha - 1];
        let xb = x[self.beta - 1];
        lap * a + 4.0 * da * (fa * xa + fb * xb) + f * (4.0 * da + 4.0 * rho * dda)
    }

    /// `H(x) = ((z^l + zbar^l) + |z|^{2l}) a(|x|^2)`, `l = k' - 1`.
    pub fn hamiltonian_at(&self, x: &[f64]) -> f64 {
        let rho: f64 = x.iter().map(|v| v * v).sum();
        let a = self.bump(rho);
        if a == 0.0 {
            return 0.0;
        }
        let z = Complex64::new(x[self.alpha - 1], x[self.beta - 1]);
        let l = self.ell() as u32;
        (2.0 * z.powu(l).re + z.norm_sqr().powi(l as i32)) * a
    }
}

fn check_planar(spec: &GenericDataSpec) -> Result<()> {
    spec.validate(2)
}

/// The Hamiltonian sampled on a planar grid.
pub fn hamiltonian(spec: &GenericDataSpec, grid: GridSpec) -> Result<ScalarField> {
    check_planar(spec)?;
    Ok(ScalarField::from_fn(grid, |x, y| {
        spec.hamiltonian_at(&[x, y])
    }))
}

/// `u_0 = -(d_beta H) e_alpha + (d_alpha H) e_beta`, sampled from the exact
/// gradient.
pub fn generic_field(spec: &GenericDataSpec, grid: GridSpec) -> Result<VectorField> {
    check_planar(spec)?;
    Ok(VectorField::from_fn(grid, |x, y| {
        let g = spec.hamiltonian_gradient_at(&[x, y]);
        let mut u = [0.0; 2];
        u[spec.alpha - 1] = -g[spec.beta - 1];
        u[spec.beta - 1] = g[spec.alpha - 1];
        u
    }))
}

/// Vorticity `d_1 u_2 - d_2 u_1` of the generic field, sampled exactly.
pub fn generic_vorticity(spec: &GenericDataSpec, grid: GridSpec) -> Result<ScalarField> {
    check_planar(spec)?;
    // orientation of the (alpha, beta) plane relative to (x_1, x_2)
    let sign = if spec.alpha == 1 { 1.0 } else { -1.0 };
    Ok(ScalarField::from_fn(grid, |x, y| {
        sign * spec.hamiltonian_laplacian_at(&[x, y])
    }))
}

/// Symplectic gradient of a planar Hamiltonian in the `(alpha, beta)` plane.
pub fn hamiltonian_field(h: &ScalarField, alpha: usize, beta: usize) -> VectorField {
    let sd = SpectralDiff::new(*h.grid());
    let hat = sd.transform(h);
    let d = [sd.partial_from(&hat, 1, 0), sd.partial_from(&hat, 0, 1)];
    let mut comps = [ScalarField::zeros(*h.grid()), ScalarField::zeros(*h.grid())];
    comps[alpha - 1] = d[beta - 1].scale(-1.0);
    comps[beta - 1] = d[alpha - 1].clone();
    let [u, v] = comps;
    VectorField::from_pair(u, v)
}

/// `P = z^{k'} + zbar^{k'}` in the `(alpha, beta)` plane.
pub fn paired_polynomial(spec: &GenericDataSpec) -> Polynomial {
    let (re, _) = poly::complex_power(spec.kprime);
    // relabel the exponents (x, y) -> (x_alpha, x_beta)
    let mut out = Polynomial::zero();
    for (e, c) in re.terms() {
        let mut ne = [0u8; 3];
        ne[spec.alpha - 1] = e[0];
        ne[spec.beta - 1] = e[1];
        out.add_term(ne, 2.0 * c);
    }
    out
}

/// Planar normalized mode proportional to `P`, with `P = factor * H_{k';l}`.
pub fn paired_mode(spec: &GenericDataSpec) -> Result<(HarmonicMode, f64)> {
    check_planar(spec)?;
    let k = spec.kprime;
    let norm = 2.0 * PI.sqrt();
    if spec.alpha == 1 {
        return Ok((mode(2, k, 1)?, norm));
    }
    // Re (y + i x)^k = r^k cos(k pi/2 - k theta)
    if k % 2 == 1 {
        let sign = if ((k - 1) / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        Ok((mode(2, k, 2)?, sign * norm))
    } else {
        let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok((mode(2, k, 1)?, sign * norm))
    }
}

/// `16 pi k'(k'-1)(k'-2) int_0^inf (d_{rho_1}(a(rho_1 + c) rho_1^l))^2 d rho_1`.
fn slice_integral(spec: &GenericDataSpec, shift: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let e2 = spec.epsilon * spec.epsilon;
    let (lo, hi) = ((e2 - shift).max(0.0), 4.0 * e2 - shift);
    if hi <= lo {
        return 0.0;
    }
    let l = spec.ell() as i32;
    let half = 0.5 * (hi - lo);
    nodes
        .iter()
        .zip(weights)
        .map(|(t, w)| {
            let r1 = lo + half * (t + 1.0);
            let rho = r1 + shift;
            let d =
                spec.bump_derivative(rho) * r1.powi(l) + l as f64 * spec.bump(rho) * r1.powi(l - 1);
            w * half * d * d
        })
        .sum()
}

/// Closed-form `M^alpha_{k'}` of the generic field against `P = z^{k'} + zbar^{k'}`.
///
/// For `d = 3` the slice integral is integrated over the remaining axis.
pub fn closed_form_moment(spec: &GenericDataSpec, d: usize) -> Result<f64> {
    spec.validate(d)?;
    let k = spec.kprime as f64;
    let c = 16.0 * PI * k * (k - 1.0) * (k - 2.0);
    let (nodes, weights) = gauss_legendre(400);
    match d {
        2 => Ok(c * slice_integral(spec, 0.0, &nodes, &weights)),
        _ => {
            let e = 2.0 * spec.epsilon;
            let (xn, xw) = gauss_legendre(200);
            let total: f64 = xn
                .iter()
                .zip(&xw)
                .map(|(t, w)| {
                    let xp = e * t;
                    w * e * slice_integral(spec, xp * xp, &nodes, &weights)
                })
                .sum();
            Ok(c * total)
        }
    }
}

/// Random smooth stream function supported in the disc of radius `support`.
///
/// `psi = amplitude * w(|x| / support) * T(x)` with the window
/// `w(r) = exp(-1 / (1 - r^2))` and a random trigonometric polynomial `T`
/// of degree `smoothness`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    support: f64,
    amplitude: f64,
    kappa: f64,
    coeffs: Vec<(f64, f64, f64, f64)>,
}

impl RandomStream {
    pub fn new(seed: u64, support: f64, smoothness: usize, amplitude: f64) -> Result<Self> {
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "support must be positive, got {support}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = smoothness.max(1) as i32;
        let mut coeffs = Vec::new();
        for p in -m..=m {
            for q in -m..=m {
                let decay = 1.0 / (1.0 + (p * p + q * q) as f64);
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                coeffs.push((p as f64, q as f64, a * decay, b * decay));
            }
        }
        Ok(Self {
            support,
            amplitude,
            kappa: PI / support,
            coeffs,
        })
    }

    /// `(psi, d_x psi, d_y psi)` at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let s2 = self.support * self.support;
        let r2 = (x * x + y * y) / s2;
        if r2 >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - r2;
        let w = (-1.0 / q).exp();
        let dw = -w / (q * q) * 2.0 / s2;
        let (mut t, mut tx, mut ty) = (0.0, 0.0, 0.0);
        for &(p, qq, a, b) in &self.coeffs {
            let ph = self.kappa * (p * x + qq * y);
            let (sn, cs) = ph.sin_cos();
            t += a * cs + b * sn;
            let d = self.kappa * (b * cs - a * sn);
            tx += p * d;
            ty += qq * d;
        }
        let c = self.amplitude;
        (
            c * w * t,
            c * (dw * x * t + w * tx),
            c * (dw * y * t + w * ty),
        )
    }
}

/// `grad^perp psi` for a random compactly supported stream function.
pub fn random_divfree(
    seed: u64,
    grid: GridSpec,
    support: f64,
    smoothness: usize,
    amplitude: f64,
) -> Result<VectorField> {
    check_support(grid, support)?;
    let psi = RandomStream::new(seed, support, smoothness, amplitude)?;
    Ok(VectorField::from_fn(grid, |x, y| {
        let (_, px, py) = psi.eval(x, y);
        [-py, px]
    }))
}

pub fn random_stream_function(
    seed: u64,
    grid: GridSpec,
    support: f64,
    smoothness: usize,
    amplitude: f64,
) -> Result<ScalarField> {
    check_support(grid, support)?;
    let psi = RandomStream::new(seed, support, smoothness, amplitude)?;
    Ok(ScalarField::from_fn(grid, |x, y| psi.eval(x, y).0))
}

fn check_support(grid: GridSpec, support: f64) -> Result<()> {
    if !(support > 0.0 && support < grid.extent()) {
        return Err(Error::InvalidParameter(format!(
            "support {support} must lie inside the grid extent {}",
            grid.extent()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GenericDataSpec {
        GenericDataSpec::new(3, 1, 2, 1.0, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(GenericDataSpec::new(2, 1, 2, 1.0, 1.0).is_err());
        assert!(GenericDataSpec::new(3, 1, 1, 1.0, 1.0).is_err());
        let s = GenericDataSpec { alpha: 3, ..spec() };
        assert!(s.validate(2).is_err());
        assert!(s.validate(3).is_ok());
    }

    #[test]
    fn hamiltonian_polar_form() {
        // (2 r^2 cos 2 theta + r^4) a(r^2) for k' = 3
        let s = spec();
        for &(r, th) in &[(1.3, 0.4), (1.7, 2.0), (1.05, -1.0)] {
            let x = [r * f64::cos(th), r * f64::sin(th)];
            let want = (2.0 * r * r * (2.0 * th).cos() + r.powi(4)) * s.bump(r * r);
            assert!((s.hamiltonian_at(&x) - want).abs() < 1e-13);
        }
        assert_eq!(s.hamiltonian_at(&[0.99, 0.0]), 0.0);
        assert_eq!(s.hamiltonian_at(&[0.0, 2.01]), 0.0);
    }

    #[test]
    fn bump_derivative_matches_difference() {
        for s in [spec(), spec().with_sharpness(12.0).unwrap()] {
            let scale = s.bump(2.0).abs().max(1e-3);
            for rho in [1.3, 2.5, 3.7] {
                let h = 1e-6;
                let fd = (s.bump(rho + h) - s.bump(rho - h)) / (2.0 * h);
                assert!((fd - s.bump_derivative(rho)).abs() < 1e-7 * scale.max(1.0));
                let fd2 = (s.bump_derivative(rho + h) - s.bump_derivative(rho - h)) / (2.0 * h);
                let d2 = s.bump_second_derivative(rho);
                assert!((fd2 - d2).abs() < 1e-5 * d2.abs().max(scale));
            }
        }
        assert!(spec().with_sharpness(0.0).is_err());
        assert!(spec().with_sharpness(12.0).unwrap().bump(2.0) < spec().bump(2.0));
    }

    #[test]
    fn exact_derivatives_match_differences() {
        for s in [spec(), GenericDataSpec::new(4, 2, 1, 0.8, 2.0).unwrap()] {
            for &x in &[[1.2, 0.5], [-0.3, 1.5], [0.9, -0.9]] {
                let e = 1e-5;
                let g = s.hamiltonian_gradient_at(&x);
                let h = |dx: f64, dy: f64| s.hamiltonian_at(&[x[0] + dx, x[1] + dy]);
                let gx = (h(e, 0.0) - h(-e, 0.0)) / (2.0 * e);
                let gy = (h(0.0, e) - h(0.0, -e)) / (2.0 * e);
                let lap =
                    (h(e, 0.0) + h(-e, 0.0) + h(0.0, e) + h(0.0, -e) - 4.0 * h(0.0, 0.0)) / (e * e);
                let tol = 1e-6 * (1.0 + gx.abs() + gy.abs());
                assert!(
                    (g[0] - gx).abs() < tol && (g[1] - gy).abs() < tol,
                    "{g:?} {gx} {gy}"
                );
                let lh = s.hamiltonian_laplacian_at(&x);
                assert!((lh - lap).abs() < 1e-3 * (1.0 + lh.abs()), "{lh} {lap}");
            }
        }
    }

    #[test]
    fn paired_mode_factor() {
        for (k, a, b) in [(3, 1, 2), (3, 2, 1), (4, 2, 1), (5, 2, 1), (6, 2, 1)] {
            let s = GenericDataSpec::new(k, a, b, 1.0, 1.0).unwrap();
            let p = paired_polynomial(&s);
            let (m, f) = paired_mode(&s).unwrap();
            let x = [0.3, -0.7];
            assert!((p.eval(&x) - f * m.eval_poly(&x)).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn closed_form_scales_quadratically() {
        let s = spec();
        let m1 = closed_form_moment(&s, 2).unwrap();
        let m3 = closed_form_moment(
            &GenericDataSpec {
                amplitude: 3.0,
                ..s
            },
            2,
        )
        .unwrap();
        assert!(m1 > 0.0);
        assert!((m3 - 9.0 * m1).abs() < 1e-10 * m3);
        assert_eq!(
            closed_form_moment(
                &GenericDataSpec {
                    amplitude: 0.0,
                    ..s
                },
                2
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn random_fields_differ_and_vanish_outside() {
        let g = GridSpec::new(3.0, 64).unwrap();
        let a = random_divfree(1, g, 2.0, 3, 1.0).unwrap();
        let b = random_divfree(2, g, 2.0, 3, 1.0).unwrap();
        assert!(a.sub(&b).l2_norm() > 0.0);
        assert_eq!(random_divfree(1, g, 2.0, 3, 0.0).unwrap().max_abs(), 0.0);
        let psi = random_stream_function(1, g, 2.0, 3, 1.0).unwrap();
        let (x, y) = g.point(g.index(2, 30));
        assert!(x.hypot(y) > 2.0 && psi.at(2, 30) == 0.0);
        let fine = GridSpec::new(3.0, 384).unwrap();
        let u = random_divfree(3, fine, 2.5, 3, 1.0).unwrap();
        let div = SpectralDiff::new(fine).divergence(&u);
        let rel = div.l2_norm() / crate::fields::gradient(u.component(0)).unwrap().l2_norm();
        assert!(rel < 1e-6, "{rel}");
        let rs = RandomStream::new(1, 2.0, 3, 1.0).unwrap();
        let e = 1e-6;
        let (_, px, py) = rs.eval(0.4, -0.7);
        let fx = (rs.eval(0.4 + e, -0.7).0 - rs.eval(0.4 - e, -0.7).0) / (2.0 * e);
        let fy = (rs.eval(0.4, -0.7 + e).0 - rs.eval(0.4, -0.7 - e).0) / (2.0 * e);
        assert!((px - fx).abs() < 1e-7 && (py - fy).abs() < 1e-7);
    }
}
