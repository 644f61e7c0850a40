//! Circular (`d = 2`) and spherical (`d = 3`) harmonics with their solid
//! harmonic polynomials.
//!
//! Bases are real. For `d = 2` the modes of degree `k' >= 1` are
//! `cos(k' theta) / sqrt(pi)` (`l = 1`) and `sin(k' theta) / sqrt(pi)`
//! (`l = 2`); degree 0 is `1 / sqrt(2 pi)`. For `d = 3`, `l = 1` is the zonal
//! harmonic and `l = 2m, 2m + 1` are the `cos(m phi)`, `sin(m phi)` pair.

pub mod poly;
pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use poly::Polynomial;
pub use quadrature::{gauss_legendre, SphereQuadrature};

/// Highest spherical-harmonic degree handled for `d = 3`.
pub const MAX_DEGREE_3D: usize = 8;

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// `lambda_{k'} = k' (k' + d - 2)`.
pub fn eigenvalue(d: usize, kprime: usize) -> Result<f64> {
    check_dim(d)?;
    Ok((kprime * (kprime + d - 2)) as f64)
}

/// Dimension of the degree-`k'` eigenspace of the sphere Laplacian.
pub fn eigenspace_dim(d: usize, kprime: usize) -> Result<usize> {
    check_dim(d)?;
    Ok(match (d, kprime) {
        (_, 0) => 1,
        (2, _) => 2,
        (_, k) => 2 * k + 1,
    })
}

/// Identifier of a harmonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub d: usize,
    pub kprime: usize,
    pub l: usize,
}

/// An orthonormal harmonic `h_{k';l}` on `S^{d-1}` together with the
/// homogeneous harmonic polynomial `H_{k';l}(x) = h_{k';l}(x/|x|) |x|^{k'}`.
#[derive(Debug, Clone)]
pub struct HarmonicMode {
    id: ModeId,
    poly: Polynomial,
    grad: Vec<Polynomial>,
}

impl HarmonicMode {
    pub fn id(&self) -> ModeId {
        self.id
    }

    pub fn d(&self) -> usize {
        self.id.d
    }

    pub fn kprime(&self) -> usize {
        self.id.kprime
    }

    pub fn l(&self) -> usize {
        self.id.l
    }

    /// The solid harmonic `H_{k';l}` as a polynomial.
    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    /// Components of `grad H_{k';l}`.
    pub fn gradient(&self) -> &[Polynomial] {
        &self.grad
    }

    pub fn eval_poly(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    /// Evaluates `h_{k';l}` at a point of the unit sphere.
    pub fn eval_sphere(&self, unit: &[f64]) -> f64 {
        self.poly.eval(unit)
    }

    /// `h_{k';l}(theta)` on the circle (`d = 2` only).
    pub fn eval_angle(&self, theta: f64) -> f64 {
        debug_assert_eq!(self.id.d, 2);
        self.poly.eval(&[theta.cos(), theta.sin()])
    }

    /// `C_{k'} = 1 / (2 k' + d - 2)`; `None` for `d = 2, k' = 0`, where the
    /// far-field term is logarithmic.
    pub fn coefficient_constant(&self) -> Option<f64> {
        let denom = 2 * self.id.kprime + self.id.d - 2;
        (denom > 0).then(|| 1.0 / denom as f64)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Coefficients of `d^m/dt^m P_k(t)` as `(power, coefficient)` pairs.
fn legendre_derivative(k: usize, m: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for j in 0..=k / 2 {
        let power = k - 2 * j;
        if power < m {
            continue;
        }
        let c = poly::binomial(k, j) as f64 * poly::binomial(2 * k - 2 * j, k) as f64
            / 2f64.powi(k as i32);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let falling = factorial(power) / factorial(power - m);
        out.push((power - m, sign * c * falling));
    }
    out
}

/// Builds the mode `(d, k', l)`.
pub fn mode(d: usize, kprime: usize, l: usize) -> Result<HarmonicMode> {
    let dim = eigenspace_dim(d, kprime)?;
    if l == 0 || l > dim {
        return Err(Error::ModeIndex { l, dim });
    }
    let poly = match d {
        2 => {
            if kprime == 0 {
                Polynomial::constant(1.0 / (2.0 * PI).sqrt())
            } else {
                let (re, im) = poly::complex_power(kprime);
                (if l == 1 { re } else { im }).scale(1.0 / PI.sqrt())
            }
        }
        _ => {
            if kprime > MAX_DEGREE_3D {
                return Err(Error::UnsupportedDegree { d, kprime });
            }
            solid_harmonic_3d(kprime, l)
        }
    };
    let grad = (0..d).map(|v| poly.diff(v)).collect();
    Ok(HarmonicMode {
        id: ModeId { d, kprime, l },
        poly,
        grad,
    })
}

/// All modes of degree `k'`.
pub fn modes_of_degree(d: usize, kprime: usize) -> Result<Vec<HarmonicMode>> {
    (1..=eigenspace_dim(d, kprime)?)
        .map(|l| mode(d, kprime, l))
        .collect()
}

fn solid_harmonic_3d(k: usize, l: usize) -> Polynomial {
    let m = l / 2;
    let (re, im) = poly::complex_power(m);
    let azimuthal = if m == 0 || l.is_multiple_of(2) {
        re
    } else {
        im
    };
    // r^{k-m} P_k^{(m)}(z/r) = sum a_j z^{p} r^{k-m-p}
    let r2 = Polynomial::monomial([2, 0, 0], 1.0)
        .add(&Polynomial::monomial([0, 2, 0], 1.0))
        .add(&Polynomial::monomial([0, 0, 2], 1.0));
    let mut zonal = Polynomial::zero();
    for (power, c) in legendre_derivative(k, m) {
        let rest = (k - m - power) / 2;
        zonal = zonal.add(&Polynomial::monomial([0, 0, power as u8], c).mul(&r2.pow(rest)));
    }
    let norm = ((2 * k + 1) as f64 / (4.0 * PI) * factorial(k - m) / factorial(k + m)).sqrt()
        * if m == 0 { 1.0 } else { 2f64.sqrt() };
    azimuthal.mul(&zonal).scale(norm)
}

/// `L^2(S^{d-1})` inner products of `samples` with every mode of degree `k'`.
pub fn project_on_sphere(
    samples: impl Fn(&[f64]) -> f64,
    d: usize,
    kprime: usize,
) -> Result<Vec<f64>> {
    let modes = modes_of_degree(d, kprime)?;
    let q = SphereQuadrature::default_for(d);
    let values: Vec<f64> = q.points.iter().map(|p| samples(&p[..d])).collect();
    Ok(modes
        .iter()
        .map(|m| {
            q.points
                .iter()
                .zip(&q.weights)
                .zip(&values)
                .map(|((p, w), v)| w * v * m.eval_sphere(&p[..d]))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(3, 2).unwrap(), 6.0);
        assert_eq!(eigenvalue(2, 3).unwrap(), 9.0);
        assert_eq!(eigenvalue(2, 0).unwrap(), 0.0);
        assert_eq!(eigenvalue(3, 0).unwrap(), 0.0);
        assert!(matches!(
            eigenvalue(4, 1),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn dimensions() {
        assert_eq!(eigenspace_dim(3, 0).unwrap(), 1);
        assert_eq!(eigenspace_dim(3, 1).unwrap(), 3);
        assert_eq!(eigenspace_dim(3, 3).unwrap(), 7);
        assert_eq!(eigenspace_dim(2, 0).unwrap(), 1);
        assert_eq!(eigenspace_dim(2, 5).unwrap(), 2);
        assert!(eigenspace_dim(1, 0).is_err());
    }

    #[test]
    fn circle_mode_definitions() {
        let m = mode(2, 3, 1).unwrap();
        assert!((m.eval_angle(0.3) - (0.9f64).cos() / PI.sqrt()).abs() < 1e-14);
        assert!((m.eval_poly(&[1.0, 0.0]) - 1.0 / PI.sqrt()).abs() < 1e-14);
        let z = mode(2, 0, 1).unwrap();
        let q = SphereQuadrature::circle(64);
        assert!((q.integrate(|p| z.eval_sphere(&p[..2]).powi(2)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mode_index_out_of_range() {
        assert!(matches!(
            mode(2, 3, 3),
            Err(Error::ModeIndex { l: 3, dim: 2 })
        ));
        assert!(matches!(mode(3, 2, 0), Err(Error::ModeIndex { .. })));
        assert!(matches!(
            mode(3, 9, 1),
            Err(Error::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn projections() {
        let h31 = mode(2, 3, 1).unwrap();
        let h32 = mode(2, 3, 2).unwrap();
        let h21 = mode(2, 2, 1).unwrap();
        let c = project_on_sphere(|p| h31.eval_sphere(p), 2, 3).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        let c = project_on_sphere(|p| h21.eval_sphere(p), 2, 3).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-10));
        let c = project_on_sphere(
            |p| 2.0 * h31.eval_sphere(p) + 5.0 * h32.eval_sphere(p),
            2,
            3,
        )
        .unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zonal_3d_matches_legendre() {
        let y20 = mode(3, 2, 1).unwrap();
        // sqrt(5/16pi) (3z^2 - r^2)
        let expect = |x: &[f64]| (5.0 / (16.0 * PI)).sqrt() * (3.0 * x[2] * x[2] - 1.0);
        let p = [0.48, 0.6, 0.64];
        assert!((y20.eval_sphere(&p) - expect(&p)).abs() < 1e-13);
        assert_eq!(y20.coefficient_constant(), Some(1.0 / 5.0));
        assert_eq!(mode(2, 0, 1).unwrap().coefficient_constant(), None);
    }
}
