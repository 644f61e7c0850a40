//! Quadrature on `[-1, 1]`, the circle and the unit sphere.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * x * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (x * p1 - p2) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Points on `S^{d-1}` with positive weights summing to its area.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub d: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Trapezoid rule with `n` equispaced angles (exact for trigonometric
    /// polynomials of degree `< n`).
    pub fn circle(n: usize) -> Self {
        let w = 2.0 * PI / n as f64;
        let points = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        Self {
            d: 2,
            points,
            weights: vec![w; n],
        }
    }

    /// Gauss-Legendre in `cos(theta)` times trapezoid in `phi`; exact for
    /// polynomials of degree `< min(2 n_theta, n_phi)`.
    pub fn sphere(n_theta: usize, n_phi: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..n_phi {
                let ph = 2.0 * PI * j as f64 / n_phi as f64;
                points.push([s * ph.cos(), s * ph.sin(), *c]);
                weights.push(w * 2.0 * PI / n_phi as f64);
            }
        }
        Self {
            d: 3,
            points,
            weights,
        }
    }

    /// Default rule used for projections up to degree 8 products.
    pub fn default_for(d: usize) -> Self {
        match d {
            2 => Self::circle(256),
            _ => Self::sphere(24, 48),
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let i18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i18 - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_area() {
        let q = SphereQuadrature::sphere(12, 24);
        assert!((q.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        let z2 = q.integrate(|p| p[2] * p[2]);
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
