//! Free-space solution of `Delta u = g` on the plane.
//!
//! The log kernel `log|x| / (2 pi)` is truncated to a disc of radius `R`
//! that covers every target/source separation. The truncated kernel has the
//! closed-form transform
//! `R log R J1(kR)/k - (1 - J0(kR))/k^2`, so a single zero-padded FFT
//! convolution is exact up to the resolution of `g`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::fields::{GridSpec, ScalarField, VectorField};
use crate::spectral::{bin_frequency, fft_friendly, Fft2};

/// Fourier transform of `log|x| / (2 pi)` restricted to `|x| < radius`.
pub fn truncated_log_kernel(k: f64, radius: f64) -> f64 {
    let lr = radius.ln();
    if k * radius < 1e-4 {
        let r2 = radius * radius;
        // series in (kR)^2 keeps the cancellation under control
        let s = (k * radius).powi(2);
        return r2 * lr / 2.0 - r2 / 4.0 - s * r2 * (lr / 16.0 - 1.0 / 64.0)
            + s * s * r2 * (lr / 384.0 - 1.0 / 2304.0);
    }
    let kr = k * radius;
    radius * lr * libm::j1(kr) / k - (1.0 - libm::j0(kr)) / (k * k)
}

/// Zero-padded FFT convolution with the truncated log kernel.
pub struct FreeSpacePoisson {
    grid: GridSpec,
    m: usize,
    fft: Fft2,
    kernel: Vec<f64>,
    kx: Vec<f64>,
}

impl FreeSpacePoisson {
    /// Solver for sources supported anywhere on the grid.
    pub fn new(grid: GridSpec) -> Self {
        Self::with_support(grid, grid.extent())
    }

    /// Solver for sources supported in `|x|_inf <= support`.
    pub fn with_support(grid: GridSpec, support: f64) -> Self {
        let l = grid.extent();
        let s = support.clamp(0.0, l);
        let h = grid.h();
        // largest target-source separation
        let sep = std::f64::consts::SQRT_2 * (l + s);
        let radius = sep * (1.0 + 1e-3) + h;
        let m = fft_friendly(((l + s + radius) / h).ceil() as usize + 1).max(grid.n());
        let period = m as f64 * h;
        let kx: Vec<f64> = (0..m)
            .map(|i| 2.0 * PI * bin_frequency(i, m) as f64 / period)
            .collect();
        let mut kernel = vec![0.0; m * m];
        for iy in 0..m {
            for ix in 0..m {
                let k = kx[ix].hypot(kx[iy]);
                kernel[iy * m + ix] = truncated_log_kernel(k, radius);
            }
        }
        Self {
            grid,
            m,
            fft: Fft2::new(m),
            kernel,
            kx,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Padded FFT size.
    pub fn padded_size(&self) -> usize {
        self.m
    }

    /// Transform of `Delta^{-1} g` on the padded grid.
    fn solve_hat(&self, g: &ScalarField) -> Vec<Complex64> {
        let (n, m) = (self.grid.n(), self.m);
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for iy in 0..n {
            for ix in 0..n {
                data[iy * m + ix].re = g.values()[iy * n + ix];
            }
        }
        self.fft.forward(&mut data);
        for (v, k) in data.iter_mut().zip(&self.kernel) {
            *v *= k;
        }
        data
    }

    fn factor(&self, i: usize, order: usize) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if self.m.is_multiple_of(2) && i == self.m / 2 && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.kx[i]).powu(order as u32)
    }

    /// Applies `d^a/dx^a d^b/dy^b` to two transforms and returns both real
    /// results with a single inverse FFT.
    fn pair(&self, hat: &[Complex64], ops: [(usize, usize); 2]) -> [ScalarField; 2] {
        let (n, m) = (self.grid.n(), self.m);
        let [(a0, b0), (a1, b1)] = ops;
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for iy in 0..m {
            let (fy0, fy1) = (self.factor(iy, b0), self.factor(iy, b1));
            for ix in 0..m {
                let idx = iy * m + ix;
                let d0 = self.factor(ix, a0) * fy0;
                let d1 = self.factor(ix, a1) * fy1;
                data[idx] = hat[idx] * (d0 + Complex64::new(0.0, 1.0) * d1);
            }
        }
        self.fft.inverse(&mut data);
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                re[iy * n + ix] = data[iy * m + ix].re;
                im[iy * n + ix] = data[iy * m + ix].im;
            }
        }
        [
            ScalarField::new(self.grid, re).expect("grid size"),
            ScalarField::new(self.grid, im).expect("grid size"),
        ]
    }

    /// Arbitrary partial derivatives of `Delta^{-1} g`.
    pub fn partials(&self, g: &ScalarField, ops: &[(usize, usize)]) -> Vec<ScalarField> {
        let hat = self.solve_hat(g);
        let mut out = Vec::with_capacity(ops.len());
        for chunk in ops.chunks(2) {
            let pair = [chunk[0], *chunk.get(1).unwrap_or(&chunk[0])];
            let [f0, f1] = self.pair(&hat, pair);
            out.push(f0);
            if chunk.len() == 2 {
                out.push(f1);
            }
        }
        out
    }

    /// `Delta^{-1} g`, normalised to vanish at infinity when `int g = 0`.
    pub fn solve(&self, g: &ScalarField) -> ScalarField {
        self.partials(g, &[(0, 0)]).remove(0)
    }

    /// `grad Delta^{-1} g`.
    pub fn gradient(&self, g: &ScalarField) -> VectorField {
        let [gx, gy] = self.pair(&self.solve_hat(g), [(1, 0), (0, 1)]);
        VectorField::from_pair(gx, gy)
    }

    /// `grad^perp Delta^{-1} g = (-d_y, d_x) Delta^{-1} g`.
    pub fn perp_gradient(&self, g: &ScalarField) -> VectorField {
        let [gy, gx] = self.pair(&self.solve_hat(g), [(0, 1), (1, 0)]);
        VectorField::from_pair(gy.scale(-1.0), gx)
    }
}

/// Cell average of `log|x|` over the square `[-h/2, h/2]^2`, minus `log h`.
fn unit_cell_log_average() -> f64 {
    let (t, w) = crate::harmonics::gauss_legendre(32);
    let mut acc = 0.0;
    for (ti, wi) in t.iter().zip(&w) {
        let th = PI / 8.0 * (ti + 1.0);
        let rho = 0.5 / th.cos();
        acc += wi * PI / 8.0 * (rho * rho / 2.0 * rho.ln() - rho * rho / 4.0);
    }
    8.0 * acc
}

/// Direct `O(N^2)` summation of the log kernel; cross-check for small grids.
pub fn direct_sum(g: &ScalarField) -> ScalarField {
    let grid = *g.grid();
    let h = grid.h();
    let self_term = (h.ln() + unit_cell_log_average()) / (2.0 * PI);
    let src: Vec<(f64, f64, f64)> = (0..grid.len())
        .filter(|&i| g.values()[i] != 0.0)
        .map(|i| {
            let (x, y) = grid.point(i);
            (x, y, g.values()[i] * grid.trapezoid_weight(i))
        })
        .collect();
    ScalarField::from_fn(grid, |x, y| {
        src.iter()
            .map(|&(sx, sy, q)| {
                let r2 = (x - sx).powi(2) + (y - sy).powi(2);
                if r2 == 0.0 {
                    q * self_term
                } else {
                    q * r2.ln() / (4.0 * PI)
                }
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    #[test]
    fn kernel_series_matches_bessel_form() {
        let radius: f64 = 7.3;
        for k in [2e-5, 1e-4 / radius * 0.999] {
            let kr = k * radius;
            let exact = radius * radius.ln() * libm::j1(kr) / k - (1.0 - libm::j0(kr)) / (k * k);
            let series = truncated_log_kernel(k, radius);
            assert!(
                (exact - series).abs() < 1e-6 * series.abs(),
                "{exact} {series}"
            );
        }
    }

    #[test]
    fn radial_source_matches_radial_oracle() {
        // u(r) = log r int_0^r s g ds + int_r^inf s log s g ds
        let grid = GridSpec::new(3.0, 96).unwrap();
        let g = ScalarField::from_fn(grid, |x, y| bump((x * x + y * y).sqrt() / 2.0));
        let u = FreeSpacePoisson::new(grid).solve(&g);
        let (nodes, weights) = crate::harmonics::gauss_legendre(200);
        let quad = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
            let half = (b - a) / 2.0;
            nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * half * f(a + half * (t + 1.0)))
                .sum()
        };
        let oracle = |r: f64| {
            let c = r.min(2.0);
            let inner = quad(0.0, c, &|s: f64| s * bump(s / 2.0));
            let outer = quad(c, 2.0, &|s: f64| s * s.ln() * bump(s / 2.0));
            r.ln() * inner + outer
        };
        for &(ix, iy) in &[(48usize, 48usize), (60, 48), (70, 75), (90, 10)] {
            let (x, y) = grid.point(grid.index(ix, iy));
            let r = x.hypot(y);
            if (r - 2.0).abs() < 0.3 {
                continue;
            }
            let e = oracle(r);
            assert!(
                (u.at(ix, iy) - e).abs() < 2e-3 * e.abs().max(1.0),
                "{} {e} at r={r}",
                u.at(ix, iy)
            );
        }
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let grid = GridSpec::new(2.0, 32).unwrap();
        let g = ScalarField::from_fn(grid, |x, y| {
            let r = ((x - 0.2).powi(2) + y * y).sqrt();
            (1.0 + x) * bump(r / 1.4)
        });
        let fast = FreeSpacePoisson::new(grid).solve(&g);
        let slow = direct_sum(&g);
        let err = fast.sub(&slow).max_abs() / slow.max_abs();
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn manufactured_gradient() {
        let grid = GridSpec::new(6.0, 160).unwrap();
        let phi = |x: f64, y: f64| (-(x * x + 2.0 * y * y)).exp() * (1.0 + x);
        let sd = crate::spectral::SpectralDiff::new(grid);
        let p = ScalarField::from_fn(grid, phi);
        let g = sd.laplacian(&p);
        let grad = FreeSpacePoisson::new(grid).gradient(&g);
        let exact = VectorField::from_pair(sd.partial(&p, 1, 0), sd.partial(&p, 0, 1));
        let err = grad.sub(&exact).l2_norm_inner(0.5) / exact.l2_norm_inner(0.5);
        assert!(err < 1e-8, "{err}");
    }
}
