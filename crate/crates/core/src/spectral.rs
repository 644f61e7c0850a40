//! Square 2D FFTs and Fourier differentiation of compactly supported fields.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::{GridSpec, ScalarField, VectorField};

/// Forward/inverse transforms of an `m x m` complex array (row-major).
pub struct Fft2 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        debug_assert_eq!(data.len(), m * m);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for ix in 0..m {
            for iy in 0..m {
                col[iy] = data[iy * m + ix];
            }
            fft.process_with_scratch(&mut col, &mut scratch);
            for iy in 0..m {
                data[iy * m + ix] = col[iy];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1 / m^2` normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / (self.m * self.m) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Signed integer frequency of FFT bin `i` on an `m`-point axis.
#[inline]
pub fn bin_frequency(i: usize, m: usize) -> i64 {
    if i < m.div_ceil(2) {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Fourier-space factor `(i k)^order` for bin `i`, zeroing the Nyquist bin
/// for odd orders.
fn derivative_factor(i: usize, m: usize, period: f64, order: usize) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let f = bin_frequency(i, m);
    if m.is_multiple_of(2) && f == -(m as i64) / 2 && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let k = 2.0 * std::f64::consts::PI * f as f64 / period;
    Complex64::new(0.0, k).powu(order as u32)
}

/// Fourier derivatives of a field that vanishes near the boundary.
///
/// The grid is treated as one period of length `n h`; accuracy is spectral
/// when the field and its derivatives are negligible on the outer rings.
pub struct SpectralDiff {
    grid: GridSpec,
    fft: Fft2,
}

impl SpectralDiff {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            fft: Fft2::new(grid.n()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn transform(&self, f: &ScalarField) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        data
    }

    /// `d^a/dx^a d^b/dy^b` applied to a precomputed transform.
    pub fn partial_from(&self, hat: &[Complex64], a: usize, b: usize) -> ScalarField {
        let n = self.grid.n();
        let period = n as f64 * self.grid.h();
        let fx: Vec<Complex64> = (0..n).map(|i| derivative_factor(i, n, period, a)).collect();
        let fy: Vec<Complex64> = (0..n).map(|i| derivative_factor(i, n, period, b)).collect();
        let mut data: Vec<Complex64> = hat
            .iter()
            .enumerate()
            .map(|(idx, &v)| v * fx[idx % n] * fy[idx / n])
            .collect();
        self.fft.inverse(&mut data);
        ScalarField::new(self.grid, data.into_iter().map(|c| c.re).collect()).expect("grid size")
    }

    pub fn partial(&self, f: &ScalarField, a: usize, b: usize) -> ScalarField {
        self.partial_from(&self.transform(f), a, b)
    }

    pub fn perp_gradient(&self, f: &ScalarField) -> VectorField {
        let hat = self.transform(f);
        VectorField::from_pair(
            self.partial_from(&hat, 0, 1).scale(-1.0),
            self.partial_from(&hat, 1, 0),
        )
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let hat = self.transform(f);
        self.partial_from(&hat, 2, 0)
            .add(&self.partial_from(&hat, 0, 2))
    }

    pub fn divergence(&self, u: &VectorField) -> ScalarField {
        self.partial(u.component(0), 1, 0)
            .add(&self.partial(u.component(1), 0, 1))
    }

    pub fn curl(&self, u: &VectorField) -> ScalarField {
        self.partial(u.component(1), 1, 0)
            .sub(&self.partial(u.component(0), 0, 1))
    }
}

/// Smallest size `>= m` whose prime factors are 2, 3 and 5.
pub fn fft_friendly(m: usize) -> usize {
    let mut k = m.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives_are_spectral() {
        let g = GridSpec::new(8.0, 64).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp());
        let sd = SpectralDiff::new(g);
        let fx = sd.partial(&f, 1, 0);
        let lap = sd.laplacian(&f);
        for idx in 0..g.len() {
            let (x, y) = g.point(idx);
            let e = (-(x * x + y * y)).exp();
            assert!((fx.values()[idx] + 2.0 * x * e).abs() < 1e-10);
            assert!((lap.values()[idx] - (4.0 * (x * x + y * y) - 4.0) * e).abs() < 1e-9);
        }
    }

    #[test]
    fn friendly_sizes() {
        assert_eq!(fft_friendly(7), 8);
        assert_eq!(fft_friendly(436), 450);
        assert_eq!(fft_friendly(512), 512);
    }
}
