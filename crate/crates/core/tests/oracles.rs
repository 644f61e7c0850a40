use std::f64::consts::PI;

use asymflow::fields::{weighted_norm, GridSpec, ScalarField, WeightSpec};
use asymflow::harmonics::{eigenvalue, mode};

fn bracket(grid: GridSpec, beta: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| (1.0 + x * x + y * y).powf(-beta / 2.0))
}

#[test]
fn bracket_power_norm_matches_radial_quadrature() {
    // int_{R^2} <x>^{-5} dx = 2 pi / 3
    let exact = (2.0 * PI / 3.0).sqrt();
    let w = WeightSpec::new(0, 2.0, -0.5).unwrap();
    let n = weighted_norm(&bracket(GridSpec::new(40.0, 512).unwrap(), 2.0), w).unwrap();
    assert!(
        ((n.value - exact) / exact).abs() < 1e-3,
        "{} vs {exact}",
        n.value
    );
    assert!(n.truncation < 1e-3);
}

#[test]
fn slow_decay_norm_grows_with_extent() {
    let w = WeightSpec::new(0, 2.0, 0.0).unwrap();
    let norms: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&l| {
            weighted_norm(&bracket(GridSpec::new(l, 256).unwrap(), 0.3), w)
                .unwrap()
                .value
        })
        .collect();
    // the truncated integral grows like L^{1.4}, the norm like L^{0.7}
    for pair in norms.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!(ratio > 1.5, "{norms:?}");
    }
}

#[test]
fn circle_laplacian_on_2048_points() {
    let n = 2048;
    let h = 2.0 * PI / n as f64;
    for k in 1..=6 {
        for l in 1..=2 {
            let m = mode(2, k, l).unwrap();
            let lambda = eigenvalue(2, k).unwrap();
            let f: Vec<f64> = (0..n).map(|i| m.eval_angle(i as f64 * h)).collect();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let lap = (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) / (h * h);
                num += (-lap - lambda * f[i]).powi(2);
                den += (lambda * f[i]).powi(2);
            }
            let r = (num / den).sqrt();
            assert!(r <= 1e-4, "k' = {k}, l = {l}: {r}");
        }
    }
}
