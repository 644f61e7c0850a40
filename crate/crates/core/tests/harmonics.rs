use asymflow::harmonics::poly::Exponents;
use asymflow::harmonics::{
    eigenspace_dim, eigenvalue, mode, modes_of_degree, HarmonicMode, Polynomial, SphereQuadrature,
    MAX_DEGREE_3D,
};
use nalgebra::DMatrix;

fn all_modes(d: usize, kmax: usize) -> Vec<HarmonicMode> {
    (0..=kmax)
        .flat_map(|k| modes_of_degree(d, k).unwrap())
        .collect()
}

fn gram_error(d: usize, kmax: usize, q: &SphereQuadrature) -> f64 {
    let modes = all_modes(d, kmax);
    let vals: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| q.points.iter().map(|p| m.eval_sphere(&p[..d])).collect())
        .collect();
    let mut worst = 0.0_f64;
    for (a, va) in vals.iter().enumerate() {
        for (b, vb) in vals.iter().enumerate() {
            let g: f64 = q
                .weights
                .iter()
                .zip(va.iter().zip(vb))
                .map(|(w, (x, y))| w * x * y)
                .sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

#[test]
fn circle_modes_are_orthonormal() {
    assert!(gram_error(2, 8, &SphereQuadrature::circle(64)) < 1e-12);
}

#[test]
fn sphere_modes_are_orthonormal() {
    let err = gram_error(3, MAX_DEGREE_3D, &SphereQuadrature::sphere(24, 48));
    assert!(err < 1e-12, "gram error {err}");
}

#[test]
fn mode_polynomials_are_harmonic_and_homogeneous() {
    for d in [2, 3] {
        let kmax = if d == 2 { 8 } else { MAX_DEGREE_3D };
        for m in all_modes(d, kmax) {
            let p = m.polynomial();
            let lap = p.laplacian(d);
            assert!(
                lap.is_zero() || lap.max_coef() <= 1e-12 * p.max_coef(),
                "{:?} not harmonic",
                m.id()
            );
            if m.kprime() > 0 {
                assert_eq!(p.degree(), Some(m.kprime()));
            }
            let unit: Vec<f64> = [0.36, 0.48, 0.8][3 - d..].to_vec();
            let norm = unit.iter().map(|v| v * v).sum::<f64>().sqrt();
            let unit: Vec<f64> = unit.iter().map(|v| v / norm).collect();
            for r in [0.5, 1.7, 3.0] {
                let x: Vec<f64> = unit.iter().map(|v| r * v).collect();
                let lhs = m.eval_poly(&x);
                let rhs = r.powi(m.kprime() as i32) * m.eval_sphere(&unit);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
                    "{:?}",
                    m.id()
                );
            }
        }
    }
}

fn monomials(d: usize, k: usize) -> Vec<Exponents> {
    let mut out = Vec::new();
    for a in 0..=k {
        if d == 2 {
            out.push([a as u8, (k - a) as u8, 0]);
        } else {
            for b in 0..=(k - a) {
                out.push([a as u8, b as u8, (k - a - b) as u8]);
            }
        }
    }
    out
}

/// Nullity of the Laplacian from degree-k to degree-(k-2) homogeneous polynomials.
fn harmonic_dim(d: usize, k: usize) -> usize {
    let src = monomials(d, k);
    if k < 2 {
        return src.len();
    }
    let dst = monomials(d, k - 2);
    let mut a = DMatrix::<f64>::zeros(dst.len(), src.len());
    for (j, e) in src.iter().enumerate() {
        let lap = Polynomial::monomial(*e, 1.0).laplacian(d);
        for (t, c) in lap.terms() {
            let i = dst.iter().position(|x| x == t).unwrap();
            a[(i, j)] = *c;
        }
    }
    let rank = a.svd(false, false).rank(1e-9);
    src.len() - rank
}

#[test]
fn eigenspace_dimension_matches_null_space() {
    for k in 0..=MAX_DEGREE_3D {
        assert_eq!(
            eigenspace_dim(3, k).unwrap(),
            harmonic_dim(3, k),
            "d = 3, k' = {k}"
        );
        assert_eq!(modes_of_degree(3, k).unwrap().len(), harmonic_dim(3, k));
    }
    for k in 0..=8 {
        assert_eq!(
            eigenspace_dim(2, k).unwrap(),
            harmonic_dim(2, k),
            "d = 2, k' = {k}"
        );
    }
    assert_eq!(harmonic_dim(3, 3), 7);
}

#[test]
fn finite_difference_sphere_laplacian() {
    let h = 1e-3;
    for (d, k, l) in [(2, 3, 1), (2, 4, 2), (3, 2, 3), (3, 3, 5), (3, 5, 2)] {
        let m = mode(d, k, l).unwrap();
        let lambda = eigenvalue(d, k).unwrap();
        // g(x) = Y(x/|x|) is 0-homogeneous, so on the unit sphere its Laplacian is Delta_S Y.
        let g = |x: &[f64]| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = x.iter().map(|v| v / r).collect();
            m.eval_sphere(&u)
        };
        let p: Vec<f64> = if d == 2 {
            vec![0.6, 0.8]
        } else {
            vec![0.36, 0.48, 0.8]
        };
        let mut lap = 0.0;
        for a in 0..d {
            let mut xp = p.clone();
            let mut xm = p.clone();
            xp[a] += h;
            xm[a] -= h;
            lap += (g(&xp) - 2.0 * g(&p) + g(&xm)) / (h * h);
        }
        let y = m.eval_sphere(&p);
        assert!(
            (-lap - lambda * y).abs() < 1e-4 * (1.0 + lambda),
            "({d},{k},{l}): -lap {} vs {}",
            -lap,
            lambda * y
        );
    }
}
