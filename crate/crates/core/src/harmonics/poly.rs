//! Sparse real polynomials in up to three variables.

use std::collections::BTreeMap;

/// Exponents `(a, b, c)` of `x^a y^b z^c`.
pub type Exponents = [u8; 3];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Exponents, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(e: Exponents, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    pub fn add_term(&mut self, e: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&v| v as usize).sum())
            .max()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero();
        for (e, c) in &self.terms {
            p.add_term(*e, c * s);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(*e, *c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                p.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        p
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Partial derivative in variable `var` (0, 1, 2).
    pub fn diff(&self, var: usize) -> Self {
        let mut p = Self::zero();
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[var] -= 1;
            p.add_term(ne, c * e[var] as f64);
        }
        p
    }

    /// Iterated partial derivative by a list of variables.
    pub fn diff_many(&self, vars: &[usize]) -> Self {
        vars.iter().fold(self.clone(), |p, &v| p.diff(v))
    }

    pub fn laplacian(&self, d: usize) -> Self {
        (0..d).fold(Self::zero(), |acc, v| acc.add(&self.diff(v).diff(v)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let get = |i: usize| x.get(i).copied().unwrap_or(0.0);
        let (a, b, c) = (get(0), get(1), get(2));
        self.terms
            .iter()
            .map(|(e, coef)| coef * a.powi(e[0] as i32) * b.powi(e[1] as i32) * c.powi(e[2] as i32))
            .sum()
    }

    /// Largest coefficient magnitude.
    pub fn max_coef(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

/// Real and imaginary parts of `(x + i y)^k`.
pub fn complex_power(k: usize) -> (Polynomial, Polynomial) {
    let mut re = Polynomial::zero();
    let mut im = Polynomial::zero();
    for q in 0..=k {
        let binom = binomial(k, q) as f64;
        let e = [(k - q) as u8, q as u8, 0];
        // i^q
        match q % 4 {
            0 => re.add_term(e, binom),
            1 => im.add_term(e, binom),
            2 => re.add_term(e, -binom),
            _ => im.add_term(e, -binom),
        }
    }
    (re, im)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_power_is_harmonic() {
        for k in 0..9 {
            let (re, im) = complex_power(k);
            assert!(re.laplacian(2).max_coef() < 1e-9);
            assert!(im.laplacian(2).max_coef() < 1e-9);
        }
        let (re, im) = complex_power(3);
        // Re z^3 = x^3 - 3xy^2, Im z^3 = 3x^2 y - y^3
        assert_eq!(re.eval(&[2.0, 1.0]), 8.0 - 6.0);
        assert_eq!(im.eval(&[2.0, 1.0]), 12.0 - 1.0);
    }

    #[test]
    fn derivative_rules() {
        let p = Polynomial::monomial([2, 1, 0], 3.0).add(&Polynomial::monomial([0, 0, 3], -1.0));
        assert_eq!(p.diff(0), Polynomial::monomial([1, 1, 0], 6.0));
        assert_eq!(p.diff(2), Polynomial::monomial([0, 0, 2], -3.0));
        assert!(p.diff_many(&[0, 0, 1, 1]).is_zero());
    }
}
