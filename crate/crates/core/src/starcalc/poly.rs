use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

/// Polynomial `sum c[a, b] q^a p^b` with complex coefficients.
#[derive(Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<(u32, u32), C64>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&(a, b), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i) q^{a} p^{b}", c.re, c.im)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `c q^a p^b`
    pub fn monomial(a: u32, b: u32, c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn q() -> Self {
        Self::monomial(1, 0, C64::new(1.0, 0.0))
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, C64::new(1.0, 0.0))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), C64)>) -> Self {
        let mut p = Self::zero();
        for ((a, b), c) in terms {
            p.add_term(a, b, c);
        }
        p
    }

    pub fn add_term(&mut self, a: u32, b: u32, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry((a, b)).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), C64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coefficient(&self, a: u32, b: u32) -> C64 {
        self.terms.get(&(a, b)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn degree_q(&self) -> u32 {
        self.terms.keys().map(|&(a, _)| a).max().unwrap_or(0)
    }

    pub fn is_momentum_only(&self) -> bool {
        self.degree_q() == 0
    }

    pub fn eval(&self, p: f64, q: f64) -> C64 {
        self.terms
            .iter()
            .map(|(&(a, b), &c)| c * q.powi(a as i32) * p.powi(b as i32))
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&k, v)| (k, v.conj())).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_terms(self.terms().map(|(k, c)| (k, c * s)))
    }

    pub fn add(&self, other: &Poly) -> Self {
        let mut out = self.clone();
        for ((a, b), c) in other.terms() {
            out.add_term(a, b, c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Commutative pointwise product.
    pub fn mul(&self, other: &Poly) -> Self {
        let mut out = Self::zero();
        for ((a1, b1), c1) in self.terms() {
            for ((a2, b2), c2) in other.terms() {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    /// `d^i/dq^i d^j/dp^j`
    pub fn derivative(&self, i: u32, j: u32) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            if a < i || b < j {
                continue;
            }
            let factor = falling(a, i) * falling(b, j);
            out.add_term(a - i, b - j, c * factor);
        }
        out
    }

    /// Moyal product; the series terminates after `deg(self) + deg(other)`
    /// orders.
    pub fn star(&self, other: &Poly, hbar: f64) -> Self {
        let mut out = Self::zero();
        let max_order = self.degree().min(other.degree());
        let mut prefactor = C64::new(1.0, 0.0);
        for order in 0..=max_order {
            if order > 0 {
                prefactor *= C64::new(0.0, 0.5 * hbar) / order as f64;
            }
            for k in 0..=order {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let left = self.derivative(order - k, k);
                if left.is_zero() {
                    continue;
                }
                let right = other.derivative(k, order - k);
                if right.is_zero() {
                    continue;
                }
                let weight = prefactor * binomial(order, k) * sign;
                out = out.add(&left.mul(&right).scale(weight));
            }
        }
        out
    }

    /// Classical bracket `dA/dq dB/dp - dA/dp dB/dq`.
    pub fn poisson(&self, other: &Poly) -> Self {
        self.derivative(1, 0)
            .mul(&other.derivative(0, 1))
            .sub(&self.derivative(0, 1).mul(&other.derivative(1, 0)))
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn q_star_p() {
        let r = Poly::q().star(&Poly::p(), 1.0);
        assert_eq!(r.coefficient(1, 1), c(1.0));
        assert_eq!(r.coefficient(0, 0), C64::new(0.0, 0.5));
        let r = Poly::p().star(&Poly::q(), 2.0);
        assert_eq!(r.coefficient(0, 0), C64::new(0.0, -1.0));
    }

    #[test]
    fn star_of_squares() {
        // q^2 * p^2 = q^2 p^2 + 2 i hbar q p - hbar^2 / 2
        let hbar = 0.7;
        let q2 = Poly::monomial(2, 0, c(1.0));
        let p2 = Poly::monomial(0, 2, c(1.0));
        let r = q2.star(&p2, hbar);
        assert_eq!(r.coefficient(2, 2), c(1.0));
        assert!((r.coefficient(1, 1) - C64::new(0.0, 2.0 * hbar)).norm() < 1e-15);
        assert!((r.coefficient(0, 0) - c(-0.5 * hbar * hbar)).norm() < 1e-15);
    }

    #[test]
    fn derivatives_and_eval() {
        let f = Poly::from_terms([((3, 1), c(2.0)), ((0, 2), c(-1.0))]);
        assert_eq!(f.degree(), 4);
        assert_eq!(f.derivative(2, 1).coefficient(1, 0), c(12.0));
        assert!((f.eval(2.0, 3.0) - c(2.0 * 27.0 * 2.0 - 4.0)).norm() < 1e-12);
        assert_eq!(Poly::q().poisson(&Poly::p()), Poly::constant(c(1.0)));
    }
}
