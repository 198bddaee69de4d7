//! Polynomials in `a`, `a†` kept in normal order, `Σ c_pq a†ᵖ a^q`.
//!
//! Products are reordered with `a^q a†ˢ = Σₖ C(q,k) C(s,k) k! a†^{s−k} a^{q−k}`,
//! so expectation values reduce to the state moments `⟨a†ᵖ a^q⟩`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use num_complex::Complex;

use crate::fock::CMatrix;
use crate::num::{cplx, Real};
use crate::ramsey::CMState;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalPoly<T: Real> {
    terms: BTreeMap<(u32, u32), Complex<T>>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

impl<T: Real> NormalPoly<T> {
    pub fn constant(c: Complex<T>) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `c·a†ᵖ a^q`.
    pub fn monomial(p: u32, q: u32, c: Complex<T>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((p, q), c);
        Self { terms }
    }

    pub fn a() -> Self {
        Self::monomial(0, 1, cplx(T::one()))
    }

    pub fn adag() -> Self {
        Self::monomial(1, 0, cplx(T::one()))
    }

    pub fn number() -> Self {
        Self::monomial(1, 1, cplx(T::one()))
    }

    pub fn scale(mut self, c: Complex<T>) -> Self {
        for v in self.terms.values_mut() {
            *v *= c;
        }
        self
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&(p, q), c)| ((q, p), c.conj())).collect() }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, Complex<T>)> + '_ {
        self.terms.iter().map(|(&(p, q), &c)| (p, q, c))
    }

    /// Expectation value given the normal-ordered moments `⟨a†ᵖ a^q⟩`.
    pub fn expect_with<F: FnMut(u32, u32) -> Complex<T>>(&self, mut moment: F) -> Complex<T> {
        self.terms().fold(cplx(T::zero()), |acc, (p, q, c)| acc + c * moment(p, q))
    }
}

impl<T: Real> Add for NormalPoly<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (k, v) in rhs.terms {
            *self.terms.entry(k).or_insert(cplx(T::zero())) += v;
        }
        self
    }
}

impl<T: Real> Mul for &NormalPoly<T> {
    type Output = NormalPoly<T>;
    fn mul(self, rhs: Self) -> NormalPoly<T> {
        let mut out = NormalPoly::default();
        for (&(p, q), &c1) in &self.terms {
            for (&(r, s), &c2) in &rhs.terms {
                // a†ᵖ a^q a†ʳ a^s
                for k in 0..=q.min(r) {
                    let w = T::lit(binomial(q, k) * binomial(r, k) * factorial(k));
                    *out.terms.entry((p + r - k, q + s - k)).or_insert(cplx(T::zero())) += c1 * c2 * cplx(w);
                }
            }
        }
        out
    }
}

/// Normal-ordered moments `⟨a†ᵖ a^q⟩` of a state, cached up to `order`.
pub struct MomentTable<T: Real> {
    order: u32,
    values: Vec<Complex<T>>,
}

impl<T: Real> MomentTable<T> {
    pub fn from_state(state: &CMState<T>, order: u32) -> Self {
        let dim = state.dim();
        let a = {
            let mut a = CMatrix::<T>::zeros(dim, dim);
            for m in 0..dim - 1 {
                a[(m, m + 1)] = cplx(T::from_usize_lossy(m + 1).sqrt());
            }
            a
        };
        let rho = state.density();
        // aq_rho[q] = a^q ρ
        let mut left = vec![rho];
        for q in 1..=order as usize {
            let next = &a * &left[q - 1];
            left.push(next);
        }
        let ad = a.adjoint();
        let mut values = vec![cplx(T::zero()); ((order + 1) * (order + 1)) as usize];
        for (q, m) in left.iter().enumerate() {
            // Tr(a†ᵖ a^q ρ) = Tr(a^q ρ a†ᵖ)
            let mut cur = m.clone();
            for p in 0..=order as usize {
                if p > 0 {
                    cur = &cur * &ad;
                }
                values[p * (order as usize + 1) + q] = cur.trace();
            }
        }
        Self { order, values }
    }

    pub fn get(&self, p: u32, q: u32) -> Complex<T> {
        assert!(p <= self.order && q <= self.order, "moment order exceeds table");
        self.values[(p * (self.order + 1) + q) as usize]
    }

    pub fn expect(&self, poly: &NormalPoly<T>) -> Complex<T> {
        poly.expect_with(|p, q| self.get(p, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_is_identity() {
        let a = NormalPoly::<f64>::a();
        let ad = NormalPoly::<f64>::adag();
        let c = &a * &ad + (&ad * &a).scale(cplx(-1.0));
        let nonzero: Vec<_> = c.terms().filter(|t| t.2.norm() > 0.0).collect();
        assert_eq!(nonzero, vec![(0, 0, cplx(1.0))]);
    }

    #[test]
    fn number_squared() {
        let n = NormalPoly::<f64>::number();
        let n2 = &n * &n;
        // n² = a†²a² + a†a
        assert_eq!(n2.terms().collect::<Vec<_>>(), vec![(1, 1, cplx(1.0)), (2, 2, cplx(1.0))]);
    }

    #[test]
    fn moments_of_fock_and_coherent() {
        let s = CMState::<f64>::fock(20, 3).unwrap();
        let t = MomentTable::from_state(&s, 4);
        assert!((t.get(1, 1).re - 3.0).abs() < 1e-12);
        assert!((t.get(2, 2).re - 6.0).abs() < 1e-12);
        assert!(t.get(0, 2).norm() < 1e-15);
        let alpha = Complex::new(0.6, -0.2);
        let s = CMState::coherent(40, alpha).unwrap();
        let t = MomentTable::from_state(&s, 3);
        let expect = alpha.conj().powu(2) * alpha.powu(3);
        assert!((t.get(2, 3) - expect).norm() < 1e-12);
    }
}
