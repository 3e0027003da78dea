//! Dense univariate polynomials and truncated power series.
//!
//! Coefficients are stored in ascending order. Both types are generic over the
//! coefficient ring so the residue and formal-series code can run in exact
//! rational arithmetic as well as in `Complex64`.

use num_complex::Complex64;
use num_traits::{FromPrimitive, Num};
use std::ops::Neg;

/// Coefficient ring used by the generic algebra in this crate.
pub trait Ring: Clone + Num + Neg<Output = Self> + FromPrimitive {}
impl<T: Clone + Num + Neg<Output = T> + FromPrimitive> Ring for T {}

pub(crate) fn from_int<T: Ring>(n: i64) -> T {
    T::from_i64(n).expect("small integer representable")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Ring> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    /// Degree after trimming exact zeros; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::constant(T::zero());
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * from_int::<T>(i as i64))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = T::zero();
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).unwrap_or(&zero).clone()
                        + other.coeffs.get(i).unwrap_or(&zero).clone()
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Reverse the coefficient order: `x^deg p(1/x)`.
    pub fn reversed(&self) -> Self {
        let mut c = self.coeffs.clone();
        c.reverse();
        Self::new(c)
    }
}

impl Poly<Complex64> {
    pub fn from_complex(coeffs: &[Complex64]) -> Self {
        Self::new(coeffs.to_vec())
    }

    /// All complex roots by Aberth–Ehrlich iteration.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 || self.is_zero() {
            return Vec::new();
        }
        let lead = self.coeffs[n];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let p = Poly::new(monic);
        let dp = p.derivative();

        // Cauchy bound for the initial circle.
        let radius = 1.0
            + p.coeffs[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0_f64, f64::max);
        let mut z: Vec<Complex64> = (0..n)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64 + 0.4;
                Complex64::from_polar(0.5 * radius, theta)
            })
            .collect();

        for _ in 0..500 {
            let mut max_step = 0.0_f64;
            for i in 0..n {
                let pv = p.eval(&z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dp.eval(&z[i]);
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        // Newton polish on the original polynomial.
        for root in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval(root);
                if d.norm() == 0.0 {
                    break;
                }
                let step = p.eval(root) / d;
                if step.is_finite() {
                    *root -= step;
                }
            }
        }
        z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        z
    }
}

/// Truncated power series `sum_{i<len} c_i t^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub coeffs: Vec<T>,
}

impl<T: Ring> Series<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.len().min(other.len());
        let mut out = vec![T::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            for (j, b) in other.coeffs.iter().enumerate().take(n - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn recip(&self) -> Option<Self> {
        let c0 = self.coeffs.first()?.clone();
        if c0.is_zero() {
            return None;
        }
        let n = self.len();
        let mut out: Vec<T> = Vec::with_capacity(n);
        out.push(T::one() / c0.clone());
        for i in 1..n {
            let mut acc = T::zero();
            for j in 1..=i {
                acc = acc + self.coeffs[j].clone() * out[i - j].clone();
            }
            out.push(-acc / c0.clone());
        }
        Some(Self::new(out))
    }
}

/// `n!` in the coefficient ring.
pub(crate) fn factorial<T: Ring>(n: usize) -> T {
    (1..=n as i64).fold(T::one(), |acc, i| acc * from_int::<T>(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_quadratic() {
        // x^2 + 1
        let p = Poly::from_complex(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let r = p.roots();
        assert_eq!(r.len(), 2);
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-13);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn roots_with_repeated_factor() {
        // (x - 2)^2 (x + 1)
        let p = Poly::from_complex(&[c(4.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]);
        let r = p.roots();
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-10);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-6);
        assert!((r[2] - c(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn series_recip_of_one_minus_t() {
        let s = Series::new(vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(s.recip().unwrap().coeffs, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(Series::new(vec![0.0, 1.0]).recip().is_none());
    }

    #[test]
    fn trimming_and_degree() {
        let p = Poly::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.derivative().coeffs(), &[2.0]);
        assert_eq!(p.mul(&p).coeffs(), &[1.0, 4.0, 4.0]);
    }
}
