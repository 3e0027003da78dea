//! Residues of `M(x;κ)/((k-κ)a(κ))` at a zero of `a`, by exact series division.
//!
//! Near an upper zero `k_j` of multiplicity `ν`, write `ε = κ - k_j`,
//! `a = ε^ν A(ε)` and `M = β(ε) e^{2ik_j x} e^{2iεx} N(ε)` to order `ν-1`,
//! where `β` carries the Taylor data of `b`. With
//! `P(ε) = β(ε) e^{2iεx} / A(ε) = Σ P_n(x) ε^n` the residue is
//!
//! ```text
//! e^{2ik_j x} Σ_{m=1..ν} (k-k_j)^{-m} Σ_{r=0..ν-m} P_{ν-m-r}(x)/r! · N_j^r(x)
//! ```
//!
//! Each `P_n` is a polynomial in `x` of degree `n`. Lower zeros use `ā`, `b̄`,
//! `e^{-2iεx}` and the unknowns `N̄_j^r`. Everything here is generic over the
//! real scalar, so the same code runs in `f64` and in exact rationals.

use crate::error::{Error, Result};
use crate::poly::{factorial, from_int, Poly, Ring, Series};
use num_complex::Complex;
use num_traits::{ToPrimitive, Zero};

/// One term `coeff(x) · (k - pole)^{-order} · e^{±2i·pole·x} · unknown_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueTerm<R> {
    pub order: usize,
    pub unknown: usize,
    pub coeff: Poly<R>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueExpansion<R> {
    pub pole: R,
    /// Zero of `a` in the upper half-plane (phase `e^{2i·pole·x}`), else of `ā`.
    pub upper: bool,
    pub multiplicity: usize,
    pub terms: Vec<ResidueTerm<R>>,
}

impl<R> ResidueExpansion<R> {
    pub fn term(&self, order: usize, unknown: usize) -> Option<&ResidueTerm<R>> {
        self.terms.iter().find(|t| t.order == order && t.unknown == unknown)
    }
}

fn approx<T: ToPrimitive>(z: &Complex<T>) -> num_complex::Complex64 {
    num_complex::Complex64::new(
        z.re.to_f64().unwrap_or(f64::NAN),
        z.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// Series coefficients `P_0..P_{ν-1}` as polynomials in `x`.
///
/// `a_derivatives[i] = a^{(ν+i)}(pole)`, `b_derivatives[r] = b^{(r)}(pole)`;
/// only the first `ν` entries of each are used.
pub fn residue_series<T>(
    pole: &Complex<T>,
    upper: bool,
    multiplicity: usize,
    a_derivatives: &[Complex<T>],
    b_derivatives: &[Complex<T>],
) -> Result<Vec<Poly<Complex<T>>>>
where
    T: Ring + ToPrimitive,
{
    let nu = multiplicity;
    if nu == 0 {
        return Err(Error::InvalidSpec("multiplicity must be positive".into()));
    }
    let got = a_derivatives.len().min(b_derivatives.len());
    if got < nu {
        return Err(Error::InsufficientDerivatives {
            location: approx(pole),
            needed: nu,
            got,
        });
    }
    let a_series = Series::new(
        (0..nu)
            .map(|i| a_derivatives[i].clone() / factorial::<Complex<T>>(nu + i))
            .collect(),
    );
    let inv_a = a_series.recip().ok_or_else(|| {
        Error::InvalidSpec(format!("a^({nu}) vanishes at {}", approx(pole)))
    })?;
    let beta = Series::new(
        (0..nu)
            .map(|r| b_derivatives[r].clone() / factorial::<Complex<T>>(r))
            .collect(),
    );
    let ratio = beta.mul(&inv_a);
    // e^{±2iεx} = Σ_l (±2i x)^l / l! ε^l
    let two_i = Complex::new(T::zero(), from_int::<T>(if upper { 2 } else { -2 }));
    let mut out = Vec::with_capacity(nu);
    for n in 0..nu {
        let mut coeffs = vec![Complex::<T>::zero(); n + 1];
        let mut power = Complex::new(T::one(), T::zero());
        for (l, slot) in coeffs.iter_mut().enumerate() {
            if l > 0 {
                power = power * two_i.clone();
            }
            *slot = ratio.coeffs[n - l].clone() * power.clone() / factorial::<Complex<T>>(l);
        }
        out.push(Poly::new(coeffs));
    }
    Ok(out)
}

/// Residue expansion at one zero: the coefficient of
/// `(k-pole)^{-m} e^{±2i·pole·x} N^r` is `P_{ν-m-r}(x) / r!`.
pub fn residue_terms<T>(
    pole: &Complex<T>,
    upper: bool,
    multiplicity: usize,
    a_derivatives: &[Complex<T>],
    b_derivatives: &[Complex<T>],
) -> Result<ResidueExpansion<Complex<T>>>
where
    T: Ring + ToPrimitive,
{
    let p = residue_series(pole, upper, multiplicity, a_derivatives, b_derivatives)?;
    let nu = multiplicity;
    let mut terms = Vec::new();
    for m in 1..=nu {
        for r in 0..=(nu - m) {
            let coeff = p[nu - m - r].scale(&(Complex::new(T::one(), T::zero()) / factorial::<Complex<T>>(r)));
            terms.push(ResidueTerm { order: m, unknown: r, coeff });
        }
    }
    Ok(ResidueExpansion {
        pole: pole.clone(),
        upper,
        multiplicity: nu,
        terms,
    })
}
