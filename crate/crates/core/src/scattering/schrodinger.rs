//! Scalar second-order form of the first component:
//! `ζ_xx + (k² - iku_1 + u_2)ζ = 0` with
//! `u_1 = q'/q` and `u_2 = q''/(2q) - 3q'²/(4q²) - qr`.
//!
//! For `rational_in_x` potentials the orders of `u_1`, `u_2` at `x = ∞` are
//! computed exactly in rational arithmetic (coefficients are converted from
//! `f64` without rounding). The closed-form claim `min(2(m2-m1), 2)` for the
//! order of `u_2` is reported alongside; the two differ when leading terms
//! cancel, e.g. for `q = r = 1/(x²+1)`.

use crate::analytic::cauchy_derivatives;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::potentials::PotentialPair;
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

type Exact = Complex<BigRational>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub m1: usize,
    pub m2: usize,
    pub order_u1_at_infinity: Option<i64>,
    pub order_u2_at_infinity: Option<i64>,
    /// `min(2(m2-m1), 2)`.
    pub order_u2_formula: i64,
}

#[derive(Debug, Clone)]
pub struct SchrodingerForm {
    pair: PotentialPair,
    pub orders: Option<OrderReport>,
}

fn exact(z: &Complex64) -> Result<Exact> {
    let conv = |v: f64| {
        BigRational::from_float(v).ok_or_else(|| Error::InvalidSpec(format!("non-finite coefficient {v}")))
    };
    Ok(Complex::new(conv(z.re)?, conv(z.im)?))
}

fn exact_poly(p: &Poly<Complex64>) -> Result<Poly<Exact>> {
    Ok(Poly::new(p.coeffs().iter().map(exact).collect::<Result<_>>()?))
}

/// `num/den` over exact complex rationals.
#[derive(Debug, Clone)]
struct Ratio {
    num: Poly<Exact>,
    den: Poly<Exact>,
}

impl Ratio {
    fn add(&self, o: &Ratio) -> Ratio {
        Ratio {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    fn scale(&self, c: i64, d: i64) -> Ratio {
        let s = Complex::new(BigRational::new(BigInt::from(c), BigInt::from(d)), BigRational::from_integer(BigInt::from(0)));
        Ratio {
            num: self.num.scale(&s),
            den: self.den.clone(),
        }
    }

    fn mul(&self, o: &Ratio) -> Ratio {
        Ratio {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
    }

    /// Order of vanishing at infinity; `None` for the zero function.
    fn order_at_infinity(&self) -> Option<i64> {
        if self.num.is_zero() {
            None
        } else {
            Some(self.den.degree() as i64 - self.num.degree() as i64)
        }
    }
}

fn exact_orders(parts: [&Poly<Complex64>; 4]) -> Result<OrderReport> {
    let [qn, qd, rn, rd] = parts;
    let (n, d) = (exact_poly(qn)?, exact_poly(qd)?);
    let (rn, rd) = (exact_poly(rn)?, exact_poly(rd)?);
    let (n1, d1) = (n.derivative(), d.derivative());
    let (n2, d2) = (n1.derivative(), d1.derivative());
    let u1 = Ratio {
        num: n1.mul(&d).sub(&n.mul(&d1)),
        den: n.mul(&d),
    };
    // q''/q = (N''D² - 2N'D'D - ND''D + 2ND'²)/(ND²)
    let dd = d.mul(&d);
    let qpp_over_q = Ratio {
        num: n2
            .mul(&dd)
            .sub(&n1.mul(&d1).mul(&d).scale(&int(2)))
            .sub(&n.mul(&d2).mul(&d))
            .add(&n.mul(&d1).mul(&d1).scale(&int(2))),
        den: n.mul(&dd),
    };
    let qr = Ratio { num: n.clone(), den: d.clone() }.mul(&Ratio { num: rn, den: rd });
    let u2 = qpp_over_q.scale(1, 2).add(&u1.mul(&u1).scale(-3, 4)).add(&qr.scale(-1, 1));
    let (m1, m2) = (qn.degree(), qd.degree());
    let gap = m2 as i64 - m1 as i64;
    Ok(OrderReport {
        m1,
        m2,
        order_u1_at_infinity: u1.order_at_infinity(),
        order_u2_at_infinity: u2.order_at_infinity(),
        order_u2_formula: (2 * gap).min(2),
    })
}

fn int(n: i64) -> Exact {
    Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::from_integer(BigInt::from(0)))
}

pub fn schrodinger_form(p: &PotentialPair) -> Result<SchrodingerForm> {
    let orders = match p.rational_parts() {
        Some(parts) => Some(exact_orders(parts)?),
        None => None,
    };
    Ok(SchrodingerForm { pair: p.clone(), orders })
}

impl SchrodingerForm {
    /// `(q, q'/q, q''/q)` at `x`.
    fn log_derivatives(&self, x: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
        let q = self.pair.q(x)?;
        if q.norm() == 0.0 {
            return Err(Error::DivisionByZeroPotential(x));
        }
        if let Some([n, d, _, _]) = self.pair.rational_parts() {
            let (n1, d1) = (n.derivative(), d.derivative());
            let (n2, d2) = (n1.derivative(), d1.derivative());
            let (nv, dv) = (n.eval(&x), d.eval(&x));
            let (n1v, d1v) = (n1.eval(&x), d1.eval(&x));
            let (n2v, d2v) = (n2.eval(&x), d2.eval(&x));
            let l1 = n1v / nv - d1v / dv;
            let l2 = n2v / nv - 2.0 * n1v * d1v / (nv * dv) - d2v / dv + 2.0 * d1v * d1v / (dv * dv);
            return Ok((q, l1, l2));
        }
        // q is analytic near x: differentiate on a small circle clear of real poles.
        let near = self
            .pair
            .real_poles()
            .iter()
            .map(|p| (x - Complex64::new(*p, 0.0)).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * near).min(0.05);
        let f = |z: Complex64| self.pair.q(z);
        let d = cauchy_derivatives(&f, x, radius, 2, 48)?;
        Ok((q, d[1] / q, d[2] / q))
    }

    pub fn u1(&self, x: Complex64) -> Result<Complex64> {
        Ok(self.log_derivatives(x)?.1)
    }

    pub fn u2(&self, x: Complex64) -> Result<Complex64> {
        let (q, l1, l2) = self.log_derivatives(x)?;
        let r = self.pair.r(x)?;
        Ok(0.5 * l2 - 0.75 * l1 * l1 - q * r)
    }
}
