//! Formal series `ζ = Σ ζ_j y^{j-2}` of the Riccati equation at the irregular
//! singularity `y = 1/x = 0`.
//!
//! The coefficients solve `ζ_0² + 2ikζ_0 = 0` and, for `j ≥ 1`,
//! `(2ζ_0 + 2ik)ζ_j + s_j(ζ_0, …, ζ_{j-1}) = 0`, with the expansion data
//! `q̄(y) = q_0y² + q_1y³ + q_2y⁴ + q_3y⁵ + …` and `r̄(y) = r_0y² + …`.
//! Only `s_1 … s_4` are known in closed form.

use crate::error::{Error, Result};
use crate::poly::{from_int, Ring};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// `ζ_0 = 0`.
    Regular,
    /// `ζ_0 = -2ik`.
    Singular,
}

pub const MAX_ORDER: usize = 4;

/// `ζ_0 … ζ_order`. `q_coeffs` holds `q_0 … q_3` (missing entries count as 0).
pub fn riccati_formal_series<T: Ring>(
    q_coeffs: &[Complex<T>],
    r0: &Complex<T>,
    k: &Complex<T>,
    branch: Branch,
    order: usize,
) -> Result<Vec<Complex<T>>> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if k.is_zero() {
        return Err(Error::ZeroSpectralParameter);
    }
    let zero = Complex::<T>::zero();
    let qc = |i: usize| q_coeffs.get(i).cloned().unwrap_or_else(|| zero.clone());
    let q0 = qc(0);
    if q0.is_zero() {
        return Err(Error::DivisionByZeroPotential(num_complex::Complex64::new(f64::INFINITY, 0.0)));
    }
    let (q1, q2, q3) = (qc(1), qc(2), qc(3));
    let int = |n: i64| Complex::new(from_int::<T>(n), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let two_ik = int(2) * i * k.clone();

    let z0 = match branch {
        Branch::Regular => zero.clone(),
        Branch::Singular => -two_ik.clone(),
    };
    let mut z = vec![z0.clone()];
    let denom = int(2) * z0.clone() + two_ik;
    let r1 = q1.clone() / q0.clone();
    let c3 = r1.clone() * r1.clone() - int(2) * q2.clone() / q0.clone();
    let c4 = r1.clone() * r1.clone() * r1.clone() - int(3) * q1.clone() * q2.clone() / (q0.clone() * q0.clone())
        + int(3) * q3 / q0.clone();
    for j in 1..=order {
        let s = match j {
            1 => -int(2) * z[0].clone(),
            2 => -r1.clone() * z[0].clone() - z[1].clone() + z[1].clone() * z[1].clone(),
            3 => c3.clone() * z[0].clone() - r1.clone() * z[1].clone() + int(2) * z[1].clone() * z[2].clone(),
            _ => {
                -c4.clone() * z[0].clone()
                    + c3.clone() * z[1].clone()
                    + r1.clone() * z[2].clone()
                    + z[2].clone() * z[2].clone()
                    + z[3].clone()
                    + int(2) * z[1].clone() * z[3].clone()
                    - q0.clone() * r0.clone()
            }
        };
        z.push(-s / denom.clone());
    }
    Ok(z)
}
