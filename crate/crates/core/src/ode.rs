//! Integrators for the ZS system along the contour `x = ξ + ic·sech ξ`.
//!
//! The primary scheme is a fourth-order Magnus method applied to envelope
//! variables. Each step maps `Y -> e^{σ} exp(Ω) Y` with `σ = ±ik Δx`; the
//! product is formed from the eigenprojectors of `Ω`, so the oscillating or
//! growing phase never has to be resolved by the step size and the
//! determinant of any pair of tracks advanced together is preserved to
//! round-off. Step size is controlled by step doubling.
//!
//! A Dormand–Prince 5(4) integrator on the raw system is kept as an
//! independent cross-check.

use crate::error::{Error, Result};
use crate::potentials::PotentialPair;
use num_complex::Complex64;

pub type Vec2 = [Complex64; 2];
pub type Mat2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 400_000,
            min_step: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            ..Self::default()
        }
    }
}

/// `γ(ξ)` and `γ'(ξ)` for elevation `c`.
pub fn contour_point(c: f64, xi: f64) -> (Complex64, Complex64) {
    let sech = 1.0 / xi.cosh();
    let x = Complex64::new(xi, c * sech);
    let dx = Complex64::new(1.0, -c * xi.tanh() * sech);
    (x, dx)
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: &Mat2, v: &Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn det2(u: &Vec2, v: &Vec2) -> Complex64 {
    u[0] * v[1] - u[1] * v[0]
}

/// `dw/dξ = γ'(ξ) [[-ik, q], [r, ik]] w` coefficient at `ξ`.
fn coefficient(p: &PotentialPair, c: f64, k: Complex64, xi: f64) -> Result<Mat2> {
    let (x, dx) = contour_point(c, xi);
    let (q, r) = p.eval(x)?;
    Ok([[-I * k * dx, q * dx], [r * dx, I * k * dx]])
}

/// Fourth-order Magnus exponent over `[ξ, ξ + h]`, where `dx` is the exact
/// chord `x(ξ + h) - x(ξ)`. The constant `∓ik` diagonal integrates exactly to
/// `∓ik·dx`, so it cancels the envelope phase without quadrature error.
fn magnus_exponent(p: &PotentialPair, c: f64, k: Complex64, xi: f64, h: f64, dx: Complex64) -> Result<Mat2> {
    let off = 3f64.sqrt() / 6.0;
    let a1 = coefficient(p, c, k, xi + h * (0.5 - off))?;
    let a2 = coefficient(p, c, k, xi + h * (0.5 + off))?;
    let a21 = mat_mul(&a2, &a1);
    let a12 = mat_mul(&a1, &a2);
    let w = 3f64.sqrt() / 12.0 * h * h;
    let mut omega = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            omega[i][j] = 0.5 * h * (a1[i][j] + a2[i][j]) + w * (a21[i][j] - a12[i][j]);
        }
    }
    let quad = 0.5 * h * (a1[0][0] + a2[0][0]);
    omega[0][0] += -I * k * dx - quad;
    omega[1][1] += I * k * dx + quad;
    Ok(omega)
}

/// `e^{σ} exp(Ω)` for traceless `Ω`.
fn phased_exp(omega: &Mat2, sigma: Complex64) -> Mat2 {
    // Enforce exact tracelessness so det exp(Ω) = 1 to round-off.
    let d = 0.5 * (omega[0][0] - omega[1][1]);
    let om = [[d, omega[0][1]], [omega[1][0], -d]];
    let s = (d * d + om[0][1] * om[1][0]).sqrt();
    let size = d.norm().max(om[0][1].norm()).max(om[1][0].norm());
    // The projector form divides by s; it is only accurate once s is
    // comparable to the entries of Ω.
    if s.norm() < 0.5 && s.norm() < 0.5 * size || size == 0.0 {
        let e = sigma.exp();
        let (ch, shc) = cosh_sinhc(s);
        [
            [e * (ch + shc * om[0][0]), e * shc * om[0][1]],
            [e * shc * om[1][0], e * (ch + shc * om[1][1])],
        ]
    } else {
        // e^{σ+s} P+ + e^{σ-s} P-, P± = (I ± Ω/s)/2.
        let ep = (sigma + s).exp();
        let em = (sigma - s).exp();
        let sum = 0.5 * (ep + em);
        let diff = 0.5 * (ep - em) / s;
        [
            [sum + diff * om[0][0], diff * om[0][1]],
            [diff * om[1][0], sum + diff * om[1][1]],
        ]
    }
}

fn cosh_sinhc(s: Complex64) -> (Complex64, Complex64) {
    let s2 = s * s;
    if s.norm() < 1e-3 {
        (
            ONE + s2 / 2.0 + s2 * s2 / 24.0,
            ONE + s2 / 6.0 + s2 * s2 / 120.0,
        )
    } else {
        (s.cosh(), s.sinh() / s)
    }
}

/// Solution tracks sampled at every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub xi: Vec<f64>,
    pub x: Vec<Complex64>,
    /// `values[t][n]` is track `t` at sample `n`.
    pub values: Vec<Vec<Vec2>>,
    pub steps: usize,
}

impl Trajectory {
    pub fn index_of(&self, xi: f64) -> Option<usize> {
        self.xi.iter().position(|v| (*v - xi).abs() <= 1e-12 * (1.0 + xi.abs()))
    }
}

/// One envelope track: initial vector and phase sign (`+1` for `φe^{ikx}`-type,
/// `-1` for `φ̄e^{-ikx}`-type variables).
#[derive(Debug, Clone, Copy)]
pub struct Track {
    pub init: Vec2,
    pub phase: f64,
}

/// Integrate envelope tracks from `xi0` to `xi1`, landing exactly on every
/// point of `forced` that lies between them.
/// Differences below this (relative) are indistinguishable from round-off.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

pub fn integrate_envelopes(
    p: &PotentialPair,
    c: f64,
    k: Complex64,
    xi0: f64,
    xi1: f64,
    tracks: &[Track],
    forced: &[f64],
    tol: &Tolerances,
) -> Result<Trajectory> {
    let dir = if xi1 >= xi0 { 1.0 } else { -1.0 };
    let mut stops: Vec<f64> = forced
        .iter()
        .copied()
        .filter(|f| (f - xi0) * dir > 0.0 && (xi1 - f) * dir > 0.0)
        .collect();
    stops.push(xi1);
    stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));

    let mut xi = xi0;
    let mut x = contour_point(c, xi).0;
    let mut y: Vec<Vec2> = tracks.iter().map(|t| t.init).collect();
    let mut out = Trajectory {
        xi: vec![xi],
        x: vec![x],
        values: y.iter().map(|v| vec![*v]).collect(),
        steps: 0,
    };
    let span = (xi1 - xi0).abs().max(1e-300);
    let kscale = 1.0 + k.norm();
    let mut h = dir * (0.05 / kscale).max(1e-3);
    let advance = |from: f64, xfrom: Complex64, h: f64, y: &[Vec2]| -> Result<(Complex64, Vec<Vec2>)> {
        let xto = contour_point(c, from + h).0;
        let dx = xto - xfrom;
        let om = magnus_exponent(p, c, k, from, h, dx)?;
        let ys = tracks
            .iter()
            .zip(y)
            .map(|(t, v)| mat_vec(&phased_exp(&om, t.phase * I * k * dx), v))
            .collect();
        Ok((xto, ys))
    };

    for stop in stops {
        while (stop - xi) * dir > 1e-14 * (1.0 + stop.abs()) {
            if out.steps >= tol.max_steps {
                return Err(Error::TooManySteps { xi });
            }
            let remaining = stop - xi;
            let mut hh = h;
            let mut last = false;
            if (hh - remaining) * dir >= 0.0 {
                hh = remaining;
                last = true;
            }
            let (_, full) = advance(xi, x, hh, &y)?;
            let (xm, half) = advance(xi, x, 0.5 * hh, &y)?;
            let (xn, two) = advance(xi + 0.5 * hh, xm, 0.5 * hh, &half)?;
            // Error per unit length: the local errors of a sweep sum to at most the tolerance.
            let share = (hh / span).abs();
            let mut err = 0.0f64;
            for (a, b) in full.iter().zip(&two) {
                let size = b[0].norm().max(b[1].norm());
                let scale = ((tol.atol + tol.rtol * size) * share).max(ROUNDOFF * size.max(1.0));
                let d = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
                err = err.max(d / 15.0 / scale);
            }
            if !err.is_finite() {
                err = 1e6;
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.25)).clamp(0.2, 4.0) };
            if err <= 1.0 {
                xi = if last { stop } else { xi + hh };
                x = xn;
                y = two;
                out.steps += 1;
                out.xi.push(xi);
                out.x.push(x);
                for (t, v) in out.values.iter_mut().zip(&y) {
                    t.push(*v);
                }
                if !last {
                    h = (hh * factor).clamp(-1.0, 1.0);
                }
            } else {
                h = hh * factor;
                if h.abs() < tol.min_step {
                    return Err(Error::StepSizeUnderflow { xi });
                }
            }
        }
    }
    Ok(out)
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Raw-variable Dormand–Prince integration of `w' = γ'A w`, sampled at `forced`
/// points and the endpoint.
pub fn integrate_raw(
    p: &PotentialPair,
    c: f64,
    k: Complex64,
    xi0: f64,
    xi1: f64,
    init: Vec2,
    forced: &[f64],
    tol: &Tolerances,
) -> Result<Trajectory> {
    let dir = if xi1 >= xi0 { 1.0 } else { -1.0 };
    let mut stops: Vec<f64> = forced
        .iter()
        .copied()
        .filter(|f| (f - xi0) * dir > 0.0 && (xi1 - f) * dir > 0.0)
        .collect();
    stops.push(xi1);
    stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));

    let rhs = |xi: f64, w: &Vec2| -> Result<Vec2> { Ok(mat_vec(&coefficient(p, c, k, xi)?, w)) };
    let mut xi = xi0;
    let mut w = init;
    let mut out = Trajectory {
        xi: vec![xi],
        x: vec![contour_point(c, xi).0],
        values: vec![vec![w]],
        steps: 0,
    };
    let mut h = dir * (0.02 / (1.0 + k.norm()));
    let mut attempts = 0usize;
    for stop in stops {
        while (stop - xi) * dir > 1e-14 * (1.0 + stop.abs()) {
            attempts += 1;
            if attempts > tol.max_steps {
                return Err(Error::TooManySteps { xi });
            }
            let mut hh = h;
            let mut last = false;
            if (hh - (stop - xi)) * dir >= 0.0 {
                hh = stop - xi;
                last = true;
            }
            let mut ks: Vec<Vec2> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut arg = w;
                for (j, kj) in ks.iter().enumerate() {
                    let a = DP_A[s][j] * hh;
                    arg[0] += a * kj[0];
                    arg[1] += a * kj[1];
                }
                ks.push(rhs(xi + DP_C[s] * hh, &arg)?);
            }
            let mut y5 = w;
            let mut y4 = w;
            for (s, kv) in ks.iter().enumerate() {
                for comp in 0..2 {
                    y5[comp] += DP_B5[s] * hh * kv[comp];
                    y4[comp] += DP_B4[s] * hh * kv[comp];
                }
            }
            let scale = tol.atol + tol.rtol * y5[0].norm().max(y5[1].norm()).max(w[0].norm().max(w[1].norm()));
            let err = (y5[0] - y4[0]).norm().max((y5[1] - y4[1]).norm()) / scale;
            let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
            if err <= 1.0 && err.is_finite() {
                xi = if last { stop } else { xi + hh };
                w = y5;
                out.steps += 1;
                out.xi.push(xi);
                out.x.push(contour_point(c, xi).0);
                out.values[0].push(w);
                if !last {
                    h = (hh * factor).clamp(-1.0, 1.0);
                }
            } else {
                h = hh * if err.is_finite() { factor } else { 0.2 };
                if h.abs() < tol.min_step {
                    return Err(Error::StepSizeUnderflow { xi });
                }
            }
        }
    }
    Ok(out)
}
