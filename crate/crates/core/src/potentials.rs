//! Meromorphic potential pairs `(q, r)` decaying at `x -> +-inf`.
//!
//! A [`PotentialSpec`] record is the serialized form of a potential; the
//! evaluators inside a [`PotentialPair`] are always rebuilt from it.
//!
//! The `negaton_example31` kind is the closed form
//! q = r = 32e^{2x}(4xe^{4x}+x+1)/d(x), kept as given. It is not the potential
//! that the double-pole discrete data produces.
//! The `negaton` kind is the potential actually recovered from that data,
//! q = r = -16e^{2x}(xe^{4x}+x+1)/d(x), which is reflectionless with
//! a(k) = (k-i)^2/(k+i)^2. Both share the denominator d(x).

use crate::analytic::{cauchy_derivatives, integrate_real, Rect};
use crate::cser;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::reconstruct::{Reconstruction, ReconstructionInput};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;

/// Reduction relating `r` to `q`, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    #[serde(rename = "R_EQ_Q")]
    Equal,
    #[serde(rename = "R_EQ_NEG_Q")]
    Negated,
    #[serde(rename = "R_EQ_CONJ_Q")]
    Conjugate,
    #[serde(rename = "R_EQ_NEG_CONJ_Q")]
    NegConjugate,
    #[serde(rename = "NONE")]
    None,
}

impl Symmetry {
    pub const ORDERED: [Symmetry; 4] = [
        Symmetry::Equal,
        Symmetry::Negated,
        Symmetry::Conjugate,
        Symmetry::NegConjugate,
    ];

    /// `r` implied by this reduction for a given value of `q` at real `x`.
    pub fn apply(self, q: Complex64) -> Option<Complex64> {
        match self {
            Symmetry::Equal => Some(q),
            Symmetry::Negated => Some(-q),
            Symmetry::Conjugate => Some(q.conj()),
            Symmetry::NegConjugate => Some(-q.conj()),
            Symmetry::None => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Symmetry::Equal => "R_EQ_Q",
            Symmetry::Negated => "R_EQ_NEG_Q",
            Symmetry::Conjugate => "R_EQ_CONJ_Q",
            Symmetry::NegConjugate => "R_EQ_NEG_CONJ_Q",
            Symmetry::None => "NONE",
        }
    }
}

/// Serialized constructor record: `{ "kind": ..., "params": { ... } }`.
///
/// Polynomial coefficients are listed in ascending powers, each as `[re, im]`
/// (a bare number is accepted for real coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero {},
    RationalInX {
        #[serde(with = "cser::vec")]
        q_num: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        q_den: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        r_num: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        r_den: Vec<Complex64>,
    },
    /// Rational functions of `z = exp(lambda x)`.
    RationalInExp {
        #[serde(with = "cser")]
        lambda: Complex64,
        #[serde(with = "cser::vec")]
        q_num: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        q_den: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        r_num: Vec<Complex64>,
        #[serde(with = "cser::vec")]
        r_den: Vec<Complex64>,
    },
    /// `q = A sech x`, `r` fixed by the reduction.
    SechFamily {
        #[serde(with = "cser")]
        amplitude: Complex64,
        reduction: Symmetry,
    },
    NegatonExample31 {},
    Negaton {},
    /// Reflectionless potential rebuilt from discrete spectral data.
    Reconstructed(ReconstructionInput),
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::Zero {}
    }

    pub fn sech(amplitude: f64, reduction: Symmetry) -> Self {
        PotentialSpec::SechFamily {
            amplitude: Complex64::new(amplitude, 0.0),
            reduction,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PotentialSpec::Zero {} => "zero",
            PotentialSpec::RationalInX { .. } => "rational_in_x",
            PotentialSpec::RationalInExp { .. } => "rational_in_exp",
            PotentialSpec::SechFamily { .. } => "sech_family",
            PotentialSpec::NegatonExample31 {} => "negaton_example31",
            PotentialSpec::Negaton {} => "negaton",
            PotentialSpec::Reconstructed(_) => "reconstructed",
        }
    }
}

#[derive(Debug, Clone)]
struct RationalPair {
    q_num: Poly<Complex64>,
    q_den: Poly<Complex64>,
    r_num: Poly<Complex64>,
    r_den: Poly<Complex64>,
}

#[derive(Debug, Clone)]
enum Evaluator {
    Zero,
    RationalX(RationalPair),
    RationalExp { lambda: Complex64, polys: RationalPair },
    Sech { q_amp: Complex64, r_amp: Complex64 },
    NegatonPrinted,
    Negaton,
    Reconstructed(Arc<Reconstruction>),
}

/// An evaluatable potential pair with pole and decay metadata.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    spec: PotentialSpec,
    symmetry: Symmetry,
    real_poles: Vec<f64>,
    decay_radius: f64,
    exclusion_radius: f64,
    eval: Evaluator,
}

/// Denominator of both printed negaton forms.
pub fn negaton_denominator(x: Complex64) -> Complex64 {
    let e4 = (4.0 * x).exp();
    (8.0 * x).exp() - 2.0 * (8.0 * x * x + 8.0 * x + 3.0) * e4 + 1.0
}

/// `c e^{2x}(s x e^{4x} + x + 1) / d(x)`, rescaled for `Re x > 0` to avoid overflow.
fn negaton_form(x: Complex64, c: f64, s: f64) -> Complex64 {
    let poly = 8.0 * x * x + 8.0 * x + 3.0;
    if x.re <= 0.0 {
        let e2 = (2.0 * x).exp();
        let e4 = e2 * e2;
        c * e2 * (s * x * e4 + x + 1.0) / (e4 * e4 - 2.0 * poly * e4 + 1.0)
    } else {
        let m2 = (-2.0 * x).exp();
        let m4 = m2 * m2;
        let m6 = m4 * m2;
        c * (s * x * m2 + (x + 1.0) * m6) / (1.0 - 2.0 * poly * m4 + m4 * m4)
    }
}

fn rational_exp_eval(num: &Poly<Complex64>, den: &Poly<Complex64>, z: Complex64) -> Complex64 {
    if z.norm() <= 1.0 {
        num.eval(&z) / den.eval(&z)
    } else {
        let w = 1.0 / z;
        let shift = den.degree() as i32 - num.degree() as i32;
        w.powi(shift) * num.reversed_eval(w) / den.reversed_eval(w)
    }
}

impl Poly<Complex64> {
    /// `x^deg p(1/x)` evaluated at `w`, without allocating.
    fn reversed_eval(&self, w: Complex64) -> Complex64 {
        self.coeffs()
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
    }
}

fn valuation(p: &Poly<Complex64>) -> usize {
    p.coeffs().iter().position(|c| c.norm() != 0.0).unwrap_or(0)
}

fn real_roots(p: &Poly<Complex64>) -> Vec<f64> {
    let mut out: Vec<f64> = p
        .roots()
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// Build a potential pair from its constructor record.
pub fn make_potential(spec: &PotentialSpec) -> Result<PotentialPair> {
    let (eval, symmetry, real_poles, decay_radius) = match spec {
        PotentialSpec::Zero {} => (Evaluator::Zero, Some(Symmetry::Equal), Vec::new(), 1.0),
        PotentialSpec::RationalInX {
            q_num,
            q_den,
            r_num,
            r_den,
        } => {
            let polys = rational_pair(q_num, q_den, r_num, r_den)?;
            for (num, den, name) in [(&polys.q_num, &polys.q_den, "q"), (&polys.r_num, &polys.r_den, "r")] {
                if !num.is_zero() && num.degree() >= den.degree() {
                    return Err(Error::InvalidSpec(format!(
                        "{name}: numerator degree {} must be below denominator degree {}",
                        num.degree(),
                        den.degree()
                    )));
                }
            }
            let den_roots: Vec<Complex64> = polys.q_den.roots().into_iter().chain(polys.r_den.roots()).collect();
            let decay = 1.0 + den_roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let mut poles = real_roots(&polys.q_den);
            poles.extend(real_roots(&polys.r_den));
            poles.sort_by(f64::total_cmp);
            poles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            (Evaluator::RationalX(polys), None, poles, decay)
        }
        PotentialSpec::RationalInExp {
            lambda,
            q_num,
            q_den,
            r_num,
            r_den,
        } => {
            if lambda.re <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "lambda must have positive real part, got {lambda}"
                )));
            }
            let polys = rational_pair(q_num, q_den, r_num, r_den)?;
            for (num, den, name) in [(&polys.q_num, &polys.q_den, "q"), (&polys.r_num, &polys.r_den, "r")] {
                if num.is_zero() {
                    continue;
                }
                if num.degree() >= den.degree() {
                    return Err(Error::InvalidSpec(format!("{name} does not decay as x -> +inf")));
                }
                if valuation(num) <= valuation(den) {
                    return Err(Error::InvalidSpec(format!("{name} does not decay as x -> -inf")));
                }
            }
            let ev = Evaluator::RationalExp { lambda: *lambda, polys };
            let strip = Rect::new(-1e6, 1e6, -1.0, 1.0);
            let near_axis = exp_poles(&ev, &strip);
            let decay = 1.0 + near_axis.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            let mut poles: Vec<f64> = near_axis
                .iter()
                .filter(|z| z.im.abs() < 1e-9 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect();
            poles.sort_by(f64::total_cmp);
            poles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            (ev, None, poles, decay)
        }
        PotentialSpec::SechFamily { amplitude, reduction } => {
            let r_amp = reduction.apply(*amplitude).ok_or_else(|| {
                Error::InvalidSpec("sech_family needs one of the four reductions".into())
            })?;
            (
                Evaluator::Sech {
                    q_amp: *amplitude,
                    r_amp,
                },
                Some(*reduction),
                Vec::new(),
                1.0,
            )
        }
        PotentialSpec::NegatonExample31 {} | PotentialSpec::Negaton {} => {
            let ev = if matches!(spec, PotentialSpec::Negaton {}) {
                Evaluator::Negaton
            } else {
                Evaluator::NegatonPrinted
            };
            let poles = scan_real_zeros(&|x| Ok(negaton_denominator(x)), -10.0, 10.0, 1e-12)?;
            (ev, Some(Symmetry::Equal), poles, 3.0)
        }
        PotentialSpec::Reconstructed(input) => {
            let rec = Arc::new(Reconstruction::new(input.clone())?);
            let det = |x: Complex64| rec.system_determinant(x);
            let poles = scan_real_zeros(&det, -20.0, 20.0, 1e-12)?;
            let decay = 3.0 + poles.iter().map(|p| p.abs()).fold(0.0, f64::max);
            (Evaluator::Reconstructed(rec), None, poles, decay)
        }
    };

    let mut pair = PotentialPair {
        spec: spec.clone(),
        symmetry: Symmetry::None,
        real_poles,
        decay_radius,
        exclusion_radius: DEFAULT_EXCLUSION_RADIUS,
        eval,
    };
    pair.symmetry = match symmetry {
        Some(s) => s,
        None => {
            let samples: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64 + 0.0123).collect();
            classify_symmetry(&pair, &samples, 1e-10)
        }
    };
    Ok(pair)
}

fn rational_pair(
    q_num: &[Complex64],
    q_den: &[Complex64],
    r_num: &[Complex64],
    r_den: &[Complex64],
) -> Result<RationalPair> {
    let pair = RationalPair {
        q_num: Poly::from_complex(q_num),
        q_den: Poly::from_complex(q_den),
        r_num: Poly::from_complex(r_num),
        r_den: Poly::from_complex(r_den),
    };
    if pair.q_den.is_zero() || pair.r_den.is_zero() {
        return Err(Error::InvalidSpec("denominator must be nonzero".into()));
    }
    Ok(pair)
}

/// Poles of a rational-in-exp potential inside `rect`.
fn exp_poles(ev: &Evaluator, rect: &Rect) -> Vec<Complex64> {
    let Evaluator::RationalExp { lambda, polys } = ev else {
        return Vec::new();
    };
    let period = Complex64::new(0.0, 2.0 * PI) / lambda;
    let mut out = Vec::new();
    for den in [&polys.q_den, &polys.r_den] {
        for z in den.roots() {
            if z.norm() == 0.0 {
                continue;
            }
            let base = z.ln() / lambda;
            // Walk the lattice base + n*period; the imaginary part moves
            // monotonically in n because Re(lambda) > 0.
            let im_step = period.im;
            let (lo, hi) = if im_step.abs() < 1e-300 {
                (0, 0)
            } else {
                let a = ((rect.im0 - base.im) / im_step).floor() as i64 - 1;
                let b = ((rect.im1 - base.im) / im_step).ceil() as i64 + 1;
                (a.min(b), a.max(b))
            };
            for n in lo..=hi {
                let x = base + period * n as f64;
                if rect.contains(x) {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Real zeros of an analytic `f` in `[a, b]`: local minima of `|f|` on a fine
/// grid are polished by complex Newton steps; roots that leave the axis are
/// discarded.
pub(crate) fn scan_real_zeros<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n = (((b - a) / 0.005).ceil() as usize).max(16);
    let h = (b - a) / n as f64;
    let vals: Vec<f64> = (0..=n)
        .map(|i| f(Complex64::new(a + h * i as f64, 0.0)).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let mut roots: Vec<f64> = Vec::new();
    for i in 1..n {
        if !(vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]) {
            continue;
        }
        let x0 = Complex64::new(a + h * i as f64, 0.0);
        let mut x = x0;
        let mut converged = false;
        for _ in 0..100 {
            let d = cauchy_derivatives(f, x, 1e-4 * (1.0 + x.norm()), 1, 16)?;
            let step = d[0] / d[1];
            if !step.is_finite() {
                break;
            }
            x -= step;
            if step.norm() < tol * (1.0 + x.norm()) {
                converged = true;
                break;
            }
            if (x - x0).norm() > 4.0 * h + 0.05 {
                break;
            }
        }
        if !converged {
            // Shallow minima (round-off ripple on a flat tail) are not zeros.
            let reach = ((0.2 / h) as usize).max(2);
            let local = vals[i.saturating_sub(reach)..=(i + reach).min(n)].iter().copied().fold(0.0, f64::max);
            if (x - x0).norm() > 4.0 * h + 0.05 || vals[i] > 0.1 * local {
                continue;
            }
            return Err(Error::PoleRefinement(x0.re));
        }
        if x.im.abs() < 1e-7 && x.re >= a && x.re <= b && roots.iter().all(|r| (r - x.re).abs() > 1e-7) {
            roots.push(x.re);
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

impl PotentialPair {
    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn real_poles(&self) -> &[f64] {
        &self.real_poles
    }

    pub fn decay_radius(&self) -> f64 {
        self.decay_radius
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.exclusion_radius
    }

    pub fn with_exclusion_radius(mut self, radius: f64) -> Self {
        self.exclusion_radius = radius;
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.eval, Evaluator::Zero)
    }

    /// `(q(x), r(x))`; fails inside the exclusion radius of a listed pole.
    pub fn eval(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        if self
            .real_poles
            .iter()
            .any(|p| (x - Complex64::new(*p, 0.0)).norm() < self.exclusion_radius)
        {
            return Err(Error::Domain {
                x,
                radius: self.exclusion_radius,
            });
        }
        let (q, r) = self.eval_unchecked(x)?;
        if q.is_finite() && r.is_finite() {
            Ok((q, r))
        } else {
            Err(Error::Domain {
                x,
                radius: self.exclusion_radius,
            })
        }
    }

    pub fn q(&self, x: Complex64) -> Result<Complex64> {
        self.eval(x).map(|v| v.0)
    }

    pub fn r(&self, x: Complex64) -> Result<Complex64> {
        self.eval(x).map(|v| v.1)
    }

    fn eval_unchecked(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(match &self.eval {
            Evaluator::Zero => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Evaluator::RationalX(p) => (
                p.q_num.eval(&x) / p.q_den.eval(&x),
                p.r_num.eval(&x) / p.r_den.eval(&x),
            ),
            Evaluator::RationalExp { lambda, polys } => {
                let z = (lambda * x).exp();
                (
                    rational_exp_eval(&polys.q_num, &polys.q_den, z),
                    rational_exp_eval(&polys.r_num, &polys.r_den, z),
                )
            }
            Evaluator::Sech { q_amp, r_amp } => {
                let s = sech(x);
                (q_amp * s, r_amp * s)
            }
            Evaluator::NegatonPrinted => {
                let q = negaton_form(x, 32.0, 4.0);
                (q, q)
            }
            Evaluator::Negaton => {
                let q = negaton_form(x, -16.0, 1.0);
                (q, q)
            }
            Evaluator::Reconstructed(rec) => rec.potentials_at(x)?,
        })
    }

    /// An analytic function whose zeros contain every pole of `q` and `r`.
    pub fn denominator(&self, x: Complex64) -> Option<Result<Complex64>> {
        match &self.eval {
            Evaluator::Zero => None,
            Evaluator::RationalX(p) => Some(Ok(p.q_den.eval(&x) * p.r_den.eval(&x))),
            Evaluator::RationalExp { lambda, polys } => {
                let z = (lambda * x).exp();
                Some(Ok(polys.q_den.eval(&z) * polys.r_den.eval(&z)))
            }
            Evaluator::Sech { .. } => Some(Ok(x.cosh())),
            Evaluator::NegatonPrinted | Evaluator::Negaton => Some(Ok(negaton_denominator(x))),
            Evaluator::Reconstructed(rec) => Some(rec.system_determinant(x)),
        }
    }

    /// Closed-form pole set inside `rect`, when the constructor provides one.
    pub fn known_poles(&self, rect: &Rect) -> Option<Vec<Complex64>> {
        let mut poles = self.pole_candidates(rect)?;
        let mut out: Vec<Complex64> = Vec::with_capacity(poles.len());
        poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for z in poles {
            if out.iter().all(|w| (w - z).norm() > 1e-9 * (1.0 + z.norm())) {
                out.push(z);
            }
        }
        Some(out)
    }

    fn pole_candidates(&self, rect: &Rect) -> Option<Vec<Complex64>> {
        match &self.eval {
            Evaluator::Zero => Some(Vec::new()),
            Evaluator::RationalX(p) => Some(
                p.q_den
                    .roots()
                    .into_iter()
                    .chain(p.r_den.roots())
                    .filter(|z| rect.contains(*z))
                    .collect(),
            ),
            ev @ Evaluator::RationalExp { .. } => Some(exp_poles(ev, rect)),
            Evaluator::Sech { .. } => {
                let lo = (rect.im0 / PI - 0.5).floor() as i64 - 1;
                let hi = (rect.im1 / PI - 0.5).ceil() as i64 + 1;
                Some(
                    (lo..=hi)
                        .map(|n| Complex64::new(0.0, PI * (n as f64 + 0.5)))
                        .filter(|z| rect.contains(*z))
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Exact rational data `(q_num, q_den, r_num, r_den)` for `rational_in_x` pairs.
    pub fn rational_parts(&self) -> Option<[&Poly<Complex64>; 4]> {
        match &self.eval {
            Evaluator::RationalX(p) => Some([&p.q_num, &p.q_den, &p.r_num, &p.r_den]),
            _ => None,
        }
    }

    /// `int_R^{2R} (|q|+|r|)(x) + (|q|+|r|)(-x) dx` by composite Gauss quadrature.
    pub fn tail_mass(&self, radius: f64) -> Result<f64> {
        let mut failure = None;
        let total = integrate_real(
            |t| {
                let mut s = 0.0;
                for x in [t, -t] {
                    match self.eval(Complex64::new(x, 0.0)) {
                        Ok((q, r)) => s += q.norm() + r.norm(),
                        Err(e) => failure = Some(e),
                    }
                }
                s
            },
            radius,
            2.0 * radius,
            16,
            8,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// Refine the real poles in `window` and record them on the pair.
    pub fn with_real_poles(mut self, window: (f64, f64), tol: f64) -> Result<Self> {
        let found = locate_real_poles(&self, window, tol)?;
        for p in found {
            if self.real_poles.iter().all(|q| (q - p).abs() > tol.max(1e-9)) {
                self.real_poles.push(p);
            }
        }
        self.real_poles.sort_by(f64::total_cmp);
        Ok(self)
    }
}

fn sech(x: Complex64) -> Complex64 {
    // 2 e^{-|x|} / (1 + e^{-2|x|}) avoids overflow in cosh for large |Re x|.
    let y = if x.re >= 0.0 { x } else { -x };
    let e = (-y).exp();
    2.0 * e / (1.0 + e * e)
}

/// Real poles of `p` in `window`, refined to `tol`.
pub fn locate_real_poles(p: &PotentialPair, window: (f64, f64), tol: f64) -> Result<Vec<f64>> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a < b) || tol <= 0.0 {
        return Err(Error::InvalidSpec(format!("bad pole window [{a}, {b}] or tol {tol}")));
    }
    if let Some(parts) = p.rational_parts() {
        let mut out: Vec<f64> = real_roots(parts[1])
            .into_iter()
            .chain(real_roots(parts[3]))
            .filter(|x| *x >= a && *x <= b)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() < tol);
        return Ok(out);
    }
    if p.denominator(Complex64::new(a, 0.0)).is_none() {
        return Ok(Vec::new());
    }
    let den = |x: Complex64| p.denominator(x).expect("denominator available");
    scan_real_zeros(&den, a, b, tol.min(1e-10))
}

/// First reduction (in the fixed order q, -q, q*, -q*) satisfied at every sample.
pub fn classify_symmetry(p: &PotentialPair, samples: &[f64], tol: f64) -> Symmetry {
    let values: Vec<(Complex64, Complex64)> = samples
        .iter()
        .filter_map(|x| p.eval(Complex64::new(*x, 0.0)).ok())
        .collect();
    Symmetry::ORDERED
        .into_iter()
        .find(|s| {
            values.iter().all(|(q, r)| {
                let expected = s.apply(*q).expect("ordered reductions are total");
                (r - expected).norm() <= tol * (1.0 + q.norm())
            })
        })
        .unwrap_or(Symmetry::None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn zero_potential_is_identically_zero() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        assert_eq!(p.symmetry(), Symmetry::Equal);
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(p.eval(real(x)).unwrap(), (c(0.0, 0.0), c(0.0, 0.0)));
        }
        assert!(locate_real_poles(&p, (-2.0, 2.0), 1e-8).unwrap().is_empty());
    }

    #[test]
    fn printed_negaton_at_origin() {
        // d(0) = 1 - 6 + 1 = -4, q(0) = 32 / -4.
        assert!((negaton_denominator(real(0.0)) - real(-4.0)).norm() < 1e-15);
        let p = make_potential(&PotentialSpec::NegatonExample31 {}).unwrap();
        let (q, r) = p.eval(real(0.0)).unwrap();
        assert!((q - real(-8.0)).norm() < 1e-13);
        assert_eq!(q, r);
        assert_eq!(p.symmetry(), Symmetry::Equal);
    }

    #[test]
    fn negaton_forms_agree_across_overflow_branch() {
        let x = c(0.3, 0.2);
        let direct = |c0: f64, s: f64| {
            let e2 = (2.0 * x).exp();
            c0 * e2 * (s * x * e2.powi(2) + x + 1.0) / negaton_denominator(x)
        };
        assert!((negaton_form(x, 32.0, 4.0) - direct(32.0, 4.0)).norm() < 1e-12);
        assert!((negaton_form(-x, -16.0, 1.0) - {
            let e2 = (-2.0 * x).exp();
            -16.0 * e2 * (-x * e2.powi(2) - x + 1.0) / negaton_denominator(-x)
        })
        .norm()
            < 1e-12);
        assert!((negaton_form(x, -16.0, 1.0) - direct(-16.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn negaton_real_poles_match_printed_loci() {
        let p = make_potential(&PotentialSpec::NegatonExample31 {}).unwrap();
        let poles = locate_real_poles(&p, (-2.0, 2.0), 1e-10).unwrap();
        assert_eq!(poles.len(), 2);
        assert!((poles[0] + 0.245036).abs() < 1e-5);
        assert!((poles[1] - 0.864558).abs() < 1e-5);
        // d(-0.245) is already close to zero at the printed digits.
        assert!(negaton_denominator(real(-0.245036)).norm() < 1e-4);
        assert_eq!(p.real_poles(), poles.as_slice());
    }

    #[test]
    fn evaluation_inside_exclusion_radius_fails() {
        let p = make_potential(&PotentialSpec::Negaton {}).unwrap();
        let pole = p.real_poles()[0];
        let err = p.eval(real(pole + 5e-4)).unwrap_err();
        assert_eq!(err.name(), "DomainError");
        assert!(p.eval(real(pole + 5e-3)).is_ok());
    }

    #[test]
    fn sech_family_reductions() {
        let p = make_potential(&PotentialSpec::sech(2.0, Symmetry::NegConjugate)).unwrap();
        let (q, r) = p.eval(real(0.7)).unwrap();
        assert!((q - real(2.0 / 0.7f64.cosh())).norm() < 1e-14);
        assert!((r + q).norm() < 1e-14);
        assert_eq!(classify_symmetry(&p, &[-1.0, 0.0, 0.5, 3.0], 1e-12), Symmetry::Negated);

        let pi = make_potential(&PotentialSpec::SechFamily {
            amplitude: c(0.0, 1.0),
            reduction: Symmetry::Equal,
        })
        .unwrap();
        assert_eq!(classify_symmetry(&pi, &[-1.0, 0.2, 2.0], 1e-12), Symmetry::Equal);
        // i sech x is not its own conjugate.
        let (q, r) = pi.eval(real(0.2)).unwrap();
        assert!((r - q.conj()).norm() > 0.1);
    }

    #[test]
    fn sech_is_stable_far_out() {
        let p = make_potential(&PotentialSpec::sech(1.0, Symmetry::Equal)).unwrap();
        let (q, _) = p.eval(c(800.0, 0.5)).unwrap();
        assert!(q.is_finite() && q.norm() < 1e-300);
    }

    #[test]
    fn rational_spec_rejects_non_decaying() {
        let bad = PotentialSpec::RationalInX {
            q_num: vec![real(1.0), real(1.0)],
            q_den: vec![real(1.0), real(1.0)],
            r_num: vec![real(1.0)],
            r_den: vec![real(1.0), real(0.0), real(1.0)],
        };
        assert_eq!(make_potential(&bad).unwrap_err().name(), "InvalidSpec");
    }

    #[test]
    fn rational_symmetry_none_and_poles() {
        let spec = PotentialSpec::RationalInX {
            q_num: vec![real(0.0), real(1.0)],
            q_den: vec![real(-1.0), real(0.0), real(1.0)],
            r_num: vec![real(0.0), real(2.0)],
            r_den: vec![real(-1.0), real(0.0), real(1.0)],
        };
        let p = make_potential(&spec).unwrap();
        assert_eq!(p.symmetry(), Symmetry::None);
        assert_eq!(p.real_poles().len(), 2);
        assert!((p.real_poles()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rational_exp_rejects_bad_lambda_and_evaluates() {
        let mk = |lambda: Complex64| PotentialSpec::RationalInExp {
            lambda,
            q_num: vec![real(0.0), real(2.0)],
            q_den: vec![real(1.0), real(0.0), real(1.0)],
            r_num: vec![real(0.0), real(2.0)],
            r_den: vec![real(1.0), real(0.0), real(1.0)],
        };
        assert_eq!(make_potential(&mk(real(-1.0))).unwrap_err().name(), "InvalidSpec");
        assert_eq!(make_potential(&mk(c(0.0, 1.0))).unwrap_err().name(), "InvalidSpec");
        // 2z/(1+z^2) with z = e^x is sech x.
        let p = make_potential(&mk(real(1.0))).unwrap();
        for x in [-30.0, -1.0, 0.4, 25.0] {
            let (q, _) = p.eval(real(x)).unwrap();
            assert!((q - sech(real(x))).norm() < 1e-14 * (1.0 + sech(real(x)).norm()));
        }
        let poles = p.known_poles(&Rect::new(-1.0, 1.0, 0.0, 5.0)).unwrap();
        assert_eq!(poles.len(), 2);
        assert_eq!(p.symmetry(), Symmetry::Equal);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = PotentialSpec::sech(1.5, Symmetry::NegConjugate);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"sech_family","params":{"amplitude":[1.5,0.0],"reduction":"R_EQ_NEG_CONJ_Q"}}"#
        );
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let zero: PotentialSpec = serde_json::from_str(r#"{"kind":"zero","params":{}}"#).unwrap();
        assert_eq!(zero, PotentialSpec::zero());
    }

    #[test]
    fn tail_mass_shrinks_beyond_decay_radius() {
        for spec in [
            PotentialSpec::sech(2.0, Symmetry::Negated),
            PotentialSpec::Negaton {},
            PotentialSpec::RationalInX {
                q_num: vec![real(1.0)],
                q_den: vec![real(1.0), real(0.0), real(1.0)],
                r_num: vec![real(1.0)],
                r_den: vec![real(1.0), real(0.0), real(1.0)],
            },
        ] {
            let p = make_potential(&spec).unwrap();
            let r0 = p.decay_radius();
            let masses: Vec<f64> = (0..5).map(|j| p.tail_mass(r0 * 2f64.powi(j)).unwrap()).collect();
            assert!(masses.windows(2).all(|w| w[1] < w[0]), "{:?}: {masses:?}", spec.kind());
        }
    }
}
