//! Discrete spectrum: zeros of `a` in the upper half-plane and of `ā` in the
//! lower one, with the derivative data of `a` and the norming data of `b`
//! that the reconstruction consumes.
//!
//! At a zero `k_j` of `a` the envelopes are proportional,
//! `M(x;k_j) = b(k_j) e^{2ik_j x} N(x;k_j)`. Away from `k_j` the ratio
//! `β(κ) = M_1(x_0;κ) e^{-2iκx_0} / N_1(x_0;κ)` at a fixed contour point `x_0`
//! is analytic, and its Taylor data up to order `ν-1` is the norming data
//! `b^{(r)}(k_j)`. Lower zeros use `β̄(κ) = M̄_2(x_0;κ) e^{2iκx_0} / N̄_2(x_0;κ)`.

use crate::analytic::{cauchy_derivatives, newton_refine, winding_number, Rect, WindingOptions};
use crate::contour::{integrate_jost, Contour, JostTag};
use crate::cser;
use crate::error::{Error, Result};
use crate::ode::{det2, Tolerances, Vec2};
use crate::potentials::PotentialPair;
use crate::reconstruct::ReconstructionInput;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest multiplicity accepted.
pub const MAX_MULTIPLICITY: usize = 4;

/// Zeros closer than this to the real axis are flagged.
pub const NEAR_AXIS: f64 = 0.05;

/// One zero of `a` (or `ā`) with its multiplicity and spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEigen {
    #[serde(with = "cser")]
    pub location: Complex64,
    pub multiplicity: usize,
    /// `a^{(m)}(k_j)` for `m = ν … 2ν-1`.
    #[serde(with = "cser::vec")]
    pub a_derivatives: Vec<Complex64>,
    /// `b^{(r)}(k_j)` for `r = 0 … ν-1`.
    #[serde(with = "cser::vec")]
    pub b_derivatives: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DiscreteEigen {
    pub fn new(location: Complex64, multiplicity: usize, a_derivatives: Vec<Complex64>, b_derivatives: Vec<Complex64>) -> Self {
        Self {
            location,
            multiplicity,
            a_derivatives,
            b_derivatives,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub upper: Vec<DiscreteEigen>,
    pub lower: Vec<DiscreteEigen>,
    /// Winding counts of `a` over the region and of `ā` over its mirror image.
    pub upper_count: i64,
    pub lower_count: i64,
    pub warnings: Vec<String>,
}

impl DiscreteSpectrum {
    pub fn to_input(&self) -> ReconstructionInput {
        ReconstructionInput {
            upper: self.upper.clone(),
            lower: self.lower.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub tol: Tolerances,
    pub winding: WindingOptions,
    /// Cells holding several zeros are not split below this size.
    pub min_cell: f64,
    /// Quadrature points on each Cauchy circle.
    pub circle_points: usize,
    /// Newton stops once the step falls below this.
    pub newton_tol: f64,
    /// Relative ODE tolerance for the winding-number search, which needs
    /// only the argument of `a`.
    pub search_rtol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            winding: WindingOptions::default(),
            min_cell: 0.02,
            circle_points: 64,
            newton_tol: 1e-11,
            search_rtol: 1e-6,
        }
    }
}

/// Default search rectangle `[-5, 5] × [0.05, 5]`.
pub fn default_region() -> Rect {
    Rect::new(-5.0, 5.0, 0.05, 5.0)
}

/// Number of zeros of `a_fn` inside `rect`, counted with multiplicity.
pub fn count_zeros<F>(a_fn: &F, rect: &Rect) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    Ok(winding_number(a_fn, rect, &WindingOptions::default())?.count)
}

/// Newton refinement of a simple zero, derivative from a Cauchy circle.
pub fn refine_zero<F>(a_fn: &F, k0: Complex64, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    newton_refine(a_fn, k0, tol, 100)
}

/// Envelope pair `(M, N)` (upper) or `(M̄, N̄)` (lower) at the points `xis`.
fn envelopes(p: &PotentialPair, contour: &Contour, k: Complex64, upper: bool, xis: &[f64], tol: &Tolerances) -> Result<Vec<(Vec2, Vec2)>> {
    let tags = if upper {
        [JostTag::Phi, JostTag::Psi]
    } else {
        [JostTag::PhiBar, JostTag::PsiBar]
    };
    let sols = integrate_jost(p, k, contour, &tags, xis, tol)?;
    xis.iter()
        .map(|&xi| match (sols[0].at(xi), sols[1].at(xi)) {
            (Some(m), Some(n)) => Ok((m, n)),
            _ => Err(Error::InvalidSpec(format!("integration missed matching point {xi}"))),
        })
        .collect()
}

/// `a` (upper) or `ā` (lower) at `k`, from the Wronskian at `ξ = 0`.
pub fn transmission_inverse(p: &PotentialPair, contour: &Contour, k: Complex64, upper: bool, tol: &Tolerances) -> Result<Complex64> {
    let (m, n) = envelopes(p, contour, k, upper, &[0.0], tol)?[0];
    Ok(if upper { det2(&m, &n) } else { det2(&n, &m) })
}

/// Norming ratio at `x0` from component `c`.
fn norming(m: &Vec2, n: &Vec2, k: Complex64, x0: Complex64, upper: bool, c: usize) -> Complex64 {
    let sign = if upper { -2.0 } else { 2.0 };
    m[c] * (sign * I * k * x0).exp() / n[c]
}

/// Newton iteration on `a^{(ν-1)}`, which has a simple zero where `a` has a
/// zero of multiplicity `ν`.
fn refine_multiple<F>(f: &F, k0: Complex64, nu: usize, reach: f64, opts: &SpectrumOptions) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut k = k0;
    for _ in 0..60 {
        let radius = (0.25 * k.im.abs()).min(0.1);
        let d = cauchy_derivatives(f, k, radius, nu, 32)?;
        let step = d[nu - 1] / d[nu];
        if !step.is_finite() {
            return Err(Error::NoConvergence(k0));
        }
        k -= step;
        if (k - k0).norm() > reach || k.im * k0.im <= 0.0 {
            return Err(Error::NoConvergence(k0));
        }
        if step.norm() < opts.newton_tol * k.norm().max(1.0) {
            return Ok(k);
        }
    }
    Err(Error::NoConvergence(k0))
}

/// `a^{(m)}(k)` is negligible against `a^{(ν)}(k)` for every `m < ν`.
fn consistent_signature<F>(f: &F, k: Complex64, nu: usize) -> Result<bool>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let radius = (0.25 * k.im.abs()).min(0.1);
    let d = cauchy_derivatives(f, k, radius, nu, 32)?;
    let scale = d[nu].norm();
    Ok(scale > 0.0 && d[..nu].iter().all(|v| v.norm() < SIGNATURE_TOL * scale))
}

/// Relative size below which lower derivatives count as zero.
const SIGNATURE_TOL: f64 = 1e-6;

/// Cells holding several zeros are tried as one multiple zero below this size.
const CLUSTER_CELL: f64 = 0.5;

/// Split `rect` (holding `count` zeros of the cheap search function `search`)
/// until every zero is refined on the accurate function `a_fn`.
fn locate<S, F>(search: &S, a_fn: &F, rect: Rect, count: i64, opts: &SpectrumOptions, depth: usize) -> Result<Vec<(Complex64, usize)>>
where
    S: Fn(Complex64) -> Result<Complex64> + Sync,
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if count <= 0 {
        return Ok(Vec::new());
    }
    let size = rect.width().max(rect.height());
    let reach = size + 0.1;
    if count == 1 && size < 0.25 {
        return Ok(vec![(refine_multiple(a_fn, rect.center(), 1, reach, opts)?, 1)]);
    }
    if count > 1 && size < CLUSTER_CELL {
        let nu = count as usize;
        if nu <= MAX_MULTIPLICITY {
            if let Ok(k) = refine_multiple(a_fn, rect.center(), nu, reach, opts) {
                if consistent_signature(a_fn, k, nu)? {
                    return Ok(vec![(k, nu)]);
                }
            }
        }
    }
    if size < opts.min_cell || depth > 60 {
        return Err(Error::ClusterUnresolved(rect.center()));
    }
    // Off-centre fractions keep split lines away from symmetric zero locations.
    for frac in [0.4731, 0.5377, 0.3911, 0.6089] {
        let halves = rect.split(frac);
        let first = match winding_number(search, &halves[0], &opts.winding) {
            Ok(w) => w.count,
            Err(Error::BoundaryZero { .. }) | Err(Error::NonIntegerWinding { .. }) => continue,
            Err(e) => return Err(e),
        };
        let second = count - first;
        if first < 0 || second < 0 {
            continue;
        }
        let mut out = locate(search, a_fn, halves[0], first, opts, depth + 1)?;
        out.extend(locate(search, a_fn, halves[1], second, opts, depth + 1)?);
        return Ok(out);
    }
    Err(Error::ClusterUnresolved(rect.center()))
}

fn harvest(p: &PotentialPair, contour: &Contour, region: &Rect, upper: bool, opts: &SpectrumOptions) -> Result<(Vec<DiscreteEigen>, i64)> {
    let a_fn = |k: Complex64| transmission_inverse(p, contour, k, upper, &opts.tol);
    let search_tol = Tolerances {
        rtol: opts.search_rtol.max(opts.tol.rtol),
        ..opts.tol
    };
    let search = |k: Complex64| transmission_inverse(p, contour, k, upper, &search_tol);
    let total = winding_number(&search, region, &opts.winding)?.count;
    if total < 0 {
        return Err(Error::NonIntegerWinding { raw: total as f64 });
    }
    let zeros = locate(&search, &a_fn, *region, total, opts, 0)?;
    if zeros.iter().any(|z| z.1 > MAX_MULTIPLICITY) {
        return Err(Error::ClusterUnresolved(zeros[0].0));
    }

    let matching = contour.matching_points();
    let mut out = Vec::with_capacity(zeros.len());
    for (j, &(k, nu)) in zeros.iter().enumerate() {
        let nearest = zeros
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, z)| (z.0 - k).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * nearest).min(0.25 * k.im.abs());
        let mut warnings = Vec::new();

        // Base point: the matching point with the largest primary denominator.
        let c = if upper { 0 } else { 1 };
        let at_k = envelopes(p, contour, k, upper, &matching, &opts.tol)?;
        let (best, _) = at_k
            .iter()
            .enumerate()
            .map(|(i, (_, n))| (i, n[c].norm()))
            .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let xi0 = matching[best];
        let x0 = contour.point(xi0);
        let (m, n) = at_k[best];
        let (b1, b2) = (norming(&m, &n, k, x0, upper, c), norming(&m, &n, k, x0, upper, 1 - c));
        if (b1 - b2).norm() > 1e-6 * b1.norm().max(1.0) {
            warnings.push(format!("component ratios disagree by {:.3e}", (b1 - b2).norm()));
        }

        let f_a = |z: Complex64| transmission_inverse(p, contour, z, upper, &opts.tol);
        let a_d = cauchy_derivatives(&f_a, k, radius, 2 * nu - 1, opts.circle_points)?;
        let scale = a_d[nu].norm();
        if scale == 0.0 {
            return Err(Error::ClusterUnresolved(k));
        }
        for (m_ord, v) in a_d.iter().enumerate().take(nu) {
            if v.norm() > 1e-6 * scale {
                if nu > 1 {
                    return Err(Error::ClusterUnresolved(k));
                }
                warnings.push(format!("|a^({m_ord})| = {:.3e} at the refined zero", v.norm()));
            }
        }
        let b_d = if nu == 1 {
            vec![b1]
        } else {
            let f_b = |z: Complex64| {
                let (m, n) = envelopes(p, contour, z, upper, &[xi0], &opts.tol)?[0];
                Ok(norming(&m, &n, z, x0, upper, c))
            };
            let mut d = cauchy_derivatives(&f_b, k, radius, nu - 1, opts.circle_points)?;
            d[0] = b1;
            d
        };
        if k.im.abs() < NEAR_AXIS {
            warnings.push(format!("NearRealAxis: Im k = {:.3e}", k.im));
        }
        if nu >= 3 {
            warnings.push(format!("multiplicity {nu} has no reference data"));
        }
        out.push(DiscreteEigen {
            location: k,
            multiplicity: nu,
            a_derivatives: a_d[nu..2 * nu].to_vec(),
            b_derivatives: b_d,
            warnings,
        });
    }
    // Real parts closer than the refinement noise count as equal.
    let key = |e: &DiscreteEigen| ((e.location.re * 1e6).round(), e.location.im);
    out.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    Ok((out, total))
}

/// Zeros of `a` in `region` (upper half-plane) and of `ā` in its mirror image.
pub fn extract_discrete_data(p: &PotentialPair, contour: &Contour, region: &Rect, opts: &SpectrumOptions) -> Result<DiscreteSpectrum> {
    if region.im0 <= 0.0 || region.im1 <= region.im0 || region.re1 <= region.re0 {
        return Err(Error::InvalidSpec(format!("region must be a proper rectangle in the upper half-plane: {region:?}")));
    }
    let (upper, upper_count) = harvest(p, contour, region, true, opts)?;
    let (lower, lower_count) = harvest(p, contour, &region.conj(), false, opts)?;
    let mut warnings = Vec::new();
    for e in upper.iter().chain(&lower) {
        for w in &e.warnings {
            warnings.push(format!("k = {}: {w}", e.location));
        }
    }
    if upper_count != lower_count {
        warnings.push(format!("a has {upper_count} zeros, ā has {lower_count}"));
    }
    Ok(DiscreteSpectrum {
        upper,
        lower,
        upper_count,
        lower_count,
        warnings,
    })
}
