//! Numerical complex analysis: winding numbers, Cauchy-integral derivatives,
//! Newton refinement and rectangle subdivision for zeros of analytic functions.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Axis-aligned rectangle `[re0, re1] x [im0, im1]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Self { re0, re1, im0, im1 }
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re0 && z.re <= self.re1 && z.im >= self.im0 && z.im <= self.im1
    }

    /// Mirror image under complex conjugation.
    pub fn conj(&self) -> Self {
        Self::new(self.re0, self.re1, -self.im1, -self.im0)
    }

    /// Counterclockwise boundary point for `t` in `[0, 4)`; one unit per edge.
    fn boundary_point(&self, t: f64) -> Complex64 {
        let edge = (t.floor() as usize).min(3);
        let s = t - edge as f64;
        match edge {
            0 => Complex64::new(self.re0 + s * self.width(), self.im0),
            1 => Complex64::new(self.re1, self.im0 + s * self.height()),
            2 => Complex64::new(self.re1 - s * self.width(), self.im1),
            _ => Complex64::new(self.re0, self.im1 - s * self.height()),
        }
    }

    /// Split into two halves across the longer side at fraction `frac`.
    pub fn split(&self, frac: f64) -> [Rect; 2] {
        if self.width() >= self.height() {
            let m = self.re0 + frac * self.width();
            [
                Rect::new(self.re0, m, self.im0, self.im1),
                Rect::new(m, self.re1, self.im0, self.im1),
            ]
        } else {
            let m = self.im0 + frac * self.height();
            [
                Rect::new(self.re0, self.re1, self.im0, m),
                Rect::new(self.re0, self.re1, m, self.im1),
            ]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    /// Samples per edge before refinement.
    pub initial_per_edge: usize,
    /// Largest phase increment accepted between neighbouring samples.
    pub max_phase_step: f64,
    /// Boundary modulus below `floor * max|f|` counts as a zero on the boundary.
    pub relative_floor: f64,
    pub max_points: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self {
            initial_per_edge: 24,
            max_phase_step: PI / 8.0,
            relative_floor: 1e-9,
            max_points: 40_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub count: i64,
    /// Accumulated `(1/2 pi i) * integral f'/f`, real part.
    pub raw: f64,
    pub min_modulus: f64,
    pub evaluations: usize,
}

/// Number of zeros (with multiplicity) of an analytic `f` inside `rect`.
///
/// The log-derivative integral is accumulated segment by segment as
/// `Log(f(z_{i+1}) / f(z_i))`, refining any segment whose phase increment
/// exceeds `max_phase_step` so the principal branch is never skipped.
pub fn winding_number<F>(f: &F, rect: &Rect, opts: &WindingOptions) -> Result<Winding>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n0 = 4 * opts.initial_per_edge.max(2);
    let ts: Vec<f64> = (0..n0).map(|i| 4.0 * i as f64 / n0 as f64).collect();
    let mut pts: Vec<(f64, Complex64)> = eval_batch(f, rect, &ts)?;
    let mut evaluations = pts.len();

    loop {
        let n = pts.len();
        let mut bad: Vec<usize> = Vec::new();
        for i in 0..n {
            let (t0, f0) = pts[i];
            let (t1, f1) = if i + 1 < n { pts[i + 1] } else { (4.0, pts[0].1) };
            if (f1 / f0).arg().abs() > opts.max_phase_step && t1 - t0 > 1e-13 {
                bad.push(i);
            }
        }
        if bad.is_empty() {
            break;
        }
        if pts.len() + bad.len() > opts.max_points {
            return Err(Error::BoundaryZero {
                min_modulus: pts.iter().map(|p| p.1.norm()).fold(f64::INFINITY, f64::min),
            });
        }
        let mids: Vec<f64> = bad
            .iter()
            .map(|&i| {
                let t0 = pts[i].0;
                let t1 = if i + 1 < n { pts[i + 1].0 } else { 4.0 };
                0.5 * (t0 + t1)
            })
            .collect();
        let new = eval_batch(f, rect, &mids)?;
        evaluations += new.len();
        pts.extend(new);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let max_mod = pts.iter().map(|p| p.1.norm()).fold(0.0_f64, f64::max);
    let min_mod = pts.iter().map(|p| p.1.norm()).fold(f64::INFINITY, f64::min);
    if !(min_mod > opts.relative_floor * max_mod) {
        return Err(Error::BoundaryZero { min_modulus: min_mod });
    }

    let n = pts.len();
    let total: Complex64 = (0..n)
        .map(|i| (pts[(i + 1) % n].1 / pts[i].1).ln())
        .sum();
    let raw = total.im / (2.0 * PI);
    let count = raw.round();
    if (raw - count).abs() > 1e-3 {
        return Err(Error::NonIntegerWinding { raw });
    }
    Ok(Winding {
        count: count as i64,
        raw,
        min_modulus: min_mod,
        evaluations,
    })
}

fn eval_batch<F>(f: &F, rect: &Rect, ts: &[f64]) -> Result<Vec<(f64, Complex64)>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    ts.par_iter()
        .map(|&t| {
            let v = f(rect.boundary_point(t))?;
            if v.is_finite() {
                Ok((t, v))
            } else {
                Err(Error::BoundaryZero { min_modulus: 0.0 })
            }
        })
        .collect()
}

/// Derivatives `f^(m)(center)`, `m = 0..=max_order`, from the trapezoidal rule
/// on a circle: `f^(m) = m!/(N r^m) sum_j f(z_j) e^{-i m theta_j}`.
pub fn cauchy_derivatives<F>(
    f: &F,
    center: Complex64,
    radius: f64,
    max_order: usize,
    n_points: usize,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n = n_points.max(2 * max_order + 4);
    let vals: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            f(center + Complex64::from_polar(radius, theta))
        })
        .collect::<Result<_>>()?;
    Ok(derivatives_from_samples(&vals, radius, max_order))
}

/// Same quadrature as [`cauchy_derivatives`] applied to precomputed circle samples.
pub fn derivatives_from_samples(vals: &[Complex64], radius: f64, max_order: usize) -> Vec<Complex64> {
    let n = vals.len();
    let mut out = Vec::with_capacity(max_order + 1);
    let mut fact = 1.0;
    for m in 0..=max_order {
        if m > 0 {
            fact *= m as f64;
        }
        let sum: Complex64 = vals
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (m * j) as f64 / n as f64))
            .sum();
        out.push(sum * fact / (n as f64 * radius.powi(m as i32)));
    }
    out
}

/// Circle points used by [`cauchy_derivatives`], for callers that evaluate in bulk.
pub fn circle_points(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Newton iteration with the derivative taken from a small Cauchy circle.
/// Stops once both `|f|` and the last step fall below `tol`.
pub fn newton_refine<F>(f: &F, k0: Complex64, tol: f64, max_iter: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut k = k0;
    for _ in 0..max_iter {
        let radius = 1e-3 * k.norm().max(1.0);
        let d = cauchy_derivatives(f, k, radius, 1, 16)?;
        let (value, slope) = (f(k)?, d[1]);
        if value.norm() < tol && slope.norm() == 0.0 {
            return Ok(k);
        }
        let step = value / slope;
        if !step.is_finite() {
            return Err(Error::NoConvergence(k0));
        }
        k -= step;
        if step.norm() < tol && f(k)?.norm() < tol {
            return Ok(k);
        }
    }
    Err(Error::NoConvergence(k0))
}

/// A cell of the subdivision holding `count` zeros.
#[derive(Debug, Clone, Copy)]
pub struct ZeroCell {
    pub rect: Rect,
    pub count: i64,
}

/// Recursively split `rect` until each cell holds a single zero or is smaller
/// than `min_size`. Cells whose boundary hits a zero are re-split off-centre.
pub fn isolate_zeros<F>(f: &F, rect: &Rect, min_size: f64, opts: &WindingOptions) -> Result<Vec<ZeroCell>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let total = winding_number(f, rect, opts)?.count;
    let mut out = Vec::new();
    isolate_inner(f, *rect, total, min_size, opts, &mut out, 0)?;
    out.sort_by(|a, b| {
        let (ca, cb) = (a.rect.center(), b.rect.center());
        ca.re.total_cmp(&cb.re).then(ca.im.total_cmp(&cb.im))
    });
    Ok(out)
}

fn isolate_inner<F>(
    f: &F,
    rect: Rect,
    count: i64,
    min_size: f64,
    opts: &WindingOptions,
    out: &mut Vec<ZeroCell>,
    depth: usize,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if count <= 0 {
        return Ok(());
    }
    let size = rect.width().max(rect.height());
    if count == 1 && size < 0.25 || size < min_size || depth > 60 {
        out.push(ZeroCell { rect, count });
        return Ok(());
    }
    // Off-centre fractions keep split lines away from symmetric zero locations.
    for frac in [0.4731, 0.5377, 0.3911, 0.6089] {
        let halves = rect.split(frac);
        let first = match winding_number(f, &halves[0], opts) {
            Ok(w) => w.count,
            Err(Error::BoundaryZero { .. }) => continue,
            Err(e) => return Err(e),
        };
        let second = count - first;
        if first < 0 || second < 0 {
            continue;
        }
        isolate_inner(f, halves[0], first, min_size, opts, out, depth + 1)?;
        isolate_inner(f, halves[1], second, min_size, opts, out, depth + 1)?;
        return Ok(());
    }
    Err(Error::ClusterUnresolved(rect.center()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre quadrature of a real integrand over `[a, b]`.
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            xs.iter()
                .zip(&ws)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}
