//! Scattering coefficients from Wronskians of the Jost solutions, together
//! with the identities they satisfy.
//!
//! With envelopes `M = φe^{ikx}`, `M̄ = φ̄e^{-ikx}`, `N = ψe^{-ikx}`,
//! `N̄ = ψ̄e^{ikx}`, at any point `x` of the contour
//!
//! ```text
//! a = det(M, N)                 ā = det(N̄, M̄)
//! b = e^{-2ikx} det(N̄, M)       b̄ = e^{2ikx} det(M̄, N)
//! ```

pub mod riccati;
pub mod schrodinger;

pub use riccati::{riccati_formal_series, Branch};
pub use schrodinger::{schrodinger_form, SchrodingerForm};

use crate::contour::{integrate_jost, lowered_for, Contour, JostTag};
use crate::cser;
use crate::error::{Error, Result};
use crate::ode::{det2, Tolerances, Vec2};
use crate::potentials::{PotentialPair, Symmetry};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Reflection coefficients are omitted below this `|a|`.
pub const REFLECTION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    #[serde(with = "cser")]
    pub k: Complex64,
    #[serde(with = "cser::opt")]
    pub a: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub a_bar: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub b: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub b_bar: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub rho: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub rho_bar: Option<Complex64>,
    /// `|aā - bb̄ - 1|`, real `k` only.
    pub unitarity_residual: Option<f64>,
    /// Largest pairwise deviation of any coefficient across matching points.
    pub wronskian_spread: f64,
    /// Largest `|det(M, M̄) - 1|`, `|det(N̄, N) - 1|` along the contour.
    pub wronskian_deviation: f64,
    /// `∫_L^{2L} (|q|+|r|)` on both tails: the size of what truncation ignores.
    pub tail_bound: f64,
    /// Contour elevation actually used; lower than requested for large `|Re k|`.
    pub elevation: f64,
}

impl ScatteringData {
    fn require(&self) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
        match (self.a, self.a_bar, self.b, self.b_bar) {
            (Some(a), Some(ab), Some(b), Some(bb)) => Ok((a, ab, b, bb)),
            _ => Err(Error::IncompleteData(self.k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterOptions {
    pub tol: Tolerances,
    /// Matching points in `ξ`; `None` means `{-L/4, 0, L/4}`.
    pub matching: Option<Vec<f64>>,
    /// Allowed `|W - 1|` for the fundamental pairs.
    pub wronskian_tol: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            matching: None,
            wronskian_tol: 1e-8,
        }
    }
}

fn mean(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}

fn spread(v: &[Complex64]) -> f64 {
    let mut s = 0.0f64;
    for (i, a) in v.iter().enumerate() {
        for b in &v[..i] {
            s = s.max((a - b).norm());
        }
    }
    s
}

/// Estimates of `b` (or `b̄`) carry the factor `e^{∓2ikx}`, which amplifies
/// integration error where the contour is lifted. Only matching points whose
/// amplification is within a factor 10 of the best are averaged.
fn well_conditioned(values: &[(Complex64, f64)]) -> Vec<Complex64> {
    let best = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    values.iter().filter(|v| v.1 <= 10.0 * best).map(|v| v.0).collect()
}

pub fn scatter_at(p: &PotentialPair, k: Complex64, contour: &Contour, matching_points: &[f64]) -> Result<ScatteringData> {
    let opts = ScatterOptions {
        matching: Some(matching_points.to_vec()),
        ..ScatterOptions::default()
    };
    scatter_with(p, k, contour, &opts)
}

pub fn scatter_with(p: &PotentialPair, k: Complex64, contour: &Contour, opts: &ScatterOptions) -> Result<ScatteringData> {
    if k.norm() == 0.0 {
        return Err(Error::ZeroSpectralParameter);
    }
    let contour = &lowered_for(p, contour, k);
    let matching = opts.matching.clone().unwrap_or_else(|| contour.matching_points());
    if matching.is_empty() {
        return Err(Error::InvalidSpec("at least one matching point is required".into()));
    }
    let tags: Vec<JostTag> = JostTag::ALL.into_iter().filter(|t| t.admits(k)).collect();
    let sols = integrate_jost(p, k, contour, &tags, &matching, &opts.tol)?;
    let get = |tag: JostTag| sols.iter().find(|s| s.which == tag);
    let (m, mb, n, nb) = (get(JostTag::Phi), get(JostTag::PhiBar), get(JostTag::Psi), get(JostTag::PsiBar));

    let mut wronskian_deviation = 0.0f64;
    for (u, v) in [(m, mb), (nb, n)] {
        if let (Some(u), Some(v)) = (u, v) {
            for ((_, a), (_, b)) in u.samples.iter().zip(&v.samples) {
                wronskian_deviation = wronskian_deviation.max((det2(a, b) - ONE).norm());
            }
        }
    }
    if wronskian_deviation > opts.wronskian_tol {
        return Err(Error::DegenerateWronskian {
            deviation: wronskian_deviation,
        });
    }

    let at = |s: Option<&crate::contour::JostSolution>, xi: f64| -> Option<Vec2> { s.and_then(|s| s.at(xi)) };
    let mut a_v = Vec::new();
    let mut ab_v = Vec::new();
    let mut b_v = Vec::new();
    let mut bb_v = Vec::new();
    for &xi in &matching {
        let x = contour.point(xi);
        let (vm, vmb, vn, vnb) = (at(m, xi), at(mb, xi), at(n, xi), at(nb, xi));
        if let (Some(vm), Some(vn)) = (vm, vn) {
            a_v.push(det2(&vm, &vn));
        }
        if let (Some(vnb), Some(vmb)) = (vnb, vmb) {
            ab_v.push(det2(&vnb, &vmb));
        }
        if let (Some(vnb), Some(vm)) = (vnb, vm) {
            let f = (-2.0 * I * k * x).exp();
            b_v.push((f * det2(&vnb, &vm), f.norm()));
        }
        if let (Some(vmb), Some(vn)) = (vmb, vn) {
            let f = (2.0 * I * k * x).exp();
            bb_v.push((f * det2(&vmb, &vn), f.norm()));
        }
    }
    let b_v = well_conditioned(&b_v);
    let bb_v = well_conditioned(&bb_v);
    let pick = |v: &[Complex64]| (!v.is_empty()).then(|| mean(v));
    let (a, a_bar, b, b_bar) = (pick(&a_v), pick(&ab_v), pick(&b_v), pick(&bb_v));
    let wronskian_spread = [spread(&a_v), spread(&ab_v), spread(&b_v), spread(&bb_v)]
        .into_iter()
        .fold(0.0, f64::max);

    let rho = match (a, b) {
        (Some(a), Some(b)) if a.norm() >= REFLECTION_FLOOR => Some(b / a),
        _ => None,
    };
    let rho_bar = match (a_bar, b_bar) {
        (Some(a), Some(b)) if a.norm() >= REFLECTION_FLOOR => Some(b / a),
        _ => None,
    };
    let unitarity_residual = match (a, a_bar, b, b_bar) {
        (Some(a), Some(ab), Some(b), Some(bb)) => Some((a * ab - b * bb - ONE).norm()),
        _ => None,
    };
    Ok(ScatteringData {
        k,
        a,
        a_bar,
        b,
        b_bar,
        rho,
        rho_bar,
        unitarity_residual,
        wronskian_spread,
        wronskian_deviation,
        tail_bound: p.tail_mass(contour.half_length)?,
        elevation: contour.elevation,
    })
}

/// Elementwise [`scatter_with`]; entries are independent and run in parallel,
/// failures are kept per entry.
pub fn scatter_grid(p: &PotentialPair, ks: &[Complex64], contour: &Contour, opts: &ScatterOptions) -> Vec<Result<ScatteringData>> {
    ks.par_iter().map(|k| scatter_with(p, *k, contour, opts)).collect()
}

/// Largest deviation in the two identities of the given reduction:
/// `ā(k) = a(-k)`, `b̄(k) = ±b(-k)` for `r = ±q`, and
/// `ā(k) = a(k*)*`, `b̄(k) = ±b(k*)*` for `r = ±q*`.
pub fn check_symmetry_relations(grid: &[ScatteringData], symmetry: Symmetry) -> Result<f64> {
    let (reflect, sign) = match symmetry {
        Symmetry::Equal => (true, 1.0),
        Symmetry::Negated => (true, -1.0),
        Symmetry::Conjugate => (false, 1.0),
        Symmetry::NegConjugate => (false, -1.0),
        Symmetry::None => {
            return Err(Error::InvalidSpec("symmetry check needs one of the four reductions".into()));
        }
    };
    let map = |z: Complex64| if reflect { z } else { z.conj() };
    let mut worst = 0.0f64;
    for sd in grid {
        let target = if reflect { -sd.k } else { sd.k.conj() };
        let partner = grid
            .iter()
            .find(|o| (o.k - target).norm() <= 1e-12 * (1.0 + target.norm()))
            .ok_or(Error::MissingPartner(sd.k))?;
        if let (Some(ab), Some(a)) = (sd.a_bar, partner.a) {
            worst = worst.max((ab - map(a)).norm());
        }
        if let (Some(bb), Some(b)) = (sd.b_bar, partner.b) {
            worst = worst.max((bb - sign * map(b)).norm());
        }
    }
    Ok(worst)
}

pub type Mat2 = [[Complex64; 2]; 2];

/// `S_- = [[a, b̄], [b, ā]]` and `S_+ = S_-^{-1}`, which is `[[ā, -b̄], [-b, a]]`
/// once `aā - bb̄ = 1`. The adjugate is divided by the computed determinant so
/// the product is the identity to round-off; `det S_-` keeps the integration error.
pub fn stokes_matrices(sd: &ScatteringData) -> Result<(Mat2, Mat2)> {
    let (a, ab, b, bb) = sd.require()?;
    let det = a * ab - b * bb;
    if det.norm() == 0.0 {
        return Err(Error::IncompleteData(sd.k));
    }
    Ok(([[a, bb], [b, ab]], [[ab / det, -bb / det], [-b / det, a / det]]))
}

pub fn mat_product(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn mat_det(x: &Mat2) -> Complex64 {
    x[0][0] * x[1][1] - x[0][1] * x[1][0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionlessReport {
    pub reflectionless: bool,
    pub worst_k: f64,
    pub worst_value: f64,
}

/// `max(|b|, |b̄|) < tol` over a real-`k` grid. A diagnostic only: a nonzero
/// reflection coefficient rules out reflectionlessness, nothing more.
pub fn reflectionless_test(grid: &[ScatteringData], tol: f64) -> ReflectionlessReport {
    let mut worst_k = f64::NAN;
    let mut worst_value = 0.0f64;
    for sd in grid {
        for v in [sd.b, sd.b_bar].into_iter().flatten() {
            if v.norm() > worst_value || worst_k.is_nan() {
                worst_value = worst_value.max(v.norm());
                worst_k = sd.k.re;
            }
        }
    }
    ReflectionlessReport {
        reflectionless: worst_value < tol,
        worst_k,
        worst_value,
    }
}

/// Spec-fixed CSV columns.
pub fn grid_to_csv(grid: &[ScatteringData]) -> String {
    let mut out = String::from(
        "k_re,k_im,a_re,a_im,abar_re,abar_im,b_re,b_im,bbar_re,bbar_im,unitarity_residual,spread\n",
    );
    let nan = Complex64::new(f64::NAN, f64::NAN);
    for sd in grid {
        let cols = [sd.a, sd.a_bar, sd.b, sd.b_bar].map(|v| v.unwrap_or(nan));
        let _ = write!(out, "{:.17e},{:.17e}", sd.k.re, sd.k.im);
        for c in cols {
            let _ = write!(out, ",{:.17e},{:.17e}", c.re, c.im);
        }
        let _ = writeln!(
            out,
            ",{:.17e},{:.17e}",
            sd.unitarity_residual.unwrap_or(f64::NAN),
            sd.wronskian_spread
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::build_contour;
    use crate::potentials::{make_potential, PotentialSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn negaton_a(k: Complex64) -> Complex64 {
        let i = c(0.0, 1.0);
        ((k - i) / (k + i)).powi(2)
    }

    #[test]
    fn free_system_is_trivial() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let ct = Contour::default();
        let sd = scatter_at(&p, c(1.0, 0.0), &ct, &ct.matching_points()).unwrap();
        assert!((sd.a.unwrap() - 1.0).norm() < 1e-14);
        assert!((sd.a_bar.unwrap() - 1.0).norm() < 1e-14);
        assert!(sd.b.unwrap().norm() < 1e-14 && sd.b_bar.unwrap().norm() < 1e-14);
        assert!(sd.unitarity_residual.unwrap() < 1e-14);
        let (sm, sp) = stokes_matrices(&sd).unwrap();
        assert!((sm[0][0] - 1.0).norm() < 1e-14 && sp[0][1].norm() < 1e-14);
    }

    #[test]
    fn negaton_matches_closed_form_on_real_axis_and_above() {
        let p = make_potential(&PotentialSpec::Negaton {}).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        let sd = scatter_at(&p, c(1.0, 0.0), &ct, &ct.matching_points()).unwrap();
        assert!((sd.a.unwrap() - c(-1.0, 0.0)).norm() < 1e-6, "{:?}", sd.a);
        assert!(sd.b.unwrap().norm() < 1e-6);
        let up = scatter_at(&p, c(0.0, 2.0), &ct, &ct.matching_points()).unwrap();
        assert!((up.a.unwrap() - negaton_a(c(0.0, 2.0))).norm() < 1e-6);
        assert!(up.a_bar.is_none() && up.b.is_none() && up.unitarity_residual.is_none());
        let down = scatter_at(&p, c(0.3, -1.0), &ct, &ct.matching_points()).unwrap();
        // ā(k) = a(-k) for r = q.
        assert!((down.a_bar.unwrap() - negaton_a(c(-0.3, 1.0))).norm() < 1e-6);
    }

    #[test]
    fn printed_negaton_is_not_reflectionless() {
        let p = make_potential(&PotentialSpec::NegatonExample31 {}).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        let sd = scatter_at(&p, c(1.0, 0.0), &ct, &ct.matching_points()).unwrap();
        assert!(sd.b.unwrap().norm() > 1e-3);
    }

    #[test]
    fn zero_k_is_a_contract_violation() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let err = scatter_at(&p, c(0.0, 0.0), &Contour::default(), &[0.0]).unwrap_err();
        assert_eq!(err, Error::ZeroSpectralParameter);
    }

    #[test]
    fn grid_keeps_order_and_errors() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let ks = [c(1.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)];
        let out = scatter_grid(&p, &ks, &Contour::default(), &ScatterOptions::default());
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
        assert_eq!(out[2].as_ref().unwrap().k, c(3.0, 0.0));
    }

    #[test]
    fn symmetry_check_needs_partners() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let grid: Vec<_> = scatter_grid(&p, &[c(1.0, 0.0)], &Contour::default(), &ScatterOptions::default())
            .into_iter()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(check_symmetry_relations(&grid, Symmetry::Equal).unwrap_err().name(), "MissingPartner");
        assert_eq!(check_symmetry_relations(&grid, Symmetry::Conjugate).unwrap(), 0.0);
    }

    #[test]
    fn stokes_requires_all_coefficients() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let sd = scatter_at(&p, c(0.0, 1.0), &Contour::default(), &[0.0]).unwrap();
        assert_eq!(stokes_matrices(&sd).unwrap_err().name(), "IncompleteData");
    }

    #[test]
    fn csv_columns() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let sd = scatter_at(&p, c(2.0, 0.0), &Contour::default(), &[0.0]).unwrap();
        let csv = grid_to_csv(&[sd]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 12);
        assert_eq!(lines.next().unwrap().split(',').count(), 12);
    }

    #[test]
    fn record_json_round_trip() {
        let p = make_potential(&PotentialSpec::sech(1.0, Symmetry::Equal)).unwrap();
        let sd = scatter_at(&p, c(0.7, 0.0), &Contour::default(), &[0.0]).unwrap();
        let text = serde_json::to_string(&sd).unwrap();
        let back: ScatteringData = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sd);
    }
}
