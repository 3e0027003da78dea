//! Pole-avoiding contours and Jost solutions integrated along them.

use crate::analytic::{winding_number, Rect, WindingOptions};
use crate::error::{Error, Result};
use crate::ode::{contour_point, integrate_envelopes, integrate_raw, Tolerances, Track, Vec2};
use crate::potentials::PotentialPair;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const DEFAULT_ELEVATION: f64 = 1.0;
pub const DEFAULT_HALF_LENGTH: f64 = 20.0;
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Largest `c·sech L` for which the contour counts as real at its ends.
pub const ENDPOINT_FLATNESS: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `x = ξ + ic·sech ξ` for `ξ ∈ [-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub elevation: f64,
    pub half_length: f64,
    pub margin: f64,
    /// Smallest measured distance to a detected pole, if any were found.
    pub clearance: Option<f64>,
}

impl Contour {
    /// Unchecked contour; use [`build_contour`] to validate against a potential.
    pub fn new(elevation: f64, half_length: f64, margin: f64) -> Self {
        Self {
            elevation,
            half_length,
            margin,
            clearance: None,
        }
    }

    pub fn point(&self, xi: f64) -> Complex64 {
        contour_point(self.elevation, xi).0
    }

    pub fn endpoint_offset(&self) -> f64 {
        self.elevation / self.half_length.cosh()
    }

    /// Default matching points `{-L/4, 0, L/4}`.
    pub fn matching_points(&self) -> Vec<f64> {
        vec![-0.25 * self.half_length, 0.0, 0.25 * self.half_length]
    }
}

impl Default for Contour {
    fn default() -> Self {
        Self::new(DEFAULT_ELEVATION, DEFAULT_HALF_LENGTH, DEFAULT_MARGIN)
    }
}

/// Elevation ladder `c_init·2^j`, tried in the order `j = 0, -1, 1, -2, 2, -3, 3`.
pub fn elevation_ladder(c_init: f64) -> Vec<f64> {
    [0, -1, 1, -2, 2, -3, 3]
        .iter()
        .map(|j| c_init * 2f64.powi(*j))
        .collect()
}

/// Choose an elevation keeping the contour at least `margin` away from every
/// pole of `p` that can be detected in the strip it sweeps.
pub fn build_contour(p: &PotentialPair, c_init: f64, half_length: f64, margin: f64) -> Result<Contour> {
    if !(c_init > 0.0 && half_length > 0.0 && margin > 0.0) || !(c_init.is_finite() && half_length.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "contour needs positive c, L and margin (got {c_init}, {half_length}, {margin})"
        )));
    }
    let ladder = elevation_ladder(c_init);
    let c_max = ladder.iter().copied().fold(0.0, f64::max);
    let strip = Rect::new(
        -half_length - 1.0,
        half_length + 1.0,
        -margin - 0.5,
        c_max + margin + 0.5,
    );
    let known = p.known_poles(&strip);
    let has_den = p.denominator(Complex64::new(0.0, 0.0)).is_some();

    for c in ladder {
        let candidate = Contour::new(c, half_length, margin);
        if candidate.endpoint_offset() > ENDPOINT_FLATNESS {
            continue;
        }
        let clearance = match &known {
            Some(poles) => {
                let d = min_distance(&candidate, poles);
                if d <= margin {
                    continue;
                }
                d.is_finite().then_some(d)
            }
            None if has_den => {
                let den = |x: Complex64| p.denominator(x).expect("denominator available");
                if !tube_is_clear(&den, &candidate)? {
                    continue;
                }
                let mut poles: Vec<Complex64> = p.real_poles().iter().map(|x| Complex64::new(*x, 0.0)).collect();
                poles.retain(|z| strip.contains(*z));
                let d = min_distance(&candidate, &poles);
                if d <= margin {
                    continue;
                }
                d.is_finite().then_some(d)
            }
            None => None,
        };
        return Ok(Contour {
            clearance,
            ..candidate
        });
    }
    Err(Error::NoValidContour { margin })
}

/// Largest `2|Re k|·c` accepted before [`lowered_for`] drops the elevation:
/// integration error in the subdominant component is amplified by up to
/// `e^{2|Re k|c}` on the way down from the top of the contour.
pub const MAX_LIFT_EXPONENT: f64 = 1.0;

/// A lower elevation from the ladder below `contour` for large `|Re k|`.
///
/// Lowering is only done when the poles of `p` are enumerable and none lies
/// between the two curves, so the Jost solutions are unchanged.
pub fn lowered_for(p: &PotentialPair, contour: &Contour, k: Complex64) -> Contour {
    let exponent = |c: f64| 2.0 * k.re.abs() * c;
    if exponent(contour.elevation) <= MAX_LIFT_EXPONENT {
        return *contour;
    }
    let c0 = contour.elevation;
    let l = contour.half_length;
    let Some(poles) = p.known_poles(&Rect::new(-l - 1.0, l + 1.0, -contour.margin - 0.5, c0 + contour.margin + 0.5)) else {
        return *contour;
    };
    let mut best = *contour;
    for j in 1..=8 {
        let c = c0 / 2f64.powi(j);
        let between = poles.iter().any(|z| {
            let s = 1.0 / z.re.cosh();
            z.im >= c * s - contour.margin && z.im <= c0 * s + contour.margin
        });
        if between {
            break;
        }
        let candidate = Contour::new(c, l, contour.margin);
        let d = min_distance(&candidate, &poles);
        if d <= contour.margin {
            break;
        }
        best = Contour {
            clearance: d.is_finite().then_some(d),
            ..candidate
        };
        if exponent(c) <= MAX_LIFT_EXPONENT {
            break;
        }
    }
    best
}

/// Smallest distance between the sampled contour and a finite pole set.
pub fn min_distance(contour: &Contour, poles: &[Complex64]) -> f64 {
    if poles.is_empty() {
        return f64::INFINITY;
    }
    let l = contour.half_length;
    let n = ((2.0 * l / 0.002).ceil() as usize).max(100);
    let coarse = (0..=n)
        .into_par_iter()
        .map(|i| {
            let xi = -l + 2.0 * l * i as f64 / n as f64;
            let x = contour.point(xi);
            poles.iter().map(|p| (x - p).norm()).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    // The real axis beyond the truncation carries the boundary data.
    let tails = poles
        .iter()
        .filter(|p| p.re.abs() >= l)
        .map(|p| p.im.abs())
        .fold(f64::INFINITY, f64::min);
    coarse.min(tails)
}

/// Argument-principle probes on squares tiling a tube of radius `margin`
/// around the contour; `false` if any square holds a zero of `den` or a zero
/// sits on a square's boundary.
fn tube_is_clear<F>(den: &F, contour: &Contour) -> Result<bool>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let m = contour.margin;
    let l = contour.half_length;
    // Centres spaced by about `m` in arc length; squares of half-width 1.5m
    // then cover every point within `m` of the curve.
    let mut centres = Vec::new();
    let mut xi = -l;
    while xi < l {
        centres.push(contour.point(xi));
        let (_, dx) = contour_point(contour.elevation, xi);
        xi += m / dx.norm();
    }
    centres.push(contour.point(l));
    let opts = WindingOptions {
        initial_per_edge: 8,
        max_points: 4000,
        ..WindingOptions::default()
    };
    let hits: Vec<bool> = centres
        .par_iter()
        .map(|z| {
            for half in [1.5 * m, 1.3 * m] {
                let sq = Rect::new(z.re - half, z.re + half, z.im - half, z.im + half);
                match winding_number(den, &sq, &opts) {
                    Ok(w) => return Ok(w.count != 0),
                    Err(Error::BoundaryZero { .. }) | Err(Error::NonIntegerWinding { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(true)
        })
        .collect::<Result<_>>()?;
    Ok(!hits.into_iter().any(|h| h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JostTag {
    #[serde(rename = "PHI")]
    Phi,
    #[serde(rename = "PHI_BAR")]
    PhiBar,
    #[serde(rename = "PSI")]
    Psi,
    #[serde(rename = "PSI_BAR")]
    PsiBar,
}

impl JostTag {
    pub const ALL: [JostTag; 4] = [JostTag::Phi, JostTag::PhiBar, JostTag::Psi, JostTag::PsiBar];

    /// Normalized at `x -> -inf` (integrated forward).
    pub fn from_left(self) -> bool {
        matches!(self, JostTag::Phi | JostTag::PhiBar)
    }

    /// `+1` if the envelope is the raw solution times `e^{ikx}`, else `-1`.
    pub fn phase(self) -> f64 {
        match self {
            JostTag::Phi | JostTag::PsiBar => 1.0,
            JostTag::PhiBar | JostTag::Psi => -1.0,
        }
    }

    pub fn boundary_value(self) -> Vec2 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            JostTag::Phi | JostTag::PsiBar => [one, zero],
            JostTag::PhiBar | JostTag::Psi => [zero, one],
        }
    }

    /// Whether the envelope is bounded for this `k`.
    pub fn admits(self, k: Complex64) -> bool {
        match self {
            JostTag::Phi | JostTag::Psi => k.im >= 0.0,
            JostTag::PhiBar | JostTag::PsiBar => k.im <= 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JostTag::Phi => "PHI",
            JostTag::PhiBar => "PHI_BAR",
            JostTag::Psi => "PSI",
            JostTag::PsiBar => "PSI_BAR",
        }
    }
}

/// A Jost solution sampled along the contour.
#[derive(Debug, Clone, PartialEq)]
pub struct JostSolution {
    pub which: JostTag,
    pub k: Complex64,
    pub elevation: f64,
    /// `(ξ, value)` pairs in integration order.
    pub samples: Vec<(f64, Vec2)>,
    /// Samples hold envelope variables (phase factored out).
    pub envelope_form: bool,
}

impl JostSolution {
    pub fn at(&self, xi: f64) -> Option<Vec2> {
        self.samples
            .iter()
            .find(|(s, _)| (s - xi).abs() <= 1e-12 * (1.0 + xi.abs()))
            .map(|(_, v)| *v)
    }

    /// Multiply the phase back in: the raw solution at sample `i`.
    pub fn raw_sample(&self, i: usize) -> (f64, Vec2) {
        let (xi, v) = self.samples[i];
        if !self.envelope_form {
            return (xi, v);
        }
        let x = contour_point(self.elevation, xi).0;
        let f = (-self.which.phase() * I * self.k * x).exp();
        (xi, [v[0] * f, v[1] * f])
    }

    /// `xi,x_re,x_im,w1_re,w1_im,w2_re,w2_im` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,x_re,x_im,w1_re,w1_im,w2_re,w2_im\n");
        for (xi, v) in &self.samples {
            let x = contour_point(self.elevation, *xi).0;
            let _ = writeln!(
                out,
                "{xi:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                x.re, x.im, v[0].re, v[0].im, v[1].re, v[1].im
            );
        }
        out
    }
}

fn check_k(k: Complex64, tags: &[JostTag]) -> Result<()> {
    if k.norm() == 0.0 {
        return Err(Error::ZeroSpectralParameter);
    }
    for t in tags {
        if !t.admits(k) {
            return Err(Error::WrongHalfPlane { which: t.name(), k });
        }
    }
    Ok(())
}

/// Integrate several Jost solutions; those normalized at the same end are
/// advanced together on a shared step sequence, so their Wronskian is exact
/// to round-off. Every point of `forced` is hit exactly.
pub fn integrate_jost(
    p: &PotentialPair,
    k: Complex64,
    contour: &Contour,
    tags: &[JostTag],
    forced: &[f64],
    tol: &Tolerances,
) -> Result<Vec<JostSolution>> {
    check_k(k, tags)?;
    let l = contour.half_length;
    let mut out: Vec<Option<JostSolution>> = vec![None; tags.len()];
    for from_left in [true, false] {
        let idx: Vec<usize> = (0..tags.len()).filter(|&i| tags[i].from_left() == from_left).collect();
        if idx.is_empty() {
            continue;
        }
        let tracks: Vec<Track> = idx
            .iter()
            .map(|&i| Track {
                init: tags[i].boundary_value(),
                phase: tags[i].phase(),
            })
            .collect();
        let (a, b) = if from_left { (-l, l) } else { (l, -l) };
        let tr = integrate_envelopes(p, contour.elevation, k, a, b, &tracks, forced, tol)?;
        for (t, &i) in idx.iter().enumerate() {
            out[i] = Some(JostSolution {
                which: tags[i],
                k,
                elevation: contour.elevation,
                samples: tr.xi.iter().copied().zip(tr.values[t].iter().copied()).collect(),
                envelope_form: true,
            });
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every tag integrated")).collect())
}

/// Single Jost solution with default tolerances.
pub fn integrate_zs(p: &PotentialPair, k: Complex64, contour: &Contour, which: JostTag) -> Result<JostSolution> {
    integrate_jost(p, k, contour, &[which], &contour.matching_points(), &Tolerances::default())
        .map(|mut v| v.remove(0))
}

/// Analytic continuation of `which` to complex `k` in its half-plane.
pub fn continue_in_k(p: &PotentialPair, contour: &Contour, which: JostTag, k: Complex64) -> Result<JostSolution> {
    check_k(k, &[which])?;
    integrate_zs(p, k, contour, which)
}

/// Largest difference between the envelope solution and an independent
/// raw-variable integration with the phase multiplied back, over the
/// matching points.
pub fn raw_cross_check(
    p: &PotentialPair,
    k: Complex64,
    contour: &Contour,
    which: JostTag,
    tol: &Tolerances,
) -> Result<f64> {
    let pts = contour.matching_points();
    let env = integrate_jost(p, k, contour, &[which], &pts, tol)?.remove(0);
    let l = contour.half_length;
    let (a, b) = if which.from_left() { (-l, l) } else { (l, -l) };
    let x0 = contour.point(a);
    let phase0 = (-which.phase() * I * k * x0).exp();
    let bv = which.boundary_value();
    // The raw solution starts at |phase0|, which may be far from 1.
    let raw_tol = Tolerances {
        atol: tol.atol * phase0.norm().min(1.0),
        ..*tol
    };
    let raw = integrate_raw(p, contour.elevation, k, a, b, [bv[0] * phase0, bv[1] * phase0], &pts, &raw_tol)?;
    let mut worst = 0.0f64;
    for xi in pts {
        let e = env.at(xi).expect("matching point sampled");
        let i = raw.index_of(xi).expect("matching point sampled");
        let f = (which.phase() * I * k * raw.x[i]).exp();
        let w = raw.values[0][i];
        worst = worst.max((w[0] * f - e[0]).norm()).max((w[1] * f - e[1]).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::det2;
    use crate::potentials::{make_potential, negaton_denominator, PotentialSpec, Symmetry};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_potential_keeps_initial_elevation() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        assert_eq!(ct.elevation, 1.0);
        assert_eq!(ct.point(0.0), c(0.0, 1.0));
        assert!(ct.endpoint_offset() < ENDPOINT_FLATNESS);
    }

    #[test]
    fn pole_on_initial_contour_moves_elevation() {
        // q = r = 1/(x^2 + 1) has a pole at i = γ(0) for c = 1.
        let one = c(1.0, 0.0);
        let spec = PotentialSpec::RationalInX {
            q_num: vec![one],
            q_den: vec![one, c(0.0, 0.0), one],
            r_num: vec![one],
            r_den: vec![one, c(0.0, 0.0), one],
        };
        let p = make_potential(&spec).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        assert_eq!(ct.elevation, 0.5);
        assert_eq!(ct.margin, 0.05);
        assert!(ct.clearance.unwrap() > 0.05);
    }

    #[test]
    fn negaton_contour_clears_denominator_zeros() {
        let p = make_potential(&PotentialSpec::NegatonExample31 {}).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        // Independent probe: |d| along the contour stays away from zero and
        // no Newton root of d lies within the margin.
        let n = 4000;
        let mut worst = f64::INFINITY;
        for i in 0..=n {
            let xi = -5.0 + 10.0 * i as f64 / n as f64;
            worst = worst.min(negaton_denominator(ct.point(xi)).norm());
        }
        assert!(worst > 1e-3, "min |d| on contour {worst}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        assert!(build_contour(&p, 0.0, 20.0, 0.05).is_err());
        assert!(build_contour(&p, 1.0, 20.0, -1.0).is_err());
    }

    #[test]
    fn free_jost_solutions_are_constant_envelopes() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let ct = Contour::default();
        let phi = integrate_zs(&p, c(1.0, 0.0), &ct, JostTag::Phi).unwrap();
        let psi = integrate_zs(&p, c(1.0, 0.0), &ct, JostTag::Psi).unwrap();
        for (_, v) in &phi.samples {
            assert!((v[0] - 1.0).norm() < 1e-14 && v[1].norm() < 1e-14);
        }
        for (_, v) in &psi.samples {
            assert!(v[0].norm() < 1e-14 && (v[1] - 1.0).norm() < 1e-14);
        }
        let m = continue_in_k(&p, &ct, JostTag::Phi, c(0.0, 2.0)).unwrap();
        assert!((m.at(0.0).unwrap()[0] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn wrong_half_plane_and_zero_k() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let ct = Contour::default();
        let err = continue_in_k(&p, &ct, JostTag::PsiBar, c(0.0, 1.0)).unwrap_err();
        assert_eq!(err.name(), "WrongHalfPlane");
        assert!(err.is_contract_violation());
        let err = integrate_zs(&p, c(0.0, 0.0), &ct, JostTag::Phi).unwrap_err();
        assert_eq!(err, Error::ZeroSpectralParameter);
    }

    #[test]
    fn negaton_wronskian_along_contour() {
        let p = make_potential(&PotentialSpec::NegatonExample31 {}).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        let sols = integrate_jost(&p, c(1.0, 0.0), &ct, &[JostTag::Phi, JostTag::PhiBar], &[], &Tolerances::default()).unwrap();
        for ((_, m), (_, mb)) in sols[0].samples.iter().zip(&sols[1].samples) {
            assert!((det2(m, mb) - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn sech_components_stay_bounded() {
        let p = make_potential(&PotentialSpec::sech(2.0, Symmetry::Negated)).unwrap();
        let ct = build_contour(&p, 1.0, 20.0, 0.05).unwrap();
        let phi = integrate_zs(&p, c(1.0, 0.0), &ct, JostTag::Phi).unwrap();
        let bound = phi.samples.iter().map(|(_, v)| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
        assert!(bound < 100.0);
    }

    #[test]
    fn envelope_and_raw_integrations_agree() {
        let tol = Tolerances::default();
        for spec in [PotentialSpec::zero(), PotentialSpec::sech(2.0, Symmetry::Negated)] {
            let p = make_potential(&spec).unwrap();
            let ct = Contour::default();
            for k in [c(0.5, 0.0), c(-2.0, 0.0), c(5.0, 0.0)] {
                for tag in JostTag::ALL {
                    let d = raw_cross_check(&p, k, &ct, tag, &tol).unwrap();
                    assert!(d < 1e-7, "{spec:?} {k} {tag:?}: {d}");
                }
            }
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = make_potential(&PotentialSpec::zero()).unwrap();
        let sol = integrate_zs(&p, c(1.0, 0.0), &Contour::default(), JostTag::Phi).unwrap();
        let csv = sol.to_csv();
        assert!(csv.starts_with("xi,x_re,x_im,w1_re"));
        assert_eq!(csv.lines().count(), sol.samples.len() + 1);
    }
}
