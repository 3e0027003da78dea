//! Reflectionless reconstruction from discrete spectral data.
//!
//! With `b = b̄ = 0` on the real line, the envelopes satisfy
//!
//! ```text
//! N̄(x;k) = e1 + Σ_upper residues of M/((k-κ)a),
//! N(x;k)  = e2 + Σ_lower residues of M̄/((k-κ)ā),
//! ```
//!
//! and each residue is linear in the unknowns `N_j^r = ∂_k^r N(x;k_j)` or
//! `N̄_j^r = ∂_k^r N̄(x;k̄_j)` (see [`residue`]). Differentiating in `k` and
//! evaluating at the zeros closes a square linear system per `x`. The system
//! matrix acts on both vector components identically, so it is factored once
//! and applied to a two-column right-hand side.

pub mod residue;

pub use residue::{residue_series, residue_terms, ResidueExpansion, ResidueTerm};

use crate::analytic::Rect;
use crate::contour::Contour;
use crate::cser;
use crate::error::{Error, Result};
use crate::ode::Vec2;
use crate::potentials::{scan_real_zeros, PotentialPair, Symmetry};
use crate::spectrum::DiscreteEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Condition number above which a sample is reported as a pole candidate.
pub const POLE_CONDITION: f64 = 1e12;

/// Discrete data: zeros of `a` in the upper half-plane and of `ā` in the lower.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionInput {
    #[serde(default)]
    pub upper: Vec<DiscreteEigen>,
    #[serde(default)]
    pub lower: Vec<DiscreteEigen>,
}

impl ReconstructionInput {
    pub fn is_empty(&self) -> bool {
        self.upper.is_empty() && self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (list, upper) in [(&self.upper, true), (&self.lower, false)] {
            for e in list {
                let ok = if upper { e.location.im > 0.0 } else { e.location.im < 0.0 };
                if !ok {
                    return Err(Error::InvalidSpec(format!(
                        "{} eigenvalue {} is in the wrong half-plane",
                        if upper { "upper" } else { "lower" },
                        e.location
                    )));
                }
                if e.multiplicity == 0 {
                    return Err(Error::InvalidSpec(format!("zero multiplicity at {}", e.location)));
                }
                let got = e.a_derivatives.len().min(e.b_derivatives.len());
                if got < e.multiplicity {
                    return Err(Error::InsufficientDerivatives {
                        location: e.location,
                        needed: e.multiplicity,
                        got,
                    });
                }
            }
        }
        let all: Vec<Complex64> = self.upper.iter().chain(&self.lower).map(|e| e.location).collect();
        for (i, a) in all.iter().enumerate() {
            if all[..i].iter().any(|b| (a - b).norm() < 1e-10) {
                return Err(Error::InvalidSpec(format!("repeated eigenvalue {a}")));
            }
        }
        Ok(())
    }

    /// Complete upper data with the lower data forced by a reduction:
    /// `ā(k) = a(-k)` for `r = ±q`, `ā(k) = a(k*)*` for `r = ±q*`, with the
    /// matching sign on `b̄`.
    pub fn mirrored(upper: Vec<DiscreteEigen>, symmetry: Symmetry) -> Result<Self> {
        let lower = upper
            .iter()
            .map(|e| mirror_eigen(e, symmetry))
            .collect::<Result<Vec<_>>>()?;
        let input = Self { upper, lower };
        input.validate()?;
        Ok(input)
    }

    /// The double-pole data set of the negaton example, mirrored with `r = q`.
    pub fn example_negaton() -> Self {
        let upper = vec![DiscreteEigen::new(
            Complex64::new(0.0, 1.0),
            2,
            vec![Complex64::new(-0.5, 0.0), ZERO],
            vec![ONE, ZERO],
        )];
        Self::mirrored(upper, Symmetry::Equal).expect("example data is valid")
    }

    /// Simple zero at `iη` with `b = 1` and `a(k) = (k - iη)/(k + iη)`, mirrored
    /// with `r = -q`: the regular one-soliton of height `2η`.
    pub fn single_pair(eta: f64) -> Self {
        let k1 = Complex64::new(0.0, eta);
        let a_k = ONE / (k1 - k1.conj());
        let upper = vec![DiscreteEigen::new(k1, 1, vec![a_k], vec![ONE])];
        Self::mirrored(upper, Symmetry::Negated).expect("single pair is valid")
    }
}

fn mirror_eigen(e: &DiscreteEigen, symmetry: Symmetry) -> Result<DiscreteEigen> {
    let nu = e.multiplicity;
    let sign_b = match symmetry {
        Symmetry::Equal | Symmetry::Conjugate => 1.0,
        Symmetry::Negated | Symmetry::NegConjugate => -1.0,
        Symmetry::None => {
            return Err(Error::InvalidSpec("mirroring needs one of the four reductions".into()));
        }
    };
    let reflect = matches!(symmetry, Symmetry::Equal | Symmetry::Negated);
    let location = if reflect { -e.location } else { e.location.conj() };
    let a = e
        .a_derivatives
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let m = nu + i;
            if reflect {
                v * if m % 2 == 0 { 1.0 } else { -1.0 }
            } else {
                v.conj()
            }
        })
        .collect();
    let b = e
        .b_derivatives
        .iter()
        .enumerate()
        .map(|(r, v)| {
            sign_b
                * if reflect {
                    v * if r % 2 == 0 { 1.0 } else { -1.0 }
                } else {
                    v.conj()
                }
        })
        .collect();
    Ok(DiscreteEigen::new(location, nu, a, b))
}

/// `d^s/dk^s (k - p)^{-m}` evaluated at `k - p = d`.
fn pole_derivative(d: Complex64, m: usize, s: usize) -> Complex64 {
    let rising: f64 = (0..s).map(|i| (m + i) as f64).product();
    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
    sign * rising * d.powi(-((m + s) as i32))
}

/// Label of one vector unknown of the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownLabel {
    /// `true` for `N_j^r` (upper zero), `false` for `N̄_j^r`.
    pub upper: bool,
    pub eigen: usize,
    pub order: usize,
}

/// The linear system at one `x`: `matrix · unknowns = rhs`, where the two
/// columns of `rhs` are the two vector components.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub rhs: DMatrix<Complex64>,
    pub unknowns: Vec<UnknownLabel>,
}

/// Solved unknowns at one `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unknowns {
    pub x: Complex64,
    values: Vec<Vec2>,
    pub condition: Option<f64>,
}

/// Envelope and Jost values at `(x, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostValues {
    pub n: Vec2,
    pub n_bar: Vec2,
    pub psi: Vec2,
    pub psi_bar: Vec2,
}

/// Precomputed residue expansions for a data set.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    input: ReconstructionInput,
    upper: Vec<ResidueExpansion<Complex64>>,
    lower: Vec<ResidueExpansion<Complex64>>,
    upper_offset: Vec<usize>,
    lower_offset: Vec<usize>,
    size: usize,
}

impl Reconstruction {
    pub fn new(input: ReconstructionInput) -> Result<Self> {
        input.validate()?;
        let build = |e: &DiscreteEigen, upper: bool| {
            residue_terms(&e.location, upper, e.multiplicity, &e.a_derivatives, &e.b_derivatives)
        };
        let upper: Vec<_> = input.upper.iter().map(|e| build(e, true)).collect::<Result<_>>()?;
        let lower: Vec<_> = input.lower.iter().map(|e| build(e, false)).collect::<Result<_>>()?;
        let mut size = 0;
        let mut upper_offset = Vec::new();
        for e in &upper {
            upper_offset.push(size);
            size += e.multiplicity;
        }
        let mut lower_offset = Vec::new();
        for e in &lower {
            lower_offset.push(size);
            size += e.multiplicity;
        }
        Ok(Self {
            input,
            upper,
            lower,
            upper_offset,
            lower_offset,
            size,
        })
    }

    pub fn input(&self) -> &ReconstructionInput {
        &self.input
    }

    pub fn expansions(&self) -> impl Iterator<Item = &ResidueExpansion<Complex64>> {
        self.upper.iter().chain(&self.lower)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn phase(e: &ResidueExpansion<Complex64>, x: Complex64) -> Complex64 {
        let s = if e.upper { 2.0 } else { -2.0 };
        (s * I * e.pole * x).exp()
    }

    pub fn assemble(&self, x: Complex64) -> LinearSystem {
        let n = self.size;
        let mut matrix = DMatrix::<Complex64>::identity(n, n);
        let mut rhs = DMatrix::<Complex64>::zeros(n, 2);
        let mut unknowns = Vec::with_capacity(n);
        for (j, e) in self.upper.iter().enumerate() {
            for r in 0..e.multiplicity {
                unknowns.push(UnknownLabel { upper: true, eigen: j, order: r });
            }
        }
        for (l, e) in self.lower.iter().enumerate() {
            for r in 0..e.multiplicity {
                unknowns.push(UnknownLabel { upper: false, eigen: l, order: r });
            }
        }
        // N̄_l^s = ∂^s N̄ at k̄_l couples to the upper unknowns, and vice versa.
        let blocks = [
            (&self.lower, &self.lower_offset, &self.upper, &self.upper_offset, 0usize),
            (&self.upper, &self.upper_offset, &self.lower, &self.lower_offset, 1usize),
        ];
        for (rows, row_off, cols, col_off, comp) in blocks {
            for (l, target) in rows.iter().enumerate() {
                for s in 0..target.multiplicity {
                    let row = row_off[l] + s;
                    if s == 0 {
                        rhs[(row, comp)] = ONE;
                    }
                    for (j, src) in cols.iter().enumerate() {
                        let ph = Self::phase(src, x);
                        let d = target.pole - src.pole;
                        for t in &src.terms {
                            let v = t.coeff.eval(&x) * ph * pole_derivative(d, t.order, s);
                            matrix[(row, col_off[j] + t.unknown)] -= v;
                        }
                    }
                }
            }
        }
        LinearSystem { matrix, rhs, unknowns }
    }

    /// Determinant of the system matrix; its zeros are the candidate poles of
    /// the reconstructed potentials.
    pub fn system_determinant(&self, x: Complex64) -> Result<Complex64> {
        if self.size == 0 {
            return Ok(ONE);
        }
        Ok(self.assemble(x).matrix.determinant())
    }

    pub fn solve(&self, x: Complex64, with_condition: bool) -> Result<Unknowns> {
        if self.size == 0 {
            return Ok(Unknowns {
                x,
                values: Vec::new(),
                condition: with_condition.then_some(1.0),
            });
        }
        let sys = self.assemble(x);
        let condition = with_condition.then(|| scaled_condition(&sys.matrix));
        if let Some(c) = condition {
            if !(c < POLE_CONDITION) {
                return Err(Error::SingularSystem { x, cond: c });
            }
        }
        let sol = sys.matrix.lu().solve(&sys.rhs).filter(|s| s.iter().all(|v| v.is_finite()));
        let sol = sol.ok_or(Error::SingularSystem {
            x,
            cond: condition.unwrap_or(f64::INFINITY),
        })?;
        let values = (0..self.size).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
        Ok(Unknowns { x, values, condition })
    }

    fn unknown(&self, u: &Unknowns, upper: bool, eigen: usize, order: usize) -> Vec2 {
        let off = if upper { self.upper_offset[eigen] } else { self.lower_offset[eigen] };
        u.values[off + order]
    }

    /// `N_j^r` (upper) or `N̄_j^r` (lower) from a solved system.
    pub fn derivative_value(&self, u: &Unknowns, upper: bool, eigen: usize, order: usize) -> Vec2 {
        self.unknown(u, upper, eigen, order)
    }

    /// Envelopes at `k` from the solved unknowns.
    pub fn envelopes(&self, u: &Unknowns, k: Complex64) -> Result<(Vec2, Vec2)> {
        for e in self.expansions() {
            if (k - e.pole).norm() <= 1e-12 * (1.0 + e.pole.norm()) {
                return Err(Error::PoleCollision(k));
            }
        }
        let mut n_bar = [ONE, ZERO];
        let mut n = [ZERO, ONE];
        for (set, target, from_upper) in [(&self.upper, &mut n_bar, true), (&self.lower, &mut n, false)] {
            for (j, e) in set.iter().enumerate() {
                let ph = Self::phase(e, u.x);
                for t in &e.terms {
                    let w = t.coeff.eval(&u.x) * ph * (k - e.pole).powi(-(t.order as i32));
                    let v = self.unknown(u, from_upper, j, t.unknown);
                    target[0] += w * v[0];
                    target[1] += w * v[1];
                }
            }
        }
        Ok((n, n_bar))
    }

    pub fn jost(&self, x: Complex64, k: Complex64) -> Result<JostValues> {
        let u = self.solve(x, false)?;
        let (n, n_bar) = self.envelopes(&u, k)?;
        let e = (I * k * x).exp();
        Ok(JostValues {
            n,
            n_bar,
            psi: [n[0] * e, n[1] * e],
            psi_bar: [n_bar[0] / e, n_bar[1] / e],
        })
    }

    /// `q = 2i lim kN_1`, `r = -2i lim kN̄_2`, taken exactly as the sums of the
    /// simple-pole coefficients.
    pub fn potentials_from(&self, u: &Unknowns) -> (Complex64, Complex64) {
        let mut q = ZERO;
        let mut r = ZERO;
        for (set, upper) in [(&self.upper, true), (&self.lower, false)] {
            for (j, e) in set.iter().enumerate() {
                let ph = Self::phase(e, u.x);
                for t in e.terms.iter().filter(|t| t.order == 1) {
                    let w = t.coeff.eval(&u.x) * ph;
                    let v = self.unknown(u, upper, j, t.unknown);
                    if upper {
                        r += w * v[1];
                    } else {
                        q += w * v[0];
                    }
                }
            }
        }
        (2.0 * I * q, -2.0 * I * r)
    }

    pub fn potentials_at(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        let u = self.solve(x, false)?;
        Ok(self.potentials_from(&u))
    }

    /// Richardson-extrapolated `2i·kN_1(x;k)` and `-2i·kN̄_2(x;k)` from real
    /// `k = 10^3` and `10^4`; a consistency check on [`Self::potentials_from`].
    pub fn potentials_by_limit(&self, u: &Unknowns) -> Result<(Complex64, Complex64)> {
        let (k1, k2) = (1e3, 1e4);
        let (n1, nb1) = self.envelopes(u, Complex64::new(k1, 0.0))?;
        let (n2, nb2) = self.envelopes(u, Complex64::new(k2, 0.0))?;
        let rich = |f1: Complex64, f2: Complex64| (k2 * k2 * f2 - k1 * k1 * f1) / (k2 - k1);
        Ok((2.0 * I * rich(n1[0], n2[0]), -2.0 * I * rich(nb1[1], nb2[1])))
    }
}

/// Condition number after alternating row/column equilibration, which removes
/// the exponential scaling of the `e^{2ik_j x}` factors.
pub fn scaled_condition(a: &DMatrix<Complex64>) -> f64 {
    let mut m = a.clone();
    for _ in 0..6 {
        for mut row in m.row_iter_mut() {
            let s = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                row /= Complex64::new(s, 0.0);
            }
        }
        for mut col in m.column_iter_mut() {
            let s = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                col /= Complex64::new(s, 0.0);
            }
        }
    }
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn assemble_linear_system(input: &ReconstructionInput, x: f64) -> Result<LinearSystem> {
    Ok(Reconstruction::new(input.clone())?.assemble(Complex64::new(x, 0.0)))
}

pub fn solve_jost(input: &ReconstructionInput, x: f64, k: Complex64) -> Result<JostValues> {
    Reconstruction::new(input.clone())?.jost(Complex64::new(x, 0.0), k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    pub x: f64,
    #[serde(with = "cser::opt")]
    pub q: Option<Complex64>,
    #[serde(with = "cser::opt")]
    pub r: Option<Complex64>,
    pub condition: f64,
    /// `|exact - Richardson limit|` over both potentials.
    pub limit_deviation: Option<f64>,
}

/// Coefficient polynomial (ascending powers of `x`) of one residue term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    #[serde(with = "cser")]
    pub location: Complex64,
    pub upper: bool,
    pub pole_order: usize,
    pub unknown_order: usize,
    #[serde(with = "cser::vec")]
    pub polynomial: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPotential {
    pub samples: Vec<PotentialSample>,
    pub pole_candidates: Vec<f64>,
    pub coefficients: Vec<CoefficientEntry>,
}

impl RecoveredPotential {
    /// `x,q_re,q_im,r_re,r_im`; samples at poles are written as `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,q_re,q_im,r_re,r_im\n");
        for s in &self.samples {
            let q = s.q.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let r = s.r.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s.x, q.re, q.im, r.re, r.im
            ));
        }
        out
    }
}

/// Sample the reconstructed potentials; samples where the system is singular
/// become pole candidates, as do real zeros of the system determinant in the
/// sampled range.
pub fn recover_potentials(input: &ReconstructionInput, xs: &[f64]) -> Result<RecoveredPotential> {
    let rec = Reconstruction::new(input.clone())?;
    let samples: Vec<PotentialSample> = xs
        .par_iter()
        .map(|&x| {
            let xc = Complex64::new(x, 0.0);
            match rec.solve(xc, true) {
                Ok(u) => {
                    let (q, r) = rec.potentials_from(&u);
                    let limit_deviation = rec
                        .potentials_by_limit(&u)
                        .ok()
                        .map(|(ql, rl)| (ql - q).norm().max((rl - r).norm()));
                    Ok(PotentialSample {
                        x,
                        q: Some(q),
                        r: Some(r),
                        condition: u.condition.unwrap_or(1.0),
                        limit_deviation,
                    })
                }
                Err(Error::SingularSystem { cond, .. }) => Ok(PotentialSample {
                    x,
                    q: None,
                    r: None,
                    condition: cond,
                    limit_deviation: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut poles: Vec<f64> = samples.iter().filter(|s| s.q.is_none()).map(|s| s.x).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if rec.size() > 0 && hi > lo {
        let det = |x: Complex64| rec.system_determinant(x);
        for p in scan_real_zeros(&det, lo, hi, 1e-12)? {
            if poles.iter().all(|q| (q - p).abs() > 1e-6) {
                poles.push(p);
            }
        }
    }
    poles.sort_by(f64::total_cmp);

    let coefficients = rec
        .expansions()
        .flat_map(|e| {
            e.terms.iter().map(move |t| CoefficientEntry {
                location: e.pole,
                upper: e.upper,
                pole_order: t.order,
                unknown_order: t.unknown,
                polynomial: t.coeff.coeffs().to_vec(),
            })
        })
        .collect();
    Ok(RecoveredPotential {
        samples,
        pole_candidates: poles,
        coefficients,
    })
}

/// Outcome of `potential -> discrete data -> reconstruction -> forward scattering`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub data: ReconstructionInput,
    /// Largest `|Δq|, |Δr|` relative to `max(1, |q|)` on the comparison grid.
    pub max_relative_deviation: f64,
    /// Largest `|a_rec - a|` over the real `k` grid.
    pub forward_deviation: f64,
    /// Largest `|b|, |b̄|` of the reconstruction on the real `k` grid.
    pub reconstruction_reflection: f64,
    pub sample_points: usize,
    pub warnings: Vec<String>,
}

/// Real `k` grid used by round trips and reflectionless checks.
pub const ROUNDTRIP_KS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

pub fn roundtrip(p: &PotentialPair, contour: &Contour, region: &Rect) -> Result<RoundtripReport> {
    use crate::scattering::{reflectionless_test, scatter_grid, ScatterOptions};
    use crate::spectrum::{extract_discrete_data, SpectrumOptions};

    let ks: Vec<Complex64> = ROUNDTRIP_KS.iter().map(|k| Complex64::new(*k, 0.0)).collect();
    let opts = ScatterOptions::default();
    let forward: Vec<_> = scatter_grid(p, &ks, contour, &opts).into_iter().collect::<Result<_>>()?;
    let report = reflectionless_test(&forward, 1e-6);
    if !report.reflectionless {
        return Err(Error::NotReflectionless {
            worst_k: report.worst_k,
            worst_value: report.worst_value,
        });
    }
    let spectrum = extract_discrete_data(p, contour, region, &SpectrumOptions::default())?;
    let data = spectrum.to_input();
    let rec_pair = crate::potentials::make_potential(&crate::potentials::PotentialSpec::Reconstructed(data.clone()))?;

    // Compare on a grid that keeps clear of real poles of either potential.
    let mut poles: Vec<f64> = p.real_poles().to_vec();
    poles.extend_from_slice(rec_pair.real_poles());
    let xs: Vec<f64> = (0..=160)
        .map(|i| -8.0 + 0.1 * i as f64 + 0.0137)
        .filter(|x| poles.iter().all(|p| (x - p).abs() > 0.05))
        .collect();
    let mut worst = 0.0f64;
    for &x in &xs {
        let xc = Complex64::new(x, 0.0);
        let (q0, r0) = p.eval(xc)?;
        let (q1, r1) = rec_pair.eval(xc)?;
        worst = worst
            .max((q1 - q0).norm() / q0.norm().max(1.0))
            .max((r1 - r0).norm() / r0.norm().max(1.0));
    }

    let rec_contour = crate::contour::build_contour(&rec_pair, contour.elevation, contour.half_length, contour.margin)?;
    let again: Vec<_> = scatter_grid(&rec_pair, &ks, &rec_contour, &opts)
        .into_iter()
        .collect::<Result<_>>()?;
    let mut forward_dev = 0.0f64;
    let mut refl = 0.0f64;
    for (s0, s1) in forward.iter().zip(&again) {
        if let (Some(a1), Some(a0)) = (s1.a, s0.a) {
            forward_dev = forward_dev.max((a1 - a0).norm());
        }
        refl = refl
            .max(s1.b.map_or(0.0, |b| b.norm()))
            .max(s1.b_bar.map_or(0.0, |b| b.norm()));
    }
    Ok(RoundtripReport {
        data,
        max_relative_deviation: worst,
        forward_deviation: forward_dev,
        reconstruction_reflection: refl,
        sample_points: xs.len(),
        warnings: spectrum.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_input_gives_free_solutions() {
        let input = ReconstructionInput::default();
        let sys = assemble_linear_system(&input, 0.3).unwrap();
        assert_eq!(sys.matrix.nrows(), 0);
        let j = solve_jost(&input, 0.3, c(1.5, 0.2)).unwrap();
        assert_eq!(j.n, [ZERO, ONE]);
        assert_eq!(j.n_bar, [ONE, ZERO]);
        let e = (I * c(1.5, 0.2) * 0.3).exp();
        assert!((j.psi[1] - e).norm() < 1e-15);
        assert!((j.psi_bar[0] - 1.0 / e).norm() < 1e-15);
        let rec = recover_potentials(&input, &[-1.0, 0.0, 2.0]).unwrap();
        assert!(rec.samples.iter().all(|s| s.q == Some(ZERO) && s.r == Some(ZERO)));
        assert!(rec.pole_candidates.is_empty());
    }

    #[test]
    fn example_unknowns_at_origin() {
        // The printed closed form gives N_1^0(0) = (2, -2)/d(0) with d(0) = -4.
        let rec = Reconstruction::new(ReconstructionInput::example_negaton()).unwrap();
        let u = rec.solve(c(0.0, 0.0), true).unwrap();
        let n10 = rec.derivative_value(&u, true, 0, 0);
        assert!((n10[0] - c(-0.5, 0.0)).norm() < 1e-13);
        assert!((n10[1] - c(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn example_unknowns_match_printed_solution() {
        let rec = Reconstruction::new(ReconstructionInput::example_negaton()).unwrap();
        for x in [-1.3, -0.5, 0.2, 0.6, 1.4] {
            let xc = c(x, 0.0);
            let u = rec.solve(xc, false).unwrap();
            let d = crate::potentials::negaton_denominator(xc);
            let (e2, e4) = ((2.0 * xc).exp(), (4.0 * xc).exp());
            let n10 = [e2 / d * ((4.0 * x + 1.0) * e4 + 1.0), e2 / d * e2 * (e4 - 4.0 * x - 3.0)];
            let n11 = [I * e2 / d * (2.0 * x + 1.0) * (e4 - 1.0), I * e2 / d * 2.0 * e2 * (2.0 * x + 1.0).powi(2)];
            let got0 = rec.derivative_value(&u, true, 0, 0);
            let got1 = rec.derivative_value(&u, true, 0, 1);
            for i in 0..2 {
                assert!((got0[i] - n10[i]).norm() < 1e-10 * (1.0 + n10[i].norm()), "x={x}");
                assert!((got1[i] - n11[i]).norm() < 1e-10 * (1.0 + n11[i].norm()), "x={x}");
            }
        }
    }

    #[test]
    fn example_potential_is_the_self_consistent_negaton() {
        let rec = Reconstruction::new(ReconstructionInput::example_negaton()).unwrap();
        for x in [-2.0, -0.6, 0.1, 0.5, 1.7] {
            let xc = c(x, 0.0);
            let (q, r) = rec.potentials_at(xc).unwrap();
            let d = crate::potentials::negaton_denominator(xc);
            let expected = -16.0 * (2.0 * xc).exp() * (xc * (4.0 * xc).exp() + xc + 1.0) / d;
            assert!((q - expected).norm() < 1e-9 * (1.0 + expected.norm()), "x={x}: {q} vs {expected}");
            assert!((q - r).norm() < 1e-9 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn single_pair_is_sech_soliton() {
        let rec = Reconstruction::new(ReconstructionInput::single_pair(1.0)).unwrap();
        let (q0, r0) = rec.potentials_at(c(0.0, 0.0)).unwrap();
        assert!((q0 + r0).norm() < 1e-12);
        let (qf, _) = rec.potentials_at(c(15.0, 0.0)).unwrap();
        assert!(qf.norm() < 1e-10);
        // |q(x)| = 2 sech(2x) up to a shift.
        let peak = (0..400)
            .map(|i| rec.potentials_at(c(-4.0 + 0.02 * i as f64, 0.0)).unwrap().0.norm())
            .fold(0.0, f64::max);
        assert!((peak - 2.0).abs() < 1e-3);
    }

    #[test]
    fn limit_check_agrees_with_exact_sum() {
        let rec = Reconstruction::new(ReconstructionInput::example_negaton()).unwrap();
        let u = rec.solve(c(0.3, 0.0), false).unwrap();
        let exact = rec.potentials_from(&u);
        let lim = rec.potentials_by_limit(&u).unwrap();
        assert!((exact.0 - lim.0).norm() < 1e-6 * (1.0 + exact.0.norm()));
        assert!((exact.1 - lim.1).norm() < 1e-6 * (1.0 + exact.1.norm()));
    }

    #[test]
    fn pole_collision_is_reported() {
        let input = ReconstructionInput::single_pair(1.0);
        let err = solve_jost(&input, 0.0, c(0.0, 1.0)).unwrap_err();
        assert_eq!(err, Error::PoleCollision(c(0.0, 1.0)));
        assert!(err.is_contract_violation());
    }

    #[test]
    fn example_poles_found_by_recovery() {
        let xs: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
        let rec = recover_potentials(&ReconstructionInput::example_negaton(), &xs).unwrap();
        assert_eq!(rec.pole_candidates.len(), 2, "{:?}", rec.pole_candidates);
        assert!((rec.pole_candidates[0] + 0.245036).abs() < 1e-5);
        assert!((rec.pole_candidates[1] - 0.864558).abs() < 1e-5);
    }

    #[test]
    fn mirroring_rules() {
        let e = DiscreteEigen::new(c(0.5, 1.0), 2, vec![c(1.0, 2.0), c(3.0, -1.0)], vec![c(0.0, 1.0), c(2.0, 2.0)]);
        let m = mirror_eigen(&e, Symmetry::Negated).unwrap();
        assert_eq!(m.location, c(-0.5, -1.0));
        assert_eq!(m.a_derivatives, vec![c(1.0, 2.0), c(-3.0, 1.0)]);
        assert_eq!(m.b_derivatives, vec![c(0.0, -1.0), c(2.0, 2.0)]);
        let m = mirror_eigen(&e, Symmetry::NegConjugate).unwrap();
        assert_eq!(m.location, c(0.5, -1.0));
        assert_eq!(m.a_derivatives, vec![c(1.0, -2.0), c(3.0, 1.0)]);
        assert_eq!(m.b_derivatives, vec![c(0.0, 1.0), c(-2.0, 2.0)]);
        assert!(mirror_eigen(&e, Symmetry::None).is_err());
    }

    #[test]
    fn validation_rejects_wrong_half_plane() {
        let bad = ReconstructionInput {
            upper: vec![DiscreteEigen::new(c(0.0, -1.0), 1, vec![ONE], vec![ONE])],
            lower: vec![],
        };
        assert_eq!(Reconstruction::new(bad).unwrap_err().name(), "InvalidSpec");
    }
}
