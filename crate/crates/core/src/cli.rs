//! Command-line front end. Every command reads JSON inputs, writes one
//! artifact (JSON or CSV) and embeds the fully resolved configuration in it.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 numerical failure,
//! 4 contract violation.

use crate::analytic::Rect;
use crate::contour::{build_contour, Contour};
use crate::error::Error;
use crate::ode::Tolerances;
use crate::potentials::{classify_symmetry, make_potential, PotentialPair, PotentialSpec, Symmetry};
use crate::reconstruct::{recover_potentials, roundtrip, ReconstructionInput};
use crate::scattering::{
    check_symmetry_relations, grid_to_csv, mat_det, mat_product, reflectionless_test, schrodinger_form, scatter_grid,
    stokes_matrices, Mat2, ScatterOptions, ScatteringData,
};
use crate::spectrum::{extract_discrete_data, SpectrumOptions};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONTRACT: i32 = 4;

const DEFAULT_K: &str = "-2,-1,-0.5,0.5,1,2";
const DEFAULT_X: &str = "-5:5:201";

#[derive(Parser, Debug)]
#[command(name = "zs", version, about = "Forward and inverse scattering for the Zakharov-Shabat system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Scattering coefficients on a k grid.
    Scatter,
    /// Discrete spectrum with derivative and norming data.
    Spectrum,
    /// Potentials rebuilt from discrete data.
    Reconstruct,
    /// Spectrum, reconstruction and comparison against the input potential.
    Roundtrip,
    /// Deviation in the symmetry identities of the potential's reduction.
    CheckSymmetry,
    /// Reflectionless test and Stokes matrices.
    Classify,
    /// Coefficients of the scalar second-order form and their orders at infinity.
    SchrodingerForm,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Options {
    /// Potential JSON file.
    #[arg(long, global = true)]
    pub potential: Option<PathBuf>,
    /// Discrete-data JSON file (as written by `spectrum`).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Spectral parameters: `v1,v2,...` or `start:stop:count`; entries may be complex (`1+0.5i`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<String>,
    /// Sample points in x: `v1,v2,...` or `start:stop:count`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Search rectangle `re0,re1,im0,im1` in the upper half-plane.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    #[arg(long = "contour-c", global = true, default_value_t = crate::contour::DEFAULT_ELEVATION)]
    pub contour_c: f64,
    #[arg(long = "contour-L", global = true, default_value_t = crate::contour::DEFAULT_HALF_LENGTH)]
    pub contour_l: f64,
    #[arg(long, global = true, default_value_t = crate::contour::DEFAULT_MARGIN)]
    pub margin: f64,
    /// Relative integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Absolute integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub atol: f64,
    /// Threshold on |b|, |b̄| for `classify`.
    #[arg(long = "reflection-tol", global = true, default_value_t = 1e-6)]
    pub reflection_tol: f64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourConfig {
    pub c: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceConfig {
    pub rtol: f64,
    pub atol: f64,
    pub reflection: f64,
}

/// Everything a run depends on, after defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub potential: Option<PathBuf>,
    pub data: Option<PathBuf>,
    /// Only the inputs the command consumes are serialized.
    #[serde(with = "crate::cser::vec", skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<Complex64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    pub contour: ContourConfig,
    pub tolerances: ToleranceConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
enum Failure {
    Input(String),
    Numerical(Error),
    Contract(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_contract_violation() {
            Failure::Contract(e)
        } else if matches!(e, Error::InvalidSpec(_)) {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e)
        }
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Contract(_) => EXIT_CONTRACT,
        }
    }

    fn report(&self) -> Value {
        match self {
            Failure::Input(m) => json!({"kind": "input", "name": "InputError", "message": m}),
            Failure::Numerical(e) => json!({"kind": "numerical", "name": e.name(), "message": e.to_string()}),
            Failure::Contract(e) => json!({"kind": "contract", "name": e.name(), "message": e.to_string()}),
        }
    }
}

/// One complex number: `1.5`, `-2i`, `0.5+1i`, `1-0.25i`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let t = s.trim().replace(' ', "");
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().ok()?,
    };
    Some(Complex64::new(re.parse().ok()?, im))
}

/// `v1,v2,...` or `start:stop:count` (inclusive linspace).
pub fn parse_grid(s: &str) -> std::result::Result<Vec<Complex64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s
            .split(',')
            .map(|v| parse_complex(v).ok_or_else(|| format!("cannot parse grid entry {v:?}")))
            .collect(),
        3 => {
            let a = parse_complex(parts[0]).ok_or_else(|| format!("bad start {:?}", parts[0]))?;
            let b = parse_complex(parts[1]).ok_or_else(|| format!("bad stop {:?}", parts[1]))?;
            let n: usize = parts[2].trim().parse().map_err(|_| format!("bad count {:?}", parts[2]))?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![a],
                // One rounding per entry: integer-weighted sum, then a single division.
                _ => (0..n)
                    .map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64)
                    .collect(),
            })
        }
        _ => Err(format!("grid {s:?} is neither a list nor start:stop:count")),
    }
}

fn parse_region(s: &str) -> std::result::Result<Rect, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad region entry {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 4 {
        return Err(format!("region needs four numbers, got {}", v.len()));
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> std::result::Result<Self, (i32, String)> {
        let o = &cli.options;
        let input = |m: String| (EXIT_INPUT, m);
        let k = parse_grid(o.k.as_deref().unwrap_or(DEFAULT_K)).map_err(input)?;
        let x: Vec<f64> = parse_grid(o.x.as_deref().unwrap_or(DEFAULT_X))
            .map_err(input)?
            .into_iter()
            .map(|z| if z.im == 0.0 { Ok(z.re) } else { Err(input(format!("x must be real, got {z}"))) })
            .collect::<std::result::Result<_, _>>()?;
        let region = match &o.region {
            Some(s) => parse_region(s).map_err(input)?,
            None => crate::spectrum::default_region(),
        };
        for (name, v) in [("tol", o.tol), ("atol", o.atol), ("reflection-tol", o.reflection_tol), ("contour-L", o.contour_l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(input(format!("--{name} must be positive, got {v}")));
            }
        }
        if !(o.margin >= 0.0 && o.contour_c.is_finite()) {
            return Err(input("contour parameters must be finite with a nonnegative margin".into()));
        }
        for p in [&o.potential, &o.data, &o.out].into_iter().flatten() {
            if p.as_os_str().is_empty() {
                return Err(input("paths must be nonempty".into()));
            }
        }
        if k.is_empty() || x.is_empty() {
            return Err(input("grids must be nonempty".into()));
        }
        if matches!(cli.command, Command::Scatter | Command::CheckSymmetry | Command::Classify) && k.iter().any(|z| z.norm() == 0.0) {
            return Err((EXIT_CONTRACT, Error::ZeroSpectralParameter.to_string()));
        }
        use Command::*;
        let c = cli.command;
        let uses_k = matches!(c, Scatter | CheckSymmetry | Classify);
        let uses_x = matches!(c, Reconstruct | SchrodingerForm);
        let uses_region = matches!(c, Spectrum | Roundtrip);
        Ok(Self {
            command: c,
            potential: o.potential.clone(),
            data: o.data.clone(),
            k: if uses_k { k } else { Vec::new() },
            x: if uses_x { x } else { Vec::new() },
            region: uses_region.then_some(region),
            contour: ContourConfig {
                c: o.contour_c,
                half_length: o.contour_l,
                margin: o.margin,
            },
            tolerances: ToleranceConfig {
                rtol: o.tol,
                atol: o.atol,
                reflection: o.reflection_tol,
            },
            out: o.out.clone(),
            format: o.format,
        })
    }

    fn region(&self) -> Rect {
        self.region.unwrap_or_else(crate::spectrum::default_region)
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.tolerances.rtol,
            atol: self.tolerances.atol,
            ..Tolerances::default()
        }
    }

    fn scatter_options(&self) -> ScatterOptions {
        ScatterOptions {
            tol: self.tolerances(),
            ..ScatterOptions::default()
        }
    }
}

/// Output of one run: exit code and the artifact text.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>, flag: &str) -> std::result::Result<T, Failure> {
    let path = path.as_ref().ok_or_else(|| Failure::Input(format!("--{flag} is required")))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_potential(cfg: &RunConfig) -> std::result::Result<PotentialPair, Failure> {
    let spec: PotentialSpec = read_json(&cfg.potential, "potential")?;
    Ok(make_potential(&spec)?)
}

fn load_contour(cfg: &RunConfig, p: &PotentialPair) -> std::result::Result<Contour, Failure> {
    Ok(build_contour(p, cfg.contour.c, cfg.contour.half_length, cfg.contour.margin)?)
}

fn cpair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn mat_json(m: &Mat2) -> Value {
    json!([[cpair(m[0][0]), cpair(m[0][1])], [cpair(m[1][0]), cpair(m[1][1])]])
}

fn csv_unavailable(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    if cfg.format == Format::Csv {
        return Err(Failure::Input(format!(
            "--format csv is not available for {}",
            serde_json::to_value(cfg.command).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        )));
    }
    Ok(())
}

/// A computed artifact: JSON payload, optional CSV rendering, and whether any
/// entry failed numerically.
struct Artifact {
    payload: Value,
    csv: Option<String>,
    partial: Option<Error>,
}

fn grid_entries(results: Vec<crate::error::Result<ScatteringData>>, ks: &[Complex64]) -> (Vec<ScatteringData>, Vec<Value>, Option<Error>) {
    let mut ok = Vec::new();
    let mut entries = Vec::new();
    let mut first = None;
    for (r, k) in results.into_iter().zip(ks) {
        match r {
            Ok(sd) => {
                entries.push(serde_json::to_value(&sd).expect("record serializes"));
                ok.push(sd);
            }
            Err(e) => {
                entries.push(json!({"k": cpair(*k), "error": {"name": e.name(), "message": e.to_string()}}));
                first.get_or_insert(e);
            }
        }
    }
    (ok, entries, first)
}

fn scatter(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    let p = load_potential(cfg)?;
    let contour = load_contour(cfg, &p)?;
    let results = scatter_grid(&p, &cfg.k, &contour, &cfg.scatter_options());
    let (ok, entries, partial) = grid_entries(results, &cfg.k);
    Ok(Artifact {
        payload: json!({"contour": contour, "records": entries}),
        csv: Some(grid_to_csv(&ok)),
        partial,
    })
}

fn spectrum(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    csv_unavailable(cfg)?;
    let p = load_potential(cfg)?;
    let contour = load_contour(cfg, &p)?;
    let opts = SpectrumOptions {
        tol: cfg.tolerances(),
        ..SpectrumOptions::default()
    };
    let s = extract_discrete_data(&p, &contour, &cfg.region(), &opts)?;
    let mut payload = serde_json::to_value(&s).expect("spectrum serializes");
    payload["contour"] = serde_json::to_value(contour).expect("contour serializes");
    Ok(Artifact {
        payload,
        csv: None,
        partial: None,
    })
}

fn reconstruct(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    let input: ReconstructionInput = match (&cfg.data, &cfg.potential) {
        (Some(_), _) => read_json(&cfg.data, "data")?,
        (None, Some(_)) => match read_json::<PotentialSpec>(&cfg.potential, "potential")? {
            PotentialSpec::Reconstructed(input) => input,
            other => {
                return Err(Failure::Input(format!(
                    "reconstruct needs discrete data, got a {} potential",
                    other.kind()
                )))
            }
        },
        (None, None) => return Err(Failure::Input("--data is required".into())),
    };
    let rec = recover_potentials(&input, &cfg.x)?;
    let csv = rec.to_csv();
    Ok(Artifact {
        payload: serde_json::to_value(&rec).expect("samples serialize"),
        csv: Some(csv),
        partial: None,
    })
}

fn roundtrip_cmd(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    csv_unavailable(cfg)?;
    let p = load_potential(cfg)?;
    let contour = load_contour(cfg, &p)?;
    let report = roundtrip(&p, &contour, &cfg.region())?;
    Ok(Artifact {
        payload: serde_json::to_value(&report).expect("report serializes"),
        csv: None,
        partial: None,
    })
}

fn sample_points() -> Vec<f64> {
    (0..=40).map(|i| -4.0 + 0.2 * i as f64 + 0.0123).collect()
}

fn reduction(p: &PotentialPair) -> std::result::Result<Symmetry, Failure> {
    let s = match p.symmetry() {
        Symmetry::None => classify_symmetry(p, &sample_points(), 1e-12),
        s => s,
    };
    if s == Symmetry::None {
        return Err(Failure::Input("the potential satisfies none of the four reductions".into()));
    }
    Ok(s)
}

fn check_symmetry(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    csv_unavailable(cfg)?;
    let p = load_potential(cfg)?;
    let symmetry = reduction(&p)?;
    let contour = load_contour(cfg, &p)?;
    let reflect = matches!(symmetry, Symmetry::Equal | Symmetry::Negated);
    let mut ks: Vec<Complex64> = Vec::new();
    for k in &cfg.k {
        for z in [*k, if reflect { -k } else { k.conj() }] {
            if ks.iter().all(|w| (w - z).norm() > 1e-12 * (1.0 + z.norm())) {
                ks.push(z);
            }
        }
    }
    let results = scatter_grid(&p, &ks, &contour, &cfg.scatter_options());
    let (ok, entries, partial) = grid_entries(results, &ks);
    if let Some(e) = partial {
        return Err(Failure::from(e));
    }
    let deviation = check_symmetry_relations(&ok, symmetry)?;
    Ok(Artifact {
        payload: json!({"symmetry": symmetry, "deviation": deviation, "records": entries}),
        csv: None,
        partial: None,
    })
}

fn classify(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    csv_unavailable(cfg)?;
    let p = load_potential(cfg)?;
    let contour = load_contour(cfg, &p)?;
    let results = scatter_grid(&p, &cfg.k, &contour, &cfg.scatter_options());
    let (ok, _, partial) = grid_entries(results, &cfg.k);
    if let Some(e) = partial {
        return Err(Failure::from(e));
    }
    let real: Vec<ScatteringData> = ok.iter().filter(|s| s.k.im == 0.0).cloned().collect();
    let report = reflectionless_test(&real, cfg.tolerances.reflection);
    let mut stokes = Vec::new();
    for sd in &ok {
        match stokes_matrices(sd) {
            Ok((sm, sp)) => {
                let prod = mat_product(&sp, &sm);
                let dev = (prod[0][0] - 1.0).norm().max(prod[0][1].norm()).max(prod[1][0].norm()).max((prod[1][1] - 1.0).norm());
                stokes.push(json!({
                    "k": cpair(sd.k),
                    "s_minus": mat_json(&sm),
                    "s_plus": mat_json(&sp),
                    "det_s_minus": cpair(mat_det(&sm)),
                    "product_deviation": dev,
                }));
            }
            Err(e) => stokes.push(json!({"k": cpair(sd.k), "error": {"name": e.name(), "message": e.to_string()}})),
        }
    }
    let symmetry = match p.symmetry() {
        Symmetry::None => classify_symmetry(&p, &sample_points(), 1e-12),
        s => s,
    };
    Ok(Artifact {
        payload: json!({"symmetry": symmetry, "reflectionless": report, "stokes": stokes}),
        csv: None,
        partial: None,
    })
}

fn schrodinger(cfg: &RunConfig) -> std::result::Result<Artifact, Failure> {
    let p = load_potential(cfg)?;
    let form = schrodinger_form(&p)?;
    let mut samples = Vec::new();
    let mut csv = String::from("x,u1_re,u1_im,u2_re,u2_im\n");
    for &x in &cfg.x {
        let xc = Complex64::new(x, 0.0);
        match form.u1(xc).and_then(|u1| Ok((u1, form.u2(xc)?))) {
            Ok((u1, u2)) => {
                csv.push_str(&format!("{x:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n", u1.re, u1.im, u2.re, u2.im));
                samples.push(json!({"x": x, "u1": cpair(u1), "u2": cpair(u2)}));
            }
            Err(e) => {
                csv.push_str(&format!("{x:.17e},nan,nan,nan,nan\n"));
                samples.push(json!({"x": x, "error": {"name": e.name(), "message": e.to_string()}}));
            }
        }
    }
    Ok(Artifact {
        payload: json!({"orders": form.orders, "samples": samples}),
        csv: Some(csv),
        partial: None,
    })
}

fn render(cfg: &RunConfig, art: Artifact) -> String {
    let config = serde_json::to_value(cfg).expect("config serializes");
    match (cfg.format, art.csv) {
        (Format::Csv, Some(csv)) => format!("# config: {}\n{csv}", serde_json::to_string(&config).expect("json")),
        _ => {
            let mut payload = art.payload;
            payload["config"] = config;
            let mut text = serde_json::to_string_pretty(&payload).expect("json");
            text.push('\n');
            text
        }
    }
}

/// Compute the artifact for a resolved configuration without touching the output path.
pub fn execute(cfg: &RunConfig) -> Outcome {
    let result = match cfg.command {
        Command::Scatter => scatter(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Reconstruct => reconstruct(cfg),
        Command::Roundtrip => roundtrip_cmd(cfg),
        Command::CheckSymmetry => check_symmetry(cfg),
        Command::Classify => classify(cfg),
        Command::SchrodingerForm => schrodinger(cfg),
    };
    match result {
        Ok(art) => {
            let code = match &art.partial {
                Some(e) => Failure::from(e.clone()).code(),
                None => EXIT_OK,
            };
            Outcome {
                code,
                body: render(cfg, art),
            }
        }
        Err(f) => {
            let payload = json!({"config": cfg, "error": f.report()});
            let mut body = serde_json::to_string_pretty(&payload).expect("json");
            body.push('\n');
            Outcome { code: f.code(), body }
        }
    }
}

/// Run and write the artifact to `--out` (or stdout). Returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let outcome = execute(cfg);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.body) {
                eprintln!("zs: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => print!("{}", outcome.body),
    }
    if outcome.code != EXIT_OK {
        eprintln!("zs: failed with exit code {}", outcome.code);
    }
    outcome.code
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match RunConfig::resolve(&cli) {
        Ok(cfg) => run(&cfg),
        Err((code, msg)) => {
            eprintln!("zs: {msg}");
            code
        }
    }
}
