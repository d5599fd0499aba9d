//! Command-line driver: validation, chart evaluation, decomposition, invariant scans and
//! the Fricke surface tools, emitting JSON or CSV artifacts.
//!
//! Exit codes: `0` success, `1` a failed check or computation, `2` unusable input.
//! Files given with `--out` are written to a temporary file in the target directory and
//! renamed into place once complete.

use crate::fricke::{self, ThetaParams, Var};
use crate::jsfamily::{
    det_profile, lines_containing, pi_invariant, pi_prime, reducible, validate, LineId, LocalData,
    MonodromyMatrix, Pair,
};
use crate::mano::{self, classify_xi, ManoFactors, PantsPoint, XiClass};
use crate::qcore::{annulus_rep, QParam};
use crate::{ProjectivePoint, C64};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "qmano", version, about = "Monodromy data of the Jimbo-Sakai family and the Fricke cubic")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Seed of the random generator used for representatives and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Equality tolerance overriding the default of the local data.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Fuchs relation, non-resonance and the per-pair hypotheses of local data.
    Validate { local: PathBuf },
    /// The monodromy matrix at a point of the q-pants chart of a pair.
    Pants {
        #[arg(long)]
        local: PathBuf,
        /// Pair of singularities, 1-based, as `i,j`.
        #[arg(long, default_value = "1,2")]
        pair: String,
        /// `ξ` as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// `η` as `re,im`; the coordinate `y` when `ξ` is a square root of the class.
        #[arg(long, allow_hyphen_values = true, default_value = "1,0")]
        eta: String,
    },
    /// The Mano decomposition of a matrix and its chart point.
    Decompose {
        matrix: PathBuf,
        #[arg(long, default_value = "1,2")]
        pair: String,
    },
    /// The matrix `P Diag(1, η) Q` of a factorisation.
    Compose {
        factors: PathBuf,
        /// Optional `η` inserted between the factors, as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
    },
    /// Invariants over a grid of q-pants chart points.
    Scan {
        #[arg(long)]
        local: PathBuf,
        #[arg(long, default_value = "1,2")]
        pair: String,
        /// Number of radii of `ξ` in the fundamental annulus.
        #[arg(long, default_value_t = 4)]
        xi_radii: usize,
        /// Number of arguments of `ξ`.
        #[arg(long, default_value_t = 4)]
        xi_args: usize,
        /// Number of values of `η` on the unit circle.
        #[arg(long, default_value_t = 1)]
        eta_points: usize,
    },
    /// `Π`, `Π'`, the determinant profile, reducibility and special lines of a matrix.
    Invariants { matrix: PathBuf },
    /// The Fricke cubic surface of Painlevé VI.
    #[command(subcommand)]
    Fricke(FrickeCommand),
}

#[derive(Debug, Args)]
pub struct FrickeParams {
    /// Eigenvalues `e_0, e_t, e_1, e_∞` as `re,im;re,im;re,im;re,im`.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["a", "params"])]
    pub e: Option<String>,
    /// Traces `a_0, a_t, a_1, a_∞`; each `e_l` is the root of `e² - a_l e + 1` with `|e| ≥ 1`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "params")]
    pub a: Option<String>,
    /// JSON file with `{"e": [...], "a": [...]}`.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FrickeCommand {
    /// `F`, its gradient and the Goldman brackets at a point.
    Eval {
        #[command(flatten)]
        params: FrickeParams,
        /// `X_0; X_t; X_1`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// The 24 lines.
    Lines {
        #[command(flatten)]
        params: FrickeParams,
    },
    /// The smoothness report.
    Smooth {
        #[command(flatten)]
        params: FrickeParams,
    },
    /// Points of the fiber `X_1 = const` from the rational parameterisation.
    Jimbo {
        #[command(flatten)]
        params: FrickeParams,
        #[arg(long, allow_hyphen_values = true)]
        x1: String,
        /// Parameter values `s` as `re,im;re,im;...`; defaults to a sweep of the unit circle.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        /// Number of sweep points when `--s` is absent.
        #[arg(long, default_value_t = 16)]
        sweep: usize,
    },
    /// An orbit of `s_0 ∘ s_t`.
    Orbit {
        #[command(flatten)]
        params: FrickeParams,
        /// Start point `X_0; X_t; X_1`; a random surface point when absent.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Exit {
    code: i32,
    error: anyhow::Error,
}

fn input_error(e: anyhow::Error) -> Exit {
    Exit { code: 2, error: e }
}

fn failure(e: anyhow::Error) -> Exit {
    Exit { code: 1, error: e }
}

/// Parses the process arguments and runs the command; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(code) => code,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            code
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("QMANO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `re,im` (or a bare real number).
pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().with_context(|| format!("invalid number {t:?} in {s:?}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => bail!("expected a complex number as re,im, got {s:?}"),
    }
}

/// Parses a `;`-separated list of complex numbers.
pub fn parse_complex_list(s: &str) -> Result<Vec<C64>> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(parse_complex).collect()
}

fn parse_pair(s: &str) -> Result<Pair> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("invalid pair {s:?}")))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [i, j] if (1..=4).contains(i) && (1..=4).contains(j) => {
            Pair::new(i - 1, j - 1).map_err(|e| anyhow!("{e}"))
        }
        _ => bail!("a pair is two distinct indices in 1..4, got {s:?}"),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

fn apply_tol(config: &RunConfig, local: LocalData) -> Result<LocalData> {
    match config.tol {
        None => Ok(local),
        Some(t) => {
            let qp = QParam::with_tolerances(local.qp.q, t, local.qp.tol_cong).map_err(|e| anyhow!("{e}"))?;
            Ok(local.with_qparam(qp))
        }
    }
}

fn read_local(config: &RunConfig, path: &Path) -> Result<LocalData> {
    apply_tol(config, read_json(path)?)
}

fn read_matrix(config: &RunConfig, path: &Path) -> Result<MonodromyMatrix> {
    let mut m: MonodromyMatrix = read_json(path)?;
    m.local = apply_tol(config, m.local)?;
    Ok(m)
}

/// Writes `bytes` to the configured destination, atomically for files.
fn emit(config: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &config.out {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(&dir)
                .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.flush()?;
            tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(config: &RunConfig, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(config, s.as_bytes())
}

/// Emits rows as CSV with the given header, or as a JSON array of objects.
fn emit_table(config: &RunConfig, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    match config.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
            emit(config, &bytes)
        }
        Format::Json => {
            let objs: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let m: serde_json::Map<String, Value> =
                        header.iter().cloned().zip(r.iter().map(|v| Value::String(v.clone()))).collect();
                    Value::Object(m)
                })
                .collect();
            emit_json(config, &objs)
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

fn projective_columns(prefix: &str) -> Vec<String> {
    ["num_re", "num_im", "den_re", "den_im", "chordal"].iter().map(|s| format!("{prefix}_{s}")).collect()
}

fn projective_cells(v: &Option<ProjectivePoint>) -> Vec<String> {
    match v {
        Some(p) => vec![
            fmt_f(p.num.re),
            fmt_f(p.num.im),
            fmt_f(p.den.re),
            fmt_f(p.den.im),
            fmt_f(p.chordal_scalar()),
        ],
        None => vec![String::new(); 5],
    }
}

fn execute(cli: &Cli) -> std::result::Result<i32, Exit> {
    let config = &cli.config;
    match &cli.command {
        Command::Validate { local } => {
            let local = read_local(config, local).map_err(input_error)?;
            let report = validate(&local);
            emit_json(config, &report).map_err(failure)?;
            Ok(if report.fr && report.nr { 0 } else { 1 })
        }
        Command::Pants { local, pair, xi, eta } => {
            let local = read_local(config, local).map_err(input_error)?;
            let p = parse_pair(pair).map_err(input_error)?;
            let xi = parse_complex(xi).map_err(input_error)?;
            let eta = parse_complex(eta).map_err(input_error)?;
            let out = pants_output(config, &local, p, xi, eta).map_err(failure)?;
            emit_json(config, &out).map_err(failure)?;
            Ok(0)
        }
        Command::Decompose { matrix, pair } => {
            let mm = read_matrix(config, matrix).map_err(input_error)?;
            let p = parse_pair(pair).map_err(input_error)?;
            let factors = mano::decompose(&mm, p).map_err(|e| failure(e.into()))?;
            let chart = mano::recover_pants(&mm, p).map_err(|e| failure(e.into()))?;
            emit_json(config, &json!({ "factors": factors, "chart": chart })).map_err(failure)?;
            Ok(0)
        }
        Command::Compose { factors, eta } => {
            let f: ManoFactors = read_json(factors).map_err(input_error)?;
            let eta = eta.as_deref().map(parse_complex).transpose().map_err(input_error)?;
            let mm = mano::compose(&f, eta).map_err(|e| failure(e.into()))?;
            emit_json(config, &mm).map_err(failure)?;
            Ok(0)
        }
        Command::Scan { local, pair, xi_radii, xi_args, eta_points } => {
            let local = read_local(config, local).map_err(input_error)?;
            let p = parse_pair(pair).map_err(input_error)?;
            if *xi_radii == 0 || *xi_args == 0 || *eta_points == 0 {
                return Err(input_error(anyhow!("grid sizes must be positive")));
            }
            let (header, rows) = scan(&local, p, *xi_radii, *xi_args, *eta_points);
            emit_table(config, &header, &rows).map_err(failure)?;
            Ok(0)
        }
        Command::Invariants { matrix } => {
            let mm = read_matrix(config, matrix).map_err(input_error)?;
            let out = invariants(&mm).map_err(failure)?;
            emit_json(config, &out).map_err(failure)?;
            Ok(0)
        }
        Command::Fricke(cmd) => fricke_command(config, cmd),
    }
}

fn pants_output(config: &RunConfig, local: &LocalData, p: Pair, xi: C64, eta: C64) -> Result<Value> {
    match classify_xi(local, p, xi, 1e-7) {
        XiClass::General => {
            let pt = PantsPoint { pair: p, xi: annulus_rep(&local.qp, xi), eta };
            let (mm, f) = mano::pants_matrix(local, &pt)?;
            Ok(json!({ "chart": "generic", "point": pt, "matrix": mm, "factors": f }))
        }
        XiClass::Critical { xi } => {
            let (mm, f) = mano::log_matrix(local, p, xi.value, eta)?;
            Ok(json!({ "chart": "logarithmic", "pair": p, "xi": xi, "y": [eta.re, eta.im], "matrix": mm, "factors": f }))
        }
        XiClass::Special { lines } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let (mm, f) = mano::line_representative(&mut rng, local, lines[0])?;
            Ok(json!({
                "chart": "special",
                "pair": p,
                "lines": lines,
                "value": crate::mano::phi(local, p, xi)?,
                "representative": { "line": lines[0], "matrix": mm, "factors": f },
            }))
        }
    }
}

#[derive(Serialize)]
struct PairInvariants {
    pair: Pair,
    pi: Option<ProjectivePoint>,
    pi_prime: Option<ProjectivePoint>,
}

fn invariants(mm: &MonodromyMatrix) -> Result<Value> {
    let prof = det_profile(mm)?;
    let pairs: Vec<PairInvariants> = Pair::all()
        .into_iter()
        .map(|p| PairInvariants { pair: p, pi: pi_invariant(mm, p).ok(), pi_prime: pi_prime(mm, p).ok() })
        .collect();
    let red = reducible(mm)?.map(|(i, j)| format!("m{}{}", i + 1, j + 1));
    let lines: Vec<LineId> = lines_containing(mm)?;
    Ok(json!({ "det_profile": prof, "pairs": pairs, "reducible": red, "lines": lines }))
}

/// The grid of chart points: radii `|q|^{(r+1/2)/n_r}`, arguments `2π(t+1/4)/n_t` and
/// `η = e^{2πi(m+1/8)/n_η}`.
fn scan_grid(local: &LocalData, nr: usize, na: usize, ne: usize) -> Vec<(C64, C64)> {
    let rq = local.qp.q.norm();
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(nr * na * ne);
    for r in 0..nr {
        for t in 0..na {
            let xi = C64::from_polar(rq.powf((r as f64 + 0.5) / nr as f64), tau * (t as f64 + 0.25) / na as f64);
            for m in 0..ne {
                out.push((xi, C64::from_polar(1.0, tau * (m as f64 + 0.125) / ne as f64)));
            }
        }
    }
    out
}

fn scan(local: &LocalData, p: Pair, nr: usize, na: usize, ne: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> =
        ["xi_re", "xi_im", "eta_re", "eta_im", "status", "fiber_class"].iter().map(|s| s.to_string()).collect();
    for q in Pair::all() {
        header.extend(projective_columns(&format!("pi{}{}", q.i + 1, q.j + 1)));
    }
    for q in Pair::all() {
        header.extend(projective_columns(&format!("piprime{}{}", q.i + 1, q.j + 1)));
    }
    header.push("message".into());
    let width = header.len();
    let grid = scan_grid(local, nr, na, ne);
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&(xi, eta)| {
            let mut row = vec![fmt_f(xi.re), fmt_f(xi.im), fmt_f(eta.re), fmt_f(eta.im)];
            let class = classify_xi(local, p, xi, 1e-7);
            let class_name = match &class {
                XiClass::General => "general".to_string(),
                XiClass::Special { lines } => format!("special:{}|{}", lines[0], lines[1]),
                XiClass::Critical { .. } => "critical".to_string(),
            };
            let pt = PantsPoint { pair: p, xi: annulus_rep(&local.qp, xi), eta };
            match (&class, mano::pants_matrix(local, &pt)) {
                (XiClass::General, Ok((mm, _))) => {
                    row.push("ok".into());
                    row.push(class_name);
                    for q in Pair::all() {
                        row.extend(projective_cells(&pi_invariant(&mm, q).ok()));
                    }
                    for q in Pair::all() {
                        row.extend(projective_cells(&pi_prime(&mm, q).ok()));
                    }
                    row.push(String::new());
                }
                (_, res) => {
                    row.push("invalid".into());
                    row.push(class_name);
                    let msg = match res {
                        Err(e) => e.to_string(),
                        Ok(_) => "outside the generic chart".into(),
                    };
                    row.resize(width - 1, String::new());
                    row.push(msg);
                }
            }
            row
        })
        .collect();
    (header, rows)
}

fn theta_params(p: &FrickeParams) -> Result<ThetaParams> {
    if let Some(path) = &p.params {
        let tp: ThetaParams = read_json(path)?;
        return Ok(tp);
    }
    if let Some(e) = &p.e {
        let v = parse_complex_list(e)?;
        let arr: [C64; 4] = v.try_into().map_err(|_| anyhow!("--e needs four values"))?;
        return ThetaParams::from_e(arr).map_err(|e| anyhow!("{e}"));
    }
    if let Some(a) = &p.a {
        let v = parse_complex_list(a)?;
        let arr: [C64; 4] = v.try_into().map_err(|_| anyhow!("--a needs four values"))?;
        let e = arr.map(|al| {
            let d = (al * al - 4.0).sqrt();
            let (r1, r2) = ((al + d) / 2.0, (al - d) / 2.0);
            if r1.norm() >= r2.norm() {
                r1
            } else {
                r2
            }
        });
        let mut tp = ThetaParams::from_e(e).map_err(|e| anyhow!("{e}"))?;
        tp.a = arr;
        tp.check().map_err(|e| anyhow!("{e}"))?;
        return Ok(tp);
    }
    bail!("one of --e, --a or --params is required")
}

fn parse_point(s: &str) -> Result<[C64; 3]> {
    let v = parse_complex_list(s)?;
    v.try_into().map_err(|_| anyhow!("a point needs three coordinates X_0;X_t;X_1"))
}

fn fricke_command(config: &RunConfig, cmd: &FrickeCommand) -> std::result::Result<i32, Exit> {
    match cmd {
        FrickeCommand::Eval { params, x } => {
            let tp = theta_params(params).map_err(input_error)?;
            let x = parse_point(x).map_err(input_error)?;
            let (f, grad) = fricke::fricke_eval(&x, &tp.a);
            let br = |i: Var, j: Var| {
                let b = fricke::goldman_bracket(&x, &tp.a, i, j);
                [b.re, b.im]
            };
            let out = json!({
                "params": tp,
                "coeffs": fricke::a_to_coeffs(&tp.a),
                "point": fricke::SurfacePoint::new(x, &tp.a),
                "f": [f.re, f.im],
                "gradient": grad.map(|g| [g.re, g.im]),
                "brackets": { "0t": br(Var::Zero, Var::T), "t1": br(Var::T, Var::One), "10": br(Var::One, Var::Zero) },
            });
            emit_json(config, &out).map_err(failure)?;
            Ok(0)
        }
        FrickeCommand::Lines { params } => {
            let tp = theta_params(params).map_err(input_error)?;
            let lines = fricke::lines_24(&tp);
            match config.format {
                Format::Json => emit_json(config, &lines).map_err(failure)?,
                Format::Csv => {
                    let header: Vec<String> = [
                        "index", "k", "family", "const_re", "const_im", "u_re", "u_im", "v_re", "v_im", "w_re",
                        "w_im", "duplicate_of",
                    ]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                    let rows: Vec<Vec<String>> = lines
                        .iter()
                        .enumerate()
                        .map(|(n, l)| {
                            let fam = serde_json::to_value(l.family).ok().and_then(|v| v.as_str().map(String::from));
                            vec![
                                n.to_string(),
                                l.k.to_string(),
                                fam.unwrap_or_default(),
                                fmt_f(l.constant.re),
                                fmt_f(l.constant.im),
                                fmt_f(l.u.re),
                                fmt_f(l.u.im),
                                fmt_f(l.v.re),
                                fmt_f(l.v.im),
                                fmt_f(l.w.re),
                                fmt_f(l.w.im),
                                l.duplicate_of.map(|d| d.to_string()).unwrap_or_default(),
                            ]
                        })
                        .collect();
                    emit_table(config, &header, &rows).map_err(failure)?;
                }
            }
            Ok(0)
        }
        FrickeCommand::Smooth { params } => {
            let tp = theta_params(params).map_err(input_error)?;
            emit_json(config, &fricke::smoothness(&tp)).map_err(failure)?;
            Ok(0)
        }
        FrickeCommand::Jimbo { params, x1, s, sweep } => {
            let tp = theta_params(params).map_err(input_error)?;
            let x1 = parse_complex(x1).map_err(input_error)?;
            let ss = match s {
                Some(s) => parse_complex_list(s).map_err(input_error)?,
                None => (0..*sweep)
                    .map(|n| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (n as f64 + 0.5) / *sweep as f64))
                    .collect(),
            };
            let mut rows = Vec::with_capacity(ss.len());
            for s in ss {
                let (x0, xt) = fricke::jimbo_param(&tp.a, x1, s).map_err(|e| failure(e.into()))?;
                let x = [x0, xt, x1];
                let (f, _) = fricke::fricke_eval(&x, &tp.a);
                let residual = f.norm() / fricke::fricke_scale(&x, &tp.a);
                rows.push(vec![
                    fmt_f(s.re),
                    fmt_f(s.im),
                    fmt_f(x0.re),
                    fmt_f(x0.im),
                    fmt_f(xt.re),
                    fmt_f(xt.im),
                    fmt_f(x1.re),
                    fmt_f(x1.im),
                    fmt_f(residual),
                ]);
            }
            let header: Vec<String> =
                ["s_re", "s_im", "x0_re", "x0_im", "xt_re", "xt_im", "x1_re", "x1_im", "residual"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
            emit_table(config, &header, &rows).map_err(failure)?;
            Ok(0)
        }
        FrickeCommand::Orbit { params, x, n } => {
            let tp = theta_params(params).map_err(input_error)?;
            let start = match x {
                Some(x) => parse_point(x).map_err(input_error)?,
                None => random_surface_point(config.seed, &tp.a).map_err(failure)?,
            };
            let pts = fricke::orbit(&start, &tp.a, *n);
            let header: Vec<String> =
                ["step", "x0_re", "x0_im", "xt_re", "xt_im", "x1_re", "x1_im", "f_re", "f_im", "on_surface"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
            let rows: Vec<Vec<String>> = pts
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let mut r = vec![k.to_string()];
                    for v in p.x {
                        r.push(fmt_f(v.re));
                        r.push(fmt_f(v.im));
                    }
                    r.push(fmt_f(p.f.re));
                    r.push(fmt_f(p.f.im));
                    r.push(p.on_surface.to_string());
                    r
                })
                .collect();
            emit_table(config, &header, &rows).map_err(failure)?;
            Ok(0)
        }
    }
}

/// A point of the surface from the seeded generator, through the rational parameterisation
/// of a random fiber.
fn random_surface_point(seed: u64, a: &[C64; 4]) -> Result<[C64; 3]> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let x1 = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let s = C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU));
        if let Ok((x0, xt)) = fricke::jimbo_param(a, x1, s) {
            return Ok([x0, xt, x1]);
        }
    }
    bail!("could not find a surface point")
}
