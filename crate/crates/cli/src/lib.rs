//! The `fldsc` command: Farey sequences, code design and checks, PEP
//! bounds, BER simulation and gap measurement.
//!
//! Data goes to stdout or `--out`; diagnostics go to stderr. Every parsed
//! invocation also writes one JSON run manifest, next to `--out` as
//! `<out>.manifest.json`, to `--manifest` if given, and otherwise to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fldsc_core::analysis::DEFAULT_NODES;
use fldsc_core::simulator::BLOCK_TRIALS;
use fldsc_core::{
    breakpoints, closed_form_2x2, error_set, farey_maxmin_2x2, farey_sequence, format_real, gains,
    gap_at_ber, grid_oracle_2x2, is_fldsc, normalize_power, pep_bounds, pep_quadrature,
    rho_from_db, run_ber, BerCurve, ChannelSpec, Constellation, MuPolicy, Rational, SimConfig,
    SpaceCode, UpperTerm,
};
use serde::Serialize;
use serde_json::{json, Value};

pub mod manifest;

use manifest::{timestamp, OutputDigest, RunManifest, GIT_DESCRIBE, VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "fldsc",
    version,
    about = "Full large-scale diversity space codes for MIMO optical wireless"
)]
struct Cli {
    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for stochastic subcommands; overrides a config file seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a Farey sequence or a PAM breakpoint list, one fraction per line.
    Farey(FareyArgs),
    /// Construct the optimal 2x2 code for unipolar 2^p-PAM.
    Design(DesignArgs),
    /// Check a code matrix for full large-scale diversity.
    Check(CheckArgs),
    /// Evaluate PEP bounds and the quadrature reference over an SNR grid.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo BER sweep from a config file.
    Simulate(SimulateArgs),
    /// SNR gap (dB) between two BER curves at a target BER.
    Gap(GapArgs),
}

impl Command {
    fn arguments(&self) -> Value {
        match self {
            Command::Farey(a) => to_value(a),
            Command::Design(a) => to_value(a),
            Command::Check(a) => to_value(a),
            Command::Bounds(a) => to_value(a),
            Command::Simulate(a) => to_value(a),
            Command::Gap(a) => to_value(a),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Farey(_) => "farey",
            Command::Design(_) => "design",
            Command::Check(_) => "check",
            Command::Bounds(_) => "bounds",
            Command::Simulate(_) => "simulate",
            Command::Gap(_) => "gap",
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
struct FareyArgs {
    /// Farey sequence of this order.
    #[arg(long)]
    order: Option<u32>,
    /// Breakpoints of 2^p-PAM.
    #[arg(long, value_name = "P")]
    breakpoints: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    /// Exact search over breakpoint intervals.
    Maxmin,
    /// The closed-form optimum.
    ClosedForm,
}

#[derive(Debug, Args, Serialize)]
struct DesignArgs {
    /// PAM order p (2^p levels).
    #[arg(long)]
    pam: u32,
    #[arg(long, value_enum, default_value_t = Method::Maxmin)]
    method: Method,
    /// Also run the brute-force grid search at this resolution.
    #[arg(long, value_name = "RES")]
    verify_grid: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    /// Matrix file: one row per line, entries as fractions or decimals.
    #[arg(long)]
    code: PathBuf,
    #[arg(long, default_value_t = 1)]
    pam: u32,
    /// Log-variance of every path; enables the gain report.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Receive apertures for the gain report.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Rescale to unit average optical power first.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    /// Error vector, comma separated (fractions allowed).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    e: Vec<String>,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Transmit apertures; must match the length of `--e`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "unit_mean")]
    mu_policy: String,
    /// Optical SNR grid in dB (10 log10 rho), comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    snr_db: Vec<f64>,
    /// Initial Gauss-Hermite nodes per dimension.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// TOML file with the simulation keys.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GapArgs {
    /// Reference curve CSV.
    #[arg(long)]
    a: PathBuf,
    /// Compared curve CSV; the gap is snr_b - snr_a.
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    target: f64,
}

/// A failed run: exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<fldsc_core::Error> for Failure {
    fn from(e: fldsc_core::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

/// What a subcommand produced.
struct Outcome {
    data: Vec<u8>,
    /// Resolved configuration when it differs from the arguments.
    config: Option<Value>,
    seed: Option<u64>,
    metadata: Value,
}

impl Outcome {
    fn new(data: impl Into<Vec<u8>>) -> Self {
        Self {
            data: data.into(),
            config: None,
            seed: None,
            metadata: Value::Null,
        }
    }
}

/// Runs `fldsc` with `args` (including the program name) on the process
/// streams and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    dispatch_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// [`dispatch`] with explicit output and diagnostic streams.
pub fn dispatch_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let started = Utc::now();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build()
        {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Failure {
                code: 2,
                message: format!("cannot start thread pool: {e}"),
            }),
        },
        None => execute(&cli),
    };

    let mut outputs = Vec::new();
    let (status, error, config, seed, metadata) = match result {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &outcome.data)
                    .map(|_| path.display().to_string())
                    .map_err(|e| io_failure(path, e)),
                None => stdout
                    .write_all(&outcome.data)
                    .map(|_| "stdout".to_string())
                    .map_err(|e| Failure {
                        code: 2,
                        message: format!("stdout: {e}"),
                    }),
            };
            match written {
                Ok(name) => {
                    outputs.push(OutputDigest::of(name, &outcome.data));
                    ("ok", None, outcome.config, outcome.seed, outcome.metadata)
                }
                Err(f) => (
                    "error",
                    Some(f),
                    outcome.config,
                    outcome.seed,
                    outcome.metadata,
                ),
            }
        }
        Err(f) => ("error", Some(f), None, cli.seed, Value::Null),
    };
    let config = config.unwrap_or_else(|| cli.command.arguments());

    let code = match &error {
        Some(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
        None => 0,
    };

    let manifest = RunManifest {
        tool: "fldsc",
        version: VERSION,
        git_describe: GIT_DESCRIBE,
        subcommand: cli.command.name().to_string(),
        argv: argv
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        config,
        seed,
        threads: cli.threads.map(usize::from),
        started: timestamp(started),
        finished: timestamp(Utc::now()),
        status,
        error: error.map(|f| f.message),
        outputs,
        metadata,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let target = cli
        .manifest
        .clone()
        .or_else(|| cli.out.as_ref().map(|p| manifest_path(p)));
    match target {
        Some(path) => {
            if let Err(e) = fs::write(&path, text) {
                let _ = writeln!(stderr, "error: {}: {e}", path.display());
                return code.max(2);
            }
        }
        None => {
            let _ = stderr.write_all(text.as_bytes());
        }
    }
    code
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Farey(a) => farey(a),
        Command::Design(a) => design(a),
        Command::Check(a) => check(a),
        Command::Bounds(a) => bounds(a),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Gap(a) => gap(a),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("arguments serialize")
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON output serializes");
    s.push('\n');
    s.into_bytes()
}

fn farey(a: &FareyArgs) -> Result<Outcome, Failure> {
    let terms = match (a.order, a.breakpoints) {
        (Some(k), _) => farey_sequence(k)?.into_terms(),
        (_, Some(p)) => breakpoints(p)?,
        _ => unreachable!("clap enforces exactly one of --order and --breakpoints"),
    };
    let text: String = terms.iter().map(|t| format!("{t}\n")).collect();
    Ok(Outcome::new(text))
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn design(a: &DesignArgs) -> Result<Outcome, Failure> {
    let d = match a.method {
        Method::Maxmin => farey_maxmin_2x2(a.pam)?,
        Method::ClosedForm => closed_form_2x2(a.pam)?,
    };
    let normalized = normalize_power(&d.code)?;
    let mut out = json!({
        "pam": a.pam,
        "method": a.method,
        "matrix": d.matrix_strings(),
        "objective": d.objective.to_string(),
        "objective_value": d.objective.to_f64(),
        "candidate_ratio": d.candidate_ratio.to_string(),
        "optimal_ratios": strings(&d.optimal_ratios),
        "normalized_matrix": normalized.to_strings(),
        "is_fldsc": is_fldsc(&error_set(&d.code)?),
    });
    if let Some(res) = a.verify_grid {
        let g = grid_oracle_2x2(a.pam, res)?;
        out["grid"] = json!({
            "resolution": res,
            "steps": g.steps,
            "matrix": g.matrix.iter().map(|r| r.iter().map(|x| format_real(*x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "objective": g.objective,
            "excess_over_design": g.objective - d.objective.to_f64(),
        });
    }
    Ok(Outcome::new(json_bytes(&out)))
}

fn check(a: &CheckArgs) -> Result<Outcome, Failure> {
    let text = read_file(&a.code)?;
    let mut code = SpaceCode::parse_matrix(&text, Constellation::pam(a.pam)?)?;
    if a.normalize {
        code = normalize_power(&code)?;
    }
    let es = error_set(&code)?;
    let min_product = match es.min_product_exact() {
        Some(x) => Some(x.to_string()),
        None => es.min_product().map(format_real),
    };
    let gain_report = match a.sigma2 {
        Some(s2) => {
            let chan = ChannelSpec::iid(a.m, code.n_tx(), s2, MuPolicy::default())?;
            Some(gains(&es, &chan)?)
        }
        None => None,
    };
    let out = json!({
        "matrix": code.to_strings(),
        "pam": a.pam,
        "is_fldsc": is_fldsc(&es),
        "all_positive": code.all_positive(),
        "error_vectors": es.len(),
        "min_product": min_product,
        "gains": gain_report,
    });
    Ok(Outcome::new(json_bytes(&out)))
}

fn bounds(a: &BoundsArgs) -> Result<Outcome, Failure> {
    let e: Vec<f64> =
        a.e.iter()
            .map(|s| s.trim().parse::<Rational>().map(|r| r.to_f64()))
            .collect::<Result<_, _>>()?;
    if let Some(n) = a.n {
        if n != e.len() {
            return Err(fldsc_core::Error::DimensionMismatch {
                expected: n,
                found: e.len(),
            }
            .into());
        }
    }
    let policy: MuPolicy = a.mu_policy.parse()?;
    let spec = ChannelSpec::iid(a.m, e.len(), a.sigma2, policy)?;
    let mut text = String::from(
        "snr_db,p_lower,p_u1,p_u2,p_quadrature,ln_p_lower,ln_p_u1,ln_p_u2,ln_p_quadrature,quadrature_converged,larger_upper,sandwich\n",
    );
    let mut violations = Vec::new();
    for &db in &a.snr_db {
        let rho = rho_from_db(db);
        let b = pep_bounds(&e, &spec, rho)?;
        let q = pep_quadrature(&e, &spec, rho, a.nodes)?;
        let sandwich = b.brackets_ln(q.ln_probability);
        if !sandwich {
            violations.push(db);
        }
        let larger = match b.larger_upper_term() {
            UpperTerm::Poly => "u1",
            UpperTerm::Exp => "u2",
        };
        let reals = [
            db,
            b.lower(),
            b.upper_poly(),
            b.upper_exp(),
            q.probability,
            b.ln_lower,
            b.ln_upper_poly,
            b.ln_upper_exp,
            q.ln_probability,
        ];
        let row: Vec<String> = reals.iter().map(|x| format_real(*x)).collect();
        text.push_str(&format!(
            "{},{},{larger},{sandwich}\n",
            row.join(","),
            q.converged()
        ));
    }
    let mut outcome = Outcome::new(text);
    outcome.metadata = json!({
        "snr_axis": "10*log10(rho), rho = rho_op^2",
        "omega": spec.omega(),
        "sandwich_violations_db": violations,
    });
    Ok(outcome)
}

fn simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<Outcome, Failure> {
    let mut cfg = SimConfig::from_toml_str(&read_file(&a.config)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let curve = run_ber(&cfg)?;
    let power: Vec<Value> = curve
        .points
        .iter()
        .map(|p| json!({"snr_db": p.snr_db, "mean_tx_power": p.mean_tx_power, "std_error": p.tx_power_std_error}))
        .collect();
    let mut outcome = Outcome::new(curve.to_csv());
    outcome.config = Some(to_value(&cfg));
    outcome.seed = Some(cfg.seed);
    outcome.metadata = json!({
        "config_file": a.config,
        "code_matrix": curve.code,
        "bits_per_trial": curve.bits_per_trial,
        "snr_axis": "10*log10(rho) = 20*log10(rho_op); noise variance per dimension 1/(N rho)",
        "bit_mapping": "natural binary per symbol",
        "block_trials": BLOCK_TRIALS,
        "tx_power": power,
    });
    Ok(outcome)
}

fn read_curve(path: &Path) -> Result<BerCurve, Failure> {
    let file = fs::File::open(path).map_err(|e| io_failure(path, e))?;
    BerCurve::read_csv(file).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn gap(a: &GapArgs) -> Result<Outcome, Failure> {
    let ca = read_curve(&a.a)?;
    let cb = read_curve(&a.b)?;
    let g = gap_at_ber(&ca, &cb, a.target)?;
    let mut outcome = Outcome::new(format!("{}\n", format_real(g)));
    outcome.metadata = json!({
        "snr_a_db": ca.snr_at_ber(a.target)?,
        "snr_b_db": cb.snr_at_ber(a.target)?,
        "scheme_a": ca.scheme,
        "scheme_b": cb.scheme,
    });
    Ok(outcome)
}
