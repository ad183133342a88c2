//! `tentcocycle` command line: Markov spectra, explicit bounds, simulations
//! and property sweeps, written as CSV or JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tentcocycle::bound_calculator::{self, asymptotic_bound, frequency_threshold, spectral_gap_bound, FrequencyOptions};
use tentcocycle::cone_metric::ConeParams;
use tentcocycle::interval_maps::{make_paired_tent, PairedTentParams, SecondIterate};
use tentcocycle::markov_analysis::{self, exact_lambda2, subdominance, MarkovModel};
use tentcocycle::rds_cocycle::{
    contraction_schedule, eta_bracket, lambda2_power_iteration, make_driving, pullback_density, CocycleOptions,
    DrivingConfig, DrivingKind, DrivingStream,
};
use tentcocycle::sampling::{float_step_function, signed_step_function, unit_parameter};
use tentcocycle::scalar::Scalar;
use tentcocycle::step_functions::{ly_check, StepFunction};
use tentcocycle::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tentcocycle", version, about = "Spectral data of random paired tent map cocycles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration (driving, cone, numeric settings).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the driving seed and seeds all random sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Writes `x,y` graph samples of the maps involved to this CSV file.
    #[arg(long, global = true)]
    pub emit_graph: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Markov parameters κₙ: adjacency spectra and exact λ₂.
    Markov {
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"], default_values_t = [5u32, 12])]
        n_range: Vec<u32>,
    },
    /// Explicit spectral-gap constants for the configured driving.
    Bound {
        /// Also evaluate the small-κ bound at this scaling.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Equivariant density and Lyapunov estimates along one orbit.
    Simulate {
        #[arg(long, default_value_t = 0)]
        omega: i64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        /// Writes the equivariant density as `lo,hi,value` rows.
        #[arg(long)]
        density: Option<PathBuf>,
    },
    /// Random checks of the Lasota-Yorke inequality for second iterates.
    LySweep {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Bracketing sequences of η on random test functions.
    EtaCheck {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 30)]
        steps: usize,
    },
    /// Contraction bookkeeping `l±`, `j±` along the driving.
    Schedule {
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    #[default]
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    pub mode: Mode,
    pub max_cells: usize,
    pub pullback_depth: usize,
    pub burn_in: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        let o = CocycleOptions::default();
        Self { mode: Mode::Float, max_cells: o.max_cells, pullback_depth: o.pullback_depth, burn_in: o.burn_in }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub driving: Option<DrivingConfig>,
    pub cone: Option<ConeParams>,
    pub numeric: NumericConfig,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a run configuration. A bare driving object is accepted as well.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("kind").is_some() {
        serde_json::from_value::<DrivingConfig>(value).map(|d| RunConfig { driving: Some(d), ..RunConfig::default() })
    } else {
        serde_json::from_value::<RunConfig>(value)
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

struct Context {
    stream: DrivingStream,
    cone: ConeParams,
    numeric: NumericConfig,
    seed: u64,
}

impl Context {
    fn new(cfg: &RunConfig, seed: Option<u64>) -> CliResult<Self> {
        let mut driving = cfg.driving.clone().unwrap_or(DrivingConfig {
            kind: DrivingKind::Periodic,
            table: vec![vec![1.0, 1.0]],
            seed: 0,
            kappa: 1.0,
        });
        if let Some(s) = seed {
            driving.seed = s;
        }
        let cone = cfg.cone.unwrap_or_default();
        let cone = ConeParams::new(cone.a, cone.nu)?;
        if cfg.numeric.pullback_depth == 0 || cfg.numeric.max_cells == 0 {
            return Err(CliError::Config("pullback_depth and max_cells must be positive".into()));
        }
        Ok(Self { stream: make_driving(&driving)?, cone, numeric: cfg.numeric.clone(), seed: seed.unwrap_or(driving.seed) })
    }

    fn opts(&self) -> CocycleOptions {
        CocycleOptions {
            cone: self.cone,
            max_cells: self.numeric.max_cells,
            pullback_depth: self.numeric.pullback_depth,
            burn_in: self.numeric.burn_in,
            ..CocycleOptions::default()
        }
    }
}

/// What a command produced: CSV text and the JSON value of the same data.
struct Output {
    csv: String,
    json: Value,
    graph: Option<String>,
    /// A checked inequality failed; reported with exit code 2.
    failure: Option<String>,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn graph_csv(label: &str, maps: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = format!("{label},x,y\n");
    for (name, pts) in maps {
        for (x, y) in pts {
            let _ = writeln!(s, "{name},{x},{y}");
        }
    }
    s
}

fn run_markov(n_range: &[u32]) -> CliResult<Output> {
    let (from, to) = (n_range[0], n_range[1]);
    if from == 0 || from > to {
        return Err(CliError::Config(format!("--n-range needs 1 <= FROM <= TO, got {from} {to}")));
    }
    let models: Vec<MarkovModel> =
        (from..=to).collect::<Vec<_>>().par_iter().map(|n| exact_lambda2(*n)).collect::<Result<_, _>>()?;
    let mut csv = format!("{}\n", markov_analysis::CSV_HEADER);
    let mut rows = Vec::new();
    for m in &models {
        csv.push_str(&markov_analysis::csv_row(m));
        csv.push('\n');
        let mut v = to_json(m);
        let (worst, ok) = subdominance(m);
        v["subdominant_modulus"] = json!(worst);
        v["subdominance_ok"] = json!(ok);
        v["invariant_density"] = to_json(&markov_analysis::invariant_density(m));
        rows.push(v);
    }
    let graph = models
        .iter()
        .map(|m| {
            let map = make_paired_tent(&PairedTentParams::new(m.kappa, m.kappa)?)?;
            Ok((m.n.to_string(), map.graph(8)))
        })
        .collect::<tentcocycle::Result<Vec<_>>>()?;
    Ok(Output { csv, json: Value::Array(rows), graph: Some(graph_csv("n", &graph)), failure: None })
}

fn step_graph(stream: &DrivingStream, k: i64) -> String {
    let t0 = stream.map_at::<f64>(2 * k);
    let t1 = stream.map_at::<f64>(2 * k + 1);
    let s = stream.second_iterate_at::<f64>(k);
    graph_csv(
        "map",
        &[("T_even".to_string(), t0.graph(8)), ("T_odd".to_string(), t1.graph(8)), ("S".to_string(), s.map.graph(8))],
    )
}

fn run_bound(ctx: &Context, kappa: Option<f64>) -> CliResult<Output> {
    let report = spectral_gap_bound(&ctx.stream, &ctx.cone)?;
    let asym = match kappa {
        Some(k) => {
            let th = frequency_threshold(&ctx.stream, &FrequencyOptions { seed: ctx.seed, ..FrequencyOptions::default() })?;
            Some(asymptotic_bound(&ctx.stream, &ctx.cone, k, &th)?)
        }
        None => None,
    };
    let k_col = kappa.unwrap_or(ctx.stream.kappa);
    let csv = format!(
        "{}\n{}\n",
        bound_calculator::CSV_HEADER,
        bound_calculator::csv_row(&report, k_col, asym.as_ref())
    );
    let mut json = to_json(&report);
    json["kappa"] = json!(k_col);
    json["asymptotic"] = asym.as_ref().map(to_json).unwrap_or(Value::Null);
    Ok(Output { csv, json, graph: Some(step_graph(&ctx.stream, 0)), failure: None })
}

#[derive(Serialize)]
struct SimulateSummary {
    omega_index: i64,
    phi: f64,
    residual: f64,
    cauchy_increment: f64,
    lambda1: f64,
    lambda1_stderr: f64,
    lambda2: f64,
    n_steps: usize,
}

fn simulate<S: Scalar>(ctx: &Context, omega: i64, steps: usize) -> CliResult<(SimulateSummary, StepFunction<f64>)> {
    let opts = ctx.opts();
    let v = pullback_density(&ctx.stream, omega, opts.pullback_depth, &StepFunction::<S>::one(), &opts)?;
    let spec = lambda2_power_iteration::<S>(&ctx.stream, omega, steps, 1, &opts)?;
    let summary = SimulateSummary {
        omega_index: omega,
        phi: v.phi,
        residual: v.residual,
        cauchy_increment: v.cauchy_increment,
        lambda1: spec.lambda1,
        lambda1_stderr: spec.stderr,
        lambda2: spec.lambda2,
        n_steps: steps,
    };
    Ok((summary, v.density.to_f64()))
}

fn run_simulate(ctx: &Context, omega: i64, steps: usize, density: Option<&Path>) -> CliResult<Output> {
    if steps == 0 {
        return Err(CliError::Config("--steps must be positive".into()));
    }
    let (s, dens) = match ctx.numeric.mode {
        Mode::Float => simulate::<f64>(ctx, omega, steps)?,
        Mode::Rational => simulate::<BigRational>(ctx, omega, steps)?,
    };
    if let Some(p) = density {
        write_file(p, &dens.to_csv())?;
    }
    let csv = format!(
        "omega_index,phi,residual,cauchy_increment,lambda1,lambda1_stderr,lambda2,n_steps\n{},{},{},{},{},{},{},{}\n",
        s.omega_index, s.phi, s.residual, s.cauchy_increment, s.lambda1, s.lambda1_stderr, s.lambda2, s.n_steps
    );
    let mut json = to_json(&s);
    json["density"] = to_json(&dens);
    Ok(Output { csv, json, graph: Some(step_graph(&ctx.stream, omega)), failure: None })
}

#[derive(Serialize, Default)]
struct LySummary {
    mode: &'static str,
    samples: usize,
    general_violations: usize,
    sharp_cases: usize,
    sharp_violations: usize,
    max_general_ratio: f64,
}

fn ly_case<S: Scalar>(si: &SecondIterate<S>, f: &StepFunction<S>) -> (bool, Option<bool>, f64) {
    let c = ly_check(si, f);
    let rhs = c.rhs_general.to_f64_lossy();
    let ratio = if rhs > 0.0 { c.lhs.to_f64_lossy() / rhs } else { 0.0 };
    (c.general_holds, c.sharp_holds, ratio)
}

fn ly_sample(mode: Mode, seed: u64, i: usize) -> (bool, Option<bool>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    // Every other case keeps all four parameters at most ½.
    let small = i % 2 == 0;
    match mode {
        Mode::Float => {
            let top = if small { 0.5 } else { 1.0 };
            let mut p = || PairedTentParams::new(rng.random_range(0.0..=top), rng.random_range(0.0..=top));
            let (a, b) = (p().expect("valid"), p().expect("valid"));
            let si = SecondIterate::new(a, b).expect("valid parameters");
            ly_case(&si, &float_step_function(&mut rng, 16, false))
        }
        Mode::Rational => {
            let den = if small { 48 } else { 24 };
            let mut e = || unit_parameter::<BigRational, _>(&mut rng, 24) * BigRational::new(24.into(), den.into());
            let (a, b) = (PairedTentParams::new(e(), e()).expect("valid"), PairedTentParams::new(e(), e()).expect("valid"));
            let si = SecondIterate::new(a, b).expect("valid parameters");
            ly_case(&si, &signed_step_function(&mut rng, 12, 24))
        }
    }
}

fn run_ly_sweep(ctx: &Context, samples: usize) -> CliResult<Output> {
    let mode = ctx.numeric.mode;
    let results: Vec<_> = (0..samples).into_par_iter().map(|i| ly_sample(mode, ctx.seed, i)).collect();
    let mut s = LySummary { mode: if mode == Mode::Float { "float" } else { "rational" }, samples, ..Default::default() };
    for (g, sharp, ratio) in results {
        s.general_violations += usize::from(!g);
        if let Some(h) = sharp {
            s.sharp_cases += 1;
            s.sharp_violations += usize::from(!h);
        }
        s.max_general_ratio = s.max_general_ratio.max(ratio);
    }
    let csv = format!(
        "mode,samples,general_violations,sharp_cases,sharp_violations,max_general_ratio\n{},{},{},{},{},{}\n",
        s.mode, s.samples, s.general_violations, s.sharp_cases, s.sharp_violations, s.max_general_ratio
    );
    let failure = (s.general_violations + s.sharp_violations > 0)
        .then(|| format!("{} Lasota-Yorke violations", s.general_violations + s.sharp_violations));
    Ok(Output { csv, json: to_json(&s), graph: None, failure })
}

#[derive(Serialize)]
struct EtaRow {
    sample: usize,
    eta: f64,
    eta_of_v: f64,
    integral_of_v: f64,
    integral_x: f64,
    identity_error: f64,
    monotone: bool,
    closed: bool,
}

fn run_eta_check(ctx: &Context, samples: usize, steps: usize) -> CliResult<Output> {
    let opts = ctx.opts();
    let rows: Vec<EtaRow> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            rng.set_stream(i as u64);
            let x = signed_step_function::<f64, _>(&mut rng, 10, 32);
            let e = eta_bracket(&ctx.stream, i as i64, &x, steps, &opts)?;
            let ix = x.integral();
            Ok(EtaRow {
                sample: i,
                eta: e.eta,
                eta_of_v: e.eta_of_v,
                integral_of_v: e.integral_of_v,
                integral_x: ix,
                identity_error: (e.eta * e.integral_of_v - ix).abs() / ix.abs().max(x.l1()),
                monotone: e.monotone,
                closed: e.closed,
            })
        })
        .collect::<tentcocycle::Result<_>>()?;
    let mut csv = String::from("sample,eta,eta_of_v,integral_of_v,integral_x,identity_error,monotone,closed\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.sample, r.eta, r.eta_of_v, r.integral_of_v, r.integral_x, r.identity_error, r.monotone, r.closed
        );
    }
    let failure = rows.iter().any(|r| !r.monotone).then(|| "non-monotone bracketing sequence".to_string());
    Ok(Output { csv, json: to_json(&rows), graph: None, failure })
}

fn run_schedule(ctx: &Context, horizon: usize) -> CliResult<Output> {
    let report = spectral_gap_bound(&ctx.stream, &ctx.cone)?;
    let s = contraction_schedule(
        horizon,
        |i| bound_calculator::in_g_p(&ctx.stream, &report, i),
        report.k_p as usize,
        report.d_p,
    )?;
    let mut csv = String::from("n,l_plus,j_plus,l_minus,j_minus,predicted_diam\n");
    for n in 0..horizon {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            n + 1,
            s.l_plus[n],
            s.j_plus[n],
            s.l_minus[n],
            s.j_minus[n],
            s.predicted_diam[n]
        );
    }
    let failure = (!(s.forward_ok && s.backward_ok)).then(|| "schedule inequality violated".to_string());
    let mut json = to_json(&s);
    json["D_P"] = json!(report.d_p);
    Ok(Output { csv, json, graph: None, failure })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> CliResult<Option<String>> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context::new(&cfg, cli.seed)?;
    let out = match &cli.command {
        Command::Markov { n_range } => run_markov(n_range)?,
        Command::Bound { kappa } => run_bound(&ctx, *kappa)?,
        Command::Simulate { omega, steps, density } => run_simulate(&ctx, *omega, *steps, density.as_deref())?,
        Command::LySweep { samples } => run_ly_sweep(&ctx, *samples)?,
        Command::EtaCheck { samples, steps } => run_eta_check(&ctx, *samples, *steps)?,
        Command::Schedule { horizon } => run_schedule(&ctx, *horizon)?,
    };
    let text = match cli.format {
        Format::Csv => out.csv,
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&out.json).expect("json output")),
    };
    match &cli.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    if let (Some(p), Some(g)) = (&cli.emit_graph, &out.graph) {
        write_file(p, g)?;
    }
    Ok(out.failure)
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(None) => EXIT_OK,
        Ok(Some(msg)) => {
            eprintln!("check failed: {msg}");
            EXIT_NUMERICAL
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NUMERICAL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_exit_with_two() {
        assert!(matches!(CliError::from(Error::Numerical("x".into())), CliError::Numerical(_)));
        assert!(matches!(CliError::from(Error::Config("x".into())), CliError::Config(_)));
        assert!(matches!(CliError::from(Error::Precondition("x".into())), CliError::Config(_)));
    }

    #[test]
    fn config_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.numeric.mode, Mode::Float);
        assert_eq!(c.numeric.pullback_depth, 60);
        let ctx = Context::new(&c, Some(5)).unwrap();
        assert_eq!(ctx.cone, ConeParams::default());
        assert_eq!(ctx.stream.epsilon_at(3), (1.0, 1.0));
        assert_eq!(ctx.seed, 5);
        assert!(serde_json::from_str::<RunConfig>(r#"{"numeric":{"mode":"exact"}}"#).is_err());
    }
}
