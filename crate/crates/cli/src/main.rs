//! `optomech` command-line front-end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure.

mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use optomech::evolution::trace;
use optomech::export;
use optomech::lindblad::{evolve, noisy_trajectory, EvolveOptions, FockSpace, TruncatedState, DEFAULT_CUTOFF};
use optomech::montecarlo::{run_study, DrivingMode};
use optomech::optimizer::{optimal_phase, optimize_sequence_with, robustness_scan, OptimizerOptions};
use optomech::params::compute_steady_state;
use optomech::semiclassical::{default_averages, integrate_classical, smooth_profile};
use optomech::{derive, PhaseSequence, SystemParams};

use grid::{parse_list, parse_range, parse_time, resolve_phases};
use output::Outputs;

#[derive(Parser)]
#[command(name = "optomech", version, about = "Composite phase sequences for optomechanical state transfer")]
struct Cli {
    /// Bundled parameter set (cohen, lecocq, groblacher, lecocq-fig1, fig3, symmetric).
    #[arg(long, global = true, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON parameter file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "OPTOMECH_OUT", default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the steady state and derived constants.
    Steady,
    /// Photon and phonon numbers against time.
    Trace(TraceArgs),
    /// Final phonon number against interaction-area deviation.
    Scan(ScanArgs),
    /// Optimized phases for symmetric odd-length sequences.
    Optimize(OptimizeArgs),
    /// Random static variations of g, κ and γ.
    Montecarlo(MonteCarloArgs),
    /// Truncated master-equation run.
    Lindblad(LindbladArgs),
    /// Classical amplitudes under an erf-smoothed phase profile.
    Smooth(SmoothArgs),
}

#[derive(Args, Serialize)]
struct TraceArgs {
    /// Time grid start:end:step; `tau` suffix allowed.
    #[arg(long, default_value = "0:3tau:0.01tau")]
    t: String,
    /// Number of segments; a constant phase defaults to enough segments
    /// to cover the time grid, anything else to 3.
    #[arg(long = "N", visible_alias = "n")]
    n: Option<usize>,
    /// optimal, lossless, constant, a single phase or N comma-separated phases.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    phase: String,
    /// Segment duration.
    #[arg(long, default_value = "tau")]
    segment: String,
    /// Deviation of the interaction area per swap time, in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    deviation: f64,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long = "N", visible_alias = "n", default_value_t = 3)]
    n: usize,
    #[arg(long, default_value = "optimal", allow_hyphen_values = true)]
    phase: String,
    /// Area deviation grid start:end:step in radians.
    #[arg(long, default_value = "-0.3:0.3:0.01", allow_hyphen_values = true)]
    dev: String,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    /// Comma-separated odd sequence lengths.
    #[arg(long = "N", visible_alias = "n", default_value = "3,5,7,9")]
    n: String,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Constant,
    Composite,
    Both,
}

#[derive(Args, Serialize)]
struct MonteCarloArgs {
    /// Comma-separated relative standard deviations in percent.
    #[arg(long, default_value = "1,2,5")]
    level: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    #[arg(long, default_value_t = 3000)]
    instances: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct LindbladArgs {
    #[arg(long, default_value = "0:3tau:0.05tau")]
    t: String,
    #[arg(long = "N", visible_alias = "n", default_value_t = 3)]
    n: usize,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    phase: String,
    #[arg(long, default_value = "tau")]
    segment: String,
    /// Fock levels per mode.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: usize,
    /// Initial Fock state `photons,phonons`; defaults to the rounded
    /// initial occupations of the parameter set.
    #[arg(long)]
    init: Option<String>,
    /// Include thermal baths.
    #[arg(long)]
    thermal: bool,
    /// Seed for smooth random fluctuations of g, ωm, Δ, κ and γ.
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct SmoothArgs {
    #[arg(long = "N", visible_alias = "n", default_value_t = 3)]
    n: usize,
    /// Target average phases; defaults to the negative optimal branch.
    #[arg(long, allow_hyphen_values = true)]
    averages: Option<String>,
    /// Smoothing width; `tau` suffix allowed.
    #[arg(long, default_value = "25")]
    sigma: String,
    /// Sampling step.
    #[arg(long, default_value = "0.02tau")]
    dt: String,
    /// End of the run; defaults to N + 2 swap times.
    #[arg(long)]
    t_end: Option<String>,
}

enum Failure {
    User(String),
    Numerical(String),
}

impl From<optomech::Error> for Failure {
    fn from(e: optomech::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::User(format!("i/o error: {e}"))
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::User(e)
    }
}

type Outcome = Result<(), Failure>;

struct Context {
    params: SystemParams,
    source: Value,
    out: PathBuf,
    format: Format,
}

impl Context {
    fn load(cli: &Cli) -> Result<Self, Failure> {
        let (params, source) = match (&cli.preset, &cli.config) {
            (Some(name), None) => (SystemParams::preset(name)?, json!({ "preset": name })),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
                let params = SystemParams::from_json_str(&text)
                    .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
                (params, json!({ "config": path.display().to_string() }))
            }
            _ => return Err(Failure::User("one of --preset or --config is required".into())),
        };
        Ok(Context { params, source, out: cli.out.clone(), format: cli.format })
    }

    fn config(&self, options: &impl Serialize) -> Value {
        json!({
            "source": self.source,
            "params": self.params,
            "format": self.format,
            "options": options,
        })
    }

    fn outputs(&self) -> Result<Outputs, Failure> {
        Ok(Outputs::new(&self.out)?)
    }

    fn ext(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("values serialize");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> optomech::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn steady(ctx: &Context) -> Outcome {
    let p = &ctx.params;
    let d = derive(p)?;
    let ss = compute_steady_state(p)?;
    let phi = optimal_phase(d.loss_asymmetry).ok();
    let fields: Vec<(&str, Value)> = vec![
        ("alpha_re", json!(d.alpha.re)),
        ("alpha_im", json!(d.alpha.im)),
        ("beta_re", json!(d.beta.re)),
        ("beta_im", json!(d.beta.im)),
        ("drive_strength", json!(ss.drive_strength)),
        ("laser_detuning", json!(ss.laser_detuning)),
        ("photon_number", json!(d.photon_number)),
        ("g", json!(d.enhanced_coupling)),
        ("detuning", json!(d.detuning)),
        ("Gamma", json!(d.loss_asymmetry)),
        ("mu", json!(d.mean_decay)),
        ("Omega", json!(d.rabi)),
        ("tau0", json!(d.swap_time)),
        ("kappa_tilde", json!(d.mod_cavity_decay)),
        ("gamma_tilde", json!(d.mod_mech_decay)),
        ("phi_opt", json!(phi)),
    ];
    match ctx.format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            print!("{}", String::from_utf8(json_bytes(&map)).expect("utf-8"));
        }
        Format::Csv => {
            println!("key,value");
            for (k, v) in fields {
                println!("{k},{}", if v.is_null() { String::new() } else { v.to_string() });
            }
        }
    }
    Ok(())
}

fn cmd_trace(ctx: &Context, a: &TraceArgs) -> Outcome {
    let p = &ctx.params;
    let d0 = derive(p)?;
    let d = if a.deviation != 0.0 { d0.apply_area_deviation(a.deviation)? } else { d0 };
    let grid = parse_range(&a.t, d0.swap_time)?;
    let segment = parse_time(&a.segment, d0.swap_time)?;
    let constant = a.phase == "constant" || a.phase.trim().parse::<f64>().is_ok();
    let n = match a.n {
        Some(n) => n,
        None if constant => {
            let t_max = grid.iter().cloned().fold(0.0, f64::max);
            ((t_max / segment - 1e-9).ceil() as usize).max(1)
        }
        None => 3,
    };
    let phases = resolve_phases(&a.phase, n, &d0)?;
    let seq = PhaseSequence::from_phases(&phases, segment)?;
    let values = trace(&seq, &grid, &d, p)?;
    let bytes = match ctx.format {
        Format::Csv => csv_bytes(|w| export::write_trace(w, &grid, &values))?,
        Format::Json => {
            let rows: Vec<Value> = grid
                .iter()
                .zip(&values)
                .map(|(t, m)| {
                    let mut v = serde_json::to_value(m).expect("serializes");
                    v["t"] = json!(t);
                    v
                })
                .collect();
            json_bytes(&json!({ "phases": phases, "samples": rows }))
        }
    };
    let mut out = ctx.outputs()?;
    let file = out.write(&format!("trace.{}", ctx.ext()), &bytes)?;
    let manifest = out.finish("trace", ctx.config(a), None)?;
    report(&[file, manifest]);
    Ok(())
}

fn cmd_scan(ctx: &Context, a: &ScanArgs) -> Outcome {
    let p = &ctx.params;
    let d = derive(p)?;
    let grid = parse_range(&a.dev, 1.0)?;
    let phases = resolve_phases(&a.phase, a.n, &d)?;
    let seq = PhaseSequence::from_phases(&phases, d.swap_time)?;
    let curve = robustness_scan(&seq, &grid, &d, p)?;
    let bytes = match ctx.format {
        Format::Csv => csv_bytes(|w| export::write_scan(w, &curve))?,
        Format::Json => json_bytes(&curve),
    };
    let mut out = ctx.outputs()?;
    let file = out.write(&format!("scan.{}", ctx.ext()), &bytes)?;
    let manifest = out.finish("scan", ctx.config(a), None)?;
    report(&[file, manifest]);
    Ok(())
}

fn cmd_optimize(ctx: &Context, a: &OptimizeArgs) -> Outcome {
    let d = derive(&ctx.params)?;
    let ns: Vec<usize> = parse_list(&a.n)?;
    let results = ns
        .iter()
        .map(|&n| optimize_sequence_with(n, d.loss_asymmetry, &OptimizerOptions::default()))
        .collect::<optomech::Result<Vec<_>>>()?;
    let bytes = match ctx.format {
        Format::Csv => {
            let seqs: Vec<Vec<f64>> = results.iter().map(|r| r.phases.clone()).collect();
            csv_bytes(|w| export::write_sequences(w, &seqs))?
        }
        Format::Json => json_bytes(
            &ns.iter()
                .zip(&results)
                .map(|(n, r)| json!({ "N": n, "phases": r.phases, "residual": r.residual, "iterations": r.iterations }))
                .collect::<Vec<_>>(),
        ),
    };
    let mut out = ctx.outputs()?;
    let file = out.write(&format!("sequences.{}", ctx.ext()), &bytes)?;
    let manifest = out.finish("optimize", ctx.config(a), None)?;
    report(&[file, manifest]);
    Ok(())
}

fn cmd_montecarlo(ctx: &Context, a: &MonteCarloArgs) -> Outcome {
    let p = &ctx.params;
    let d = derive(p)?;
    let levels: Vec<f64> = parse_list(&a.level)?;
    let modes = match a.mode {
        ModeArg::Constant => vec![DrivingMode::Constant],
        ModeArg::Composite => vec![DrivingMode::Composite],
        ModeArg::Both => vec![DrivingMode::Constant, DrivingMode::Composite],
    };
    let mut reports = Vec::new();
    for &level in &levels {
        for &mode in &modes {
            reports.push(run_study(&d, p, mode, level, a.instances, a.seed)?);
        }
    }
    let bytes = match ctx.format {
        Format::Csv => csv_bytes(|w| export::write_montecarlo(w, &reports))?,
        Format::Json => json_bytes(&reports),
    };
    let mut out = ctx.outputs()?;
    let file = out.write(&format!("montecarlo.{}", ctx.ext()), &bytes)?;
    let manifest = out.finish("montecarlo", ctx.config(a), Some(a.seed))?;
    report(&[file, manifest]);
    Ok(())
}

fn cmd_lindblad(ctx: &Context, a: &LindbladArgs) -> Outcome {
    let p = &ctx.params;
    let d = derive(p)?;
    let grid = parse_range(&a.t, d.swap_time)?;
    let phases = resolve_phases(&a.phase, a.n, &d)?;
    let seq = PhaseSequence::from_phases(&phases, parse_time(&a.segment, d.swap_time)?)?;
    let (nc, nm) = match &a.init {
        Some(text) => match parse_list::<usize>(text)?.as_slice() {
            [c, m] => (*c, *m),
            _ => return Err(Failure::User("--init expects `photons,phonons`".into())),
        },
        None => (p.init_photons.round() as usize, p.init_phonons.round() as usize),
    };
    let space = FockSpace::new(a.cutoff, a.cutoff)?;
    let init = TruncatedState::fock(space, nc, nm)?;
    let noise = a.noise_seed.map(|s| noisy_trajectory(s, seq.total_duration())).transpose()?;
    let opts = EvolveOptions { grid, thermal: a.thermal, ..Default::default() };
    let tr = evolve(&init, &seq, &d, noise.as_ref(), &opts)?;
    let bytes = match ctx.format {
        Format::Csv => csv_bytes(|w| export::write_lindblad(w, &tr.samples))?,
        Format::Json => json_bytes(&json!({ "phases": phases, "samples": tr.samples })),
    };
    let mut out = ctx.outputs()?;
    let file = out.write(&format!("lindblad.{}", ctx.ext()), &bytes)?;
    let manifest = out.finish("lindblad", ctx.config(a), a.noise_seed)?;
    report(&[file, manifest]);
    Ok(())
}

fn cmd_smooth(ctx: &Context, a: &SmoothArgs) -> Outcome {
    let p = &ctx.params;
    let d = derive(p)?;
    let tau0 = d.swap_time;
    let averages = match &a.averages {
        Some(text) => parse_list(text)?,
        None => default_averages(a.n, &d)?,
    };
    let profile = smooth_profile(&averages, parse_time(&a.sigma, tau0)?, &d)?;
    let t_end = match &a.t_end {
        Some(t) => parse_time(t, tau0)?,
        None => (averages.len() as f64 + 2.0) * tau0,
    };
    let run = integrate_classical(p, &profile, t_end, parse_time(&a.dt, tau0)?)?;
    let mut out = ctx.outputs()?;
    let files = match ctx.format {
        Format::Csv => vec![
            out.write("smooth.csv", &csv_bytes(|w| export::write_classical(w, &run.samples))?)?,
            out.write(
                "smooth_metrics.json",
                &json_bytes(&json!({ "profile": profile, "metrics": run.metrics })),
            )?,
        ],
        Format::Json => vec![out.write(
            "smooth.json",
            &json_bytes(&json!({ "profile": profile, "metrics": run.metrics, "samples": run.samples })),
        )?],
    };
    let manifest = out.finish("smooth", ctx.config(a), None)?;
    report(&files);
    report(&[manifest]);
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Steady => steady(&ctx),
        Command::Trace(a) => cmd_trace(&ctx, a),
        Command::Scan(a) => cmd_scan(&ctx, a),
        Command::Optimize(a) => cmd_optimize(&ctx, a),
        Command::Montecarlo(a) => cmd_montecarlo(&ctx, a),
        Command::Lindblad(a) => cmd_lindblad(&ctx, a),
        Command::Smooth(a) => cmd_smooth(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
