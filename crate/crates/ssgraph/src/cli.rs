//! The `ssgraph` command line.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error. Errors are
//! printed as `error[Kind]: message`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use ssgraph_core::action::{
    kappa_hat_flatness, make_kappa, oriented_sampling_exact, oriented_sampling_shots, refinement_error,
    AbelianGroupSpec, RegularActionTable,
};
use ssgraph_core::arith::FieldCtx;
use ssgraph_core::primes::primes_in;
use ssgraph_core::walksim::{total_variation, window_between, QpeMode, Regime};

use crate::report::{self, Format};
use crate::source::GraphSource;
use crate::{Error, Result};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (cache format 1, output format 1)");

#[derive(Parser, Debug)]
#[command(name = "ssgraph", version = VERSION, about = "Supersingular isogeny graphs: spectra, sampler simulation, cost model")]
pub struct Cli {
    /// Graph cache directory (default: $SSGRAPH_CACHE_DIR, else no cache)
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Directory of phi_<l>.txt files (default: $SSGRAPH_MODPOLY_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    modpoly_dir: Option<PathBuf>,
    /// Worker threads for scans
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an isogeny graph
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Spectral scans over primes
    #[command(subcommand)]
    Spectra(SpectraCmd),
    /// Phase-estimation sampler
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Query-cost model
    #[command(subcommand)]
    Cost(CostCmd),
    /// Group-action sampler
    #[command(subcommand)]
    Action(ActionCmd),
}

#[derive(Subcommand, Debug)]
enum GraphCmd {
    Build {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        ell: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (default: from the --out extension, else csv for
    /// tables and json otherwise)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct PrimeArgs {
    /// Explicit primes (comma separated)
    #[arg(long, value_delimiter = ',')]
    p: Vec<u64>,
    #[arg(long)]
    pmin: Option<u64>,
    #[arg(long)]
    pmax: Option<u64>,
    /// Keep this many primes of the range, evenly spaced by index
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ScanArgs {
    #[command(flatten)]
    primes: PrimeArgs,
    /// Levels (comma separated)
    #[arg(long, value_delimiter = ',')]
    ells: Option<Vec<u64>>,
    /// Seed for the joint diagonalization
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand, Debug)]
enum SpectraCmd {
    /// max ‖φ‖_∞ and its ratio to ln p/√p (default levels 2,3,5, primes
    /// in [500, 5000])
    Supnorm(ScanArgs),
    /// Minimum tag distance (default levels: the prime window of p, primes
    /// in [200, 5000])
    Separation(ScanArgs),
    /// Fourth-moment statistic (default levels 2,3,5, primes in [500, 5000])
    Moment(ScanArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Ideal,
    Kernel,
}

#[derive(Args, Debug, Clone)]
struct SamplerArgs {
    #[arg(long)]
    p: u64,
    /// Window ends "a,b" (either order): primes a < l ≤ b
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    /// Run shots and write the trace file
    Run {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Ideal)]
        mode: ModeArg,
        /// Register bits in kernel mode (default: the minimum allowed)
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long, default_value_t = 0.25)]
        c0: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact output distribution, oracle and exact cascade
    Oracle {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Deviation identity and α over all vertex pairs
    Deviation {
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RegimeArg {
    Heuristic,
    Grh,
    Both,
}

#[derive(Subcommand, Debug)]
enum CostCmd {
    /// One phase-estimation call
    Qpe {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        eta: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Whole sampler over the regime's window
    Pipeline {
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, value_enum, default_value_t = RegimeArg::Heuristic)]
        regime: RegimeArg,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ActionCmd {
    /// Exact output distribution of the refinement-phase sampler
    Demo {
        /// Cyclic factors, e.g. 4,3
        #[arg(long)]
        factors: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also draw this many samples
        #[arg(long)]
        shots: Option<u64>,
        /// Use κ = 1 instead of the quadratic refinement
        #[arg(long)]
        constant_kappa: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<ssgraph_core::Error> for Failure {
    fn from(e: ssgraph_core::Error) -> Self {
        Failure::Compute(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("invalid value for '--{flag}': {msg}"))
}

fn check_prime(p: u64) -> std::result::Result<(), Failure> {
    FieldCtx::new(p).map(|_| ()).map_err(|e| usage("p", format!("{}: {e}", e.kind())))
}

/// Explicit primes, or the primes of `[pmin, pmax]` with the bounds
/// falling back to `default`.
fn prime_list(args: &PrimeArgs, default: Option<(u64, u64)>) -> std::result::Result<Vec<u64>, Failure> {
    let (pmin, pmax) = match default {
        Some((lo, hi)) if args.p.is_empty() => (args.pmin.or(Some(lo)), args.pmax.or(Some(hi))),
        _ => (args.pmin, args.pmax),
    };
    let mut primes = match (args.p.is_empty(), pmin, pmax) {
        (false, None, None) => args.p.clone(),
        (true, Some(lo), Some(hi)) => {
            if lo > hi {
                return Err(usage("pmin", format!("{lo} exceeds --pmax {hi}")));
            }
            primes_in(lo.max(5), hi)
        }
        (false, _, _) => return Err(usage("p", "give either --p or --pmin/--pmax")),
        (true, _, _) => return Err(Failure::Usage("need --p or both --pmin and --pmax".into())),
    };
    for &p in &primes {
        check_prime(p)?;
    }
    if let Some(k) = args.count {
        if k == 0 {
            return Err(usage("count", "must be positive"));
        }
        if k < primes.len() {
            let n = primes.len();
            primes = (0..k).map(|i| primes[if k == 1 { 0 } else { i * (n - 1) / (k - 1) }]).collect();
        }
    }
    Ok(primes)
}

fn format_for(out: &OutArgs, default: Format) -> Format {
    match out.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => match out.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            _ => default,
        },
    }
}

/// Collects output in memory and writes it to the file or stdout at the
/// end, so a failed run leaves no partial file.
struct Sink<'a> {
    path: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    buf: Vec<u8>,
}

impl Sink<'_> {
    fn finish(self) -> Result<()> {
        match self.path {
            Some(path) => fs::write(&path, &self.buf).map_err(|e| Error::Io { path, source: e }),
            None => Ok(self.stdout.write_all(&self.buf)?),
        }
    }
}

fn window_arg(p: u64, w: &Option<Vec<f64>>) -> std::result::Result<Option<Vec<u64>>, Failure> {
    match w {
        None => Ok(None),
        Some(v) if v.len() != 2 => Err(usage("window", format!("expected two values, got {}", v.len()))),
        Some(v) => window_between(p, v[0], v[1]).map(Some).map_err(|e| usage("window", format!("{}: {e}", e.kind()))),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CmdResult {
    let source = GraphSource::from_flags(cli.modpoly_dir.clone(), cli.cache_dir.clone());
    let jobs = cli.jobs;
    if jobs == 0 {
        return Err(usage("jobs", "must be at least 1"));
    }
    let (out_args, default_format) = match &cli.command {
        Command::Graph(GraphCmd::Build { out, .. }) => (out, Format::Json),
        Command::Spectra(SpectraCmd::Supnorm(a) | SpectraCmd::Separation(a) | SpectraCmd::Moment(a)) => (&a.out, Format::Csv),
        Command::Sample(SampleCmd::Run { out, .. }) => (out, Format::Json),
        Command::Sample(SampleCmd::Oracle { out, .. } | SampleCmd::Deviation { out, .. }) => (out, Format::Csv),
        Command::Cost(CostCmd::Qpe { out, .. } | CostCmd::Pipeline { out, .. }) => (out, Format::Csv),
        Command::Action(ActionCmd::Demo { out, .. }) => (out, Format::Json),
    };
    let format = format_for(out_args, default_format);
    let mut sink = Sink { path: out_args.out.clone(), stdout, buf: Vec::new() };
    let w: &mut dyn Write = &mut sink.buf;

    match cli.command {
        Command::Graph(GraphCmd::Build { p, ell, .. }) => {
            check_prime(p)?;
            let ctx = FieldCtx::new(p)?;
            let g = source.graph(&ctx, ell)?;
            let n = g.len();
            let brandt: Vec<&[u32]> = g.brandt().chunks(n).collect();
            let doc = report::metadata(
                "graph build",
                json!({
                    "p": p,
                    "ell": ell,
                    "n": n,
                    "orientation": g.orientation().name(),
                    "twelve_mass": g.twelve_times_mass(),
                    "vertices": g.vertices().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "weights": g.weights(),
                    "brandt": brandt,
                }),
            );
            report::write_json(w, &doc)?;
        }
        Command::Spectra(cmd) => {
            let (name, args) = match &cmd {
                SpectraCmd::Supnorm(a) => ("supnorm", a),
                SpectraCmd::Separation(a) => ("separation", a),
                SpectraCmd::Moment(a) => ("moment", a),
            };
            let default = if name == "separation" { (200, 5000) } else { (500, 5000) };
            let primes = prime_list(&args.primes, Some(default))?;
            let seed = args.seed;
            let ells = args.ells.clone();
            if let Some(e) = &ells {
                if e.is_empty() {
                    return Err(usage("ells", "empty list"));
                }
            }
            let fixed = ells.clone().unwrap_or_else(|| vec![2, 3, 5]);
            let meta = report::metadata(
                &format!("spectra {name}"),
                json!({ "seed": seed, "ells": ells, "tolerances": tolerances() }),
            );
            match cmd {
                SpectraCmd::Supnorm(_) => {
                    let rows = report::scan(&primes, jobs, |&p| report::supnorm_row(&source, p, &fixed, seed))?;
                    report::write_rows(w, format, &rows, meta)?;
                }
                SpectraCmd::Moment(_) => {
                    let rows = report::scan(&primes, jobs, |&p| report::moment_row(&source, p, &fixed, seed))?;
                    report::write_rows(w, format, &rows, meta)?;
                }
                SpectraCmd::Separation(_) => {
                    let rows =
                        report::scan(&primes, jobs, |&p| report::separation_row(&source, p, ells.as_deref(), seed))?;
                    report::write_rows(w, format, &rows, meta)?;
                }
            }
        }
        Command::Sample(SampleCmd::Run { sampler, shots, mode, bits, c0, .. }) => {
            check_prime(sampler.p)?;
            if shots == 0 {
                return Err(usage("shots", "must be at least 1"));
            }
            let window = window_arg(sampler.p, &sampler.window)?;
            let r = match &window {
                Some(w) => w.len(),
                None => ssgraph_core::spectra::tag_window(sampler.p)?.len(),
            };
            let qmode = match mode {
                ModeArg::Ideal => {
                    if bits.is_some() {
                        return Err(usage("bits", "only valid with --mode kernel"));
                    }
                    QpeMode::Ideal
                }
                ModeArg::Kernel => {
                    let precision = c0.max(0.25) / (2.0 * (r as f64).sqrt());
                    QpeMode::Kernel {
                        bits: bits.unwrap_or_else(|| ssgraph_core::walksim::QpeConfig::min_bits(precision)),
                    }
                }
            };
            let s = report::sampler(&source, sampler.p, window.as_deref(), qmode, c0, sampler.seed)
                .map_err(|e| match e {
                    Error::Core(ssgraph_core::Error::DomainError(m)) if bits.is_some() => usage("bits", m),
                    e => Failure::Compute(e),
                })?;
            let seed = sampler.seed;
            let shot_ids: Vec<u64> = (0..shots).collect();
            let traces = report::scan(&shot_ids, jobs, |&k| Ok(s.shot(seed, k)))?;
            let run = s.collect(seed, traces);
            let empirical: serde_json::Map<String, Value> = s
                .vertices()
                .iter()
                .zip(run.empirical())
                .map(|(j, f)| (j.to_string(), json!(f)))
                .collect();
            let traces: Vec<Value> = run
                .traces
                .iter()
                .map(|t| json!({ "lambdas": t.lambdas, "j": t.code.j.to_string(), "b": t.code.b }))
                .collect();
            let doc = report::metadata(
                "sample run",
                json!({
                    "p": sampler.p,
                    "window": s.window(),
                    "mode": qmode.name(),
                    "bits": match qmode { QpeMode::Kernel { bits } => Some(bits), QpeMode::Ideal => None },
                    "c": s.config().c(),
                    "precision": s.config().precision(),
                    "seed": seed,
                    "shots": shots,
                    "traces": traces,
                    "empirical": empirical,
                    "tv_to_oracle": total_variation(&run.empirical(), &s.oracle()),
                }),
            );
            report::write_json(w, &doc)?;
        }
        Command::Sample(SampleCmd::Oracle { sampler, .. }) => {
            check_prime(sampler.p)?;
            let window = window_arg(sampler.p, &sampler.window)?;
            let s = report::sampler(&source, sampler.p, window.as_deref(), QpeMode::Ideal, 0.25, sampler.seed)?;
            let rows = report::oracle_rows(&s);
            let meta = report::metadata(
                "sample oracle",
                json!({ "p": sampler.p, "window": s.window(), "seed": sampler.seed, "start": s.vertices()[s.start()].to_string() }),
            );
            report::write_rows(w, format, &rows, meta)?;
        }
        Command::Sample(SampleCmd::Deviation { primes, seed, .. }) => {
            let primes = prime_list(&primes, None)?;
            let rows = report::scan(&primes, jobs, |&p| report::deviation_row(&source, p, None, seed))?;
            let meta = report::metadata("sample deviation", json!({ "seed": seed }));
            report::write_rows(w, format, &rows, meta)?;
        }
        Command::Cost(CostCmd::Qpe { ell, eps, eta, .. }) => {
            let row = report::qpe_cost_row(ell, eps, eta).map_err(|e| usage("eps", format!("{}: {e}", e.kind())))?;
            report::write_rows(w, format, &[row], report::metadata("cost qpe", json!({})))?;
        }
        Command::Cost(CostCmd::Pipeline { primes, regime, .. }) => {
            let primes = prime_list(&primes, None)?;
            let regimes: &[Regime] = match regime {
                RegimeArg::Heuristic => &[Regime::Heuristic],
                RegimeArg::Grh => &[Regime::Grh],
                RegimeArg::Both => &[Regime::Heuristic, Regime::Grh],
            };
            let items: Vec<(u64, Regime)> = primes.iter().flat_map(|&p| regimes.iter().map(move |&r| (p, r))).collect();
            let rows = report::scan(&items, jobs, |&(p, r)| report::pipeline_row(p, r))?;
            report::write_rows(w, format, &rows, report::metadata("cost pipeline", json!({})))?;
        }
        Command::Action(ActionCmd::Demo { factors, seed, shots, constant_kappa, .. }) => {
            let spec = AbelianGroupSpec::parse(&factors).map_err(|e| usage("factors", e))?;
            let action = RegularActionTable::random(spec.clone(), seed);
            let kappa = if constant_kappa {
                vec![num_one(); spec.order()]
            } else {
                make_kappa(&spec).table()
            };
            let x = action.basepoint();
            let dist = oriented_sampling_exact(&action, x, &kappa)?;
            let flat = kappa_hat_flatness(&spec, &kappa)?;
            let counts = match shots {
                Some(n) => Some(oriented_sampling_shots(&action, x, &kappa, n, seed)?),
                None => None,
            };
            let doc = report::metadata(
                "action demo",
                json!({
                    "factors": spec.factors(),
                    "order": spec.order(),
                    "seed": seed,
                    "kappa": if constant_kappa { "constant" } else { "quadratic_refinement" },
                    "basepoint": x,
                    "via_statevector": dist.statevector,
                    "distribution": dist.probabilities,
                    "tv_uniform": dist.tv_uniform,
                    "refinement_error": refinement_error(&spec, &kappa, seed)?,
                    "flatness_spread": flat.spread,
                    "counts": counts,
                }),
            );
            report::write_json(w, &doc)?;
        }
    }
    sink.finish()?;
    Ok(())
}

fn num_one() -> ssgraph_core::action::Complex64 {
    ssgraph_core::action::Complex64::new(1.0, 0.0)
}

fn tolerances() -> Value {
    json!({
        "commutator": ssgraph_core::spectra::COMMUTATOR_TOL,
        "degeneracy_gap": ssgraph_core::spectra::DEGENERACY_GAP,
        "residual_per_degree": ssgraph_core::spectra::RESIDUAL_TOL,
        "orthonormality": ssgraph_core::spectra::ORTHO_TOL,
    })
}

/// Parse `args` (including the program name), run, and return the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.kind());
            1
        }
    }
}
