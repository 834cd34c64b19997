//! `framescope` binary: instance generation, flow runs, distance queries,
//! potential reports, and the verification suite. Every output is a pure
//! function of (argv, seed, input files), so reruns are byte-identical.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use framescope::flow::{self, FlowConfig, PotentialKind, Scheme};
use framescope::generate::{generate, paulsen_conditions};
use framescope::io;
use framescope::potentials;
use framescope::transport;
use framescope::verify;
use framescope::{DiscreteMeasure, GeneratorKind, GeneratorSpec, OtMethod};

#[derive(Parser)]
#[command(name = "framescope", version, about = "Probabilistic frame potentials, flows, and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a measure and write it as JSON
    Gen(GenArgs),
    /// Run the explicit potential flow
    Flow(RunArgs),
    /// Run the JKO minimizing-movement flow
    Jko(JkoArgs),
    /// Wasserstein distance (and optionally the plan) between two measures
    Wasserstein(WassersteinArgs),
    /// Report the potentials and frame diagnostics of a measure
    Potentials(PotentialsArgs),
    /// Run the seeded verification suite
    Verify(VerifyArgs),
}

/// Exit 1: a check or computation failed. Exit 2: the invocation was wrong.
enum Failure {
    Usage(String),
    Check(String),
    Run(framescope::Error),
}

impl From<framescope::Error> for Failure {
    fn from(e: framescope::Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult = Result<(), Failure>;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    RandomUnitNorm,
    PerturbedOnb,
    Paulsen,
    FromFile,
}

#[derive(Args)]
struct GenArgs {
    /// Generator family
    #[arg(long, value_enum, default_value = "random-unit-norm")]
    kind: KindArg,
    /// Ambient dimension
    #[arg(long = "d", default_value_t = 2)]
    dim: usize,
    /// Number of atoms
    #[arg(long = "n", default_value_t = 4)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbation magnitude (perturbed-onb)
    #[arg(long, default_value_t = 0.1)]
    mag: f64,
    /// Target eps (paulsen)
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Source measure (from-file)
    #[arg(long)]
    from: Option<PathBuf>,
    /// Output measure JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Input measure JSON (alternative to --gen)
    input: Option<PathBuf>,
    /// Generate the start measure instead of reading it
    #[arg(long, value_enum)]
    gen: Option<KindArg>,
    #[arg(long = "d", default_value_t = 2)]
    dim: usize,
    #[arg(long = "n", default_value_t = 4)]
    count: usize,
    /// Perturbation magnitude for --gen perturbed-onb
    #[arg(long, default_value_t = 0.1)]
    mag: f64,
    /// Target eps for --gen paulsen
    #[arg(long = "gen-eps", default_value_t = 0.1)]
    gen_eps: f64,
    /// Source measure for --gen from-file
    #[arg(long)]
    from: Option<PathBuf>,
    /// Flow configuration JSON (missing fields take defaults)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Speed exponent of the flow field
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    /// Theory regime: eps = 0.01, where the descent guarantee needs eps > 0
    /// (plain W2 descent is eps = 0)
    #[arg(long, conflicts_with = "epsilon")]
    theory: bool,
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    /// Stop when TP falls below this fraction of its initial value
    #[arg(long = "stop-tp")]
    stop_tp: Option<f64>,
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    /// Descend the p-frame potential (even p) instead of TP
    #[arg(long = "p")]
    p: Option<u32>,
    /// Keep the p-frame flow on the unit sphere
    #[arg(long, requires = "p")]
    sphere: bool,
    /// Trajectory CSV path; with --sweep, a directory of run_<seed>.csv files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump recorded states as numbered measure JSON into this directory
    #[arg(long = "dump-states")]
    dump_states: Option<PathBuf>,
    /// Run this many consecutive seeds concurrently (requires --gen)
    #[arg(long)]
    sweep: Option<u64>,
}

#[derive(Args)]
struct JkoArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Inner solver iterations per JKO step
    #[arg(long = "inner-iters")]
    inner_iters: Option<usize>,
    /// Inner solver step size (relative to tau)
    #[arg(long = "inner-lr")]
    inner_lr: Option<f64>,
    /// Inner transport solver
    #[arg(long = "ot", value_enum)]
    ot: Option<OtArg>,
    /// Entropic regularization for --ot entropic
    #[arg(long, default_value_t = 1e-2)]
    reg: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OtArg {
    Exact,
    Entropic,
}

/// JKO inner-solver overrides: (iterations, step size, transport method, reg).
type InnerOverrides = (Option<usize>, Option<f64>, Option<OtArg>, f64);

#[derive(Args)]
struct WassersteinArgs {
    a: PathBuf,
    b: PathBuf,
    /// Cost exponent
    #[arg(short, long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "exact")]
    method: OtArg,
    /// Entropic regularization
    #[arg(long, default_value_t = 1e-2)]
    reg: f64,
    #[arg(long = "max-iter", default_value_t = 200_000)]
    max_iter: usize,
    /// Entropic marginal tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the plan's nonzero entries as i,j,mass CSV
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Write the full plan as JSON
    #[arg(long = "plan-json")]
    plan_json: Option<PathBuf>,
}

#[derive(Args)]
struct PotentialsArgs {
    input: PathBuf,
    /// Also report the p-frame potential for this even p
    #[arg(long)]
    p: Option<u32>,
    /// Emit one JSON object instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// "all" or one check name
    #[arg(long, default_value = "all")]
    suite: String,
    /// Seeds 0..N per check
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Write witnesses of failing checks into this directory
    #[arg(long = "witness-dir")]
    witness_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Flow(args) => cmd_run(args, Scheme::Explicit, None),
        Command::Jko(args) => {
            let inner = (args.inner_iters, args.inner_lr, args.ot, args.reg);
            cmd_run(args.run, Scheme::Jko, Some(inner))
        }
        Command::Wasserstein(args) => cmd_wasserstein(args),
        Command::Potentials(args) => cmd_potentials(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn generator_kind(
    kind: KindArg,
    mag: f64,
    eps: f64,
    from: &Option<PathBuf>,
) -> Result<GeneratorKind, Failure> {
    Ok(match kind {
        KindArg::RandomUnitNorm => GeneratorKind::RandomUnitNorm,
        KindArg::PerturbedOnb => GeneratorKind::PerturbedOnb { magnitude: mag },
        KindArg::Paulsen => GeneratorKind::PaulsenInstance { eps },
        KindArg::FromFile => GeneratorKind::FromFile {
            path: from
                .clone()
                .ok_or_else(|| Failure::Usage("from-file needs --from <path>".into()))?,
        },
    })
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let kind = generator_kind(args.kind, args.mag, args.eps, &args.from)?;
    let spec = GeneratorSpec {
        kind,
        dim: args.dim,
        count: args.count,
        seed: args.seed,
    };
    let mu = generate(&spec)?;
    io::save_measure(&args.out, &mu)?;
    let diag = mu.diagnostics_default();
    println!(
        "wrote {}: dim {}, atoms {}, M2^2 {}, tight {}",
        args.out.display(),
        mu.dim(),
        mu.len(),
        diag.second_moment,
        diag.is_tight
    );
    if args.kind == KindArg::Paulsen {
        println!("paulsen conditions hold: {}", paulsen_conditions(&mu, args.eps));
    }
    Ok(())
}

fn resolve_config(
    args: &RunArgs,
    scheme: Scheme,
    inner: Option<InnerOverrides>,
) -> Result<FlowConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => io::load_flow_config(path)?,
        None => FlowConfig::default(),
    };
    config.scheme = scheme;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(tau) = args.tau {
        config.tau = tau;
    }
    if args.theory {
        config.epsilon = 0.01;
    } else if let Some(eps) = args.epsilon {
        config.epsilon = eps;
    }
    if let Some(steps) = args.max_steps {
        config.max_steps = steps;
    }
    if let Some(stop) = args.stop_tp {
        config.stop_tp = stop;
    }
    if let Some(every) = args.record_every {
        config.record_every = every;
    }
    if let Some(p) = args.p {
        config.potential = PotentialKind::PFrame {
            p,
            sphere_constrained: args.sphere,
        };
    }
    if let Some((iters, lr, ot, reg)) = inner {
        if let Some(iters) = iters {
            config.inner.inner_iters = iters;
        }
        if let Some(lr) = lr {
            config.inner.inner_lr = lr;
        }
        if let Some(ot) = ot {
            config.inner.ot_method = match ot {
                OtArg::Exact => OtMethod::Exact,
                OtArg::Entropic => OtMethod::Entropic { reg },
            };
        }
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn start_measure(args: &RunArgs, seed: u64) -> Result<DiscreteMeasure, Failure> {
    match (&args.input, args.gen) {
        (Some(path), None) => Ok(io::load_measure(path)?),
        (None, Some(kind)) => {
            let kind = generator_kind(kind, args.mag, args.gen_eps, &args.from)?;
            Ok(generate(&GeneratorSpec {
                kind,
                dim: args.dim,
                count: args.count,
                seed,
            })?)
        }
        (Some(_), Some(_)) => Err(Failure::Usage(
            "give either an input file or --gen, not both".into(),
        )),
        (None, None) => Err(Failure::Usage(
            "an input measure file or --gen is required".into(),
        )),
    }
}

fn run_one(
    mu0: &DiscreteMeasure,
    config: &FlowConfig,
    csv: Option<&Path>,
    dump: Option<&Path>,
) -> Result<String, Failure> {
    let traj = match config.scheme {
        Scheme::Explicit => flow::run_explicit(mu0, config)?,
        Scheme::Jko => flow::run_jko(mu0, config)?,
    };
    if let Some(path) = csv {
        io::write_trajectory_csv(path, &traj)?;
    }
    if let Some(dir) = dump {
        io::dump_states(dir, &traj)?;
    }
    let steps = traj.steps.last().copied().unwrap_or(0);
    Ok(format!(
        "seed {}: {:?} after {} steps, tp {:e}",
        config.seed,
        traj.termination,
        steps,
        traj.final_tp()
    ))
}

fn thread_cap(runs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(2, |n| n.get());
    let capped = match std::env::var("FRAMESCOPE_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(available),
        Err(_) => available,
    };
    capped.clamp(1, runs.max(1))
}

fn cmd_run(
    args: RunArgs,
    scheme: Scheme,
    inner: Option<InnerOverrides>,
) -> CliResult {
    let base = resolve_config(&args, scheme, inner)?;
    match args.sweep {
        None => {
            let mu0 = start_measure(&args, base.seed)?;
            let line = run_one(&mu0, &base, args.out.as_deref(), args.dump_states.as_deref())?;
            println!("{line}");
            Ok(())
        }
        Some(runs) => {
            if runs == 0 {
                return Err(Failure::Usage("--sweep needs at least one run".into()));
            }
            if args.gen.is_none() {
                return Err(Failure::Usage("--sweep requires --gen".into()));
            }
            let out_dir = args.out.clone();
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(framescope::Error::from)?;
            }
            let seeds: Vec<u64> = (base.seed..base.seed + runs).collect();
            let lines: Mutex<Vec<Option<Result<String, String>>>> =
                Mutex::new(vec![None; seeds.len()]);
            let workers = thread_cap(seeds.len());
            std::thread::scope(|scope| {
                for w in 0..workers {
                    let args = &args;
                    let base = &base;
                    let seeds = &seeds;
                    let lines = &lines;
                    let out_dir = &out_dir;
                    scope.spawn(move || {
                        for idx in (w..seeds.len()).step_by(workers) {
                            let seed = seeds[idx];
                            let mut config = base.clone();
                            config.seed = seed;
                            let csv = out_dir
                                .as_ref()
                                .map(|d| d.join(format!("run_{seed:04}.csv")));
                            let dump = args
                                .dump_states
                                .as_ref()
                                .map(|d| d.join(format!("run_{seed:04}")));
                            let outcome = start_measure(args, seed)
                                .and_then(|mu0| {
                                    run_one(&mu0, &config, csv.as_deref(), dump.as_deref())
                                })
                                .map_err(|f| failure_text(&f));
                            lines.lock().unwrap()[idx] = Some(outcome);
                        }
                    });
                }
            });
            let mut failed = 0usize;
            for slot in lines.into_inner().unwrap() {
                match slot.expect("every sweep slot is filled") {
                    Ok(line) => println!("{line}"),
                    Err(msg) => {
                        println!("{msg}");
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                return Err(Failure::Check(format!("{failed} sweep run(s) failed")));
            }
            Ok(())
        }
    }
}

fn failure_text(f: &Failure) -> String {
    match f {
        Failure::Usage(m) => format!("usage error: {m}"),
        Failure::Check(m) => format!("check failed: {m}"),
        Failure::Run(e) => format!("error: {e}"),
    }
}

fn cmd_wasserstein(args: WassersteinArgs) -> CliResult {
    let mu = io::load_measure(&args.a)?;
    let nu = io::load_measure(&args.b)?;
    let (distance, plan) = match args.method {
        OtArg::Exact => transport::wasserstein_exact(&mu, &nu, args.p)?,
        OtArg::Entropic => {
            transport::wasserstein_entropic(&mu, &nu, args.p, args.reg, args.max_iter, args.tol)?
        }
    };
    println!("{distance}");
    if let Some(path) = &args.plan {
        io::write_plan_triplets_csv(path, &plan)?;
    }
    if let Some(path) = &args.plan_json {
        io::save_plan(path, &plan)?;
    }
    Ok(())
}

fn cmd_potentials(args: PotentialsArgs) -> CliResult {
    let mu = io::load_measure(&args.input)?;
    let diag = mu.diagnostics_default();
    let report = potentials::tightness_potential(&mu);
    let pfp = potentials::pfp(&mu);
    let pfp_bound = diag.second_moment * diag.second_moment / mu.dim() as f64;
    let t_norm = report.operator_norm.unwrap_or(f64::NAN);
    let pframe = match args.p {
        Some(p) => Some(potentials::pframe_potential(&mu, p).map_err(|e| match e {
            framescope::Error::OddExponent { .. } | framescope::Error::InvalidExponent { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Run(other),
        })?),
        None => None,
    };
    if args.json {
        let mut value = serde_json::json!({
            "dim": mu.dim(),
            "atoms": mu.len(),
            "diagnostics": diag,
            "pfp": pfp,
            "pfp_lower_bound": pfp_bound,
            "tp": report.value,
            "tp_spectral": report.spectral_value,
            "tp_operator_norm": t_norm,
        });
        if let Some(p) = &pframe {
            value["pframe"] = serde_json::to_value(p).map_err(framescope::Error::from)?;
        }
        println!("{}", serde_json::to_string_pretty(&value).map_err(framescope::Error::from)?);
    } else {
        println!("dim {} atoms {}", mu.dim(), mu.len());
        println!("M2^2 {}", diag.second_moment);
        println!(
            "frame bounds A {} B {} (frame {}, tight {})",
            diag.lower, diag.upper, diag.is_frame, diag.is_tight
        );
        println!("PFP {} lower bound {} TP {}", pfp, pfp_bound, report.value);
        println!("|T| {}", t_norm);
        if let Some(p) = &pframe {
            println!(
                "PFP_{} {} lower bound {} gap {}",
                args.p.unwrap(),
                p.value,
                p.lower_bound,
                p.gap
            );
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CliResult {
    let results = verify::run_suite(&args.suite, args.seeds).map_err(|e| match e {
        framescope::Error::Parse(msg) => Failure::Usage(msg),
        other => Failure::Run(other),
    })?;
    println!(
        "{:<28} {:<6} {:>14} {:>14} {:>14}",
        "check", "holds", "lhs", "rhs", "slack"
    );
    let mut failures = 0usize;
    for (idx, res) in results.iter().enumerate() {
        println!(
            "{:<28} {:<6} {:>14.6e} {:>14.6e} {:>14.6e}",
            res.name,
            if res.holds { "ok" } else { "FAIL" },
            res.lhs,
            res.rhs,
            res.slack
        );
        if !res.holds {
            failures += 1;
            if let Some(dir) = &args.witness_dir {
                std::fs::create_dir_all(dir).map_err(framescope::Error::from)?;
                let path = dir.join(format!("{}_{idx:04}.json", res.name));
                let text = serde_json::to_string_pretty(&res.witness)
                    .map_err(framescope::Error::from)?;
                std::fs::write(path, text + "\n").map_err(framescope::Error::from)?;
            }
        }
    }
    println!("{} checks, {} failed", results.len(), failures);
    if failures > 0 {
        return Err(Failure::Check(format!("{failures} verification check(s) failed")));
    }
    Ok(())
}
