mod parse;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gamedyn::dynamics::{eta_threshold, run, stability_verdict, sweep, DynamicsConfig, EtaThreshold, StabilityVerdict, SweepConfig};
use gamedyn::export::{fmt_f64, sweep_csv, trace_csv, trajectory_csv};
use gamedyn::regularizer::linear_steepness_probe;
use gamedyn::response::{find_smoothed_equilibrium, geometric_schedule, homotopy_trace};
use gamedyn::stability::{
    default_resolution, game_jacobian, quasi_strict_check, strong_nash_oracle, uniform_stability_check,
    weak_pareto_oracle, ParetoVerdict, QuasiStrict, StrongNashReport, UniformStabilityReport,
};
use gamedyn::{Error, JointStrategy, NormalFormGame, SmoothedEquilibrium, SmoothedResponseConfig};
use serde::Serialize;

use parse::{Eta, Floats};

const ENTROPY: &str = r#"{"kind":"entropy"}"#;

#[derive(Parser)]
#[command(name = "gamedyn", version, about = "Smoothed best-response dynamics and uniform stability for normal-form games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Defaults to json for `analyze` and csv otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Solver {
    /// Regularizer as inline JSON or a path; an array gives one per player.
    #[arg(long, default_value = ENTROPY)]
    regularizer: String,
    /// Fixed-point residual tolerance (max norm).
    #[arg(long, default_value_t = 1e-12, value_parser = parse::positive)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform-stability report at a Nash equilibrium.
    Analyze {
        game: PathBuf,
        /// Profile to analyze: uniform, pure:i,j,…, mixed:p,q;r,s or random.
        #[arg(long, conflicts_with = "solve", required_unless_present = "solve")]
        at: Option<String>,
        /// Locate the point by a homotopy from the uniform profile.
        #[arg(long)]
        solve: bool,
        /// Last β of the homotopy used by --solve.
        #[arg(long, default_value_t = 1e-3, value_parser = parse::positive)]
        beta_end: f64,
        /// Sampled conditioners tried before declaring the verdict open.
        #[arg(long, default_value_t = 64)]
        conditioners: usize,
        /// Grid resolution of the Pareto and strong-Nash oracles.
        #[arg(long)]
        resolution: Option<usize>,
        /// Skip the grid oracles.
        #[arg(long)]
        no_oracles: bool,
    },
    /// Smoothed equilibria along a decreasing β schedule.
    Equilibrium {
        game: PathBuf,
        /// Explicit decreasing schedule.
        #[arg(long, conflicts_with = "schedule")]
        betas: Option<Floats>,
        /// Geometric schedule `start,end,factor`.
        #[arg(long, default_value = "1,0.001,0.5")]
        schedule: Floats,
        #[arg(long, default_value = "uniform")]
        x0: String,
        #[command(flatten)]
        solver: Solver,
    },
    /// Run the averaging dynamics.
    Simulate {
        game: PathBuf,
        #[arg(long, value_parser = parse::positive)]
        beta: f64,
        /// Step size in (0, 1) or `auto` for the sampled threshold.
        #[arg(long)]
        eta: Eta,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        #[arg(long, default_value = "uniform")]
        x0: String,
        #[command(flatten)]
        solver: Solver,
    },
    /// Verdicts and final distances over a β × η grid.
    Sweep {
        game: PathBuf,
        #[arg(long)]
        betas: Floats,
        #[arg(long)]
        etas: Floats,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value = "uniform")]
        x0: String,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ENTROPY)]
        regularizer: String,
        #[arg(long, default_value_t = 1e-10, value_parser = parse::positive)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iter: usize,
    },
    /// Off-support mass of the response to an ε-gap payoff, scaled by 1/β.
    ProbeSteepness {
        #[arg(long, default_value = ENTROPY)]
        regularizer: String,
        /// Simplex dimension; taken from the regularizer when it fixes one.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value = "0.2,0.1,0.05")]
        betas: Floats,
    },
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Convergence { .. } | Error::Cycling { .. } => 3,
            Error::Resource(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Sweep { jobs, .. } => (*jobs).max(1),
        _ => 1,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return fail(&Failure { code: 4, message: e.to_string() }),
    };
    let result = pool.install(|| execute(&cli));
    match result.and_then(|text| emit(cli.common.output.as_deref(), &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("error: {}", f.message);
    ExitCode::from(f.code)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    res.map_err(|message| Failure { code: 4, message })
}

fn execute(cli: &Cli) -> Outcome {
    let seed = cli.common.seed;
    let format = cli.common.format;
    match &cli.command {
        Command::Analyze {
            game,
            at,
            solve,
            beta_end,
            conditioners,
            resolution,
            no_oracles,
        } => {
            if format == Some(Format::Csv) {
                return Err(usage("analyze reports are JSON only"));
            }
            let game = NormalFormGame::load(game)?;
            let opts = AnalyzeOptions {
                beta_end: *beta_end,
                conditioners: *conditioners,
                resolution: *resolution,
                oracles: !no_oracles,
                seed,
            };
            let report = analyze(&game, at.as_deref().filter(|_| !solve), &opts)?;
            Ok(to_json(&report))
        }
        Command::Equilibrium {
            game,
            betas,
            schedule,
            x0,
            solver,
        } => {
            let game = NormalFormGame::load(game)?;
            let sched = match betas {
                Some(b) => b.0.clone(),
                None => match schedule.0.as_slice() {
                    &[start, end, factor] if start > 0.0 && end > 0.0 && end <= start && factor > 0.0 && factor < 1.0 => {
                        geometric_schedule(start, end, factor)
                    }
                    _ => return Err(usage("--schedule expects start,end,factor with 0 < end ≤ start and 0 < factor < 1")),
                },
            };
            let regs = parse::regularizers(&solver.regularizer, game.num_players())?;
            let x0 = parse::strategy(x0, game.shape(), seed)?;
            let cfg = SmoothedResponseConfig::new(sched[0], regs);
            let trace = homotopy_trace(&game, &cfg, &sched, &x0, solver.tol, solver.max_iter)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => trace_csv(&trace),
                Format::Json => to_json(&trace),
            })
        }
        Command::Simulate {
            game,
            beta,
            eta,
            horizon,
            record_every,
            x0,
            solver,
        } => {
            let game = NormalFormGame::load(game)?;
            let regs = parse::regularizers(&solver.regularizer, game.num_players())?;
            let x0 = parse::strategy(x0, game.shape(), seed)?;
            let rcfg = SmoothedResponseConfig::new(*beta, regs);
            rcfg.validate(&game)?;
            let out = simulate(&game, &rcfg, *eta, *horizon, *record_every, &x0, solver)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => trajectory_csv(&out.trajectory, out.verdict.as_ref()),
                Format::Json => to_json(&out),
            })
        }
        Command::Sweep {
            game,
            betas,
            etas,
            horizon,
            x0,
            regularizer,
            tol,
            max_iter,
            ..
        } => {
            let game = NormalFormGame::load(game)?;
            let regs = parse::regularizers(regularizer, game.num_players())?;
            let x0 = parse::strategy(x0, game.shape(), seed)?;
            let scfg = SweepConfig {
                horizon: *horizon,
                outer_tol: *tol,
                max_iter: *max_iter,
            };
            let cells = sweep(&game, &betas.0, &etas.0, &regs, &x0, &scfg)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&cells, game.shape()),
                Format::Json => to_json(&cells),
            })
        }
        Command::ProbeSteepness {
            regularizer,
            dim,
            index,
            eps,
            betas,
        } => {
            let r = parse::regularizers(regularizer, 1)?.remove(0);
            let k = match (dim, r.dimension()) {
                (Some(d), _) => *d,
                (None, Some(d)) => d,
                (None, None) => return Err(usage("--dim is required for this regularizer")),
            };
            let ratios = linear_steepness_probe(&r, k, *index, *eps, &betas.0)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut s = String::from("beta,ratio,envelope\n");
                    for (b, q) in betas.0.iter().zip(&ratios) {
                        s.push_str(&format!("{},{},{}\n", fmt_f64(*b), fmt_f64(*q), fmt_f64((-eps / b).exp() / b)));
                    }
                    s
                }
                Format::Json => to_json(&serde_json::json!({ "betas": betas.0, "ratios": ratios, "eps": eps, "dim": k, "index": index })),
            })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

struct AnalyzeOptions {
    beta_end: f64,
    conditioners: usize,
    resolution: Option<usize>,
    oracles: bool,
    seed: u64,
}

#[derive(Serialize)]
struct GraphSummary {
    players: usize,
    edges: usize,
    connected: bool,
    bidirectional: bool,
}

#[derive(Serialize)]
struct AnalyzeReport {
    game: String,
    point: JointStrategy,
    /// Last equilibrium of the homotopy, when the point was solved for.
    solved: Option<SmoothedEquilibrium>,
    nash_gap: f64,
    quasi_strict: QuasiStrict,
    graph: GraphSummary,
    stability: UniformStabilityReport,
    pareto: Option<ParetoVerdict>,
    strong_nash: Option<StrongNashReport>,
}

fn analyze(game: &NormalFormGame, at: Option<&str>, opts: &AnalyzeOptions) -> Result<AnalyzeReport, Failure> {
    let shape = game.shape();
    let (point, solved) = match at {
        Some(arg) => (parse::strategy(arg, shape, opts.seed)?, None),
        None => {
            let sched = geometric_schedule(1.0, opts.beta_end, 0.5);
            let cfg = SmoothedResponseConfig::entropy(1.0, game.num_players());
            let trace = homotopy_trace(game, &cfg, &sched, &JointStrategy::uniform(shape), 1e-12, 200_000)?;
            let last = trace.into_iter().last().expect("non-empty schedule");
            (last.point.clone(), Some(last))
        }
    };
    let j = game_jacobian(game, &point)?.tangent();
    let stability = uniform_stability_check(&j, opts.conditioners, opts.seed);
    let graph = GraphSummary {
        players: game.num_players(),
        edges: stability.graph.edges.len(),
        connected: stability.graph.connected,
        bidirectional: stability.graph.bidirectional,
    };
    let (pareto, strong_nash) = if opts.oracles && game.num_players() <= 4 {
        let res = opts.resolution.unwrap_or_else(|| default_resolution(shape));
        (
            Some(weak_pareto_oracle(game, &point, res)?),
            Some(strong_nash_oracle(game, &point, res)?),
        )
    } else {
        (None, None)
    };
    Ok(AnalyzeReport {
        game: game.name().to_string(),
        nash_gap: game.epsilon_nash_gap(&point)?,
        quasi_strict: quasi_strict_check(game, &point)?,
        point,
        solved,
        graph,
        stability,
        pareto,
        strong_nash,
    })
}

#[derive(Serialize)]
struct Simulation {
    equilibrium: Option<SmoothedEquilibrium>,
    threshold: Option<EtaThreshold>,
    verdict: Option<StabilityVerdict>,
    trajectory: gamedyn::dynamics::Trajectory,
}

/// The equilibrium is solved from the uniform profile; without it there is
/// no distance column and `auto` is unavailable.
fn simulate(
    game: &NormalFormGame,
    rcfg: &SmoothedResponseConfig,
    eta: Eta,
    horizon: usize,
    record_every: usize,
    x0: &JointStrategy,
    solver: &Solver,
) -> Result<Simulation, Failure> {
    let eq = find_smoothed_equilibrium(game, rcfg, &JointStrategy::uniform(game.shape()), solver.tol, solver.max_iter);
    let (eta, threshold) = match (eta, &eq) {
        (Eta::Value(v), _) => (v, None),
        (Eta::Auto, Ok(eq)) => {
            let th = eta_threshold(game, rcfg, eq)?;
            (th.eta, Some(th))
        }
        (Eta::Auto, Err(e)) => return Err(e.clone().into()),
    };
    let cfg = DynamicsConfig {
        record_every,
        ..DynamicsConfig::new(eta, rcfg.clone(), horizon)
    };
    let eq = eq.ok();
    let trajectory = run(game, &cfg, x0, eq.as_ref())?;
    let verdict = eq.as_ref().map(|e| stability_verdict(game, &cfg, e)).transpose()?;
    Ok(Simulation {
        equilibrium: eq,
        threshold,
        verdict,
        trajectory,
    })
}
