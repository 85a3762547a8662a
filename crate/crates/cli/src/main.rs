use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anarchia::experiments::{instance_files, run_sweep, run_verify, sweep_csv, SweepConfig, VerifyConfig};
use anarchia::io::read_game;
use anarchia::{
    analyze, build_lower_bound, parse_rational, price_of_anarchy, search_params, EquilibriumError, Family, LBParams,
    LatencyFunction, Rational, SearchDomain, DEFAULT_CAP,
};
use clap::{Args, Parser, Subcommand};

const EXIT_PROPERTY: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_NO_EQUILIBRIUM: u8 = 4;

#[derive(Parser)]
#[command(name = "anarchia", version, about = "Price-of-anarchy bounds and experiments for weighted congestion games")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute g*, ĝ and the price-of-anarchy bound of one latency function.
    Analyze {
        #[command(flatten)]
        latency: LatencyArgs,
        /// Upper end of the t search range.
        #[arg(long)]
        tmax: Option<f64>,
        /// Grid points per search axis.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every pure Nash state and the optimum of a game file.
    Brute {
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP as u128)]
        cap: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a cyclic lower-bound instance; searches for the best one unless
    /// all window sizes are given.
    Generate {
        #[command(flatten)]
        latency: LatencyArgs,
        /// Number of players.
        #[arg(long)]
        n: u32,
        #[arg(long)]
        alpha: Option<u32>,
        #[arg(long)]
        beta: Option<u32>,
        #[arg(long)]
        gamma: Option<u32>,
        #[arg(long)]
        delta: Option<u32>,
        #[arg(long)]
        zeta1: Option<u32>,
        #[arg(long)]
        zeta2: Option<u32>,
        /// Game file; the sidecar goes next to it as `<stem>.sidecar.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Best lower-bound ratio per player count, as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property suite over seeded random games and a corpus.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
        /// Directory of game files checked alongside the random ones.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Directory for the reproduction file written on failure.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated parameter list.
    #[arg(long, default_value = "")]
    params: String,
    /// Maximum player weight (decimal or num/den).
    #[arg(long, default_value = "1")]
    w: String,
}

impl LatencyArgs {
    fn parse(&self) -> Result<(LatencyFunction, Rational), String> {
        let family: Family = self.family.parse().map_err(|e| format!("{e}"))?;
        let params = self
            .params
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| format!("parameter `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let l = LatencyFunction::new(family, params).map_err(|e| e.to_string())?;
        let w = parse_rational(&self.w).map_err(|e| format!("--w: {e}"))?;
        if w <= Rational::from_integer(0) {
            return Err("--w must be positive".into());
        }
        Ok((l, w))
    }
}

struct Failure(u8, String);

impl Failure {
    fn parse(msg: impl ToString) -> Self {
        Failure(EXIT_PARSE, msg.to_string())
    }

    fn other(msg: impl ToString) -> Self {
        Failure(EXIT_PROPERTY, msg.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::other(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Analyze { latency, tmax, grid, out } => {
            let (l, w) = latency.parse().map_err(Failure::parse)?;
            let wf = anarchia::rational::to_f64(&w);
            let mut dom = SearchDomain::for_weight(wf);
            if let Some(t) = tmax {
                dom = dom.with_t_max(t);
            }
            if let Some(g) = grid {
                dom.grid_points = g;
            }
            dom.validate(wf).map_err(Failure::parse)?;
            let report = analyze(&l, wf, &dom).map_err(Failure::other)?;
            emit(out.as_deref(), &pretty(&report.to_json()))
        }
        Command::Brute { game, cap, out } => {
            let g = read_game(&game).map_err(Failure::parse)?;
            let report = price_of_anarchy(&g, cap).map_err(|e| match e {
                EquilibriumError::CapExceeded { .. } => Failure(EXIT_CAP, e.to_string()),
                EquilibriumError::NoEquilibrium => Failure(EXIT_NO_EQUILIBRIUM, e.to_string()),
                _ => Failure::other(e),
            })?;
            emit(out.as_deref(), &pretty(&serde_json::to_value(&report).expect("report serializes")))
        }
        Command::Generate { latency, n, alpha, beta, gamma, delta, zeta1, zeta2, out } => {
            let (l, w) = latency.parse().map_err(Failure::parse)?;
            let params = match (alpha, beta, gamma, delta, zeta1, zeta2) {
                (Some(alpha), Some(beta), Some(gamma), Some(delta), Some(zeta1), Some(zeta2)) => {
                    if zeta1 == 0 || zeta2 == 0 || n % zeta1 != 0 || n % zeta2 != 0 {
                        return Err(Failure::parse("zeta1 and zeta2 must divide n"));
                    }
                    LBParams {
                        alpha,
                        beta,
                        gamma,
                        delta,
                        zeta1,
                        zeta2,
                        kappa1: n / zeta1,
                        kappa2: n / zeta2,
                        w,
                        latency: l,
                    }
                }
                (None, None, None, None, None, None) => search_params(&l, w, n).map_err(Failure::other)?.params,
                _ => return Err(Failure::parse("give all of --alpha --beta --gamma --delta --zeta1 --zeta2 or none")),
            };
            let inst = build_lower_bound(params).map_err(Failure::parse)?;
            let (game, sidecar) = instance_files(&inst);
            emit(Some(&out), &pretty(&game))?;
            emit(Some(&sidecar_path(&out)), &pretty(&sidecar))
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Failure::parse(format!("cannot read {}: {e}", config.display())))?;
            let cfg = SweepConfig::from_json(&text).map_err(Failure::parse)?;
            let rows = run_sweep(&cfg).map_err(Failure::other)?;
            emit(out.as_deref().or(cfg.out.as_deref()), &sweep_csv(&rows))
        }
        Command::Verify { seed, count, corpus, out } => {
            let cfg = VerifyConfig { seed, count, corpus, repro_dir: Some(out) };
            let report = run_verify(&cfg).map_err(|e| match e {
                anarchia::experiments::VerifyError::Corpus { .. } | anarchia::experiments::VerifyError::CorpusDir { .. } => {
                    Failure::parse(e)
                }
                _ => Failure::other(e),
            })?;
            print!("{}", report.summary());
            if let Some(p) = &report.repro_file {
                eprintln!("reproduction written to {}", p.display());
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::other("property failures"))
            }
        }
    }
}

fn sidecar_path(game: &Path) -> PathBuf {
    let stem = game.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into());
    game.with_file_name(format!("{stem}.sidecar.json"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("ANARCHIA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
