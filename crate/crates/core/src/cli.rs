//! The `cellhaul` command line: instance generation, solving, exhaustive
//! verification and plot-data export.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input or failed oracle check,
//! 3 internal failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::driver::{solve_scenario, solve_single_tabu_scenario, SolverConfig};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, save_instance, AreaSpec, Instance, ParamBundle};
use crate::model::{Scenario, Station};
use crate::oracle::{enumerate_frontier, DEFAULT_GUARD};
use crate::report::{emit, plot_data, write_oracle_report, write_report, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Environment variable naming the default solver config file.
pub const CONFIG_ENV: &str = "CELLHAUL_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "cellhaul", version, about = "Small-cell and wireless-backhaul deployment planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    SingleTabu,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen {
        /// Planning area as WIDTHxHEIGHT in meters.
        #[arg(long, value_parser = parse_area)]
        area: (f64, f64),
        /// Subarea side in meters.
        #[arg(long, default_value_t = 10.0)]
        side: f64,
        /// SCBS candidate count.
        #[arg(long)]
        sc: usize,
        /// BAN candidate count.
        #[arg(long)]
        ban: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Most SCBSs one BAN may backhaul.
        #[arg(long)]
        nb_max: Option<u32>,
        /// User density in users per square meter.
        #[arg(long)]
        density: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute a cost/coverage frontier and write a report directory.
    Solve {
        instance: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Solver config (JSON); defaults to $CELLHAUL_CONFIG when set.
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run a comparison algorithm instead of the two-level method.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Also enumerate the exact frontier; exit 2 unless they agree.
        #[arg(long)]
        oracle_check: bool,
        /// Site-subset limit for --oracle-check.
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        oracle_guard: u128,
        /// Worker cap. The solver is single-threaded, so values above 1 change nothing.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        threads: u32,
    },
    /// Enumerate the exact frontier of a small instance.
    Oracle {
        instance: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: u128,
    },
    /// Merge report frontiers into one series,cost,covered_fraction CSV.
    Plotdata {
        #[arg(required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn parse_area(s: &str) -> std::result::Result<(f64, f64), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let w: f64 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: f64 = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    Ok((w, h))
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn read_instance(path: &Path) -> Result<(Vec<u8>, Instance)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Schema(format!("{} is not UTF-8", path.display())))?;
    Ok((bytes, Instance::from_json(&text)?))
}

fn load_config(path: Option<&Path>) -> Result<SolverConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            SolverConfig::from_json(&text)
        }
        None => Ok(SolverConfig::default()),
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Schema(_)
        | Error::Validation { .. }
        | Error::Domain(_)
        | Error::Config(_)
        | Error::SizeMismatch(_)
        | Error::Infeasible(_)
        | Error::GuardExceeded { .. }
        | Error::Csv(_) => EXIT_INVALID,
    }
}

fn summary(scn: &Scenario) -> String {
    let radius = |st: Station| scn.access_radius(st);
    let sc_r: Vec<f64> = (0..scn.n_sc()).map(|i| radius(Station::Sc(i))).collect();
    let ban_r: Vec<f64> = (0..scn.n_ban()).map(|k| radius(Station::Ban(k))).collect();
    let n_ki: Vec<u32> = (0..scn.n_sc()).flat_map(|i| scn.sc_links(i).iter().map(|&(_, n)| n)).collect();
    let range = |v: &[f64]| match (v.iter().copied().reduce(f64::min), v.iter().copied().reduce(f64::max)) {
        (Some(a), Some(b)) => format!("{a:.1}..{b:.1} m"),
        _ => "-".to_string(),
    };
    let mut out = format!(
        "subareas: {}\nSCBS candidates: {}\nBAN candidates: {}\nSCBS coverage radius: {}\nBAN coverage radius: {}\nbackhaul links: {}\n",
        scn.subarea_count(),
        scn.n_sc(),
        scn.n_ban(),
        range(&sc_r),
        range(&ban_r),
        n_ki.len(),
    );
    if let (Some(lo), Some(hi)) = (n_ki.iter().min(), n_ki.iter().max()) {
        let mean = n_ki.iter().map(|&n| n as f64).sum::<f64>() / n_ki.len() as f64;
        out.push_str(&format!("n_ki: min {lo}, mean {mean:.1}, max {hi}\n"));
    }
    out
}

fn run(cli: Cli, argv: &[String]) -> Result<i32> {
    match cli.command {
        Command::Gen { area, side, sc, ban, seed, nb_max, density, out } => {
            let mut params = ParamBundle::default();
            if let Some(nb) = nb_max {
                params.nb_max = nb;
            }
            if let Some(d) = density {
                params.users.density_per_m2 = d;
            }
            let inst = generate_instance(AreaSpec::new(area.0, area.1, side)?, sc, ban, seed, &params)?;
            let scn = Scenario::new(inst.clone())?;
            save_instance(&inst, &out)?;
            print!("{}", summary(&scn));
            Ok(EXIT_OK)
        }
        Command::Solve { instance, out, config, seed, baseline, oracle_check, oracle_guard, threads } => {
            let started = unix_ms();
            let clock = Instant::now();
            let (bytes, inst) = read_instance(&instance)?;
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let scn = Scenario::new(inst.clone())?;
            let report = match baseline {
                None => solve_scenario(&scn, &cfg)?,
                Some(Baseline::SingleTabu) => solve_single_tabu_scenario(&scn, &cfg)?,
            };
            let mut manifest = RunManifest::new(report.algorithm.name(), &bytes, scn.subarea_count());
            manifest.command = argv.to_vec();
            manifest.seed = Some(cfg.seed);
            manifest.instance_path = Some(instance.display().to_string());
            manifest.epsilon0 = Some(report.epsilon0);
            manifest.delta_c = Some(report.delta_c);
            manifest.delta_eps = Some(report.delta_eps);
            manifest.threads = threads as usize;
            let mut code = EXIT_OK;
            if oracle_check {
                let exact = enumerate_frontier(&inst, oracle_guard)?;
                let same = exact.frontier.objectives() == report.frontier.objectives();
                manifest.oracle_check = Some(if same { "match" } else { "mismatch" }.to_string());
                if !same {
                    eprintln!("frontier differs from the exact frontier");
                    code = EXIT_INVALID;
                }
            }
            manifest.started_unix_ms = started;
            manifest.finished_unix_ms = unix_ms();
            manifest.wall_time_s = clock.elapsed().as_secs_f64();
            write_report(&out, &report, &scn, &manifest)?;
            println!("{} frontier points written to {}", report.frontier.len(), out.display());
            Ok(code)
        }
        Command::Oracle { instance, out, guard } => {
            let started = unix_ms();
            let clock = Instant::now();
            let (bytes, inst) = read_instance(&instance)?;
            let scn = Scenario::new(inst.clone())?;
            let exact = enumerate_frontier(&inst, guard)?;
            let mut manifest = RunManifest::new("oracle", &bytes, scn.subarea_count());
            manifest.command = argv.to_vec();
            manifest.instance_path = Some(instance.display().to_string());
            manifest.started_unix_ms = started;
            manifest.finished_unix_ms = unix_ms();
            manifest.wall_time_s = clock.elapsed().as_secs_f64();
            write_oracle_report(&out, &exact, &scn, &manifest)?;
            println!("{} exact frontier points ({} subsets) written to {}", exact.frontier.len(), exact.examined, out.display());
            Ok(EXIT_OK)
        }
        Command::Plotdata { reports, out } => {
            let bytes = plot_data(&reports)?;
            emit(out.as_deref(), &bytes)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| run(cli, &argv)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => EXIT_INTERNAL,
    }
}
