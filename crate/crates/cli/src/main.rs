use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xrlat::config::ExperimentConfig;
use xrlat::harness::{self, write_atomic};
use xrlat::metrics::RunSummary;
use xrlat::Error;

/// Discrete-event latency simulator for an XR perception/render pipeline.
#[derive(Parser, Debug)]
#[command(name = "xrlat", version, about)]
struct Cli {
    /// Root directory for run outputs. Overrides `run.output_dir` in the config.
    #[arg(long, global = true, env = "XRLAT_OUT")]
    out_root: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct ConfigArgs {
    /// TOML config file. Missing keys take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Start from a named preset instead of the defaults (ignored with --config).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    platform: Option<String>,
    #[arg(long)]
    app: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration_ms: Option<u64>,
    /// Record events.log alongside the other artifacts.
    #[arg(long)]
    events: bool,
    /// Grid-search the illixr-op SR/ATW periods before running.
    #[arg(long)]
    auto_tune: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate the platform profile and write profile.json.
    Profile {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output file (default: <out-root>/profile.json).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and write its artifacts.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run directory (default: <out-root>/<label>).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation per value of a parameter.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// sr_period | atw_period | policy | scene_swaps_per_min | motion_spikes_per_min
        #[arg(long)]
        axis: String,
        /// Comma-separated values; periods are in ms.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Sweep directory (default: <out-root>/sweep-<axis>).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the summary.json files of finished runs.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write report.json here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the effective configuration with every default filled in.
    PrintConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InfeasibleSchedule { .. } => 2,
        Error::Io { .. } | Error::Json { .. } => 3,
        _ => 1,
    }
}

fn load(args: &ConfigArgs) -> xrlat::Result<ExperimentConfig> {
    let mut c = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(v) = &args.policy {
        c.run.policy = v.clone();
    }
    if let Some(v) = &args.platform {
        c.run.platform = v.clone();
    }
    if let Some(v) = &args.app {
        c.run.app = v.clone();
    }
    if let Some(v) = args.seed {
        c.run.seed = v;
    }
    if let Some(v) = args.duration_ms {
        c.run.duration_ms = v;
    }
    c.run.events_log |= args.events;
    c.periods.auto_tune |= args.auto_tune;
    c.validate()?;
    Ok(c)
}

fn out_root(cli_root: &Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    cli_root.clone().unwrap_or_else(|| PathBuf::from(&config.run.output_dir))
}

fn fmt_ms(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

fn print_summary(dir: &Path, s: &RunSummary) {
    println!("{} -> {}", s.context.label, dir.display());
    if s.empty {
        println!("  no frames after warm-up");
        return;
    }
    println!(
        "  frames {}  fps {:.2}  M2D {} ms (std {})  C2D {} ms (std {})  dropped IMU {:.1}%",
        s.frames,
        s.fps,
        fmt_ms(s.m2d.as_ref().map(|m| m.mean_ms())),
        fmt_ms(s.m2d.as_ref().map(|m| m.std_ms())),
        fmt_ms(s.c2d.as_ref().map(|m| m.mean_ms())),
        fmt_ms(s.c2d.as_ref().map(|m| m.std_ms())),
        s.context.dropped_imu_pct,
    );
}

fn dispatch(cli: Cli) -> xrlat::Result<u8> {
    match cli.cmd {
        Command::PrintConfig { cfg } => {
            print!("{}", load(&cfg)?.to_toml());
        }
        Command::Profile { cfg, out } => {
            let config = load(&cfg)?;
            let (_, profile) = harness::profile_for(&config)?;
            let path = out.unwrap_or_else(|| out_root(&cli.out_root, &config).join("profile.json"));
            let text = serde_json::to_string_pretty(&profile).expect("profile is serialisable") + "\n";
            write_atomic(&path, text.as_bytes())?;
            print!("{text}");
            eprintln!("wrote {}", path.display());
        }
        Command::Run { cfg, out } => {
            let config = load(&cfg)?;
            let dir = out.unwrap_or_else(|| out_root(&cli.out_root, &config).join(config.label()));
            let art = harness::run(&config)?;
            harness::write_artifacts(&dir, &art)?;
            print_summary(&dir, &art.summary);
        }
        Command::Sweep { cfg, axis, values, out } => {
            let config = load(&cfg)?;
            let dir = out.unwrap_or_else(|| out_root(&cli.out_root, &config).join(format!("sweep-{axis}")));
            let (result, arts) = harness::sweep(&config, &axis, &values)?;
            for (value, art) in values.iter().zip(&arts) {
                let run_dir = dir.join(format!("{axis}={value}"));
                harness::write_artifacts(&run_dir, art)?;
            }
            let json = serde_json::to_string_pretty(&result).expect("sweep result is serialisable") + "\n";
            write_atomic(&dir.join("sweep.json"), json.as_bytes())?;
            let table = result.comparison.to_text();
            write_atomic(&dir.join("comparison.txt"), table.as_bytes())?;
            print!("{table}");
            eprintln!("wrote {}", dir.display());
        }
        Command::Report { dirs, json } => {
            let report = harness::report(&dirs);
            if let Some(cmp) = &report.comparison {
                print!("{}", cmp.to_text());
            }
            for e in &report.errors {
                eprintln!("error: {}: {}", e.dir, e.error);
            }
            let text = serde_json::to_string_pretty(&report).expect("report is serialisable") + "\n";
            match json {
                Some(path) => write_atomic(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
            if !report.errors.is_empty() {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would collide with the infeasible-schedule code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
