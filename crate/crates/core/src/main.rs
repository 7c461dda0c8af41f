use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weaklab::gauge::default_thetas;
use weaklab::labcli::{error_record, exit_code, parse_config, run_scenario, self_check, ScenarioConfig, ScenarioKind};
use weaklab::Error;

#[derive(Parser)]
#[command(name = "weaklab", version, about = "Weak-value time derivatives and local field sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Overrides {
    /// Replace the gauge sweep with N equally spaced angles in [0, 2π).
    #[arg(long)]
    theta_count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use a single finite-difference stride of K time steps.
    #[arg(long)]
    stride_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV outputs plus a manifest.
    Run {
        config: PathBuf,
        /// Exit with status 4 if any acceptance line fails.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the invariant suites (default scenario when no file is given).
    Check {
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: Option<&PathBuf>, o: &Overrides) -> Result<ScenarioConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::ConfigValue { key: p.display().to_string(), msg: e.to_string() })?;
            parse_config(&text)?
        }
        None => ScenarioConfig::defaults(ScenarioKind::Fig2a),
    };
    if let Some(n) = o.theta_count {
        cfg.thetas = default_thetas(n);
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(d) = &o.out {
        cfg.out = d.clone();
    }
    if let Some(k) = o.stride_steps {
        cfg.stride_steps = vec![k];
    }
    weaklab::labcli::config::validate(&cfg)?;
    Ok(cfg)
}

fn fail(err: &Error, out: Option<&PathBuf>) -> ExitCode {
    let code = exit_code(err);
    let record = error_record(err, code);
    eprint!("{record}");
    if let Some(dir) = out {
        let _ = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("error.txt"), &record));
    }
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, check, overrides } => {
            let cfg = match load(Some(&config), &overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e, None),
            };
            match run_scenario(&cfg) {
                Ok(report) => {
                    for c in &report.checks {
                        println!("{c}");
                    }
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    if check && !report.passed() {
                        return ExitCode::from(4);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, Some(&cfg.out)),
            }
        }
        Command::Check { config, overrides } => {
            let cfg = match load(config.as_ref(), &overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e, None),
            };
            let lines = self_check(&cfg);
            for l in &lines {
                println!("{l}");
            }
            if lines.iter().all(|l| l.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
    }
}
