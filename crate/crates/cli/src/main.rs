use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmfront_cli::config::{ExperimentConfig, Scenario};
use pmfront_cli::scenarios::{output_dir, run_scenario, ScenarioReport};
use pmfront_cli::sweep::{parse_value_spec, run_sweep, sweep_csv};
use pmfront_cli::{plot, CliError, CliResult};

#[derive(Parser)]
#[command(name = "pmfront", version, about = "Forward-backward diffusion experiments")]
struct Cli {
    /// Root directory for all artifacts.
    #[arg(long, env = "PMFRONT_OUT", default_value = "pmfront-out", global = true)]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a JSON config.
    Simulate { config: PathBuf },
    /// Rerun a scenario for each value of one config field.
    Sweep {
        config: PathBuf,
        /// JSON pointer to the field, e.g. /geometry/domain/1.
        #[arg(long)]
        param: String,
        /// Comma-separated values, or an integer range `a..b`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Run a barrier-verify-1 or barrier-verify-2 config.
    VerifyBarrier { config: PathBuf },
    /// Search the Taylor family for the smallest certified member.
    Counterexample {
        #[arg(long, default_value_t = pmfront::counterexample::DEFAULT_N_MAX)]
        n_max: u32,
    },
    /// Render SVG plots for a scenario's report.json.
    Plot { manifest: PathBuf },
}

fn print_report(r: &ScenarioReport, dir: Option<&Path>) {
    for c in &r.criteria {
        println!("[{}] {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, r.scenario.name(), c.name, c.detail);
    }
    if let Some(d) = dir {
        println!("artifacts in {}", d.display());
    }
}

fn simulate(cfg: ExperimentConfig, root: &Path) -> CliResult<(ScenarioReport, PathBuf)> {
    let dir = output_dir(&cfg, root);
    let report = run_scenario(&cfg, Some(&dir))?;
    print_report(&report, Some(&dir));
    Ok((report, dir))
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Simulate { config } => Ok(simulate(ExperimentConfig::from_file(&config)?, &cli.out)?.0.all_pass),
        Command::VerifyBarrier { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            if !matches!(cfg.scenario, Scenario::BarrierVerify1 | Scenario::BarrierVerify2) {
                return Err(CliError::Field {
                    path: "scenario".into(),
                    message: format!("verify-barrier needs a barrier-verify scenario, got {}", cfg.scenario.name()),
                });
            }
            Ok(simulate(cfg, &cli.out)?.0.all_pass)
        }
        Command::Counterexample { n_max } => {
            let mut cfg = ExperimentConfig::defaults(Scenario::Counterexample);
            cfg.counterexample.n_max = n_max;
            cfg.validate()?;
            let (report, dir) = simulate(cfg, &cli.out)?;
            if report.files.iter().any(|f| f == "certificate.json") {
                let path = dir.join("certificate.json");
                let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
                println!("{text}");
            }
            Ok(report.all_pass)
        }
        Command::Sweep { config, param, values } => {
            let text = std::fs::read_to_string(&config).map_err(|source| CliError::Io { path: config.clone(), source })?;
            let base: serde_json::Value = serde_json::from_str(&text)?;
            let root = cli.out.join("sweep");
            let rows = run_sweep(&base, &param, &parse_value_spec(&values), Some(&root))?;
            for row in &rows {
                println!("value {}: {}", row.value, if row.report.all_pass { "all pass" } else { "some fail" });
                print_report(&row.report, None);
            }
            std::fs::create_dir_all(&root).map_err(|source| CliError::Io { path: root.clone(), source })?;
            let csv = root.join("sweep.csv");
            std::fs::write(&csv, sweep_csv(&rows)).map_err(|source| CliError::Io { path: csv.clone(), source })?;
            println!("aggregate in {}", csv.display());
            Ok(rows.iter().all(|r| r.report.all_pass))
        }
        Command::Plot { manifest } => {
            for p in plot::emit_plots(&manifest)? {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
