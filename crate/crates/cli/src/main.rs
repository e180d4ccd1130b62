use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finvariant::{Error, Result};
use finvariant_cli::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "finv", version, about = "Sofic entropy experiments on free-group shifts")]
struct Cli {
    /// Experiment config (JSON); string references resolve relative to it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap on the number of enumerated actions.
    #[arg(long, global = true)]
    cap_exact: Option<u128>,
    /// Cap on the number of labelings scanned per action.
    #[arg(long, global = true)]
    cap_labels: Option<u128>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// f of a Markov measure, with the constancy table F(W, ρ).
    FExact {
        /// Weight file; defaults to the config's "weight".
        weight: Option<PathBuf>,
        #[arg(long)]
        rho_max: Option<usize>,
    },
    /// Microstate-count estimates as CSV.
    FEstimate,
    /// Rearranges a sofic approximation along an orbit-equivalence configuration.
    Rearrange,
    /// Checks a configuration against an explicit SFT or Z_ρ.
    SftVerify,
    /// Weight-file tools.
    Weight {
        #[command(subcommand)]
        tool: WeightTool,
    },
}

#[derive(Subcommand)]
enum WeightTool {
    /// Validates a weight and prints its f.
    Validate { file: PathBuf },
    /// Nearby rational weight with denominators at most q.
    Rationalize {
        file: PathBuf,
        #[arg(long)]
        q: u64,
        /// Nearest-neighbor SFT the result must be supported on.
        #[arg(long)]
        support: Option<PathBuf>,
    },
    /// Markov weight with the same B(e, m+1) marginal.
    Markovize {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        m: usize,
    },
    /// Distance between two weights.
    Distance { a: PathBuf, b: PathBuf },
}

fn read(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

struct Output {
    text: String,
    /// Whether the checks in the report passed.
    passed: bool,
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn config(cli: &Cli, fallback: Option<Value>) -> Result<Config> {
    let overrides = Overrides {
        seed: cli.seed,
        cap_exact: cli.cap_exact,
        cap_labels: cli.cap_labels,
    };
    let cfg = match (&cli.config, fallback) {
        (Some(p), _) => Config::load(p)?,
        (None, Some(v)) => Config::from_value(v, Path::new("."))?,
        (None, None) => return Err(Error::Input("this command needs --config".into())),
    };
    Ok(cfg.with_overrides(&overrides))
}

fn run(cli: &Cli) -> Result<Output> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::Resource(e.to_string()))?;
    }
    let ok = |v: Value| Output { text: pretty(&v), passed: true };
    match &cli.command {
        Command::FExact { weight, rho_max } => {
            let mut cfg = config(cli, weight.as_ref().map(|p| json!({"weight": p.to_string_lossy()})))?;
            if let Some(p) = weight {
                cfg.set("weight", read(p)?);
            }
            if let Some(r) = rho_max {
                cfg.set("rho_max", json!(r));
            }
            let r = cmd_f_exact(&cfg)?;
            Ok(Output { text: pretty(&r.to_json()), passed: r.constancy.passed })
        }
        Command::FEstimate => {
            let out = cmd_f_estimate(&config(cli, None)?)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            Ok(Output { text: out.csv(), passed: true })
        }
        Command::Rearrange => {
            let r = cmd_rearrange(&config(cli, None)?)?;
            Ok(Output { text: pretty(&r.to_json()), passed: r.passed() })
        }
        Command::SftVerify => {
            let r = cmd_sft_verify(&config(cli, None)?)?;
            Ok(Output { text: pretty(&r.to_json()), passed: r.accepted })
        }
        Command::Weight { tool } => match tool {
            WeightTool::Validate { file } => Ok(ok(weight_validate(&read(file)?)?)),
            WeightTool::Rationalize { file, q, support } => {
                let support = support.as_deref().map(read).transpose()?;
                let v = weight_rationalize(&read(file)?, *q, support.as_ref())?;
                let passed = v["within_bound"] == json!(true);
                Ok(Output { text: pretty(&v), passed })
            }
            WeightTool::Markovize { file, m } => {
                let v = weight_markovize(&read(file)?, *m)?;
                let passed = v.get("f_match").is_none_or(|b| b == &json!(true));
                Ok(Output { text: pretty(&v), passed })
            }
            WeightTool::Distance { a, b } => Ok(ok(json!({"distance": weight_distance(&read(a)?, &read(b)?)?}))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(p) => std::fs::write(p, &out.text).map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
