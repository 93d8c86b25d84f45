use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rewritable::cli::{
    cmd_curve_awgn, cmd_curve_uniform, cmd_delta_table, cmd_validate, curve_to_csv, exit_code,
    CurveRow, UniformScheme,
};
use rewritable::config::{parse_experiment, parse_validation, ValidationOptions};
use rewritable::harness::run_experiment;
use rewritable::{format_sig, Result};

/// Coding schemes and rate bounds for rewritable storage cells with a
/// hidden per-cell offset. Rates are in bits per cell; write budgets and
/// costs are in writes/cell.
#[derive(Parser)]
#[command(name = "rewritable", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SchemeArg {
    /// Fixed-stimulus region code
    C1,
    /// Optimized interior/exterior code
    C2,
    /// No-offset capacity reference
    Fact1,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal switching thresholds for exterior regions; they minimize
    /// write cost (writes/cell) behind the rate curves (bits)
    DeltaTable {
        /// Largest region index to tabulate
        #[arg(long, default_value_t = 6)]
        max_i: u32,
        /// Also write the table as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Staged estimate-then-code bound for the Gaussian cell: rate_bits
    /// (bits) against the write budget kappa (writes/cell)
    CurveAwgn {
        /// Write power P
        #[arg(long, default_value_t = 100.0)]
        power: f64,
        /// Fresh write-noise variance N
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Offset variance
        #[arg(long, default_value_t = 10.0)]
        sigma_s2: f64,
        /// Smallest budget, writes/cell (minimum 1)
        #[arg(long, default_value_t = 1.0)]
        kappa_min: f64,
        /// Largest budget, writes/cell
        #[arg(long, default_value_t = 10.0)]
        kappa_max: f64,
        /// Budget increment, writes/cell
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Also write the curve as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Rate curves for the uniform cell: rate_bits (bits) against kappa
    /// (writes/cell) for the chosen scheme
    CurveUniform {
        /// Write-noise width a
        #[arg(long, default_value_t = 1.0 / 3.0)]
        a: f64,
        /// Offset width B (0 <= B < a)
        #[arg(long, default_value_t = 1.0 / 6.0)]
        b: f64,
        /// Smallest budget, writes/cell
        #[arg(long, default_value_t = 2.0)]
        kappa_min: f64,
        /// Largest budget, writes/cell
        #[arg(long, default_value_t = 12.0)]
        kappa_max: f64,
        /// Budget increment, writes/cell
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Scheme to trace
        #[arg(long, value_enum, default_value_t = SchemeArg::C2)]
        scheme: SchemeArg,
        /// Also write the curve as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment from a config file; reports the mean
    /// cost (writes/cell) and the empirical rate (bits)
    Simulate {
        /// Experiment description (INI-style)
        #[arg(long)]
        config: PathBuf,
        /// Override the seed from the config
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count from the config
        #[arg(long)]
        trials: Option<u64>,
        /// Override the worker count (0 = default pool); results never
        /// depend on it
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the report as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Self-check battery: simulated costs (writes/cell) against closed
    /// forms and rate identities (bits); exits 3 on any failed check
    Validate {
        /// Optional config; only [experiment] trials/seed/workers are read
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count (tolerances scale accordingly)
        #[arg(long)]
        trials: Option<u64>,
        /// Override the worker count (0 = default pool)
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the outcomes as CSV to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn write_csv(path: &PathBuf, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

fn print_curve(rows: &[CurveRow]) {
    println!(
        "{:<10} {:<12} {:<8} params",
        "kappa", "rate_bits", "scheme"
    );
    for row in rows {
        println!(
            "{:<10} {:<12} {:<8} {}",
            format_sig(row.kappa),
            format_sig(row.rate_bits),
            row.scheme,
            row.params
        );
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::DeltaTable { max_i, csv } => {
            let table = cmd_delta_table(max_i)?;
            println!("{:>3}  delta_i", "i");
            for (i, d) in &table {
                println!("{i:>3}  {d:.4}");
            }
            if let Some(path) = csv {
                let mut out = String::from("i,delta\n");
                for (i, d) in &table {
                    out.push_str(&format!("{i},{}\n", format_sig(*d)));
                }
                write_csv(&path, &out)?;
            }
            Ok(0)
        }
        Command::CurveAwgn {
            power,
            noise,
            sigma_s2,
            kappa_min,
            kappa_max,
            step,
            csv,
        } => {
            let rows = cmd_curve_awgn(power, noise, sigma_s2, kappa_min, kappa_max, step)?;
            print_curve(&rows);
            if let Some(path) = csv {
                write_csv(&path, &curve_to_csv(&rows))?;
            }
            Ok(0)
        }
        Command::CurveUniform {
            a,
            b,
            kappa_min,
            kappa_max,
            step,
            scheme,
            csv,
        } => {
            let scheme = match scheme {
                SchemeArg::C1 => UniformScheme::C1,
                SchemeArg::C2 => UniformScheme::C2,
                SchemeArg::Fact1 => UniformScheme::Fact1,
            };
            let rows = cmd_curve_uniform(a, b, kappa_min, kappa_max, step, scheme)?;
            print_curve(&rows);
            if let Some(path) = csv {
                write_csv(&path, &curve_to_csv(&rows))?;
            }
            Ok(0)
        }
        Command::Simulate {
            config,
            seed,
            trials,
            workers,
            csv,
        } => {
            let text = fs::read_to_string(&config)?;
            let mut experiment = parse_experiment(&text)?;
            if let Some(seed) = seed {
                experiment.seed = seed;
            }
            if let Some(trials) = trials {
                experiment.trials = trials;
            }
            if let Some(workers) = workers {
                experiment.workers = workers;
            }
            let report = run_experiment(&experiment)?;
            println!("{report}");
            if let Some(path) = csv {
                write_csv(&path, &report.to_csv())?;
            }
            Ok(0)
        }
        Command::Validate {
            config,
            seed,
            trials,
            workers,
            csv,
        } => {
            let mut opts = match config {
                Some(path) => parse_validation(&fs::read_to_string(&path)?)?,
                None => ValidationOptions::default(),
            };
            if let Some(seed) = seed {
                opts.seed = seed;
            }
            if let Some(trials) = trials {
                opts.trials = trials;
            }
            if let Some(workers) = workers {
                opts.workers = workers;
            }
            let outcomes = cmd_validate(&opts);
            let mut failures = 0usize;
            for outcome in &outcomes {
                let tag = if outcome.passed { " ok " } else { "FAIL" };
                if !outcome.passed {
                    failures += 1;
                }
                println!("[{tag}] {:<32} {}", outcome.name, outcome.detail);
            }
            println!(
                "{} of {} checks passed",
                outcomes.len() - failures,
                outcomes.len()
            );
            if let Some(path) = csv {
                let mut out = String::from("check,passed,detail\n");
                for outcome in &outcomes {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        outcome.name,
                        outcome.passed,
                        outcome.detail.replace(',', ";")
                    ));
                }
                write_csv(&path, &out)?;
            }
            Ok(if failures > 0 { 3 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
