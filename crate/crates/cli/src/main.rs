//! `shutterqbm`: heating of an oscillator coupled to a shuttered Ohmic reservoir.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;
use config::{Options, ProtocolKind, RunConfig};

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample Δ(t) and γ(t)
    Coeffs,
    /// Heating function from the ground state (--protocol shuttered|unshuttered)
    Evolve,
    /// Steady state and effective temperature at one period
    Steady,
    /// Steady state over a log-spaced grid of periods
    Sweep,
    /// Zeno / anti-Zeno classification and crossover time
    Zeno,
    /// Compare the analytic heating function with the Fock-population oracle
    OracleCheck,
    /// Preset trajectory (1a, 1b, 2a, 2b) or sweep (3) datasets
    Figure {
        #[arg(value_enum)]
        preset: Figure,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    #[value(name = "1a")]
    OneA,
    #[value(name = "1b")]
    OneB,
    #[value(name = "2a")]
    TwoA,
    #[value(name = "2b")]
    TwoB,
    #[value(name = "3")]
    Three,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::OneA => "1a",
            Figure::OneB => "1b",
            Figure::TwoA => "2a",
            Figure::TwoB => "2b",
            Figure::Three => "3",
        }
    }

    fn defaults(self) -> Options {
        let short = |r| Options {
            r: Some(r),
            tau_wc: Some(0.5),
            tmax_wc: Some(20.0),
            samples_per_period: Some(50),
            ..Options::default()
        };
        let long = |tmax, samples| Options {
            r: Some(10.0),
            tau_wc: Some(1.0),
            tmax_wc: Some(tmax),
            samples_per_period: Some(samples),
            ..Options::default()
        };
        match self {
            Figure::OneA => short(10.0),
            Figure::OneB => short(0.1),
            Figure::TwoA => long(1500.0, 10),
            Figure::TwoB => long(1e4, 4),
            Figure::Three => Options {
                r: Some(10.0),
                tau_min_wc: Some(0.3),
                tau_max_wc: Some(50.0),
                points: Some(200),
                ..Options::default()
            },
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let (defaults, default_out) = match cli.command {
        Command::Coeffs => (Options::default(), "coeffs.csv".to_string()),
        Command::Evolve => (Options::default(), "evolve.csv".into()),
        Command::Steady => (Options::default(), "steady.csv".into()),
        Command::Sweep => (Options::default(), "sweep.csv".into()),
        Command::Zeno => (Options::default(), "zeno.csv".into()),
        Command::OracleCheck => (
            Options {
                protocol: Some(ProtocolKind::Unshuttered),
                ..Options::default()
            },
            "oracle.csv".into(),
        ),
        Command::Figure { preset } => (preset.defaults(), format!("figure_{}.csv", preset.name())),
    };
    let cfg = RunConfig::resolve(cli.options, defaults, &default_out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Coeffs => commands::coeffs(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Steady => commands::steady(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Zeno => commands::zeno(&cfg),
        Command::OracleCheck => commands::oracle_check(&cfg),
        Command::Figure { preset: Figure::Three } => commands::sweep(&cfg).map(|s| s.replacen("sweep", "figure 3", 1)),
        Command::Figure { preset } => commands::trajectory_figure(preset.name(), &cfg),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
