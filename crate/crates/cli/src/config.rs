//! Run settings: preset defaults, then the config file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use shutterqbm::BathParams;

use crate::commands::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    /// Times in 1/ω_c.
    #[value(name = "omega-c")]
    OmegaC,
    /// Times in 1/ω₀.
    #[value(name = "omega0")]
    Omega0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolKind {
    Shuttered,
    Unshuttered,
}

/// Every setting as an optional override. Shared by flags and the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// Coupling strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub g: Option<f64>,
    /// Cutoff ratio ω_c/ω₀
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Oscillator frequency
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    /// Bath occupation k_B T/ω₀
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub nbar: Option<f64>,
    /// Shuttering period
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau_wc: Option<f64>,
    /// Number of shuttering periods (default: enough to reach --tmax-wc)
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    /// Output samples per shuttering period
    #[arg(long, global = true)]
    pub samples_per_period: Option<usize>,
    /// Final time
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tmax_wc: Option<f64>,
    /// Relative tolerance of quadrature and ODE solves
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Worker threads for sweeps (default: available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output CSV path
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` settings file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Unit of --tau-wc, --tmax-wc, --tau-min-wc, --tau-max-wc and of the CSV time column
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Smallest period of a sweep
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau_min_wc: Option<f64>,
    /// Largest period of a sweep
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau_max_wc: Option<f64>,
    /// Grid points of a sweep (log-spaced)
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Periods inspected by the short-time Zeno classification
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Fock cutoff N of the population oracle
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    /// Samples of unshuttered and coefficient traces
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Coupling protocol for evolve and oracle-check
    #[arg(long, global = true, value_enum)]
    pub protocol: Option<ProtocolKind>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, String> {
    value
        .parse()
        .map(Some)
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<Option<T>, String> {
    T::from_str(value, false)
        .map(Some)
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

impl Options {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut o = Options::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            let k = key.as_str();
            let res = match k {
                "g" => parse(k, value).map(|v| o.g = v),
                "r" => parse(k, value).map(|v| o.r = v),
                "omega0" => parse(k, value).map(|v| o.omega0 = v),
                "nbar" => parse(k, value).map(|v| o.nbar = v),
                "tau-wc" => parse(k, value).map(|v| o.tau_wc = v),
                "periods" => parse(k, value).map(|v| o.periods = v),
                "samples-per-period" => parse(k, value).map(|v| o.samples_per_period = v),
                "tmax-wc" => parse(k, value).map(|v| o.tmax_wc = v),
                "tol" => parse(k, value).map(|v| o.tol = v),
                "threads" => parse(k, value).map(|v| o.threads = v),
                "out" => parse(k, value).map(|v| o.out = v),
                "units" => parse_enum(k, value).map(|v| o.units = v),
                "tau-min-wc" => parse(k, value).map(|v| o.tau_min_wc = v),
                "tau-max-wc" => parse(k, value).map(|v| o.tau_max_wc = v),
                "points" => parse(k, value).map(|v| o.points = v),
                "k" => parse(k, value).map(|v| o.k = v),
                "truncation" => parse(k, value).map(|v| o.truncation = v),
                "samples" => parse(k, value).map(|v| o.samples = v),
                "protocol" => parse_enum(k, value).map(|v| o.protocol = v),
                _ => Err(format!("unknown key `{key}`")),
            };
            res.map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(o)
    }

    /// Fields set in `self` win over `fallback`.
    pub fn or(self, fallback: Options) -> Options {
        Options {
            g: self.g.or(fallback.g),
            r: self.r.or(fallback.r),
            omega0: self.omega0.or(fallback.omega0),
            nbar: self.nbar.or(fallback.nbar),
            tau_wc: self.tau_wc.or(fallback.tau_wc),
            periods: self.periods.or(fallback.periods),
            samples_per_period: self.samples_per_period.or(fallback.samples_per_period),
            tmax_wc: self.tmax_wc.or(fallback.tmax_wc),
            tol: self.tol.or(fallback.tol),
            threads: self.threads.or(fallback.threads),
            out: self.out.or(fallback.out),
            config: self.config.or(fallback.config),
            units: self.units.or(fallback.units),
            tau_min_wc: self.tau_min_wc.or(fallback.tau_min_wc),
            tau_max_wc: self.tau_max_wc.or(fallback.tau_max_wc),
            points: self.points.or(fallback.points),
            k: self.k.or(fallback.k),
            truncation: self.truncation.or(fallback.truncation),
            samples: self.samples.or(fallback.samples),
            protocol: self.protocol.or(fallback.protocol),
        }
    }
}

/// Fully resolved settings. Times are in the library's unit (1/ω₀ scaled by `omega0`).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bath: BathParams<f64>,
    pub units: Units,
    pub tau: f64,
    pub periods: Option<usize>,
    pub samples_per_period: usize,
    pub t_max: f64,
    pub tol: f64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub k: usize,
    pub truncation: Option<usize>,
    pub samples: usize,
    pub protocol: ProtocolKind,
}

/// Library defaults for any command.
pub fn base_defaults() -> Options {
    Options {
        g: Some(0.1),
        r: Some(10.0),
        omega0: Some(1.0),
        nbar: Some(10.0),
        tau_wc: Some(1.0),
        samples_per_period: Some(20),
        tmax_wc: Some(50.0),
        tol: Some(1e-10),
        units: Some(Units::OmegaC),
        tau_min_wc: Some(0.3),
        tau_max_wc: Some(50.0),
        points: Some(60),
        k: Some(3),
        samples: Some(501),
        protocol: Some(ProtocolKind::Shuttered),
        ..Options::default()
    }
}

impl RunConfig {
    /// Layers `flags` over the config file named in `flags` over `defaults`.
    pub fn resolve(flags: Options, defaults: Options, default_out: &str) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => Options::from_file(path).map_err(Failure::Usage)?,
            None => Options::default(),
        };
        let o = flags.or(file).or(defaults).or(base_defaults());
        let bath = BathParams::new(o.g.unwrap(), o.r.unwrap(), o.omega0.unwrap(), o.nbar.unwrap())?;
        let units = o.units.unwrap();
        let unit = match units {
            Units::OmegaC => bath.omega_c(),
            Units::Omega0 => bath.omega0(),
        };
        let tol = o.tol.unwrap();
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {tol}")));
        }
        if o.threads == Some(0) {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            bath,
            units,
            tau: o.tau_wc.unwrap() / unit,
            periods: o.periods,
            samples_per_period: o.samples_per_period.unwrap(),
            t_max: o.tmax_wc.unwrap() / unit,
            tol,
            threads: o.threads,
            out: o.out.unwrap_or_else(|| PathBuf::from(default_out)),
            tau_min: o.tau_min_wc.unwrap() / unit,
            tau_max: o.tau_max_wc.unwrap() / unit,
            points: o.points.unwrap(),
            k: o.k.unwrap(),
            truncation: o.truncation,
            samples: o.samples.unwrap(),
            protocol: o.protocol.unwrap(),
        })
    }

    /// Multiplier from library time to the user's time unit.
    pub fn time_unit(&self) -> f64 {
        match self.units {
            Units::OmegaC => self.bath.omega_c(),
            Units::Omega0 => self.bath.omega0(),
        }
    }

    pub fn unit_label(&self) -> &'static str {
        match self.units {
            Units::OmegaC => "omega_c t",
            Units::Omega0 => "omega0 t",
        }
    }

    /// `--periods`, or enough periods to reach `t_max`.
    pub fn periods(&self) -> usize {
        self.periods
            .unwrap_or_else(|| ((self.t_max / self.tau) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
    }
}
