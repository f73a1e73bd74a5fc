use std::fmt;

use shutterqbm::coefficients::CoefficientTrace;
use shutterqbm::oracle::{default_truncation, OracleComparison, Protocol};
use shutterqbm::steady::{log_grid, sweep_tau, write_sweep_csv, SweepRow};
use shutterqbm::zeno::{classify_short_time, first_persistent_sign_change, DiffTrace, ZenoReport, DEADBAND, PERSISTENCE};
use shutterqbm::{evolve_shuttered, evolve_unshuttered, steady_state, Error, ShutterSchedule, SteadyStateResult};

use crate::config::{ProtocolKind, RunConfig};

/// Oracle agreement required by `oracle-check`.
const ORACLE_REL_TOL: f64 = 1e-4;
const ORACLE_THERMAL_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(Error),
    Check(String),
    Output(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(Error::Convergence { .. } | Error::Truncation { .. }) | Failure::Check(_) => 3,
            Failure::Numerical(_) => 4,
            Failure::Output(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Numerical(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Output(m) => write!(f, "output: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

type Outcome = Result<String, Failure>;

fn write_out<F, E>(cfg: &RunConfig, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), E>,
    E: fmt::Display,
{
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Failure::Output(e.to_string()))?;
    std::fs::write(&cfg.out, buf).map_err(|e| Failure::Output(format!("{}: {e}", cfg.out.display())))
}

fn schedule(cfg: &RunConfig) -> Result<ShutterSchedule<f64>, Failure> {
    Ok(ShutterSchedule::new(cfg.tau, cfg.periods())?)
}

pub fn coeffs(cfg: &RunConfig) -> Outcome {
    if cfg.samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let last = (cfg.samples - 1) as f64;
    let times: Vec<f64> = (0..cfg.samples).map(|i| cfg.t_max * i as f64 / last).collect();
    let trace = CoefficientTrace::sample(&times, &cfg.bath)?;
    write_out(cfg, |b| trace.write_csv(cfg.time_unit(), b))?;
    let min = trace.min_delta_minus_gamma().unwrap_or(f64::NAN);
    Ok(format!(
        "coeffs: {} samples to {} = {}, min(delta - gamma) = {min:.6e}, lindblad = {}",
        trace.len(),
        cfg.unit_label(),
        cfg.t_max * cfg.time_unit(),
        if min >= 0.0 { "yes" } else { "no" }
    ))
}

pub fn evolve(cfg: &RunConfig) -> Outcome {
    let traj = match cfg.protocol {
        ProtocolKind::Shuttered => evolve_shuttered(&schedule(cfg)?, &cfg.bath, cfg.samples_per_period, 0.0, cfg.tol)?,
        ProtocolKind::Unshuttered => evolve_unshuttered(cfg.t_max, cfg.samples, 0.0, &cfg.bath, cfg.tol)?,
    };
    write_out(cfg, |b| traj.write_csv(cfg.time_unit(), b))?;
    let (t, n) = traj.last().unwrap_or((0.0, 0.0));
    Ok(format!(
        "evolve ({}): {} samples, n({} = {}) = {n:.6}, n/nbar = {:.6}",
        match cfg.protocol {
            ProtocolKind::Shuttered => "shuttered",
            ProtocolKind::Unshuttered => "unshuttered",
        },
        traj.len(),
        cfg.unit_label(),
        t * cfg.time_unit(),
        n / cfg.bath.nbar()
    ))
}

pub fn steady(cfg: &RunConfig) -> Outcome {
    let row = SweepRow {
        tau: cfg.tau,
        outcome: SteadyStateResult::compute(cfg.tau, &cfg.bath, cfg.tol),
    };
    let r = row.outcome.clone()?;
    write_out(cfg, |b| write_sweep_csv(std::slice::from_ref(&row), cfg.bath.omega_c(), b))?;
    Ok(format!(
        "steady: omega_c tau = {}, n_s = {:.6}, n_s/nbar = {:.6}, n_s_approx = {:.6}, T_eff/T = {:.6}",
        cfg.tau * cfg.bath.omega_c(),
        r.n_s_exact,
        r.n_s_over_nbar(),
        r.n_s_approx,
        r.t_eff_over_t
    ))
}

pub fn sweep(cfg: &RunConfig) -> Outcome {
    let grid = log_grid(cfg.tau_min, cfg.tau_max, cfg.points)?;
    let rows = sweep_tau(&grid, &cfg.bath, cfg.tol);
    write_out(cfg, |b| write_sweep_csv(&rows, cfg.bath.omega_c(), b))?;
    let ok: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.n_s_over_nbar()))
        .collect();
    let failed = rows.len() - ok.len();
    let (lo, hi) = ok
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(format!(
        "sweep: {} points over omega_c tau in [{}, {}], n_s/nbar in [{lo:.6}, {hi:.6}], failed = {failed}",
        rows.len(),
        cfg.tau_min * cfg.bath.omega_c(),
        cfg.tau_max * cfg.bath.omega_c()
    ))
}

fn crossover_label(t: Option<f64>, cfg: &RunConfig) -> String {
    t.map(|t| format!("{:.6}", t * cfg.time_unit())).unwrap_or_else(|| "none".into())
}

pub fn zeno(cfg: &RunConfig) -> Outcome {
    let sched = schedule(cfg)?;
    let t_max = cfg.t_max.min(sched.duration());
    let report = ZenoReport::analyse(&sched, &cfg.bath, cfg.k, t_max, cfg.tol)?;
    write_out(cfg, |b| report.write_summary_csv(cfg.time_unit(), b))?;
    Ok(format!(
        "zeno: short-time ({} periods) = {}, crossover {} = {}, asymptotic = {}",
        cfg.k,
        report.short_time_class,
        cfg.unit_label(),
        crossover_label(report.crossover_time, cfg),
        report.asymptotic_class
    ))
}

pub fn oracle_check(cfg: &RunConfig) -> Outcome {
    let (protocol, estimate) = match cfg.protocol {
        ProtocolKind::Shuttered => (
            Protocol::Shuttered {
                schedule: schedule(cfg)?,
                samples_per_period: cfg.samples_per_period,
            },
            steady_state(cfg.tau, &cfg.bath, cfg.tol)?,
        ),
        ProtocolKind::Unshuttered => (Protocol::uniform(cfg.t_max, cfg.samples)?, cfg.bath.nbar()),
    };
    let truncation = cfg.truncation.unwrap_or_else(|| default_truncation(estimate));
    let cmp = OracleComparison::run(&cfg.bath, &protocol, truncation, cfg.tol)?;
    write_out(cfg, |b| cmp.write_csv(cfg.time_unit(), b))?;
    let (rel, thermal) = (cmp.max_rel_err(), cmp.max_thermal_dev());
    let line = format!(
        "oracle-check: N = {truncation}, {} samples, max rel err = {rel:.3e}, max thermal dev = {thermal:.3e}, conservation = {:.3e}",
        cmp.rows.len(),
        cmp.conservation_error
    );
    if rel > ORACLE_REL_TOL || thermal > ORACLE_THERMAL_TOL {
        return Err(Failure::Check(line));
    }
    Ok(line)
}

/// Shuttered and unshuttered trajectories on one grid, for the trajectory figures.
pub fn trajectory_figure(name: &str, cfg: &RunConfig) -> Outcome {
    let sched = schedule(cfg)?;
    let trace = DiffTrace::resolved(&sched, &cfg.bath, cfg.samples_per_period, cfg.tol)?;
    write_out(cfg, |b| trace.write_csv(cfg.time_unit(), b))?;
    let short = classify_short_time(&sched, &cfg.bath, cfg.k.min(sched.periods()), cfg.tol)?;
    let boundaries: Vec<usize> = (0..trace.times.len())
        .filter(|&i| (i + 1) % cfg.samples_per_period == 0)
        .collect();
    let times: Vec<f64> = boundaries.iter().map(|&i| trace.times[i]).collect();
    let diff: Vec<f64> = boundaries.iter().map(|&i| trace.diff[i]).collect();
    // the first boundary is skipped, as in the stroboscopic classification
    let crossing = first_persistent_sign_change(
        times.get(1..).unwrap_or(&[]),
        diff.get(1..).unwrap_or(&[]),
        DEADBAND * cfg.bath.nbar(),
        PERSISTENCE,
    );
    let n_s = steady_state(cfg.tau, &cfg.bath, cfg.tol)?;
    Ok(format!(
        "figure {name}: r = {}, omega_c tau = {}, {} samples, short-time = {short}, crossover {} = {}, n_s/nbar = {:.6}",
        cfg.bath.r(),
        cfg.tau * cfg.bath.omega_c(),
        trace.times.len(),
        cfg.unit_label(),
        crossover_label(crossing, cfg),
        n_s / cfg.bath.nbar()
    ))
}
