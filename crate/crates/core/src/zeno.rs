//! Zeno / anti-Zeno classification of shuttered heating against the continuously coupled
//! reference.
//!
//! Comparisons use period-boundary (stroboscopic) samples only. The first boundary `t = τ` is
//! skipped: over the first period the two protocols are the same evolution, so the difference
//! there is zero up to integration error.

use std::fmt;

use crate::coefficients::{check_period, Reservoir};
use crate::dynamics::{evolve_shuttered, evolve_unshuttered_at, period_map, ShutterSchedule};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::steady::steady_state;

/// Deadband used for sign decisions, relative to `n̄`.
pub const DEADBAND: f64 = 1e-9;
/// Consecutive samples the new sign must persist for a crossing to count.
pub const PERSISTENCE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZenoClass {
    /// Shuttering reduces heating.
    Zeno,
    /// Shuttering enhances heating.
    AntiZeno,
    /// Mixed signs, or equal within the deadband.
    Indeterminate,
}

impl fmt::Display for ZenoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZenoClass::Zeno => "zeno",
            ZenoClass::AntiZeno => "anti-zeno",
            ZenoClass::Indeterminate => "indeterminate",
        })
    }
}

fn deadband<T: Scalar, R: Reservoir<T> + ?Sized>(reservoir: &R) -> T {
    T::lit(DEADBAND) * reservoir.nbar()
}

/// Zeno if every difference is below `−eps`, anti-Zeno if every one is above `+eps`.
pub fn classify_differences<T: Scalar>(diff: &[T], eps: T) -> ZenoClass {
    if diff.is_empty() {
        return ZenoClass::Indeterminate;
    }
    if diff.iter().all(|&d| d < -eps) {
        ZenoClass::Zeno
    } else if diff.iter().all(|&d| d > eps) {
        ZenoClass::AntiZeno
    } else {
        ZenoClass::Indeterminate
    }
}

/// First sample at which the sign of `diff` flips and then holds for `persistence` samples.
/// Samples inside `[−eps, eps]` carry no sign and are skipped.
pub fn first_persistent_sign_change<T: Scalar>(times: &[T], diff: &[T], eps: T, persistence: usize) -> Option<T> {
    let sign = |d: T| {
        if d > eps {
            1
        } else if d < -eps {
            -1
        } else {
            0
        }
    };
    let mut current = 0;
    for i in 0..diff.len() {
        let s = sign(diff[i]);
        if s == 0 {
            continue;
        }
        if current != 0 && s != current {
            let held = diff[i..].iter().take(persistence).filter(|&&d| sign(d) == s).count();
            if held == persistence {
                return Some(times[i]);
            }
            continue;
        }
        current = s;
    }
    None
}

/// Stroboscopic comparison of shuttered and unshuttered heating from the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffTrace<T> {
    pub times: Vec<T>,
    pub n_shuttered: Vec<T>,
    pub n_unshuttered: Vec<T>,
    pub diff: Vec<T>,
}

impl<T: Scalar> DiffTrace<T> {
    /// Boundaries `2τ … periods·τ`.
    pub fn stroboscopic<R: Reservoir<T> + ?Sized>(schedule: &ShutterSchedule<T>, reservoir: &R, tol: T) -> Result<Self> {
        let map = period_map(schedule.tau(), reservoir, tol)?;
        let mut n = map.apply(T::zero());
        let mut times = Vec::new();
        let mut n_shuttered = Vec::new();
        for k in 2..=schedule.periods() {
            n = map.apply(n);
            times.push(schedule.boundary(k));
            n_shuttered.push(n);
        }
        Self::against_unshuttered(times, n_shuttered, reservoir, tol)
    }

    /// All samples of a shuttered evolution with `samples_per_period` points per period.
    pub fn resolved<R: Reservoir<T> + ?Sized>(
        schedule: &ShutterSchedule<T>,
        reservoir: &R,
        samples_per_period: usize,
        tol: T,
    ) -> Result<Self> {
        let traj = evolve_shuttered(schedule, reservoir, samples_per_period, T::zero(), tol)?;
        // t = 0 is shared by construction and would duplicate the IVP start point.
        let times = traj.times[1..].to_vec();
        let n_shuttered = traj.n_mean[1..].to_vec();
        Self::against_unshuttered(times, n_shuttered, reservoir, tol)
    }

    fn against_unshuttered<R: Reservoir<T> + ?Sized>(times: Vec<T>, n_shuttered: Vec<T>, reservoir: &R, tol: T) -> Result<Self> {
        let reference = if times.is_empty() {
            Vec::new()
        } else {
            evolve_unshuttered_at(&times, T::zero(), reservoir, tol)?.n_mean
        };
        let diff = n_shuttered.iter().zip(&reference).map(|(&a, &b)| a - b).collect();
        Ok(Self {
            times,
            n_shuttered,
            n_unshuttered: reference,
            diff,
        })
    }

    /// CSV columns `t, n_shuttered, n_unshuttered, diff`, with `t` multiplied by `time_unit`.
    pub fn write_csv<W: std::io::Write>(&self, time_unit: T, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "n_shuttered", "n_unshuttered", "diff"])?;
        for i in 0..self.times.len() {
            w.write_record([
                (self.times[i] * time_unit).as_f64().to_string(),
                self.n_shuttered[i].as_f64().to_string(),
                self.n_unshuttered[i].as_f64().to_string(),
                self.diff[i].as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Short-time class over the boundaries `2τ … kτ`.
pub fn classify_short_time<T: Scalar, R: Reservoir<T> + ?Sized>(
    schedule: &ShutterSchedule<T>,
    reservoir: &R,
    k: usize,
    tol: T,
) -> Result<ZenoClass> {
    if k == 0 || k > schedule.periods() {
        return Err(Error::domain(format!(
            "k = {k} must lie in 1..={} (scheduled periods)",
            schedule.periods()
        )));
    }
    let window = ShutterSchedule::new(schedule.tau(), k)?;
    let trace = DiffTrace::stroboscopic(&window, reservoir, tol)?;
    Ok(classify_differences(&trace.diff, deadband(reservoir)))
}

/// First boundary `t* ≤ t_max` at which the shuttered-minus-unshuttered difference changes sign
/// persistently.
pub fn crossover_time<T: Scalar, R: Reservoir<T> + ?Sized>(
    schedule: &ShutterSchedule<T>,
    reservoir: &R,
    t_max: T,
    tol: T,
) -> Result<Option<T>> {
    let trace = crossover_trace(schedule, reservoir, t_max, tol)?;
    Ok(first_persistent_sign_change(
        &trace.times,
        &trace.diff,
        deadband(reservoir),
        PERSISTENCE,
    ))
}

fn crossover_trace<T: Scalar, R: Reservoir<T> + ?Sized>(
    schedule: &ShutterSchedule<T>,
    reservoir: &R,
    t_max: T,
    tol: T,
) -> Result<DiffTrace<T>> {
    check_period(t_max)?;
    let slack = T::one() + T::lit(1e-12);
    if t_max > schedule.duration() * slack {
        return Err(Error::domain(format!(
            "t_max = {t_max} exceeds the scheduled duration {}",
            schedule.duration()
        )));
    }
    let periods = ((t_max / schedule.tau()) * slack).floor().to_usize().unwrap_or(0);
    let window = ShutterSchedule::new(schedule.tau(), periods.min(schedule.periods()))?;
    DiffTrace::stroboscopic(&window, reservoir, tol)
}

/// Long-run class: the steady state against the long-time unshuttered value `Δ_M/2γ_M − 1/2`.
pub fn asymptotic_class<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<ZenoClass> {
    let n_s = steady_state(tau, reservoir, tol)?;
    let (diffusion, dissipation) = reservoir.markovian_rates();
    let reference = diffusion / (T::lit(2.0) * dissipation) - T::lit(0.5);
    let eps = deadband(reservoir);
    Ok(if n_s > reference + eps {
        ZenoClass::AntiZeno
    } else if n_s < reference - eps {
        ZenoClass::Zeno
    } else {
        ZenoClass::Indeterminate
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoReport<T> {
    pub tau: T,
    pub inspected_periods: usize,
    pub short_time_class: ZenoClass,
    pub crossover_time: Option<T>,
    pub asymptotic_class: ZenoClass,
    pub diff_trace: DiffTrace<T>,
}

impl<T: Scalar> ZenoReport<T> {
    /// Full analysis: short-time class over `k` periods, crossover search up to `t_max`.
    pub fn analyse<R: Reservoir<T> + ?Sized>(
        schedule: &ShutterSchedule<T>,
        reservoir: &R,
        k: usize,
        t_max: T,
        tol: T,
    ) -> Result<Self> {
        let short_time_class = classify_short_time(schedule, reservoir, k, tol)?;
        let diff_trace = crossover_trace(schedule, reservoir, t_max, tol)?;
        let crossover_time =
            first_persistent_sign_change(&diff_trace.times, &diff_trace.diff, deadband(reservoir), PERSISTENCE);
        Ok(Self {
            tau: schedule.tau(),
            inspected_periods: k,
            short_time_class,
            crossover_time,
            asymptotic_class: asymptotic_class(schedule.tau(), reservoir, tol)?,
            diff_trace,
        })
    }

    /// One-row CSV `tau, k, short_time_class, crossover_time, asymptotic_class`; times are scaled
    /// by `time_unit` (e.g. `ω_c`).
    pub fn write_summary_csv<W: std::io::Write>(&self, time_unit: T, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["tau", "k", "short_time_class", "crossover_time", "asymptotic_class"])?;
        w.write_record([
            (self.tau * time_unit).as_f64().to_string(),
            self.inspected_periods.to_string(),
            self.short_time_class.to_string(),
            self.crossover_time
                .map(|t| (t * time_unit).as_f64().to_string())
                .unwrap_or_default(),
            self.asymptotic_class.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BathParams, ConstantRates};

    fn params(r: f64) -> BathParams<f64> {
        BathParams::natural(0.1, r, 10.0).unwrap()
    }

    #[test]
    fn zeno_for_resonant_bath() {
        let p = params(10.0);
        let s = ShutterSchedule::new(0.5 / p.omega_c(), 3).unwrap();
        assert_eq!(classify_short_time(&s, &p, 3, 1e-10).unwrap(), ZenoClass::Zeno);
    }

    #[test]
    fn anti_zeno_for_slow_bath() {
        let p = params(0.1);
        let s = ShutterSchedule::new(0.5 / p.omega_c(), 3).unwrap();
        assert_eq!(classify_short_time(&s, &p, 3, 1e-10).unwrap(), ZenoClass::AntiZeno);
    }

    #[test]
    fn zero_difference_is_indeterminate() {
        assert_eq!(classify_differences(&[0.0, 0.0, 0.0], 1e-8), ZenoClass::Indeterminate);
        assert_eq!(classify_differences(&[-1.0, 1.0], 1e-8), ZenoClass::Indeterminate);
        assert_eq!(classify_differences::<f64>(&[], 1e-8), ZenoClass::Indeterminate);
        let p = params(10.0);
        let s = ShutterSchedule::new(0.05, 5).unwrap();
        let traj = evolve_shuttered(&s, &p, 1, 0.0, 1e-10).unwrap();
        let diff: Vec<f64> = traj.n_mean.iter().zip(&traj.n_mean).map(|(a, b)| a - b).collect();
        assert_eq!(classify_differences(&diff, 1e-8), ZenoClass::Indeterminate);
        assert_eq!(first_persistent_sign_change(&traj.times, &diff, 1e-8, PERSISTENCE), None);
    }

    #[test]
    fn k_outside_schedule_is_rejected() {
        let p = params(10.0);
        let s = ShutterSchedule::new(0.05, 3).unwrap();
        assert!(classify_short_time(&s, &p, 0, 1e-10).is_err());
        assert!(classify_short_time(&s, &p, 4, 1e-10).is_err());
        assert_eq!(classify_short_time(&s, &p, 1, 1e-10).unwrap(), ZenoClass::Indeterminate);
    }

    #[test]
    fn sign_change_needs_persistence() {
        let t: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(first_persistent_sign_change(&t, &[-1.0, -1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0], 0.0, 3), Some(4.0));
        assert_eq!(first_persistent_sign_change(&t, &[-1.0, 0.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0], 0.5, 3), Some(2.0));
        assert_eq!(first_persistent_sign_change(&t, &[-1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0], 0.0, 3), None);
    }

    #[test]
    fn no_crossover_when_anti_zeno_from_start() {
        let p = params(0.1);
        let tau = 1.0 / p.omega_c();
        let s = ShutterSchedule::new(tau, 400).unwrap();
        let trace = DiffTrace::stroboscopic(&s, &p, 1e-10).unwrap();
        assert!(trace.diff.iter().all(|&d| d > 0.0));
        assert_eq!(crossover_time(&s, &p, s.duration(), 1e-10).unwrap(), None);
        assert_eq!(asymptotic_class(tau, &p, 1e-10).unwrap(), ZenoClass::AntiZeno);
    }

    #[test]
    fn t_max_beyond_schedule_is_rejected() {
        let p = params(10.0);
        let s = ShutterSchedule::new(0.1, 10).unwrap();
        assert!(crossover_time(&s, &p, 2.0, 1e-10).is_err());
        assert!(crossover_time(&s, &p, 1.0, 1e-10).is_ok());
    }

    #[test]
    fn asymptotic_anti_zeno() {
        let p = params(10.0);
        assert_eq!(asymptotic_class(1.0 / p.omega_c(), &p, 1e-10).unwrap(), ZenoClass::AntiZeno);
        let p = params(0.1);
        assert_eq!(asymptotic_class(0.5 / p.omega_c(), &p, 1e-10).unwrap(), ZenoClass::AntiZeno);
    }

    #[test]
    fn memoryless_bath_sits_on_the_boundary() {
        let m = ConstantRates::markovian(&params(10.0));
        for tau in [0.1, 1.0, 10.0] {
            assert_eq!(asymptotic_class(tau, &m, 1e-12).unwrap(), ZenoClass::Indeterminate);
        }
    }

    #[test]
    fn resolved_trace_stroboscopic_points_agree() {
        let p = params(10.0);
        let s = ShutterSchedule::new(0.05, 6).unwrap();
        let fine = DiffTrace::resolved(&s, &p, 4, 1e-10).unwrap();
        let coarse = DiffTrace::stroboscopic(&s, &p, 1e-10).unwrap();
        for (t, d) in coarse.times.iter().zip(&coarse.diff) {
            let i = fine.times.iter().position(|x| x == t).unwrap();
            assert!((fine.diff[i] - d).abs() < 1e-9);
        }
    }

    #[test]
    fn report_summary_csv() {
        let p = params(10.0);
        let s = ShutterSchedule::new(0.5 / p.omega_c(), 10).unwrap();
        let report = ZenoReport::analyse(&s, &p, 3, s.duration(), 1e-10).unwrap();
        assert_eq!(report.short_time_class, ZenoClass::Zeno);
        let mut buf = Vec::new();
        report.write_summary_csv(p.omega_c(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0.5,3,zeno,,anti-zeno");
        let mut buf = Vec::new();
        report.diff_trace.write_csv(1.0, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,n_shuttered,n_unshuttered,diff\n"));
    }
}
