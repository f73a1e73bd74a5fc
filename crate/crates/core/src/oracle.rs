//! Brute-force check of the analytic heating function.
//!
//! The master equation restricted to Fock populations is a birth–death process with
//! downward rate `(Δ + γ)n` out of `|n⟩` and upward rate `(Δ − γ)(n + 1)`. It is integrated in
//! a truncated basis `|0⟩ … |N⟩`; probability pushed above `N` is accumulated as leakage.
//! Negative instantaneous rates (non-Lindblad windows) are used as they come.

use crate::coefficients::{averaged_rates, ivp_options, ConstantRates, Reservoir};
use crate::dynamics::{evolve_shuttered, evolve_unshuttered_at, ShutterSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::ode;
use crate::scalar::Scalar;

/// Leakage above which a run is rejected.
pub const MAX_LEAKAGE: f64 = 1e-6;

/// Fock populations `p_0 … p_N` plus probability lost through the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState<T> {
    pub populations: Vec<T>,
    pub leakage: T,
}

impl<T: Scalar> PopulationState<T> {
    pub fn ground(truncation: usize) -> Self {
        let mut populations = vec![T::zero(); truncation + 1];
        populations[0] = T::one();
        Self {
            populations,
            leakage: T::zero(),
        }
    }

    /// Geometric (thermal) populations with mean `mean`, truncated at `N`.
    pub fn thermal(mean: T, truncation: usize) -> Self {
        Self {
            populations: geometric(mean, truncation),
            leakage: T::zero(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.populations.len() - 1
    }

    pub fn mean(&self) -> T {
        self.populations
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, &p)| acc + T::from_count(n) * p)
    }

    pub fn total(&self) -> T {
        self.populations.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn min_population(&self) -> T {
        self.populations.iter().fold(T::infinity(), |acc, &p| acc.min(p))
    }

    fn from_slice(y: &[T]) -> Self {
        let n = y.len() - 1;
        Self {
            populations: y[..n].to_vec(),
            leakage: y[n],
        }
    }
}

fn geometric<T: Scalar>(mean: T, truncation: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(truncation + 1);
    let mut q = (T::one() + mean).recip();
    let ratio = mean / (T::one() + mean);
    for _ in 0..=truncation {
        out.push(q);
        q = q * ratio;
    }
    out
}

/// Max-norm distance between the populations and the geometric distribution with the same mean.
pub fn thermal_deviation<T: Scalar>(state: &PopulationState<T>) -> Result<T> {
    let total = state.total();
    if (total - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::domain(format!("populations sum to {total}, not 1")));
    }
    let mean = state.mean();
    Ok(geometric(mean, state.truncation())
        .into_iter()
        .zip(&state.populations)
        .fold(T::zero(), |acc, (q, &p)| acc.max((p - q).abs())))
}

/// `max(50, ⌈40·estimate⌉)`: enough basis states for a thermal tail of mean `estimate`.
pub fn default_truncation<T: Scalar>(estimate: T) -> usize {
    let scaled = (T::lit(40.0) * estimate).ceil().to_usize().unwrap_or(usize::MAX);
    scaled.max(50)
}

/// How the reservoir is coupled during a population run.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol<T> {
    /// Continuous coupling, sampled at the given non-decreasing times (first must be 0).
    Continuous { times: Vec<T> },
    /// Coefficient clock restarted at every period boundary.
    Shuttered {
        schedule: ShutterSchedule<T>,
        samples_per_period: usize,
    },
}

impl<T: Scalar> Protocol<T> {
    pub fn uniform(t_max: T, samples: usize) -> Result<Self> {
        if samples < 2 || t_max <= T::zero() || t_max.is_nan() {
            return Err(Error::domain("uniform protocol needs t_max > 0 and at least 2 samples"));
        }
        let last = T::from_count(samples - 1);
        Ok(Protocol::Continuous {
            times: (0..samples).map(|i| t_max * T::from_count(i) / last).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRun<T> {
    pub times: Vec<T>,
    pub n_mean: Vec<T>,
    pub leakage: Vec<T>,
    pub thermal_deviation: Vec<T>,
    /// Largest `|Σp + leakage − 1|` seen at a sample.
    pub conservation_error: T,
    /// Smallest single population seen at a sample.
    pub min_population: T,
    pub period_index: Vec<usize>,
    pub schedule: Option<ShutterSchedule<T>>,
    pub nbar: T,
    pub final_state: PopulationState<T>,
}

impl<T: Scalar> PopulationRun<T> {
    pub fn trajectory(&self) -> Trajectory<T> {
        Trajectory {
            times: self.times.clone(),
            n_mean: self.n_mean.clone(),
            period_index: self.period_index.clone(),
            schedule: self.schedule,
            nbar: self.nbar,
        }
    }

    fn record(&mut self, t: T, y: &[T], period: Option<usize>) -> Result<()> {
        let state = PopulationState::from_slice(y);
        let total = state.total() + state.leakage;
        self.conservation_error = self.conservation_error.max((total - T::one()).abs());
        self.min_population = self.min_population.min(state.min_population());
        if state.leakage.abs() > T::lit(MAX_LEAKAGE) {
            return Err(Error::Truncation {
                truncation: state.truncation(),
                leakage: state.leakage.as_f64(),
            });
        }
        self.times.push(t);
        self.n_mean.push(state.mean());
        self.leakage.push(state.leakage);
        self.thermal_deviation.push(thermal_deviation(&state)?);
        if let Some(k) = period {
            self.period_index.push(k);
        }
        Ok(())
    }
}

fn population_rhs<T: Scalar, R: Reservoir<T> + ?Sized>(reservoir: &R, t: T, y: &[T], dy: &mut [T]) {
    let top = y.len() - 2;
    let d = reservoir.diffusion(t);
    let g = reservoir.dissipation(t);
    let down = d + g;
    let up = d - g;
    for n in 0..=top {
        let nf = T::from_count(n);
        let mut v = -(down * nf + up * (nf + T::one())) * y[n];
        if n < top {
            v = v + down * (nf + T::one()) * y[n + 1];
        }
        if n > 0 {
            v = v + up * nf * y[n - 1];
        }
        dy[n] = v;
    }
    dy[top + 1] = up * T::from_count(top + 1) * y[top];
}

/// Integrates the truncated population dynamics from the ground state.
pub fn simulate_populations<T: Scalar, R: Reservoir<T> + ?Sized>(
    reservoir: &R,
    protocol: &Protocol<T>,
    truncation: usize,
    tol: T,
) -> Result<PopulationRun<T>> {
    if truncation < 1 {
        return Err(Error::domain("truncation N must be at least 1"));
    }
    let ground = PopulationState::<T>::ground(truncation);
    let mut y = ground.populations.clone();
    y.push(T::zero());
    let mut run = PopulationRun {
        times: Vec::new(),
        n_mean: Vec::new(),
        leakage: Vec::new(),
        thermal_deviation: Vec::new(),
        conservation_error: T::zero(),
        min_population: T::infinity(),
        period_index: Vec::new(),
        schedule: None,
        nbar: reservoir.nbar(),
        final_state: ground,
    };
    let opts = ivp_options(tol);
    let rhs = |t: T, y: &[T], dy: &mut [T]| population_rhs(reservoir, t, y, dy);

    match protocol {
        Protocol::Continuous { times } => {
            if times.first().is_some_and(|&t| t != T::zero()) {
                return Err(Error::domain("continuous protocol samples must start at t = 0"));
            }
            let (end, _) = ode::integrate(rhs, T::zero(), &y, times, &opts, |t, y| run.record(t, y, None))?;
            y = end;
        }
        Protocol::Shuttered {
            schedule,
            samples_per_period,
        } => {
            if *samples_per_period == 0 {
                return Err(Error::domain("samples_per_period must be at least 1"));
            }
            run.schedule = Some(*schedule);
            let s = T::from_count(*samples_per_period);
            let local: Vec<T> = (0..=*samples_per_period)
                .map(|j| T::from_count(j) * schedule.tau() / s)
                .collect();
            run.record(T::zero(), &y, Some(0))?;
            for k in 0..schedule.periods() {
                let start = schedule.boundary(k);
                let (end, _) = ode::integrate(rhs, T::zero(), &y, &local, &opts, |t, y| {
                    if t == T::zero() {
                        return Ok(());
                    }
                    let last = t == schedule.tau();
                    let time = if last { schedule.boundary(k + 1) } else { start + t };
                    run.record(time, y, Some(if last { k + 1 } else { k }))
                })?;
                y = end;
            }
        }
    }
    run.final_state = PopulationState::from_slice(&y);
    Ok(run)
}

/// One sample of an analytic-versus-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow<T> {
    pub t: T,
    pub n_analytic: T,
    pub n_oracle: T,
    pub rel_err: T,
    pub leakage: T,
    pub thermal_dev: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison<T> {
    pub rows: Vec<ComparisonRow<T>>,
    pub conservation_error: T,
    pub min_population: T,
}

fn relative_error<T: Scalar>(reference: T, value: T) -> T {
    let scale = reference.abs().max(T::min_positive_value());
    (value - reference).abs() / scale
}

impl<T: Scalar> OracleComparison<T> {
    /// Runs the oracle and the analytic evolution on the same grid. Samples where the analytic
    /// occupation is exactly zero (t = 0) report a zero relative error when both agree.
    pub fn run<R: Reservoir<T> + ?Sized>(reservoir: &R, protocol: &Protocol<T>, truncation: usize, tol: T) -> Result<Self> {
        let oracle = simulate_populations(reservoir, protocol, truncation, tol)?;
        let analytic = match protocol {
            Protocol::Continuous { times } => {
                let positive: Vec<T> = times.iter().copied().filter(|&t| t > T::zero()).collect();
                let mut n = vec![T::zero(); times.len() - positive.len()];
                if !positive.is_empty() {
                    n.extend(evolve_unshuttered_at(&positive, T::zero(), reservoir, tol)?.n_mean);
                }
                n
            }
            Protocol::Shuttered {
                schedule,
                samples_per_period,
            } => evolve_shuttered(schedule, reservoir, *samples_per_period, T::zero(), tol)?.n_mean,
        };
        let rows = (0..oracle.times.len())
            .map(|i| ComparisonRow {
                t: oracle.times[i],
                n_analytic: analytic[i],
                n_oracle: oracle.n_mean[i],
                rel_err: if analytic[i] == oracle.n_mean[i] {
                    T::zero()
                } else {
                    relative_error(analytic[i], oracle.n_mean[i])
                },
                leakage: oracle.leakage[i],
                thermal_dev: oracle.thermal_deviation[i],
            })
            .collect();
        Ok(Self {
            rows,
            conservation_error: oracle.conservation_error,
            min_population: oracle.min_population,
        })
    }

    pub fn max_rel_err(&self) -> T {
        self.rows.iter().fold(T::zero(), |acc, r| acc.max(r.rel_err))
    }

    pub fn max_thermal_dev(&self) -> T {
        self.rows.iter().fold(T::zero(), |acc, r| acc.max(r.thermal_dev))
    }

    /// CSV columns `t, n_analytic, n_oracle, rel_err, leakage, thermal_dev`, with `t` multiplied by `time_unit`.
    pub fn write_csv<W: std::io::Write>(&self, time_unit: T, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "n_analytic", "n_oracle", "rel_err", "leakage", "thermal_dev"])?;
        for r in &self.rows {
            w.write_record([
                (r.t * time_unit).as_f64().to_string(),
                r.n_analytic.as_f64().to_string(),
                r.n_oracle.as_f64().to_string(),
                r.rel_err.as_f64().to_string(),
                r.leakage.as_f64().to_string(),
                r.thermal_dev.as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Restarted time-dependent dynamics against constant averaged rates over the same total time.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T> {
    pub times: Vec<T>,
    pub n_restarted: Vec<T>,
    pub n_averaged: Vec<T>,
    pub stroboscopic: Vec<bool>,
    /// Largest relative discrepancy at period boundaries.
    pub max_stroboscopic_rel: T,
    /// Largest relative discrepancy strictly inside periods. Nonzero in general: the averaged
    /// description is coarse-grained over a period.
    pub max_intra_period_rel: T,
}

/// Compares periodic restarts against the constant rates `γ₁(τ)`, `γ₋₁(τ)`.
pub fn nonselective_measurement_equivalence<T: Scalar, R: Reservoir<T> + ?Sized>(
    tau: T,
    reservoir: &R,
    periods: usize,
    samples_per_period: usize,
    truncation: usize,
    tol: T,
) -> Result<EquivalenceReport<T>> {
    let schedule = ShutterSchedule::new(tau, periods)?;
    let restarted = simulate_populations(
        reservoir,
        &Protocol::Shuttered {
            schedule,
            samples_per_period,
        },
        truncation,
        tol,
    )?;
    let (up, down) = averaged_rates(tau, reservoir, tol)?;
    let averaged_bath = ConstantRates::from_channel_rates(up, down, reservoir.nbar(), reservoir.omega0());
    let averaged = simulate_populations(
        &averaged_bath,
        &Protocol::Continuous {
            times: restarted.times.clone(),
        },
        truncation,
        tol,
    )?;

    let mut report = EquivalenceReport {
        times: restarted.times.clone(),
        n_restarted: restarted.n_mean.clone(),
        n_averaged: averaged.n_mean.clone(),
        stroboscopic: Vec::with_capacity(restarted.times.len()),
        max_stroboscopic_rel: T::zero(),
        max_intra_period_rel: T::zero(),
    };
    for i in 0..report.times.len() {
        let t = report.times[i];
        let on_boundary = t == schedule.boundary(restarted.period_index[i]);
        report.stroboscopic.push(on_boundary);
        if t == T::zero() {
            continue;
        }
        let rel = relative_error(report.n_restarted[i], report.n_averaged[i]);
        if on_boundary {
            report.max_stroboscopic_rel = report.max_stroboscopic_rel.max(rel);
        } else {
            report.max_intra_period_rel = report.max_intra_period_rel.max(rel);
        }
    }
    Ok(report)
}
