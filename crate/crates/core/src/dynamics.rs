//! Heating-function evolution with a continuously coupled and with a shuttered reservoir.
//!
//! Within one coupling period the mean occupation obeys
//! `n(t) = e^{−Γ(t)} n(0) + (e^{−Γ(t)} − 1)/2 + Δ_Γ(t)`, valid for every initial state. Each
//! switch-off/on resets the bath correlations, so the same law restarts from the end value of the
//! previous period. Over a whole period this is the affine map `n ↦ a·n + b` with
//! `a = e^{−Γ(τ)}` and `b = (a − 1)/2 + Δ_Γ(τ)`. Free evolution between periods is not modelled;
//! the time axis counts interaction time only.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;

use crate::coefficients::{check_period, check_time, integrals_at, Integrals, Reservoir};
use crate::error::{Error, Result};
use crate::scalar::{key_bits, Scalar};

/// Period length and number of off/on cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShutterSchedule<T> {
    tau: T,
    periods: usize,
}

impl<T: Scalar> ShutterSchedule<T> {
    pub fn new(tau: T, periods: usize) -> Result<Self> {
        check_period(tau)?;
        Ok(Self { tau, periods })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Start of period `k`, `k·τ`.
    pub fn boundary(&self, k: usize) -> T {
        T::from_count(k) * self.tau
    }

    pub fn duration(&self) -> T {
        self.boundary(self.periods)
    }
}

/// Sampled heating function `⟨n(t)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub n_mean: Vec<T>,
    /// Index of the period a sample belongs to; boundary `kτ` carries `k`. Empty when unshuttered.
    pub period_index: Vec<usize>,
    pub schedule: Option<ShutterSchedule<T>>,
    /// Bath occupation used to normalise `n_mean`.
    pub nbar: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn is_shuttered(&self) -> bool {
        self.schedule.is_some()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, T)> {
        Some((*self.times.last()?, *self.n_mean.last()?))
    }

    /// `(k, kτ, ⟨n(kτ)⟩)` for every period boundary of a shuttered trajectory.
    pub fn stroboscopic(&self) -> Vec<(usize, T, T)> {
        let Some(sched) = self.schedule else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(sched.periods + 1);
        for (i, &t) in self.times.iter().enumerate() {
            let k = self.period_index[i];
            if t == sched.boundary(k) {
                out.push((k, t, self.n_mean[i]));
            }
        }
        out
    }

    /// CSV columns `t, n_mean, n_mean_over_nbar, period_index`, with `t` multiplied by `time_unit`.
    pub fn write_csv<W: std::io::Write>(&self, time_unit: T, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "n_mean", "n_mean_over_nbar", "period_index"])?;
        for i in 0..self.times.len() {
            let n = self.n_mean[i];
            let period = self.period_index.get(i).map(|k| k.to_string()).unwrap_or_default();
            w.write_record([
                (self.times[i] * time_unit).as_f64().to_string(),
                n.as_f64().to_string(),
                (n / self.nbar).as_f64().to_string(),
                period,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_occupation<T: Scalar>(n: T) -> Result<()> {
    if n.is_finite() && n >= T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("occupation must be finite and non-negative, got {n}")))
    }
}

fn evolve_from<T: Scalar>(n0: T, big_gamma: T, delta_big_gamma: T) -> T {
    let em1 = (-big_gamma).exp_m1();
    (em1 + T::one()) * n0 + em1 * T::lit(0.5) + delta_big_gamma
}

/// `⟨n(t)⟩` for a continuously coupled reservoir starting from occupation `n0`.
pub fn heating_unshuttered<T: Scalar, R: Reservoir<T> + ?Sized>(t: T, n0: T, reservoir: &R, tol: T) -> Result<T> {
    check_time(t, "time")?;
    check_occupation(n0)?;
    let v = integrals_at(&[t], reservoir, tol)?[0];
    Ok(evolve_from(n0, v.big_gamma, v.delta_big_gamma))
}

/// The one-period map `n ↦ a·n + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePeriodMap<T> {
    pub tau: T,
    pub big_gamma: T,
    pub delta_big_gamma: T,
    /// `a = e^{−Γ(τ)}`.
    pub slope: T,
    /// `b = (a − 1)/2 + Δ_Γ(τ)`.
    pub offset: T,
}

impl<T: Scalar> OnePeriodMap<T> {
    fn from_integrals(tau: T, v: Integrals<T>) -> Self {
        let em1 = (-v.big_gamma).exp_m1();
        Self {
            tau,
            big_gamma: v.big_gamma,
            delta_big_gamma: v.delta_big_gamma,
            slope: em1 + T::one(),
            offset: em1 * T::lit(0.5) + v.delta_big_gamma,
        }
    }

    pub fn apply(&self, n: T) -> T {
        self.slope * n + self.offset
    }

    /// `1 − a`, computed without cancellation.
    pub fn contraction(&self) -> T {
        -(-self.big_gamma).exp_m1()
    }

    /// Fixed point `Δ_Γ(τ)/(1 − e^{−Γ(τ)}) − 1/2`.
    pub fn fixed_point(&self) -> Result<T> {
        if self.big_gamma <= T::zero() || self.big_gamma.is_nan() {
            return Err(Error::domain(format!(
                "Gamma(tau) = {} is not positive at tau = {}; the period map has no attracting fixed point",
                self.big_gamma, self.tau
            )));
        }
        Ok(self.delta_big_gamma / self.contraction() - T::lit(0.5))
    }

    /// Occupation after `m` periods from `n0`: `a^m n0 + b(1 − a^m)/(1 − a)`.
    pub fn iterate_closed(&self, m: usize, n0: T) -> Result<T> {
        if m == 0 {
            return Ok(n0);
        }
        if self.big_gamma == T::zero() {
            return Err(Error::domain("Gamma(tau) = 0: stroboscopic closed form is 0/0"));
        }
        let m_gamma = T::from_count(m) * self.big_gamma;
        let grown = -(-m_gamma).exp_m1();
        let steady = self.delta_big_gamma / self.contraction() - T::lit(0.5);
        Ok((T::one() - grown) * n0 + steady * grown)
    }
}

/// Intra-period samples of `Γ` and `Δ_Γ` at `jτ/S`, `j = 0..=S`, sharing the canonical
/// endpoint of [`OnePeriodMap`].
#[derive(Debug, Clone)]
struct PeriodProfile<T> {
    map: OnePeriodMap<T>,
    /// `(a(s_j), b(s_j))` for `j = 0..S`; the endpoint is `map`.
    interior: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    scalar: TypeId,
    reservoir: Vec<u64>,
    tau: u64,
    tol: u64,
    samples: usize,
}

type CacheStore = RwLock<HashMap<CacheKey, Arc<dyn Any + Send + Sync>>>;

fn cache() -> &'static CacheStore {
    static CACHE: OnceLock<CacheStore> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Drops every cached period map.
pub fn clear_period_cache() {
    cache().write().clear();
}

pub fn period_cache_len() -> usize {
    cache().read().len()
}

fn cached<V, F>(key: CacheKey, compute: F) -> Result<Arc<V>>
where
    V: Send + Sync + 'static,
    F: FnOnce() -> Result<V>,
{
    if let Some(hit) = cache().read().get(&key) {
        if let Ok(v) = Arc::clone(hit).downcast::<V>() {
            return Ok(v);
        }
    }
    // Computed outside the lock; a racing writer produces the identical value.
    let v = Arc::new(compute()?);
    cache()
        .write()
        .entry(key)
        .or_insert_with(|| Arc::clone(&v) as Arc<dyn Any + Send + Sync>);
    Ok(v)
}

fn key_for<T: Scalar, R: Reservoir<T> + ?Sized>(reservoir: &R, tau: T, tol: T, samples: usize) -> CacheKey {
    CacheKey {
        scalar: TypeId::of::<T>(),
        reservoir: reservoir.fingerprint(),
        tau: key_bits(tau),
        tol: key_bits(tol),
        samples,
    }
}

/// The affine map over one period of length `tau`, memoised per `(reservoir, tau, tol)`.
pub fn period_map<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<OnePeriodMap<T>> {
    check_period(tau)?;
    let key = key_for(reservoir, tau, tol, 0);
    let map = cached::<OnePeriodMap<T>, _>(key, || {
        let v = integrals_at(&[tau], reservoir, tol)?[0];
        Ok(OnePeriodMap::from_integrals(tau, v))
    })?;
    Ok(*map)
}

fn period_profile<T: Scalar, R: Reservoir<T> + ?Sized>(
    tau: T,
    samples: usize,
    reservoir: &R,
    tol: T,
) -> Result<Arc<PeriodProfile<T>>> {
    let map = period_map(tau, reservoir, tol)?;
    let key = key_for(reservoir, tau, tol, samples);
    cached::<PeriodProfile<T>, _>(key, || {
        let s = T::from_count(samples);
        let offsets: Vec<T> = (1..samples).map(|j| T::from_count(j) * tau / s).collect();
        let mut interior = vec![(T::one(), T::zero())];
        for v in integrals_at(&offsets, reservoir, tol)? {
            let m = OnePeriodMap::from_integrals(v.t, v);
            interior.push((m.slope, m.offset));
        }
        Ok(PeriodProfile { map, interior })
    })
}

/// Applies the one-period map to `n_in`, returning the new occupation and the map itself.
pub fn one_period_map<T: Scalar, R: Reservoir<T> + ?Sized>(
    n_in: T,
    tau: T,
    reservoir: &R,
    tol: T,
) -> Result<(T, OnePeriodMap<T>)> {
    check_occupation(n_in)?;
    let map = period_map(tau, reservoir, tol)?;
    Ok((map.apply(n_in), map))
}

/// `⟨n(mτ)⟩` from the ground state: `(Δ_Γ(τ)/(1 − e^{−Γ(τ)}) − 1/2)(1 − e^{−mΓ(τ)})`.
pub fn heating_stroboscopic<T: Scalar, R: Reservoir<T> + ?Sized>(m: usize, tau: T, reservoir: &R, tol: T) -> Result<T> {
    heating_stroboscopic_from(m, T::zero(), tau, reservoir, tol)
}

/// Stroboscopic occupation from an arbitrary initial occupation `n0`.
///
/// Extension of the ground-state closed form: `a^m n0 + b(1 − a^m)/(1 − a)`.
pub fn heating_stroboscopic_from<T: Scalar, R: Reservoir<T> + ?Sized>(
    m: usize,
    n0: T,
    tau: T,
    reservoir: &R,
    tol: T,
) -> Result<T> {
    check_occupation(n0)?;
    period_map(tau, reservoir, tol)?.iterate_closed(m, n0)
}

/// Shuttered evolution sampled `samples_per_period` times per period, plus the final boundary.
pub fn evolve_shuttered<T: Scalar, R: Reservoir<T> + ?Sized>(
    schedule: &ShutterSchedule<T>,
    reservoir: &R,
    samples_per_period: usize,
    n0: T,
    tol: T,
) -> Result<Trajectory<T>> {
    if samples_per_period == 0 {
        return Err(Error::domain("samples_per_period must be at least 1"));
    }
    check_occupation(n0)?;
    let m = schedule.periods;
    let capacity = m * samples_per_period + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        n_mean: Vec::with_capacity(capacity),
        period_index: Vec::with_capacity(capacity),
        schedule: Some(*schedule),
        nbar: reservoir.nbar(),
    };
    let mut n = n0;
    if m > 0 {
        let profile = period_profile(schedule.tau, samples_per_period, reservoir, tol)?;
        let step = schedule.tau / T::from_count(samples_per_period);
        for k in 0..m {
            let start = schedule.boundary(k);
            for (j, &(a, b)) in profile.interior.iter().enumerate() {
                traj.times.push(start + T::from_count(j) * step);
                traj.n_mean.push(a * n + b);
                traj.period_index.push(k);
            }
            n = profile.map.apply(n);
        }
    }
    traj.times.push(schedule.boundary(m));
    traj.n_mean.push(n);
    traj.period_index.push(m);
    Ok(traj)
}

/// Continuously coupled evolution on a uniform grid of `samples` points over `[0, t_max]`.
pub fn evolve_unshuttered<T: Scalar, R: Reservoir<T> + ?Sized>(
    t_max: T,
    samples: usize,
    n0: T,
    reservoir: &R,
    tol: T,
) -> Result<Trajectory<T>> {
    check_period(t_max)?;
    check_occupation(n0)?;
    if samples < 2 {
        return Err(Error::domain("an unshuttered trajectory needs at least 2 samples"));
    }
    let last = T::from_count(samples - 1);
    let times: Vec<T> = (0..samples).map(|i| t_max * T::from_count(i) / last).collect();
    evolve_unshuttered_at(&times, n0, reservoir, tol)
}

/// Continuously coupled evolution at arbitrary strictly increasing times.
pub fn evolve_unshuttered_at<T: Scalar, R: Reservoir<T> + ?Sized>(
    times: &[T],
    n0: T,
    reservoir: &R,
    tol: T,
) -> Result<Trajectory<T>> {
    check_occupation(n0)?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("trajectory times must be strictly increasing"));
    }
    let n_mean = integrals_at(times, reservoir, tol)?
        .into_iter()
        .map(|v| evolve_from(n0, v.big_gamma, v.delta_big_gamma))
        .collect();
    Ok(Trajectory {
        times: times.to_vec(),
        n_mean,
        period_index: Vec::new(),
        schedule: None,
        nbar: reservoir.nbar(),
    })
}
