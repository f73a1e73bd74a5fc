//! Stroboscopic steady state of the shuttered oscillator and its effective temperature.

use rayon::prelude::*;

use crate::coefficients::{averaged_rates, check_period, Reservoir};
use crate::dynamics::period_map;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Steady-state occupation `Δ_Γ(τ)/(1 − e^{−Γ(τ)}) − 1/2`.
///
/// It is the fixed point of the one-period map and does not depend on the initial state.
pub fn steady_state<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<T> {
    period_map(tau, reservoir, tol)?.fixed_point()
}

/// Lowest-order-in-`Γ` steady state: half the ratio of the period-integrated diffusion to the
/// period-integrated dissipation. The `−1/2` of the exact form is absent.
///
/// The period integrals have closed forms, so `_tol` is accepted only for call-site symmetry.
pub fn steady_state_approx<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, _tol: T) -> Result<T> {
    check_period(tau)?;
    let diffusion = reservoir.integrated_diffusion(tau);
    let dissipation = reservoir.integrated_dissipation(tau);
    if dissipation == T::zero() || !dissipation.is_finite() {
        return Err(Error::SingularRatio(format!(
            "integrated dissipation over tau = {tau} is {dissipation}"
        )));
    }
    Ok(T::lit(0.5) * diffusion / dissipation)
}

/// The same approximation written in terms of the averaged channel rates,
/// `(γ₁ + γ₋₁) / 2(γ₁ − γ₋₁)`.
pub fn steady_state_from_channel_rates<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<T> {
    let (up, down) = averaged_rates(tau, reservoir, tol)?;
    let gap = up - down;
    if gap == T::zero() {
        return Err(Error::SingularRatio(format!("gamma_1 = gamma_-1 at tau = {tau}")));
    }
    Ok(T::lit(0.5) * (up + down) / gap)
}

/// Temperature of the thermal state with the steady-state occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTemperature<T> {
    /// `T_eff = ω₀⟨n⟩ₛ` (k_B = 1).
    pub temperature: T,
    /// `T_eff/T = ⟨n⟩ₛ/n̄`.
    pub ratio: T,
}

impl<T: Scalar> EffectiveTemperature<T> {
    /// High-temperature reading: the temperature is proportional to the occupation, not the
    /// inverse of a Bose factor.
    pub fn from_occupation<R: Reservoir<T> + ?Sized>(n_s: T, reservoir: &R) -> Self {
        Self {
            temperature: reservoir.omega0() * n_s,
            ratio: n_s / reservoir.nbar(),
        }
    }
}

pub fn effective_temperature<T: Scalar, R: Reservoir<T> + ?Sized>(
    tau: T,
    reservoir: &R,
    tol: T,
) -> Result<EffectiveTemperature<T>> {
    let n_s = steady_state(tau, reservoir, tol)?;
    Ok(EffectiveTemperature::from_occupation(n_s, reservoir))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateResult<T> {
    pub tau: T,
    pub n_s_exact: T,
    pub n_s_approx: T,
    pub t_eff: T,
    pub t_eff_over_t: T,
    pub nbar: T,
}

impl<T: Scalar> SteadyStateResult<T> {
    pub fn compute<R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<Self> {
        let n_s_exact = steady_state(tau, reservoir, tol)?;
        let n_s_approx = steady_state_approx(tau, reservoir, tol)?;
        let teff = EffectiveTemperature::from_occupation(n_s_exact, reservoir);
        Ok(Self {
            tau,
            n_s_exact,
            n_s_approx,
            t_eff: teff.temperature,
            t_eff_over_t: teff.ratio,
            nbar: reservoir.nbar(),
        })
    }

    pub fn n_s_over_nbar(&self) -> T {
        self.n_s_exact / self.nbar
    }
}

/// One point of a period sweep; failures are kept in-row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub tau: T,
    pub outcome: Result<SteadyStateResult<T>>,
}

/// Steady state at every `tau` of the grid, in input order. Runs on the current rayon pool.
pub fn sweep_tau<T: Scalar, R: Reservoir<T> + ?Sized>(tau_grid: &[T], reservoir: &R, tol: T) -> Vec<SweepRow<T>> {
    tau_grid
        .par_iter()
        .map(|&tau| SweepRow {
            tau,
            outcome: SteadyStateResult::compute(tau, reservoir, tol),
        })
        .collect()
}

/// `n` points spaced logarithmically from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi > lo) || n < 2 {
        return Err(Error::domain("log grid needs 0 < lo < hi and at least 2 points"));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let last = T::from_count(n - 1);
    let mut out: Vec<T> = (0..n)
        .map(|i| (llo + (lhi - llo) * T::from_count(i) / last).exp())
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    Ok(out)
}

/// CSV columns `tau_omega_c, n_s_exact, n_s_approx, n_s_over_nbar, t_eff_over_t, error_flag`.
///
/// `omega_c` converts the period to the cutoff time unit.
pub fn write_sweep_csv<T: Scalar, W: std::io::Write>(rows: &[SweepRow<T>], omega_c: T, out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["tau_omega_c", "n_s_exact", "n_s_approx", "n_s_over_nbar", "t_eff_over_t", "error_flag"])?;
    for row in rows {
        let tau = (row.tau * omega_c).as_f64().to_string();
        match &row.outcome {
            Ok(r) => w.write_record([
                tau,
                r.n_s_exact.as_f64().to_string(),
                r.n_s_approx.as_f64().to_string(),
                r.n_s_over_nbar().as_f64().to_string(),
                r.t_eff_over_t.as_f64().to_string(),
                String::new(),
            ])?,
            Err(e) => w.write_record([tau, String::new(), String::new(), String::new(), String::new(), e.to_string()])?,
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BathParams, ConstantRates};

    fn params(g: f64, r: f64) -> BathParams<f64> {
        BathParams::natural(g, r, 10.0).unwrap()
    }

    #[test]
    fn markovian_rates_give_nbar() {
        let p = params(0.1, 10.0);
        let m = ConstantRates::markovian(&p);
        for tau in [0.01, 1.0, 100.0] {
            let n = steady_state_approx(tau, &m, 1e-10).unwrap();
            assert!((n - 10.0).abs() <= 1e-12 * 10.0);
            // the exact form keeps the −1/2
            let exact = steady_state(tau, &m, 1e-11).unwrap();
            assert!((exact - 9.5).abs() < 1e-8, "{exact}");
        }
    }

    #[test]
    fn singular_ratio_and_domain_errors() {
        let frozen = ConstantRates {
            diffusion: 0.2,
            dissipation: 0.0,
            nbar: 10.0,
            omega0: 1.0,
        };
        assert!(matches!(steady_state_approx(1.0, &frozen, 1e-10), Err(Error::SingularRatio(_))));
        assert!(matches!(steady_state(1.0, &frozen, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(steady_state(0.0, &params(0.1, 10.0), 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn large_period_recovers_unshuttered_limit() {
        let p = params(0.1, 10.0);
        let n = steady_state(500.0 / p.omega_c(), &p, 1e-10).unwrap();
        assert!(((n - 9.5) / 9.5).abs() < 0.01, "{n}");
        // Once Γ(τ) ≫ 1 the denominator is 1 and the value is the long-time unshuttered one.
        let tau = 1e4 / p.omega_c();
        let n = steady_state(tau, &p, 1e-10).unwrap();
        let map = period_map(tau, &p, 1e-10).unwrap();
        assert!(((n - (map.delta_big_gamma - 0.5)) / n).abs() < 0.01);
    }

    #[test]
    fn enhanced_heating_at_unit_cutoff_period() {
        let p = params(0.1, 10.0);
        let tau = 1.0 / p.omega_c();
        let n = steady_state(tau, &p, 1e-10).unwrap();
        assert!((n / 35.0 - 1.0).abs() < 0.15, "{n}");
        let teff = effective_temperature(tau, &p, 1e-10).unwrap();
        assert!((teff.ratio - n / 10.0).abs() < 1e-14);
        assert!((teff.temperature - n).abs() < 1e-14);
    }

    #[test]
    fn effective_temperature_is_linear_in_occupation() {
        let p = BathParams::new(0.1, 10.0, 2.5, 10.0).unwrap();
        let a = EffectiveTemperature::from_occupation(3.0, &p);
        let b = EffectiveTemperature::from_occupation(6.0, &p);
        assert_eq!(b.temperature, 2.0 * a.temperature);
        assert_eq!(a.temperature, 7.5);
    }

    #[test]
    fn approximation_matches_channel_rate_form() {
        for r in [0.1, 1.0, 10.0] {
            let p = params(0.1, r);
            for wct in [0.3, 1.0, 4.0] {
                let tau = wct / p.omega_c();
                let a = steady_state_approx(tau, &p, 1e-10).unwrap();
                let b = steady_state_from_channel_rates(tau, &p, 1e-10).unwrap();
                assert!(((a - b) / a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn approximation_close_at_weak_coupling() {
        let p = params(0.01, 10.0);
        let tau = 1.0 / p.omega_c();
        let exact = steady_state(tau, &p, 1e-10).unwrap();
        let approx = steady_state_approx(tau, &p, 1e-10).unwrap();
        assert!(((exact - approx) / exact).abs() < 0.05);
    }

    #[test]
    fn forms_converge_as_coupling_vanishes() {
        // Up to the −1/2 the approximation drops, the two forms agree to O(Γ).
        let p = params(0.003, 10.0);
        let tau = 1.0 / p.omega_c();
        let exact = steady_state(tau, &p, 1e-12).unwrap();
        let approx = steady_state_approx(tau, &p, 1e-12).unwrap();
        assert!(((exact + 0.5) / approx - 1.0).abs() < 1e-3);
        assert!((exact / approx - 1.0).abs() < 0.02);
    }

    #[test]
    fn weak_coupling_insensitivity() {
        let tau = 1.0 / 10.0;
        let a = steady_state(tau, &params(0.05, 10.0), 1e-10).unwrap();
        let b = steady_state(tau, &params(0.1, 10.0), 1e-10).unwrap();
        assert!(((a - b) / b).abs() < 0.02);
    }

    #[test]
    fn saturation_in_r_at_fixed_cutoff_period() {
        for wct in [0.3, 1.0, 2.0, 5.0] {
            let a = steady_state(wct / 10.0, &params(0.1, 10.0), 1e-10).unwrap();
            let b = steady_state(wct / 50.0, &params(0.1, 50.0), 1e-10).unwrap();
            assert!(((a - b) / a).abs() < 0.05, "wct={wct}");
        }
        // At fixed ω₀τ the saturation holds only once ω₀τ is of order one or larger.
        let a = steady_state(2.0, &params(0.1, 10.0), 1e-10).unwrap();
        let b = steady_state(2.0, &params(0.1, 50.0), 1e-10).unwrap();
        assert!(((a - b) / a).abs() < 0.05);
    }

    #[test]
    fn heating_never_below_markovian_value() {
        for r in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let p = params(0.1, r);
            for wct in [0.3, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0] {
                let n = steady_state(wct / p.omega_c(), &p, 1e-10).unwrap();
                assert!(n >= 9.5 - 1e-9, "r={r} wct={wct} n={n}");
            }
        }
    }

    #[test]
    fn sweep_is_ordered_and_matches_pointwise() {
        let p = params(0.1, 10.0);
        let grid: Vec<f64> = log_grid(0.3, 50.0, 25).unwrap().into_iter().map(|x| x / p.omega_c()).collect();
        let rows = sweep_tau(&grid, &p, 1e-10);
        assert_eq!(rows.len(), grid.len());
        let values: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().n_s_exact).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        for (row, &tau) in rows.iter().zip(&grid) {
            assert_eq!(row.tau, tau);
            assert_eq!(row.outcome.as_ref().unwrap().n_s_exact, steady_state(tau, &p, 1e-10).unwrap());
        }
        let last = values.last().unwrap() / 10.0;
        assert!((0.9..=1.1).contains(&last));
    }

    #[test]
    fn sweep_keeps_errors_in_row() {
        let p = params(0.1, 10.0);
        let rows = sweep_tau(&[0.1, -1.0, 0.2], &p, 1e-10);
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        assert!(rows[2].outcome.is_ok());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, p.omega_c(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "tau_omega_c,n_s_exact,n_s_approx,n_s_over_nbar,t_eff_over_t,error_flag");
        assert!(lines[1].ends_with(','));
        assert!(lines[2].starts_with("-10,,,,,"));
    }

    #[test]
    fn small_period_dominance() {
        let p = params(0.1, 10.0);
        for wct in [0.3, 0.2, 0.1, 0.05] {
            let tau = wct / p.omega_c();
            let full = steady_state(tau, &p, 1e-10).unwrap();
            let half = steady_state(tau / 2.0, &p, 1e-10).unwrap();
            assert!(half > full);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.3, 50.0, 5).unwrap();
        assert_eq!(g[0], 0.3);
        assert_eq!(g[4], 50.0);
        assert!(log_grid(0.0, 1.0, 5).is_err());
    }
}
