use shutterqbm::coefficients::{big_gamma_with, delta, delta_big_gamma, BathParams, Integration, Reservoir};
use shutterqbm::dynamics::{
    evolve_shuttered, evolve_unshuttered, evolve_unshuttered_at, heating_stroboscopic, heating_unshuttered, period_map,
    ShutterSchedule,
};
use shutterqbm::quadrature::{integrate, QuadratureOptions};
use shutterqbm::zeno::DiffTrace;

fn fig_bath(r: f64) -> BathParams<f64> {
    BathParams::natural(0.1, r, 10.0).unwrap()
}

fn nested_delta_big_gamma(t: f64, p: &BathParams<f64>) -> f64 {
    let opts = QuadratureOptions::relative(1e-12);
    let gamma_at = |s: f64| big_gamma_with(s, p, 1e-12, Integration::Quadrature).unwrap();
    let g_t = gamma_at(t);
    integrate(|s| delta(s, p).unwrap() * (gamma_at(s) - g_t).exp(), 0.0, t, &opts)
        .unwrap()
        .value
}

#[test]
fn delta_big_gamma_matches_nested_quadrature() {
    for r in [0.1, 1.0, 10.0] {
        let p = fig_bath(r);
        for x in [0.5, 1.0, 5.0] {
            let t = x / p.omega_c();
            let ivp = delta_big_gamma(t, &p, 1e-12).unwrap();
            let quad = nested_delta_big_gamma(t, &p);
            assert!((ivp - quad).abs() <= 1e-8 * quad.abs(), "r={r} x={x}: {ivp} vs {quad}");
        }
    }
}

#[test]
fn iterated_map_matches_closed_form() {
    let p = fig_bath(10.0);
    let tau = 1.0 / p.omega_c();
    let map = period_map(tau, &p, 1e-10).unwrap();
    let mut n = 0.0;
    let mut m = 0;
    for target in [1, 10, 1000] {
        while m < target {
            n = map.apply(n);
            m += 1;
        }
        let closed = heating_stroboscopic(m, tau, &p, 1e-10).unwrap();
        assert!((n - closed).abs() <= 1e-10 * closed, "m={m}: {n} vs {closed}");
    }
}

#[test]
fn shuttered_boundaries_match_closed_form() {
    for r in [0.1, 10.0] {
        let p = fig_bath(r);
        let sched = ShutterSchedule::new(0.5 / p.omega_c(), 100).unwrap();
        let traj = evolve_shuttered(&sched, &p, 7, 0.0, 1e-10).unwrap();
        for (m, t, n) in traj.stroboscopic() {
            assert_eq!(t, sched.boundary(m));
            let closed = heating_stroboscopic(m, sched.tau(), &p, 1e-10).unwrap();
            assert!((n - closed).abs() <= 1e-10 * closed.max(1e-300), "m={m}");
        }
    }
}

#[test]
fn first_period_is_the_unshuttered_evolution() {
    for r in [0.1, 10.0] {
        let p = fig_bath(r);
        let sched = ShutterSchedule::new(1.0 / p.omega_c(), 3).unwrap();
        let traj = evolve_shuttered(&sched, &p, 16, 0.0, 1e-13).unwrap();
        let first: Vec<usize> = (1..=16).collect();
        let times: Vec<f64> = first.iter().map(|&i| traj.times[i]).collect();
        let reference = evolve_unshuttered_at(&times, 0.0, &p, 1e-13).unwrap();
        for (k, &i) in first.iter().enumerate() {
            let (a, b) = (traj.n_mean[i], reference.n_mean[k]);
            assert!((a - b).abs() <= 1e-12 * b, "r={r} t={}: {a} vs {b}", times[k]);
        }
    }
}

#[test]
fn two_period_difference_reduces_to_restart_formula() {
    // n_shutter(2τ) − n(2τ) with n(2τ) from one continuous sweep
    let p = fig_bath(10.0);
    let tau = 0.5 / p.omega_c();
    let sched = ShutterSchedule::new(tau, 2).unwrap();
    let trace = DiffTrace::stroboscopic(&sched, &p, 1e-12).unwrap();
    assert_eq!(trace.times.len(), 1);
    let one = heating_unshuttered(tau, 0.0, &p, 1e-12).unwrap();
    let restarted = heating_unshuttered(tau, one, &p, 1e-12).unwrap();
    let continuous = heating_unshuttered(2.0 * tau, 0.0, &p, 1e-12).unwrap();
    assert!((trace.diff[0] - (restarted - continuous)).abs() <= 1e-10 * continuous);
}

#[test]
fn shuttered_boundaries_do_not_depend_on_sampling() {
    let p = fig_bath(10.0);
    let sched = ShutterSchedule::new(1.0 / p.omega_c(), 40).unwrap();
    let coarse = evolve_shuttered(&sched, &p, 4, 0.0, 1e-12).unwrap().stroboscopic();
    let fine = evolve_shuttered(&sched, &p, 8, 0.0, 1e-12).unwrap().stroboscopic();
    assert_eq!(coarse.len(), fine.len());
    for (a, b) in coarse.iter().zip(&fine) {
        assert_eq!(a.1, b.1);
        assert!((a.2 - b.2).abs() <= 1e-12 * b.2.max(1e-300));
    }
}

#[test]
fn resolved_crossing_is_stable_under_refinement() {
    let p = fig_bath(10.0);
    let sched = ShutterSchedule::new(1.0 / p.omega_c(), 1500).unwrap();
    let sign_flip = |s: usize| {
        let trace = DiffTrace::resolved(&sched, &p, s, 1e-10).unwrap();
        let strobe: Vec<(f64, f64)> = trace
            .times
            .iter()
            .zip(&trace.diff)
            .filter(|(t, _)| ((**t / sched.tau()).round() * sched.tau() - **t).abs() <= 1e-9 * **t)
            .map(|(&t, &d)| (t, d))
            .collect();
        strobe.windows(2).find(|w| w[0].1 < 0.0 && w[1].1 > 0.0).map(|w| w[1].0)
    };
    let coarse = sign_flip(2);
    assert!(coarse.is_some());
    assert_eq!(coarse, sign_flip(4));
}

#[test]
fn unshuttered_heating_reaches_markovian_value() {
    let p = fig_bath(10.0);
    let traj = evolve_unshuttered(1e4 / p.omega_c(), 50, 0.0, &p, 1e-10).unwrap();
    let (_, n) = traj.last().unwrap();
    let (d, g) = p.markovian_rates();
    let expected = d / (2.0 * g) - 0.5;
    assert!((n - expected).abs() <= 0.01 * expected, "{n} vs {expected}");
}
