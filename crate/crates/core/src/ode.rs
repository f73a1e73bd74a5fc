//! Dormand–Prince 5(4) integrator with embedded error control.
//!
//! Steps are clipped so that every requested output time is hit exactly; no dense-output
//! interpolation is involved in reported values.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    /// Upper bound on a single step; `None` leaves it unbounded.
    pub max_step: Option<T>,
}

impl<T: Scalar> OdeOptions<T> {
    pub fn new(rel_tol: T, abs_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_steps: 50_000_000,
            max_step: None,
        }
    }
}

impl<T: Scalar> Default for OdeOptions<T> {
    fn default() -> Self {
        Self::new(T::lit(1e-10), T::lit(1e-14))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order weights (stage 2 weight is zero).
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// Difference between fifth- and fourth-order weights, stages 1..=7.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

struct Workspace<T> {
    k: [Vec<T>; 7],
    stage: Vec<T>,
    y_new: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![T::zero(); n]),
            stage: vec![T::zero(); n],
            y_new: vec![T::zero(); n],
        }
    }
}

fn combine<T: Scalar>(out: &mut [T], y: &[T], h: T, k: &[Vec<T>], coeffs: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (kj, &c) in k.iter().zip(coeffs) {
            if c != 0.0 {
                acc = acc + T::lit(c) * kj[i];
            }
        }
        *o = y[i] + h * acc;
    }
}

/// Integrates `dy/dt = rhs(t, y)` from `t0`, invoking `observe(t, y)` at each entry of
/// `outputs` (non-decreasing, all `>= t0`). Returns the state at the last output time.
///
/// `rhs` writes the derivative into its third argument.
pub fn integrate<T, F, O>(
    mut rhs: F,
    t0: T,
    y0: &[T],
    outputs: &[T],
    opts: &OdeOptions<T>,
    mut observe: O,
) -> Result<(Vec<T>, OdeStats)>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
    O: FnMut(T, &[T]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = OdeStats::default();
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&o| o < t0) {
        return Err(Error::domain("ODE output times must be non-decreasing and not precede t0"));
    }
    let Some(&t_end) = outputs.last() else {
        return Ok((y, stats));
    };

    let mut ws = Workspace::new(n);
    rhs(t, &y, &mut ws.k[0]);
    stats.rhs_evals += 1;

    let span = t_end - t0;
    let mut h = initial_step(&y, &ws.k[0], span, opts);
    let tiny = T::epsilon() * T::lit(16.0);

    for &t_out in outputs {
        while t < t_out {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Convergence {
                    routine: "Dormand-Prince integrator",
                    estimate: t.as_f64(),
                    achieved: h.as_f64(),
                });
            }
            let remaining = t_out - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step <= tiny * t.abs().max(T::one()) && !last {
                return Err(Error::Convergence {
                    routine: "Dormand-Prince integrator (step size underflow)",
                    estimate: t.as_f64(),
                    achieved: step.as_f64(),
                });
            }

            let err = try_step(&mut rhs, t, &y, step, &mut ws, opts);
            stats.rhs_evals += 6;
            if !err.is_finite() {
                stats.rejected += 1;
                h = step * T::lit(MIN_SCALE);
                continue;
            }
            let scale = if err == T::zero() {
                T::lit(MAX_SCALE)
            } else {
                (T::lit(SAFETY) * err.powf(T::lit(-0.2))).max(T::lit(MIN_SCALE)).min(T::lit(MAX_SCALE))
            };
            if err <= T::one() {
                stats.accepted += 1;
                t = if last { t_out } else { t + step };
                std::mem::swap(&mut y, &mut ws.y_new);
                // First-same-as-last: stage 7 is the derivative at the new point.
                ws.k.swap(0, 6);
                let grown = step * scale;
                // A step clipped to an output time should not shrink the next one.
                h = if last { h.max(grown) } else { grown };
            } else {
                stats.rejected += 1;
                h = step * scale.min(T::one());
            }
            if let Some(cap) = opts.max_step {
                h = h.min(cap);
            }
        }
        observe(t_out, &y)?;
    }
    Ok((y, stats))
}

fn initial_step<T: Scalar>(y: &[T], f0: &[T], span: T, opts: &OdeOptions<T>) -> T {
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for (&yi, &fi) in y.iter().zip(f0) {
        let sc = opts.abs_tol + opts.rel_tol * yi.abs();
        d0 = d0.max((yi / sc).abs());
        d1 = d1.max((fi / sc).abs());
    }
    let h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    let h = h
        .max(T::epsilon() * T::lit(1e3))
        .min(span.abs().max(T::min_positive_value()));
    match opts.max_step {
        Some(cap) => h.min(cap),
        None => h,
    }
}

/// Performs one trial step of size `h`, leaving the candidate in `ws.y_new` and stage 7 in
/// `ws.k[6]`. Returns the scaled max-norm error estimate.
fn try_step<T, F>(rhs: &mut F, t: T, y: &[T], h: T, ws: &mut Workspace<T>, opts: &OdeOptions<T>) -> T
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
    for (s, coeffs) in rows.iter().enumerate() {
        combine(&mut ws.stage, y, h, &ws.k[..=s], coeffs);
        rhs(t + T::lit(C[s]) * h, &ws.stage, &mut ws.k[s + 1]);
    }
    combine(&mut ws.y_new, y, h, &ws.k[..6], &B);
    rhs(t + h, &ws.y_new, &mut ws.k[6]);

    let mut worst = T::zero();
    for i in 0..y.len() {
        let mut e = T::zero();
        for (kj, &c) in ws.k.iter().zip(E.iter()) {
            if c != 0.0 {
                e = e + T::lit(c) * kj[i];
            }
        }
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(ws.y_new[i].abs());
        let ratio = (h * e).abs() / sc;
        if ratio.is_nan() {
            return T::infinity();
        }
        worst = worst.max(ratio);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_outputs_exactly() {
        let outputs = [0.0, 0.5, 1.0, 2.0];
        let mut seen = Vec::new();
        let (y, stats) = integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            &outputs,
            &OdeOptions::new(1e-12, 1e-15),
            |t, y| {
                seen.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
        for (t, v) in seen {
            assert!((v - (-t).exp()).abs() < 1e-11, "t={t}");
        }
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let (y, _) = integrate(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &[10.0],
            &OdeOptions::new(1e-11, 1e-14),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 10.0f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos t, y(0) = 0 => y = sin t
        let (y, _) = integrate(
            |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos(),
            0.0,
            &[0.0],
            &[3.0],
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 3.0f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut opts = OdeOptions::new(1e-12, 1e-15);
        opts.max_steps = 3;
        let err = integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = -50.0 * y[0],
            0.0,
            &[1.0],
            &[100.0],
            &opts,
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn rejects_unordered_outputs() {
        let err = integrate(
            |_t, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0,
            0.0,
            &[0.0],
            &[1.0, 0.5],
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
