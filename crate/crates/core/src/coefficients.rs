//! Time-dependent diffusion and dissipation coefficients of a weakly coupled, high-temperature
//! Ohmic reservoir with Lorentz–Drude cutoff, together with their time integrals.
//!
//! Units: ħ = k_B = 1, times in 1/ω₀, rates in ω₀. Temperature enters only through the bath
//! occupation `nbar = k_B T / ω₀`.
//!
//! Both coefficients have the shape `rate · {1 − e^{−ω_c t}[cos ω₀t + c·sin ω₀t]}`, with
//! `c = −1/r` for the diffusion and `c = r` for the dissipation. Their antiderivatives are
//! elementary, which gives closed forms for `Γ(t)` and the period-averaged rates. Near `t = 0`
//! the closed forms cancel catastrophically, so a power series in `(−ω_c + iω₀)t` is used there.

use std::fmt;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::quadrature::{self, QuadratureOptions};
use crate::scalar::{key_bits, Scalar};

/// Coupling above which the second-order weak-coupling expansion is strained.
pub const WEAK_COUPLING_LIMIT: f64 = 0.3;
/// Bath occupation below which the high-temperature form of the diffusion is strained.
pub const HIGH_TEMPERATURE_LIMIT: f64 = 10.0;

/// Oscillator and Ohmic bath parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams<T> {
    g: T,
    r: T,
    omega0: T,
    nbar: T,
}

/// Non-fatal diagnostics about the regime of validity of the coefficient formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidityWarning {
    StrongCoupling { g: f64 },
    LowTemperature { nbar: f64 },
}

impl fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidityWarning::StrongCoupling { g } => {
                write!(f, "coupling g = {g} exceeds {WEAK_COUPLING_LIMIT}; weak-coupling expansion strained")
            }
            ValidityWarning::LowTemperature { nbar } => {
                write!(f, "nbar = {nbar} below {HIGH_TEMPERATURE_LIMIT}; high-temperature form strained")
            }
        }
    }
}

impl<T: Scalar> BathParams<T> {
    /// `g`: dimensionless coupling, `r = ω_c/ω₀`, `omega0`: oscillator frequency,
    /// `nbar = k_B T/ω₀`. All must be finite and positive.
    pub fn new(g: T, r: T, omega0: T, nbar: T) -> Result<Self> {
        for (name, v) in [("g", g), ("r", r), ("omega0", omega0), ("nbar", nbar)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Self { g, r, omega0, nbar })
    }

    /// Natural units, `ω₀ = 1`.
    pub fn natural(g: T, r: T, nbar: T) -> Result<Self> {
        Self::new(g, r, T::one(), nbar)
    }

    pub fn g(&self) -> T {
        self.g
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn omega0(&self) -> T {
        self.omega0
    }
    pub fn nbar(&self) -> T {
        self.nbar
    }

    /// Cutoff frequency `ω_c = r·ω₀`.
    pub fn omega_c(&self) -> T {
        self.r * self.omega0
    }

    pub fn warnings(&self) -> Vec<ValidityWarning> {
        let mut out = Vec::new();
        if self.g.as_f64() > WEAK_COUPLING_LIMIT {
            out.push(ValidityWarning::StrongCoupling { g: self.g.as_f64() });
        }
        if self.nbar.as_f64() < HIGH_TEMPERATURE_LIMIT {
            out.push(ValidityWarning::LowTemperature {
                nbar: self.nbar.as_f64(),
            });
        }
        out
    }

    fn lorentz_weight(&self) -> T {
        let r2 = self.r * self.r;
        r2 / (T::one() + r2)
    }

    fn diffusion_bracket(&self) -> DampedBracket<T> {
        DampedBracket::new(self.omega_c(), self.omega0, -self.r.recip())
    }

    fn dissipation_bracket(&self) -> DampedBracket<T> {
        DampedBracket::new(self.omega_c(), self.omega0, self.r)
    }
}

/// `f(t) = 1 − e^{−a t}[cos(b t) + c·sin(b t)]` and its integral from 0.
#[derive(Debug, Clone, Copy)]
struct DampedBracket<T> {
    a: T,
    b: T,
    c: T,
}

impl<T: Scalar> DampedBracket<T> {
    fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    fn use_series(&self, t: T) -> bool {
        self.a.hypot(self.b) * t < T::one()
    }

    /// Sums `−Σ_{k≥1} (Re z^k + c·Im z^k) t^{k+shift}/(k+shift)!` with `z = −a + ib`.
    fn series(&self, t: T, shift: usize) -> T {
        let (zr, zi) = (-self.a, self.b);
        let (mut pr, mut pi) = (T::one(), T::zero());
        // t^shift / shift!
        let mut tk = T::one();
        for j in 1..=shift {
            tk = tk * t / T::from_count(j);
        }
        let modulus = self.a.hypot(self.b);
        let weight = T::one() + self.c.abs();
        let mut bound = T::one();
        let mut sum = T::zero();
        for k in 1..200 {
            let nr = pr * zr - pi * zi;
            let ni = pr * zi + pi * zr;
            pr = nr;
            pi = ni;
            tk = tk * t / T::from_count(k + shift);
            let term = (pr + self.c * pi) * tk;
            sum = sum - term;
            // Individual terms can vanish identically, so stop on the magnitude bound instead.
            bound = bound * modulus;
            if k > 2 && weight * bound * tk <= T::epsilon() * sum.abs() {
                break;
            }
        }
        sum
    }

    fn value(&self, t: T) -> T {
        if self.use_series(t) {
            return self.series(t, 0);
        }
        let bt = self.b * t;
        T::one() - (-self.a * t).exp() * (bt.cos() + self.c * bt.sin())
    }

    fn integral(&self, t: T) -> T {
        if self.use_series(t) {
            return self.series(t, 1);
        }
        let (a, b) = (self.a, self.b);
        let norm = a * a + b * b;
        let decay = (-a * t).exp();
        let (s, c) = (b * t).sin_cos();
        let int_cos = (a - decay * (a * c - b * s)) / norm;
        let int_sin = (b - decay * (a * s + b * c)) / norm;
        t - (int_cos + self.c * int_sin)
    }
}

/// Source of diffusion `Δ(t)` and dissipation `γ(t)` coefficients.
///
/// Methods assume `t ≥ 0`; the free functions in this module validate their arguments first.
pub trait Reservoir<T: Scalar>: Send + Sync {
    fn diffusion(&self, t: T) -> T;
    fn dissipation(&self, t: T) -> T;
    /// `∫₀ᵗ Δ`.
    fn integrated_diffusion(&self, t: T) -> T;
    /// `∫₀ᵗ γ`.
    fn integrated_dissipation(&self, t: T) -> T;
    /// Long-time limits `(Δ_M, γ_M)`.
    fn markovian_rates(&self) -> (T, T);
    /// Thermal occupation of the bath at the oscillator frequency.
    fn nbar(&self) -> T;
    /// Frequency scale used for the effective temperature.
    fn omega0(&self) -> T;
    /// Stable identity of the rate model, used to key caches.
    fn fingerprint(&self) -> Vec<u64>;
}

impl<T: Scalar> Reservoir<T> for BathParams<T> {
    fn diffusion(&self, t: T) -> T {
        self.markovian_rates().0 * self.diffusion_bracket().value(t)
    }

    fn dissipation(&self, t: T) -> T {
        self.markovian_rates().1 * self.dissipation_bracket().value(t)
    }

    fn integrated_diffusion(&self, t: T) -> T {
        self.markovian_rates().0 * self.diffusion_bracket().integral(t)
    }

    fn integrated_dissipation(&self, t: T) -> T {
        self.markovian_rates().1 * self.dissipation_bracket().integral(t)
    }

    fn markovian_rates(&self) -> (T, T) {
        let w = self.lorentz_weight();
        let g2 = self.g * self.g;
        let dissipation = g2 * self.omega0 * w;
        let diffusion = T::lit(2.0) * g2 * self.nbar * self.omega0 * w;
        (diffusion, dissipation)
    }

    fn nbar(&self) -> T {
        self.nbar
    }

    fn omega0(&self) -> T {
        self.omega0
    }

    fn fingerprint(&self) -> Vec<u64> {
        vec![0, key_bits(self.g), key_bits(self.r), key_bits(self.omega0), key_bits(self.nbar)]
    }
}

/// Time-independent rates. With the averaged rates of one shutter period this is the
/// coarse-grained (measurement) description; with the Markovian limits of an Ohmic bath it is
/// the memoryless reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRates<T> {
    pub diffusion: T,
    pub dissipation: T,
    pub nbar: T,
    pub omega0: T,
}

impl<T: Scalar> ConstantRates<T> {
    /// The Markovian limit of `p`.
    pub fn markovian(p: &BathParams<T>) -> Self {
        let (diffusion, dissipation) = p.markovian_rates();
        Self {
            diffusion,
            dissipation,
            nbar: p.nbar,
            omega0: p.omega0,
        }
    }

    /// Constant rates with up/down channel weights `γ₋₁` and `γ₁`.
    pub fn from_channel_rates(down: T, up: T, nbar: T, omega0: T) -> Self {
        let half = T::lit(0.5);
        Self {
            diffusion: half * (down + up),
            dissipation: half * (down - up),
            nbar,
            omega0,
        }
    }
}

impl<T: Scalar> Reservoir<T> for ConstantRates<T> {
    fn diffusion(&self, _t: T) -> T {
        self.diffusion
    }
    fn dissipation(&self, _t: T) -> T {
        self.dissipation
    }
    fn integrated_diffusion(&self, t: T) -> T {
        self.diffusion * t
    }
    fn integrated_dissipation(&self, t: T) -> T {
        self.dissipation * t
    }
    fn markovian_rates(&self) -> (T, T) {
        (self.diffusion, self.dissipation)
    }
    fn nbar(&self) -> T {
        self.nbar
    }
    fn omega0(&self) -> T {
        self.omega0
    }
    fn fingerprint(&self) -> Vec<u64> {
        vec![
            1,
            key_bits(self.diffusion),
            key_bits(self.dissipation),
            key_bits(self.nbar),
            key_bits(self.omega0),
        ]
    }
}

pub(crate) fn check_time<T: Scalar>(t: T, what: &str) -> Result<()> {
    if t.is_finite() && t >= T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite and non-negative, got {t}")))
    }
}

pub(crate) fn check_period<T: Scalar>(tau: T) -> Result<()> {
    if tau.is_finite() && tau > T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("period tau must be finite and positive, got {tau}")))
    }
}

fn check_tol<T: Scalar>(tol: T) -> Result<()> {
    if tol.is_finite() && tol > T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Diffusion coefficient `Δ(t)` of the high-temperature Ohmic bath.
pub fn delta<T: Scalar>(t: T, p: &BathParams<T>) -> Result<T> {
    check_time(t, "time")?;
    Ok(p.diffusion(t))
}

/// Dissipation coefficient `γ(t)`.
pub fn gamma<T: Scalar>(t: T, p: &BathParams<T>) -> Result<T> {
    check_time(t, "time")?;
    Ok(p.dissipation(t))
}

/// Ohmic spectral density with Lorentz–Drude cutoff, `J(ω) = (2ω/π)·ω_c²/(ω_c² + ω²)`.
pub fn spectral_density<T: Scalar>(omega: T, p: &BathParams<T>) -> Result<T> {
    check_time(omega, "frequency")?;
    let wc2 = p.omega_c() * p.omega_c();
    Ok(T::lit(2.0) * omega * T::FRAC_1_PI() * wc2 / (wc2 + omega * omega))
}

/// Hyperbolic cotangent with dedicated small- and large-argument branches.
pub fn coth<T: Scalar>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(1e-3) {
        // 1/x + x/3 − x³/45 + 2x⁵/945
        let x2 = x * x;
        return x.recip() + x * (T::lit(1.0 / 3.0) - x2 * (T::lit(1.0 / 45.0) - x2 * T::lit(2.0 / 945.0)));
    }
    if ax > T::lit(20.0) {
        let tail = T::lit(2.0) * (T::lit(-2.0) * ax).exp();
        return x.signum() * (T::one() + tail);
    }
    x.tanh().recip()
}

/// Bath spectral distribution `I(ω) = J(ω)[n(ω) + 1/2]`.
///
/// The full form uses the thermal factor `coth(ω / 2k_BT)` with `k_BT = nbar·ω₀`, which makes
/// its high-temperature limit coincide with the `high_t` form `(2k_BT/π)·ω_c²/(ω_c² + ω²)`.
pub fn spectral_distribution<T: Scalar>(omega: T, p: &BathParams<T>, high_t: bool) -> Result<T> {
    check_time(omega, "frequency")?;
    let wc2 = p.omega_c() * p.omega_c();
    let lorentz = wc2 / (wc2 + omega * omega);
    let kt = p.nbar * p.omega0;
    if high_t {
        return Ok(T::lit(2.0) * kt * T::FRAC_1_PI() * lorentz);
    }
    if omega == T::zero() {
        return Err(Error::domain("full spectral distribution is singular at omega = 0"));
    }
    Ok(omega * T::FRAC_1_PI() * lorentz * coth(omega / (T::lit(2.0) * kt)))
}

/// Long-time limits `(Δ_M, γ_M)`.
pub fn markovian_rates<T: Scalar>(p: &BathParams<T>) -> (T, T) {
    p.markovian_rates()
}

/// How `Γ(t)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    #[default]
    ClosedForm,
    Quadrature,
}

/// `Γ(t) = 2∫₀ᵗ γ` by the closed-form antiderivative.
pub fn big_gamma<T: Scalar, R: Reservoir<T> + ?Sized>(t: T, reservoir: &R, tol: T) -> Result<T> {
    big_gamma_with(t, reservoir, tol, Integration::ClosedForm)
}

pub fn big_gamma_with<T: Scalar, R: Reservoir<T> + ?Sized>(
    t: T,
    reservoir: &R,
    tol: T,
    method: Integration,
) -> Result<T> {
    check_time(t, "time")?;
    check_tol(tol)?;
    match method {
        Integration::ClosedForm => Ok(T::lit(2.0) * reservoir.integrated_dissipation(t)),
        Integration::Quadrature => {
            let r = quadrature::integrate(
                |s| reservoir.dissipation(s),
                T::zero(),
                t,
                &QuadratureOptions::relative(tol),
            )?;
            Ok(T::lit(2.0) * r.value)
        }
    }
}

/// ODE settings used for `Δ_Γ` at relative tolerance `tol`. The absolute tolerance never drops
/// below machine epsilon of `T`.
pub fn ivp_options<T: Scalar>(tol: T) -> OdeOptions<T> {
    OdeOptions::new(tol, (tol * T::lit(1e-4)).max(T::epsilon()))
}

/// `Γ` and `Δ_Γ` sampled together at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals<T> {
    pub t: T,
    pub big_gamma: T,
    pub delta_big_gamma: T,
}

/// `Δ_Γ(t) = e^{−Γ(t)}∫₀ᵗ e^{Γ(s)}Δ(s) ds`, via `dΔ_Γ/dt = Δ − 2γΔ_Γ`, `Δ_Γ(0) = 0`.
pub fn delta_big_gamma<T: Scalar, R: Reservoir<T> + ?Sized>(t: T, reservoir: &R, tol: T) -> Result<T> {
    Ok(integrals_at(&[t], reservoir, tol)?[0].delta_big_gamma)
}

/// `Γ` and `Δ_Γ` at each of `times` (non-decreasing) from one sweep of the IVP.
pub fn integrals_at<T: Scalar, R: Reservoir<T> + ?Sized>(
    times: &[T],
    reservoir: &R,
    tol: T,
) -> Result<Vec<Integrals<T>>> {
    check_tol(tol)?;
    for &t in times {
        check_time(t, "time")?;
    }
    let mut out = Vec::with_capacity(times.len());
    let two = T::lit(2.0);
    ode::integrate(
        |s, y: &[T], dy: &mut [T]| dy[0] = reservoir.diffusion(s) - two * reservoir.dissipation(s) * y[0],
        T::zero(),
        &[T::zero()],
        times,
        &ivp_options(tol),
        |s, y| {
            out.push(Integrals {
                t: s,
                big_gamma: two * reservoir.integrated_dissipation(s),
                delta_big_gamma: y[0],
            });
            Ok(())
        },
    )?;
    Ok(out)
}

/// Period-averaged channel rates `(γ₁(τ), γ₋₁(τ)) = (1/τ)∫₀^τ (Δ ± γ)`.
pub fn averaged_rates<T: Scalar, R: Reservoir<T> + ?Sized>(tau: T, reservoir: &R, tol: T) -> Result<(T, T)> {
    check_period(tau)?;
    check_tol(tol)?;
    let d = reservoir.integrated_diffusion(tau) / tau;
    let g = reservoir.integrated_dissipation(tau) / tau;
    Ok((d + g, d - g))
}

/// Sampled `Δ(t)` and `γ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrace<T> {
    pub times: Vec<T>,
    pub delta: Vec<T>,
    pub gamma: Vec<T>,
}

impl<T: Scalar> CoefficientTrace<T> {
    pub fn sample(times: &[T], p: &BathParams<T>) -> Result<Self> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("coefficient trace times must be strictly increasing"));
        }
        let delta = times.iter().map(|&t| delta(t, p)).collect::<Result<Vec<_>>>()?;
        let gamma = times.iter().map(|&t| gamma(t, p)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            delta,
            gamma,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn min_delta_minus_gamma(&self) -> Option<T> {
        self.delta
            .iter()
            .zip(&self.gamma)
            .map(|(&d, &g)| d - g)
            .reduce(|a, b| a.min(b))
    }

    /// CSV columns `t, delta, gamma, delta_plus_gamma, delta_minus_gamma`, with `t` multiplied by `time_unit`.
    pub fn write_csv<W: std::io::Write>(&self, time_unit: T, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "delta", "gamma", "delta_plus_gamma", "delta_minus_gamma"])?;
        for ((&t, &d), &g) in self.times.iter().zip(&self.delta).zip(&self.gamma) {
            w.write_record([
                (t * time_unit).as_f64().to_string(),
                d.as_f64().to_string(),
                g.as_f64().to_string(),
                (d + g).as_f64().to_string(),
                (d - g).as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
