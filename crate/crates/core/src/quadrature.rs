//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest local error estimate is bisected until the summed estimate
//! drops below `max(rel_tol * |I|, abs_tol)` or the evaluation budget is exhausted. The local
//! error estimate is the plain difference between the Kronrod and embedded Gauss sums, which is
//! pessimistic for smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const EVALS_PER_PANEL: usize = 15;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Budget on integrand evaluations.
    pub max_evals: usize,
}

impl<T: Scalar> QuadratureOptions<T> {
    pub fn relative(rel_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol: T::zero(),
            max_evals: 1_000_000,
        }
    }
}

impl<T: Scalar> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self::relative(T::lit(1e-10))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Panel<T> {}
impl<T: Scalar> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.as_f64().total_cmp(&other.error.as_f64())
    }
}

fn gauss_kronrod<T: Scalar, F: Fn(T) -> T>(f: &F, lo: T, hi: T) -> Panel<T> {
    let half = (hi - lo) * T::lit(0.5);
    let mid = lo + half;
    let centre = f(mid);
    let mut kronrod = centre * T::lit(WGK[7]);
    let mut gauss = centre * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * T::lit(x);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod = kronrod + pair * T::lit(w);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]`. A reversed interval flips the sign.
pub fn integrate<T, F>(f: F, lo: T, hi: T, opts: &QuadratureOptions<T>) -> Result<QuadratureResult<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if !(opts.rel_tol > T::zero() || opts.abs_tol > T::zero()) {
        return Err(Error::domain("quadrature needs a positive tolerance"));
    }
    if lo == hi {
        return Ok(QuadratureResult {
            value: T::zero(),
            error: T::zero(),
            evals: 0,
        });
    }
    if hi < lo {
        let r = integrate(f, hi, lo, opts)?;
        return Ok(QuadratureResult {
            value: -r.value,
            ..r
        });
    }

    let first = gauss_kronrod(&f, lo, hi);
    let mut evals = EVALS_PER_PANEL;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let target = |v: T| (opts.rel_tol * v.abs()).max(opts.abs_tol);
    while error > target(value) {
        if evals + 2 * EVALS_PER_PANEL > opts.max_evals {
            return Err(Error::Convergence {
                routine: "adaptive quadrature",
                estimate: value.as_f64(),
                achieved: error.as_f64(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = (worst.lo + worst.hi) * T::lit(0.5);
        if !(mid > worst.lo && mid < worst.hi) {
            // Interval cannot be split further in this precision.
            return Err(Error::Convergence {
                routine: "adaptive quadrature",
                estimate: value.as_f64(),
                achieved: error.as_f64(),
            });
        }
        let left = gauss_kronrod(&f, worst.lo, mid);
        let right = gauss_kronrod(&f, mid, worst.hi);
        evals += 2 * EVALS_PER_PANEL;
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally so the running error does not drift through cancellation.
        if heap.len() % 64 == 0 {
            value = heap.iter().fold(T::zero(), |s, p| s + p.value);
            error = heap.iter().fold(T::zero(), |s, p| s + p.error);
        }
    }
    Ok(QuadratureResult {
        value,
        error,
        evals,
    })
}
