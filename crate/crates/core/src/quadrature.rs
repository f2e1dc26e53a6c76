//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Adaptive integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    /// Target for the summed error estimate over all panels.
    pub abs_tol: f64,
    /// Subdivision budget.
    pub max_panels: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_panels: 1 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { lo, hi, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Single-panel 15-point Kronrod estimate and its embedded Gauss error bound.
pub(crate) fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let p = gauss_kronrod(f, lo, hi);
    (p.value, p.error)
}

impl Integrator {
    pub fn with_tolerance(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    /// Integrates `f` over `[a, b]`, seeding the subdivision at `breakpoints`
    /// (points outside `(a, b)` are ignored).
    ///
    /// The integrand is never evaluated at the endpoints, so integrable
    /// endpoint singularities are tolerated, although convergence is only
    /// fast for bounded integrands.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<Integral> {
        if a == b {
            return Ok(Integral { value: 0.0, error: 0.0, panels: 0 });
        }
        if a.partial_cmp(&b) != Some(Ordering::Less) {
            return Err(Error::Domain { name: "a", value: a, reason: "lower limit exceeds upper limit" });
        }
        let mut edges = vec![a];
        let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        edges.extend(inner);
        edges.push(b);

        let mut heap = BinaryHeap::new();
        let mut settled = Vec::new();
        let mut error: f64 = 0.0;
        for w in edges.windows(2) {
            let panel = gauss_kronrod(&f, w[0], w[1]);
            error += panel.error;
            heap.push(panel);
        }

        while error > self.abs_tol {
            if heap.len() + settled.len() >= self.max_panels {
                return Err(Error::NonConvergence { tol: self.abs_tol, panels: self.max_panels, error });
            }
            let Some(worst) = heap.pop() else {
                return Err(Error::NonConvergence { tol: self.abs_tol, panels: settled.len(), error });
            };
            let mid = 0.5 * (worst.lo + worst.hi);
            if !(mid > worst.lo && mid < worst.hi) {
                // cannot be split further in floating point
                settled.push(worst);
                continue;
            }
            let left = gauss_kronrod(&f, worst.lo, mid);
            let right = gauss_kronrod(&f, mid, worst.hi);
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
        }

        let mut panels: Vec<Panel> = heap.into_vec();
        panels.extend(settled);
        panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let value = crate::sum::neumaier(panels.iter().map(|p| p.value));
        let error = panels.iter().map(|p| p.error).sum();
        Ok(Integral { value, error, panels: panels.len() })
    }
}
