//! Globally adaptive Gauss–Kronrod (7, 15) quadrature, in linear and in
//! log-magnitude form.
//!
//! The log-magnitude form integrates `exp(g(x))` and returns `ln ∫ exp(g)`
//! without ever forming the integrand itself, so integrands of size `e^{10^5}`
//! are handled as easily as those of size one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute and relative accuracy targets; the looser of the two wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0, max_intervals: 4000 }
    }

    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel, max_intervals: 4000 }
    }

    pub fn with_rel(mut self, rel: f64) -> Self {
        self.rel = rel;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Result of a log-magnitude integration: `ln_value = ln ∫ exp(g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEstimate {
    pub ln_value: f64,
    /// Relative error estimate of `exp(ln_value)`.
    pub rel_error: f64,
}

impl LogEstimate {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

struct Panel {
    a: f64,
    b: f64,
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

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn splittable(a: f64, b: f64) -> bool {
    let mid = 0.5 * (a + b);
    mid > a && mid < b && (b - a) > 1e-15 * (a.abs() + b.abs()).max(1e-300)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[breaks[0], breaks[last]]` starting from the given
/// partition. Breakpoints should sit on kinks or on features of the integrand.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    let mut settled_value = 0.0;
    let mut settled_error = 0.0;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    while error > tol.target(value) {
        if !value.is_finite() || error.is_nan() {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if !splittable(worst.a, worst.b) {
            settled_value += worst.value;
            settled_error += worst.error;
            // Nothing left that can still improve.
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if heap.len() + 2 > tol.max_intervals {
            return Err(Error::QuadratureNonConvergence { tol: tol.target(value), error });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Resum to shed the drift of the running updates.
    let value = settled_value + heap.iter().map(|p| p.value).sum::<f64>();
    let error = settled_error + heap.iter().map(|p| p.error).sum::<f64>();
    if !value.is_finite() {
        return Err(Error::QuadratureNonConvergence { tol: tol.target(0.0), error: f64::INFINITY });
    }
    if error > tol.target(value) * 10.0 && error > 1e-14 * value.abs() {
        return Err(Error::QuadratureNonConvergence { tol: tol.target(value), error });
    }
    Ok(Estimate { value, error, evaluations })
}

/// `ln(e^x + e^y)` without overflow.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

fn gk15_log<F: FnMut(f64) -> f64>(g: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes = [0.0f64; 15];
    nodes[0] = g(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        nodes[1 + 2 * j] = g(center - dx);
        nodes[2 + 2 * j] = g(center + dx);
    }
    let shift = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let e = |x: f64| (x - shift).exp();
    let mut kronrod = WGK[7] * e(nodes[0]);
    let mut gauss = WG[3] * e(nodes[0]);
    for j in 0..7 {
        let pair = e(nodes[1 + 2 * j]) + e(nodes[2 + 2 * j]);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let ln_half = half.ln();
    let ln_value = shift + ln_half + kronrod.ln();
    let diff = (kronrod - gauss).abs();
    let ln_error = if diff > 0.0 { shift + ln_half + diff.ln() } else { f64::NEG_INFINITY };
    (ln_value, ln_error)
}

fn log_sum(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, log_add_exp)
}

/// Computes `ln ∫ exp(g(x)) dx` over the partition `breaks` to relative
/// accuracy `rel_tol`. `g` may return `-inf` where the integrand vanishes.
pub fn log_integrate<F: FnMut(f64) -> f64>(
    mut g: F,
    breaks: &[f64],
    rel_tol: f64,
) -> Result<LogEstimate> {
    const MAX_PANELS: usize = 6000;
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15_log(&mut g, w[0], w[1]);
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let mut settled: Vec<Panel> = Vec::new();
    let ln_tol = rel_tol.ln();
    loop {
        let total = log_sum(heap.iter().chain(settled.iter()).map(|p| p.value));
        if total == f64::NEG_INFINITY {
            return Ok(LogEstimate { ln_value: total, rel_error: 0.0 });
        }
        let err = log_sum(heap.iter().chain(settled.iter()).map(|p| p.error));
        if err <= total + ln_tol || heap.is_empty() {
            if !total.is_finite() {
                return Err(Error::QuadratureNonConvergence { tol: rel_tol, error: f64::INFINITY });
            }
            let rel_error = (err - total).exp();
            if rel_error > 10.0 * rel_tol && rel_error > 1e-13 {
                return Err(Error::QuadratureNonConvergence { tol: rel_tol, error: rel_error });
            }
            return Ok(LogEstimate { ln_value: total, rel_error });
        }
        if heap.len() + settled.len() > MAX_PANELS {
            return Err(Error::QuadratureNonConvergence {
                tol: rel_tol,
                error: (err - total).exp(),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        if !splittable(worst.a, worst.b) {
            settled.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15_log(&mut g, worst.a, mid);
        let (v2, e2) = gk15_log(&mut g, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Partition of `[a, b]` refined geometrically toward both ends
/// (`a + {0, ½, 1, 2, 4, …}` and the mirror image from `b`), so features that
/// hug an endpoint of a very long interval are seen by the first sweep.
pub fn graded_breaks(a: f64, b: f64) -> Vec<f64> {
    let len = b - a;
    if !(len > 2.0) {
        return vec![a, b];
    }
    let mut left = vec![a];
    let mut right = vec![b];
    let mut d = 0.5;
    while 2.0 * d < len {
        left.push(a + d);
        right.push(b - d);
        d *= 2.0;
    }
    right.reverse();
    left.extend(right);
    left
}
