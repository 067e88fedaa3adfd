//! Radial initial value problem `−u'' − u'/r = f(u)`, `u(0) = a`, `u'(0) = 0`.
//!
//! The equation is integrated in the log-radius `t = ln r`, where it reads
//! `u_tt = −e^{2t} f(u)`. The forcing `e^{2t} f(u)` is assembled as a single
//! log-magnitude, so concentrated profiles with `u(0)` in the thousands (whose
//! first zero sits at radii like `e^{−10⁵}`) are integrated without overflow.
//! The singular origin is left through the series
//! `u = a − f(a) r²/4 + f'(a) f(a) r⁴/64`.
//!
//! Stepping uses the Dormand–Prince 5(4) pair with a pure absolute error
//! control on `(u, r u')`, quintic Hermite dense output, and bracketed event
//! location for zeros of `u` and of `u'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{clip_breaks, RadialField};
use crate::nonlinearity::{Family, NonlinearityParams, DEFAULT_GUARD};
use crate::quadrature::graded_breaks;

/// Right-hand side of the radial equation.
///
/// `Linear` and `Zero` are test hooks with closed-form solutions
/// (`a·J₀(√λ r)` and the constant `a`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Nonlinear(NonlinearityParams),
    Linear { lambda: f64 },
    Zero,
}

impl From<NonlinearityParams> for Source {
    fn from(p: NonlinearityParams) -> Self {
        Source::Nonlinear(p)
    }
}

impl Source {
    pub fn params(&self) -> Option<&NonlinearityParams> {
        match self {
            Source::Nonlinear(p) => Some(p),
            _ => None,
        }
    }

    fn guard(&self) -> f64 {
        match self {
            Source::Nonlinear(p) => p.guard(),
            _ => DEFAULT_GUARD,
        }
    }

    /// `ln |f(u)|`, `-inf` where `f` vanishes.
    fn ln_abs_f(&self, u: f64) -> f64 {
        match self {
            Source::Nonlinear(p) => p.ln_abs_f(u),
            Source::Linear { lambda } => lambda.ln() + u.abs().ln(),
            Source::Zero => f64::NEG_INFINITY,
        }
    }

    fn ln_f_prime(&self, u: f64) -> f64 {
        match self {
            Source::Nonlinear(p) => p.ln_f_prime(u),
            Source::Linear { lambda } => lambda.ln(),
            Source::Zero => f64::NEG_INFINITY,
        }
    }

    /// `e^{2t} f(u)`, the forcing in log-radius.
    pub fn forcing(&self, log_r: f64, u: f64) -> Result<f64> {
        let ln = 2.0 * log_r + self.ln_abs_f(u);
        if ln == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let guard = self.guard();
        if ln > guard || ln.is_nan() {
            return Err(Error::OverflowGuard { exponent: ln, guard });
        }
        Ok(ln.exp().copysign(u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Zero,
    Extremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub log_radius: f64,
    pub kind: EventKind,
}

impl Event {
    pub fn radius(&self) -> f64 {
        self.log_radius.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileStatus {
    Complete,
    /// Integration stopped early; the profile covers `[0, e^{log_r_max}]`.
    Aborted(Error),
}

/// `u(r) = a − c₂ r² + c₄ r⁴` near the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OriginSeries {
    amplitude: f64,
    ln_abs_f: f64,
    f_sign: f64,
    ln_f_prime: f64,
}

impl OriginSeries {
    fn new(source: &Source, a: f64) -> Self {
        Self {
            amplitude: a,
            ln_abs_f: source.ln_abs_f(a),
            f_sign: if a < 0.0 { -1.0 } else { 1.0 },
            ln_f_prime: source.ln_f_prime(a),
        }
    }

    /// `(f(a) r², f'(a) r²)`.
    fn scaled(&self, log_r: f64) -> (f64, f64) {
        let q = self.f_sign * (2.0 * log_r + self.ln_abs_f).exp();
        let p = (2.0 * log_r + self.ln_f_prime).exp();
        (q, p)
    }

    fn value(&self, log_r: f64) -> f64 {
        let (q, p) = self.scaled(log_r);
        self.amplitude - q / 4.0 + p * q / 64.0
    }

    fn slope(&self, log_r: f64) -> f64 {
        let (q, p) = self.scaled(log_r);
        -q / 2.0 + p * q / 16.0
    }

    /// Start of the numerical integration: the dropped `r⁶` term is bounded
    /// by `η³|a|/768` with `η = f'(a) r²`.
    fn start(&self, tol: f64) -> f64 {
        if self.ln_f_prime == f64::NEG_INFINITY {
            return -30.0;
        }
        let eta = (77.0 * tol / self.amplitude.abs().max(1.0)).cbrt().min(1e-2);
        0.5 * (eta.ln() - self.ln_f_prime)
    }
}

/// Dense trajectory of the radial equation.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    source: Source,
    amplitude: f64,
    tol: f64,
    origin: OriginSeries,
    log_r: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    accels: Vec<f64>,
    events: Vec<Event>,
    status: ProfileStatus,
}

/// Dormand–Prince 5(4) tableau.
mod dopri {
    pub const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    pub const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    /// Fifth-order weights minus the embedded fourth-order weights.
    pub const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
}

const MAX_STEPS: usize = 2_000_000;

/// Per-step error budget as a fraction of `tol`, so that the accumulated error
/// at `r_max` stays below `tol` as well.
const LOCAL_SAFETY: f64 = 0.1;

/// Integrates from the origin with `u(0) = a` up to `r_max`.
///
/// Requires `r_max ∈ (0, 1]` and `tol ∈ [1e-12, 1e-4]`. Failures during the
/// integration (overflow guard, step-size collapse) do not error: the profile
/// is returned truncated with [`ProfileStatus::Aborted`].
pub fn integrate(a: f64, source: impl Into<Source>, r_max: f64, tol: f64) -> Result<RadialProfile> {
    let source = source.into();
    if !(r_max > 0.0 && r_max <= 1.0) {
        return Err(Error::InvalidParams(format!("r_max must lie in (0, 1], got {r_max}")));
    }
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::InvalidParams(format!("tol must lie in [1e-12, 1e-4], got {tol}")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParams(format!("amplitude must be finite, got {a}")));
    }
    if let Source::Linear { lambda } = source {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("hook lambda must be positive, got {lambda}")));
        }
    }
    Ok(Integrator::new(a, source, r_max.ln(), tol).run())
}

/// Exact `(s, e)` with `s + e = a + b`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Reference point for the forcing exponent.
///
/// The log-radius is carried as `t_b + τ` and the solution as `u_b + w`, both
/// renormalized exactly. The exponent `2t + ln λ + ln|u| + E(u)` is evaluated
/// as `2τ + K + [ln|u| − ln|u_b|] + [E(u) − E(u_b)]`, where the constant `K`
/// is summed so that the huge terms `2t_b` and `u_b²` cancel exactly. With
/// `u(0)` in the thousands both are near `10⁸`, and naive evaluation would
/// lose eight digits of the forcing inside the concentrated core.
#[derive(Debug, Clone, Copy)]
struct Frame {
    t_b: f64,
    u_b: f64,
    k: f64,
    /// Whether the bracketed differences are taken relative to `u_b`.
    relative: bool,
}

impl Frame {
    fn new(source: &Source, t_b: f64, u_b: f64) -> Self {
        match source {
            Source::Nonlinear(p) if u_b.abs() >= 1.0 => {
                let a = u_b.abs();
                let (sq_hi, sq_lo) = match p.family() {
                    Family::MtPlus => {
                        let hi = a * a;
                        (hi, a.mul_add(a, -hi))
                    }
                    Family::MtSub => (0.0, 0.0),
                };
                let mid = a.powf(power(p));
                let lo = sq_lo + p.lambda().ln() + a.ln();
                let k = ((2.0 * t_b + sq_hi) + mid) + lo;
                Self { t_b, u_b, k, relative: true }
            }
            Source::Nonlinear(p) => Self { t_b, u_b, k: 2.0 * t_b + p.lambda().ln(), relative: false },
            Source::Linear { lambda } => Self { t_b, u_b, k: 2.0 * t_b + lambda.ln(), relative: false },
            Source::Zero => Self { t_b, u_b, k: f64::NEG_INFINITY, relative: false },
        }
    }

    /// Forcing exponent at `(t_b + τ, u_b + w)`.
    fn exponent(&self, source: &Source, tau: f64, w: f64) -> f64 {
        let u = self.u_b + w;
        match source {
            Source::Zero => f64::NEG_INFINITY,
            Source::Linear { .. } => 2.0 * tau + self.k + u.abs().ln(),
            Source::Nonlinear(p) if !self.relative => 2.0 * tau + self.k + u.abs().ln() + p.exponent(u),
            Source::Nonlinear(p) => {
                let x = w / self.u_b;
                let a = self.u_b.abs();
                let pw = power(p);
                let (ln_ratio, d_e) = if x.abs() <= 0.5 {
                    let l = x.ln_1p();
                    let sq = match p.family() {
                        Family::MtPlus => (2.0 * self.u_b + w) * w,
                        Family::MtSub => 0.0,
                    };
                    (l, sq + a.powf(pw) * (pw * l).exp_m1())
                } else {
                    let e_b = match p.family() {
                        Family::MtPlus => a * a + a.powf(pw),
                        Family::MtSub => a.powf(pw),
                    };
                    (u.abs().ln() - a.ln(), p.exponent(u) - e_b)
                };
                2.0 * tau + self.k + ln_ratio + d_e
            }
        }
    }
}

fn power(p: &NonlinearityParams) -> f64 {
    match p.family() {
        Family::MtPlus => 1.0 + p.eps(),
        Family::MtSub => 2.0 - p.eps(),
    }
}

/// Rebase when the offsets grow past these sizes.
const TAU_SPAN: f64 = 16.0;
const W_SPAN: f64 = 0.25;

struct Integrator {
    source: Source,
    tol: f64,
    t_end: f64,
    frame: Frame,
    profile: RadialProfile,
}

impl Integrator {
    fn new(a: f64, source: Source, t_end: f64, tol: f64) -> Self {
        let origin = OriginSeries::new(&source, a);
        let profile = RadialProfile {
            source,
            amplitude: a,
            tol,
            origin,
            log_r: Vec::new(),
            values: Vec::new(),
            slopes: Vec::new(),
            accels: Vec::new(),
            events: Vec::new(),
            status: ProfileStatus::Complete,
        };
        let frame = Frame::new(&source, 0.0, a);
        Self { source, tol, t_end, frame, profile }
    }

    /// `(dw/dτ, dv/dτ)` in the current frame.
    fn rhs(&self, tau: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        let ln = self.frame.exponent(&self.source, tau, y[0]);
        if ln == f64::NEG_INFINITY {
            return Ok([y[1], 0.0]);
        }
        let guard = self.source.guard();
        if ln > guard || ln.is_nan() {
            return Err(Error::OverflowGuard { exponent: ln, guard });
        }
        let u = self.frame.u_b + y[0];
        Ok([y[1], -ln.exp().copysign(u)])
    }

    /// Moves the frame to the current point; returns the new `(τ, w)`.
    fn rebase(&mut self, tau: f64, w: f64) -> (f64, f64) {
        let (t_b, tau) = if tau.abs() > TAU_SPAN { two_sum(self.frame.t_b, tau) } else { (self.frame.t_b, tau) };
        let (u_b, w) = if w.abs() > W_SPAN * self.frame.u_b.abs().max(1.0) {
            two_sum(self.frame.u_b, w)
        } else {
            (self.frame.u_b, w)
        };
        if t_b != self.frame.t_b || u_b != self.frame.u_b {
            self.frame = Frame::new(&self.source, t_b, u_b);
        }
        (tau, w)
    }

    fn run(mut self) -> RadialProfile {
        let origin = self.profile.origin;
        let t0 = origin.start(self.tol).min(self.t_end - 1.0);
        self.frame = Frame::new(&self.source, t0, self.profile.amplitude);
        let (q, p) = origin.scaled(t0);
        let mut tau = 0.0;
        let mut y = [-q / 4.0 + p * q / 64.0, origin.slope(t0)];
        let mut k1 = match self.rhs(tau, y) {
            Ok(k) => k,
            Err(e) => {
                self.profile.status = ProfileStatus::Aborted(e);
                return self.profile;
            }
        };
        self.push_node(tau, y, k1[1]);
        let mut h: f64 = 1e-2;
        let mut steps = 0usize;
        let mut last_failure: Option<Error> = None;

        loop {
            let remaining = (self.t_end - self.frame.t_b) - tau;
            if remaining <= 0.0 {
                break;
            }
            let t = self.frame.t_b + tau;
            steps += 1;
            if steps > MAX_STEPS {
                self.profile.status =
                    ProfileStatus::Aborted(Error::Stiffness(format!("step budget exhausted at t = {t}")));
                break;
            }
            let h_min = 16.0 * f64::EPSILON * tau.abs().max(1.0);
            if h < h_min {
                let err = match last_failure.take() {
                    Some(e @ Error::OverflowGuard { .. }) => e,
                    _ => Error::StepSizeUnderflow { log_radius: t },
                };
                self.profile.status = ProfileStatus::Aborted(err);
                break;
            }
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            match self.try_step(tau, y, k1, step) {
                Ok((y_new, k_new, err)) => {
                    if err <= 1.0 {
                        let tau_new = tau + step;
                        let t_new = if last { self.t_end } else { self.frame.t_b + tau_new };
                        let u_b = self.frame.u_b;
                        self.locate_events(
                            t,
                            [u_b + y[0], y[1]],
                            k1[1],
                            t_new,
                            [u_b + y_new[0], y_new[1]],
                            k_new[1],
                        );
                        tau = tau_new;
                        y = y_new;
                        k1 = k_new;
                        if last {
                            self.push_final(y, k1[1]);
                            break;
                        }
                        self.push_node(tau, y, k1[1]);
                        let (tau_r, w_r) = self.rebase(tau, y[0]);
                        tau = tau_r;
                        y[0] = w_r;
                        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        h = step * factor;
                        last_failure = None;
                    } else {
                        h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    }
                }
                Err(e) => {
                    h = step * 0.25;
                    last_failure = Some(e);
                }
            }
        }
        self.profile
    }

    fn push_node(&mut self, tau: f64, y: [f64; 2], accel: f64) {
        self.profile.log_r.push(self.frame.t_b + tau);
        self.profile.values.push(self.frame.u_b + y[0]);
        self.profile.slopes.push(y[1]);
        self.profile.accels.push(accel);
    }

    fn push_final(&mut self, y: [f64; 2], accel: f64) {
        self.profile.log_r.push(self.t_end);
        self.profile.values.push(self.frame.u_b + y[0]);
        self.profile.slopes.push(y[1]);
        self.profile.accels.push(accel);
    }

    /// One Dormand–Prince step; returns the new state, its derivative (FSAL)
    /// and the scaled error norm.
    fn try_step(&self, t: f64, y: [f64; 2], k1: [f64; 2], h: f64) -> Result<([f64; 2], [f64; 2], f64)> {
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = dopri::A[s][j];
                if a != 0.0 {
                    ys[0] += h * a * kj[0];
                    ys[1] += h * a * kj[1];
                }
            }
            if s == 6 {
                // Row 6 is the fifth-order solution itself.
                k[6] = self.rhs(t + h, ys)?;
                let mut err = [0.0; 2];
                for (j, kj) in k.iter().enumerate() {
                    err[0] += dopri::E[j] * kj[0];
                    err[1] += dopri::E[j] * kj[1];
                }
                let norm = (h * err[0]).abs().max((h * err[1]).abs()) / (LOCAL_SAFETY * self.tol);
                if !ys[0].is_finite() || !ys[1].is_finite() || norm.is_nan() {
                    return Err(Error::StepSizeUnderflow { log_radius: self.frame.t_b + t });
                }
                return Ok((ys, k[6], norm));
            }
            k[s] = self.rhs(t + dopri::C[s] * h, ys)?;
        }
        unreachable!("seven stages always reach the final row")
    }

    fn locate_events(&mut self, t0: f64, y0: [f64; 2], a0: f64, t1: f64, y1: [f64; 2], a1: f64) {
        let seg = Hermite { t0, h: t1 - t0, u0: y0[0], v0: y0[1], a0, u1: y1[0], v1: y1[1], a1 };
        const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        for kind in [EventKind::Zero, EventKind::Extremum] {
            let eval = |s: f64| match kind {
                EventKind::Zero => seg.value_s(s),
                EventKind::Extremum => seg.slope_s(s),
            };
            let mut found = Vec::new();
            for w in PROBES.windows(2) {
                let (fa, fb) = (eval(w[0]), eval(w[1]));
                if fa == 0.0 && w[0] > 0.0 {
                    found.push(w[0]);
                } else if fa * fb < 0.0 {
                    found.push(seg.root(kind, w[0], w[1]));
                }
            }
            for s in found {
                self.profile.events.push(Event { log_radius: seg.t0 + s * seg.h, kind });
            }
        }
        self.profile.events.sort_by(|a, b| a.log_radius.total_cmp(&b.log_radius));
    }
}

/// Quintic Hermite interpolant on one step, parametrized by `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Hermite {
    t0: f64,
    h: f64,
    u0: f64,
    v0: f64,
    a0: f64,
    u1: f64,
    v1: f64,
    a1: f64,
}

impl Hermite {
    fn value_s(&self, s: f64) -> f64 {
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * (s3 - 2.0 * s4 + s5);
        let h = self.h;
        // Written around the nearer endpoint to keep cancellation small.
        if s <= 0.5 {
            self.u0
                + h3 * (self.u1 - self.u0)
                + h * (h1 * self.v0 + h4 * self.v1)
                + h * h * (h2 * self.a0 + h5 * self.a1)
        } else {
            self.u1
                - h0 * (self.u1 - self.u0)
                + h * (h1 * self.v0 + h4 * self.v1)
                + h * h * (h2 * self.a0 + h5 * self.a1)
        }
    }

    fn slope_s(&self, s: f64) -> f64 {
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
        let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
        let h = self.h;
        // d3 = −d0
        (d0 * (self.u0 - self.u1)) / h + d1 * self.v0 + d4 * self.v1 + h * (d2 * self.a0 + d5 * self.a1)
    }

    fn accel_s(&self, s: f64) -> f64 {
        let (s2, s3) = (s * s, s * s * s);
        let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
        let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
        let e2 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
        let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
        let e5 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
        let h = self.h;
        (e0 * (self.u0 - self.u1)) / (h * h) + (e1 * self.v0 + e4 * self.v1) / h + e2 * self.a0 + e5 * self.a1
    }

    /// Bisection on `[sa, sb]` down to `1e-12` in log-radius (or a few ulps),
    /// then one Newton polish.
    fn root(&self, kind: EventKind, mut sa: f64, mut sb: f64) -> f64 {
        let (f, df): (&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64) = match kind {
            EventKind::Zero => (&|s| self.value_s(s), &|s| self.slope_s(s) * self.h),
            EventKind::Extremum => (&|s| self.slope_s(s), &|s| self.accel_s(s) * self.h),
        };
        let t_scale = self.t0.abs().max(1.0);
        let s_tol = (1e-12f64).max(4.0 * f64::EPSILON * t_scale) / self.h.abs();
        let mut fa = f(sa);
        for _ in 0..200 {
            if sb - sa <= s_tol {
                break;
            }
            let mid = 0.5 * (sa + sb);
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if fa * fm < 0.0 {
                sb = mid;
            } else {
                sa = mid;
                fa = fm;
            }
        }
        let s = 0.5 * (sa + sb);
        let d = df(s);
        if d != 0.0 && d.is_finite() {
            let polished = s - f(s) / d;
            if polished >= sa - s_tol && polished <= sb + s_tol && f(polished).abs() <= f(s).abs() {
                return polished.clamp(0.0, 1.0);
            }
        }
        s
    }
}

impl RadialProfile {
    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn status(&self) -> &ProfileStatus {
        &self.status
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.status, ProfileStatus::Complete)
    }

    /// Log-radii of the stored nodes; the origin itself is implicit.
    pub fn log_radii(&self) -> &[f64] {
        &self.log_r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `r·u'(r)` at the stored nodes.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Node radii including the origin as node 0. Radii below the smallest
    /// positive double read as 0; use [`Self::log_radii`] for those.
    pub fn radii(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.log_r.iter().map(|t| t.exp())).collect()
    }

    /// `u'(r)` at [`Self::radii`]; zero at the origin.
    pub fn derivatives(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.log_r.iter().zip(&self.slopes).map(|(t, v)| v * (-t).exp()))
            .collect()
    }

    pub fn log_start(&self) -> f64 {
        self.log_r[0]
    }

    /// Log-radius of the last node.
    pub fn log_end(&self) -> f64 {
        *self.log_r.last().expect("profile has at least one node")
    }

    pub fn zero_log_radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(|e| e.kind == EventKind::Zero).map(|e| e.log_radius)
    }

    pub fn extremum_log_radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(|e| e.kind == EventKind::Extremum).map(|e| e.log_radius)
    }

    fn segment(&self, log_r: f64) -> Option<Hermite> {
        if log_r < self.log_r[0] || self.log_r.len() < 2 {
            return None;
        }
        let n = self.log_r.len();
        let i = self.log_r.partition_point(|&t| t <= log_r).clamp(1, n - 1) - 1;
        Some(Hermite {
            t0: self.log_r[i],
            h: self.log_r[i + 1] - self.log_r[i],
            u0: self.values[i],
            v0: self.slopes[i],
            a0: self.accels[i],
            u1: self.values[i + 1],
            v1: self.slopes[i + 1],
            a1: self.accels[i + 1],
        })
    }

    /// `u` at log-radius `t`; the origin series is used below the first node.
    pub fn value_at_log(&self, log_r: f64) -> f64 {
        match self.segment(log_r) {
            Some(seg) => seg.value_s(((log_r - seg.t0) / seg.h).clamp(0.0, 1.0)),
            None if log_r < self.log_r[0] => self.origin.value(log_r),
            None => self.values[0],
        }
    }

    /// `r·u'(r)` at log-radius `t`.
    pub fn slope_at_log(&self, log_r: f64) -> f64 {
        match self.segment(log_r) {
            Some(seg) => seg.slope_s(((log_r - seg.t0) / seg.h).clamp(0.0, 1.0)),
            None if log_r < self.log_r[0] => self.origin.slope(log_r),
            None => self.slopes[0],
        }
    }

    pub fn value_at(&self, r: f64) -> f64 {
        if r == 0.0 {
            self.amplitude
        } else {
            self.value_at_log(r.ln())
        }
    }

    /// `u'(r)`.
    pub fn derivative_at(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.slope_at_log(r.ln()) / r
        }
    }
}

impl RadialField for RadialProfile {
    fn value(&self, log_r: f64) -> f64 {
        self.value_at_log(log_r)
    }

    fn slope(&self, log_r: f64) -> f64 {
        self.slope_at_log(log_r)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let start = self.log_start();
        let mut points: Vec<f64> = self.log_r.clone();
        if lo < start {
            points.extend(graded_breaks(lo.max(self.floor()), start));
        }
        points.extend(self.events.iter().map(|e| e.log_radius));
        clip_breaks(lo, hi, points)
    }

    fn floor(&self) -> f64 {
        self.log_start() - 40.0
    }
}

/// Number of zeros in `(0, r_end)` together with `u(r_end)` and `u'(r_end)`.
pub fn zero_count(profile: &RadialProfile) -> Result<(usize, f64, f64)> {
    if let ProfileStatus::Aborted(e) = profile.status() {
        return Err(Error::AbortedProfile(e.to_string()));
    }
    let t_end = profile.log_end();
    let count = profile.zero_log_radii().filter(|&t| t < t_end).count();
    let u = *profile.values.last().expect("non-empty profile");
    let du = profile.slopes.last().expect("non-empty profile") * (-t_end).exp();
    Ok((count, u, du))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |t: f64| 1.0 + 2.0 * t - t * t + 0.5 * t.powi(3) - 0.2 * t.powi(4) + 0.1 * t.powi(5);
        let dp = |t: f64| 2.0 - 2.0 * t + 1.5 * t * t - 0.8 * t.powi(3) + 0.5 * t.powi(4);
        let ddp = |t: f64| -2.0 + 3.0 * t - 2.4 * t * t + 2.0 * t.powi(3);
        let (t0, t1) = (0.3, 1.7);
        let seg = Hermite { t0, h: t1 - t0, u0: p(t0), v0: dp(t0), a0: ddp(t0), u1: p(t1), v1: dp(t1), a1: ddp(t1) };
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let t = t0 + s * (t1 - t0);
            assert!((seg.value_s(s) - p(t)).abs() < 1e-13);
            assert!((seg.slope_s(s) - dp(t)).abs() < 1e-12);
            assert!((seg.accel_s(s) - ddp(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_source_keeps_constant() {
        let prof = integrate(1.0, Source::Zero, 1.0, 1e-10).unwrap();
        assert!(prof.is_complete());
        for (&u, &v) in prof.values().iter().zip(prof.slopes()) {
            assert_eq!(u, 1.0);
            assert_eq!(v, 0.0);
        }
        assert_eq!(zero_count(&prof).unwrap(), (0, 1.0, 0.0));
    }

    #[test]
    fn linear_hook_zero_counts() {
        let prof = integrate(1.0, Source::Linear { lambda: 30.0 }, 1.0, 1e-10).unwrap();
        assert_eq!(zero_count(&prof).unwrap().0, 1);
        let prof = integrate(1.0, Source::Linear { lambda: 4.0 }, 1.0, 1e-10).unwrap();
        let (n, u1, _) = zero_count(&prof).unwrap();
        assert_eq!(n, 0);
        assert!(u1 > 0.0);
    }

    fn bessel_j0(x: f64) -> f64 {
        let q = -x * x / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn linear_hook_tracks_bessel() {
        let lambda = 20.0f64;
        let prof = integrate(1.5, Source::Linear { lambda }, 1.0, 1e-11).unwrap();
        for r in [1e-3, 0.1, 0.37, 0.8, 1.0] {
            let exact = 1.5 * bessel_j0(lambda.sqrt() * r);
            assert!((prof.value_at(r) - exact).abs() < 1e-9, "r={r}");
        }
        let z = prof.zero_log_radii().next().unwrap().exp();
        assert!((z * lambda.sqrt() - 2.404_825_557_695_773).abs() < 1e-9);
    }

    #[test]
    fn bessel_eigenvalue_hits_boundary() {
        let prof = integrate(1.0, Source::Linear { lambda: 5.783_185_962_9 }, 1.0, 1e-10).unwrap();
        let (n, u1, _) = zero_count(&prof).unwrap();
        assert_eq!(n, 0);
        assert!(u1.abs() < 1e-6);
    }

    #[test]
    fn halving_tol_is_consistent() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let coarse = integrate(2.0, p, 1.0, 1e-8).unwrap();
        let fine = integrate(2.0, p, 1.0, 5e-9).unwrap();
        assert!((coarse.value_at(1.0) - fine.value_at(1.0)).abs() < 1e-8);
    }

    #[test]
    fn preconditions() {
        assert!(integrate(1.0, Source::Zero, 0.0, 1e-10).is_err());
        assert!(integrate(1.0, Source::Zero, 1.5, 1e-10).is_err());
        assert!(integrate(1.0, Source::Zero, 1.0, 1e-3).is_err());
        assert!(integrate(1.0, Source::Zero, 1.0, 1e-13).is_err());
        assert!(integrate(f64::NAN, Source::Zero, 1.0, 1e-10).is_err());
    }

    #[test]
    fn radii_start_at_origin() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let prof = integrate(2.0, p, 1.0, 1e-10).unwrap();
        let radii = prof.radii();
        assert_eq!(radii[0], 0.0);
        assert!(radii.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(prof.derivatives()[0], 0.0);
        assert!((radii.last().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn series_matches_first_node() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let prof = integrate(3.0, p, 1.0, 1e-10).unwrap();
        let t0 = prof.log_start();
        assert!((prof.origin.value(t0) - prof.value_at_log(t0)).abs() < 1e-15);
        assert!((prof.value_at_log(t0 - 5.0) - 3.0).abs() < 1e-8);
        assert_eq!(prof.value_at(0.0), 3.0);
    }

    #[test]
    fn aborted_profile_reports() {
        // A guard this low trips immediately at moderate amplitude.
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap().with_guard(-50.0);
        let prof = integrate(5.0, p, 1.0, 1e-10).unwrap();
        assert!(!prof.is_complete());
        assert!(matches!(zero_count(&prof), Err(Error::AbortedProfile(_))));
    }

    mod props {
        use super::super::*;
        use crate::quadrature::{integrate_breaks, Tolerance};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn flux_identity_between_events(a in 0.5f64..60.0) {
                let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
                let prof = integrate(a, p, 1.0, 1e-10).unwrap();
                let src = *prof.source();
                let mut marks: Vec<f64> = vec![prof.log_start()];
                marks.extend(prof.events().iter().map(|e| e.log_radius));
                marks.push(prof.log_end());
                for w in marks.windows(2) {
                    let (t1, t2) = (w[0], w[1]);
                    if t2 - t1 < 1e-9 { continue; }
                    let lhs = prof.slope_at_log(t2) - prof.slope_at_log(t1);
                    let breaks = prof.breaks(t1, t2);
                    let rhs = integrate_breaks(
                        |t| src.forcing(t, prof.value_at_log(t)).unwrap(),
                        &breaks,
                        Tolerance::absolute(1e-11),
                    ).unwrap().value;
                    prop_assert!((lhs + rhs).abs() < 1e-8, "{} vs {}", lhs, -rhs);
                }
            }

            #[test]
            fn first_arch_decreases_and_zeros_are_exact(a in 0.2f64..200.0) {
                let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
                let prof = integrate(a, p, 1.0, 1e-10).unwrap();
                let first_ext = prof.extremum_log_radii().next().unwrap_or(prof.log_end());
                let lo = prof.log_start();
                for j in 1..200 {
                    let t = lo + (first_ext - lo) * j as f64 / 200.0;
                    prop_assert!(prof.slope_at_log(t) < 0.0);
                }
                for z in prof.zero_log_radii() {
                    prop_assert!(prof.value_at_log(z).abs() < 1e-10);
                }
                // constant sign strictly between consecutive zeros
                let mut marks: Vec<f64> = vec![lo];
                marks.extend(prof.zero_log_radii());
                marks.push(prof.log_end());
                for w in marks.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    let sign = prof.value_at_log(mid).signum();
                    for j in 1..50 {
                        let t = w[0] + (w[1] - w[0]) * j as f64 / 50.0;
                        let u = prof.value_at_log(t);
                        prop_assert!(u == 0.0 || u.signum() == sign || u.abs() < 1e-10);
                    }
                }
            }
        }
    }
}
