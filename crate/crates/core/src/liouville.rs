//! Closed-form solutions of the Liouville equation `−Δz = e^z` that appear as
//! blow-up limits: the planar bubble, the one-dimensional traveling solution,
//! the singular annular family and the general two-parameter radial family.
//!
//! Residuals are evaluated with forward-mode second-order automatic
//! differentiation ([`Jet`]) so that they are exact up to rounding.

use std::f64::consts::{LN_2, SQRT_2};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProfileKind {
    /// `−2 log(1 + r²/8)`.
    Bubble,
    /// `log 4 + √2 s − 2 log(1 + e^{√2 s})`, a solution of `−z'' = e^z` on ℝ.
    Traveling,
    /// Singular family with `Z(m) = Z'(m) = 0`, `α = √(2m² + 4)`.
    Annular { m: f64 },
    /// `log(4/δ²) + x − 2 log(1 + e^x) − 2 log r`, `x = √2 (log r − y)/δ`.
    General { delta: f64, y: f64 },
}

impl ProfileKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProfileKind::Annular { m } if !(m > 0.0 && m.is_finite()) => {
                Err(Error::InvalidParams(format!("annular profile needs m > 0, got {m}")))
            }
            ProfileKind::General { delta, y } if !(delta != 0.0 && delta.is_finite() && y.is_finite()) => {
                Err(Error::InvalidParams(format!("general profile needs finite delta != 0, got ({delta}, {y})")))
            }
            _ => Ok(()),
        }
    }

    /// Whether the equation is the radial one (`−z'' − z'/r`) or the
    /// one-dimensional one (`−z''`).
    pub fn is_radial(&self) -> bool {
        !matches!(self, ProfileKind::Traveling)
    }

    fn check_domain(&self, x: f64, interior: bool) -> Result<()> {
        self.validate()?;
        let ok = match self {
            ProfileKind::Traveling => x.is_finite(),
            ProfileKind::Bubble if !interior => x.is_finite() && x >= 0.0,
            _ => x.is_finite() && x > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self:?} at {x}")))
        }
    }
}

/// Value and first two derivatives of a scalar function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn var(x: f64) -> Self {
        Self { v: x, d1: 1.0, d2: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { v: c, d1: 0.0, d2: 0.0 }
    }

    /// `g ∘ self` given `g`, `g'`, `g''` at `self.v`.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        Self { v: g, d1: g1 * self.d1, d2: g2 * self.d1 * self.d1 + g1 * self.d2 }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    pub fn ln_1p(self) -> Self {
        let inv = 1.0 / (1.0 + self.v);
        self.chain(self.v.ln_1p(), inv, -inv * inv)
    }

    /// `log(1 + e^x)`.
    pub fn softplus(self) -> Self {
        let x = self.v;
        let sp = x.max(0.0) + (-x.abs()).exp().ln_1p();
        let sig = if x >= 0.0 { 1.0 / (1.0 + (-x).exp()) } else { x.exp() / (1.0 + x.exp()) };
        self.chain(sp, sig, sig * (1.0 - sig))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        Jet { v: self.v * c, d1: self.d1 * c, d2: self.d2 * c }
    }
}

/// The profile as a function of `x`, with derivatives carried by `x`.
pub fn profile_jet(kind: ProfileKind, x: Jet) -> Jet {
    match kind {
        ProfileKind::Bubble => (x * x * 0.125).ln_1p() * -2.0,
        ProfileKind::Traveling => {
            let s = x * SQRT_2;
            s + 2.0 * LN_2 - s.softplus() * 2.0
        }
        ProfileKind::Annular { m } => {
            let alpha = (2.0 * m * m + 4.0).sqrt();
            let ln_m = m.ln();
            let ln_s = x.ln();
            // log((α+2)m^α + (α−2)s^α) = c + softplus(b − c)
            let c = (alpha + 2.0).ln() + alpha * ln_m;
            let b = ln_s * alpha + (alpha - 2.0).ln();
            let ln_den = (b + (-c)).softplus() + c;
            ln_s * (alpha - 2.0) + ((4.0 * alpha * alpha).ln() + (alpha + 2.0) * ln_m) - ln_den * 2.0
        }
        ProfileKind::General { delta, y } => {
            let ln_r = x.ln();
            let t = (ln_r + (-y)) * (SQRT_2 / delta);
            t + (4.0 / (delta * delta)).ln() - t.softplus() * 2.0 - ln_r * 2.0
        }
    }
}

/// Closed-form value at `x` (`r` for the radial kinds, `s` for TRAVELING).
pub fn eval_profile(kind: ProfileKind, x: f64) -> Result<f64> {
    kind.check_domain(x, false)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(profile_jet(kind, Jet::constant(x)).v)
}

/// First derivative at `x`.
pub fn profile_slope(kind: ProfileKind, x: f64) -> Result<f64> {
    kind.check_domain(x, false)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(profile_jet(kind, Jet::var(x)).d1)
}

/// `−z'' − z'/r − e^z` (radial kinds) or `−z'' − e^z` (TRAVELING).
pub fn ode_residual(kind: ProfileKind, x: f64) -> Result<f64> {
    kind.check_domain(x, true)?;
    let z = profile_jet(kind, Jet::var(x));
    Ok(residual_from(kind, x, z.v, z.d1, z.d2))
}

/// The residual with derivatives from sixth-order central differences of
/// step `h`.
pub fn ode_residual_fd(kind: ProfileKind, x: f64, h: f64) -> Result<f64> {
    kind.check_domain(x, true)?;
    if kind.is_radial() && x - 3.0 * h <= 0.0 {
        return Err(Error::Domain(format!("stencil of width {h} leaves the domain at {x}")));
    }
    let z = |k: f64| eval_profile(kind, x + k * h);
    let (zm3, zm2, zm1, z0, zp1, zp2, zp3) = (z(-3.0)?, z(-2.0)?, z(-1.0)?, z(0.0)?, z(1.0)?, z(2.0)?, z(3.0)?);
    let d1 = (45.0 * (zp1 - zm1) - 9.0 * (zp2 - zm2) + (zp3 - zm3)) / (60.0 * h);
    let d2 = (2.0 * (zp3 + zm3) - 27.0 * (zp2 + zm2) + 270.0 * (zp1 + zm1) - 490.0 * z0) / (180.0 * h * h);
    Ok(residual_from(kind, x, z0, d1, d2))
}

fn residual_from(kind: ProfileKind, x: f64, z: f64, d1: f64, d2: f64) -> f64 {
    let radial = if kind.is_radial() { d1 / x } else { 0.0 };
    -d2 - radial - z.exp()
}

/// `∫₀^∞ e^{z(s)} s ds`, integrated in `t = log s` with exponential tail
/// corrections at both ends.
pub fn mass(kind: ProfileKind) -> Result<f64> {
    kind.validate()?;
    let center = match kind {
        ProfileKind::Bubble => 0.0,
        ProfileKind::Annular { m } => m.ln(),
        _ => return Err(Error::Domain(format!("mass is defined for BUBBLE and ANNULAR, not {kind:?}"))),
    };
    // ln(e^{z} s · s) as a jet in t.
    let ln_g = |t: f64| {
        let s = Jet::var(t).exp();
        let z = profile_jet(kind, s);
        (z.v + 2.0 * t, s.v * z.d1 + 2.0)
    };
    let (lo, hi) = (center - 60.0, center + 60.0);
    let breaks: Vec<f64> = (-12..=12).map(|j| center + 5.0 * j as f64).collect();
    debug_assert!(breaks[0] == lo && breaks[24] == hi);
    let est = integrate_breaks(|t| ln_g(t).0.exp(), &breaks, Tolerance { abs: 1e-15, rel: 1e-14, max_intervals: 4000 })?;
    let (g_lo, k_lo) = ln_g(lo);
    let (g_hi, k_hi) = ln_g(hi);
    Ok(est.value + g_lo.exp() / k_lo + g_hi.exp() / -k_hi)
}
