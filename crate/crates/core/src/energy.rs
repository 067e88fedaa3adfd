//! Dirichlet energy, the functional `I(u) = ½∫|∇u|² − ∫F(u)` and the Nehari
//! residual `∫|∇u|² − ∫f(u)u`, over whole profiles or single nodal regions.
//!
//! Everything is integrated in log-radius: `∫|∇u|² dx = 2π∫(du/dt)² dt` and
//! `∫G(u) dx = 2π∫G(u)e^{2t} dt`, with `G(u)e^{2t}` formed as a single
//! exponential so that regions at radii like `e^{−10⁵}` cost nothing extra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::RadialField;
use crate::nonlinearity::{ln_primitive, NonlinearityParams};
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::radial_ode::RadialProfile;

/// Absolute accuracy of every energy integral.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergy {
    pub region_index: usize,
    pub dirichlet: f64,
    pub potential: f64,
    pub functional: f64,
    pub nehari_residual: f64,
}

impl RegionEnergy {
    fn new(region_index: usize, dirichlet: f64, potential: f64, nehari_term: f64) -> Self {
        Self {
            region_index,
            dirichlet,
            potential,
            functional: 0.5 * dirichlet - potential,
            nehari_residual: dirichlet - nehari_term,
        }
    }

    /// `|nehari_residual| / dirichlet`.
    pub fn relative_nehari(&self) -> f64 {
        self.nehari_residual.abs() / self.dirichlet
    }
}

/// `ln(f(s)s)`.
fn ln_f_times_s(s: f64, p: &NonlinearityParams) -> f64 {
    p.ln_abs_f(s) + s.abs().ln()
}

fn tolerance() -> Tolerance {
    Tolerance { abs: 0.1 * ENERGY_TOL / (2.0 * PI), rel: 1e-13, max_intervals: 20_000 }
}

/// Energies of `field` on the annulus `e^{t_lo} < r < e^{t_hi}`.
///
/// `t_lo = -inf` means the disk `r < e^{t_hi}`; the part below the field's
/// floor (or inside its constant core) is added in closed form.
pub fn region_energy_log<F: RadialField + ?Sized>(
    field: &F,
    p: &NonlinearityParams,
    t_lo: f64,
    t_hi: f64,
    region_index: usize,
) -> Result<RegionEnergy> {
    let mut dirichlet = 0.0;
    let mut potential = 0.0;
    let mut nehari = 0.0;

    // Closed-form disk where the field is constant.
    let plateau = match field.core() {
        Some((tc, c)) => Some((tc, c)),
        None if t_lo == f64::NEG_INFINITY => {
            let fl = field.floor();
            Some((fl, field.value(fl)))
        }
        None => None,
    };
    let mut lo = t_lo;
    if let Some((tc, c)) = plateau {
        if tc > t_lo {
            let edge = tc.min(t_hi);
            // ∫_{B_ρ} G(c) dx = π ρ² G(c)
            if c != 0.0 {
                let ln_area = PI.ln() + 2.0 * edge;
                let ln_f = ln_area + ln_primitive(c, p)?;
                let ln_n = ln_area + ln_f_times_s(c, p);
                p.check_guard(ln_f.max(ln_n))?;
                potential += ln_f.exp();
                nehari += ln_n.exp();
            }
            lo = edge;
        }
    }

    if t_hi > lo {
        let breaks = field.breaks(lo, t_hi);
        let tol = tolerance();
        dirichlet += 2.0 * PI * integrate_breaks(|t| field.slope(t).powi(2), &breaks, tol)?.value;
        // A stored value u carries an absolute error of about ulp(u), which the
        // exponent u² turns into a relative error of 2u·ulp(u) in the integrand.
        let peak = breaks.iter().map(|&t| field.value(t).abs()).fold(0.0, f64::max);
        let planar_tol = tol.with_rel(tol.rel.max(8.0 * peak * peak * f64::EPSILON));
        let mut guard_err = None;
        let mut planar = |ln_g: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            let est = integrate_breaks(
                |t| {
                    let u = field.value(t);
                    if u == 0.0 {
                        return 0.0;
                    }
                    match ln_g(u) {
                        Ok(lg) => {
                            let ln = lg + 2.0 * t;
                            if let Err(e) = p.check_guard(ln) {
                                guard_err.get_or_insert(e);
                                return f64::NAN;
                            }
                            ln.exp()
                        }
                        Err(e) => {
                            guard_err.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                &breaks,
                planar_tol,
            );
            if let Some(e) = guard_err.take() {
                return Err(e);
            }
            Ok(2.0 * PI * est?.value)
        };
        potential += planar(&|u| ln_primitive(u, p))?;
        nehari += planar(&|u| Ok(ln_f_times_s(u, p)))?;
    }
    Ok(RegionEnergy::new(region_index, dirichlet, potential, nehari))
}

/// Energies of `profile` on `r_lo < r < r_hi`; `r_lo = 0` includes the
/// origin.
pub fn region_energy(
    profile: &RadialProfile,
    p: &NonlinearityParams,
    r_lo: f64,
    r_hi: f64,
) -> Result<RegionEnergy> {
    if !(r_lo >= 0.0 && r_lo < r_hi) {
        return Err(crate::Error::InvalidParams(format!("need 0 <= r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    if r_hi.ln() > profile.log_end() + 1e-12 {
        return Err(crate::Error::InvalidParams(format!("r_hi = {r_hi} is beyond the profile")));
    }
    region_energy_log(profile, p, r_lo.ln(), r_hi.ln().min(profile.log_end()), 0)
}

/// Energies of the whole profile.
pub fn total_energy(profile: &RadialProfile, p: &NonlinearityParams) -> Result<RegionEnergy> {
    region_energy_log(profile, p, f64::NEG_INFINITY, profile.log_end(), 0)
}
