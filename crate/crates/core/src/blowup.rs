//! Blow-up diagnostics of a nodal solution: scaling parameters, rescaled
//! profiles around each region's maximum compared with the Liouville bubble,
//! amplitude ratios, boundary flux and the radial-lemma metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{eval_profile, ProfileKind};
use crate::shooting::NodalSolution;

pub const DEFAULT_RHO_MAX: f64 = 5.0;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleReport {
    pub region_index: usize,
    /// Radius of the region maximum; 0 for the central disk.
    pub max_radius: f64,
    /// `None` for the central disk.
    pub max_log_radius: Option<f64>,
    pub amplitude: f64,
    pub gamma: f64,
    pub log_gamma: f64,
    pub delta: f64,
    pub log_delta: f64,
    /// Window actually sampled (may be shorter than requested).
    pub rho_max: f64,
    /// `(ρ, 2M(|u|(max + δρ) − M))`.
    pub window: Vec<(f64, f64)>,
    pub sup_deviation: f64,
    /// `r·u'(r)` at the region's outer boundary.
    pub flux_at_outer_zero: f64,
    pub warnings: Vec<String>,
}

fn region_checked(sol: &NodalSolution, i: usize) -> Result<()> {
    if i == 0 || i > sol.regions.len() {
        return Err(Error::InvalidParams(format!("region {i} out of 1..={}", sol.regions.len())));
    }
    if sol.regions[i - 1].amplitude <= 0.0 {
        return Err(Error::InvalidParams(format!("region {i} is trivial")));
    }
    Ok(())
}

/// `(ln γ, ln δ)` for region `i` (1-based).
pub fn log_scaling_params(sol: &NodalSolution, i: usize) -> Result<(f64, f64)> {
    region_checked(sol, i)?;
    let reg = &sol.regions[i - 1];
    let m = reg.amplitude;
    let ln_r = reg.log_r_hi;
    let p = &sol.params;
    let ln_gamma = -0.5 * (std::f64::consts::LN_2 + p.lambda().ln() + 2.0 * ln_r + 2.0 * m.ln() + p.exponent(m));
    Ok((ln_gamma, ln_gamma + ln_r))
}

/// `γ = (2λ r_i² M² e^{E(M)})^{−1/2}` and `δ = γ r_i` for region `i`.
pub fn scaling_params(sol: &NodalSolution, i: usize) -> Result<(f64, f64)> {
    let (lg, ld) = log_scaling_params(sol, i)?;
    Ok((lg.exp(), ld.exp()))
}

/// Samples `z(ρ) = 2M(|u|(max + δρ) − M)` on `[0, rho_max]` and compares it
/// with the bubble.
pub fn rescaled_profile(sol: &NodalSolution, i: usize, rho_max: f64, n_samples: usize) -> Result<BubbleReport> {
    if !(rho_max > 0.0 && rho_max.is_finite()) || n_samples < 2 {
        return Err(Error::InvalidParams(format!("need rho_max > 0 and n_samples >= 2, got {rho_max}, {n_samples}")));
    }
    let (log_gamma, log_delta) = log_scaling_params(sol, i)?;
    let reg = &sol.regions[i - 1];
    let m = reg.amplitude;
    let sign = reg.sign();
    let prof = &sol.profile;
    let ball = reg.max_log_radius == f64::NEG_INFINITY;

    // Largest ρ that stays inside the region.
    let rho_cap = if ball {
        (reg.log_r_hi - log_delta).exp()
    } else {
        (reg.max_log_radius - log_delta).exp() * (reg.log_r_hi - reg.max_log_radius).exp_m1()
    };
    let mut warnings = Vec::new();
    let mut rho_hi = rho_max;
    if rho_cap < rho_max {
        if rho_cap < rho_max / (n_samples - 1) as f64 {
            return Err(Error::RegionTooNarrow { region: i });
        }
        rho_hi = rho_cap;
        warnings.push(format!("rho_max truncated from {rho_max} to {rho_cap}"));
    }

    let log_r_of = |rho: f64| -> f64 {
        if ball {
            log_delta + rho.ln()
        } else {
            reg.max_log_radius + ((log_delta - reg.max_log_radius).exp() * rho).ln_1p()
        }
    };
    let mut window = Vec::with_capacity(n_samples);
    let mut sup = 0.0f64;
    for j in 0..n_samples {
        let rho = rho_hi * j as f64 / (n_samples - 1) as f64;
        let z = if j == 0 {
            0.0
        } else {
            let u = sign * prof.value_at_log(log_r_of(rho).min(reg.log_r_hi));
            2.0 * m * (u - m)
        };
        sup = sup.max((z - eval_profile(ProfileKind::Bubble, rho)?).abs());
        window.push((rho, z));
    }
    Ok(BubbleReport {
        region_index: i,
        max_radius: if ball { 0.0 } else { reg.max_radius() },
        max_log_radius: (!ball).then_some(reg.max_log_radius),
        amplitude: m,
        gamma: log_gamma.exp(),
        log_gamma,
        delta: log_delta.exp(),
        log_delta,
        rho_max: rho_hi,
        window,
        sup_deviation: sup,
        flux_at_outer_zero: prof.slope_at_log(reg.log_r_hi),
        warnings,
    })
}

/// Reports for every region with the default window.
pub fn all_reports(sol: &NodalSolution, rho_max: f64) -> Result<Vec<BubbleReport>> {
    (1..=sol.regions.len()).map(|i| rescaled_profile(sol, i, rho_max, DEFAULT_SAMPLES)).collect()
}

/// `‖u‖_{L∞(region i+1)} / ‖u‖_{L∞(region i)}` for `i = 1..=k`.
pub fn amplitude_ratios(sol: &NodalSolution) -> Vec<f64> {
    sol.regions.windows(2).map(|w| w[1].amplitude / w[0].amplitude).collect()
}

/// `r_k u'(r_k)` at the outermost interior zero; `None` when `k = 0`.
pub fn boundary_flux(sol: &NodalSolution) -> Option<f64> {
    sol.zero_log_radii.last().map(|&t| sol.profile.slope_at_log(t))
}

/// `sup_r √r |u(r)| / ‖∇u‖₂` over the stored nodes.
pub fn radial_lemma_metric(sol: &NodalSolution) -> f64 {
    let prof = &sol.profile;
    let sup = prof
        .log_radii()
        .iter()
        .zip(prof.values())
        .map(|(&t, &u)| (0.5 * t).exp() * u.abs())
        .fold(0.0, f64::max);
    sup / sol.total_dirichlet().sqrt()
}
