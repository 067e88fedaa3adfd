//! Shooting on the initial amplitude `a = u(0)` for radial solutions with a
//! prescribed number of interior zeros and `u(1) = 0`.
//!
//! For amplitudes on a geometric grid the profile is integrated to `r = 1`
//! and its zero count recorded. A solution with `k` interior zeros sits at
//! every amplitude where the count steps from `k` to `k + 1`: there the
//! `(k+1)`-th zero crosses `r = 1`. Such a step is refined by bisection until
//! the `k`-zero side has `|u(1)| ≤ boundary_tol`.

use serde::{Deserialize, Serialize};

use crate::energy::{region_energy_log, RegionEnergy};
use crate::error::{Error, Result};
use crate::nonlinearity::{Family, NonlinearityParams, DEFAULT_GUARD, LAMBDA_1};
use crate::radial_ode::{integrate, zero_count, RadialProfile, Source};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub boundary_tol: f64,
    pub integrator_tol: f64,
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_ratio: f64,
    /// Overflow guard for the reference problem in [`solve_ground_with`].
    pub guard: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            boundary_tol: 1e-8,
            integrator_tol: 1e-10,
            scan_lo: 1e-3,
            scan_hi: 1e5,
            scan_ratio: 1.05,
            guard: DEFAULT_GUARD,
        }
    }
}

impl ShootingConfig {
    pub fn with_boundary_tol(mut self, boundary_tol: f64) -> Self {
        self.boundary_tol = boundary_tol;
        self
    }

    pub fn with_integrator_tol(mut self, tol: f64) -> Self {
        self.integrator_tol = tol;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = self.boundary_tol > 0.0
            && self.integrator_tol > 0.0
            && self.scan_lo > 0.0
            && self.scan_hi > self.scan_lo
            && self.scan_ratio > 1.0
            && self.guard.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("bad shooting configuration {self:?}")))
        }
    }
}

/// One nodal region `(r_{i−1}, r_i)` of a solution, indexed from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub index: usize,
    /// Inner boundary; `-inf` for the central disk.
    pub log_r_lo: f64,
    pub log_r_hi: f64,
    /// Log-radius of `max |u|`; `-inf` (the origin) for the central disk.
    pub max_log_radius: f64,
    /// `max |u|` over the region.
    pub amplitude: f64,
    pub energy: RegionEnergy,
}

impl RegionRecord {
    pub fn max_radius(&self) -> f64 {
        self.max_log_radius.exp()
    }

    /// `+1` or `−1`, the sign of `u` on the region.
    pub fn sign(&self) -> f64 {
        if self.index % 2 == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

/// How the returned amplitude was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchInfo {
    pub rule: String,
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_ratio: f64,
    /// Amplitude bracket the bisection started from.
    pub bracket: (f64, f64),
    /// Brackets of further admissible branches seen in the scan.
    pub alternates: Vec<(f64, f64)>,
    pub bisection_steps: usize,
}

#[derive(Debug, Clone)]
pub struct NodalSolution {
    pub params: NonlinearityParams,
    pub k: usize,
    pub amplitude: f64,
    pub profile: RadialProfile,
    /// Log-radii of the interior zeros, increasing.
    pub zero_log_radii: Vec<f64>,
    pub boundary_value: f64,
    /// The `|u(1)|` target the solution was refined to.
    pub boundary_tol: f64,
    pub regions: Vec<RegionRecord>,
    pub branch: BranchInfo,
}

impl NodalSolution {
    pub fn zeros(&self) -> Vec<f64> {
        self.zero_log_radii.iter().map(|t| t.exp()).collect()
    }

    pub fn total_dirichlet(&self) -> f64 {
        self.regions.iter().map(|r| r.energy.dirichlet).sum()
    }

    pub fn total_functional(&self) -> f64 {
        self.regions.iter().map(|r| r.energy.functional).sum()
    }

    /// Checks the defining properties; returns the list of violations.
    pub fn certify(&self, nehari_tol: f64) -> Vec<String> {
        let mut issues = Vec::new();
        if self.boundary_value.abs() > self.boundary_tol {
            issues.push(format!("|u(1)| = {:e}", self.boundary_value.abs()));
        }
        if self.zero_log_radii.len() != self.k {
            issues.push(format!("{} zeros, expected {}", self.zero_log_radii.len(), self.k));
        }
        for reg in &self.regions {
            let mid = if reg.log_r_lo.is_finite() {
                0.5 * (reg.log_r_lo + reg.log_r_hi)
            } else {
                reg.log_r_hi - 1.0
            };
            if self.profile.value_at_log(mid) * reg.sign() <= 0.0 {
                issues.push(format!("region {} has the wrong sign", reg.index));
            }
            if reg.energy.relative_nehari() >= nehari_tol {
                issues.push(format!("region {} Nehari residual {:e}", reg.index, reg.energy.relative_nehari()));
            }
            if reg.energy.functional <= 0.0 {
                issues.push(format!("region {} has non-positive energy", reg.index));
            }
        }
        issues
    }
}

/// Result of integrating one trial amplitude.
#[derive(Debug, Clone, Copy)]
enum Trial {
    Ok { count: usize, u1: f64 },
    Failed,
}

fn trial(a: f64, source: Source, tol: f64) -> Result<(Trial, RadialProfile)> {
    let prof = integrate(a, source, 1.0, tol)?;
    Ok(match zero_count(&prof) {
        Ok((count, u1, _)) => (Trial::Ok { count, u1 }, prof),
        Err(_) => (Trial::Failed, prof),
    })
}

struct Found {
    profile: RadialProfile,
    bracket: (f64, f64),
    alternates: Vec<(f64, f64)>,
    steps: usize,
}

/// Scans `[scan_lo, scan_hi]` and bisects the first `k → k+1` step.
fn shoot(source: Source, k: usize, cfg: &ShootingConfig) -> Result<Found> {
    cfg.validate()?;
    let target = format!("{k} interior zeros with u(1) = 0");
    let mut trace: Vec<String> = Vec::new();
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<(f64, usize)> = None;
    let mut a = cfg.scan_lo;
    let mut failure: Option<f64> = None;
    while a <= cfg.scan_hi * (1.0 + 1e-12) {
        match trial(a, source, cfg.integrator_tol)?.0 {
            Trial::Ok { count, .. } => {
                if let Some((pa, pc)) = prev {
                    if pc != count {
                        trace.push(format!("a={pa:.6e}..{a:.6e}: {pc}->{count}"));
                    }
                    if pc <= k && count > k {
                        brackets.push((pa, a));
                    }
                } else {
                    trace.push(format!("a={a:.6e}: {count}"));
                }
                prev = Some((a, count));
            }
            Trial::Failed => {
                trace.push(format!("a={a:.6e}: integration aborted"));
                failure = Some(a);
                break;
            }
        }
        a *= cfg.scan_ratio;
    }
    let trace = trace.join("; ");

    let mut alternates = Vec::new();
    let mut result: Option<Found> = None;
    for &(lo, hi) in &brackets {
        if result.is_some() {
            alternates.push((lo, hi));
            continue;
        }
        if let Some(found) = bisect(source, k, lo, hi, cfg)? {
            result = Some(found);
        }
    }
    match result {
        Some(mut f) => {
            f.alternates = alternates;
            Ok(f)
        }
        None => match failure {
            Some(a) => Err(Error::Stiffness(format!("integration aborted at amplitude {a:.6e} before a bracket for {target} was found ({trace})"))),
            None => Err(Error::NoBracket { target, trace }),
        },
    }
}

/// Bisection keeping `count(lo) ≤ k < count(hi)`. Returns `None` when the
/// step turns out to skip the `k`-zero configuration.
fn bisect(source: Source, k: usize, mut lo: f64, mut hi: f64, cfg: &ShootingConfig) -> Result<Option<Found>> {
    let bracket = (lo, hi);
    let (mut lo_trial, mut lo_prof) = trial(lo, source, cfg.integrator_tol)?;
    let mut steps = 0;
    loop {
        if let Trial::Ok { count, u1 } = lo_trial {
            if count == k && u1.abs() <= cfg.boundary_tol {
                return Ok(Some(Found {
                    profile: lo_prof,
                    bracket,
                    alternates: Vec::new(),
                    steps,
                }));
            }
        }
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return match lo_trial {
                Trial::Ok { count, u1 } if count == k => Err(Error::Stiffness(format!(
                    "amplitude resolution exhausted at a = {lo:.17e} with |u(1)| = {:e}",
                    u1.abs()
                ))),
                _ => Ok(None),
            };
        }
        steps += 1;
        let (t, prof) = trial(mid, source, cfg.integrator_tol)?;
        match t {
            Trial::Ok { count, .. } if count <= k => {
                lo = mid;
                lo_trial = t;
                lo_prof = prof;
            }
            Trial::Ok { .. } => hi = mid,
            Trial::Failed => {
                return Err(Error::Stiffness(format!("integration aborted at amplitude {mid:.6e} during bisection")))
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < LAMBDA_1) {
        return Err(Error::InvalidParams(format!("lambda must lie in (0, {LAMBDA_1}), got {lambda}")));
    }
    Ok(())
}

/// Radial solution with exactly `k ≥ 1` interior zeros, `u(0) > 0` and
/// `|u(1)| ≤ boundary_tol`, on the smallest-amplitude branch.
pub fn solve_nodal(p: NonlinearityParams, k: usize, boundary_tol: f64) -> Result<NodalSolution> {
    solve_nodal_with(p, k, &ShootingConfig::default().with_boundary_tol(boundary_tol))
}

pub fn solve_nodal_with(p: NonlinearityParams, k: usize, cfg: &ShootingConfig) -> Result<NodalSolution> {
    if k == 0 {
        return Err(Error::InvalidParams("solve_nodal needs k >= 1; use solve_ground for k = 0".into()));
    }
    if !(p.eps() > 0.0 && p.eps() < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {}", p.eps())));
    }
    check_lambda(p.lambda())?;
    let found = shoot(Source::Nonlinear(p), k, cfg)?;
    assemble(p, k, found, cfg)
}

/// Positive solution (`k = 0`) for the given parameters, smallest amplitude.
pub fn solve_positive(p: NonlinearityParams, cfg: &ShootingConfig) -> Result<NodalSolution> {
    check_lambda(p.lambda())?;
    let found = shoot(Source::Nonlinear(p), 0, cfg)?;
    assemble(p, 0, found, cfg)
}

/// The positive solution `u₀` of `−Δu = λ u e^{u² + |u|}` with its energy
/// `I₀(u₀)`.
pub fn solve_ground(lambda: f64) -> Result<(NodalSolution, f64)> {
    solve_ground_with(lambda, &ShootingConfig::default())
}

pub fn solve_ground_with(lambda: f64, cfg: &ShootingConfig) -> Result<(NodalSolution, f64)> {
    check_lambda(lambda)?;
    let p = NonlinearityParams::new(lambda, 0.0, Family::MtPlus)?.with_guard(cfg.guard);
    let sol = solve_positive(p, cfg)?;
    let energy = sol.total_functional();
    Ok((sol, energy))
}

fn assemble(p: NonlinearityParams, k: usize, found: Found, cfg: &ShootingConfig) -> Result<NodalSolution> {
    let profile = found.profile;
    let zeros: Vec<f64> = profile.zero_log_radii().collect();
    let (_, boundary_value, _) = zero_count(&profile)?;
    let end = profile.log_end();
    let mut regions = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let lo = if i == 0 { f64::NEG_INFINITY } else { zeros[i - 1] };
        let hi = if i == k { end } else { zeros[i] };
        let (max_t, amp) = if i == 0 {
            (f64::NEG_INFINITY, profile.amplitude().abs())
        } else {
            profile
                .extremum_log_radii()
                .filter(|&t| t > lo && t < hi)
                .map(|t| (t, profile.value_at_log(t).abs()))
                .fold((0.5 * (lo + hi), 0.0), |best, c| if c.1 > best.1 { c } else { best })
        };
        let energy = region_energy_log(&profile, &p, lo, hi, i + 1)?;
        regions.push(RegionRecord {
            index: i + 1,
            log_r_lo: lo,
            log_r_hi: hi,
            max_log_radius: max_t,
            amplitude: amp,
            energy,
        });
    }
    Ok(NodalSolution {
        params: p,
        k,
        amplitude: profile.amplitude(),
        zero_log_radii: zeros,
        boundary_value,
        regions,
        branch: BranchInfo {
            rule: "smallest amplitude".into(),
            scan_lo: cfg.scan_lo,
            scan_hi: cfg.scan_hi,
            scan_ratio: cfg.scan_ratio,
            bracket: found.bracket,
            alternates: found.alternates,
            bisection_steps: found.steps,
        },
        boundary_tol: cfg.boundary_tol,
        profile,
    })
}

/// `λ` at which `J₀(√λ r)`-type shooting with the linear hook has `k`
/// interior zeros and vanishes at `r = 1`, i.e. the `(k+1)`-th radial
/// Dirichlet eigenvalue of the disk.
pub fn linear_eigenvalue(k: usize, tol: f64) -> Result<f64> {
    let count = |lambda: f64| -> Result<(usize, f64)> {
        let prof = integrate(1.0, Source::Linear { lambda }, 1.0, 1e-12)?;
        let (n, u1, _) = zero_count(&prof)?;
        Ok((n, u1))
    };
    let mut lo = 0.1;
    let mut hi = lo;
    loop {
        hi *= 1.1;
        if hi > 1e6 {
            return Err(Error::NoBracket { target: format!("eigenvalue {k}"), trace: String::new() });
        }
        if count(hi)?.0 > k {
            break;
        }
        lo = hi;
    }
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if count(mid)?.0 > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_j0(x: f64) -> f64 {
        let q = -x * x / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..80 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        sum
    }

    fn j0_root(lo: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bessel_j0(lo) * bessel_j0(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    #[test]
    fn first_two_radial_eigenvalues() {
        let j1 = j0_root(2.0, 3.0);
        let j2 = j0_root(5.0, 6.0);
        assert!((linear_eigenvalue(0, 1e-12).unwrap() - j1 * j1).abs() < 1e-6);
        assert!((linear_eigenvalue(1, 1e-12).unwrap() - j2 * j2).abs() < 1e-5);
        assert!((j1 * j1 - LAMBDA_1).abs() < 1e-12);
    }

    #[test]
    fn nodal_k1_is_certified() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let sol = solve_nodal(p, 1, 1e-8).unwrap();
        assert!(sol.certify(1e-6).is_empty(), "{:?}", sol.certify(1e-6));
        assert_eq!(sol.zeros().len(), 1);
        assert!(sol.amplitude > 0.0);
        assert!(sol.regions[1].amplitude < sol.regions[0].amplitude);
    }

    #[test]
    fn reintegration_is_stable() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let sol = solve_nodal(p, 1, 1e-8).unwrap();
        let again = integrate(sol.amplitude, p, 1.0, 1e-11).unwrap();
        let z: Vec<f64> = again.zero_log_radii().map(f64::exp).collect();
        assert_eq!(z.len(), 1);
        assert!((z[0] - sol.zeros()[0]).abs() < 1e-7);
    }

    #[test]
    fn lambda_above_first_eigenvalue_is_rejected() {
        let p = NonlinearityParams::mt_plus(6.0, 0.5).unwrap();
        assert!(matches!(solve_nodal(p, 1, 1e-8), Err(Error::InvalidParams(_))));
        assert!(solve_ground(6.0).is_err());
    }

    #[test]
    fn nodal_rejects_k0_and_eps_out_of_range() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        assert!(solve_nodal(p, 0, 1e-8).is_err());
        let p = NonlinearityParams::mt_plus(1.0, 0.0).unwrap();
        assert!(solve_nodal(p, 1, 1e-8).is_err());
    }

    #[test]
    fn ground_state_energy_and_monotonicity() {
        let (sol, i0) = solve_ground(1.0).unwrap();
        assert!(i0 > 0.0 && i0 < 2.0 * std::f64::consts::PI, "{i0}");
        assert!(sol.zero_log_radii.is_empty());
        for j in 1..400 {
            let r = j as f64 / 400.0;
            assert!(sol.profile.derivative_at(r) < 0.0);
        }
        let (near, _) = solve_ground(5.7).unwrap();
        assert!(near.amplitude < sol.amplitude);
    }

    #[test]
    fn nodal_k2_structure() {
        let p = NonlinearityParams::mt_plus(1.0, 0.5).unwrap();
        let sol = solve_nodal(p, 2, 1e-8).unwrap();
        assert!(sol.certify(1e-6).is_empty(), "{:?}", sol.certify(1e-6));
        // r₁ ≈ e^{−2·10⁵} underflows, so compare log-radii.
        let z = &sol.zero_log_radii;
        assert_eq!(z.len(), 2);
        assert!(z[0].is_finite() && z[0] < z[1] && z[1] < 0.0);
        for w in sol.regions.windows(2) {
            assert!(w[1].amplitude < w[0].amplitude);
            assert_eq!(w[1].sign(), -w[0].sign());
        }
        for r in &sol.regions {
            assert!(r.energy.functional > 0.0);
        }
    }
}
