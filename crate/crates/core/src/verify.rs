//! Invariant and closed-form checks run by `nbl verify`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::blowup::{boundary_flux, rescaled_profile, DEFAULT_RHO_MAX, DEFAULT_SAMPLES};
use crate::energy::{region_energy, total_energy};
use crate::liouville::{eval_profile, mass, ode_residual, ProfileKind};
use crate::moser::{nested_params, MoserPiece};
use crate::nonlinearity::{f_eval, f_prime, primitive, NonlinearityParams};
use crate::radial_ode::{integrate, Source};
use crate::shooting::{linear_eigenvalue, solve_ground, solve_nodal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }

    /// `PASS name: detail` / `FAIL name: detail`.
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn run(name: &str, f: impl FnOnce() -> crate::Result<(bool, String)>) -> Check {
    match f() {
        Ok((ok, detail)) => Check::new(name, ok, detail),
        Err(e) => Check::new(name, false, format!("error: {e}")),
    }
}

/// First positive zero of `J₀` from its power series.
pub fn bessel_j0_first_zero() -> f64 {
    let j0 = |x: f64| {
        let q = -x * x / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        sum
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// All checks, in a fixed order.
pub fn run_all() -> Vec<Check> {
    let p = NonlinearityParams::mt_plus(1.0, 0.5).expect("valid parameters");
    let mut out = Vec::new();

    out.push(run("bessel eigenvalue", || {
        let j = bessel_j0_first_zero();
        let l = linear_eigenvalue(0, 1e-12)?;
        Ok(((l - j * j).abs() < 1e-6, format!("lambda = {l:.12}, j0,1^2 = {:.12}", j * j)))
    }));

    out.push(run("nonlinearity closed forms", || {
        let p0 = NonlinearityParams::mt_plus(1.0, 0.0)?;
        let e2 = std::f64::consts::E.powi(2);
        let a = (f_eval(1.0, &p0)? - e2).abs();
        let b = (f_eval(-1.0, &p0)? + e2).abs();
        Ok((a < 1e-12 && b < 1e-12 && f_eval(0.0, &p0)? == 0.0, format!("|f(1) - e^2| = {a:e}")))
    }));

    out.push(run("nonlinearity invariants", || {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        let mut prev = 0.0;
        for j in 1..=40 {
            let s = 0.1 * j as f64;
            let h = 1e-3;
            let fd = (-primitive(s + 2.0 * h, &p)? + 8.0 * primitive(s + h, &p)? - 8.0 * primitive(s - h, &p)?
                + primitive(s - 2.0 * h, &p)?)
                / (12.0 * h);
            let f = f_eval(s, &p)?;
            worst = worst.max((fd - f).abs() / f.abs().max(1.0));
            ok &= (f_eval(-s, &p)? + f).abs() <= 1e-12 * f.abs();
            ok &= f * s > 2.0 * primitive(s, &p)?;
            ok &= f / s > prev;
            ok &= f_prime(s, &p)? > f / s;
            prev = f / s;
        }
        Ok((ok && worst < 1e-7, format!("max relative |F' - f| = {worst:e}")))
    }));

    out.push(run("liouville residuals", || {
        let kinds = [
            ProfileKind::Bubble,
            ProfileKind::Traveling,
            ProfileKind::Annular { m: 1.0 },
            ProfileKind::General { delta: 1.0 / SQRT_2, y: (2.0 * SQRT_2).ln() },
        ];
        let mut worst: f64 = 0.0;
        for k in kinds {
            for j in 0..10 {
                worst = worst.max(ode_residual(k, 0.1 + j as f64)?.abs());
            }
        }
        for delta in [0.5, 1.0 / SQRT_2, 1.0] {
            for y in [0.0, 1.0] {
                for j in 0..10 {
                    worst = worst.max(ode_residual(ProfileKind::General { delta, y }, 0.1 + j as f64)?.abs());
                }
            }
        }
        Ok((worst < 1e-8, format!("max |residual| = {worst:e}")))
    }));

    out.push(run("general family reduces to the bubble", || {
        let g = ProfileKind::General { delta: 1.0 / SQRT_2, y: (2.0 * SQRT_2).ln() };
        let mut worst: f64 = 0.0;
        for j in 0..=100 {
            let r = 0.1 + 9.9 * j as f64 / 100.0;
            worst = worst.max((eval_profile(g, r)? - eval_profile(ProfileKind::Bubble, r)?).abs());
        }
        Ok((worst < 1e-12, format!("max difference {worst:e}")))
    }));

    out.push(run("liouville masses", || {
        let b = mass(ProfileKind::Bubble)?;
        let a = mass(ProfileKind::Annular { m: 1.0 })?;
        let s = mass(ProfileKind::Annular { m: 0.01 })?;
        let ok = (b - 4.0).abs() < 1e-9 && (a - 2.0 * 6f64.sqrt()).abs() < 1e-8 && (s - 4.0).abs() < 1e-3 && s > 4.0;
        Ok((ok, format!("bubble {b:.12}, annular(1) {a:.12}, annular(0.01) {s:.9}")))
    }));

    out.push(run("moser norm", || {
        let mut worst: f64 = 0.0;
        for (l, r) in [(0.01f64, 0.1f64), (1e-5, 0.1)] {
            let m = MoserPiece::new(l.ln(), r.ln())?;
            let e = crate::energy::region_energy_log(&m, &p, f64::NEG_INFINITY, 0.0, 1)?;
            worst = worst.max((e.dirichlet - 1.0).abs());
        }
        Ok((worst < 1e-10, format!("max |norm^2 - 1| = {worst:e}")))
    }));

    out.push(run("moser cutoff overlap energy", || {
        let n = nested_params(2, 0.25f64.ln())?;
        let piece = MoserPiece::new(n.log_l[1], n.log_r[1])?.with_cutoff(n.log_r[0], n.log_p[0])?;
        let e = crate::energy::region_energy_log(&piece, &p, n.log_r[0], n.log_p[0], 2)?;
        let want = n.overlap_energy(2);
        Ok(((e.dirichlet - want).abs() < 1e-9, format!("{:.12} vs {want:.12}", e.dirichlet)))
    }));

    out.push(run("nested parameters", || {
        let n = nested_params(2, 0.1f64.ln())?;
        let ok = (n.log_l[1] + 10.0).abs() < 1e-12
            && (n.log_p[0] + 20.0).abs() < 1e-12
            && (n.log_r[0] - (-20.0 - 10f64.exp())).abs() < 1e-8
            && n.overflow_level == Some(1);
        Ok((ok, format!("log R_1 = {:.6}, overflow at level {:?}", n.log_r[0], n.overflow_level)))
    }));

    out.push(run("flux identity", || {
        let prof = integrate(2.0, p, 1.0, 1e-10)?;
        let end = prof.log_end();
        let lhs = prof.slope_at_log(end);
        // r u'(r) = −∫₀^r f(u) s ds
        let int = crate::quadrature::integrate_breaks(
            |t| {
                let u = prof.value_at_log(t);
                p.ln_abs_f(u).exp().copysign(u) * (2.0 * t).exp()
            },
            &crate::field::RadialField::breaks(&prof, prof.log_start() - 40.0, end),
            crate::quadrature::Tolerance { abs: 1e-13, rel: 1e-13, max_intervals: 20_000 },
        )?;
        let err = (lhs + int.value).abs();
        Ok((err < 1e-8, format!("|r u' + int f(u) r dr| = {err:e}")))
    }));

    out.push(run("energy additivity", || {
        let prof = integrate(3.0, p, 1.0, 1e-10)?;
        let whole = total_energy(&prof, &p)?;
        let cuts = [0.0, 0.01, 0.2, 0.5, 1.0];
        let mut d = 0.0;
        for w in cuts.windows(2) {
            d += region_energy(&prof, &p, w[0], w[1])?.dirichlet;
        }
        let err = (d - whole.dirichlet).abs();
        Ok((err < 1e-9, format!("partition error {err:e}")))
    }));

    out.push(run("ground state", || {
        let (sol, i0) = solve_ground(1.0)?;
        let mono = (1..200).all(|j| sol.profile.derivative_at(j as f64 / 200.0) < 0.0);
        Ok((i0 > 0.0 && i0 < 2.0 * PI && mono, format!("I0 = {i0:.12}, u' < 0: {mono}")))
    }));

    for k in [1usize, 2] {
        out.push(run(&format!("nodal solution k = {k}"), || {
            let sol = solve_nodal(p, k, 1e-8)?;
            let issues = sol.certify(1e-6);
            let flux = boundary_flux(&sol).unwrap_or(f64::NAN);
            let sign_ok = flux * sol.regions[k].sign() > 0.0;
            let rep = rescaled_profile(&sol, 1, DEFAULT_RHO_MAX, DEFAULT_SAMPLES)?;
            let window_ok = rep.window.iter().all(|&(_, z)| z <= 0.0) && rep.window[0].1 == 0.0;
            let nehari = max_abs(sol.regions.iter().map(|r| r.energy.relative_nehari()));
            Ok((
                issues.is_empty() && sign_ok && window_ok,
                format!(
                    "|u(1)| = {:e}, max Nehari {nehari:e}, issues {issues:?}, flux sign ok: {sign_ok}",
                    sol.boundary_value.abs()
                ),
            ))
        }));
    }

    out.push(run("zero hook", || {
        let z = integrate(1.5, Source::Zero, 1.0, 1e-10)?;
        let ok = z.values().iter().all(|&u| u == 1.5);
        Ok((ok, "zero source keeps the amplitude".into()))
    }));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_root() {
        assert!((bessel_j0_first_zero() - 2.404_825_557_695_773).abs() < 1e-14);
    }

    #[test]
    fn check_lines() {
        let c = Check::new("x", true, "y".into());
        assert_eq!(c.line(), "PASS x: y");
    }
}
