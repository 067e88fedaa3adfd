//! Drivers behind the command-line tool: single solves as JSON documents and
//! ε-sweeps as CSV tables with a JSON metadata sidecar.
//!
//! Output is deterministic: rows follow the ε list whatever the thread
//! count, floats are written with 17 significant digits, and nothing
//! time-dependent is recorded.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blowup::{
    all_reports, amplitude_ratios, boundary_flux, log_scaling_params, radial_lemma_metric, rescaled_profile,
    BubbleReport, DEFAULT_RHO_MAX, DEFAULT_SAMPLES,
};
use crate::energy::RegionEnergy;
use crate::error::{Error, Result};
use crate::moser::{assemble_w, MoserAssembly};
use crate::nonlinearity::{NonlinearityParams, DEFAULT_GUARD};
use crate::shooting::{solve_ground_with, solve_nodal_with, BranchInfo, NodalSolution, ShootingConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda: f64,
    pub k: usize,
    pub eps_list: Vec<f64>,
    pub rho_max: f64,
    pub boundary_tol: f64,
    pub integrator_tol: f64,
    pub guard: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = ShootingConfig::default();
        Self {
            lambda: 1.0,
            k: 1,
            eps_list: vec![0.8, 0.6, 0.45, 0.35, 0.28],
            rho_max: DEFAULT_RHO_MAX,
            boundary_tol: s.boundary_tol,
            integrator_tol: s.integrator_tol,
            guard: DEFAULT_GUARD,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::InvalidParams("eps list is empty".into()));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidParams(format!("eps {e} outside (0, 1)")));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParams("eps list must be strictly decreasing".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("sweeps need k >= 1".into()));
        }
        let ok = self.rho_max > 0.0
            && self.boundary_tol > 0.0
            && self.integrator_tol > 0.0
            && self.guard.is_finite()
            && self.lambda > 0.0;
        if !ok {
            return Err(Error::InvalidParams("rho_max, lambda and tolerances must be positive, guard finite".into()));
        }
        Ok(())
    }

    pub fn shooting(&self) -> ShootingConfig {
        ShootingConfig::default()
            .with_boundary_tol(self.boundary_tol)
            .with_integrator_tol(self.integrator_tol)
            .with_guard(self.guard)
    }

    pub fn params(&self, eps: f64) -> Result<NonlinearityParams> {
        Ok(NonlinearityParams::mt_plus(self.lambda, eps)?.with_guard(self.guard))
    }
}

/// One ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `ok`, or the error kind.
    pub status: String,
    pub message: Option<String>,
    pub amplitudes: Vec<f64>,
    pub zeros: Vec<f64>,
    pub zero_log_radii: Vec<f64>,
    pub dirichlet: Vec<f64>,
    pub functional: Vec<f64>,
    pub nehari_relative: Vec<f64>,
    pub gamma: Vec<f64>,
    pub log_gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub log_delta: Vec<f64>,
    /// NaN where the window did not fit in the region.
    pub sup_deviation: Vec<f64>,
    pub amplitude_ratios: Vec<f64>,
    pub boundary_flux: f64,
    pub total_dirichlet: f64,
    pub total_i: f64,
    pub radial_lemma_metric: f64,
    pub amplitude: f64,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(eps: f64, e: &Error) -> Self {
        Self {
            eps,
            status: e.kind().into(),
            message: Some(e.to_string()),
            amplitudes: vec![],
            zeros: vec![],
            zero_log_radii: vec![],
            dirichlet: vec![],
            functional: vec![],
            nehari_relative: vec![],
            gamma: vec![],
            log_gamma: vec![],
            delta: vec![],
            log_delta: vec![],
            sup_deviation: vec![],
            amplitude_ratios: vec![],
            boundary_flux: f64::NAN,
            total_dirichlet: f64::NAN,
            total_i: f64::NAN,
            radial_lemma_metric: f64::NAN,
            amplitude: f64::NAN,
        }
    }

    fn from_solution(sol: &NodalSolution, rho_max: f64) -> Result<Self> {
        let n = sol.regions.len();
        let mut row = Self::failed(sol.params.eps(), &Error::InvalidParams(String::new()));
        row.status = "ok".into();
        row.message = None;
        row.amplitude = sol.amplitude;
        row.zeros = sol.zeros();
        row.zero_log_radii = sol.zero_log_radii.clone();
        for i in 1..=n {
            let reg = &sol.regions[i - 1];
            row.amplitudes.push(reg.amplitude);
            row.dirichlet.push(reg.energy.dirichlet);
            row.functional.push(reg.energy.functional);
            row.nehari_relative.push(reg.energy.relative_nehari());
            let (lg, ld) = log_scaling_params(sol, i)?;
            row.gamma.push(lg.exp());
            row.log_gamma.push(lg);
            row.delta.push(ld.exp());
            row.log_delta.push(ld);
            row.sup_deviation.push(match rescaled_profile(sol, i, rho_max, DEFAULT_SAMPLES) {
                Ok(rep) => rep.sup_deviation,
                Err(Error::RegionTooNarrow { .. }) => f64::NAN,
                Err(e) => return Err(e),
            });
        }
        row.amplitude_ratios = amplitude_ratios(sol);
        row.boundary_flux = boundary_flux(sol).unwrap_or(f64::NAN);
        row.total_dirichlet = sol.total_dirichlet();
        row.total_i = sol.total_functional();
        row.radial_lemma_metric = radial_lemma_metric(sol);
        Ok(row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub config: SweepConfig,
    /// `I₀(u₀)`; NaN if the reference solve failed.
    pub i0_reference: f64,
    pub i0_status: String,
    pub rows: Vec<SweepRow>,
}

/// Column names for `k` interior zeros.
pub fn sweep_header(k: usize) -> Vec<String> {
    let n = k + 1;
    let per = |name: &'static str, count: usize| (1..=count).map(move |i| format!("{name}_{i}"));
    let mut h = vec!["eps".to_string(), "status".to_string()];
    h.extend(per("amplitude", n));
    h.extend(per("r", k));
    h.extend(per("log_r", k));
    h.extend(per("dirichlet", n));
    h.extend(per("functional", n));
    h.extend(per("nehari_rel", n));
    h.extend(per("gamma", n));
    h.extend(per("log_gamma", n));
    h.extend(per("delta", n));
    h.extend(per("log_delta", n));
    h.extend(per("sup_deviation", n));
    h.extend(per("amplitude_ratio", k));
    h.extend(
        ["boundary_flux", "total_dirichlet", "total_I", "I0_reference", "radial_lemma_metric"].map(String::from),
    );
    h
}

fn solve_row(cfg: &SweepConfig, eps: f64) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let sol = solve_nodal_with(cfg.params(eps)?, cfg.k, &cfg.shooting())?;
        SweepRow::from_solution(&sol, cfg.rho_max)
    };
    run().unwrap_or_else(|e| SweepRow::failed(eps, &e))
}

/// Solves every ε (concurrently, at most `threads` workers) and the
/// reference problem.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<SweepTable> {
    cfg.validate()?;
    if cfg.lambda >= crate::nonlinearity::LAMBDA_1 {
        return Err(Error::InvalidParams(format!("lambda {} is not below the first eigenvalue", cfg.lambda)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let (rows, ground) = pool.install(|| {
        rayon::join(
            || cfg.eps_list.par_iter().map(|&eps| solve_row(cfg, eps)).collect::<Vec<_>>(),
            || solve_ground_with(cfg.lambda, &cfg.shooting()),
        )
    });
    let (i0_reference, i0_status) = match ground {
        Ok((_, i0)) => (i0, "ok".to_string()),
        Err(e) => (f64::NAN, e.kind().to_string()),
    };
    Ok(SweepTable { config: cfg.clone(), i0_reference, i0_status, rows })
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        sweep_header(self.config.k)
    }

    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.is_ok()).count()
    }

    fn csv_cells(&self, row: &SweepRow) -> Vec<String> {
        let k = self.config.k;
        let n = k + 1;
        let pad = |v: &[f64], len: usize| -> Vec<String> {
            (0..len).map(|i| v.get(i).map_or(String::new(), |&x| fmt_f64(x))).collect()
        };
        let scalar = |x: f64| if row.is_ok() { fmt_f64(x) } else { String::new() };
        let mut c = vec![fmt_f64(row.eps), row.status.clone()];
        c.extend(pad(&row.amplitudes, n));
        c.extend(pad(&row.zeros, k));
        c.extend(pad(&row.zero_log_radii, k));
        c.extend(pad(&row.dirichlet, n));
        c.extend(pad(&row.functional, n));
        c.extend(pad(&row.nehari_relative, n));
        c.extend(pad(&row.gamma, n));
        c.extend(pad(&row.log_gamma, n));
        c.extend(pad(&row.delta, n));
        c.extend(pad(&row.log_delta, n));
        c.extend(pad(&row.sup_deviation, n));
        c.extend(pad(&row.amplitude_ratios, k));
        c.push(scalar(row.boundary_flux));
        c.push(scalar(row.total_dirichlet));
        c.push(scalar(row.total_i));
        c.push(fmt_f64(self.i0_reference));
        c.push(scalar(row.radial_lemma_metric));
        c
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.csv_cells(row).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": "nbl-sweep",
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "I0_reference": self.i0_reference,
            "I0_status": self.i0_status,
            "rows": self.rows,
        })
    }

    /// Sidecar document describing the CSV.
    pub fn metadata(&self) -> Value {
        let s = self.config.shooting();
        json!({
            "schema": "nbl-sweep",
            "schema_version": SCHEMA_VERSION,
            "generator": format!("nodal-blowup {}", env!("CARGO_PKG_VERSION")),
            "columns": self.header(),
            "float_format": "17 significant digits",
            "config": self.config,
            "family": "MT_PLUS",
            "branch_rule": "smallest amplitude",
            "scan": { "lo": s.scan_lo, "hi": s.scan_hi, "ratio": s.scan_ratio },
            "rescaled_window": { "rho_max": self.config.rho_max, "n_samples": DEFAULT_SAMPLES },
            "I0_reference": self.i0_reference,
            "I0_status": self.i0_status,
            "rows": self.rows.len(),
            "rows_ok": self.succeeded(),
            "row_status": self.rows.iter().map(|r| json!({"eps": r.eps, "status": r.status})).collect::<Vec<_>>(),
        })
    }
}

/// One profile node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub log_r: f64,
    pub r: f64,
    pub u: f64,
    /// `r·u'(r)`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub index: usize,
    pub log_r_lo: Option<f64>,
    pub log_r_hi: f64,
    pub max_log_radius: Option<f64>,
    pub amplitude: f64,
    pub energy: RegionEnergy,
}

/// Everything `solve` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub schema: String,
    pub schema_version: u32,
    pub params: NonlinearityParams,
    pub k: usize,
    pub amplitude: f64,
    pub boundary_value: f64,
    pub zeros: Vec<f64>,
    pub zero_log_radii: Vec<f64>,
    pub regions: Vec<RegionSummary>,
    pub bubbles: Vec<BubbleReport>,
    pub amplitude_ratios: Vec<f64>,
    pub boundary_flux: Option<f64>,
    pub total_dirichlet: f64,
    pub total_functional: f64,
    pub radial_lemma_metric: f64,
    pub branch: BranchInfo,
    pub profile: Vec<ProfileSample>,
}

impl SolveDocument {
    pub fn new(sol: &NodalSolution, rho_max: f64) -> Result<Self> {
        let prof = &sol.profile;
        let profile = prof
            .log_radii()
            .iter()
            .zip(prof.values().iter().zip(prof.slopes()))
            .map(|(&t, (&u, &v))| ProfileSample { log_r: t, r: t.exp(), u, slope: v })
            .collect();
        let bubbles = all_reports(sol, rho_max).or_else(|_| {
            // Keep whatever regions admit a window.
            Ok::<_, Error>(
                (1..=sol.regions.len())
                    .filter_map(|i| rescaled_profile(sol, i, rho_max, DEFAULT_SAMPLES).ok())
                    .collect(),
            )
        })?;
        Ok(Self {
            schema: "nbl-solve".into(),
            schema_version: SCHEMA_VERSION,
            params: sol.params,
            k: sol.k,
            amplitude: sol.amplitude,
            boundary_value: sol.boundary_value,
            zeros: sol.zeros(),
            zero_log_radii: sol.zero_log_radii.clone(),
            regions: sol
                .regions
                .iter()
                .map(|r| RegionSummary {
                    index: r.index,
                    log_r_lo: r.log_r_lo.is_finite().then_some(r.log_r_lo),
                    log_r_hi: r.log_r_hi,
                    max_log_radius: r.max_log_radius.is_finite().then_some(r.max_log_radius),
                    amplitude: r.amplitude,
                    energy: r.energy,
                })
                .collect(),
            bubbles,
            amplitude_ratios: amplitude_ratios(sol),
            boundary_flux: boundary_flux(sol),
            total_dirichlet: sol.total_dirichlet(),
            total_functional: sol.total_functional(),
            radial_lemma_metric: radial_lemma_metric(sol),
            branch: sol.branch.clone(),
            profile,
        })
    }

    /// Profile nodes as CSV.
    pub fn profile_csv(&self) -> String {
        let mut out = String::from("log_r,r,u,slope\n");
        for s in &self.profile {
            out.push_str(&[s.log_r, s.r, s.u, s.slope].map(fmt_f64).join(","));
            out.push('\n');
        }
        out
    }
}

/// Solves for `k` zeros (`k = 0`: the reference problem at `ε = 0`).
pub fn solve(lambda: f64, eps: f64, k: usize, cfg: &ShootingConfig) -> Result<NodalSolution> {
    if k == 0 {
        Ok(solve_ground_with(lambda, cfg)?.0)
    } else {
        solve_nodal_with(NonlinearityParams::mt_plus(lambda, eps)?.with_guard(cfg.guard), k, cfg)
    }
}

/// The Moser assembly together with the matching nodal solve when it
/// succeeds.
pub fn moser_report(lambda: f64, eps: f64, k: usize, log_r_k: f64, cfg: &ShootingConfig) -> Result<Value> {
    let p = NonlinearityParams::mt_plus(lambda, eps)?.with_guard(cfg.guard);
    let (u0, i0) = solve_ground_with(lambda, cfg)?;
    let a: MoserAssembly = assemble_w(k, log_r_k, &p, &u0)?;
    let nodal = solve_nodal_with(p, k, cfg).map(|s| s.total_functional());
    Ok(json!({
        "schema": "nbl-moser",
        "schema_version": SCHEMA_VERSION,
        "log_R_k": log_r_k,
        "I0_reference": i0,
        "assembly": a,
        "nodal_total_I": nodal.as_ref().ok(),
        "nodal_status": nodal.as_ref().map(|_| "ok").unwrap_or_else(|e| e.kind()),
        "upper_bound_holds": nodal.as_ref().ok().map(|&e| a.total_energy >= e),
    }))
}
