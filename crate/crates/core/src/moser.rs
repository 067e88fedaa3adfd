//! Moser functions, logarithmic cutoffs, the nested parameter recipe and the
//! assembled test function `w = Σ tᵢ wᵢ` projected piecewise onto the Nehari
//! manifold.
//!
//! All radii are carried as logarithms; the recipe drives them below
//! `e^{−10⁴}` already for two nodal regions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{region_energy_log, RegionEnergy};
use crate::error::{Error, Result};
use crate::field::{clip_breaks, RadialField, Scaled};
use crate::nonlinearity::NonlinearityParams;
use crate::quadrature::graded_breaks;
use crate::shooting::NodalSolution;

/// Largest `k` the assembly accepts.
pub const MAX_K: usize = 3;

/// Levels with `log(R/l)` beyond this use the limits `t² = 4π`, `I = 2π`.
pub const DEPTH_LIMIT: f64 = 1e4;

/// Relative accuracy of the Nehari coefficient.
pub const PROJECTION_RTOL: f64 = 1e-10;

/// `m_{l,R}(e^{log_r})`.
pub fn moser_value(log_l: f64, log_r_cap: f64, log_r: f64) -> f64 {
    let len = log_r_cap - log_l;
    if log_r <= log_l {
        (len / (2.0 * PI)).sqrt()
    } else if log_r < log_r_cap {
        (log_r_cap - log_r) / (2.0 * PI * len).sqrt()
    } else {
        0.0
    }
}

/// `φ_{l,R}(e^{log_r})`: 0 inside `B_l`, linear in `log r`, 1 outside `B_R`.
pub fn cutoff_value(log_l: f64, log_r_cap: f64, log_r: f64) -> f64 {
    if log_r <= log_l {
        0.0
    } else if log_r < log_r_cap {
        (log_r - log_l) / (log_r_cap - log_l)
    } else {
        1.0
    }
}

fn cutoff_slope(log_l: f64, log_r_cap: f64, log_r: f64) -> f64 {
    if log_r > log_l && log_r < log_r_cap {
        1.0 / (log_r_cap - log_l)
    } else {
        0.0
    }
}

fn check_pair(log_l: f64, log_r_cap: f64) -> Result<()> {
    if log_l < log_r_cap && log_r_cap <= 0.0 && log_l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("need log_l < log_R <= 0, got ({log_l}, {log_r_cap})")))
    }
}

/// `φ_{a,b} · m_{l,R}` with `b ≤ l`, or plain `m_{l,R}` without a cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoserPiece {
    pub cutoff: Option<(f64, f64)>,
    pub log_l: f64,
    pub log_r: f64,
}

impl MoserPiece {
    pub fn new(log_l: f64, log_r: f64) -> Result<Self> {
        check_pair(log_l, log_r)?;
        Ok(Self { cutoff: None, log_l, log_r })
    }

    pub fn with_cutoff(self, log_a: f64, log_b: f64) -> Result<Self> {
        if !(log_a < log_b && log_b <= self.log_l && log_a.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "cutoff ({log_a}, {log_b}) must end before the plateau edge {}",
                self.log_l
            )));
        }
        Ok(Self { cutoff: Some((log_a, log_b)), ..self })
    }

    fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.cutoff.map(|(a, b)| vec![a, b]).unwrap_or_default();
        k.extend([self.log_l, self.log_r]);
        k
    }
}

impl RadialField for MoserPiece {
    fn value(&self, t: f64) -> f64 {
        let c = self.cutoff.map_or(1.0, |(a, b)| cutoff_value(a, b, t));
        c * moser_value(self.log_l, self.log_r, t)
    }

    fn slope(&self, t: f64) -> f64 {
        let m = moser_value(self.log_l, self.log_r, t);
        let dm = if t > self.log_l && t < self.log_r {
            -1.0 / (2.0 * PI * (self.log_r - self.log_l)).sqrt()
        } else {
            0.0
        };
        match self.cutoff {
            None => dm,
            Some((a, b)) => cutoff_slope(a, b, t) * m + cutoff_value(a, b, t) * dm,
        }
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let knots = self.knots();
        let mut pts = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            if a < b {
                pts.extend(graded_breaks(a, b));
            }
        }
        pts.extend(knots);
        clip_breaks(lo, hi, pts)
    }

    fn core(&self) -> Option<(f64, f64)> {
        match self.cutoff {
            None => Some((self.log_l, moser_value(self.log_l, self.log_r, self.log_l))),
            Some((a, _)) => Some((a, 0.0)),
        }
    }

    fn floor(&self) -> f64 {
        self.cutoff.map_or(self.log_l, |(a, _)| a)
    }
}

/// `φ_{a,b} · inner`.
#[derive(Clone, Copy)]
pub struct CutoffField<'a> {
    pub log_a: f64,
    pub log_b: f64,
    pub inner: &'a dyn RadialField,
}

impl RadialField for CutoffField<'_> {
    fn value(&self, t: f64) -> f64 {
        cutoff_value(self.log_a, self.log_b, t) * self.inner.value(t)
    }

    fn slope(&self, t: f64) -> f64 {
        cutoff_slope(self.log_a, self.log_b, t) * self.inner.value(t)
            + cutoff_value(self.log_a, self.log_b, t) * self.inner.slope(t)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = self.inner.breaks(lo.max(self.log_a), hi);
        pts.extend([self.log_a, self.log_b]);
        clip_breaks(lo, hi, pts)
    }

    fn core(&self) -> Option<(f64, f64)> {
        Some((self.log_a, 0.0))
    }

    fn floor(&self) -> f64 {
        self.log_a
    }
}

/// Logarithms of the nested radii `l_i < R_i < p_i`, `i = 1..=k`, with
/// `p_k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedParams {
    pub k: usize,
    pub log_l: Vec<f64>,
    pub log_r: Vec<f64>,
    pub log_p: Vec<f64>,
    /// Deepest level (1-based) whose `log l` overflowed; its entry is `-inf`.
    pub overflow_level: Option<usize>,
}

impl NestedParams {
    /// Whether `log l_i < log R_i < log p_i < log l_{i+1}` holds where defined.
    pub fn is_ordered(&self) -> bool {
        let mut seq = Vec::with_capacity(3 * self.k);
        for i in 0..self.k {
            seq.extend([self.log_l[i], self.log_r[i], self.log_p[i]]);
        }
        seq.windows(2).all(|w| w[0] < w[1])
    }

    /// `log(R_i/l_i) / log(p_{i−1}/R_{i−1})` for `i = 2..=k`.
    pub fn overlap_energy(&self, i: usize) -> f64 {
        (self.log_r[i - 1] - self.log_l[i - 1]) / (self.log_p[i - 2] - self.log_r[i - 2])
    }
}

/// `l_k = e^{−1/R_k}`, `p_{k−1} = l_k²`, `R_{k−1} = p_{k−1} e^{−1/l_k}`, and so
/// on down to `l_1`, all in log form.
pub fn nested_params(k: usize, log_r_k: f64) -> Result<NestedParams> {
    if k == 0 || !(log_r_k < 0.0) {
        return Err(Error::InvalidParams(format!("need k >= 1 and log_R_k < 0, got ({k}, {log_r_k})")));
    }
    let mut log_l = vec![f64::NEG_INFINITY; k];
    let mut log_r = vec![f64::NEG_INFINITY; k];
    let mut log_p = vec![f64::NEG_INFINITY; k];
    log_p[k - 1] = 0.0;
    log_r[k - 1] = log_r_k;
    let mut overflow_level = None;
    for i in (0..k).rev() {
        // log l_i = −1/R_i
        let ll = -(-log_r[i]).exp();
        if !ll.is_finite() {
            overflow_level = Some(i + 1);
            break;
        }
        log_l[i] = ll;
        if i == 0 {
            break;
        }
        log_p[i - 1] = 2.0 * ll;
        let lr = log_p[i - 1] - (-ll).exp();
        if !lr.is_finite() {
            overflow_level = Some(i);
            break;
        }
        log_r[i - 1] = lr;
    }
    Ok(NestedParams { k, log_l, log_r, log_p, overflow_level })
}

/// As [`nested_params`], failing with `LogOverflow` instead of marking.
pub fn nested_params_strict(k: usize, log_r_k: f64) -> Result<NestedParams> {
    let n = nested_params(k, log_r_k)?;
    match n.overflow_level {
        Some(level) => Err(Error::LogOverflow { level }),
        None => Ok(n),
    }
}

/// `t·‖∇w‖² − t⁻¹∫f(tw)tw`, whose sign is that of the Nehari residual of `tw`.
fn nehari_gap(w: &dyn RadialField, p: &NonlinearityParams, t: f64, t_lo: f64, t_hi: f64) -> Result<RegionEnergy> {
    region_energy_log(&Scaled { field: w, scale: t }, p, t_lo, t_hi, 0)
}

/// The `t > 0` with `tw` on the Nehari manifold, for `w` supported in
/// `e^{t_lo} < r < e^{t_hi}`.
pub fn nehari_project(w: &dyn RadialField, p: &NonlinearityParams, t_lo: f64, t_hi: f64) -> Result<f64> {
    let d = nehari_gap(w, p, 1.0, t_lo, t_hi)?.dirichlet;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParams(format!("Dirichlet energy {d} is not positive")));
    }
    let positive = |t: f64| -> Result<Option<bool>> {
        match nehari_gap(w, p, t, t_lo, t_hi) {
            Ok(e) => Ok(Some(e.nehari_residual > 0.0)),
            Err(Error::OverflowGuard { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut lo = 1e-6;
    if positive(lo)? != Some(true) {
        return Err(Error::NoRoot { t_max: lo });
    }
    let mut hi = 2.0 * lo;
    loop {
        match positive(hi)? {
            Some(true) => {
                lo = hi;
                hi *= 2.0;
            }
            Some(false) => break,
            None => return Err(Error::NoRoot { t_max: hi }),
        }
    }
    while hi - lo > PROJECTION_RTOL * lo {
        let mid = 0.5 * (lo + hi);
        match positive(mid)? {
            Some(true) => lo = mid,
            Some(false) => hi = mid,
            None => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One projected piece `tᵢ wᵢ` of the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyPiece {
    pub index: usize,
    pub t: f64,
    /// `‖∇wᵢ‖²` before projection.
    pub dirichlet_unit: f64,
    pub energy: RegionEnergy,
    /// The piece is deeper than [`DEPTH_LIMIT`] and uses the limits
    /// `t² = 4π`, `I = 2π`.
    pub analytic_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserAssembly {
    pub k: usize,
    pub params: NonlinearityParams,
    pub nested: NestedParams,
    pub pieces: Vec<AssemblyPiece>,
    pub total_dirichlet: f64,
    pub total_energy: f64,
}

impl MoserAssembly {
    pub fn t(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.t).collect()
    }
}

fn project_piece(
    index: usize,
    w: &dyn RadialField,
    p: &NonlinearityParams,
    t_lo: f64,
    t_hi: f64,
) -> Result<AssemblyPiece> {
    let unit = nehari_gap(w, p, 1.0, t_lo, t_hi)?.dirichlet;
    let t = nehari_project(w, p, t_lo, t_hi)?;
    let mut energy = nehari_gap(w, p, t, t_lo, t_hi)?;
    energy.region_index = index;
    Ok(AssemblyPiece { index, t, dirichlet_unit: unit, energy, analytic_limit: false })
}

/// Builds `w = Σ tᵢ wᵢ` with `w₁ = m_{l₁,R₁}`, `wᵢ = ±φ_{R_{i−1},p_{i−1}} m_{lᵢ,Rᵢ}`
/// and `w_{k+1} = ±φ_{R_k,1} u₀`, projecting each piece onto the Nehari
/// manifold of `p`.
pub fn assemble_w(k: usize, log_r_k: f64, p: &NonlinearityParams, u0: &NodalSolution) -> Result<MoserAssembly> {
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidParams(format!("assembly supports 1 <= k <= {MAX_K}, got {k}")));
    }
    if u0.k != 0 || (u0.params.lambda() - p.lambda()).abs() > 1e-12 * p.lambda() {
        return Err(Error::InvalidParams("u0 must be the positive solution at the same lambda".into()));
    }
    let nested = nested_params(k, log_r_k)?;
    let mut pieces = Vec::with_capacity(k + 1);
    for i in 0..k {
        let (ll, lr) = (nested.log_l[i], nested.log_r[i]);
        if !(lr - ll <= DEPTH_LIMIT) {
            let limit = RegionEnergy {
                region_index: i + 1,
                dirichlet: 4.0 * PI,
                potential: 0.0,
                functional: 2.0 * PI,
                nehari_residual: 0.0,
            };
            pieces.push(AssemblyPiece {
                index: i + 1,
                t: (4.0 * PI).sqrt(),
                dirichlet_unit: 1.0,
                energy: limit,
                analytic_limit: true,
            });
            continue;
        }
        let mut piece = MoserPiece::new(ll, lr)?;
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            let a = nested.log_r[i - 1];
            if !a.is_finite() {
                return Err(Error::LogOverflow { level: i });
            }
            piece = piece.with_cutoff(a, nested.log_p[i - 1])?;
            a
        };
        pieces.push(project_piece(i + 1, &piece, p, lo, lr)?);
    }
    let tail = CutoffField { log_a: log_r_k, log_b: 0.0, inner: &u0.profile };
    pieces.push(project_piece(k + 1, &tail, p, log_r_k, 0.0)?);

    let total_dirichlet = pieces.iter().map(|q| q.energy.dirichlet).sum();
    let total_energy = pieces.iter().map(|q| q.energy.functional).sum();
    Ok(MoserAssembly { k, params: *p, nested, pieces, total_dirichlet, total_energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::solve_ground;

    fn p05() -> NonlinearityParams {
        NonlinearityParams::mt_plus(1.0, 0.5).unwrap()
    }

    #[test]
    fn values() {
        let (l, r) = (0.01f64.ln(), 0.1f64.ln());
        assert_eq!(moser_value(l, r, r), 0.0);
        let plateau = (10f64.ln() / (2.0 * PI)).sqrt();
        assert!((moser_value(l, r, l - 3.0) - plateau).abs() < 1e-15);
        assert!((moser_value(l, r, l) - plateau).abs() < 1e-14);
        assert!((moser_value(l, r, l + 1e-300) - plateau).abs() < 1e-14);
        assert!((plateau - 0.605_366).abs() < 1e-6);
        assert_eq!(cutoff_value(l, r, l), 0.0);
        assert_eq!(cutoff_value(l, r, r), 1.0);
        assert!((cutoff_value(l, r, 0.5 * (l + r)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_dirichlet_norm() {
        let p = p05();
        for (l, r) in [(0.01f64, 0.1f64), (1e-5, 0.1), (1e-3, 0.5)] {
            let m = MoserPiece::new(l.ln(), r.ln()).unwrap();
            let e = region_energy_log(&m, &p, f64::NEG_INFINITY, 0.0, 1).unwrap();
            assert!((e.dirichlet - 1.0).abs() < 1e-10, "{}", e.dirichlet);
        }
    }

    #[test]
    fn recipe_arithmetic() {
        let n = nested_params(1, 0.1f64.ln()).unwrap();
        assert!((n.log_l[0] + 10.0).abs() < 1e-12);
        assert_eq!(n.overflow_level, None);
        for r in [0.5f64, 0.1, 0.01] {
            assert!(nested_params(1, r.ln()).unwrap().is_ordered());
        }
        let n = nested_params(2, 0.1f64.ln()).unwrap();
        assert!((n.log_l[1] + 10.0).abs() < 1e-12);
        assert!((n.log_p[0] + 20.0).abs() < 1e-12);
        let expect = -20.0 - 10f64.exp();
        assert!((n.log_r[0] - expect).abs() < 1e-9 * expect.abs());
        assert!((n.log_r[0] + 22_046.465_794_806_718).abs() < 1e-6);
        assert_eq!(n.overflow_level, Some(1));
        assert!(matches!(nested_params_strict(2, 0.1f64.ln()), Err(Error::LogOverflow { level: 1 })));
        assert!(nested_params(0, -1.0).is_err());
        assert!(nested_params(1, 0.0).is_err());
    }

    #[test]
    fn overlap_energy_matches_formula() {
        // Shallow recipe so that both levels are representable.
        let n = nested_params(2, 0.25f64.ln()).unwrap();
        assert_eq!(n.overflow_level, None, "{n:?}");
        assert!(n.is_ordered());
        let piece = MoserPiece::new(n.log_l[1], n.log_r[1]).unwrap().with_cutoff(n.log_r[0], n.log_p[0]).unwrap();
        let e = region_energy_log(&piece, &p05(), n.log_r[0], n.log_p[0], 2).unwrap();
        assert!((e.dirichlet - n.overlap_energy(2)).abs() < 1e-9, "{} vs {}", e.dirichlet, n.overlap_energy(2));
    }

    #[test]
    fn projection_is_idempotent_and_unique() {
        let p = p05();
        let m = MoserPiece::new(0.01f64.ln(), 0.1f64.ln()).unwrap();
        let t = nehari_project(&m, &p, f64::NEG_INFINITY, 0.1f64.ln()).unwrap();
        assert!(t > 0.0);
        let tw = Scaled { field: &m, scale: t };
        let e = region_energy_log(&tw, &p, f64::NEG_INFINITY, 0.1f64.ln(), 1).unwrap();
        assert!(e.relative_nehari() < 1e-8, "{}", e.relative_nehari());
        let again = nehari_project(&tw, &p, f64::NEG_INFINITY, 0.1f64.ln()).unwrap();
        assert!((again - 1.0).abs() < 1e-8);
        // g(t)/t² decreases past the root.
        for s in [1.1, 1.5, 2.0] {
            let g = nehari_gap(&m, &p, s * t, f64::NEG_INFINITY, 0.1f64.ln()).unwrap();
            assert!(g.nehari_residual < 0.0);
        }
    }

    #[test]
    fn solution_region_projects_to_one() {
        let sol = crate::shooting::solve_nodal(p05(), 1, 1e-8).unwrap();
        let r = &sol.regions[1];
        let t = nehari_project(&sol.profile, &sol.params, r.log_r_lo, r.log_r_hi).unwrap();
        assert!((t - 1.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn assembly_k1() {
        let p = p05();
        let (u0, i0) = solve_ground(1.0).unwrap();
        let a = assemble_w(1, 0.01f64.ln(), &p, &u0).unwrap();
        assert_eq!(a.pieces.len(), 2);
        assert!(a.pieces.iter().all(|q| q.t > 0.0));
        // The cutoff error decays like 1/|log R₁|.
        let mut gaps = Vec::new();
        for log_r in [0.01f64.ln(), -18.4, -73.6] {
            let a = assemble_w(1, log_r, &p, &u0).unwrap();
            gaps.push(a.pieces[1].energy.functional - i0);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{gaps:?}");
        assert!(gaps[2] < 0.15 * i0, "{gaps:?}");
        assert!(a.pieces[0].t.powi(2) / 2.0 <= 3.0 * PI);
        assert!(a.total_energy.is_finite());
    }

    #[test]
    fn assembly_k2_uses_limits_for_unrepresentable_levels() {
        let (u0, _) = solve_ground(1.0).unwrap();
        let a = assemble_w(2, 0.1f64.ln(), &p05(), &u0).unwrap();
        assert!(a.pieces[0].analytic_limit);
        assert!(!a.pieces[1].analytic_limit);
        assert!(a.pieces.iter().all(|q| q.t > 0.0 && q.energy.functional > 0.0));
        assert!(assemble_w(4, -1.0, &p05(), &u0).is_err());
    }

    #[test]
    fn disjoint_supports() {
        let (u0, _) = solve_ground(1.0).unwrap();
        let n = nested_params(1, 0.1f64.ln()).unwrap();
        let w1 = MoserPiece::new(n.log_l[0], n.log_r[0]).unwrap();
        let w2 = CutoffField { log_a: n.log_r[0], log_b: 0.0, inner: &u0.profile };
        for j in 0..400 {
            let t = -15.0 + 15.0 * j as f64 / 399.0;
            assert_eq!(w1.value(t) * w2.value(t), 0.0);
        }
        let p = p05();
        let whole = region_energy_log(&w1, &p, f64::NEG_INFINITY, 0.0, 0).unwrap().dirichlet
            + region_energy_log(&w2, &p, f64::NEG_INFINITY, 0.0, 0).unwrap().dirichlet;
        let split = region_energy_log(&w1, &p, f64::NEG_INFINITY, n.log_r[0], 0).unwrap().dirichlet
            + region_energy_log(&w2, &p, n.log_r[0], 0.0, 0).unwrap().dirichlet;
        assert!((whole - split).abs() < 1e-9);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn moser_norm_is_one(ll in -30.0f64..-1.0, gap in 0.1f64..10.0) {
            let lr = (ll + gap).min(0.0);
            proptest::prop_assume!(lr > ll);
            let m = MoserPiece::new(ll, lr).unwrap();
            let e = region_energy_log(&m, &p05(), f64::NEG_INFINITY, 0.0, 0).unwrap();
            proptest::prop_assert!((e.dirichlet - 1.0).abs() < 1e-10);
        }
    }
}
