//! Browser bindings. Every export returns a JSON string; failures come back
//! as `{"error": kind, "message": text}` instead of throwing.

use nodal_blowup::experiment::{moser_report, solve, SolveDocument};
use nodal_blowup::liouville::{eval_profile, ode_residual, ProfileKind};
use nodal_blowup::shooting::ShootingConfig;
use nodal_blowup::Error;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error_json(kind: &str, message: impl ToString) -> String {
    json!({ "error": kind, "message": message.to_string() }).to_string()
}

fn finish(r: Result<Value, Error>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => error_json(e.kind(), e),
    }
}

/// Solves for `k` interior zeros and returns the document without the raw
/// profile, plus `plot`: `(log r, u)` pairs thinned to at most `max_points`.
#[wasm_bindgen]
pub fn solve_nodal_json(lambda: f64, eps: f64, k: usize, rho_max: f64, max_points: usize) -> String {
    finish((|| {
        let sol = solve(lambda, eps, k, &ShootingConfig::default())?;
        let mut doc = SolveDocument::new(&sol, rho_max)?;
        let profile = std::mem::take(&mut doc.profile);
        let stride = profile.len().div_ceil(max_points.max(2)).max(1);
        let mut plot: Vec<[f64; 2]> = profile.iter().step_by(stride).map(|s| [s.log_r, s.u]).collect();
        if let Some(last) = profile.last() {
            if plot.last() != Some(&[last.log_r, last.u]) {
                plot.push([last.log_r, last.u]);
            }
        }
        let mut v = serde_json::to_value(&doc).map_err(|e| Error::Domain(e.to_string()))?;
        v["plot"] = json!(plot);
        Ok(v)
    })())
}

/// Samples a Liouville profile on `[x_min, x_max]`. `kind` is the tagged
/// JSON form, e.g. `{"kind":"ANNULAR","m":1.0}`.
#[wasm_bindgen]
pub fn liouville_json(kind: &str, x_min: f64, x_max: f64, n: usize) -> String {
    let kind: ProfileKind = match serde_json::from_str(kind) {
        Ok(k) => k,
        Err(e) => return error_json("InvalidParams", e),
    };
    finish((|| {
        if !(x_min < x_max) || n < 2 {
            return Err(Error::InvalidParams("need x_min < x_max and n >= 2".into()));
        }
        kind.validate()?;
        let mut points = Vec::with_capacity(n);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let x = x_min + (x_max - x_min) * j as f64 / (n - 1) as f64;
            points.push([x, eval_profile(kind, x)?]);
            if x > 0.0 || !kind.is_radial() {
                worst = worst.max(ode_residual(kind, x)?.abs());
            }
        }
        Ok(json!({ "kind": kind, "points": points, "max_residual": worst }))
    })())
}

/// Moser assembly for `k` pieces with outermost radius `e^{log_r_k}`.
#[wasm_bindgen]
pub fn moser_json(lambda: f64, eps: f64, k: usize, log_r_k: f64) -> String {
    finish(moser_report(lambda, eps, k, log_r_k, &ShootingConfig::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_thins_the_profile() {
        let v: Value = serde_json::from_str(&solve_nodal_json(1.0, 0.5, 1, 5.0, 100)).unwrap();
        assert_eq!(v["schema"], "nbl-solve");
        let plot = v["plot"].as_array().unwrap();
        assert!(plot.len() <= 101 && plot.len() > 10);
        assert!(v["profile"].as_array().unwrap().is_empty());
    }

    #[test]
    fn errors_are_json() {
        let v: Value = serde_json::from_str(&solve_nodal_json(9.0, 0.5, 1, 5.0, 100)).unwrap();
        assert_eq!(v["error"], "InvalidParams");
        let v: Value = serde_json::from_str(&liouville_json("{\"kind\":\"NOPE\"}", 0.0, 1.0, 5)).unwrap();
        assert_eq!(v["error"], "InvalidParams");
    }

    #[test]
    fn bubble_samples() {
        let v: Value = serde_json::from_str(&liouville_json("{\"kind\":\"BUBBLE\"}", 0.0, 4.0, 41)).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 41);
        assert_eq!(pts[0][1].as_f64().unwrap(), 0.0);
        assert!(v["max_residual"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn moser_ok() {
        let v: Value = serde_json::from_str(&moser_json(1.0, 0.5, 1, 0.1f64.ln())).unwrap();
        assert_eq!(v["upper_bound_holds"], true);
    }
}
