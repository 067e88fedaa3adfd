//! The critical-growth nonlinearities `f(s) = λ s e^{E(s)}` and their primitives.
//!
//! Two exponent families are supported:
//!
//! * [`Family::MtPlus`]: `E(s) = s² + |s|^{1+ε}`
//! * [`Family::MtSub`]: `E(s) = |s|^{2−ε}`
//!
//! Every evaluation is assembled as a log-magnitude `ln λ + ln|s| + E(s)` and
//! exponentiated once. Exponents above the overflow guard are reported as
//! [`Error::OverflowGuard`] instead of saturating to infinity.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// First Dirichlet eigenvalue of the unit disk, `j₀,₁²`.
pub const LAMBDA_1: f64 = 5.783_185_962_946_784;

/// Default bound on the exponent handed to `exp`.
pub const DEFAULT_GUARD: f64 = 700.0;

/// Absolute tolerance used for the primitive `F`.
pub const PRIMITIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// `E(s) = s² + |s|^{1+ε}`
    MtPlus,
    /// `E(s) = |s|^{2−ε}`
    MtSub,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityParams {
    lambda: f64,
    eps: f64,
    family: Family,
    guard: f64,
}

impl NonlinearityParams {
    /// `lambda` must be positive and finite, `eps` in `[0, 1]`.
    ///
    /// The solvers apply the stricter ranges they need (`λ < λ₁`, `ε < 1`);
    /// `ε = 1` is admitted here only so closed forms can be evaluated.
    pub fn new(lambda: f64, eps: f64, family: Family) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParams(format!("eps must lie in [0, 1], got {eps}")));
        }
        Ok(Self { lambda, eps, family, guard: DEFAULT_GUARD })
    }

    pub fn mt_plus(lambda: f64, eps: f64) -> Result<Self> {
        Self::new(lambda, eps, Family::MtPlus)
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Same parameters with a different `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(Self::new(lambda, self.eps, self.family)?.with_guard(self.guard))
    }

    /// The exponent `E(s)`.
    pub fn exponent(&self, s: f64) -> f64 {
        let a = s.abs();
        match self.family {
            Family::MtPlus => a * a + a.powf(1.0 + self.eps),
            Family::MtSub => a.powf(2.0 - self.eps),
        }
    }

    /// `E(s − x) − E(s)` for `s > 0`, `0 ≤ x ≤ s`, without cancellation.
    pub fn exponent_drop(&self, s: f64, x: f64) -> f64 {
        let q = match self.family {
            Family::MtPlus => 1.0 + self.eps,
            Family::MtSub => 2.0 - self.eps,
        };
        let power = s.powf(q) * (q * (-x / s).ln_1p()).exp_m1();
        match self.family {
            Family::MtPlus => power - x * (2.0 * s - x),
            Family::MtSub => power,
        }
    }

    /// `ln |f(s)|`; `-inf` at `s = 0`.
    pub fn ln_abs_f(&self, s: f64) -> f64 {
        self.lambda.ln() + s.abs().ln() + self.exponent(s)
    }

    /// `ln f'(s)` (`f'` is positive everywhere).
    pub fn ln_f_prime(&self, s: f64) -> f64 {
        let a = s.abs();
        let factor = match self.family {
            Family::MtPlus => 1.0 + 2.0 * a * a + (1.0 + self.eps) * a.powf(1.0 + self.eps),
            Family::MtSub => 1.0 + (2.0 - self.eps) * a.powf(2.0 - self.eps),
        };
        self.lambda.ln() + self.exponent(s) + factor.ln()
    }

    pub(crate) fn check_guard(&self, exponent: f64) -> Result<()> {
        if exponent > self.guard || exponent.is_nan() {
            Err(Error::OverflowGuard { exponent, guard: self.guard })
        } else {
            Ok(())
        }
    }

    fn cache_key(&self, s: f64) -> CacheKey {
        CacheKey {
            lambda: self.lambda.to_bits(),
            eps: self.eps.to_bits(),
            family: self.family,
            tol: PRIMITIVE_TOL.to_bits(),
            s: s.to_bits(),
        }
    }
}

/// `f(s) = λ s e^{E(s)}`.
pub fn f_eval(s: f64, p: &NonlinearityParams) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let ln = p.ln_abs_f(s);
    p.check_guard(ln)?;
    Ok(ln.exp().copysign(s))
}

/// `f'(s)`, equal to `λ` at the origin.
pub fn f_prime(s: f64, p: &NonlinearityParams) -> Result<f64> {
    let ln = p.ln_f_prime(s);
    p.check_guard(ln)?;
    Ok(ln.exp())
}

/// The primitive `F(s) = ∫₀ˢ f`.
pub fn primitive(s: f64, p: &NonlinearityParams) -> Result<f64> {
    let ln = ln_primitive(s, p)?;
    if ln == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    p.check_guard(ln)?;
    Ok(ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    lambda: u64,
    eps: u64,
    family: Family,
    tol: u64,
    s: u64,
}

const CACHE_CAPACITY: usize = 1 << 20;

fn cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `ln F(s)`, memoized per parameter set; `-inf` at `s = 0`.
///
/// Never overflows: `F(s) = λ e^{E(s)} J(s)` with `J(s) = ∫₀ˢ t e^{E(t)−E(s)} dt`
/// of order one, so only `ln J` is integrated.
pub fn ln_primitive(s: f64, p: &NonlinearityParams) -> Result<f64> {
    let a = s.abs();
    if a == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let key = p.cache_key(a);
    if let Some(&v) = cache().lock().expect("primitive cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = ln_primitive_uncached(a, p)?;
    let mut map = cache().lock().expect("primitive cache poisoned");
    if map.len() >= CACHE_CAPACITY {
        map.clear();
    }
    map.insert(key, v);
    Ok(v)
}

fn ln_primitive_uncached(a: f64, p: &NonlinearityParams) -> Result<f64> {
    let top = p.exponent(a);
    // With x = a − t the integrand is (a − x)·e^{E(a−x)−E(a)}. E is convex
    // with E(0) = 0, so the exponent is below −x·E(a)/a; drop the part under
    // 1e-17 of the peak.
    let chord = top / a;
    let window = if chord > 0.0 { ((a * a).max(1.0).ln() + 40.0) / chord } else { a };
    let hi = window.min(a);
    let tol = Tolerance {
        abs: PRIMITIVE_TOL * (-top).exp() / p.lambda,
        rel: 1e-13,
        max_intervals: 2000,
    };
    let est = quadrature::integrate(|x| (a - x) * p.exponent_drop(a, x).exp(), 0.0, hi, tol)?;
    Ok(p.lambda.ln() + top + est.value.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn plus(lambda: f64, eps: f64) -> NonlinearityParams {
        NonlinearityParams::mt_plus(lambda, eps).unwrap()
    }

    #[test]
    fn f_closed_forms() {
        let p = plus(1.0, 0.0);
        assert_eq!(f_eval(0.0, &p).unwrap(), 0.0);
        assert!((f_eval(1.0, &p).unwrap() - E * E).abs() < 1e-14);
        assert!((f_eval(-1.0, &p).unwrap() + E * E).abs() < 1e-14);
    }

    #[test]
    fn f_prime_values() {
        assert!((f_prime(0.0, &plus(1.0, 0.5)).unwrap() - 1.0).abs() < 1e-15);
        // λe²(1 + 2 + 1)
        assert!((f_prime(1.0, &plus(1.0, 0.0)).unwrap() - 4.0 * E * E).abs() < 1e-13);
    }

    #[test]
    fn f_prime_matches_central_differences() {
        let p = plus(1.0, 0.5);
        let h = 1e-5;
        for s in [0.3, 1.0, 2.0] {
            let fd = (f_eval(s + h, &p).unwrap() - f_eval(s - h, &p).unwrap()) / (2.0 * h);
            let exact = f_prime(s, &p).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "s={s}: {fd} vs {exact}");
        }
    }

    #[test]
    fn sub_family_derivative() {
        let p = NonlinearityParams::new(2.0, 0.3, Family::MtSub).unwrap();
        let h = 1e-5;
        for s in [0.5, 1.5] {
            let fd = (f_eval(s + h, &p).unwrap() - f_eval(s - h, &p).unwrap()) / (2.0 * h);
            assert!(((fd - f_prime(s, &p).unwrap()) / fd).abs() < 1e-7);
        }
        assert!((f_prime(0.0, &p).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn overflow_guard_trips() {
        let p = plus(1.0, 0.5);
        assert!(matches!(f_eval(30.0, &p), Err(Error::OverflowGuard { .. })));
        assert!(matches!(f_prime(30.0, &p), Err(Error::OverflowGuard { .. })));
        assert!(f_eval(3.0, &p).unwrap().is_finite());
        let tight = p.with_guard(10.0);
        assert!(matches!(f_eval(3.0, &tight), Err(Error::OverflowGuard { .. })));
    }

    #[test]
    fn primitive_closed_form_at_eps_one() {
        // |t|^{1+ε} = t² at ε = 1, so F(s) = (e^{2s²} − 1)/4.
        let p = plus(1.0, 1.0);
        let expected = (E * E - 1.0) / 4.0;
        assert!((primitive(1.0, &p).unwrap() - expected).abs() < 1e-12);
        assert_eq!(primitive(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn primitive_against_composite_simpson() {
        let p = plus(1.0, 0.5);
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let f = |t: f64| f_eval(t, &p).unwrap();
        let mut sum = f(0.0) + f(1.0);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let simpson = sum * h / 3.0;
        assert!((primitive(1.0, &p).unwrap() - simpson).abs() < 1e-10);
    }

    #[test]
    fn ln_primitive_for_huge_arguments() {
        // F(s) ≈ λ s e^{E(s)} / E'(s) for large s.
        let p = plus(1.0, 0.5);
        let s = 300.0f64;
        let ln = ln_primitive(s, &p).unwrap();
        let slope = 2.0 * s + 1.5 * s.sqrt();
        let asymptotic = p.exponent(s) + s.ln() - slope.ln();
        assert!((ln - asymptotic).abs() < 1e-3, "{ln} vs {asymptotic}");
        assert!(matches!(primitive(s, &p), Err(Error::OverflowGuard { .. })));
    }

    #[test]
    fn parameter_validation() {
        assert!(NonlinearityParams::mt_plus(0.0, 0.5).is_err());
        assert!(NonlinearityParams::mt_plus(1.0, -0.1).is_err());
        assert!(NonlinearityParams::mt_plus(1.0, 1.5).is_err());
        assert!(NonlinearityParams::mt_plus(f64::NAN, 0.5).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn family() -> impl Strategy<Value = Family> {
            prop_oneof![Just(Family::MtPlus), Just(Family::MtSub)]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn odd_and_even(s in -6.0f64..6.0, eps in 0.0f64..0.99, fam in family()) {
                let p = NonlinearityParams::new(1.3, eps, fam).unwrap();
                prop_assert_eq!(f_eval(-s, &p).unwrap(), -f_eval(s, &p).unwrap());
                prop_assert_eq!(primitive(-s, &p).unwrap(), primitive(s, &p).unwrap());
            }

            #[test]
            fn superquadratic(s in -6.0f64..6.0, eps in 0.0f64..0.99, fam in family()) {
                let p = NonlinearityParams::new(0.7, eps, fam).unwrap();
                let gap = f_eval(s, &p).unwrap() * s - 2.0 * primitive(s, &p).unwrap();
                prop_assert!(gap >= -1e-12 * primitive(s, &p).unwrap().max(1.0));
            }

            #[test]
            fn primitive_differentiates_to_f(s in 0.1f64..3.0, eps in 0.01f64..0.99) {
                let p = NonlinearityParams::mt_plus(1.0, eps).unwrap();
                let h = 1e-3;
                let big = |x: f64| primitive(x, &p).unwrap();
                let fd = (8.0 * (big(s + h) - big(s - h)) - (big(s + 2.0 * h) - big(s - 2.0 * h))) / (12.0 * h);
                let f = f_eval(s, &p).unwrap();
                prop_assert!(((fd - f) / f).abs() < 1e-7, "{} vs {}", fd, f);
            }

            #[test]
            fn f_over_s_increasing(s in 0.01f64..6.0, ds in 1e-3f64..1.0, eps in 0.0f64..0.99, fam in family()) {
                let p = NonlinearityParams::new(2.0, eps, fam).unwrap();
                let q = |x: f64| f_eval(x, &p).unwrap() / x;
                prop_assert!(q(s + ds) > q(s));
            }
        }
    }
}
