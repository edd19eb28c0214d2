//! `lp` geometry: norms, dual exponents, the regularity parameter `kappa`,
//! and the mirror potential `phi(w) = (kappa/2) * ||w||_s^2`, together with
//! its gradient, the gradient of its convex conjugate, and the Bregman
//! divergence it generates.
//!
//! The dual space `(R^d, ||.||_q)` is `kappa`-regular with smooth norm
//! `||.||_r`, `r = min{q, 2 ln d + 1}`. The potential uses the conjugate index
//! `s = r / (r - 1)`, so `phi* (y) = ||y||_r^2 / (2 kappa)` and `phi` is
//! 1-strongly convex with respect to `||.||_p`. That last property needs the
//! `2e ln d` cap on `kappa`; with a bare `2 ln d` it fails whenever the cap is
//! active.

use alloc::format;
use libm::{fabs, log, pow};

use crate::vector::{self, Vector};
use crate::{Error, Result};

/// Values below this magnitude are flushed to zero in the mirror maps.
const FLUSH_BELOW: f64 = 1e-300;

/// Geometry of `(R^d, ||.||_p)` plus the derived quantities the private
/// solvers need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSpec {
    p: f64,
    d: usize,
    q: f64,
    kappa: f64,
    s: f64,
    r_noise: f64,
}

impl SpaceSpec {
    /// Multiplier of `ln d` in `kappa = min{1/(p-1), c ln d}`.
    pub const DEFAULT_KAPPA_LOG_FACTOR: f64 = 2.0 * core::f64::consts::E;
    /// Multiplier of `ln d` in `r_noise = min{q, c ln d + 1}`.
    pub const DEFAULT_NOISE_LOG_FACTOR: f64 = 2.0;

    pub fn new(p: f64, d: usize) -> Result<Self> {
        Self::with_log_factors(
            p,
            d,
            Self::DEFAULT_KAPPA_LOG_FACTOR,
            Self::DEFAULT_NOISE_LOG_FACTOR,
        )
    }

    pub fn with_log_factors(p: f64, d: usize, kappa_factor: f64, noise_factor: f64) -> Result<Self> {
        check_exponent_and_dim(p, d)?;
        for c in [kappa_factor, noise_factor] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("log factor must be positive, got {c}")));
            }
        }
        let ln_d = log(d as f64);
        let q = dual_exponent(p);
        // ln 1 = 0 would make both minima meaningless in one dimension.
        let (kappa, r_noise) = if d == 1 {
            (if p < 2.0 { 1.0 / (p - 1.0) } else { 1.0 }, q)
        } else if p < 2.0 {
            (
                (1.0 / (p - 1.0)).min(kappa_factor * ln_d),
                q.min(noise_factor * ln_d + 1.0),
            )
        } else {
            (1.0, q.min(noise_factor * ln_d + 1.0))
        };
        Self::custom(p, d, kappa, r_noise)
    }

    /// Builds a space with explicit `kappa` and noise-norm index `r_noise`
    /// (which also fixes `s = r_noise / (r_noise - 1)`).
    pub fn custom(p: f64, d: usize, kappa: f64, r_noise: f64) -> Result<Self> {
        check_exponent_and_dim(p, d)?;
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be finite and >= 1, got {kappa}")));
        }
        if !(r_noise >= 1.0) {
            return Err(Error::invalid(format!("noise norm index must be >= 1, got {r_noise}")));
        }
        let q = dual_exponent(p);
        let s = if p < 2.0 {
            if !(r_noise > 1.0 && r_noise.is_finite()) {
                return Err(Error::UnsupportedGeometry(format!(
                    "noise norm index {r_noise} leaves the mirror potential exponent undefined"
                )));
            }
            r_noise / (r_noise - 1.0)
        } else {
            f64::INFINITY
        };
        Ok(SpaceSpec {
            p,
            d,
            q,
            kappa,
            s,
            r_noise,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn d(&self) -> usize {
        self.d
    }
    /// Dual exponent, `1/p + 1/q = 1`.
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// Norm index of the mirror potential; conjugate to `r_noise`.
    pub fn s(&self) -> f64 {
        self.s
    }
    /// Norm index of the smooth dual norm, used for Generalized Gaussian noise.
    pub fn r_noise(&self) -> f64 {
        self.r_noise
    }

    /// Whether `phi` and its mirror maps are defined. Only `1 < p < 2` has one.
    pub fn has_mirror_map(&self) -> bool {
        self.s.is_finite()
    }

    fn require_mirror_map(&self) -> Result<()> {
        if self.has_mirror_map() {
            Ok(())
        } else {
            Err(Error::UnsupportedGeometry(format!(
                "no mirror potential for p = {}",
                self.p
            )))
        }
    }

    fn check_vector(&self, v: &[f64], what: &'static str) -> Result<()> {
        vector::ensure_dim(v, self.d)?;
        vector::ensure_finite(v, what)
    }
}

fn check_exponent_and_dim(p: f64, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(p > 1.0) {
        return Err(Error::UnsupportedGeometry(format!("p must lie in (1, inf], got {p}")));
    }
    Ok(())
}

/// Conjugate exponent of `p` (with `1 <-> inf`).
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `||v||_p` for `p` in `[1, inf]`.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("norm exponent must be >= 1, got {p}")));
    }
    vector::ensure_finite(v, "lp_norm input")?;
    Ok(norm(v, p))
}

/// Unchecked `||v||_p`. Scaled by the largest magnitude so large exponents
/// neither overflow nor underflow.
pub(crate) fn norm(v: &[f64], p: f64) -> f64 {
    let m = vector::max_abs(v);
    if m == 0.0 || p.is_infinite() {
        return m;
    }
    if p == 2.0 {
        let sum: f64 = v.iter().map(|x| (x / m) * (x / m)).sum();
        return m * libm::sqrt(sum);
    }
    if p == 1.0 {
        return v.iter().map(|x| fabs(*x)).sum();
    }
    let sum: f64 = v.iter().map(|x| pow(fabs(*x) / m, p)).sum();
    m * pow(sum, 1.0 / p)
}

/// `c * ||v||_e^{2-e} * |v_i|^{e-1} sign(v_i)`, the gradient of
/// `(c/2) ||v||_e^2`, evaluated as `c * m * (|v_i|/m)^{e-1}` with
/// `m = ||v||_e` so nothing is raised to a large power before scaling.
fn scaled_duality_map(v: &[f64], e: f64, c: f64) -> Vector {
    let m = norm(v, e);
    if m == 0.0 {
        return vector::zeros(v.len());
    }
    v.iter()
        .map(|&x| {
            if x == 0.0 {
                return 0.0;
            }
            let mag = c * m * pow(fabs(x) / m, e - 1.0);
            if mag < FLUSH_BELOW {
                0.0
            } else {
                mag.copysign(x)
            }
        })
        .collect()
}

/// `phi(w) = (kappa/2) ||w||_s^2`.
pub fn phi(w: &[f64], spec: &SpaceSpec) -> Result<f64> {
    spec.require_mirror_map()?;
    spec.check_vector(w, "phi input")?;
    let n = norm(w, spec.s);
    Ok(0.5 * spec.kappa * n * n)
}

/// Convex conjugate `phi*(y) = ||y||_r^2 / (2 kappa)`.
pub fn phi_conjugate(y: &[f64], spec: &SpaceSpec) -> Result<f64> {
    spec.require_mirror_map()?;
    spec.check_vector(y, "phi_conjugate input")?;
    let n = norm(y, spec.r_noise);
    Ok(n * n / (2.0 * spec.kappa))
}

/// Mirror map `grad phi(w)`.
pub fn grad_phi(w: &[f64], spec: &SpaceSpec) -> Result<Vector> {
    spec.require_mirror_map()?;
    spec.check_vector(w, "grad_phi input")?;
    Ok(scaled_duality_map(w, spec.s, spec.kappa))
}

/// Inverse mirror map, `grad phi*(y)`. Satisfies `grad_phi(inv_grad_phi(y)) = y`.
pub fn inv_grad_phi(y: &[f64], spec: &SpaceSpec) -> Result<Vector> {
    spec.require_mirror_map()?;
    spec.check_vector(y, "inv_grad_phi input")?;
    Ok(scaled_duality_map(y, spec.r_noise, 1.0 / spec.kappa))
}

/// `D_phi(y, x) = phi(y) - phi(x) - <grad phi(x), y - x>`, clamped at zero
/// against rounding.
pub fn bregman(y: &[f64], x: &[f64], spec: &SpaceSpec) -> Result<f64> {
    let gx = grad_phi(x, spec)?;
    let py = phi(y, spec)?;
    let px = phi(x, spec)?;
    let lin: f64 = gx.iter().zip(y.iter().zip(x)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok((py - px - lin).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn lp_norm_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[1.0, -1.0, 1.0], f64::INFINITY).unwrap(), 1.0);
        // direct evaluation: (1 + 1)^(1/1.5)
        let expect = 2f64.powf(1.0 / 1.5);
        assert!(close(lp_norm(&[1.0, 1.0], 1.5).unwrap(), expect, 1e-14));
        assert!((expect - 1.5874).abs() < 1e-4);
        assert_eq!(lp_norm(&[1.0, -2.0], 1.0).unwrap(), 3.0);
    }

    #[test]
    fn lp_norm_rejects_non_finite() {
        assert_eq!(lp_norm(&[f64::NAN], 2.0), Err(Error::NonFinite("lp_norm input")));
        assert!(lp_norm(&[1.0], 0.5).is_err());
    }

    #[test]
    fn space_parameters() {
        let s = SpaceSpec::new(1.5, 50).unwrap();
        assert_eq!(s.kappa(), 2.0);
        assert!(close(s.q(), 3.0, 1e-15));
        assert!(close(s.r_noise(), 3.0, 1e-15));
        assert!(close(s.s(), 1.5, 1e-15));

        // both caps active: kappa = 2e ln 5, r = 2 ln 5 + 1
        let s = SpaceSpec::new(1.1, 5).unwrap();
        let ln5 = 5f64.ln();
        assert!(close(s.kappa(), 2.0 * core::f64::consts::E * ln5, 1e-15));
        assert!(close(s.r_noise(), 2.0 * ln5 + 1.0, 1e-15));
        assert!(close(1.0 / s.s() + 1.0 / s.r_noise(), 1.0, 1e-15));

        // one dimension: kappa = 1/(p-1)
        let s = SpaceSpec::new(1.5, 1).unwrap();
        assert_eq!(s.kappa(), 2.0);
        assert!(s.has_mirror_map());

        let s = SpaceSpec::new(f64::INFINITY, 4).unwrap();
        assert_eq!(s.q(), 1.0);
        assert!(!s.has_mirror_map());
        assert_eq!(s.kappa(), 1.0);
        assert!(SpaceSpec::new(1.0, 3).is_err());
        assert!(SpaceSpec::new(1.5, 0).is_err());
        assert!(SpaceSpec::custom(1.5, 3, 0.5, 2.0).is_err());
        assert!(SpaceSpec::custom(1.5, 3, 2.0, 1.0).is_err());
    }

    #[test]
    fn grad_phi_examples() {
        let spec = SpaceSpec::custom(1.5, 2, 2.0, 2.0).unwrap();
        assert_eq!(grad_phi(&[0.0, 0.0], &spec).unwrap(), vec![0.0, 0.0]);
        let g = grad_phi(&[1.0, 2.0], &spec).unwrap();
        assert!(close(g[0], 2.0, 1e-14) && close(g[1], 4.0, 1e-14));
        let w = inv_grad_phi(&[2.0, 4.0], &spec).unwrap();
        assert!(close(w[0], 1.0, 1e-14) && close(w[1], 2.0, 1e-14));
        assert_eq!(inv_grad_phi(&[0.0, 0.0], &spec).unwrap(), vec![0.0, 0.0]);

        // one dimension: phi = (kappa/2) w^2 for every s
        for p in [1.2, 1.5, 1.8] {
            let spec = SpaceSpec::new(p, 1).unwrap();
            let g = grad_phi(&[2.0], &spec).unwrap();
            assert!(close(g[0], 2.0 * spec.kappa(), 1e-13), "p={p}");
        }
    }

    #[test]
    fn mirror_map_requires_finite_s() {
        let spec = SpaceSpec::new(2.0, 3).unwrap();
        assert!(matches!(grad_phi(&[1.0, 0.0, 0.0], &spec), Err(Error::UnsupportedGeometry(_))));
        let spec = SpaceSpec::new(1.5, 3).unwrap();
        assert!(matches!(grad_phi(&[1.0, 0.0], &spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bregman_examples() {
        let spec = SpaceSpec::custom(1.5, 2, 2.0, 2.0).unwrap();
        assert_eq!(bregman(&[0.3, -0.2], &[0.3, -0.2], &spec).unwrap(), 0.0);
        // s = 2: D(y, x) = (kappa/2) ||y - x||_2^2
        let d = bregman(&[1.0, 1.0], &[0.0, 0.0], &spec).unwrap();
        assert!(close(d, 2.0, 1e-14));
    }

    #[test]
    fn tiny_coordinates_do_not_produce_nan() {
        // p near 2 gives a large s; tiny entries must flush, not NaN.
        let spec = SpaceSpec::custom(1.95, 3, 1.05, 1.05 / 0.05).unwrap();
        let w = [1.0, 1e-200, -1e-250];
        let g = grad_phi(&w, &spec).unwrap();
        assert!(g.iter().all(|x| x.is_finite()));
        let back = inv_grad_phi(&g, &spec).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-10);
    }

    fn spec_strategy() -> impl Strategy<Value = SpaceSpec> {
        (prop::sample::select(vec![1.1, 1.3, 1.5, 1.7, 1.9]), prop::sample::select(vec![2usize, 5, 50]))
            .prop_map(|(p, d)| SpaceSpec::new(p, d).unwrap())
    }

    fn vec_strategy() -> impl Strategy<Value = (SpaceSpec, Vec<f64>, Vec<f64>)> {
        spec_strategy().prop_flat_map(|s| {
            let d = s.d();
            (
                Just(s),
                prop::collection::vec(-10.0..10.0f64, d),
                prop::collection::vec(-10.0..10.0f64, d),
            )
        })
    }

    proptest! {
        #[test]
        fn conjugacy_roundtrip((spec, w, _) in vec_strategy()) {
            let back = inv_grad_phi(&grad_phi(&w, &spec).unwrap(), &spec).unwrap();
            let err = vector::l2_dist(&back, &w);
            prop_assert!(err <= 1e-8 * (1.0 + vector::l2_norm(&w)));
        }

        #[test]
        fn fenchel_young_equality((spec, w, _) in vec_strategy()) {
            let g = grad_phi(&w, &spec).unwrap();
            let lhs = vector::dot(&g, &w);
            let rhs = phi(&w, &spec).unwrap() + phi_conjugate(&g, &spec).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()));
        }

        #[test]
        fn bregman_dominates_half_squared_p_norm((spec, y, x) in vec_strategy()) {
            let d = bregman(&y, &x, &spec).unwrap();
            let diff = vector::sub(&y, &x);
            let n = norm(&diff, spec.p());
            prop_assert!(d >= 0.5 * n * n - 1e-10 * (1.0 + n * n));
        }

        #[test]
        fn bregman_convex_in_first_argument(
            (spec, a, b) in vec_strategy(),
            t in 0.0..1.0f64,
            shift in -3.0..3.0f64,
        ) {
            let x: Vec<f64> = a.iter().map(|v| v * 0.5 + shift).collect();
            let mix: Vec<f64> = a.iter().zip(&b).map(|(u, v)| t * u + (1.0 - t) * v).collect();
            let lhs = bregman(&mix, &x, &spec).unwrap();
            let rhs = t * bregman(&a, &x, &spec).unwrap() + (1.0 - t) * bregman(&b, &x, &spec).unwrap();
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }
    }
}
