use alloc::format;
use alloc::vec::Vec;
use libm::{fabs, pow, sqrt};

use crate::space::{dual_exponent, norm};
use crate::vector::{self, Vector};
use crate::{Error, Result};

/// Default relative feasibility slack of the `lp`-ball projection.
pub const LP_PROJECTION_TOL: f64 = 1e-10;
/// Bisection cap of the `lp`-ball projection.
pub const LP_PROJECTION_MAX_ITER: usize = 200;

/// A centred `la` ball `{w : ||w||_a <= radius}` in `R^d`, with `a` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    a: f64,
    radius: f64,
    d: usize,
}

impl ConstraintSet {
    pub fn ball(a: f64, radius: f64, d: usize) -> Result<Self> {
        if !(a >= 1.0) {
            return Err(Error::invalid(format!("ball norm index must be >= 1, got {a}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive and finite, got {radius}")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(ConstraintSet { a, radius, d })
    }

    pub fn l2_ball(radius: f64, d: usize) -> Result<Self> {
        Self::ball(2.0, radius, d)
    }

    pub fn l1_ball(radius: f64, d: usize) -> Result<Self> {
        Self::ball(1.0, radius, d)
    }

    pub fn lp_ball(p: f64, radius: f64, d: usize) -> Result<Self> {
        Self::ball(p, radius, d)
    }

    pub fn norm_index(&self) -> f64 {
        self.a
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn d(&self) -> usize {
        self.d
    }

    /// Short label: `l1`, `l2`, `linf` or `lp`.
    pub fn label(&self) -> &'static str {
        if self.a == 1.0 {
            "l1"
        } else if self.a == 2.0 {
            "l2"
        } else if self.a.is_infinite() {
            "linf"
        } else {
            "lp"
        }
    }

    /// The same ball with radius multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::ball(self.a, self.radius * c, self.d)
    }

    /// Euclidean projection.
    pub fn project(&self, v: &[f64]) -> Result<Vector> {
        vector::ensure_dim(v, self.d)?;
        vector::ensure_finite(v, "projection input")?;
        if self.a == 1.0 {
            Ok(project_l1_ball(v, self.radius))
        } else if self.a.is_infinite() {
            Ok(v.iter().map(|x| x.clamp(-self.radius, self.radius)).collect())
        } else {
            project_lp_ball(v, self.a, self.radius, LP_PROJECTION_TOL)
        }
    }

    /// Support function `h_C(xi) = radius * ||xi||_{a*}`.
    pub fn support(&self, xi: &[f64]) -> f64 {
        self.radius * norm(xi, dual_exponent(self.a))
    }

    /// Minkowski gauge `||v||_a / radius`.
    pub fn gauge(&self, v: &[f64]) -> f64 {
        norm(v, self.a) / self.radius
    }

    pub fn contains(&self, v: &[f64], slack: f64) -> bool {
        self.gauge(v) <= 1.0 + slack
    }

    /// `sup ||w||_b` over the ball.
    fn max_norm(&self, b: f64) -> f64 {
        let e = (1.0 / b - 1.0 / self.a).max(0.0);
        self.radius * pow(self.d as f64, e)
    }

    /// Diameter in `||.||_2`.
    pub fn diameter_l2(&self) -> f64 {
        2.0 * self.max_norm(2.0)
    }

    /// Diameter in `||.||_b`.
    pub fn diameter_in(&self, b: f64) -> f64 {
        2.0 * self.max_norm(b)
    }

    /// Euclidean distance from the origin to the boundary.
    pub fn c_min(&self) -> f64 {
        let e = (0.5 - 1.0 / self.a).min(0.0);
        self.radius * pow(self.d as f64, e)
    }
}

/// Euclidean projection onto `{||w||_1 <= radius}` by sorting magnitudes and
/// soft-thresholding.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vector {
    let l1: f64 = v.iter().map(|x| fabs(*x)).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| fabs(*x)).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (j as f64 + 1.0);
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter()
        .map(|x| (fabs(*x) - theta).max(0.0).copysign(*x))
        .collect()
}

/// Solves `t + c t^{p-1} = v` for `t` in `[0, v]` by Newton's method
/// safeguarded with bisection.
fn kkt_coordinate(v: f64, c: f64, p: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, v);
    let mut t = v;
    for _ in 0..100 {
        let tp = pow(t, p - 2.0);
        let f = t + c * tp * t - v;
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let fp = 1.0 + c * (p - 1.0) * tp;
        let mut next = t - f / fp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if fabs(next - t) <= 1e-15 * v || hi - lo <= 1e-15 * v {
            return next;
        }
        t = next;
    }
    t
}

fn kkt_point(mags: &[f64], mu: f64, p: f64) -> Vector {
    mags.iter().map(|&m| kkt_coordinate(m, mu * p, p)).collect()
}

/// Euclidean projection onto `{||w||_p <= radius}` for `1 < p < inf`.
///
/// The minimiser has `w_i = sign(v_i) t_i` with `t_i + mu p t_i^{p-1} = |v_i|`
/// for the multiplier `mu >= 0`; `mu` is found by bisection on a log scale.
/// The returned point is always on the feasible side and satisfies
/// `||w||_p >= radius (1 - tol)`.
pub fn project_lp_ball(v: &[f64], p: f64, radius: f64, tol: f64) -> Result<Vector> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("lp projection needs 1 < p < inf, got {p}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if norm(v, p) <= radius {
        return Ok(v.to_vec());
    }
    if p == 2.0 {
        let s = radius / norm(v, 2.0);
        return Ok(v.iter().map(|x| x * s).collect());
    }
    let mags: Vec<f64> = v.iter().map(|x| fabs(*x)).collect();
    let g = |mu: f64| norm(&kkt_point(&mags, mu, p), p);

    let mut hi = 1.0;
    let mut guard = 0;
    while g(hi) > radius {
        hi *= 4.0;
        guard += 1;
        if guard > 600 {
            return Err(Error::NoConvergence {
                what: "lp projection bracket",
                iterations: guard,
                residual: g(hi) - radius,
            });
        }
    }
    let mut lo = hi / 4.0;
    while g(lo) <= radius && lo > 1e-300 {
        hi = lo;
        lo /= 4.0;
    }
    let mut best = kkt_point(&mags, hi, p);
    for it in 0..LP_PROJECTION_MAX_ITER {
        let gap = radius - norm(&best, p);
        if gap <= tol * radius {
            return Ok(signed(best, v));
        }
        let mid = sqrt(lo * hi);
        if mid <= lo || mid >= hi {
            // interval exhausted in floating point
            return Err(Error::NoConvergence {
                what: "lp projection",
                iterations: it,
                residual: gap / radius,
            });
        }
        let w = kkt_point(&mags, mid, p);
        if norm(&w, p) > radius {
            lo = mid;
        } else {
            hi = mid;
            best = w;
        }
    }
    let gap = radius - norm(&best, p);
    if gap <= tol * radius {
        Ok(signed(best, v))
    } else {
        Err(Error::NoConvergence {
            what: "lp projection",
            iterations: LP_PROJECTION_MAX_ITER,
            residual: gap / radius,
        })
    }
}

fn signed(mut t: Vector, v: &[f64]) -> Vector {
    for (ti, vi) in t.iter_mut().zip(v) {
        *ti = ti.copysign(*vi);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn l1_examples() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[2.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[1.0, 1.0], 1.0), vec![0.5, 0.5]);
        assert_eq!(project_l1_ball(&[-3.0, 1.0, 0.5], 1.0), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn lp_examples() {
        let w = project_lp_ball(&[3.0, 4.0], 2.0, 1.0, 1e-10).unwrap();
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_lp_ball(&[0.1, 0.1], 1.5, 1.0, 1e-10).unwrap(), vec![0.1, 0.1]);
        let w = project_lp_ball(&[2.0, 2.0], 1.5, 1.0, 1e-10).unwrap();
        let a = 2f64.powf(-2.0 / 3.0);
        assert!((w[0] - a).abs() < 1e-9 && (w[1] - a).abs() < 1e-9);
        assert!((a - 0.63).abs() < 0.01);
        // kink case: one tiny coordinate
        let w = project_lp_ball(&[5.0, 1e-12, -2.0], 1.3, 1.0, 1e-10).unwrap();
        assert!(norm(&w, 1.3) <= 1.0 + 1e-12);
        assert!(w[2] < 0.0);
    }

    #[test]
    fn geometry_constants() {
        let c = ConstraintSet::l1_ball(1.0, 4).unwrap();
        assert!((c.diameter_l2() - 2.0).abs() < 1e-15);
        assert!((c.c_min() - 0.5).abs() < 1e-15);
        let c = ConstraintSet::ball(f64::INFINITY, 1.0, 4).unwrap();
        assert!((c.diameter_l2() - 4.0).abs() < 1e-15);
        assert_eq!(c.c_min(), 1.0);
        assert_eq!(c.label(), "linf");
        let c = ConstraintSet::l2_ball(3.0, 9).unwrap();
        assert_eq!((c.diameter_l2(), c.c_min()), (6.0, 3.0));
        assert!((c.support(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]) - 15.0).abs() < 1e-12);
        assert!(ConstraintSet::l2_ball(0.0, 3).is_err());
    }

    fn sets() -> impl Strategy<Value = ConstraintSet> {
        (
            prop::sample::select(vec![1.0, 1.3, 1.5, 2.0, 3.0, f64::INFINITY]),
            0.5..3.0f64,
            prop::sample::select(vec![1usize, 3, 8]),
        )
            .prop_map(|(a, r, d)| ConstraintSet::ball(a, r, d).unwrap())
    }

    fn set_and_vecs() -> impl Strategy<Value = (ConstraintSet, Vec<f64>, Vec<f64>)> {
        sets().prop_flat_map(|c| {
            let d = c.d();
            (
                Just(c),
                prop::collection::vec(-6.0..6.0f64, d),
                prop::collection::vec(-1.0..1.0f64, d),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn projection_is_idempotent_and_feasible((c, v, _) in set_and_vecs()) {
            let p = c.project(&v).unwrap();
            prop_assert!(c.gauge(&p) <= 1.0 + 1e-9);
            let pp = c.project(&p).unwrap();
            prop_assert!(vector::l2_dist(&p, &pp) <= 1e-9 * (1.0 + vector::l2_norm(&p)));
            let shrunk: Vec<f64> = p.iter().map(|x| x * (1.0 - 1e-12)).collect();
            prop_assert!(c.gauge(&shrunk) <= 1.0);
        }

        #[test]
        fn projection_is_optimal((c, v, dir) in set_and_vecs(), s in 0.0..1.0f64) {
            let p = c.project(&v).unwrap();
            // a feasible comparison point: scale dir into the ball
            let g = c.gauge(&dir);
            prop_assume!(g > 0.0);
            let w: Vec<f64> = dir.iter().map(|x| x * s / g).collect();
            prop_assert!(vector::l2_dist(&v, &p) <= vector::l2_dist(&v, &w) + 1e-8);
        }

        #[test]
        fn support_gauge_duality((c, x, y) in set_and_vecs(), t in 0.1..5.0f64) {
            prop_assert!(vector::dot(&x, &y) <= c.gauge(&x) * c.support(&y) + 1e-9);
            let ty: Vec<f64> = y.iter().map(|v| v * t).collect();
            prop_assert!((c.support(&ty) - t * c.support(&y)).abs() <= 1e-9 * (1.0 + c.support(&ty)));
            prop_assert!(c.c_min() <= c.diameter_l2());
        }
    }
}
