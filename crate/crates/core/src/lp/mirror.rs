use crate::problems::ConstraintSet;
use crate::space::{self, grad_phi, inv_grad_phi, norm, phi, SpaceSpec};
use crate::vector::{self, Vector};
use crate::{Error, Result};

use super::TruncationStats;

/// Returns `g` if `||g||_q <= threshold`, else the zero vector, and updates `stats`.
pub fn truncate_gradient(g: &mut [f64], q: f64, threshold: f64, stats: &mut TruncationStats) {
    let m = norm(g, q);
    stats.total += 1;
    stats.max_norm = stats.max_norm.max(m);
    if m <= threshold {
        stats.max_kept_norm = stats.max_kept_norm.max(m);
    } else {
        g.iter_mut().for_each(|x| *x = 0.0);
        stats.zeroed += 1;
    }
}

/// Result of [`mirror_step_constrained`].
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorStep {
    pub w: Vector,
    /// Frank-Wolfe gap of the subproblem at `w`; 0 for closed-form steps.
    pub residual: f64,
    /// Inner iterations (0 for closed-form steps).
    pub iterations: usize,
}

/// `argmin_{w in C} <g_hat, w> + gamma * D_phi(w, w_prev)`.
///
/// Tries the unconstrained minimiser `grad phi*(grad phi(w_prev) - g_hat/gamma)`
/// first. If it is infeasible and `C` is an `ls` ball with the potential's
/// own index `s`, rescaling it onto the sphere is exact. Otherwise an
/// accelerated projected gradient method with backtracking runs until the
/// Frank-Wolfe gap, an upper bound on the suboptimality, is at most `tol`.
pub fn mirror_step_constrained(
    g_hat: &[f64],
    w_prev: &[f64],
    gamma: f64,
    c: &ConstraintSet,
    spec: &SpaceSpec,
    tol: f64,
    max_iter: usize,
) -> Result<MirrorStep> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(alloc::format!("gamma must be positive, got {gamma}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("mirror-step tolerance must be positive"));
    }
    vector::ensure_dim(g_hat, spec.d())?;
    vector::ensure_finite(g_hat, "mirror-step gradient")?;
    if c.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: c.d(),
        });
    }
    let mut y = grad_phi(w_prev, spec)?;
    vector::axpy(-1.0 / gamma, g_hat, &mut y);
    let w0 = inv_grad_phi(&y, spec)?;
    if c.contains(&w0, 0.0) {
        return Ok(MirrorStep {
            w: w0,
            residual: 0.0,
            iterations: 0,
        });
    }
    if (c.norm_index() - spec.s()).abs() <= 1e-12 * spec.s() {
        let mut w = w0;
        let g = c.gauge(&w);
        vector::scale(1.0 / g, &mut w);
        return Ok(MirrorStep {
            w,
            residual: 0.0,
            iterations: 0,
        });
    }
    projected_descent(&y, w0, gamma, c, spec, tol, max_iter)
}

/// Accelerated projected gradient with backtracking and gradient-based
/// restart on `F(w) = gamma (phi(w) - <y, w>)` over `C`. `phi` is badly
/// conditioned near coordinate axes, so plain PGD can stall.
fn projected_descent(
    y: &[f64],
    start: Vector,
    gamma: f64,
    c: &ConstraintSet,
    spec: &SpaceSpec,
    tol: f64,
    max_iter: usize,
) -> Result<MirrorStep> {
    let f = |w: &[f64]| -> Result<f64> { Ok(gamma * (phi(w, spec)? - vector::dot(y, w))) };
    let grad = |w: &[f64]| -> Result<Vector> {
        let mut g = grad_phi(w, spec)?;
        g.iter_mut().zip(y).for_each(|(gi, yi)| *gi = gamma * (*gi - yi));
        Ok(g)
    };
    // max_{v in C} <g, w - v>; the ball is symmetric so h_C(-g) = h_C(g)
    let fw_gap = |w: &[f64], g: &[f64]| vector::dot(g, w) + c.support(g);

    let mut x = c.project(&start)?;
    let mut gx = grad(&x)?;
    let mut gap = fw_gap(&x, &gx);
    let mut z = x.clone();
    let mut momentum = 1.0;
    let mut eta = 1.0 / (gamma * spec.kappa());
    for it in 0..max_iter {
        if gap <= tol {
            return Ok(MirrorStep {
                w: x,
                residual: gap.max(0.0),
                iterations: it,
            });
        }
        let gz = grad(&z)?;
        let fz = f(&z)?;
        let next = loop {
            let mut trial = z.clone();
            vector::axpy(-eta, &gz, &mut trial);
            let cand = c.project(&trial)?;
            let diff = vector::sub(&cand, &z);
            let model = fz + vector::dot(&gz, &diff) + vector::dot(&diff, &diff) / (2.0 * eta);
            if f(&cand)? <= model + 1e-15 * fz.abs().max(1.0) {
                break cand;
            }
            eta *= 0.5;
            if eta < 1e-300 {
                return Err(Error::NoConvergence {
                    what: "mirror step backtracking",
                    iterations: it,
                    residual: gap,
                });
            }
        };
        let step = vector::sub(&next, &x);
        let restart = vector::dot(&vector::sub(&z, &next), &step) > 0.0;
        if restart {
            momentum = 1.0;
            z = next.clone();
            // let the step grow again after a restart
            eta *= 2.0;
        } else {
            let m_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * momentum * momentum));
            z = next.clone();
            vector::axpy((momentum - 1.0) / m_next, &step, &mut z);
            momentum = m_next;
        }
        x = next;
        gx = grad(&x)?;
        gap = fw_gap(&x, &gx);
    }
    if gap <= tol {
        return Ok(MirrorStep {
            w: x,
            residual: gap.max(0.0),
            iterations: max_iter,
        });
    }
    Err(Error::NoConvergence {
        what: "constrained mirror step",
        iterations: max_iter,
        residual: gap,
    })
}

/// Subproblem value `<g_hat, w> + gamma D_phi(w, w_prev)`; used by tests and
/// diagnostics.
pub fn mirror_objective(g_hat: &[f64], w: &[f64], w_prev: &[f64], gamma: f64, spec: &SpaceSpec) -> Result<f64> {
    Ok(vector::dot(g_hat, w) + gamma * space::bregman(w, w_prev, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncation_boundary() {
        let mut st = TruncationStats::default();
        let mut g = vec![3.0, 4.0];
        truncate_gradient(&mut g, 2.0, 5.0, &mut st);
        assert_eq!(g, vec![3.0, 4.0]);
        let mut h = vec![3.0, 4.0];
        truncate_gradient(&mut h, 2.0, 5.0 / (1.0 + 1e-9), &mut st);
        assert_eq!(h, vec![0.0, 0.0]);
        let mut z = vec![0.0, 0.0];
        truncate_gradient(&mut z, 2.0, 1.0, &mut st);
        assert_eq!(z, vec![0.0, 0.0]);
        assert_eq!((st.total, st.zeroed), (3, 1));
        assert_eq!(st.max_norm, 5.0);
        assert_eq!(st.zeroed_fraction(), 1.0 / 3.0);
    }

    #[test]
    fn zero_gradient_keeps_point() {
        let spec = SpaceSpec::new(1.5, 6).unwrap();
        let c = ConstraintSet::l2_ball(1.0, 6).unwrap();
        let w = vec![0.3, -0.2, 0.1, 0.0, 0.4, -0.1];
        let s = mirror_step_constrained(&[0.0; 6], &w, 2.0, &c, &spec, 1e-10, 10_000).unwrap();
        assert!(vector::l2_dist(&s.w, &w) < 1e-12);
    }

    #[test]
    fn interior_step_is_closed_form() {
        let spec = SpaceSpec::new(1.5, 4).unwrap();
        let c = ConstraintSet::l2_ball(10.0, 4).unwrap();
        let w = [0.1, 0.2, -0.3, 0.05];
        let g = [0.5, -0.1, 0.2, 0.3];
        let s = mirror_step_constrained(&g, &w, 3.0, &c, &spec, 1e-10, 100).unwrap();
        let mut y = grad_phi(&w, &spec).unwrap();
        vector::axpy(-1.0 / 3.0, &g, &mut y);
        assert_eq!(s.w, inv_grad_phi(&y, &spec).unwrap());
        // first-order condition of the subproblem
        let gp = grad_phi(&s.w, &spec).unwrap();
        let resid: f64 = gp.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(resid < 1e-8);
    }

    #[test]
    fn quadratic_potential_matches_projected_gradient() {
        let kappa = 2.0;
        let spec = SpaceSpec::custom(1.5, 5, kappa, 2.0).unwrap();
        assert_eq!(spec.s(), 2.0);
        let c = ConstraintSet::l2_ball(1.0, 5).unwrap();
        let w = [0.5, -0.5, 0.2, 0.1, 0.3];
        let g = [-9.0, 4.0, 1.0, -2.0, 0.5];
        let gamma = 1.5;
        let s = mirror_step_constrained(&g, &w, gamma, &c, &spec, 1e-12, 100).unwrap();
        let raw: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - b / (gamma * kappa)).collect();
        let nr = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let expect: Vec<f64> = raw.iter().map(|x| x / nr.max(1.0)).collect();
        assert!(vector::l2_dist(&s.w, &expect) < 1e-12);
    }

    /// Brute-force check of the PGD path: no random feasible point does better.
    #[test]
    fn pgd_step_beats_random_feasible_points() {
        let spec = SpaceSpec::new(1.5, 3).unwrap();
        let c = ConstraintSet::l1_ball(1.0, 3).unwrap();
        let w_prev = [0.2, -0.3, 0.1];
        let g = [4.0, 1.0, -2.5];
        let gamma = 1.0;
        let m = c.diameter_in(spec.p());
        let tol = 1e-8 * gamma * m * m;
        let s = mirror_step_constrained(&g, &w_prev, gamma, &c, &spec, tol, 10_000).unwrap();
        assert!(s.iterations > 0 && s.residual <= tol);
        assert!(c.contains(&s.w, 1e-9));
        let best = mirror_objective(&g, &s.w, &w_prev, gamma, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20_000 {
            let v: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let v = c.project(&v).unwrap();
            assert!(mirror_objective(&g, &v, &w_prev, gamma, &spec).unwrap() >= best - tol);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn steps_are_feasible_and_certified(
            seed in 0u64..1000,
            a in prop::sample::select(vec![1.0, 2.0, 1.5, 3.0, f64::INFINITY]),
            scale in 0.1f64..50.0,
        ) {
            let d = 5;
            let spec = SpaceSpec::new(1.5, d).unwrap();
            let c = ConstraintSet::ball(a, 1.0, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let w = c.project(&w).unwrap();
            let g: Vec<f64> = (0..d).map(|_| scale * (rng.random::<f64>() - 0.5)).collect();
            let m = c.diameter_in(spec.p());
            let tol = 1e-8 * m * m;
            let s = mirror_step_constrained(&g, &w, 1.0, &c, &spec, tol, 10_000).unwrap();
            prop_assert!(c.contains(&s.w, 1e-9));
            prop_assert!(s.residual <= tol);
            let at_prev = mirror_objective(&g, &w, &w, 1.0, &spec).unwrap();
            let at_new = mirror_objective(&g, &s.w, &w, 1.0, &spec).unwrap();
            prop_assert!(at_new <= at_prev + tol);
        }
    }
}
