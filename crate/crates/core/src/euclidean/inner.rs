use alloc::format;
use libm::{ceil, log};

use crate::problems::ConstraintSet;
use crate::vector::{self, Vector};
use crate::{Error, Result};

/// A smooth, strongly convex objective on `R^d`, constants w.r.t. `||.||_2`.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    /// Writes the gradient at `w` into `out`.
    fn gradient(&self, w: &[f64], out: &mut [f64]);
    fn smoothness(&self) -> f64;
    fn strong_convexity(&self) -> f64;
}

/// Result of [`inner_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub theta: Vector,
    /// Gradient steps taken.
    pub iterations: usize,
    /// Step count that certifies `alpha`-accuracy from the linear rate.
    pub certified_iterations: usize,
    /// Frank-Wolfe gap at `theta`, an upper bound on its suboptimality.
    pub gap: f64,
}

/// Iteration count after which projected gradient descent with step
/// `1/beta` is `alpha`-accurate: `ceil((beta/mu) ln(beta D^2 / (2 alpha))) + 1`.
pub fn pgd_iteration_bound(beta: f64, mu: f64, diameter: f64, alpha: f64) -> usize {
    let ratio = beta * diameter * diameter / (2.0 * alpha);
    let k = if ratio > 1.0 { ceil(beta / mu * log(ratio)) } else { 0.0 };
    k as usize + 1
}

/// Minimises `f` over `c` to accuracy `alpha` by projected gradient descent
/// from `start` (projected onto `c` first).
///
/// The step count from the linear rate is always run. Iteration then
/// continues, up to four times that count, until the Frank-Wolfe gap
/// `<grad f(w), w> + h_C(-grad f(w))` is at most `alpha` as well.
pub fn inner_solve<F: SmoothObjective + ?Sized>(
    f: &F,
    c: &ConstraintSet,
    alpha: f64,
    start: &[f64],
) -> Result<InnerSolution> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("accuracy must be positive, got {alpha}")));
    }
    let (beta, mu) = (f.smoothness(), f.strong_convexity());
    if !(mu > 0.0 && beta >= mu && beta.is_finite()) {
        return Err(Error::invalid(format!(
            "inner solver needs 0 < mu <= beta < inf, got mu = {mu}, beta = {beta}"
        )));
    }
    vector::ensure_dim(start, f.dim())?;
    let certified = pgd_iteration_bound(beta, mu, c.diameter_l2(), alpha);
    let cap = certified.saturating_mul(4).saturating_add(1000);
    let mut w = c.project(start)?;
    let mut g = vector::zeros(w.len());
    let mut step = vector::zeros(w.len());
    let mut k = 0;
    loop {
        f.gradient(&w, &mut g);
        vector::ensure_finite(&g, "inner solver gradient")?;
        if k >= certified {
            let neg: Vector = g.iter().map(|x| -x).collect();
            let gap = (vector::dot(&g, &w) + c.support(&neg)).max(0.0);
            if gap <= alpha || k >= cap {
                return Ok(InnerSolution {
                    theta: w,
                    iterations: k,
                    certified_iterations: certified,
                    gap,
                });
            }
        }
        for ((s, wi), gi) in step.iter_mut().zip(&w).zip(&g) {
            *s = wi - gi / beta;
        }
        w = c.project(&step)?;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        c: Vector,
        curvature: f64,
    }

    impl SmoothObjective for Quadratic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn value(&self, w: &[f64]) -> f64 {
            let d = vector::l2_dist(w, &self.c);
            0.5 * self.curvature * d * d
        }
        fn gradient(&self, w: &[f64], out: &mut [f64]) {
            for ((o, wi), ci) in out.iter_mut().zip(w).zip(&self.c) {
                *o = self.curvature * (wi - ci);
            }
        }
        fn smoothness(&self) -> f64 {
            self.curvature
        }
        fn strong_convexity(&self) -> f64 {
            self.curvature
        }
    }

    #[test]
    fn interior_quadratic() {
        let q = Quadratic {
            c: vec![0.3, -0.2, 0.1],
            curvature: 1.0,
        };
        let ball = ConstraintSet::l2_ball(1.0, 3).unwrap();
        let alpha = 1e-6;
        let sol = inner_solve(&q, &ball, alpha, &[0.9, 0.0, 0.0]).unwrap();
        assert!(vector::l2_dist(&sol.theta, &q.c) <= (2.0 * alpha).sqrt());
        assert!(sol.gap <= alpha);

        // starting at the optimum keeps the value
        let sol = inner_solve(&q, &ball, alpha, &q.c).unwrap();
        assert_eq!(q.value(&sol.theta), q.value(&q.c));
        assert!(inner_solve(&q, &ball, 0.0, &q.c).is_err());
    }

    #[test]
    fn boundary_quadratic_projects() {
        let q = Quadratic {
            c: vec![3.0, 4.0],
            curvature: 2.0,
        };
        let ball = ConstraintSet::l2_ball(1.0, 2).unwrap();
        let sol = inner_solve(&q, &ball, 1e-12, &[0.0, 0.0]).unwrap();
        assert!(vector::l2_dist(&sol.theta, &[0.6, 0.8]) < 1e-9);
    }

    #[test]
    fn iteration_bound() {
        // (beta/mu) ln(beta D^2 / (2 alpha)) = 10 ln(4e6)
        let k = pgd_iteration_bound(1.0, 0.1, 2.0, 5e-7);
        assert_eq!(k, (10.0 * (4e6f64).ln()).ceil() as usize + 1);
        assert_eq!(pgd_iteration_bound(1.0, 1.0, 1.0, 10.0), 1);
    }
}
