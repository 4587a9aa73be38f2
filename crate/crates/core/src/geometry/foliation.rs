//! Boundary defining functions and the foliation depth function.
//!
//! Given a boundary defining function ρ (ρ = 0 on the boundary, ρ > 0 inside),
//! an anchor point p on the boundary and ε ≥ 0, the depth function is
//!
//! ```text
//! x̃(z) = −ρ(z) − ε|z − p|²,
//! ```
//!
//! so x̃(p) = 0 and ∇x̃(p) = −∇ρ(p). The collar of depth c is
//! Ω_c = {x̃ ≥ −c, ρ ≥ 0}, foliated by the level sets Σ_t = x̃⁻¹(−t), and
//! x = x̃ + c is a defining function of the artificial boundary Σ_c.
//!
//! The quadratic term buys compactness of Ω_c at the price of convexity: along
//! straight lines its second derivative is −2ε, so only boundaries that are
//! strictly convex by more than that margin give a convex foliation.

use crate::error::{Error, Result};
use crate::vec2::{Rect, Vec2};

/// Boundary defining function presets with analytic derivatives.
#[derive(Clone, Copy, Debug)]
pub enum Rho {
    /// ρ(z) = n·z − offset with |n| = 1; boundary is the line n·z = offset.
    HalfPlane { n: Vec2, offset: f64 },
    /// ρ(z) = radius − |z − center|; boundary is the circle, inside is positive.
    Disk { center: Vec2, radius: f64 },
}

impl Rho {
    pub fn value(&self, z: Vec2) -> f64 {
        match *self {
            Rho::HalfPlane { n, offset } => n.dot(z) - offset,
            Rho::Disk { center, radius } => radius - (z - center).norm(),
        }
    }

    pub fn grad(&self, z: Vec2) -> Vec2 {
        match *self {
            Rho::HalfPlane { n, .. } => n,
            Rho::Disk { center, .. } => {
                let w = z - center;
                -w.normalized()
            }
        }
    }

    /// Hessian as (h11, h12, h22).
    pub fn hess(&self, z: Vec2) -> (f64, f64, f64) {
        match *self {
            Rho::HalfPlane { .. } => (0.0, 0.0, 0.0),
            Rho::Disk { center, .. } => {
                // Hess(−|w|) = −(I − ŵŵᵀ)/|w|
                let w = z - center;
                let r = w.norm();
                let (ux, uy) = (w.x / r, w.y / r);
                (
                    -(1.0 - ux * ux) / r,
                    (ux * uy) / r,
                    -(1.0 - uy * uy) / r,
                )
            }
        }
    }
}

/// Foliation data: ρ, anchor p ∈ ∂X, compactifying ε, and depth c.
#[derive(Clone, Copy, Debug)]
pub struct FoliationSpec {
    pub rho: Rho,
    pub p: Vec2,
    pub eps: f64,
    pub c: f64,
}

impl FoliationSpec {
    pub fn new(rho: Rho, p: Vec2, eps: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::argument("foliation depth c must be positive"));
        }
        if eps < 0.0 {
            return Err(Error::argument("ε must be nonnegative"));
        }
        let spec = FoliationSpec { rho, p, eps, c };
        if spec.rho.value(p).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "anchor p is not on the boundary: ρ(p) = {:e}",
                spec.rho.value(p)
            )));
        }
        Ok(spec)
    }

    /// Depth function x̃(z) = −ρ(z) − ε|z−p|² (0 at p, decreasing inward).
    pub fn x_tilde(&self, z: Vec2) -> f64 {
        -self.rho.value(z) - self.eps * (z - self.p).norm2()
    }

    pub fn grad_x_tilde(&self, z: Vec2) -> Vec2 {
        -self.rho.grad(z) - 2.0 * self.eps * (z - self.p)
    }

    pub fn hess_x_tilde(&self, z: Vec2) -> (f64, f64, f64) {
        let (h11, h12, h22) = self.rho.hess(z);
        (
            -h11 - 2.0 * self.eps,
            -h12,
            -h22 - 2.0 * self.eps,
        )
    }

    /// Defining function of the artificial boundary: x = x̃ + c ≥ 0 on Ω_c.
    pub fn x(&self, z: Vec2) -> f64 {
        self.x_tilde(z) + self.c
    }

    /// Membership in the collar Ω_c = {x ≥ 0, ρ ≥ 0}.
    pub fn in_collar(&self, z: Vec2) -> bool {
        self.rho.value(z) >= 0.0 && self.x(z) >= 0.0
    }

    /// Sampled validation: anchor conditions, gradient consistency against
    /// central differences, and boundedness of Ω_c inside the chart.
    pub fn validate(&self, chart: Rect) -> Result<()> {
        if self.x_tilde(self.p).abs() > 1e-12 {
            return Err(Error::validation("x̃(p) must vanish"));
        }
        let gp = self.grad_x_tilde(self.p) + self.rho.grad(self.p);
        if gp.norm() > 1e-12 {
            return Err(Error::validation("∇x̃(p) must equal −∇ρ(p)"));
        }
        // Gradient consistency by central differences at a few interior points.
        let h = 1e-5;
        for k in 0..5 {
            let z = Vec2::new(
                chart.x0 + (chart.x1 - chart.x0) * (0.13 + 0.17 * k as f64),
                chart.y0 + (chart.y1 - chart.y0) * (0.71 - 0.11 * k as f64),
            );
            let fd = Vec2::new(
                (self.x_tilde(Vec2::new(z.x + h, z.y)) - self.x_tilde(Vec2::new(z.x - h, z.y)))
                    / (2.0 * h),
                (self.x_tilde(Vec2::new(z.x, z.y + h)) - self.x_tilde(Vec2::new(z.x, z.y - h)))
                    / (2.0 * h),
            );
            let g = self.grad_x_tilde(z);
            if (fd - g).norm() > 1e-6 * (1.0 + g.norm()) {
                return Err(Error::validation(
                    "analytic ∇x̃ disagrees with finite differences",
                ));
            }
        }
        // Boundedness: every collar point sampled on a fine grid must sit
        // strictly inside the chart, so Ω_c does not leak through chart edges.
        let n = output_grid_n(chart);
        let pad_x = 0.02 * (chart.x1 - chart.x0);
        let pad_y = 0.02 * (chart.y1 - chart.y0);
        for iy in 0..n {
            let y = chart.y0 + (chart.y1 - chart.y0) * iy as f64 / (n - 1) as f64;
            for ix in 0..n {
                let x = chart.x0 + (chart.x1 - chart.x0) * ix as f64 / (n - 1) as f64;
                let z = Vec2::new(x, y);
                if self.in_collar(z)
                    && (z.x < chart.x0 + pad_x
                        || z.x > chart.x1 - pad_x
                        || z.y < chart.y0 + pad_y
                        || z.y > chart.y1 - pad_y)
                {
                    return Err(Error::validation(format!(
                        "Ω_c touches the chart edge near ({:.3}, {:.3}); enlarge the chart",
                        z.x, z.y
                    )));
                }
            }
        }
        Ok(())
    }
}

fn output_grid_n(chart: Rect) -> usize {
    // Enough samples that a collar leak of more than ~2% of the chart is seen.
    let _ = chart;
    101
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anchor_conditions_hold() {
        let fol = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.1,
            0.3,
        )
        .unwrap();
        assert_eq!(fol.x_tilde(Vec2::ZERO), 0.0);
        let g = fol.grad_x_tilde(Vec2::ZERO);
        assert_relative_eq!(g.x, -1.0);
        assert_relative_eq!(g.y, 0.0);
    }

    #[test]
    fn strip_depth_function_values() {
        let fol = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.0,
            1.0,
        )
        .unwrap();
        // ε = 0: x̃ = −z.x, collar is the slab 0 ≤ z.x ≤ 1.
        assert_relative_eq!(fol.x_tilde(Vec2::new(0.25, 3.0)), -0.25);
        assert!(fol.in_collar(Vec2::new(0.5, -2.0)));
        assert!(!fol.in_collar(Vec2::new(1.5, 0.0)));
        assert!(!fol.in_collar(Vec2::new(-0.1, 0.0)));
    }

    #[test]
    fn disk_hessian_matches_fd() {
        let fol = FoliationSpec::new(
            Rho::Disk {
                center: Vec2::ZERO,
                radius: 1.0,
            },
            Vec2::new(1.0, 0.0),
            0.05,
            0.3,
        )
        .unwrap();
        let z = Vec2::new(0.6, 0.35);
        let h = 1e-5;
        let (h11, h12, h22) = fol.hess_x_tilde(z);
        let gxp = fol.grad_x_tilde(Vec2::new(z.x + h, z.y));
        let gxm = fol.grad_x_tilde(Vec2::new(z.x - h, z.y));
        let gyp = fol.grad_x_tilde(Vec2::new(z.x, z.y + h));
        let gym = fol.grad_x_tilde(Vec2::new(z.x, z.y - h));
        assert_relative_eq!(h11, (gxp.x - gxm.x) / (2.0 * h), max_relative = 1e-6);
        assert_relative_eq!(h12, (gyp.x - gym.x) / (2.0 * h), max_relative = 1e-6);
        assert_relative_eq!(h22, (gyp.y - gym.y) / (2.0 * h), max_relative = 1e-6);
    }

    #[test]
    fn off_boundary_anchor_rejected() {
        let r = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::new(0.5, 0.0),
            0.1,
            0.3,
        );
        assert!(r.is_err());
    }
}
