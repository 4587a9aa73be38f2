//! Foliation-adapted coordinates (x, y).
//!
//! Near the artificial boundary the operators are written in coordinates where
//! x = x̃ + c is the depth and y parameterizes the leaves. Rays are launched
//! with initial tangent λ∂x + ω∂y, ω = ±1 — the transverse component is
//! normalized in coordinates, not in the metric.
//!
//! Frames exist in closed form for the shipped foliations with ε = 0:
//! half-plane boundaries (affine frame, including rotated ones) and circular
//! boundaries (polar frame, y = angle from the anchor).

use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, FoliationSpec, Rho};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug)]
pub enum Frame {
    /// x = c − (n·(z − q)), y = n⊥·(z − q); n the unit inward boundary normal,
    /// q a point on the boundary line.
    Strip { n: Vec2, q: Vec2, c: f64 },
    /// x = |z − center| − radius + c, y = angle(z − center) − theta0.
    Polar {
        center: Vec2,
        radius: f64,
        c: f64,
        theta0: f64,
    },
}

impl Frame {
    /// Build the exact frame for a foliation; requires ε = 0.
    pub fn for_foliation(fol: &FoliationSpec) -> Result<Frame> {
        if fol.eps != 0.0 {
            return Err(Error::argument(
                "adapted frames are exact only for ε = 0 foliations",
            ));
        }
        Ok(match fol.rho {
            Rho::HalfPlane { n, offset } => Frame::Strip {
                n,
                q: n * offset,
                c: fol.c,
            },
            Rho::Disk { center, radius } => {
                let w = fol.p - center;
                Frame::Polar {
                    center,
                    radius,
                    c: fol.c,
                    theta0: w.y.atan2(w.x),
                }
            }
        })
    }

    pub fn depth_c(&self) -> f64 {
        match *self {
            Frame::Strip { c, .. } => c,
            Frame::Polar { c, .. } => c,
        }
    }

    /// Chart point → adapted (x, y).
    pub fn to_adapted(&self, z: Vec2) -> (f64, f64) {
        match *self {
            Frame::Strip { n, q, c } => {
                let w = z - q;
                (c - n.dot(w), n.perp().dot(w))
            }
            Frame::Polar {
                center,
                radius,
                c,
                theta0,
            } => {
                let w = z - center;
                let mut th = w.y.atan2(w.x) - theta0;
                if th > std::f64::consts::PI {
                    th -= 2.0 * std::f64::consts::PI;
                }
                if th < -std::f64::consts::PI {
                    th += 2.0 * std::f64::consts::PI;
                }
                (w.norm() - radius + c, th)
            }
        }
    }

    /// Adapted (x, y) → chart point.
    pub fn from_adapted(&self, x: f64, y: f64) -> Vec2 {
        match *self {
            Frame::Strip { n, q, c } => q + n * (c - x) + n.perp() * y,
            Frame::Polar {
                center,
                radius,
                c,
                theta0,
            } => {
                let r = radius - c + x;
                let th = theta0 + y;
                center + Vec2::new(r * th.cos(), r * th.sin())
            }
        }
    }

    /// Columns (∂z/∂x, ∂z/∂y) at adapted (x, y).
    pub fn jacobian(&self, x: f64, y: f64) -> (Vec2, Vec2) {
        match *self {
            Frame::Strip { n, .. } => (-n, n.perp()),
            Frame::Polar {
                radius, c, theta0, ..
            } => {
                let r = radius - c + x;
                let th = theta0 + y;
                let u = Vec2::new(th.cos(), th.sin());
                (u, u.perp() * r)
            }
        }
    }

    /// Chart velocity of the ray (x, y, λ, ω).
    pub fn ray_velocity(&self, x: f64, y: f64, lambda: f64, omega: f64) -> Vec2 {
        let (dzdx, dzdy) = self.jacobian(x, y);
        dzdx * lambda + dzdy * omega
    }

    /// Launch state of the ray (x, y, λ, ω): chart point and chart velocity.
    pub fn launch(&self, x: f64, y: f64, lambda: f64, omega: f64) -> (Vec2, Vec2) {
        (self.from_adapted(x, y), self.ray_velocity(x, y, lambda, omega))
    }
}

/// Curvature coefficient α of the depth coordinate along a ray:
/// x(γ(t)) = x + λt + αt² + O(t³) for the ray (x, y, λ, ω).
///
/// Computed exactly from the chart data: 2α = v·(Hess x̃)v + ∇x̃ · γ̈ with
/// γ̈ = −Γ(v, v). Convexity of the foliation is α > 0 on leaf-tangent rays.
pub fn alpha(
    metric: &ChartMetric,
    fol: &FoliationSpec,
    frame: &Frame,
    x: f64,
    y: f64,
    lambda: f64,
    omega: f64,
) -> Result<f64> {
    let (z, v) = frame.launch(x, y, lambda, omega);
    let acc = metric.accel(z, v)?;
    let (h11, h12, h22) = fol.hess_x_tilde(z);
    let quad = h11 * v.x * v.x + 2.0 * h12 * v.x * v.y + h22 * v.y * v.y;
    let grad = fol.grad_x_tilde(z);
    Ok(0.5 * (quad + grad.dot(acc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strip_fol() -> FoliationSpec {
        FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.0,
            0.3,
        )
        .unwrap()
    }

    fn disk_fol() -> FoliationSpec {
        FoliationSpec::new(
            Rho::Disk {
                center: Vec2::ZERO,
                radius: 1.0,
            },
            Vec2::new(1.0, 0.0),
            0.0,
            0.3,
        )
        .unwrap()
    }

    #[test]
    fn frame_depth_equals_foliation_depth() {
        for (fol, npts) in [(strip_fol(), 7), (disk_fol(), 7)] {
            let frame = Frame::for_foliation(&fol).unwrap();
            for k in 0..npts {
                let x = 0.03 + 0.04 * k as f64;
                let y = -0.3 + 0.1 * k as f64;
                let z = frame.from_adapted(x, y);
                assert_relative_eq!(fol.x(z), x, epsilon = 1e-12);
                let (xa, ya) = frame.to_adapted(z);
                assert_relative_eq!(xa, x, epsilon = 1e-12);
                assert_relative_eq!(ya, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let frame = Frame::for_foliation(&disk_fol()).unwrap();
        let (x, y) = (0.1, 0.4);
        let h = 1e-6;
        let (dzdx, dzdy) = frame.jacobian(x, y);
        let fdx = (frame.from_adapted(x + h, y) - frame.from_adapted(x - h, y)) / (2.0 * h);
        let fdy = (frame.from_adapted(x, y + h) - frame.from_adapted(x, y - h)) / (2.0 * h);
        assert!((dzdx - fdx).norm() < 1e-8);
        assert!((dzdy - fdy).norm() < 1e-8);
    }

    #[test]
    fn disk_alpha_matches_circle_geometry() {
        // Euclidean disk: leaf-tangent rays with θ̇ = ω have r̈ = r, so
        // α = r/2 = (radius − c + x)/2.
        let fol = disk_fol();
        let frame = Frame::for_foliation(&fol).unwrap();
        let metric = ChartMetric::Euclidean;
        for x in [0.0, 0.1, 0.25] {
            let a = alpha(&metric, &fol, &frame, x, 0.2, 0.0, 1.0).unwrap();
            assert_relative_eq!(a, (1.0 - 0.3 + x) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn conformal_strip_alpha_is_minus_half_kappa() {
        // e^{2κ z.x} metric, leaves are vertical lines: α = −κ/2 exactly.
        let fol = strip_fol();
        let frame = Frame::for_foliation(&fol).unwrap();
        let metric = ChartMetric::ConformalExp { kappa: -0.3 };
        for x in [0.0, 0.15] {
            for om in [1.0, -1.0] {
                let a = alpha(&metric, &fol, &frame, x, 0.37, 0.0, om).unwrap();
                assert_relative_eq!(a, 0.15, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn frames_require_eps_zero() {
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
        assert!(Frame::for_foliation(&fol).is_err());
    }
}
