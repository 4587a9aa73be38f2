//! Scattering-coordinate kernel of the conjugated averaged operator.
//!
//! Relative to an evaluation point at depth x > 0, a second point is
//! addressed by the scattering increments X = (x′ − x)/x², Y = (y′ − y)/x.
//! Writing the operator's double quadrature in these variables gives the
//! kernel (per unit dX dY)
//!
//! ```text
//! K(x, y, X, Y) = Σ_branches e^{−F·X/(1+xX)} χ(λ/x) |Y|⁻¹ J ϱ,
//! ```
//!
//! where (t, λ) solve the ray-landing problem γ_{x,y,λ,ω}(t) = (X, Y) for
//! each transverse branch ω = ±1, and
//!
//! ```text
//! J = |Y| / ( x² · |det ∂(X, Y)/∂(t, λ)| )
//! ```
//!
//! is the ray-map density normalized so that J ≡ 1 for straight lines in an
//! affine frame and J → 1 on any chart as x → 0.
//!
//! At x = 0 the kernel has the closed boundary form
//!
//! ```text
//! K(0, y, X, Y) = e^{−F·X} ( χ(s) + χ(−s) ) |Y|⁻¹ ϱ_ff,   s = (X − α Y²)/Y,
//! ```
//!
//! the two χ terms being the forward and backward branches through the
//! point; α is the leaf curvature coefficient of the adapted frame. The
//! even χ-combination makes the boundary kernel insensitive to the branch
//! orientation, and its support obeys |X − αY²| ≤ C|Y| for a cutoff of
//! support radius C.

use crate::error::{Error, Result};
use crate::geometry::{alpha, ray_state_at, ChartMetric, Frame, Region};
use crate::normal_op::op::{damping_exponent, NormalOpConfig};
use crate::transform::{eval_weight, WeightSpec, COINCIDENCE_RADIUS, OMEGAS};

/// One transverse branch of the ray-landing solve.
#[derive(Clone, Copy, Debug)]
pub struct ScatteringBranch {
    pub omega: f64,
    /// Ray parameter at which the branch meets the target (sign = ω·sign Y).
    pub t: f64,
    /// Slope of the branch ray.
    pub lambda: f64,
    /// Normalized ray-map density J (→ 1 as x → 0; ≡ 1 for affine rays).
    pub jac_factor: f64,
}

/// Kernel value with a reachability certificate. `reachable = false` means
/// the target is outside the region or no branch ray connects to it; the
/// value is then zero by convention.
#[derive(Clone, Copy, Debug)]
pub struct KernelValue {
    pub value: f64,
    pub reachable: bool,
}

/// Tolerated outward excursion of the connecting ray piece.
const PATH_CLEARANCE_SLACK: f64 = -1e-6;

/// Solve the ray-landing problem for one branch: find (t, λ) with
/// γ_{x,y,λ,ω}(t) at scattering increments (X, Y) from (x, y).
///
/// Returns `None` when Newton fails to converge or the connecting piece
/// leaves the region.
pub fn scattering_branch(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    x: f64,
    y: f64,
    big_x: f64,
    big_y: f64,
    omega: f64,
    t_step: f64,
) -> Result<Option<ScatteringBranch>> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "branch solve needs positive depth, got x = {x}"
        )));
    }
    if big_y == 0.0 {
        return Err(Error::argument(
            "scattering kernel is parameterized away from Y = 0",
        ));
    }

    // Model initial guess: t̂ = ωY, λ̂ = (X − αY²)/(ωY).
    let a = alpha(metric, &region.fol, frame, x, y, 0.0, omega)?;
    let mut t = x * omega * big_y;
    let mut lambda = x * (big_x - a * big_y * big_y) / (omega * big_y);

    let shoot = |t: f64, lambda: f64| -> Result<(f64, f64, f64)> {
        let (z0, v0) = frame.launch(x, y, lambda, omega);
        let (sample, clearance) = ray_state_at(metric, region, z0, v0, t, t_step)?;
        let (xp, yp) = frame.to_adapted(sample.z);
        Ok(((xp - x) / (x * x), (yp - y) / x, clearance))
    };

    let tol = 1e-9 * (1.0 + big_x.abs() + big_y.abs());
    let dt = 1e-6 * x.abs().max(t.abs());
    let dl = 1e-7 * x;
    let mut converged = false;
    for _ in 0..30 {
        let (gx, gy, _) = shoot(t, lambda)?;
        let (rx, ry) = (gx - big_x, gy - big_y);
        if rx.abs() <= tol && ry.abs() <= tol {
            converged = true;
            break;
        }
        let (gx_t, gy_t, _) = shoot(t + dt, lambda)?;
        let (gx_l, gy_l, _) = shoot(t, lambda + dl)?;
        let m00 = (gx_t - gx) / dt;
        let m01 = (gx_l - gx) / dl;
        let m10 = (gy_t - gy) / dt;
        let m11 = (gy_l - gy) / dl;
        let det = m00 * m11 - m01 * m10;
        if det.abs() < 1e-300 || !det.is_finite() {
            return Ok(None);
        }
        t -= (rx * m11 - ry * m01) / det;
        lambda -= (ry * m00 - rx * m10) / det;
        if !t.is_finite() || !lambda.is_finite() {
            return Ok(None);
        }
    }
    if !converged {
        return Ok(None);
    }

    // Path must stay inside the region for the branch to contribute.
    let (_, _, clearance) = shoot(t, lambda)?;
    if clearance < PATH_CLEARANCE_SLACK {
        return Ok(None);
    }

    // Central-difference ray-map Jacobian at the solution.
    let (gx_tp, gy_tp, _) = shoot(t + dt, lambda)?;
    let (gx_tm, gy_tm, _) = shoot(t - dt, lambda)?;
    let (gx_lp, gy_lp, _) = shoot(t, lambda + dl)?;
    let (gx_lm, gy_lm, _) = shoot(t, lambda - dl)?;
    let m00 = (gx_tp - gx_tm) / (2.0 * dt);
    let m01 = (gx_lp - gx_lm) / (2.0 * dl);
    let m10 = (gy_tp - gy_tm) / (2.0 * dt);
    let m11 = (gy_lp - gy_lm) / (2.0 * dl);
    let det = m00 * m11 - m01 * m10;
    if det.abs() < 1e-300 || !det.is_finite() {
        return Ok(None);
    }
    Ok(Some(ScatteringBranch {
        omega,
        t,
        lambda,
        jac_factor: big_y.abs() / (x * x * det.abs()),
    }))
}

/// Kernel of the conjugated averaged operator in scattering coordinates.
///
/// Pass `x = 0.0` exactly for the closed boundary form; any x > 0 solves the
/// two branch rays numerically. Requires Y ≠ 0 (the diagonal is the symbol
/// calculus' business, not the kernel's).
pub fn kernel_flat(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    cfg: &NormalOpConfig,
    x: f64,
    y: f64,
    big_x: f64,
    big_y: f64,
) -> Result<KernelValue> {
    if big_y == 0.0 {
        return Err(Error::argument(
            "scattering kernel is parameterized away from Y = 0",
        ));
    }
    if x < 0.0 {
        return Err(Error::domain(format!("negative depth x = {x}")));
    }

    if x == 0.0 {
        // Boundary form: branches collapse onto the model parabola.
        let a = alpha(metric, &region.fol, frame, 0.0, y, 0.0, 1.0)?;
        let s = (big_x - a * big_y * big_y) / big_y;
        let chi_even = cfg.chi.eval(s) + cfg.chi.eval(-s);
        let z0 = frame.from_adapted(0.0, y);
        let (_, leaf_dir) = frame.jacobian(0.0, y);
        let rho_ff = eval_weight(w, z0, z0, Some(leaf_dir))?;
        return Ok(KernelValue {
            value: (-cfg.f_const * big_x).exp() * chi_even * rho_ff / big_y.abs(),
            reachable: true,
        });
    }

    // Target must lie inside the region (and above the deep boundary).
    if 1.0 + x * big_x <= 0.0 {
        return Ok(KernelValue {
            value: 0.0,
            reachable: false,
        });
    }
    let target = frame.from_adapted(x + x * x * big_x, y + x * big_y);
    if region.clearance(target) < 0.0 {
        return Ok(KernelValue {
            value: 0.0,
            reachable: false,
        });
    }

    let z0 = frame.from_adapted(x, y);
    let damp = (-cfg.f_const * damping_exponent(x, big_x)).exp();
    let mut value = 0.0;
    let mut any_branch = false;
    for omega in OMEGAS {
        let Some(branch) =
            scattering_branch(metric, region, frame, x, y, big_x, big_y, omega, cfg.t_step)?
        else {
            continue;
        };
        any_branch = true;
        let chi = cfg.chi.eval(branch.lambda / x);
        if chi == 0.0 {
            continue;
        }
        let dir = if z0.dist(target) < COINCIDENCE_RADIUS {
            Some(frame.ray_velocity(x, y, branch.lambda, branch.omega))
        } else {
            None
        };
        let rho = eval_weight(w, z0, target, dir)?;
        value += damp * chi * branch.jac_factor * rho / big_y.abs();
    }

    Ok(KernelValue {
        value,
        reachable: any_branch,
    })
}
