//! Closed-form boundary symbol of the conjugated normal operator, the
//! critical points of its oscillatory representation, and the
//! one-constant calibration tying quadrature values to the closed form.
//!
//! At the artificial boundary the operator's phase in the rescaled ray
//! variables is φ(t̂, λ̂) = ξ(λ̂t̂ + αt̂²) + ηωt̂ and the damping is
//! exp(−F(λ̂t̂ + αt̂²)). With the Gaussian slope cutoff χ(s) = e^{−s²/(2ν)},
//! ν = α/F, the (t̂, λ̂) integral evaluates exactly to
//!
//!   4π (F² + ξ²)^{−1/2} · exp(−F η² / (2α(ξ² + F²))) · ϱ_ff,
//!
//! so the normalized shape √(F/α)(F² + ξ²)^{−1/2} e^{−Fη²/(2α(ξ²+F²))} ϱ_ff
//! matches any fixed-(F, α) run after calibrating the single constant
//! 4π√(α/F).

use crate::error::{Error, Result};
use crate::normal_op::CutoffChi;

fn check_common(f_const: f64, alpha: f64, rho_ff: f64) -> Result<()> {
    if !(f_const > 0.0) || !f_const.is_finite() {
        return Err(Error::argument(
            "the conjugation strength F must be positive",
        ));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Convexity(format!(
            "curvature coefficient α = {alpha} is not positive; the foliation is not convex here"
        )));
    }
    if !(rho_ff > 0.0) || !rho_ff.is_finite() {
        return Err(Error::argument(
            "the diagonal weight ϱ_ff must be positive",
        ));
    }
    Ok(())
}

/// Closed-form boundary symbol shape
/// ϱ_ff √(F/α) (F² + ξ²)^{−1/2} exp(−Fη²/(2α(ξ²+F²))).
///
/// Positive, even in η, and decaying like |ξ|⁻¹ along the cone axis. One
/// multiplicative constant (4π√(α/F) for the Gaussian cutoff in this crate's
/// normalization) relates it to [`numeric_symbol`](super::numeric_symbol)
/// values.
pub fn boundary_symbol_closed(
    xi: f64,
    eta: f64,
    f_const: f64,
    alpha: f64,
    rho_ff: f64,
) -> Result<f64> {
    check_common(f_const, alpha, rho_ff)?;
    if !xi.is_finite() || !eta.is_finite() {
        return Err(Error::argument("non-finite cotangent point"));
    }
    let denom = f_const * f_const + xi * xi;
    let shape = (f_const / alpha).sqrt() / denom.sqrt();
    Ok(rho_ff * shape * (-f_const * eta * eta / (2.0 * alpha * denom)).exp())
}

/// Phase of the boundary oscillatory representation at (t̂, λ̂) for the ray
/// branch ω: φ = ξ(λ̂t̂ + αt̂²) + ηωt̂.
pub fn model_phase(xi: f64, eta: f64, omega: f64, alpha: f64, t_hat: f64, lambda_hat: f64) -> f64 {
    xi * (lambda_hat * t_hat + alpha * t_hat * t_hat) + eta * omega * t_hat
}

/// Nondegenerate critical point of [`model_phase`] in (t̂, λ̂), with the
/// Hessian determinant.
#[derive(Clone, Copy, Debug)]
pub struct CriticalPoint {
    pub t_hat: f64,
    pub lambda_hat: f64,
    /// det [[2αξ, ξ], [ξ, 0]] = −ξ².
    pub hessian_det: f64,
}

/// The unique critical point of the phase for the branch ω: t̂ = 0,
/// λ̂ = −ηω/ξ, with Hessian determinant −ξ² (nondegenerate for ξ ≠ 0).
///
/// The returned point is re-checked by central differences; directions with
/// ξ = 0 have no nondegenerate critical point and are rejected.
pub fn critical_points(xi: f64, eta: f64, omega: f64, alpha: f64) -> Result<CriticalPoint> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Convexity(format!(
            "curvature coefficient α = {alpha} is not positive"
        )));
    }
    if !xi.is_finite() || !eta.is_finite() {
        return Err(Error::argument("non-finite cotangent point"));
    }
    if xi == 0.0 {
        return Err(Error::domain(format!(
            "direction (0, {eta}) is conormal-degenerate: the ray phase has no \
             nondegenerate critical point there"
        )));
    }
    let cp = CriticalPoint {
        t_hat: 0.0,
        lambda_hat: -eta * omega / xi,
        hessian_det: -xi * xi,
    };
    // Defensive certificate: the analytic gradient should vanish to
    // roundoff; a failure means the model phase and the critical point
    // drifted apart.
    let eps = 1e-6;
    let phi = |t: f64, l: f64| model_phase(xi, eta, omega, alpha, t, l);
    let dt = (phi(cp.t_hat + eps, cp.lambda_hat) - phi(cp.t_hat - eps, cp.lambda_hat)) / (2.0 * eps);
    let dl = (phi(cp.t_hat, cp.lambda_hat + eps) - phi(cp.t_hat, cp.lambda_hat - eps)) / (2.0 * eps);
    let tol = 1e-10 * (1.0 + xi.abs() + eta.abs());
    if dt.abs() > tol || dl.abs() > tol {
        return Err(Error::Accuracy {
            what: format!("critical-point gradient check at ξ = {xi}, η = {eta}, ω = {omega}"),
            best: dt.abs().max(dl.abs()),
            change: tol,
        });
    }
    Ok(cp)
}

/// Leading stationary-phase value of the boundary symbol:
/// (2π/|ξ|)(χ(η/ξ) + χ(−η/ξ)) ϱ_ff, summing the two ray branches. The
/// conjugation strength does not enter at leading order.
pub fn stationary_phase_symbol(
    xi: f64,
    eta: f64,
    chi: &CutoffChi,
    rho_ff: f64,
) -> Result<f64> {
    if !(rho_ff > 0.0) || !rho_ff.is_finite() {
        return Err(Error::argument("the diagonal weight ϱ_ff must be positive"));
    }
    if xi == 0.0 {
        return Err(Error::domain(format!(
            "direction (0, {eta}) is conormal-degenerate: stationary phase does not apply"
        )));
    }
    let s = eta / xi;
    Ok(2.0 * std::f64::consts::PI / xi.abs() * (chi.eval(s) + chi.eval(-s)) * rho_ff)
}

/// Least-squares constant c minimizing Σ (numeric_i − c · closed_i)² over
/// paired samples of the quadrature symbol modulus and the closed form.
pub fn calibrate_symbol_constant(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::argument("no calibration pairs supplied"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(numeric, closed) in pairs {
        if !numeric.is_finite() || !closed.is_finite() {
            return Err(Error::argument("non-finite calibration pair"));
        }
        num += numeric * closed;
        den += closed * closed;
    }
    if den <= 0.0 {
        return Err(Error::argument(
            "calibration needs a nonzero closed-form column",
        ));
    }
    Ok(num / den)
}
