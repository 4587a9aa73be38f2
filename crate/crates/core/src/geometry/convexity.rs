//! Numerical convexity certificates for foliation leaves.
//!
//! A leaf Σ_t = { x̃ = −t } is strictly convex (towards the shallower region
//! already swept) when every unit-speed geodesic tangent to it satisfies
//! d²/ds² (x̃ ∘ γ)(0) > 0. At the tangency instant that second derivative is
//! algebraic,
//!
//! ```text
//! d²/ds² (x̃ ∘ γ)(0) = v · Hess x̃ · v + ∇x̃ · γ̈,   γ̈ = −Γ(v, v),
//! ```
//!
//! so certifying convexity needs no shooting: sample points on the leaf,
//! take the g-unit tangent there, and minimize the expression. The reported
//! margin is that signed minimum. Positive margin means tangent geodesics
//! curve back towards the physical boundary (the orientation the inversion
//! needs); negative margin flags an anti-convex configuration — e.g. a flat
//! metric with ε-bent leaves, where the margin is exactly −2ε.
//!
//! `margin / 2` equals the smallest unit-speed transverse curvature
//! coefficient on the leaf, a lower bound for the coefficient α used by the
//! ray normalization (in its unit-speed form).

use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, FoliationSpec, Rho};
use crate::vec2::{Rect, Vec2};

#[derive(Clone, Copy, Debug)]
pub struct MarginSample {
    pub z: Vec2,
    /// g-unit leaf tangent at `z`.
    pub v: Vec2,
    /// d²/ds² (x̃ ∘ γ)(0) for the tangent geodesic through (z, v).
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct MarginReport {
    /// Signed minimum of the leaf-tangent second derivative; positive
    /// certifies strict convexity at the sampled resolution.
    pub margin: f64,
    /// Lower bound on the quadratic coefficient of x̃ along unit tangents.
    pub c1: f64,
    pub minimizer: MarginSample,
    pub samples: usize,
}

/// Points on the leaf { x̃ = −t } inside the chart, found by 1D root finding
/// along directions transverse to the foliation.
pub fn leaf_points(fol: &FoliationSpec, chart: Rect, t: f64, n: usize) -> Result<Vec<Vec2>> {
    if n < 2 {
        return Err(Error::argument("need at least 2 leaf seeds"));
    }
    if !(0.0..=fol.c).contains(&t) {
        return Err(Error::domain(format!(
            "leaf depth t = {t} outside [0, c = {}]",
            fol.c
        )));
    }
    let f = |z: Vec2| fol.x_tilde(z) + t; // root at x̃ = −t
    let mut out = Vec::new();
    match fol.rho {
        Rho::HalfPlane { n: nrm, offset } => {
            // Seeds run along the boundary line; roots are sought inward (+n).
            let q = nrm * offset;
            let tangent = nrm.perp();
            let span = 0.45 * chart.diameter();
            for i in 0..n {
                let s = -span + 2.0 * span * (i as f64) / ((n - 1) as f64);
                let seed = q + tangent * s;
                let f0 = f(seed);
                let mut lo = 0.0;
                let mut hi = 0.0;
                let mut found = false;
                let mut step = 1e-3;
                let mut u = 0.0;
                while u < chart.diameter() {
                    let u2 = u + step;
                    let z = seed + nrm * u2;
                    if !chart.contains(z) {
                        break;
                    }
                    if f(z) * f0 <= 0.0 {
                        lo = u;
                        hi = u2;
                        found = true;
                        break;
                    }
                    u = u2;
                    step *= 1.5;
                }
                if !found {
                    continue;
                }
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if f(seed + nrm * mid) * f(seed + nrm * lo) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let z = seed + nrm * (0.5 * (lo + hi));
                if chart.contains(z) && fol.rho.value(z) >= 0.0 {
                    out.push(z);
                }
            }
        }
        Rho::Disk { center, radius } => {
            // Seeds are polar angles around the anchor; roots are sought radially.
            let theta_p = {
                let w = fol.p - center;
                w.y.atan2(w.x)
            };
            let half = 0.95 * std::f64::consts::FRAC_PI_2;
            for i in 0..n {
                let th = theta_p - half + 2.0 * half * (i as f64) / ((n - 1) as f64);
                let u = Vec2::new(th.cos(), th.sin());
                let (mut lo, mut hi) = (1e-6 * radius, radius);
                let (flo, fhi) = (f(center + u * lo), f(center + u * hi));
                if flo * fhi > 0.0 {
                    continue;
                }
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if f(center + u * mid) * f(center + u * lo) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let z = center + u * (0.5 * (lo + hi));
                if chart.contains(z) && fol.rho.value(z) >= 0.0 {
                    out.push(z);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::domain(format!(
            "leaf t = {t} has no points inside the chart"
        )));
    }
    Ok(out)
}

/// Minimum of the tangent-geodesic second derivative of x̃ over the leaf at
/// depth `t`, sampled at `n_samples` points with both tangent orientations.
pub fn convexity_margin(
    metric: &ChartMetric,
    fol: &FoliationSpec,
    chart: Rect,
    t: f64,
    n_samples: usize,
) -> Result<MarginReport> {
    let pts = leaf_points(fol, chart, t, n_samples)?;
    let mut best: Option<MarginSample> = None;
    let mut count = 0usize;
    for z in pts {
        let grad = fol.grad_x_tilde(z);
        let tangent = grad.perp();
        if tangent.norm() == 0.0 {
            continue;
        }
        for orient in [1.0, -1.0] {
            let v = metric.unit(z, tangent * orient)?;
            let value = second_derivative_along(metric, fol, z, v)?;
            count += 1;
            if best.map_or(true, |b| value < b.value) {
                best = Some(MarginSample { z, v, value });
            }
        }
    }
    let minimizer = best.ok_or_else(|| Error::domain("no leaf samples inside the chart"))?;
    Ok(MarginReport {
        margin: minimizer.value,
        c1: 0.5 * minimizer.value,
        minimizer,
        samples: count,
    })
}

/// Minimum per-leaf margin over `n_leaves` leaves spanning the collar depth
/// [0, c]; the gate used by reconstruction presets.
pub fn collar_margin(
    metric: &ChartMetric,
    fol: &FoliationSpec,
    chart: Rect,
    n_leaves: usize,
    n_samples: usize,
) -> Result<MarginReport> {
    if n_leaves < 2 {
        return Err(Error::argument("need at least 2 leaves"));
    }
    let mut best: Option<MarginReport> = None;
    for i in 0..n_leaves {
        let t = (fol.c * (i as f64) / ((n_leaves - 1) as f64)).min(fol.c * (1.0 - 1e-9));
        match convexity_margin(metric, fol, chart, t, n_samples) {
            Ok(rep) => {
                if best.as_ref().map_or(true, |b| rep.margin < b.margin) {
                    best = Some(rep);
                }
            }
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::domain("no leaf of the collar meets the chart"))
}

/// d²/ds² (x̃ ∘ γ)(0) for the geodesic through (z, v).
pub fn second_derivative_along(
    metric: &ChartMetric,
    fol: &FoliationSpec,
    z: Vec2,
    v: Vec2,
) -> Result<f64> {
    let h = fol.hess_x_tilde(z);
    let quad = v.x * (h.0 * v.x + h.1 * v.y) + v.y * (h.1 * v.x + h.2 * v.y);
    let acc = metric.accel(z, v)?;
    Ok(quad + fol.grad_x_tilde(z).dot(acc))
}
