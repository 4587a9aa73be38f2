//! Quadrature evaluation of the conjugated normal operator's symbol.
//!
//! Two independent routes are provided. The phase route integrates the
//! oscillatory (t̂, λ̂) representation directly: at the artificial boundary
//! the rescaled depth increment is the exact parabola X̂ = λ̂t̂ + αt̂², and at
//! interior base points it is read off traced geodesics. The kernel route
//! Fourier-transforms the scattering kernel over the increment plane using
//! the substitution X = αY² + sY. Both converge to the same symbol; their
//! agreement is a build-time cross-check of the whole near-boundary stack.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{alpha, trace_segment, ChartMetric, Frame, GeodesicConfig, Region};
use crate::normal_op::{kernel_flat, CutoffChi, NormalOpConfig};
use crate::transform::{eval_weight, WeightSpec, COINCIDENCE_RADIUS};
use crate::vec2::Vec2;

/// Controls for symbol quadrature.
#[derive(Clone, Debug)]
pub struct SymbolConfig {
    /// Conjugation strength F > 0.
    pub f_const: f64,
    /// Slope cutoff χ. The Gaussian cutoff with ν = α/F reproduces the
    /// closed boundary form exactly.
    pub chi: CutoffChi,
    /// Relative tolerance of the adaptive quadrature.
    pub rel_tol: f64,
    /// Refinement-doubling budget before giving up.
    pub max_levels: u32,
    /// Geodesic tracing step for interior base points.
    pub t_step: f64,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig {
            f_const: 1.0,
            chi: CutoffChi::Gaussian { nu: 1.0 },
            rel_tol: 1e-5,
            max_levels: 12,
            t_step: 2e-3,
        }
    }
}

impl SymbolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_const > 0.0) || !self.f_const.is_finite() {
            return Err(Error::argument(
                "symbol quadrature needs a positive conjugation strength F",
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 0.1) {
            return Err(Error::argument("relative tolerance must lie in (0, 0.1]"));
        }
        if self.max_levels == 0 {
            return Err(Error::argument("at least one refinement level is needed"));
        }
        if !(self.t_step > 0.0) {
            return Err(Error::argument("tracing step must be positive"));
        }
        Ok(())
    }
}

/// Initial panel count resolving a total phase span (radians) at a few
/// panels per radian, clamped to a sane window.
fn panels_for_span(span: f64) -> usize {
    ((span / 4.0).ceil() as usize).clamp(32, 8192)
}

/// Incremental trapezoid refinement with doubling. Converges when the value
/// moves by less than `rel_tol · max(|value|, scale_floor)` on two
/// consecutive refinements (one agreement can be an aliasing accident on
/// oscillatory integrands).
fn adaptive_trapezoid<F>(
    what: &str,
    lo: f64,
    hi: f64,
    n0: usize,
    rel_tol: f64,
    scale_floor: f64,
    max_levels: u32,
    mut f: F,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if !(hi > lo) {
        return Ok(Complex64::ZERO);
    }
    let width = hi - lo;
    let mut n = n0.max(2);
    let h0 = width / n as f64;
    let mut acc = 0.5 * (f(lo)? + f(hi)?);
    for k in 1..n {
        acc += f(lo + k as f64 * h0)?;
    }
    let mut value = acc * h0;
    let mut streak = 0u32;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_levels {
        let h = width / n as f64;
        let mut mid = Complex64::ZERO;
        for k in 0..n {
            mid += f(lo + (k as f64 + 0.5) * h)?;
        }
        let refined = 0.5 * value + mid * (0.5 * h);
        last_change = (refined - value).norm();
        value = refined;
        n *= 2;
        if last_change <= rel_tol * value.norm().max(scale_floor) {
            streak += 1;
            if streak >= 2 {
                return Ok(value);
            }
        } else {
            streak = 0;
        }
    }
    Err(Error::Accuracy {
        what: format!(
            "{what}: {n}-panel trapezoid still moving; best estimate {:e} + {:e}i",
            value.re, value.im
        ),
        best: value.norm(),
        change: last_change,
    })
}

fn check_zeta(xi: f64, eta: f64) -> Result<()> {
    if !xi.is_finite() || !eta.is_finite() {
        return Err(Error::argument("non-finite cotangent point"));
    }
    Ok(())
}

/// Magnitude of the symbol along the cone axis, used as the absolute floor
/// of relative convergence tests (directions with strong exponential
/// suppression stop refining once they are small on this scale).
fn symbol_scale(xi: f64, f_const: f64, rho: f64) -> f64 {
    4.0 * std::f64::consts::PI / (f_const * f_const + xi * xi).sqrt() * rho
}

/// t̂-window outside which the damped integrand is below e⁻³⁴ relative to
/// its maximum for the slope λ̂.
fn t_hat_window(lambda_hat: f64, f_const: f64, al: f64) -> f64 {
    lambda_hat.abs() / (2.0 * al)
        + ((34.0 + f_const * lambda_hat * lambda_hat / (4.0 * al)) / (f_const * al)).sqrt()
}

/// Boundary symbol by direct quadrature of the (t̂, λ̂) oscillatory
/// representation with exact parabolic rays:
///
///   Σ_ω ϱ_ω ∫ χ(λ̂) ∫ exp(−F(λ̂t̂+αt̂²)) e^{i(ξ(λ̂t̂+αt̂²) + ηωt̂)} dt̂ dλ̂.
///
/// The cutoff is passed as a closure over its truncated support so that
/// truncation studies can widen the window without touching the cutoff
/// family.
#[allow(clippy::too_many_arguments)]
pub fn boundary_symbol_quadrature(
    chi: &dyn Fn(f64) -> f64,
    chi_support: f64,
    f_const: f64,
    al: f64,
    rho_plus: f64,
    rho_minus: f64,
    xi: f64,
    eta: f64,
    rel_tol: f64,
    max_levels: u32,
) -> Result<Complex64> {
    check_zeta(xi, eta)?;
    if !(chi_support > 0.0) || !chi_support.is_finite() {
        return Err(Error::argument("cutoff support must be positive"));
    }
    if !(f_const > 0.0) {
        return Err(Error::argument(
            "the boundary symbol integral needs F > 0 for absolute convergence",
        ));
    }
    if !al.is_finite() || al <= 0.0 {
        return Err(Error::Convexity(format!(
            "curvature coefficient α = {al} is not positive"
        )));
    }
    if !(rho_plus > 0.0 && rho_minus > 0.0) {
        return Err(Error::argument("diagonal weights must be positive"));
    }
    let s = chi_support;
    let scale = symbol_scale(xi, f_const, rho_plus.max(rho_minus));
    let outer_span = (xi.abs() * s * s / (4.0 * al) + eta.abs() * s / (2.0 * al)).max(1.0);
    let mut total = Complex64::ZERO;
    for (omega, rho) in [(1.0, rho_plus), (-1.0, rho_minus)] {
        let branch = adaptive_trapezoid(
            "boundary symbol, slope integral",
            -s,
            s,
            panels_for_span(outer_span),
            rel_tol,
            scale,
            max_levels,
            |lh| {
                let weight = chi(lh) * rho;
                if weight == 0.0 {
                    return Ok(Complex64::ZERO);
                }
                let th = t_hat_window(lh, f_const, al);
                let env = (f_const * lh * lh / (4.0 * al)).exp();
                let span = xi.abs() * (lh.abs() * th + al * th * th) + eta.abs() * th;
                let inner = adaptive_trapezoid(
                    "boundary symbol, ray integral",
                    -th,
                    th,
                    panels_for_span(span),
                    rel_tol / 10.0,
                    env,
                    max_levels,
                    |t| {
                        let u = lh * t + al * t * t;
                        Ok((-f_const * u).exp() * Complex64::cis(xi * u + eta * omega * t))
                    },
                )?;
                Ok(inner * weight)
            },
        )?;
        total += branch;
    }
    Ok(total)
}

/// Linear interpolation along a traced geodesic, by the ray parameter.
struct SampledRay {
    ts: Vec<f64>,
    zs: Vec<Vec2>,
}

impl SampledRay {
    fn new(samples: &[crate::geometry::RaySample]) -> Self {
        SampledRay {
            ts: samples.iter().map(|s| s.t).collect(),
            zs: samples.iter().map(|s| s.z).collect(),
        }
    }

    fn z_at(&self, t: f64) -> Vec2 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.zs[0];
        }
        if t >= self.ts[n - 1] {
            return self.zs[n - 1];
        }
        let k = self.ts.partition_point(|&s| s <= t).min(n - 1);
        let (t0, t1) = (self.ts[k - 1], self.ts[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.zs[k - 1] * (1.0 - w) + self.zs[k] * w
    }
}

/// Symbol of the conjugated normal operator at base point (x, y) and
/// cotangent point ζ = (ξ, η), by quadrature of the oscillatory
/// representation.
///
/// At x = 0 the rays are the exact boundary parabolas. At x > 0 each slope
/// node traces the geodesic through (x, y, xλ̂, ω) and integrates the traced
/// scattering increments X̂ = (x′−x)/x², Ŷ = (y′−y)/x under the damping
/// exp(−F X̂/(1+xX̂)); the cutoff support must satisfy x·S²/(4α) ≤ 0.45 so
/// that no admitted ray approaches the artificial boundary, where the
/// conjugated integrand is unbounded.
#[allow(clippy::too_many_arguments)]
pub fn numeric_symbol(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    cfg: &SymbolConfig,
    x: f64,
    y: f64,
    xi: f64,
    eta: f64,
) -> Result<Complex64> {
    cfg.validate()?;
    check_zeta(xi, eta)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("negative depth {x}")));
    }
    let al = alpha(metric, &region.fol, frame, x, y, 0.0, 1.0)?;
    if al <= 0.0 {
        return Err(Error::Convexity(format!(
            "curvature coefficient α = {al} at depth {x}: the foliation is not convex here"
        )));
    }
    let z0 = frame.from_adapted(x, y);
    let (_, leaf_dir) = frame.jacobian(x, y);
    let rho_plus = eval_weight(w, z0, z0, Some(leaf_dir))?;
    let rho_minus = eval_weight(w, z0, z0, Some(-leaf_dir))?;

    if x == 0.0 {
        let chi = cfg.chi.clone();
        return boundary_symbol_quadrature(
            &|s| chi.eval(s),
            cfg.chi.support_radius(),
            cfg.f_const,
            al,
            rho_plus,
            rho_minus,
            xi,
            eta,
            cfg.rel_tol,
            cfg.max_levels,
        );
    }

    let s = cfg.chi.support_radius();
    let dive = x * s * s / (4.0 * al);
    if dive > 0.45 {
        return Err(Error::argument(format!(
            "slope support {s:.3} dives too deep at depth {x}: x·S²/(4α) = {dive:.3} > 0.45; \
             shrink the cutoff support or evaluate closer to the boundary"
        )));
    }
    let geo = GeodesicConfig {
        step: cfg.t_step,
        t_cap: None,
        bisect_tol: 1e-10,
    };
    let scale = symbol_scale(xi, cfg.f_const, rho_plus.max(rho_minus));
    let outer_span = (xi.abs() * s * s / (4.0 * al) + eta.abs() * s / (2.0 * al)).max(1.0);
    let mut total = Complex64::ZERO;
    for (omega, rho_ff) in [(1.0, rho_plus), (-1.0, rho_minus)] {
        let branch = adaptive_trapezoid(
            "interior symbol, slope integral",
            -s,
            s,
            panels_for_span(outer_span),
            cfg.rel_tol,
            scale,
            cfg.max_levels,
            |lh| {
                let weight = cfg.chi.eval(lh);
                if weight == 0.0 {
                    return Ok(Complex64::ZERO);
                }
                let (z_launch, v_launch) = frame.launch(x, y, x * lh, omega);
                let seg = trace_segment(metric, region, z_launch, v_launch, &geo)?;
                let ray = SampledRay::new(&seg.samples);
                // Pre-pass: increment ranges for the phase-resolution
                // estimate and the damping envelope for the tolerance floor.
                let mut x_hat = (f64::INFINITY, f64::NEG_INFINITY);
                let mut y_hat = (f64::INFINITY, f64::NEG_INFINITY);
                let mut env: f64 = 0.0;
                for sm in &seg.samples {
                    let depth = region.fol.x(sm.z);
                    let bx = (depth - x) / (x * x);
                    let one = 1.0 + x * bx;
                    if one <= 1e-9 {
                        return Err(Error::domain(format!(
                            "ray (x = {x}, λ̂ = {lh:.3}, ω = {omega}) reached the artificial \
                             boundary where the conjugated integrand is unbounded"
                        )));
                    }
                    let by = (frame.to_adapted(sm.z).1 - y) / x;
                    x_hat = (x_hat.0.min(bx), x_hat.1.max(bx));
                    y_hat = (y_hat.0.min(by), y_hat.1.max(by));
                    env = env.max((-cfg.f_const * bx / one).exp());
                }
                let span =
                    xi.abs() * (x_hat.1 - x_hat.0) + eta.abs() * (y_hat.1 - y_hat.0);
                let (t_lo, t_hi) = (seg.first().t / x, seg.last().t / x);
                let inner = adaptive_trapezoid(
                    "interior symbol, ray integral",
                    t_lo,
                    t_hi,
                    panels_for_span(span),
                    cfg.rel_tol / 10.0,
                    env.max(1e-300),
                    cfg.max_levels,
                    |t_hat| {
                        let z = ray.z_at(x * t_hat);
                        let depth = region.fol.x(z);
                        let bx = (depth - x) / (x * x);
                        let one = 1.0 + x * bx;
                        if one <= 1e-9 {
                            return Err(Error::domain(
                                "ray interpolation reached the artificial boundary",
                            ));
                        }
                        let by = (frame.to_adapted(z).1 - y) / x;
                        let rho = if (z - z0).norm() < COINCIDENCE_RADIUS {
                            rho_ff
                        } else {
                            eval_weight(w, z0, z, None)?
                        };
                        let damp = (-cfg.f_const * bx / one).exp();
                        Ok(rho * damp * Complex64::cis(xi * bx + eta * by))
                    },
                )?;
                Ok(inner * weight)
            },
        )?;
        total += branch;
    }
    Ok(total)
}

/// Boundary symbol by Fourier transform of the scattering kernel over the
/// increment plane, using the substitution X = αY² + sY (dX = |Y| ds):
///
///   ∫∫ K(0, y, X, Y) e^{i(ξX + ηY)} dX dY.
///
/// The kernel values come from [`kernel_flat`], so this path shares no
/// quadrature structure with [`boundary_symbol_quadrature`]; the two must
/// nevertheless agree, which pins the kernel normalization.
pub fn boundary_symbol_from_kernel(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    cfg: &SymbolConfig,
    y: f64,
    xi: f64,
    eta: f64,
) -> Result<Complex64> {
    cfg.validate()?;
    check_zeta(xi, eta)?;
    let al = alpha(metric, &region.fol, frame, 0.0, y, 0.0, 1.0)?;
    if al <= 0.0 {
        return Err(Error::Convexity(format!(
            "curvature coefficient α = {al} is not positive"
        )));
    }
    let z0 = frame.from_adapted(0.0, y);
    let (_, leaf_dir) = frame.jacobian(0.0, y);
    let rho_ff = eval_weight(w, z0, z0, Some(leaf_dir))?;
    let ncfg = NormalOpConfig {
        f_const: cfg.f_const,
        chi: cfg.chi.clone(),
        ..NormalOpConfig::default()
    };
    let s = cfg.chi.support_radius();
    let f_const = cfg.f_const;
    // |Y| beyond which exp(−F(αY² − S|Y|)) < e⁻³⁶.
    let y_max = (s + (s * s + 4.0 * al * 36.0 / f_const).sqrt()) / (2.0 * al);
    let scale = symbol_scale(xi, f_const, rho_ff);
    let outer_span = (xi.abs() * al * y_max * y_max + eta.abs() * y_max).max(1.0);
    adaptive_trapezoid(
        "kernel-transform symbol, transverse integral",
        -y_max,
        y_max,
        panels_for_span(outer_span),
        cfg.rel_tol,
        scale,
        cfg.max_levels,
        |big_y| {
            if big_y == 0.0 {
                // lim_{Y→0} ∫ K e^{iξX} |Y| ds = ϱ_ff ∫ (χ(s)+χ(−s)) ds.
                return Ok(Complex64::new(2.0 * cfg.chi.integral() * rho_ff, 0.0));
            }
            let span = xi.abs() * (al * big_y * big_y + 2.0 * s * big_y.abs());
            adaptive_trapezoid(
                "kernel-transform symbol, slope integral",
                -s,
                s,
                panels_for_span(span),
                cfg.rel_tol / 10.0,
                (f_const * s * s / (4.0 * al)).exp(),
                cfg.max_levels,
                |sl| {
                    let big_x = al * big_y * big_y + sl * big_y;
                    let k = kernel_flat(metric, region, frame, w, &ncfg, 0.0, y, big_x, big_y)?;
                    Ok(k.value * big_y.abs() * Complex64::cis(xi * big_x + eta * big_y))
                },
            )
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FoliationSpec, Rho};
    use crate::vec2::Rect;
    use approx::assert_relative_eq;

    /// Conformal strip: ρ = z.x, depth x = c − z.x, leaves are vertical
    /// lines, α = −κ/2 at the artificial boundary.
    fn strip(c: f64, kappa: f64, y_half: f64) -> (ChartMetric, Region, Frame) {
        let fol = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.0,
            c,
        )
        .unwrap();
        let metric = ChartMetric::ConformalExp { kappa };
        let chart = Rect::new(-0.2, c + 0.2, -y_half, y_half);
        let frame = Frame::for_foliation(&fol).unwrap();
        (metric, Region { fol, chart }, frame)
    }

    fn gaussian_cfg(f_const: f64, al: f64) -> SymbolConfig {
        SymbolConfig {
            f_const,
            chi: CutoffChi::gaussian(al / f_const).unwrap(),
            rel_tol: 1e-6,
            ..SymbolConfig::default()
        }
    }

    fn exact_gaussian(xi: f64, eta: f64, f_const: f64, al: f64, rho: f64) -> f64 {
        4.0 * std::f64::consts::PI / (f_const * f_const + xi * xi).sqrt()
            * (-f_const * eta * eta / (2.0 * al * (xi * xi + f_const * f_const))).exp()
            * rho
    }

    #[test]
    fn gaussian_cutoff_reproduces_the_exact_boundary_value() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let al = alpha(&metric, &region.fol, &frame, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(al, 0.15, max_relative = 1e-10);
        for &(f_const, xi, eta) in &[(1.0, 1.0, 1.0), (1.0, 4.0, 2.0), (2.0, 8.0, 0.0)] {
            let cfg = gaussian_cfg(f_const, al);
            let got = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, xi, eta)
                .unwrap();
            let want = exact_gaussian(xi, eta, f_const, al, 1.0);
            assert_relative_eq!(got.re, want, max_relative = 2e-4);
            // The imaginary part cancels by symmetry up to quadrature noise.
            assert!(
                got.im.abs() < 1e-4 * got.re,
                "imaginary residue {:e}",
                got.im
            );
        }
    }

    #[test]
    fn calibration_constant_is_four_pi_sqrt_alpha_over_f() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let al = 0.15;
        let f_const = 0.8;
        let cfg = gaussian_cfg(f_const, al);
        let pairs: Vec<(f64, f64)> = [(4.0, 0.0), (4.0, 2.0), (8.0, 3.0), (16.0, 0.0), (32.0, 8.0)]
            .iter()
            .map(|&(xi, eta)| {
                let n = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, xi, eta)
                    .unwrap()
                    .norm();
                let c = crate::symbols::boundary_symbol_closed(xi, eta, f_const, al, 1.0).unwrap();
                (n, c)
            })
            .collect();
        let cal = crate::symbols::calibrate_symbol_constant(&pairs).unwrap();
        let derived = 4.0 * std::f64::consts::PI * (al / f_const).sqrt();
        assert_relative_eq!(cal, derived, max_relative = 1e-2);
        // With the calibrated constant every pair matches to 2%.
        for (n, c) in pairs {
            assert_relative_eq!(n, cal * c, max_relative = 2e-2);
        }
    }

    #[test]
    fn widening_the_gaussian_truncation_is_invisible() {
        // The 7σ truncation of the Gaussian cutoff changes the symbol by far
        // less than 1e−6 relative to the cone-axis scale.
        let (al, f_const) = (0.4, 1.0);
        let nu = al / f_const;
        let chi = move |s: f64| (-s * s / (2.0 * nu)).exp();
        for &(xi, eta) in &[(2.0, 0.0), (6.0, 3.0), (16.0, -5.0)] {
            let narrow = boundary_symbol_quadrature(
                &chi,
                7.0 * nu.sqrt(),
                f_const,
                al,
                1.0,
                1.0,
                xi,
                eta,
                1e-7,
                14,
            )
            .unwrap();
            let wide = boundary_symbol_quadrature(
                &chi,
                10.0 * nu.sqrt(),
                f_const,
                al,
                1.0,
                1.0,
                xi,
                eta,
                1e-7,
                14,
            )
            .unwrap();
            let scale = exact_gaussian(xi, 0.0, f_const, al, 1.0);
            assert!(
                (narrow - wide).norm() <= 1e-6 * scale,
                "truncation moved ({xi}, {eta}) by {:e}",
                (narrow - wide).norm()
            );
        }
    }

    #[test]
    fn symbol_is_conjugate_symmetric() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let cfg = gaussian_cfg(1.0, 0.15);
        for &(xi, eta) in &[(3.0, 1.0), (5.0, -2.0)] {
            let a = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.1, xi, eta).unwrap();
            let b = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.1, -xi, -eta)
                .unwrap();
            assert!((a - b.conj()).norm() <= 1e-10 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn off_cone_directions_are_exponentially_suppressed() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let cfg = gaussian_cfg(1.0, 0.15);
        let on = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, 8.0, 0.5)
            .unwrap()
            .norm();
        let off = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, 0.5, 8.0)
            .unwrap()
            .norm();
        assert!(
            off < 1e-4 * on,
            "conormal direction not suppressed: on {on:e}, off {off:e}"
        );
    }

    #[test]
    fn kernel_transform_route_agrees_with_the_phase_route() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let cfg = SymbolConfig {
            f_const: 1.0,
            chi: CutoffChi::gaussian(0.15).unwrap(),
            rel_tol: 1e-5,
            ..SymbolConfig::default()
        };
        for &(xi, eta) in &[(4.0, 2.0), (8.0, -3.0)] {
            let phase = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, xi, eta)
                .unwrap();
            let kernel =
                boundary_symbol_from_kernel(&metric, &region, &frame, &w, &cfg, 0.0, xi, eta)
                    .unwrap();
            assert_relative_eq!(kernel.re, phase.re, max_relative = 2e-2);
            assert!((kernel - phase).norm() <= 2e-2 * phase.norm());
        }
    }

    #[test]
    fn interior_symbol_approaches_the_boundary_symbol() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let cfg = SymbolConfig {
            f_const: 1.0,
            chi: CutoffChi::bump(1.0).unwrap(),
            rel_tol: 1e-5,
            ..SymbolConfig::default()
        };
        let at0 = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.0, 0.0, 4.0, 1.0).unwrap();
        let near = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.04, 0.0, 4.0, 1.0)
            .unwrap();
        let far = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.12, 0.0, 4.0, 1.0)
            .unwrap();
        assert!(
            (near - at0).norm() <= 0.10 * at0.norm(),
            "x = 0.04 drifted {:e} vs {:e}",
            (near - at0).norm(),
            at0.norm()
        );
        assert!(
            (far - at0).norm() <= 0.30 * at0.norm(),
            "x = 0.12 drifted {:e} vs {:e}",
            (far - at0).norm(),
            at0.norm()
        );
    }

    #[test]
    fn deep_evaluation_with_wide_support_is_rejected() {
        let (metric, region, frame) = strip(0.5, -0.3, 3.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let cfg = SymbolConfig {
            f_const: 1.0,
            chi: CutoffChi::gaussian(0.15).unwrap(), // support ≈ 2.71
            ..SymbolConfig::default()
        };
        // x S²/(4α) = 0.3·7.35/0.6 ≈ 3.7 — far past the diving limit.
        let err = numeric_symbol(&metric, &region, &frame, &w, &cfg, 0.3, 0.0, 4.0, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");
    }

    #[test]
    fn exhausted_refinement_reports_the_best_estimate() {
        let err = boundary_symbol_quadrature(
            &|s: f64| (-s * s).exp(),
            2.0,
            1.0,
            0.5,
            1.0,
            1.0,
            30.0,
            2.0,
            1e-14,
            2,
        )
        .unwrap_err();
        match err {
            Error::Accuracy { best, change, .. } => {
                assert!(best.is_finite() && best > 0.0);
                assert!(change.is_finite());
            }
            other => panic!("expected an accuracy error, got {other}"),
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let chi = |s: f64| (-s * s).exp();
        // F = 0: no absolute convergence at the boundary.
        assert!(matches!(
            boundary_symbol_quadrature(&chi, 2.0, 0.0, 0.5, 1.0, 1.0, 1.0, 0.0, 1e-5, 12)
                .unwrap_err(),
            Error::Argument(_)
        ));
        // Concave leaf: α < 0.
        assert!(matches!(
            boundary_symbol_quadrature(&chi, 2.0, 1.0, -0.5, 1.0, 1.0, 1.0, 0.0, 1e-5, 12)
                .unwrap_err(),
            Error::Convexity(_)
        ));
    }
}
