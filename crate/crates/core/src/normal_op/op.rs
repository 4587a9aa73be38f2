//! The conjugated averaged operator A_F.
//!
//! Building blocks:
//!
//! * [`backproject_L`] — the slope average L v(z) = x⁻² Σ_ω ∫ χ(λ/x) v(x,y,λ,ω) dλ
//!   over the rays launched at z, the outer half of the normal operator;
//! * [`conjugated_xray`] — the weighted ray transform of e^{F/depth}·f along
//!   one ray, the inner half;
//! * [`apply_af`] — the full operator in one fused quadrature, with the
//!   damping factor kept in the division-free form exp(−F·X/(1+xX)) that
//!   stays finite as the evaluation depth shrinks;
//! * [`apply_af_composed`] — the same operator assembled literally as
//!   e^{−F/x}·L(I(e^{F/x} f)), used to cross-check the fused path.
//!
//! Depth-x rays carry slopes |λ| ≤ C·x. A ray of normalized slope s = λ/x
//! dives below its launch leaf by ≈ s²x²/(4α) before convexity turns it
//! around; once s² > 4α/x the ray crosses the deep boundary x = 0, where the
//! conjugation weight e^{F/depth} diverges and the operator stops being
//! defined on unweighted fields. [`validate_slope_support`] enforces the
//! resulting support bound before any quadrature runs.

use crate::error::{Error, Result};
use crate::geometry::{alpha, trace_segment, ChartMetric, Frame, GeodesicConfig, Region};
use crate::grid::{Grid2, ScalarField};
use crate::normal_op::chi::CutoffChi;
use crate::par;
use crate::transform::{eval_weight, WeightSpec, COINCIDENCE_RADIUS, OMEGAS};
use crate::vec2::{Axis, Vec2};

/// A scalar functional of the ray through adapted launch data (x, y, λ, ω) —
/// typically a ray-transform value.
pub trait RayFunctional: Sync {
    fn eval(&self, x: f64, y: f64, lambda: f64, omega: f64) -> Result<f64>;
}

impl<F> RayFunctional for F
where
    F: Fn(f64, f64, f64, f64) -> Result<f64> + Sync,
{
    fn eval(&self, x: f64, y: f64, lambda: f64, omega: f64) -> Result<f64> {
        self(x, y, lambda, omega)
    }
}

#[derive(Clone, Debug)]
pub struct NormalOpConfig {
    /// Conjugation strength F ≥ 0 (0 switches the exponential weights off).
    pub f_const: f64,
    /// Quadrature step in the normalized slope s = λ/x.
    pub lambda_step: f64,
    /// Ray-parameter step shared by the tracer and the inner quadrature.
    pub t_step: f64,
    /// Slope cutoff profile.
    pub chi: CutoffChi,
    /// Evaluation grid in adapted coordinates (depth axis first).
    pub eval_x: Axis,
    pub eval_y: Axis,
}

impl NormalOpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_const >= 0.0) {
            return Err(Error::validation("conjugation strength must be ≥ 0"));
        }
        if !(self.lambda_step > 0.0) || !(self.t_step > 0.0) {
            return Err(Error::validation("quadrature steps must be positive"));
        }
        if self.eval_x.lo <= 0.0 {
            return Err(Error::validation(
                "evaluation depths must be positive: the averaged operator has an x⁻² prefactor",
            ));
        }
        Ok(())
    }

    fn geodesic_config(&self) -> GeodesicConfig {
        GeodesicConfig {
            step: self.t_step,
            ..GeodesicConfig::default()
        }
    }

    /// Nodes and trapezoid weights of the slope quadrature (s = λ/x).
    fn slope_nodes(&self) -> Vec<(f64, f64)> {
        let r = self.chi.support_radius();
        let n = ((2.0 * r / self.lambda_step).ceil() as usize).max(2);
        let n = if n % 2 == 1 { n + 1 } else { n }; // odd node count → node at s = 0
        let h = 2.0 * r / n as f64;
        (0..=n)
            .map(|k| {
                let s = -r + h * k as f64;
                let w = if k == 0 || k == n { 0.5 * h } else { h };
                (s, w)
            })
            .collect()
    }
}

impl Default for NormalOpConfig {
    fn default() -> Self {
        NormalOpConfig {
            f_const: 1.0,
            lambda_step: 0.05,
            t_step: 2e-3,
            chi: CutoffChi::Bump { radius: 1.0 },
            eval_x: Axis::new(0.05, 0.35, 9),
            eval_y: Axis::new(-0.25, 0.25, 9),
        }
    }
}

/// Result of applying the averaged operator on the evaluation grid.
#[derive(Clone, Debug)]
pub struct NormalField {
    /// Values on (eval_x × eval_y); entry (i, j) is the operator at depth
    /// x_i, transverse coordinate y_j.
    pub values: Grid2,
    /// Rays discarded because the tracer hit its time cap or left the chart.
    pub dropped_rays: usize,
}

/// The slope average L v(z) = x⁻² Σ_{ω=±1} ∫ χ(λ/x) v(x, y, λ, ω) dλ,
/// trapezoid over the cutoff support |λ| ≤ C·x.
pub fn backproject_l(
    v: &dyn RayFunctional,
    z: Vec2,
    frame: &Frame,
    cfg: &NormalOpConfig,
) -> Result<f64> {
    let (x, y) = frame.to_adapted(z);
    backproject_l_adapted(v, x, y, cfg)
}

/// [`backproject_l`] with the evaluation point given directly in adapted
/// coordinates.
pub fn backproject_l_adapted(
    v: &dyn RayFunctional,
    x: f64,
    y: f64,
    cfg: &NormalOpConfig,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "slope average needs positive depth, got x = {x}"
        )));
    }
    let mut acc = 0.0;
    for (s, wt) in cfg.slope_nodes() {
        let chi = cfg.chi.eval(s);
        if chi == 0.0 {
            continue;
        }
        for omega in OMEGAS {
            acc += wt * chi * v.eval(x, y, x * s, omega)?;
        }
    }
    // dλ = x ds against the x⁻² prefactor.
    Ok(acc / x)
}

/// Weighted ray transform of e^{F/depth}·f over the maximal segment through
/// the adapted launch (x, y, λ, ω), integrated in the launch parameter.
///
/// Returns `Ok(None)` when the segment is dropped (time cap or chart exit on
/// either branch).
pub fn conjugated_xray(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    f: &dyn ScalarField,
    f_const: f64,
    x: f64,
    y: f64,
    lambda: f64,
    omega: f64,
    cfg: &NormalOpConfig,
) -> Result<Option<f64>> {
    let (z0, v0) = frame.launch(x, y, lambda, omega);
    let seg = trace_segment(metric, region, z0, v0, &cfg.geodesic_config())?;
    if seg.dropped() {
        return Ok(None);
    }
    let base = seg.samples[seg.base_index];
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for sample in &seg.samples {
        let depth = region.fol.x(sample.z);
        let weight = ray_weight(w, base.z, sample.z, sample.v)?;
        let integrand = (f_const / depth.max(f64::MIN_POSITIVE)).exp()
            * weight
            * f.eval(sample.z);
        if let Some((t_prev, g_prev)) = prev {
            acc += 0.5 * (sample.t - t_prev) * (g_prev + integrand);
        }
        prev = Some((sample.t, integrand));
    }
    Ok(Some(acc))
}

/// The conjugated averaged operator, fused quadrature form:
///
/// A_F f(x, y) = x⁻¹ Σ_ω ∫ χ(s) [ ∫ e^{−F·X/(1+xX)} ϱ f(γ(t)) dt ] ds,
///
/// with X = (depth(γ(t)) − x)/x² the scattering depth increment. Rays whose
/// trace hits the time cap or the chart edge are dropped and counted.
pub fn apply_af(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    f: &dyn ScalarField,
    cfg: &NormalOpConfig,
) -> Result<NormalField> {
    cfg.validate()?;
    validate_slope_support(metric, region, frame, cfg)?;
    let nodes = cfg.slope_nodes();
    let nx = cfg.eval_x.n;
    let total = nx * cfg.eval_y.n;
    let geo = cfg.geodesic_config();

    let results: Vec<(f64, usize)> = par::try_map_indexed(total, |flat| {
        let i = flat % nx;
        let j = flat / nx;
        let x = cfg.eval_x.node(i);
        let y = cfg.eval_y.node(j);
        let mut acc = 0.0;
        let mut dropped = 0usize;
        for &(s, wt) in &nodes {
            let chi = cfg.chi.eval(s);
            if chi == 0.0 {
                continue;
            }
            for omega in OMEGAS {
                let (z0, v0) = frame.launch(x, y, x * s, omega);
                let seg = trace_segment(metric, region, z0, v0, &geo)?;
                if seg.dropped() {
                    dropped += 1;
                    continue;
                }
                let base = seg.samples[seg.base_index];
                let mut inner = 0.0;
                let mut prev: Option<(f64, f64)> = None;
                for sample in &seg.samples {
                    let depth = region.fol.x(sample.z);
                    let big_x = (depth - x) / (x * x);
                    let damp = (-cfg.f_const * big_x / (1.0 + x * big_x)).exp();
                    let weight = ray_weight(w, base.z, sample.z, sample.v)?;
                    let g = damp * weight * f.eval(sample.z);
                    if let Some((t_prev, g_prev)) = prev {
                        inner += 0.5 * (sample.t - t_prev) * (g_prev + g);
                    }
                    prev = Some((sample.t, g));
                }
                acc += wt * chi * inner;
            }
        }
        Ok::<(f64, usize), Error>((acc / x, dropped))
    })?;

    let mut values = Grid2::zeros(cfg.eval_x, cfg.eval_y);
    let mut dropped_rays = 0;
    for (flat, (val, dropped)) in results.into_iter().enumerate() {
        let i = flat % nx;
        let j = flat / nx;
        *values.at_mut(i, j) = val;
        dropped_rays += dropped;
    }
    values.validate_finite("conjugated averaged operator")?;
    Ok(NormalField {
        values,
        dropped_rays,
    })
}

/// The same operator assembled from its factors: e^{−F/x} · L(I(e^{F/x} f)),
/// with the inner transform evaluated through [`conjugated_xray`] and the
/// outer average through [`backproject_l_adapted`]. Agrees with [`apply_af`]
/// up to floating-point regrouping; exercised as a consistency oracle.
pub fn apply_af_composed(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    f: &dyn ScalarField,
    cfg: &NormalOpConfig,
) -> Result<NormalField> {
    cfg.validate()?;
    validate_slope_support(metric, region, frame, cfg)?;
    let nx = cfg.eval_x.n;
    let total = nx * cfg.eval_y.n;
    let dropped = std::sync::atomic::AtomicUsize::new(0);

    let data: Vec<f64> = par::try_map_indexed(total, |flat| {
        let i = flat % nx;
        let j = flat / nx;
        let x = cfg.eval_x.node(i);
        let y = cfg.eval_y.node(j);
        let v = |xq: f64, yq: f64, lambda: f64, omega: f64| -> Result<f64> {
            match conjugated_xray(
                metric, region, frame, w, f, cfg.f_const, xq, yq, lambda, omega, cfg,
            )? {
                Some(val) => Ok(val),
                None => {
                    dropped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    Ok(0.0)
                }
            }
        };
        let averaged = backproject_l_adapted(&v, x, y, cfg)?;
        Ok::<f64, Error>((-cfg.f_const / x).exp() * averaged)
    })?;

    let mut values = Grid2::zeros(cfg.eval_x, cfg.eval_y);
    values.data = data;
    values.validate_finite("composed averaged operator")?;
    Ok(NormalField {
        values,
        dropped_rays: dropped.into_inner(),
    })
}

/// Reject cutoff supports wide enough that some admitted ray crosses the
/// deep boundary, where the conjugation weight e^{F/depth} diverges.
///
/// A slope-s ray from depth x dives by ≈ s²x²/(4α); the crossing threshold
/// is s² = 4α/x. The check compares the cutoff support radius against the
/// worst (deepest-evaluation, smallest-α) admitted ray, with a 5% margin.
pub fn validate_slope_support(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    cfg: &NormalOpConfig,
) -> Result<()> {
    if cfg.f_const == 0.0 {
        return Ok(()); // no conjugation weight, nothing diverges
    }
    let mut alpha_min = f64::INFINITY;
    for j in 0..cfg.eval_y.n {
        let y = cfg.eval_y.node(j);
        let a = alpha(metric, &region.fol, frame, cfg.eval_x.hi, y, 0.0, 1.0)?;
        alpha_min = alpha_min.min(a);
    }
    if !(alpha_min > 0.0) {
        return Err(Error::Convexity(format!(
            "leaf curvature α = {alpha_min:.3e} at the deepest evaluation leaf; \
             the slope average needs α > 0"
        )));
    }
    let crossing = (4.0 * alpha_min / cfg.eval_x.hi).sqrt();
    let support = cfg.chi.support_radius();
    if support > 0.95 * crossing {
        return Err(Error::argument(format!(
            "cutoff support radius {support:.3} admits rays that cross the deep boundary \
             (crossing threshold √(4α/x) = {crossing:.3} at x = {:.3}); \
             shrink the cutoff or the evaluation depth",
            cfg.eval_x.hi
        )));
    }
    Ok(())
}

fn ray_weight(w: &WeightSpec, base: Vec2, z: Vec2, v: Vec2) -> Result<f64> {
    let dir = if base.dist(z) < COINCIDENCE_RADIUS {
        Some(v)
    } else {
        None
    };
    eval_weight(w, base, z, dir)
}

/// x⁻¹ − x′⁻¹ expressed through the scattering increment X = (x′−x)/x²:
/// both sides equal (x′−x)/(x·x′); the right side never divides by x′.
pub fn damping_exponent(x: f64, big_x: f64) -> f64 {
    big_x / (1.0 + x * big_x)
}
