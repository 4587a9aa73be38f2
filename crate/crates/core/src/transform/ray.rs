//! The weighted ray transform and sinogram assembly.
//!
//! One ray: launch (z0, v0), trace the maximal segment through the collar in
//! both directions (symmetric extension), and integrate w(z0, γ(t)) f(γ(t))
//! with composite trapezoid along metric arc length. Geodesics keep constant
//! g-speed, so arc length is proportional to the ray parameter; the shooter's
//! parameter step is chosen to realize the requested arc-length step.
//!
//! A sinogram batches rays over a grid of adapted initial conditions
//! (x, y, λ) × ω ∈ {+1, −1}: launch point at adapted coordinates (x, y) and
//! initial velocity λ ∂x + ω ∂y pushed to the chart by the frame.

use crate::error::{Error, Result};
use crate::geometry::{
    trace_segment, ChartMetric, ExitReason, Frame, FullSegment, GeodesicConfig, Region,
};
use crate::grid::ScalarField;
use crate::par;
use crate::transform::weight::{eval_weight, WeightSpec, COINCIDENCE_RADIUS};
use crate::vec2::{Axis, Vec2};

/// Result of integrating one ray.
#[derive(Clone, Copy, Debug)]
pub struct RayIntegral {
    pub value: f64,
    /// True when a branch ended at the time cap or the chart edge, so the
    /// value covers only part of the intended segment.
    pub dropped: bool,
    pub exit_backward: ExitReason,
    pub exit_forward: ExitReason,
    /// Metric arc length of the integrated segment.
    pub arc_length: f64,
}

/// ∫ w(γ(0), γ(t)) f(γ(t)) ds over the maximal segment through (z0, v0),
/// with arc-length step `h`.
pub fn xray(
    metric: &ChartMetric,
    region: &Region,
    w: &WeightSpec,
    f: &dyn ScalarField,
    z0: Vec2,
    v0: Vec2,
    h: f64,
) -> Result<RayIntegral> {
    if !(h > 0.0) {
        return Err(Error::argument("quadrature step must be positive"));
    }
    let speed = metric.tensor(z0)?.speed(v0);
    if speed == 0.0 {
        return Err(Error::argument("ray needs a nonzero initial velocity"));
    }
    let cfg = GeodesicConfig {
        step: h / speed,
        ..GeodesicConfig::default()
    };
    let seg = trace_segment(metric, region, z0, v0, &cfg)?;
    Ok(integrate_segment(w, f, &seg, speed))
}

/// Trapezoid quadrature of w(base, ·) f over an already-traced segment.
pub fn integrate_segment(
    w: &WeightSpec,
    f: &dyn ScalarField,
    seg: &FullSegment,
    speed: f64,
) -> RayIntegral {
    let base = seg.samples[seg.base_index];
    let integrand = |k: usize| -> f64 {
        let s = seg.samples[k];
        let wv = if (s.z - base.z).norm() < COINCIDENCE_RADIUS {
            eval_weight(w, base.z, s.z, Some(base.v))
        } else {
            eval_weight(w, base.z, s.z, None)
        };
        // Weight evaluation cannot fail for the shipped constructions on
        // points of the segment itself; an error would indicate a broken
        // weight and is surfaced as NaN for the assembly check to catch.
        wv.map(|val| val * f.eval(s.z)).unwrap_or(f64::NAN)
    };
    let mut acc = 0.0;
    let mut prev = integrand(0);
    for k in 1..seg.samples.len() {
        let cur = integrand(k);
        let dt = seg.samples[k].t - seg.samples[k - 1].t;
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    RayIntegral {
        value: acc * speed,
        dropped: seg.dropped(),
        exit_backward: seg.exit_backward,
        exit_forward: seg.exit_forward,
        arc_length: seg.t_span() * speed,
    }
}

/// Grid of adapted initial conditions for a sinogram.
#[derive(Clone, Copy, Debug)]
pub struct SinogramGrid {
    /// Depth coordinate of launch points (distance above the deep edge).
    pub x: Axis,
    /// Leaf coordinate of launch points.
    pub y: Axis,
    /// Transverse slope of the initial direction λ ∂x + ω ∂y.
    pub lambda: Axis,
}

impl SinogramGrid {
    pub fn rays(&self) -> usize {
        2 * self.x.n * self.y.n * self.lambda.n
    }
}

pub const OMEGAS: [f64; 2] = [1.0, -1.0];

/// Dense array of ray-transform values over a [`SinogramGrid`].
#[derive(Clone, Debug)]
pub struct Sinogram {
    pub grid: SinogramGrid,
    /// Layout: `((iw * nx + ix) * ny + iy) * nl + il` with ω = OMEGAS[iw].
    pub values: Vec<f64>,
    /// Arc-length quadrature step used for every ray.
    pub quad_step: f64,
    /// Identifier of the weight the values were computed with.
    pub weight_name: String,
    /// Rays whose segment was cut by the time cap or chart edge.
    pub dropped_rays: usize,
}

impl Sinogram {
    pub fn index(&self, iw: usize, ix: usize, iy: usize, il: usize) -> usize {
        debug_assert!(iw < 2);
        ((iw * self.grid.x.n + ix) * self.grid.y.n + iy) * self.grid.lambda.n + il
    }

    pub fn at(&self, iw: usize, ix: usize, iy: usize, il: usize) -> f64 {
        self.values[self.index(iw, ix, iy, il)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L² norm with trapezoid weights over (x, y, λ) and a unit
    /// count over ω.
    pub fn l2_norm(&self) -> f64 {
        let g = &self.grid;
        let wt = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for iw in 0..2 {
            for ix in 0..g.x.n {
                for iy in 0..g.y.n {
                    for il in 0..g.lambda.n {
                        let v = self.at(iw, ix, iy, il);
                        acc += wt(ix, g.x.n) * wt(iy, g.y.n) * wt(il, g.lambda.n) * v * v;
                    }
                }
            }
        }
        (acc * g.x.step() * g.y.step() * g.lambda.step()).sqrt()
    }
}

pub(crate) fn launch_of(grid: &SinogramGrid, frame: &Frame, flat: usize) -> (Vec2, Vec2, usize) {
    let nl = grid.lambda.n;
    let ny = grid.y.n;
    let il = flat % nl;
    let iy = (flat / nl) % ny;
    let ix = (flat / (nl * ny)) % grid.x.n;
    let iw = flat / (nl * ny * grid.x.n);
    let (x, y, l) = (grid.x.node(ix), grid.y.node(iy), grid.lambda.node(il));
    let (z0, v0) = frame.launch(x, y, l, OMEGAS[iw]);
    (z0, v0, iw)
}

/// Batched weighted transform over the grid; parallel over rays.
pub fn sinogram(
    metric: &ChartMetric,
    region: &Region,
    frame: &Frame,
    w: &WeightSpec,
    f: &dyn ScalarField,
    grid: &SinogramGrid,
    h: f64,
) -> Result<Sinogram> {
    if grid.x.n == 0 || grid.y.n == 0 || grid.lambda.n == 0 {
        return Err(Error::argument("sinogram grid must be non-empty"));
    }
    let results = par::try_map_indexed(grid.rays(), |flat| {
        let (z0, v0, _) = launch_of(grid, frame, flat);
        xray(metric, region, w, f, z0, v0, h)
    })?;
    let mut values = Vec::with_capacity(results.len());
    let mut dropped = 0usize;
    for (flat, r) in results.iter().enumerate() {
        if !r.value.is_finite() {
            let (z0, v0, _) = launch_of(grid, frame, flat);
            return Err(Error::validation(format!(
                "non-finite transform value for ray launched at {z0:?} velocity {v0:?}"
            )));
        }
        if r.dropped {
            dropped += 1;
        }
        values.push(r.value);
    }
    Ok(Sinogram {
        grid: *grid,
        values,
        quad_step: h,
        weight_name: w.name.clone(),
        dropped_rays: dropped,
    })
}

/// Pre-traced segments for a grid of rays, for workloads that integrate many
/// fields over the same geometry (the geometry is f-independent).
pub struct RayTable {
    pub grid: SinogramGrid,
    segments: Vec<(FullSegment, f64)>, // (segment, launch g-speed)
    pub quad_step: f64,
}

impl RayTable {
    pub fn build(
        metric: &ChartMetric,
        region: &Region,
        frame: &Frame,
        grid: &SinogramGrid,
        h: f64,
    ) -> Result<Self> {
        if grid.x.n == 0 || grid.y.n == 0 || grid.lambda.n == 0 {
            return Err(Error::argument("sinogram grid must be non-empty"));
        }
        let segments = par::try_map_indexed(grid.rays(), |flat| -> Result<(FullSegment, f64)> {
            let (z0, v0, _) = launch_of(grid, frame, flat);
            let speed = metric.tensor(z0)?.speed(v0);
            let cfg = GeodesicConfig {
                step: h / speed,
                ..GeodesicConfig::default()
            };
            Ok((trace_segment(metric, region, z0, v0, &cfg)?, speed))
        })?;
        Ok(RayTable {
            grid: *grid,
            segments,
            quad_step: h,
        })
    }

    pub fn integrate(&self, w: &WeightSpec, f: &dyn ScalarField) -> Result<Sinogram> {
        let values: Vec<RayIntegral> = par::map_indexed(self.segments.len(), |k| {
            let (seg, speed) = &self.segments[k];
            integrate_segment(w, f, seg, *speed)
        });
        let mut out = Vec::with_capacity(values.len());
        let mut dropped = 0;
        for r in &values {
            if !r.value.is_finite() {
                return Err(Error::validation("non-finite transform value in ray table"));
            }
            if r.dropped {
                dropped += 1;
            }
            out.push(r.value);
        }
        Ok(Sinogram {
            grid: self.grid,
            values: out,
            quad_step: self.quad_step,
            weight_name: w.name.clone(),
            dropped_rays: dropped,
        })
    }

    pub fn segment(&self, flat: usize) -> &FullSegment {
        &self.segments[flat].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FoliationSpec, Rho};
    use crate::transform::profile::{lift_adapted, AdaptedProfile};
    use crate::vec2::Rect;

    fn disk_region(radius: f64, c: f64) -> Region {
        let fol = FoliationSpec::new(
            Rho::Disk {
                center: Vec2::ZERO,
                radius,
            },
            Vec2::new(radius, 0.0),
            0.0,
            c,
        )
        .unwrap();
        let m = radius + 0.1;
        Region::new(fol, Rect::new(-m, m, -m, m))
    }

    fn strip_region(c: f64) -> Region {
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
        Region::new(fol, Rect::new(-0.5, c + 0.5, -3.0, 3.0))
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let region = strip_region(0.5);
        let w = WeightSpec::constant(1.0).unwrap();
        let r = xray(
            &ChartMetric::Euclidean,
            &region,
            &w,
            &|_: Vec2| 0.0,
            Vec2::new(0.25, 0.0),
            Vec2::new(0.3, 1.0),
            1e-3,
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn unit_disk_chord_length() {
        // Indicator of the unit disk, line at distance 0.6 from the center:
        // chord length 2√(1 − 0.36) = 1.6. Launch offset h/4 from the chord
        // midpoint balances the two jump-cell quadrature errors.
        let region = disk_region(1.5, 1.0);
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| if z.norm2() <= 1.0 { 1.0 } else { 0.0 };
        let h = 1e-4;
        let r = xray(
            &ChartMetric::Euclidean,
            &region,
            &w,
            &f,
            Vec2::new(h / 4.0, 0.6),
            Vec2::new(1.0, 0.0),
            h,
        )
        .unwrap();
        assert!(
            (r.value - 1.6).abs() <= 1e-4,
            "chord error {:e}",
            r.value - 1.6
        );
        assert!(!r.dropped);
    }

    #[test]
    fn slab_crossing_length() {
        // Adapted u ≡ 1 on a strip of x̃-thickness 0.3, crossed at angle θ to
        // the leaves: integral is 0.3 / sin θ.
        let region = strip_region(0.3);
        let w = WeightSpec::constant(1.0).unwrap();
        let f = lift_adapted(
            &AdaptedProfile::constant(0.3, 1.0).unwrap(),
            &region.fol,
        )
        .unwrap();
        for &theta in &[std::f64::consts::FRAC_PI_2, 1.0, 0.5] {
            let v = Vec2::new(theta.sin(), theta.cos());
            let r = xray(
                &ChartMetric::Euclidean,
                &region,
                &w,
                &f,
                Vec2::new(0.15, 0.0),
                v,
                1e-4,
            )
            .unwrap();
            let expect = 0.3 / theta.sin();
            assert!(
                (r.value - expect).abs() <= 1e-4,
                "theta={theta}: got {} want {expect}",
                r.value
            );
        }
    }

    #[test]
    fn quadrature_order_at_least_1_9() {
        // Smooth bump integrated at h, h/2, h/4: observed order ≥ 1.9.
        let region = strip_region(0.5);
        let m = ChartMetric::ConformalExp { kappa: 0.3 };
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| (-8.0 * ((z.x - 0.25) * (z.x - 0.25) + z.y * z.y)).exp();
        let z0 = Vec2::new(0.25, -0.2);
        let v0 = Vec2::new(0.2, 1.0);
        let eval = |h: f64| xray(&m, &region, &w, &f, z0, v0, h).unwrap().value;
        let (i1, i2, i4) = (eval(4e-3), eval(2e-3), eval(1e-3));
        let order = ((i1 - i2).abs() / (i2 - i4).abs()).log2();
        assert!(order >= 1.9, "observed quadrature order {order}");
    }

    #[test]
    fn reversed_ray_gives_the_same_value() {
        let region = strip_region(0.5);
        let m = ChartMetric::ConformalExp { kappa: -0.3 };
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| 1.0 + 0.5 * (2.0 * z.x).sin() * (1.5 * z.y).cos();
        let z0 = Vec2::new(0.3, 0.4);
        let v0 = Vec2::new(0.15, 1.0);
        let a = xray(&m, &region, &w, &f, z0, v0, 1e-3).unwrap().value;
        let b = xray(&m, &region, &w, &f, z0, -v0, 1e-3).unwrap().value;
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "reversal mismatch {:e}",
            a - b
        );
    }

    #[test]
    fn sinogram_is_linear_and_zero_on_zero() {
        let region = strip_region(0.5);
        let m = ChartMetric::Euclidean;
        let frame = Frame::for_foliation(&region.fol).unwrap();
        let w = WeightSpec::constant(1.0).unwrap();
        let grid = SinogramGrid {
            x: Axis::new(0.1, 0.4, 3),
            y: Axis::new(-0.5, 0.5, 3),
            lambda: Axis::new(-0.2, 0.2, 3),
        };
        let f1 = |z: Vec2| (z.x * 2.0).cos() + 0.3 * z.y;
        let f2 = |z: Vec2| 0.7 * (-(z.x - 0.2) * (z.x - 0.2) - z.y * z.y).exp();
        let fsum = |z: Vec2| f1(z) + f2(z);
        let s0 = sinogram(&m, &region, &frame, &w, &|_: Vec2| 0.0, &grid, 1e-3).unwrap();
        assert!(s0.values.iter().all(|&v| v == 0.0));
        let s1 = sinogram(&m, &region, &frame, &w, &f1, &grid, 1e-3).unwrap();
        let s2 = sinogram(&m, &region, &frame, &w, &f2, &grid, 1e-3).unwrap();
        let ss = sinogram(&m, &region, &frame, &w, &fsum, &grid, 1e-3).unwrap();
        for k in 0..ss.values.len() {
            assert!(
                (ss.values[k] - s1.values[k] - s2.values[k]).abs() <= 1e-12,
                "linearity violated at ray {k}"
            );
        }
    }

    #[test]
    fn lambda_refinement_preserves_values() {
        // Values are per-ray; refining the λ axis keeps shared nodes identical.
        let region = strip_region(0.5);
        let m = ChartMetric::Euclidean;
        let frame = Frame::for_foliation(&region.fol).unwrap();
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| (1.0 + z.x) * (0.7 * z.y).cos();
        let coarse = SinogramGrid {
            x: Axis::new(0.1, 0.4, 2),
            y: Axis::new(-0.3, 0.3, 2),
            lambda: Axis::new(-0.2, 0.2, 3),
        };
        let fine = SinogramGrid {
            lambda: coarse.lambda.refined(),
            ..coarse
        };
        let sc = sinogram(&m, &region, &frame, &w, &f, &coarse, 1e-3).unwrap();
        let sf = sinogram(&m, &region, &frame, &w, &f, &fine, 1e-3).unwrap();
        for iw in 0..2 {
            for ix in 0..2 {
                for iy in 0..2 {
                    for il in 0..coarse.lambda.n {
                        assert_eq!(
                            sc.at(iw, ix, iy, il),
                            sf.at(iw, ix, iy, 2 * il),
                            "refined grid changed a shared ray"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ray_table_matches_direct_sinogram() {
        let region = strip_region(0.5);
        let m = ChartMetric::ConformalExp { kappa: 0.2 };
        let frame = Frame::for_foliation(&region.fol).unwrap();
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| 1.0 + z.x * z.y;
        let grid = SinogramGrid {
            x: Axis::new(0.1, 0.4, 2),
            y: Axis::new(-0.3, 0.3, 3),
            lambda: Axis::new(-0.1, 0.1, 2),
        };
        let direct = sinogram(&m, &region, &frame, &w, &f, &grid, 1e-3).unwrap();
        let table = RayTable::build(&m, &region, &frame, &grid, 1e-3).unwrap();
        let via_table = table.integrate(&w, &f).unwrap();
        for k in 0..direct.values.len() {
            assert_eq!(direct.values[k], via_table.values[k]);
        }
    }
}
