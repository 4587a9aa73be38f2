//! Geodesic shooting with exit detection.
//!
//! Classic RK4 on the first-order system (ż, v̇) = (v, −Γ(v, v)). A ray is
//! integrated until it leaves the collar Ω_c (through the physical boundary
//! ρ = 0 or the artificial boundary x = 0), leaves the chart rectangle, or
//! hits the time cap. The crossing time is refined by bisection on a single
//! partial RK4 step, so the exit point inherits the integrator's accuracy.

use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, FoliationSpec};
use crate::vec2::{Rect, Vec2};

#[derive(Clone, Copy, Debug)]
pub struct GeodesicConfig {
    /// RK4 step in the ray parameter.
    pub step: f64,
    /// Hard cap on the ray parameter; `None` derives one from the chart.
    pub t_cap: Option<f64>,
    /// Bisection tolerance on the exit parameter.
    pub bisect_tol: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            step: 1e-3,
            t_cap: None,
            bisect_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitReason {
    /// Crossed the physical boundary ρ = 0.
    Physical,
    /// Crossed the artificial boundary x = x̃ + c = 0.
    Artificial,
    /// Left the chart rectangle (the ambient extension ran out).
    Chart,
    /// Still inside when the time cap was reached; the ray is suspect.
    TimeCap,
}

#[derive(Clone, Copy, Debug)]
pub struct RaySample {
    pub t: f64,
    pub z: Vec2,
    pub v: Vec2,
}

/// One-sided geodesic from t = 0 forward to the exit.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    /// Samples at t = 0, h, 2h, …, plus the refined exit state last.
    pub samples: Vec<RaySample>,
    pub exit: ExitReason,
}

impl GeodesicPath {
    pub fn exit_state(&self) -> RaySample {
        *self.samples.last().expect("path has at least the start")
    }
    pub fn exit_time(&self) -> f64 {
        self.exit_state().t
    }
}

/// The region rays live in: collar of the foliation intersected with the chart.
#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub fol: FoliationSpec,
    pub chart: Rect,
}

impl Region {
    pub fn new(fol: FoliationSpec, chart: Rect) -> Self {
        Region { fol, chart }
    }

    /// Positive inside Ω_c ∩ chart; the minimum decides the exit reason.
    fn clearances(&self, z: Vec2) -> (f64, f64, f64) {
        (
            self.fol.rho.value(z),
            self.fol.x(z),
            self.chart.margin(z),
        )
    }

    pub fn clearance(&self, z: Vec2) -> f64 {
        let (a, b, c) = self.clearances(z);
        a.min(b).min(c)
    }

    fn exit_reason_at(&self, z: Vec2) -> ExitReason {
        let (rho, x, margin) = self.clearances(z);
        if rho <= x && rho <= margin {
            ExitReason::Physical
        } else if x <= margin {
            ExitReason::Artificial
        } else {
            ExitReason::Chart
        }
    }
}

#[derive(Clone, Copy)]
struct State {
    z: Vec2,
    v: Vec2,
}

fn rk4_step(metric: &ChartMetric, s: State, h: f64) -> Result<State> {
    let f = |st: State| -> Result<(Vec2, Vec2)> { Ok((st.v, metric.accel(st.z, st.v)?)) };
    let (k1z, k1v) = f(s)?;
    let (k2z, k2v) = f(State {
        z: s.z + k1z * (h / 2.0),
        v: s.v + k1v * (h / 2.0),
    })?;
    let (k3z, k3v) = f(State {
        z: s.z + k2z * (h / 2.0),
        v: s.v + k2v * (h / 2.0),
    })?;
    let (k4z, k4v) = f(State {
        z: s.z + k3z * h,
        v: s.v + k3v * h,
    })?;
    Ok(State {
        z: s.z + (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0),
        v: s.v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0),
    })
}

/// Integrate the ray to the exact signed parameter `t` without stopping at
/// exits, and report the minimum region clearance seen along the way
/// (negative when the path strayed outside). Kernel solvers use this to
/// evaluate the ray map at prescribed parameters on either branch.
pub fn ray_state_at(
    metric: &ChartMetric,
    region: &Region,
    z0: Vec2,
    v0: Vec2,
    t: f64,
    step: f64,
) -> Result<(RaySample, f64)> {
    if !(step > 0.0) {
        return Err(Error::argument("ray step must be positive"));
    }
    let mut s = State { z: z0, v: v0 };
    let mut clearance = region.clearance(z0);
    let n = (t.abs() / step).floor() as usize;
    let h = step * t.signum();
    let mut tau = 0.0;
    for _ in 0..n {
        s = rk4_step(metric, s, h)?;
        tau += h;
        clearance = clearance.min(region.clearance(s.z));
    }
    let rem = t - tau;
    if rem != 0.0 {
        s = rk4_step(metric, s, rem)?;
        clearance = clearance.min(region.clearance(s.z));
    }
    Ok((RaySample { t, z: s.z, v: s.v }, clearance))
}

/// Default integration horizon: 4 chart crossings at the slowest chart speed
/// the metric allows for this launch speed.
pub fn default_t_cap(metric: &ChartMetric, chart: Rect, z0: Vec2, v0: Vec2) -> Result<f64> {
    let g_speed = metric.tensor(z0)?.speed(v0);
    let lam = metric.max_sqrt_eigenvalue(chart, 9)?;
    Ok(4.0 * chart.diameter() * lam / g_speed.max(1e-300))
}

/// Integrate the geodesic with initial state (z0, v0) until exit.
pub fn shoot_geodesic(
    metric: &ChartMetric,
    region: &Region,
    z0: Vec2,
    v0: Vec2,
    cfg: &GeodesicConfig,
) -> Result<GeodesicPath> {
    if !(cfg.step > 0.0) {
        return Err(Error::argument("geodesic step must be positive"));
    }
    if v0.norm() == 0.0 {
        return Err(Error::argument("geodesic needs a nonzero initial velocity"));
    }
    let start_clear = region.clearance(z0);
    if start_clear < -1e-9 {
        return Err(Error::domain(format!(
            "ray starts outside the region (clearance {start_clear:e})"
        )));
    }
    let mut state = State { z: z0, v: v0 };
    let t_cap = match cfg.t_cap {
        Some(t) => t,
        None => default_t_cap(metric, region.chart, z0, v0)?,
    };

    let mut samples = vec![RaySample {
        t: 0.0,
        z: z0,
        v: v0,
    }];
    let mut t = 0.0;
    loop {
        if t + cfg.step > t_cap {
            return Ok(GeodesicPath {
                samples,
                exit: ExitReason::TimeCap,
            });
        }
        let next = rk4_step(metric, state, cfg.step)?;
        let t_next = t + cfg.step;
        if region.clearance(next.z) < 0.0 {
            // Bracketed a crossing inside this step; bisect the substep size.
            let (mut lo, mut hi) = (0.0, cfg.step);
            let mut exit_state = next;
            while hi - lo > cfg.bisect_tol {
                let mid = 0.5 * (lo + hi);
                let probe = rk4_step(metric, state, mid)?;
                if region.clearance(probe.z) < 0.0 {
                    hi = mid;
                    exit_state = probe;
                } else {
                    lo = mid;
                }
            }
            let t_exit = t + hi;
            samples.push(RaySample {
                t: t_exit,
                z: exit_state.z,
                v: exit_state.v,
            });
            return Ok(GeodesicPath {
                samples,
                exit: region.exit_reason_at(exit_state.z),
            });
        }
        state = next;
        t = t_next;
        samples.push(RaySample {
            t,
            z: state.z,
            v: state.v,
        });
    }
}

/// Maximal geodesic segment through (z0, v0): the backward branch is shot with
/// −v0 and spliced in front, so γ(−t) continues the same curve. This realizes
/// the symmetric extension — one parameterized family covers both directions.
#[derive(Clone, Debug)]
pub struct FullSegment {
    /// Samples with strictly increasing t; t = 0 is the launch point.
    pub samples: Vec<RaySample>,
    /// Index of the t = 0 sample.
    pub base_index: usize,
    pub exit_backward: ExitReason,
    pub exit_forward: ExitReason,
}

impl FullSegment {
    pub fn first(&self) -> RaySample {
        self.samples[0]
    }
    pub fn last(&self) -> RaySample {
        *self.samples.last().unwrap()
    }
    /// Parameter length of the segment.
    pub fn t_span(&self) -> f64 {
        self.last().t - self.first().t
    }
    pub fn dropped(&self) -> bool {
        matches!(self.exit_backward, ExitReason::TimeCap | ExitReason::Chart)
            || matches!(self.exit_forward, ExitReason::TimeCap | ExitReason::Chart)
    }
}

/// Two-point connection: the maximal segment through both `a` and `b`,
/// found by a secant iteration on the g-unit launch angle at `a`. Valid in
/// the small collar regime where the connecting geodesic is unique and close
/// to the chord.
pub fn connect_geodesic(
    metric: &ChartMetric,
    region: &Region,
    a: Vec2,
    b: Vec2,
    cfg: &GeodesicConfig,
) -> Result<FullSegment> {
    let chord = b - a;
    if chord.norm() < 1e-12 {
        return Err(Error::argument(
            "connect_geodesic needs two distinct points",
        ));
    }
    // Signed miss of b relative to the ray launched at angle th, plus the
    // distance of closest approach.
    let miss = |th: f64| -> Result<(f64, f64)> {
        let v = metric.unit(a, Vec2::new(th.cos(), th.sin()))?;
        let path = shoot_geodesic(metric, region, a, v, cfg)?;
        let mut best = (f64::INFINITY, path.samples[0]);
        for s in &path.samples {
            let d = (s.z - b).norm();
            if d < best.0 {
                best = (d, *s);
            }
        }
        let s = best.1;
        // Refine along the local tangent within the winning cell.
        let vn = s.v.norm2().max(1e-300);
        let dt = (b - s.z).dot(s.v) / vn;
        let p = s.z + s.v * dt.clamp(-cfg.step, cfg.step);
        let r = b - p;
        let signed = (s.v.x * r.y - s.v.y * r.x) / s.v.norm().max(1e-300);
        Ok((signed, r.norm()))
    };
    let tol = 1e-9 * (1.0 + chord.norm());
    let mut th0 = chord.y.atan2(chord.x);
    let (mut m0, d0) = miss(th0)?;
    if d0 <= tol {
        let v = metric.unit(a, Vec2::new(th0.cos(), th0.sin()))?;
        return trace_segment(metric, region, a, v, cfg);
    }
    let mut correction = (m0 / chord.norm()).clamp(-0.3, 0.3);
    if correction.abs() < 1e-9 {
        correction = 1e-3;
    }
    let mut th1 = th0 + correction;
    for _ in 0..40 {
        let (m1, d1) = miss(th1)?;
        if d1 <= tol {
            let v = metric.unit(a, Vec2::new(th1.cos(), th1.sin()))?;
            return trace_segment(metric, region, a, v, cfg);
        }
        let denom = m1 - m0;
        let th2 = if denom.abs() < 1e-300 {
            th1 + 1e-6
        } else {
            th1 - m1 * (th1 - th0) / denom
        };
        th0 = th1;
        m0 = m1;
        th1 = th2;
    }
    Err(Error::Accuracy {
        what: format!("two-point geodesic connection {a:?} -> {b:?}"),
        best: m0.abs(),
        change: (th1 - th0).abs(),
    })
}

pub fn trace_segment(
    metric: &ChartMetric,
    region: &Region,
    z0: Vec2,
    v0: Vec2,
    cfg: &GeodesicConfig,
) -> Result<FullSegment> {
    let fwd = shoot_geodesic(metric, region, z0, v0, cfg)?;
    let bwd = shoot_geodesic(metric, region, z0, -v0, cfg)?;
    let mut samples = Vec::with_capacity(fwd.samples.len() + bwd.samples.len() - 1);
    for s in bwd.samples.iter().skip(1).rev() {
        samples.push(RaySample {
            t: -s.t,
            z: s.z,
            v: -s.v,
        });
    }
    let base_index = samples.len();
    samples.extend(fwd.samples.iter().copied());
    Ok(FullSegment {
        samples,
        base_index,
        exit_backward: bwd.exit,
        exit_forward: fwd.exit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rho;
    use approx::assert_relative_eq;

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
        Region::new(fol, Rect::new(-0.5, 1.6, -2.0, 2.0))
    }

    #[test]
    fn euclidean_slab_crossing_time() {
        // Unit-speed ray from (0.5, 0) along +x exits the depth-1 collar at
        // z.x = 1 (the artificial boundary) after parameter 0.5.
        let region = strip_region(1.0);
        let path = shoot_geodesic(
            &ChartMetric::Euclidean,
            &region,
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            &GeodesicConfig::default(),
        )
        .unwrap();
        assert_eq!(path.exit, ExitReason::Artificial);
        assert_relative_eq!(path.exit_time(), 0.5, epsilon = 1e-9);
        assert_relative_eq!(path.exit_state().z.x, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn physical_exit_detected() {
        let region = strip_region(1.0);
        let path = shoot_geodesic(
            &ChartMetric::Euclidean,
            &region,
            Vec2::new(0.25, 0.0),
            Vec2::new(-1.0, 0.0),
            &GeodesicConfig::default(),
        )
        .unwrap();
        assert_eq!(path.exit, ExitReason::Physical);
        assert_relative_eq!(path.exit_time(), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn segment_is_reversal_symmetric() {
        // Samples of the segment through (z0, v0) coincide with samples of the
        // segment through (z0, −v0) with t negated.
        let region = strip_region(1.0);
        let m = ChartMetric::ConformalExp { kappa: 0.4 };
        let z0 = Vec2::new(0.5, 0.1);
        let v0 = m.unit(z0, Vec2::new(0.3, 1.0)).unwrap();
        let cfg = GeodesicConfig::default();
        let a = trace_segment(&m, &region, z0, v0, &cfg).unwrap();
        let b = trace_segment(&m, &region, z0, -v0, &cfg).unwrap();
        let mut worst: f64 = 0.0;
        for (sa, sb) in a.samples.iter().zip(b.samples.iter().rev()) {
            worst = worst.max((sa.z - sb.z).norm()).max((sa.t + sb.t).abs());
        }
        assert!(worst < 1e-7, "reversal asymmetry {worst:e}");
    }

    #[test]
    fn energy_is_conserved() {
        let region = strip_region(1.0);
        let m = ChartMetric::ConformalExp { kappa: 0.5 };
        let z0 = Vec2::new(0.4, -0.2);
        let v0 = m.unit(z0, Vec2::new(0.2, 0.9)).unwrap();
        let path = shoot_geodesic(&m, &region, z0, v0, &GeodesicConfig::default()).unwrap();
        let e0 = m.tensor(z0).unwrap().quad(v0);
        for s in &path.samples {
            let e = m.tensor(s.z).unwrap().quad(s.v);
            assert!(
                ((e - e0) / e0).abs() <= 1e-6,
                "energy drift {:e} at t={}",
                (e - e0) / e0,
                s.t
            );
        }
    }

    #[test]
    fn time_cap_reported() {
        // Cap shorter than the crossing time.
        let region = strip_region(1.0);
        let cfg = GeodesicConfig {
            t_cap: Some(0.1),
            ..GeodesicConfig::default()
        };
        let path = shoot_geodesic(
            &ChartMetric::Euclidean,
            &region,
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(path.exit, ExitReason::TimeCap);
    }

    #[test]
    fn connection_passes_through_both_points() {
        let region = strip_region(1.0);
        let m = ChartMetric::ConformalExp { kappa: 0.5 };
        let a = Vec2::new(0.2, -0.3);
        let b = Vec2::new(0.8, 0.5);
        let seg = connect_geodesic(&m, &region, a, b, &GeodesicConfig::default()).unwrap();
        // Distance from p to the sampled polyline.
        let close = |p: Vec2| {
            seg.samples
                .windows(2)
                .map(|w| {
                    let (za, zb) = (w[0].z, w[1].z);
                    let d = zb - za;
                    let u = ((p - za).dot(d) / d.norm2().max(1e-300)).clamp(0.0, 1.0);
                    (za + d * u - p).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        // Tolerance allows the polyline sagitta at step 1e-3.
        assert!(close(a) < 2e-7, "misses a by {:e}", close(a));
        assert!(close(b) < 2e-7, "misses b by {:e}", close(b));
        // The curve is genuinely bent: its midpoint is off the chord.
        let mid = seg.samples[seg.samples.len() / 2].z;
        let chord_dist = {
            let d = (b - a).normalized();
            let r = mid - a;
            (d.x * r.y - d.y * r.x).abs()
        };
        assert!(chord_dist > 1e-3, "geodesic unexpectedly straight");
    }

    #[test]
    fn outside_start_is_domain_error() {
        let region = strip_region(1.0);
        let r = shoot_geodesic(
            &ChartMetric::Euclidean,
            &region,
            Vec2::new(-0.2, 0.0),
            Vec2::new(1.0, 0.0),
            &GeodesicConfig::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
