//! Structural properties of the averaged operator that need full-geometry
//! quadratures: the adjoint role of the slope average against the raw
//! transform, and the dropped-ray accounting.

use foliated_xray::geometry::{FoliationSpec, Frame, Region, Rho};
use foliated_xray::geometry::ChartMetric;
use foliated_xray::grid::Grid2;
use foliated_xray::normal_op::{apply_af, CutoffChi, NormalOpConfig};
use foliated_xray::transform::{xray, WeightSpec};
use foliated_xray::vec2::{Axis, Rect, Vec2};

fn disk(c: f64) -> (ChartMetric, Region, Frame) {
    let fol = FoliationSpec::new(
        Rho::Disk {
            center: Vec2::ZERO,
            radius: 1.0,
        },
        Vec2::new(1.0, 0.0),
        0.0,
        c,
    )
    .unwrap();
    let chart = Rect::new(-1.3, 1.3, -1.3, 1.3);
    let frame = Frame::for_foliation(&fol).unwrap();
    (ChartMetric::Euclidean, Region { fol, chart }, frame)
}

fn gaussian(center: Vec2, sigma: f64) -> impl Fn(Vec2) -> f64 + Sync {
    move |z: Vec2| {
        let d = z - center;
        (-d.norm2() / (2.0 * sigma * sigma)).exp()
    }
}

/// Weighted grid pairing ⟨u, w⟩ = ∫∫ u·w dz over adapted coordinates, the
/// area element of the polar frame being (radius − c + x) dx dy.
fn pair(values: &Grid2, w: impl Fn(Vec2) -> f64, radius: f64, c: f64) -> f64 {
    let (ax, ay) = (values.ax, values.ay);
    let (hx, hy) = (ax.step(), ay.step());
    let mut acc = 0.0;
    for j in 0..ay.n {
        let wy = if j == 0 || j == ay.n - 1 { 0.5 } else { 1.0 };
        for i in 0..ax.n {
            let wx = if i == 0 || i == ax.n - 1 { 0.5 } else { 1.0 };
            let x = ax.node(i);
            let r = radius - c + x;
            acc += wx * wy * r * values.at(i, j) * w(Vec2::new(x, ay.node(j)));
        }
    }
    acc * hx * hy
}

/// With F = 0 and unit weight, pairing the backprojected transform against a
/// test field is, by Fubini, exactly the cutoff-weighted slope pairing of the
/// raw ray transform against the lifted field:
///
/// ```text
///   ⟨L(If), g⟩ = Σ_ω ∬ [ x⁻² ∫ χ(λ/x)·If(x,y,λ,ω) dλ ] g(x,y) dA
/// ```
///
/// — the discrete footprint of the slope average acting as the adjoint of
/// the point-to-ray lift under the cutoff slope measure. (Exact symmetry of
/// ⟨(LI)f, g⟩ under swapping f and g does NOT hold at finite depth: the
/// cutoff admits a launch from a deep point that climbs to a shallow one
/// while rejecting the reversed launch, so the composition couples depths
/// one-sidedly; only the lift pairing above is an identity.)
///
/// The right side is an independent oracle: midpoint slope nodes at half the
/// operator's step, with the ray transform computed by the transform side's
/// arc-length integrator and rescaled to the coordinate parameter.
#[test]
fn backprojected_pairing_matches_weighted_sinogram_pairing() {
    let (metric, region, frame) = disk(0.3);
    let w = WeightSpec::constant(1.0).unwrap();
    let radius = 1.0;
    let cfg = NormalOpConfig {
        f_const: 0.0,
        lambda_step: 0.05,
        t_step: 2e-3,
        chi: CutoffChi::Bump { radius: 0.6 },
        eval_x: Axis::new(0.03, 0.27, 33),
        eval_y: Axis::new(-0.55, 0.55, 33),
    };
    // Bumps supported inside the collar annulus, in chart coordinates.
    let f_chart = gaussian(Vec2::new(0.86 * 0.2f64.cos(), 0.86 * 0.2f64.sin()), 0.10);
    let g_chart = gaussian(
        Vec2::new(0.86 * 0.35f64.cos(), -0.86 * 0.35f64.sin()),
        0.12,
    );

    let lif = apply_af(&metric, &region, &frame, &w, &f_chart, &cfg).unwrap();
    assert_eq!(lif.dropped_rays, 0);
    let g_adapted = |p: Vec2| g_chart(frame.from_adapted(p.x, p.y));
    let a = pair(&lif.values, g_adapted, radius, 0.3);

    // Independent side: explicit double quadrature of the sinogram pairing.
    let support = cfg.chi.support_radius();
    let m = (4.0 * support / cfg.lambda_step).ceil() as usize;
    let hs = 2.0 * support / m as f64;
    let (ax, ay) = (cfg.eval_x, cfg.eval_y);
    let mut b = 0.0;
    for j in 0..ay.n {
        let wy = if j == 0 || j == ay.n - 1 { 0.5 } else { 1.0 };
        for i in 0..ax.n {
            let wx = if i == 0 || i == ax.n - 1 { 0.5 } else { 1.0 };
            let (x, y) = (ax.node(i), ay.node(j));
            let mut slope_avg = 0.0;
            for k in 0..m {
                let s = -support + (k as f64 + 0.5) * hs;
                for omega in [1.0, -1.0] {
                    let (z0, v0) = frame.launch(x, y, x * s, omega);
                    let speed = metric.tensor(z0).unwrap().speed(v0);
                    let ri = xray(&metric, &region, &w, &f_chart, z0, v0, 1.5e-3).unwrap();
                    assert!(!ri.dropped);
                    slope_avg += hs * cfg.chi.eval(s) * ri.value / speed;
                }
            }
            let r = radius - 0.3 + x;
            b += wx * wy * r * (slope_avg / x) * g_adapted(Vec2::new(x, y));
        }
    }
    b *= ax.step() * ay.step();

    assert!(
        (a - b).abs() <= 5e-3 * a.abs().max(b.abs()),
        "pairings differ: operator side {a:e}, sinogram side {b:e}, rel {:e}",
        (a - b).abs() / a.abs().max(b.abs())
    );
    // Non-degenerate data: the pairing is genuinely nonzero.
    assert!(a.abs() > 1e-8);
}

/// Rays that leave through the chart edge are dropped and counted, and the
/// operator still returns finite values for the surviving quadrature.
#[test]
fn chart_exits_are_counted_as_dropped() {
    let fol = FoliationSpec::new(
        Rho::HalfPlane {
            n: Vec2::new(1.0, 0.0),
            offset: 0.0,
        },
        Vec2::ZERO,
        0.0,
        0.4,
    )
    .unwrap();
    // Deliberately tight transverse extent: near-tangent rays leave the chart.
    let chart = Rect::new(-0.2, 0.6, -0.45, 0.45);
    let frame = Frame::for_foliation(&fol).unwrap();
    let metric = ChartMetric::ConformalExp { kappa: -0.3 };
    let region = Region { fol, chart };
    let w = WeightSpec::constant(1.0).unwrap();
    let f = gaussian(Vec2::new(0.2, 0.0), 0.08);
    let cfg = NormalOpConfig {
        f_const: 1.0,
        lambda_step: 0.2,
        t_step: 5e-3,
        chi: CutoffChi::Bump { radius: 0.9 },
        eval_x: Axis::new(0.1, 0.3, 3),
        eval_y: Axis::new(-0.1, 0.1, 3),
        ..NormalOpConfig::default()
    };
    let out = apply_af(&metric, &region, &frame, &w, &f, &cfg).unwrap();
    assert!(
        out.dropped_rays > 0,
        "expected chart exits with a 0.45-halfwidth chart"
    );
    assert!(out.values.data.iter().all(|v| v.is_finite()));
}
