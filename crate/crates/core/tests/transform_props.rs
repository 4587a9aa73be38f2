//! Statistical and property-based invariants of the ray transform.

use foliated_xray::geometry::{ChartMetric, FoliationSpec, Frame, Region, Rho};
use foliated_xray::grid::Grid2;
use foliated_xray::transform::{sinogram, xray, RayTable, SinogramGrid, WeightSpec};
use foliated_xray::vec2::{Axis, Rect, Vec2};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn strip_setup(c: f64) -> (ChartMetric, Region, Frame) {
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
    let region = Region::new(fol, Rect::new(-0.3, c + 0.3, -0.8, 0.8));
    let frame = Frame::for_foliation(&fol).unwrap();
    (ChartMetric::Euclidean, region, frame)
}

#[derive(Clone)]
struct GaussianMix {
    centers: Vec<Vec2>,
    inv_two_sigma2: Vec<f64>,
    amps: Vec<f64>,
}

impl GaussianMix {
    fn random(rng: &mut impl Rng, c: f64) -> Self {
        let k = 4;
        let mut centers = Vec::new();
        let mut inv = Vec::new();
        let mut amps = Vec::new();
        for _ in 0..k {
            centers.push(Vec2::new(
                rng.random_range(0.05..c - 0.05),
                rng.random_range(-0.4..0.4),
            ));
            let sigma: f64 = rng.random_range(0.08..0.2);
            inv.push(1.0 / (2.0 * sigma * sigma));
            amps.push(rng.random_range(0.5..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        }
        GaussianMix {
            centers,
            inv_two_sigma2: inv,
            amps,
        }
    }

    fn eval(&self, z: Vec2) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.centers.len() {
            acc += self.amps[i] * (-(z - self.centers[i]).norm2() * self.inv_two_sigma2[i]).exp();
        }
        acc
    }
}

/// The discrete operator norm proxy ‖sinogram(f)‖ / ‖f‖ stays put (≤ 20%)
/// when the sinogram grid is refined ×2, across 50 random smooth fields.
#[test]
fn empirical_boundedness_under_refinement() {
    let c = 0.5;
    let (metric, region, frame) = strip_setup(c);
    let w = WeightSpec::constant(1.0).unwrap();
    let coarse = SinogramGrid {
        x: Axis::new(0.05, 0.45, 5),
        y: Axis::new(-0.3, 0.3, 5),
        lambda: Axis::new(-0.3, 0.3, 5),
    };
    let fine = SinogramGrid {
        x: coarse.x.refined(),
        y: coarse.y.refined(),
        lambda: coarse.lambda.refined(),
    };
    let h = 2e-3;
    let table_c = RayTable::build(&metric, &region, &frame, &coarse, h).unwrap();
    let table_f = RayTable::build(&metric, &region, &frame, &fine, h).unwrap();
    let fgrid_x = Axis::new(0.0, c, 41);
    let fgrid_y = Axis::new(-0.8, 0.8, 41);

    let mut rng = ChaCha8Rng::seed_from_u64(20240811);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let mix = GaussianMix::random(&mut rng, c);
        let f = |z: Vec2| mix.eval(z);
        let fnorm = Grid2::from_fn(fgrid_x, fgrid_y, f).l2_norm();
        assert!(fnorm > 1e-6, "degenerate random field in trial {trial}");
        let r1 = table_c.integrate(&w, &f).unwrap().l2_norm() / fnorm;
        let r2 = table_f.integrate(&w, &f).unwrap().l2_norm() / fnorm;
        let drift = (r2 / r1 - 1.0).abs();
        worst = worst.max(drift);
        assert!(
            drift <= 0.2,
            "trial {trial}: operator-norm proxy drifted {:.1}% under refinement",
            100.0 * drift
        );
    }
    eprintln!("worst boundedness drift over 50 fields: {:.2}%", 100.0 * worst);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Reversing the launch direction never changes the transform value.
    #[test]
    fn reversal_invariance(
        x in 0.05f64..0.45,
        y in -0.3f64..0.3,
        lambda in -0.4f64..0.4,
        kappa in -0.4f64..0.4,
    ) {
        let (_, region, frame) = strip_setup(0.5);
        let metric = ChartMetric::ConformalExp { kappa };
        let w = WeightSpec::constant(1.0).unwrap();
        let f = |z: Vec2| 1.0 + 0.5 * (2.0 * z.x).sin() * (1.5 * z.y).cos();
        let (z0, v0) = frame.launch(x, y, lambda, 1.0);
        let a = xray(&metric, &region, &w, &f, z0, v0, 2e-3).unwrap().value;
        let b = xray(&metric, &region, &w, &f, z0, -v0, 2e-3).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }

    /// Scaling the field scales the sinogram (homogeneity, exact).
    #[test]
    fn sinogram_homogeneity(scale in 0.25f64..4.0) {
        let (metric, region, frame) = strip_setup(0.5);
        let w = WeightSpec::constant(1.0).unwrap();
        let grid = SinogramGrid {
            x: Axis::new(0.1, 0.4, 2),
            y: Axis::new(-0.2, 0.2, 2),
            lambda: Axis::new(-0.2, 0.2, 3),
        };
        let f = |z: Vec2| (z.x * 1.3).cos() + 0.4 * z.y;
        let fs = |z: Vec2| scale * ((z.x * 1.3).cos() + 0.4 * z.y);
        let s1 = sinogram(&metric, &region, &frame, &w, &f, &grid, 2e-3).unwrap();
        let s2 = sinogram(&metric, &region, &frame, &w, &fs, &grid, 2e-3).unwrap();
        for k in 0..s1.values.len() {
            // Trapezoid sums commute with constant scaling to rounding noise.
            prop_assert!((s2.values[k] - scale * s1.values[k]).abs() <= 1e-12 * (1.0 + s1.values[k].abs() * scale));
        }
    }
}
