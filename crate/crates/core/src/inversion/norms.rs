//! Discrete exponentially weighted Sobolev proxies.
//!
//! The stability theory measures profiles and sinograms in norms carrying the
//! depth weight `exp(−F/x)`, where `x` is the distance above the deep edge of
//! the collar. These helpers discretize the order-zero and order-one versions
//! of those norms:
//!
//! * profile side — trapezoid sum over the depth nodes, plus (at order one) a
//!   weighted sum of difference quotients with the weight evaluated at cell
//!   centers;
//! * sinogram side — trapezoid sum over the launch grid per direction sheet,
//!   plus difference quotients along the launch-depth, leaf, and slope axes.
//!
//! The weight argument is clamped below at half a cell of the depth axis so
//! the deepest node never divides by zero. With `F = 0` every weight is
//! exactly `1.0` and the sums reduce bit-for-bit to the unweighted proxies.

use crate::transform::Sinogram;
use crate::vec2::Axis;

/// `exp(−f_const / max(depth, floor))`, the one-sided depth weight.
pub fn depth_weight(f_const: f64, depth: f64, floor: f64) -> f64 {
    debug_assert!(floor > 0.0);
    if f_const == 0.0 {
        return 1.0;
    }
    (-f_const / depth.max(floor)).exp()
}

/// Trapezoid end-point factor: 0.5 on the ends, 1 inside.
fn trap(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Weighted norm of a depth profile given by `values` on `n` uniform nodes
/// spanning `x̃ ∈ [−c, 0]` (node 0 deepest). `order` 0 measures values only;
/// 1 adds first difference quotients.
pub fn profile_weighted_norm(values: &[f64], c: f64, f_const: f64, order: usize) -> f64 {
    let n = values.len();
    assert!(n >= 2, "profile norm needs at least two nodes");
    assert!(c > 0.0, "collar depth must be positive");
    let h = c / (n - 1) as f64;
    let floor = 0.5 * h;
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        // Depth above the deep edge: node 0 sits on it.
        let x = h * i as f64;
        let wv = depth_weight(f_const, x, floor) * v;
        acc += trap(i, n) * h * wv * wv;
    }
    if order >= 1 {
        for i in 0..n - 1 {
            let x_mid = h * (i as f64 + 0.5);
            let q = depth_weight(f_const, x_mid, floor) * (values[i + 1] - values[i]) / h;
            acc += h * q * q;
        }
    }
    acc.sqrt()
}

/// Weighted norm of a sinogram. The weight depends on the launch depth of
/// each ray; `order` 1 adds difference quotients along the launch-depth,
/// leaf, and slope axes of each direction sheet.
pub fn sinogram_weighted_norm(data: &Sinogram, f_const: f64, order: usize) -> f64 {
    let g = &data.grid;
    let (nx, ny, nl) = (g.x.n, g.y.n, g.lambda.n);
    let (hx, hy, hl) = (g.x.step(), g.y.step(), g.lambda.step());
    let floor = 0.5 * hx;
    let cell = hx * hy * hl;
    let mut acc = 0.0;
    for iw in 0..2 {
        for ix in 0..nx {
            let wx = depth_weight(f_const, g.x.node(ix), floor);
            for iy in 0..ny {
                for il in 0..nl {
                    let v = wx * data.values[data.index(iw, ix, iy, il)];
                    acc += trap(ix, nx) * trap(iy, ny) * trap(il, nl) * cell * v * v;
                }
            }
        }
        if order == 0 {
            continue;
        }
        // Launch-depth quotients, weight at cell centers.
        for ix in 0..nx - 1 {
            let wx = depth_weight(f_const, 0.5 * (g.x.node(ix) + g.x.node(ix + 1)), floor);
            for iy in 0..ny {
                for il in 0..nl {
                    let d = data.values[data.index(iw, ix + 1, iy, il)]
                        - data.values[data.index(iw, ix, iy, il)];
                    let q = wx * d / hx;
                    acc += trap(iy, ny) * trap(il, nl) * cell * q * q;
                }
            }
        }
        // Leaf quotients.
        for ix in 0..nx {
            let wx = depth_weight(f_const, g.x.node(ix), floor);
            for iy in 0..ny - 1 {
                for il in 0..nl {
                    let d = data.values[data.index(iw, ix, iy + 1, il)]
                        - data.values[data.index(iw, ix, iy, il)];
                    let q = wx * d / hy;
                    acc += trap(ix, nx) * trap(il, nl) * cell * q * q;
                }
            }
        }
        // Slope quotients.
        for ix in 0..nx {
            let wx = depth_weight(f_const, g.x.node(ix), floor);
            for iy in 0..ny {
                for il in 0..nl - 1 {
                    let d = data.values[data.index(iw, ix, iy, il + 1)]
                        - data.values[data.index(iw, ix, iy, il)];
                    let q = wx * d / hl;
                    acc += trap(ix, nx) * trap(iy, ny) * cell * q * q;
                }
            }
        }
    }
    acc.sqrt()
}

/// Per-ray square-root weights for the least-squares solver, in flat row
/// order. With these factors applied to per-ray residuals, the Euclidean
/// norm of the weighted residual equals [`sinogram_weighted_norm`] of the
/// residual sinogram at order zero.
pub fn ray_solver_weights(
    x: &Axis,
    y: &Axis,
    lambda: &Axis,
    f_const: f64,
) -> Vec<f64> {
    let (nx, ny, nl) = (x.n, y.n, lambda.n);
    let cell = x.step() * y.step() * lambda.step();
    let floor = 0.5 * x.step();
    let mut out = Vec::with_capacity(2 * nx * ny * nl);
    for _iw in 0..2 {
        for ix in 0..nx {
            let wx = depth_weight(f_const, x.node(ix), floor);
            for iy in 0..ny {
                for il in 0..nl {
                    let t = trap(ix, nx) * trap(iy, ny) * trap(il, nl) * cell;
                    out.push(t.sqrt() * wx);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::SinogramGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_sinogram(nx: usize, ny: usize, nl: usize, seed: u64) -> Sinogram {
        let grid = SinogramGrid {
            x: Axis::new(0.02, 0.28, nx),
            y: Axis::new(-0.5, 0.5, ny),
            lambda: Axis::new(-0.3, 0.3, nl),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.rays()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Sinogram {
            grid,
            values,
            quad_step: 1e-3,
            weight_name: "unit".into(),
            dropped_rays: 0,
        }
    }

    #[test]
    fn zero_exponent_reduces_to_plain_proxies_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 33;
        let c = 0.4;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let h = c / (n - 1) as f64;
        // Plain trapezoid L² plus H¹ quotients, written independently.
        let mut plain = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let t = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            plain += t * h * v * v;
        }
        for i in 0..n - 1 {
            let q = (values[i + 1] - values[i]) / h;
            plain += h * q * q;
        }
        assert_eq!(profile_weighted_norm(&values, c, 0.0, 1), plain.sqrt());

        let s = toy_sinogram(6, 5, 4, 9);
        let mut plain = 0.0;
        let g = &s.grid;
        let cell = g.x.step() * g.y.step() * g.lambda.step();
        for iw in 0..2 {
            for ix in 0..g.x.n {
                for iy in 0..g.y.n {
                    for il in 0..g.lambda.n {
                        let t = trap(ix, g.x.n) * trap(iy, g.y.n) * trap(il, g.lambda.n);
                        let v = s.values[s.index(iw, ix, iy, il)];
                        plain += t * cell * v * v;
                    }
                }
            }
        }
        assert_eq!(sinogram_weighted_norm(&s, 0.0, 0), plain.sqrt());
    }

    #[test]
    fn solver_weights_reproduce_order_zero_norm() {
        let s = toy_sinogram(7, 4, 5, 21);
        for &f_const in &[0.0, 0.6] {
            let w = ray_solver_weights(&s.grid.x, &s.grid.y, &s.grid.lambda, f_const);
            let via_weights: f64 = w
                .iter()
                .zip(&s.values)
                .map(|(wi, vi)| (wi * vi) * (wi * vi))
                .sum::<f64>()
                .sqrt();
            let direct = sinogram_weighted_norm(&s, f_const, 0);
            assert!(
                (via_weights - direct).abs() <= 1e-13 * direct,
                "F = {f_const}: {via_weights} vs {direct}"
            );
        }
    }

    #[test]
    fn deep_support_is_suppressed_by_positive_exponent() {
        let n = 65;
        let c = 0.3;
        let bump = |center: f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let s = -c + c * i as f64 / (n - 1) as f64;
                    let m = (s - center) / (0.05 * c);
                    (-0.5 * m * m).exp()
                })
                .collect()
        };
        let deep = bump(-0.9 * c);
        let shallow = bump(-0.1 * c);
        let f_const = 0.5;
        let r_deep = profile_weighted_norm(&deep, c, f_const, 0)
            / profile_weighted_norm(&deep, c, 0.0, 0);
        let r_shallow = profile_weighted_norm(&shallow, c, f_const, 0)
            / profile_weighted_norm(&shallow, c, 0.0, 0);
        assert!(
            r_deep < 0.1 * r_shallow,
            "deep {r_deep} vs shallow {r_shallow}"
        );
    }

    proptest! {
        #[test]
        fn norms_are_absolutely_one_homogeneous(
            seed in 0u64..1000,
            scale in prop_oneof![Just(-3.5f64), Just(0.25), Just(117.0)],
            f_const in prop_oneof![Just(0.0f64), Just(0.7)],
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 19;
            let c = 0.35;
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            for order in 0..2 {
                let a = profile_weighted_norm(&values, c, f_const, order);
                let b = profile_weighted_norm(&scaled, c, f_const, order);
                prop_assert!((b - scale.abs() * a).abs() <= 1e-12 * b.max(1e-300));
            }
            let s = toy_sinogram(5, 4, 3, seed ^ 0xabcd);
            let mut s2 = s.clone();
            for v in &mut s2.values { *v *= scale; }
            for order in 0..2 {
                let a = sinogram_weighted_norm(&s, f_const, order);
                let b = sinogram_weighted_norm(&s2, f_const, order);
                prop_assert!((b - scale.abs() * a).abs() <= 1e-12 * b.max(1e-300));
            }
        }
    }
}
