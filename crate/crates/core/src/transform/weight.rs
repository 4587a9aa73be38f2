//! Integration weights for the ray transform.
//!
//! A weight is a strictly positive function w(z, z′) of an ordered point pair,
//! bounded between C₀ and C₁, together with its diagonal limit ϱ_ff(z, v) on
//! directions (the pair limit z′ → z along v). The transforms in this crate
//! assume geodesic constancy — w(z₁, z) = w(z₂, z) whenever z₁, z₂ lie on the
//! geodesic through z — which holds for weights that are functions of the
//! geodesic itself. The shipped constructions guarantee it:
//!
//! * a constant;
//! * a symmetric function of the two exit points of the maximal segment
//!   through the pair;
//! * the average of a pointwise kernel over that maximal segment.
//!
//! The latter two evaluate geodesics internally (two-point connection), so
//! they are priced for validation work, not for inner loops.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{connect_geodesic, trace_segment, ChartMetric, GeodesicConfig, Region};
use crate::vec2::Vec2;

type PairFn = dyn Fn(Vec2, Vec2) -> Result<f64> + Send + Sync;
type DiagFn = dyn Fn(Vec2, Vec2) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub struct WeightSpec {
    /// Identifier recorded in sinogram metadata.
    pub name: String,
    /// Lower bound C₀ > 0.
    pub c0: f64,
    /// Upper bound C₁ ≥ C₀.
    pub c1: f64,
    pair: Arc<PairFn>,
    diag: Arc<DiagFn>,
}

impl std::fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightSpec")
            .field("name", &self.name)
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .finish()
    }
}

/// Pairs closer than this are treated as coincident and routed to ϱ_ff.
pub const COINCIDENCE_RADIUS: f64 = 1e-9;

impl WeightSpec {
    pub fn new(
        name: impl Into<String>,
        c0: f64,
        c1: f64,
        pair: Arc<PairFn>,
        diag: Arc<DiagFn>,
    ) -> Result<Self> {
        if !(c0 > 0.0 && c1 >= c0) {
            return Err(Error::argument("weight bounds need 0 < C0 <= C1"));
        }
        Ok(WeightSpec {
            name: name.into(),
            c0,
            c1,
            pair,
            diag,
        })
    }

    /// w ≡ value; the reduction to the unweighted transform.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(Error::argument("constant weight must be positive"));
        }
        Self::new(
            format!("constant({value})"),
            value,
            value,
            Arc::new(move |_, _| Ok(value)),
            Arc::new(move |_, _| Ok(value)),
        )
    }

    /// Symmetric function of the two endpoints of the maximal segment through
    /// the pair: w = ½(φ(e₋) + φ(e₊)). Exactly constant along geodesics and
    /// even under direction flip.
    pub fn exit_smooth(
        metric: ChartMetric,
        region: Region,
        cfg: GeodesicConfig,
        c0: f64,
        c1: f64,
        phi: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let phi = Arc::new(phi);
        let (m1, r1, p1) = (metric.clone(), region, phi.clone());
        let pair = move |a: Vec2, b: Vec2| -> Result<f64> {
            let seg = connect_geodesic(&m1, &r1, a, b, &cfg)?;
            Ok(0.5 * (p1(seg.first().z) + p1(seg.last().z)))
        };
        let diag = move |z: Vec2, v: Vec2| -> Result<f64> {
            let seg = trace_segment(&metric, &region, z, v, &cfg)?;
            Ok(0.5 * (phi(seg.first().z) + phi(seg.last().z)))
        };
        Self::new("exit_smooth", c0, c1, Arc::new(pair), Arc::new(diag))
    }

    /// Average of a pointwise kernel over the maximal segment through the
    /// pair, with respect to metric arc length. Constant along the geodesic
    /// up to quadrature error.
    pub fn averaged(
        metric: ChartMetric,
        region: Region,
        cfg: GeodesicConfig,
        c0: f64,
        c1: f64,
        kernel: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let kernel = Arc::new(kernel);
        let average = {
            let kernel = kernel.clone();
            move |seg: &crate::geometry::FullSegment| -> f64 {
                // Uniform-in-t trapezoid; constant speed makes it arc length.
                let s = &seg.samples;
                let mut acc = 0.0;
                let mut len = 0.0;
                for w in s.windows(2) {
                    let dt = w[1].t - w[0].t;
                    acc += 0.5 * dt * (kernel(w[0].z) + kernel(w[1].z));
                    len += dt;
                }
                if len > 0.0 {
                    acc / len
                } else {
                    kernel(s[0].z)
                }
            }
        };
        let avg1 = average.clone();
        let (m1, r1) = (metric.clone(), region);
        let pair = move |a: Vec2, b: Vec2| -> Result<f64> {
            Ok(avg1(&connect_geodesic(&m1, &r1, a, b, &cfg)?))
        };
        let diag = move |z: Vec2, v: Vec2| -> Result<f64> {
            Ok(average(&trace_segment(&metric, &region, z, v, &cfg)?))
        };
        Self::new("averaged", c0, c1, Arc::new(pair), Arc::new(diag))
    }

    /// Diagonal limit ϱ_ff(z, v); even in v for the shipped constructions.
    pub fn diagonal(&self, z: Vec2, v: Vec2) -> Result<f64> {
        if v.norm() == 0.0 {
            return Err(Error::argument(
                "diagonal weight needs a nonzero direction",
            ));
        }
        self.check((self.diag)(z, v.normalized())?)
    }

    fn check(&self, value: f64) -> Result<f64> {
        if value < self.c0 - 1e-12 || value > self.c1 + 1e-12 {
            return Err(Error::validation(format!(
                "weight '{}' produced {value}, outside [{}, {}]",
                self.name, self.c0, self.c1
            )));
        }
        Ok(value)
    }
}

/// Weight of an ordered pair; coincident points (closer than
/// [`COINCIDENCE_RADIUS`]) need the caller to supply the approach direction.
pub fn eval_weight(
    w: &WeightSpec,
    z: Vec2,
    z_prime: Vec2,
    direction: Option<Vec2>,
) -> Result<f64> {
    if (z - z_prime).norm() < COINCIDENCE_RADIUS {
        let v = direction.ok_or_else(|| {
            Error::argument("coincident points: supply the direction of approach")
        })?;
        w.diagonal(z, v)
    } else {
        w.check((w.pair)(z, z_prime)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shoot_geodesic, FoliationSpec, Rho};
    use crate::vec2::Rect;

    fn setup() -> (ChartMetric, Region, GeodesicConfig) {
        let fol = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.0,
            1.0,
        )
        .unwrap();
        (
            ChartMetric::ConformalExp { kappa: 0.4 },
            Region::new(fol, Rect::new(-0.5, 1.6, -2.0, 2.0)),
            GeodesicConfig::default(),
        )
    }

    #[test]
    fn constant_weight_is_one_everywhere() {
        let w = WeightSpec::constant(1.0).unwrap();
        let val = eval_weight(&w, Vec2::new(0.3, 0.1), Vec2::new(0.7, -0.2), None).unwrap();
        assert_eq!(val, 1.0);
        let diag = eval_weight(
            &w,
            Vec2::new(0.3, 0.1),
            Vec2::new(0.3, 0.1),
            Some(Vec2::new(0.0, 1.0)),
        )
        .unwrap();
        assert_eq!(diag, 1.0);
    }

    #[test]
    fn coincident_without_direction_is_an_error() {
        let w = WeightSpec::constant(1.0).unwrap();
        let z = Vec2::new(0.3, 0.1);
        assert!(matches!(
            eval_weight(&w, z, z, None),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn exit_weight_is_constant_along_a_geodesic() {
        // Evaluate w(z_i, z_base) for 20 points z_i along one shot geodesic;
        // all values must agree because the weight sees only the segment.
        let (metric, region, cfg) = setup();
        let w = WeightSpec::exit_smooth(metric.clone(), region, cfg, 0.1, 10.0, |e| {
            1.0 + 0.5 * (1.3 * e.y).sin() * (0.7 * e.x).cos()
        })
        .unwrap();
        let z0 = Vec2::new(0.5, -0.1);
        let v0 = metric.unit(z0, Vec2::new(0.2, 1.0)).unwrap();
        let path = shoot_geodesic(&metric, &region, z0, v0, &cfg).unwrap();
        let n = path.samples.len();
        let base = path.samples[n / 2].z;
        let mut values = Vec::new();
        for k in 1..=20 {
            let z = path.samples[k * (n - 2) / 21].z;
            if (z - base).norm() < COINCIDENCE_RADIUS {
                continue;
            }
            values.push(eval_weight(&w, z, base, None).unwrap());
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        assert!(hi - lo <= 1e-8, "variation along geodesic: {:e}", hi - lo);
    }

    #[test]
    fn averaged_weight_is_constant_along_a_geodesic() {
        let (metric, region, cfg) = setup();
        let w = WeightSpec::averaged(metric.clone(), region, cfg, 0.1, 10.0, |z| {
            1.5 + 0.4 * (z.x - 0.3 * z.y * z.y)
        })
        .unwrap();
        let z0 = Vec2::new(0.4, 0.2);
        let v0 = metric.unit(z0, Vec2::new(-0.1, 1.0)).unwrap();
        let path = shoot_geodesic(&metric, &region, z0, v0, &cfg).unwrap();
        let n = path.samples.len();
        let base = path.samples[n / 3].z;
        let a = eval_weight(&w, path.samples[n / 6].z, base, None).unwrap();
        let b = eval_weight(&w, path.samples[(4 * n) / 5].z, base, None).unwrap();
        assert!((a - b).abs() <= 1e-6, "averaged weight drift {:e}", a - b);
    }

    #[test]
    fn diagonal_weight_is_even_in_direction() {
        let (metric, region, cfg) = setup();
        let w = WeightSpec::exit_smooth(metric, region, cfg, 0.1, 10.0, |e| {
            1.0 + 0.3 * e.y.tanh() + 0.2 * e.x
        })
        .unwrap();
        let z = Vec2::new(0.5, 0.3);
        let v = Vec2::new(0.4, 0.9).normalized();
        let plus = w.diagonal(z, v).unwrap();
        let minus = w.diagonal(z, -v).unwrap();
        assert!((plus - minus).abs() <= 1e-12, "odd part {:e}", plus - minus);
    }

    #[test]
    fn out_of_bounds_weight_is_rejected() {
        let (metric, region, cfg) = setup();
        // Bounds deliberately too tight for the kernel.
        let w = WeightSpec::averaged(metric, region, cfg, 1.0, 1.1, |z| 1.5 + z.x).unwrap();
        let r = eval_weight(&w, Vec2::new(0.3, 0.0), Vec2::new(0.9, 0.4), None);
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
