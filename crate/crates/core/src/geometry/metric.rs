//! Riemannian metrics on a chart rectangle.
//!
//! A metric is evaluated as a jet (components plus first partials); the
//! Christoffel symbols follow from Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij).

use crate::error::{Error, Result};
use crate::vec2::{Rect, Vec2};

/// Symmetric positive-definite 2×2 tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricTensor {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl MetricTensor {
    pub const EUCLIDEAN: MetricTensor = MetricTensor {
        g11: 1.0,
        g12: 0.0,
        g22: 1.0,
    };

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    /// Inverse components (g^11, g^12, g^22).
    pub fn inverse(&self) -> (f64, f64, f64) {
        let d = self.det();
        (self.g22 / d, -self.g12 / d, self.g11 / d)
    }

    /// Quadratic form g(v, v).
    pub fn quad(&self, v: Vec2) -> f64 {
        self.g11 * v.x * v.x + 2.0 * self.g12 * v.x * v.y + self.g22 * v.y * v.y
    }

    /// Metric speed |v|_g.
    pub fn speed(&self, v: Vec2) -> f64 {
        self.quad(v).sqrt()
    }

    /// Largest eigenvalue (for chart-speed bounds).
    pub fn max_eigenvalue(&self) -> f64 {
        let tr = self.g11 + self.g22;
        let disc = ((self.g11 - self.g22) * 0.5).hypot(self.g12);
        0.5 * tr + disc
    }
}

/// Metric components and their first partial derivatives at a point.
#[derive(Clone, Copy, Debug)]
pub struct MetricJet {
    pub g: MetricTensor,
    /// ∂/∂x of (g11, g12, g22).
    pub dx: (f64, f64, f64),
    /// ∂/∂y of (g11, g12, g22).
    pub dy: (f64, f64, f64),
}

/// Christoffel symbols Γ^k_ij with the symmetry Γ^k_ij = Γ^k_ji.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Christoffel {
    pub xxx: f64,
    pub xxy: f64,
    pub xyy: f64,
    pub yxx: f64,
    pub yxy: f64,
    pub yyy: f64,
}

impl Christoffel {
    /// Geodesic acceleration z̈ = −Γ(v, v).
    pub fn accel(&self, v: Vec2) -> Vec2 {
        let (vx, vy) = (v.x, v.y);
        Vec2::new(
            -(self.xxx * vx * vx + 2.0 * self.xxy * vx * vy + self.xyy * vy * vy),
            -(self.yxx * vx * vx + 2.0 * self.yxy * vx * vy + self.yyy * vy * vy),
        )
    }
}

/// Metric sampled on a uniform grid, interpolated bilinearly per component.
#[derive(Clone, Debug)]
pub struct SampledMetric {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major samples, index = iy * nx + ix.
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
}

impl SampledMetric {
    pub fn from_fn(rect: Rect, nx: usize, ny: usize, f: impl Fn(Vec2) -> MetricTensor) -> Self {
        assert!(nx >= 2 && ny >= 2);
        let mut g11 = Vec::with_capacity(nx * ny);
        let mut g12 = Vec::with_capacity(nx * ny);
        let mut g22 = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = rect.y0 + (rect.y1 - rect.y0) * iy as f64 / (ny - 1) as f64;
            for ix in 0..nx {
                let x = rect.x0 + (rect.x1 - rect.x0) * ix as f64 / (nx - 1) as f64;
                let t = f(Vec2::new(x, y));
                g11.push(t.g11);
                g12.push(t.g12);
                g22.push(t.g22);
            }
        }
        SampledMetric {
            rect,
            nx,
            ny,
            g11,
            g12,
            g22,
        }
    }

    /// Bilinear value and in-cell analytic derivatives of one component.
    fn interp(&self, vals: &[f64], z: Vec2) -> (f64, f64, f64) {
        let hx = (self.rect.x1 - self.rect.x0) / (self.nx - 1) as f64;
        let hy = (self.rect.y1 - self.rect.y0) / (self.ny - 1) as f64;
        let fx = ((z.x - self.rect.x0) / hx).clamp(0.0, (self.nx - 1) as f64 - 1e-12);
        let fy = ((z.y - self.rect.y0) / hy).clamp(0.0, (self.ny - 1) as f64 - 1e-12);
        let ix = fx.floor() as usize;
        let iy = fy.floor() as usize;
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let idx = |i: usize, j: usize| vals[j * self.nx + i];
        let (v00, v10, v01, v11) = (
            idx(ix, iy),
            idx(ix + 1, iy),
            idx(ix, iy + 1),
            idx(ix + 1, iy + 1),
        );
        let v = v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty;
        let dvx = ((v10 - v00) * (1.0 - ty) + (v11 - v01) * ty) / hx;
        let dvy = ((v01 - v00) * (1.0 - tx) + (v11 - v10) * tx) / hy;
        (v, dvx, dvy)
    }
}

/// A metric preset on the chart.
#[derive(Clone, Debug)]
pub enum ChartMetric {
    Euclidean,
    /// Conformal metric e^{2κx}(dx² + dy²).
    ConformalExp { kappa: f64 },
    Sampled(SampledMetric),
}

impl ChartMetric {
    pub fn jet(&self, z: Vec2) -> Result<MetricJet> {
        if !z.is_finite() {
            return Err(Error::Integration {
                x: z.x,
                y: z.y,
                what: "metric evaluated at non-finite point".into(),
            });
        }
        let jet = match self {
            ChartMetric::Euclidean => MetricJet {
                g: MetricTensor::EUCLIDEAN,
                dx: (0.0, 0.0, 0.0),
                dy: (0.0, 0.0, 0.0),
            },
            ChartMetric::ConformalExp { kappa } => {
                let e = (2.0 * kappa * z.x).exp();
                let de = 2.0 * kappa * e;
                MetricJet {
                    g: MetricTensor {
                        g11: e,
                        g12: 0.0,
                        g22: e,
                    },
                    dx: (de, 0.0, de),
                    dy: (0.0, 0.0, 0.0),
                }
            }
            ChartMetric::Sampled(m) => {
                let (g11, d11x, d11y) = m.interp(&m.g11, z);
                let (g12, d12x, d12y) = m.interp(&m.g12, z);
                let (g22, d22x, d22y) = m.interp(&m.g22, z);
                MetricJet {
                    g: MetricTensor { g11, g12, g22 },
                    dx: (d11x, d12x, d22x),
                    dy: (d11y, d12y, d22y),
                }
            }
        };
        let finite = jet.g.g11.is_finite()
            && jet.g.g12.is_finite()
            && jet.g.g22.is_finite()
            && jet.g.det() > 0.0;
        if !finite {
            return Err(Error::Integration {
                x: z.x,
                y: z.y,
                what: "metric evaluator produced a non-finite or degenerate tensor".into(),
            });
        }
        Ok(jet)
    }

    pub fn tensor(&self, z: Vec2) -> Result<MetricTensor> {
        Ok(self.jet(z)?.g)
    }

    pub fn christoffel(&self, z: Vec2) -> Result<Christoffel> {
        let jet = self.jet(z)?;
        let (iu, iv, iw) = jet.g.inverse(); // g^11, g^12, g^22
        let (d11x, d12x, d22x) = jet.dx;
        let (d11y, d12y, d22y) = jet.dy;

        // Half-combinations ∂_i g_jl + ∂_j g_il − ∂_l g_ij, l ∈ {x, y}.
        let c_xx_x = 0.5 * d11x; // i=j=x, l=x
        let c_xx_y = d12x - 0.5 * d11y; // i=j=x, l=y
        let c_xy_x = 0.5 * d11y; // i=x, j=y, l=x
        let c_xy_y = 0.5 * d22x; // i=x, j=y, l=y
        let c_yy_x = d12y - 0.5 * d22x; // i=j=y, l=x
        let c_yy_y = 0.5 * d22y; // i=j=y, l=y

        Ok(Christoffel {
            xxx: iu * c_xx_x + iv * c_xx_y,
            xxy: iu * c_xy_x + iv * c_xy_y,
            xyy: iu * c_yy_x + iv * c_yy_y,
            yxx: iv * c_xx_x + iw * c_xx_y,
            yxy: iv * c_xy_x + iw * c_xy_y,
            yyy: iv * c_yy_x + iw * c_yy_y,
        })
    }

    /// Geodesic acceleration −Γ(v, v) at z.
    pub fn accel(&self, z: Vec2, v: Vec2) -> Result<Vec2> {
        Ok(self.christoffel(z)?.accel(v))
    }

    /// Rescale v to unit metric speed.
    pub fn unit(&self, z: Vec2, v: Vec2) -> Result<Vec2> {
        let s = self.tensor(z)?.speed(v);
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::argument("cannot normalize a zero/non-finite vector"));
        }
        Ok(v / s)
    }

    /// Upper bound for chart speed of unit-speed geodesics, sampled on a grid.
    pub fn max_sqrt_eigenvalue(&self, rect: Rect, n: usize) -> Result<f64> {
        let mut m: f64 = 0.0;
        for iy in 0..n {
            let y = rect.y0 + (rect.y1 - rect.y0) * iy as f64 / (n - 1) as f64;
            for ix in 0..n {
                let x = rect.x0 + (rect.x1 - rect.x0) * ix as f64 / (n - 1) as f64;
                m = m.max(self.tensor(Vec2::new(x, y))?.max_eigenvalue());
            }
        }
        Ok(m.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn conformal_christoffels_match_hand_values() {
        // e^{2κx}δ has Γ^x_xx = κ, Γ^x_yy = −κ, Γ^y_xy = κ, rest zero.
        let m = ChartMetric::ConformalExp { kappa: 0.5 };
        let c = m.christoffel(Vec2::new(0.37, -0.8)).unwrap();
        assert_relative_eq!(c.xxx, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.xyy, -0.5, epsilon = 1e-14);
        assert_relative_eq!(c.yxy, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.xxy, 0.0, epsilon = 1e-14);
        assert_relative_eq!(c.yxx, 0.0, epsilon = 1e-14);
        assert_relative_eq!(c.yyy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn euclid_christoffels_vanish() {
        let c = ChartMetric::Euclidean
            .christoffel(Vec2::new(1.0, 2.0))
            .unwrap();
        assert_eq!(c, Christoffel::default());
    }

    #[test]
    fn derivatives_match_central_differences() {
        // Analytic metric derivatives agree with central FD at step 1e-4 to
        // relative 1e-6 on smooth families.
        let m = ChartMetric::ConformalExp { kappa: 0.7 };
        let z = Vec2::new(0.21, 0.4);
        let h = 1e-4;
        let jet = m.jet(z).unwrap();
        let gp = m.tensor(Vec2::new(z.x + h, z.y)).unwrap();
        let gm = m.tensor(Vec2::new(z.x - h, z.y)).unwrap();
        let fd = (gp.g11 - gm.g11) / (2.0 * h);
        assert_relative_eq!(jet.dx.0, fd, max_relative = 1e-6);
    }

    #[test]
    fn sampled_metric_reproduces_bilinear_fields() {
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        // g11 = 1 + x + 2y is exactly bilinear, so sampling is exact.
        let m = SampledMetric::from_fn(rect, 9, 9, |z| MetricTensor {
            g11: 1.0 + z.x + 2.0 * z.y,
            g12: 0.0,
            g22: 1.0,
        });
        let cm = ChartMetric::Sampled(m);
        let z = Vec2::new(0.33, 0.71);
        let jet = cm.jet(z).unwrap();
        assert_relative_eq!(jet.g.g11, 1.0 + z.x + 2.0 * z.y, epsilon = 1e-12);
        assert_relative_eq!(jet.dx.0, 1.0, epsilon = 1e-10);
        assert_relative_eq!(jet.dy.0, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn non_finite_point_is_an_integration_error() {
        let err = ChartMetric::Euclidean.jet(Vec2::new(f64::NAN, 0.0));
        assert!(matches!(err, Err(Error::Integration { .. })));
    }
}
