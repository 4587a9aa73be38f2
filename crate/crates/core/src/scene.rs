//! Ready-made experiment scenes.
//!
//! A scene bundles everything the pipeline stages share: a chart metric, a
//! convex foliation with its trimmed region, the adapted frame, an
//! integration weight, and a default grid of adapted ray launches together
//! with the arc-length quadrature step used to integrate along them.
//!
//! Three presets ship with the toolkit:
//!
//! * [`PresetId::EuclideanDisk`] — flat metric inside the unit circle; the
//!   leaves are concentric circles and the leaf through radius `r` has
//!   convexity margin `1/r`.
//! * [`PresetId::ConformalStrip`] — metric `exp(2κ·z.x)` with `κ < 0` over a
//!   straight boundary; every leaf is a vertical line with margin `−κ` at the
//!   boundary.
//! * [`PresetId::RotatedStrip`] — the same conformal family with the boundary
//!   line tilted, exercising frames that are not axis aligned.
//!
//! Presets certify themselves through [`Scene::validate`], which runs the
//! collar-wide convexity scan and sanity-checks the launch grid. Derived
//! scenes for ladder probes and refinement studies come from
//! [`Scene::with_collar`] and [`Scene::refined`].

use crate::error::{Error, Result};
use crate::geometry::{
    alpha, collar_margin, ChartMetric, FoliationSpec, Frame, MarginReport, Region, Rho,
};
use crate::transform::{SinogramGrid, WeightSpec, OMEGAS};
use crate::vec2::{Axis, Rect, Vec2};

/// Identifier of a shipped scene preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetId {
    EuclideanDisk,
    ConformalStrip,
    RotatedStrip,
}

impl PresetId {
    /// Every shipped preset, in display order.
    pub const ALL: [PresetId; 3] = [
        PresetId::EuclideanDisk,
        PresetId::ConformalStrip,
        PresetId::RotatedStrip,
    ];

    /// Kebab-case name used on the command line and in file headers.
    pub fn name(self) -> &'static str {
        match self {
            PresetId::EuclideanDisk => "euclidean-disk",
            PresetId::ConformalStrip => "conformal-strip",
            PresetId::RotatedStrip => "rotated-strip",
        }
    }
}

impl std::fmt::Display for PresetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                Error::argument(format!(
                    "unknown scene preset {s:?}; expected one of euclidean-disk, \
                     conformal-strip, rotated-strip"
                ))
            })
    }
}

/// A fully wired experiment configuration.
#[derive(Clone, Debug)]
pub struct Scene {
    /// Human-readable tag echoed into reports and file headers.
    pub name: String,
    pub metric: ChartMetric,
    pub region: Region,
    pub frame: Frame,
    pub weight: WeightSpec,
    /// Launch grid of the adapted ray family.
    pub rays: SinogramGrid,
    /// Arc-length quadrature step for ray integrals.
    pub quad_step: f64,
}

impl Scene {
    /// Builds a shipped preset with its default parameters.
    pub fn preset(id: PresetId) -> Result<Scene> {
        match id {
            PresetId::EuclideanDisk => Scene::euclidean_disk(0.3),
            PresetId::ConformalStrip => Scene::conformal_strip(0.5, -0.3),
            PresetId::RotatedStrip => Scene::rotated_strip(0.4, -0.35, 0.45),
        }
    }

    /// Flat metric inside the unit circle, collar depth `c` under the rim.
    ///
    /// Convexity comes from the curvature of the circular leaves, so any
    /// `c` well short of the full radius certifies.
    pub fn euclidean_disk(c: f64) -> Result<Scene> {
        let radius = 1.0;
        if !(c > 0.0 && c <= 0.85 * radius) {
            return Err(Error::argument(format!(
                "disk collar depth must lie in (0, {:.2}], got {c}",
                0.85 * radius
            )));
        }
        let fol = FoliationSpec::new(
            Rho::Disk {
                center: Vec2::ZERO,
                radius,
            },
            Vec2::new(radius, 0.0),
            0.0,
            c,
        )?;
        let pad = radius + 0.15;
        let chart = Rect::new(-pad, pad, -pad, pad);
        fol.validate(chart)?;
        Scene::assemble(
            "euclidean-disk",
            ChartMetric::Euclidean,
            fol,
            chart,
            Axis::new(-0.5, 0.5, 9),
            9,
        )
    }

    /// Conformal metric `exp(2κ·z.x)` over the boundary line `z.x = 0`.
    ///
    /// The leaves are straight vertical lines, so all convexity is carried by
    /// the metric; `κ` must be negative.
    pub fn conformal_strip(c: f64, kappa: f64) -> Result<Scene> {
        let alpha0 = -0.5 * kappa;
        if !(alpha0 > 0.0) {
            return Err(Error::Convexity(format!(
                "conformal strip needs κ < 0 so rays bend back toward the boundary; got κ = {kappa}"
            )));
        }
        if !(c > 0.0) {
            return Err(Error::argument(format!("collar depth must be positive, got {c}")));
        }
        let y_launch = 0.8;
        let y_half = y_launch + 1.2 * (c / alpha0).sqrt() + 0.4;
        let fol = FoliationSpec::new(
            Rho::HalfPlane {
                n: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            Vec2::ZERO,
            0.0,
            c,
        )?;
        let chart = Rect::new(-0.15, c + 0.15, -y_half, y_half);
        Scene::assemble(
            "conformal-strip",
            ChartMetric::ConformalExp { kappa },
            fol,
            chart,
            Axis::new(-y_launch, y_launch, 9),
            9,
        )
    }

    /// The conformal strip with the boundary line tilted by `angle`.
    pub fn rotated_strip(c: f64, kappa: f64, angle: f64) -> Result<Scene> {
        let n = Vec2::new(angle.cos(), angle.sin());
        let alpha0 = -0.5 * kappa * n.x;
        if !(alpha0 > 0.0) {
            return Err(Error::Convexity(format!(
                "rotated strip needs κ·cos(angle) < 0, got κ = {kappa}, angle = {angle}"
            )));
        }
        if !(c > 0.0) {
            return Err(Error::argument(format!("collar depth must be positive, got {c}")));
        }
        let y_launch = 0.7;
        let y_max = y_launch + 1.2 * (c / alpha0).sqrt() + 0.4;
        // Bounding box of the frame patch {q + n·(c−x) + n⊥·y} plus padding.
        let ex = c * n.x.abs() + y_max * n.y.abs() + 0.25;
        let ey = c * n.y.abs() + y_max * n.x.abs() + 0.25;
        let fol = FoliationSpec::new(Rho::HalfPlane { n, offset: 0.0 }, Vec2::ZERO, 0.0, c)?;
        let chart = Rect::new(-ex, ex, -ey, ey);
        Scene::assemble(
            "rotated-strip",
            ChartMetric::ConformalExp { kappa },
            fol,
            chart,
            Axis::new(-y_launch, y_launch, 7),
            7,
        )
    }

    fn assemble(
        name: &str,
        metric: ChartMetric,
        fol: FoliationSpec,
        chart: Rect,
        y_axis: Axis,
        n_lambda: usize,
    ) -> Result<Scene> {
        let frame = Frame::for_foliation(&fol)?;
        let region = Region::new(fol, chart);
        let c = fol.c;
        // Smallest leaf-tangent curvature over the launch band, in the ray
        // normalization; it caps the slope axis so that no ray dives more
        // than three tenths of the collar below its launch depth.
        let mut a_min = f64::INFINITY;
        for &x in &[c / 30.0, 0.5 * c, c * (1.0 - 1.0 / 30.0)] {
            for j in 0..y_axis.n {
                for &omega in &OMEGAS {
                    let a = alpha(&metric, &fol, &frame, x, y_axis.node(j), 0.0, omega)?;
                    a_min = a_min.min(a);
                }
            }
        }
        if !(a_min > 0.0) {
            return Err(Error::Convexity(format!(
                "scene {name}: leaf-tangent curvature α = {a_min:.3e} must be positive"
            )));
        }
        let lambda_max = (1.2 * a_min * c).sqrt();
        let rays = SinogramGrid {
            x: Axis::new(c / 30.0, c * (1.0 - 1.0 / 30.0), 15),
            y: y_axis,
            lambda: Axis::symmetric(lambda_max, n_lambda),
        };
        Ok(Scene {
            name: name.to_owned(),
            metric,
            region,
            frame,
            weight: WeightSpec::constant(1.0)?,
            rays,
            quad_step: 2e-3,
        })
    }

    /// The scene's foliation.
    pub fn fol(&self) -> &FoliationSpec {
        &self.region.fol
    }

    /// Collar depth `c` of the scene's foliation.
    pub fn collar_depth(&self) -> f64 {
        self.region.fol.c
    }

    /// Certifies the scene: positive convexity margin across the collar and a
    /// launch grid strictly inside it.
    pub fn validate(&self) -> Result<MarginReport> {
        let report = collar_margin(&self.metric, &self.region.fol, self.region.chart, 9, 17)?;
        if !(report.margin > 0.0) {
            return Err(Error::Convexity(format!(
                "scene {}: collar margin {:.3e} is not positive",
                self.name, report.margin
            )));
        }
        let c = self.collar_depth();
        let rx = &self.rays.x;
        if !(rx.lo > 0.0 && rx.hi < c) {
            return Err(Error::validation(format!(
                "scene {}: launch depths [{:.4}, {:.4}] must lie strictly inside (0, {c:.4})",
                self.name, rx.lo, rx.hi
            )));
        }
        if !(self.quad_step > 0.0) {
            return Err(Error::validation(format!(
                "scene {}: quadrature step must be positive",
                self.name
            )));
        }
        if (self.frame.depth_c() - c).abs() > 1e-12 * c.max(1.0) {
            return Err(Error::validation(format!(
                "scene {}: frame depth {:.6} does not match collar depth {c:.6}",
                self.name,
                self.frame.depth_c()
            )));
        }
        Ok(report)
    }

    /// Rebuilds the scene over a shallower collar of depth `c2`, rescaling
    /// the launch grid proportionally (`x` linearly, slopes by `√(c2/c)` so
    /// the relative dive depth is preserved).
    pub fn with_collar(&self, c2: f64) -> Result<Scene> {
        let c = self.collar_depth();
        if !(c2 > 0.0 && c2 <= c * (1.0 + 1e-12)) {
            return Err(Error::argument(format!(
                "collar depth {c2} lies outside the certified range (0, {c}]"
            )));
        }
        let base = &self.region.fol;
        let fol = FoliationSpec::new(base.rho, base.p, base.eps, c2)?;
        let frame = Frame::for_foliation(&fol)?;
        let lin = c2 / c;
        let sq = lin.sqrt();
        let rays = SinogramGrid {
            x: Axis::new(self.rays.x.lo * lin, self.rays.x.hi * lin, self.rays.x.n),
            y: self.rays.y,
            lambda: Axis::new(
                self.rays.lambda.lo * sq,
                self.rays.lambda.hi * sq,
                self.rays.lambda.n,
            ),
        };
        Ok(Scene {
            name: format!("{}@c={c2}", self.name),
            metric: self.metric.clone(),
            region: Region::new(fol, self.region.chart),
            frame,
            weight: self.weight.clone(),
            rays,
            quad_step: self.quad_step,
        })
    }

    /// Depth-direction refinement: doubles the launch-depth and slope axes
    /// and halves the quadrature step. The leaf axis is kept as is — the
    /// unknowns of the adapted problem are leaf-constant, so refining it only
    /// replicates rays on the same depth schedule.
    pub fn refined(&self) -> Scene {
        let mut out = self.clone();
        out.name = format!("{}+refined", self.name);
        out.rays = SinogramGrid {
            x: self.rays.x.refined(),
            y: self.rays.y,
            lambda: self.rays.lambda.refined(),
        };
        out.quad_step = 0.5 * self.quad_step;
        out
    }
}
