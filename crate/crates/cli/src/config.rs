//! Experiment configuration: one JSON document, overridable from the
//! command line with `--key=value` (dotted paths), resolved against a
//! scene preset.
//!
//! Every run echoes the effective configuration into all of its outputs, so
//! a result file always names the experiment that produced it. The echo is
//! the compact JSON serialization of [`ExperimentConfig`], whose field order
//! is fixed — identical configurations echo identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use foliated_xray::error::{Error, Result};
use foliated_xray::normal_op::CutoffChi;
use foliated_xray::inversion::InversionConfig;
use foliated_xray::scene::{PresetId, Scene};

/// Launch-grid adjustments applied on top of the preset's ray family.
/// `None` keeps the preset value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RayGridCfg {
    pub x_n: Option<usize>,
    pub y_n: Option<usize>,
    pub lambda_n: Option<usize>,
    /// Launch-depth band, in depth units above the deep edge.
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    /// Half-width of the symmetric slope axis.
    pub lambda_max: Option<f64>,
    /// Arc-length quadrature step along rays.
    pub quad_step: Option<f64>,
}

/// Slope cutoff of the backprojection: `compact` (polynomial bump) or
/// `gaussian`. `scale` multiplies the cutoff amplitude — the operator and
/// its symbol are linear in the cutoff, so `scale = 0` switches the
/// microlocalization off entirely.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiCfg {
    pub family: String,
    /// Width ν of the gaussian family; `None` picks α/F at the base point.
    pub nu: Option<f64>,
    /// Support radius of the compact family.
    pub radius: f64,
    /// Amplitude factor applied to the cutoff.
    pub scale: f64,
    /// Asserted cone-ellipticity constant certified by `symbol-check`.
    pub claim: f64,
}

impl Default for ChiCfg {
    fn default() -> Self {
        ChiCfg {
            family: "gaussian".into(),
            nu: None,
            radius: 1.0,
            scale: 1.0,
            claim: 0.1,
        }
    }
}

impl ChiCfg {
    /// Build the cutoff, resolving the gaussian default width from α/F.
    pub fn build(&self, alpha: f64, f_const: f64) -> Result<CutoffChi> {
        match self.family.as_str() {
            "gaussian" => CutoffChi::gaussian(self.nu.unwrap_or(alpha / f_const)),
            "compact" => CutoffChi::bump(self.radius),
            other => Err(Error::argument(format!(
                "unknown cutoff family '{other}' (expected gaussian or compact)"
            ))),
        }
    }
}

/// Integration weight along rays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightCfg {
    pub kind: String,
    pub value: f64,
}

impl Default for WeightCfg {
    fn default() -> Self {
        WeightCfg {
            kind: "constant".into(),
            value: 1.0,
        }
    }
}

/// Synthetic unknown: a depth profile picked by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomCfg {
    /// gaussian-bump | piecewise-linear | step | deep-support.
    pub kind: String,
    pub amplitude: f64,
    /// Bump center / step location in adapted depth; `None` → −0.45·c.
    pub center: Option<f64>,
    /// Bump width / mollification width; `None` → 0.16·c.
    pub width: Option<f64>,
    /// Deep-side value of the step.
    pub value_lo: f64,
    /// Shallow-side value of the step.
    pub value_hi: f64,
    /// Knots of the piecewise-linear kind; `None` → a mid-collar tent.
    pub knots: Option<Vec<(f64, f64)>>,
}

impl Default for PhantomCfg {
    fn default() -> Self {
        PhantomCfg {
            kind: "gaussian-bump".into(),
            amplitude: 1.0,
            center: None,
            width: None,
            value_lo: 0.0,
            value_hi: 1.0,
            knots: None,
        }
    }
}

/// Additive measurement noise, relative to the data RMS.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCfg {
    pub rel_sigma: f64,
}

/// Least-squares solver knobs (see the inversion module's config).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverCfg {
    pub mu: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    /// Depth-weight exponent of the fidelity and report norms.
    pub f_const: f64,
}

impl Default for SolverCfg {
    fn default() -> Self {
        let d = InversionConfig::default();
        SolverCfg {
            mu: d.mu,
            max_iters: d.max_iters,
            tol: d.tol,
            f_const: d.f_const,
        }
    }
}

/// Evaluation window and quadrature of the `normal-op` command. `None`
/// bounds are derived from the scene (middle of the collar and chart).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalCfg {
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub x_n: usize,
    pub y_lo: Option<f64>,
    pub y_hi: Option<f64>,
    pub y_n: usize,
    pub lambda_step: f64,
    pub t_step: f64,
    /// Side length of the coarse subgrid where the two operator forms are
    /// cross-checked.
    pub consistency_n: usize,
}

impl Default for NormalCfg {
    fn default() -> Self {
        NormalCfg {
            x_lo: None,
            x_hi: None,
            x_n: 9,
            y_lo: None,
            y_hi: None,
            y_n: 9,
            lambda_step: 0.05,
            t_step: 2e-3,
            consistency_n: 3,
        }
    }
}

/// Direction/scale sampling of the `symbol-check` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolCfg {
    /// Boundary base point; `None` → middle of the launch band.
    pub base_y: Option<f64>,
    /// Dyadic |ζ| sweep.
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub n_zeta: usize,
    /// Directions spread over the full circle; off-cone ones are listed as
    /// `not-certified`.
    pub n_angles: usize,
    /// Relative tolerance of the adaptive symbol quadrature.
    pub rel_tol: f64,
}

impl Default for SymbolCfg {
    fn default() -> Self {
        SymbolCfg {
            base_y: None,
            zeta_lo: 4.0,
            zeta_hi: 64.0,
            n_zeta: 5,
            n_angles: 16,
            rel_tol: 1e-5,
        }
    }
}

/// Family size of the `stability` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityCfg {
    pub count: usize,
    /// Also re-measure the family on a refined scene and report the drift.
    pub drift: bool,
}

impl Default for StabilityCfg {
    fn default() -> Self {
        StabilityCfg {
            count: 24,
            drift: false,
        }
    }
}

/// The whole experiment: scene, operator knobs, phantom, solver, seeds.
///
/// Serialized field order is the declaration order below; the canonical
/// echo [`ExperimentConfig::echo`] relies on it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Scene preset name (euclidean-disk | conformal-strip | rotated-strip).
    pub scene: String,
    /// Collar depth to rescale the preset to (must not exceed the preset's).
    pub collar: Option<f64>,
    /// Conjugation strength F of the normal operator and symbols.
    pub f_const: f64,
    /// Seed of every randomized ingredient (noise, stability families).
    pub seed: u64,
    /// Depth nodes of recovered/synthesized profiles.
    pub profile_n: usize,
    /// Slab interfaces for layer stripping and probes; `None` → thirds of
    /// the collar.
    pub ladder: Option<Vec<f64>>,
    /// Sinogram file to invert; `None` synthesizes data from the phantom.
    pub data: Option<String>,
    pub rays: RayGridCfg,
    pub weight: WeightCfg,
    pub chi: ChiCfg,
    pub phantom: PhantomCfg,
    pub noise: NoiseCfg,
    pub solver: SolverCfg,
    pub normal: NormalCfg,
    pub symbol: SymbolCfg,
    pub stability: StabilityCfg,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scene: "euclidean-disk".into(),
            collar: None,
            f_const: 1.0,
            seed: 0,
            profile_n: 48,
            ladder: None,
            data: None,
            rays: RayGridCfg::default(),
            weight: WeightCfg::default(),
            chi: ChiCfg::default(),
            phantom: PhantomCfg::default(),
            noise: NoiseCfg::default(),
            solver: SolverCfg::default(),
            normal: NormalCfg::default(),
            symbol: SymbolCfg::default(),
            stability: StabilityCfg::default(),
        }
    }
}

impl ExperimentConfig {
    /// Load from an optional JSON file, then apply `--key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Io(std::io::Error::new(
                        e.kind(),
                        format!("{}: {e}", p.display()),
                    ))
                })?;
                serde_json::from_str(&text).map_err(|e| Error::HeaderParse {
                    path: p.to_path_buf(),
                    line: e.line(),
                    column: e.column(),
                    msg: e.to_string(),
                })?
            }
            None => serde_json::to_value(ExperimentConfig::default())
                .expect("default config serializes"),
        };
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        serde_json::from_value(value)
            .map_err(|e| Error::argument(format!("invalid configuration: {e}")))
    }

    /// Canonical one-line echo embedded in every output header.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Resolve the scene: preset, optional collar rescale, grid overrides,
    /// then the full convexity validation.
    pub fn build_scene(&self) -> Result<Scene> {
        if self.weight.kind != "constant" {
            return Err(Error::argument(format!(
                "unknown weight kind '{}' (expected constant)",
                self.weight.kind
            )));
        }
        let id: PresetId = self.scene.parse()?;
        let mut scene = Scene::preset(id)?;
        if let Some(c2) = self.collar {
            scene = scene.with_collar(c2)?;
        }
        if self.weight.value != 1.0 {
            scene.weight = foliated_xray::transform::WeightSpec::constant(self.weight.value)?;
        }
        let r = &self.rays;
        if let Some(n) = r.x_n {
            scene.rays.x.n = n;
        }
        if let Some(n) = r.y_n {
            scene.rays.y.n = n;
        }
        if let Some(n) = r.lambda_n {
            scene.rays.lambda.n = n;
        }
        if let Some(lo) = r.x_lo {
            scene.rays.x.lo = lo;
        }
        if let Some(hi) = r.x_hi {
            scene.rays.x.hi = hi;
        }
        if let Some(m) = r.lambda_max {
            scene.rays.lambda = foliated_xray::vec2::Axis::symmetric(m, scene.rays.lambda.n);
        }
        if let Some(h) = r.quad_step {
            scene.quad_step = h;
        }
        scene.validate()?;
        Ok(scene)
    }

    /// Slab interfaces: the configured ladder, or thirds of the collar.
    pub fn resolve_ladder(&self, collar: f64) -> Vec<f64> {
        self.ladder
            .clone()
            .unwrap_or_else(|| vec![collar, 2.0 * collar / 3.0, collar / 3.0])
    }

    /// The inversion module's config with this experiment's knobs filled in.
    pub fn inversion_config(&self, collar: f64) -> InversionConfig {
        InversionConfig {
            mu: self.solver.mu,
            max_iters: self.solver.max_iters,
            tol: self.solver.tol,
            c_ladder: self.resolve_ladder(collar),
            f_const: self.solver.f_const,
            profile_n: self.profile_n,
        }
    }
}

/// Apply one `--key=value` override onto the JSON tree. Keys are dotted
/// paths into [`ExperimentConfig`]; values parse as JSON when they can and
/// fall back to strings (`--phantom.kind=step` needs no quoting).
fn apply_override(root: &mut serde_json::Value, ov: &str) -> Result<()> {
    let body = ov.strip_prefix("--").ok_or_else(|| {
        Error::argument(format!(
            "override '{ov}' must look like --key=value (dotted config path)"
        ))
    })?;
    let (key, raw) = body.split_once('=').ok_or_else(|| {
        Error::argument(format!("override '--{body}' is missing '=value'"))
    })?;
    if key.is_empty() {
        return Err(Error::argument(format!("override '{ov}' has an empty key")));
    }
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let mut segments = key.split('.').peekable();
    while let Some(seg) = segments.next() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::argument(format!("config path '{key}' descends into a non-object"))
        })?;
        let entry = obj
            .entry(seg.to_string())
            .or_insert(serde_json::Value::Null);
        if segments.peek().is_none() {
            *entry = parsed;
            break;
        }
        if !entry.is_object() {
            *entry = serde_json::Value::Object(serde_json::Map::new());
        }
        node = entry;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_echo_is_stable() {
        let cfg = ExperimentConfig::default();
        let echo = cfg.echo();
        let back: ExperimentConfig = serde_json::from_str(&echo).unwrap();
        assert_eq!(back.echo(), echo);
    }

    #[test]
    fn overrides_reach_nested_fields_and_reject_junk() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                "--phantom.kind=step".into(),
                "--solver.mu=1e-4".into(),
                "--rays.x_n=7".into(),
                "--ladder=[0.3,0.15]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.phantom.kind, "step");
        assert_eq!(cfg.solver.mu, Some(1e-4));
        assert_eq!(cfg.rays.x_n, Some(7));
        assert_eq!(cfg.ladder.as_deref(), Some(&[0.3, 0.15][..]));

        assert!(ExperimentConfig::load(None, &["--no.such.key=1".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["seed=3".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["--seed".into()]).is_err());
    }

    #[test]
    fn scene_overrides_apply_before_validation() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                "--rays.x_n=7".into(),
                "--rays.y_n=5".into(),
                "--rays.lambda_n=5".into(),
                "--rays.quad_step=0.004".into(),
            ],
        )
        .unwrap();
        let scene = cfg.build_scene().unwrap();
        assert_eq!(scene.rays.x.n, 7);
        assert_eq!(scene.rays.lambda.n, 5);
        assert_eq!(scene.quad_step, 0.004);

        let bad = ExperimentConfig::load(None, &["--scene=moebius".into()]).unwrap();
        assert!(bad.build_scene().is_err());
    }
}
