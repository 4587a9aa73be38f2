//! Empirical injectivity and stability witness.
//!
//! The inversion rests on a weighted stability estimate: the profile norm is
//! controlled by a constant times the order-one weighted norm of its
//! transform. This module samples that ratio over a seeded family of random
//! multi-bump phantoms, reports its maximum and median, and raises an
//! injectivity alarm if any nonzero phantom produces a numerically zero
//! transform. Because both norms are absolutely one-homogeneous, the ratio
//! is invariant under scaling each phantom — a property the tests pin — and
//! the phantom family is regenerated from parameters, so the same family can
//! be evaluated on a refined grid to measure discretization drift.

use crate::error::{Error, Result};
use crate::inversion::norms::{profile_weighted_norm, sinogram_weighted_norm};
use crate::inversion::recon::{guarded_ratio, restricted_forward, InversionConfig};
use crate::scene::Scene;
use crate::transform::AdaptedProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Transform-to-profile norm threshold below which injectivity is declared
/// violated.
pub const INJECTIVITY_FLOOR: f64 = 1e-10;

/// Smallest admissible phantom family.
pub const MIN_PHANTOMS: usize = 20;

/// Parameters of one random phantom: a sum of Gaussian bumps in depth,
/// stored as `(amplitude, center x̃, width)`. Keeping parameters rather than
/// samples lets the same phantom be evaluated at any resolution.
#[derive(Clone, Debug)]
pub struct PhantomSpec {
    pub bumps: Vec<(f64, f64, f64)>,
}

impl PhantomSpec {
    /// Draws a phantom for a collar of depth `c`: two to four bumps with
    /// centers kept a bump-width clear of both collar ends.
    pub fn random<R: Rng>(rng: &mut R, c: f64) -> PhantomSpec {
        let n_bumps = rng.random_range(2..=4);
        let bumps = (0..n_bumps)
            .map(|_| {
                let amp = rng.random_range(0.3..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let center = -c * rng.random_range(0.12..0.88);
                let width = c * rng.random_range(0.06..0.18);
                (amp, center, width)
            })
            .collect();
        PhantomSpec { bumps }
    }

    /// Evaluates the phantom at adapted depth `s`.
    pub fn eval(&self, s: f64) -> f64 {
        self.bumps
            .iter()
            .map(|&(a, m, w)| {
                let t = (s - m) / w;
                a * (-0.5 * t * t).exp()
            })
            .sum()
    }

    /// Samples the phantom on `n` uniform depth nodes.
    pub fn sample(&self, c: f64, n: usize) -> Result<AdaptedProfile> {
        AdaptedProfile::from_fn(c, n, |s| self.eval(s))
    }
}

/// Ratio measurement of one phantom.
#[derive(Clone, Copy, Debug)]
pub struct StabilityEntry {
    pub index: usize,
    /// Weighted order-zero profile norm.
    pub f_norm: f64,
    /// Weighted order-one sinogram norm of its transform.
    pub data_norm: f64,
    /// `f_norm / data_norm` — the empirical stability constant.
    pub ratio: f64,
}

/// Family-level stability summary.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub entries: Vec<StabilityEntry>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Depth-weight exponent the norms carried.
    pub f_const: f64,
}

impl StabilityReport {
    /// Header of [`StabilityReport::csv`].
    pub fn csv_header() -> &'static str {
        "index,f_norm,data_norm,ratio"
    }

    /// CSV table, one row per phantom.
    pub fn csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e}\n",
                e.index, e.f_norm, e.data_norm, e.ratio
            ));
        }
        out
    }
}

/// Draws the phantom family for a given seed. Exposed so refinement studies
/// can evaluate the identical family on finer grids.
pub fn phantom_family(seed: u64, c: f64, count: usize) -> Vec<PhantomSpec> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count).map(|_| PhantomSpec::random(&mut rng, c)).collect()
}

/// Measures one profile's stability ratio, raising the injectivity alarm if
/// its transform norm vanishes relative to its profile norm.
pub fn measure_profile(
    scene: &Scene,
    cfg: &InversionConfig,
    profile: &AdaptedProfile,
    index: usize,
) -> Result<StabilityEntry> {
    let c = scene.collar_depth();
    let data = restricted_forward(profile, scene)?;
    let f_norm = profile_weighted_norm(profile.values(), c, cfg.f_const, 0);
    let data_norm = sinogram_weighted_norm(&data, cfg.f_const, 1);
    if data_norm < INJECTIVITY_FLOOR * f_norm {
        return Err(Error::Injectivity(format!(
            "phantom {index} of scene {}: transform norm {data_norm:.3e} fell below \
             {INJECTIVITY_FLOOR:.0e} × profile norm {f_norm:.3e}",
            scene.name
        )));
    }
    Ok(StabilityEntry {
        index,
        f_norm,
        data_norm,
        ratio: guarded_ratio(f_norm, data_norm),
    })
}

fn report_for_family(
    scene: &Scene,
    cfg: &InversionConfig,
    family: &[PhantomSpec],
) -> Result<StabilityReport> {
    let c = scene.collar_depth();
    let mut entries = Vec::with_capacity(family.len());
    for (index, spec) in family.iter().enumerate() {
        let profile = spec.sample(c, cfg.profile_n)?;
        entries.push(measure_profile(scene, cfg, &profile, index)?);
    }
    let mut ratios: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let max_ratio = *ratios.last().expect("non-empty family");
    let median_ratio = ratios[ratios.len() / 2];
    Ok(StabilityReport {
        entries,
        max_ratio,
        median_ratio,
        f_const: cfg.f_const,
    })
}

/// Measures the empirical stability ratio over `count ≥ 20` seeded random
/// phantoms. Raises an injectivity alarm if any phantom's transform norm
/// vanishes relative to its profile norm.
pub fn stability_report(
    scene: &Scene,
    cfg: &InversionConfig,
    count: usize,
    seed: u64,
) -> Result<StabilityReport> {
    cfg.validate()?;
    if count < MIN_PHANTOMS {
        return Err(Error::argument(format!(
            "stability families need at least {MIN_PHANTOMS} phantoms, got {count}"
        )));
    }
    let family = phantom_family(seed, scene.collar_depth(), count);
    report_for_family(scene, cfg, &family)
}

/// Runs [`stability_report`] on the scene and on its depth-refined version
/// with a matching profile refinement, evaluating the identical phantom
/// family on both. Returns both reports and the relative drift of the
/// maximum ratio.
pub fn stability_drift(
    scene: &Scene,
    cfg: &InversionConfig,
    count: usize,
    seed: u64,
) -> Result<(StabilityReport, StabilityReport, f64)> {
    cfg.validate()?;
    if count < MIN_PHANTOMS {
        return Err(Error::argument(format!(
            "stability families need at least {MIN_PHANTOMS} phantoms, got {count}"
        )));
    }
    let family = phantom_family(seed, scene.collar_depth(), count);
    let coarse = report_for_family(scene, cfg, &family)?;
    let fine_scene = scene.refined();
    let fine_cfg = InversionConfig {
        profile_n: 2 * cfg.profile_n - 1,
        ..cfg.clone()
    };
    let fine = report_for_family(&fine_scene, &fine_cfg, &family)?;
    let drift = (fine.max_ratio - coarse.max_ratio).abs() / coarse.max_ratio;
    Ok((coarse, fine, drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::norms::{profile_weighted_norm, sinogram_weighted_norm};
    use crate::scene::PresetId;

    fn small_scene() -> Scene {
        let mut scene = Scene::preset(PresetId::EuclideanDisk).unwrap();
        scene.rays.x.n = 9;
        scene.rays.y.n = 5;
        scene.rays.lambda.n = 5;
        scene.quad_step = 4e-3;
        scene
    }

    fn cfg() -> InversionConfig {
        InversionConfig {
            profile_n: 33,
            ..InversionConfig::default()
        }
    }

    #[test]
    fn family_report_is_finite_and_deterministic() {
        let scene = small_scene();
        let a = stability_report(&scene, &cfg(), 20, 7).unwrap();
        let b = stability_report(&scene, &cfg(), 20, 7).unwrap();
        assert_eq!(a.entries.len(), 20);
        assert!(a.max_ratio.is_finite() && a.max_ratio > 0.0);
        assert!(a.median_ratio <= a.max_ratio);
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.ratio, y.ratio);
        }
        let csv = a.csv();
        assert_eq!(csv.lines().count(), 21);
    }

    #[test]
    fn scaled_copies_share_one_ratio() {
        let scene = small_scene();
        let c = scene.collar_depth();
        let cfg = cfg();
        let spec = phantom_family(3, c, 1).remove(0);
        let base = spec.sample(c, cfg.profile_n).unwrap();
        let mut ratios = Vec::new();
        for scale in [1.0, 2.5, 117.0] {
            let scaled = AdaptedProfile::from_samples(
                c,
                base.values().iter().map(|v| v * scale).collect(),
            )
            .unwrap();
            let data = restricted_forward(&scaled, &scene).unwrap();
            let f = profile_weighted_norm(scaled.values(), c, cfg.f_const, 0);
            let d = sinogram_weighted_norm(&data, cfg.f_const, 1);
            ratios.push(f / d);
        }
        for r in &ratios[1..] {
            assert!(
                (r - ratios[0]).abs() <= 1e-10 * ratios[0],
                "ratios diverged: {ratios:?}"
            );
        }
    }

    #[test]
    fn deep_phantoms_are_harder_than_shallow_ones() {
        // A bump hiding near the deep edge is probed by far fewer rays than
        // the same bump near the boundary, so its backward constant is
        // larger — but still finite. Coverage is the effect under test, so
        // both norms are taken at order zero: the derivative terms of the
        // order-one data norm respond to how sharply the data varies across
        // neighbouring rays, not to how many rays see the bump at all.
        let scene = small_scene();
        let c = scene.collar_depth();
        let cfg = cfg();
        let ratio_of = |center: f64| -> f64 {
            let spec = PhantomSpec {
                bumps: vec![(1.0, center, 0.06 * c)],
            };
            let p = spec.sample(c, cfg.profile_n).unwrap();
            let data = restricted_forward(&p, &scene).unwrap();
            let f = profile_weighted_norm(p.values(), c, cfg.f_const, 0);
            let d = sinogram_weighted_norm(&data, cfg.f_const, 0);
            f / d
        };
        let deep = ratio_of(-0.85 * c);
        let shallow = ratio_of(-0.15 * c);
        assert!(deep.is_finite() && shallow.is_finite());
        assert!(
            deep > 1.2 * shallow,
            "deep ratio {deep} should clearly exceed shallow ratio {shallow}"
        );
    }

    #[test]
    fn small_families_are_rejected() {
        let scene = small_scene();
        assert!(stability_report(&scene, &cfg(), 5, 1).is_err());
    }

    #[test]
    fn invisible_phantom_raises_the_injectivity_alarm() {
        // A launch band confined to the shallow half of the collar with
        // nearly tangent slopes cannot see the deepest nodes at all: their
        // interpolation stencils never meet any ray sample, so the transform
        // of a phantom supported there is exactly zero.
        let mut scene = small_scene();
        let c = scene.collar_depth();
        scene.rays.x = crate::vec2::Axis::new(0.55 * c, 0.95 * c, 7);
        scene.rays.lambda = crate::vec2::Axis::symmetric(0.02, 3);
        let cfg = cfg();
        let mut values = vec![0.0; cfg.profile_n];
        values[0] = 1.0;
        values[1] = 0.5;
        let hidden = AdaptedProfile::from_samples(c, values).unwrap();
        match measure_profile(&scene, &cfg, &hidden, 0) {
            Err(Error::Injectivity(msg)) => {
                assert!(msg.contains("transform norm"), "{msg}");
            }
            other => panic!("expected the injectivity alarm, got {other:?}"),
        }
    }

    #[test]
    fn refinement_keeps_the_ratio_stable() {
        let scene = small_scene();
        let (coarse, fine, drift) = stability_drift(&scene, &cfg(), 20, 11).unwrap();
        assert!(coarse.max_ratio.is_finite() && fine.max_ratio.is_finite());
        assert!(drift <= 0.3, "max-ratio drift {drift} exceeds 30%");
    }
}
