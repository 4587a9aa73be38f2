//! Contraction probe: conditioning of the restricted operator along a
//! ladder of collar depths.
//!
//! Layer stripping converges when each shallower sub-collar problem stays
//! uniformly invertible. The probe rebuilds the scene at every ladder depth,
//! assembles the small Gram matrix of the weighted forward map on the
//! profile basis, and estimates its extreme singular values by thirty power
//! and inverse-power iterations. Entries whose iterations fail to settle are
//! flagged rather than trusted.

use crate::error::{Error, Result};
use crate::inversion::map::ProfileRayMap;
use crate::inversion::recon::InversionConfig;
use crate::inversion::spectral::{
    assemble_gram, power_eig, smallest_eig, PROBE_ITERS,
};
use crate::scene::Scene;

/// One ladder entry of the probe.
#[derive(Clone, Copy, Debug)]
pub struct ProbeEntry {
    /// Collar depth the scene was rebuilt with.
    pub c: f64,
    /// Smallest singular value of the weighted restricted operator.
    pub sigma_min: f64,
    /// Largest singular value.
    pub sigma_max: f64,
    /// `sigma_max / sigma_min` (infinite when the bottom estimate is zero).
    pub condition: f64,
    /// Whether both eigen-iterations settled within their budget.
    pub converged: bool,
}

/// CSV header matching [`probe_csv`].
pub fn probe_csv_header() -> &'static str {
    "c,sigma_min,sigma_max,condition,converged"
}

/// CSV table of a probe run.
pub fn probe_csv(entries: &[ProbeEntry]) -> String {
    let mut out = String::from(probe_csv_header());
    out.push('\n');
    for e in entries {
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            e.c, e.sigma_min, e.sigma_max, e.condition, e.converged
        ));
    }
    out
}

/// Estimates the extreme singular values of the weighted restricted forward
/// operator at every depth of `ladder`, shallowest scenes derived from
/// `scene` through [`Scene::with_collar`].
///
/// The ladder must be strictly decreasing, positive, and must stay within
/// the scene's certified collar; otherwise the precondition is reported as
/// an argument error before any tracing happens.
pub fn contraction_probe(
    scene: &Scene,
    ladder: &[f64],
    cfg: &InversionConfig,
) -> Result<Vec<ProbeEntry>> {
    cfg.validate()?;
    if ladder.is_empty() {
        return Err(Error::argument("contraction ladder must not be empty"));
    }
    for w in ladder.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::argument(format!(
                "contraction ladder must be strictly decreasing, got {} before {}",
                w[0], w[1]
            )));
        }
    }
    let c = scene.collar_depth();
    if ladder[0] > c * (1.0 + 1e-12) {
        return Err(Error::argument(format!(
            "ladder depth {} exceeds the certified collar depth {c}",
            ladder[0]
        )));
    }
    if !(*ladder.last().expect("non-empty") > 0.0) {
        return Err(Error::argument("contraction ladder entries must be positive"));
    }

    let mut out = Vec::with_capacity(ladder.len());
    for &depth in ladder {
        let sub = scene.with_collar(depth)?;
        sub.validate()?;
        let map = ProfileRayMap::build(
            &sub.metric,
            &sub.region,
            &sub.frame,
            &sub.weight,
            &sub.rays,
            sub.quad_step,
            cfg.profile_n,
        )?;
        let engine = crate::inversion::recon::SolveEngine::new(&map, cfg.f_const);
        let rows: Vec<usize> = (0..map.n_rays()).collect();
        let n = map.n_nodes;
        let apply = |u: &[f64]| -> Vec<f64> {
            let vals = map.forward_rows(&rows, u);
            vals.iter()
                .enumerate()
                .map(|(k, v)| engine.ray_w[k] * v)
                .collect()
        };
        let applyt = |r: &[f64]| -> Vec<f64> {
            let weighted: Vec<f64> = r
                .iter()
                .enumerate()
                .map(|(k, v)| engine.ray_w[k] * v)
                .collect();
            map.adjoint_rows(&rows, &weighted)
        };
        let gram = assemble_gram(apply, applyt, n);
        let (top, ok_top) = power_eig(&gram, n, PROBE_ITERS, 0xc0ffee);
        let (bottom, ok_bottom) = smallest_eig(&gram, n, PROBE_ITERS, 0xc0ffee ^ 1);
        let sigma_max = top.max(0.0).sqrt();
        let sigma_min = bottom.max(0.0).sqrt();
        out.push(ProbeEntry {
            c: depth,
            sigma_min,
            sigma_max,
            condition: if sigma_min > 0.0 {
                sigma_max / sigma_min
            } else {
                f64::INFINITY
            },
            converged: ok_top && ok_bottom,
        });
    }
    Ok(out)
}
