//! Layer-stripping reconstruction over a ladder of collar depths.
//!
//! The global problem is solved shallow-to-deep. The ladder of collar depths
//! splits the collar into slabs; each ray is assigned to the slab containing
//! its deepest point, so a slab's rays see only that slab and the already
//! recovered material above it. One sweep then alternates: subtract the
//! forward contribution of everything recovered so far, solve the follow-on
//! local problem for the slab's own nodes, and move one slab deeper. All
//! slabs share one global node basis and one cached ray map, which makes the
//! subtraction exact (the forward map is linear in the nodal values).

use crate::error::{Error, Result};
use crate::inversion::map::ProfileRayMap;
use crate::inversion::norms::{profile_weighted_norm, sinogram_weighted_norm};
use crate::inversion::recon::{check_grid, guarded_ratio, InversionConfig, ReconReport, SolveEngine};
use crate::inversion::solver::SolveOptions;
use crate::scene::Scene;
use crate::transform::{AdaptedProfile, Sinogram};

/// Diagnostics of one slab of the sweep.
#[derive(Clone, Debug)]
pub struct SlabReport {
    /// Slab index, 0 = shallowest.
    pub slab: usize,
    /// Adapted-depth bounds of the slab (`lo < hi ≤ 0`).
    pub x_tilde_lo: f64,
    pub x_tilde_hi: f64,
    /// Number of rays whose deepest point lies in this slab.
    pub rays: usize,
    /// Global node indices solved in this slab.
    pub nodes: std::ops::Range<usize>,
    /// Solve diagnostics of the slab's local problem.
    pub recon: ReconReport,
}

impl SlabReport {
    /// Header of [`SlabReport::csv_row`].
    pub fn csv_header() -> &'static str {
        "slab,x_tilde_lo,x_tilde_hi,rays,node_lo,node_hi,iterations,converged,stagnated,final_residual,stability_ratio,condition"
    }

    /// One-line CSV summary.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{},{},{},{},{},{},{:.12e},{:.12e},{:.12e}",
            self.slab,
            self.x_tilde_lo,
            self.x_tilde_hi,
            self.rays,
            self.nodes.start,
            self.nodes.end,
            self.recon.iterations(),
            self.recon.converged,
            self.recon.stagnated,
            self.recon.final_residual(),
            self.recon.stability_ratio,
            self.recon.condition,
        )
    }
}

/// Slab bounds from a ladder of collar depths: `bounds[j]` is the depth of
/// the interface above slab `j`, with `bounds[0] = 0` (the physical
/// boundary) and `bounds.last() = c` (the deep edge).
fn slab_bounds(scene: &Scene, cfg: &InversionConfig) -> Result<Vec<f64>> {
    let c = scene.collar_depth();
    let ladder = &cfg.c_ladder;
    if (ladder[0] - c).abs() > 1e-9 * c.max(1.0) {
        return Err(Error::argument(format!(
            "the collar ladder must start at the scene's collar depth {c}, got {}",
            ladder[0]
        )));
    }
    let mut bounds = vec![0.0];
    bounds.extend(ladder.iter().rev());
    Ok(bounds)
}

/// Global reconstruction by layer stripping.
///
/// `cfg.c_ladder` must start at the scene's collar depth; its later entries
/// are the interfaces of the sweep (a single-entry ladder reproduces
/// [`crate::inversion::local_reconstruct`] exactly). Fails with a coverage
/// error naming the first slab that no ray reaches.
pub fn layer_strip(
    data: &Sinogram,
    scene: &Scene,
    cfg: &InversionConfig,
) -> Result<(AdaptedProfile, Vec<SlabReport>)> {
    cfg.validate()?;
    scene.validate()?;
    check_grid(data, scene)?;
    let bounds = slab_bounds(scene, cfg)?;
    let n_slabs = bounds.len() - 1;
    let c = scene.collar_depth();

    let map = ProfileRayMap::build(
        &scene.metric,
        &scene.region,
        &scene.frame,
        &scene.weight,
        &scene.rays,
        scene.quad_step,
        cfg.profile_n,
    )?;
    let engine = SolveEngine::new(&map, cfg.f_const);
    let mu = cfg.effective_mu(data);
    let opt = SolveOptions {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    };

    // Assignment tolerance: rays and nodes sitting numerically on an
    // interface belong to the shallower slab.
    let pad = 1e-9 * c;
    let slab_of = |x_tilde: f64| -> usize {
        for j in 0..n_slabs {
            if x_tilde >= -bounds[j + 1] - pad {
                return j;
            }
        }
        n_slabs - 1
    };

    let mut slab_rays: Vec<Vec<usize>> = vec![Vec::new(); n_slabs];
    for (ray, &turn) in map.turning_depths().iter().enumerate() {
        slab_rays[slab_of(turn)].push(ray);
    }
    let h = c / (cfg.profile_n - 1) as f64;
    let mut slab_nodes: Vec<Vec<usize>> = vec![Vec::new(); n_slabs];
    for i in 0..cfg.profile_n {
        let x_tilde = -c + h * i as f64;
        slab_nodes[slab_of(x_tilde)].push(i);
    }

    let mut u = vec![0.0; cfg.profile_n];
    let mut reports = Vec::with_capacity(n_slabs);
    for j in 0..n_slabs {
        let rows = &slab_rays[j];
        let cols = &slab_nodes[j];
        if rows.is_empty() {
            return Err(Error::Coverage {
                slab: j,
                lo: -bounds[j + 1],
                hi: -bounds[j],
            });
        }
        if cols.is_empty() {
            return Err(Error::argument(format!(
                "slab {j} ({:.4} ≤ x̃ ≤ {:.4}) contains no profile nodes; \
                 raise the profile resolution or coarsen the ladder",
                -bounds[j + 1],
                -bounds[j],
            )));
        }
        let (u_new, outcome) = engine.solve_window(&data.values, &u, rows, cols, mu, &opt);
        u = u_new;

        // Slab diagnostics: recovered piece against the slab's own data.
        let piece: Vec<f64> = (0..cfg.profile_n)
            .map(|i| if cols.contains(&i) { u[i] } else { 0.0 })
            .collect();
        let mut masked = map.to_sinogram(vec![0.0; map.n_rays()]);
        let fit = map.forward_rows(rows, &u);
        for (k, &ray) in rows.iter().enumerate() {
            masked.values[ray] = fit[k];
        }
        let stability_ratio = guarded_ratio(
            profile_weighted_norm(&piece, c, cfg.f_const, 0),
            sinogram_weighted_norm(&masked, cfg.f_const, 1),
        );
        let condition = engine.window_condition(rows, cols, mu).condition;
        reports.push(SlabReport {
            slab: j,
            x_tilde_lo: -bounds[j + 1],
            x_tilde_hi: -bounds[j],
            rays: rows.len(),
            nodes: cols[0]..cols[cols.len() - 1] + 1,
            recon: ReconReport {
                residuals: outcome.residuals,
                rel_error: None,
                stability_ratio,
                condition,
                converged: outcome.converged,
                stagnated: outcome.stagnated,
                mu,
                f_const: cfg.f_const,
            },
        });
    }

    Ok((AdaptedProfile::from_samples(c, u)?, reports))
}
