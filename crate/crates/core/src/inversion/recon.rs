//! Local reconstruction on foliation-adapted functions.
//!
//! The data of the restricted problem is a sinogram over the adapted launch
//! grid; the unknown is a depth profile. [`local_reconstruct`] minimizes
//!
//! ```text
//!   ‖ A u − b ‖²_w  +  μ ‖ D u ‖²
//! ```
//!
//! by conjugate gradients on the normal equations, where `A` is the cached
//! [`ProfileRayMap`], the fidelity norm carries the discrete depth weight
//! `exp(−F/x)` of the stability theory, and `D` is the first-difference
//! seminorm that suppresses the components the ray family cannot see (the
//! deepest sliver below the deepest launch). Everything runs matrix-free;
//! the same windowed engine also powers the layer-stripping sweep.

use crate::error::{Error, Result};
use crate::inversion::map::ProfileRayMap;
use crate::inversion::norms::{
    profile_weighted_norm, ray_solver_weights, sinogram_weighted_norm,
};
use crate::inversion::solver::{cgls, SolveOptions, SolveOutcome};
use crate::inversion::spectral::{spectral_probe, SpectralEstimate};
use crate::scene::Scene;
use crate::transform::{lift_adapted, sinogram, AdaptedProfile, Sinogram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Knobs of the least-squares reconstruction.
#[derive(Clone, Debug)]
pub struct InversionConfig {
    /// Regularization weight; `None` picks 1e−6 times the weighted data norm.
    pub mu: Option<f64>,
    /// Iteration cap for the conjugate-gradient solver.
    pub max_iters: usize,
    /// Relative tolerance on the normal-equation residual.
    pub tol: f64,
    /// Strictly decreasing positive collar depths for layer stripping and
    /// contraction probes; the first entry is the full collar depth.
    pub c_ladder: Vec<f64>,
    /// Exponent of the depth weight `exp(−F/x)` used by the fidelity term
    /// and all reported norms. Zero reduces every norm to its unweighted
    /// counterpart exactly.
    pub f_const: f64,
    /// Number of depth nodes of the recovered profile.
    pub profile_n: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            mu: None,
            max_iters: 800,
            tol: 1e-10,
            c_ladder: vec![0.3, 0.2, 0.1],
            f_const: 0.0,
            profile_n: 64,
        }
    }
}

impl InversionConfig {
    /// Rejects out-of-range knobs.
    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu {
            if !(mu >= 0.0) {
                return Err(Error::argument(format!(
                    "regularization weight must be ≥ 0, got {mu}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::argument("iteration cap must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::argument(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.c_ladder.is_empty() {
            return Err(Error::argument("collar ladder must not be empty"));
        }
        for w in self.c_ladder.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::argument(format!(
                    "collar ladder must be strictly decreasing, got {:?} before {:?}",
                    w[0], w[1]
                )));
            }
        }
        if !(*self.c_ladder.last().expect("non-empty") > 0.0) {
            return Err(Error::argument("collar ladder entries must be positive"));
        }
        if !(self.f_const >= 0.0) {
            return Err(Error::argument(format!(
                "depth-weight exponent must be ≥ 0, got {}",
                self.f_const
            )));
        }
        if self.profile_n < 4 {
            return Err(Error::argument(format!(
                "profile needs at least four nodes, got {}",
                self.profile_n
            )));
        }
        Ok(())
    }

    /// Effective regularization weight for a given data set.
    pub fn effective_mu(&self, data: &Sinogram) -> f64 {
        self.mu
            .unwrap_or_else(|| 1e-6 * sinogram_weighted_norm(data, self.f_const, 0))
    }
}

/// Diagnostics of one reconstruction.
#[derive(Clone, Debug)]
pub struct ReconReport {
    /// Stacked least-squares residual per accepted iterate (non-increasing).
    pub residuals: Vec<f64>,
    /// Relative L² error against a known ground truth, when one exists.
    pub rel_error: Option<f64>,
    /// Weighted profile norm of the recovered profile over the weighted
    /// order-one norm of its re-simulated data.
    pub stability_ratio: f64,
    /// Condition estimate of the stacked operator on the solved window.
    pub condition: f64,
    /// Whether the solver met its tolerance.
    pub converged: bool,
    /// Whether the solver stopped on a stagnating residual.
    pub stagnated: bool,
    /// Regularization weight actually used.
    pub mu: f64,
    /// Depth-weight exponent the norms carried.
    pub f_const: f64,
}

impl ReconReport {
    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("at least the initial residual")
    }

    /// Header of [`ReconReport::csv_row`].
    pub fn csv_header() -> &'static str {
        "iterations,converged,stagnated,final_residual,stability_ratio,condition,mu,f_const,rel_error"
    }

    /// One-line CSV summary.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
            self.iterations(),
            self.converged,
            self.stagnated,
            self.final_residual(),
            self.stability_ratio,
            self.condition,
            self.mu,
            self.f_const,
            self.rel_error
                .map(|e| format!("{e:.12e}"))
                .unwrap_or_else(|| "".into()),
        )
    }

    /// CSV table of the residual history.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for (k, r) in self.residuals.iter().enumerate() {
            out.push_str(&format!("{k},{r:.12e}\n"));
        }
        out
    }
}

/// Applies the restricted forward transform to a depth profile: lifts it to
/// the collar and integrates the scene's weighted ray family over it.
pub fn restricted_forward(profile: &AdaptedProfile, scene: &Scene) -> Result<Sinogram> {
    let field = lift_adapted(profile, &scene.region.fol)?;
    sinogram(
        &scene.metric,
        &scene.region,
        &scene.frame,
        &scene.weight,
        &field,
        &scene.rays,
        scene.quad_step,
    )
}

/// Checks that a sinogram was generated over the scene's launch grid.
pub(crate) fn check_grid(data: &Sinogram, scene: &Scene) -> Result<()> {
    let a = &data.grid;
    let b = &scene.rays;
    let axis_eq = |p: &crate::vec2::Axis, q: &crate::vec2::Axis| {
        let span = (q.hi - q.lo).abs().max(1.0);
        p.n == q.n && (p.lo - q.lo).abs() <= 1e-12 * span && (p.hi - q.hi).abs() <= 1e-12 * span
    };
    if !(axis_eq(&a.x, &b.x) && axis_eq(&a.y, &b.y) && axis_eq(&a.lambda, &b.lambda)) {
        return Err(Error::Shape(format!(
            "data grid does not match the scene's launch grid (data x: {:?}, scene x: {:?})",
            (a.x.lo, a.x.hi, a.x.n),
            (b.x.lo, b.x.hi, b.x.n),
        )));
    }
    if (data.quad_step - scene.quad_step).abs() > 1e-12 * scene.quad_step {
        return Err(Error::Shape(format!(
            "data quadrature step {} does not match the scene's {}",
            data.quad_step, scene.quad_step
        )));
    }
    Ok(())
}

/// Matrix-free engine for windowed least-squares solves, shared by the local
/// reconstruction, the layer-stripping sweep, and the L-curve helper.
pub(crate) struct SolveEngine<'a> {
    pub map: &'a ProfileRayMap,
    /// Square-root fidelity weights per ray (quadrature × depth weight).
    pub ray_w: Vec<f64>,
    /// 1/√h scaling making ‖D u‖² the discrete first-derivative seminorm.
    pub diff_scale: f64,
}

impl<'a> SolveEngine<'a> {
    pub fn new(map: &'a ProfileRayMap, f_const: f64) -> Self {
        let g = &map.grid;
        let ray_w = ray_solver_weights(&g.x, &g.y, &g.lambda, f_const);
        let h = map.collar_depth / (map.n_nodes - 1) as f64;
        SolveEngine {
            map,
            ray_w,
            diff_scale: 1.0 / h.sqrt(),
        }
    }

    /// Stacked forward: weighted ray rows over `rows`, then difference rows.
    fn stack_forward(&self, rows: &[usize], sqrt_mu: f64, full: &[f64]) -> Vec<f64> {
        let n = self.map.n_nodes;
        let ray_part = self.map.forward_rows(rows, full);
        let mut out = Vec::with_capacity(rows.len() + n - 1);
        for (k, &ray) in rows.iter().enumerate() {
            out.push(self.ray_w[ray] * ray_part[k]);
        }
        for i in 0..n - 1 {
            out.push(sqrt_mu * self.diff_scale * (full[i + 1] - full[i]));
        }
        out
    }

    /// Adjoint of [`SolveEngine::stack_forward`].
    fn stack_adjoint(&self, rows: &[usize], sqrt_mu: f64, stacked: &[f64]) -> Vec<f64> {
        let (ray_r, reg_r) = stacked.split_at(rows.len());
        let weighted: Vec<f64> = rows
            .iter()
            .zip(ray_r)
            .map(|(&ray, r)| self.ray_w[ray] * r)
            .collect();
        let mut out = self.map.adjoint_rows(rows, &weighted);
        for (i, r) in reg_r.iter().enumerate() {
            let v = sqrt_mu * self.diff_scale * r;
            out[i + 1] += v;
            out[i] -= v;
        }
        out
    }

    /// Solves for an update on the `cols` window given the current global
    /// iterate `u_cur`, fitting the rows `rows` of `data` with weight μ on
    /// the difference seminorm. Returns the updated global vector.
    pub fn solve_window(
        &self,
        data: &[f64],
        u_cur: &[f64],
        rows: &[usize],
        cols: &[usize],
        mu: f64,
        opt: &SolveOptions,
    ) -> (Vec<f64>, SolveOutcome) {
        let n = self.map.n_nodes;
        debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        let sqrt_mu = mu.sqrt();

        // Affine offset: the stacked residual of the current iterate.
        let mut rhs = self.stack_forward(rows, sqrt_mu, u_cur);
        for (k, &ray) in rows.iter().enumerate() {
            rhs[k] -= self.ray_w[ray] * data[ray];
        }
        for v in &mut rhs {
            *v = -*v;
        }

        let scatter = |delta: &[f64]| {
            let mut full = vec![0.0; n];
            for (k, &j) in cols.iter().enumerate() {
                full[j] = delta[k];
            }
            full
        };
        let apply = |delta: &[f64]| self.stack_forward(rows, sqrt_mu, &scatter(delta));
        let applyt = |stacked: &[f64]| {
            let full = self.stack_adjoint(rows, sqrt_mu, stacked);
            cols.iter().map(|&j| full[j]).collect::<Vec<f64>>()
        };
        let outcome = cgls(apply, applyt, &rhs, cols.len(), opt);
        let mut u_new = u_cur.to_vec();
        for (k, &j) in cols.iter().enumerate() {
            u_new[j] += outcome.x[k];
        }
        (u_new, outcome)
    }

    /// Condition probe of the stacked operator on a window.
    pub fn window_condition(&self, rows: &[usize], cols: &[usize], mu: f64) -> SpectralEstimate {
        let n = self.map.n_nodes;
        let sqrt_mu = mu.sqrt();
        let scatter = |delta: &[f64]| {
            let mut full = vec![0.0; n];
            for (k, &j) in cols.iter().enumerate() {
                full[j] = delta[k];
            }
            full
        };
        spectral_probe(
            |delta| self.stack_forward(rows, sqrt_mu, &scatter(delta)),
            |stacked| {
                let full = self.stack_adjoint(rows, sqrt_mu, stacked);
                cols.iter().map(|&j| full[j]).collect::<Vec<f64>>()
            },
            cols.len(),
        )
    }
}

/// Ratio helper that treats 0/0 as 0 (an all-zero reconstruction is stable).
pub(crate) fn guarded_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Least-squares reconstruction of a depth profile from sinogram data.
///
/// The data must be generated over the scene's launch grid; the scene must
/// certify (positive convexity margin). Returns the recovered profile and
/// the solve diagnostics. Zero data returns the zero profile.
pub fn local_reconstruct(
    data: &Sinogram,
    scene: &Scene,
    cfg: &InversionConfig,
) -> Result<(AdaptedProfile, ReconReport)> {
    cfg.validate()?;
    scene.validate()?;
    check_grid(data, scene)?;
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
    let rows: Vec<usize> = (0..map.n_rays()).collect();
    let cols: Vec<usize> = (0..map.n_nodes).collect();
    let opt = SolveOptions {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    };
    let zero = vec![0.0; map.n_nodes];
    let (u, outcome) = engine.solve_window(&data.values, &zero, &rows, &cols, mu, &opt);

    let fit = map.to_sinogram(map.forward(&u));
    let stability_ratio = guarded_ratio(
        profile_weighted_norm(&u, map.collar_depth, cfg.f_const, 0),
        sinogram_weighted_norm(&fit, cfg.f_const, 1),
    );
    let condition = engine.window_condition(&rows, &cols, mu).condition;
    let profile = AdaptedProfile::from_samples(map.collar_depth, u)?;
    let report = ReconReport {
        residuals: outcome.residuals,
        rel_error: None,
        stability_ratio,
        condition,
        converged: outcome.converged,
        stagnated: outcome.stagnated,
        mu,
        f_const: cfg.f_const,
    };
    Ok((profile, report))
}

/// Relative L² distance between two profiles over the deeper of their
/// collars, by trapezoid quadrature on a common refinement.
pub fn relative_l2_error(got: &AdaptedProfile, want: &AdaptedProfile) -> f64 {
    let c = got.c.max(want.c);
    let n = 4 * got.len().max(want.len());
    let h = c / (n - 1) as f64;
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    for i in 0..n {
        let s = -c + h * i as f64;
        let t = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let d = got.eval(s) - want.eval(s);
        let r = want.eval(s);
        diff2 += t * h * d * d;
        ref2 += t * h * r * r;
    }
    guarded_ratio(diff2.sqrt(), ref2.sqrt())
}

/// Adds centered Gaussian noise with standard deviation
/// `rel_sigma × RMS(values)`, deterministically from `seed`.
pub fn add_gaussian_noise(data: &Sinogram, rel_sigma: f64, seed: u64) -> Sinogram {
    let rms = (data.values.iter().map(|v| v * v).sum::<f64>() / data.values.len() as f64).sqrt();
    let sigma = rel_sigma * rms;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for v in &mut out.values {
        // Box–Muller transform; only the small standard library of the rand
        // crate is needed.
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        *v += sigma * z;
    }
    out
}

/// One sample of the L-curve: regularization weight, weighted fidelity
/// residual, and difference seminorm of the minimizer.
#[derive(Clone, Copy, Debug)]
pub struct LCurvePoint {
    pub mu: f64,
    pub residual: f64,
    pub seminorm: f64,
}

/// Solves the reconstruction across a ladder of regularization weights,
/// reusing one ray cache, and reports the (residual, seminorm) trade-off.
pub fn l_curve_sweep(
    data: &Sinogram,
    scene: &Scene,
    cfg: &InversionConfig,
    mus: &[f64],
) -> Result<Vec<LCurvePoint>> {
    cfg.validate()?;
    check_grid(data, scene)?;
    if mus.is_empty() {
        return Err(Error::argument("need at least one regularization weight"));
    }
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
    let rows: Vec<usize> = (0..map.n_rays()).collect();
    let cols: Vec<usize> = (0..map.n_nodes).collect();
    let opt = SolveOptions {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    };
    let zero = vec![0.0; map.n_nodes];
    let mut out = Vec::with_capacity(mus.len());
    for &mu in mus {
        if !(mu >= 0.0) {
            return Err(Error::argument(format!(
                "regularization weights must be ≥ 0, got {mu}"
            )));
        }
        let (u, _) = engine.solve_window(&data.values, &zero, &rows, &cols, mu, &opt);
        let fit = map.forward(&u);
        let residual = fit
            .iter()
            .zip(&data.values)
            .enumerate()
            .map(|(k, (a, b))| {
                let r = engine.ray_w[k] * (a - b);
                r * r
            })
            .sum::<f64>()
            .sqrt();
        let seminorm = (0..map.n_nodes - 1)
            .map(|i| {
                let d = engine.diff_scale * (u[i + 1] - u[i]);
                d * d
            })
            .sum::<f64>()
            .sqrt();
        out.push(LCurvePoint {
            mu,
            residual,
            seminorm,
        });
    }
    Ok(out)
}

/// Index of the L-curve corner: the point of largest Menger curvature of the
/// log-log curve. Falls back to the middle point when the sweep is too short
/// or degenerate.
pub fn l_curve_corner(points: &[LCurvePoint]) -> usize {
    if points.len() < 3 {
        return points.len() / 2;
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.residual.max(1e-300).ln(), p.seminorm.max(1e-300).ln()))
        .collect();
    let mut best = (0.0f64, points.len() / 2);
    for i in 1..logs.len() - 1 {
        let (x1, y1) = logs[i - 1];
        let (x2, y2) = logs[i];
        let (x3, y3) = logs[i + 1];
        let area2 = ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)).abs();
        let d12 = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
        let d23 = ((x3 - x2).powi(2) + (y3 - y2).powi(2)).sqrt();
        let d13 = ((x3 - x1).powi(2) + (y3 - y1).powi(2)).sqrt();
        let denom = d12 * d23 * d13;
        if denom == 0.0 {
            continue;
        }
        let curvature = 2.0 * area2 / denom;
        if curvature > best.0 {
            best = (curvature, i);
        }
    }
    best.1
}
