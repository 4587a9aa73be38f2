//! Sampling of the ray family against the depth-profile basis.
//!
//! The restricted forward operator sends the nodal values of a depth profile
//! to the weighted ray transform of its lift. Tracing does not depend on the
//! profile, so this map caches, for every quadrature sample of every ray, the
//! foliation depth and the combined quadrature-and-weight factor. A forward
//! application gathers the cubic interpolant through those samples; the
//! adjoint scatters through the same interpolation stencil, which makes the
//! pair exactly adjoint in the Euclidean pairing — the property conjugate
//! gradients on the normal equations depends on.

use crate::error::{Error, Result};
use crate::geometry::{trace_segment, ChartMetric, Frame, GeodesicConfig, Region};
use crate::par;
use crate::transform::{
    eval_weight, launch_of, Sinogram, SinogramGrid, WeightSpec, COINCIDENCE_RADIUS,
};

/// Upper bound on the number of profile nodes one interpolation stencil can
/// touch: two value nodes plus two three-node slope stencils.
pub const STENCIL_MAX: usize = 6;

/// Interpolation weights of the clamped cubic profile interpolant at depth
/// `s` (in the adapted coordinate, `−c ≤ s ≤ 0`), as `(node, coefficient)`
/// pairs. Returns the number of pairs written into `out`.
///
/// The coefficients reproduce the evaluation rule of
/// [`crate::transform::AdaptedProfile`]: cubic Hermite pieces with
/// second-order finite-difference slopes and constant extension outside the
/// collar.
pub fn node_weights(n: usize, c: f64, s: f64, out: &mut [(usize, f64); STENCIL_MAX]) -> usize {
    debug_assert!(n >= 4);
    let h = c / (n - 1) as f64;
    let u = (s + c) / h;
    if u <= 0.0 {
        out[0] = (0, 1.0);
        return 1;
    }
    if u >= (n - 1) as f64 {
        out[0] = (n - 1, 1.0);
        return 1;
    }
    let i = (u as usize).min(n - 2);
    let t = u - i as f64;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;

    let mut len = 0usize;
    let mut add = |out: &mut [(usize, f64); STENCIL_MAX], node: usize, coef: f64| {
        for slot in out.iter_mut().take(len) {
            if slot.0 == node {
                slot.1 += coef;
                return;
            }
        }
        out[len] = (node, coef);
        len += 1;
    };

    add(out, i, h00);
    add(out, i + 1, h01);
    // Slope stencils carry the cell-width scaling already: they produce m·h.
    for (node, coef) in slope_stencil(i, n) {
        add(out, node, h10 * coef);
    }
    for (node, coef) in slope_stencil(i + 1, n) {
        add(out, node, h11 * coef);
    }
    len
}

/// Three-point stencil producing `h`·(slope at node `j`) from nodal values.
fn slope_stencil(j: usize, n: usize) -> [(usize, f64); 3] {
    if j == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if j == n - 1 {
        [(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)]
    } else {
        // Centered difference; the third slot is inert.
        [(j - 1, -0.5), (j + 1, 0.5), (j, 0.0)]
    }
}

/// Cached linear map from profile node values to per-ray transform values.
#[derive(Clone, Debug)]
pub struct ProfileRayMap {
    /// Launch grid the rows are indexed by.
    pub grid: SinogramGrid,
    /// Arc-length quadrature step the cache was built with.
    pub quad_step: f64,
    /// Number of profile nodes (columns).
    pub n_nodes: usize,
    /// Collar depth of the profile the columns discretize.
    pub collar_depth: f64,
    /// Echo of the weight the rows include.
    pub weight_name: String,
    ray_ptr: Vec<usize>,
    depth: Vec<f64>,
    qw: Vec<f64>,
    turn: Vec<f64>,
}

impl ProfileRayMap {
    /// Traces every ray of `grid` and caches its quadrature samples.
    ///
    /// Fails if any ray is cut by the chart edge or the time cap — a sign the
    /// scene's chart is too small for its launch grid — or if a weight
    /// evaluation fails along a ray.
    pub fn build(
        metric: &ChartMetric,
        region: &Region,
        frame: &Frame,
        w: &WeightSpec,
        grid: &SinogramGrid,
        h: f64,
        n_nodes: usize,
    ) -> Result<Self> {
        if n_nodes < 4 {
            return Err(Error::argument("profile needs at least four nodes"));
        }
        if !(h > 0.0) {
            return Err(Error::argument("quadrature step must be positive"));
        }
        let fol = region.fol;
        let rows: Vec<(Vec<f64>, Vec<f64>, f64, bool)> =
            par::try_map_indexed(grid.rays(), |flat| -> Result<(Vec<f64>, Vec<f64>, f64, bool)> {
                let (z0, v0, _) = launch_of(grid, frame, flat);
                let speed = metric.tensor(z0)?.speed(v0);
                let cfg = GeodesicConfig {
                    step: h / speed,
                    ..GeodesicConfig::default()
                };
                let seg = trace_segment(metric, region, z0, v0, &cfg)?;
                let base = seg.samples[seg.base_index];
                let m = seg.samples.len();
                let mut depths = Vec::with_capacity(m);
                let mut qws = Vec::with_capacity(m);
                let mut turn = f64::INFINITY;
                for k in 0..m {
                    let s = seg.samples[k];
                    let wv = if (s.z - base.z).norm() < COINCIDENCE_RADIUS {
                        eval_weight(w, base.z, s.z, Some(base.v))?
                    } else {
                        eval_weight(w, base.z, s.z, None)?
                    };
                    let dt_left = if k == 0 {
                        0.0
                    } else {
                        s.t - seg.samples[k - 1].t
                    };
                    let dt_right = if k + 1 == m {
                        0.0
                    } else {
                        seg.samples[k + 1].t - s.t
                    };
                    let x_tilde = fol.x_tilde(s.z);
                    turn = turn.min(x_tilde);
                    depths.push(x_tilde);
                    qws.push(0.5 * (dt_left + dt_right) * speed * wv);
                }
                Ok((depths, qws, turn, seg.dropped()))
            })?;

        let cut = rows.iter().filter(|r| r.3).count();
        if cut > 0 {
            return Err(Error::validation(format!(
                "{cut} of {} rays were cut by the chart edge or time cap; \
                 enlarge the chart or shorten the launch grid",
                grid.rays()
            )));
        }

        let total: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut ray_ptr = Vec::with_capacity(rows.len() + 1);
        let mut depth = Vec::with_capacity(total);
        let mut qw = Vec::with_capacity(total);
        let mut turn = Vec::with_capacity(rows.len());
        ray_ptr.push(0);
        for (d, q, t, _) in rows {
            depth.extend_from_slice(&d);
            qw.extend_from_slice(&q);
            turn.push(t);
            ray_ptr.push(depth.len());
        }
        Ok(ProfileRayMap {
            grid: *grid,
            quad_step: h,
            n_nodes,
            collar_depth: fol.c,
            weight_name: w.name.clone(),
            ray_ptr,
            depth,
            qw,
            turn,
        })
    }

    /// Number of rays (rows).
    pub fn n_rays(&self) -> usize {
        self.ray_ptr.len() - 1
    }

    /// Deepest adapted coordinate each ray visits (most negative `x̃`).
    pub fn turning_depths(&self) -> &[f64] {
        &self.turn
    }

    /// Transform value of a single ray for nodal values `u`.
    fn ray_value(&self, ray: usize, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut stencil = [(0usize, 0.0f64); STENCIL_MAX];
        for k in self.ray_ptr[ray]..self.ray_ptr[ray + 1] {
            let len = node_weights(self.n_nodes, self.collar_depth, self.depth[k], &mut stencil);
            let mut val = 0.0;
            for &(node, coef) in stencil.iter().take(len) {
                val += coef * u[node];
            }
            acc += self.qw[k] * val;
        }
        acc
    }

    /// Forward application on every ray; parallel over rays.
    pub fn forward(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n_nodes, "nodal vector length");
        par::map_indexed(self.n_rays(), |r| self.ray_value(r, u))
    }

    /// Forward application restricted to the listed rays.
    pub fn forward_rows(&self, rows: &[usize], u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n_nodes, "nodal vector length");
        par::map_indexed(rows.len(), |k| self.ray_value(rows[k], u))
    }

    /// Adjoint application restricted to the listed rays: `r[k]` pairs with
    /// ray `rows[k]`. Scatter runs over fixed-size row chunks whose partial
    /// sums are reduced in a fixed order, so the result does not depend on
    /// the worker count.
    pub fn adjoint_rows(&self, rows: &[usize], r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), rows.len(), "residual length");
        const CHUNK: usize = 256;
        let n_chunks = rows.len().div_ceil(CHUNK);
        let partials: Vec<Vec<f64>> = par::map_indexed(n_chunks, |ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(rows.len());
            let mut acc = vec![0.0; self.n_nodes];
            let mut stencil = [(0usize, 0.0f64); STENCIL_MAX];
            for k in lo..hi {
                let ray = rows[k];
                let rv = r[k];
                if rv == 0.0 {
                    continue;
                }
                for s in self.ray_ptr[ray]..self.ray_ptr[ray + 1] {
                    let len =
                        node_weights(self.n_nodes, self.collar_depth, self.depth[s], &mut stencil);
                    let scale = self.qw[s] * rv;
                    for &(node, coef) in stencil.iter().take(len) {
                        acc[node] += scale * coef;
                    }
                }
            }
            acc
        });
        let mut out = vec![0.0; self.n_nodes];
        for part in partials {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        out
    }

    /// Adjoint over all rays.
    pub fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        let rows: Vec<usize> = (0..self.n_rays()).collect();
        self.adjoint_rows(&rows, r)
    }

    /// Wraps per-ray values into a [`Sinogram`] over this map's grid.
    pub fn to_sinogram(&self, values: Vec<f64>) -> Sinogram {
        assert_eq!(values.len(), self.n_rays());
        Sinogram {
            grid: self.grid,
            values,
            quad_step: self.quad_step,
            weight_name: self.weight_name.clone(),
            dropped_rays: 0,
        }
    }
}
