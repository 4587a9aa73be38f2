//! Sampled symbol tables on product grids (base points × cotangent points)
//! and ellipticity scans over cones of directions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

/// Points with |ζ| below this are outside the window on which symbol bounds
/// are claimed; scans skip them.
pub const SCAN_RADIUS_FLOOR: f64 = 1.0;

/// Minimum ratio max|ζ| / min|ζ| over the scanned cone points for a scan to
/// count as a certificate: four dyadic scales.
pub const DYADIC_SPAN_MIN: f64 = 16.0;

/// How the cotangent variable ζ = (ξ, η) is sampled.
#[derive(Clone, Debug)]
pub enum ZetaSampling {
    /// Product of radii and angles: ζ = r(cos θ, sin θ), flat index
    /// iz = ir * angles.len() + ia. Suited to cone scans and dyadic sweeps.
    Polar { radii: Vec<f64>, angles: Vec<f64> },
    /// Product of frequency lists, flat index iz = ik * eta.len() + il.
    /// With `scattering_scaled` the stored lists are the chart-dual
    /// frequencies (κ, μ) and the effective cotangent point at a base point
    /// of depth x is ζ = (x²κ, xμ), matching the phase
    /// λ(x−x′)/x² + η(y−y′)/x of the scattering quantization; otherwise the
    /// lists are used as ζ directly.
    Lattice {
        xi: Vec<f64>,
        eta: Vec<f64>,
        scattering_scaled: bool,
    },
}

impl ZetaSampling {
    pub fn len(&self) -> usize {
        match self {
            ZetaSampling::Polar { radii, angles } => radii.len() * angles.len(),
            ZetaSampling::Lattice { xi, eta, .. } => xi.len() * eta.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raw sampled point, before any per-row scattering scaling.
    pub fn point(&self, iz: usize) -> (f64, f64) {
        match self {
            ZetaSampling::Polar { radii, angles } => {
                let na = angles.len();
                let r = radii[iz / na];
                let th = angles[iz % na];
                (r * th.cos(), r * th.sin())
            }
            ZetaSampling::Lattice { xi, eta, .. } => {
                let nl = eta.len();
                (xi[iz / nl], eta[iz % nl])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64], what: &str| -> Result<()> {
            if v.is_empty() {
                return Err(Error::shape(format!("empty {what} list")));
            }
            if let Some(bad) = v.iter().find(|t| !t.is_finite()) {
                return Err(Error::shape(format!("non-finite {what} entry {bad}")));
            }
            Ok(())
        };
        match self {
            ZetaSampling::Polar { radii, angles } => {
                finite(radii, "radius")?;
                finite(angles, "angle")?;
                if let Some(bad) = radii.iter().find(|r| **r <= 0.0) {
                    return Err(Error::shape(format!("non-positive radius {bad}")));
                }
                Ok(())
            }
            ZetaSampling::Lattice { xi, eta, .. } => {
                finite(xi, "xi frequency")?;
                finite(eta, "eta frequency")
            }
        }
    }
}

/// A symbol a(z, ζ) tabulated on base points (x, y) and cotangent points ζ.
///
/// `base_y.len() == 1` marks a leaf-uniform symbol: the single slot stands
/// for every leaf coordinate, which keeps lattice tables affordable and
/// unlocks the fast quantization path.
///
/// Values are stored flat as `values[(ix * base_y.len() + iy) * zeta.len() + iz]`.
#[derive(Clone, Debug)]
pub struct SymbolGrid {
    pub base_x: Vec<f64>,
    pub base_y: Vec<f64>,
    pub zeta: ZetaSampling,
    /// Order pair (growth in |ζ|, conormal decay) carried as metadata.
    pub order: (i32, i32),
    pub values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn new(
        base_x: Vec<f64>,
        base_y: Vec<f64>,
        zeta: ZetaSampling,
        order: (i32, i32),
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let grid = SymbolGrid {
            base_x,
            base_y,
            zeta,
            order,
            values,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Evaluate `f(x, y, ξ, η)` over the whole product grid, in parallel over
    /// the flattened index. For scattering-scaled lattices `f` receives the
    /// per-row effective ζ.
    pub fn from_fn<F>(
        base_x: Vec<f64>,
        base_y: Vec<f64>,
        zeta: ZetaSampling,
        order: (i32, i32),
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64, f64, f64) -> Result<Complex64> + Sync,
    {
        zeta.validate()?;
        let (nx, ny, nz) = (base_x.len(), base_y.len(), zeta.len());
        if nx == 0 || ny == 0 {
            return Err(Error::shape("empty base axis"));
        }
        let scaled = matches!(
            zeta,
            ZetaSampling::Lattice {
                scattering_scaled: true,
                ..
            }
        );
        let values = par::try_map_indexed(nx * ny * nz, |flat| {
            let iz = flat % nz;
            let iy = (flat / nz) % ny;
            let ix = flat / (nz * ny);
            let x = base_x[ix];
            let (mut xi, mut eta) = zeta.point(iz);
            if scaled {
                xi *= x * x;
                eta *= x;
            }
            f(x, base_y[iy], xi, eta)
        })?;
        SymbolGrid::new(base_x, base_y, zeta, order, values)
    }

    pub fn n_base(&self) -> (usize, usize) {
        (self.base_x.len(), self.base_y.len())
    }

    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.base_y.len() + iy) * self.zeta.len() + iz
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> Complex64 {
        self.values[self.idx(ix, iy, iz)]
    }

    /// Effective cotangent point for base row `ix`: the per-row scattering
    /// scaling is applied when the sampling carries it.
    pub fn zeta_at(&self, ix: usize, iz: usize) -> (f64, f64) {
        let (xi, eta) = self.zeta.point(iz);
        match &self.zeta {
            ZetaSampling::Lattice {
                scattering_scaled: true,
                ..
            } => {
                let x = self.base_x[ix];
                (x * x * xi, x * eta)
            }
            _ => (xi, eta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.zeta.validate()?;
        if self.base_x.is_empty() || self.base_y.is_empty() {
            return Err(Error::shape("empty base axis"));
        }
        for v in self.base_x.iter().chain(self.base_y.iter()) {
            if !v.is_finite() {
                return Err(Error::shape(format!("non-finite base coordinate {v}")));
            }
        }
        let want = self.base_x.len() * self.base_y.len() * self.zeta.len();
        if self.values.len() != want {
            return Err(Error::shape(format!(
                "symbol table holds {} values for a {}×{}×{} grid",
                self.values.len(),
                self.base_x.len(),
                self.base_y.len(),
                self.zeta.len()
            )));
        }
        if let Some(bad) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::shape(format!(
                "non-finite symbol value at flat index {bad}"
            )));
        }
        Ok(())
    }

    /// Largest |a(ζ) − conj a(−ζ)| over stored points whose negation is also
    /// stored (matched within 1e−9 relative). `None` when no point has a
    /// stored partner. Symbols of real operators should drive this to zero.
    pub fn conjugate_symmetry_defect(&self) -> Option<f64> {
        let nz = self.zeta.len();
        // Sort raw points once; per-row scaling preserves negation pairs.
        let mut order: Vec<usize> = (0..nz).collect();
        let pts: Vec<(f64, f64)> = (0..nz).map(|iz| self.zeta.point(iz)).collect();
        order.sort_by(|&a, &b| {
            pts[a]
                .partial_cmp(&pts[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let scale: f64 = pts
            .iter()
            .map(|p| p.0.hypot(p.1))
            .fold(0.0, f64::max)
            .max(1.0);
        let tol = 1e-9 * scale;
        let mut partner = vec![usize::MAX; nz];
        for iz in 0..nz {
            let target = (-pts[iz].0, -pts[iz].1);
            // Binary search for the closest stored point to the negation.
            let pos = order.partition_point(|&j| {
                pts[j] < target
            });
            for &cand in order[pos.saturating_sub(2)..(pos + 2).min(nz)].iter() {
                if (pts[cand].0 - target.0).abs() <= tol && (pts[cand].1 - target.1).abs() <= tol {
                    partner[iz] = cand;
                    break;
                }
            }
        }
        let (nx, ny) = self.n_base();
        let mut worst: Option<f64> = None;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let jz = partner[iz];
                    if jz == usize::MAX {
                        continue;
                    }
                    let d = (self.value(ix, iy, iz) - self.value(ix, iy, jz).conj()).norm();
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
        worst
    }
}

/// A closed cone of directions {|ξ| ≥ c_cone |η|} together with the
/// ellipticity constant claimed on it: |a(z, ζ)| ≥ c_ell |ζ|⁻¹ for cone
/// points with |ζ| ≥ 1.
#[derive(Clone, Copy, Debug)]
pub struct ConeSpec {
    pub c_cone: f64,
    pub c_ell: f64,
}

impl ConeSpec {
    pub fn new(c_cone: f64, c_ell: f64) -> Result<Self> {
        if !(c_cone > 0.0) || !c_cone.is_finite() {
            return Err(Error::argument("cone aperture constant must be positive"));
        }
        if !(c_ell >= 0.0) || !c_ell.is_finite() {
            return Err(Error::argument(
                "cone ellipticity constant must be non-negative",
            ));
        }
        Ok(ConeSpec { c_cone, c_ell })
    }

    /// Membership of a nonzero direction; the origin is excluded.
    pub fn contains(&self, xi: f64, eta: f64) -> bool {
        (xi != 0.0 || eta != 0.0) && xi.abs() >= self.c_cone * eta.abs()
    }
}

/// One scanned point that fell below the claimed ellipticity constant.
#[derive(Clone, Copy, Debug)]
pub struct ScanViolation {
    pub base_x: f64,
    pub base_y: f64,
    pub xi: f64,
    pub eta: f64,
    /// The certified quantity |ζ| · |a| at the point.
    pub bound: f64,
}

/// Result of an ellipticity scan: the minimum of |ζ|·|a| over the scanned
/// points and every point that dipped below the claimed constant.
#[derive(Clone, Debug)]
pub struct ScanReport {
    pub min_bound: f64,
    pub scanned: usize,
    pub violations: Vec<ScanViolation>,
}

impl ScanReport {
    pub fn certifies(&self, c_ell: f64) -> bool {
        self.scanned > 0 && self.violations.is_empty() && self.min_bound >= c_ell
    }
}

fn scan_points<F>(a: &SymbolGrid, mut keep: F) -> Vec<(usize, usize, usize, f64, f64, f64)>
where
    F: FnMut(f64, f64) -> bool,
{
    let (nx, ny) = a.n_base();
    let nz = a.zeta.len();
    let mut out = Vec::new();
    for ix in 0..nx {
        for iz in 0..nz {
            let (xi, eta) = a.zeta_at(ix, iz);
            let r = xi.hypot(eta);
            if r < SCAN_RADIUS_FLOOR || !keep(xi, eta) {
                continue;
            }
            for iy in 0..ny {
                out.push((ix, iy, iz, xi, eta, r));
            }
        }
    }
    out
}

fn report_from(
    a: &SymbolGrid,
    pts: &[(usize, usize, usize, f64, f64, f64)],
    threshold: f64,
) -> ScanReport {
    let mut min_bound = f64::INFINITY;
    let mut violations = Vec::new();
    for &(ix, iy, iz, xi, eta, r) in pts {
        let bound = r * a.value(ix, iy, iz).norm();
        min_bound = min_bound.min(bound);
        if bound < threshold {
            violations.push(ScanViolation {
                base_x: a.base_x[ix],
                base_y: a.base_y[iy],
                xi,
                eta,
                bound,
            });
        }
    }
    ScanReport {
        min_bound: if pts.is_empty() { 0.0 } else { min_bound },
        scanned: pts.len(),
        violations,
    }
}

/// Scan |ζ|·|a| over the stored cone points with |ζ| ≥ 1.
///
/// The scanned radii must span at least four dyadic scales for the result to
/// certify anything; thinner sweeps are rejected. Points below the cone's
/// `c_ell` are reported as violations.
pub fn ellipticity_scan(a: &SymbolGrid, cone: &ConeSpec) -> Result<ScanReport> {
    let pts = scan_points(a, |xi, eta| cone.contains(xi, eta));
    if pts.is_empty() {
        return Err(Error::argument(
            "the sampling has no cone points with |ζ| ≥ 1 to scan",
        ));
    }
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    for &(.., r) in &pts {
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    if rmax / rmin < DYADIC_SPAN_MIN * (1.0 - 1e-9) {
        return Err(Error::argument(format!(
            "cone samples span |ζ| ∈ [{rmin:.3}, {rmax:.3}], fewer than four dyadic scales"
        )));
    }
    Ok(report_from(a, &pts, cone.c_ell))
}

/// Scan |ζ|·|a| over every stored point with |ζ| ≥ 1 (all directions),
/// reporting dips below `floor`. Used on completed symbols, where the bound
/// is claimed everywhere rather than on a cone.
pub fn ellipticity_scan_all(a: &SymbolGrid, floor: f64) -> Result<ScanReport> {
    let pts = scan_points(a, |_, _| true);
    if pts.is_empty() {
        return Err(Error::argument(
            "the sampling has no points with |ζ| ≥ 1 to scan",
        ));
    }
    Ok(report_from(a, &pts, floor))
}

/// CSV certificate of a cone scan: one row per scanned point with the
/// direction, |ζ|, the certified quantity |ζ|·|a|, and a pass flag against
/// the cone's ellipticity constant.
pub fn ellipticity_csv(a: &SymbolGrid, cone: &ConeSpec) -> Result<String> {
    let pts = scan_points(a, |xi, eta| cone.contains(xi, eta));
    if pts.is_empty() {
        return Err(Error::argument(
            "the sampling has no cone points with |ζ| ≥ 1 to scan",
        ));
    }
    let mut out = String::from("base_x,base_y,xi,eta,zeta_norm,bound,pass\n");
    for &(ix, iy, iz, xi, eta, r) in &pts {
        let bound = r * a.value(ix, iy, iz).norm();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.base_x[ix],
            a.base_y[iy],
            xi,
            eta,
            r,
            bound,
            if bound >= cone.c_ell { 1 } else { 0 }
        ));
    }
    Ok(out)
}
