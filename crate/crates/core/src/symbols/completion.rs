//! Elliptic completion of a cone-certified symbol table.
//!
//! A symbol whose ellipticity is certified only on a cone of directions is
//! completed by a real correction `a1` so that the sum stays bounded below
//! in every direction. The correction is built from smooth cutoffs with two
//! structural guarantees:
//!
//! * `a1` vanishes identically near the ξ-axis and near ζ = 0, so the
//!   corrected operator still annihilates functions that are constant along
//!   the foliation leaves (their spectrum lives on that axis);
//! * wherever the certified symbol is already large the correction is zero,
//!   so the cone certificate survives untouched.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbols::grid::{ellipticity_scan, ConeSpec, SymbolGrid, ZetaSampling};

/// exp(−1/u) for u > 0, identically 0 otherwise: the standard smooth
/// one-sided bump factor.
fn one_sided(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth monotone switch: 0 for u ≤ 0, 1 for u ≥ 1, infinitely
/// differentiable at both junctions.
pub fn smooth_step(u: f64) -> f64 {
    let a = one_sided(u);
    if a == 0.0 {
        return 0.0;
    }
    let b = one_sided(1.0 - u);
    if b == 0.0 {
        return 1.0;
    }
    a / (a + b)
}

/// Smooth monotone surrogate for `max(t, c/2)`: exactly c/2 for t ≤ c/2,
/// exactly t for t ≥ c, and a smooth monotone blend with values in
/// [c/2, c] in between. The lift `smooth_floor(t, c) − t` is therefore zero
/// on {t ≥ c} and pushes everything else up to at least c/2.
pub fn smooth_floor(t: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0, "floor threshold must be positive");
    let half = 0.5 * c;
    half + (t - half) * smooth_step((t - half) / half)
}

/// Radial taper: 0 for |ζ| ≤ 1/2, 1 for |ζ| ≥ 1. Keeps the correction away
/// from the origin, where no symbol bound is claimed.
pub fn radial_taper(r: f64) -> f64 {
    smooth_step((r - 0.5) / 0.5)
}

/// Angular gate: 0 where |η| ≤ 0.35 |ξ| / c_cone, 1 where
/// |η| ≥ 0.7 |ξ| / c_cone. The transition band sits strictly inside the
/// cone {|ξ| ≥ c_cone |η|}, and the gate is identically zero in a full
/// neighborhood of the ξ-axis — the structural zero that makes the
/// corrected operator annihilate leaf-constant functions at machine
/// precision rather than up to discretization.
pub fn angular_gate(xi: f64, eta: f64, c_cone: f64) -> f64 {
    debug_assert!(c_cone > 0.0, "cone aperture must be positive");
    if eta == 0.0 {
        return 0.0;
    }
    if xi == 0.0 {
        return 1.0;
    }
    let ratio = (eta / xi).abs();
    let q0 = 0.35 / c_cone;
    let q1 = 0.7 / c_cone;
    smooth_step((ratio - q0) / (q1 - q0))
}

/// Unwrapped phase field of a symbol table: along each chain of ascending
/// |ζ| (fixed angle for polar sampling, fixed η row in ascending-ξ order
/// for lattices) the argument is continued continuously instead of being
/// clamped to the principal branch, and it is held through near-zero values
/// where the argument is meaningless.
fn unwrap_phase(a: &SymbolGrid) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    let (nx, ny) = a.n_base();
    let nz = a.zeta.len();
    let chains: Vec<Vec<usize>> = match &a.zeta {
        ZetaSampling::Polar { radii, angles } => {
            let na = angles.len();
            let mut by_r: Vec<usize> = (0..radii.len()).collect();
            by_r.sort_by(|&p, &q| radii[p].partial_cmp(&radii[q]).unwrap());
            (0..na)
                .map(|ia| by_r.iter().map(|&ir| ir * na + ia).collect())
                .collect()
        }
        ZetaSampling::Lattice { xi, eta, .. } => {
            let nl = eta.len();
            let mut by_xi: Vec<usize> = (0..xi.len()).collect();
            by_xi.sort_by(|&p, &q| xi[p].partial_cmp(&xi[q]).unwrap());
            (0..nl)
                .map(|il| by_xi.iter().map(|&ik| ik * nl + il).collect())
                .collect()
        }
    };
    let mut theta = vec![0.0f64; a.values.len()];
    for ix in 0..nx {
        for iy in 0..ny {
            let scale = (0..nz)
                .map(|iz| a.value(ix, iy, iz).norm())
                .fold(0.0f64, f64::max);
            let floor = 1e-12 * scale;
            for chain in &chains {
                let mut th = 0.0;
                let mut started = false;
                for &iz in chain {
                    let v = a.value(ix, iy, iz);
                    if v.norm() > floor {
                        if started {
                            let d = v.arg() - th;
                            th += d - tau * (d / tau).round();
                        } else {
                            th = v.arg();
                            started = true;
                        }
                    }
                    theta[a.idx(ix, iy, iz)] = th;
                }
            }
        }
    }
    theta
}

/// A built completion: the correction symbol, the phase-aligned input, and
/// the constants the construction committed to.
#[derive(Clone, Debug)]
pub struct Completion {
    /// Real correction symbol, zero near the ξ-axis, near the origin, and
    /// wherever the certified symbol already clears the threshold.
    pub a1: SymbolGrid,
    /// e^{−iθ} a₀ with θ the unwrapped phase: a real-positive-leaning copy
    /// of the input whose real part carries the certified lower bound.
    pub phase_adjusted: SymbolGrid,
    /// Completion threshold C: corrected directional values land in
    /// [C/2, 2C] wherever the gate and taper are fully open.
    pub threshold: f64,
    /// The cone constant the internal scan certified.
    pub cone_constant: f64,
    /// Largest |ζ| · Re(e^{−iθ} a₀) over the table; the threshold is chosen
    /// with 2C ≥ peak so the corrected values never exceed 2C.
    pub peak: f64,
}

impl Completion {
    /// The corrected symbol e^{−iθ} a₀ + a₁.
    pub fn completed(&self) -> SymbolGrid {
        let mut out = self.phase_adjusted.clone();
        for (o, c) in out.values.iter_mut().zip(self.a1.values.iter()) {
            *o += c;
        }
        out
    }

    /// Range of the directional sums |ζ| · Re(e^{−iθ} a₀ + a₁) over nodes
    /// with |ζ| ≥ `radius_floor`; `None` when no node qualifies.
    pub fn b_sum_range(&self, radius_floor: f64) -> Option<(f64, f64)> {
        let (nx, ny) = self.a1.n_base();
        let nz = self.a1.zeta.len();
        let mut range: Option<(f64, f64)> = None;
        for ix in 0..nx {
            for iz in 0..nz {
                let (xi, eta) = self.a1.zeta_at(ix, iz);
                let r = xi.hypot(eta);
                if r < radius_floor {
                    continue;
                }
                for iy in 0..ny {
                    let id = self.a1.idx(ix, iy, iz);
                    let s =
                        r * (self.phase_adjusted.values[id].re + self.a1.values[id].re);
                    range = Some(match range {
                        None => (s, s),
                        Some((lo, hi)) => (lo.min(s), hi.max(s)),
                    });
                }
            }
        }
        range
    }
}

/// Build the elliptic completion of a cone-certified symbol table.
///
/// The cone's claimed constant is re-verified by an internal scan before
/// anything is built; an uncertified claim is rejected. The completion
/// threshold is C = max(c_ell, peak/2), which brackets the corrected
/// directional values in [min(C/2, c_ell), 2C]:
///
/// * off the cone the gate is open and the sum equals the smooth floor,
///   which lives in [C/2, C];
/// * on the cone the correction is gated off near the axis and the
///   certified bound c_ell stands;
/// * nowhere does the correction push a value past max(C, peak) = 2C.
pub fn build_elliptic_completion(a0: &SymbolGrid, cone: &ConeSpec) -> Result<Completion> {
    if !(cone.c_ell > 0.0) {
        return Err(Error::validation(
            "cone certification absent: completion needs a positive certified cone constant",
        ));
    }
    let scan = ellipticity_scan(a0, cone)?;
    if !scan.certifies(cone.c_ell) {
        return Err(Error::validation(format!(
            "claimed cone constant {} is not certified by this table: scanned minimum {:.6e} \
             with {} violation(s)",
            cone.c_ell,
            scan.min_bound,
            scan.violations.len()
        )));
    }
    let theta = unwrap_phase(a0);
    let (nx, ny) = a0.n_base();
    let nz = a0.zeta.len();
    let mut adjusted = vec![Complex64::ZERO; a0.values.len()];
    let mut b0 = vec![0.0f64; a0.values.len()];
    let mut peak = 0.0f64;
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let id = a0.idx(ix, iy, iz);
                let (xi, eta) = a0.zeta_at(ix, iz);
                let v = Complex64::from_polar(1.0, -theta[id]) * a0.values[id];
                adjusted[id] = v;
                b0[id] = xi.hypot(eta) * v.re;
                peak = peak.max(b0[id]);
            }
        }
    }
    let c = cone.c_ell.max(0.5 * peak);
    let mut correction = vec![Complex64::ZERO; a0.values.len()];
    for ix in 0..nx {
        for iz in 0..nz {
            let (xi, eta) = a0.zeta_at(ix, iz);
            let r = xi.hypot(eta);
            if r == 0.0 {
                continue;
            }
            let gate = radial_taper(r) * angular_gate(xi, eta, cone.c_cone);
            if gate == 0.0 {
                continue;
            }
            for iy in 0..ny {
                let id = a0.idx(ix, iy, iz);
                let lift = smooth_floor(b0[id], c) - b0[id];
                correction[id] = Complex64::new(gate * lift / r, 0.0);
            }
        }
    }
    let phase_adjusted = SymbolGrid::new(
        a0.base_x.clone(),
        a0.base_y.clone(),
        a0.zeta.clone(),
        a0.order,
        adjusted,
    )?;
    let a1 = SymbolGrid::new(
        a0.base_x.clone(),
        a0.base_y.clone(),
        a0.zeta.clone(),
        a0.order,
        correction,
    )?;
    Ok(Completion {
        a1,
        phase_adjusted,
        threshold: c,
        cone_constant: cone.c_ell,
        peak,
    })
}
