//! Synthetic depth profiles ("phantoms") the driver feeds to the forward
//! model. Every kind is a function of the adapted depth alone, sampled onto
//! the requested number of profile nodes.

use foliated_xray::error::{Error, Result};
use foliated_xray::transform::AdaptedProfile;

use crate::config::PhantomCfg;

/// Quintic smoothstep: 0 below 0, 1 above 1, C² across both ends.
fn smooth01(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (6.0 * t - 15.0))
    }
}

/// Build the configured phantom on `n` nodes over collar depth `c`.
///
/// Kinds:
/// * `gaussian-bump` — `amp · exp(−(x̃−center)²/2·width²)`;
/// * `piecewise-linear` — linear interpolation through `knots`, clamped
///   outside; the default is a tent peaking mid-collar;
/// * `step` — transition from `value_lo` (deep) to `value_hi` (shallow) at
///   `center`, mollified over `width`; a raw jump (`width = 0`) is rejected
///   because the solvers' function class needs more smoothness than a jump
///   carries;
/// * `deep-support` — a C² bump supported in `[−c, −c/2]`, identically zero
///   above half depth.
pub fn make_phantom(cfg: &PhantomCfg, c: f64, n: usize) -> Result<AdaptedProfile> {
    let center = cfg.center.unwrap_or(-0.45 * c);
    let width = cfg.width.unwrap_or(0.16 * c);
    let amp = cfg.amplitude;
    match cfg.kind.as_str() {
        "gaussian-bump" => {
            if !(width > 0.0) {
                return Err(Error::validation("gaussian-bump needs a positive width"));
            }
            AdaptedProfile::from_fn(c, n, |s| {
                let m = (s - center) / width;
                amp * (-0.5 * m * m).exp()
            })
        }
        "piecewise-linear" => {
            let default_knots = vec![(-c, 0.0), (-0.5 * c, 1.0), (0.0, 0.0)];
            let knots = cfg.knots.clone().unwrap_or(default_knots);
            if knots.len() < 2 {
                return Err(Error::validation(
                    "piecewise-linear needs at least two knots",
                ));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::validation(
                    "piecewise-linear knots must have strictly increasing depths",
                ));
            }
            AdaptedProfile::from_fn(c, n, move |s| {
                if s <= knots[0].0 {
                    return amp * knots[0].1;
                }
                if s >= knots[knots.len() - 1].0 {
                    return amp * knots[knots.len() - 1].1;
                }
                let k = knots.partition_point(|&(x, _)| x <= s) - 1;
                let (x0, v0) = knots[k];
                let (x1, v1) = knots[k + 1];
                amp * (v0 + (v1 - v0) * (s - x0) / (x1 - x0))
            })
        }
        "step" => {
            if !(width > 0.0) {
                return Err(Error::validation(
                    "a step phantom needs a positive mollification width: the \
                     adapted function class excludes raw jumps",
                ));
            }
            let (lo, hi) = (cfg.value_lo, cfg.value_hi);
            AdaptedProfile::from_fn(c, n, move |s| {
                amp * (lo + (hi - lo) * smooth01((s - center) / width + 0.5))
            })
        }
        "deep-support" => AdaptedProfile::from_fn(c, n, move |s| {
            // Support exactly [−c, −c/2]: map it to [−1, 1] and use (1−u²)³.
            let u = (s + 0.75 * c) / (0.25 * c);
            if u.abs() >= 1.0 {
                0.0
            } else {
                let b = 1.0 - u * u;
                amp * b * b * b
            }
        }),
        other => Err(Error::argument(format!(
            "unknown phantom kind '{other}' (expected gaussian-bump, \
             piecewise-linear, step, or deep-support)"
        ))),
    }
}
