//! The conjugated averaged operator for the foliated geometry.
//!
//! The module combines three views of the same object:
//!
//! * the operator applied to a field ([`apply_af`]), a fused double
//!   quadrature over slope-cutoff rays through each evaluation point;
//! * its factored form e^{−F/x}·L(I(e^{F/x}·f)) built from the slope
//!   average [`backproject_l`] and the conjugated ray transform
//!   [`conjugated_xray`], used to cross-check the fused path;
//! * its Schwartz kernel in scattering coordinates ([`kernel_flat`]), whose
//!   boundary limit and decay underpin the symbol calculus.

mod chi;
mod kernel;
mod op;

pub use chi::{CutoffChi, GAUSSIAN_TRUNCATION_SIGMAS};
pub use kernel::{kernel_flat, scattering_branch, KernelValue, ScatteringBranch};
pub use op::{
    apply_af, apply_af_composed, backproject_l, backproject_l_adapted, conjugated_xray,
    damping_exponent, validate_slope_support, NormalField, NormalOpConfig, RayFunctional,
};
