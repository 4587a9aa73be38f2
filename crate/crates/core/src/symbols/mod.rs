//! Symbol calculus for the conjugated normal operator.
//!
//! The pipeline runs: tabulate a symbol on a product grid ([`SymbolGrid`]),
//! scan its ellipticity over a cone of directions ([`ellipticity_scan`]),
//! complete it into an everywhere-elliptic symbol whose correction spares
//! the foliation axis ([`build_elliptic_completion`]), and apply the result
//! to grid functions by discrete left quantization ([`quantize_left`]).
//! Closed-form boundary values, stationary-phase reductions, and two
//! independent quadrature routes to the same symbol keep every stage
//! cross-checked against the others.

mod boundary;
mod completion;
mod grid;
mod numeric;
mod quantize;

pub use boundary::{
    boundary_symbol_closed, calibrate_symbol_constant, critical_points, model_phase,
    stationary_phase_symbol, CriticalPoint,
};
pub use completion::{
    angular_gate, build_elliptic_completion, radial_taper, smooth_floor, smooth_step, Completion,
};
pub use grid::{
    ellipticity_csv, ellipticity_scan, ellipticity_scan_all, ConeSpec, ScanReport, ScanViolation,
    SymbolGrid, ZetaSampling, DYADIC_SPAN_MIN, SCAN_RADIUS_FLOOR,
};
pub use numeric::{
    boundary_symbol_from_kernel, boundary_symbol_quadrature, numeric_symbol, SymbolConfig,
};
pub use quantize::{
    annihilation_residual, axis_from_nodes, lattice_frequencies, quantize_left,
    resample_to_adapted, scattering_lattice, verify_annihilation, EDGE_TRIM,
};
