//! Numerical toolkit for the weighted geodesic X-ray transform on a 2D chart
//! carrying a convex foliation.
//!
//! The chart is a rectangle with a Riemannian metric g. A boundary defining
//! function ρ and a depth function x̃(z) = −ρ(z) − ε|z−p|² foliate a collar
//! Ω_c = {x̃ ≥ −c, ρ ≥ 0} by the level sets Σ_t = x̃⁻¹(−t). Geodesics are
//! parameterized near the artificial boundary {x = x̃ + c = 0} by initial
//! conditions (x, y, λ, ω) with ω = ±1 the transverse component.
//!
//! The crate provides, bottom up:
//!
//! * [`geometry`] — metrics, Christoffel symbols, geodesic shooting with exit
//!   detection, foliation depth functions and adapted frames, convexity
//!   margins.
//! * [`transform`] — integration weights ϱ, depth profiles and their lifts,
//!   the weighted ray transform and sinogram assembly.
//! * [`normal_op`] — the cutoff backprojection L, the exponentially conjugated
//!   normal operator A_F (direct and composed forms), and its near-boundary
//!   kernel in scattering coordinates.
//! * [`symbols`] — closed-form and quadrature-based boundary symbols of A_F,
//!   critical-point data, ellipticity scans over cones, elliptic completion,
//!   discrete left quantization, and annihilation checks on adapted functions.
//! * [`inversion`] — regularized least-squares recovery of depth profiles,
//!   contraction probes over a ladder of depths, layer stripping, and
//!   stability-ratio reports in exponentially weighted norms.
//! * [`io`] — a small self-describing grid file format (JSON sidecar header
//!   plus little-endian binary payload).
//! * [`scene`] — ready-made metric/foliation/weight presets wired together.
//!
//! With the default `parallel` feature the ray- and grid-level loops run on
//! rayon; disabling it yields a sequential build with identical results.

pub mod error;
pub mod par;
pub mod vec2;

pub mod geometry;
pub mod grid;
// Higher modules land bottom-up; declarations are introduced as files arrive.
pub mod transform;
pub mod normal_op;
pub mod symbols;
pub mod inversion;
pub mod io;
pub mod scene;

pub use error::{Error, Result};
pub use vec2::Vec2;
