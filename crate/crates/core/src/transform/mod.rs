//! Weights, adapted profiles, and the weighted geodesic ray transform.

mod profile;
mod ray;
mod weight;

pub use profile::{lift_adapted, AdaptedField, AdaptedProfile, DEFAULT_PROFILE_SAMPLES};
pub(crate) use ray::launch_of;
pub use ray::{
    integrate_segment, sinogram, xray, RayIntegral, RayTable, Sinogram, SinogramGrid, OMEGAS,
};
pub use weight::{eval_weight, WeightSpec, COINCIDENCE_RADIUS};
