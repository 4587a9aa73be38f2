//! Chart geometry: metrics, foliations, adapted frames, geodesics, convexity.

mod convexity;
mod foliation;
mod frame;
mod geodesic;
mod metric;

pub use convexity::{
    collar_margin,
    convexity_margin, leaf_points, second_derivative_along, MarginReport, MarginSample,
};
pub use foliation::{FoliationSpec, Rho};
pub use frame::{alpha, Frame};
pub use geodesic::{
    connect_geodesic, default_t_cap, ray_state_at, shoot_geodesic, trace_segment, ExitReason,
    FullSegment, GeodesicConfig, GeodesicPath, RaySample, Region,
};
pub use metric::{ChartMetric, Christoffel, MetricJet, MetricTensor, SampledMetric};
