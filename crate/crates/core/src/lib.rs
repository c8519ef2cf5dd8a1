//! Plurisubharmonic envelopes with a logarithmic pole, their equilibrium
//! sets, the associated geodesic rays and the Monge-Ampère foliation.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases.

pub mod envelope;
pub mod error;
pub mod foliation;
pub mod geodesic;
pub mod grid;
pub mod hull;
pub mod measure;
pub mod poly;
pub mod polyline;
pub mod potential;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};

pub type GridSpec64 = grid::GridSpec<f64>;
pub type ScalarField64 = grid::ScalarField<f64>;
pub type Potential64 = potential::Potential<f64>;
pub type EnvelopeResult64 = envelope::EnvelopeResult<f64>;
pub type GeodesicRay64 = geodesic::GeodesicRay<f64>;
pub type Leaf64 = foliation::Leaf<f64>;
pub type TubularMap64 = foliation::TubularMap<f64>;
pub type Polyline64 = polyline::Polyline<f64>;

pub type GridSpec32 = grid::GridSpec<f32>;
pub type ScalarField32 = grid::ScalarField<f32>;
pub type Potential32 = potential::Potential<f32>;
pub type EnvelopeResult32 = envelope::EnvelopeResult<f32>;
pub type GeodesicRay32 = geodesic::GeodesicRay<f32>;
pub type Leaf32 = foliation::Leaf<f32>;
pub type TubularMap32 = foliation::TubularMap<f32>;
pub type Polyline32 = polyline::Polyline<f32>;
