//! Parametric planar dynamical systems and the data path around them:
//! rasterized vector fields, the angular representation, random spline
//! warps, trajectory integration, scattered-velocity interpolation, and
//! a binary dataset container.

pub mod dataset;
pub mod ode;
pub mod raster;
pub mod seed;
pub mod warp;
pub mod zoo;

pub use dataset::{read_dataset, write_dataset, Dataset, Manifest, Sample};
pub use raster::{AngleField, GridSpec, VectorField};
pub use zoo::{DynClass, System, SystemName};
