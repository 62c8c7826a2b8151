//! Classical point-vs-cycle detectors the classifier is compared against:
//! critical-point topology on the raster, maximal Lyapunov exponent of an
//! integrated trajectory, and degree-3 polynomial coefficients fed to a
//! linear classifier.

pub mod critical;
pub mod linear;
pub mod lyapunov;
pub mod polyfit;
pub mod roc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("both classes must be present")]
    DegenerateLabels,
}
