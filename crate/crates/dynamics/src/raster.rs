//! Lattice evaluation of systems, the relative-scale noise protocol, and the
//! signed-angle representation fed to the classifier.

use crate::zoo::System;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Endpoints-inclusive uniform lattice over a rectangular extent.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// `[[xmin, xmax], [ymin, ymax]]`.
    pub extent: [[f64; 2]; 2],
}

impl GridSpec {
    pub fn new(width: usize, height: usize, extent: [[f64; 2]; 2]) -> GridSpec {
        assert!(width >= 2 && height >= 2, "lattice needs at least 2 points per axis");
        assert!(extent[0][0] < extent[0][1] && extent[1][0] < extent[1][1]);
        GridSpec { width, height, extent }
    }

    /// Default 64x64 lattice over `extent`.
    pub fn square64(extent: [[f64; 2]; 2]) -> GridSpec {
        GridSpec::new(64, 64, extent)
    }

    pub fn x_at(&self, col: usize) -> f64 {
        let [lo, hi] = self.extent[0];
        lo + (hi - lo) * col as f64 / (self.width - 1) as f64
    }

    pub fn y_at(&self, row: usize) -> f64 {
        let [lo, hi] = self.extent[1];
        lo + (hi - lo) * row as f64 / (self.height - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Velocity raster; entry `[row*width + col]` is the value at
/// `(x_at(col), y_at(row))`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub grid: GridSpec,
}

/// Signed-angle raster in (−π, π].
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    pub phi: Vec<f64>,
    pub grid: GridSpec,
}

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("grid extent {grid:?} does not match system extent {system:?}")]
    ExtentMismatch { grid: [[f64; 2]; 2], system: [[f64; 2]; 2] },
    #[error("system has no planar extent")]
    NotPlanar,
}

impl VectorField {
    /// Root-mean-square vector magnitude; the reference scale for noise.
    pub fn rms_magnitude(&self) -> f64 {
        let sum: f64 = self.u.iter().zip(&self.v).map(|(u, v)| u * u + v * v).sum();
        (sum / self.grid.len() as f64).sqrt()
    }
}

/// Evaluates the system on the lattice. The grid extent must equal the
/// system's declared extent.
pub fn rasterize(system: &System, grid: &GridSpec) -> Result<VectorField, RasterError> {
    let extent = system.extent().ok_or(RasterError::NotPlanar)?;
    if extent != grid.extent {
        return Err(RasterError::ExtentMismatch { grid: grid.extent, system: extent });
    }
    Ok(rasterize_unchecked(system, grid))
}

/// Lattice evaluation without the extent guard, for callers that rasterize
/// over a window other than the system's own (warps, boundary studies).
pub fn rasterize_unchecked(system: &System, grid: &GridSpec) -> VectorField {
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    let mut out = [0.0; 2];
    for row in 0..grid.height {
        let y = grid.y_at(row);
        for col in 0..grid.width {
            system.rhs(&[grid.x_at(col), y], &mut out);
            u[row * grid.width + col] = out[0];
            v[row * grid.width + col] = out[1];
        }
    }
    VectorField { u, v, grid: grid.clone() }
}

/// Adds i.i.d. N(0, (sigma·s)²) to every component, where s is the field's
/// RMS vector magnitude; sigma=0 returns the input unchanged. Noise is drawn
/// for all u entries in raster order, then all v entries.
pub fn add_noise<R: Rng>(field: &VectorField, sigma: f64, rng: &mut R) -> VectorField {
    assert!(sigma >= 0.0);
    let scale = sigma * field.rms_magnitude();
    if scale == 0.0 {
        return field.clone();
    }
    let mut out = field.clone();
    for value in out.u.iter_mut().chain(out.v.iter_mut()) {
        *value += scale * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

/// Quadrant-correct signed angle of (u, v) in (−π, π]; the zero vector maps
/// to 0. Computed from the single quotient v/u so that exactly-representable
/// rescalings of both components give bit-identical angles.
pub fn angle_of(u: f64, v: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if v == 0.0 {
        return if u < 0.0 { PI } else { 0.0 };
    }
    if u == 0.0 {
        return if v > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
    }
    let q = (v / u).atan();
    let phi = if u > 0.0 {
        q
    } else if v > 0.0 {
        q + PI
    } else {
        q - PI
    };
    // For v < 0 infinitesimally below the branch cut, q − π rounds to −π;
    // fold it onto +π (the same direction) to keep the range half-open.
    if phi == -PI {
        PI
    } else {
        phi
    }
}

/// Converts a velocity raster to the signed-angle representation.
pub fn to_angles(field: &VectorField) -> AngleField {
    let phi = field.u.iter().zip(&field.v).map(|(&u, &v)| angle_of(u, v)).collect();
    AngleField { phi, grid: field.grid.clone() }
}
