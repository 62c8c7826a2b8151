//! Maximal Lyapunov exponent by nearest-neighbor divergence on a delay
//! embedding, plus trajectory extraction from closed-form systems or
//! velocity rasters so the estimate can label either.

use dynamics::ode::{integrate, OdeError};
use dynamics::raster::VectorField;
use dynamics::seed::rng_from;
use dynamics::zoo::{DynClass, System};
use rand::Rng;
use thiserror::Error;

/// Sampling interval of the integrated trajectory.
pub const SAMPLE_DT: f64 = 0.1;
/// Integration horizon.
pub const HORIZON: f64 = 100.0;
const MIN_SERIES: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct LyapunovOpts {
    /// Delay-embedding dimension.
    pub dim: usize,
    /// Delay in samples; None picks the first autocorrelation zero crossing.
    pub lag: Option<usize>,
}

impl Default for LyapunovOpts {
    fn default() -> Self {
        Self { dim: 4, lag: None }
    }
}

/// Which state coordinate becomes the scalar series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    X,
    Y,
}

impl Projection {
    fn index(self) -> usize {
        match self {
            Projection::X => 0,
            Projection::Y => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("series of {0} samples is shorter than {MIN_SERIES}")]
    TooShort(usize),
    #[error("no valid divergence pairs in the embedding")]
    NoValidNeighbors,
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Rosenstein estimate: embed, pair each point with its nearest neighbor
/// outside a temporal exclusion window, average log separations forward in
/// time, and read the exponent off the initial slope (per unit time).
pub fn lyapunov_max(series: &[f64], opts: &LyapunovOpts) -> Result<f64, LyapunovError> {
    let n = series.len();
    if n < MIN_SERIES {
        return Err(LyapunovError::TooShort(n));
    }
    assert!(opts.dim >= 2);
    let lag = opts.lag.unwrap_or_else(|| auto_lag(series)).max(1);
    let span = (opts.dim - 1) * lag;
    if n <= span + 2 {
        return Err(LyapunovError::TooShort(n));
    }
    let m = n - span;

    let point = |i: usize, k: usize| series[i + k * lag];
    let dist = |i: usize, j: usize| {
        let mut sq = 0.0;
        for k in 0..opts.dim {
            let d = point(i, k) - point(j, k);
            sq += d * d;
        }
        sq.sqrt()
    };

    // Temporal exclusion spans the embedding window so a trajectory is never
    // paired with its own immediate past.
    let exclusion = span;
    let mut pairs = Vec::new();
    for i in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if i.abs_diff(j) <= exclusion {
                continue;
            }
            let d = dist(i, j);
            if d > 0.0 && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() {
        return Err(LyapunovError::NoValidNeighbors);
    }

    let horizon = (m / 2).max(2);
    let mut curve = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let mut sum = 0.0;
        let mut count = 0usize;
        for &(i, j) in &pairs {
            if i + k >= m || j + k >= m {
                continue;
            }
            let d = dist(i + k, j + k);
            if d > 0.0 {
                sum += d.ln();
                count += 1;
            }
        }
        if count == 0 {
            break;
        }
        curve.push(sum / count as f64);
    }
    if curve.len() < 2 {
        return Err(LyapunovError::NoValidNeighbors);
    }

    let fit_len = (curve.len() / 3).max(2);
    Ok(slope(&curve[..fit_len]) / SAMPLE_DT)
}

/// First zero crossing of the autocorrelation, the usual delay heuristic;
/// falls back to 10 when the series never decorrelates in the first eighth.
fn auto_lag(series: &[f64]) -> usize {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var == 0.0 {
        return 10;
    }
    for k in 1..n / 8 {
        let c: f64 = (0..n - k).map(|i| (series[i] - mean) * (series[i + k] - mean)).sum();
        if c <= 0.0 {
            return k;
        }
    }
    10
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        num += dx * (y - mean_y);
        den += dx * dx;
    }
    num / den
}

/// Seeded start uniform over the middle 80% of the extent, away from the
/// border where clamped rasters flatten.
fn start_point(extent: [[f64; 2]; 2], seed: u64) -> [f64; 2] {
    let mut rng = rng_from(seed);
    let mut coord = |axis: usize| {
        let [lo, hi] = extent[axis];
        let margin = 0.1 * (hi - lo);
        rng.gen_range(lo + margin..hi - margin)
    };
    let x = coord(0);
    let y = coord(1);
    [x, y]
}

/// Integrates the closed-form system and projects one coordinate.
pub fn lyapunov_score_system(
    system: &System,
    seed: u64,
    projection: Projection,
) -> Result<f64, LyapunovError> {
    let extent = system.extent().expect("planar system");
    let start = start_point(extent, seed);
    let traj = integrate(|s, out| system.rhs(s, out), &start, HORIZON, SAMPLE_DT)?;
    let series: Vec<f64> = traj.states.iter().map(|s| s[projection.index()]).collect();
    lyapunov_max(&series, &LyapunovOpts::default())
}

/// Integrates the raster under bilinear interpolation (clamped at the
/// extent) and projects one coordinate.
pub fn lyapunov_score_field(
    field: &VectorField,
    seed: u64,
    projection: Projection,
) -> Result<f64, LyapunovError> {
    let start = start_point(field.grid.extent, seed);
    let traj = integrate(
        |s, out| {
            let (u, v) = sample_bilinear(field, s[0], s[1]);
            out[0] = u;
            out[1] = v;
        },
        &start,
        HORIZON,
        SAMPLE_DT,
    )?;
    let series: Vec<f64> = traj.states.iter().map(|s| s[projection.index()]).collect();
    lyapunov_max(&series, &LyapunovOpts::default())
}

pub fn classify_lyapunov_system(
    system: &System,
    threshold: f64,
    seed: u64,
) -> Result<DynClass, LyapunovError> {
    Ok(label(lyapunov_score_system(system, seed, Projection::X)?, threshold))
}

pub fn classify_lyapunov_field(
    field: &VectorField,
    threshold: f64,
    seed: u64,
) -> Result<DynClass, LyapunovError> {
    Ok(label(lyapunov_score_field(field, seed, Projection::X)?, threshold))
}

/// Decaying series score below the threshold; near-zero exponents above it
/// read as sustained oscillation.
pub fn label(score: f64, threshold: f64) -> DynClass {
    if score > threshold {
        DynClass::PeriodicAttractor
    } else {
        DynClass::PointAttractor
    }
}

/// Velocity at an arbitrary point, bilinear between lattice neighbors and
/// clamped to the extent outside it.
pub fn sample_bilinear(field: &VectorField, x: f64, y: f64) -> (f64, f64) {
    let g = &field.grid;
    let fx = ((x - g.extent[0][0]) / (g.extent[0][1] - g.extent[0][0])
        * (g.width - 1) as f64)
        .clamp(0.0, (g.width - 1) as f64);
    let fy = ((y - g.extent[1][0]) / (g.extent[1][1] - g.extent[1][0])
        * (g.height - 1) as f64)
        .clamp(0.0, (g.height - 1) as f64);
    let c0 = (fx as usize).min(g.width - 2);
    let r0 = (fy as usize).min(g.height - 2);
    let s = fx - c0 as f64;
    let t = fy - r0 as f64;
    let at = |r: usize, c: usize| r * g.width + c;
    let lerp2 = |q: &[f64]| {
        q[at(r0, c0)] * (1.0 - s) * (1.0 - t)
            + q[at(r0, c0 + 1)] * s * (1.0 - t)
            + q[at(r0 + 1, c0)] * (1.0 - s) * t
            + q[at(r0 + 1, c0 + 1)] * s * t
    };
    (lerp2(&field.u), lerp2(&field.v))
}
