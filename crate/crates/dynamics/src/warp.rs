//! Random bounded monotone rational-quadratic spline diffeomorphisms and the
//! topological augmentation g(Y) = f(h⁻¹(Y)).
//!
//! Each axis carries an independent spline: strictly increasing on [−B, B],
//! the identity outside, C¹ at ±B (boundary derivatives are 1). Warping is
//! done in normalized coordinates where the system extent is the box [−1, 1]²
//! sitting inside the spline's active interval, so the warped fixed point can
//! leave the field of view while the map stays bijective; the in-frame check
//! rejects exactly those samples.

use crate::dataset::{Dataset, Manifest, Sample};
use crate::raster::{add_noise, to_angles, GridSpec, RasterError, VectorField};
use crate::seed::{derive, rng_from, splitmix64};
use crate::zoo::{make_system, sample_params, System, SystemName, ZooError};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Spline family parameters, serialized into dataset manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Half-width of the active interval [−B, B].
    pub b: f64,
    /// Bin count per axis.
    pub k: usize,
    pub width_floor: f64,
    pub deriv_floor: f64,
    /// Coordinate convention: the system extent maps affinely onto `frame`
    /// before the spline is applied.
    pub normalization: String,
    pub frame: [f64; 2],
}

impl Default for AugmentConfig {
    fn default() -> AugmentConfig {
        AugmentConfig {
            b: 4.0,
            k: 5,
            width_floor: 1e-3,
            deriv_floor: 1e-3,
            normalization: "extent_to_unit".into(),
            frame: [-1.0, 1.0],
        }
    }
}

/// Monotone rational-quadratic spline on [−b, b], identity outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    /// K+1 knot inputs, strictly increasing, xs[0] = −b, xs[K] = b.
    pub xs: Vec<f64>,
    /// K+1 knot outputs, same endpoints.
    pub ys: Vec<f64>,
    /// K+1 knot derivatives, strictly positive, 1 at both boundaries.
    pub ds: Vec<f64>,
    pub b: f64,
}

/// Per-axis spline pair; a diffeomorphism of the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffeo {
    pub x: Spline,
    pub y: Spline,
    pub b: f64,
    /// Content-derived identifier for provenance.
    pub id: u64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Builds one axis spline from raw parameters: softmax-normalized bin
/// fractions with a per-bin floor, softplus-mapped derivatives with a floor,
/// calibrated so that all-zero raws give the identity map exactly.
pub fn spline_from_raws(
    b: f64,
    raw_widths: &[f64],
    raw_heights: &[f64],
    raw_derivs: &[f64],
    cfg: &AugmentConfig,
) -> Spline {
    let k = raw_widths.len();
    assert!(b > 0.0 && k >= 1);
    assert_eq!(raw_heights.len(), k);
    assert_eq!(raw_derivs.len(), k - 1);

    let knots = |raws: &[f64]| -> Vec<f64> {
        let max = raws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = raws.iter().map(|r| (r - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut out = Vec::with_capacity(k + 1);
        let mut pos = -b;
        out.push(pos);
        for e in &exps {
            let frac = cfg.width_floor + (1.0 - k as f64 * cfg.width_floor) * e / total;
            pos += 2.0 * b * frac;
            out.push(pos);
        }
        out[k] = b; // absorb cumulative rounding so the last knot is exact
        out
    };

    let mut ds = Vec::with_capacity(k + 1);
    ds.push(1.0);
    for &r in raw_derivs {
        // Exact unit derivative at raw 0 anchors the identity-map calibration.
        let d = if r == 0.0 {
            1.0
        } else {
            cfg.deriv_floor + (1.0 - cfg.deriv_floor) * softplus(r) / std::f64::consts::LN_2
        };
        ds.push(d);
    }
    ds.push(1.0);

    Spline { xs: knots(raw_widths), ys: knots(raw_heights), ds, b }
}

/// Draws a random diffeomorphism. Raws are i.i.d. standard normal, drawn per
/// axis as: K widths, K heights, K−1 interior derivatives.
pub fn sample_diffeo<R: Rng>(rng: &mut R, cfg: &AugmentConfig) -> Diffeo {
    let mut axis = || {
        let draw = |rng: &mut R, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let w = draw(rng, cfg.k);
        let h = draw(rng, cfg.k);
        let d = draw(rng, cfg.k - 1);
        spline_from_raws(cfg.b, &w, &h, &d, cfg)
    };
    let x = axis();
    let y = axis();
    let id = [&x, &y]
        .iter()
        .flat_map(|s| s.xs.iter().chain(&s.ys).chain(&s.ds))
        .fold(0u64, |acc, v| splitmix64(acc ^ v.to_bits()));
    Diffeo { x, y, b: cfg.b, id }
}

impl Spline {
    fn bin_of(&self, knots: &[f64], t: f64) -> usize {
        knots.partition_point(|&k| k <= t).saturating_sub(1).min(self.xs.len() - 2)
    }

    fn is_identity_bin(&self, k: usize) -> bool {
        self.xs[k] == self.ys[k]
            && self.xs[k + 1] == self.ys[k + 1]
            && self.ds[k] == 1.0
            && self.ds[k + 1] == 1.0
    }

    /// Forward map h(x); identity outside [−b, b].
    pub fn forward(&self, x: f64) -> f64 {
        if !(x > -self.b && x < self.b) {
            return x;
        }
        let k = self.bin_of(&self.xs, x);
        if self.is_identity_bin(k) {
            return x;
        }
        let w = self.xs[k + 1] - self.xs[k];
        let h = self.ys[k + 1] - self.ys[k];
        let s = h / w;
        let xi = (x - self.xs[k]) / w;
        let t = self.ds[k + 1] + self.ds[k] - 2.0 * s;
        let omx = 1.0 - xi;
        let num = h * (s * xi * xi + self.ds[k] * xi * omx);
        let den = s + t * xi * omx;
        self.ys[k] + num / den
    }

    /// Inverse map h⁻¹(y); closed-form per-bin quadratic solve.
    pub fn inverse(&self, y: f64) -> f64 {
        if !(y > -self.b && y < self.b) {
            return y;
        }
        let k = self.bin_of(&self.ys, y);
        if self.is_identity_bin(k) {
            return y;
        }
        let w = self.xs[k + 1] - self.xs[k];
        let h = self.ys[k + 1] - self.ys[k];
        let s = h / w;
        let t = self.ds[k + 1] + self.ds[k] - 2.0 * s;
        let d = y - self.ys[k];
        // Solve a·ξ² + b·ξ + c = 0 for the root in [0,1]; this branch of the
        // quadratic formula selects it for either sign of `a`.
        let a = h * (s - self.ds[k]) + d * t;
        let b = h * self.ds[k] - d * t;
        let c = -d * s;
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let xi = 2.0 * c / (-b - disc.sqrt());
        self.xs[k] + xi * w
    }

    /// Analytic derivative dh/dx; 1 outside the active interval.
    pub fn derivative(&self, x: f64) -> f64 {
        if !(x > -self.b && x < self.b) {
            return 1.0;
        }
        let k = self.bin_of(&self.xs, x);
        let w = self.xs[k + 1] - self.xs[k];
        let h = self.ys[k + 1] - self.ys[k];
        let s = h / w;
        let xi = (x - self.xs[k]) / w;
        let t = self.ds[k + 1] + self.ds[k] - 2.0 * s;
        let omx = 1.0 - xi;
        let den = s + t * xi * omx;
        s * s * (self.ds[k + 1] * xi * xi + 2.0 * s * xi * omx + self.ds[k] * omx * omx) / (den * den)
    }
}

impl Diffeo {
    pub fn forward(&self, p: [f64; 2]) -> [f64; 2] {
        [self.x.forward(p[0]), self.y.forward(p[1])]
    }

    pub fn inverse(&self, p: [f64; 2]) -> [f64; 2] {
        [self.x.inverse(p[0]), self.y.inverse(p[1])]
    }
}

/// Affine map from `[lo, hi]` onto [−1, 1].
fn normalize(t: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * t - (lo + hi)) / (hi - lo)
}

fn denormalize(t: f64, lo: f64, hi: f64) -> f64 {
    ((lo + hi) + t * (hi - lo)) / 2.0
}

/// Warped field g(Y) = f(h⁻¹(Y)) on the system's lattice; the extent is
/// normalized onto [−1,1]² before the spline acts.
pub fn warp_field(
    system: &System,
    diffeo: &Diffeo,
    grid: &GridSpec,
) -> Result<VectorField, RasterError> {
    let extent = system.extent().ok_or(RasterError::NotPlanar)?;
    if extent != grid.extent {
        return Err(RasterError::ExtentMismatch { grid: grid.extent, system: extent });
    }
    let pull = |spline: &Spline, t: f64, [lo, hi]: [f64; 2]| -> f64 {
        let n = normalize(t, lo, hi);
        let back = spline.inverse(n);
        // A coordinate the spline leaves untouched bypasses denormalization,
        // so an identity diffeo reproduces `rasterize` bit-for-bit.
        if back.to_bits() == n.to_bits() {
            t
        } else {
            denormalize(back, lo, hi)
        }
    };
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    let mut out = [0.0; 2];
    for row in 0..grid.height {
        let src_y = pull(&diffeo.y, grid.y_at(row), extent[1]);
        for col in 0..grid.width {
            let src_x = pull(&diffeo.x, grid.x_at(col), extent[0]);
            system.rhs(&[src_x, src_y], &mut out);
            u[row * grid.width + col] = out[0];
            v[row * grid.width + col] = out[1];
        }
    }
    Ok(VectorField { u, v, grid: grid.clone() })
}

/// True iff the warped image of the system's fixed point stays inside the
/// field of view (the normalized extent box).
pub fn fixed_point_in_frame(system: &System, diffeo: &Diffeo) -> Result<bool, ZooError> {
    let fp = system.fixed_point().ok_or(ZooError::UnsupportedSystem(system.name.id()))?;
    let extent = system.extent().ok_or(ZooError::UnsupportedSystem(system.name.id()))?;
    let nx = normalize(fp[0], extent[0][0], extent[0][1]);
    let ny = normalize(fp[1], extent[1][0], extent[1][1]);
    let warped = diffeo.forward([nx, ny]);
    Ok(warped[0].abs() <= 1.0 && warped[1].abs() <= 1.0)
}

/// Augmented-dataset generation options.
#[derive(Debug, Clone, Copy)]
pub struct AugmentOptions {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub sigma: f64,
}

/// One augmented SO sample addressed by (seed, index); independent of every
/// other index, so batches may be built in any order. Returns the sample and
/// the number of rejected out-of-frame diffeos.
pub fn augmented_sample(seed: u64, index: u64, sigma: f64) -> (Sample, u32) {
    let mut rng = rng_from(derive(seed, index));
    let cfg = AugmentConfig::default();
    let params = sample_params(SystemName::SimpleOscillator, 1, &mut rng).remove(0);
    let system = make_system(SystemName::SimpleOscillator, &params).expect("in range");
    let grid = GridSpec::square64(system.extent().unwrap());

    let mut rejections = 0;
    let diffeo = loop {
        let d = sample_diffeo(&mut rng, &cfg);
        if fixed_point_in_frame(&system, &d).expect("SO has a fixed point") {
            break d;
        }
        rejections += 1;
    };

    let field = warp_field(&system, &diffeo, &grid).expect("grid matches extent");
    let noisy = add_noise(&field, sigma, &mut rng);
    let angles = to_angles(&noisy);
    (
        Sample {
            label: Some(system.true_label().unwrap()),
            params,
            boundary_distance: system.boundary_distance().unwrap(),
            angles: angles.phi.iter().map(|&a| a as f32).collect(),
            raw: Some((
                noisy.u.iter().map(|&x| x as f32).collect(),
                noisy.v.iter().map(|&x| x as f32).collect(),
            )),
        },
        rejections,
    )
}

/// Builds the Augmented SO train/test pair. Test samples continue the index
/// stream after the training samples, so the two splits never share a seed.
pub fn make_augmented_dataset(opts: &AugmentOptions) -> (Dataset, Dataset) {
    assert!(opts.n_train >= 1 && opts.n_test >= 1);
    let extent = SystemName::SimpleOscillator.extent().unwrap();
    let manifest = |split: &str| Manifest {
        seed: opts.seed,
        system: SystemName::SimpleOscillator.id().into(),
        param_names: SystemName::SimpleOscillator
            .param_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        sigma: opts.sigma,
        split: split.into(),
        extent,
        augment: Some(AugmentConfig::default()),
    };
    let build = |split: &str, range: std::ops::Range<usize>| Dataset {
        manifest: manifest(split),
        height: 64,
        width: 64,
        samples: range.map(|i| augmented_sample(opts.seed, i as u64, opts.sigma).0).collect(),
    };
    let train = build("train", 0..opts.n_train);
    let test = build("test", opts.n_train..opts.n_train + opts.n_test);
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::DynClass;

    fn identity_diffeo() -> Diffeo {
        let cfg = AugmentConfig::default();
        let s = spline_from_raws(cfg.b, &[0.0; 5], &[0.0; 5], &[0.0; 4], &cfg);
        Diffeo { x: s.clone(), y: s, b: cfg.b, id: 0 }
    }

    #[test]
    fn zero_raws_give_the_identity_map() {
        let d = identity_diffeo();
        for t in [-4.0, -3.3, -1.0, -0.1, 0.0, 0.4, 1.7, 3.999, 4.0] {
            assert_eq!(d.x.forward(t).to_bits(), t.to_bits());
            assert_eq!(d.x.inverse(t).to_bits(), t.to_bits());
        }
    }

    #[test]
    fn identity_outside_bounds_is_bitwise() {
        let d = sample_diffeo(&mut rng_from(3), &AugmentConfig::default());
        assert_eq!(d.forward([5.0, -6.0]), [5.0, -6.0]);
        for t in [4.0, -4.0, 4.000000001, -17.5, 1e300] {
            assert_eq!(d.x.forward(t).to_bits(), t.to_bits());
            assert_eq!(d.x.inverse(t).to_bits(), t.to_bits());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = AugmentConfig::default();
        let a = sample_diffeo(&mut rng_from(42), &cfg);
        let b = sample_diffeo(&mut rng_from(42), &cfg);
        assert_eq!(a, b);
        assert_eq!(a.id, b.id);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let cfg = AugmentConfig::default();
        let mut rng = rng_from(7);
        for _ in 0..50 {
            let d = sample_diffeo(&mut rng, &cfg);
            for i in 0..200 {
                let t = -4.0 + 8.0 * i as f64 / 199.0;
                let err = (d.x.inverse(d.x.forward(t)) - t).abs();
                assert!(err < 1e-9, "round trip error {err} at {t}");
            }
        }
    }

    #[test]
    fn boundary_derivative_is_one() {
        let cfg = AugmentConfig::default();
        let d = sample_diffeo(&mut rng_from(5), &cfg);
        for s in [&d.x, &d.y] {
            assert_eq!(s.ds[0], 1.0);
            assert_eq!(s.ds[5], 1.0);
            let eps = 1e-6;
            let slope_lo = (s.forward(-4.0 + eps) - s.forward(-4.0)) / eps;
            let slope_hi = (s.forward(4.0) - s.forward(4.0 - eps)) / eps;
            assert!((slope_lo - 1.0).abs() < 1e-3, "lo slope {slope_lo}");
            assert!((slope_hi - 1.0).abs() < 1e-3, "hi slope {slope_hi}");
        }
    }

    #[test]
    fn warp_with_identity_diffeo_equals_rasterize() {
        // Selkov's extent is not symmetric, exercising the normalization path.
        for (name, params) in [
            (SystemName::SimpleOscillator, vec![0.3, 0.7]),
            (SystemName::Selkov, vec![0.05, 0.5]),
        ] {
            let system = make_system(name, &params).unwrap();
            let grid = GridSpec::square64(system.extent().unwrap());
            let plain = crate::raster::rasterize(&system, &grid).unwrap();
            let warped = warp_field(&system, &identity_diffeo(), &grid).unwrap();
            assert_eq!(plain, warped);
        }
    }

    #[test]
    fn warped_zero_sits_at_the_pushed_forward_fixed_point() {
        let system = make_system(SystemName::SimpleOscillator, &[-0.3, 0.9]).unwrap();
        let grid = GridSpec::square64(system.extent().unwrap());
        let mut rng = rng_from(20);
        let mut checked = 0;
        while checked < 5 {
            let d = sample_diffeo(&mut rng, &AugmentConfig::default());
            if !fixed_point_in_frame(&system, &d).unwrap() {
                continue;
            }
            checked += 1;
            let f = warp_field(&system, &d, &grid).unwrap();
            let mag = |i: usize| (f.u[i] * f.u[i] + f.v[i] * f.v[i]).sqrt();
            let argmin =
                (0..grid.len()).min_by(|&a, &b| mag(a).partial_cmp(&mag(b)).unwrap()).unwrap();
            let target = d.forward([0.0, 0.0]);
            let (row, col) = (argmin / 64, argmin % 64);
            let spacing = 2.0 / 63.0;
            assert!((grid.x_at(col) - target[0]).abs() <= spacing, "col {col} target {target:?}");
            assert!((grid.y_at(row) - target[1]).abs() <= spacing, "row {row} target {target:?}");
        }
    }

    #[test]
    fn in_frame_check_accepts_identity_and_rejects_extreme_translation() {
        let system = make_system(SystemName::SimpleOscillator, &[0.2, 0.5]).unwrap();
        assert!(fixed_point_in_frame(&system, &identity_diffeo()).unwrap());

        // Extreme widths: the first input bin swallows nearly all of
        // [−B, B] while the first output bin is nearly empty, dragging h(0)
        // down toward −B and out of the frame.
        let cfg = AugmentConfig::default();
        let x = spline_from_raws(cfg.b, &[8.0, 0.0, 0.0, 0.0, 0.0], &[-8.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 4], &cfg);
        let skewed = Diffeo { x: x.clone(), y: x, b: cfg.b, id: 1 };
        let pushed = skewed.forward([0.0, 0.0]);
        assert!(pushed[0] < -1.0, "h(0) = {pushed:?}");
        assert!(!fixed_point_in_frame(&system, &skewed).unwrap());

        let rep = make_system(SystemName::Repressilator, &[10.0, 2.0]).unwrap();
        assert!(fixed_point_in_frame(&rep, &identity_diffeo()).is_err());
    }

    #[test]
    fn augmented_samples_are_reproducible_and_labeled() {
        let (a, _) = augmented_sample(9, 4, 0.1);
        let (b, _) = augmented_sample(9, 4, 0.1);
        assert_eq!(a, b);
        let system = make_system(SystemName::SimpleOscillator, &a.params).unwrap();
        assert_eq!(a.label, Some(system.true_label().unwrap()));
        let expect = if a.params[0] > 0.0 {
            DynClass::PeriodicAttractor
        } else {
            DynClass::PointAttractor
        };
        assert_eq!(a.label, Some(expect));
    }
}
