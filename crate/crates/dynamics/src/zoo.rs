//! The system zoo: parametric ODEs undergoing Hopf bifurcation, their
//! ground-truth attractor labels, parameter samplers, and bifurcation
//! boundary geometry in parameter space.
//!
//! Polar-defined systems are exposed in Cartesian coordinates via
//! `ẋ = ṙcosθ − rθ̇sinθ`, `ẏ = ṙsinθ + rθ̇cosθ`; the resulting expressions
//! are polynomial in (x, y), so the origin needs no special casing.

use rand::Rng;
use thiserror::Error;

/// Attractor class of a system instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynClass {
    PointAttractor,
    PeriodicAttractor,
}

/// Zoo membership. String ids are stable identifiers used by the CLI and
/// dataset manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemName {
    SimpleOscillator,
    SupHopf,
    LienardPoly,
    LienardSigmoid,
    VanDerPol,
    BzReaction,
    Selkov,
    SubHopf,
    Repressilator,
}

#[derive(Debug, Error, PartialEq)]
pub enum ZooError {
    #[error("unknown system id `{0}`")]
    UnknownSystem(String),
    #[error("{system}: expected {expected} parameters, got {got}")]
    WrongArity { system: &'static str, expected: usize, got: usize },
    #[error("{system}: parameter `{param}` = {value} outside [{lo}, {hi}]")]
    ParamOutOfRange { system: &'static str, param: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("operation not defined for system `{0}`")]
    UnsupportedSystem(&'static str),
    #[error("non-finite input state")]
    NonFiniteInput,
    #[error("no oscillation window at this alpha (discriminant negative)")]
    NoOscillationWindow,
}

/// Fixed mRNA leak rate and Hill coefficient of the repressilator.
pub const REPRESSILATOR_ALPHA0: f64 = 0.2;
pub const REPRESSILATOR_HILL: f64 = 2.0;

/// Reference initial state, ordered [m_laci, p_laci, m_tetr, p_tetr, m_ci, p_ci].
pub const REPRESSILATOR_INIT: [f64; 6] = [2.11, 2.28, 1.57, 1.71, 1.07, 1.14];

/// State indices of the (p_tetr, p_laci) projection plane.
pub const REPRESSILATOR_PROJECTION: (usize, usize) = (3, 1);

impl SystemName {
    pub const ALL: [SystemName; 9] = [
        SystemName::SimpleOscillator,
        SystemName::SupHopf,
        SystemName::LienardPoly,
        SystemName::LienardSigmoid,
        SystemName::VanDerPol,
        SystemName::BzReaction,
        SystemName::Selkov,
        SystemName::SubHopf,
        SystemName::Repressilator,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SystemName::SimpleOscillator => "simple_oscillator",
            SystemName::SupHopf => "suphopf",
            SystemName::LienardPoly => "lienard_poly",
            SystemName::LienardSigmoid => "lienard_sigmoid",
            SystemName::VanDerPol => "vanderpol",
            SystemName::BzReaction => "bzreaction",
            SystemName::Selkov => "selkov",
            SystemName::SubHopf => "subhopf",
            SystemName::Repressilator => "repressilator",
        }
    }

    pub fn from_id(id: &str) -> Result<SystemName, ZooError> {
        SystemName::ALL
            .into_iter()
            .find(|n| n.id() == id)
            .ok_or_else(|| ZooError::UnknownSystem(id.to_string()))
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            SystemName::SimpleOscillator => &["a", "omega"],
            SystemName::SupHopf | SystemName::SubHopf => &["mu", "omega", "b"],
            SystemName::LienardPoly => &["a", "c"],
            SystemName::LienardSigmoid => &["a", "b"],
            SystemName::VanDerPol => &["mu"],
            SystemName::BzReaction | SystemName::Selkov => &["a", "b"],
            SystemName::Repressilator => &["alpha", "beta"],
        }
    }

    /// Closed sampling intervals per parameter.
    pub fn param_ranges(self) -> &'static [[f64; 2]] {
        match self {
            SystemName::SimpleOscillator => &[[-0.5, 0.5], [-1.0, 1.0]],
            SystemName::SupHopf => &[[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
            SystemName::SubHopf => &[[-0.5, 0.5], [-1.0, 1.0], [-1.0, 1.0]],
            SystemName::LienardPoly => &[[0.0, 1.0], [-1.0, 1.0]],
            SystemName::LienardSigmoid => &[[0.0, 1.0], [-1.0, 1.0]],
            SystemName::VanDerPol => &[[-1.0, 1.0]],
            SystemName::BzReaction => &[[2.0, 19.0], [2.0, 6.0]],
            SystemName::Selkov => &[[0.01, 0.11], [0.02, 1.2]],
            SystemName::Repressilator => &[[0.0, 30.0], [0.0, 10.0]],
        }
    }

    /// Phase-space window, `[[xmin,xmax],[ymin,ymax]]`; None for the 6-D repressilator.
    pub fn extent(self) -> Option<[[f64; 2]; 2]> {
        match self {
            SystemName::SimpleOscillator | SystemName::SupHopf | SystemName::SubHopf => {
                Some([[-1.0, 1.0], [-1.0, 1.0]])
            }
            SystemName::LienardPoly => Some([[-4.2, 4.2], [-4.2, 4.2]]),
            SystemName::LienardSigmoid => Some([[-1.5, 1.5], [-1.5, 1.5]]),
            SystemName::VanDerPol => Some([[-3.0, 3.0], [-3.0, 3.0]]),
            SystemName::BzReaction => Some([[0.0, 10.0], [0.0, 20.0]]),
            SystemName::Selkov => Some([[0.0, 3.0], [0.0, 3.0]]),
            SystemName::Repressilator => None,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SystemName::Repressilator => 6,
            _ => 2,
        }
    }
}

/// A zoo system bound to a concrete parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub name: SystemName,
    pub params: Vec<f64>,
}

/// Validates arity and ranges, then binds `params` to `name`.
pub fn make_system(name: SystemName, params: &[f64]) -> Result<System, ZooError> {
    let ranges = name.param_ranges();
    if params.len() != ranges.len() {
        return Err(ZooError::WrongArity {
            system: name.id(),
            expected: ranges.len(),
            got: params.len(),
        });
    }
    for (i, (&value, range)) in params.iter().zip(ranges).enumerate() {
        // The repressilator ranges are open; sampling never hits an endpoint
        // and endpoint dynamics are degenerate, so reject them too.
        let ok = if name == SystemName::Repressilator {
            value > range[0] && value < range[1]
        } else {
            value >= range[0] && value <= range[1]
        };
        if !ok {
            return Err(ZooError::ParamOutOfRange {
                system: name.id(),
                param: name.param_names()[i],
                value,
                lo: range[0],
                hi: range[1],
            });
        }
    }
    Ok(System { name, params: params.to_vec() })
}

impl System {
    pub fn dim(&self) -> usize {
        self.name.dim()
    }

    pub fn extent(&self) -> Option<[[f64; 2]; 2]> {
        self.name.extent()
    }

    /// Unchecked right-hand side; `state` and `out` must have length `dim()`.
    pub fn rhs(&self, state: &[f64], out: &mut [f64]) {
        let p = &self.params;
        match self.name {
            SystemName::SimpleOscillator => {
                let (a, omega) = (p[0], p[1]);
                let (x, y) = (state[0], state[1]);
                let radial = a - (x * x + y * y);
                out[0] = radial * x - omega * y;
                out[1] = radial * y + omega * x;
            }
            SystemName::SupHopf => {
                let (mu, omega, b) = (p[0], p[1], p[2]);
                let (x, y) = (state[0], state[1]);
                let r2 = x * x + y * y;
                let radial = mu - r2;
                let angular = omega + b * r2;
                out[0] = radial * x - angular * y;
                out[1] = radial * y + angular * x;
            }
            SystemName::SubHopf => {
                let (mu, omega, b) = (p[0], p[1], p[2]);
                let (x, y) = (state[0], state[1]);
                let r2 = x * x + y * y;
                let radial = mu + r2 - r2 * r2;
                let angular = omega + b * r2;
                out[0] = radial * x - angular * y;
                out[1] = radial * y + angular * x;
            }
            SystemName::LienardPoly => {
                let (a, c) = (p[0], p[1]);
                let (x, y) = (state[0], state[1]);
                out[0] = y;
                out[1] = -(a * x + x * x * x) - (c + x * x) * y;
            }
            SystemName::LienardSigmoid => {
                let (a, b) = (p[0], p[1]);
                let (x, y) = (state[0], state[1]);
                out[0] = y;
                out[1] = -(1.0 / (1.0 + (-a * x).exp()) - 0.5) - (b + x * x) * y;
            }
            SystemName::VanDerPol => {
                let mu = p[0];
                let (x, y) = (state[0], state[1]);
                out[0] = y;
                out[1] = mu * y - x - x * x * y;
            }
            SystemName::BzReaction => {
                let (a, b) = (p[0], p[1]);
                let (x, y) = (state[0], state[1]);
                let d = 1.0 + x * x;
                out[0] = a - x - 4.0 * x * y / d;
                out[1] = b * x * (1.0 - y / d);
            }
            SystemName::Selkov => {
                let (a, b) = (p[0], p[1]);
                let (x, y) = (state[0], state[1]);
                let xxy = x * x * y;
                out[0] = -x + a * y + xxy;
                out[1] = b - a * y - xxy;
            }
            SystemName::Repressilator => {
                let (alpha, beta) = (p[0], p[1]);
                // State layout [m_laci, p_laci, m_tetr, p_tetr, m_ci, p_ci];
                // mRNA of gene i is repressed by protein j: laci<-ci, tetr<-laci, ci<-tetr.
                let n = REPRESSILATOR_HILL;
                for (gene, repressor_protein) in [(0usize, 5usize), (1, 1), (2, 3)] {
                    let m = state[2 * gene];
                    let prot = state[2 * gene + 1];
                    let rep = state[repressor_protein];
                    out[2 * gene] = -m + alpha / (1.0 + rep.powf(n)) + REPRESSILATOR_ALPHA0;
                    out[2 * gene + 1] = -beta * (prot - m);
                }
            }
        }
    }

    /// Checked right-hand side evaluation.
    pub fn eval_rhs(&self, state: &[f64]) -> Result<Vec<f64>, ZooError> {
        if state.len() != self.dim() {
            return Err(ZooError::WrongArity {
                system: self.name.id(),
                expected: self.dim(),
                got: state.len(),
            });
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(ZooError::NonFiniteInput);
        }
        let mut out = vec![0.0; self.dim()];
        self.rhs(state, &mut out);
        Ok(out)
    }

    /// Analytic fixed point (the one tracked by the bifurcation).
    pub fn fixed_point(&self) -> Option<Vec<f64>> {
        let p = &self.params;
        match self.name {
            SystemName::SimpleOscillator
            | SystemName::SupHopf
            | SystemName::SubHopf
            | SystemName::LienardPoly
            | SystemName::LienardSigmoid
            | SystemName::VanDerPol => Some(vec![0.0, 0.0]),
            SystemName::BzReaction => {
                let a = p[0];
                let x = a / 5.0;
                Some(vec![x, 1.0 + x * x])
            }
            SystemName::Selkov => {
                let (a, b) = (p[0], p[1]);
                Some(vec![b, b / (a + b * b)])
            }
            SystemName::Repressilator => None,
        }
    }

    /// Ground-truth attractor class from the analytic periodic-attractor
    /// condition. Not defined for the bistable subcritical probe or the
    /// repressilator (see `repressilator_label`).
    pub fn true_label(&self) -> Result<DynClass, ZooError> {
        let p = &self.params;
        let periodic = match self.name {
            SystemName::SimpleOscillator => p[0] > 0.0,
            SystemName::SupHopf => p[0] > 0.0,
            SystemName::LienardPoly => p[1] < 0.0,
            SystemName::LienardSigmoid => p[1] < 0.0,
            SystemName::VanDerPol => p[0] > 0.0,
            // Hopf condition from the Jacobian trace at the fixed point x=a/5.
            SystemName::BzReaction => p[1] < 3.0 * p[0] / 5.0 - 25.0 / p[0],
            SystemName::Selkov => match selkov_window(p[0]) {
                Some((lo, hi)) => p[1] > lo && p[1] < hi,
                None => false,
            },
            SystemName::SubHopf | SystemName::Repressilator => {
                return Err(ZooError::UnsupportedSystem(self.name.id()))
            }
        };
        Ok(if periodic { DynClass::PeriodicAttractor } else { DynClass::PointAttractor })
    }

    /// Signed min-L2 distance from `params` to the bifurcation curve in
    /// parameter space: positive post-Hopf, negative pre-Hopf.
    pub fn boundary_distance(&self) -> Result<f64, ZooError> {
        let p = &self.params;
        let unsigned = match self.name {
            SystemName::SimpleOscillator => p[0].abs(),
            SystemName::SupHopf => p[0].abs(),
            SystemName::LienardPoly => p[1].abs(),
            SystemName::LienardSigmoid => p[1].abs(),
            SystemName::VanDerPol => p[0].abs(),
            SystemName::BzReaction | SystemName::Selkov => {
                let branches = boundary_curve(self.name, 512)?;
                branches
                    .iter()
                    .map(|poly| dist_to_polyline([p[0], p[1]], poly))
                    .fold(f64::INFINITY, f64::min)
            }
            SystemName::SubHopf | SystemName::Repressilator => {
                return Err(ZooError::UnsupportedSystem(self.name.id()))
            }
        };
        let sign = match self.true_label()? {
            DynClass::PeriodicAttractor => 1.0,
            DynClass::PointAttractor => -1.0,
        };
        Ok(sign * unsigned)
    }
}

/// Draws `count` i.i.d. uniform parameter vectors over the system's ranges.
pub fn sample_params<R: Rng>(name: SystemName, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let ranges = name.param_ranges();
    (0..count)
        .map(|_| {
            ranges
                .iter()
                .map(|&[lo, hi]| lo + (hi - lo) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

/// Sel'kov oscillation window: periodic attractor for b strictly between the
/// two returned bounds. None when 1−8a < 0 (no window).
pub fn selkov_window(a: f64) -> Option<(f64, f64)> {
    let disc = 1.0 - 8.0 * a;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let lo = (0.5 * (1.0 - 2.0 * a - s)).sqrt();
    let hi = (0.5 * (1.0 - 2.0 * a + s)).sqrt();
    Some((lo, hi))
}

/// Bifurcation curve(s) in parameter space, one polyline per branch, each
/// point satisfying the equality condition to 1e-6.
pub fn boundary_curve(name: SystemName, resolution: usize) -> Result<Vec<Vec<[f64; 2]>>, ZooError> {
    assert!(resolution >= 2, "resolution must be at least 2");
    let linspace = |lo: f64, hi: f64| {
        (0..resolution).map(move |i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
    };
    let curves = match name {
        SystemName::SimpleOscillator | SystemName::SupHopf => {
            vec![linspace(-1.0, 1.0).map(|w| [0.0, w]).collect()]
        }
        SystemName::LienardPoly | SystemName::LienardSigmoid => {
            vec![linspace(0.0, 1.0).map(|a| [a, 0.0]).collect()]
        }
        SystemName::VanDerPol => vec![vec![[0.0, 0.0]; 2]],
        SystemName::BzReaction => {
            vec![linspace(2.0, 19.0).map(|a| [a, 3.0 * a / 5.0 - 25.0 / a]).collect()]
        }
        SystemName::Selkov => {
            let lower = linspace(0.01, 0.11)
                .map(|a| [a, selkov_window(a).expect("window exists on [0.01,0.11]").0])
                .collect();
            let upper = linspace(0.01, 0.11)
                .map(|a| [a, selkov_window(a).expect("window exists on [0.01,0.11]").1])
                .collect();
            vec![lower, upper]
        }
        SystemName::SubHopf | SystemName::Repressilator => {
            return Err(ZooError::UnsupportedSystem(name.id()))
        }
    };
    Ok(curves)
}

/// Hopf window (β₁, β₂) of the repressilator at transcription rate `alpha`:
/// oscillation for β₁ < β < β₂. Solves p̂ = α/(1+p̂ⁿ) + α₀ by bisection.
pub fn repressilator_boundary(alpha: f64) -> Result<(f64, f64), ZooError> {
    assert!(alpha > 0.0, "alpha must be positive");
    let p_hat = repressilator_p_hat(alpha);
    let a = repressilator_coupling(alpha, p_hat);
    let disc = 9.0 * a * a - 24.0 * a - 48.0;
    if disc < 0.0 {
        return Err(ZooError::NoOscillationWindow);
    }
    let base = (3.0 * a * a - 4.0 * a - 8.0) / (4.0 * a + 8.0);
    let spread = a * disc.sqrt() / (4.0 * a + 8.0);
    // a < 0, so `base + spread` is the smaller root.
    Ok((base + spread, base - spread))
}

/// Protein fixed point p̂ of the symmetric repressilator steady state.
pub fn repressilator_p_hat(alpha: f64) -> f64 {
    let g = |p: f64| alpha / (1.0 + p.powf(REPRESSILATOR_HILL)) + REPRESSILATOR_ALPHA0 - p;
    let (mut lo, mut hi) = (0.0, alpha + REPRESSILATOR_ALPHA0 + 1.0);
    // g is strictly decreasing: g(lo) > 0 > g(hi).
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Linearized repression coupling A = −αn p̂ⁿ⁻¹/(1+p̂ⁿ)² at the fixed point.
pub fn repressilator_coupling(alpha: f64, p_hat: f64) -> f64 {
    let n = REPRESSILATOR_HILL;
    -alpha * n * p_hat.powf(n - 1.0) / (1.0 + p_hat.powf(n)).powi(2)
}

/// Ground-truth repressilator class at (α, β): periodic inside the Hopf window.
pub fn repressilator_label(alpha: f64, beta: f64) -> DynClass {
    match repressilator_boundary(alpha) {
        Ok((b1, b2)) if beta > b1 && beta < b2 => DynClass::PeriodicAttractor,
        _ => DynClass::PointAttractor,
    }
}

/// Min distance from `p` to a polyline (segment distance, not vertex distance).
pub fn dist_to_polyline(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    assert!(!poly.is_empty());
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        best = best.min(dist_to_segment(p, w[0], w[1]));
    }
    if poly.len() == 1 {
        best = ((p[0] - poly[0][0]).powi(2) + (p[1] - poly[0][1]).powi(2)).sqrt();
    }
    best
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn sys(name: SystemName, params: &[f64]) -> System {
        make_system(name, params).unwrap()
    }

    #[test]
    fn make_system_attaches_extent_and_validates() {
        let so = sys(SystemName::SimpleOscillator, &[0.25, 1.0]);
        assert_eq!(so.extent(), Some([[-1.0, 1.0], [-1.0, 1.0]]));
        let selkov = sys(SystemName::Selkov, &[0.05, 0.5]);
        assert_eq!(selkov.extent(), Some([[0.0, 3.0], [0.0, 3.0]]));
        let err = make_system(SystemName::SimpleOscillator, &[2.0, 1.0]).unwrap_err();
        assert!(matches!(err, ZooError::ParamOutOfRange { param: "a", .. }));
        assert!(SystemName::from_id("nope").is_err());
    }

    #[test]
    fn rhs_matches_hand_evaluations() {
        let so = sys(SystemName::SimpleOscillator, &[-0.5, 1.0]);
        assert_eq!(so.eval_rhs(&[1.0, 0.0]).unwrap(), vec![-1.5, 1.0]);

        let vdp = sys(SystemName::VanDerPol, &[0.5]);
        assert_eq!(vdp.eval_rhs(&[1.0, 1.0]).unwrap(), vec![1.0, -1.5]);

        let rep = sys(SystemName::Repressilator, &[10.0, 1.0]);
        let out = rep.eval_rhs(&[0.0; 6]).unwrap();
        for gene in 0..3 {
            assert!((out[2 * gene] - 10.2).abs() < 1e-15);
            assert_eq!(out[2 * gene + 1], 0.0);
        }
    }

    #[test]
    fn rhs_rejects_non_finite_input() {
        let so = sys(SystemName::SimpleOscillator, &[0.2, 0.3]);
        assert_eq!(so.eval_rhs(&[f64::NAN, 0.0]).unwrap_err(), ZooError::NonFiniteInput);
    }

    #[test]
    fn rhs_vanishes_at_fixed_points() {
        let cases = [
            sys(SystemName::SimpleOscillator, &[0.3, -0.7]),
            sys(SystemName::SupHopf, &[0.4, 0.2, -0.5]),
            sys(SystemName::SubHopf, &[-0.1, 0.9, 0.3]),
            sys(SystemName::LienardPoly, &[0.7, 0.2]),
            sys(SystemName::LienardSigmoid, &[0.7, -0.2]),
            sys(SystemName::VanDerPol, &[0.9]),
            sys(SystemName::BzReaction, &[10.0, 4.0]),
            sys(SystemName::Selkov, &[0.05, 0.5]),
        ];
        for s in cases {
            let fp = s.fixed_point().unwrap();
            let out = s.eval_rhs(&fp).unwrap();
            for v in out {
                assert!(v.abs() < 1e-12, "{:?} residual {v}", s.name);
            }
        }
    }

    #[test]
    fn polar_systems_are_rotationally_covariant() {
        let systems = [
            sys(SystemName::SimpleOscillator, &[0.3, -0.7]),
            sys(SystemName::SupHopf, &[0.4, 0.2, -0.5]),
            sys(SystemName::SubHopf, &[-0.1, 0.9, 0.3]),
        ];
        let mut rng = rng_from(11);
        for s in systems {
            for _ in 0..8 {
                let p = [rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0];
                let psi: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                let (c, sn) = (psi.cos(), psi.sin());
                let rotated = [c * p[0] - sn * p[1], sn * p[0] + c * p[1]];
                let f = s.eval_rhs(&p).unwrap();
                let f_rot = s.eval_rhs(&rotated).unwrap();
                let expected = [c * f[0] - sn * f[1], sn * f[0] + c * f[1]];
                assert!((f_rot[0] - expected[0]).abs() < 1e-12);
                assert!((f_rot[1] - expected[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn true_label_follows_analytic_conditions() {
        assert_eq!(
            sys(SystemName::SimpleOscillator, &[0.3, 1.0]).true_label().unwrap(),
            DynClass::PeriodicAttractor
        );
        // Window bounds at a=0.05 are (0.2504.., 0.9150..); 0.5 is inside, 1.1 outside.
        let (lo, hi) = selkov_window(0.05).unwrap();
        assert!((lo - 0.250403).abs() < 1e-6);
        assert!((hi - 0.915040).abs() < 1e-6);
        assert_eq!(
            sys(SystemName::Selkov, &[0.05, 0.5]).true_label().unwrap(),
            DynClass::PeriodicAttractor
        );
        assert_eq!(
            sys(SystemName::Selkov, &[0.05, 1.1]).true_label().unwrap(),
            DynClass::PointAttractor
        );
        assert!(sys(SystemName::SubHopf, &[0.1, 0.5, 0.1]).true_label().is_err());
    }

    #[test]
    fn sample_params_is_seeded_and_in_range() {
        let a = sample_params(SystemName::SimpleOscillator, 3, &mut rng_from(7));
        let b = sample_params(SystemName::SimpleOscillator, 3, &mut rng_from(7));
        assert_eq!(a, b);
        let bz = sample_params(SystemName::BzReaction, 1, &mut rng_from(3));
        assert!(bz[0][0] >= 2.0 && bz[0][0] <= 19.0);
        assert!(bz[0][1] >= 2.0 && bz[0][1] <= 6.0);
    }

    #[test]
    fn so_labels_split_evenly() {
        let params = sample_params(SystemName::SimpleOscillator, 10_000, &mut rng_from(5));
        let cycles = params
            .iter()
            .filter(|p| {
                sys(SystemName::SimpleOscillator, p).true_label().unwrap()
                    == DynClass::PeriodicAttractor
            })
            .count();
        let frac = cycles as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.03, "split {frac}");
    }

    #[test]
    fn boundary_distance_is_signed() {
        assert_eq!(sys(SystemName::SimpleOscillator, &[0.3, 0.5]).boundary_distance().unwrap(), 0.3);
        assert_eq!(
            sys(SystemName::SimpleOscillator, &[-0.2, -0.9]).boundary_distance().unwrap(),
            -0.2
        );
    }

    #[test]
    fn boundary_distance_agrees_with_label_sign() {
        let mut rng = rng_from(23);
        for name in [
            SystemName::SimpleOscillator,
            SystemName::SupHopf,
            SystemName::LienardPoly,
            SystemName::LienardSigmoid,
            SystemName::VanDerPol,
            SystemName::BzReaction,
            SystemName::Selkov,
        ] {
            for p in sample_params(name, 50, &mut rng) {
                let s = sys(name, &p);
                let d = s.boundary_distance().unwrap();
                if d == 0.0 {
                    continue;
                }
                let expected = if d > 0.0 {
                    DynClass::PeriodicAttractor
                } else {
                    DynClass::PointAttractor
                };
                assert_eq!(s.true_label().unwrap(), expected, "{name:?} {p:?} d={d}");
            }
        }
    }

    #[test]
    fn on_curve_points_have_near_zero_distance() {
        for name in [SystemName::BzReaction, SystemName::Selkov] {
            for branch in boundary_curve(name, 64).unwrap() {
                for &[a, b] in branch.iter().step_by(7) {
                    let ranges = name.param_ranges();
                    if b < ranges[1][0] || b > ranges[1][1] {
                        continue;
                    }
                    let s = sys(name, &[a, b]);
                    assert!(s.boundary_distance().unwrap().abs() < 1e-3, "{name:?} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn boundary_curves_satisfy_equality_conditions() {
        // Residual of the defining equality at each returned point.
        for branch in boundary_curve(SystemName::BzReaction, 512).unwrap() {
            for &[a, b] in &branch {
                assert!((b - (3.0 * a / 5.0 - 25.0 / a)).abs() < 1e-6);
            }
        }
        for (i, branch) in boundary_curve(SystemName::Selkov, 512).unwrap().iter().enumerate() {
            for &[a, b] in branch {
                let (lo, hi) = selkov_window(a).unwrap();
                let target = if i == 0 { lo } else { hi };
                assert!((b - target).abs() < 1e-6);
            }
        }
        let so = boundary_curve(SystemName::SimpleOscillator, 8).unwrap();
        assert_eq!(so.len(), 1);
        assert!(so[0].iter().all(|p| p[0] == 0.0));
        assert_eq!(so[0].first().unwrap()[1], -1.0);
        assert_eq!(so[0].last().unwrap()[1], 1.0);
    }

    #[test]
    fn repressilator_window_matches_hand_computation() {
        // Frozen from independent bisection of p = α/(1+p²) + 0.2 at α = 10
        // and the closed-form β roots.
        let p_hat = repressilator_p_hat(10.0);
        assert!((p_hat - 2.078962630922).abs() < 1e-6, "p_hat {p_hat}");
        let a = repressilator_coupling(10.0, p_hat);
        assert!((a + 1.467955750032).abs() < 1e-6, "A {a}");
        let (b1, b2) = repressilator_boundary(10.0).unwrap();
        assert!(b1 < b2);
        assert!((b1 - 0.262256021254).abs() < 1e-6, "b1 {b1}");
        assert!((b2 - 3.813067838129).abs() < 1e-6, "b2 {b2}");
        // The coupling only reaches the oscillation threshold A ≤ −4/3 for
        // large enough α; α = 6 sits just below it.
        for alpha in [2.0, 5.0, 6.0] {
            assert_eq!(
                repressilator_boundary(alpha).unwrap_err(),
                ZooError::NoOscillationWindow
            );
        }
        assert_eq!(repressilator_label(10.0, 2.0), DynClass::PeriodicAttractor);
        assert_eq!(repressilator_label(2.0, 8.0), DynClass::PointAttractor);
    }

    #[test]
    fn repressilator_window_satisfies_hopf_condition() {
        // At β₁ and β₂ the complex eigenvalue pair of the linearization is
        // purely imaginary, equivalently (β+1)²/β = 3A²/(4+2A).
        for alpha in [7.0, 10.0, 20.0, 29.0] {
            let p_hat = repressilator_p_hat(alpha);
            assert!((p_hat - REPRESSILATOR_ALPHA0
                - alpha / (1.0 + p_hat.powf(REPRESSILATOR_HILL)))
            .abs()
                < 1e-9);
            let a = repressilator_coupling(alpha, p_hat);
            let rhs = 3.0 * a * a / (4.0 + 2.0 * a);
            let (b1, b2) = repressilator_boundary(alpha).unwrap();
            for beta in [b1, b2] {
                let lhs = (beta + 1.0) * (beta + 1.0) / beta;
                assert!((lhs - rhs).abs() < 1e-8, "alpha {alpha} beta {beta}");
            }
        }
    }

    #[test]
    fn polyline_distance_handles_degenerate_cases() {
        let poly = [[0.0, 0.0], [1.0, 0.0]];
        assert!((dist_to_polyline([0.5, 1.0], &poly) - 1.0).abs() < 1e-12);
        assert!((dist_to_polyline([2.0, 0.0], &poly) - 1.0).abs() < 1e-12);
        assert!((dist_to_polyline([3.0, 4.0], &[[0.0, 0.0]]) - 5.0).abs() < 1e-12);
    }
}
