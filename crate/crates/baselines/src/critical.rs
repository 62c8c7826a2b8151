//! Fixed-point detection on velocity rasters: cells where both components
//! change sign are refined by Newton on the bilinear patch, then classified
//! by the eigenvalues of a central-difference Jacobian.

use dynamics::raster::VectorField;
use dynamics::zoo::DynClass;

const NEWTON_MAX_ITERS: usize = 20;
/// Step tolerance in cell units.
const NEWTON_TOL: f64 = 1e-6;
/// Accepted roots may overshoot the cell by this much before being handed
/// to the neighboring cell's scan.
const CELL_SLACK: f64 = 1e-6;
/// |det| below this multiple of the squared Jacobian scale is treated as
/// rank-deficient rather than classified.
const DEGENERACY_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CritKind {
    AttractingNode,
    AttractingFocus,
    RepellingNode,
    RepellingFocus,
    Saddle,
    Center,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub position: [f64; 2],
    /// Row-major [[du/dx, du/dy], [dv/dx, dv/dy]].
    pub jacobian: [[f64; 2]; 2],
    pub kind: CritKind,
}

/// Eigenvalue-sign taxonomy of a 2x2 Jacobian.
pub fn kind_of(j: [[f64; 2]; 2]) -> CritKind {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let tr = j[0][0] + j[1][1];
    let scale = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
    if det.abs() < DEGENERACY_RATIO * scale {
        return CritKind::Degenerate;
    }
    if det < 0.0 {
        return CritKind::Saddle;
    }
    if tr.abs() < DEGENERACY_RATIO * scale.sqrt() {
        return CritKind::Center;
    }
    let spiral = tr * tr - 4.0 * det < 0.0;
    match (tr < 0.0, spiral) {
        (true, false) => CritKind::AttractingNode,
        (true, true) => CritKind::AttractingFocus,
        (false, false) => CritKind::RepellingNode,
        (false, true) => CritKind::RepellingFocus,
    }
}

/// Scans every lattice cell for a joint sign change, refines candidates to
/// sub-cell accuracy, and deduplicates roots shared by adjacent cells.
pub fn find_critical_points(field: &VectorField) -> Vec<CriticalPoint> {
    let g = &field.grid;
    let (w, h) = (g.width, g.height);
    let dx = (g.extent[0][1] - g.extent[0][0]) / (w - 1) as f64;
    let dy = (g.extent[1][1] - g.extent[1][0]) / (h - 1) as f64;

    let mut found: Vec<CriticalPoint> = Vec::new();
    for r in 0..h - 1 {
        for c in 0..w - 1 {
            let corners = [r * w + c, r * w + c + 1, (r + 1) * w + c, (r + 1) * w + c + 1];
            let us = corners.map(|i| field.u[i]);
            let vs = corners.map(|i| field.v[i]);
            if !spans_zero(&us) || !spans_zero(&vs) {
                continue;
            }
            let Some((s, t)) = newton_bilinear(us, vs) else { continue };
            let pos = [g.x_at(c) + s * dx, g.y_at(r) + t * dy];
            if found.iter().any(|p| {
                (p.position[0] - pos[0]).abs() < 0.5 * dx
                    && (p.position[1] - pos[1]).abs() < 0.5 * dy
            }) {
                continue;
            }
            let jacobian = raster_jacobian(field, pos, dx, dy);
            found.push(CriticalPoint { position: pos, jacobian, kind: kind_of(jacobian) });
        }
    }
    found
}

/// PeriodicAttractor iff any detected fixed point repels in all directions;
/// a bounded flow must then wind around it.
pub fn classify_critical(field: &VectorField) -> DynClass {
    let repelling = find_critical_points(field)
        .iter()
        .any(|p| matches!(p.kind, CritKind::RepellingNode | CritKind::RepellingFocus));
    if repelling {
        DynClass::PeriodicAttractor
    } else {
        DynClass::PointAttractor
    }
}

fn spans_zero(values: &[f64; 4]) -> bool {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    min <= 0.0 && max >= 0.0 && (min != 0.0 || max != 0.0)
}

/// Newton iteration for the root of the bilinear interpolants on the unit
/// cell; corner order (0,0), (1,0), (0,1), (1,1) in (s,t) coordinates.
fn newton_bilinear(us: [f64; 4], vs: [f64; 4]) -> Option<(f64, f64)> {
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..NEWTON_MAX_ITERS {
        let u = bilinear(&us, s, t);
        let v = bilinear(&vs, s, t);
        let j00 = ds_bilinear(&us, t);
        let j01 = dt_bilinear(&us, s);
        let j10 = ds_bilinear(&vs, t);
        let j11 = dt_bilinear(&vs, s);
        let det = j00 * j11 - j01 * j10;
        if det == 0.0 {
            return None;
        }
        let step_s = (u * j11 - v * j01) / det;
        let step_t = (v * j00 - u * j10) / det;
        s -= step_s;
        t -= step_t;
        if !s.is_finite() || !t.is_finite() || s.abs() > 2.0 || t.abs() > 2.0 {
            return None;
        }
        if step_s.abs() < NEWTON_TOL && step_t.abs() < NEWTON_TOL {
            let inside = (-CELL_SLACK..=1.0 + CELL_SLACK).contains(&s)
                && (-CELL_SLACK..=1.0 + CELL_SLACK).contains(&t);
            return inside.then_some((s, t));
        }
    }
    None
}

fn bilinear(c: &[f64; 4], s: f64, t: f64) -> f64 {
    c[0] * (1.0 - s) * (1.0 - t) + c[1] * s * (1.0 - t) + c[2] * (1.0 - s) * t + c[3] * s * t
}

fn ds_bilinear(c: &[f64; 4], t: f64) -> f64 {
    (c[1] - c[0]) * (1.0 - t) + (c[3] - c[2]) * t
}

fn dt_bilinear(c: &[f64; 4], s: f64) -> f64 {
    (c[2] - c[0]) * (1.0 - s) + (c[3] - c[1]) * s
}

/// Central differences one lattice spacing wide, taken at the grid point
/// nearest the root (clamped one point in from the border).
fn raster_jacobian(field: &VectorField, pos: [f64; 2], dx: f64, dy: f64) -> [[f64; 2]; 2] {
    let g = &field.grid;
    let c = (((pos[0] - g.extent[0][0]) / dx).round() as isize).clamp(1, g.width as isize - 2)
        as usize;
    let r = (((pos[1] - g.extent[1][0]) / dy).round() as isize).clamp(1, g.height as isize - 2)
        as usize;
    let at = |rr: usize, cc: usize| rr * g.width + cc;
    let du_dx = (field.u[at(r, c + 1)] - field.u[at(r, c - 1)]) / (2.0 * dx);
    let du_dy = (field.u[at(r + 1, c)] - field.u[at(r - 1, c)]) / (2.0 * dy);
    let dv_dx = (field.v[at(r, c + 1)] - field.v[at(r, c - 1)]) / (2.0 * dx);
    let dv_dy = (field.v[at(r + 1, c)] - field.v[at(r - 1, c)]) / (2.0 * dy);
    [[du_dx, du_dy], [dv_dx, dv_dy]]
}
