//! Degree-3 polynomial least squares on velocity rasters. Each component is
//! projected onto the ten planar monomials up to cubic order; the stacked
//! 20-vector is the "Parameters" feature.

use dynamics::raster::VectorField;

/// Exponent table (i, j) for x^i y^j, constant through cubic terms.
pub const MONOMIALS: [(u32, u32); 10] =
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    /// First component's coefficients then the second's, monomial order.
    pub coeffs: [f64; 20],
    /// Root-mean-square misfit across both components.
    pub residual: f64,
}

/// Least squares over the lattice's physical coordinates; the two normal
/// systems share one Gram matrix and are solved by Householder QR.
pub fn polyfit_coeffs(field: &VectorField) -> PolyFit {
    let g = &field.grid;
    let n = g.len();
    let mut gram = [[0.0f64; 10]; 10];
    let mut rhs_u = [0.0f64; 10];
    let mut rhs_v = [0.0f64; 10];
    let mut rows = Vec::with_capacity(n);
    for r in 0..g.height {
        for c in 0..g.width {
            let row = design_row(g.x_at(c), g.y_at(r));
            let at = r * g.width + c;
            for i in 0..10 {
                for j in i..10 {
                    gram[i][j] += row[i] * row[j];
                }
                rhs_u[i] += row[i] * field.u[at];
                rhs_v[i] += row[i] * field.v[at];
            }
            rows.push(row);
        }
    }
    for i in 0..10 {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }

    let cu = qr_solve(gram, rhs_u);
    let cv = qr_solve(gram, rhs_v);

    let mut sq = 0.0;
    for (at, row) in rows.iter().enumerate() {
        let mut pu = 0.0;
        let mut pv = 0.0;
        for i in 0..10 {
            pu += cu[i] * row[i];
            pv += cv[i] * row[i];
        }
        sq += (pu - field.u[at]).powi(2) + (pv - field.v[at]).powi(2);
    }

    let mut coeffs = [0.0; 20];
    coeffs[..10].copy_from_slice(&cu);
    coeffs[10..].copy_from_slice(&cv);
    PolyFit { coeffs, residual: (sq / (2 * n) as f64).sqrt() }
}

pub fn design_row(x: f64, y: f64) -> [f64; 10] {
    MONOMIALS.map(|(i, j)| x.powi(i as i32) * y.powi(j as i32))
}

/// Householder QR solve of a symmetric positive-definite 10x10 system.
fn qr_solve(a: [[f64; 10]; 10], b: [f64; 10]) -> [f64; 10] {
    const N: usize = 10;
    let mut r = a;
    let mut y = b;
    for k in 0..N - 1 {
        let mut norm_sq = 0.0;
        for i in k..N {
            norm_sq += r[i][k] * r[i][k];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; N];
        v[k] = r[k][k] - alpha;
        for i in k + 1..N {
            v[i] = r[i][k];
        }
        let vtv = v[k..].iter().map(|x| x * x).sum::<f64>();
        if vtv == 0.0 {
            continue;
        }
        for j in k..N {
            let dot: f64 = (k..N).map(|i| v[i] * r[i][j]).sum();
            let f = 2.0 * dot / vtv;
            for i in k..N {
                r[i][j] -= f * v[i];
            }
        }
        let dot: f64 = (k..N).map(|i| v[i] * y[i]).sum();
        let f = 2.0 * dot / vtv;
        for i in k..N {
            y[i] -= f * v[i];
        }
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = y[i];
        for j in i + 1..N {
            s -= r[i][j] * x[j];
        }
        x[i] = if r[i][i] != 0.0 { s / r[i][i] } else { 0.0 };
    }
    x
}
