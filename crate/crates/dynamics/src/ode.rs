//! Fixed-step integration, finite-difference velocity recovery, and
//! scattered-to-lattice interpolation for simulated single-cell snapshots.

use crate::raster::{GridSpec, VectorField};
use crate::seed::{derive, rng_from};
use crate::zoo::{make_system, SystemName, REPRESSILATOR_INIT, REPRESSILATOR_PROJECTION};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum OdeError {
    #[error("state left the finite range at t = {at_time}")]
    NonFiniteState {
        at_time: f64,
        /// Trajectory accumulated before the blow-up.
        prefix: Trajectory,
    },
    #[error("trajectory too short: need at least {need} states, have {have}")]
    TooShort { need: usize, have: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad csv record at line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
}

/// Uniformly sampled solution: times[k] = k·dt.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Point cloud with a velocity attached to each point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredVelocities {
    pub points: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
}

const DIVERGENCE_BOUND: f64 = 1e9;

/// Classic fourth-order Runge–Kutta with fixed step. Steps are counted as
/// floor(t_final/dt) with a small tolerance so t_final = n·dt lands exactly
/// on n steps; the returned trajectory has n+1 states.
pub fn integrate<F>(rhs: F, initial: &[f64], t_final: f64, dt: f64) -> Result<Trajectory, OdeError>
where
    F: Fn(&[f64], &mut [f64]),
{
    assert!(dt > 0.0 && t_final >= 0.0);
    let n_steps = (t_final / dt + 1e-9).floor() as usize;
    let dim = initial.len();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    states.push(initial.to_vec());
    times.push(0.0);

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for step in 0..n_steps {
        let y = states.last().unwrap().clone();
        rhs(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + dt * k3[i];
        }
        rhs(&tmp, &mut k4);
        let mut next = vec![0.0; dim];
        for i in 0..dim {
            next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = (step + 1) as f64 * dt;
        if next.iter().any(|x| !x.is_finite() || x.abs() > DIVERGENCE_BOUND) {
            return Err(OdeError::NonFiniteState {
                at_time: t_next,
                prefix: Trajectory { times, states },
            });
        }
        states.push(next);
        times.push(t_next);
    }
    Ok(Trajectory { times, states })
}

/// Central-difference velocities on the interior, one-sided at the ends,
/// for the two projected coordinates (d0, d1).
pub fn estimate_velocities(
    traj: &Trajectory,
    dims: (usize, usize),
) -> Result<ScatteredVelocities, OdeError> {
    let n = traj.states.len();
    if n < 2 {
        return Err(OdeError::TooShort { need: 2, have: n });
    }
    let (d0, d1) = dims;
    let at = |k: usize| [traj.states[k][d0], traj.states[k][d1]];
    let mut points = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for k in 0..n {
        points.push(at(k));
        let (a, b, span) = if k == 0 {
            (0, 1, traj.times[1] - traj.times[0])
        } else if k == n - 1 {
            (n - 2, n - 1, traj.times[n - 1] - traj.times[n - 2])
        } else {
            (k - 1, k + 1, traj.times[k + 1] - traj.times[k - 1])
        };
        let (pa, pb) = (at(a), at(b));
        velocities.push([(pb[0] - pa[0]) / span, (pb[1] - pa[1]) / span]);
    }
    Ok(ScatteredVelocities { points, velocities })
}

/// Inverse-distance-weighted interpolation of scattered velocities onto a
/// lattice. Exact hits are averaged; otherwise the k nearest points (plus
/// every point tied with the k-th distance) are weighted by d^(−power).
/// Neighbor selection orders by (distance, point, velocity), never by input
/// index, so the result is invariant under input permutation.
pub fn interpolate_scattered(
    scattered: &ScatteredVelocities,
    grid: &GridSpec,
    k: usize,
    power: f64,
) -> VectorField {
    assert!(!scattered.points.is_empty() && k >= 1);
    assert_eq!(scattered.points.len(), scattered.velocities.len());
    let n = scattered.points.len();
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];

    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for row in 0..grid.height {
        for col in 0..grid.width {
            let (gx, gy) = (grid.x_at(col), grid.y_at(row));
            order.clear();
            for (i, p) in scattered.points.iter().enumerate() {
                let d2 = (p[0] - gx).powi(2) + (p[1] - gy).powi(2);
                order.push((d2, i));
            }
            order.sort_by(|a, b| {
                let key = |&(d2, i): &(f64, usize)| {
                    let p = scattered.points[i];
                    let w = scattered.velocities[i];
                    (d2, p[0], p[1], w[0], w[1])
                };
                key(a).partial_cmp(&key(b)).unwrap()
            });

            let cell = row * grid.width + col;
            if order[0].0 == 0.0 {
                let hits: Vec<usize> =
                    order.iter().take_while(|&&(d2, _)| d2 == 0.0).map(|&(_, i)| i).collect();
                let m = hits.len() as f64;
                u[cell] = hits.iter().map(|&i| scattered.velocities[i][0]).sum::<f64>() / m;
                v[cell] = hits.iter().map(|&i| scattered.velocities[i][1]).sum::<f64>() / m;
                continue;
            }
            let cutoff = order[k.min(n) - 1].0;
            let mut wsum = 0.0;
            let (mut au, mut av) = (0.0, 0.0);
            for &(d2, i) in order.iter().take_while(|&&(d2, _)| d2 <= cutoff) {
                let w = d2.sqrt().powf(-power);
                wsum += w;
                au += w * scattered.velocities[i][0];
                av += w * scattered.velocities[i][1];
            }
            u[cell] = au / wsum;
            v[cell] = av / wsum;
        }
    }
    VectorField { u, v, grid: grid.clone() }
}

/// Simulated single-cell snapshot of the repressilator: integrate the full
/// six-dimensional system from the canonical initial condition for T = 50 at
/// dt = 0.1, draw `n_cells` distinct time indices, jitter every coordinate
/// with N(0, σ²), and report analytic velocities at the jittered states
/// projected onto (p_TetR, p_LacI).
pub fn simulate_repressilator_sample(
    alpha: f64,
    beta: f64,
    n_cells: usize,
    sigma: f64,
    seed: u64,
) -> Result<ScatteredVelocities, OdeError> {
    let system = make_system(SystemName::Repressilator, &[alpha, beta])
        .expect("caller passes in-range parameters");
    let init = REPRESSILATOR_INIT.to_vec();
    let traj = integrate(|y, out| system.rhs(y, out), &init, 50.0, 0.1)?;
    if traj.states.len() < n_cells {
        return Err(OdeError::TooShort { need: n_cells, have: traj.states.len() });
    }

    let mut rng = rng_from(derive(seed, 0));
    let mut picked: Vec<usize> =
        sample_indices(&mut rng, traj.states.len(), n_cells).into_iter().collect();
    picked.sort_unstable();

    let (pa, pb) = REPRESSILATOR_PROJECTION;
    let mut points = Vec::with_capacity(n_cells);
    let mut velocities = Vec::with_capacity(n_cells);
    let mut out = [0.0; 6];
    for idx in picked {
        let mut state = traj.states[idx].clone();
        for x in state.iter_mut() {
            *x += sigma * rng.sample::<f64, _>(StandardNormal);
        }
        system.rhs(&state, &mut out);
        points.push([state[pa], state[pb]]);
        velocities.push([out[pa], out[pb]]);
    }
    Ok(ScatteredVelocities { points, velocities })
}

/// Reads `x,y,vx,vy` records with a header line.
pub fn read_scattered_csv(path: &Path) -> Result<ScatteredVelocities, OdeError> {
    let file = std::fs::File::open(path)?;
    let mut points = Vec::new();
    let mut velocities = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            let expect = "x,y,vx,vy";
            if line.trim() != expect {
                return Err(OdeError::BadRecord {
                    line: 1,
                    reason: format!("expected header `{expect}`, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(OdeError::BadRecord {
                line: lineno + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0; 4];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.trim().parse::<f64>().map_err(|e| OdeError::BadRecord {
                line: lineno + 1,
                reason: format!("`{field}`: {e}"),
            })?;
        }
        points.push([vals[0], vals[1]]);
        velocities.push([vals[2], vals[3]]);
    }
    Ok(ScatteredVelocities { points, velocities })
}

/// Writes the matching `x,y,vx,vy` file with full round-trip precision.
pub fn write_scattered_csv(path: &Path, data: &ScatteredVelocities) -> Result<(), OdeError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,vx,vy")?;
    for (p, w) in data.points.iter().zip(&data.velocities) {
        writeln!(out, "{:?},{:?},{:?},{:?}", p[0], p[1], w[0], w[1])?;
    }
    Ok(())
}
