//! Hamilton-Jacobi form of the Fokker-Planck equation.
//!
//! With `p = exp(-S / sigma^2)` the equation becomes `dS/dt + H = 0`, where
//! `H0 = sigma^2 V'' - V' S_x - (sigma^2/2) S_xx + S_x^2 / 2` and
//! `H_pert = epsilon h(t) S_x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::Field;
use crate::problem::ProblemSpec;

/// Nodes with `p < TAIL_CUTOFF * max p` are left out of residuals.
pub const TAIL_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianEval {
    pub h: f64,
    pub h0: f64,
    pub hpert: f64,
}

/// `S = -sigma^2 ln p`.
pub fn to_hj_potential(p: &Field, sigma: f64) -> Result<Field> {
    if let Some((node, &value)) = p.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveDensity { node, value });
    }
    let s2 = sigma * sigma;
    p.map(|v| -s2 * v.ln())
}

pub fn hamiltonian(spec: &ProblemSpec, t: f64, x: f64, sx: f64, sxx: f64) -> Result<HamiltonianEval> {
    let d = spec.potential_derivatives(x)?;
    let s2 = spec.sigma * spec.sigma;
    let h0 = s2 * d.d2v - d.dv * sx - 0.5 * s2 * sxx + 0.5 * sx * sx;
    let hpert = spec.epsilon * spec.perturbation.eval(t) * sx;
    Ok(HamiltonianEval {
        h: h0 + hpert,
        h0,
        hpert,
    })
}

/// First and last node index with `p >= TAIL_CUTOFF * max p`.
fn bulk(p: &[f64]) -> (usize, usize) {
    let cut = TAIL_CUTOFF * p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = p.iter().position(|&v| v >= cut).unwrap_or(0);
    let hi = p.iter().rposition(|&v| v >= cut).unwrap_or(0);
    (lo, hi)
}

/// Max-norm of `dS/dt + H` over interior snapshots and bulk interior nodes,
/// with centred differences in time and space.
pub fn hjb_residual(traj: &Trajectory, spec: &ProblemSpec) -> Result<f64> {
    let snaps = traj.snapshots();
    if snaps.len() < 3 {
        return Err(Error::TooFewSnapshots {
            needed: 3,
            got: snaps.len(),
        });
    }
    let h = traj.uniform_spacing()?;
    let grid = traj.grid();
    let n = grid.len();
    let dx = grid.dx();
    let s2 = spec.sigma * spec.sigma;

    let mut ranges = Vec::with_capacity(snaps.len());
    let mut potentials = Vec::with_capacity(snaps.len());
    for snap in snaps {
        let p = snap.values();
        let (lo, hi) = bulk(p);
        if let Some(k) = p[lo..=hi].iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveDensity {
                node: lo + k,
                value: p[lo + k],
            });
        }
        // Tail nodes may be nonpositive; they are never read.
        potentials.push(p.iter().map(|&v| -s2 * v.ln()).collect::<Vec<f64>>());
        ranges.push((lo, hi));
    }

    let mut worst: f64 = 0.0;
    for j in 1..snaps.len() - 1 {
        let t = snaps[j].time();
        let s = &potentials[j];
        let lo = ranges[j - 1..=j + 1].iter().map(|r| r.0).max().unwrap().max(1);
        let hi = ranges[j - 1..=j + 1].iter().map(|r| r.1).min().unwrap().min(n - 2);
        for i in lo..=hi {
            let sx = (s[i + 1] - s[i - 1]) / (2.0 * dx);
            let sxx = ((s[i + 1] - s[i]) - (s[i] - s[i - 1])) / (dx * dx);
            let st = (potentials[j + 1][i] - potentials[j - 1][i]) / (2.0 * h);
            let ham = hamiltonian(spec, t, grid.x(i), sx, sxx)?;
            worst = worst.max((st + ham.h).abs());
        }
    }
    Ok(worst)
}
