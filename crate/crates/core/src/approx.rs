//! The first-order approximation `p_tilde = p_hat (1 + epsilon kappa)`, the
//! equation it satisfies, and the epsilon-scaling study of its error.

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{solve_fpe, solve_kappa, SchemeConfig, Trajectory};
use crate::grid::{check_same_grid, first_derivative, norms, Field, Grid1D, Norms};
use crate::problem::ProblemSpec;
use crate::stationary::{stationary_density, stationary_rhs};

/// Largest epsilon accepted by [`scaling_study`].
pub const EPSILON_CEILING: f64 = 0.5;
/// Above this epsilon the study still runs but logs a warning.
pub const EPSILON_WARNING: f64 = 0.2;

/// `p_hat * (1 + epsilon * kappa)`, tagged with the time of `kappa`.
pub fn assemble(phat: &Field, kappa: &Field, epsilon: f64) -> Result<Field> {
    check_same_grid(phat, kappa)?;
    let values = phat
        .values()
        .iter()
        .zip(kappa.values())
        .map(|(p, k)| p * (1.0 + epsilon * k))
        .collect();
    Field::new(*phat.grid(), values, kappa.time())
}

/// Residual of `dp~/dt = d/dx[V' p~] + (sigma^2/2) d^2p~/dx^2 - epsilon h(t) dp_hat/dx`
/// along a kappa trajectory. Time derivatives are centred differences between
/// snapshots, space derivatives are grid stencils; max-norm over all nodes and
/// the interior snapshots.
pub fn approx_residual(phat: &Field, kappa_traj: &Trajectory, spec: &ProblemSpec) -> Result<f64> {
    let snaps = kappa_traj.snapshots();
    if snaps.len() < 3 {
        return Err(Error::TooFewSnapshots {
            needed: 3,
            got: snaps.len(),
        });
    }
    check_same_grid(phat, &snaps[0])?;
    let h = kappa_traj.uniform_spacing()?;
    let eps = spec.epsilon;
    let dphat = first_derivative(phat.values(), phat.grid().dx());

    let ptilde: Vec<Field> = snaps
        .iter()
        .map(|k| assemble(phat, k, eps))
        .collect::<Result<_>>()?;

    let mut worst: f64 = 0.0;
    for j in 1..ptilde.len() - 1 {
        let t = ptilde[j].time();
        let rhs = stationary_rhs(&ptilde[j], spec)?;
        let forcing = eps * spec.perturbation.eval(t);
        let (prev, next) = (ptilde[j - 1].values(), ptilde[j + 1].values());
        for i in 0..rhs.len() {
            let dt = (next[i] - prev[i]) / (2.0 * h);
            let r = dt - (rhs[i] - forcing * dphat[i]);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub time: f64,
    /// `q = p - p_tilde`.
    pub q_field: Field,
    pub norms_p_ptilde: Norms,
    pub norms_ptilde_phat: Norms,
    pub norms_p_phat: Norms,
}

/// Pairwise distances between the full solution, the approximation and `p_hat`.
pub fn error_report(p: &Field, ptilde: &Field, phat: &Field) -> Result<ErrorReport> {
    check_same_grid(p, ptilde)?;
    check_same_grid(p, phat)?;
    let tol = 1e-9 * p.time().abs().max(1.0);
    if (p.time() - ptilde.time()).abs() > tol {
        return Err(Error::TimeMismatch(p.time(), ptilde.time()));
    }
    Ok(ErrorReport {
        time: p.time(),
        q_field: p.zip_with(ptilde, |a, b| a - b)?,
        norms_p_ptilde: norms(p, ptilde)?,
        norms_ptilde_phat: norms(ptilde, phat)?,
        norms_p_phat: norms(p, phat)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub p_ptilde: Norms,
    pub ptilde_phat: Norms,
    pub p_phat: Norms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slopes {
    pub p_ptilde: f64,
    pub ptilde_phat: f64,
    pub p_phat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub epsilons: Vec<f64>,
    pub errors: Vec<ErrorNorms>,
    /// Log-log slopes of the max-norm errors against epsilon.
    pub slopes: Slopes,
    pub eval_time: f64,
}

pub(crate) fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < 3 {
        return Err(Error::param("epsilons", format!("need at least 3 values, got {}", epsilons.len())));
    }
    if let Some(e) = epsilons.iter().find(|&&e| !(e > 0.0 && e <= EPSILON_CEILING)) {
        return Err(Error::param("epsilons", format!("{e} is outside (0, {EPSILON_CEILING}]")));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("epsilons", "values must be strictly decreasing"));
    }
    if let Some(e) = epsilons.iter().find(|&&e| e > EPSILON_WARNING) {
        warn!("epsilon = {e} is above {EPSILON_WARNING}; asymptotic slopes may degrade");
    }
    Ok(())
}

pub(crate) fn check_eval_time(spec: &ProblemSpec, t_eval: f64) -> Result<()> {
    let (t0, t1) = spec.time_window;
    if !(t_eval > t0 && t_eval <= t1) {
        return Err(Error::param("t_eval", format!("{t_eval} is outside the time window ({t0}, {t1}]")));
    }
    Ok(())
}

/// Kappa at `t_eval`, started from zero at the beginning of the time window.
pub(crate) fn kappa_at(spec: &ProblemSpec, grid: &Grid1D, scheme: &SchemeConfig, t_eval: f64) -> Result<Field> {
    let t0 = spec.time_window.0;
    let zero = Field::constant(*grid, 0.0, t0)?;
    let traj = solve_kappa(spec, grid, &scheme.with_stride(usize::MAX), &zero, t0, t_eval)?;
    Ok(traj.last().clone())
}

/// Errors of the approximation at `t_eval` for each epsilon, with fitted orders.
///
/// Kappa does not depend on epsilon and is solved once; the Fokker-Planck
/// solves run in parallel and are collected in input order.
pub fn scaling_study(
    spec_base: &ProblemSpec,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    epsilons: &[f64],
    t_eval: f64,
) -> Result<ScalingResult> {
    check_epsilons(epsilons)?;
    check_eval_time(spec_base, t_eval)?;
    scheme.check()?;

    let t0 = spec_base.time_window.0;
    let phat = stationary_density(spec_base, grid, true)?.density;
    let kappa = kappa_at(spec_base, grid, scheme, t_eval)?;
    let final_only = scheme.with_stride(usize::MAX);

    let errors: Vec<ErrorNorms> = epsilons
        .par_iter()
        .map(|&eps| {
            let spec = spec_base.with_epsilon(eps);
            let run = || -> Result<ErrorNorms> {
                let traj = solve_fpe(&spec, grid, &final_only, &phat, t0, t_eval)?;
                let ptilde = assemble(&phat, &kappa, eps)?;
                let rep = error_report(traj.last(), &ptilde, &phat)?;
                info!(
                    "epsilon {eps}: |p - p~| = {:.3e}, |p~ - p^| = {:.3e}",
                    rep.norms_p_ptilde.linf, rep.norms_ptilde_phat.linf
                );
                Ok(ErrorNorms {
                    p_ptilde: rep.norms_p_ptilde,
                    ptilde_phat: rep.norms_ptilde_phat,
                    p_phat: rep.norms_p_phat,
                })
            };
            run().map_err(|e| Error::AtEpsilon {
                epsilon: eps,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let slope = |f: fn(&ErrorNorms) -> f64| {
        let pts: Vec<(f64, f64)> = epsilons.iter().zip(&errors).map(|(&e, n)| (e, f(n))).collect();
        fit_slope(&pts)
    };
    let slopes = Slopes {
        p_ptilde: slope(|n| n.p_ptilde.linf)?,
        ptilde_phat: slope(|n| n.ptilde_phat.linf)?,
        p_phat: slope(|n| n.p_phat.linf)?,
    };
    Ok(ScalingResult {
        epsilons: epsilons.to_vec(),
        errors,
        slopes,
        eval_time: t_eval,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::param("points", format!("need at least 2, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonPositiveInput { x, y });
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all abscissae are equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
