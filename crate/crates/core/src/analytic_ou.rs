//! Closed-form solution of the perturbed Ornstein-Uhlenbeck process
//! `dX = (-X + epsilon cos t) dt + sigma dW`, `X_0 = 0`.
//!
//! The mean solves `m' = -m + epsilon cos t`, `m(0) = 0`, which gives
//! `m(t) = -(epsilon/2) z1(t)`; the variance is `sigma^2 (1 - e^{-2t}) / 2`.

use serde::Serialize;

use crate::approx::{assemble, check_epsilons, check_eval_time, fit_slope, kappa_at};
use crate::error::{Error, Result};
use crate::evolution::SchemeConfig;
use crate::grid::{norms, Field, Grid1D};
use crate::problem::ProblemSpec;
use crate::stationary::stationary_density;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OUOracle {
    pub epsilon: f64,
    pub sigma: f64,
}

/// `-sin t - cos t + e^{-t}`.
pub fn z1(t: f64) -> f64 {
    -t.sin() - t.cos() + (-t).exp()
}

impl OUOracle {
    pub fn new(epsilon: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be finite"));
        }
        Ok(OUOracle { epsilon, sigma })
    }

    /// The matching problem: unit stiffness, centred at 0, forcing `cos t`.
    pub fn problem(&self) -> ProblemSpec {
        ProblemSpec::ornstein_uhlenbeck(self.epsilon, self.sigma)
    }

    /// `(mean, variance)` at time `t >= 0`.
    pub fn moments(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("must be nonnegative, got {t}")));
        }
        let mean = -0.5 * self.epsilon * z1(t);
        let var = 0.5 * self.sigma * self.sigma * -(-2.0 * t).exp_m1();
        Ok((mean, var))
    }

    /// Gaussian density with the moments at `t > 0`, sampled on `grid`.
    pub fn density(&self, t: f64, grid: &Grid1D) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::param("t", format!("the density is a point mass at t = {t}")));
        }
        let (m, v) = self.moments(t)?;
        let c = 1.0 / (2.0 * std::f64::consts::PI * v).sqrt();
        Field::from_fn(*grid, t, |x| c * (-(x - m) * (x - m) / (2.0 * v)).exp())
    }
}

pub fn ou_moments(oracle: &OUOracle, t: f64) -> Result<(f64, f64)> {
    oracle.moments(t)
}

pub fn ou_exact_density(oracle: &OUOracle, t: f64, grid: &Grid1D) -> Result<Field> {
    oracle.density(t, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaOrder {
    pub epsilons: Vec<f64>,
    /// `|exact - p_tilde|` in the max norm, one per epsilon.
    pub errors: Vec<f64>,
    pub slope: f64,
    pub eval_time: f64,
}

/// Max-norm distance between the exact density and `p_tilde` at `t_eval`
/// for each epsilon, and its log-log slope.
pub fn ou_delta_order(
    oracle: &OUOracle,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    epsilons: &[f64],
    t_eval: f64,
) -> Result<DeltaOrder> {
    check_epsilons(epsilons)?;
    let spec = ProblemSpec {
        domain: (grid.x_min(), grid.x_max()),
        ..oracle.problem()
    };
    check_eval_time(&spec, t_eval)?;
    let phat = stationary_density(&spec, grid, true)?.density;
    let kappa = kappa_at(&spec, grid, scheme, t_eval)?;
    let errors: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            let exact = OUOracle::new(eps, oracle.sigma)?.density(t_eval, grid)?;
            let ptilde = assemble(&phat, &kappa, eps)?;
            Ok(norms(&exact, &ptilde)?.linf)
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = epsilons.iter().cloned().zip(errors.iter().cloned()).collect();
    let slope = fit_slope(&pts)?;
    Ok(DeltaOrder {
        epsilons: epsilons.to_vec(),
        errors,
        slope,
        eval_time: t_eval,
    })
}
