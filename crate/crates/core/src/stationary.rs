//! The unperturbed stationary density `C exp(-2V/sigma^2)` and two
//! stencil-based consistency checks for it.

use crate::error::Result;
use crate::grid::{first_derivative, second_derivative, trapezoid, Field, Grid1D};
use crate::problem::{PotentialDerivs, ProblemSpec};

#[derive(Debug, Clone)]
pub struct Stationary {
    pub density: Field,
    /// `min_i V(x_i)`, subtracted from `V` before exponentiation. With
    /// `normalize = false` the `C = 1` density is `density * exp(-2 v_shift / sigma^2)`.
    pub v_shift: f64,
    /// Normalisation constant actually applied to the shifted exponential (1 when not normalising).
    pub scale: f64,
}

pub(crate) fn potential_profile(spec: &ProblemSpec, grid: &Grid1D) -> Result<Vec<PotentialDerivs>> {
    grid.nodes()
        .into_iter()
        .map(|x| spec.potential_derivatives(x))
        .collect()
}

/// Samples `exp(-2 (V - min V) / sigma^2)` and optionally scales it to unit trapezoid mass.
pub fn stationary_density(spec: &ProblemSpec, grid: &Grid1D, normalize: bool) -> Result<Stationary> {
    let prof = potential_profile(spec, grid)?;
    let v_shift = prof.iter().map(|d| d.v).fold(f64::INFINITY, f64::min);
    let s2 = spec.sigma * spec.sigma;
    let mut values: Vec<f64> = prof
        .iter()
        .map(|d| (-2.0 * (d.v - v_shift) / s2).exp())
        .collect();
    let mut scale = 1.0;
    if normalize {
        scale = 1.0 / trapezoid(grid.dx(), &values);
        values.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(Stationary {
        density: Field::new(*grid, values, 0.0)?,
        v_shift,
        scale,
    })
}

/// Max-norm of `d/dx[V' p] + (sigma^2/2) d^2p/dx^2` evaluated with grid stencils.
pub fn stationary_residual(phat: &Field, spec: &ProblemSpec) -> Result<f64> {
    let r = stationary_rhs(phat, spec)?;
    Ok(r.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub(crate) fn stationary_rhs(p: &Field, spec: &ProblemSpec) -> Result<Vec<f64>> {
    let grid = p.grid();
    let dx = grid.dx();
    let prof = potential_profile(spec, grid)?;
    let flux: Vec<f64> = prof.iter().zip(p.values()).map(|(d, v)| d.dv * v).collect();
    let d1 = first_derivative(&flux, dx);
    let d2 = second_derivative(p.values(), dx);
    let diff = spec.diffusion();
    Ok(d1.iter().zip(&d2).map(|(a, b)| a + diff * b).collect())
}

/// Max-norm of `dp/dx + (2/sigma^2) V' p`, which vanishes for the exact stationary density.
pub fn log_derivative_check(phat: &Field, spec: &ProblemSpec) -> Result<f64> {
    let grid = phat.grid();
    let prof = potential_profile(spec, grid)?;
    let d1 = first_derivative(phat.values(), grid.dx());
    let k = 2.0 / (spec.sigma * spec.sigma);
    Ok(d1
        .iter()
        .zip(&prof)
        .zip(phat.values())
        .map(|((dp, d), p)| (dp + k * d.dv * p).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use crate::problem::PotentialSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ou() -> ProblemSpec {
        ProblemSpec::ornstein_uhlenbeck(0.0, 1.0)
    }

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-6.0, 6.0, n).unwrap()
    }

    #[test]
    fn ou_density_matches_closed_form() {
        let g = grid(513);
        let s = stationary_density(&ou(), &g, true).unwrap();
        assert_abs_diff_eq!(integrate(&s.density), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.density.values()[256], 1.0 / PI.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.density.values()[256], 0.5641896, epsilon = 1e-7);
        for (x, v) in g.nodes().iter().zip(s.density.values()) {
            assert_abs_diff_eq!(*v, (-x * x).exp() / PI.sqrt(), epsilon = 1e-13);
        }
    }

    #[test]
    fn unnormalised_density_reports_shift() {
        let spec = ProblemSpec {
            potential: PotentialSpec::Quartic { a: 1.0, b: 1.0 },
            domain: (-3.0, 3.0),
            ..ou()
        };
        let g = Grid1D::new(-3.0, 3.0, 601).unwrap();
        let s = stationary_density(&spec, &g, false).unwrap();
        assert_abs_diff_eq!(s.v_shift, -0.25, epsilon = 1e-12);
        assert_eq!(s.scale, 1.0);
        // C = 1 convention: exp(-2V) at x = 0 is 1.
        let raw = s.density.values()[300] * (-2.0 * s.v_shift).exp();
        assert_abs_diff_eq!(raw, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_potential_gives_symmetric_density() {
        let spec = ProblemSpec {
            potential: PotentialSpec::Langevin {
                a1: 1.0,
                a2: 0.5,
                a3: 0.25,
            },
            ..ou()
        };
        let s = stationary_density(&spec, &grid(401), true).unwrap();
        let v = s.density.values();
        for i in 0..200 {
            assert_abs_diff_eq!(v[i], v[400 - i], epsilon = 1e-14);
        }
        assert!(v.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn double_well_peaks_at_well_bottoms() {
        let spec = ProblemSpec {
            potential: PotentialSpec::Quartic { a: 1.0, b: 1.0 },
            domain: (-3.0, 3.0),
            ..ou()
        };
        let g = Grid1D::new(-3.0, 3.0, 601).unwrap();
        let s = stationary_density(&spec, &g, true).unwrap();
        let v = s.density.values();
        let max = v.iter().cloned().fold(0.0, f64::max);
        let peaks: Vec<f64> = (0..601).filter(|&i| v[i] == max).map(|i| g.x(i)).collect();
        assert_eq!(peaks.len(), 2);
        assert_abs_diff_eq!(peaks[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(peaks[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residuals_are_second_order() {
        let spec = ou();
        let r1 = stationary_residual(&stationary_density(&spec, &grid(513), true).unwrap().density, &spec)
            .unwrap();
        let r2 = stationary_residual(&stationary_density(&spec, &grid(1025), true).unwrap().density, &spec)
            .unwrap();
        assert!(r1 <= 1e-3, "{r1}");
        assert!((3.2..4.8).contains(&(r1 / r2)), "ratio {}", r1 / r2);

        let l1 = log_derivative_check(&stationary_density(&spec, &grid(513), true).unwrap().density, &spec)
            .unwrap();
        let l2 = log_derivative_check(&stationary_density(&spec, &grid(1025), true).unwrap().density, &spec)
            .unwrap();
        assert!(l1 <= 1e-3, "{l1}");
        assert!((3.2..4.8).contains(&(l1 / l2)), "ratio {}", l1 / l2);
    }

    #[test]
    fn constant_field_is_not_stationary_for_nonconstant_potential() {
        let spec = ou();
        let g = grid(129);
        let c = Field::constant(g, 0.3, 0.0).unwrap();
        // d/dx[x * 0.3] = 0.3 everywhere.
        assert_abs_diff_eq!(stationary_residual(&c, &spec).unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn flat_potential_residuals_vanish() {
        let spec = ProblemSpec {
            potential: PotentialSpec::Table {
                x_min: -6.0,
                x_max: 6.0,
                values: vec![2.0; 50],
            },
            ..ou()
        };
        let g = grid(129);
        let c = Field::constant(g, 0.7, 0.0).unwrap();
        assert_eq!(stationary_residual(&c, &spec).unwrap(), 0.0);
        let s = stationary_density(&spec, &g, true).unwrap();
        assert!(log_derivative_check(&s.density, &spec).unwrap() < 1e-14);
    }
}
