//! Theta-method time stepping for the perturbed Fokker-Planck equation
//! (conservative flux form, no-flux walls) and for the first-order
//! correction equation (advective form, homogeneous Neumann walls).
//!
//! The Fokker-Planck equation is discretised on vertex-centred finite
//! volumes: node `i` owns the cell between the neighbouring interfaces, the
//! two boundary cells are half cells, and the zero-flux condition is imposed
//! on the outer faces. Total trapezoid mass is therefore conserved by
//! construction. Every interface flux is linear in the two adjacent nodes,
//! `F = alpha p_i - beta p_{i+1}`, so each step is one tridiagonal solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::problem::ProblemSpec;
use crate::tridiag::Tridiag;

/// Values below this abort a Fokker-Planck solve.
pub const POSITIVITY_FLOOR: f64 = -1e-12;

/// Interface drift discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    /// Arithmetic mean of the two nodes (second order, needs resolved cell Peclet).
    Central,
    /// Donor-cell upwinding (first order, always monotone).
    Upwind,
    /// Scharfetter-Gummel / Chang-Cooper exponential fitting. Second order, monotone,
    /// and the sampled `exp(-2V/sigma^2)` is an exact discrete equilibrium.
    Exponential,
}

impl std::str::FromStr for Advection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "central" => Ok(Advection::Central),
            "upwind" => Ok(Advection::Upwind),
            "exponential" => Ok(Advection::Exponential),
            other => Err(format!(
                "unknown advection scheme `{other}` (expected central, upwind or exponential)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub dt: f64,
    /// 0.5 is Crank-Nicolson, 1 is implicit Euler.
    pub theta: f64,
    pub advection: Advection,
    pub snapshot_stride: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            dt: 1e-3,
            theta: 0.5,
            advection: Advection::Exponential,
            snapshot_stride: 1,
        }
    }
}

impl SchemeConfig {
    pub fn new(dt: f64, theta: f64, advection: Advection, snapshot_stride: usize) -> Result<Self> {
        let s = SchemeConfig {
            dt,
            theta,
            advection,
            snapshot_stride,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::param(
                "theta",
                format!("must lie in [0.5, 1], got {}", self.theta),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_stride(self, snapshot_stride: usize) -> Self {
        SchemeConfig {
            snapshot_stride,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeKind {
    Fpe,
    Kappa,
}

/// Snapshots of one solve, all on one grid, at strictly increasing times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    snapshots: Vec<Field>,
    kind: PdeKind,
    advection: Advection,
}

impl Trajectory {
    pub fn new(snapshots: Vec<Field>, kind: PdeKind, advection: Advection) -> Result<Self> {
        let first = snapshots.first().ok_or(Error::TooFewSnapshots { needed: 1, got: 0 })?;
        if snapshots.iter().any(|s| !s.grid().same_as(first.grid())) {
            return Err(Error::GridMismatch);
        }
        if snapshots.windows(2).any(|w| !(w[1].time() > w[0].time())) {
            return Err(Error::NonIncreasingTimes);
        }
        Ok(Trajectory {
            snapshots,
            kind,
            advection,
        })
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Field> {
        self.snapshots
    }

    pub fn kind(&self) -> PdeKind {
        self.kind
    }

    pub fn advection(&self) -> Advection {
        self.advection
    }

    pub fn grid(&self) -> &Grid1D {
        self.snapshots[0].grid()
    }

    pub fn first(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().unwrap()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    /// Common spacing of the snapshot times, if uniform to a relative 1e-9.
    pub fn uniform_spacing(&self) -> Result<f64> {
        let t = self.times();
        if t.len() < 2 {
            return Err(Error::TooFewSnapshots {
                needed: 2,
                got: t.len(),
            });
        }
        let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300)) {
            Ok(h)
        } else {
            Err(Error::NonUniformSpacing)
        }
    }
}

/// Bernoulli function `w / (e^w - 1)`.
pub(crate) fn bernoulli(w: f64) -> f64 {
    if w.abs() < 1e-10 {
        1.0 - 0.5 * w
    } else {
        w / w.exp_m1()
    }
}

/// Interface coefficients `(alpha, beta)` of `F = alpha p_i - beta p_{i+1}`.
fn flux_coefficients(advection: Advection, drift: f64, diffusion: f64, dx: f64) -> (f64, f64) {
    let d = diffusion / dx;
    match advection {
        Advection::Central => (0.5 * drift + d, -0.5 * drift + d),
        Advection::Upwind => (drift.max(0.0) + d, -drift.min(0.0) + d),
        Advection::Exponential => {
            let w = drift * dx / diffusion;
            (d * bernoulli(-w), d * bernoulli(w))
        }
    }
}

/// Drift at interface `i + 1/2` with the forcing removed.
fn interface_base_drift(spec: &ProblemSpec, grid: &Grid1D, advection: Advection) -> Result<Vec<f64>> {
    let n = grid.len();
    let dx = grid.dx();
    (0..n - 1)
        .map(|i| match advection {
            // Difference quotient of V makes exp(-2V/sigma^2) an exact zero-flux state.
            Advection::Exponential => {
                let a = spec.potential_derivatives(grid.x(i))?.v;
                let b = spec.potential_derivatives(grid.x(i + 1))?.v;
                Ok(-(b - a) / dx)
            }
            _ => Ok(-spec
                .potential_derivatives(0.5 * (grid.x(i) + grid.x(i + 1)))?
                .dv),
        })
        .collect()
}

pub(crate) struct FpeOperator {
    advection: Advection,
    diffusion: f64,
    dx: f64,
    inv_w: Vec<f64>,
    base_drift: Vec<f64>,
    epsilon: f64,
    perturbation: crate::problem::PerturbationSpec,
}

impl FpeOperator {
    pub fn new(spec: &ProblemSpec, grid: &Grid1D, advection: Advection) -> Result<Self> {
        Ok(FpeOperator {
            advection,
            diffusion: spec.diffusion(),
            dx: grid.dx(),
            inv_w: grid.weights().iter().map(|w| 1.0 / w).collect(),
            base_drift: interface_base_drift(spec, grid, advection)?,
            epsilon: spec.epsilon,
            perturbation: spec.perturbation,
        })
    }

    /// `dp/dt = A(t) p`.
    pub fn assemble(&self, t: f64, a: &mut Tridiag) {
        let forcing = self.epsilon * self.perturbation.eval(t);
        self.assemble_with_forcing(forcing, a);
    }

    fn assemble_with_forcing(&self, forcing: f64, a: &mut Tridiag) {
        let n = self.inv_w.len();
        a.lower.iter_mut().for_each(|v| *v = 0.0);
        a.diag.iter_mut().for_each(|v| *v = 0.0);
        a.upper.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n - 1 {
            let (alpha, beta) =
                flux_coefficients(self.advection, self.base_drift[k] + forcing, self.diffusion, self.dx);
            a.diag[k] -= alpha * self.inv_w[k];
            a.upper[k] += beta * self.inv_w[k];
            a.lower[k + 1] += alpha * self.inv_w[k + 1];
            a.diag[k + 1] -= beta * self.inv_w[k + 1];
        }
    }

    /// Interface coefficients with the forcing switched off.
    fn equilibrium_ratios(&self) -> Vec<(f64, f64)> {
        self.base_drift
            .iter()
            .map(|&b| flux_coefficients(self.advection, b, self.diffusion, self.dx))
            .collect()
    }
}

pub(crate) struct KappaOperator {
    matrix: Tridiag,
    /// `(2/sigma^2) V'(x_i)`; multiplied by `h(t)` to give the source.
    source_shape: Vec<f64>,
    perturbation: crate::problem::PerturbationSpec,
}

impl KappaOperator {
    pub fn new(spec: &ProblemSpec, grid: &Grid1D, advection: Advection) -> Result<Self> {
        let n = grid.len();
        let dx = grid.dx();
        let diff = spec.diffusion();
        let dv: Vec<f64> = grid
            .nodes()
            .into_iter()
            .map(|x| spec.potential_derivatives(x).map(|d| d.dv))
            .collect::<Result<_>>()?;
        let mut m = Tridiag::zeros(n);
        let c2 = diff / (dx * dx);
        match advection {
            Advection::Central | Advection::Upwind => {
                for i in 1..n - 1 {
                    m.lower[i] = c2;
                    m.diag[i] = -2.0 * c2;
                    m.upper[i] = c2;
                    // Transport term -V' dkappa/dx.
                    let c = dv[i];
                    if advection == Advection::Central {
                        m.lower[i] += 0.5 * c / dx;
                        m.upper[i] -= 0.5 * c / dx;
                    } else if c > 0.0 {
                        m.lower[i] += c / dx;
                        m.diag[i] -= c / dx;
                    } else {
                        m.upper[i] -= c / dx;
                        m.diag[i] += c / dx;
                    }
                }
                // Ghost-node reflection: dkappa/dx = 0 at both walls.
                m.diag[0] = -2.0 * c2;
                m.upper[0] = 2.0 * c2;
                m.lower[n - 1] = 2.0 * c2;
                m.diag[n - 1] = -2.0 * c2;
            }
            Advection::Exponential => {
                // Adjoint of the unforced Fokker-Planck flux operator (W^{-1} M^T).
                let fpe = FpeOperator::new(spec, grid, advection)?;
                let inv_w = &fpe.inv_w;
                for (k, (alpha, beta)) in fpe.equilibrium_ratios().into_iter().enumerate() {
                    m.diag[k] -= alpha * inv_w[k];
                    m.upper[k] += alpha * inv_w[k];
                    m.lower[k + 1] += beta * inv_w[k + 1];
                    m.diag[k + 1] -= beta * inv_w[k + 1];
                }
            }
        }
        let k = 2.0 / (spec.sigma * spec.sigma);
        Ok(KappaOperator {
            matrix: m,
            source_shape: dv.iter().map(|d| k * d).collect(),
            perturbation: spec.perturbation,
        })
    }

    pub fn source(&self, t: f64, out: &mut [f64]) {
        let h = self.perturbation.eval(t);
        for (o, s) in out.iter_mut().zip(&self.source_shape) {
            *o = s * h;
        }
    }
}

enum Operator {
    Fpe(FpeOperator),
    Kappa(KappaOperator),
}

impl Operator {
    /// Fills the matrix at time `t`; returns whether a source term is present.
    fn assemble(&self, t: f64, a: &mut Tridiag, src: &mut [f64]) -> bool {
        match self {
            Operator::Fpe(op) => {
                op.assemble(t, a);
                false
            }
            Operator::Kappa(op) => {
                a.clone_from(&op.matrix);
                op.source(t, src);
                true
            }
        }
    }
}

pub(crate) fn step_count(t0: f64, t1: f64, dt: f64) -> usize {
    (((t1 - t0) / dt) - 1e-9).ceil().max(1.0) as usize
}

fn integrate_theta(
    op: &Operator,
    kind: PdeKind,
    scheme: &SchemeConfig,
    init: &Field,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    scheme.check()?;
    if !(t0 < t1) {
        return Err(Error::param("t1", format!("must exceed t0 = {t0}, got {t1}")));
    }
    let grid = *init.grid();
    let n = grid.len();
    let steps = step_count(t0, t1, scheme.dt);
    let theta = scheme.theta;

    let mut u = init.values().to_vec();
    let mut snapshots = vec![init.clone().with_time(t0)];

    let mut a_now = Tridiag::zeros(n);
    let mut a_next = Tridiag::zeros(n);
    let mut s_now = vec![0.0; n];
    let mut s_next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let has_source = op.assemble(t0, &mut a_now, &mut s_now);

    for k in 0..steps {
        let t_now = t0 + k as f64 * scheme.dt;
        let t_next = if k + 1 == steps {
            t1
        } else {
            t0 + (k + 1) as f64 * scheme.dt
        };
        let dt = t_next - t_now;
        op.assemble(t_next, &mut a_next, &mut s_next);

        a_now.apply_into(&u, (1.0 - theta) * dt, 1.0, &mut rhs);
        if has_source {
            for i in 0..n {
                rhs[i] += dt * ((1.0 - theta) * s_now[i] + theta * s_next[i]);
            }
        }
        a_next.solve_shifted(theta * dt, &mut rhs, &mut scratch)?;
        std::mem::swap(&mut u, &mut rhs);

        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Instability {
                step: k + 1,
                time: t_next,
            });
        }
        if kind == PdeKind::Fpe {
            if let Some((node, &value)) = u
                .iter()
                .enumerate()
                .find(|(_, &v)| v < POSITIVITY_FLOOR)
            {
                return Err(Error::Positivity {
                    step: k + 1,
                    node,
                    value,
                });
            }
        }
        if (k + 1) % scheme.snapshot_stride == 0 || k + 1 == steps {
            snapshots.push(Field::new(grid, u.clone(), t_next)?);
        }

        std::mem::swap(&mut a_now, &mut a_next);
        std::mem::swap(&mut s_now, &mut s_next);
    }
    Trajectory::new(snapshots, kind, scheme.advection)
}

/// Advances the perturbed Fokker-Planck equation from `p0` at `t0` to `t1`.
pub fn solve_fpe(
    spec: &ProblemSpec,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    p0: &Field,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    if !p0.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    if let Some((node, &value)) = p0.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NonPositiveDensity { node, value });
    }
    let op = Operator::Fpe(FpeOperator::new(spec, grid, scheme.advection)?);
    integrate_theta(&op, PdeKind::Fpe, scheme, p0, t0, t1)
}

/// Advances the first-order correction equation
/// `dk/dt = -V' dk/dx + (sigma^2/2) d^2k/dx^2 + (2/sigma^2) V' h(t)`.
pub fn solve_kappa(
    spec: &ProblemSpec,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    kappa0: &Field,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    if !kappa0.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    let op = Operator::Kappa(KappaOperator::new(spec, grid, scheme.advection)?);
    integrate_theta(&op, PdeKind::Kappa, scheme, kappa0, t0, t1)
}

/// Zero-flux state of the unforced discrete operator, normalised to unit trapezoid mass.
pub fn discrete_stationary(spec: &ProblemSpec, grid: &Grid1D, advection: Advection) -> Result<Field> {
    let op = FpeOperator::new(spec, grid, advection)?;
    let mut log_p = vec![0.0; grid.len()];
    for (k, (alpha, beta)) in op.equilibrium_ratios().into_iter().enumerate() {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::param(
                "advection",
                format!("interface {k} has no positive equilibrium ratio; refine the grid"),
            ));
        }
        log_p[k + 1] = log_p[k] + (alpha / beta).ln();
    }
    let top = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
    let mass = crate::grid::trapezoid(grid.dx(), &p);
    p.iter_mut().for_each(|v| *v /= mass);
    Field::new(*grid, p, 0.0)
}

/// Largest `|V'| dx / sigma^2` over the nodes.
pub fn max_cell_peclet(spec: &ProblemSpec, grid: &Grid1D) -> Result<f64> {
    let s2 = spec.sigma * spec.sigma;
    let mut m: f64 = 0.0;
    for x in grid.nodes() {
        m = m.max(spec.potential_derivatives(x)?.dv.abs() * grid.dx() / s2);
    }
    Ok(m)
}

/// Centred time difference minus the solver's own discrete right-hand side,
/// max-norm over interior nodes and interior snapshots.
pub fn pde_residual(traj: &Trajectory, spec: &ProblemSpec) -> Result<f64> {
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
    let op = match traj.kind() {
        PdeKind::Fpe => Operator::Fpe(FpeOperator::new(spec, grid, traj.advection())?),
        PdeKind::Kappa => Operator::Kappa(KappaOperator::new(spec, grid, traj.advection())?),
    };
    let mut a = Tridiag::zeros(n);
    let mut src = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for j in 1..snaps.len() - 1 {
        let u = snaps[j].values();
        let has_source = op.assemble(snaps[j].time(), &mut a, &mut src);
        let au = a.apply(u);
        let (prev, next) = (snaps[j - 1].values(), snaps[j + 1].values());
        for i in 1..n - 1 {
            let mut rhs = au[i];
            if has_source {
                rhs += src[i];
            }
            let r = (next[i] - prev[i]) / (2.0 * h) - rhs;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, norms};
    use crate::problem::{PerturbationSpec, PotentialSpec};
    use crate::stationary::stationary_density;
    use approx::assert_abs_diff_eq;

    fn ou(eps: f64) -> ProblemSpec {
        ProblemSpec::ornstein_uhlenbeck(eps, 1.0)
    }

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-6.0, 6.0, n).unwrap()
    }

    #[test]
    fn bernoulli_limits() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert_abs_diff_eq!(bernoulli(1e-6), 1.0 - 0.5e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(bernoulli(-1e-6), 1.0 + 0.5e-6, epsilon = 1e-12);
        // B(-w) = B(w) e^w.
        for &w in &[0.3, -2.0, 7.5] {
            assert_abs_diff_eq!(bernoulli(-w), bernoulli(w) * f64::exp(w), epsilon = 1e-12);
        }
    }

    #[test]
    fn scheme_config_checks() {
        assert!(SchemeConfig::new(0.0, 0.5, Advection::Central, 1).is_err());
        assert!(SchemeConfig::new(1e-3, 0.4, Advection::Central, 1).is_err());
        assert!(SchemeConfig::new(1e-3, 1.1, Advection::Central, 1).is_err());
        assert!(SchemeConfig::new(1e-3, 1.0, Advection::Upwind, 0).is_err());
        assert!(SchemeConfig::new(1e-3, 1.0, Advection::Upwind, 3).is_ok());
        assert_eq!("upwind".parse::<Advection>().unwrap(), Advection::Upwind);
        assert!("spectral".parse::<Advection>().is_err());
    }

    #[test]
    fn trajectory_rejects_bad_snapshots() {
        let g = grid(9);
        let a = Field::constant(g, 0.0, 1.0).unwrap();
        let b = Field::constant(g, 0.0, 1.0).unwrap();
        assert!(matches!(
            Trajectory::new(vec![a.clone(), b], PdeKind::Fpe, Advection::Central),
            Err(Error::NonIncreasingTimes)
        ));
        let c = Field::constant(grid(11), 0.0, 2.0).unwrap();
        assert!(matches!(
            Trajectory::new(vec![a, c], PdeKind::Fpe, Advection::Central),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn exponential_scheme_keeps_sampled_equilibrium() {
        let spec = ou(0.0);
        let g = grid(257);
        let phat = stationary_density(&spec, &g, true).unwrap().density;
        let disc = discrete_stationary(&spec, &g, Advection::Exponential).unwrap();
        assert!(norms(&phat, &disc).unwrap().linf < 1e-13);
        let scheme = SchemeConfig::new(1e-2, 0.5, Advection::Exponential, 100).unwrap();
        let traj = solve_fpe(&spec, &g, &scheme, &phat, 0.0, 5.0).unwrap();
        let drift = norms(traj.last(), &phat).unwrap().linf;
        assert!(drift < 5e-10, "{drift}");
    }

    #[test]
    fn mass_is_conserved_for_every_scheme() {
        let spec = ou(0.3);
        let g = grid(129);
        let p0 = Field::from_fn(g, 0.0, |x| (-(x - 1.0) * (x - 1.0) * 2.0).exp()).unwrap();
        let m0 = integrate(&p0);
        for adv in [Advection::Central, Advection::Upwind, Advection::Exponential] {
            let scheme = SchemeConfig::new(5e-3, 0.5, adv, 50).unwrap();
            let traj = solve_fpe(&spec, &g, &scheme, &p0, 0.0, 4.0).unwrap();
            for s in traj.snapshots() {
                assert!((integrate(s) - m0).abs() <= 1e-10, "{adv:?}");
            }
        }
    }

    #[test]
    fn snapshots_follow_stride_and_end_exactly() {
        let spec = ou(0.1);
        let g = grid(65);
        let p0 = stationary_density(&spec, &g, true).unwrap().density;
        let scheme = SchemeConfig::new(0.03, 0.5, Advection::Central, 10).unwrap();
        let traj = solve_fpe(&spec, &g, &scheme, &p0, 0.0, 1.0).unwrap();
        let t = traj.times();
        // 34 steps: snapshots at 0, 0.3, 0.6, 0.9 and the shortened final step at 1.0.
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert_abs_diff_eq!(t[1], 0.3, epsilon = 1e-14);
        assert!(matches!(traj.uniform_spacing(), Err(Error::NonUniformSpacing)));
    }

    #[test]
    fn rejects_negative_initial_density() {
        let spec = ou(0.0);
        let g = grid(33);
        let p0 = Field::from_fn(g, 0.0, |x| x).unwrap();
        let scheme = SchemeConfig::default();
        assert!(matches!(
            solve_fpe(&spec, &g, &scheme, &p0, 0.0, 1.0),
            Err(Error::NonPositiveDensity { node: 0, .. })
        ));
    }

    #[test]
    fn kappa_stays_zero_without_forcing() {
        let g = grid(129);
        let zero = Field::constant(g, 0.0, 0.0).unwrap();
        let scheme = SchemeConfig::new(1e-2, 0.5, Advection::Central, 10).unwrap();

        let unforced = ProblemSpec {
            perturbation: PerturbationSpec::Zero,
            ..ou(0.1)
        };
        let traj = solve_kappa(&unforced, &g, &scheme, &zero, 0.0, 3.0).unwrap();
        assert!(traj.snapshots().iter().all(|s| s.values().iter().all(|&v| v == 0.0)));

        let flat = ProblemSpec {
            potential: PotentialSpec::Table {
                x_min: -6.0,
                x_max: 6.0,
                values: vec![1.0; 13],
            },
            ..ou(0.1)
        };
        let traj = solve_kappa(&flat, &g, &scheme, &zero, 0.0, 3.0).unwrap();
        assert!(traj.snapshots().iter().all(|s| s.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn ou_kappa_is_linear_in_x() {
        // For V = x^2/2 the correction is a(t) x with a' = -a + 2 cos t, a(0) = 0.
        let spec = ou(0.1);
        let g = grid(257);
        let zero = Field::constant(g, 0.0, 0.0).unwrap();
        let scheme = SchemeConfig::new(1e-3, 0.5, Advection::Central, 1000).unwrap();
        let traj = solve_kappa(&spec, &g, &scheme, &zero, 0.0, 5.0).unwrap();
        let t = 5.0_f64;
        let a = t.cos() + t.sin() - (-t).exp();
        let k = traj.last();
        for (x, v) in g.nodes().iter().zip(k.values()) {
            if x.abs() < 3.0 {
                assert_abs_diff_eq!(*v, a * x, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn kappa_is_linear_in_initial_state_and_source() {
        let g = grid(65);
        let scheme = SchemeConfig::new(1e-2, 0.5, Advection::Central, 50).unwrap();
        let with_amp = |amp: f64| ProblemSpec {
            perturbation: PerturbationSpec::Cosine {
                amplitude: amp,
                omega: 1.0,
            },
            ..ou(0.1)
        };
        let u = Field::from_fn(g, 0.0, |x| (0.5 * x).sin()).unwrap();
        let zero = Field::constant(g, 0.0, 0.0).unwrap();
        let (a, s) = (1.7, -0.6);
        let au = u.map(|v| a * v).unwrap();
        let combined = solve_kappa(&with_amp(s), &g, &scheme, &au, 0.0, 2.0).unwrap();
        let free = solve_kappa(&with_amp(0.0), &g, &scheme, &u, 0.0, 2.0).unwrap();
        let forced = solve_kappa(&with_amp(1.0), &g, &scheme, &zero, 0.0, 2.0).unwrap();
        for ((c, f), d) in combined
            .snapshots()
            .iter()
            .zip(free.snapshots())
            .zip(forced.snapshots())
        {
            for i in 0..g.len() {
                let expect = a * f.values()[i] + s * d.values()[i];
                assert_abs_diff_eq!(c.values()[i], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn residual_of_equilibrium_is_roundoff() {
        let spec = ou(0.0);
        let g = grid(257);
        let phat = discrete_stationary(&spec, &g, Advection::Central).unwrap();
        let snaps: Vec<Field> = (0..5).map(|k| phat.clone().with_time(k as f64 * 0.1)).collect();
        let traj = Trajectory::new(snaps, PdeKind::Fpe, Advection::Central).unwrap();
        assert!(pde_residual(&traj, &spec).unwrap() < 1e-8);
    }

    #[test]
    fn residual_requires_uniform_spacing() {
        let g = grid(17);
        let f = Field::constant(g, 1.0, 0.0).unwrap();
        let snaps = vec![f.clone(), f.clone().with_time(1.0), f.with_time(3.0)];
        let traj = Trajectory::new(snaps, PdeKind::Fpe, Advection::Central).unwrap();
        assert!(matches!(
            pde_residual(&traj, &ou(0.0)),
            Err(Error::NonUniformSpacing)
        ));
    }
}
