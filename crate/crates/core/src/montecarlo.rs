//! Euler-Maruyama paths of `dX = b(t, X) dt + sigma dW` and histogram
//! densities for comparing them against the PDE solution.
//!
//! Path `i` draws all of its randomness from `ChaCha8Rng::seed_from_u64(seed)`
//! on stream `i`, so results do not depend on how paths are spread over threads.
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{solve_fpe, step_count, SchemeConfig};
use crate::grid::{norms, Field, Grid1D};
use crate::problem::ProblemSpec;
use crate::stationary::stationary_density;

/// Nodes of the table used for inverse-CDF sampling of the stationary density.
pub const SAMPLING_NODES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Point(f64),
    StationarySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub initial: InitialCondition,
    /// Noise amplitude used instead of `spec.sigma` when set; zero gives the deterministic ODE.
    #[serde(default)]
    pub noise_override: Option<f64>,
}

impl MCConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64, initial: InitialCondition) -> Result<Self> {
        let mc = MCConfig {
            n_paths,
            dt,
            seed,
            initial,
            noise_override: None,
        };
        mc.check()?;
        Ok(mc)
    }

    pub fn check(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::param("n_paths", "need at least one path"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if let Some(s) = self.noise_override {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::param("noise_override", format!("must be nonnegative, got {s}")));
            }
        }
        if let InitialCondition::Point(x0) = self.initial {
            if !x0.is_finite() {
                return Err(Error::param("initial", "point must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub time: f64,
    pub positions: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance; zero for a single sample.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.positions.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
    }
}

/// Cumulative trapezoid table of the stationary density for inverse-CDF draws.
struct StationarySampler {
    grid: Grid1D,
    cdf: Vec<f64>,
}

impl StationarySampler {
    fn new(spec: &ProblemSpec) -> Result<Self> {
        let grid = Grid1D::new(spec.domain.0, spec.domain.1, SAMPLING_NODES)?;
        let p = stationary_density(spec, &grid, true)?.density;
        let p = p.values();
        let half = 0.5 * grid.dx();
        let mut cdf = vec![0.0; p.len()];
        for i in 1..p.len() {
            cdf[i] = cdf[i - 1] + half * (p[i - 1] + p[i]);
        }
        Ok(StationarySampler { grid, cdf })
    }

    fn draw(&self, u: f64) -> f64 {
        let target = u * self.cdf[self.cdf.len() - 1];
        let k = self.cdf.partition_point(|&c| c <= target).clamp(1, self.cdf.len() - 1) - 1;
        let width = self.cdf[k + 1] - self.cdf[k];
        let frac = if width > 0.0 { (target - self.cdf[k]) / width } else { 0.5 };
        self.grid.x(k) + frac.clamp(0.0, 1.0) * self.grid.dx()
    }
}

/// Runs `n_paths` Euler-Maruyama paths from `t0` to `t1`; the last step is
/// shortened so that every path ends exactly at `t1`.
pub fn simulate(spec: &ProblemSpec, mc: &MCConfig, t0: f64, t1: f64) -> Result<SampleSet> {
    mc.check()?;
    spec.validate().into_result()?;
    if !(t0 < t1) {
        return Err(Error::param("t1", format!("must exceed t0 = {t0}, got {t1}")));
    }
    // Surfaces table errors once instead of per step.
    spec.potential.derivatives_clamped(spec.domain.0)?;

    let sigma = mc.noise_override.unwrap_or(spec.sigma);
    let steps = step_count(t0, t1, mc.dt);
    let mut step_dt = vec![mc.dt; steps];
    step_dt[steps - 1] = t1 - (t0 + (steps - 1) as f64 * mc.dt);
    let forcing: Vec<f64> = (0..steps)
        .map(|k| spec.epsilon * spec.perturbation.eval(t0 + k as f64 * mc.dt))
        .collect();
    let noise: Vec<f64> = step_dt.iter().map(|h| sigma * h.sqrt()).collect();

    let sampler = match mc.initial {
        InitialCondition::StationarySample => Some(StationarySampler::new(spec)?),
        InitialCondition::Point(_) => None,
    };

    let positions = (0..mc.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(path as u64);
            let mut x = match (&sampler, mc.initial) {
                (Some(s), _) => s.draw(rng.random::<f64>()),
                (None, InitialCondition::Point(x0)) => x0,
                (None, InitialCondition::StationarySample) => unreachable!(),
            };
            for k in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                let dv = spec.potential.derivatives_clamped(x)?.dv;
                x += (forcing[k] - dv) * step_dt[k] + noise[k] * z;
                if !x.is_finite() {
                    return Err(Error::PathDiverged { path, step: k + 1 });
                }
            }
            Ok(x)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(SampleSet { time: t1, positions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDensity {
    pub density: Field,
    /// Samples outside the grid interval; they carry no mass in `density`.
    pub out_of_range: usize,
    pub out_of_range_fraction: f64,
}

/// Histogram density with one bin per node: interior nodes own `[x_i - dx/2, x_i + dx/2]`,
/// the end nodes own the half cells inside the interval. Bins are the
/// trapezoid cells, so `integrate(density) = 1 - out_of_range_fraction`.
pub fn empirical_density(samples: &SampleSet, grid: &Grid1D) -> Result<EmpiricalDensity> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = grid.len();
    let (a, b, dx) = (grid.x_min(), grid.x_max(), grid.dx());
    let mut counts = vec![0u64; n];
    let mut outside = 0usize;
    for &x in &samples.positions {
        if !(x >= a && x <= b) {
            outside += 1;
            continue;
        }
        let j = (((x - a) / dx) + 0.5).floor() as usize;
        counts[j.min(n - 1)] += 1;
    }
    let total = samples.len() as f64;
    let widths = grid.weights();
    let values = counts
        .iter()
        .zip(&widths)
        .map(|(&c, w)| c as f64 / (total * w))
        .collect();
    Ok(EmpiricalDensity {
        density: Field::new(*grid, values, samples.time)?,
        out_of_range: outside,
        out_of_range_fraction: outside as f64 / total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McComparison {
    pub l1: f64,
    pub out_of_range_fraction: f64,
    pub samples: SampleSet,
}

/// Simulates from stationary samples and solves the PDE from `p_hat` over
/// `[t0, t1]`, then measures the L1 distance of the histogram to the PDE density.
pub fn mc_vs_pde(
    spec: &ProblemSpec,
    mc: &MCConfig,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    t1: f64,
) -> Result<McComparison> {
    let t0 = spec.time_window.0;
    let mc = MCConfig {
        initial: InitialCondition::StationarySample,
        ..*mc
    };
    let samples = simulate(spec, &mc, t0, t1)?;
    let phat = stationary_density(spec, grid, true)?.density;
    let traj = solve_fpe(spec, grid, &scheme.with_stride(usize::MAX), &phat, t0, t1)?;
    let emp = empirical_density(&samples, grid)?;
    Ok(McComparison {
        l1: norms(&emp.density, traj.last())?.l1,
        out_of_range_fraction: emp.out_of_range_fraction,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub n_paths: usize,
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub out_of_range_fraction: f64,
}

/// Sample moments, with the out-of-range fraction measured against `grid`.
pub fn summarize(samples: &SampleSet, grid: &Grid1D) -> Result<McSummary> {
    let emp = empirical_density(samples, grid)?;
    Ok(McSummary {
        n_paths: samples.len(),
        t: samples.time,
        mean: samples.mean(),
        variance: samples.variance(),
        out_of_range_fraction: emp.out_of_range_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn ou(eps: f64) -> ProblemSpec {
        ProblemSpec::ornstein_uhlenbeck(eps, 1.0)
    }

    #[test]
    fn zero_noise_follows_the_ode() {
        let mut mc = MCConfig::new(8, 1e-4, 7, InitialCondition::Point(1.0)).unwrap();
        mc.noise_override = Some(0.0);
        let s = simulate(&ou(0.0), &mc, 0.0, 1.0).unwrap();
        assert_eq!(s.time, 1.0);
        for &x in &s.positions {
            assert_abs_diff_eq!(x, (-1.0f64).exp(), epsilon = 1e-4);
        }
    }

    #[test]
    fn last_step_lands_on_t1() {
        let mut mc = MCConfig::new(1, 0.3, 1, InitialCondition::Point(1.0)).unwrap();
        mc.noise_override = Some(0.0);
        // Steps of 0.3, 0.3, 0.3 and 0.1 on [0, 1].
        let s = simulate(&ou(0.0), &mc, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.positions[0], 0.7f64.powi(3) * 0.9, epsilon = 1e-15);
    }

    #[test]
    fn runs_are_reproducible_and_seed_dependent() {
        let mc = MCConfig::new(64, 1e-2, 42, InitialCondition::StationarySample).unwrap();
        let a = simulate(&ou(0.1), &mc, 0.0, 1.0).unwrap();
        let b = simulate(&ou(0.1), &mc, 0.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = simulate(&ou(0.1), &MCConfig { seed: 43, ..mc }, 0.0, 1.0).unwrap();
        assert_ne!(a, c);
        // Path i does not depend on how many paths run.
        let d = simulate(&ou(0.1), &MCConfig { n_paths: 16, ..mc }, 0.0, 1.0).unwrap();
        assert_eq!(&a.positions[..16], &d.positions[..]);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mc = MCConfig::new(200, 1e-2, 9, InitialCondition::Point(0.5)).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate(&ou(0.1), &mc, 0.0, 2.0).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn config_checks() {
        assert!(MCConfig::new(0, 1e-3, 1, InitialCondition::Point(0.0)).is_err());
        assert!(MCConfig::new(10, 0.0, 1, InitialCondition::Point(0.0)).is_err());
        assert!(MCConfig::new(10, 1e-3, 1, InitialCondition::Point(f64::NAN)).is_err());
        let mc = MCConfig::new(10, 1e-3, 1, InitialCondition::Point(0.0)).unwrap();
        assert!(simulate(&ou(0.1), &mc, 1.0, 1.0).is_err());
    }

    #[test]
    fn diverging_paths_are_reported() {
        // Explicit steps far too large for a stiff quartic.
        let spec = ProblemSpec {
            potential: crate::problem::PotentialSpec::Quartic { a: 1.0, b: 0.0 },
            ..ou(0.0)
        };
        let mc = MCConfig::new(4, 1.0, 1, InitialCondition::Point(5.0)).unwrap();
        assert!(matches!(
            simulate(&spec, &mc, 0.0, 50.0),
            Err(Error::PathDiverged { .. })
        ));
    }

    #[test]
    fn point_mass_goes_into_one_bin() {
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let s = SampleSet {
            time: 0.0,
            positions: vec![0.33; 50],
        };
        let e = empirical_density(&s, &g).unwrap();
        assert_eq!(e.density.values().iter().filter(|&&v| v > 0.0).count(), 1);
        assert_abs_diff_eq!(integrate(&e.density), 1.0, epsilon = 1e-12);
        assert!(empirical_density(&SampleSet { time: 0.0, positions: vec![] }, &g).is_err());
    }

    #[test]
    fn uniform_samples_give_flat_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SampleSet {
            time: 0.0,
            positions: (0..1_000_000).map(|_| rng.random::<f64>()).collect(),
        };
        let g = Grid1D::new(0.0, 1.0, 51).unwrap();
        let e = empirical_density(&s, &g).unwrap();
        assert!(e.density.values().iter().all(|v| (v - 1.0).abs() <= 0.02));
    }

    #[test]
    fn stationary_draws_match_the_density() {
        let mc = MCConfig::new(20_000, 1e-3, 3, InitialCondition::StationarySample).unwrap();
        let sampler = StationarySampler::new(&ou(0.0)).unwrap();
        let mut xs = Vec::new();
        for path in 0..mc.n_paths {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(path as u64);
            xs.push(sampler.draw(rng.random::<f64>()));
        }
        let s = SampleSet { time: 0.0, positions: xs };
        assert!(s.mean().abs() < 4.0 * (0.5f64 / 20_000.0).sqrt());
        assert!((s.variance() - 0.5).abs() < 0.03);
    }

    #[test]
    fn summary_fields() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let s = SampleSet {
            time: 2.0,
            positions: vec![-0.5, 0.5, 3.0, 1.0],
        };
        let sum = summarize(&s, &g).unwrap();
        assert_eq!(sum.n_paths, 4);
        assert_eq!(sum.out_of_range_fraction, 0.25);
        assert_abs_diff_eq!(sum.mean, 1.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn histogram_mass_accounts_for_escapes(xs in proptest::collection::vec(-3.0f64..3.0, 1..300)) {
            let g = Grid1D::new(-2.0, 2.0, 33).unwrap();
            let s = SampleSet { time: 0.0, positions: xs };
            let e = empirical_density(&s, &g).unwrap();
            prop_assert!((integrate(&e.density) - (1.0 - e.out_of_range_fraction)).abs() <= 1e-12);
        }
    }
}
