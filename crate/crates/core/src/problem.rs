//! Model definition: potentials, time-dependent perturbations and the
//! problem specification that every solver reads from.
//!
//! The drift is always separable, `b(t, x) = -V'(x) + epsilon * h(t)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative boundary level of `exp(-2V/sigma^2)` above which the domain is too small.
pub const BOUNDARY_MASS_THRESHOLD: f64 = 1e-8;

/// Relative growth of the normalisation integral under domain doubling that flags divergence.
pub const DOUBLING_GROWTH_THRESHOLD: f64 = 1e-4;

/// Nodes used by [`ProblemSpec::validate`] to sample the domain.
pub const VALIDATION_NODES: usize = 4097;

/// Potential `V(x)` together with its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V = theta (x - mu)^2 / 2`.
    Quadratic { theta: f64, mu: f64 },
    /// `V = a x^4 / 4 - b x^2 / 2`, a double well when `b > 0`.
    Quartic { a: f64, b: f64 },
    /// Nonlinear oscillator force `-V'(y) = -a1 y + a2 (sin^2(y/2) - a3) sin y`.
    Langevin { a1: f64, a2: f64, a3: f64 },
    /// Samples of `V` on a uniform grid over `[x_min, x_max]`.
    Table {
        x_min: f64,
        x_max: f64,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialDerivs {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
}

impl PotentialSpec {
    pub fn derivatives(&self, x: f64) -> Result<PotentialDerivs> {
        match self {
            PotentialSpec::Table {
                x_min,
                x_max,
                values,
            } => {
                if values.len() < 3 {
                    return Err(Error::TableTooShort(values.len()));
                }
                let tol = 1e-12 * (x_max - x_min).abs().max(1.0);
                if x < x_min - tol || x > x_max + tol {
                    return Err(Error::OutOfRange {
                        x,
                        lo: *x_min,
                        hi: *x_max,
                    });
                }
                Ok(table_eval(*x_min, *x_max, values, x))
            }
            _ => Ok(self.analytic(x)),
        }
    }

    /// Like [`derivatives`](Self::derivatives) but clamps table lookups to the table range.
    pub fn derivatives_clamped(&self, x: f64) -> Result<PotentialDerivs> {
        match self {
            PotentialSpec::Table {
                x_min,
                x_max,
                values,
            } => {
                if values.len() < 3 {
                    return Err(Error::TableTooShort(values.len()));
                }
                Ok(table_eval(*x_min, *x_max, values, x.clamp(*x_min, *x_max)))
            }
            _ => Ok(self.analytic(x)),
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, PotentialSpec::Table { .. })
    }

    fn analytic(&self, x: f64) -> PotentialDerivs {
        match *self {
            PotentialSpec::Quadratic { theta, mu } => {
                let d = x - mu;
                PotentialDerivs {
                    v: 0.5 * theta * d * d,
                    dv: theta * d,
                    d2v: theta,
                }
            }
            PotentialSpec::Quartic { a, b } => {
                let x2 = x * x;
                PotentialDerivs {
                    v: 0.25 * a * x2 * x2 - 0.5 * b * x2,
                    dv: a * x2 * x - b * x,
                    d2v: 3.0 * a * x2 - b,
                }
            }
            PotentialSpec::Langevin { a1, a2, a3 } => {
                let s = (0.5 * x).sin();
                let g = s * s - a3;
                let (sin_x, cos_x) = x.sin_cos();
                PotentialDerivs {
                    // V(0) = 0 fixes the constant of integration.
                    v: 0.5 * a1 * x * x - a2 * (g * g - a3 * a3),
                    dv: a1 * x - a2 * g * sin_x,
                    d2v: a1 - a2 * (0.5 * sin_x * sin_x + g * cos_x),
                }
            }
            PotentialSpec::Table { .. } => unreachable!("table potentials are not analytic"),
        }
    }

    fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            PotentialSpec::Quadratic { theta, mu } => {
                if !(*theta > 0.0) || !theta.is_finite() {
                    out.push(format!("quadratic theta must be > 0, got {theta}"));
                }
                if !mu.is_finite() {
                    out.push("quadratic mu must be finite".into());
                }
            }
            PotentialSpec::Quartic { a, b } => {
                if !(*a > 0.0) || !a.is_finite() {
                    out.push(format!("quartic a must be > 0, got {a}"));
                }
                if !b.is_finite() {
                    out.push("quartic b must be finite".into());
                }
            }
            PotentialSpec::Langevin { a1, a2, a3 } => {
                if !(*a1 > 0.0) || !a1.is_finite() {
                    out.push(format!("langevin a1 must be > 0, got {a1}"));
                }
                if !a2.is_finite() || !a3.is_finite() {
                    out.push("langevin a2 and a3 must be finite".into());
                }
            }
            PotentialSpec::Table {
                x_min,
                x_max,
                values,
            } => {
                if values.len() < 3 {
                    out.push(format!(
                        "table needs at least 3 samples, got {}",
                        values.len()
                    ));
                }
                if !(x_min < x_max) {
                    out.push(format!("table range [{x_min}, {x_max}] is empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    out.push("table values must be finite".into());
                }
            }
        }
        out
    }
}

/// Linear interpolation of `V` and of node-wise central differences for `V'` and `V''`.
fn table_eval(x_min: f64, x_max: f64, values: &[f64], x: f64) -> PotentialDerivs {
    let n = values.len();
    let dx = (x_max - x_min) / (n - 1) as f64;
    let s = ((x - x_min) / dx).clamp(0.0, (n - 1) as f64);
    let j = (s.floor() as usize).min(n - 2);
    let w = s - j as f64;

    let d1 = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)
        } else if i == n - 1 {
            (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dx)
        } else {
            (values[i + 1] - values[i - 1]) / (2.0 * dx)
        }
    };
    let d2 = |i: usize| -> f64 {
        let h2 = dx * dx;
        if n >= 4 && i == 0 {
            (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2
        } else if n >= 4 && i == n - 1 {
            (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2
        } else {
            let c = i.clamp(1, n - 2);
            (values[c + 1] - 2.0 * values[c] + values[c - 1]) / h2
        }
    };
    let lerp = |a: f64, b: f64| a + w * (b - a);
    PotentialDerivs {
        v: lerp(values[j], values[j + 1]),
        dv: lerp(d1(j), d1(j + 1)),
        d2v: lerp(d2(j), d2(j + 1)),
    }
}

/// Bounded forcing `h(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSpec {
    Cosine { amplitude: f64, omega: f64 },
    Zero,
}

impl PerturbationSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            PerturbationSpec::Cosine { amplitude, omega } => amplitude * (omega * t).cos(),
            PerturbationSpec::Zero => 0.0,
        }
    }

    /// Upper bound on `|h(t)|`.
    pub fn bound(&self) -> f64 {
        match *self {
            PerturbationSpec::Cosine { amplitude, .. } => amplitude.abs(),
            PerturbationSpec::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub potential: PotentialSpec,
    pub perturbation: PerturbationSpec,
    pub epsilon: f64,
    pub sigma: f64,
    pub domain: (f64, f64),
    pub time_window: (f64, f64),
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }

    /// Perturbed Ornstein-Uhlenbeck problem: `V = x^2/2`, `h = cos t`, domain `[-6, 6]`.
    pub fn ornstein_uhlenbeck(epsilon: f64, sigma: f64) -> Self {
        ProblemSpec {
            potential: PotentialSpec::Quadratic { theta: 1.0, mu: 0.0 },
            perturbation: PerturbationSpec::Cosine {
                amplitude: 1.0,
                omega: 1.0,
            },
            epsilon,
            sigma,
            domain: (-6.0, 6.0),
            time_window: (0.0, 20.0),
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ProblemSpec {
            epsilon,
            ..self.clone()
        }
    }

    pub fn diffusion(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    pub fn potential_derivatives(&self, x: f64) -> Result<PotentialDerivs> {
        self.potential.derivatives(x)
    }

    /// `b(t, x) = -V'(x) + epsilon * h(t)`.
    pub fn drift(&self, t: f64, x: f64) -> Result<f64> {
        let d = self.potential.derivatives(x)?;
        Ok(-d.dv + self.epsilon * self.perturbation.eval(t))
    }

    /// Drift with table lookups clamped to the table range; used by path simulation.
    pub fn drift_clamped(&self, t: f64, x: f64) -> Result<f64> {
        let d = self.potential.derivatives_clamped(x)?;
        Ok(-d.dv + self.epsilon * self.perturbation.eval(t))
    }

    /// Checks the standing assumptions of the model on the truncated domain.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for reason in self.parameter_problems() {
            report.push(ViolationKind::InvalidParameter, Severity::Error, reason);
        }
        if !report.passed() {
            return report;
        }

        let (lo, hi) = self.domain;
        let inner = match sample_weight(self, lo, hi, VALIDATION_NODES) {
            Ok(s) => s,
            Err(e) => {
                report.push(ViolationKind::InvalidParameter, Severity::Error, e.to_string());
                return report;
            }
        };

        let first = inner.weights[0];
        let last = *inner.weights.last().unwrap();
        let max = inner.weights.iter().cloned().fold(0.0, f64::max);
        for (side, value) in [("left", first), ("right", last)] {
            if !(value <= BOUNDARY_MASS_THRESHOLD * max) {
                report.push(
                    ViolationKind::BoundaryMass,
                    Severity::Error,
                    format!(
                        "exp(-2V/sigma^2) at the {side} boundary is {:.3e} of its maximum \
                         (limit {BOUNDARY_MASS_THRESHOLD:e}); enlarge the domain",
                        value / max
                    ),
                );
            }
        }

        let centre = 0.5 * (lo + hi);
        let half = hi - lo;
        let outer_nodes = 2 * (VALIDATION_NODES - 1) + 1;
        match sample_weight(self, centre - half, centre + half, outer_nodes) {
            Ok(outer) => {
                // Both samplings are shifted by the minimum over the doubled domain.
                let shift = outer.v_min.min(inner.v_min);
                let scale = |s: &Sampled| (-2.0 * (s.v_min - shift) / self.sigma.powi(2)).exp();
                let i_in = inner.integral * scale(&inner);
                let i_out = outer.integral * scale(&outer);
                let growth = (i_out - i_in) / i_in;
                if !i_out.is_finite() || !i_in.is_finite() || !(growth <= DOUBLING_GROWTH_THRESHOLD)
                {
                    report.push(
                        ViolationKind::NonConfining,
                        Severity::Error,
                        format!(
                            "integral of exp(-2V/sigma^2) grows by a relative {growth:.3e} when the \
                             domain is doubled; the potential is not confining"
                        ),
                    );
                }
            }
            Err(e) => report.push(ViolationKind::NonConfining, Severity::Error, e.to_string()),
        }

        let max_dv = inner.max_abs_dv;
        let forcing = self.epsilon * self.perturbation.bound();
        if forcing > 0.5 * max_dv {
            report.push(
                ViolationKind::NotPerturbative,
                Severity::Warning,
                format!(
                    "epsilon * max|h| = {forcing:.4} exceeds max|V'|/2 = {:.4}; \
                     outside the perturbative regime",
                    0.5 * max_dv
                ),
            );
        }
        report
    }

    fn parameter_problems(&self) -> Vec<String> {
        let mut out = self.potential.check();
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            out.push(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            out.push(format!("sigma must be > 0, got {}", self.sigma));
        }
        let (lo, hi) = self.domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            out.push(format!("domain [{lo}, {hi}] is empty or not finite"));
        }
        let (t0, t1) = self.time_window;
        if !(t0 >= 0.0 && t0 < t1) || !t1.is_finite() {
            out.push(format!("time window [{t0}, {t1}] must satisfy 0 <= t_start < t_end"));
        }
        if let PerturbationSpec::Cosine { amplitude, omega } = self.perturbation {
            if !amplitude.is_finite() {
                out.push("perturbation amplitude must be finite".into());
            }
            if !(omega > 0.0) || !omega.is_finite() {
                out.push(format!("perturbation omega must be > 0, got {omega}"));
            }
        }
        out
    }
}

struct Sampled {
    /// `exp(-2 (V - v_min) / sigma^2)` at each node.
    weights: Vec<f64>,
    v_min: f64,
    integral: f64,
    max_abs_dv: f64,
}

fn sample_weight(spec: &ProblemSpec, lo: f64, hi: f64, n: usize) -> Result<Sampled> {
    let dx = (hi - lo) / (n - 1) as f64;
    let mut v = Vec::with_capacity(n);
    let mut max_abs_dv: f64 = 0.0;
    for i in 0..n {
        let d = spec.potential.derivatives_clamped(lo + i as f64 * dx)?;
        v.push(d.v);
        max_abs_dv = max_abs_dv.max(d.dv.abs());
    }
    let v_min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let s2 = spec.sigma * spec.sigma;
    let weights: Vec<f64> = v.iter().map(|vi| (-2.0 * (vi - v_min) / s2).exp()).collect();
    let integral = dx * (weights.iter().sum::<f64>() - 0.5 * (weights[0] + weights[n - 1]));
    Ok(Sampled {
        weights,
        v_min,
        integral,
        max_abs_dv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidParameter,
    /// Density does not decay at a truncation boundary.
    BoundaryMass,
    /// Normalisation integral diverges.
    NonConfining,
    /// Forcing comparable to the restoring force.
    NotPerturbative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, kind: ViolationKind, severity: Severity, message: String) {
        self.violations.push(Violation {
            kind,
            severity,
            message,
        });
    }

    /// No error-level violations (warnings allowed).
    pub fn passed(&self) -> bool {
        self.violations.iter().all(|v| v.severity != Severity::Error)
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Warning)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "pass");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let sev = match v.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            write!(f, "{sev} [{:?}]: {}", v.kind, v.message)?;
        }
        Ok(())
    }
}
