//! Uniform one-dimensional grids, sampled fields, trapezoid quadrature,
//! discrete norms and finite-difference derivatives.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || !(x_min < x_max) {
            return Err(Error::InvalidGrid(format!(
                "bounds [{x_min}, {x_max}] do not form a nonempty interval"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    /// Node `i`; the last node is pinned to `x_max`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Same interval, `2(n-1)+1` nodes.
    pub fn refined(&self) -> Grid1D {
        Grid1D {
            n: 2 * (self.n - 1) + 1,
            ..*self
        }
    }

    /// Trapezoid weights; they are the cell widths of the vertex-centred finite volumes.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n];
        w[0] = 0.5 * dx;
        w[self.n - 1] = 0.5 * dx;
        w
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self == other
    }
}

/// Real values sampled on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Field { grid, values, time })
    }

    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.nodes().into_iter().map(f).collect(), time)
    }

    pub fn constant(grid: Grid1D, value: f64, time: f64) -> Result<Self> {
        Field::new(grid, vec![value; grid.len()], time)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Pointwise combination with another field on the same grid; the time tag is kept.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        check_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::new(self.grid, values, self.time)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect(), self.time)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid.same_as(&b.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Composite trapezoid rule.
pub fn integrate(f: &Field) -> f64 {
    trapezoid(f.grid.dx(), &f.values)
}

pub(crate) fn trapezoid(dx: f64, v: &[f64]) -> f64 {
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().sum();
    dx * (inner + 0.5 * (v[0] + v[n - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Trapezoid-weighted L1 and L2 distances and the max-abs distance.
pub fn norms(f: &Field, g: &Field) -> Result<Norms> {
    check_same_grid(f, g)?;
    let diff: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a - b).collect();
    let dx = f.grid.dx();
    let abs: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    Ok(Norms {
        l1: trapezoid(dx, &abs),
        l2: trapezoid(dx, &sq).sqrt(),
        linf: abs.iter().cloned().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    First,
    Second,
}

/// Second-order central differences inside, second-order one-sided stencils at the ends.
pub fn differentiate(f: &Field, order: Derivative) -> Field {
    let values = match order {
        Derivative::First => first_derivative(&f.values, f.grid.dx()),
        Derivative::Second => second_derivative(&f.values, f.grid.dx()),
    };
    Field {
        grid: f.grid,
        values,
        time: f.time,
    }
}

pub(crate) fn first_derivative(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let c = 0.5 / dx;
    for i in 1..n - 1 {
        out[i] = c * (v[i + 1] - v[i - 1]);
    }
    out[0] = c * (3.0 * (v[1] - v[0]) - (v[2] - v[1]));
    out[n - 1] = c * (3.0 * (v[n - 1] - v[n - 2]) - (v[n - 2] - v[n - 3]));
    out
}

pub(crate) fn second_derivative(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let c = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = c * ((v[i + 1] - v[i]) - (v[i] - v[i - 1]));
    }
    // Written in differences so that constants give exactly zero.
    if n >= 4 {
        out[0] = c * (2.0 * (v[0] - v[1]) - 3.0 * (v[1] - v[2]) + (v[2] - v[3]));
        out[n - 1] = c
            * (2.0 * (v[n - 1] - v[n - 2]) - 3.0 * (v[n - 2] - v[n - 3]) + (v[n - 3] - v[n - 4]));
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}
