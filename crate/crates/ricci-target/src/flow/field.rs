//! Periodic grid samples of the conformal exponent and the spatial stencils
//! acting on them.

use crate::barriers::Curvature;
use crate::error::{Error, Result};

/// Periodic `n x n` sample of a scalar field on the square torus,
/// `values[i * n + j] = f(i h, j h)` with `h = side / n`.
///
/// The resolution must be a power of two and at least 8 so refinement
/// studies can halve `h` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    side: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(n: usize, side: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::BadGridResolution(n));
        }
        Ok(Self { n, side, values: vec![0.0; n * n] })
    }

    /// Sample `f(x1, x2)` at the grid nodes.
    pub fn from_fn(n: usize, side: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut field = Self::zeros(n, side)?;
        let h = field.spacing();
        for i in 0..n {
            for j in 0..n {
                field.values[i * n + j] = f(i as f64 * h, j as f64 * h);
            }
        }
        Ok(field)
    }

    pub fn from_values(n: usize, side: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::MalformedField(format!("expected {} values, got {}", n * n, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        let mut field = Self::zeros(n, side)?;
        field.values = values;
        Ok(field)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// sup minus inf over the grid.
    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Area functional `int e^{2p} dA` under the periodic trapezoidal rule
    /// (equal weights `h^2` on a periodic grid).
    pub fn area(&self) -> f64 {
        let h2 = self.spacing() * self.spacing();
        self.values.iter().map(|p| (2.0 * p).exp()).sum::<f64>() * h2
    }

    /// Node index of the grid maximum (ties: first in row-major order).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut bv = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.at(i, j) > bv {
                    bv = self.at(i, j);
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut bv = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.at(i, j) < bv {
                    bv = self.at(i, j);
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Five-point periodic Laplacian `(f_E + f_W + f_N + f_S - 4 f) / h^2`.
pub fn laplacian(f: &GridField) -> GridField {
    let n = f.n;
    let inv_h2 = 1.0 / (f.spacing() * f.spacing());
    let mut out = GridField::zeros(n, f.side).expect("valid by construction");
    let v = &f.values;
    for i in 0..n {
        let ip = if i + 1 == n { 0 } else { i + 1 };
        let im = if i == 0 { n - 1 } else { i - 1 };
        for j in 0..n {
            let jp = if j + 1 == n { 0 } else { j + 1 };
            let jm = if j == 0 { n - 1 } else { j - 1 };
            out.values[i * n + j] = (v[ip * n + j] + v[im * n + j] + v[i * n + jp] + v[i * n + jm]
                - 4.0 * v[i * n + j])
                * inv_h2;
        }
    }
    out
}

/// Right-hand side of the normalized flow on the flat torus,
/// `e^{-2p} lap(p)` pointwise. Non-flat reference curvature is rejected:
/// the field evolution is implemented for the flat reference only.
pub fn rhs(f: &GridField, r: Curvature) -> Result<GridField> {
    if r != Curvature::Flat {
        return Err(Error::NonFlatEvolution);
    }
    let mut out = laplacian(f);
    for (o, p) in out.values.iter_mut().zip(&f.values) {
        *o *= (-2.0 * p).exp();
    }
    Ok(out)
}

/// Shift the field so the metric `e^{2p} h` has the same area as the
/// reference: subtract `log(area / side^2) / 2`.
pub fn normalize_area(f: &GridField) -> GridField {
    let shift = 0.5 * (f.area() / (f.side * f.side)).ln();
    let mut out = f.clone();
    for v in out.values.iter_mut() {
        *v -= shift;
    }
    out
}
