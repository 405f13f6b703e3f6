//! Periodic bicubic interpolation of a grid field with analytic derivatives
//! of the patch.
//!
//! The kernel is the Catmull-Rom cubic, so the surface passes through the
//! samples, is C^1 across cell boundaries, and its gradient at a node equals
//! the centered difference of the samples. The control evaluated along
//! simulated paths needs that continuous gradient; piecewise-linear
//! interpolation would inject artificial jumps into the diffusion.

use super::field::GridField;
use crate::geometry::{TangentVec, TorusPoint};

/// Symmetric 2x2 Hessian in the global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl Hessian {
    pub fn frobenius(&self) -> f64 {
        (self.h11 * self.h11 + 2.0 * self.h12 * self.h12 + self.h22 * self.h22).sqrt()
    }

    /// Quadratic form `<H xi, xi>`.
    pub fn quad(&self, xi: &TangentVec) -> f64 {
        self.h11 * xi.v1 * xi.v1 + 2.0 * self.h12 * xi.v1 * xi.v2 + self.h22 * xi.v2 * xi.v2
    }
}

#[inline]
fn weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        0.5 * (-u + 2.0 * u2 - u3),
        0.5 * (2.0 - 5.0 * u2 + 3.0 * u3),
        0.5 * (u + 4.0 * u2 - 3.0 * u3),
        0.5 * (-u2 + u3),
    ]
}

#[inline]
fn weights_d(u: f64) -> [f64; 4] {
    let u2 = u * u;
    [
        0.5 * (-1.0 + 4.0 * u - 3.0 * u2),
        0.5 * (-10.0 * u + 9.0 * u2),
        0.5 * (1.0 + 8.0 * u - 9.0 * u2),
        0.5 * (-2.0 * u + 3.0 * u2),
    ]
}

#[inline]
fn weights_dd(u: f64) -> [f64; 4] {
    [
        0.5 * (4.0 - 6.0 * u),
        0.5 * (-10.0 + 18.0 * u),
        0.5 * (8.0 - 18.0 * u),
        0.5 * (-2.0 + 6.0 * u),
    ]
}

struct Patch {
    /// Row-major 4x4 stencil values, rows along x1.
    f: [[f64; 4]; 4],
    u: f64,
    v: f64,
    inv_h: f64,
}

fn patch(field: &GridField, x: &TorusPoint) -> Patch {
    let n = field.n() as isize;
    let h = field.spacing();
    let s1 = x.x1 / h;
    let s2 = x.x2 / h;
    let i0 = s1.floor() as isize;
    let j0 = s2.floor() as isize;
    let u = s1 - i0 as f64;
    let v = s2 - j0 as f64;
    let mut f = [[0.0; 4]; 4];
    for (a, row) in f.iter_mut().enumerate() {
        let i = (i0 + a as isize - 1).rem_euclid(n) as usize;
        for (b, slot) in row.iter_mut().enumerate() {
            let j = (j0 + b as isize - 1).rem_euclid(n) as usize;
            *slot = field.at(i, j);
        }
    }
    Patch { f, u, v, inv_h: 1.0 / h }
}

#[inline]
fn tensor(f: &[[f64; 4]; 4], wx: &[f64; 4], wy: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for a in 0..4 {
        let row = &f[a];
        acc += wx[a] * (row[0] * wy[0] + row[1] * wy[1] + row[2] * wy[2] + row[3] * wy[3]);
    }
    acc
}

/// Interpolated value at `x`.
pub fn value(field: &GridField, x: &TorusPoint) -> f64 {
    let p = patch(field, x);
    tensor(&p.f, &weights(p.u), &weights(p.v))
}

/// Interpolated value and gradient at `x`.
pub fn value_grad(field: &GridField, x: &TorusPoint) -> (f64, TangentVec) {
    let p = patch(field, x);
    let wx = weights(p.u);
    let wy = weights(p.v);
    let dx = weights_d(p.u);
    let dy = weights_d(p.v);
    let val = tensor(&p.f, &wx, &wy);
    let g1 = tensor(&p.f, &dx, &wy) * p.inv_h;
    let g2 = tensor(&p.f, &wx, &dy) * p.inv_h;
    (val, TangentVec::new(g1, g2))
}

pub fn grad(field: &GridField, x: &TorusPoint) -> TangentVec {
    value_grad(field, x).1
}

/// Analytic second derivatives of the interpolation patch at `x`.
pub fn hess(field: &GridField, x: &TorusPoint) -> Hessian {
    let p = patch(field, x);
    let wx = weights(p.u);
    let wy = weights(p.v);
    let dx = weights_d(p.u);
    let dy = weights_d(p.v);
    let ddx = weights_dd(p.u);
    let ddy = weights_dd(p.v);
    let s = p.inv_h * p.inv_h;
    Hessian {
        h11: tensor(&p.f, &ddx, &wy) * s,
        h12: tensor(&p.f, &dx, &dy) * s,
        h22: tensor(&p.f, &wx, &ddy) * s,
    }
}
