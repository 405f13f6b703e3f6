//! Flat-torus geometry: canonical point arithmetic, minimal geodesics via
//! lattice enumeration, the mirror map, and geodesic interpolation.
//!
//! The torus is R^2 / (L Z)^2 with the Euclidean metric, so geodesics are
//! straight segments to the nearest lattice translate and parallel transport
//! is the identity. The cut locus of a point is the set of points with more
//! than one minimizing translate; ties are broken lexicographically by
//! translate index so that every path is reproducible.

use crate::error::{Error, Result};

/// Distance below which two lattice translates count as tied minimizers.
pub const CUT_TIE_TOL: f64 = 1e-12;

/// Point of the square torus, stored as its canonical representative in
/// `[0, L) x [0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
    pub side: f64,
}

/// Tangent vector in the global Euclidean frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVec {
    pub v1: f64,
    pub v2: f64,
}

impl TangentVec {
    pub fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.v1.hypot(self.v2)
    }

    #[inline]
    pub fn dot(&self, other: &TangentVec) -> f64 {
        self.v1 * other.v1 + self.v2 * other.v2
    }

    pub fn scale(&self, k: f64) -> TangentVec {
        TangentVec::new(k * self.v1, k * self.v2)
    }
}

/// Minimal-geodesic data between two torus points.
///
/// `multiplicity > 1` exactly when the endpoint lies on the cut locus of the
/// base point; `direction` then refers to the tie-broken translate.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicData {
    pub distance: f64,
    pub direction: TangentVec,
    pub multiplicity: usize,
}

#[inline]
fn wrap_coord(x: f64, side: f64) -> f64 {
    let mut r = x.rem_euclid(side);
    // rem_euclid can return `side` itself for tiny negative inputs.
    if r >= side {
        r -= side;
    }
    r
}

/// Reduce raw plane coordinates to the canonical torus representative.
pub fn wrap(x1: f64, x2: f64, side: f64) -> Result<TorusPoint> {
    if !(x1.is_finite() && x2.is_finite() && side.is_finite()) || side <= 0.0 {
        return Err(Error::NonFiniteCoordinate);
    }
    Ok(TorusPoint { x1: wrap_coord(x1, side), x2: wrap_coord(x2, side), side })
}

impl TorusPoint {
    /// Canonicalizing constructor; panics on non-finite input (see [`wrap`]
    /// for the fallible variant).
    pub fn new(x1: f64, x2: f64, side: f64) -> Self {
        wrap(x1, x2, side).expect("non-finite coordinate")
    }

    /// Translate by a raw plane vector and re-wrap.
    #[inline]
    pub fn offset(&self, d1: f64, d2: f64) -> TorusPoint {
        TorusPoint {
            x1: wrap_coord(self.x1 + d1, self.side),
            x2: wrap_coord(self.x2 + d2, self.side),
            side: self.side,
        }
    }
}

/// Minimal geodesic from `x` to `y` over the nine lattice translates
/// `y + (i, j) L`, `i, j` in `{-1, 0, 1}`.
///
/// Nine translates suffice because both representatives live in `[0, L)^2`
/// (checked against a 25-translate enumeration in the tests). Ties within
/// [`CUT_TIE_TOL`] are counted in `multiplicity` and broken by the
/// lexicographically smallest `(i, j)`.
pub fn torus_geodesic(x: &TorusPoint, y: &TorusPoint) -> GeodesicData {
    debug_assert_eq!(x.side, y.side);
    let l = x.side;
    let mut best = f64::INFINITY;
    let mut best_d = (0.0, 0.0);
    for i in -1..=1 {
        for j in -1..=1 {
            let d1 = y.x1 + (i as f64) * l - x.x1;
            let d2 = y.x2 + (j as f64) * l - x.x2;
            let dist = d1.hypot(d2);
            if dist < best - CUT_TIE_TOL {
                best = dist;
                best_d = (d1, d2);
            }
        }
    }
    let mut multiplicity = 0;
    for i in -1..=1 {
        for j in -1..=1 {
            let d1 = y.x1 + (i as f64) * l - x.x1;
            let d2 = y.x2 + (j as f64) * l - x.x2;
            if d1.hypot(d2) <= best + CUT_TIE_TOL {
                multiplicity += 1;
            }
        }
    }
    let direction = if best > 0.0 {
        TangentVec::new(best_d.0 / best, best_d.1 / best)
    } else {
        // Degenerate x == y case: distance 0, direction is arbitrary.
        TangentVec::new(1.0, 0.0)
    };
    GeodesicData { distance: best, direction, multiplicity }
}

/// Mirror map from `T_x` to `T_y`: flat parallel transport (the identity)
/// followed by reflection across the perpendicular to the connecting
/// geodesic, `v - 2 <v, g> g` with `g` the unit direction from `x` to `y`.
pub fn mirror_map(x: &TorusPoint, y: &TorusPoint, v: TangentVec) -> Result<TangentVec> {
    let geo = torus_geodesic(x, y);
    if geo.distance == 0.0 {
        return Err(Error::MirrorMapOnDiagonal);
    }
    Ok(reflect(v, geo.direction))
}

/// Reflection of `v` across the perpendicular to unit vector `g`.
#[inline]
pub fn reflect(v: TangentVec, g: TangentVec) -> TangentVec {
    let k = 2.0 * v.dot(&g);
    TangentVec::new(v.v1 - k * g.v1, v.v2 - k * g.v2)
}

/// Point at arclength `s` along the minimal geodesic from `x` to `y`.
pub fn geodesic_point(x: &TorusPoint, y: &TorusPoint, s: f64) -> Result<TorusPoint> {
    let geo = torus_geodesic(x, y);
    if !(-CUT_TIE_TOL..=geo.distance + CUT_TIE_TOL).contains(&s) {
        return Err(Error::ArclengthOutOfRange { s, len: geo.distance });
    }
    Ok(x.offset(s * geo.direction.v1, s * geo.direction.v2))
}
