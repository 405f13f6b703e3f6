//! Closed-form barrier curves for the fiber coordinate of the controlled
//! process, a-priori reachable-set bounds, and blow-up thresholds, for all
//! three constant-curvature signs.
//!
//! A barrier is the deterministic solution of the fiber drift ODE
//! `dq = U_r(q) dtau` with the martingale part switched off; comparison with
//! the controlled process turns these curves into bounds on where the
//! process can be steered.

use crate::error::{Error, Result};

/// Constant curvature sign of the reference metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Curvature {
    /// r = -1
    Hyperbolic,
    /// r = 0
    Flat,
    /// r = +1
    Spherical,
}

impl Curvature {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Curvature::Hyperbolic => -1.0,
            Curvature::Flat => 0.0,
            Curvature::Spherical => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "-1" => Ok(Curvature::Hyperbolic),
            "0" => Ok(Curvature::Flat),
            "1" | "+1" => Ok(Curvature::Spherical),
            other => Err(Error::DomainError(format!("curvature sign must be -1, 0 or +1, got {other}"))),
        }
    }
}

/// Barrier family parameters; `c < 1` is required away from the flat case.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    pub r: Curvature,
    pub c: f64,
}

impl BarrierParams {
    pub fn new(r: Curvature, c: f64) -> Result<Self> {
        if r != Curvature::Flat && c >= 1.0 {
            return Err(Error::BadBarrierParams(format!("c must be below 1 for r = +-1, got {c}")));
        }
        if !c.is_finite() {
            return Err(Error::BadBarrierParams("c must be finite".into()));
        }
        Ok(Self { r, c })
    }
}

/// Fiber drift `U_r(q)` of the controlled process with the noise removed.
pub fn fiber_drift(r: Curvature, q: f64) -> f64 {
    match r {
        Curvature::Spherical => (-2.0 * q).exp() - 1.0,
        Curvature::Flat => 0.0,
        Curvature::Hyperbolic => 1.0 - (-2.0 * q).exp(),
    }
}

/// Barrier curve value at time `tau`:
/// `B_c^{+1} = log(1 - c e^{-2 tau})/2`, `B_c^0 = c`,
/// `B_c^{-1} = log(1 - c e^{2 tau})/2`.
pub fn barrier_value(params: &BarrierParams, tau: f64) -> Result<f64> {
    let arg = match params.r {
        Curvature::Spherical => 1.0 - params.c * (-2.0 * tau).exp(),
        Curvature::Flat => return Ok(params.c),
        Curvature::Hyperbolic => 1.0 - params.c * (2.0 * tau).exp(),
    };
    if arg <= 0.0 {
        return Err(Error::BarrierEscaped);
    }
    Ok(0.5 * arg.ln())
}

/// Sentinel-aware bound value for sweeps that may cross a blow-up threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Bound {
    Finite(f64),
    BlownUp,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::BlownUp => None,
        }
    }
}

/// A-priori bounds on the reachable fiber values at time `t`, given the
/// extrema `alpha = max p0 >= 0` and `beta = min p0 <= 0` of the
/// equal-area-normalized target.
///
/// Returns `(upper, lower)`; the lower bound is `None` for the spherical
/// case once `t >= -log(1 - e^{2 beta})/2`.
pub fn reachable_bounds(r: Curvature, alpha: f64, beta: f64, t: f64) -> Result<(f64, Option<f64>)> {
    if alpha < 0.0 || beta > 0.0 {
        return Err(Error::AreaNormalizationViolated);
    }
    let upper = match r {
        Curvature::Hyperbolic => 0.5 * (1.0 - (-2.0 * t).exp() * (1.0 - (2.0 * alpha).exp())).ln(),
        Curvature::Flat => alpha,
        Curvature::Spherical => 0.5 * (1.0 - (2.0 * t).exp() * (1.0 - (2.0 * alpha).exp())).ln(),
    };
    let lower = match r {
        Curvature::Hyperbolic => Some(0.5 * (1.0 - (-2.0 * t).exp() * (1.0 - (2.0 * beta).exp())).ln()),
        Curvature::Flat => Some(beta),
        Curvature::Spherical => {
            let arg = 1.0 - (2.0 * t).exp() * (1.0 - (2.0 * beta).exp());
            if arg > 0.0 {
                Some(0.5 * arg.ln())
            } else {
                None
            }
        }
    };
    Ok((upper, lower))
}

/// Bounds for the unnormalized flow: `log(e^{2 alpha} + t)/2` style curves
/// with finite-time blow-up sentinels in the spherical case.
pub fn unnormalized_bounds(r: Curvature, alpha: f64, beta: f64, t: f64) -> Result<(Bound, Bound)> {
    match r {
        Curvature::Flat => Err(Error::DomainError("unnormalized bounds are stated for r = +-1 only".into())),
        Curvature::Hyperbolic => Ok((
            Bound::Finite(0.5 * ((2.0 * alpha).exp() + t).ln()),
            Bound::Finite(0.5 * ((2.0 * beta).exp() + t).ln()),
        )),
        Curvature::Spherical => {
            let upper = if t < (2.0 * alpha).exp() {
                Bound::Finite(0.5 * ((2.0 * alpha).exp() - t).ln())
            } else {
                Bound::BlownUp
            };
            let lower = if t < (2.0 * beta).exp() {
                Bound::Finite(0.5 * ((2.0 * beta).exp() - t).ln())
            } else {
                Bound::BlownUp
            };
            Ok((upper, lower))
        }
    }
}

/// Upper bound on the extinction time of the unnormalized flow when the
/// reference curvature is bounded below by `k0 > 0`:
/// `e^{2 sup|p0|} / (2 k0)`.
pub fn blowup_time_positive_curvature(p0_sup: f64, k0: f64) -> Result<f64> {
    if k0 <= 0.0 {
        return Err(Error::DomainError(format!("curvature infimum must be positive, got {k0}")));
    }
    Ok((2.0 * p0_sup).exp() / (2.0 * k0))
}
