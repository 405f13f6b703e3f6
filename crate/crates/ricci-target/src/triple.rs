//! Three-particle coupling: two mirror-coupled endpoints plus a middle
//! particle parameterized by its distances `(rho1, rho2)` along the
//! connecting geodesic.
//!
//! The Jacobi weight `w` solves `w'' + r w = 0` with `w(0) = w(l) = 1` on a
//! geodesic of length `l`; the drifts `beta`, `beta-tilde` keep
//! `rho1 + rho2` glued to the endpoint distance, the shared noise channel
//! `W^3` enters `rho1` and `rho2` with exactly opposite signs, and the
//! compensating drift `theta` makes the middle particle a time-changed
//! Brownian motion with a drift along the geodesic.

use crate::analysis::{ks_two_sample, mc_reduce};
use crate::barriers::Curvature;
use crate::error::{Error, Result};
use crate::flow::FlowSolution;
use crate::geometry::{geodesic_point, reflect, torus_geodesic, TangentVec, TorusPoint};
use crate::rng::RngStream;
use crate::special::integrate;
use rayon::prelude::*;

/// Geodesic length and curvature sign fixing one Jacobi boundary problem.
#[derive(Debug, Clone, Copy)]
pub struct JacobiSpec {
    pub r: Curvature,
    pub l: f64,
}

impl JacobiSpec {
    pub fn new(r: Curvature, l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::BadJacobiSpec(format!("geodesic length must be positive, got {l}")));
        }
        if r == Curvature::Spherical && l >= std::f64::consts::PI {
            return Err(Error::BadJacobiSpec(format!("spherical case needs l < pi, got {l}")));
        }
        Ok(Self { r, l })
    }

    fn check_range(&self, s: f64) -> Result<()> {
        if !(-1e-12..=self.l + 1e-12).contains(&s) {
            return Err(Error::ArclengthOutOfRange { s, len: self.l });
        }
        Ok(())
    }
}

/// Jacobi weight `w(s)`: `1` (flat), `cosh((l-2s)/2)/cosh(l/2)` (hyperbolic),
/// `cos((l-2s)/2)/cos(l/2)` (spherical).
pub fn jacobi_w(spec: &JacobiSpec, s: f64) -> Result<f64> {
    spec.check_range(s)?;
    let u = 0.5 * (spec.l - 2.0 * s);
    Ok(match spec.r {
        Curvature::Flat => 1.0,
        Curvature::Hyperbolic => u.cosh() / (0.5 * spec.l).cosh(),
        Curvature::Spherical => u.cos() / (0.5 * spec.l).cos(),
    })
}

/// Analytic derivative of [`jacobi_w`].
pub fn jacobi_w_prime(spec: &JacobiSpec, s: f64) -> Result<f64> {
    spec.check_range(s)?;
    let u = 0.5 * (spec.l - 2.0 * s);
    Ok(match spec.r {
        Curvature::Flat => 0.0,
        Curvature::Hyperbolic => -u.sinh() / (0.5 * spec.l).cosh(),
        Curvature::Spherical => u.sin() / (0.5 * spec.l).cos(),
    })
}

/// Closed form of `int_0^s w(u)^2 du`.
pub fn jacobi_w_sq_integral(spec: &JacobiSpec, s: f64) -> Result<f64> {
    spec.check_range(s)?;
    let l = spec.l;
    Ok(match spec.r {
        Curvature::Flat => s,
        Curvature::Hyperbolic => {
            let c = (0.5 * l).cosh();
            (0.5 * s + 0.25 * (l.sinh() - (l - 2.0 * s).sinh())) / (c * c)
        }
        Curvature::Spherical => {
            let c = (0.5 * l).cos();
            (0.5 * s + 0.25 * (l.sin() - (l - 2.0 * s).sin())) / (c * c)
        }
    })
}

/// Drift keeping `rho1` glued to the left endpoint distance:
/// `a^2 (w(rho1) w'(rho1) - w'(0)) / 2`.
pub fn beta_drift(spec: &JacobiSpec, a: f64, rho1: f64) -> f64 {
    let w = jacobi_w(spec, rho1).expect("rho1 in range");
    let wp = jacobi_w_prime(spec, rho1).expect("rho1 in range");
    let wp0 = jacobi_w_prime(spec, 0.0).expect("0 in range");
    0.5 * a * a * (w * wp - wp0)
}

/// Same formula with the second distance substituted.
pub fn beta_tilde_drift(spec: &JacobiSpec, a: f64, rho2: f64) -> f64 {
    beta_drift(spec, a, rho2)
}

/// Middle-particle drift along the geodesic:
/// `theta = beta + a^2 (rho1/l w'(0) + r (int_0^rho1 w^2 - rho1/l int_0^l w^2))`.
pub fn theta_drift(spec: &JacobiSpec, a: f64, rho1: f64) -> f64 {
    let beta = beta_drift(spec, a, rho1);
    let wp0 = jacobi_w_prime(spec, 0.0).expect("0 in range");
    let int_rho1 = jacobi_w_sq_integral(spec, rho1).expect("rho1 in range");
    let int_l = jacobi_w_sq_integral(spec, spec.l).expect("l in range");
    let frac = rho1 / spec.l;
    beta + a * a * (frac * wp0 + spec.r.sign() * (int_rho1 - frac * int_l))
}

/// Why a triple-coupling path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StopReason {
    HitZero,
    HitR0,
    Horizon,
}

/// Joint state `(x, y, rho1, rho2)` of the torus-mode triple coupling.
#[derive(Debug, Clone, Copy)]
pub struct TripleState {
    pub tau: f64,
    pub x: TorusPoint,
    pub y: TorusPoint,
    pub rho1: f64,
    pub rho2: f64,
    pub stopped: Option<StopReason>,
}

impl TripleState {
    /// Start with the middle particle at the geodesic midpoint:
    /// `rho1 = rho2 = d(x, y) / 2`.
    pub fn new(x: TorusPoint, y: TorusPoint) -> Self {
        let rho = torus_geodesic(&x, &y).distance;
        TripleState { tau: 0.0, x, y, rho1: 0.5 * rho, rho2: 0.5 * rho, stopped: None }
    }

    pub fn rho(&self) -> f64 {
        torus_geodesic(&self.x, &self.y).distance
    }
}

/// Middle particle `z = gamma_{x,y}(rho1)` with `rho1` clamped to `[0, rho]`.
pub fn middle_particle(state: &TripleState) -> TorusPoint {
    let geo = torus_geodesic(&state.x, &state.y);
    let s = state.rho1.clamp(0.0, geo.distance);
    geodesic_point(&state.x, &state.y, s).expect("clamped arclength in range")
}

/// One Euler step of the torus-mode triple coupling (flat curvature), with
/// the common midpoint time change `a = sqrt(2) e^{-p(t - tau, midpoint)}`.
///
/// All coefficients use the pre-step geodesic data, which keeps the `W^3`
/// antisymmetry exact in discrete time. A cross below zero or above `r0` is
/// recorded at the crossing step; there is no reflection.
pub fn triple_step(
    state: &TripleState,
    sol: Option<&FlowSolution>,
    horizon: f64,
    dt: f64,
    rng: &mut RngStream,
    r0: f64,
) -> TripleState {
    debug_assert!(state.stopped.is_none(), "stepping a stopped state");
    let mut next = *state;
    next.tau = state.tau + dt;
    let geo = torus_geodesic(&state.x, &state.y);
    let rho = geo.distance;
    debug_assert!(rho < r0 + 1e-9 && r0 < 0.5 * state.x.side);

    let midpoint = geodesic_point(&state.x, &state.y, 0.5 * rho).expect("midpoint in range");
    let a = match sol {
        None => std::f64::consts::SQRT_2,
        Some(sol) => {
            let s = (horizon - state.tau).clamp(0.0, sol.final_time());
            std::f64::consts::SQRT_2 * (-sol.value_at(s, &midpoint).expect("time in range")).exp()
        }
    };
    // Flat torus: w = 1, alpha = a, beta = beta-tilde = 0.
    let spec = JacobiSpec::new(Curvature::Flat, rho.max(1e-300)).expect("positive length");
    let alpha = a * jacobi_w(&spec, state.rho1.clamp(0.0, rho)).expect("in range");
    let beta = beta_drift(&spec, a, state.rho1.clamp(0.0, rho));
    let beta_t = beta_tilde_drift(&spec, a, state.rho2.clamp(0.0, rho));

    let (dw1, dw2) = rng.gaussian_increment_2d(dt);
    let dw3 = rng.gaussian_increment(dt);
    let parallel = dw1 * geo.direction.v1 + dw2 * geo.direction.v2;
    let mirrored = reflect(TangentVec::new(dw1, dw2), geo.direction);

    next.x = state.x.offset(a * dw1, a * dw2);
    next.y = state.y.offset(a * mirrored.v1, a * mirrored.v2);
    next.rho1 = state.rho1 - a * parallel + alpha * dw3 + beta * dt;
    next.rho2 = state.rho2 - a * parallel - alpha * dw3 + beta_t * dt;

    if next.rho1 <= 0.0 || next.rho2 <= 0.0 {
        next.stopped = Some(StopReason::HitZero);
    } else if next.rho1 >= r0 || next.rho2 >= r0 {
        next.stopped = Some(StopReason::HitR0);
    }
    next
}

/// Scalar-mode state: the distance triple `(rho, rho1, rho2)` without a
/// surface underneath, for the hyperbolic drift layer.
#[derive(Debug, Clone, Copy)]
pub struct ScalarTripleState {
    pub tau: f64,
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub stopped: Option<StopReason>,
}

impl ScalarTripleState {
    pub fn new(rho0: f64) -> Self {
        ScalarTripleState { tau: 0.0, rho: rho0, rho1: 0.5 * rho0, rho2: 0.5 * rho0, stopped: None }
    }
}

/// One Euler step of the scalar triple with equal time changes `a = b`.
///
/// The endpoint-distance drift is the index form (`0` flat,
/// `a^2 tanh(rho/2)` hyperbolic); `negate_beta_tilde` deliberately breaks
/// the swap symmetry for mutation testing.
pub fn scalar_triple_step(
    state: &ScalarTripleState,
    r: Curvature,
    a: f64,
    dt: f64,
    rng: &mut RngStream,
    r0: f64,
    negate_beta_tilde: bool,
) -> Result<ScalarTripleState> {
    debug_assert!(state.stopped.is_none());
    if r == Curvature::Spherical {
        return Err(Error::DomainError("scalar triple mode supports r in {0, -1} only".into()));
    }
    let mut next = *state;
    next.tau = state.tau + dt;
    let rho = state.rho;
    let spec = JacobiSpec::new(r, rho)?;
    let alpha = a * jacobi_w(&spec, state.rho1.clamp(0.0, rho))?;
    let beta = beta_drift(&spec, a, state.rho1.clamp(0.0, rho));
    let mut beta_t = beta_tilde_drift(&spec, a, state.rho2.clamp(0.0, rho));
    if negate_beta_tilde {
        beta_t = -beta_t;
    }
    let rho_drift = match r {
        Curvature::Flat => 0.0,
        Curvature::Hyperbolic => a * a * (0.5 * rho).tanh(),
        Curvature::Spherical => unreachable!(),
    };
    let u = rng.gaussian_increment(dt);
    let dw3 = rng.gaussian_increment(dt);
    next.rho = rho - 2.0 * a * u + rho_drift * dt;
    next.rho1 = state.rho1 - a * u + alpha * dw3 + beta * dt;
    next.rho2 = state.rho2 - a * u - alpha * dw3 + beta_t * dt;
    if next.rho1 <= 0.0 || next.rho2 <= 0.0 || next.rho <= 0.0 {
        next.stopped = Some(StopReason::HitZero);
    } else if next.rho1 >= r0 || next.rho2 >= r0 {
        next.stopped = Some(StopReason::HitR0);
    }
    Ok(next)
}

/// Which simulator backs a distribution-level test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleMode {
    Torus,
    /// Scalar distance triple with the given curvature sign.
    Scalar(Curvature),
}

/// Per-path terminal sample of either `rho1` or `rho2` at `t_obs` (paths
/// stopped earlier are discarded).
fn terminal_rho_samples(
    mode: TripleMode,
    sol: Option<&FlowSolution>,
    horizon: f64,
    rho0: f64,
    m: usize,
    dt: f64,
    seed: u64,
    stream_offset: u64,
    t_obs: f64,
    r0: f64,
    take_rho2: bool,
    negate_beta_tilde: bool,
) -> Result<Vec<f64>> {
    let steps = (t_obs / dt).round() as usize;
    let samples: Vec<Result<Option<f64>>> = (0..m)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngStream::new(seed, stream_offset + path as u64);
            match mode {
                TripleMode::Torus => {
                    let x = TorusPoint::new(0.5 - 0.5 * rho0, 0.5, 1.0);
                    let y = TorusPoint::new(0.5 + 0.5 * rho0, 0.5, 1.0);
                    let mut state = TripleState::new(x, y);
                    for _ in 0..steps {
                        state = triple_step(&state, sol, horizon, dt, &mut rng, r0);
                        if state.stopped.is_some() {
                            return Ok(None);
                        }
                    }
                    Ok(Some(if take_rho2 { state.rho2 } else { state.rho1 }))
                }
                TripleMode::Scalar(r) => {
                    let a = std::f64::consts::SQRT_2;
                    let mut state = ScalarTripleState::new(rho0);
                    for _ in 0..steps {
                        state = scalar_triple_step(&state, r, a, dt, &mut rng, r0, negate_beta_tilde)?;
                        if state.stopped.is_some() {
                            return Ok(None);
                        }
                    }
                    Ok(Some(if take_rho2 { state.rho2 } else { state.rho1 }))
                }
            }
        })
        .collect();
    let mut out = Vec::new();
    for s in samples {
        if let Some(v) = s? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Two-sample KS test between the `rho1` marginal of one batch and the
/// `rho2` marginal of an independent batch at observation time `t_obs`.
/// Independent batches avoid within-path dependence; fewer than 100
/// surviving paths in either batch is an error.
pub fn symmetry_test(
    mode: TripleMode,
    sol: Option<&FlowSolution>,
    horizon: f64,
    rho0: f64,
    m: usize,
    dt: f64,
    seed: u64,
    t_obs: f64,
    r0: f64,
    negate_beta_tilde: bool,
) -> Result<(f64, f64)> {
    let rho1_batch = terminal_rho_samples(
        mode, sol, horizon, rho0, m, dt, seed, 0, t_obs, r0, false, negate_beta_tilde,
    )?;
    let rho2_batch = terminal_rho_samples(
        mode, sol, horizon, rho0, m, dt, seed, m as u64, t_obs, r0, true, negate_beta_tilde,
    )?;
    let need = 100;
    if rho1_batch.len() < need || rho2_batch.len() < need {
        return Err(Error::InsufficientSamples { got: rho1_batch.len().min(rho2_batch.len()), need });
    }
    ks_two_sample(&rho1_batch, &rho2_batch)
}

/// Smooth function on the torus with the analytic derivatives the middle-
/// particle martingale comparison needs.
pub trait SurfaceFn: Sync {
    fn value(&self, x: &TorusPoint) -> f64;
    fn grad(&self, x: &TorusPoint) -> TangentVec;
    fn laplacian(&self, x: &TorusPoint) -> f64;
}

/// `sin(2 pi k x1)`.
pub struct SinX1 {
    pub k: f64,
}

impl SurfaceFn for SinX1 {
    fn value(&self, x: &TorusPoint) -> f64 {
        (std::f64::consts::TAU * self.k * x.x1).sin()
    }
    fn grad(&self, x: &TorusPoint) -> TangentVec {
        let w = std::f64::consts::TAU * self.k;
        TangentVec::new(w * (w * x.x1).cos(), 0.0)
    }
    fn laplacian(&self, x: &TorusPoint) -> f64 {
        let w = std::f64::consts::TAU * self.k;
        -w * w * (w * x.x1).sin()
    }
}

/// Gap (in standard-error units) of the compensated middle-particle process
/// at each checkpoint.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ZMartingaleResult {
    /// (tau, |mean - phi(z_0)|, standard error) per checkpoint.
    pub checkpoints: Vec<(f64, f64, f64)>,
    pub max_gap: f64,
    pub max_gap_se: f64,
}

/// Monte Carlo check that `phi(z) - int (alpha^2/2 lap phi + theta <grad
/// phi, gamma'>)` has constant expectation. Paths contribute until stopping
/// (the stopped value is frozen, so the optional-stopping identity applies).
/// `drop_compensator` runs the mutation that must break the test.
#[allow(clippy::too_many_arguments)]
pub fn z_martingale_test(
    sol: Option<&FlowSolution>,
    horizon: f64,
    phi: &dyn SurfaceFn,
    start_x: TorusPoint,
    rho0: f64,
    m: usize,
    dt: f64,
    seed: u64,
    t_obs: f64,
    r0: f64,
    checkpoints: &[f64],
    drop_compensator: bool,
) -> Result<ZMartingaleResult> {
    let steps = (t_obs / dt).round() as usize;
    let cp_steps: Vec<usize> = checkpoints.iter().map(|&c| (c / dt).round() as usize).collect();
    let y0 = start_x.offset(rho0, 0.0);
    let z0 = {
        let state = TripleState::new(start_x, y0);
        middle_particle(&state)
    };
    let phi_z0 = phi.value(&z0);

    let per_path: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngStream::new(seed, path as u64);
            let mut state = TripleState::new(start_x, y0);
            let mut comp = 0.0f64;
            let mut frozen: Option<f64> = None;
            let mut values = Vec::with_capacity(cp_steps.len());
            let mut record = |step: usize, val: f64, values: &mut Vec<f64>| {
                for (ci, &cs) in cp_steps.iter().enumerate() {
                    if cs == step && values.len() == ci {
                        values.push(val);
                    }
                }
            };
            record(0, phi_z0, &mut values);
            for k in 0..steps {
                if frozen.is_none() {
                    let geo = torus_geodesic(&state.x, &state.y);
                    let rho = geo.distance;
                    let spec = JacobiSpec::new(Curvature::Flat, rho.max(1e-300)).expect("positive");
                    let a = std::f64::consts::SQRT_2; // flat reference run
                    let alpha = a * jacobi_w(&spec, state.rho1.clamp(0.0, rho)).expect("in range");
                    let theta = theta_drift(&spec, a, state.rho1.clamp(0.0, rho));
                    let z = middle_particle(&state);
                    if !drop_compensator {
                        comp += dt
                            * (0.5 * alpha * alpha * phi.laplacian(&z)
                                + theta * phi.grad(&z).dot(&geo.direction));
                    }
                    let next = triple_step(&state, sol, horizon, dt, &mut rng, r0);
                    // Evaluate phi at the unclamped geodesic extension so the
                    // frozen value is the martingale sampled at the stop.
                    let z_next = state
                        .x
                        .offset(
                            a * 0.0 + next.rho1 * geo.direction.v1,
                            next.rho1 * geo.direction.v2,
                        );
                    let val = phi.value(&z_next) - comp;
                    state = next;
                    if state.stopped.is_some() {
                        frozen = Some(val);
                    }
                    record(k + 1, frozen.unwrap_or(val), &mut values);
                } else {
                    record(k + 1, frozen.unwrap(), &mut values);
                }
            }
            values
        })
        .collect();

    let mut out = Vec::with_capacity(cp_steps.len());
    let mut max_gap = 0.0f64;
    let mut max_gap_se = 0.0f64;
    for (ci, &cs) in cp_steps.iter().enumerate() {
        let vals: Vec<f64> = per_path.iter().map(|v| v[ci]).collect();
        let est = mc_reduce(&vals)?;
        let gap = (est.mean - phi_z0).abs();
        max_gap = max_gap.max(gap);
        if cs > 0 {
            max_gap_se = max_gap_se.max(gap / est.std_error.max(1e-12));
        }
        out.push((cs as f64 * dt, gap, est.std_error));
    }
    Ok(ZMartingaleResult { checkpoints: out, max_gap, max_gap_se })
}
