//! Euler-Maruyama simulation of the controlled process on the flat torus.
//!
//! The state is `(x, p)` with `x` on the torus and `p` the fiber coordinate.
//! Under a control `(a1, a2)` the discrete step with a common 2D Gaussian
//! increment `dW ~ N(0, dt I)` is
//!
//! ```text
//! x  <- wrap(x + sqrt(2) e^{-p} dW)
//! p  <- p + sqrt(2) e^{-p} (a1 dW1 + a2 dW2)
//! ```
//!
//! (flat reference: the curvature drift vanishes and normalized and
//! unnormalized dynamics coincide). The same increments drive `x` and `p`,
//! which is what makes `p` exactly tangent to the moving solution graph
//! under the gradient control.

use crate::analysis::{mc_reduce, MCEstimate};
use crate::error::{Error, Result};
use crate::flow::FlowSolution;
use crate::geometry::TorusPoint;
use crate::rng::RngStream;
use rayon::prelude::*;

/// Hard cap on the control magnitude; admissible controls are bounded, so
/// exceeding this indicates a misconfigured experiment. Violations are
/// clamped and counted rather than aborting a sweep.
pub const CONTROL_CLAMP: f64 = 100.0;

/// Abort threshold for the fiber coordinate.
pub const P_BLOWUP: f64 = 50.0;

/// Control map `(tau, x, p) -> (a1, a2)`.
pub trait Control: Sync {
    fn eval(&self, tau: f64, x: &TorusPoint, p: f64) -> (f64, f64);
}

impl<F: Fn(f64, &TorusPoint, f64) -> (f64, f64) + Sync> Control for F {
    fn eval(&self, tau: f64, x: &TorusPoint, p: f64) -> (f64, f64) {
        self(tau, x, p)
    }
}

/// Zero control: `x` is a pure time-changed Brownian motion and `p` freezes.
pub struct ZeroControl;

impl Control for ZeroControl {
    fn eval(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// The gradient control `a_i = (grad p-bar_{t - tau})(x)`, Markov in
/// space-time; the `p` argument is ignored. Process time `tau` runs
/// backward relative to flow time.
pub struct SuccessfulControl<'a> {
    sol: &'a FlowSolution,
    horizon: f64,
}

impl<'a> SuccessfulControl<'a> {
    pub fn new(sol: &'a FlowSolution, horizon: f64) -> Result<Self> {
        let t_max = sol.final_time();
        if horizon > t_max * (1.0 + 1e-12) {
            return Err(Error::TimeOutOfRange { t: horizon, t_max });
        }
        Ok(Self { sol, horizon })
    }
}

impl Control for SuccessfulControl<'_> {
    fn eval(&self, tau: f64, x: &TorusPoint, _p: f64) -> (f64, f64) {
        let s = (self.horizon - tau).clamp(0.0, self.sol.final_time());
        let g = self.sol.grad_at(s, x).expect("clamped time is in range");
        (g.v1, g.v2)
    }
}

/// One simulated trajectory of `(tau, x, p)` with terminal diagnostics.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    pub dt: f64,
    /// (tau, x, p) at every step, including the initial state.
    pub samples: Vec<(f64, TorusPoint, f64)>,
    pub terminal_p: f64,
    /// Max over steps of `|p_tau - interp(sol, t - tau, x_tau)|`; zero when
    /// no reference solution was supplied.
    pub on_section_max_dev: f64,
    /// Steps on which the control had to be clamped to [`CONTROL_CLAMP`].
    pub clamped_steps: usize,
}

pub(crate) struct StepOutcome {
    pub x: TorusPoint,
    pub p: f64,
    pub clamped: bool,
}

#[inline]
pub(crate) fn step_controlled(
    x: &TorusPoint,
    p: f64,
    a1: f64,
    a2: f64,
    dw1: f64,
    dw2: f64,
) -> StepOutcome {
    let (mut a1, mut a2) = (a1, a2);
    let norm = a1.hypot(a2);
    let clamped = norm > CONTROL_CLAMP;
    if clamped {
        let k = CONTROL_CLAMP / norm;
        a1 *= k;
        a2 *= k;
    }
    let scale = std::f64::consts::SQRT_2 * (-p).exp();
    StepOutcome {
        x: x.offset(scale * dw1, scale * dw2),
        p: p + scale * (a1 * dw1 + a2 * dw2),
        clamped,
    }
}

/// Run one controlled path of horizon `t` from `(x0, p0)`, recording every
/// step. When `sol` is given, the running deviation from the moving graph
/// `p-bar_{t - tau}` is tracked.
pub fn simulate_controlled<C: Control>(
    sol: Option<&FlowSolution>,
    t: f64,
    x0: &TorusPoint,
    p0: f64,
    control: &C,
    dt: f64,
    rng: &mut RngStream,
) -> Result<ControlledPath> {
    if dt > 1e-3 {
        return Err(Error::DomainError(format!("dt must be at most 1e-3, got {dt}")));
    }
    if let Some(sol) = sol {
        if t > sol.final_time() * (1.0 + 1e-12) {
            return Err(Error::TimeOutOfRange { t, t_max: sol.final_time() });
        }
    }
    let n_steps = (t / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut x = *x0;
    let mut p = p0;
    let mut max_dev = 0.0f64;
    let mut clamped_steps = 0usize;
    let mut track = |tau: f64, x: &TorusPoint, p: f64, max_dev: &mut f64| -> Result<()> {
        if let Some(sol) = sol {
            let s = (t - tau).clamp(0.0, sol.final_time());
            let dev = (p - sol.value_at(s, x)?).abs();
            if dev > *max_dev {
                *max_dev = dev;
            }
        }
        Ok(())
    };
    samples.push((0.0, x, p));
    track(0.0, &x, p, &mut max_dev)?;
    for k in 0..n_steps {
        let tau = k as f64 * dt;
        let (a1, a2) = control.eval(tau, &x, p);
        let (dw1, dw2) = rng.gaussian_increment_2d(dt);
        let out = step_controlled(&x, p, a1, a2, dw1, dw2);
        x = out.x;
        p = out.p;
        if out.clamped {
            clamped_steps += 1;
        }
        if !p.is_finite() || p.abs() > P_BLOWUP {
            return Err(Error::ConformalBlowUp);
        }
        let tau_next = (k + 1) as f64 * dt;
        samples.push((tau_next.min(t), x, p));
        track(tau_next.min(t), &x, p, &mut max_dev)?;
    }
    Ok(ControlledPath { dt, samples, terminal_p: p, on_section_max_dev: max_dev, clamped_steps })
}

/// Internal no-recording path runner; returns `(x_T, p_T, max_dev)` plus
/// the fiber value at each requested checkpoint step index.
fn run_path<C: Control>(
    sol: Option<&FlowSolution>,
    t: f64,
    x0: &TorusPoint,
    p0: f64,
    control: &C,
    dt: f64,
    rng: &mut RngStream,
    checkpoint_steps: &[usize],
) -> Result<(TorusPoint, f64, f64, Vec<f64>)> {
    let n_steps = (t / dt).ceil() as usize;
    let mut x = *x0;
    let mut p = p0;
    let mut max_dev = 0.0f64;
    let mut checkpoints = Vec::with_capacity(checkpoint_steps.len());
    let mut next_cp = 0usize;
    if checkpoint_steps.first() == Some(&0) {
        checkpoints.push(p);
        next_cp = 1;
    }
    for k in 0..n_steps {
        let tau = k as f64 * dt;
        let (a1, a2) = control.eval(tau, &x, p);
        let (dw1, dw2) = rng.gaussian_increment_2d(dt);
        let out = step_controlled(&x, p, a1, a2, dw1, dw2);
        x = out.x;
        p = out.p;
        if !p.is_finite() || p.abs() > P_BLOWUP {
            return Err(Error::ConformalBlowUp);
        }
        if let Some(sol) = sol {
            let s = (t - (k + 1) as f64 * dt).clamp(0.0, sol.final_time());
            let dev = (p - sol.value_at(s, &x)?).abs();
            if dev > max_dev {
                max_dev = dev;
            }
        }
        if next_cp < checkpoint_steps.len() && checkpoint_steps[next_cp] == k + 1 {
            checkpoints.push(p);
            next_cp += 1;
        }
    }
    Ok((x, p, max_dev, checkpoints))
}

/// Monte Carlo estimate of the terminal-average representation
/// `p-bar_t(x0) = E[p-bar_0(x_t)]` under the gradient control, on `m`
/// independent streams.
pub fn representation_estimate(
    sol: &FlowSolution,
    t: f64,
    x0: &TorusPoint,
    m: usize,
    dt: f64,
    seed: u64,
) -> Result<MCEstimate> {
    let control = SuccessfulControl::new(sol, t)?;
    let p0 = sol.value_at(t, x0)?;
    let samples: Vec<Result<f64>> = (0..m)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngStream::new(seed, path as u64);
            let (x_t, _, _, _) = run_path(None, t, x0, p0, &control, dt, &mut rng, &[])?;
            sol.value_at(0.0, &x_t)
        })
        .collect();
    let values = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    mc_reduce(&values)
}

/// Deviation of the empirical mean of `p_tau` from `p_0` at each checkpoint,
/// with its standard error. Under the flat-case dynamics the discrete chain
/// is an exact martingale, so the deviations are pure Monte Carlo noise.
pub fn martingale_test(
    sol: &FlowSolution,
    t: f64,
    x0: &TorusPoint,
    checkpoints: &[f64],
    m: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    let control = SuccessfulControl::new(sol, t)?;
    let p0 = sol.value_at(t, x0)?;
    let mut cp_steps: Vec<usize> = checkpoints.iter().map(|&c| (c / dt).round() as usize).collect();
    cp_steps.sort_unstable();
    let per_path: Vec<Result<Vec<f64>>> = (0..m)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngStream::new(seed, path as u64);
            run_path(None, t, x0, p0, &control, dt, &mut rng, &cp_steps).map(|r| r.3)
        })
        .collect();
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(cp_steps.len());
    for (ci, &step) in cp_steps.iter().enumerate() {
        let vals: Vec<f64> = per_path.iter().map(|cps| cps[ci]).collect();
        let est = mc_reduce(&vals)?;
        out.push((step as f64 * dt, (est.mean - p0).abs(), est.std_error));
    }
    Ok(out)
}

/// Mean over `m` paths of the per-path maximal deviation from the moving
/// graph under the gradient control.
pub fn mean_on_section_deviation(
    sol: &FlowSolution,
    t: f64,
    x0: &TorusPoint,
    m: usize,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let control = SuccessfulControl::new(sol, t)?;
    let p0 = sol.value_at(t, x0)?;
    let devs: Vec<Result<f64>> = (0..m)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngStream::new(seed, path as u64);
            run_path(Some(sol), t, x0, p0, &control, dt, &mut rng, &[]).map(|r| r.2)
        })
        .collect();
    let devs = devs.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(devs.iter().sum::<f64>() / devs.len() as f64)
}

/// Smooth test function on `[0, t] x M x R` with the analytic derivatives
/// the generator comparison needs.
pub trait SmoothTestFn: Sync {
    fn value(&self, tau: f64, x: &TorusPoint, p: f64) -> f64;
    fn d_tau(&self, tau: f64, x: &TorusPoint, p: f64) -> f64;
    /// Spatial gradient `(d/dx1, d/dx2)`.
    fn grad_x(&self, tau: f64, x: &TorusPoint, p: f64) -> (f64, f64);
    fn d_p(&self, tau: f64, x: &TorusPoint, p: f64) -> f64;
    /// Spatial Laplacian.
    fn lap_x(&self, tau: f64, x: &TorusPoint, p: f64) -> f64;
    fn d_pp(&self, tau: f64, x: &TorusPoint, p: f64) -> f64;
    /// Mixed partials `(d^2/dx1 dp, d^2/dx2 dp)`.
    fn grad_xp(&self, tau: f64, x: &TorusPoint, p: f64) -> (f64, f64);
}

/// Generator drift of `phi(tau, x, p)` for the flat-case controlled process:
///
/// ```text
/// d_tau phi + e^{-2p} lap phi + e^{-2p} |a|^2 d_pp phi
///   + 2 e^{-2p} (a . grad_xp phi) + 2 e^{-2p} (a . grad_x phi)'...
/// ```
///
/// concretely, with diffusion matrix
/// `[[2e, 0, 2e a1], [0, 2e, 2e a2], [2e a1, 2e a2, 2e |a|^2]]`,
/// `e = e^{-2p}`:
/// `d_tau phi + e lap phi + e |a|^2 phi_pp + 2 e (a1 phi_x1p + a2 phi_x2p)`.
pub fn generator_drift(phi: &dyn SmoothTestFn, tau: f64, x: &TorusPoint, p: f64, a1: f64, a2: f64) -> f64 {
    let e = (-2.0 * p).exp();
    let (m1, m2) = phi.grad_xp(tau, x, p);
    phi.d_tau(tau, x, p)
        + e * phi.lap_x(tau, x, p)
        + e * (a1 * a1 + a2 * a2) * phi.d_pp(tau, x, p)
        + 2.0 * e * (a1 * m1 + a2 * m2)
}

/// Result of the one-step generator comparison.
#[derive(Debug, Clone)]
pub struct GeneratorResidual {
    /// Per sample point: (empirical drift, standard error, analytic drift).
    pub points: Vec<(f64, f64, f64)>,
    /// Max over points of |empirical - analytic|.
    pub max_residual: f64,
    /// Max over points of |empirical - analytic| / SE (SE floored at 1e-12).
    pub max_residual_se: f64,
}

/// One-step Monte Carlo estimate of the drift of `phi` along the controlled
/// process at each sample state, compared with [`generator_drift`].
///
/// The first-order martingale increment is subtracted inside the estimator
/// (a control variate with conditional mean zero), so the comparison
/// resolves the drift instead of burying it in `O(1/sqrt(dt))` noise.
pub fn generator_residual<C: Control>(
    phi: &dyn SmoothTestFn,
    control: &C,
    sample_points: &[(f64, TorusPoint, f64)],
    dt: f64,
    m: usize,
    seed: u64,
) -> Result<GeneratorResidual> {
    let mut points = Vec::with_capacity(sample_points.len());
    let mut max_residual = 0.0f64;
    let mut max_residual_se = 0.0f64;
    for (pt_idx, (tau, x, p)) in sample_points.iter().enumerate() {
        let (a1, a2) = control.eval(*tau, x, *p);
        let scale = std::f64::consts::SQRT_2 * (-p).exp();
        let (g1, g2) = phi.grad_x(*tau, x, *p);
        let dphi_dp = phi.d_p(*tau, x, *p);
        let v0 = phi.value(*tau, x, *p);
        let samples: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|path| {
                let mut rng = RngStream::new(seed, (pt_idx * m + path) as u64);
                let (dw1, dw2) = rng.gaussian_increment_2d(dt);
                let out = step_controlled(x, *p, a1, a2, dw1, dw2);
                let v1 = phi.value(tau + dt, &out.x, out.p);
                // Subtract the exact first-order martingale increment.
                let mart = scale * (g1 * dw1 + g2 * dw2) + scale * (a1 * dw1 + a2 * dw2) * dphi_dp;
                (v1 - v0 - mart) / dt
            })
            .collect();
        let est = mc_reduce(&samples)?;
        let analytic = generator_drift(phi, *tau, x, *p, a1, a2);
        let resid = (est.mean - analytic).abs();
        max_residual = max_residual.max(resid);
        max_residual_se = max_residual_se.max(resid / est.std_error.max(1e-12));
        points.push((est.mean, est.std_error, analytic));
    }
    Ok(GeneratorResidual { points, max_residual, max_residual_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{normalize_area, solve, GridField};
    use std::f64::consts::TAU;

    fn zero_solution(horizon: f64) -> FlowSolution {
        FlowSolution::constant_in_time(GridField::zeros(64, 1.0).unwrap(), horizon)
    }

    #[test]
    fn zero_control_freezes_p() {
        let sol = zero_solution(0.02);
        let mut rng = RngStream::new(3, 0);
        let x0 = TorusPoint::new(0.3, 0.7, 1.0);
        let path =
            simulate_controlled(Some(&sol), 0.02, &x0, 0.25, &ZeroControl, 1e-4, &mut rng).unwrap();
        for (_, _, p) in &path.samples {
            assert_eq!(*p, 0.25);
        }
        assert_eq!(path.clamped_steps, 0);
        // Step accounting: terminal tau equals the horizon within dt.
        let last_tau = path.samples.last().unwrap().0;
        assert!((last_tau - 0.02).abs() <= 1e-4 + 1e-12);
    }

    #[test]
    fn x_is_time_changed_brownian_motion_under_zero_control() {
        // With p = 0 the marginal variance grows as 4 tau in total
        // (2 dims x 2 from the time change). Tracked with unwrapped shadows.
        let t = 0.01;
        let dt = 1e-4;
        let m = 4000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for path in 0..m {
            let mut rng = RngStream::new(11, path);
            let mut shadow = (0.0f64, 0.0f64);
            let steps = (t / dt) as usize;
            for _ in 0..steps {
                let (dw1, dw2) = rng.gaussian_increment_2d(dt);
                shadow.0 += std::f64::consts::SQRT_2 * dw1;
                shadow.1 += std::f64::consts::SQRT_2 * dw2;
            }
            let sq = shadow.0 * shadow.0 + shadow.1 * shadow.1;
            sum += sq;
            sumsq += sq * sq;
        }
        let mean = sum / m as f64;
        let se = ((sumsq / m as f64 - mean * mean) / m as f64).sqrt();
        assert!((mean - 4.0 * t).abs() <= 3.0 * se, "variance growth {mean} vs {}", 4.0 * t);
    }

    #[test]
    fn successful_control_is_the_interpolated_gradient() {
        let p0 = GridField::from_fn(64, 1.0, |x1, _| (TAU * x1).sin()).unwrap();
        let sol = FlowSolution::constant_in_time(p0, 1.0);
        let control = SuccessfulControl::new(&sol, 0.5).unwrap();
        let (a1, a2) = control.eval(0.1, &TorusPoint::new(0.0, 0.5, 1.0), 123.0);
        assert!((a1 - TAU).abs() / TAU <= 2e-3, "a1 = {a1}");
        assert!(a2.abs() <= 1e-10);
        // At a local max of the field the control vanishes up to
        // interpolation error.
        let (a1, a2) = control.eval(0.1, &TorusPoint::new(0.25, 0.5, 1.0), 0.0);
        assert!(a1.abs() <= 1e-8 && a2.abs() <= 1e-8);
        // Zero solution gives the zero control.
        let z = zero_solution(0.5);
        let zc = SuccessfulControl::new(&z, 0.5).unwrap();
        assert_eq!(zc.eval(0.0, &TorusPoint::new(0.9, 0.2, 1.0), 0.0), (0.0, 0.0));
    }

    #[test]
    fn control_clamp_counts_violations() {
        let sol = zero_solution(0.001);
        let huge = |_: f64, _: &TorusPoint, _: f64| (1e4, 0.0);
        let mut rng = RngStream::new(5, 0);
        let path = simulate_controlled(
            Some(&sol),
            0.001,
            &TorusPoint::new(0.5, 0.5, 1.0),
            0.0,
            &huge,
            1e-5,
            &mut rng,
        )
        .unwrap();
        assert_eq!(path.clamped_steps, 100);
    }

    #[test]
    fn blow_up_aborts_the_path() {
        // A constant control plus an enormous starting p drives |p| over the
        // guard quickly when started near the cap.
        let ctl = |_: f64, _: &TorusPoint, _: f64| (CONTROL_CLAMP, 0.0);
        let mut rng = RngStream::new(9, 0);
        let res = simulate_controlled(
            None,
            0.5,
            &TorusPoint::new(0.1, 0.1, 1.0),
            -49.9999,
            &ctl,
            1e-3,
            &mut rng,
        );
        assert!(matches!(res, Err(Error::ConformalBlowUp)));
    }

    #[test]
    fn representation_on_zero_flow_is_exact() {
        let sol = zero_solution(0.01);
        let est =
            representation_estimate(&sol, 0.01, &TorusPoint::new(0.2, 0.8, 1.0), 64, 1e-4, 7).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.n_paths, 64);
    }

    #[test]
    fn representation_matches_pde_at_moderate_accuracy() {
        // Smaller, faster version of the acceptance run: one query point.
        let raw = GridField::from_fn(64, 1.0, |x1, _| 0.2 * (TAU * x1).sin()).unwrap();
        let p0 = normalize_area(&raw);
        let dt_pde = 2e-5;
        let sol = solve(&p0, 0.1, dt_pde, 0.005).unwrap();
        let x0 = TorusPoint::new(0.25, 0.5, 1.0);
        let est = representation_estimate(&sol, 0.1, &x0, 4000, 2e-4, 42).unwrap();
        let pde = sol.value_at(0.1, &x0).unwrap();
        let tol = (3.0 * est.std_error).max(5e-3);
        assert!(
            (est.mean - pde).abs() <= tol,
            "representation gap {} vs tol {tol}",
            (est.mean - pde).abs()
        );
    }

    #[test]
    fn martingale_deviations_within_noise() {
        let raw = GridField::from_fn(64, 1.0, |x1, _| 0.2 * (TAU * x1).sin()).unwrap();
        let p0 = normalize_area(&raw);
        let sol = solve(&p0, 0.05, 2e-5, 0.005).unwrap();
        let x0 = TorusPoint::new(0.4, 0.3, 1.0);
        let rows =
            martingale_test(&sol, 0.05, &x0, &[0.0, 0.01, 0.05], 3000, 2e-4, 99).unwrap();
        assert_eq!(rows[0].1, 0.0); // checkpoint tau = 0
        for &(tau, dev, se) in &rows {
            assert!(dev <= 3.0 * se + 2e-3, "tau {tau}: deviation {dev} vs 3 SE {}", 3.0 * se);
        }
    }

    #[test]
    fn off_section_paths_rarely_land_on_target() {
        // Starting the fiber above max p0 and keeping the gradient control,
        // the process cannot reliably reach the graph: a reachability sanity
        // check, not a theorem.
        let raw = GridField::from_fn(64, 1.0, |x1, _| 0.2 * (TAU * x1).sin()).unwrap();
        let p0f = normalize_area(&raw);
        let sol = solve(&p0f, 0.02, 2e-5, 0.002).unwrap();
        let control = SuccessfulControl::new(&sol, 0.02).unwrap();
        let x0 = TorusPoint::new(0.1, 0.6, 1.0);
        let p_start = p0f.max() + 0.1;
        let mut hits = 0;
        let m = 200;
        for path in 0..m {
            let mut rng = RngStream::new(1234, path);
            let (x_t, p_t, _, _) =
                run_path(None, 0.02, &x0, p_start, &control, 2e-4, &mut rng, &[]).unwrap();
            let target = sol.value_at(0.0, &x_t).unwrap();
            if (p_t - target).abs() <= 1e-3 {
                hits += 1;
            }
        }
        assert!((hits as f64 / m as f64) < 0.5, "{hits} of {m} paths landed on target");
    }

    struct PhiP;
    impl SmoothTestFn for PhiP {
        fn value(&self, _: f64, _: &TorusPoint, p: f64) -> f64 {
            p
        }
        fn d_tau(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_x(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
            (0.0, 0.0)
        }
        fn d_p(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            1.0
        }
        fn lap_x(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn d_pp(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_xp(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
            (0.0, 0.0)
        }
    }

    struct PhiSinX1;
    impl SmoothTestFn for PhiSinX1 {
        fn value(&self, _: f64, x: &TorusPoint, _: f64) -> f64 {
            (TAU * x.x1).sin()
        }
        fn d_tau(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_x(&self, _: f64, x: &TorusPoint, _: f64) -> (f64, f64) {
            (TAU * (TAU * x.x1).cos(), 0.0)
        }
        fn d_p(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn lap_x(&self, _: f64, x: &TorusPoint, _: f64) -> f64 {
            -TAU * TAU * (TAU * x.x1).sin()
        }
        fn d_pp(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_xp(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
            (0.0, 0.0)
        }
    }

    struct PhiConst;
    impl SmoothTestFn for PhiConst {
        fn value(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            4.2
        }
        fn d_tau(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_x(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
            (0.0, 0.0)
        }
        fn d_p(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn lap_x(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn d_pp(&self, _: f64, _: &TorusPoint, _: f64) -> f64 {
            0.0
        }
        fn grad_xp(&self, _: f64, _: &TorusPoint, _: f64) -> (f64, f64) {
            (0.0, 0.0)
        }
    }

    #[test]
    fn generator_residual_examples() {
        let points = vec![
            (0.0, TorusPoint::new(0.1, 0.2, 1.0), 0.05),
            (0.0, TorusPoint::new(0.6, 0.9, 1.0), -0.1),
        ];
        // Constant phi: residual identically zero.
        let r = generator_residual(&PhiConst, &ZeroControl, &points, 1e-5, 500, 3).unwrap();
        assert!(r.max_residual <= 1e-12);
        // phi = p under any control: drift zero (martingale coordinate).
        let ctl = |_: f64, _: &TorusPoint, _: f64| (0.7, -0.3);
        let r = generator_residual(&PhiP, &ctl, &points, 1e-5, 2000, 4).unwrap();
        for &(emp, se, ana) in &r.points {
            assert_eq!(ana, 0.0);
            assert!(emp.abs() <= 3.0 * se.max(1e-9) + 1e-6, "drift {emp}");
        }
        // phi = sin(2 pi x1): drift = -4 pi^2 e^{-2p} sin(2 pi x1).
        let pts = vec![(0.0, TorusPoint::new(0.125, 0.4, 1.0), 0.2)];
        let r = generator_residual(&PhiSinX1, &ZeroControl, &pts, 1e-6, 20_000, 5).unwrap();
        let (emp, se, ana) = r.points[0];
        let expected = -TAU * TAU * (-0.4f64).exp() * (TAU * 0.125).sin();
        assert!((ana - expected).abs() <= 1e-12);
        assert!((emp - ana).abs() <= 3.0 * se + 0.05 * ana.abs(), "emp {emp} vs ana {ana} (se {se})");
    }
}
