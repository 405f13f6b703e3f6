//! Forward-Euler evolution of the conformal exponent on the flat torus and
//! the time-indexed solution stack with its space-time interpolators.

use super::field::{laplacian, GridField};
use super::interp::{self, Hessian};
use crate::error::{Error, Result};
use crate::geometry::{TangentVec, TorusPoint};

/// Sup-norms of a snapshot: `|p|`, Euclidean `|grad p|`, Frobenius `|Hess p|`,
/// all maximized over grid nodes with centered differences.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SupNorms {
    pub p_inf: f64,
    pub grad_inf: f64,
    pub hess_inf: f64,
}

/// Time-indexed stack of grid fields with interpolators in space and time.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    times: Vec<f64>,
    fields: Vec<GridField>,
    dt_solver: f64,
}

/// Explicit-Euler CFL bound `0.2 h^2 exp(2 min p0)`.
pub fn cfl_bound(p0: &GridField) -> f64 {
    let h = p0.spacing();
    0.2 * h * h * (2.0 * p0.min()).exp()
}

/// Integrate `dp/dt = e^{-2p} lap(p)` by forward Euler from `p0`, saving a
/// snapshot every `save_every` time units (which must be an integer multiple
/// of `dt`; the horizon must be a multiple of `save_every`).
///
/// The discrete update is a convex combination of each node and its
/// neighbors whenever the CFL precondition holds, so grid extrema cannot
/// expand and the flat fixed point is preserved exactly.
pub fn solve(p0: &GridField, horizon: f64, dt: f64, save_every: f64) -> Result<FlowSolution> {
    if horizon <= 0.0 || dt <= 0.0 || save_every <= 0.0 {
        return Err(Error::DomainError("horizon, dt and save_every must be positive".into()));
    }
    let bound = cfl_bound(p0);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, bound });
    }
    let steps_per_save = (save_every / dt).round() as usize;
    if steps_per_save == 0 || (steps_per_save as f64 * dt - save_every).abs() > 1e-9 * save_every {
        return Err(Error::DomainError(format!(
            "save_every = {save_every} is not an integer multiple of dt = {dt}"
        )));
    }
    let n_saves = (horizon / save_every).round() as usize;
    if n_saves == 0 || (n_saves as f64 * save_every - horizon).abs() > 1e-9 * horizon {
        return Err(Error::DomainError(format!(
            "horizon = {horizon} is not an integer multiple of save_every = {save_every}"
        )));
    }

    let n = p0.n();
    let mut current = p0.clone();
    let mut times = Vec::with_capacity(n_saves + 1);
    let mut fields = Vec::with_capacity(n_saves + 1);
    times.push(0.0);
    fields.push(current.clone());

    let mut scratch = vec![0.0f64; n * n];
    for save in 0..n_saves {
        for _ in 0..steps_per_save {
            step(&mut current, dt, &mut scratch)?;
        }
        let t = (save + 1) as f64 * save_every;
        if !current.values().iter().all(|v| v.is_finite()) {
            return Err(Error::SolverDiverged(t));
        }
        times.push(t);
        fields.push(current.clone());
    }
    Ok(FlowSolution { times, fields, dt_solver: dt })
}

fn step(p: &mut GridField, dt: f64, scratch: &mut [f64]) -> Result<()> {
    let lap = laplacian(p);
    for ((s, lv), pv) in scratch.iter_mut().zip(lap.values()).zip(p.values()) {
        *s = pv + dt * (-2.0 * pv).exp() * lv;
    }
    if scratch.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverDiverged(f64::NAN));
    }
    p.values_mut().copy_from_slice(scratch);
    Ok(())
}

impl FlowSolution {
    /// Wrap a single field as a time-constant solution on `[0, horizon]`.
    /// Used by diagnostics that evaluate a frozen snapshot.
    pub fn constant_in_time(field: GridField, horizon: f64) -> Self {
        FlowSolution { times: vec![0.0, horizon], fields: vec![field.clone(), field], dt_solver: horizon }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[GridField] {
        &self.fields
    }

    pub fn dt_solver(&self) -> f64 {
        self.dt_solver
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn n(&self) -> usize {
        self.fields[0].n()
    }

    pub fn side(&self) -> f64 {
        self.fields[0].side()
    }

    pub fn field_at(&self, t: f64) -> Result<&GridField> {
        let idx = self
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * self.final_time().max(1.0))
            .ok_or(Error::SnapshotNotSaved(t))?;
        Ok(&self.fields[idx])
    }

    /// Bracketing snapshot indices and the linear blend weight for time `t`.
    fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        let t_max = self.final_time();
        if !(0.0..=t_max * (1.0 + 1e-12) + 1e-15).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_max });
        }
        let t = t.min(t_max);
        let k = match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => return Ok((k, k, 0.0)),
            Err(k) => k,
        };
        let (lo, hi) = (k - 1, k.min(self.times.len() - 1));
        let span = self.times[hi] - self.times[lo];
        let theta = if span > 0.0 { (t - self.times[lo]) / span } else { 0.0 };
        Ok((lo, hi, theta))
    }

    /// Interpolated field value at `(t, x)`: bicubic in space, linear in time.
    pub fn value_at(&self, t: f64, x: &TorusPoint) -> Result<f64> {
        let (lo, hi, theta) = self.bracket(t)?;
        let a = interp::value(&self.fields[lo], x);
        if lo == hi {
            return Ok(a);
        }
        let b = interp::value(&self.fields[hi], x);
        Ok((1.0 - theta) * a + theta * b)
    }

    pub fn value_grad_at(&self, t: f64, x: &TorusPoint) -> Result<(f64, TangentVec)> {
        let (lo, hi, theta) = self.bracket(t)?;
        let (va, ga) = interp::value_grad(&self.fields[lo], x);
        if lo == hi {
            return Ok((va, ga));
        }
        let (vb, gb) = interp::value_grad(&self.fields[hi], x);
        let w = 1.0 - theta;
        Ok((
            w * va + theta * vb,
            TangentVec::new(w * ga.v1 + theta * gb.v1, w * ga.v2 + theta * gb.v2),
        ))
    }

    pub fn grad_at(&self, t: f64, x: &TorusPoint) -> Result<TangentVec> {
        Ok(self.value_grad_at(t, x)?.1)
    }

    pub fn hess_at(&self, t: f64, x: &TorusPoint) -> Result<Hessian> {
        let (lo, hi, theta) = self.bracket(t)?;
        let a = interp::hess(&self.fields[lo], x);
        if lo == hi {
            return Ok(a);
        }
        let b = interp::hess(&self.fields[hi], x);
        let w = 1.0 - theta;
        Ok(Hessian {
            h11: w * a.h11 + theta * b.h11,
            h12: w * a.h12 + theta * b.h12,
            h22: w * a.h22 + theta * b.h22,
        })
    }

    /// Grid sup-norms of `p`, `grad p` (centered differences) and `Hess p`
    /// (centered second differences) at a saved snapshot time.
    pub fn sup_norms(&self, t: f64) -> Result<SupNorms> {
        let f = self.field_at(t)?;
        Ok(grid_sup_norms(f))
    }

    /// Symmetric second-difference quotient
    /// `(p(z - rho0 xi) - 2 p(z) + p(z + rho0 xi)) / rho0^2`
    /// along the geodesic through `z` in unit direction `xi`.
    pub fn second_difference_quotient(
        &self,
        t: f64,
        z: &TorusPoint,
        xi: &TangentVec,
        rho0: f64,
    ) -> Result<f64> {
        if !(rho0 > 0.0 && rho0 < z.side / 4.0) {
            return Err(Error::DomainError(format!("offset must lie in (0, L/4), got {rho0}")));
        }
        let plus = z.offset(rho0 * xi.v1, rho0 * xi.v2);
        let minus = z.offset(-rho0 * xi.v1, -rho0 * xi.v2);
        let vp = self.value_at(t, &plus)?;
        let vm = self.value_at(t, &minus)?;
        let vz = self.value_at(t, z)?;
        Ok((vm - 2.0 * vz + vp) / (rho0 * rho0))
    }
}

/// Centered-difference sup-norms over the grid nodes of one field.
pub fn grid_sup_norms(f: &GridField) -> SupNorms {
    let n = f.n();
    let h = f.spacing();
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let mut p_inf = 0.0f64;
    let mut grad_inf = 0.0f64;
    let mut hess_inf = 0.0f64;
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            let v = f.at(i, j);
            p_inf = p_inf.max(v.abs());
            let g1 = (f.at(ip, j) - f.at(im, j)) * inv_2h;
            let g2 = (f.at(i, jp) - f.at(i, jm)) * inv_2h;
            grad_inf = grad_inf.max(g1.hypot(g2));
            let d11 = (f.at(ip, j) - 2.0 * v + f.at(im, j)) * inv_h2;
            let d22 = (f.at(i, jp) - 2.0 * v + f.at(i, jm)) * inv_h2;
            let d12 = (f.at(ip, jp) - f.at(ip, jm) - f.at(im, jp) + f.at(im, jm)) * 0.25 * inv_h2;
            hess_inf = hess_inf.max((d11 * d11 + 2.0 * d12 * d12 + d22 * d22).sqrt());
        }
    }
    SupNorms { p_inf, grad_inf, hess_inf }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::field::normalize_area;
    use std::f64::consts::TAU;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn zero_field_is_a_fixed_point() {
        let p0 = GridField::zeros(64, 1.0).unwrap();
        let sol = solve(&p0, 0.1, 1e-5, 0.05).unwrap();
        for f in sol.fields() {
            assert!(f.sup_abs() <= 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let p0 = GridField::zeros(64, 1.0).unwrap();
        let bound = cfl_bound(&p0);
        assert!(matches!(
            solve(&p0, 0.1, bound * 2.0, 0.05),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn linearized_heat_decay() {
        // Amplitude 0.01 decays at the discrete rate of the (1,0) mode,
        // within 5% of 0.01 exp(-4 pi^2 T) at T = 0.05.
        let p0 = GridField::from_fn(64, 1.0, |x1, _| 0.01 * (TAU * x1).sin()).unwrap();
        let dt = 4e-5;
        let sol = solve(&p0, 0.05, dt, 0.01).unwrap();
        let got = sol.fields().last().unwrap().sup_abs();
        let expected = 1.389_111_331_428e-3; // 0.01 exp(-4 pi^2 0.05), frozen
        assert!((got - expected).abs() / expected <= 0.05, "sup {got} vs {expected}");
    }

    #[test]
    fn area_is_conserved() {
        let raw = GridField::from_fn(64, 1.0, |x1, x2| 0.2 * (TAU * x1).sin() * (TAU * x2).sin()).unwrap();
        let p0 = normalize_area(&raw);
        let a0 = p0.area();
        let sol = solve(&p0, 0.05, 5e-7, 0.01).unwrap();
        for f in sol.fields() {
            let drift = (f.area() - a0).abs() / a0;
            assert!(drift <= 1e-6, "relative area drift {drift}");
        }
    }

    #[test]
    fn grid_extrema_stay_inside_initial_range() {
        let raw = GridField::from_fn(64, 1.0, |x1, x2| 0.2 * (TAU * x1).sin() + 0.1 * (TAU * x2).cos()).unwrap();
        let p0 = normalize_area(&raw);
        let dt = 0.9 * cfl_bound(&p0);
        let dt = 0.02 / (0.02 / dt).ceil();
        let sol = solve(&p0, 0.1, dt, 0.02).unwrap();
        let (lo, hi) = (p0.min(), p0.max());
        for f in sol.fields() {
            assert!(f.max() <= hi + 1e-10);
            assert!(f.min() >= lo - 1e-10);
        }
    }

    #[test]
    fn refinement_order_in_space() {
        // Doubling n changes sup|p_T| by O(h^2): observed order >= 1.8.
        let horizon = 0.02;
        let dt = 2e-6;
        let mut sups = Vec::new();
        for n in [64usize, 128, 256] {
            let p0 = normalize_area(
                &GridField::from_fn(n, 1.0, |x1, _| 0.2 * (TAU * x1).sin()).unwrap(),
            );
            let sol = solve(&p0, horizon, dt, horizon).unwrap();
            sups.push(sol.fields().last().unwrap().sup_abs());
        }
        let d1 = (sups[1] - sups[0]).abs();
        let d2 = (sups[2] - sups[1]).abs();
        let order = (d1 / d2).log2();
        assert!(order >= 1.8, "observed spatial order {order} (diffs {d1}, {d2})");
    }

    #[test]
    fn interp_examples() {
        let p0 = GridField::from_fn(64, 1.0, |x1, _| (TAU * x1).sin()).unwrap();
        let sol = FlowSolution::constant_in_time(p0, 1.0);
        // Gradient at x1 = 0 is 2 pi up to O(h^2).
        let g = sol.grad_at(0.3, &TorusPoint::new(0.0, 0.2, 1.0)).unwrap();
        assert!((g.v1 - TAU).abs() / TAU <= 2e-3);
        assert!(g.v2.abs() <= 1e-10);
        // Nodal query reproduces the sample.
        let v = sol.value_at(0.0, &TorusPoint::new(0.25, 0.5, 1.0)).unwrap();
        assert_close(v, 1.0, 1e-13);
        // Out-of-range time errors.
        assert!(sol.value_at(1.5, &TorusPoint::new(0.1, 0.1, 1.0)).is_err());
        assert!(sol.value_at(-0.1, &TorusPoint::new(0.1, 0.1, 1.0)).is_err());
    }

    #[test]
    fn sup_norms_of_sine() {
        let amp = 0.3;
        let p0 = GridField::from_fn(64, 1.0, |x1, _| amp * (TAU * x1).sin()).unwrap();
        let sol = FlowSolution::constant_in_time(p0, 1.0);
        let s = sol.sup_norms(0.0).unwrap();
        assert_close(s.p_inf, amp, 1e-12);
        assert!((s.grad_inf - amp * TAU).abs() / (amp * TAU) <= 2e-3);
        assert!((s.hess_inf - amp * TAU * TAU).abs() / (amp * TAU * TAU) <= 2e-3);
        assert!(sol.sup_norms(0.123).is_err());
        let zero = FlowSolution::constant_in_time(GridField::zeros(16, 1.0).unwrap(), 1.0);
        let s = zero.sup_norms(0.0).unwrap();
        assert_eq!((s.p_inf, s.grad_inf, s.hess_inf), (0.0, 0.0, 0.0));
        let c = FlowSolution::constant_in_time(GridField::from_fn(16, 1.0, |_, _| -0.4).unwrap(), 1.0);
        let s = c.sup_norms(0.0).unwrap();
        assert_close(s.p_inf, 0.4, 1e-13);
        assert!(s.grad_inf <= 1e-12 && s.hess_inf <= 1e-9);
    }

    #[test]
    fn second_difference_quotient_examples() {
        let zero = FlowSolution::constant_in_time(GridField::zeros(16, 1.0).unwrap(), 1.0);
        let q = zero
            .second_difference_quotient(0.0, &TorusPoint::new(0.3, 0.3, 1.0), &TangentVec::new(1.0, 0.0), 1e-3)
            .unwrap();
        assert_close(q, 0.0, 1e-9);

        let p0 = GridField::from_fn(64, 1.0, |x1, _| (TAU * x1).sin()).unwrap();
        let sol = FlowSolution::constant_in_time(p0, 1.0);
        let q = sol
            .second_difference_quotient(0.0, &TorusPoint::new(0.25, 0.0, 1.0), &TangentVec::new(1.0, 0.0), 1e-3)
            .unwrap();
        let exact = -TAU * TAU; // -4 pi^2 sin(pi/2)
        assert!((q - exact).abs() / exact.abs() <= 1e-3, "quotient {q} vs {exact}");

        assert!(sol
            .second_difference_quotient(0.0, &TorusPoint::new(0.25, 0.0, 1.0), &TangentVec::new(1.0, 0.0), 0.3)
            .is_err());
    }

    #[test]
    fn quotient_converges_to_interp_hessian_quad_form() {
        let p0 = GridField::from_fn(64, 1.0, |x1, x2| 0.1 * (TAU * x1).sin() * (TAU * x2).sin()).unwrap();
        let sol = FlowSolution::constant_in_time(p0, 1.0);
        let z = TorusPoint::new(0.25, 0.25, 1.0);
        let xi = TangentVec::new(1.0, 0.0);
        let q = sol.second_difference_quotient(0.0, &z, &xi, 1e-3).unwrap();
        let analytic = -0.1 * TAU * TAU;
        assert!((q - analytic).abs() / analytic.abs() <= 0.05, "{q} vs {analytic}");
    }

    #[test]
    fn stationarity_long_run() {
        // p = 0 stays at rounding level over 1e4 explicit steps.
        let p0 = GridField::zeros(64, 1.0).unwrap();
        let dt = 1e-5;
        let sol = solve(&p0, 1e4 * dt, dt, 1e4 * dt).unwrap();
        assert!(sol.fields().last().unwrap().sup_abs() <= 1e-12);
    }
}
