//! Integrating-factor time stepping.
//!
//! Each mode is advanced in the variable `e^{-λt} ŷ` with `λ_u = −ν|k|²` and
//! `λ_d = −|k|²`, so the diffusive part is exact and only the nonlinear
//! tendency is integrated explicitly.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{pin_mean, tendency, PhysicsParams, State};
use crate::error::{Error, Result};
use crate::field::{inverse_scalars, leray_project, SpectralField};
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Heun's method on the integrating-factor variable.
    #[default]
    #[serde(rename = "IF-RK2")]
    IfRk2,
    #[serde(rename = "IF-Euler")]
    IfEuler,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig<T> {
    pub dt_init: T,
    pub cfl_number: T,
    pub dt_max: T,
    pub t_end: T,
    pub scheme: Scheme,
}

impl<T: Real> StepperConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt_max", self.dt_max), ("cfl_number", self.cfl_number), ("dt_init", self.dt_init)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cfl_number > T::one() {
            return Err(Error::Parameter(format!("cfl_number must be <= 1, got {}", self.cfl_number)));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(Error::Parameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// Denominator guard for the advective CFL limit.
const SPEED_FLOOR: f64 = 1e-6;

fn decay_factors<T: Real>(grid: &Grid<T>, rate: T, dt: T) -> Vec<T> {
    grid.k_sq_table().par_iter().map(|&k2| (-rate * k2 * dt).exp()).collect()
}

/// `out = E ⊙ (a + s·b)` per component, where `E` is a per-mode factor.
fn factor_axpy<T: Real>(e: &[T], a: &SpectralField<T>, s: T, b: &SpectralField<T>) -> SpectralField<T> {
    let size = e.len();
    let mut out = a.clone();
    out.coeffs_mut()
        .par_chunks_mut(size)
        .zip(b.coeffs().par_chunks(size))
        .for_each(|(o, bb)| {
            for i in 0..size {
                o[i] = (o[i] + bb[i] * s) * e[i];
            }
        });
    out
}

fn blow_up_dump<T: Real>(state: &State<T>, dt: T) -> String {
    let grid = state.grid();
    let mut first = String::from("none");
    'outer: for (name, f) in [("u_hat", &state.u_hat), ("d_hat", &state.d_hat)] {
        for (i, z) in f.coeffs().iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                let c = i / grid.size();
                let m = grid.mode_of_index(i % grid.size());
                first = format!("{name}[{c}] at mode {m:?}");
                break 'outer;
            }
        }
    }
    let finite_max = |f: &SpectralField<T>| {
        f.coeffs()
            .iter()
            .map(|z| z.norm())
            .filter(|v| v.is_finite())
            .fold(T::zero(), T::max)
    };
    format!(
        "dt = {dt:e}, max finite |u_hat| = {:e}, max finite |d_hat| = {:e}, first non-finite coefficient: {first}",
        finite_max(&state.u_hat),
        finite_max(&state.d_hat)
    )
}

/// One IF-RK2 step of size `dt`.
pub fn step<T: Real>(state: &State<T>, params: &PhysicsParams<T>, dt: T) -> Result<State<T>> {
    step_with(state, params, dt, Scheme::IfRk2)
}

pub fn step_with<T: Real>(state: &State<T>, params: &PhysicsParams<T>, dt: T, scheme: Scheme) -> Result<State<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let grid = Arc::clone(state.grid());
    let eu = decay_factors(&grid, params.nu, dt);
    let ed = decay_factors(&grid, T::one(), dt);
    let n0 = tendency(state, params);
    let euler_u = factor_axpy(&eu, &state.u_hat, dt, &n0.du_hat);
    let euler_d = factor_axpy(&ed, &state.d_hat, dt, &n0.dd_hat);

    let (u_new, d_new) = match scheme {
        Scheme::IfEuler => (euler_u, euler_d),
        Scheme::IfRk2 => {
            let predictor = State {
                u_hat: euler_u,
                d_hat: euler_d,
                w0: state.w0,
                t: state.t + dt,
            };
            let n1 = tendency(&predictor, params);
            let half = dt * T::lit(0.5);
            let mut u = factor_axpy(&eu, &state.u_hat, half, &n0.du_hat);
            u.axpy(half, &n1.du_hat);
            let mut d = factor_axpy(&ed, &state.d_hat, half, &n0.dd_hat);
            d.axpy(half, &n1.dd_hat);
            (u, d)
        }
    };

    let mut u_new = leray_project(&u_new);
    pin_mean(&mut u_new);
    let next = State {
        u_hat: u_new,
        d_hat: d_new,
        w0: state.w0,
        t: state.t + dt,
    };
    if !next.all_finite() {
        return Err(Error::BlowUp {
            t: next.t.as_f64(),
            dump: blow_up_dump(&next, dt),
        });
    }
    Ok(next)
}

/// Largest pointwise speed `max_x |u(x)|` on the grid.
pub fn max_speed<T: Real>(state: &State<T>) -> T {
    let grid = state.grid();
    let refs: Vec<&[Complex<T>]> = (0..3).map(|c| state.u_hat.component(c)).collect();
    let u = inverse_scalars(grid, &refs);
    (0..grid.size())
        .map(|i| (u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]).sqrt())
        .fold(T::zero(), T::max)
}

/// `min(dt_max, cfl·Δx / max(‖u‖_∞, 1e-6))`.
pub fn adaptive_dt<T: Real>(state: &State<T>, config: &StepperConfig<T>) -> T {
    let speed = max_speed(state).max(T::lit(SPEED_FLOOR));
    let dt = (config.cfl_number * state.grid().dx() / speed).min(config.dt_max);
    if dt > T::zero() {
        dt
    } else {
        T::min_positive_value()
    }
}

/// Callbacks driven by [`integrate`].
pub trait Hooks<T: Real> {
    /// Called whenever the integrator lands on a sample time (every multiple
    /// of the cadence past the start, and at `t_end`).
    fn on_sample(&mut self, state: &State<T>) -> Result<()>;

    /// Called before every step with the CFL-limited step size and the size
    /// actually taken.
    fn on_step(&mut self, _state: &State<T>, _dt_adaptive: T, _dt_taken: T) {}
}

/// Hooks that ignore everything.
pub struct NoHooks;

impl<T: Real> Hooks<T> for NoHooks {
    fn on_sample(&mut self, _state: &State<T>) -> Result<()> {
        Ok(())
    }
}

/// Index of the first cadence multiple strictly after `t`.
fn next_sample_index<T: Real>(t: T, interval: T) -> i64 {
    let r = (t / interval).round();
    let base = if (t - r * interval).abs() <= T::lit(1e-9) * interval {
        r
    } else {
        (t / interval).floor()
    };
    base.to_i64().expect("sample index fits") + 1
}

/// Advances `state` to `config.t_end`, landing exactly on every sample time.
///
/// Sample times are `k·cadence` computed from the integer `k`, so a run
/// restarted from a state saved at a sample time takes exactly the same steps
/// as the uninterrupted run.
pub fn integrate<T: Real, H: Hooks<T>>(
    state: State<T>,
    params: &PhysicsParams<T>,
    config: &StepperConfig<T>,
    cadence: Option<T>,
    hooks: &mut H,
) -> Result<State<T>> {
    params.validate()?;
    config.validate()?;
    if let Some(c) = cadence {
        if !(c > T::zero()) {
            return Err(Error::Parameter(format!("sample cadence must be positive, got {c}")));
        }
    }
    let t_end = config.t_end;
    let mut state = state;
    if state.t >= t_end {
        return Ok(state);
    }
    let mut next_k = cadence.map(|c| next_sample_index(state.t, c));
    let mut first = true;
    loop {
        let sample_t = match (cadence, next_k) {
            (Some(c), Some(k)) => Some(T::lit(k as f64) * c),
            _ => None,
        };
        let stop = sample_t.map_or(t_end, |s| s.min(t_end));
        let mut dt_a = adaptive_dt(&state, config);
        if first {
            dt_a = dt_a.min(config.dt_init);
            first = false;
        }
        let gap = stop - state.t;
        let lands = dt_a >= gap * (T::one() - T::lit(1e-9));
        let dt = if lands { gap } else { dt_a };
        hooks.on_step(&state, dt_a, dt);
        state = step_with(&state, params, dt, config.scheme)?;
        if lands {
            state.t = stop;
            let at_sample = sample_t.is_some_and(|s| s <= t_end && stop == s);
            if at_sample {
                next_k = next_k.map(|k| k + 1);
            }
            if at_sample || stop == t_end {
                hooks.on_sample(&state)?;
            }
            if stop == t_end {
                return Ok(state);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const W0: [f64; 3] = [0.0, 0.0, 1.0];

    fn grid(n: usize, l: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::new(n, l).unwrap())
    }

    fn config(t_end: f64, dt_max: f64) -> StepperConfig<f64> {
        StepperConfig {
            dt_init: dt_max,
            cfl_number: 0.4,
            dt_max,
            t_end,
            scheme: Scheme::IfRk2,
        }
    }

    #[test]
    fn pure_heat_factor_halves_unit_mode() {
        let g = grid(8, TAU);
        let mut u = SpectralField::zeros(&g, 3);
        u.set_hermitian(1, [1, 0, 0], Complex::new(1.0, 0.0)).unwrap();
        let s = State::new(u, SpectralField::zeros(&g, 3), W0, 0.0).unwrap();
        let p = PhysicsParams::new(1.0, 1.0).unwrap().linear();
        let next = step(&s, &p, std::f64::consts::LN_2).unwrap();
        assert!((next.u_hat.get(1, [1, 0, 0]).re - 0.5).abs() < 1e-15);
        assert!((next.t - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = grid(8, TAU);
        let s = State::rest(&g, W0).unwrap();
        let p = PhysicsParams::new(1.0, 1.0).unwrap();
        for dt in [1e-3, 0.5, 7.0] {
            let next = step(&s, &p, dt).unwrap();
            assert_eq!(next.u_hat.max_abs(), 0.0);
            assert_eq!(next.d_hat.max_abs(), 0.0);
        }
    }

    #[test]
    fn adaptive_dt_limits() {
        let g = grid(8, 0.8);
        let s = State::rest(&g, W0).unwrap();
        assert_eq!(adaptive_dt(&s, &config(1.0, 0.25)), 0.25);

        // uniform speed 2 along x: constant mode of u1
        let mut u = SpectralField::zeros(&g, 3);
        u.set_hermitian(0, [0, 0, 0], Complex::new(2.0, 0.0)).unwrap();
        let s = State::new(u, SpectralField::zeros(&g, 3), W0, 0.0).unwrap();
        let dt = adaptive_dt(&s, &config(1.0, 10.0));
        assert!((dt - 0.02).abs() < 1e-15, "dt = {dt}");
    }

    #[test]
    fn zero_horizon_returns_input() {
        let g = grid(8, TAU);
        let mut u = SpectralField::zeros(&g, 3);
        u.set_hermitian(1, [1, 0, 0], Complex::new(0.1, 0.0)).unwrap();
        let s = State::new(u, SpectralField::zeros(&g, 3), W0, 0.0).unwrap();
        struct Count(usize);
        impl Hooks<f64> for Count {
            fn on_sample(&mut self, _: &State<f64>) -> Result<()> {
                Ok(())
            }
            fn on_step(&mut self, _: &State<f64>, _: f64, _: f64) {
                self.0 += 1;
            }
        }
        let mut c = Count(0);
        let p = PhysicsParams::new(1.0, 1.0).unwrap();
        let out = integrate(s.clone(), &p, &config(0.0, 0.1), Some(0.5), &mut c).unwrap();
        assert_eq!(c.0, 0);
        assert_eq!(out.u_hat.coeffs(), s.u_hat.coeffs());
    }

    #[test]
    fn integrate_lands_on_samples() {
        let g = grid(8, TAU);
        let s = State::rest(&g, W0).unwrap();
        struct Times(Vec<f64>);
        impl Hooks<f64> for Times {
            fn on_sample(&mut self, s: &State<f64>) -> Result<()> {
                self.0.push(s.t);
                Ok(())
            }
        }
        let mut h = Times(vec![]);
        let p = PhysicsParams::new(1.0, 1.0).unwrap();
        integrate(s, &p, &config(1.1, 0.3), Some(0.25), &mut h).unwrap();
        assert_eq!(h.0, vec![0.25, 0.5, 0.75, 1.0, 1.1]);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = grid(8, TAU);
        let mut d = SpectralField::zeros(&g, 3);
        d.set_hermitian(0, [0, 0, 0], Complex::new(50.0, 0.0)).unwrap();
        let s = State::new(SpectralField::zeros(&g, 3), d, W0, 0.0).unwrap();
        let p = PhysicsParams::new(0.1, 1.0).unwrap();
        let mut state = s;
        let mut err = None;
        for _ in 0..20 {
            match step(&state, &p, 1.0) {
                Ok(next) => state = next,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        match err {
            Some(Error::BlowUp { dump, .. }) => assert!(dump.contains("first non-finite")),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(1.0, 0.1);
        assert!(c.validate().is_ok());
        c.cfl_number = 1.5;
        assert!(c.validate().is_err());
        c.cfl_number = 0.4;
        c.dt_max = 0.0;
        assert!(c.validate().is_err());
    }
}
