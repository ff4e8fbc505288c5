use std::f64::consts::PI;
use std::sync::Arc;

use lcd_spectra::initdata::{Phases, Profile};
use lcd_spectra::{
    energy_rate, fit_power_law, heat_oracle_l2, integrate, l2_norm_spectral, make_director, make_velocity, step_with,
    total_energy, Grid, Hooks, InitConfig, NormSeries, PhysicsParams, RadialProfile, Scheme, SpectralField, State,
    StepperConfig,
};

fn state(n: usize, length: f64, init: &InitConfig) -> State<f64> {
    let g = Arc::new(Grid::new(n, length).unwrap());
    let u = make_velocity(init, &g).unwrap();
    let d = make_director(init, &g).unwrap();
    State::new(u, d.d_hat, init.w0, 0.0).unwrap()
}

fn lively(seed: u64) -> InitConfig {
    InitConfig {
        seed,
        u_amplitude: 0.6,
        u_shell: (0.0, 1.0),
        d_perturb_amplitude: 0.3,
        d_perturb_band: (0.0, 1.0),
        ..InitConfig::default()
    }
}

fn stepper(dt_max: f64, t_end: f64) -> StepperConfig<f64> {
    StepperConfig {
        dt_init: dt_max,
        cfl_number: 1.0,
        dt_max,
        t_end,
        scheme: Scheme::IfRk2,
    }
}

struct Samples(Vec<State<f64>>);

impl Hooks<f64> for Samples {
    fn on_sample(&mut self, s: &State<f64>) -> lcd_spectra::Result<()> {
        self.0.push(s.clone());
        Ok(())
    }
}

#[test]
fn linear_modes_follow_the_heat_semigroup() {
    let s0 = state(16, 2.0 * PI * 3.0, &lively(3));
    let g = Arc::clone(s0.grid());
    let t_end = 7.3;
    for nu in [1.0, 0.7] {
        let params = PhysicsParams::new(1.0, nu).unwrap().linear();
        for (dt, cadence) in [(0.5, None), (0.137, Some(1.0)), (0.031, Some(0.25)), (7.3, None)] {
            let end = integrate(s0.clone(), &params, &stepper(dt, t_end), cadence, &mut Samples(vec![])).unwrap();
            assert_eq!(end.t, t_end);
            for idx in 0..g.size() {
                let k2 = g.k_sq(idx);
                for (got, init, rate) in [(&end.u_hat, &s0.u_hat, nu), (&end.d_hat, &s0.d_hat, 1.0)] {
                    for c in 0..3 {
                        let want = init.component(c)[idx] * (-rate * k2 * t_end).exp();
                        let err = (got.component(c)[idx] - want).norm();
                        assert!(err <= 1e-12 * want.norm(), "dt {dt} mode {:?}: {err:e}", g.mode_of_index(idx));
                    }
                }
            }
        }
    }
}

#[test]
fn linear_decay_exponent_matches_the_heat_oracle() {
    let (k_max, c) = (0.65, 0.05);
    let init = InitConfig {
        seed: 1,
        u_amplitude: c,
        u_shell: (0.0, k_max),
        u_profile: Profile::Flat,
        u_phases: Phases::Localized,
        d_perturb_band: (0.0, k_max),
        ..InitConfig::default()
    };
    let s0 = state(40, 40.0 * PI, &init);
    let params = PhysicsParams::new(1.0, 1.0).unwrap().linear();
    let mut rec = Samples(vec![]);
    integrate(s0, &params, &stepper(0.5, 60.0), Some(1.0), &mut rec).unwrap();
    let window = (10.0 / (k_max * k_max), 60.0);
    let sim: Vec<(f64, f64)> = rec.0.iter().map(|s| (s.t, l2_norm_spectral(&s.u_hat).powi(2))).collect();
    let profile = RadialProfile::Flat { c, k_max };
    let oracle: Vec<(f64, f64)> = rec.0.iter().map(|s| (s.t, heat_oracle_l2(&profile, s.t).unwrap().powi(2))).collect();
    let a_sim = fit_power_law(&NormSeries::new("l2_u_sq", "sim", sim).unwrap(), window).unwrap().alpha;
    let a_orc = fit_power_law(&NormSeries::new("l2_u_sq", "oracle", oracle).unwrap(), window).unwrap().alpha;
    assert!((a_sim - a_orc).abs() <= 0.05, "simulation {a_sim} vs oracle {a_orc}");
    assert!((a_orc - 1.5).abs() <= 0.05, "oracle {a_orc}");
}

#[test]
fn energy_never_grows() {
    for seed in 0..4 {
        let s = state(16, 2.0 * PI * 4.0, &lively(seed));
        let params = PhysicsParams::new(1.0, 1.0).unwrap();
        let rate = energy_rate(&s, &params);
        assert!(rate < 0.0, "seed {seed}: rate {rate:e}");
    }
    let params = PhysicsParams::new(1.0, 1.0).unwrap();
    let mut rec = Samples(vec![]);
    integrate(state(16, 2.0 * PI * 4.0, &lively(9)), &params, &stepper(0.05, 3.0), Some(0.25), &mut rec).unwrap();
    let e: Vec<f64> = rec.0.iter().map(|s| total_energy(s, &params).basic).collect();
    for w in e.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "{} -> {}", w[0], w[1]);
    }
    assert!(e.last().unwrap() < &(0.9 * e[0]));
}

fn distance(a: &State<f64>, b: &State<f64>) -> f64 {
    let diff = |x: &SpectralField<f64>, y: &SpectralField<f64>| {
        let mut d = x.clone();
        d.axpy(-1.0, y);
        l2_norm_spectral(&d).powi(2)
    };
    (diff(&a.u_hat, &b.u_hat) + diff(&a.d_hat, &b.d_hat)).sqrt()
}

fn observed_order(scheme: Scheme) -> f64 {
    let s0 = state(16, 2.0 * PI * 4.0, &lively(5));
    let params = PhysicsParams::new(1.0, 1.0).unwrap();
    let t_end = 2.0;
    let run = |steps: usize| {
        let dt = t_end / steps as f64;
        (0..steps).fold(s0.clone(), |s, _| step_with(&s, &params, dt, scheme).unwrap())
    };
    let (a, b, c) = (run(10), run(20), run(40));
    (distance(&a, &b) / distance(&b, &c)).log2()
}

#[test]
fn if_rk2_is_second_order() {
    let p = observed_order(Scheme::IfRk2);
    assert!((p - 2.0).abs() <= 0.2, "order {p}");
}

#[test]
fn if_euler_is_first_order() {
    let p = observed_order(Scheme::IfEuler);
    assert!((p - 1.0).abs() <= 0.2, "order {p}");
}
