//! Admissible initial data: small solenoidal velocities and unit-length
//! directors relaxing to a constant `w₀`.
//!
//! Amplitudes are given as continuum transform magnitudes in the unitary
//! convention `û(ξ) = (2π)^{-3/2} ∫ u(x) e^{-iξ·x} dx`, so a flat profile of
//! height `c` on `|ξ| ≤ K` has `‖u‖²_{L²} ≈ c²·(4/3)πK³` independent of the
//! box. A coefficient on the grid is `c·(2π)^{3/2}/L³`.

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{forward_transform, inverse_transform, RealField, SpectralField};
use crate::grid::Grid;
use crate::scalar::{compensated_sum, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Flat,
    /// `exp(-(|k|/width)²)`
    Gaussian,
}

/// How mode phases are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phases {
    /// Independent random phase and polarization per mode.
    #[default]
    Random,
    /// Coherent phases of a single blob at a random grid point with a random
    /// polarization (integrable data, `û(ξ) → const` as `ξ → 0`).
    Localized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub u_amplitude: f64,
    /// Wavenumber band `(k_lo, k_hi]`.
    pub u_shell: (f64, f64),
    #[serde(default)]
    pub u_profile: Profile,
    #[serde(default)]
    pub u_phases: Phases,
    #[serde(default)]
    pub d_perturb_amplitude: f64,
    pub d_perturb_band: (f64, f64),
    #[serde(default)]
    pub d_phases: Phases,
    /// Gaussian width shared by both profiles.
    #[serde(default = "one")]
    pub profile_width: f64,
    #[serde(default = "default_w0")]
    pub w0: [f64; 3],
    #[serde(default = "yes")]
    pub normalize_d: bool,
    /// Penalty width; `None` defers to the physics parameters.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Bound on the box-normalized [`smallness_report`], i.e. divided by `L³`.
    #[serde(default = "default_budget")]
    pub smallness_budget: f64,
}

fn default_budget() -> f64 {
    1e-2
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_w0() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            u_amplitude: 0.0,
            u_shell: (0.0, 0.5),
            u_profile: Profile::Flat,
            u_phases: Phases::Random,
            d_perturb_amplitude: 0.0,
            d_perturb_band: (0.0, 0.5),
            d_phases: Phases::Random,
            profile_width: 1.0,
            w0: default_w0(),
            normalize_d: true,
            eta: None,
            smallness_budget: default_budget(),
        }
    }
}

impl InitConfig {
    pub fn validate<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        if !(self.u_amplitude >= 0.0) || !(self.d_perturb_amplitude >= 0.0) {
            return Err(Error::Parameter("amplitudes must be >= 0".into()));
        }
        if !(self.profile_width > 0.0) {
            return Err(Error::Parameter("profile_width must be > 0".into()));
        }
        if !(self.smallness_budget > 0.0) {
            return Err(Error::Parameter("smallness_budget must be > 0".into()));
        }
        if self.eta.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Parameter("eta must be > 0".into()));
        }
        let n = self.w0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("w0 must be a unit vector, |w0| = {n}")));
        }
        check_band(grid, "u_shell", self.u_shell)?;
        check_band(grid, "d_perturb_band", self.d_perturb_band)
    }
}

fn check_band<T: Real>(grid: &Grid<T>, name: &str, band: (f64, f64)) -> Result<()> {
    let (lo, hi) = band;
    let kmax = grid.k_max_dealiased().as_f64();
    if !(lo >= 0.0) || !(hi > lo) {
        return Err(Error::Parameter(format!("{name} must satisfy 0 <= k_lo < k_hi, got {band:?}")));
    }
    if hi > kmax * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "{name} upper edge {hi} exceeds the dealiased range {kmax}"
        )));
    }
    Ok(())
}

fn profile_value(profile: Profile, width: f64, k: f64) -> f64 {
    match profile {
        Profile::Flat => 1.0,
        Profile::Gaussian => (-(k / width) * (k / width)).exp(),
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Retained, non-mean modes with `k_lo < |k| <= k_hi`, one representative
/// per `±m` pair, in increasing flat-index order.
fn band_modes<T: Real>(grid: &Grid<T>, band: (f64, f64)) -> Vec<usize> {
    (1..grid.size())
        .filter(|&idx| {
            let k = grid.k_sq(idx).as_f64().sqrt();
            grid.keeps(idx) && idx < grid.conjugate_index(idx) && k > band.0 && k <= band.1 * (1.0 + 1e-12)
        })
        .collect()
}

struct SpectrumShape {
    amplitude: f64,
    band: (f64, f64),
    profile: Profile,
    width: f64,
    phases: Phases,
    solenoidal: bool,
}

/// Shared spectral generator; `stream` separates velocity and director draws.
fn spectrum<T: Real>(grid: &Arc<Grid<T>>, shape: &SpectrumShape, seed: u64, stream: u64) -> Result<SpectralField<T>> {
    let modes = band_modes(grid, shape.band);
    if modes.is_empty() {
        return Err(Error::Parameter(format!("band {:?} contains no resolved mode", shape.band)));
    }
    let mut out = SpectralField::zeros(grid, 3);
    if shape.amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let size = grid.size();
    let coeff_scale = shape.amplitude * std::f64::consts::TAU.powf(1.5) / grid.volume().as_f64();

    let localized = match shape.phases {
        Phases::Localized => {
            let pol = unit_vector(&mut rng);
            let center = grid.position(rng.gen_range(0..size)).map(|v| v.as_f64());
            Some((pol, center))
        }
        Phases::Random => None,
    };

    for idx in modes {
        let kv = grid.k_vec(idx).map(|v| v.as_f64());
        let k2 = kv.iter().map(|v| v * v).sum::<f64>();
        let amp = coeff_scale * profile_value(shape.profile, shape.width, k2.sqrt());
        let vec: [Complex<f64>; 3] = match localized {
            Some((pol, center)) => {
                let mut p = pol;
                if shape.solenoidal {
                    let s = (kv[0] * p[0] + kv[1] * p[1] + kv[2] * p[2]) / k2;
                    for j in 0..3 {
                        p[j] -= s * kv[j];
                    }
                }
                // rms of |P_k a| over directions is sqrt(2/3)
                let norm = if shape.solenoidal { 1.5f64.sqrt() } else { 1.0 };
                let phase = -(kv[0] * center[0] + kv[1] * center[1] + kv[2] * center[2]);
                let e = Complex::from_polar(amp * norm, phase);
                [e * p[0], e * p[1], e * p[2]]
            }
            None => loop {
                let mut z = [0usize; 3].map(|_| Complex::new(normal(&mut rng), normal(&mut rng)));
                if shape.solenoidal {
                    let s = (z[0] * kv[0] + z[1] * kv[1] + z[2] * kv[2]) / k2;
                    for j in 0..3 {
                        z[j] -= s * kv[j];
                    }
                }
                let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if n > 1e-6 {
                    break z.map(|c| c * (amp / n));
                }
            },
        };
        let cidx = grid.conjugate_index(idx);
        for (j, v) in vec.into_iter().enumerate() {
            let v = Complex::new(T::lit(v.re), T::lit(v.im));
            out.coeffs_mut()[j * size + idx] = v;
            out.coeffs_mut()[j * size + cidx] = v.conj();
        }
    }
    Ok(out)
}

/// Random solenoidal, mean-free velocity spectrum.
pub fn make_velocity<T: Real>(config: &InitConfig, grid: &Arc<Grid<T>>) -> Result<SpectralField<T>> {
    config.validate(grid)?;
    let shape = SpectrumShape {
        amplitude: config.u_amplitude,
        band: config.u_shell,
        profile: config.u_profile,
        width: config.profile_width,
        phases: config.u_phases,
        solenoidal: true,
    };
    let u = spectrum(grid, &shape, config.seed, 0)?;
    let mut u = crate::field::leray_project(&u);
    crate::dynamics::pin_mean(&mut u);
    Ok(u)
}

/// The unit-amplitude perturbation `φ` that [`make_director`] scales by `ε`.
pub fn director_perturbation<T: Real>(config: &InitConfig, grid: &Arc<Grid<T>>) -> Result<RealField<T>> {
    let shape = SpectrumShape {
        amplitude: 1.0,
        band: config.d_perturb_band,
        profile: config.u_profile,
        width: config.profile_width,
        phases: config.d_phases,
        solenoidal: false,
    };
    inverse_transform(&spectrum(grid, &shape, config.seed, 1)?)
}

#[derive(Clone, Debug)]
pub struct DirectorInit<T: Real> {
    /// Dealiased spectrum of `d₀ − w₀`.
    pub d_hat: SpectralField<T>,
    /// Point values of `d₀` as constructed, before dealiasing.
    pub d0: RealField<T>,
}

/// `d₀ = (w₀ + εφ)/|w₀ + εφ|` (or `w₀ + εφ` without normalization).
pub fn make_director<T: Real>(config: &InitConfig, grid: &Arc<Grid<T>>) -> Result<DirectorInit<T>> {
    config.validate(grid)?;
    let phi = director_perturbation(config, grid)?;
    assemble_director(&phi, config.w0, config.d_perturb_amplitude, config.normalize_d)
}

fn assemble_director<T: Real>(phi: &RealField<T>, w0: [f64; 3], eps: f64, normalize: bool) -> Result<DirectorInit<T>> {
    let grid = phi.grid();
    let size = grid.size();
    let w0 = w0.map(T::lit);
    let eps = T::lit(eps);
    let mut dev = vec![T::zero(); 3 * size];
    let mut min_norm = f64::INFINITY;
    for i in 0..size {
        let p = [phi.component(0)[i], phi.component(1)[i], phi.component(2)[i]];
        let e = [eps * p[0], eps * p[1], eps * p[2]];
        if normalize {
            // |w0 + e|² − 1 without cancellation
            let excess = T::lit(2.0) * (w0[0] * e[0] + w0[1] * e[1] + w0[2] * e[2]) + e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
            let norm = (T::one() + excess).sqrt();
            min_norm = min_norm.min(norm.as_f64());
            // 1/n − 1 = −excess / (n (1 + n))
            let shrink = -excess / (norm * (T::one() + norm));
            for j in 0..3 {
                dev[j * size + i] = e[j] / norm + w0[j] * shrink;
            }
        } else {
            for j in 0..3 {
                dev[j * size + i] = e[j];
            }
        }
    }
    if normalize && min_norm < 0.1 {
        return Err(Error::Amplitude { min_norm });
    }
    let dev = RealField::from_values(grid, 3, dev)?;
    let d_hat = forward_transform(&dev)?;
    let mut d0 = dev;
    for j in 0..3 {
        let s = j * size;
        for v in &mut d0.values_mut()[s..s + size] {
            *v = *v + w0[j];
        }
    }
    Ok(DirectorInit { d_hat, d0 })
}

/// `‖u₀‖²_{H¹} + ‖d₀ − w₀‖²_{H²}` with `‖f‖²_{H^m} = Σ_{j≤m} ‖D^j f‖²`.
pub fn smallness_report<T: Real>(u0: &SpectralField<T>, d0_dev: &SpectralField<T>) -> T {
    let grid = u0.grid();
    let k2 = grid.k_sq_table();
    let size = grid.size();
    let weighted = |f: &SpectralField<T>, m: i32| {
        compensated_sum((0..f.ncomp()).flat_map(|c| {
            let comp = f.component(c);
            (0..size).map(move |i| {
                let w = (0..=m).fold(T::zero(), |acc, j| acc + k2[i].powi(j));
                comp[i].norm_sqr() * w
            })
        }))
    };
    grid.volume() * (weighted(u0, 1) + weighted(d0_dev, 2))
}
