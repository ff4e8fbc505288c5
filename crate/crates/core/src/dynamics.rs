//! Right-hand side of the simplified nematic system
//!
//! ```text
//! u_t + u·∇u + ∇π = ν Δu − ∇·(∇d ⊙ ∇d),   ∇·u = 0
//! d_t + u·∇d      = Δd − f(d),            f(d) = (|d|² − 1) d / η²
//! ```
//!
//! assembled pseudo-spectrally. The diffusive terms are left out: the
//! integrating-factor stepper treats them exactly. The pressure never appears;
//! the momentum tendency is Leray-projected instead.
//!
//! The director is stored as the deviation `δ = d − w₀`, so `|d|² − 1` is
//! evaluated as `2 w₀·δ + |δ|²` without cancellation.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{
    derivative_symbol, forward_scalars, inner_spectral, inverse_scalars, leray_project, solenoidal_defect,
    RealField, SpectralField,
};
use crate::grid::Grid;
use crate::scalar::{compensated_sum, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams<T> {
    /// Ginzburg–Landau length scale.
    pub eta: T,
    /// Viscosity.
    pub nu: T,
    /// When false every advective, elastic and penalty term is dropped and
    /// the system reduces to two heat equations.
    pub nonlinear: bool,
}

impl<T: Real> PhysicsParams<T> {
    pub fn new(eta: T, nu: T) -> Result<Self> {
        let p = Self {
            eta,
            nu,
            nonlinear: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > T::zero()) || !self.eta.is_finite() {
            return Err(Error::Parameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.nu > T::zero()) || !self.nu.is_finite() {
            return Err(Error::Parameter(format!("nu must be > 0, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Velocity and director deviation in Fourier space at time `t`.
#[derive(Clone, Debug)]
pub struct State<T: Real> {
    pub u_hat: SpectralField<T>,
    /// Spectrum of `d − w₀`.
    pub d_hat: SpectralField<T>,
    pub w0: [T; 3],
    pub t: T,
}

#[derive(Clone, Debug)]
pub struct Tendency<T: Real> {
    pub du_hat: SpectralField<T>,
    pub dd_hat: SpectralField<T>,
}

impl<T: Real> State<T> {
    pub fn new(u_hat: SpectralField<T>, d_hat: SpectralField<T>, w0: [T; 3], t: T) -> Result<Self> {
        if u_hat.ncomp() != 3 || d_hat.ncomp() != 3 {
            return Err(Error::Structural("velocity and director need 3 components".into()));
        }
        if **u_hat.grid() != **d_hat.grid() {
            return Err(Error::Structural("velocity and director live on different grids".into()));
        }
        let norm = (w0[0] * w0[0] + w0[1] * w0[1] + w0[2] * w0[2]).sqrt();
        if (norm - T::one()).abs() > T::lit(1e3) * T::epsilon() {
            return Err(Error::Parameter(format!("w0 must be a unit vector, |w0| = {norm}")));
        }
        Ok(Self { u_hat, d_hat, w0, t })
    }

    /// `u = 0`, `d ≡ w₀`.
    pub fn rest(grid: &Arc<Grid<T>>, w0: [T; 3]) -> Result<Self> {
        Self::new(SpectralField::zeros(grid, 3), SpectralField::zeros(grid, 3), w0, T::zero())
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.u_hat.grid()
    }

    /// Largest mode-wise `|k·û|/(|k|‖û‖)`.
    pub fn solenoidal_defect(&self) -> T {
        solenoidal_defect(&self.u_hat)
    }

    pub fn all_finite(&self) -> bool {
        self.t.is_finite() && self.u_hat.all_finite() && self.d_hat.all_finite()
    }
}

/// Zeroes the mean (`m = 0`) mode of every component.
pub fn pin_mean<T: Real>(f: &mut SpectralField<T>) {
    let size = f.grid().size();
    for c in 0..f.ncomp() {
        f.coeffs_mut()[c * size] = Complex::new(T::zero(), T::zero());
    }
}

/// Pointwise `f(d) = (|d|² − 1) d / η²` for an absolute director field.
pub fn penalty_force<T: Real>(d: &RealField<T>, eta: T) -> RealField<T> {
    assert_eq!(d.ncomp(), 3, "director needs 3 components");
    let size = d.grid().size();
    let inv = T::one() / (eta * eta);
    let v = d.values();
    let mut out = vec![T::zero(); 3 * size];
    for i in 0..size {
        let (a, b, c) = (v[i], v[size + i], v[2 * size + i]);
        let s = (a * a + b * b + c * c - T::one()) * inv;
        out[i] = s * a;
        out[size + i] = s * b;
        out[2 * size + i] = s * c;
    }
    RealField::from_values(d.grid(), 3, out).expect("shape preserved")
}

/// Box quadrature of `F(d) = (|d|² − 1)² / (4η²)`.
pub fn penalty_energy<T: Real>(d: &RealField<T>, eta: T) -> T {
    assert_eq!(d.ncomp(), 3, "director needs 3 components");
    let grid = d.grid();
    let size = grid.size();
    let v = d.values();
    let weight = grid.volume() / T::lit(size as f64) / (T::lit(4.0) * eta * eta);
    weight
        * compensated_sum((0..size).map(|i| {
            let (a, b, c) = (v[i], v[size + i], v[2 * size + i]);
            let s = a * a + b * b + c * c - T::one();
            s * s
        }))
}

/// `|d|² − 1` for `d = w₀ + δ`.
#[inline]
pub(crate) fn unit_defect<T: Real>(w0: &[T; 3], dev: [T; 3]) -> T {
    let two = T::lit(2.0);
    two * (w0[0] * dev[0] + w0[1] * dev[1] + w0[2] * dev[2]) + dev[0] * dev[0] + dev[1] * dev[1] + dev[2] * dev[2]
}

/// Penalty energy evaluated from point values of the deviation `d − w₀`.
pub(crate) fn penalty_energy_dev<T: Real>(grid: &Grid<T>, dev: &[Vec<T>], w0: &[T; 3], eta: T) -> T {
    let size = grid.size();
    let weight = grid.volume() / T::lit(size as f64) / (T::lit(4.0) * eta * eta);
    weight
        * compensated_sum((0..size).map(|i| {
            let s = unit_defect(w0, [dev[0][i], dev[1][i], dev[2][i]]);
            s * s
        }))
}

/// Spectra of `∂_j f_c`, indexed `[j][c]`.
fn gradient_spectra<T: Real>(f: &SpectralField<T>) -> Vec<Vec<Vec<Complex<T>>>> {
    let grid = f.grid();
    let size = grid.size();
    (0..3)
        .map(|j| {
            let mut order = [0u32; 3];
            order[j] = 1;
            (0..f.ncomp())
                .map(|c| {
                    let comp = f.component(c);
                    (0..size)
                        .into_par_iter()
                        .map(|idx| {
                            let [a, b, d] = grid.unflat(idx);
                            if grid.is_nyquist_1d(a) || grid.is_nyquist_1d(b) || grid.is_nyquist_1d(d) {
                                return Complex::new(T::zero(), T::zero());
                            }
                            comp[idx] * derivative_symbol(grid.k_vec(idx), order)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[inline]
fn sym_slot(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    SYM_PAIRS.iter().position(|&p| p == (a, b)).unwrap()
}

/// `Σ_j ∂_j(∂_i d · ∂_j d)` from the six dealiased stress spectra.
fn stress_divergence<T: Real>(grid: &Arc<Grid<T>>, stress: &[Vec<Complex<T>>]) -> SpectralField<T> {
    let size = grid.size();
    let comps = (0..3)
        .map(|i| {
            (0..size)
                .into_par_iter()
                .map(|idx| {
                    let k = grid.k_vec(idx);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (j, &kj) in k.iter().enumerate() {
                        let t = stress[sym_slot(i, j)][idx];
                        acc = acc + Complex::new(-t.im * kj, t.re * kj);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    SpectralField::from_components(grid, comps)
}

/// Pseudo-spectral `Σ_j ∂_j(∇_i d · ∇_j d)` with two-thirds dealiasing. The
/// constant part of `d` drops out, so either `d̂` or `(d − w₀)^` may be given.
pub fn ericksen_stress_divergence<T: Real>(d_hat: &SpectralField<T>) -> SpectralField<T> {
    assert_eq!(d_hat.ncomp(), 3, "director needs 3 components");
    let grid = Arc::clone(d_hat.grid());
    let grads = gradient_spectra(d_hat);
    let refs: Vec<&[Complex<T>]> = grads.iter().flatten().map(|v| v.as_slice()).collect();
    let g = inverse_scalars(&grid, &refs);
    let stress_real = stress_products(&grid, &g);
    let srefs: Vec<&[T]> = stress_real.iter().map(|v| v.as_slice()).collect();
    let stress = forward_scalars(&grid, &srefs);
    stress_divergence(&grid, &stress)
}

/// Point values `∂_i d · ∂_j d` for the six symmetric pairs; `g` holds
/// `∂_j d_c` at position `3j + c`.
fn stress_products<T: Real>(grid: &Grid<T>, g: &[Vec<T>]) -> Vec<Vec<T>> {
    let size = grid.size();
    SYM_PAIRS
        .iter()
        .map(|&(i, j)| {
            (0..size)
                .into_par_iter()
                .map(|p| g[3 * i][p] * g[3 * j][p] + g[3 * i + 1][p] * g[3 * j + 1][p] + g[3 * i + 2][p] * g[3 * j + 2][p])
                .collect()
        })
        .collect()
}

/// Nonlinear tendencies of both equations, sharing one set of transforms.
pub fn tendency<T: Real>(state: &State<T>, params: &PhysicsParams<T>) -> Tendency<T> {
    let grid = Arc::clone(state.grid());
    if !params.nonlinear {
        return Tendency {
            du_hat: SpectralField::zeros(&grid, 3),
            dd_hat: SpectralField::zeros(&grid, 3),
        };
    }
    let size = grid.size();
    let grad_u = gradient_spectra(&state.u_hat);
    let grad_d = gradient_spectra(&state.d_hat);

    let mut spectra: Vec<&[Complex<T>]> = Vec::with_capacity(24);
    for c in 0..3 {
        spectra.push(state.u_hat.component(c));
    }
    for c in 0..3 {
        spectra.push(state.d_hat.component(c));
    }
    spectra.extend(grad_u.iter().flatten().map(|v| v.as_slice()));
    spectra.extend(grad_d.iter().flatten().map(|v| v.as_slice()));
    let real = inverse_scalars(&grid, &spectra);
    let (u, rest) = real.split_at(3);
    let (dev, rest) = rest.split_at(3);
    let (gu, gd) = rest.split_at(9);

    let w0 = state.w0;
    let inv_eta2 = T::one() / (params.eta * params.eta);

    // u·∇u, and u·∇d + f(d)
    let mut products: Vec<Vec<T>> = Vec::with_capacity(12);
    for c in 0..3 {
        products.push(
            (0..size)
                .into_par_iter()
                .map(|p| u[0][p] * gu[c][p] + u[1][p] * gu[3 + c][p] + u[2][p] * gu[6 + c][p])
                .collect(),
        );
    }
    for c in 0..3 {
        products.push(
            (0..size)
                .into_par_iter()
                .map(|p| {
                    let adv = u[0][p] * gd[c][p] + u[1][p] * gd[3 + c][p] + u[2][p] * gd[6 + c][p];
                    let s = unit_defect(&w0, [dev[0][p], dev[1][p], dev[2][p]]) * inv_eta2;
                    adv + s * (w0[c] + dev[c][p])
                })
                .collect(),
        );
    }
    products.extend(stress_products(&grid, gd));
    let prefs: Vec<&[T]> = products.iter().map(|v| v.as_slice()).collect();
    let mut hat = forward_scalars(&grid, &prefs);
    let stress = hat.split_off(6);
    let dd: Vec<Vec<Complex<T>>> = hat
        .split_off(3)
        .into_iter()
        .map(|c| c.into_iter().map(|z| -z).collect())
        .collect();
    let adv_u = hat;

    let div = stress_divergence(&grid, &stress);
    let mut du = SpectralField::from_components(&grid, adv_u);
    du.axpy(T::one(), &div);
    du.scale(-T::one());
    let mut du = leray_project(&du);
    pin_mean(&mut du);

    Tendency {
        du_hat: du,
        dd_hat: SpectralField::from_components(&grid, dd),
    }
}

/// `P[−𝓕(u·∇u) − ∇·(∇d ⊙ ∇d)]`, diffusion excluded.
pub fn momentum_rhs<T: Real>(state: &State<T>, params: &PhysicsParams<T>) -> SpectralField<T> {
    tendency(state, params).du_hat
}

/// `−𝓕(u·∇d) − 𝓕(f(d))`, diffusion excluded.
pub fn director_rhs<T: Real>(state: &State<T>, params: &PhysicsParams<T>) -> SpectralField<T> {
    tendency(state, params).dd_hat
}

/// Instantaneous rate of `½‖u‖² + ½‖∇d‖² + ∫F(d)` under the full
/// semi-discrete dynamics (diffusion included).
pub fn energy_rate<T: Real>(state: &State<T>, params: &PhysicsParams<T>) -> T {
    let grid = Arc::clone(state.grid());
    let size = grid.size();
    let Tendency { mut du_hat, mut dd_hat } = tendency(state, params);
    let k2 = grid.k_sq_table();
    for c in 0..3 {
        let u = state.u_hat.component(c);
        let d = state.d_hat.component(c);
        let du = du_hat.component_mut(c);
        for i in 0..size {
            du[i] = du[i] - u[i] * (params.nu * k2[i]);
        }
        let dd = dd_hat.component_mut(c);
        for i in 0..size {
            dd[i] = dd[i] - d[i] * k2[i];
        }
    }
    // variational derivative −Δd + f(d)
    let mut var = state.d_hat.clone();
    for c in 0..3 {
        let comp = var.component_mut(c);
        for i in 0..size {
            comp[i] = comp[i] * k2[i];
        }
    }
    if params.nonlinear {
        let refs: Vec<&[Complex<T>]> = (0..3).map(|c| state.d_hat.component(c)).collect();
        let dev = inverse_scalars(&grid, &refs);
        let inv_eta2 = T::one() / (params.eta * params.eta);
        let w0 = state.w0;
        let force: Vec<Vec<T>> = (0..3)
            .map(|c| {
                (0..size)
                    .map(|p| {
                        let s = unit_defect(&w0, [dev[0][p], dev[1][p], dev[2][p]]) * inv_eta2;
                        s * (w0[c] + dev[c][p])
                    })
                    .collect()
            })
            .collect();
        let frefs: Vec<&[T]> = force.iter().map(|v| v.as_slice()).collect();
        let fhat = SpectralField::from_components(&grid, forward_scalars(&grid, &frefs));
        var.axpy(T::one(), &fhat);
    }
    inner_spectral(&state.u_hat, &du_hat) + inner_spectral(&var, &dd_hat)
}
