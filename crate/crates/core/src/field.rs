//! Real- and Fourier-space fields on a [`Grid`] and the spectral operators
//! acting on them.
//!
//! Forward transforms carry the `1/N³` factor, so a coefficient approximates
//! the Fourier-series coefficient `(1/L³)∫ f(x) e^{-ik·x} dx` independently of
//! the resolution. Every spectral field is kept Hermitian-symmetric and
//! two-thirds dealiased.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Direction;
use crate::grid::Grid;
use crate::scalar::{compensated_sum, Real};

/// Fourier coefficients of an `ncomp`-component real field, component-major.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Arc<Grid<T>>,
    ncomp: usize,
    coeffs: Vec<Complex<T>>,
}

/// Point values of an `ncomp`-component real field, component-major.
#[derive(Clone, Debug)]
pub struct RealField<T: Real> {
    grid: Arc<Grid<T>>,
    ncomp: usize,
    values: Vec<T>,
}

#[inline]
fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>, ncomp: usize) -> Self {
        Self {
            grid: Arc::clone(grid),
            ncomp,
            coeffs: vec![czero(); ncomp * grid.size()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid<T>>, ncomp: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if ncomp == 0 || coeffs.len() != ncomp * grid.size() {
            return Err(Error::Structural(format!(
                "expected {} coefficients for {} component(s), got {}",
                ncomp * grid.size(),
                ncomp,
                coeffs.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            ncomp,
            coeffs,
        })
    }

    pub(crate) fn from_components(grid: &Arc<Grid<T>>, comps: Vec<Vec<Complex<T>>>) -> Self {
        let ncomp = comps.len();
        let mut coeffs = Vec::with_capacity(ncomp * grid.size());
        for c in comps {
            debug_assert_eq!(c.len(), grid.size());
            coeffs.extend(c);
        }
        Self {
            grid: Arc::clone(grid),
            ncomp,
            coeffs,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex<T>] {
        let s = self.grid.size();
        &self.coeffs[c * s..(c + 1) * s]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        let s = self.grid.size();
        &mut self.coeffs[c * s..(c + 1) * s]
    }

    /// Coefficient of component `c` at integer mode `m` (zero if unrepresentable).
    pub fn get(&self, c: usize, m: [i64; 3]) -> Complex<T> {
        self.grid
            .index_of_mode(m)
            .map_or(czero(), |idx| self.component(c)[idx])
    }

    /// Sets mode `m` to `value` and mode `-m` to its conjugate.
    pub fn set_hermitian(&mut self, c: usize, m: [i64; 3], value: Complex<T>) -> Result<()> {
        let grid = Arc::clone(&self.grid);
        let idx = grid
            .index_of_mode(m)
            .ok_or_else(|| Error::Parameter(format!("mode {m:?} not representable")))?;
        let cidx = grid.conjugate_index(idx);
        let comp = self.component_mut(c);
        if idx == cidx {
            comp[idx] = Complex::new(value.re, T::zero());
        } else {
            comp[idx] = value;
            comp[cidx] = value.conj();
        }
        Ok(())
    }

    pub fn scale(&mut self, s: T) {
        self.coeffs.par_iter_mut().for_each(|c| *c = *c * s);
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .par_iter_mut()
            .zip(other.coeffs.par_iter())
            .for_each(|(a, b)| *a = *a + *b * s);
    }

    /// Zeroes every mode outside the two-thirds mask.
    pub fn dealias(&mut self) {
        let grid = Arc::clone(&self.grid);
        let size = grid.size();
        self.coeffs.par_chunks_mut(size).for_each(|comp| {
            for (c, &keep) in comp.iter_mut().zip(grid.mask()) {
                if !keep {
                    *c = czero();
                }
            }
        });
    }

    pub fn is_dealiased(&self) -> bool {
        let mask = self.grid.mask();
        self.coeffs
            .chunks(self.grid.size())
            .all(|comp| comp.iter().zip(mask).all(|(c, &keep)| keep || *c == czero()))
    }

    /// Largest `|c(m) - conj(c(-m))|` over all modes and components.
    pub fn hermitian_defect(&self) -> T {
        let grid = &self.grid;
        self.coeffs
            .chunks(grid.size())
            .flat_map(|comp| {
                (0..comp.len()).map(move |i| (comp[i] - comp[grid.conjugate_index(i)].conj()).norm())
            })
            .fold(T::zero(), T::max)
    }

    /// Replaces each coefficient by the Hermitian part `(c(m) + conj c(-m))/2`.
    pub fn symmetrize(&mut self) {
        let grid = Arc::clone(&self.grid);
        let half = T::lit(0.5);
        self.coeffs.par_chunks_mut(grid.size()).for_each(|comp| {
            let src = comp.to_vec();
            for (i, c) in comp.iter_mut().enumerate() {
                *c = (src[i] + src[grid.conjugate_index(i)].conj()) * half;
            }
        });
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// `Σ |c|²` over all modes and components, compensated.
    pub fn coeff_energy(&self) -> T {
        compensated_sum(self.coeffs.iter().map(|c| c.norm_sqr()))
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl<T: Real> RealField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>, ncomp: usize) -> Self {
        Self {
            grid: Arc::clone(grid),
            ncomp,
            values: vec![T::zero(); ncomp * grid.size()],
        }
    }

    pub fn from_values(grid: &Arc<Grid<T>>, ncomp: usize, values: Vec<T>) -> Result<Self> {
        if ncomp == 0 || values.len() != ncomp * grid.size() {
            return Err(Error::Structural(format!(
                "expected {} point values for {} component(s), got {}",
                ncomp * grid.size(),
                ncomp,
                values.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            ncomp,
            values,
        })
    }

    pub(crate) fn from_components(grid: &Arc<Grid<T>>, comps: Vec<Vec<T>>) -> Self {
        let ncomp = comps.len();
        let mut values = Vec::with_capacity(ncomp * grid.size());
        for c in comps {
            values.extend(c);
        }
        Self {
            grid: Arc::clone(grid),
            ncomp,
            values,
        }
    }

    /// Samples `f(component, x)` at every grid point.
    pub fn from_fn<F>(grid: &Arc<Grid<T>>, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, [T; 3]) -> T,
    {
        let size = grid.size();
        let mut values = Vec::with_capacity(ncomp * size);
        for c in 0..ncomp {
            for idx in 0..size {
                values.push(f(c, grid.position(idx)));
            }
        }
        Self {
            grid: Arc::clone(grid),
            ncomp,
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn component(&self, c: usize) -> &[T] {
        let s = self.grid.size();
        &self.values[c * s..(c + 1) * s]
    }

    /// Euclidean magnitude across components at point `idx`.
    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> T {
        let s = self.grid.size();
        (0..self.ncomp)
            .map(|c| {
                let v = self.values[c * s + idx];
                v * v
            })
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_magnitude(&self) -> T {
        (0..self.grid.size())
            .map(|i| self.magnitude_at(i))
            .fold(T::zero(), T::max)
    }
}

// ---------------------------------------------------------------------------
// batched scalar transforms

/// Inverse-transforms Hermitian scalar spectra two at a time.
pub(crate) fn inverse_scalars<T: Real>(grid: &Grid<T>, spectra: &[&[Complex<T>]]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let mut buf: Vec<Complex<T>> = match pair {
            [a, b] => a
                .par_iter()
                .zip(b.par_iter())
                .map(|(x, y)| Complex::new(x.re - y.im, x.im + y.re))
                .collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        grid.fft().process(&mut buf, Direction::Inverse);
        out.push(buf.par_iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(buf.par_iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Forward-transforms real scalar fields two at a time; output is normalized,
/// exactly Hermitian and dealiased.
pub(crate) fn forward_scalars<T: Real>(grid: &Grid<T>, fields: &[&[T]]) -> Vec<Vec<Complex<T>>> {
    let size = grid.size();
    let norm = T::one() / T::lit(size as f64);
    let half = T::lit(0.5) * norm;
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let mut buf: Vec<Complex<T>> = match pair {
            [a, b] => a
                .par_iter()
                .zip(b.par_iter())
                .map(|(&x, &y)| Complex::new(x, y))
                .collect(),
            [a] => a.par_iter().map(|&x| Complex::new(x, T::zero())).collect(),
            _ => unreachable!(),
        };
        grid.fft().process(&mut buf, Direction::Forward);
        let mask = grid.mask();
        let first: Vec<Complex<T>> = (0..size)
            .into_par_iter()
            .map(|i| {
                if !mask[i] {
                    return czero();
                }
                (buf[i] + buf[grid.conjugate_index(i)].conj()) * half
            })
            .collect();
        if pair.len() == 2 {
            let second: Vec<Complex<T>> = (0..size)
                .into_par_iter()
                .map(|i| {
                    if !mask[i] {
                        return czero();
                    }
                    let d = buf[i] - buf[grid.conjugate_index(i)].conj();
                    // d / (2i)
                    Complex::new(d.im, -d.re) * half
                })
                .collect();
            out.push(first);
            out.push(second);
        } else {
            out.push(first);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// public operators

/// Forward transform with `1/N³` normalization; result is dealiased.
pub fn forward_transform<T: Real>(f: &RealField<T>) -> Result<SpectralField<T>> {
    let grid = f.grid();
    if f.values.len() != f.ncomp * grid.size() {
        return Err(Error::Structural("field length does not match grid".into()));
    }
    let comps: Vec<&[T]> = (0..f.ncomp).map(|c| f.component(c)).collect();
    Ok(SpectralField::from_components(grid, forward_scalars(grid, &comps)))
}

/// Inverse transform to point values. Rejects spectra whose Hermitian defect
/// exceeds the round-off tolerance relative to the largest coefficient.
pub fn inverse_transform<T: Real>(f: &SpectralField<T>) -> Result<RealField<T>> {
    let grid = f.grid();
    if f.coeffs.len() != f.ncomp * grid.size() {
        return Err(Error::Structural("spectrum length does not match grid".into()));
    }
    let scale = f.max_abs();
    let defect = f.hermitian_defect();
    let tol = T::transform_tol() * scale;
    if defect > tol {
        return Err(Error::Symmetry {
            defect: defect.as_f64(),
            tol: tol.as_f64(),
        });
    }
    Ok(inverse_unchecked(f))
}

pub(crate) fn inverse_unchecked<T: Real>(f: &SpectralField<T>) -> RealField<T> {
    let grid = f.grid();
    let comps: Vec<&[Complex<T>]> = (0..f.ncomp).map(|c| f.component(c)).collect();
    RealField::from_components(grid, inverse_scalars(grid, &comps))
}

/// Multiplier `Π_j (i k_j)^{a_j}` for one mode.
#[inline]
pub(crate) fn derivative_symbol<T: Real>(k: [T; 3], order: [u32; 3]) -> Complex<T> {
    let mut mag = T::one();
    for j in 0..3 {
        mag = mag * k[j].powi(order[j] as i32);
    }
    match (order[0] + order[1] + order[2]) % 4 {
        0 => Complex::new(mag, T::zero()),
        1 => Complex::new(T::zero(), mag),
        2 => Complex::new(-mag, T::zero()),
        _ => Complex::new(T::zero(), -mag),
    }
}

/// Applies `∂^a` to every component. Nyquist modes are zeroed for odd total
/// order.
pub fn spectral_derivative<T: Real>(f: &SpectralField<T>, order: [u32; 3]) -> SpectralField<T> {
    let grid = Arc::clone(f.grid());
    let odd = (order[0] + order[1] + order[2]) % 2 == 1;
    let size = grid.size();
    let mut out = f.clone();
    out.coeffs.par_chunks_mut(size).for_each(|comp| {
        for (idx, c) in comp.iter_mut().enumerate() {
            if odd {
                let [a, b, d] = grid.unflat(idx);
                if grid.is_nyquist_1d(a) || grid.is_nyquist_1d(b) || grid.is_nyquist_1d(d) {
                    *c = czero();
                    continue;
                }
            }
            *c = *c * derivative_symbol(grid.k_vec(idx), order);
        }
    });
    out
}

/// Relative divergence level below which a mode counts as already solenoidal.
fn solenoidal_threshold<T: Real>() -> T {
    T::lit(32.0) * T::epsilon()
}

/// Removes `k (k·c)/|k|²` from every nonzero mode of a 3-component field.
///
/// A mode whose divergence is already at round-off level is left untouched,
/// which makes the projection exactly idempotent.
pub fn leray_project<T: Real>(f: &SpectralField<T>) -> SpectralField<T> {
    assert_eq!(f.ncomp(), 3, "leray projection needs a 3-component field");
    let grid = Arc::clone(f.grid());
    let size = grid.size();
    let (c0, rest) = f.coeffs.split_at(size);
    let (c1, c2) = rest.split_at(size);
    let projected: Vec<[Complex<T>; 3]> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let mut c = [c0[idx], c1[idx], c2[idx]];
            let k2 = grid.k_sq(idx);
            if k2 == T::zero() {
                return c;
            }
            let k = grid.k_vec(idx);
            let kn = k2.sqrt();
            let tol = solenoidal_threshold::<T>();
            let c_in = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
            for _ in 0..4 {
                let div = c[0] * k[0] + c[1] * k[1] + c[2] * k[2];
                let cn = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
                if div.norm() <= tol * kn * cn {
                    break;
                }
                let s = div / k2;
                for j in 0..3 {
                    c[j] = c[j] - s * k[j];
                }
                // a pure gradient leaves only round-off behind
                let left = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
                if left <= tol * c_in {
                    return [czero(); 3];
                }
            }
            c
        })
        .collect();
    let mut out = SpectralField::zeros(&grid, 3);
    for (idx, c) in projected.into_iter().enumerate() {
        for (j, v) in c.into_iter().enumerate() {
            out.coeffs[j * size + idx] = v;
        }
    }
    out
}

/// Largest `|k·c(m)| / (|k| ‖c‖)` over nonzero modes, with `‖c‖` the
/// coefficient-space norm of the whole field.
pub fn solenoidal_defect<T: Real>(f: &SpectralField<T>) -> T {
    let grid = f.grid();
    let total = f.coeff_energy().sqrt();
    if total == T::zero() {
        return T::zero();
    }
    let size = grid.size();
    (1..size)
        .map(|idx| {
            let k = grid.k_vec(idx);
            let div = f.coeffs[idx] * k[0] + f.coeffs[size + idx] * k[1] + f.coeffs[2 * size + idx] * k[2];
            div.norm() / grid.k_sq(idx).sqrt()
        })
        .fold(T::zero(), T::max)
        / total
}

/// `(L³ Σ |c|²)^{1/2}`, the box L² norm via Parseval.
pub fn l2_norm_spectral<T: Real>(f: &SpectralField<T>) -> T {
    (f.grid().volume() * f.coeff_energy()).sqrt()
}

/// `L³ Σ Re(conj(a)·b)`, the box L² inner product via Parseval.
pub fn inner_spectral<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>) -> T {
    assert_eq!(a.coeffs.len(), b.coeffs.len());
    a.grid().volume()
        * compensated_sum(
            a.coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x.re * y.re + x.im * y.im),
        )
}

/// Lebesgue exponent for [`lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent<T> {
    Finite(T),
    Infinity,
}

/// Grid quadrature of `‖f‖_{L^p}` using the pointwise vector magnitude.
pub fn lp_norm<T: Real>(f: &RealField<T>, p: Exponent<T>) -> Result<T> {
    let grid = f.grid();
    match p {
        Exponent::Infinity => Ok(f.max_magnitude()),
        Exponent::Finite(p) => {
            if !(p >= T::one()) || !p.is_finite() {
                return Err(Error::Parameter(format!("L^p exponent must be >= 1, got {p}")));
            }
            let weight = grid.volume() / T::lit(grid.size() as f64);
            let two = T::lit(2.0);
            let sum = compensated_sum((0..grid.size()).map(|i| {
                let m = f.magnitude_at(i);
                if p == two {
                    m * m
                } else {
                    m.powf(p)
                }
            }));
            Ok((weight * sum).powf(T::one() / p))
        }
    }
}
