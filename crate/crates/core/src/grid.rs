//! Periodic cubic box: resolution, wavenumber tables and the two-thirds mask.

use std::fmt;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::scalar::Real;

/// Cubic periodic box of side `length` sampled on `n³` points.
///
/// Flat indices run over `(i1, i2, i3)` with `i3` fastest. Index `i` along an
/// axis carries the integer mode `m = i` for `i <= n/2` and `m = i - n`
/// otherwise, so modes cover `-n/2+1 ..= n/2` and `m = n/2` is the Nyquist
/// mode.
pub struct Grid<T: Real> {
    n: usize,
    length: T,
    wavenumber: Vec<T>,
    keep_1d: Vec<bool>,
    k_sq: Vec<T>,
    mask: Vec<bool>,
    conj: Vec<u32>,
    fft: Fft3<T>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Parameter(format!(
                "grid resolution must be even and >= 8, got {n}"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::Parameter(format!(
                "box length must be positive and finite, got {length}"
            )));
        }
        let k0 = T::TAU() / length;
        let mut wavenumber = Vec::with_capacity(n);
        let mut keep_1d = Vec::with_capacity(n);
        for i in 0..n {
            let m = mode_of(i, n);
            wavenumber.push(T::lit(m as f64) * k0);
            keep_1d.push(3 * m.unsigned_abs() as usize <= n && m != (n / 2) as i64);
        }
        let total = n * n * n;
        let mut k_sq = Vec::with_capacity(total);
        let mut mask = Vec::with_capacity(total);
        let mut conj = Vec::with_capacity(total);
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let (a, b, c) = (wavenumber[i1], wavenumber[i2], wavenumber[i3]);
                    k_sq.push(a * a + b * b + c * c);
                    mask.push(keep_1d[i1] && keep_1d[i2] && keep_1d[i3]);
                    let flip = |i: usize| (n - i) % n;
                    conj.push((((flip(i1) * n) + flip(i2)) * n + flip(i3)) as u32);
                }
            }
        }
        Ok(Self {
            n,
            length,
            wavenumber,
            keep_1d,
            k_sq,
            mask,
            conj,
            fft: Fft3::new(n),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> T {
        self.length
    }

    /// Number of points (or modes) per component.
    #[inline]
    pub fn size(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn volume(&self) -> T {
        self.length * self.length * self.length
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.length / T::lit(self.n as f64)
    }

    /// Smallest nonzero wavenumber `2π/L`.
    #[inline]
    pub fn k_min(&self) -> T {
        T::TAU() / self.length
    }

    /// Largest per-axis wavenumber that survives the two-thirds mask.
    pub fn k_max_dealiased(&self) -> T {
        T::lit((self.n / 3) as f64) * self.k_min()
    }

    #[inline]
    pub fn wavenumber_1d(&self, i: usize) -> T {
        self.wavenumber[i]
    }

    #[inline]
    pub fn mode_1d(&self, i: usize) -> i64 {
        mode_of(i, self.n)
    }

    #[inline]
    pub fn is_nyquist_1d(&self, i: usize) -> bool {
        i == self.n / 2
    }

    #[inline]
    pub fn keeps_1d(&self, i: usize) -> bool {
        self.keep_1d[i]
    }

    #[inline]
    pub fn flat(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Flat index of the integer mode `m`, if it is representable.
    pub fn index_of_mode(&self, m: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut ix = [0usize; 3];
        for j in 0..3 {
            if m[j] <= -n / 2 || m[j] > n / 2 {
                return None;
            }
            ix[j] = m[j].rem_euclid(n) as usize;
        }
        Some(self.flat(ix[0], ix[1], ix[2]))
    }

    pub fn mode_of_index(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.mode_1d(a), self.mode_1d(b), self.mode_1d(c)]
    }

    /// Flat index of `-m`; Nyquist indices map onto themselves.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        self.conj[idx] as usize
    }

    #[inline]
    pub fn k_vec(&self, idx: usize) -> [T; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.wavenumber[a], self.wavenumber[b], self.wavenumber[c]]
    }

    #[inline]
    pub fn k_sq(&self, idx: usize) -> T {
        self.k_sq[idx]
    }

    pub fn k_sq_table(&self) -> &[T] {
        &self.k_sq
    }

    /// Two-thirds mask: `true` where a mode is retained.
    #[inline]
    pub fn keeps(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Physical coordinate of grid point `idx`.
    pub fn position(&self, idx: usize) -> [T; 3] {
        let [a, b, c] = self.unflat(idx);
        let h = self.dx();
        [
            T::lit(a as f64) * h,
            T::lit(b as f64) * h,
            T::lit(c as f64) * h,
        ]
    }

    pub(crate) fn fft(&self) -> &Fft3<T> {
        &self.fft
    }
}

#[inline]
fn mode_of(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution() {
        assert!(Grid::<f64>::new(6, 1.0).is_err());
        assert!(Grid::<f64>::new(9, 1.0).is_err());
        assert!(Grid::<f64>::new(16, -1.0).is_err());
        assert!(Grid::<f64>::new(16, 1.0).is_ok());
    }

    #[test]
    fn wavenumbers_antisymmetric_except_nyquist() {
        let g = Grid::<f64>::new(16, 3.0).unwrap();
        for i in 1..16 {
            if g.is_nyquist_1d(i) {
                continue;
            }
            let j = 16 - i;
            assert_eq!(g.wavenumber_1d(i), -g.wavenumber_1d(j));
        }
        assert_eq!(g.mode_1d(8), 8);
        assert_eq!(g.mode_1d(9), -7);
    }

    #[test]
    fn mask_is_two_thirds_rule() {
        let g = Grid::<f64>::new(64, 1.0).unwrap();
        for i in 0..64 {
            let m = g.mode_1d(i).abs();
            assert_eq!(g.keeps_1d(i), m <= 21, "m = {m}");
        }
        let idx = g.index_of_mode([21, -21, 0]).unwrap();
        assert!(g.keeps(idx));
        let idx = g.index_of_mode([22, 0, 0]).unwrap();
        assert!(!g.keeps(idx));
        let idx = g.index_of_mode([32, 0, 0]).unwrap();
        assert!(!g.keeps(idx));
    }

    #[test]
    fn mode_index_round_trip() {
        let g = Grid::<f64>::new(8, 1.0).unwrap();
        for idx in 0..g.size() {
            let m = g.mode_of_index(idx);
            assert_eq!(g.index_of_mode(m), Some(idx));
        }
        assert_eq!(g.index_of_mode([-4, 0, 0]), None);
        let idx = g.index_of_mode([1, -2, 3]).unwrap();
        assert_eq!(g.mode_of_index(g.conjugate_index(idx)), [-1, 2, -3]);
    }
}
