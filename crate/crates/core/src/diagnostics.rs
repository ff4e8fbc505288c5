//! Norms, energies and geometric checks evaluated on a [`State`].
//!
//! `D^m` is the full derivative tensor: `|D^m f|² = Σ_{|α|=m} (m!/α!) |∂^α f|²`
//! summed over components, so `‖D^m f‖²_{L²} = L³ Σ |k|^{2m} |c|²`.

use std::sync::Arc;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{penalty_energy_dev, PhysicsParams, State};
use crate::error::{Error, Result};
use crate::field::{derivative_symbol, inverse_scalars, lp_norm, solenoidal_defect, Exponent, RealField, SpectralField};
use crate::grid::Grid;
use crate::scalar::{compensated_sum, Real};

/// Highest ladder order accepted by [`sobolev_ladder`].
pub const MAX_LADDER_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_interval")]
    pub sample_interval: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_k_const")]
    pub split_k_const: f64,
}

fn default_interval() -> f64 {
    1.0
}

fn default_m_max() -> usize {
    2
}

fn default_p_list() -> Vec<f64> {
    vec![2.0, 4.0, 7.0]
}

fn default_k_const() -> f64 {
    4.0
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            sample_interval: default_interval(),
            m_max: default_m_max(),
            p_list: default_p_list(),
            split_k_const: default_k_const(),
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::Parameter("sample_interval must be > 0".into()));
        }
        if self.m_max > MAX_LADDER_ORDER {
            return Err(Error::Parameter(format!("m_max must be <= {MAX_LADDER_ORDER}")));
        }
        if let Some(p) = self.p_list.iter().find(|p| !(**p >= 1.0) || !p.is_finite()) {
            return Err(Error::Parameter(format!("p_list entries must be finite and >= 1, got {p}")));
        }
        if !(self.split_k_const > 0.0) {
            return Err(Error::Parameter("split_k_const must be > 0".into()));
        }
        Ok(())
    }
}

/// Multi-indices of total order `m` with multinomial weights `m!/α!`.
pub fn multi_indices(m: u32) -> Vec<([u32; 3], u64)> {
    let fact = |n: u32| (1..=n as u64).product::<u64>();
    let mut out = Vec::new();
    for a in (0..=m).rev() {
        for b in (0..=m - a).rev() {
            let c = m - a - b;
            out.push(([a, b, c], fact(m) / (fact(a) * fact(b) * fact(c))));
        }
    }
    out
}

/// `‖D^m f‖²_{L²}` summed over components.
pub fn derivative_norm_sq<T: Real>(f: &SpectralField<T>, m: u32) -> T {
    let grid = f.grid();
    let k2 = grid.k_sq_table();
    let size = grid.size();
    let per_comp: Vec<T> = (0..f.ncomp())
        .into_par_iter()
        .map(|c| {
            let comp = f.component(c);
            compensated_sum((0..size).map(|i| comp[i].norm_sqr() * k2[i].powi(m as i32)))
        })
        .collect();
    grid.volume() * compensated_sum(per_comp)
}

/// Pointwise `|D^m f|(x)` as a one-component field.
pub fn derivative_magnitude<T: Real>(f: &SpectralField<T>, m: u32) -> RealField<T> {
    let grid = f.grid();
    let size = grid.size();
    let indices = multi_indices(m);
    let mut spectra = Vec::with_capacity(indices.len() * f.ncomp());
    let mut weights = Vec::with_capacity(spectra.capacity());
    for (alpha, w) in &indices {
        for c in 0..f.ncomp() {
            let comp = f.component(c);
            let s: Vec<Complex<T>> = (0..size)
                .into_par_iter()
                .map(|i| {
                    if grid.keeps(i) {
                        comp[i] * derivative_symbol(grid.k_vec(i), *alpha)
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
                .collect();
            spectra.push(s);
            weights.push(T::lit(*w as f64));
        }
    }
    let refs: Vec<&[Complex<T>]> = spectra.iter().map(|s| s.as_slice()).collect();
    let values = inverse_scalars(grid, &refs);
    let mut mag = vec![T::zero(); size];
    for (v, w) in values.iter().zip(&weights) {
        for (acc, x) in mag.iter_mut().zip(v) {
            *acc = *acc + *w * *x * *x;
        }
    }
    for v in &mut mag {
        *v = v.sqrt();
    }
    RealField::from_components(grid, vec![mag])
}

/// `Φ_k² = ‖D^k u‖² + ‖D^{k+1} d‖²` and partial sums `Ψ_m² = Σ_{k≤m} Φ_k²`.
pub fn sobolev_ladder<T: Real>(state: &State<T>, m_max: usize) -> Result<(Vec<T>, Vec<T>)> {
    if m_max > MAX_LADDER_ORDER {
        return Err(Error::Parameter(format!(
            "ladder order {m_max} exceeds the supported maximum {MAX_LADDER_ORDER}"
        )));
    }
    let phi: Vec<T> = (0..=m_max as u32)
        .map(|k| derivative_norm_sq(&state.u_hat, k) + derivative_norm_sq(&state.d_hat, k + 1))
        .collect();
    let mut psi = Vec::with_capacity(phi.len());
    let mut acc = T::zero();
    for p in &phi {
        acc = acc + *p;
        psi.push(acc);
    }
    Ok((phi, psi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energies<T> {
    /// `½‖u‖²`
    pub kinetic: T,
    /// `½‖∇d‖²`
    pub elastic: T,
    /// `∫ F(d)`
    pub penalty: T,
    pub total: T,
    /// `∫ |u|² + |∇d|² + 2F(d)`, twice `total`.
    pub basic: T,
}

fn director_points<T: Real>(state: &State<T>) -> Vec<Vec<T>> {
    let d = state.d_hat.coeffs();
    let size = state.grid().size();
    inverse_scalars(state.grid(), &[&d[..size], &d[size..2 * size], &d[2 * size..]])
}

fn energies_from<T: Real>(state: &State<T>, params: &PhysicsParams<T>, dev: &[Vec<T>]) -> Energies<T> {
    let half = T::lit(0.5);
    let kinetic = half * derivative_norm_sq(&state.u_hat, 0);
    let elastic = half * derivative_norm_sq(&state.d_hat, 1);
    let penalty = penalty_energy_dev(state.grid(), dev, &state.w0, params.eta);
    let total = kinetic + elastic + penalty;
    Energies {
        kinetic,
        elastic,
        penalty,
        total,
        basic: T::lit(2.0) * total,
    }
}

pub fn total_energy<T: Real>(state: &State<T>, params: &PhysicsParams<T>) -> Energies<T> {
    energies_from(state, params, &director_points(state))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierSplit<T> {
    pub low_energy: T,
    pub high_energy: T,
    pub radius: T,
    /// Largest `|c(m)|·L³` inside the ball.
    pub max_uhat_low: T,
}

/// Splits the velocity energy at `|k| = (k_const/(1+t))^{1/2}`.
pub fn fourier_split<T: Real>(state: &State<T>, k_const: T) -> Result<FourierSplit<T>> {
    if !(k_const > T::zero()) {
        return Err(Error::Parameter("splitting constant must be > 0".into()));
    }
    let grid = state.grid();
    let size = grid.size();
    let radius = (k_const / (T::one() + state.t)).sqrt();
    let r2 = radius * radius;
    let u = state.u_hat.coeffs();
    let mode_sq = |i: usize| u[i].norm_sqr() + u[size + i].norm_sqr() + u[2 * size + i].norm_sqr();
    let inside = |i: usize| grid.k_sq(i) <= r2;
    let low = compensated_sum((0..size).filter(|&i| inside(i)).map(mode_sq));
    let high = compensated_sum((0..size).filter(|&i| !inside(i)).map(mode_sq));
    let max_low = (0..size)
        .filter(|&i| inside(i))
        .map(|i| mode_sq(i).sqrt())
        .fold(T::zero(), T::max);
    Ok(FourierSplit {
        low_energy: grid.volume() * low,
        high_energy: grid.volume() * high,
        radius,
        max_uhat_low: max_low * grid.volume(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectorGeometry<T> {
    /// `min_x (d + w₀)·d`
    pub min_alignment: T,
    /// `max_x |d − w₀|`
    pub max_dev: T,
}

fn geometry_from<T: Real>(w0: &[T; 3], dev: &[Vec<T>]) -> DirectorGeometry<T> {
    let three = T::lit(3.0);
    let mut min_alignment = T::infinity();
    let mut max_dev = T::zero();
    for i in 0..dev[0].len() {
        let e = [dev[0][i], dev[1][i], dev[2][i]];
        // (2w₀ + δ)·(w₀ + δ) with |w₀| = 1
        let s = T::lit(2.0) + three * (w0[0] * e[0] + w0[1] * e[1] + w0[2] * e[2]) + e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
        min_alignment = min_alignment.min(s);
        max_dev = max_dev.max((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt());
    }
    DirectorGeometry { min_alignment, max_dev }
}

pub fn director_geometry<T: Real>(state: &State<T>) -> DirectorGeometry<T> {
    geometry_from(&state.w0, &director_points(state))
}

/// Parameters of the interpolation inequality
/// `‖D^k w‖_r ≤ C ‖D^m w‖_p^a ‖w‖_q^{1−a}` in three dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnTuple {
    pub k: u32,
    pub m: u32,
    /// `None` stands for `r = ∞`.
    pub r: Option<f64>,
    pub p: f64,
    pub q: f64,
}

impl GnTuple {
    pub fn label(&self) -> String {
        let r = self.r.map_or("inf".to_string(), |r| format!("{r}"));
        format!("k{}_m{}_r{}_p{}_q{}", self.k, self.m, r, self.p, self.q)
    }
}

/// Solves `1/r = k/n + a(1/p − m/n) + (1−a)/q` for `a` with `n = 3` and checks
/// `k/m ≤ a ≤ 1`, excluding `a = 1` when `p > 1` and `m − k − n/p` is a
/// nonnegative integer.
pub fn gn_exponent(t: &GnTuple) -> Result<f64> {
    let n = 3.0;
    let bad = |msg: String| Err(Error::Parameter(msg));
    if t.m == 0 || t.k >= t.m {
        return bad(format!("need 0 <= k < m, got k={} m={}", t.k, t.m));
    }
    if !(t.p >= 1.0) || !(t.q >= 1.0) || t.r.is_some_and(|r| !(r >= 1.0)) {
        return bad("exponents p, q, r must be >= 1".into());
    }
    let inv_r = t.r.map_or(0.0, |r| 1.0 / r);
    let (k, m) = (t.k as f64, t.m as f64);
    let denom = 1.0 / t.p - m / n - 1.0 / t.q;
    if denom == 0.0 {
        return bad("interpolation exponent is undetermined".into());
    }
    let a = (inv_r - k / n - 1.0 / t.q) / denom;
    let tol = 1e-12;
    if a < k / m - tol || a > 1.0 + tol {
        return bad(format!("interpolation exponent a = {a} outside [{}, 1]", k / m));
    }
    let gap = m - k - n / t.p;
    if t.p > 1.0 && (a - 1.0).abs() <= tol && gap >= -tol && (gap - gap.round()).abs() <= tol {
        return bad(format!("a = 1 is excluded for this tuple (m - k - n/p = {gap})"));
    }
    Ok(a.clamp(k / m, 1.0))
}

fn exponent_of<T: Real>(r: Option<f64>) -> Exponent<T> {
    r.map_or(Exponent::Infinity, |r| Exponent::Finite(T::lit(r)))
}

/// `‖D^k w‖_r / (‖D^m w‖_p^a ‖w‖_q^{1−a})` on the box.
pub fn gn_ratio<T: Real>(w: &SpectralField<T>, tuple: &GnTuple) -> Result<T> {
    let a = T::lit(gn_exponent(tuple)?);
    let norm = |order: u32, e: Exponent<T>| lp_norm(&derivative_magnitude(w, order), e);
    let top = norm(tuple.k, exponent_of(tuple.r))?;
    let dm = norm(tuple.m, Exponent::Finite(T::lit(tuple.p)))?;
    let w0 = norm(0, Exponent::Finite(T::lit(tuple.q)))?;
    let denom = dm.powf(a) * w0.powf(T::one() - a);
    if !(denom > T::zero()) {
        return Err(Error::Degenerate("interpolation denominator vanishes".into()));
    }
    Ok(top / denom)
}

/// Zero-mean scalar field with independent normal coefficients under a
/// Gaussian envelope whose width and cutoff are drawn from the seed.
pub fn random_band_limited<T: Real>(grid: &Arc<Grid<T>>, seed: u64) -> SpectralField<T> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = grid.k_max_dealiased().as_f64();
    let kmin = grid.k_min().as_f64();
    let cutoff = kmin + rng.gen::<f64>() * (kmax - kmin);
    let width = (0.2 + 0.8 * rng.gen::<f64>()) * cutoff;
    let mut out = SpectralField::zeros(grid, 1);
    let size = grid.size();
    for idx in 1..size {
        let cidx = grid.conjugate_index(idx);
        if !grid.keeps(idx) || cidx <= idx {
            continue;
        }
        let k = grid.k_sq(idx).as_f64().sqrt();
        if k > cutoff {
            continue;
        }
        let env = (-(k / width).powi(2)).exp();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let c = Complex::new(env * re, env * im);
        let c = Complex::new(T::lit(c.re), T::lit(c.im));
        out.coeffs_mut()[idx] = c;
        out.coeffs_mut()[cidx] = c.conj();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnSurvey {
    pub tuple: GnTuple,
    pub exponent: f64,
    pub samples: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub all_finite: bool,
}

/// Evaluates [`gn_ratio`] on `samples` seeded random fields.
pub fn gn_survey<T: Real>(grid: &Arc<Grid<T>>, tuple: &GnTuple, samples: usize, seed: u64) -> Result<GnSurvey> {
    let exponent = gn_exponent(tuple)?;
    let ratios = (0..samples as u64)
        .map(|s| gn_ratio(&random_band_limited(grid, seed.wrapping_add(s)), tuple).map(|r| r.as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GnSurvey {
        tuple: *tuple,
        exponent,
        samples,
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        all_finite: ratios.iter().all(|r| r.is_finite()),
    })
}

/// One sample of every monitored quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_u_sq: f64,
    pub linf_u: f64,
    /// `‖D^m u‖²` for `m = 1..=m_max`.
    pub l2_du_sq: Vec<f64>,
    /// `‖D^m u‖_∞` for `m = 1..=m_max`.
    pub linf_du: Vec<f64>,
    pub phi_sq: Vec<f64>,
    pub psi_sq: Vec<f64>,
    pub l2_grad_d_sq: f64,
    pub l2_dev_d_sq: f64,
    /// `‖D^m(d − w₀)‖²` for `m = 2..=m_max + 1`.
    pub l2_ddev_sq: Vec<f64>,
    /// `(p, ‖d − w₀‖_p)`
    pub lp_dev_d: Vec<(f64, f64)>,
    pub linf_dev_d: f64,
    pub linf_grad_d: f64,
    pub linf_d2_d: f64,
    pub energy_kinetic: f64,
    pub energy_elastic: f64,
    pub energy_penalty: f64,
    pub energy_total: f64,
    pub energy_basic: f64,
    pub split_low_energy_u: f64,
    pub split_high_energy_u: f64,
    pub split_radius: f64,
    pub split_max_uhat_low: f64,
    pub min_dir_alignment: f64,
    pub solenoidal_defect: f64,
}

fn p_label(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

impl DiagnosticsRecord {
    /// Column names and values in output order.
    pub fn columns(&self) -> Vec<(String, f64)> {
        let mut c: Vec<(String, f64)> = vec![
            ("t".into(), self.t),
            ("l2_u_sq".into(), self.l2_u_sq),
            ("linf_u".into(), self.linf_u),
        ];
        for (i, v) in self.l2_du_sq.iter().enumerate() {
            c.push((format!("l2_d{}u_sq", i + 1), *v));
        }
        for (i, v) in self.linf_du.iter().enumerate() {
            c.push((format!("linf_d{}u", i + 1), *v));
        }
        for (i, v) in self.phi_sq.iter().enumerate() {
            c.push((format!("phi_sq_{i}"), *v));
        }
        for (i, v) in self.psi_sq.iter().enumerate() {
            c.push((format!("psi_sq_{i}"), *v));
        }
        c.push(("l2_grad_d_sq".into(), self.l2_grad_d_sq));
        c.push(("l2_dev_d_sq".into(), self.l2_dev_d_sq));
        for (i, v) in self.l2_ddev_sq.iter().enumerate() {
            c.push((format!("l2_d{}dev_d_sq", i + 2), *v));
        }
        for (p, v) in &self.lp_dev_d {
            c.push((format!("lp_dev_d_{}", p_label(*p)), *v));
        }
        c.extend([
            ("linf_dev_d".into(), self.linf_dev_d),
            ("linf_grad_d".into(), self.linf_grad_d),
            ("linf_d2_d".into(), self.linf_d2_d),
            ("energy_kinetic".into(), self.energy_kinetic),
            ("energy_elastic".into(), self.energy_elastic),
            ("energy_penalty".into(), self.energy_penalty),
            ("energy_total".into(), self.energy_total),
            ("energy_basic".into(), self.energy_basic),
            ("split_low_energy_u".into(), self.split_low_energy_u),
            ("split_high_energy_u".into(), self.split_high_energy_u),
            ("split_radius".into(), self.split_radius),
            ("split_max_uhat_low".into(), self.split_max_uhat_low),
            ("min_dir_alignment".into(), self.min_dir_alignment),
            ("solenoidal_defect".into(), self.solenoidal_defect),
        ]);
        c
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns().into_iter().map(|(n, _)| n).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.columns().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Evaluates every diagnostic on `state`.
pub fn measure<T: Real>(state: &State<T>, params: &PhysicsParams<T>, config: &DiagnosticsConfig) -> Result<DiagnosticsRecord> {
    config.validate()?;
    let m_max = config.m_max;
    let grid = state.grid();
    let f = |v: T| v.as_f64();
    let (phi, psi) = sobolev_ladder(state, m_max)?;

    let dev = director_points(state);
    let dev_field = RealField::from_components(grid, dev.clone());
    let energies = energies_from(state, params, &dev);
    let geometry = geometry_from(&state.w0, &dev);
    let split = fourier_split(state, T::lit(config.split_k_const))?;

    let lp_dev_d = config
        .p_list
        .iter()
        .map(|&p| Ok((p, f(lp_norm(&dev_field, Exponent::Finite(T::lit(p)))?))))
        .collect::<Result<Vec<_>>>()?;
    let linf = |field: &SpectralField<T>, m: u32| f(derivative_magnitude(field, m).max_magnitude());

    Ok(DiagnosticsRecord {
        t: f(state.t),
        l2_u_sq: f(derivative_norm_sq(&state.u_hat, 0)),
        linf_u: linf(&state.u_hat, 0),
        l2_du_sq: (1..=m_max as u32).map(|m| f(derivative_norm_sq(&state.u_hat, m))).collect(),
        linf_du: (1..=m_max as u32).map(|m| linf(&state.u_hat, m)).collect(),
        phi_sq: phi.into_iter().map(f).collect(),
        psi_sq: psi.into_iter().map(f).collect(),
        l2_grad_d_sq: f(derivative_norm_sq(&state.d_hat, 1)),
        l2_dev_d_sq: f(derivative_norm_sq(&state.d_hat, 0)),
        l2_ddev_sq: (2..=m_max as u32 + 1).map(|m| f(derivative_norm_sq(&state.d_hat, m))).collect(),
        lp_dev_d,
        linf_dev_d: f(geometry.max_dev),
        linf_grad_d: linf(&state.d_hat, 1),
        linf_d2_d: linf(&state.d_hat, 2),
        energy_kinetic: f(energies.kinetic),
        energy_elastic: f(energies.elastic),
        energy_penalty: f(energies.penalty),
        energy_total: f(energies.total),
        energy_basic: f(energies.basic),
        split_low_energy_u: f(split.low_energy),
        split_high_energy_u: f(split.high_energy),
        split_radius: f(split.radius),
        split_max_uhat_low: f(split.max_uhat_low),
        min_dir_alignment: f(geometry.min_alignment),
        solenoidal_defect: f(solenoidal_defect(&state.u_hat)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::forward_transform;
    use std::f64::consts::{PI, TAU};

    fn grid(n: usize, l: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::new(n, l).unwrap())
    }

    const W0: [f64; 3] = [0.0, 0.0, 1.0];

    fn sine_state(g: &Arc<Grid<f64>>) -> State<f64> {
        let u = RealField::from_fn(g, 3, |c, x| if c == 1 { x[0].sin() } else { 0.0 });
        State::new(forward_transform(&u).unwrap(), SpectralField::zeros(g, 3), W0, 0.0).unwrap()
    }

    fn random_state(g: &Arc<Grid<f64>>, seed: u64) -> State<f64> {
        let cfg = crate::initdata::InitConfig {
            seed,
            u_amplitude: 0.5,
            u_shell: (0.0, g.k_max_dealiased()),
            d_perturb_amplitude: 0.2,
            d_perturb_band: (0.0, g.k_max_dealiased()),
            ..Default::default()
        };
        let u = crate::initdata::make_velocity(&cfg, g).unwrap();
        let d = crate::initdata::make_director(&cfg, g).unwrap();
        State::new(u, d.d_hat, W0, 0.0).unwrap()
    }

    #[test]
    fn multinomial_weights() {
        let idx = multi_indices(2);
        assert_eq!(idx.len(), 6);
        assert_eq!(idx.iter().map(|(_, w)| w).sum::<u64>(), 9);
        assert_eq!(multi_indices(4).len(), 15);
        assert_eq!(multi_indices(4).iter().map(|(_, w)| w).sum::<u64>(), 81);
    }

    #[test]
    fn pointwise_tensor_norm_matches_spectral_sum() {
        let g = grid(16, 4.0 * PI);
        let s = random_state(&g, 3);
        for m in 0..3 {
            let mag = derivative_magnitude(&s.u_hat, m);
            let quad = lp_norm(&mag, Exponent::Finite(2.0)).unwrap().powi(2);
            let spectral = derivative_norm_sq(&s.u_hat, m);
            assert!((quad / spectral - 1.0).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn ladder_of_rest_is_zero() {
        let g = grid(16, TAU);
        let s = State::rest(&g, W0).unwrap();
        let (phi, psi) = sobolev_ladder(&s, 3).unwrap();
        assert!(phi.iter().chain(&psi).all(|v| *v == 0.0));
    }

    #[test]
    fn ladder_of_single_sine() {
        let g = grid(16, TAU);
        let (phi, _) = sobolev_ladder(&sine_state(&g), 2).unwrap();
        let half = TAU.powi(3) / 2.0;
        assert!((phi[0] - half).abs() < 1e-12 * half);
        assert!((phi[1] - half).abs() < 1e-12 * half);
        assert!((phi[2] - half).abs() < 1e-12 * half);
    }

    #[test]
    fn ladder_partial_sums() {
        let g = grid(16, 8.0 * PI);
        let s = random_state(&g, 11);
        let (phi, psi) = sobolev_ladder(&s, 4).unwrap();
        assert_eq!(psi[0], phi[0]);
        assert!(((psi[2] - psi[1]) - phi[2]).abs() <= 1e-14 * psi[2]);
        assert!(psi.windows(2).all(|w| w[1] >= w[0]));
        let rec = measure(&s, &PhysicsParams::new(1.0, 1.0).unwrap(), &DiagnosticsConfig::default()).unwrap();
        assert!((rec.phi_sq[0] - (rec.l2_u_sq + rec.l2_grad_d_sq)).abs() <= 1e-14 * rec.phi_sq[0]);
        assert!(matches!(sobolev_ladder(&s, 5), Err(Error::Parameter(_))));
    }

    #[test]
    fn energy_of_rest_and_sine() {
        let g = grid(16, TAU);
        let params = PhysicsParams::new(0.7, 1.0).unwrap();
        let e = total_energy(&State::rest(&g, W0).unwrap(), &params);
        assert_eq!((e.kinetic, e.elastic, e.penalty, e.total), (0.0, 0.0, 0.0, 0.0));
        let e = total_energy(&sine_state(&g), &params);
        let quarter = TAU.powi(3) / 4.0;
        assert!((e.kinetic - quarter).abs() < 1e-12 * quarter);
        assert_eq!((e.elastic, e.penalty), (0.0, 0.0));
        assert_eq!(e.basic, 2.0 * e.total);
    }

    #[test]
    fn unit_director_has_no_penalty() {
        // d = (sin θ, 0, cos θ) − w₀ with θ = 0.3 sin x₁ is unit length pointwise
        let g = grid(32, TAU);
        let dev = RealField::from_fn(&g, 3, |c, x| {
            let th = 0.3 * x[0].sin();
            match c {
                0 => th.sin(),
                1 => 0.0,
                _ => th.cos() - 1.0,
            }
        });
        let pts: Vec<Vec<f64>> = (0..3).map(|c| dev.component(c).to_vec()).collect();
        let pen = penalty_energy_dev(&g, &pts, &W0, 1.0);
        assert!(pen < 1e-28, "{pen}");
    }

    #[test]
    fn split_radius_and_partition() {
        let g = grid(16, 8.0 * PI);
        let mut s = random_state(&g, 5);
        let sp = fourier_split(&s, 4.0).unwrap();
        assert_eq!(sp.radius, 2.0);
        let total = derivative_norm_sq(&s.u_hat, 0);
        assert!(((sp.low_energy + sp.high_energy) - total).abs() <= 1e-12 * total);
        s.t = 1e6;
        let sp = fourier_split(&s, 4.0).unwrap();
        assert_eq!(sp.low_energy, 0.0);
        assert_eq!(sp.max_uhat_low, 0.0);
        assert!(fourier_split(&s, 0.0).is_err());
    }

    #[test]
    fn geometry_of_constant_directors() {
        let g = grid(8, TAU);
        let s = State::rest(&g, W0).unwrap();
        let geo = director_geometry(&s);
        assert_eq!((geo.min_alignment, geo.max_dev), (2.0, 0.0));
        // d ≡ −w₀
        let dev = RealField::from_fn(&g, 3, |c, _| -2.0 * W0[c]);
        let s = State::new(SpectralField::zeros(&g, 3), forward_transform(&dev).unwrap(), W0, 0.0).unwrap();
        let geo = director_geometry(&s);
        assert!(geo.min_alignment.abs() < 1e-15);
        assert!((geo.max_dev - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_exponents() {
        let t = |k, m, r, p, q| GnTuple { k, m, r, p, q };
        let a = gn_exponent(&t(0, 2, None, 2.0, 2.0)).unwrap();
        assert!((a - 0.75).abs() < 1e-14);
        let a = gn_exponent(&t(1, 2, Some(3.0), 2.0, 2.0)).unwrap();
        assert!((a - 0.75).abs() < 1e-14);
        let a = gn_exponent(&t(0, 1, Some(4.0), 2.0, 2.0)).unwrap();
        assert!((a - 0.75).abs() < 1e-14);
        let a = gn_exponent(&t(0, 1, Some(6.0), 2.0, 2.0)).unwrap();
        assert!((a - 1.0).abs() < 1e-14);
        let a = gn_exponent(&t(1, 3, None, 2.0, 2.0)).unwrap();
        assert!((a - 5.0 / 6.0).abs() < 1e-14);
        // solving with k=0, m=1, r=∞, p=q=2 gives a = 3/2 > 1
        assert!(matches!(gn_exponent(&t(0, 1, None, 2.0, 2.0)), Err(Error::Parameter(_))));
        // a = 1 with m − k − n/p = 0 at p = 3
        assert!(matches!(gn_exponent(&t(0, 1, None, 3.0, 2.0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn ratio_of_single_mode_is_scale_free() {
        let g = grid(16, TAU);
        let w = forward_transform(&RealField::from_fn(&g, 1, |_, x| x[0].sin())).unwrap();
        let tuple = GnTuple { k: 0, m: 2, r: None, p: 2.0, q: 2.0 };
        let r1 = gn_ratio(&w, &tuple).unwrap();
        // ‖sin‖_∞ = 1, ‖D²sin‖₂ = ‖sin‖₂ = (4π³)^{1/2}
        let expect = 1.0 / (4.0 * PI.powi(3)).sqrt();
        assert!((r1 - expect).abs() < 1e-13 * expect);
        let r2 = gn_ratio(&w.scaled(2.0), &tuple).unwrap();
        assert!((r1 - r2).abs() < 1e-14 * r1);
        let zero = SpectralField::zeros(&g, 1);
        assert!(matches!(gn_ratio(&zero, &tuple), Err(Error::Degenerate(_))));
    }

    #[test]
    fn record_columns_are_consistent() {
        let g = grid(16, 8.0 * PI);
        let s = random_state(&g, 2);
        let rec = measure(&s, &PhysicsParams::new(1.0, 1.0).unwrap(), &DiagnosticsConfig::default()).unwrap();
        let names = rec.column_names();
        for n in ["t", "l2_d2u_sq", "linf_d2u", "psi_sq_2", "l2_d3dev_d_sq", "lp_dev_d_7", "split_max_uhat_low"] {
            assert!(names.iter().any(|c| c == n), "missing {n}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(rec.get("l2_u_sq"), Some(rec.l2_u_sq));
        let total = rec.split_low_energy_u + rec.split_high_energy_u;
        assert!((total - rec.l2_u_sq).abs() <= 1e-12 * rec.l2_u_sq);
        assert!(rec.solenoidal_defect <= 1e-12);
        assert!((rec.lp_dev_d[0].1.powi(2) / rec.l2_dev_d_sq - 1.0).abs() < 1e-12);
    }
}
