//! Power-law fits of sampled norms, the predicted exponent table and the
//! linear heat oracle.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub name: String,
    pub run: String,
    pub samples: Vec<(f64, f64)>,
}

impl NormSeries {
    /// Requires strictly increasing times.
    pub fn new(name: impl Into<String>, run: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        let name = name.into();
        if let Some(w) = samples.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Data(format!(
                "series {name}: times not strictly increasing at t = {}",
                w[1].0
            )));
        }
        Ok(Self {
            name,
            run: run.into(),
            samples,
        })
    }

    /// True when every value is zero, e.g. for a run started at rest.
    pub fn is_degenerate(&self) -> bool {
        self.samples.iter().all(|(_, v)| *v == 0.0)
    }
}

/// `value ≈ amplitude · (1+t)^{-alpha}` over `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub name: String,
    pub alpha: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// RMS residual in `(log(1+t), log value)` space.
    pub residual_rms: f64,
    pub n_points: usize,
}

/// Least-squares line through `(log(1+t), log value)` for samples with
/// `t_lo <= t <= t_hi`.
pub fn fit_power_law(series: &NormSeries, window: (f64, f64)) -> Result<FitResult> {
    let (t_lo, t_hi) = window;
    if !(t_lo < t_hi) || !(t_lo > -1.0) {
        return Err(Error::Fit(format!("invalid window ({t_lo}, {t_hi})")));
    }
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .filter(|(t, _)| *t >= t_lo && *t <= t_hi)
        .copied()
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "series {}: {} samples in window ({t_lo}, {t_hi}), need {MIN_FIT_POINTS}",
            series.name,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("series {}: value {v} at t = {t} is not positive", series.name)));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitResult {
        name: series.name.clone(),
        alpha: -slope,
        amplitude: intercept.exp(),
        window,
        residual_rms: (rss / n).sqrt(),
        n_points: pts.len(),
    })
}

/// Radial magnitude `|û₀|(ρ)` of initial data in the continuum.
#[derive(Clone)]
pub enum RadialProfile {
    /// `c` on `ρ <= k_max`.
    Flat { c: f64, k_max: f64 },
    /// `c·exp(−(ρ/width)²)`.
    Gaussian { c: f64, width: f64 },
    /// Arbitrary profile supported on `ρ <= k_max` (which may be infinite).
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        k_max: f64,
    },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat { c, k_max } => write!(f, "Flat {{ c: {c}, k_max: {k_max} }}"),
            Self::Gaussian { c, width } => write!(f, "Gaussian {{ c: {c}, width: {width} }}"),
            Self::Custom { k_max, .. } => write!(f, "Custom {{ k_max: {k_max} }}"),
        }
    }
}

impl RadialProfile {
    pub fn value(&self, rho: f64) -> f64 {
        match self {
            Self::Flat { c, k_max } => {
                if rho <= *k_max {
                    *c
                } else {
                    0.0
                }
            }
            Self::Gaussian { c, width } => c * (-(rho / width).powi(2)).exp(),
            Self::Custom { f, k_max } => {
                if rho <= *k_max {
                    f(rho)
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which `|û₀|² e^{−2ρ²t}` is below `e^{−800}` of its
    /// scale, or the support edge.
    fn cutoff(&self, t: f64) -> f64 {
        let decay = |extra: f64| (400.0 / (t + extra)).sqrt();
        match self {
            Self::Flat { k_max, .. } => *k_max,
            Self::Gaussian { width, .. } => decay(1.0 / (width * width)),
            Self::Custom { k_max, .. } => {
                if k_max.is_finite() {
                    *k_max
                } else if t > 0.0 {
                    decay(0.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        match self {
            Self::Flat { c, k_max } if !c.is_finite() || !(*k_max > 0.0) || !k_max.is_finite() => {
                bad("flat profile needs finite c and 0 < k_max < inf")
            }
            Self::Gaussian { c, width } if !c.is_finite() || !(*width > 0.0) || !width.is_finite() => {
                bad("gaussian profile needs finite c and width > 0")
            }
            Self::Custom { f, k_max } => {
                if !(*k_max > 0.0) {
                    return bad("custom profile needs k_max > 0");
                }
                let span = if k_max.is_finite() { *k_max } else { 50.0 };
                // includes the origin, where unbounded profiles typically blow up
                let unbounded = (0..=4000).any(|i| !f(span * i as f64 / 4000.0).is_finite());
                if unbounded {
                    bad("profile is unbounded on its support")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// `(∫_{ℝ³} |û₀(ξ)|² e^{−2|ξ|²t} dξ)^{1/2}` for a radial profile.
pub fn heat_oracle_l2(profile: &RadialProfile, t: f64) -> Result<f64> {
    profile.check()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("oracle time must be finite and >= 0, got {t}")));
    }
    let cutoff = profile.cutoff(t);
    if !cutoff.is_finite() {
        return Err(Error::Parameter("profile has unbounded support at t = 0".into()));
    }
    let integrand = |rho: f64| {
        let v = profile.value(rho);
        v * v * (-2.0 * rho * rho * t).exp() * rho * rho
    };
    // geometric panels anchored at the heat width so large t stays resolved
    let width = if t > 0.0 { (0.5 / t).sqrt().min(cutoff) } else { cutoff };
    let mut edges = vec![0.0];
    let mut e = width;
    while e < cutoff {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(cutoff);
    let panel = |a: f64, b: f64, tol: f64| quadrature::integrate(integrand, a, b, tol).integral;
    let rough: f64 = edges.windows(2).map(|w| panel(w[0], w[1], 1e-6).abs()).sum();
    if rough == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-15 * rough / edges.len() as f64;
    let total: f64 = edges.windows(2).map(|w| panel(w[0], w[1], tol)).sum();
    Ok((4.0 * std::f64::consts::PI * total).sqrt())
}

/// Whether an entry refers to a squared `L²` quantity or a plain norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Squared,
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub alpha: f64,
    pub kind: NormKind,
}

/// Predicted decay exponents keyed by diagnostic column name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectationTable {
    pub entries: BTreeMap<String, Expectation>,
}

impl ExpectationTable {
    /// Table for the columns emitted with ladder order `m_max` and the given
    /// Lebesgue exponents.
    pub fn standard(m_max: usize, p_list: &[f64]) -> Self {
        let mut t = Self::default();
        let sq = |t: &mut Self, k: String, a: f64| t.insert(k, a, NormKind::Squared);
        let pl = |t: &mut Self, k: String, a: f64| t.insert(k, a, NormKind::Plain);
        sq(&mut t, "l2_u_sq".into(), 1.5);
        sq(&mut t, "l2_dev_d_sq".into(), 1.5);
        sq(&mut t, "l2_grad_d_sq".into(), 2.5);
        for m in 1..=m_max {
            sq(&mut t, format!("l2_d{m}u_sq"), m as f64 + 1.5);
            pl(&mut t, format!("linf_d{m}u"), (m as f64 + 3.0) / 2.0);
        }
        for m in 2..=m_max + 1 {
            sq(&mut t, format!("l2_d{m}dev_d_sq"), m as f64 + 1.5);
        }
        pl(&mut t, "linf_u".into(), 1.5);
        pl(&mut t, "linf_dev_d".into(), 1.5);
        pl(&mut t, "linf_grad_d".into(), 2.0);
        pl(&mut t, "linf_d2_d".into(), 2.5);
        for &p in p_list {
            let label = if p.fract() == 0.0 { format!("{}", p as i64) } else { format!("{p}") };
            pl(&mut t, format!("lp_dev_d_{label}"), 1.5 * (1.0 - 1.0 / p));
        }
        t
    }

    pub fn insert(&mut self, name: String, alpha: f64, kind: NormKind) {
        self.entries.insert(name, Expectation { alpha, kind });
    }

    pub fn get(&self, name: &str) -> Option<&Expectation> {
        self.entries.get(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub series: String,
    pub alpha: f64,
    pub predicted: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub tol: f64,
    /// `predicted − alpha`
    pub deficit: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub entries: Vec<Verdict>,
    pub pass: bool,
}

impl TheoryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Compares every fit against the table with a common tolerance.
pub fn compare_to_theory(fits: &[FitResult], table: &ExpectationTable, tol: f64) -> Result<TheoryReport> {
    compare_with(fits, table, |_| tol)
}

/// As [`compare_to_theory`] with a per-series tolerance.
pub fn compare_with(fits: &[FitResult], table: &ExpectationTable, tol: impl Fn(&str) -> f64) -> Result<TheoryReport> {
    if fits.is_empty() {
        return Err(Error::Fit("no fits to compare".into()));
    }
    let entries = fits
        .iter()
        .map(|f| {
            let e = table
                .get(&f.name)
                .ok_or_else(|| Error::Mapping(format!("no predicted exponent for series {}", f.name)))?;
            let tol = tol(&f.name);
            let deficit = e.alpha - f.alpha;
            Ok(Verdict {
                series: f.name.clone(),
                alpha: f.alpha,
                predicted: e.alpha,
                window: f.window,
                residual: f.residual_rms,
                tol,
                deficit,
                verdict: deficit.abs() <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = entries.iter().all(|e| e.verdict);
    Ok(TheoryReport { entries, pass })
}
