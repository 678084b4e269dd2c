//! Order, type and indicator estimators.
//!
//! A limsup cannot be read off finite data, so each estimator works on the
//! top `K` geometric windows of the sample (half a decade each by default):
//!
//! * order: the least-squares slope of `log(1 + m⁺)` against `log r`
//!   over the pooled top windows;
//! * type: the largest window mean of `m⁺(r)/r^p`, after classifying the trend of
//!   those means across windows as divergent, vanishing or level;
//! * indicator: the largest window mean of `u(r e^{is})/r^p`.
//!
//! The slope converges to the limit of `log(1 + m⁺)/log r` for regularly
//! varying `m` without the `O(1/log r)` bias of the raw ratio, which
//! matters for bounded and slowly varying `m`. Pooling the windows keeps
//! bounded oscillations from registering as growth.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::subfun::Subharmonic;
use crate::{Error, Extended, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSamples {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialSamples {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::pre("radii and values differ in length"));
        }
        if radii.first().is_some_and(|&r| !(r > 0.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::pre("radii must be positive and strictly increasing"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::pre("sample values must not be NaN"));
        }
        Ok(RadialSamples { radii, values })
    }

    pub fn from_fn(radii: &[f64], m: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(radii.to_vec(), radii.iter().map(|&r| m(r)).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn decades(&self) -> f64 {
        match (self.radii.first(), self.radii.last()) {
            (Some(a), Some(b)) => (b / a).log10(),
            _ => 0.0,
        }
    }
}

/// `n` radii geometrically spaced on `[lo, hi]`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthConfig {
    /// Window width in decades.
    pub window_decades: f64,
    /// Number of top windows entering the limsup.
    pub top_windows: usize,
    /// Estimates above this are reported as `+∞`.
    pub divergence_cap: f64,
    /// Log-log trend of the type window means above which the type is
    /// divergent and below whose negative it vanishes.
    pub trend_tolerance: f64,
    /// Upper end of the bisection range for `order_via_types`.
    pub p_max: f64,
    pub bisection_tol: f64,
    /// Minimum span of the sample, in decades.
    pub min_decades: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            window_decades: 0.5,
            top_windows: 5,
            divergence_cap: 1e6,
            trend_tolerance: 0.02,
            p_max: 50.0,
            bisection_tol: 1e-3,
            min_decades: 2.0,
        }
    }
}

/// Index ranges of the top windows, in increasing radius order.
fn top_windows(s: &RadialSamples, cfg: &GrowthConfig) -> Result<Vec<Range<usize>>> {
    let span = s.decades();
    if s.radii.len() < 2 || span + 1e-9 < cfg.min_decades {
        return Err(Error::Estimation(format!(
            "sample spans {span:.3} decades; at least {} required",
            cfg.min_decades
        )));
    }
    let available = ((span + 1e-9) / cfg.window_decades).floor() as usize;
    let k = cfg.top_windows.min(available).max(1);
    let top = s.radii[s.radii.len() - 1].log10();
    let mut out = Vec::with_capacity(k);
    for j in (0..k).rev() {
        let hi = top - j as f64 * cfg.window_decades;
        let lo = hi - cfg.window_decades;
        let start = s.radii.partition_point(|r| r.log10() < lo - 1e-12);
        let end = s.radii.partition_point(|r| r.log10() <= hi + 1e-12);
        if end < start + 2 {
            return Err(Error::Estimation(format!("window [{lo:.2}, {hi:.2}] decades holds fewer than 2 samples")));
        }
        out.push(start..end);
    }
    Ok(out)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of `ys` against `xs`. Public for decay fits.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    slope(xs, ys)
}

/// `ord[m] = limsup log(1 + m⁺(r)) / log r`, read as the least-squares
/// slope of `log(1 + m⁺)` against `log r` over the top windows pooled,
/// floored at zero.
pub fn order_of(m: &RadialSamples, cfg: &GrowthConfig) -> Result<Extended> {
    let windows = top_windows(m, cfg)?;
    // A leading run of m⁺ = 0 (a counting function before its first atom)
    // carries no growth information.
    let first = m.values.iter().position(|v| *v > 0.0).unwrap_or(m.values.len());
    let end = windows[windows.len() - 1].end;
    let start = windows[0].start.max(first);
    if end < start + 2 {
        return Ok(Extended::Finite(0.0));
    }
    let span = start..end;
    let xs: Vec<f64> = m.radii[span.clone()].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = m.values[span].iter().map(|v| v.max(0.0).ln_1p()).collect();
    if ys.iter().any(|y| y.is_infinite()) {
        return Ok(Extended::Infinite);
    }
    let est = slope(&xs, &ys).max(0.0);
    if est > cfg.divergence_cap {
        Ok(Extended::Infinite)
    } else {
        Ok(Extended::Finite(est))
    }
}

/// `m⁺(r)/r^p` without overflowing `r^p`.
fn scaled(v: f64, r: f64, p: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v.is_infinite() {
        f64::INFINITY
    } else {
        (v.ln() - p * r.ln()).exp()
    }
}

/// `type_p[m] = limsup m⁺(r)/r^p`.
pub fn type_p(m: &RadialSamples, p: f64, cfg: &GrowthConfig) -> Result<Extended> {
    let windows = top_windows(m, cfg)?;
    let mut means = Vec::with_capacity(windows.len());
    let mut centers = Vec::with_capacity(windows.len());
    for w in windows {
        let vals: Vec<f64> = w.clone().map(|i| scaled(m.values[i], m.radii[i], p)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean.is_infinite() {
            return Ok(Extended::Infinite);
        }
        let r = &m.radii[w];
        centers.push(0.5 * (r[0].ln() + r[r.len() - 1].ln()));
        means.push(mean);
    }
    let last = means[means.len() - 1];
    if last == 0.0 {
        return Ok(Extended::Finite(0.0));
    }
    // The trend is read twice, over all windows and over the upper half;
    // a verdict needs both. The full fit averages out bounded oscillation,
    // the upper half discounts a slow pre-asymptotic approach.
    let trend = |from: usize| {
        let positive: Vec<usize> = (from..means.len()).filter(|&i| means[i] > 0.0).collect();
        if positive.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = positive.iter().map(|&i| centers[i]).collect();
        let ys: Vec<f64> = positive.iter().map(|&i| means[i].ln()).collect();
        Some(slope(&xs, &ys))
    };
    let upper = means.len() - means.len().div_ceil(2).max(2).min(means.len());
    if let (Some(all), Some(top)) = (trend(0), trend(upper)) {
        if all.min(top) > cfg.trend_tolerance {
            return Ok(Extended::Infinite);
        }
        if all.max(top) < -cfg.trend_tolerance {
            return Ok(Extended::Finite(0.0));
        }
    }
    let max = means.iter().copied().fold(0.0, f64::max);
    if max > cfg.divergence_cap {
        Ok(Extended::Infinite)
    } else {
        Ok(Extended::Finite(max))
    }
}

/// `inf{p ≥ 0 : type_p[m] < +∞}` by bisection on `[0, p_max]`, with
/// `inf ∅ = +∞`.
pub fn order_via_types(m: &RadialSamples, cfg: &GrowthConfig) -> Result<Extended> {
    if type_p(m, 0.0, cfg)?.is_finite() {
        return Ok(Extended::Finite(0.0));
    }
    if type_p(m, cfg.p_max, cfg)?.is_infinite() {
        return Ok(Extended::Infinite);
    }
    let (mut lo, mut hi) = (0.0, cfg.p_max);
    while hi - lo > cfg.bisection_tol {
        let mid = 0.5 * (lo + hi);
        if type_p(m, mid, cfg)?.is_finite() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Extended::Finite(hi))
}

/// `ind_p[u](s) = limsup u(r e^{is})/r^p`. Radii hitting a zero of `u`
/// (value `−∞`) are skipped.
pub fn indicator_at<F: Subharmonic + ?Sized>(u: &F, p: f64, s: f64, radii: &[f64], cfg: &GrowthConfig) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::pre("indicator order p must be positive"));
    }
    let values: Vec<f64> = radii.iter().map(|&r| u.value(Point::polar(r, s)) / r.powf(p)).collect();
    let finite: Vec<(f64, f64)> =
        radii.iter().zip(&values).filter(|(_, v)| v.is_finite()).map(|(&r, &v)| (r, v)).collect();
    let samples = RadialSamples::new(finite.iter().map(|x| x.0).collect(), finite.iter().map(|x| x.1).collect())?;
    let windows = top_windows(&samples, cfg)?;
    let best = windows
        .into_iter()
        .map(|w| samples.values[w.clone()].iter().sum::<f64>() / w.len() as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// `M_u^rad` sampled on `radii`.
pub fn sup_radial_samples<F: Subharmonic + ?Sized>(u: &F, radii: &[f64]) -> Result<RadialSamples> {
    use rayon::prelude::*;
    let values: Vec<f64> = radii.par_iter().map(|&r| u.sup_on_circle(Point::ORIGIN, r)).collect();
    RadialSamples::new(radii.to_vec(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthScale {
    pub order: Extended,
    pub types: Vec<(f64, Extended)>,
    /// `(p, [(s, ind_p(s))])` for every probed `p` with finite type.
    pub indicators: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Order and types of `M_u^rad`, and indicators of `u` wherever the type is
/// finite.
pub fn growth_scale<F: Subharmonic + ?Sized>(
    u: &F,
    orders: &[f64],
    angles: &[f64],
    radii: &[f64],
    cfg: &GrowthConfig,
) -> Result<GrowthScale> {
    let m = sup_radial_samples(u, radii)?;
    let order = order_of(&m, cfg)?;
    let mut types = Vec::new();
    let mut indicators = Vec::new();
    for &p in orders {
        let t = type_p(&m, p, cfg)?;
        types.push((p, t));
        if t.is_finite() && p > 0.0 {
            let ind = angles
                .iter()
                .map(|&s| indicator_at(u, p, s, radii, cfg).map(|v| (s, v)))
                .collect::<Result<Vec<_>>>()?;
            indicators.push((p, ind));
        }
    }
    Ok(GrowthScale { order, types, indicators })
}

/// `coeff · Re z`, a harmonic function outside the representable class,
/// used to validate the indicator estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealPart {
    pub coeff: f64,
}

impl Subharmonic for RealPart {
    fn value(&self, z: Point) -> f64 {
        self.coeff * z.re
    }

    fn sup_on_circle(&self, z: Point, r: f64) -> f64 {
        self.coeff * z.re + self.coeff.abs() * r
    }
}

/// Pointwise sum of two subharmonic functions.
#[derive(Clone, Copy, Debug)]
pub struct Sum<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: Subharmonic + ?Sized, B: Subharmonic + ?Sized> Subharmonic for Sum<'_, A, B> {
    fn value(&self, z: Point) -> f64 {
        self.0.value(z) + self.1.value(z)
    }
}
