//! The two directions of the equivalence between a `B_u`-minorant
//! `log|f_q(z)| ≤ B_u(z, Q(z))` and a minorant `log|f| ≤ u` off a disk
//! system with summable radii, plus the trace and growth checks that
//! supplement it.
//!
//! Forward: from `u` with Riesz measure `μ` of order `a_u`, set
//! `q = a_u + q′ + 3`, cover `E_{μ,Q}` and check that `log|e^{-1} f_q| ≤ u`
//! off the cover while `Σ_{|z_k| ≥ R} t_k` decays like `R^{-q′}`.
//!
//! Reverse: from such a pair with tail exponent `q`, pick `q* < q′ < q`,
//! average the minorant over avoiding circles and rescale it into a
//! `B_u`-minorant at exponent `q*`.

use std::f64::consts::{E, PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::avoidance::{estimate_rq, find_avoiding_radius_decaying, IntervalUnion};
use crate::covering::{
    build_cover, check_constraints, cover_multiplicity_report, tail_radius_sum, uniform_in_disk, CandidateParams,
    CandidateSet, ConstraintReport, DiskCover, MultiplicityReport, Provenance, MULTIPLICITY_BOUND,
};
use crate::ext::ext_f64;
use crate::geom::{circle_disk_arc, Disk, Point, RadiusFunctionQ, Ray};
use crate::growth::{
    geometric_radii, indicator_at, least_squares_slope, order_of, sup_radial_samples, type_p, GrowthConfig,
};
use crate::measures::measure_growth;
use crate::rng::{streams, substream};
use crate::subfun::{circle_mean, disk_mean, sup_on_circle, AverageBackend, LogModulusFunction, Subharmonic, Zero};
use crate::{Error, Extended, Result};

/// Slack tolerance for the `B_u`-minorant inequality.
pub const FBC_TOLERANCE: f64 = 1e-9;
/// Tolerance for `log|e^{-1} f_q| ≤ u` off the cover.
pub const MINORANT_TOLERANCE: f64 = 1e-12;
/// Allowance on fitted decay slopes.
pub const SLOPE_ALLOWANCE: f64 = 0.3;

/// Zeros `a_k = k^{1/ρ} e^{i(k mod 8)π/4}` with `|a_k| ≤ window`, so that
/// the zero counting function is `⌊r^ρ⌋` and every eighth zero lies on the
/// positive real axis.
pub fn synthetic_family(rho: f64, window: f64) -> Result<LogModulusFunction> {
    if !(rho > 0.0) || !(window > 1.0) {
        return Err(Error::pre(format!("synthetic family needs rho > 0 and window > 1, got {rho}, {window}")));
    }
    let n = window.powf(rho).floor() as usize;
    let zeros = (1..=n)
        .map(|k| Zero {
            location: Point::polar((k as f64).powf(1.0 / rho), (k % 8) as f64 * PI / 4.0),
            multiplicity: 1.0,
        })
        .filter(|z| z.location.norm() <= window)
        .collect();
    LogModulusFunction::polynomial(zeros, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Working window `R_max`.
    pub window: f64,
    pub candidates: CandidateParams,
    pub seed: u64,
    /// Uniform points in the window where the minorant is checked.
    pub violation_samples: usize,
    /// Points where the `B_u`-minorant inequality is checked.
    pub fbc_samples: usize,
    /// Subset of those points where `B ≤ C ≤ M` is also reported.
    pub chain_samples: usize,
    /// Number of radii on the geometric decay grid.
    pub decay_points: usize,
    pub growth: GrowthConfig,
    pub backend: AverageBackend,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: 30.0,
            candidates: CandidateParams::default(),
            seed: 0,
            violation_samples: 10_000,
            fbc_samples: 2_000,
            chain_samples: 64,
            decay_points: 40,
            growth: GrowthConfig::default(),
            backend: AverageBackend::closed_form(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbcReport {
    pub samples: usize,
    /// `min_z B_u(z, Q(z)) − log|f(z)|`.
    #[serde(with = "ext_f64")]
    pub min_slack: f64,
    pub argmin: Option<Point>,
    pub chain_samples: usize,
    /// Samples where `B ≤ C ≤ M` failed beyond the backend tolerance.
    pub chain_failures: usize,
    pub pass: bool,
}

/// Checks `log|f(z)| ≤ B_u(z, Q(z))` on `samples`, and the chain
/// `B_u ≤ C_u ≤ M_u` at radius `Q(z)` on the first `chain_samples`.
pub fn verify_fbc(
    f: &LogModulusFunction,
    u: &LogModulusFunction,
    q: f64,
    samples: &[Point],
    chain_samples: usize,
    backend: &AverageBackend,
) -> Result<FbcReport> {
    if f.is_identically_neg_infinite() {
        return Err(Error::pre("f must not vanish identically"));
    }
    let rfun = RadiusFunctionQ::new(q)?;
    let slacks: Vec<f64> =
        samples.par_iter().map(|&z| disk_mean(u, z, rfun.eval(z), backend).value - f.evaluate(z)).collect();
    let (mut min_slack, mut argmin) = (f64::INFINITY, None);
    for (z, s) in samples.iter().zip(&slacks) {
        if *s < min_slack {
            min_slack = *s;
            argmin = Some(*z);
        }
    }
    let k = chain_samples.min(samples.len());
    let tol = backend.tolerance();
    let chain_failures = samples[..k]
        .par_iter()
        .filter(|&&z| {
            let t = rfun.eval(z);
            let b = disk_mean(u, z, t, backend).value;
            let c = circle_mean(u, z, t, backend).value;
            let m = sup_on_circle(u, z, t).value;
            let scale = 1.0 + c.abs();
            b > c + tol * scale || c > m + tol * scale
        })
        .count();
    Ok(FbcReport {
        samples: samples.len(),
        min_slack,
        argmin,
        chain_samples: k,
        chain_failures,
        pass: min_slack >= -FBC_TOLERANCE && chain_failures == 0,
    })
}

/// How the candidate `f_q` is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSpec {
    /// `f_q = e^{-1} P` for `u = log|P|`.
    #[default]
    Scaled,
    /// Each zero `a` moved by `κ Q(a)` in a seeded direction, then shifted
    /// down until the `B_u`-minorant inequality holds on the check points.
    PerturbedZeros { kappa: f64 },
}

/// Margin added to the downward shift of a perturbed candidate.
const PERTURB_MARGIN: f64 = 1e-2;

pub fn synthesize_candidate(
    u: &LogModulusFunction,
    q: f64,
    spec: CandidateSpec,
    check_points: &[Point],
    seed: u64,
    backend: &AverageBackend,
) -> Result<LogModulusFunction> {
    match spec {
        CandidateSpec::Scaled => Ok(u.shifted(-1.0)),
        CandidateSpec::PerturbedZeros { kappa } => {
            if !(0.0..1.0).contains(&kappa) {
                return Err(Error::pre(format!("kappa must lie in [0, 1), got {kappa}")));
            }
            let rfun = RadiusFunctionQ::new(q)?;
            let mut rng = substream(seed, streams::PERTURB);
            let zeros = u
                .zeros()
                .iter()
                .map(|z| {
                    let phi = rng.random::<f64>() * TAU;
                    Zero {
                        location: z.location + Point::polar(kappa * rfun.eval(z.location), phi),
                        multiplicity: z.multiplicity,
                    }
                })
                .collect();
            let p = LogModulusFunction::new(zeros, u.log_lead_coeff(), None, u.constant())?;
            let rep = verify_fbc(&p, u, q, check_points, 0, backend)?;
            Ok(p.shifted(-((-rep.min_slack).max(0.0) + PERTURB_MARGIN)))
        }
    }
}

/// Check points for the `B_u`-minorant inequality: half uniform in the
/// window, half in `D(a, 2Q(a))` around the zeros, cycling through them.
pub fn fbc_check_points(u: &LogModulusFunction, q: f64, window: f64, n: usize, seed: u64) -> Result<Vec<Point>> {
    let rfun = RadiusFunctionQ::new(q)?;
    let mut pts = uniform_in_disk(Point::ORIGIN, window, n - n / 2, seed, streams::VERIFY);
    let zeros = u.zeros();
    if !zeros.is_empty() {
        let mut rng = substream(seed, streams::VERIFY + 100);
        for j in 0..n / 2 {
            let a = zeros[j % zeros.len()].location;
            let rad = 2.0 * rfun.eval(a) * rng.random::<f64>().sqrt();
            pts.push(a + Point::polar(rad, rng.random::<f64>() * TAU));
        }
    }
    Ok(pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `(R, value)` on the grid, zeros included.
    pub series: Vec<(f64, f64)>,
    /// Least-squares slope of `log value` against `log R` over the positive
    /// fit points (the grid, or the corners for ray traces); `−∞` when fewer
    /// than two are positive.
    #[serde(with = "ext_f64")]
    pub slope: f64,
    pub exponent: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn fit_decay(series: Vec<(f64, f64)>, exponent: f64) -> DecayFit {
    let fit = series.clone();
    fit_decay_on(series, &fit, exponent)
}

/// Keeps `series` for reporting and fits the slope on `fit`.
fn fit_decay_on(series: Vec<(f64, f64)>, fit: &[(f64, f64)], exponent: f64) -> DecayFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit.iter().filter(|(_, v)| *v > 0.0).map(|(r, v)| (r.ln(), v.ln())).unzip();
    let slope = if xs.len() >= 2 { least_squares_slope(&xs, &ys) } else { f64::NEG_INFINITY };
    let threshold = -exponent + SLOPE_ALLOWANCE;
    DecayFit { series, slope, exponent, threshold, pass: slope <= threshold }
}

/// Tail sums `Σ_{|z_k| ≥ R} t_k` on a geometric grid over `[r0, r_max]`,
/// fitted against `R^{-exponent}`.
pub fn tail_decay(cover: &DiskCover, r0: f64, r_max: f64, points: usize, exponent: f64) -> Result<DecayFit> {
    if !(r_max > r0 && r0 > 0.0) || points < 2 {
        return Err(Error::pre(format!("decay grid [{r0}, {r_max}] with {points} points is degenerate")));
    }
    let series = geometric_radii(r0, r_max, points).into_iter().map(|r| (r, tail_radius_sum(cover, r))).collect();
    Ok(fit_decay(series, exponent))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardResult {
    pub q_prime: f64,
    pub a_u: f64,
    pub q: f64,
    pub cover: DiskCover,
    pub candidate: LogModulusFunction,
    /// `log|e^{-1} f_q|`.
    pub minorant: LogModulusFunction,
    pub fbc: FbcReport,
    pub constraints: ConstraintReport,
    pub multiplicity: MultiplicityReport,
    pub atoms: usize,
    pub atoms_covered: usize,
    pub members: usize,
    /// Check points outside the cover.
    pub checked_outside: usize,
    pub violation_count: usize,
    #[serde(with = "ext_f64")]
    pub max_excess: f64,
    pub decay: DecayFit,
    #[serde(with = "ext_f64")]
    pub decay_slope: f64,
    pub pass: bool,
}

/// Radii for the measure order: three decades ending at the window.
fn order_radii(window: f64) -> Vec<f64> {
    geometric_radii(window / 1e3, window, 241)
}

pub fn forward_construct(
    u: &LogModulusFunction,
    q_prime: f64,
    candidate: CandidateSpec,
    cfg: &PipelineConfig,
) -> Result<ForwardResult> {
    if !(q_prime > 0.0) {
        return Err(Error::pre(format!("q' must be positive, got {q_prime}")));
    }
    if !(cfg.window >= 4.0) {
        return Err(Error::pre(format!("window must be >= 4, got {}", cfg.window)));
    }
    let mu = u.riesz_measure()?;
    let growth = measure_growth(&mu, &[], &order_radii(cfg.window), &cfg.growth)?;
    let a_u = match growth.order {
        Extended::Finite(v) => v,
        Extended::Infinite => return Err(Error::Estimation("the Riesz measure has infinite order".into())),
    };
    let q = a_u + q_prime + 3.0;
    let rfun = RadiusFunctionQ::new(q)?;

    let check = fbc_check_points(u, q, cfg.window, cfg.fbc_samples, cfg.seed)?;
    let f = synthesize_candidate(u, q, candidate, &check, cfg.seed, &cfg.backend)?;
    let fbc = verify_fbc(&f, u, q, &check, cfg.chain_samples, &cfg.backend)?;
    if !fbc.pass {
        return Err(Error::pre(format!(
            "candidate rejected: B_u-minorant slack {} at {:?}, {} chain failures",
            fbc.min_slack, fbc.argmin, fbc.chain_failures
        )));
    }

    let mut raw = CandidateSet::generate(&mu, &rfun, cfg.window, &cfg.candidates, cfg.seed);
    raw.points.extend(uniform_in_disk(Point::ORIGIN, cfg.window, cfg.violation_samples, cfg.seed, streams::VIOLATION));
    let members = raw.exceptional(&mu, &rfun);
    let mut cover = build_cover(&mu, &rfun, &members)?;
    cover.provenance = Provenance {
        q: Some(q),
        window: Some(cfg.window),
        candidates: format!(
            "atoms={} grid_step={:?} random={} local_per_atom={} violation={} members={}",
            mu.atoms().len(),
            cfg.candidates.grid_step,
            cfg.candidates.random_count,
            cfg.candidates.local_per_atom,
            cfg.violation_samples,
            members.points.len()
        ),
        seed: Some(cfg.seed),
    };
    let constraints = check_constraints(&cover, &mu, &rfun);
    let multiplicity = cover_multiplicity_report(&cover, cfg.seed);

    let minorant = f.shifted(-1.0);
    let idx = cover.index();
    let atoms_covered = mu.atoms().iter().filter(|a| idx.covers(a.location)).count();
    let excess: Vec<Option<f64>> =
        raw.points.par_iter().map(|&z| (!idx.covers(z)).then(|| minorant.evaluate(z) - u.evaluate(z))).collect();
    let outside: Vec<f64> = excess.into_iter().flatten().filter(|e| !e.is_nan()).collect();
    let violation_count = outside.iter().filter(|e| **e > MINORANT_TOLERANCE).count();
    let max_excess = outside.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let decay = tail_decay(&cover, 4.0, cfg.window, cfg.decay_points, q_prime)?;
    let pass = fbc.pass
        && constraints.ok
        && multiplicity.value <= MULTIPLICITY_BOUND
        && atoms_covered == mu.atoms().len()
        && violation_count == 0
        && decay.pass;
    Ok(ForwardResult {
        q_prime,
        a_u,
        q,
        decay_slope: decay.slope,
        cover,
        candidate: f,
        minorant,
        fbc,
        constraints,
        multiplicity,
        atoms: mu.atoms().len(),
        atoms_covered,
        members: members.points.len(),
        checked_outside: outside.len(),
        violation_count,
        max_excess,
        decay,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReverseConfig {
    /// Intermediate exponent; `(q* + q)/2` when absent.
    pub q_prime: Option<f64>,
    pub avoidance_samples: usize,
    /// Points per side of the square check grid over `[−window, window]²`.
    pub grid: usize,
}

impl Default for ReverseConfig {
    fn default() -> Self {
        ReverseConfig { q_prime: None, avoidance_samples: 100, grid: 200 }
    }
}

/// One circle-averaging step at a point `|z| ≥ R_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceSample {
    pub z: Point,
    pub r: f64,
    /// `log|f(z)|`, `C_f(z, r)`, `C_u(z, r)`, `C_u(z, (1+|z|)^{-q′})`.
    #[serde(with = "chain_values")]
    pub chain: [f64; 4],
    pub ok: bool,
}

mod chain_values {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; 4], s: S) -> Result<S::Ok, S::Error> {
        let enc: Vec<serde_json::Value> = v
            .iter()
            .map(|x| {
                if x.is_finite() {
                    serde_json::json!(x)
                } else if *x < 0.0 {
                    serde_json::json!("-inf")
                } else {
                    serde_json::json!("+inf")
                }
            })
            .collect();
        enc.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 4], D::Error> {
        let raw = <[serde_json::Value; 4]>::deserialize(d)?;
        let mut out = [0.0; 4];
        for (o, v) in out.iter_mut().zip(raw) {
            *o = match v {
                serde_json::Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
                serde_json::Value::String(s) if s == "-inf" => f64::NEG_INFINITY,
                serde_json::Value::String(s) if s == "+inf" => f64::INFINITY,
                other => return Err(serde::de::Error::custom(format!("bad chain value {other}"))),
            };
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseResult {
    pub q_star: f64,
    /// Tail exponent of the input cover.
    pub q: f64,
    pub q_prime: f64,
    pub r_q: f64,
    pub c: f64,
    pub avoidance: Vec<AvoidanceSample>,
    pub avoidance_failures: usize,
    pub chain_failures: usize,
    pub log_a: f64,
    pub log_b: f64,
    /// `log(a·b)`.
    pub scale_log: f64,
    pub grid_points: usize,
    #[serde(with = "ext_f64")]
    pub fbc_slack_min: f64,
    pub argmin: Option<Point>,
    pub pass: bool,
}

fn square_grid(half_width: f64, n: usize) -> Vec<Point> {
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| Point::new(-half_width + i as f64 * step, -half_width + j as f64 * step)))
        .collect()
}

/// From `log|f| ≤ u` off `cover` (tail exponent `q`) to
/// `log|a b f(z)| ≤ B_u(z, (1+|z|)^{-q*})`, checked on a square grid.
pub fn reverse_construct(
    f: &LogModulusFunction,
    cover: &DiskCover,
    u: &LogModulusFunction,
    q: f64,
    q_star: f64,
    window: f64,
    cfg: &ReverseConfig,
    seed: u64,
    backend: &AverageBackend,
) -> Result<ReverseResult> {
    if !(q_star >= 0.0 && q_star < q) {
        return Err(Error::pre(format!("need 0 <= q* < q, got q* = {q_star}, q = {q}")));
    }
    let q_prime = cfg.q_prime.unwrap_or(0.5 * (q_star + q));
    if !(q_star < q_prime && q_prime < q) {
        return Err(Error::pre(format!("need q* < q' < q, got {q_star}, {q_prime}, {q}")));
    }
    if f.is_identically_neg_infinite() {
        return Err(Error::pre("f must not vanish identically"));
    }
    if cfg.grid < 2 {
        return Err(Error::pre("grid needs at least 2 points per side"));
    }
    let est = estimate_rq(cover, q, q_prime)?;

    let mut rng = substream(seed, streams::AVOIDANCE);
    let zs: Vec<Point> = (0..cfg.avoidance_samples)
        .map(|_| Point::polar(est.r_q * (1.0 + rng.random::<f64>()), rng.random::<f64>() * TAU))
        .collect();
    let outcomes: Vec<Option<AvoidanceSample>> = zs
        .par_iter()
        .map(|&z| {
            let r = find_avoiding_radius_decaying(cover, z, q_prime, est.r_q).ok()?;
            let outer = (1.0 + z.norm()).powf(-q_prime);
            let chain = [
                f.evaluate(z),
                circle_mean(f, z, r, backend).value,
                circle_mean(u, z, r, backend).value,
                circle_mean(u, z, outer, backend).value,
            ];
            let tol = backend.tolerance();
            let ok = chain.windows(2).all(|w| w[0] <= w[1] + tol * (1.0 + w[1].abs()));
            Some(AvoidanceSample { z, r, chain, ok })
        })
        .collect();
    let avoidance_failures = outcomes.iter().filter(|o| o.is_none()).count();
    let avoidance: Vec<AvoidanceSample> = outcomes.into_iter().flatten().collect();
    let chain_failures = avoidance.iter().filter(|s| !s.ok).count();

    let grid = square_grid(window, cfg.grid);
    let star = RadiusFunctionQ::new(q_star)?;
    let inner = RadiusFunctionQ::new(q_prime)?;
    let fv: Vec<f64> = grid.par_iter().map(|&z| f.evaluate(z)).collect();
    // a: log|a f| ≤ C_u(z, (1+|z|)^{-q′}) inside D(R_q), where no avoiding
    // circle is available.
    let log_a = grid
        .par_iter()
        .zip(&fv)
        .filter(|(z, _)| z.norm() <= est.r_q)
        .map(|(&z, &v)| circle_mean(u, z, inner.eval(z), backend).value - v)
        .reduce(|| f64::INFINITY, f64::min)
        .min(0.0);
    // b: the passage from circle means at (1+|z|)^{-q′} to disk means at
    // Q*(z) through C(z, t) ≤ B(z, √e t).
    let log_b = grid
        .par_iter()
        .zip(&fv)
        .map(|(&z, &v)| circle_mean(u, z, star.eval(z) / E.sqrt(), backend).value - v - log_a)
        .reduce(|| f64::INFINITY, f64::min)
        .min(0.0);
    let scale_log = log_a + log_b;
    let slacks: Vec<f64> = grid
        .par_iter()
        .zip(&fv)
        .map(|(&z, &v)| disk_mean(u, z, star.eval(z), backend).value - (v + scale_log))
        .collect();
    let (mut fbc_slack_min, mut argmin) = (f64::INFINITY, None);
    for (z, s) in grid.iter().zip(&slacks) {
        if *s < fbc_slack_min {
            fbc_slack_min = *s;
            argmin = Some(*z);
        }
    }
    let pass = avoidance_failures == 0 && chain_failures == 0 && fbc_slack_min >= -FBC_TOLERANCE;
    Ok(ReverseResult {
        q_star,
        q,
        q_prime,
        r_q: est.r_q,
        c: est.c,
        avoidance,
        avoidance_failures,
        chain_failures,
        log_a,
        log_b,
        scale_log,
        grid_points: grid.len(),
        fbc_slack_min,
        argmin,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayReport {
    /// `(R, mes(L ∩ E_q ∖ D(R)))` on the grid, slope fitted on `corners`.
    pub decay: DecayFit,
    /// The same measure at each chord's distance from the origin inside the
    /// grid range. These are the corners of the nonincreasing step function,
    /// so they fix its tightest `C R^{-q}` envelope, while grid points on a
    /// flat stretch read as slope 0.
    pub corners: Vec<(f64, f64)>,
    /// `(R, mes((L ∩ D(window)) ∖ (E_q ∪ D(R))))`, reported only.
    pub printed: Vec<(f64, f64)>,
}

/// Parameter intervals `{s ≥ 0 : |anchor + s·d − c| < t}` of the ray inside
/// each disk.
fn ray_chords(cover: &DiskCover, ray: &Ray) -> IntervalUnion {
    let d = ray.direction();
    let pieces = cover.disks.iter().filter_map(|k| {
        let w = k.center - ray.anchor;
        let s0 = w.dot(d);
        // Perpendicular distance from the cross product: |w|² − s0² cancels.
        let perp = (w.re * d.im - w.im * d.re).abs();
        let h2 = (k.radius - perp) * (k.radius + perp);
        (h2 > 0.0).then(|| (s0 - h2.sqrt(), s0 + h2.sqrt()))
    });
    IntervalUnion::from_pieces(pieces, f64::INFINITY)
}

/// `{s ≥ 0 : |anchor + s·d| < R}` as an interval, possibly empty.
fn ray_in_disk(ray: &Ray, r: f64) -> (f64, f64) {
    let d = ray.direction();
    let b = ray.anchor.dot(d);
    let c = ray.anchor.norm_sqr() - r * r;
    let disc = b * b - c;
    if disc <= 0.0 {
        return (0.0, 0.0);
    }
    let root = disc.sqrt();
    ((-b - root).max(0.0), (-b + root).max(0.0))
}

fn overlap(intervals: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    intervals.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
}

pub fn verify_ray_measure(cover: &DiskCover, ray: &Ray, r_grid: &[f64], exponent: f64, window: f64) -> RayReport {
    let chords = ray_chords(cover, ray);
    let outside = |r: f64| {
        let (lo, hi) = ray_in_disk(ray, r);
        overlap(&chords.intervals, 0.0, lo) + overlap(&chords.intervals, hi, f64::INFINITY)
    };
    let (wlo, whi) = ray_in_disk(ray, window);
    let mut series = Vec::with_capacity(r_grid.len());
    let mut printed = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let (lo, hi) = ray_in_disk(ray, r);
        series.push((r, outside(r)));
        // L ∩ D(window) ∖ D(R): [wlo, whi] minus [lo, hi].
        let span = (whi - wlo) - (hi.min(whi) - lo.max(wlo)).max(0.0);
        let covered = overlap(&chords.intervals, wlo, whi)
            - overlap(&chords.intervals, lo.max(wlo), hi.min(whi).max(lo.max(wlo)));
        printed.push((r, (span - covered).max(0.0)));
    }
    let (gmin, gmax) = (r_grid.first().copied().unwrap_or(0.0), r_grid.last().copied().unwrap_or(0.0));
    let d = ray.direction();
    let mut radii: Vec<f64> = chords
        .intervals
        .iter()
        .map(|&(a, b)| ray.at((-ray.anchor.dot(d)).clamp(a, b)).norm())
        .filter(|&r| r >= gmin && r <= gmax)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let corners: Vec<(f64, f64)> = radii.into_iter().map(|r| (r, outside(r))).collect();
    RayReport { decay: fit_decay_on(series, &corners, exponent), corners, printed }
}

/// `mes(E_q ∩ ∂D̄(R))` as the arc-union length.
pub fn circle_arc_measure(cover: &DiskCover, r: f64) -> f64 {
    let pieces: Vec<(f64, f64)> = cover
        .disks
        .iter()
        .filter(|k| (k.center.norm() - r).abs() < k.radius)
        .filter_map(|k| circle_disk_arc(Point::ORIGIN, r, &Disk::open(k.center, k.radius)))
        .flat_map(|a| a.pieces())
        .collect();
    r * IntervalUnion::from_pieces(pieces, TAU).length()
}

/// Radii for the circle trace: distinct center moduli `≥ r0`, thinned to
/// at most `max_points`.
pub fn circle_grid(cover: &DiskCover, r0: f64, max_points: usize) -> Vec<f64> {
    let mut m: Vec<f64> = cover.disks.iter().map(|k| k.center.norm()).filter(|&r| r >= r0).collect();
    m.sort_by(f64::total_cmp);
    m.dedup();
    if m.len() <= max_points || max_points < 2 {
        return m;
    }
    (0..max_points).map(|i| m[i * (m.len() - 1) / (max_points - 1)]).collect()
}

pub fn verify_circle_measure(cover: &DiskCover, r_grid: &[f64], exponent: f64) -> DecayFit {
    let series = r_grid.par_iter().map(|&r| (r, circle_arc_measure(cover, r))).collect();
    fit_decay(series, exponent)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeComparison {
    pub p: f64,
    pub u: Extended,
    pub f: Extended,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorComparison {
    pub p: f64,
    pub angle: f64,
    pub u: f64,
    pub f: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplementReport {
    pub order_u: Extended,
    pub order_f: Extended,
    pub order_ok: bool,
    pub types: Vec<TypeComparison>,
    pub indicators: Vec<IndicatorComparison>,
    pub pass: bool,
}

/// Tolerances of the growth comparison.
pub const ORDER_SLACK: f64 = 0.05;
pub const TYPE_SLACK: f64 = 0.05;
pub const INDICATOR_SLACK: f64 = 0.02;

/// Compares order, types and indicators of `log|f|` against those of `u`,
/// all read from `M^rad` and rays on the geometric `radii`.
pub fn growth_supplement_check<U: Subharmonic + ?Sized, F: Subharmonic + ?Sized>(
    u: &U,
    f: &F,
    p_grid: &[f64],
    angle_grid: &[f64],
    radii: &[f64],
    cfg: &GrowthConfig,
) -> Result<SupplementReport> {
    let mu = sup_radial_samples(u, radii)?;
    let mf = sup_radial_samples(f, radii)?;
    let order_u = order_of(&mu, cfg)?;
    let order_f = order_of(&mf, cfg)?;
    let order_ok = match (order_u, order_f) {
        (Extended::Infinite, _) => true,
        (Extended::Finite(_), Extended::Infinite) => false,
        (Extended::Finite(a), Extended::Finite(b)) => b <= a + ORDER_SLACK,
    };
    let mut types = Vec::with_capacity(p_grid.len());
    let mut indicators = Vec::new();
    for &p in p_grid {
        let tu = type_p(&mu, p, cfg)?;
        let tf = type_p(&mf, p, cfg)?;
        let ok = match (tu, tf) {
            (Extended::Infinite, _) => true,
            (Extended::Finite(_), Extended::Infinite) => false,
            (Extended::Finite(a), Extended::Finite(b)) => b <= a * (1.0 + TYPE_SLACK) + 1e-12,
        };
        types.push(TypeComparison { p, u: tu, f: tf, ok });
        if p > 0.0 && tu.is_finite() {
            for &s in angle_grid {
                let iu = indicator_at(u, p, s, radii, cfg)?;
                let i_f = indicator_at(f, p, s, radii, cfg)?;
                indicators.push(IndicatorComparison { p, angle: s, u: iu, f: i_f, ok: i_f <= iu + INDICATOR_SLACK });
            }
        }
    }
    let pass = order_ok && types.iter().all(|t| t.ok) && indicators.iter().all(|i| i.ok);
    Ok(SupplementReport { order_u, order_f, order_ok, types, indicators, pass })
}
