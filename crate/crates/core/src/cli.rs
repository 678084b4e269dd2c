//! Scenario runner behind the `minorant` binary.
//!
//! A scenario is a JSON file naming a command, a function and the
//! exponents, window and seed; running it yields a [`Report`] (results,
//! verdicts and plot series) written as `report.json`, one CSV per series
//! and a separate `timings.json`. Wall-clock data never enters the report,
//! so reports are byte-identical across runs.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::avoidance::{circle_misses, estimate_rq, find_avoiding_radius_decaying};
use crate::covering::{
    build_cover, check_constraints, cover_multiplicity_report, tail_radius_sum, uncovered_fraction, uniform_in_disk,
    verify_sum_bound, CandidateParams, CandidateSet, Region, MULTIPLICITY_BOUND,
};
use crate::geom::{Point, RadiusFunctionQ, Ray};
use crate::growth::{geometric_radii, growth_scale, order_of, order_via_types, sup_radial_samples, GrowthConfig};
use crate::measures::measure_growth;
use crate::oracles::mc_arc_measure;
use crate::pipeline::{
    circle_grid, forward_construct, growth_supplement_check, reverse_construct, synthetic_family,
    verify_circle_measure, verify_ray_measure, CandidateSpec, ForwardResult, PipelineConfig, ReverseConfig,
};
use crate::rng::{streams, substream};
use crate::subfun::{
    cb_sandwich_check, circle_mean, dc_chain_check, poisson_jensen_residual, sup_on_circle, AverageBackend,
    LogModulusFunction,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable fixing the worker-thread count.
pub const THREADS_ENV: &str = "MINORANT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Averages,
    Growth,
    Cover,
    Avoid,
    Forward,
    Reverse,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSource {
    /// Zeros at `k^{1/ρ} e^{i(k mod 8)π/4}` inside the window.
    Synthetic {
        synthetic: SyntheticSpec,
    },
    Explicit(LogModulusFunction),
}

/// Sample sizes and grids; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub averages: usize,
    pub violation: usize,
    pub fbc: usize,
    pub chain: usize,
    pub decay_points: usize,
    pub avoidance: usize,
    pub reverse_grid: usize,
    pub regions: usize,
    pub containment: usize,
    pub mc_samples: usize,
    pub mc_radii: usize,
    pub circle_radii: usize,
    /// `[lo, hi, count]` of the geometric growth grid.
    pub growth_radii: [f64; 3],
    pub p_grid: Vec<f64>,
    pub angles: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            averages: 500,
            violation: 10_000,
            fbc: 2_000,
            chain: 64,
            decay_points: 40,
            avoidance: 100,
            reverse_grid: 200,
            regions: 50,
            containment: 10_000,
            mc_samples: 1_000_000,
            mc_radii: 5,
            circle_radii: 200,
            growth_radii: [10.0, 1e6, 121.0],
            p_grid: vec![0.5, 1.0, 2.0, 3.0],
            angles: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    pub function: FunctionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_star: Option<f64>,
    pub window: f64,
    #[serde(default)]
    pub candidates: CandidateParams,
    #[serde(default)]
    pub candidate: CandidateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: AverageBackend,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub growth: GrowthConfig,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.window >= 4.0) || !self.window.is_finite() {
            return Err(config_error("window", format!("must be finite and >= 4, got {}", self.window)));
        }
        for (name, v) in [("q_prime", self.q_prime), ("q_star", self.q_star)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(config_error(name, format!("must be finite and >= 0, got {v}")));
                }
            }
        }
        let needs_q_prime = !matches!(self.command, Command::Averages | Command::Growth);
        if needs_q_prime && !self.q_prime().is_some_and(|q| q > 0.0) {
            return Err(config_error("q_prime", "a positive q_prime is required for this command"));
        }
        if self.command == Command::Reverse && self.q_star.is_none() {
            return Err(config_error("q_star", "required for the reverse command"));
        }
        if self.command != Command::Growth && self.seed.is_none() {
            return Err(config_error("seed", "required for stochastic commands"));
        }
        self.backend.validate().map_err(|e| config_error("backend", e.to_string()))?;
        if let FunctionSource::Synthetic { synthetic } = self.function {
            if !(synthetic.rho > 0.0) {
                return Err(config_error("function.synthetic.rho", "must be positive"));
            }
        }
        let [lo, hi, n] = self.samples.growth_radii;
        if !(lo > 0.0 && hi > lo && n >= 2.0) {
            return Err(config_error("samples.growth_radii", "need 0 < lo < hi and count >= 2"));
        }
        if self.samples.reverse_grid < 2 || self.samples.decay_points < 2 {
            return Err(config_error("samples", "reverse_grid and decay_points must be >= 2"));
        }
        Ok(())
    }

    pub fn function(&self) -> Result<LogModulusFunction> {
        match &self.function {
            FunctionSource::Synthetic { synthetic } => synthetic_family(synthetic.rho, self.window),
            FunctionSource::Explicit(u) => Ok(u.clone()),
        }
    }

    /// The forward exponent; a reverse scenario giving only `q_star`
    /// runs forward at `q_star + 0.5`.
    pub fn q_prime(&self) -> Option<f64> {
        match (self.q_prime, self.command, self.q_star) {
            (None, Command::Reverse, Some(qs)) => Some(qs + 0.5),
            (qp, _, _) => qp,
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            window: self.window,
            candidates: self.candidates,
            seed: self.seed(),
            violation_samples: self.samples.violation,
            fbc_samples: self.samples.fbc,
            chain_samples: self.samples.chain,
            decay_points: self.samples.decay_points,
            growth: self.growth,
            backend: self.backend,
        }
    }
}

/// Parses and validates a scenario; field paths appear in errors.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })?;
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub type Series = Vec<(f64, f64)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub results: serde_json::Value,
    pub verdicts: BTreeMap<String, bool>,
    /// "pass" iff every verdict passes.
    pub verdict: String,
    pub series: BTreeMap<String, Series>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }

    /// Canonical serialization: pretty JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Phase durations in seconds, kept apart from the report.
pub type Timings = BTreeMap<String, f64>;

#[derive(Default)]
struct Outcome {
    results: BTreeMap<String, serde_json::Value>,
    verdicts: BTreeMap<String, bool>,
    series: BTreeMap<String, Series>,
    timings: Timings,
}

impl Outcome {
    fn result<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
        self.results.insert(key.into(), v);
        Ok(())
    }

    fn verdict(&mut self, key: &str, ok: bool) {
        self.verdicts.insert(key.into(), ok);
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f();
        self.timings.insert(phase.into(), t.elapsed().as_secs_f64());
        out
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<(Report, Timings)> {
    sc.validate()?;
    let u = sc.function()?;
    let mut out = Outcome::default();
    let ran = match sc.command {
        Command::Averages => run_averages(sc, &u, &mut out),
        Command::Growth => run_growth(sc, &u, &mut out),
        Command::Cover => run_cover(sc, &u, &mut out),
        Command::Avoid => run_forward(sc, &u, &mut out).and_then(|fwd| run_avoid(sc, &fwd, &mut out)),
        Command::Forward => run_forward(sc, &u, &mut out).map(|_| ()),
        Command::Reverse => run_forward(sc, &u, &mut out).and_then(|fwd| run_reverse(sc, &u, &fwd, &mut out)),
        Command::Verify => run_forward(sc, &u, &mut out).and_then(|fwd| run_traces(sc, &u, &fwd, &mut out)),
    };
    // A failing pipeline still yields a report, with a failed verdict.
    if let Err(e) = ran {
        out.verdict("pipeline", false);
        out.result("error", &e.to_string())?;
    }
    let pass = out.verdicts.values().all(|v| *v);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: sc.clone(),
        results: serde_json::Value::Object(out.results.into_iter().collect()),
        verdicts: out.verdicts,
        verdict: if pass { "pass" } else { "fail" }.into(),
        series: out.series,
    };
    Ok((report, out.timings))
}

#[derive(Serialize)]
struct AveragesSummary {
    samples: usize,
    pj_checked: usize,
    pj_max_residual: f64,
    quadrature_max_difference: f64,
    sandwich_failures: usize,
    chain_failures: usize,
    dc_chain: Vec<crate::subfun::ChainReport>,
}

fn run_averages(sc: &Scenario, u: &LogModulusFunction, out: &mut Outcome) -> Result<()> {
    let mut rng = substream(sc.seed(), streams::AVERAGES);
    let half = 0.5 * sc.window;
    let pts: Vec<(Point, f64)> = (0..sc.samples.averages)
        .map(|_| {
            let z = Point::polar(half * rng.random::<f64>().sqrt(), rng.random::<f64>() * TAU);
            (z, rng.random_range(0.01 * sc.window..half))
        })
        .collect();
    let atomic = u.radial().is_none();
    let quad = AverageBackend { kind: crate::subfun::BackendKind::Quadrature, ..sc.backend };
    let rows: Vec<(Option<f64>, f64, bool, bool)> = out.timed("averages", || {
        Ok(pts
            .par_iter()
            .map(|&(z, r)| {
                let clear = !u.zero_near_circle(z, r, 1e-3) && u.zeros().iter().all(|a| a.location.dist(z) >= 1e-3);
                let pj = if atomic && clear { poisson_jensen_residual(u, z, r).ok().flatten() } else { None };
                let qd = if clear {
                    (circle_mean(u, z, r, &quad).value - circle_mean(u, z, r, &AverageBackend::closed_form()).value)
                        .abs()
                } else {
                    0.0
                };
                let s = cb_sandwich_check(u, z, r, &sc.backend);
                let m = sup_on_circle(u, z, r).value;
                let chain_ok = s.c <= m + sc.backend.tolerance() * (1.0 + s.c.abs());
                (pj, qd, s.ok, chain_ok)
            })
            .collect())
    })?;
    let pj: Vec<f64> = rows.iter().filter_map(|r| r.0).map(f64::abs).collect();
    let dc_chain = if atomic {
        [std::f64::consts::E, 10.0, sc.window].iter().map(|&r| dc_chain_check(u, r)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let summary = AveragesSummary {
        samples: rows.len(),
        pj_checked: pj.len(),
        pj_max_residual: pj.iter().copied().fold(0.0, f64::max),
        quadrature_max_difference: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        sandwich_failures: rows.iter().filter(|r| !r.2).count(),
        chain_failures: rows.iter().filter(|r| !r.3).count(),
        dc_chain,
    };
    if atomic {
        out.verdict("poisson_jensen", summary.pj_max_residual <= 1e-10);
        out.verdict("dc_chain", summary.dc_chain.iter().all(|c| c.ok));
    }
    out.verdict("quadrature_agreement", summary.quadrature_max_difference <= AverageBackend::quadrature().tolerance());
    out.verdict("cb_sandwich", summary.sandwich_failures == 0);
    out.verdict("average_chain", summary.chain_failures == 0);
    out.result("averages", &summary)
}

fn growth_radii(sc: &Scenario) -> Vec<f64> {
    let [lo, hi, n] = sc.samples.growth_radii;
    geometric_radii(lo, hi, n as usize)
}

fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * TAU / n as f64).collect()
}

fn run_growth(sc: &Scenario, u: &LogModulusFunction, out: &mut Outcome) -> Result<()> {
    let radii = growth_radii(sc);
    let angles = angle_grid(sc.samples.angles);
    let scale = out.timed("growth", || growth_scale(u, &sc.samples.p_grid, &angles, &radii, &sc.growth))?;
    let m = sup_radial_samples(u, &radii)?;
    let a = order_of(&m, &sc.growth)?;
    let b = order_via_types(&m, &sc.growth)?;
    let consistent = match (a, b) {
        (crate::Extended::Finite(x), crate::Extended::Finite(y)) => (x - y).abs() <= 0.1,
        (x, y) => x.is_infinite() && y.is_infinite(),
    };
    out.verdict("order_consistency", consistent);
    out.result("growth_scale", &scale)?;
    out.result("order_via_types", &b)?;
    if u.radial().is_none() && !u.zeros().is_empty() {
        let mu = u.riesz_measure()?;
        let mg =
            measure_growth(&mu, &sc.samples.p_grid, &geometric_radii(sc.window / 1e3, sc.window, 241), &sc.growth)?;
        out.result("measure_growth", &mg)?;
    }
    out.series.insert("m_rad".into(), m.radii().iter().copied().zip(m.values().iter().copied()).collect());
    if let Some((_, ind)) = scale.indicators.first() {
        out.series.insert("indicator".into(), ind.clone());
    }
    Ok(())
}

#[derive(Serialize)]
struct CoverSummary {
    a_u: f64,
    q: f64,
    disks: usize,
    members: usize,
    sup_radius: f64,
    constraints: crate::covering::ConstraintReport,
    multiplicity: crate::covering::MultiplicityReport,
    regions_checked: usize,
    regions_failed: usize,
    containment_members: usize,
    containment_uncovered: usize,
}

/// Seeded rectangles and disks inside the window.
pub fn seeded_regions(window: f64, n: usize, seed: u64) -> Vec<Region> {
    let mut rng = substream(seed, streams::REGIONS);
    (0..n)
        .map(|k| {
            let c = Point::polar(window * rng.random::<f64>().sqrt(), rng.random::<f64>() * TAU);
            let size = window * 10f64.powf(rng.random_range(-3.0..-0.5));
            if k % 2 == 0 {
                Region::Rect { min: c - Point::new(size, 0.5 * size), max: c + Point::new(size, 0.5 * size) }
            } else {
                Region::Disk { center: c, radius: size }
            }
        })
        .collect()
}

fn run_cover(sc: &Scenario, u: &LogModulusFunction, out: &mut Outcome) -> Result<()> {
    let q_prime = sc.q_prime().unwrap_or(1.0);
    let mu = u.riesz_measure()?;
    let mg = measure_growth(&mu, &[], &geometric_radii(sc.window / 1e3, sc.window, 241), &sc.growth)?;
    let a_u = mg.order.value();
    if !a_u.is_finite() {
        return Err(Error::Estimation("the Riesz measure has infinite order".into()));
    }
    let q = a_u + q_prime + 3.0;
    let rfun = RadiusFunctionQ::new(q)?;
    let (cover, members) = out.timed("cover", || {
        let raw = CandidateSet::generate(&mu, &rfun, sc.window, &sc.candidates, sc.seed());
        let members = raw.exceptional(&mu, &rfun);
        let cover = build_cover(&mu, &rfun, &members)?;
        Ok((cover, members.points.len()))
    })?;
    let constraints = check_constraints(&cover, &mu, &rfun);
    let multiplicity = cover_multiplicity_report(&cover, sc.seed());
    let d = 2.0 * cover.sup_radius();
    let regions = seeded_regions(sc.window, sc.samples.regions, sc.seed());
    let mut failed = 0;
    if d > 0.0 {
        for s in &regions {
            if !verify_sum_bound(&cover, &mu, &rfun, s, d)?.ok {
                failed += 1;
            }
        }
    }
    let probes = uniform_in_disk(Point::ORIGIN, sc.window, sc.samples.containment, sc.seed(), streams::VERIFY + 200);
    let (cm, cu) = uncovered_fraction(&cover, &mu, &rfun, &probes);
    out.verdict("cover_constraints", constraints.ok);
    out.verdict("multiplicity", multiplicity.value <= MULTIPLICITY_BOUND);
    out.verdict("sum_bound", failed == 0);
    out.series.insert("tail_sum".into(), tail_series(&cover, sc));
    let summary = CoverSummary {
        a_u,
        q,
        disks: cover.len(),
        members,
        sup_radius: cover.sup_radius(),
        constraints,
        multiplicity,
        regions_checked: regions.len(),
        regions_failed: failed,
        containment_members: cm,
        containment_uncovered: cu,
    };
    out.result("cover_summary", &summary)?;
    out.result("cover", &cover)
}

fn tail_series(cover: &crate::covering::DiskCover, sc: &Scenario) -> Series {
    geometric_radii(4.0, sc.window, sc.samples.decay_points)
        .into_iter()
        .map(|r| (r, tail_radius_sum(cover, r)))
        .collect()
}

fn run_forward(sc: &Scenario, u: &LogModulusFunction, out: &mut Outcome) -> Result<ForwardResult> {
    let q_prime = sc.q_prime().unwrap_or(1.0);
    let cfg = sc.pipeline_config();
    let fwd = out.timed("forward", || forward_construct(u, q_prime, sc.candidate, &cfg))?;
    out.verdict("fbc", fwd.fbc.pass);
    out.verdict("cover_constraints", fwd.constraints.ok);
    out.verdict("multiplicity", fwd.multiplicity.value <= MULTIPLICITY_BOUND);
    out.verdict("atoms_covered", fwd.atoms_covered == fwd.atoms);
    out.verdict("minorant", fwd.violation_count == 0);
    out.verdict("tail_decay", fwd.decay.pass);
    out.series.insert("tail_sum".into(), fwd.decay.series.clone());
    out.result("forward", &fwd)?;
    Ok(fwd)
}

#[derive(Serialize)]
struct AvoidSummary {
    q: f64,
    q_prime: f64,
    r_q: f64,
    c: f64,
    samples: usize,
    succeeded: usize,
    recheck_failures: usize,
    max_ratio: f64,
}

/// Exponents of the reverse step: the cover's tail exponent `q` and the
/// avoidance exponent `q′`, halfway to `q*` (or to zero).
fn reverse_exponents(sc: &Scenario, fwd: &ForwardResult) -> (f64, f64) {
    let q = fwd.q_prime;
    (q, 0.5 * (sc.q_star.unwrap_or(0.0) + q))
}

fn run_avoid(sc: &Scenario, fwd: &ForwardResult, out: &mut Outcome) -> Result<()> {
    let (q, q_prime) = reverse_exponents(sc, fwd);
    let est = estimate_rq(&fwd.cover, q, q_prime)?;
    let mut rng = substream(sc.seed(), streams::AVOIDANCE);
    let zs: Vec<Point> = (0..sc.samples.avoidance)
        .map(|_| Point::polar(est.r_q * (1.0 + rng.random::<f64>()), rng.random::<f64>() * TAU))
        .collect();
    let rows: Vec<Option<(f64, f64, bool)>> = out.timed("avoid", || {
        Ok(zs
            .par_iter()
            .map(|&z| {
                let r = find_avoiding_radius_decaying(&fwd.cover, z, q_prime, est.r_q).ok()?;
                let ok = fwd.cover.disks.iter().all(|d| circle_misses(z, r, d));
                Some((z.norm(), r, ok && r <= (1.0 + z.norm()).powf(-q_prime)))
            })
            .collect())
    })?;
    let ok_rows: Vec<(f64, f64, bool)> = rows.iter().flatten().copied().collect();
    let summary = AvoidSummary {
        q,
        q_prime,
        r_q: est.r_q,
        c: est.c,
        samples: rows.len(),
        succeeded: ok_rows.len(),
        recheck_failures: ok_rows.iter().filter(|r| !r.2).count(),
        max_ratio: ok_rows.iter().map(|r| r.1 * (1.0 + r.0).powf(q_prime)).fold(0.0, f64::max),
    };
    out.verdict("avoidance", summary.succeeded == summary.samples && summary.recheck_failures == 0);
    out.series.insert("avoidance_radius".into(), ok_rows.iter().map(|r| (r.0, r.1)).collect());
    out.result("avoid", &summary)
}

fn run_reverse(sc: &Scenario, u: &LogModulusFunction, fwd: &ForwardResult, out: &mut Outcome) -> Result<()> {
    let (q, q_prime) = reverse_exponents(sc, fwd);
    let q_star = sc.q_star.unwrap_or(0.0);
    let cfg = ReverseConfig {
        q_prime: Some(q_prime),
        avoidance_samples: sc.samples.avoidance,
        grid: sc.samples.reverse_grid,
    };
    let rev = out.timed("reverse", || {
        reverse_construct(&fwd.minorant, &fwd.cover, u, q, q_star, sc.window, &cfg, sc.seed(), &sc.backend)
    })?;
    out.verdict("avoidance", rev.avoidance_failures == 0 && rev.chain_failures == 0);
    out.verdict("reverse_fbc", rev.fbc_slack_min >= -crate::pipeline::FBC_TOLERANCE);
    out.series.insert("avoidance_radius".into(), rev.avoidance.iter().map(|s| (s.z.norm(), s.r)).collect());
    out.result("reverse", &rev)
}

#[derive(Serialize)]
struct McCheck {
    r: f64,
    exact: f64,
    samples: usize,
    estimate: f64,
    std_error: f64,
    ok: bool,
}

/// Largest number of Monte Carlo samples spent on one radius.
pub const MC_MAX_SAMPLES: usize = 20_000_000;
/// Expected hit count below which a 3 SE band is not meaningful.
pub const MC_MIN_HITS: f64 = 100.0;

/// Up to `count` radii of an arc-measure series with the largest covered
/// fraction, each with a sample size giving at least [`MC_MIN_HITS`]
/// expected hits; radii needing more than [`MC_MAX_SAMPLES`] are skipped.
pub fn mc_radii(series: &[(f64, f64)], count: usize, base_samples: usize) -> Vec<(f64, f64, usize)> {
    let mut ranked: Vec<(f64, f64, f64)> = series
        .iter()
        .map(|&(r, m)| (r, m, m / (2.0 * PI * r)))
        .filter(|&(_, _, p)| p > 0.0 && p * MC_MAX_SAMPLES as f64 >= MC_MIN_HITS)
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut out: Vec<(f64, f64, usize)> = ranked
        .into_iter()
        .take(count)
        .map(|(r, m, p)| (r, m, base_samples.max((MC_MIN_HITS / p).ceil() as usize).min(MC_MAX_SAMPLES)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Monte Carlo cross-check of the exact arc measure; the standard error
/// comes from the exact hit probability.
pub fn arc_mc_check(
    cover: &crate::covering::DiskCover,
    r: f64,
    exact: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64, bool)> {
    let (est, _) = mc_arc_measure(cover, r, samples, seed)?;
    let len = 2.0 * PI * r;
    let p = (exact / len).clamp(0.0, 1.0);
    let se = len * (p * (1.0 - p) / samples as f64).sqrt();
    let ok = (est - exact).abs() <= 3.0 * se + 1e-12 * len;
    Ok((est, se, ok))
}

fn run_traces(sc: &Scenario, u: &LogModulusFunction, fwd: &ForwardResult, out: &mut Outcome) -> Result<()> {
    let exponent = fwd.q_prime;
    let ray = Ray::new(Point::ORIGIN, 0.0);
    let r_grid = geometric_radii(4.0, sc.window, sc.samples.decay_points);
    let ray_rep = verify_ray_measure(&fwd.cover, &ray, &r_grid, exponent, sc.window);
    let grid = circle_grid(&fwd.cover, 4.0, sc.samples.circle_radii);
    let circ = out.timed("circle", || Ok(verify_circle_measure(&fwd.cover, &grid, exponent)))?;
    let picks = mc_radii(&circ.series, sc.samples.mc_radii, sc.samples.mc_samples);
    let mc: Vec<McCheck> = out.timed("circle_mc", || {
        picks
            .iter()
            .enumerate()
            .map(|(i, &(r, exact, samples))| {
                let (estimate, std_error, ok) = arc_mc_check(&fwd.cover, r, exact, samples, sc.seed() + i as u64)?;
                Ok(McCheck { r, exact, samples, estimate, std_error, ok })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let radii = growth_radii(sc);
    let angles = angle_grid(sc.samples.angles.min(16));
    let supp = out.timed("growth_supplement", || {
        growth_supplement_check(u, &fwd.minorant, &sc.samples.p_grid, &angles, &radii, &sc.growth)
    })?;
    out.verdict("ray_decay", ray_rep.decay.pass);
    out.verdict("circle_decay", circ.pass);
    out.verdict("circle_mc", !mc.is_empty() && mc.iter().all(|m| m.ok));
    out.verdict("growth_supplement", supp.pass);
    out.series.insert("ray_measure".into(), ray_rep.decay.series.clone());
    out.series.insert("ray_printed".into(), ray_rep.printed.clone());
    out.series.insert("arc_measure".into(), circ.series.clone());
    out.result("ray", &ray_rep)?;
    out.result("circle", &circ)?;
    out.result("circle_mc", &mc)?;
    out.result("growth_supplement", &supp)
}

/// Two-column CSV of a named series, 17 significant digits.
pub fn emit_plot_series(report: &Report, name: &str) -> Result<String> {
    let series = report.series.get(name).ok_or_else(|| Error::UnknownSeries {
        name: name.into(),
        available: report.series.keys().cloned().collect(),
    })?;
    let (x, y) = series_header(name);
    let mut csv = format!("{x},{y}\n");
    for (a, b) in series {
        writeln!(csv, "{a:.16e},{b:.16e}").expect("writing to a String cannot fail");
    }
    Ok(csv)
}

fn series_header(name: &str) -> (&'static str, &'static str) {
    match name {
        "tail_sum" => ("R", "tail_radius_sum"),
        "ray_measure" => ("R", "ray_measure"),
        "ray_printed" => ("R", "ray_complement_measure"),
        "arc_measure" => ("R", "arc_measure"),
        "indicator" => ("angle", "indicator"),
        "m_rad" => ("r", "m_rad"),
        "avoidance_radius" => ("modulus", "radius"),
        _ => ("x", "y"),
    }
}

/// Writes `report.json`, `timings.json` and one CSV per series.
pub fn write_outputs(dir: &Path, report: &Report, timings: &Timings) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    let t = serde_json::to_string_pretty(timings).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("timings.json"), t)?;
    for name in report.series.keys() {
        std::fs::write(dir.join(format!("{name}.csv")), emit_plot_series(report, name)?)?;
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "minorant", version, about = "Exceptional-set covers and minorants of subharmonic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run a scenario and write its report, series and timings.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print one series of a report as CSV.
    Series { report: PathBuf, name: String },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize =
            v.parse().map_err(|_| config_error(THREADS_ENV, format!("expected a thread count, got `{v}`")))?;
        // A pool that already exists (as in tests) keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code
/// (0: all verdicts pass, 1: some verdict fails, 2: error).
pub fn main_with(cli: Cli) -> i32 {
    let result = configure_threads().and_then(|_| match cli.command {
        CliCommand::Run { config, out } => {
            let sc = load_scenario(&config)?;
            let (report, timings) = run_scenario(&sc)?;
            write_outputs(&out, &report, &timings)?;
            for (k, v) in &report.verdicts {
                eprintln!("{k}: {}", if *v { "pass" } else { "fail" });
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        CliCommand::Series { report, name } => {
            let text = std::fs::read_to_string(&report)?;
            let rep: Report = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
            print!("{}", emit_plot_series(&rep, &name)?);
            Ok(0)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str =
        r#"{"command": "forward", "function": {"synthetic": {"rho": 1.0}}, "q_prime": 1.0, "window": 20.0, "seed": 3}"#;

    #[test]
    fn window_below_four_is_rejected() {
        let bad = BASE.replace("20.0", "2");
        match parse_scenario(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "window"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_paths_in_errors() {
        let bad = BASE.replace(r#""seed": 3"#, r#""seed": 3, "samples": {"violation": "many"}"#);
        match parse_scenario(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "samples.violation"),
            other => panic!("{other:?}"),
        }
        let missing = BASE.replace(r#", "seed": 3"#, "");
        assert!(matches!(parse_scenario(&missing), Err(Error::Config { field, .. }) if field == "seed"));
    }

    #[test]
    fn pipeline_failure_yields_failed_report() {
        let sc = parse_scenario(
            r#"{"command": "reverse", "function": {"synthetic": {"rho": 1.0}}, "q_prime": 1.0, "q_star": 1.5,
                "window": 10.0, "seed": 1, "samples": {"violation": 200, "fbc": 50, "reverse_grid": 10}}"#,
        )
        .unwrap();
        let (rep, _) = run_scenario(&sc).unwrap();
        assert_eq!(rep.verdict, "fail");
        assert_eq!(rep.verdicts.get("pipeline"), Some(&false));
        assert!(rep.results["error"].as_str().unwrap().contains("q*"));
    }

    #[test]
    fn reverse_defaults_q_prime_from_q_star() {
        let sc = parse_scenario(
            r#"{"command": "reverse", "function": {"synthetic": {"rho": 1.0}}, "q_star": 1.0, "window": 10.0, "seed": 1}"#,
        )
        .unwrap();
        assert_eq!(sc.q_prime(), Some(1.5));
    }

    #[test]
    fn explicit_function_parses() {
        let sc =
            parse_scenario(r#"{"command": "growth", "function": {"poly_zeros": [[1.0, 0.0, 1.0]]}, "window": 10.0}"#)
                .unwrap();
        assert_eq!(sc.function().unwrap().zeros().len(), 1);
    }

    #[test]
    fn series_csv() {
        let mut series = BTreeMap::new();
        series.insert("tail_sum".to_string(), vec![(4.0, 0.5)]);
        series.insert("empty".to_string(), vec![]);
        let rep = Report {
            schema_version: SCHEMA_VERSION,
            scenario: parse_scenario(BASE).unwrap(),
            results: serde_json::Value::Null,
            verdicts: BTreeMap::new(),
            verdict: "pass".into(),
            series,
        };
        assert_eq!(
            emit_plot_series(&rep, "tail_sum").unwrap(),
            "R,tail_radius_sum\n4.0000000000000000e0,5.0000000000000000e-1\n"
        );
        assert_eq!(emit_plot_series(&rep, "empty").unwrap(), "x,y\n");
        match emit_plot_series(&rep, "nope") {
            Err(Error::UnknownSeries { available, .. }) => assert_eq!(available, vec!["empty", "tail_sum"]),
            other => panic!("{other:?}"),
        }
    }
}
