//! Exceptional sets `E_{μ,r} = {z : ∫₀^{r(z)} μ(z,t)/t dt > 1}` and their
//! bounded-multiplicity disk covers.
//!
//! `E_{μ,r}` is uncountable, so covers are built over a finite
//! [`CandidateSet`]: the atoms, an optional grid, seeded uniform samples in
//! the window and seeded samples in `D(a, r(a))` around each atom, filtered
//! by membership. Coverage is exact over the candidates; the
//! [`uncovered_fraction`] trend measures it elsewhere.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geom::{Point, RadiusFunctionQ};
use crate::measures::{AtomIndex, PointMassMeasure};
use crate::rng::{streams, substream};
use crate::{Error, Result};

/// The multiplicity bound asserted for every constructed cover.
pub const MULTIPLICITY_BOUND: usize = 2020;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverDisk {
    pub center: Point,
    pub radius: f64,
}

impl CoverDisk {
    pub fn contains(&self, z: Point) -> bool {
        z.dist(self.center) < self.radius
    }
}

impl Serialize for CoverDisk {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.center.re, self.center.im, self.radius].serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoverDisk {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [re, im, t] = <[f64; 3]>::deserialize(d)?;
        if !(t > 0.0) {
            return Err(serde::de::Error::custom("cover disk radius must be positive"));
        }
        Ok(CoverDisk { center: Point::new(re, im), radius: t })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub candidates: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

/// An ordered list of open disks `D(z_k, t_k)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiskCover {
    pub disks: Vec<CoverDisk>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl DiskCover {
    pub fn new(disks: Vec<CoverDisk>, provenance: Provenance) -> Self {
        DiskCover { disks, provenance }
    }

    /// `sup_k t_k`, zero for an empty cover.
    pub fn sup_radius(&self) -> f64 {
        self.disks.iter().map(|d| d.radius).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    pub fn index(&self) -> DiskIndex<'_> {
        DiskIndex::new(&self.disks)
    }
}

/// Uniform-grid index over a disk system for point-depth and overlap
/// queries. Disks spanning more than `MAX_SPAN` cells per axis are kept in
/// a separate list checked on every query.
#[derive(Debug)]
pub struct DiskIndex<'a> {
    disks: &'a [CoverDisk],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    big: Vec<usize>,
}

const MAX_SPAN: i64 = 16;

impl<'a> DiskIndex<'a> {
    pub fn new(disks: &'a [CoverDisk]) -> Self {
        let cell = index_cell(disks.iter().map(|d| d.radius));
        let mut idx = DiskIndex { disks, cell, buckets: HashMap::new(), big: Vec::new() };
        for i in 0..disks.len() {
            idx.insert(i);
        }
        idx
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.re / self.cell).floor() as i64, (p.im / self.cell).floor() as i64)
    }

    fn insert(&mut self, i: usize) {
        let d = self.disks[i];
        let lo = self.key(d.center - Point::new(d.radius, d.radius));
        let hi = self.key(d.center + Point::new(d.radius, d.radius));
        if hi.0 - lo.0 > MAX_SPAN || hi.1 - lo.1 > MAX_SPAN {
            self.big.push(i);
            return;
        }
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                self.buckets.entry((x, y)).or_default().push(i);
            }
        }
    }

    /// Indices of disks whose open interior contains `z`.
    pub fn containing(&self, z: Point) -> impl Iterator<Item = usize> + '_ {
        let local = self.buckets.get(&self.key(z)).map(|v| v.as_slice()).unwrap_or(&[]);
        local.iter().chain(self.big.iter()).copied().filter(move |&i| self.disks[i].contains(z))
    }

    pub fn depth(&self, z: Point) -> usize {
        self.containing(z).count()
    }

    pub fn covers(&self, z: Point) -> bool {
        self.containing(z).next().is_some()
    }

    /// Indices `j > i` of disks whose interiors meet disk `i`.
    fn overlapping_after(&self, i: usize) -> Vec<usize> {
        let d = self.disks[i];
        let mut out: Vec<usize> = if self.big.contains(&i) {
            (i + 1..self.disks.len()).collect()
        } else {
            let lo = self.key(d.center - Point::new(d.radius, d.radius));
            let hi = self.key(d.center + Point::new(d.radius, d.radius));
            let mut v = Vec::new();
            for x in lo.0..=hi.0 {
                for y in lo.1..=hi.1 {
                    if let Some(ids) = self.buckets.get(&(x, y)) {
                        v.extend(ids.iter().copied().filter(|&j| j > i));
                    }
                }
            }
            v.extend(self.big.iter().copied().filter(|&j| j > i));
            v
        };
        out.sort_unstable();
        out.dedup();
        out.retain(|&j| self.disks[j].center.dist(d.center) < self.disks[j].radius + d.radius);
        out
    }
}

fn index_cell(radii: impl Iterator<Item = f64>) -> f64 {
    let mut r: Vec<f64> = radii.filter(|t| *t > 0.0).collect();
    if r.is_empty() {
        return 1.0;
    }
    r.sort_by(f64::total_cmp);
    (2.0 * r[(r.len() * 9) / 10]).max(1e-12)
}

/// `z ∈ E_{μ,r}`: the truncated potential strictly exceeds one.
pub fn exceptional_membership(mu: &PointMassMeasure, rfun: &RadiusFunctionQ, z: Point) -> bool {
    mu.log_potential_integral(z, rfun.eval(z)) > 1.0
}

fn member_indexed(idx: &AtomIndex<'_>, rfun: &RadiusFunctionQ, z: Point) -> bool {
    idx.log_potential_integral(z, rfun.eval(z)) > 1.0
}

/// A radius `t` with `0 < t < r(z)` and `t < r(z)·μ(z, t)`.
///
/// Scans the atom distances `s₁ ≤ s₂ ≤ …` within `r(z)`; on the first level
/// where `[s_k, min(r(z)·μ(z, s_k), s_{k+1}, r(z)))` is nonempty, returns its
/// midpoint. Such a level exists for every member of `E_{μ,r}`: otherwise
/// `t ≥ r(z)·μ(z,t)` on `(0, r(z))` and the potential is at most one.
pub fn select_radius_tz(mu: &PointMassMeasure, rfun: &RadiusFunctionQ, z: Point) -> Result<f64> {
    let r = rfun.eval(z);
    if !exceptional_membership(mu, rfun, z) {
        return Err(Error::pre(format!("({}, {}) is not in the exceptional set", z.re, z.im)));
    }
    let near: Vec<(f64, f64)> =
        mu.atoms().iter().map(|a| (a.location.dist(z), a.mass)).filter(|&(s, _)| s <= r).collect();
    select_from_distances(near, r, z)
}

fn select_indexed(idx: &AtomIndex<'_>, rfun: &RadiusFunctionQ, z: Point) -> Result<f64> {
    let r = rfun.eval(z);
    let near = idx.near(z, r).into_iter().map(|a| (a.location.dist(z), a.mass)).collect();
    select_from_distances(near, r, z)
}

fn select_from_distances(mut near: Vec<(f64, f64)>, r: f64, z: Point) -> Result<f64> {
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut mass = 0.0;
    let mut i = 0;
    while i < near.len() {
        let s = near[i].0;
        while i < near.len() && near[i].0 == s {
            mass += near[i].1;
            i += 1;
        }
        let next = near.get(i).map_or(f64::INFINITY, |x| x.0);
        let hi = (r * mass).min(next).min(r);
        if hi > s {
            return Ok(0.5 * (s + hi));
        }
    }
    Err(Error::NoFeasibleRadius { re: z.re, im: z.im })
}

/// Greedy Besicovitch selection: repeatedly take the largest candidate
/// whose center is not yet inside a selected disk. Ties go to the
/// lexicographically smaller center. Every candidate center ends up inside
/// some selected open disk.
pub fn besicovitch_subcover(candidates: &[(Point, f64)]) -> DiskCover {
    let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].1 > 0.0).collect();
    order.sort_by(|&a, &b| {
        let (pa, ta) = candidates[a];
        let (pb, tb) = candidates[b];
        tb.total_cmp(&ta).then(pa.re.total_cmp(&pb.re)).then(pa.im.total_cmp(&pb.im))
    });
    let cell = index_cell(candidates.iter().map(|c| c.1));
    let mut selected: Vec<CoverDisk> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut big: Vec<usize> = Vec::new();
    let key = |p: Point| ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
    for i in order {
        let (z, t) = candidates[i];
        let covered = buckets
            .get(&key(z))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .chain(big.iter())
            .any(|&k| selected[k].contains(z));
        if covered {
            continue;
        }
        let k = selected.len();
        selected.push(CoverDisk { center: z, radius: t });
        let lo = key(z - Point::new(t, t));
        let hi = key(z + Point::new(t, t));
        if hi.0 - lo.0 > MAX_SPAN || hi.1 - lo.1 > MAX_SPAN {
            big.push(k);
        } else {
            for x in lo.0..=hi.0 {
                for y in lo.1..=hi.1 {
                    buckets.entry((x, y)).or_default().push(k);
                }
            }
        }
    }
    DiskCover::new(selected, Provenance::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    /// Maximum depth over centers and lens-vertex probes.
    pub certified: usize,
    /// Maximum depth over seeded uniform points in the bounding box.
    pub monte_carlo: usize,
    pub value: usize,
}

pub const MULTIPLICITY_MC_POINTS: usize = 100_000;

/// Maximum overlap count of the open disks.
///
/// The maximum depth of a disk arrangement is attained either at a disk
/// center (faces without vertices) or just inside the lens at a boundary
/// intersection point. Each intersecting pair contributes four probes: the
/// two intersection points nudged along the bisector of the inward normals
/// at two scales. Seeded uniform samples confirm the value.
pub fn cover_multiplicity_report(cover: &DiskCover, seed: u64) -> MultiplicityReport {
    if cover.is_empty() {
        return MultiplicityReport { certified: 0, monte_carlo: 0, value: 0 };
    }
    let idx = cover.index();
    let disks = &cover.disks;
    let certified = (0..disks.len())
        .into_par_iter()
        .map(|i| {
            let a = disks[i];
            let mut best = idx.depth(a.center);
            for j in idx.overlapping_after(i) {
                for p in lens_probes(&a, &disks[j]) {
                    best = best.max(idx.depth(p));
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    let (lo, hi) = bounding_box(disks);
    let mut rng = substream(seed, streams::MULTIPLICITY);
    let pts: Vec<Point> = (0..MULTIPLICITY_MC_POINTS)
        .map(|_| Point::new(rng.random_range(lo.re..=hi.re), rng.random_range(lo.im..=hi.im)))
        .collect();
    let monte_carlo = pts.par_iter().map(|&p| idx.depth(p)).max().unwrap_or(0);
    MultiplicityReport { certified, monte_carlo, value: certified.max(monte_carlo) }
}

pub fn cover_multiplicity(cover: &DiskCover) -> usize {
    cover_multiplicity_report(cover, 0).value
}

pub(crate) fn bounding_box(disks: &[CoverDisk]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for d in disks {
        lo = Point::new(lo.re.min(d.center.re - d.radius), lo.im.min(d.center.im - d.radius));
        hi = Point::new(hi.re.max(d.center.re + d.radius), hi.im.max(d.center.im + d.radius));
    }
    (lo, hi)
}

fn lens_probes(a: &CoverDisk, b: &CoverDisk) -> Vec<Point> {
    let d = a.center.dist(b.center);
    let (ra, rb) = (a.radius, b.radius);
    if d == 0.0 || d >= ra + rb || d <= (ra - rb).abs() {
        return Vec::new();
    }
    let along = (d * d + ra * ra - rb * rb) / (2.0 * d);
    let h2 = ra * ra - along * along;
    if h2 <= 0.0 {
        return Vec::new();
    }
    let h = h2.sqrt();
    let e = (b.center - a.center) * (1.0 / d);
    let perp = Point::new(-e.im, e.re);
    let base = a.center + e * along;
    let scale = ra.min(rb);
    let mut out = Vec::with_capacity(4);
    for p in [base + perp * h, base - perp * h] {
        let ua = unit(a.center - p);
        let ub = unit(b.center - p);
        let n = ua + ub;
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n * (1.0 / len);
        for eps in [1e-9, 1e-6] {
            out.push(p + n * (eps * scale));
        }
    }
    out
}

fn unit(p: Point) -> Point {
    p * (1.0 / p.norm())
}

/// `Σ t_k` over disks with `|z_k| ≥ R`.
pub fn tail_radius_sum(cover: &DiskCover, r: f64) -> f64 {
    cover.disks.iter().filter(|d| d.center.norm() >= r).map(|d| d.radius).sum()
}

/// Candidate-set recipe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateParams {
    /// Square-grid step over the window; `None` disables the grid.
    pub grid_step: Option<f64>,
    /// Uniform samples in `D(window)`.
    pub random_count: usize,
    /// Uniform samples in `D(a, r(a))` per atom `a`.
    pub local_per_atom: usize,
}

impl Default for CandidateParams {
    fn default() -> Self {
        CandidateParams { grid_step: None, random_count: 10_000, local_per_atom: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub points: Vec<Point>,
}

impl CandidateSet {
    /// Raw (unfiltered) candidate points inside `D(window)`.
    pub fn generate(
        mu: &PointMassMeasure,
        rfun: &RadiusFunctionQ,
        window: f64,
        params: &CandidateParams,
        seed: u64,
    ) -> Self {
        let mut points: Vec<Point> = mu.atoms().iter().map(|a| a.location).collect();
        if let Some(h) = params.grid_step.filter(|h| *h > 0.0) {
            let n = (window / h).floor() as i64;
            for i in -n..=n {
                for j in -n..=n {
                    let p = Point::new(i as f64 * h, j as f64 * h);
                    if p.norm() < window {
                        points.push(p);
                    }
                }
            }
        }
        points.extend(uniform_in_disk(Point::ORIGIN, window, params.random_count, seed, streams::WINDOW_SAMPLES));
        if params.local_per_atom > 0 {
            let mut rng = substream(seed, streams::LOCAL_SAMPLES);
            for a in mu.atoms() {
                let rad = rfun.eval(a.location);
                for _ in 0..params.local_per_atom {
                    points.push(a.location + sample_disk(&mut rng, rad));
                }
            }
        }
        points.retain(|p| p.norm() < window || mu.atoms().iter().any(|a| a.location == *p));
        CandidateSet { points }
    }

    /// The members of `E_{μ,r}`, order preserved.
    pub fn exceptional(&self, mu: &PointMassMeasure, rfun: &RadiusFunctionQ) -> CandidateSet {
        let idx = AtomIndex::new(mu, 1.0);
        let keep: Vec<bool> = self.points.par_iter().map(|&p| member_indexed(&idx, rfun, p)).collect();
        CandidateSet { points: self.points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect() }
    }
}

fn sample_disk(rng: &mut impl Rng, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    Point::polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

/// `n` seeded uniform points in `D(center, radius)`.
pub fn uniform_in_disk(center: Point, radius: f64, n: usize, seed: u64, stream: u64) -> Vec<Point> {
    let mut rng = substream(seed, stream);
    (0..n).map(|_| center + sample_disk(&mut rng, radius)).collect()
}

/// Builds the cover of the members of `candidates` (which must already be
/// filtered to `E_{μ,r}`), with `t_z` from [`select_radius_tz`].
pub fn build_cover(mu: &PointMassMeasure, rfun: &RadiusFunctionQ, members: &CandidateSet) -> Result<DiskCover> {
    // r(z) ≤ 1, so unit cells hold every atom a radius query can reach.
    let idx = AtomIndex::new(mu, 1.0);
    let radii: Vec<Result<f64>> = members.points.par_iter().map(|&z| select_indexed(&idx, rfun, z)).collect();
    let mut pairs = Vec::with_capacity(radii.len());
    for (z, t) in members.points.iter().zip(radii) {
        pairs.push((*z, t?));
    }
    let mut cover = besicovitch_subcover(&pairs);
    cover.provenance.q = Some(rfun.q());
    Ok(cover)
}

/// Generates, filters and covers in one step.
pub fn exceptional_cover(
    mu: &PointMassMeasure,
    rfun: &RadiusFunctionQ,
    window: f64,
    params: &CandidateParams,
    seed: u64,
) -> Result<(DiskCover, usize)> {
    let raw = CandidateSet::generate(mu, rfun, window, params, seed);
    let members = raw.exceptional(mu, rfun);
    let mut cover = build_cover(mu, rfun, &members)?;
    cover.provenance = Provenance {
        q: Some(rfun.q()),
        window: Some(window),
        candidates: format!(
            "atoms={} grid_step={:?} random={} local_per_atom={} members={}",
            mu.atoms().len(),
            params.grid_step,
            params.random_count,
            params.local_per_atom,
            members.points.len()
        ),
        seed: Some(seed),
    };
    Ok((cover, members.points.len()))
}

/// Per-disk constraints of a cover built from `μ` and `r`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub disks: usize,
    /// Disks whose center is not in `E_{μ,r}`.
    pub center_not_member: usize,
    /// Disks with `t_k > r(z_k)`.
    pub radius_exceeds_field: usize,
    /// Disks with `t_k ≥ r(z_k)·μ(z_k, t_k)`.
    pub mass_condition_fails: usize,
    pub ok: bool,
}

pub fn check_constraints(cover: &DiskCover, mu: &PointMassMeasure, rfun: &RadiusFunctionQ) -> ConstraintReport {
    let idx = AtomIndex::new(mu, 1.0);
    let flags: Vec<(bool, bool, bool)> = cover
        .disks
        .par_iter()
        .map(|d| {
            let r = rfun.eval(d.center);
            (!member_indexed(&idx, rfun, d.center), d.radius > r, d.radius >= r * idx.disk_mass(d.center, d.radius))
        })
        .collect();
    let mut rep = ConstraintReport { disks: cover.len(), ..Default::default() };
    for (a, b, c) in flags {
        rep.center_not_member += a as usize;
        rep.radius_exceeds_field += b as usize;
        rep.mass_condition_fails += c as usize;
    }
    rep.ok = rep.center_not_member == 0 && rep.radius_exceeds_field == 0 && rep.mass_condition_fails == 0;
    rep
}

/// Fraction of the members of `E_{μ,r}` among `points` not covered.
/// Returns `(members, uncovered)`.
pub fn uncovered_fraction(
    cover: &DiskCover,
    mu: &PointMassMeasure,
    rfun: &RadiusFunctionQ,
    points: &[Point],
) -> (usize, usize) {
    let aidx = AtomIndex::new(mu, 1.0);
    let didx = cover.index();
    let flags: Vec<(bool, bool)> = points
        .par_iter()
        .map(|&p| {
            let m = member_indexed(&aidx, rfun, p);
            (m, m && !didx.covers(p))
        })
        .collect();
    flags.iter().fold((0, 0), |(m, u), &(a, b)| (m + a as usize, u + b as usize))
}

/// A closed region `S` for the weighted radius-sum bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Empty,
    Disk { center: Point, radius: f64 },
    Rect { min: Point, max: Point },
}

impl Region {
    /// Euclidean distance from `p` to the region (`+∞` for the empty set).
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            Region::Empty => f64::INFINITY,
            Region::Disk { center, radius } => (p.dist(center) - radius).max(0.0),
            Region::Rect { min, max } => {
                let dx = (min.re - p.re).max(0.0).max(p.re - max.re);
                let dy = (min.im - p.im).max(0.0).max(p.im - max.im);
                dx.hypot(dy)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumBoundReport {
    /// `(1/2020) Σ_{S ∩ D(z_k,t_k) ≠ ∅} t_k`.
    pub lhs: f64,
    /// `∫_{S^{∪d}} r^{∨d} dμ`.
    pub rhs: f64,
    pub intersecting: usize,
    pub ok: bool,
}

/// Checks `(1/2020) Σ_{S∩D(z_k,t_k)≠∅} t_k ≤ ∫_{S^{∪d}} r^{∨d} dμ`, with
/// `S^{∪d} = {z : dist(z, S) < d}` and, for the radial field `Q`,
/// `r^{∨d}(z) = (1 + max(|z| − d, 0))^{-q}`.
pub fn verify_sum_bound(
    cover: &DiskCover,
    mu: &PointMassMeasure,
    rfun: &RadiusFunctionQ,
    region: &Region,
    d: f64,
) -> Result<SumBoundReport> {
    let need = 2.0 * cover.sup_radius();
    if !(d >= need) || !d.is_finite() {
        return Err(Error::pre(format!("d = {d} is below 2·sup t_k = {need}")));
    }
    let hit: Vec<&CoverDisk> = cover.disks.iter().filter(|k| region.distance(k.center) < k.radius).collect();
    let lhs = hit.iter().map(|k| k.radius).sum::<f64>() / MULTIPLICITY_BOUND as f64;
    let rhs = mu
        .atoms()
        .iter()
        .filter(|a| region.distance(a.location) < d)
        .map(|a| a.mass * rfun.at_modulus((a.location.norm() - d).max(0.0)))
        .sum();
    Ok(SumBoundReport { lhs, rhs, intersecting: hit.len(), ok: lhs <= rhs })
}
