//! Circles `∂D̄(z, r)` that miss every disk of a system.
//!
//! A circle of radius `r` about `z` meets the open disk `D(c, t)` exactly
//! when `|c − z| − t < r < |c − z| + t`, so the radii to avoid are the union
//! of these intervals (the radial projection of the system). Any positive
//! radius outside the union gives an avoiding circle.

use serde::{Deserialize, Serialize};

use crate::covering::{CoverDisk, DiskCover};
use crate::geom::{circle_disk_arc, Disk, Point};
use crate::{Error, Result};

/// A sorted union of disjoint open intervals inside `[0, cutoff]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pub intervals: Vec<(f64, f64)>,
    pub cutoff: f64,
}

impl IntervalUnion {
    /// Sweep-line merge; pieces are clipped to `[0, cutoff]` and empty ones
    /// dropped. Overlapping pieces merge; touching ones stay apart, since
    /// their shared endpoint is not covered.
    pub fn from_pieces(pieces: impl IntoIterator<Item = (f64, f64)>, cutoff: f64) -> Self {
        let mut v: Vec<(f64, f64)> =
            pieces.into_iter().map(|(lo, hi)| (lo.max(0.0), hi.min(cutoff))).filter(|(lo, hi)| lo < hi).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match out.last_mut() {
                Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        IntervalUnion { intervals: out, cutoff }
    }

    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Positive-length gaps of `(0, cutoff]` outside the union.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut at = 0.0;
        for &(lo, hi) in &self.intervals {
            if lo > at {
                out.push((at, lo));
            }
            at = at.max(hi);
        }
        if self.cutoff > at {
            out.push((at, self.cutoff));
        }
        out
    }
}

/// `⋃_k (|z_k − z| − t_k, |z_k − z| + t_k) ∩ [0, cutoff]`.
pub fn radial_projection_intervals(disks: &[CoverDisk], z: Point, cutoff: f64) -> IntervalUnion {
    IntervalUnion::from_pieces(
        disks.iter().map(|d| {
            let delta = d.center.dist(z);
            (delta - d.radius, delta + d.radius)
        }),
        cutoff,
    )
}

/// Midpoint of the largest gap of `(0, rmax]` outside the radial
/// projections. Equal gaps resolve to the outermost. The resulting circle
/// is re-checked against every disk.
pub fn find_avoiding_radius(disks: &[CoverDisk], z: Point, rmax: f64) -> Result<f64> {
    if !(rmax > 0.0 && rmax.is_finite()) {
        return Err(Error::pre(format!("rmax must be positive and finite, got {rmax}")));
    }
    let gaps = radial_projection_intervals(disks, z, rmax).gaps();
    let best = gaps
        .iter()
        .copied()
        .reduce(|a, b| if b.1 - b.0 >= (a.1 - a.0) * (1.0 - 1e-12) { b } else { a })
        .ok_or(Error::NoGap { rmax })?;
    let r = 0.5 * (best.0 + best.1);
    if !(r > 0.0) {
        return Err(Error::NoGap { rmax });
    }
    if let Some(d) = disks.iter().find(|d| !circle_misses(z, r, d)) {
        return Err(Error::Estimation(format!(
            "circle of radius {r} about ({}, {}) meets disk at ({}, {}) of radius {}",
            z.re, z.im, d.center.re, d.center.im, d.radius
        )));
    }
    Ok(r)
}

/// Exact disjointness of `∂D̄(z, r)` from the open disk.
pub fn circle_misses(z: Point, r: f64, d: &CoverDisk) -> bool {
    let delta = d.center.dist(z);
    (delta - r).abs() >= d.radius && circle_disk_arc(z, r, &Disk::open(d.center, d.radius)).is_none()
}

/// Tail constant and threshold radius of the decaying avoidance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RqEstimate {
    pub r_q: f64,
    pub c: f64,
}

/// `R_q = max(3, (2C)^{1/(q−q′)} − 1)`, the least `R ≥ 3` with
/// `C (1+R)^{q′−q} ≤ 1/2`.
pub fn rq_from_constant(c: f64, q: f64, q_prime: f64) -> Result<f64> {
    if !(q_prime < q) {
        return Err(Error::pre(format!("need q' < q, got q' = {q_prime}, q = {q}")));
    }
    if !(c >= 0.0) {
        return Err(Error::pre(format!("tail constant must be nonnegative, got {c}")));
    }
    if c == 0.0 {
        return Ok(3.0);
    }
    Ok((3.0f64).max((2.0 * c).powf(1.0 / (q - q_prime)) - 1.0))
}

/// Estimates `C = sup_{3 ≤ R ≤ R_max} (1+R)^q Σ_{|z_k| ≥ R−2} t_k` and
/// derives `R_q`.
///
/// The tail sum is a left-continuous nonincreasing step function of `R`
/// with drops just after `R = |z_k| + 2`, while `(1+R)^q` increases, so the
/// supremum is attained at `R = 3`, `R = R_max` or at one of the
/// `|z_k| + 2`. All of these are evaluated, which dominates any grid.
/// `R_max` defaults to the cover window, else to the farthest center + 2.
pub fn estimate_rq(cover: &DiskCover, q: f64, q_prime: f64) -> Result<RqEstimate> {
    if !(q_prime < q) {
        return Err(Error::pre(format!("need q' < q, got q' = {q_prime}, q = {q}")));
    }
    let mut by_modulus: Vec<(f64, f64)> = cover.disks.iter().map(|d| (d.center.norm(), d.radius)).collect();
    by_modulus.sort_by(|a, b| a.0.total_cmp(&b.0));
    let farthest = by_modulus.last().map_or(0.0, |x| x.0);
    let r_max = cover.provenance.window.unwrap_or(farthest + 2.0).max(3.0);
    // suffix[i] = Σ_{j ≥ i} t_j in increasing modulus
    let mut suffix = vec![0.0; by_modulus.len() + 1];
    for i in (0..by_modulus.len()).rev() {
        suffix[i] = suffix[i + 1] + by_modulus[i].1;
    }
    let tail = |r: f64| suffix[by_modulus.partition_point(|x| x.0 < r - 2.0)];
    let weight = |r: f64| (q * (1.0 + r).ln()).exp();
    let mut c = tail(3.0) * weight(3.0);
    c = c.max(tail(r_max) * weight(r_max));
    for &(m, _) in &by_modulus {
        let r = m + 2.0;
        if (3.0..=r_max).contains(&r) {
            c = c.max(tail(r) * weight(r));
        }
    }
    Ok(RqEstimate { r_q: rq_from_constant(c, q, q_prime)?, c })
}

/// An avoiding radius `r ≤ (1+|z|)^{−q′}` for `|z| ≥ R_q`, checked against
/// every disk of the cover.
pub fn find_avoiding_radius_decaying(cover: &DiskCover, z: Point, q_prime: f64, r_q: f64) -> Result<f64> {
    if z.norm() < r_q {
        return Err(Error::pre(format!("|z| = {} is below R_q = {r_q}", z.norm())));
    }
    if !(q_prime >= 0.0) {
        return Err(Error::pre(format!("q' must be nonnegative, got {q_prime}")));
    }
    find_avoiding_radius(&cover.disks, z, (1.0 + z.norm()).powf(-q_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::Provenance;

    fn disk(re: f64, im: f64, t: f64) -> CoverDisk {
        CoverDisk { center: Point::new(re, im), radius: t }
    }

    #[test]
    fn projection_examples() {
        assert!(radial_projection_intervals(&[], Point::ORIGIN, 1.0).intervals.is_empty());
        let u = radial_projection_intervals(&[disk(0.5, 0.0, 0.1)], Point::ORIGIN, 1.0);
        assert_eq!(u.intervals.len(), 1);
        assert!((u.intervals[0].0 - 0.4).abs() < 1e-15 && (u.intervals[0].1 - 0.6).abs() < 1e-15);
        let u = IntervalUnion::from_pieces([(0.1, 0.3), (0.2, 0.5)], 1.0);
        assert_eq!(u.intervals, vec![(0.1, 0.5)]);
    }

    #[test]
    fn avoiding_radius_examples() {
        assert_eq!(find_avoiding_radius(&[], Point::ORIGIN, 1.0).unwrap(), 0.5);
        let r = find_avoiding_radius(&[disk(0.5, 0.0, 0.1)], Point::ORIGIN, 1.0).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        // (−0.5, 0.5) ∪ (0.5, 1.5): only the point 0.5 is left.
        let covering = [disk(0.0, 0.0, 0.5), disk(1.0, 0.0, 0.5)];
        assert_eq!(find_avoiding_radius(&covering, Point::ORIGIN, 1.0), Err(Error::NoGap { rmax: 1.0 }));
    }

    #[test]
    fn rq_examples() {
        assert_eq!(rq_from_constant(8.0, 2.0, 1.0).unwrap(), 15.0);
        assert_eq!(rq_from_constant(0.5, 2.0, 1.0).unwrap(), 3.0);
        assert_eq!(rq_from_constant(0.1, 3.0, 0.5).unwrap(), 3.0);
        assert!(rq_from_constant(1.0, 1.0, 1.0).is_err());
        assert!(estimate_rq(&DiskCover::default(), 1.0, 1.0).is_err());
    }

    #[test]
    fn estimate_rq_hits_step_supremum() {
        // One disk at modulus 10: tail(R−2)·(1+R)^q peaks at R = 12.
        let cover =
            DiskCover::new(vec![disk(10.0, 0.0, 0.01)], Provenance { window: Some(50.0), ..Default::default() });
        let est = estimate_rq(&cover, 2.0, 1.0).unwrap();
        assert!((est.c - 0.01 * 169.0).abs() < 1e-12);
        assert!((est.r_q - 3.0f64.max(2.0 * 1.69 - 1.0)).abs() < 1e-12);
        // Integer-grid values never exceed it.
        for r in 3..=50 {
            let v = crate::covering::tail_radius_sum(&cover, r as f64 - 2.0) * (1.0 + r as f64).powi(2);
            assert!(v <= est.c + 1e-12);
        }
    }

    #[test]
    fn decaying_examples() {
        let z = Point::new(20.0, 0.0);
        let r = find_avoiding_radius_decaying(&DiskCover::default(), z, 1.0, 3.0).unwrap();
        assert!((r - 1.0 / 42.0).abs() < 1e-15);
        assert!(find_avoiding_radius_decaying(&DiskCover::default(), Point::new(2.0, 0.0), 1.0, 3.0).is_err());
    }

    #[test]
    fn returned_circles_miss_all_disks() {
        use rand::Rng;
        let mut rng = crate::rng::substream(17, 0);
        let disks: Vec<CoverDisk> = (0..200)
            .map(|_| disk(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.001..0.01)))
            .collect();
        for _ in 0..200 {
            let z = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            match find_avoiding_radius(&disks, z, 0.5) {
                Ok(r) => assert!(r > 0.0 && r <= 0.5 && disks.iter().all(|d| circle_misses(z, r, d))),
                Err(e) => assert!(matches!(e, Error::NoGap { .. })),
            }
        }
    }
}
