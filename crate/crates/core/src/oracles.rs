//! Independent cross-checks used by the tests and the acceptance suite.
//! Nothing in the production paths calls into this module.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{bounding_box, DiskCover};
use crate::geom::Point;
use crate::rng::substream;
use crate::subfun::LogModulusFunction;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(nodes: usize, mc_samples: usize, seed: u64) -> Result<Self> {
        if nodes < 64 {
            return Err(Error::pre(format!("oracle nodes must be >= 64, got {nodes}")));
        }
        if mc_samples < 10_000 {
            return Err(Error::pre(format!("oracle mc_samples must be >= 10^4, got {mc_samples}")));
        }
        Ok(OracleConfig { nodes, mc_samples, seed })
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { nodes: 4096, mc_samples: 1_000_000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMean {
    pub value: f64,
    /// `|T_N − T_{N/2}|`.
    pub certificate: f64,
    pub near_singular: bool,
}

/// Plain trapezoid on `nodes` equally spaced angles starting at zero.
pub fn quad_circle_mean(u: &LogModulusFunction, z: Point, r: f64, nodes: usize) -> Result<QuadratureMean> {
    if !(r > 0.0) {
        return Err(Error::pre(format!("radius must be positive, got {r}")));
    }
    if nodes < 2 || !nodes.is_multiple_of(2) {
        return Err(Error::pre(format!("nodes must be even and >= 2, got {nodes}")));
    }
    let vals: Vec<f64> = (0..nodes).map(|j| u.evaluate(z + Point::polar(r, TAU * j as f64 / nodes as f64))).collect();
    let full = vals.iter().sum::<f64>() / nodes as f64;
    let half = vals.iter().step_by(2).sum::<f64>() / (nodes / 2) as f64;
    Ok(QuadratureMean {
        value: full,
        certificate: (full - half).abs(),
        near_singular: u.zero_near_circle(z, r, 1e-3) || !full.is_finite(),
    })
}

/// `2πR` times the fraction of uniform angles whose point on `∂D̄(R)` lies
/// in some cover disk, with the binomial standard error from `p̂`.
pub fn mc_arc_measure(cover: &DiskCover, r: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::pre(format!("R must be positive, got {r}")));
    }
    if samples == 0 {
        return Err(Error::pre("at least one sample is required"));
    }
    // Only disks reaching the circle matter.
    let near: Vec<_> = cover.disks.iter().filter(|d| (d.center.norm() - r).abs() < d.radius).copied().collect();
    if near.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut rng = substream(seed, crate::rng::streams::ARC_MC);
    let mut hits = 0usize;
    for _ in 0..samples {
        let p = Point::polar(r, rng.random::<f64>() * TAU);
        if near.iter().any(|d| d.contains(p)) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let len = 2.0 * PI * r;
    Ok((len * p, len * (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Maximum depth over a square grid covering the cover's bounding box,
/// by full scan.
pub fn brute_multiplicity(cover: &DiskCover, grid_step: f64) -> Result<usize> {
    if !(grid_step > 0.0) {
        return Err(Error::pre(format!("grid_step must be positive, got {grid_step}")));
    }
    if cover.is_empty() {
        return Ok(0);
    }
    let (lo, hi) = bounding_box(&cover.disks);
    let nx = ((hi.re - lo.re) / grid_step).ceil() as usize + 1;
    let ny = ((hi.im - lo.im) / grid_step).ceil() as usize + 1;
    Ok((0..nx)
        .into_par_iter()
        .map(|i| {
            let x = lo.re + i as f64 * grid_step;
            (0..ny)
                .map(|j| {
                    let p = Point::new(x, lo.im + j as f64 * grid_step);
                    cover.disks.iter().filter(|d| d.contains(p)).count()
                })
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{cover_multiplicity_report, CoverDisk, Provenance};

    #[test]
    fn quad_examples() {
        let k = LogModulusFunction::constant_fn(2.5).unwrap();
        assert_eq!(quad_circle_mean(&k, Point::new(1.0, 1.0), 3.0, 64).unwrap().value, 2.5);
        let far = LogModulusFunction::from_roots(&[Point::new(5.0, 0.0)]);
        let m = quad_circle_mean(&far, Point::ORIGIN, 1.0, 256).unwrap();
        assert!((m.value - 5f64.ln()).abs() < 1e-9 && !m.near_singular);
        let inner = LogModulusFunction::from_roots(&[Point::ORIGIN]);
        let m = quad_circle_mean(&inner, Point::ORIGIN, 2.0, 64).unwrap();
        assert!((m.value - 2f64.ln()).abs() < 1e-9);
        let on = LogModulusFunction::from_roots(&[Point::new(1.0, 0.0)]);
        assert!(quad_circle_mean(&on, Point::ORIGIN, 1.0, 64).unwrap().near_singular);
    }

    #[test]
    fn quad_certificates_shrink() {
        let u = LogModulusFunction::from_roots(&[Point::new(1.5, 0.3), Point::new(-0.2, 2.0)]);
        let mut last = f64::INFINITY;
        for n in [64, 128, 256, 512] {
            let c = quad_circle_mean(&u, Point::ORIGIN, 1.0, n).unwrap().certificate;
            assert!(c <= last.max(1e-14));
            last = c;
        }
    }

    #[test]
    fn mc_examples() {
        assert_eq!(mc_arc_measure(&DiskCover::default(), 2.0, 10_000, 1).unwrap(), (0.0, 0.0));
        let big = DiskCover::new(vec![CoverDisk { center: Point::ORIGIN, radius: 5.0 }], Provenance::default());
        let (est, se) = mc_arc_measure(&big, 2.0, 10_000, 1).unwrap();
        assert!((est - 4.0 * PI).abs() < 1e-12 && se == 0.0);
        let a = mc_arc_measure(&big, 2.0, 10_000, 1).unwrap();
        assert_eq!(a, (est, se));
    }

    #[test]
    fn brute_examples() {
        let disjoint = DiskCover::new(
            (0..5).map(|k| CoverDisk { center: Point::new(k as f64, 0.0), radius: 0.3 }).collect(),
            Provenance::default(),
        );
        assert_eq!(brute_multiplicity(&disjoint, 0.05).unwrap(), 1);
        let nested = DiskCover::new(
            [1.0, 0.5, 0.25].iter().map(|&r| CoverDisk { center: Point::ORIGIN, radius: r }).collect(),
            Provenance::default(),
        );
        assert_eq!(brute_multiplicity(&nested, 0.05).unwrap(), 3);
    }

    #[test]
    fn brute_never_exceeds_certified() {
        let mut rng = substream(23, 0);
        let mut disks = Vec::new();
        for c in 0..4 {
            let base = Point::new(3.0 * c as f64, 0.0);
            for _ in 0..30 {
                let z = base + Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                disks.push(CoverDisk { center: z, radius: rng.random_range(0.1..0.6) });
            }
        }
        let cover = DiskCover::new(disks, Provenance::default());
        let certified = cover_multiplicity_report(&cover, 0).certified;
        for step in [0.05, 0.01] {
            assert!(brute_multiplicity(&cover, step).unwrap() <= certified);
        }
        assert_eq!(brute_multiplicity(&cover, 0.01).unwrap(), certified);
    }
}
