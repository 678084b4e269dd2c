//! Finite point-mass measures.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::growth::{self, GrowthConfig, RadialSamples};
use crate::{Error, Extended, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: Point,
    pub mass: f64,
}

/// A finite list of positively weighted atoms. Duplicate locations are
/// allowed; their masses add on every query.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointMassMeasure {
    atoms: Vec<Atom>,
}

impl PointMassMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::pre(format!("atom mass must be positive and finite, got {}", a.mass)));
            }
            if !a.location.is_finite() {
                return Err(Error::pre("atom location must be finite"));
            }
        }
        Ok(PointMassMeasure { atoms })
    }

    pub fn empty() -> Self {
        PointMassMeasure::default()
    }

    pub fn from_triples(triples: &[[f64; 3]]) -> Result<Self> {
        Self::new(triples.iter().map(|t| Atom { location: Point::new(t[0], t[1]), mass: t[2] }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `μ(D̄(z, t))`: atoms exactly on the boundary count.
    pub fn disk_mass(&self, z: Point, t: f64) -> f64 {
        disk_mass(self.atoms.iter(), z, t)
    }

    pub fn radial_counting(&self, r: f64) -> f64 {
        self.disk_mass(Point::ORIGIN, r)
    }

    pub fn log_potential_integral(&self, z: Point, r: f64) -> f64 {
        log_potential_integral(self.atoms.iter(), z, r)
    }

    pub fn largest_modulus(&self) -> f64 {
        self.atoms.iter().map(|a| a.location.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn disk_mass<'a>(atoms: impl Iterator<Item = &'a Atom>, z: Point, t: f64) -> f64 {
    atoms.filter(|a| a.location.dist(z) <= t).map(|a| a.mass).sum()
}

/// `∫₀^r μ(z,t)/t dt` in closed form: the integrand is a step function, so
/// each atom at distance `s ≤ r` contributes `mass·log(r/s)`. An atom at `z`
/// makes the integral diverge.
pub(crate) fn log_potential_integral<'a>(atoms: impl Iterator<Item = &'a Atom>, z: Point, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    let mut total = 0.0;
    for a in atoms {
        let s = a.location.dist(z);
        if s == 0.0 {
            return f64::INFINITY;
        }
        if s <= r {
            total += a.mass * (r / s).ln();
        }
    }
    total
}

impl Serialize for PointMassMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let triples: Vec<[f64; 3]> = self.atoms.iter().map(|a| [a.location.re, a.location.im, a.mass]).collect();
        triples.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointMassMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<[f64; 3]>::deserialize(d)?;
        PointMassMeasure::from_triples(&triples).map_err(serde::de::Error::custom)
    }
}

/// Uniform-grid bucket index over the atoms of a measure, for queries at
/// radius at most `cell`.
#[derive(Debug)]
pub struct AtomIndex<'a> {
    atoms: &'a [Atom],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> AtomIndex<'a> {
    pub fn new(measure: &'a PointMassMeasure, cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, a) in measure.atoms.iter().enumerate() {
            buckets.entry(Self::key(cell, a.location)).or_default().push(i);
        }
        AtomIndex { atoms: &measure.atoms, cell, buckets }
    }

    fn key(cell: f64, p: Point) -> (i64, i64) {
        ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
    }

    /// Atoms within (closed) distance `radius` of `z`.
    pub fn near(&self, z: Point, radius: f64) -> Vec<&'a Atom> {
        if radius > self.cell * 8.0 {
            return self.atoms.iter().filter(|a| a.location.dist(z) <= radius).collect();
        }
        let span = (radius / self.cell).ceil() as i64;
        let (kx, ky) = Self::key(self.cell, z);
        let mut out = Vec::new();
        for dx in -span..=span {
            for dy in -span..=span {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        let a = &self.atoms[i];
                        if a.location.dist(z) <= radius {
                            out.push(a);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn disk_mass(&self, z: Point, t: f64) -> f64 {
        disk_mass(self.near(z, t).into_iter(), z, t)
    }

    pub fn log_potential_integral(&self, z: Point, r: f64) -> f64 {
        log_potential_integral(self.near(z, r).into_iter(), z, r)
    }
}

/// Order and upper densities of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureGrowth {
    pub order: Extended,
    pub densities: Vec<(f64, Extended)>,
}

/// Estimates `ord[μ]` and `type_p[μ]` from the radial counting function
/// sampled on `radii`.
pub fn measure_growth(
    mu: &PointMassMeasure,
    probe_orders: &[f64],
    radii: &[f64],
    cfg: &GrowthConfig,
) -> Result<MeasureGrowth> {
    let samples = radial_counting_samples(mu, radii)?;
    let order = growth::order_of(&samples, cfg)?;
    let densities =
        probe_orders.iter().map(|&p| growth::type_p(&samples, p, cfg).map(|t| (p, t))).collect::<Result<Vec<_>>>()?;
    Ok(MeasureGrowth { order, densities })
}

/// Samples `μ^rad` on the given radii. Sorting the atom moduli once makes
/// this `O((n + m) log n)`.
pub fn radial_counting_samples(mu: &PointMassMeasure, radii: &[f64]) -> Result<RadialSamples> {
    let mut moduli: Vec<(f64, f64)> = mu.atoms.iter().map(|a| (a.location.norm(), a.mass)).collect();
    moduli.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative = Vec::with_capacity(moduli.len());
    let mut acc = 0.0;
    for &(_, m) in &moduli {
        acc += m;
        cumulative.push(acc);
    }
    let values = radii
        .iter()
        .map(|&r| {
            let k = moduli.partition_point(|&(s, _)| s <= r);
            if k == 0 {
                0.0
            } else {
                cumulative[k - 1]
            }
        })
        .collect();
    RadialSamples::new(radii.to_vec(), values)
}
