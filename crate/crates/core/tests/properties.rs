use std::f64::consts::{E, TAU};

use minorant::avoidance::{circle_misses, find_avoiding_radius, radial_projection_intervals, IntervalUnion};
use minorant::covering::{
    besicovitch_subcover, check_constraints, cover_multiplicity, exceptional_cover, exceptional_membership,
    select_radius_tz, uncovered_fraction, uniform_in_disk, verify_sum_bound, CandidateParams, CoverDisk, DiskCover,
    Region,
};
use minorant::geom::{circle_disk_arc, q_radius};
use minorant::growth::{geometric_radii, order_of, type_p, GrowthConfig, RadialSamples};
use minorant::oracles::{brute_multiplicity, mc_arc_measure, quad_circle_mean};
use minorant::subfun::{circle_mean, disk_mean, poisson_jensen_residual, sup_on_circle, AverageBackend, Zero};
use minorant::{Disk, LogModulusFunction, Point, PointMassMeasure, RadiusFunctionQ};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn point(r: f64) -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..TAU).prop_map(move |(s, a)| Point::polar(r * s.sqrt(), a))
}

fn polynomial(max_degree: usize) -> impl Strategy<Value = LogModulusFunction> {
    (prop::collection::vec((point(10.0), 1..3u32), 1..=max_degree), -2.0..2.0f64).prop_map(|(zs, lead)| {
        let zeros = zs.into_iter().map(|(location, m)| Zero { location, multiplicity: m as f64 }).collect();
        LogModulusFunction::polynomial(zeros, lead).unwrap()
    })
}

fn measure(max_atoms: usize, radius: f64) -> impl Strategy<Value = PointMassMeasure> {
    prop::collection::vec((point(radius), 0.1..3.0f64), 1..=max_atoms).prop_map(|v| {
        let triples: Vec<[f64; 3]> = v.into_iter().map(|(p, m)| [p.re, p.im, m]).collect();
        PointMassMeasure::from_triples(&triples).unwrap()
    })
}

fn clear_of_zeros(u: &LogModulusFunction, z: Point, d: f64) -> bool {
    u.zeros().iter().all(|a| a.location.dist(z) >= d)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn interval_union_subadditive(pieces in prop::collection::vec((0.0..10.0f64, 0.0..3.0f64), 0..30)) {
        let pieces: Vec<(f64, f64)> = pieces.into_iter().map(|(a, w)| (a, a + w)).collect();
        let u = IntervalUnion::from_pieces(pieces.iter().copied(), 8.0);
        let sum: f64 = pieces.iter().map(|(a, b)| b.min(8.0) - a.min(8.0)).sum();
        prop_assert!(u.length() <= sum + 1e-12);
        let gaps: f64 = u.gaps().iter().map(|(a, b)| b - a).sum();
        prop_assert!((gaps + u.length() - 8.0).abs() < 1e-12);
        for w in u.intervals.windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
    }

    #[test]
    fn avoiding_radius_misses_every_disk(
        disks in prop::collection::vec((point(3.0), 0.001..0.2f64), 0..25),
        z in point(1.0),
    ) {
        let disks: Vec<CoverDisk> = disks.into_iter().map(|(center, radius)| CoverDisk { center, radius }).collect();
        let total: f64 = disks.iter().map(|d| 2.0 * d.radius).sum();
        if let Ok(r) = find_avoiding_radius(&disks, z, 2.0) {
            prop_assert!(r > 0.0 && r <= 2.0);
            for d in &disks {
                prop_assert!(circle_misses(z, r, d));
            }
        } else {
            // A failure needs the projections to fill (0, 2].
            prop_assert!(total >= 2.0);
            prop_assert!(radial_projection_intervals(&disks, z, 2.0).gaps().is_empty());
        }
    }

    #[test]
    fn tz_mass_condition(mu in measure(12, 0.5), z in point(0.6), q in 0.5..3.0f64) {
        let rfun = RadiusFunctionQ::new(q).unwrap();
        if exceptional_membership(&mu, &rfun, z) {
            let t = select_radius_tz(&mu, &rfun, z).unwrap();
            let r = rfun.eval(z);
            prop_assert!(t > 0.0 && t < r);
            prop_assert!(t < r * mu.disk_mass(z, t));
        } else {
            prop_assert!(select_radius_tz(&mu, &rfun, z).is_err());
        }
    }

    #[test]
    fn subcover_covers_candidate_centers(cands in prop::collection::vec((point(5.0), 0.01..1.0f64), 1..80)) {
        let cover = besicovitch_subcover(&cands);
        let idx = cover.index();
        for (c, _) in &cands {
            prop_assert!(idx.covers(*c));
        }
        prop_assert!(cover_multiplicity(&cover) <= 2020);
    }

    #[test]
    fn exceptional_cover_constraints(mu in measure(30, 3.0), q in 0.5..2.0f64, seed in 0..1000u64) {
        let rfun = RadiusFunctionQ::new(q).unwrap();
        let params = CandidateParams { random_count: 500, ..CandidateParams::default() };
        let (cover, _) = exceptional_cover(&mu, &rfun, 4.0, &params, seed).unwrap();
        prop_assert!(check_constraints(&cover, &mu, &rfun).ok);
        for a in mu.atoms() {
            prop_assert!(cover.index().covers(a.location));
        }
    }

    #[test]
    fn sum_bound_on_random_regions(
        mu in measure(30, 3.0),
        q in 0.5..2.0f64,
        c in point(3.0),
        size in 0.05..2.0f64,
        rect in any::<bool>(),
    ) {
        let rfun = RadiusFunctionQ::new(q).unwrap();
        let params = CandidateParams { random_count: 300, ..CandidateParams::default() };
        let (cover, _) = exceptional_cover(&mu, &rfun, 4.0, &params, 1).unwrap();
        let s = if rect {
            Region::Rect { min: c - Point::new(size, size), max: c + Point::new(size, 0.5 * size) }
        } else {
            Region::Disk { center: c, radius: size }
        };
        let d = (2.0 * cover.sup_radius()).max(1e-9);
        prop_assert!(verify_sum_bound(&cover, &mu, &rfun, &s, d).unwrap().ok);
    }

    #[test]
    fn sub_mean_chain(u in polynomial(10), z in point(12.0), r in 0.05..8.0f64) {
        prop_assume!(clear_of_zeros(&u, z, 1e-3));
        let cf = AverageBackend::closed_form();
        let b = disk_mean(&u, z, r, &cf).value;
        let c = circle_mean(&u, z, r, &cf).value;
        let m = sup_on_circle(&u, z, r).value;
        let tol = 1e-10 * (1.0 + c.abs());
        prop_assert!(u.evaluate(z) <= b + tol);
        prop_assert!(b <= c + tol);
        prop_assert!(c <= m + 1e-6 * (1.0 + c.abs()));
        prop_assert!(c <= disk_mean(&u, z, E.sqrt() * r, &cf).value + tol);
    }

    #[test]
    fn circle_mean_nondecreasing(u in polynomial(10), z in point(12.0)) {
        let cf = AverageBackend::closed_form();
        let means: Vec<f64> = geometric_radii(0.01, 30.0, 40).iter().map(|&r| circle_mean(&u, z, r, &cf).value).collect();
        for w in means.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12 * (1.0 + w[1].abs()));
        }
    }

    #[test]
    fn backends_agree_away_from_zeros(u in polynomial(8), z in point(12.0), r in 0.1..8.0f64) {
        prop_assume!(!u.zero_near_circle(z, r, 1e-3));
        let q = circle_mean(&u, z, r, &AverageBackend::quadrature()).value;
        let c = circle_mean(&u, z, r, &AverageBackend::closed_form()).value;
        prop_assert!((q - c).abs() <= 1e-8 * (1.0 + c.abs()), "quadrature {} closed form {}", q, c);
    }

    #[test]
    fn poisson_jensen(u in polynomial(40), z in point(12.0), r in 0.05..20.0f64) {
        prop_assume!(clear_of_zeros(&u, z, 1e-3));
        let res = poisson_jensen_residual(&u, z, r).unwrap().unwrap();
        prop_assert!(res.abs() <= 1e-10, "residual {}", res);
    }

    #[test]
    fn quadrature_differences_decrease(z in point(2.0), r in 0.5..3.0f64) {
        // A zero far from every circle: spectral convergence.
        let u = LogModulusFunction::from_roots(&[Point::new(20.0, 5.0)]);
        let diffs: Vec<f64> = [16, 32, 64].iter().map(|&n| quad_circle_mean(&u, z, r, n).unwrap().certificate).collect();
        prop_assert!(diffs[1] <= diffs[0] + 1e-14 && diffs[2] <= diffs[1] + 1e-14);
    }

    #[test]
    fn q_radius_decreasing(q in 0.01..5.0f64, a in 0.0..100.0f64, b in 0.0..100.0f64) {
        prop_assume!(a < b);
        let rq = RadiusFunctionQ::new(q).unwrap();
        let (ra, rb) = (q_radius(&rq, Point::new(a, 0.0)), q_radius(&rq, Point::polar(b, 1.0)));
        prop_assert!(rb < ra && ra <= 1.0);
    }

    #[test]
    fn disk_mass_monotone(mu in measure(20, 2.0), z in point(2.0), t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(mu.disk_mass(z, lo) <= mu.disk_mass(z, hi));
    }

    #[test]
    fn order_scale_and_bounded_invariance(a in 0.3..3.0f64, k in 0.1..50.0f64, b in -5.0..5.0f64) {
        let cfg = GrowthConfig::default();
        let radii = geometric_radii(10.0, 1e6, 201);
        let base = order_of(&RadialSamples::from_fn(&radii, |r| r.powf(a)).unwrap(), &cfg).unwrap().value();
        let scaled = order_of(&RadialSamples::from_fn(&radii, |r| k * r.powf(a)).unwrap(), &cfg).unwrap().value();
        let shifted = order_of(&RadialSamples::from_fn(&radii, |r| r.powf(a) + b * (r.sin())).unwrap(), &cfg).unwrap().value();
        prop_assert!((base - scaled).abs() <= 0.05 && (base - shifted).abs() <= 0.05);
        let m = RadialSamples::from_fn(&radii, |r| r.powf(a)).unwrap();
        prop_assert!(type_p(&m, a + 0.5, &cfg).unwrap().value() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn arc_measure_matches_monte_carlo(
        disks in prop::collection::vec((point(6.0), 0.05..1.5f64), 1..20),
        r in 0.5..6.0f64,
        seed in 0..100u64,
    ) {
        let cover = DiskCover::new(
            disks.into_iter().map(|(center, radius)| CoverDisk { center, radius }).collect(),
            Default::default(),
        );
        let exact = minorant::pipeline::circle_arc_measure(&cover, r);
        let n = 1_000_000;
        let (est, _) = mc_arc_measure(&cover, r, n, seed).unwrap();
        let len = TAU * r;
        let p = exact / len;
        let se = len * (p * (1.0 - p) / n as f64).sqrt();
        prop_assert!((est - exact).abs() <= 3.0 * se + 1e-12, "exact {} mc {} se {}", exact, est, se);
    }

    #[test]
    fn multiplicity_matches_brute_force(cands in prop::collection::vec((point(3.0), 0.05..1.0f64), 1..40)) {
        let cover = besicovitch_subcover(&cands);
        let brute = brute_multiplicity(&cover, 0.01).unwrap();
        prop_assert!(brute <= cover_multiplicity(&cover));
    }
}

#[test]
fn single_arc_matches_direct_sampling() {
    let d = Disk::open(Point::new(2.0, 0.5), 0.7);
    let arc = circle_disk_arc(Point::ORIGIN, 2.0, &d).unwrap();
    let n = 1_000_000;
    let hits = (0..n).filter(|k| d.contains(Point::polar(2.0, (*k as f64 + 0.5) * TAU / n as f64))).count();
    assert!((arc.width() - TAU * hits as f64 / n as f64).abs() < 1e-5);
}

/// Uncovered members of E shrink as the random candidate density doubles.
#[test]
fn containment_trend_under_refinement() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let triples: Vec<[f64; 3]> = (0..1000)
        .map(|_| {
            let p = Point::polar(0.01 * rng.random::<f64>().sqrt(), rng.random::<f64>() * TAU);
            [p.re, p.im, 1.0]
        })
        .collect();
    let mu = PointMassMeasure::from_triples(&triples).unwrap();
    let rfun = RadiusFunctionQ::new(1.0).unwrap();
    let window = 2.0;
    let probes = uniform_in_disk(Point::ORIGIN, window, 10_000, 9, 99);
    let fractions: Vec<f64> = [250, 500, 1000, 2000]
        .iter()
        .map(|&n| {
            let params = CandidateParams { grid_step: None, random_count: n, local_per_atom: 0 };
            let (cover, _) = exceptional_cover(&mu, &rfun, window, &params, 3).unwrap();
            let (members, uncovered) = uncovered_fraction(&cover, &mu, &rfun, &probes);
            assert!(members > 0);
            uncovered as f64 / members as f64
        })
        .collect();
    assert!(fractions[0] > 0.0, "{fractions:?}");
    assert!(fractions[3] <= fractions[0] / 8.0, "{fractions:?}");
}
