mod common;

use proptest::prelude::*;
use proxnet_core::chains::{pairwise_distance_sum, theta_chain};
use proxnet_core::geom::{sample_ppp, Lune, ProximityTemplate};
use proxnet_core::graphs::{build_delaunay, build_mst, build_proximity, build_rng, components, is_subgraph, Network};
use proxnet_core::perc::{
    classify_nice_with, oriented_reach, t_statistic, BlockParams, Direction, Mechanism, NiceThresholds, Provenance,
    SiteField, TiltedLattice,
};
use proxnet_core::robust::{completeness_failures, robust_subnetwork, RobustRule};
use proxnet_core::routes::network_distance;
use proxnet_core::{Configuration, Point, Window};

fn config_of(points: Vec<(f64, f64)>, side: f64) -> Configuration {
    let pts = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
    Configuration::new(pts, Window::square(side).unwrap()).unwrap()
}

/// Points on a 1/1024 grid, so integer shifts are exact.
fn dyadic_points(max_n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0u32..20_480, 0u32..20_480), 2..max_n)
        .prop_map(|v| v.into_iter().map(|(x, y)| (x as f64 / 1024.0, y as f64 / 1024.0)).collect())
}

fn ppp(side: f64) -> impl Strategy<Value = Configuration> {
    any::<u64>().prop_map(move |s| sample_ppp(Window::square(side).unwrap(), 1.0, s).unwrap())
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let (d1, d2, d3, d4) = (o(a, b, c), o(a, b, d), o(c, d, a), o(c, d, b));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn planar(net: &Network, pts: &[Point]) -> bool {
    let e = net.edge_pairs();
    for (k, &(a, b)) in e.iter().enumerate() {
        for &(c, d) in &e[k + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(pts[a], pts[b], pts[c], pts[d]) {
                return false;
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lune_is_symmetric_and_rigid(
        p in (0.0..10.0f64, 0.0..10.0f64),
        q in (0.0..10.0f64, 0.0..10.0f64),
        z in (0.0..10.0f64, 0.0..10.0f64),
        shift in (-50.0..50.0f64, -50.0..50.0f64),
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let (p, q, z) = (Point::new(p.0, p.1), Point::new(q.0, q.1), Point::new(z.0, z.1));
        prop_assume!(p.dist(q) > 1e-3);
        let d = p.dist(q);
        // Stay clear of the lune boundary, where rounding decides.
        prop_assume!((z.dist(p) - d).abs() > 1e-6 * d && (z.dist(q) - d).abs() > 1e-6 * d);
        let inside = Lune::new(p, q).unwrap().contains(z);
        prop_assert_eq!(Lune::new(q, p).unwrap().contains(z), inside);
        let (s, c) = angle.sin_cos();
        let m = |v: Point| Point::new(c * v.x - s * v.y + shift.0, s * v.x + c * v.y + shift.1);
        prop_assert_eq!(Lune::new(m(p), m(q)).unwrap().contains(m(z)), inside);
    }

    #[test]
    fn hierarchy_planarity_and_tree_shape(points in dyadic_points(120)) {
        let c = config_of(points, 20.0);
        prop_assume!(!c.has_duplicates());
        let mst = build_mst(&c);
        let rng = build_rng(&c);
        let gabriel = build_proximity(&c, ProximityTemplate::GabrielDisc).unwrap();
        let delaunay = build_delaunay(&c);
        prop_assert!(is_subgraph(&mst, &rng).unwrap());
        prop_assert!(is_subgraph(&rng, &gabriel).unwrap());
        prop_assert!(is_subgraph(&gabriel, &delaunay).unwrap());
        prop_assert!(planar(&rng, &c.points));
        prop_assert!(planar(&gabriel, &c.points));
        prop_assert_eq!(mst.edges.len(), c.len() - 1);
        prop_assert_eq!(common::component_count(c.len(), &mst.edge_pairs()), 1);
    }

    #[test]
    fn translation_keeps_edge_sets(points in dyadic_points(80), dx in -100i32..100, dy in -100i32..100) {
        let c = config_of(points.clone(), 20.0);
        let moved: Vec<Point> = points.iter().map(|&(x, y)| Point::new(x + dx as f64, y + dy as f64)).collect();
        let w = Window::new(dx as f64, dy as f64, 20.0 + dx as f64, 20.0 + dy as f64).unwrap();
        let m = Configuration::new(moved, w).unwrap();
        prop_assert_eq!(build_rng(&c).edge_pairs(), build_rng(&m).edge_pairs());
        prop_assert_eq!(build_delaunay(&c).edge_pairs(), build_delaunay(&m).edge_pairs());
        prop_assert_eq!(build_mst(&c).edge_pairs(), build_mst(&m).edge_pairs());
        let g = ProximityTemplate::GabrielDisc;
        prop_assert_eq!(
            build_proximity(&c, g).unwrap().edge_pairs(),
            build_proximity(&m, g).unwrap().edge_pairs()
        );
    }

    #[test]
    fn robust_subnetwork_is_sound_and_complete(c in ppp(12.0)) {
        let report = robust_subnetwork(&c, RobustRule::Rng).unwrap();
        prop_assert!(is_subgraph(&report.net, &build_rng(&c)).unwrap());
        prop_assert!(completeness_failures(&c, RobustRule::Rng).unwrap().is_empty());
        prop_assert!(report.n0 <= report.n_cities);
        if report.is_connected() {
            prop_assert_eq!(report.n0, 0);
        }
    }

    #[test]
    fn network_distance_is_a_metric(c in ppp(8.0), picks in (any::<usize>(), any::<usize>(), any::<usize>())) {
        prop_assume!(c.len() >= 3);
        let net = build_rng(&c);
        let (a, b, d) = (picks.0 % c.len(), picks.1 % c.len(), picks.2 % c.len());
        let dist = |i, j| network_distance(&net, i, j).unwrap().unwrap();
        let (ab, ba, bd, ad) = (dist(a, b), dist(b, a), dist(b, d), dist(a, d));
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
        prop_assert!(ad <= (ab + bd) * (1.0 + 1e-9));
        prop_assert!(ab >= c.points[a].dist(c.points[b]) * (1.0 - 1e-12));
    }

    #[test]
    fn t_is_even_and_at_least_two(marks in prop::collection::vec(any::<bool>(), 41 * 21)) {
        let lattice = TiltedLattice::new(20, 10).unwrap();
        let prov = Provenance::SyntheticP { p: 0.5, mechanism: Mechanism::Independent, seed: 0 };
        let mut k = 0;
        let field = SiteField::from_fn(lattice, prov, |_| { k += 1; marks[(k - 1) % marks.len()] });
        let t = t_statistic(&field);
        prop_assert!(t.t >= 2 && t.t % 2 == 0);
        if t.truncated {
            prop_assert!(t.t > 20);
        }
    }

    #[test]
    fn adding_good_marks_never_shrinks_reach(
        marks in prop::collection::vec(0.0..1.0f64, 21 * 11),
        extra in prop::collection::vec(any::<bool>(), 21 * 11),
    ) {
        let lattice = TiltedLattice::new(10, 5).unwrap();
        let prov = Provenance::SyntheticP { p: 0.6, mechanism: Mechanism::Independent, seed: 0 };
        let mut k = 0;
        let field = SiteField::from_fn(lattice, prov.clone(), |_| { k += 1; marks[(k - 1) % marks.len()] < 0.6 });
        let mut more = field.clone();
        for (i, s) in lattice.sites().enumerate() {
            if extra[i % extra.len()] {
                more.set(s, true);
            }
        }
        let from = (0, -4);
        for dir in [Direction::Up, Direction::Down] {
            let small = oriented_reach(&field, from, dir).unwrap();
            let big = oriented_reach(&more, from, dir).unwrap();
            prop_assert!(small.iter().all(|s| big.contains(s)));
        }
    }

    #[test]
    fn pairwise_sum_grows_with_sigma(c in any::<u64>().prop_map(|s| {
        sample_ppp(Window::new(-6.0, -6.0, 6.0, 6.0).unwrap(), 1.0, s).unwrap()
    }), a in 0.0..6.0f64, b in 0.0..6.0f64) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(pairwise_distance_sum(&c, lo).unwrap() <= pairwise_distance_sum(&c, hi).unwrap());
        let inside: Vec<Point> = c.points.iter().copied().filter(|p| p.x * p.x + p.y * p.y < hi * hi).collect();
        let naive: f64 = inside.iter().enumerate()
            .flat_map(|(k, &a)| inside[k + 1..].iter().map(move |&b| a.dist(b)))
            .sum();
        prop_assert!((pairwise_distance_sum(&c, hi).unwrap() - naive).abs() <= 1e-9 * naive.max(1.0));
    }

    #[test]
    fn theta_chains_hold_on_random_squares(c in ppp(5.0)) {
        let report = robust_subnetwork(&c, RobustRule::Rng).unwrap();
        for v in 0..c.len() {
            prop_assert!(theta_chain(&report, &c, v).is_ok());
        }
        prop_assert_eq!(components(&report.net).count(), report.components.count());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nice_is_monotone_in_the_cap(c in ppp(24.0), caps in (1.0..600.0f64, 1.0..600.0f64)) {
        let (lo, hi) = (caps.0.min(caps.1), caps.0.max(caps.1));
        let th = NiceThresholds::relaxed();
        let center = Point::new(12.0, 12.0);
        let a = classify_nice_with(&c, center, &BlockParams::new(16.0, lo), &th).unwrap();
        let b = classify_nice_with(&c, center, &BlockParams::new(16.0, hi), &th).unwrap();
        prop_assert!(!a.nice || b.nice);
    }
}
