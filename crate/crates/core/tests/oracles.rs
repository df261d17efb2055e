//! Worked examples checked against independently derived values.

use approx::{assert_abs_diff_eq, assert_relative_eq};

use qhgeom::domain::DomainSpace;
use qhgeom::generate::{gen_arc_example, gen_disk, gen_halfline, gen_snowflake_disk, halfline_id, DEFAULT_ANCHORS};
use qhgeom::mesh::MeshedDomain;
use qhgeom::metric::{Distances, FiniteMetricSpace};
use qhgeom::quasihyperbolic::{
    check_small_scale, j_distance, qh_distance, qh_geodesic, relative_distance, QhWeightMode, SmallScale,
};
use qhgeom::sampling::PairSampling;
use qhgeom::transforms::{invert, roundtrip_check, sphericalize, PointLabel};
use qhgeom::uniformity::{
    additive_constant, additive_fit, curve_score, qh_uniformity, quasiconvexity_estimate, uniformity_estimate,
    CurveKind,
};

const H: f64 = 0.05;

fn disk() -> (DomainSpace, MeshedDomain) {
    let dom = gen_disk(H).unwrap();
    let md = MeshedDomain::new(dom.clone()).unwrap();
    (dom, md)
}

fn point(dom: &DomainSpace, x: f64, y: f64) -> usize {
    dom.nearest_interior(&[x, y]).unwrap()
}

fn coords(dom: &DomainSpace, id: usize) -> Vec<f64> {
    dom.ambient().point(id).unwrap().to_vec()
}

#[test]
fn disk_chord_length_and_relative_distance() {
    let (dom, md) = disk();
    let (a, b) = (point(&dom, -0.5, 0.0), point(&dom, 0.5, 0.0));
    assert_abs_diff_eq!(md.length_distance(a, b).unwrap(), 1.0, epsilon = 2.0 * H);
    // boundary distances are 1/2 up to the circle sampling error 2 sin(pi/720)
    let sampling = 2.0 * (std::f64::consts::PI / 720.0).sin();
    assert_abs_diff_eq!(relative_distance(&dom, a, b).unwrap(), 2.0, epsilon = 4.0 * sampling);
}

#[test]
fn radial_quasihyperbolic_distance_in_the_disk() {
    let (dom, md) = disk();
    let (o, x) = (point(&dom, 0.0, 0.0), point(&dom, 0.1, 0.0));
    let k = qh_distance(&md, o, x, QhWeightMode::Trapezoid).unwrap();
    assert_abs_diff_eq!(k, (1.0f64 / 0.9).ln(), epsilon = 0.005);
    let upper = qh_distance(&md, o, x, QhWeightMode::Upper).unwrap();
    assert!(upper >= k);
    match check_small_scale(&md, o, x, 1.0, 1.0, QhWeightMode::Trapezoid).unwrap() {
        SmallScale::Pass { k, bound } => {
            assert_abs_diff_eq!(bound, 0.2, epsilon = 1e-3);
            assert_abs_diff_eq!(k, 0.105, epsilon = 0.005);
        }
        other => panic!("expected a pass, got {other:?}"),
    }
}

#[test]
fn disk_geodesic_stays_near_the_chord() {
    let (dom, md) = disk();
    let (a, b) = (point(&dom, -0.5, 0.0), point(&dom, 0.5, 0.0));
    let path = qh_geodesic(&md, a, b, QhWeightMode::Trapezoid).unwrap();
    for &v in &path.vertices {
        let p = coords(&dom, v);
        assert!(p[0].hypot(p[1]) <= 0.5 + 2.0 * H, "vertex {v} at {p:?}");
    }
}

#[test]
fn straight_chord_scores_one() {
    let (dom, _) = disk();
    let mut chord: Vec<usize> = (-10..=10).map(|i| point(&dom, i as f64 * H, 0.0)).collect();
    chord.dedup();
    let s = curve_score(&dom, &chord).unwrap();
    assert_abs_diff_eq!(s.turning, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.cigar, 0.5, epsilon = 0.01);
    assert_abs_diff_eq!(s.score, 1.0, epsilon = 1e-12);
}

#[test]
fn disk_constants() {
    let (dom, md) = disk();
    let sampling = PairSampling::Auto { count: 10_000, seed: 17 };
    let est = uniformity_estimate(&md, sampling, &CurveKind::ALL).unwrap();
    assert!((1.0..=3.0).contains(&est.c), "c_est {}", est.c);
    let qh = qh_uniformity(&md, sampling).unwrap();
    assert!(qh.c_qh >= 1.0 && qh.c_qh.is_finite());
    // convex: chords stay inside, up to mesh detours near the boundary
    let qc = quasiconvexity_estimate(&md, &[0.5]);
    assert!(qc[0].c >= 1.0 && qc[0].c <= 1.5, "c(1/2) = {}", qc[0].c);
    let fit = additive_fit(&md, sampling).unwrap();
    let bound = (1.0 + 2.0 * md.beta()) * additive_constant(0.5, qc[0].c, est.c);
    assert!(fit.cprime <= bound, "{} > {}", fit.cprime, bound);
    assert!(dom.interior().len() > 900);
}

#[test]
fn halfline_values() {
    let dom = gen_halfline(1.01, [-400, 400], &DEFAULT_ANCHORS).unwrap();
    let (one, two, three) = (
        halfline_id(&dom, 1.0).unwrap(),
        halfline_id(&dom, 2.0).unwrap(),
        halfline_id(&dom, 3.0).unwrap(),
    );
    assert_relative_eq!(j_distance(&dom, one, two).unwrap(), 2f64.ln(), max_relative = 1e-12);
    assert_relative_eq!(j_distance(&dom, one, three).unwrap(), 3f64.ln(), max_relative = 1e-12);
    assert_relative_eq!(relative_distance(&dom, one, three).unwrap(), 2.0, max_relative = 1e-12);
    let md = MeshedDomain::new(dom).unwrap();
    let trap = qh_distance(&md, one, two, QhWeightMode::Trapezoid).unwrap();
    assert_relative_eq!(trap, 2f64.ln(), max_relative = 0.01);
    let upper = qh_distance(&md, one, two, QhWeightMode::Upper).unwrap();
    assert!(upper >= 2f64.ln() && upper <= 1.05 * 2f64.ln());
    let path = qh_geodesic(&md, one, three, QhWeightMode::Upper).unwrap();
    let xs: Vec<f64> = path.vertices.iter().map(|&v| md.domain().ambient().point(v).unwrap()[0]).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    assert_relative_eq!(md.length_distance(one, three).unwrap(), 2.0, max_relative = 1e-12);

    let sampling = PairSampling::Auto { count: 5_000, seed: 17 };
    let est = uniformity_estimate(&md, sampling, &CurveKind::ALL).unwrap();
    assert!(est.c <= 1.1, "c_est {}", est.c);
    let qh = qh_uniformity(&md, sampling).unwrap();
    assert_abs_diff_eq!(qh.c_qh, 1.0, epsilon = 0.01);
    let fit = additive_fit(&md, sampling).unwrap();
    assert_abs_diff_eq!(fit.c, 1.0, epsilon = 0.25);
    assert!(fit.cprime < 0.05);
}

#[test]
fn inversion_of_the_line_is_the_pullback() {
    let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect();
    let line = FiniteMetricSpace::euclidean(&pts).unwrap();
    let inv = invert(&line, 0, false).unwrap();
    let at = |i| inv.index_of(PointLabel::Point(i)).unwrap();
    assert_relative_eq!(inv.dist(at(1), at(3)), 0.75, max_relative = 1e-12);
    assert_relative_eq!(inv.dist(at(1), at(2)), 0.5, max_relative = 1e-12);
}

#[test]
fn distance_to_infinity_after_sphericalization() {
    let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.7).cos() * i as f64, (i as f64).sqrt()]).collect();
    let space = FiniteMetricSpace::euclidean(&pts).unwrap();
    let sph = sphericalize(&space, 3).unwrap();
    let inf = sph.index_of(PointLabel::Infinity).unwrap();
    for x in 0..space.len() {
        let s = 1.0 / (1.0 + space.dist(x, 3));
        let d = sph.dist(sph.index_of(PointLabel::Point(x)).unwrap(), inf);
        assert!(d <= s * (1.0 + 1e-12) && d >= 0.25 * s * (1.0 - 1e-12));
    }
}

#[test]
fn dyadic_roundtrip() {
    let (space, p) = qhgeom::generate::dyadic_space();
    assert_eq!(space.point(p).unwrap(), &[1.0]);
    let r = roundtrip_check(&space, p).unwrap();
    assert!(r.pass && r.worst_ratio <= 16.0);
    let [x, y] = r.worst_pair;
    let ratio = r.worst_ratio;
    assert!(x < y && ratio >= 1.0);
}

#[test]
fn arc_doubles_when_u_halves() {
    let sampling = PairSampling::Auto { count: 10_000, seed: 17 };
    let c = |u: f64| {
        let (arc, _) = gen_arc_example(u, 600).unwrap();
        uniformity_estimate(&MeshedDomain::new(arc).unwrap(), sampling, &CurveKind::ALL).unwrap().c
    };
    let (c4, c2) = (c(0.4), c(0.2));
    assert_relative_eq!(c2, 2.0 * c4, max_relative = 0.3);
}

#[test]
fn snowflake_lengths_grow() {
    let len = |h: f64| {
        let dom = gen_snowflake_disk(0.5, h).unwrap();
        let (a, b) = (point(&dom, -0.5, 0.0), point(&dom, 0.5, 0.0));
        MeshedDomain::new(dom).unwrap().length_distance(a, b).unwrap()
    };
    let (coarse, fine) = (len(0.1), len(0.05));
    assert!(fine >= 1.3 * coarse);
    // a path of m steps of size h has length m h^(1/2) = 1 / h^(1/2)
    assert_relative_eq!(coarse, 0.1f64.powf(-0.5), max_relative = 0.05);
}
