mod common;

use rcp_core::distributions::InterarrivalSpec;
use rcp_core::percolation::{
    build_wedge, check_parity, check_property_i, check_property_ii, explore_cluster, find_dual_contour,
    validate_contour, InducedArithmetic, InducedWindow, Verdict, WedgeBondConfig, WedgeEdge,
};
use rcp_core::{Error, ETA};

fn exhaustive(h: u32) -> (u32, u32) {
    let g = build_wedge(h).unwrap();
    let (mut finite, mut exceptions) = (0, 0);
    for bits in 0..1u64 << g.edge_count() {
        let c = WedgeBondConfig::from_bits(g, bits).unwrap();
        let top = explore_cluster(&c).reached_top;
        assert_eq!(top, common::reaches_top(&c));
        let extracted = match find_dual_contour(&c) {
            Ok(contour) => validate_contour(&c, &contour).is_ok(),
            Err(Error::Undecidable { .. }) => false,
            Err(e) => panic!("{e}"),
        };
        finite += u32::from(!top);
        if extracted == top || common::dual_separation_exists(&c) == top {
            exceptions += 1;
        }
    }
    (finite, exceptions)
}

#[test]
fn contour_iff_finite_cluster_small_heights() {
    for h in 1..=3 {
        let (finite, exceptions) = exhaustive(h);
        assert_eq!(exceptions, 0, "H = {h}");
        assert!(finite > 0);
    }
}

#[test]
fn parity_of_all_dual_paths_through_twelve() {
    for n in 2..=12 {
        let (count, failure) = check_parity(n);
        assert!(count > 0);
        assert_eq!(failure, None, "n = {n}");
    }
}

#[test]
fn coupling_on_both_induced_models() {
    let lattice = InterarrivalSpec::arithmetic(1.0, &[(3, 1.0 / 3.0), (4, 1.0 / 3.0), (5, 1.0 / 3.0)]).unwrap();
    let arith = InducedArithmetic::new(lattice, 8.0, 2, 1.0).unwrap();
    let window = InducedWindow::new(InterarrivalSpec::exponential(1.0).unwrap(), 60.0, 0.05).unwrap();
    let mut tops = 0;
    for seed in 0..200 {
        let (s, c) = arith.sample_with_graph(10, seed).unwrap();
        let r = arith.coupling_check(&s, &c).unwrap();
        assert_eq!(r.violation, None, "seed {seed}");
        tops += u32::from(r.reached_top);
        let (s, c) = window.sample_with_graph(10, seed).unwrap();
        let r = window.coupling_check(&s, &c).unwrap();
        assert_eq!(r.violation, None, "seed {seed}");
        tops += u32::from(r.reached_top);
    }
    assert!(tops > 100);
}

#[test]
fn window_pair_closure_below_eta_squared() {
    // Exp(1) marks: U((a, a+ν]) = ν, so e^{−λν} must be below η − 2ν.
    let nu = ETA / 4.0;
    let model = InducedWindow::new(InterarrivalSpec::exponential(1.0).unwrap(), 7.0 / nu, nu).unwrap();
    let pair = [WedgeEdge::north_east(0, 0), WedgeEdge::north_east(0, 2)];
    let r = check_property_i(&model, &pair, 100_000, 1).unwrap();
    assert!(r.passes, "{r:?}");
    let single = check_property_i(&model, &pair[..1], 100_000, 2).unwrap();
    assert!(single.passes && single.joint_closure.mean < ETA, "{single:?}");
}

#[test]
fn arithmetic_columns_two_apart_are_independent() {
    let lattice = InterarrivalSpec::arithmetic(1.0, &[(1, 0.5), (2, 0.5)]).unwrap();
    let model = InducedArithmetic::new(lattice, 2.0, 1, 1.0).unwrap();
    let r = check_property_ii(&model, WedgeEdge::north_east(0, 2), WedgeEdge::north_east(2, 2), 50_000, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    let adjacent = check_property_ii(&model, WedgeEdge::north_east(0, 2), WedgeEdge::north_west(2, 2), 20_000, 4).unwrap();
    assert_eq!(adjacent.verdict, Verdict::Informational);
}
