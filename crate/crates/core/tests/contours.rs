mod common;

use rcp_core::contours::{count_bound_check, count_contours, count_relaxed, enumerate_contours, AdmissiblePath};
use rcp_core::percolation::{find_dual_contour, sample_iid_bonds, WedgeBondConfig, build_wedge};

#[test]
fn dfs_agrees_with_word_oracle() {
    for n in 2..=12 {
        let (exact, relaxed) = common::contour_word_counts(n);
        assert_eq!(count_contours(n).unwrap(), exact, "c_{n}");
        assert_eq!(count_relaxed(n).unwrap(), relaxed, "relaxed count at n = {n}");
    }
}

#[test]
fn fourth_count_from_both_enumerators() {
    let dfs = enumerate_contours(4).unwrap().len() as u64;
    assert_eq!(dfs, common::contour_word_counts(4).0);
    assert!(count_bound_check(4).unwrap().ok);
}

#[test]
fn bound_holds_through_twelve() {
    for n in 2..=12 {
        let b = count_bound_check(n).unwrap();
        assert!(b.ok && b.count <= b.relaxed && b.relaxed <= b.bound, "{b:?}");
    }
}

#[test]
fn length_two_matches_dual_contour() {
    let c = WedgeBondConfig::all_closed(build_wedge(3).unwrap());
    let dual = find_dual_contour(&c).unwrap();
    let quad = enumerate_contours(2).unwrap();
    assert_eq!(quad[0].vertices(), dual.to_quadrant().as_slice());
}

#[test]
fn extracted_contours_are_admissible_paths() {
    let mut checked = 0;
    for seed in 0..3000 {
        let c = sample_iid_bonds(0.55, 10, seed).unwrap();
        if let Ok(dual) = find_dual_contour(&c) {
            let path = AdmissiblePath::new(dual.to_quadrant()).unwrap();
            assert_eq!(path.len(), dual.len());
            checked += 1;
        }
    }
    assert!(checked > 100);
}
