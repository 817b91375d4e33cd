mod common;

use std::collections::BTreeMap;

use common::*;
use tirettes_core::{validate_exercise_pack, Pack, StateVector};

#[test]
fn full_pack_histograms() {
    let pack = Pack::load(data_path("tirettes_pack.json")).unwrap();
    let report = validate_exercise_pack(&pack).unwrap();
    assert_eq!(report.exercises.len(), 43);
    assert!(report.is_playable());
    let sliders: BTreeMap<usize, usize> = [
        (2, 3),
        (3, 7),
        (4, 2),
        (5, 1),
        (6, 2),
        (7, 4),
        (8, 9),
        (9, 6),
        (10, 4),
        (11, 3),
        (12, 1),
        (13, 1),
    ]
    .into();
    assert_eq!(report.slider_histogram(), sliders);
    let solutions: BTreeMap<usize, usize> = [
        (1, 1),
        (2, 6),
        (3, 4),
        (4, 7),
        (5, 2),
        (6, 8),
        (8, 6),
        (9, 1),
        (10, 1),
        (12, 1),
        (16, 2),
        (18, 3),
        (20, 1),
    ]
    .into();
    assert_eq!(report.solution_histogram(), solutions);
}

#[test]
fn full_pack_golds_match_brute_force() {
    let pack = Pack::load(data_path("tirettes_pack.json")).unwrap();
    for ex in &pack.exercises {
        if ex.raw_space() <= 100_000 {
            assert_eq!(
                ex.enumerate_solutions().unwrap().vectors(),
                &brute_force_golds(ex)[..],
                "{}",
                ex.id()
            );
        }
    }
}

#[test]
fn fixture_pack() {
    let cat = fixtures_catalog();
    let golds: Vec<StateVector> = cat.golds("EX-A").unwrap().vectors().to_vec();
    let expect: Vec<StateVector> = [[1, 1, 1], [2, 3, 1], [3, 2, 2]]
        .iter()
        .map(|v| StateVector::new(v.to_vec()))
        .collect();
    assert_eq!(golds, expect);
    assert_eq!(
        cat.golds("EX-B").unwrap().vectors(),
        &[StateVector::new(vec![1, 1, 1]), StateVector::new(vec![2, 2, 3])]
    );
}
