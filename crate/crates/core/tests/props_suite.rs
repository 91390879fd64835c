use timely_ck::props::{group_names, run_group, run_suite};

#[test]
fn suite_passes_at_seed_zero() {
    let report = run_suite(0, 100);
    for g in &report.groups {
        assert!(g.passed(), "{g:?}");
    }
    assert_eq!(report.groups.len(), group_names().count());
}

#[test]
fn suite_is_reproducible() {
    assert_eq!(run_group("shift", 9, 50), run_group("shift", 9, 50));
    assert_eq!(run_suite(4, 20), run_suite(4, 20));
}
