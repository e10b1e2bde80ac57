mod common;

#[test]
fn five_levels_suffice() {
    let (a, b) = (common::reoptimized_fidelity(5), common::reoptimized_fidelity(10));
    assert!(a > 1.0 - 1e-6 && b > 1.0 - 1e-6, "{a} {b}");
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}
