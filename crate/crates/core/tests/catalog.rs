use lure_core::catalog::{verify_example, VerifyOptions, NAMES};

#[test]
fn every_entry_verifies() {
    let mut failures = Vec::new();
    for name in NAMES.iter().copied().chain(["ex4c:h=1"]) {
        let start = std::time::Instant::now();
        let rep = verify_example(name, &VerifyOptions::default()).unwrap();
        println!("{rep}\n  ({:.2?})", start.elapsed());
        if !rep.passed() {
            failures.push(name);
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
