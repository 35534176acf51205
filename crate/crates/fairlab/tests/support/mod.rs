//! Shared helpers for the acceptance suite.

/// One pass/fail line per criterion; run with `--nocapture` to see them all.
pub fn criterion_line(number: usize, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("[{status}] criterion {number}: {detail}");
    assert!(pass, "criterion {number} failed: {detail}");
}
