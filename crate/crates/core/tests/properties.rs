mod common;

use common::{run, total_cases, PROPERTIES};

fn check(name: &str) {
    let p = PROPERTIES.iter().find(|p| p.name == name).unwrap();
    if let Err(e) = run(p) {
        panic!("{e}");
    }
}

#[test]
fn case_budget() {
    assert_eq!(total_cases(), 1000);
}

#[test]
fn rename_identity() {
    check("rename_identity");
}

#[test]
fn rename_composition() {
    check("rename_composition");
}

#[test]
fn weaken_is_renaming() {
    check("weaken_is_renaming");
}

#[test]
fn lift_identity() {
    check("lift_identity");
}

#[test]
fn lift_naturality() {
    check("lift_naturality");
}

#[test]
fn bind_rename_compat() {
    check("bind_rename_compat");
}

#[test]
fn bisim_equivalence() {
    check("bisim_equivalence");
}

#[test]
fn bisim_monotone() {
    check("bisim_monotone");
}

#[test]
fn bisim_vs_truncation() {
    check("bisim_vs_truncation");
}

#[test]
fn lambek() {
    check("lambek");
}

#[test]
fn memoization() {
    check("memoization");
}

#[test]
fn enumerate_vs_oracle() {
    check("enumerate_vs_oracle");
}
