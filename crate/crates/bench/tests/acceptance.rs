//! Acceptance suite: one line per criterion, then a hard assertion.
//!
//! Every criterion runs as its own test so the slow ones overlap. Each prints
//! a single `[PASS]`/`[FAIL]` line with the measured values and the pinned
//! tolerance before asserting.

use pfseries_bench::criteria::run_criterion;

fn criterion(id: u32) {
    let r = run_criterion(id).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn c01_smooth_convergence_rate() {
    criterion(1);
}

#[test]
fn c02_singular_fixed_grid_eoc() {
    criterion(2);
}

#[test]
fn c03_singular_pinns_beats_fixed_grid() {
    criterion(3);
}

#[test]
fn c04_loss_form_equivalence() {
    criterion(4);
}

#[test]
fn c05_manufactured_exactness() {
    criterion(5);
}

#[test]
fn c06_duality_and_coercivity() {
    criterion(6);
}

#[test]
fn c07_series_residual_bound() {
    criterion(7);
}

#[test]
fn c08_quasi_optimality() {
    criterion(8);
}

#[test]
fn c09_gradient_correctness() {
    criterion(9);
}

#[test]
fn c10_planar_reproduction() {
    criterion(10);
}

#[test]
fn c11_quadrature_discrepancy_trend() {
    criterion(11);
}
