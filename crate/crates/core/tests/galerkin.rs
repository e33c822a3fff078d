use pfseries_core::galerkin::{
    assemble, galerkin_field, l2_projection, nodal_interpolant, solve, ulam_matrix, Basis,
    Partition, UlamSampler,
};
use pfseries_core::{DampedProblem, DomainBox, MapDescriptor, QuadRule, ScalarField};

#[test]
fn projection_reproduces_the_hat_space() {
    let d = DomainBox::unit_interval();
    let basis = Basis::hat(d, 8).unwrap();
    let coeffs: Vec<f64> = (0..basis.len()).map(|i| (i as f64 * 0.7).sin()).collect();
    let f = galerkin_field(&basis, &coeffs).unwrap();
    let rule = basis.partition().aligned_rule(4).unwrap();
    let proj = l2_projection(&basis, &f, &rule).unwrap();
    let nodal = nodal_interpolant(&basis, &f).unwrap();
    for ((a, b), c) in proj.iter().zip(&nodal).zip(&coeffs) {
        assert!((a - c).abs() < 1e-12 && (b - c).abs() < 1e-12);
    }
}

#[test]
fn constants_are_solved_exactly() {
    // P maps constants to constants for the tent map, so u = 1 / (1 - a) lies in both spaces.
    let m = MapDescriptor::tent();
    let prob = DampedProblem::new(m, 0.5, ScalarField::constant(1.0)).unwrap();
    let rule = QuadRule::composite(&m.domain, &[(1..32).map(|k| k as f64 / 32.0).collect()], 4).unwrap();
    for basis in [
        Basis::hat(m.domain, 16).unwrap(),
        Basis::indicator(Partition::uniform(m.domain, 16).unwrap()),
    ] {
        let c = solve(&assemble(&prob, &basis, &rule).unwrap()).unwrap();
        let u = galerkin_field(&basis, &c).unwrap();
        for i in 0..50 {
            let x = (i as f64 + 0.5) / 50.0;
            assert!((u.eval(&[x, 0.0]) - 2.0).abs() < 1e-12, "{:?} at {x}", basis.kind());
        }
    }
}

#[test]
fn ulam_columns_are_probability_vectors() {
    let m = MapDescriptor::tent();
    let part = Partition::uniform(m.domain, 10).unwrap();
    let exact = ulam_matrix(&m, &part, UlamSampler::Exact).unwrap();
    let mc = ulam_matrix(&m, &part, UlamSampler::MonteCarlo { n_samples: 20_000, seed: 7 }).unwrap();
    for k in 0..part.len() {
        let s: f64 = (0..part.len()).map(|i| exact.row(i)[k]).sum();
        assert!((s - 1.0).abs() < 1e-12, "column {k} sums to {s}");
        for i in 0..part.len() {
            assert!((exact.row(i)[k] - mc.row(i)[k]).abs() < 0.03);
        }
    }
}

#[test]
fn hat_basis_is_one_dimensional() {
    let d = DomainBox::new(&[0.0, 0.0], &[1.0, 1.0], &[false, false]).unwrap();
    assert!(Basis::hat(d, 4).is_err());
}
