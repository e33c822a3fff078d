use pfseries_core::quadrature::gauss::gauss_legendre;
use pfseries_core::{AdaptiveIntegrator, DomainBox, QuadRule};

#[test]
fn gauss_is_exact_to_degree_2n_minus_1() {
    let d = DomainBox::unit_interval();
    for n in [2usize, 5, 11] {
        let rule = QuadRule::gauss(&d, n).unwrap();
        for k in 0..2 * n {
            let got = rule.integrate(&|x: &[f64; 2]| x[0].powi(k as i32)).unwrap();
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn gauss_nodes_are_symmetric() {
    let (x, w) = gauss_legendre(7).unwrap();
    for i in 0..7 {
        assert!((x[i] + x[6 - i]).abs() < 1e-14);
        assert!((w[i] - w[6 - i]).abs() < 1e-14);
    }
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
}

#[test]
fn tensor_rule_integrates_products() {
    let d = DomainBox::new(&[0.0, -1.0], &[2.0, 1.0], &[false, false]).unwrap();
    let rule = QuadRule::gauss(&d, 4).unwrap();
    let got = rule.integrate(&|x: &[f64; 2]| x[0].powi(3) * x[1] * x[1]).unwrap();
    assert!((got - 4.0 * 2.0 / 3.0).abs() < 1e-13);
}

#[test]
fn graded_rule_resolves_an_endpoint_singularity() {
    // ∫_0^1 x^{-1/3} dx = 3/2
    let d = DomainBox::unit_interval();
    let f = |x: &[f64; 2]| x[0].powf(-1.0 / 3.0);
    let graded = QuadRule::graded_1d(&d, &[], 1e-12, 8).unwrap();
    let uniform = QuadRule::gauss(&d, 101).unwrap();
    let e_graded = (graded.integrate(&f).unwrap() - 1.5).abs();
    let e_uniform = (uniform.integrate(&f).unwrap() - 1.5).abs();
    assert!(e_graded < 1e-7, "{e_graded}");
    assert!(e_graded < e_uniform);
}

#[test]
fn composite_breaks_capture_kinks() {
    let d = DomainBox::unit_interval();
    let f = |x: &[f64; 2]| (x[0] - 0.3).abs();
    let exact = 0.5 * (0.09 + 0.49);
    let rule = QuadRule::composite(&d, &[vec![0.3]], 2).unwrap();
    assert!((rule.integrate(&f).unwrap() - exact).abs() < 1e-15);
}

#[test]
fn adaptive_meets_its_tolerance() {
    let d = DomainBox::unit_interval();
    let r = AdaptiveIntegrator::new(1e-10)
        .integrate(&d, &|x: &[f64; 2]| (10.0 * x[0]).sin().powi(2))
        .unwrap();
    let exact = 0.5 - (20f64).sin() / 40.0;
    assert!(r.tolerance_met);
    assert!((r.value - exact).abs() < 1e-9);
}

#[test]
fn rules_reject_bad_orders() {
    let d = DomainBox::unit_interval();
    assert!(QuadRule::gauss(&d, 1).is_err());
    assert!(QuadRule::composite(&d, &[vec![]], 0).is_err());
}
