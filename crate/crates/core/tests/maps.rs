use std::f64::consts::{PI, TAU};

use pfseries_core::maps::reduce_mod;
use pfseries_core::MapDescriptor;
use proptest::prelude::*;

fn close_mod(a: f64, b: f64, l: f64) -> bool {
    let d = reduce_mod(a - b, l);
    d.min(l - d) < 1e-9
}

proptest! {
    #[test]
    fn tent_preimages_map_back(x in 0.0..1.0f64) {
        let m = MapDescriptor::tent();
        let pre = m.inverse(&[x, 0.0]).unwrap();
        prop_assert_eq!(pre.len(), 2);
        for y in pre {
            prop_assert!((m.forward(&y).unwrap()[0] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_inverse_is_two_sided(phi in 0.0..TAU, psi in -PI / 2.0..PI / 2.0) {
        let m = MapDescriptor::circle_boundary();
        let x = [phi, psi];
        let back = m.inverse(&m.forward(&x).unwrap()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert!(close_mod(back[0][0], phi, TAU));
        prop_assert!((back[0][1] - psi).abs() < 1e-12);
    }

    #[test]
    fn standard_map_inverse_is_two_sided(p in 0.0..TAU, q in 0.0..TAU) {
        let m = MapDescriptor::standard_map(2.4);
        let x = [p, q];
        let back = m.inverse(&m.forward(&x).unwrap()).unwrap();
        prop_assert!(close_mod(back[0][0], p, TAU));
        prop_assert!(close_mod(back[0][1], q, TAU));
    }

    #[test]
    fn planar_maps_preserve_area(a in 0.0..TAU, b in 0.0..1.0f64) {
        for m in [MapDescriptor::circle_boundary(), MapDescriptor::standard_map(2.4)] {
            let j = m.jacobian_forward(&[a, b]).unwrap();
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            prop_assert!((det - 1.0).abs() < 1e-12);
            prop_assert!((m.jac_det_inverse(&[a, b]).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn points_outside_the_domain_are_rejected() {
    let m = MapDescriptor::tent();
    assert!(m.forward(&[1.5, 0.0]).is_err());
    assert!(m.forward(&[f64::NAN, 0.0]).is_err());
}
