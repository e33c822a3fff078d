//! Embedded 7-point Gauss / 15-point Kronrod pair on `[-1, 1]`.
//!
//! Published QUADPACK `qk15` abscissae and weights; only the non-negative half
//! is stored.
#![allow(clippy::excessive_precision)]

/// Kronrod abscissae, descending; odd indices are the Gauss points.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes on `[-1, 1]` in ascending order with both weight sets
/// (Gauss weight 0 for pure Kronrod points).
pub fn full_rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..8 {
        let g = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[i] = (-XGK[i], WGK[i], g);
        out[14 - i] = (XGK[i], WGK[i], g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss::gauss_legendre;

    #[test]
    fn gauss_subset_matches_newton_builder() {
        let (x, w) = gauss_legendre(7).unwrap();
        // ascending builder output vs descending stored half
        for k in 0..4 {
            assert!((x[6 - k] - XGK[2 * k + 1]).abs() < 1e-15);
            assert!((w[6 - k] - WG[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let r = full_rule();
        let sk: f64 = r.iter().map(|t| t.1).sum();
        let sg: f64 = r.iter().map(|t| t.2).sum();
        assert!((sk - 2.0).abs() < 1e-15);
        assert!((sg - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_exact_to_degree_22() {
        let r = full_rule();
        for deg in (0..=22).step_by(2) {
            let v: f64 = r.iter().map(|t| t.1 * t.0.powi(deg)).sum();
            assert!((v - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg {deg}");
        }
    }
}
