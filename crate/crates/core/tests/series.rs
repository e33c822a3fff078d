use pfseries_core::maps::MapKind;
use pfseries_core::transfer::{
    apply_pf, manufactured, residual, truncated_series, Manufactured, ProblemCase, SeriesOptions,
};
use pfseries_core::{DampedProblem, MapDescriptor, ScalarField};

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

#[test]
fn tent_constant_data_sums_to_geometric_series() {
    // P1 = 1 for the tent map, so u_N = (1 - a^{N+1}) / (1 - a) exactly.
    let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::constant(1.0)).unwrap();
    let u = truncated_series(&prob, 20, &SeriesOptions::default()).unwrap();
    let expect = 2.0 - 2f64.powi(-20);
    for x in grid(64) {
        let v = u.eval(&[x, 0.0]);
        assert!((v - expect).abs() < 1e-13, "u({x}) = {v}");
        assert!((v - 2.0).abs() < 2f64.powi(-19));
    }
}

#[test]
fn grid_and_direct_tent_series_agree() {
    let (prob, _) =
        DampedProblem::from_case(MapDescriptor::tent(), ProblemCase::SmoothExp, 0.5).unwrap();
    let direct = truncated_series(&prob, 12, &SeriesOptions::default()).unwrap();
    let opts = SeriesOptions { direct_max_terms: 4, grid_points: 20_000, ..Default::default() };
    let gridded = truncated_series(&prob, 12, &opts).unwrap();
    for x in grid(97) {
        let (a, b) = (direct.eval(&[x, 0.0]), gridded.eval(&[x, 0.0]));
        assert!((a - b).abs() < 1e-6, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn manufactured_solutions_satisfy_the_equation() {
    for case in [Manufactured::SmoothExp, Manufactured::Singular] {
        let (u, f0) = manufactured(case, 0.5).unwrap();
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, f0.clone()).unwrap();
        let r = residual(&prob, &u);
        for x in grid(500) {
            let scale = 1.0 + f0.eval(&[x, 0.0]).abs();
            assert!(r.eval(&[x, 0.0]).abs() <= 1e-13 * scale, "{case:?} at {x}");
        }
    }
}

#[test]
fn tent_series_tail_is_bounded_in_sup_norm() {
    // |u - u_N| <= a^{N+1} sup|f0| / (1 - a), since P does not increase sup|f|.
    let (u, f0) = manufactured(Manufactured::SmoothExp, 0.5).unwrap();
    let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, f0.clone()).unwrap();
    let un = truncated_series(&prob, 20, &SeriesOptions::default()).unwrap();
    let sup_f0 = grid(2000).map(|x| f0.eval(&[x, 0.0]).abs()).fold(0.0, f64::max);
    let bound = 0.5f64.powi(21) * sup_f0 / 0.5;
    for x in grid(40) {
        assert!((u.eval(&[x, 0.0]) - un.eval(&[x, 0.0])).abs() <= bound);
    }
}

#[test]
fn planar_series_residual_is_the_next_term() {
    // f0 - (I - aP) u_N = a^{N+1} P^{N+1} f0 pointwise.
    for (kind, case) in [
        (MapKind::CircleBoundary, ProblemCase::CircleF0),
        (MapKind::StandardMap, ProblemCase::StandardF0),
    ] {
        let map = MapDescriptor::from_kind(kind, Some(2.4));
        let (prob, _) = DampedProblem::from_case(map, case, 0.5).unwrap();
        let n = 7;
        let un = truncated_series(&prob, n, &SeriesOptions::default()).unwrap();
        let r = residual(&prob, &un);
        let mut next = prob.f0.clone();
        for _ in 0..=n {
            next = apply_pf(&map, &next);
        }
        let a = 0.5f64.powi(n as i32 + 1);
        for (i, s) in grid(23).enumerate() {
            let x = [
                map.domain.lo(0) + map.domain.width(0) * s,
                map.domain.lo(1) + map.domain.width(1) * grid(23).nth((7 * i) % 23).unwrap(),
            ];
            let lhs = r.eval(&x);
            let rhs = a * next.eval(&x);
            assert!((lhs - rhs).abs() < 1e-12, "{kind:?} at {x:?}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn invalid_damping_is_rejected() {
    for a in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(DampedProblem::new(MapDescriptor::tent(), a, ScalarField::zero()).is_err());
    }
}
