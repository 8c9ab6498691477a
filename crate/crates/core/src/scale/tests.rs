use proptest::prelude::*;

use super::*;

fn removed_length(lambda: f64, depth: u32) -> f64 {
    // Σ_{k≤n} 2^{k-1} · λ · 2^{1-2k}
    (1..=depth)
        .map(|k| 2f64.powi(k as i32 - 1) * lambda * 2f64.powi(1 - 2 * k as i32))
        .sum()
}

#[test]
fn fat_cantor_endpoint_values() {
    for n in [1, 4, 8, 12] {
        let s = ScaleFunction::fat_cantor(0.5, n).unwrap();
        assert_eq!(s.eval(0.0), 0.0);
        let want = 1.0 - removed_length(0.5, n);
        assert_eq!(s.eval(1.0), want);
        assert_eq!(want, 0.5 + 2f64.powi(-(n as i32) - 1));
        assert_eq!(s.total_flat_mass(), 0.5 * (1.0 - 2f64.powi(-(n as i32))));
        assert_eq!(s.flat_interval_count(), Some((1 << n) - 1));
    }
}

#[test]
fn fat_cantor_half_window_flat_mass_is_half_of_total() {
    for n in [3, 10, 16] {
        let s = ScaleFunction::fat_cantor(0.5, n).unwrap();
        assert_eq!(s.flat_mass(0.0, 0.5), 0.25 * (1.0 - 2f64.powi(-(n as i32))));
    }
    let deep = ScaleFunction::fat_cantor(0.5, 20).unwrap();
    assert!((deep.flat_mass(0.0, 0.5) - 0.25).abs() < 1e-6);
}

#[test]
fn fat_cantor_overflow_names_step() {
    match ScaleFunction::fat_cantor(1.5, 5) {
        Err(Error::ConstructionOverflow { step, .. }) => assert_eq!(step, 2),
        other => panic!("expected overflow, got {other:?}"),
    }
    assert!(matches!(
        ScaleFunction::fat_cantor(0.0, 3),
        Err(Error::InvalidParameter { .. })
    ));
    assert!(matches!(
        ScaleFunction::fat_cantor(1.2, 2),
        Err(Error::InvalidParameter { .. })
    ));
}

#[test]
fn inverse_cantor_values() {
    for n in [1, 3, 6, 12, 30] {
        let s = ScaleFunction::inverse_cantor(n).unwrap();
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(2.0), 1.0);
        assert!((s.eval(1.0) - 0.5).abs() <= BISECTION_TOL);
        assert!((s.flat_mass(0.0, 2.0) - 1.0).abs() <= 2.0 * BISECTION_TOL);
    }
    let s = ScaleFunction::inverse_cantor(8).unwrap();
    assert_eq!(s.total_flat_mass(), 1.0);
}

#[test]
fn inverse_cantor_bisection_matches_flat_bookkeeping() {
    let s = ScaleFunction::inverse_cantor(5).unwrap();
    let flats = s.flat_intervals().unwrap();
    assert_eq!(flats.len(), 32);
    for g in &flats {
        let mid = 0.5 * (g.left + g.right);
        assert!((s.eval(mid) - g.level).abs() < 1e-11);
        assert!((s.eval(g.left) - g.level).abs() < 1e-11);
    }
    // off the flat set the slope is one
    for i in 0..400 {
        let x = 0.0025 + i as f64 * 0.005;
        let h = 1e-7;
        if s.is_flat_at(x) || s.is_flat_at(x + h) {
            continue;
        }
        let d = (s.eval(x + h) - s.eval(x)) / h;
        assert!((d - 1.0).abs() < 1e-4, "x={x} slope {d}");
    }
}

#[test]
fn trivial_families() {
    assert_eq!(ScaleFunction::identity().eval(0.7), 0.7);
    let a = ScaleFunction::affine_slope(0.5).unwrap();
    assert_eq!(a.eval(1.0), 0.5);
    assert!(!a.has_unit_slopes());
    assert!(ScaleFunction::affine_slope(1.5).is_err());
}

#[test]
fn inverse_round_trip_fat_cantor() {
    let s = ScaleFunction::fat_cantor(0.5, 12).unwrap();
    let y = s.eval(0.3);
    let x = s.inverse_eval(y).unwrap();
    let tol = s.min_flat_len_in(0.0, 1.0).unwrap().max(1e-15);
    // 0.3 is either off the flat set (exact) or the left end of its gap is returned
    let gap = s.flat_intervals_in(0.3, 0.3).unwrap();
    match gap.first() {
        Some(g) => assert_eq!(x, g.left),
        None => assert!((x - 0.3).abs() <= tol),
    }
}

#[test]
fn inverse_tie_break_is_left_endpoint() {
    let s = ScaleFunction::fat_cantor(0.5, 1).unwrap();
    // single gap (3/8, 5/8) at level 3/8
    assert_eq!(s.eval(0.5), 0.375);
    assert_eq!(s.inverse_eval(0.375).unwrap(), 0.375);
    assert_eq!(s.inverse_eval(0.4).unwrap(), 0.4 + 0.25);
}

#[test]
fn inverse_outside_range_is_domain_error() {
    let s = ScaleFunction::fat_cantor(0.5, 4).unwrap();
    assert!(matches!(s.inverse_eval(0.9), Err(Error::Domain { .. })));
    assert!(matches!(s.inverse_eval(-0.1), Err(Error::Domain { .. })));
    let wide = s.with_domain(Interval::new(-1.0, 2.0).unwrap()).unwrap();
    assert!(wide.inverse_eval(0.9).is_ok());
}

#[test]
fn anchor_shifts_zero() {
    let s = ScaleFunction::fat_cantor(0.5, 6)
        .unwrap()
        .with_anchor(0.5)
        .unwrap();
    assert_eq!(s.eval(0.5), 0.0);
    let y = s.eval(0.8);
    assert!((s.invert(y) - 0.8).abs() < 1e-12 || s.is_flat_at(0.8));
}

#[test]
fn strictly_increasing_across_gaps() {
    let s = ScaleFunction::fat_cantor(0.5, 8).unwrap();
    let survivor = 2f64.powi(-8) * 0.5;
    for g in s.flat_intervals().unwrap() {
        let d = 0.1 * survivor;
        assert!(s.eval(g.right + d) > s.eval(g.left - d));
    }
}

#[test]
fn depth_convergence_rate() {
    let lambda = 0.5;
    for n in 1..12 {
        let a = ScaleFunction::fat_cantor(lambda, n).unwrap();
        let b = ScaleFunction::fat_cantor(lambda, n + 1).unwrap();
        let bound = lambda * 2f64.powi(-(n as i32) - 1);
        for i in 0..=997 {
            let x = i as f64 / 997.0;
            assert!((b.eval(x) - a.eval(x)).abs() <= bound + 1e-15);
        }
    }
}

#[test]
fn measure_identity_is_exact_on_dyadic_grid() {
    for n in [2, 7, 11] {
        let s = ScaleFunction::fat_cantor(0.5, n).unwrap();
        for i in 0..=256 {
            for j in (i..=256).step_by(17) {
                let (a, b) = (i as f64 / 256.0, j as f64 / 256.0);
                assert_eq!(s.flat_mass(a, b) + (s.eval(b) - s.eval(a)), b - a);
            }
        }
    }
}

#[test]
fn cantor_symmetry_and_idempotence() {
    for i in 0..=4096 {
        let x = i as f64 / 4096.0;
        let sum = cantor_function(x, 40) + cantor_function(1.0 - x, 40);
        assert!((sum - 1.0).abs() < 1e-12, "x={x}");
    }
    // plateau values are fixed points of the plateau lookup
    for (x, v) in [(0.5, 0.5), (0.25 / 3.0 + 1.0 / 9.0, 0.25)] {
        assert_eq!(cantor_function(x, 40), v);
    }
}

#[test]
fn gap_csv_export() {
    let s = ScaleFunction::fat_cantor(0.5, 2).unwrap();
    let mut buf = Vec::new();
    s.write_gaps_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "left,right,level");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], "0.375,0.625,0.3125");
}

#[test]
fn descriptor_json_round_trip() {
    let s = ScaleFunction::fat_cantor(0.5, 6)
        .unwrap()
        .with_anchor(0.25)
        .unwrap();
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(
        json,
        r#"{"family":"fat_cantor","parameters":{"flat_fraction":0.5},"depth":6,"anchor":0.25}"#
    );
    let back: ScaleFunction = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.eval(0.7), s.eval(0.7));
    let bad = r#"{"family":"fat_cantor","parameters":{"flat_fraction":0.5}}"#;
    assert!(serde_json::from_str::<ScaleFunction>(bad).is_err());
    let unknown = r#"{"family":"identity","colour":1}"#;
    assert!(serde_json::from_str::<ScaleFunction>(unknown).is_err());
}

#[test]
fn stieltjes_identity_is_lebesgue() {
    let s = ScaleFunction::identity();
    let w = Interval::new(-1.0, 2.0).unwrap();
    for f in [MonotoneFn::Scale(&s), MonotoneFn::InverseScale(&s)] {
        let mu = stieltjes_measure(f, w).unwrap();
        assert!(mu.atoms().is_empty());
        assert_eq!(mu.total_mass(), 3.0);
        assert_eq!(mu.density_at(0.3), 1.0);
    }
}

#[test]
fn stieltjes_inverse_fat_cantor_atoms() {
    for n in [1, 5, 10] {
        let s = ScaleFunction::fat_cantor(0.5, n).unwrap();
        let w = Interval::new(s.eval(0.0), s.eval(1.0) + 0.1).unwrap();
        let mu = stieltjes_measure(MonotoneFn::InverseScale(&s), w).unwrap();
        assert_eq!(mu.atoms().len(), (1 << n) - 1);
        assert_eq!(mu.atom_mass(), removed_length(0.5, n));
        let want = s.invert(w.hi) - s.invert(w.lo);
        assert!((mu.total_mass() - want).abs() < 1e-14);
        assert!((stieltjes_integrate(|_| 1.0, &mu) - want).abs() < 1e-13);
    }
}

#[test]
fn stieltjes_scale_density_matches_increment() {
    let s = ScaleFunction::fat_cantor(0.5, 6).unwrap();
    let w = Interval::new(-0.5, 1.5).unwrap();
    let mu = stieltjes_measure(MonotoneFn::Scale(&s), w).unwrap();
    assert!((mu.total_mass() - (s.eval(1.5) - s.eval(-0.5))).abs() < 1e-15);
    assert_eq!(mu.density_at(0.5), 0.0);
    assert_eq!(mu.density_at(0.1), 1.0);
}

/// Self-similarity recursion for the first two moments of Y = Σ 2ε_k 3^{-k}.
fn cantor_moments(levels: u32) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    for _ in 0..levels {
        // Y = (2ε + Y')/3 with ε ~ Bernoulli(1/2) independent of Y'
        let n1 = (1.0 + m1) / 3.0;
        let n2 = (2.0 + 2.0 * m1 + m2) / 9.0;
        m1 = n1;
        m2 = n2;
    }
    (m1, m2)
}

#[test]
fn cantor_measure_moments() {
    let (m1, m2) = cantor_moments(40);
    assert!((m1 - 0.5).abs() < 1e-15);
    assert!((m2 - 0.375).abs() < 1e-15);
    let w = Interval::new(0.0, 1.0).unwrap();
    for n in [4, 8, 14] {
        let mu = stieltjes_measure(MonotoneFn::Cantor { depth: n }, w).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        assert!((stieltjes_integrate(|y| y, &mu) - 0.5).abs() < 1e-12);
        let second = stieltjes_integrate(|y| y * y, &mu);
        let depth_err = 9f64.powi(-(n as i32)) / 8.0;
        assert!((second - m2).abs() <= depth_err + 1e-12, "n={n}: {second}");
    }
}

#[test]
fn image_of_lebesgue_partial_atoms() {
    let s = ScaleFunction::fat_cantor(0.5, 1).unwrap();
    // gap (3/8, 5/8); cut it in half
    let mu = image_of_lebesgue(&s, 0.0, 0.5).unwrap();
    assert_eq!(mu.atom_mass(), 0.125);
    assert!((mu.total_mass() - 0.5).abs() < 1e-15);
}

proptest! {
    #[test]
    fn monotone_and_one_lipschitz(
        lambda in 0.05f64..0.95,
        depth in 1u32..10,
        mut xs in proptest::collection::vec(-0.5f64..1.5, 2..40),
    ) {
        let s = ScaleFunction::fat_cantor(lambda, depth).unwrap();
        xs.sort_by(|a, b| a.total_cmp(b));
        for w in xs.windows(2) {
            let d = s.eval(w[1]) - s.eval(w[0]);
            prop_assert!(d >= -1e-15);
            prop_assert!(d <= w[1] - w[0] + 1e-15);
        }
    }

    #[test]
    fn inverse_cantor_monotone_and_lipschitz(
        depth in 1u32..12,
        mut xs in proptest::collection::vec(-0.5f64..2.5, 2..30),
    ) {
        let s = ScaleFunction::inverse_cantor(depth).unwrap();
        xs.sort_by(|a, b| a.total_cmp(b));
        for w in xs.windows(2) {
            let d = s.eval(w[1]) - s.eval(w[0]);
            prop_assert!(d >= -1e-12);
            prop_assert!(d <= w[1] - w[0] + 2e-12);
        }
    }

    #[test]
    fn measure_consistency(lambda in 0.05f64..0.95, depth in 1u32..12, a in -0.2f64..1.2, b in -0.2f64..1.2) {
        let s = ScaleFunction::fat_cantor(lambda, depth).unwrap();
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let lhs = s.flat_mass(a, b) + s.eval(b) - s.eval(a);
        prop_assert!((lhs - (b - a)).abs() < 1e-14);
    }

    #[test]
    fn inverse_recovers_non_flat_points(depth in 1u32..10, x in 0.0f64..1.0) {
        let s = ScaleFunction::fat_cantor(0.5, depth).unwrap();
        let back = s.invert(s.eval(x));
        if s.is_flat_at(x) {
            let g = s.flat_intervals_in(x, x).unwrap()[0];
            prop_assert_eq!(back, g.left);
        } else {
            prop_assert!((back - x).abs() < 1e-14);
        }
    }

    #[test]
    fn cantor_reflection(x in 0.0f64..1.0) {
        let sum = cantor_function(x, 40) + cantor_function(1.0 - x, 40);
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn with_depth_rebuilds_the_family() {
    let s = ScaleFunction::fat_cantor(0.5, 3)
        .unwrap()
        .with_anchor(0.25)
        .unwrap();
    let t = s.with_depth(7).unwrap();
    assert_eq!(t.depth(), Some(7));
    assert_eq!(t.anchor(), 0.25);
    assert_eq!(t.eval(0.25), 0.0);
    let id = ScaleFunction::identity();
    assert_eq!(id.with_depth(9).unwrap(), id);
    assert!(ScaleFunction::inverse_cantor(2)
        .unwrap()
        .with_depth(0)
        .is_err());
}
