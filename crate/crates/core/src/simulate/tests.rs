use proptest::prelude::*;

use super::*;
use crate::scale::Atom;

fn fat(depth: u32) -> ScaleFunction {
    ScaleFunction::fat_cantor(0.5, depth).unwrap()
}

#[test]
fn brownian_endpoint_moments() {
    let ends: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|i| brownian_path(0.0, 1.0, 1e-3, 1000 + i).unwrap().last())
        .collect();
    let e = Estimate::from_samples(&ends);
    assert!(e.mean.abs() <= 3.0 / 100.0, "mean {}", e.mean);
    let var = e.se.powi(2) * ends.len() as f64;
    assert!((var - 1.0).abs() <= 0.05, "variance {var}");
}

#[test]
fn increments_have_variance_dt() {
    let p = brownian_path(0.0, 10.0, 1e-3, 3).unwrap();
    let inc: Vec<f64> = p.positions.windows(2).map(|w| w[1] - w[0]).collect();
    let e = Estimate::from_samples(&inc);
    assert!(e.mean.abs() <= 4.0 * e.se);
    let var = e.se.powi(2) * inc.len() as f64;
    assert!((var / 1e-3 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn same_seed_same_path() {
    let a = brownian_path(0.2, 0.5, 1e-3, 42).unwrap();
    let b = brownian_path(0.2, 0.5, 1e-3, 42).unwrap();
    let c = brownian_path(0.2, 0.5, 1e-3, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.positions, c.positions);
    assert_eq!(a.times.len(), 501);
    assert_eq!(a.positions[0], 0.2);
}

#[test]
fn bad_steps_rejected() {
    assert!(brownian_path(0.0, 1.0, 0.0, 1).is_err());
    assert!(brownian_path(0.0, -1.0, 0.1, 1).is_err());
}

#[test]
fn lebesgue_clock_is_the_identity() {
    let p = brownian_path(0.0, 1.0, 1e-3, 9).unwrap();
    let mu = MonotoneMeasure::uniform(
        Interval {
            lo: -10.0,
            hi: 10.0,
        },
        1.0,
    )
    .unwrap();
    let clock = pcaf_clock(&p, &mu, 0.03).unwrap();
    assert_eq!(clock.values(), &p.times[..]);
}

#[test]
fn unvisited_atom_adds_nothing() {
    let p = brownian_path(0.0, 0.5, 1e-3, 11).unwrap();
    let far = 50.0;
    let mu = MonotoneMeasure::new(
        vec![-100.0, 100.0],
        vec![1.0],
        vec![Atom {
            location: far,
            mass: 1.0,
        }],
        None,
    )
    .unwrap();
    let clock = pcaf_clock(&p, &mu, 0.03).unwrap();
    assert_eq!(clock.values(), &p.times[..]);
}

#[test]
fn visited_atom_charges_band_occupation() {
    let p = brownian_path(0.0, 1.0, 1e-3, 12).unwrap();
    let eps = 0.05;
    let mu = MonotoneMeasure::new(
        vec![-100.0, 100.0],
        vec![0.0],
        vec![Atom {
            location: 0.0,
            mass: 2.0,
        }],
        None,
    )
    .unwrap();
    let clock = pcaf_clock(&p, &mu, eps).unwrap();
    let near = p.positions[..p.len() - 1]
        .iter()
        .filter(|y| y.abs() <= eps)
        .count() as f64;
    let expected = 2.0 * near / (2.0 * eps) * 1e-3;
    assert!((clock.total() - expected).abs() <= 1e-12 * expected.max(1.0));
    assert!(clock.total() > 0.0);
}

#[test]
fn identity_diffusion_is_its_driving_path() {
    let s = ScaleFunction::identity();
    let run = simulate_subspace_diffusion(&s, 0.3, 0.5, 1e-3, None, 5).unwrap();
    assert_eq!(run.x.positions, run.driving.positions);
    assert_eq!(run.clock.values(), &run.driving.times[..]);
}

#[test]
fn diffusion_requires_unit_slopes() {
    let s = ScaleFunction::affine_slope(0.5).unwrap();
    assert!(matches!(
        simulate_subspace_diffusion(&s, 0.3, 0.5, 1e-3, None, 5),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn diffusion_stays_in_monotone_image() {
    let s = fat(8);
    let run = simulate_subspace_diffusion(&s, 0.4, 0.3, 1e-4, None, 21).unwrap();
    let (lo, hi) = run
        .driving
        .positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| {
            (l.min(y), h.max(y))
        });
    assert!(run
        .x
        .positions
        .iter()
        .all(|&x| x >= s.invert(lo) && x <= s.invert(hi)));
    assert_eq!(run.x.positions[0], s.invert(s.eval(0.4)));
}

#[test]
fn flats_slow_the_clock() {
    let s = fat(6);
    let run = simulate_subspace_diffusion(&s, 0.5, 0.2, 1e-4, None, 8).unwrap();
    let t = &run.driving.times;
    assert!(run.clock.values().iter().zip(t).all(|(a, t)| a >= t));
    assert!(run.clock.total() > *t.last().unwrap());
}

#[test]
fn chain_identity_midpoint() {
    let s = ScaleFunction::identity();
    let c = ChainOracle::new(&s, 0.0, 1.0, 8, &[]).unwrap();
    assert_eq!(
        c.solve(ChainProblem::HitProbability { x0: 0.5 }).unwrap(),
        0.5
    );
    let t = c.solve(ChainProblem::ExpectedExitTime { x0: 0.5 }).unwrap();
    assert!((t - 0.25).abs() < 1e-12, "{t}");
}

#[test]
fn chain_exit_time_is_parabola_on_any_grid() {
    // with these speed weights x(1-x) solves the discrete Poisson problem exactly
    let s = ScaleFunction::identity();
    for n in [16usize, 64, 128] {
        let nodes = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                t + 0.05 * (2.0 * std::f64::consts::PI * t).sin()
            })
            .collect();
        let c = ChainOracle::from_nodes(&s, nodes).unwrap();
        let t = c.solve(ChainProblem::ExpectedExitTime { x0: 0.5 }).unwrap();
        assert!((t - 0.25).abs() < 1e-12, "{n}: {t}");
        for (&x, i) in c.nodes().iter().zip(0..).step_by(5).skip(1) {
            if i < n {
                let t = c.solve(ChainProblem::ExpectedExitTime { x0: x }).unwrap();
                assert!((t - x * (1.0 - x)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn chain_hit_probability_is_the_scale_ratio() {
    let s = fat(10);
    for &x0 in &[0.3, 0.5, 0.7, 0.123] {
        let c = ChainOracle::new(&s, 0.0, 1.0, 500, &[x0]).unwrap();
        let p = c.solve(ChainProblem::HitProbability { x0 }).unwrap();
        let exact = ExitStatistics::scale_ratio(&s, 0.0, 1.0, x0);
        assert!((p - exact).abs() < 1e-12, "{x0}: {p} vs {exact}");
    }
}

#[test]
fn chain_rejects_flat_neighbours_and_foreign_starts() {
    let s = fat(3);
    let g = s.flat_intervals().unwrap()[0];
    let nodes = vec![0.0, g.left, g.right, 1.0];
    assert!(matches!(
        ChainOracle::from_nodes(&s, nodes),
        Err(Error::Grid(_))
    ));
    let c = ChainOracle::new(&s, 0.0, 1.0, 16, &[]).unwrap();
    assert!(c
        .solve(ChainProblem::HitProbability { x0: 0.0123 })
        .is_err());
    assert!(c.solve(ChainProblem::HitProbability { x0: 0.0 }).is_err());
}

#[test]
fn chain_form_is_unkilled_and_matches_conductances() {
    let s = fat(4);
    let c = ChainOracle::new(&s, 0.0, 1.0, 8, &[]).unwrap();
    let f = c.finite_form().unwrap();
    assert!(f.k().iter().all(|&k| k == 0.0));
    let u: Vec<f64> = c.nodes().iter().map(|x| x * x).collect();
    let direct: f64 = c
        .conductances()
        .iter()
        .zip(u.windows(2))
        .map(|(c, w)| c * (w[1] - w[0]).powi(2))
        .sum();
    assert!((f.energy(&u, &u) - direct).abs() < 1e-12 * direct);
    let ones = vec![1.0; c.nodes().len()];
    assert_eq!(f.energy(&ones, &ones), 0.0);
}

#[test]
fn tridiagonal_solve() {
    let x = solve_tridiagonal(
        &[0.0, -1.0, -1.0],
        &[2.0, 2.0, 2.0],
        &[-1.0, -1.0, 0.0],
        &[1.0, 0.0, 1.0],
    );
    for v in x {
        assert!((v - 1.0).abs() < 1e-15);
    }
}

#[test]
fn exit_precondition() {
    let s = ScaleFunction::identity();
    let e = ExitExperiment::new(0.0, 1.0, 1.0).with_paths(10);
    assert!(matches!(
        exit_statistics(&s, &e),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn identity_exit_probability() {
    let s = ScaleFunction::identity();
    let e = ExitExperiment::new(0.0, 1.0, 0.3)
        .with_paths(4000)
        .with_dt(1e-3)
        .with_seed(17);
    let r = exit_statistics(&s, &e).unwrap();
    assert_eq!(r.censored, 0);
    assert!(r.p_hit_b.agrees_with(0.3, 3.0), "{:?}", r.p_hit_b);
    assert!(
        r.mean_exit_time.agrees_with(0.21, 3.0),
        "{:?}",
        r.mean_exit_time
    );
}

#[test]
fn exit_statistics_are_deterministic() {
    let s = fat(6);
    let e = ExitExperiment::new(0.0, 1.0, 0.3)
        .with_paths(500)
        .with_dt(1e-3)
        .with_seed(4);
    assert_eq!(
        exit_statistics(&s, &e).unwrap(),
        exit_statistics(&s, &e).unwrap()
    );
}

#[test]
fn fat_cantor_symmetric_start() {
    let s = fat(8);
    let e = ExitExperiment::new(0.0, 1.0, 0.5)
        .with_paths(4000)
        .with_dt(1e-4)
        .with_seed(2);
    let r = exit_statistics(&s, &e).unwrap();
    assert!(r.p_hit_b.agrees_with(0.5, 3.0), "{:?}", r.p_hit_b);
}

#[test]
fn fat_cantor_chain_matches_flat_mass_ratio() {
    let s = fat(10);
    let c = ChainOracle::new(&s, 0.0, 1.0, 2000, &[0.3]).unwrap();
    let exact = (0.3 - s.flat_mass(0.0, 0.3)) / (1.0 - s.flat_mass(0.0, 1.0));
    let p = c.solve(ChainProblem::HitProbability { x0: 0.3 }).unwrap();
    assert!((p - exact).abs() < 1e-3);
}

#[test]
fn occupation_follows_speed_measure() {
    let s = fat(8);
    let (c, d) = (0.2, 0.45);
    let e = ExitExperiment::new(0.0, 1.0, 0.5)
        .with_paths(4000)
        .with_dt(1e-4)
        .with_seed(31)
        .with_occupation(c, d);
    let r = exit_statistics(&s, &e).unwrap();
    let chain = ChainOracle::new(&s, 0.0, 1.0, 2000, &[0.5, c, d]).unwrap();
    let oracle = chain
        .solve(ChainProblem::Occupation { x0: 0.5, c, d })
        .unwrap();
    let occ = r.occupation.unwrap();
    assert!(occ.agrees_with(oracle, 3.0), "{occ:?} vs {oracle}");
}

#[test]
fn coupled_product_rule_for_half_lines() {
    let comps = [ScaleFunction::identity(), fat(6)];
    let ends = coupled_endpoints(&comps, &[0.0, 0.5], 0.25, 1e-3, None, 77, 4000).unwrap();
    let f: Vec<f64> = ends
        .iter()
        .map(|r| f64::from(u8::from(r[0] > 0.1)))
        .collect();
    let g: Vec<f64> = ends
        .iter()
        .map(|r| f64::from(u8::from(r[1] < 0.4)))
        .collect();
    let rule = ProductRule::from_samples(&f, &g).unwrap();
    assert!(rule.holds(3.0), "{rule:?}");
    assert!(rule.se > 0.0);
}

#[test]
fn constant_factor_is_exact() {
    let g = [0.25, 1.0, 0.0, 0.5, 0.75];
    let f = [1.0; 5];
    let rule = ProductRule::from_samples(&f, &g).unwrap();
    assert_eq!(rule.joint, rule.product);
    assert!(rule.holds(0.0));
}

#[test]
fn endpoints_agree_with_full_paths() {
    let comps = [ScaleFunction::identity(), fat(5)];
    let x0 = [0.1, 0.6];
    let full = coupled_simulation(&comps, &x0, 0.1, 1e-3, None, 5).unwrap();
    let ends = coupled_endpoints(&comps, &x0, 0.1, 1e-3, None, 5, 1).unwrap();
    for (run, &e) in full.iter().zip(&ends[0]) {
        assert_eq!(run.x.last(), e);
    }
    assert!(coupled_simulation(&comps, &[0.1], 0.1, 1e-3, None, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clock_is_monotone_and_inverse_is_left(seed in 0u64..1000, x0 in 0.05f64..0.95) {
        let s = fat(6);
        let run = simulate_subspace_diffusion(&s, x0, 0.05, 1e-4, None, seed).unwrap();
        let a = run.clock.values();
        prop_assert_eq!(a[0], 0.0);
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        for (i, &v) in a.iter().enumerate().step_by(7) {
            let j = run.clock.tau_index(v).unwrap();
            prop_assert!(j <= i);
        }
    }

    #[test]
    fn steps_of_x_are_bounded_by_inverse_modulus(seed in 0u64..1000, x0 in 0.05f64..0.95) {
        let s = fat(6);
        let run = simulate_subspace_diffusion(&s, x0, 0.05, 1e-4, None, seed).unwrap();
        let b = &run.driving.positions;
        let mut prev = 0usize;
        for (k, &t) in run.x.times.iter().enumerate() {
            let j = run.clock.tau_index(t).unwrap();
            if k > 0 {
                let (y0, y1) = (b[prev], b[j]);
                let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
                let flats: f64 = s
                    .flat_intervals()
                    .unwrap()
                    .iter()
                    .filter(|g| g.level >= lo && g.level <= hi)
                    .map(|g| g.len())
                    .sum();
                let dx = (run.x.positions[k] - run.x.positions[k - 1]).abs();
                prop_assert!(dx <= (hi - lo) + flats + 1e-12);
            }
            prev = j;
        }
    }

    #[test]
    fn hitting_order_matches_driving_path(seed in 0u64..1000, x0 in 0.3f64..0.7) {
        let s = fat(6);
        let (a, b) = (0.25, 0.75);
        let run = simulate_subspace_diffusion(&s, x0, 0.2, 1e-4, None, seed).unwrap();
        let xs = run.x_on_driving_grid(&s);
        let (ya, yb) = (s.eval(a), s.eval(b));
        let first_x = xs.iter().position(|&x| x <= s.invert(ya) || x >= s.invert(yb));
        let first_b = run.driving.positions.iter().position(|&y| y <= ya || y >= yb);
        prop_assert_eq!(first_x, first_b);
        if let Some(i) = first_b {
            prop_assert_eq!(xs[i] >= s.invert(yb), run.driving.positions[i] >= yb);
        }
    }
}
