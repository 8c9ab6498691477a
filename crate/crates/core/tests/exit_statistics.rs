use std::time::Instant;

use regsub::scale::ScaleFunction;
use regsub::simulate::{
    exit_statistics, ChainOracle, ChainProblem, ExitExperiment, ExitStatistics,
};

fn fat() -> ScaleFunction {
    ScaleFunction::fat_cantor(0.5, 10).unwrap()
}

#[test]
fn fat_cantor_exit_law_against_flat_mass_ratio() {
    let s = fat();
    for (i, &x0) in [0.3, 0.5, 0.7].iter().enumerate() {
        let start = Instant::now();
        let exact = (x0 - s.flat_mass(0.0, x0)) / (1.0 - s.flat_mass(0.0, 1.0));
        assert!((exact - ExitStatistics::scale_ratio(&s, 0.0, 1.0, x0)).abs() < 1e-15);
        let e = ExitExperiment::new(0.0, 1.0, x0).with_seed(100 + i as u64);
        let r = exit_statistics(&s, &e).unwrap();
        let chain = ChainOracle::new(&s, 0.0, 1.0, 2000, &[x0]).unwrap();
        let p = chain.solve(ChainProblem::HitProbability { x0 }).unwrap();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "x0={x0} p={:?} exact={exact} chain={p} z={:.2} {secs:.2}s",
            r.p_hit_b,
            r.p_hit_b.z_score(exact)
        );
        assert_eq!(r.censored, 0);
        assert!(r.p_hit_b.agrees_with(exact, 3.0));
        assert!((p - exact).abs() <= 1e-6);
        assert!(secs < 60.0);
    }
}

#[test]
fn mean_exit_time_against_chain() {
    for (s, name) in [(ScaleFunction::identity(), "identity"), (fat(), "fat")] {
        let e = ExitExperiment::new(0.0, 1.0, 0.5).with_seed(7);
        let r = exit_statistics(&s, &e).unwrap();
        let chain = ChainOracle::new(&s, 0.0, 1.0, 2000, &[0.5]).unwrap();
        let t = chain
            .solve(ChainProblem::ExpectedExitTime { x0: 0.5 })
            .unwrap();
        let rel = (r.mean_exit_time.mean - t).abs() / t;
        println!("{name}: mc={:?} chain={t} rel={rel:.4}", r.mean_exit_time);
        assert!(rel <= 0.02);
    }
}
