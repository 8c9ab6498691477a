//! `exit-stats`: Monte Carlo exit law and exit time against the exact ratio and the chain.

use regsub::scale::ScaleFunction;
use regsub::simulate::{
    exit_statistics, ChainOracle, ChainProblem, ExitExperiment, ExitStatistics,
};
use serde::Deserialize;

use super::Context;
use crate::config::OneOrMany;
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "exit-stats";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitParams {
    pub scale: ScaleFunction,
    pub a: f64,
    pub b: f64,
    pub x0: OneOrMany,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dt: f64,
    pub epsilon: Option<f64>,
    pub n_paths: usize,
    pub seed: Option<u64>,
    /// Cells of the chain oracle.
    pub chain_n: usize,
    /// Also compare mean exit times.
    pub exit_time: bool,
    /// Also compare the time spent in `[c, d]` before exit.
    pub occupation: Option<[f64; 2]>,
}

impl Default for ExitParams {
    fn default() -> Self {
        Self {
            scale: ScaleFunction::fat_cantor(0.5, 10).expect("valid construction"),
            a: 0.0,
            b: 1.0,
            x0: OneOrMany::Many(vec![0.3, 0.5, 0.7]),
            horizon: None,
            dt: 1e-4,
            epsilon: None,
            n_paths: 20_000,
            seed: None,
            chain_n: 2000,
            exit_time: true,
            occupation: None,
        }
    }
}

pub fn run(ctx: &Context, p: &ExitParams) -> Result<Vec<Row>, CliError> {
    let base = [crate::config::SweepEntry::default()];
    let points = if ctx.sweep { ctx.schedule() } else { &base[..] };
    let seed = ctx.seed.or(p.seed).unwrap_or(0);
    let mut rows = Vec::new();
    for entry in points {
        let s = match entry.depth {
            Some(d) => p.scale.with_depth(d)?,
            None => p.scale.clone(),
        };
        let dt = entry.dt.unwrap_or(p.dt);
        let epsilon = entry.epsilon.or(p.epsilon);
        for (i, &x0) in p.x0.values().iter().enumerate() {
            let exp = ExitExperiment {
                a: p.a,
                b: p.b,
                x0,
                n_paths: p.n_paths,
                dt,
                epsilon,
                horizon: p.horizon,
                seed: seed.wrapping_add(i as u64),
                occupation: p.occupation,
            };
            rows.extend(point_rows(ctx, &s, &exp, p)?);
        }
    }
    Ok(rows)
}

fn point_rows(
    ctx: &Context,
    s: &ScaleFunction,
    exp: &ExitExperiment,
    p: &ExitParams,
) -> Result<Vec<Row>, CliError> {
    let r = exit_statistics(s, exp)?;
    let exact = ExitStatistics::scale_ratio(s, exp.a, exp.b, exp.x0);
    let mut extra = vec![exp.x0];
    if let Some([c, d]) = exp.occupation {
        extra.extend([c, d].into_iter().filter(|&v| v > exp.a && v < exp.b));
    }
    let chain = ChainOracle::new(s, exp.a, exp.b, p.chain_n, &extra)?;
    let depth = s.depth().map_or("none".to_string(), |d| d.to_string());
    let inp = inputs(&[
        ("family", s.family().name().to_string()),
        ("depth", depth),
        ("a", exp.a.to_string()),
        ("b", exp.b.to_string()),
        ("x0", exp.x0.to_string()),
        ("dt", exp.dt.to_string()),
        ("epsilon", r.epsilon.to_string()),
        ("n_paths", exp.n_paths.to_string()),
        ("seed", exp.seed.to_string()),
    ]);
    let k = ctx.tol.mc_se;
    let within = |est: f64, se: f64, target: f64| (est - target).abs() <= k * se;
    let mut rows = vec![Row::monte_carlo(
        CMD,
        "p_hit_b",
        inp.clone(),
        r.p_hit_b.mean,
        r.p_hit_b.se,
        exact,
        k,
        within(r.p_hit_b.mean, r.p_hit_b.se, exact),
    )];
    let hit = chain.solve(ChainProblem::HitProbability { x0: exp.x0 })?;
    rows.push(Row::exact(
        CMD,
        "chain_hit",
        format!("{inp};chain_n={}", p.chain_n),
        hit,
        exact,
        ctx.tol.chain,
        (hit - exact).abs() <= ctx.tol.chain,
    ));
    if p.exit_time {
        let t = chain.solve(ChainProblem::ExpectedExitTime { x0: exp.x0 })?;
        let m = r.mean_exit_time;
        rows.push(Row::monte_carlo(
            CMD,
            "mean_exit_time",
            format!("{inp};chain_n={}", p.chain_n),
            m.mean,
            m.se,
            t,
            ctx.tol.exit_time_rel,
            (m.mean - t).abs() <= ctx.tol.exit_time_rel * t,
        ));
    }
    if let (Some([c, d]), Some(occ)) = (exp.occupation, r.occupation) {
        let t = chain.solve(ChainProblem::Occupation { x0: exp.x0, c, d })?;
        rows.push(Row::monte_carlo(
            CMD,
            "occupation",
            format!("{inp};c={c};d={d};chain_n={}", p.chain_n),
            occ.mean,
            occ.se,
            t,
            k,
            within(occ.mean, occ.se, t),
        ));
    }
    if r.censored > 0 {
        rows.push(Row::count(CMD, "censored_paths", inp, r.censored));
    }
    Ok(rows)
}
