//! Monte Carlo for the subspace diffusion `X^s_t = s^{-1}(B_{τ_t})`.
//!
//! `B` is a Brownian motion on the natural scale, `A` the additive functional of the
//! measure `d(s^{-1})` along `B` and `τ` its right-continuous inverse. Atoms of
//! `d(s^{-1})` (one per flat of `s`) are charged through an ε-band occupation estimate of
//! Brownian local time. Every path owns a ChaCha stream derived from `(seed, index)`, so
//! results do not depend on how rayon schedules the work.

mod chain;

#[cfg(test)]
mod tests;

pub use chain::{solve_tridiagonal, ChainOracle, ChainProblem};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::{
    image_of_lebesgue, stieltjes_measure, Interval, MonotoneFn, MonotoneMeasure, ScaleFunction,
};

/// RNG for path `index` of a run with master `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A path on the uniform grid `t_k = k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub seed: u64,
    pub dt: f64,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self
            .positions
            .last()
            .expect("paths contain the start point")
    }
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("T", "must be positive"));
    }
    Ok((horizon / dt - 1e-9).ceil().max(1.0) as usize)
}

fn time_grid(n: usize, dt: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn gaussian_walk(rng: &mut ChaCha8Rng, x0: f64, n: usize, dt: f64) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        out.push(x);
    }
    out
}

/// Brownian path from `x0` on `[0, T]` (the last step may overshoot `T` by less than `dt`).
pub fn brownian_path(x0: f64, horizon: f64, dt: f64, seed: u64) -> Result<PathSample> {
    let n = step_count(horizon, dt)?;
    let mut rng = path_rng(seed, 0);
    Ok(PathSample {
        times: time_grid(n, dt),
        positions: gaussian_walk(&mut rng, x0, n, dt),
        seed,
        dt,
    })
}

/// Accumulated functional `A` on the grid of the driving path, with its inverse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeChangeClock {
    a: Vec<f64>,
    dt: f64,
}

impl TimeChangeClock {
    /// `A_{t_k}` for every grid index `k`.
    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn total(&self) -> f64 {
        *self.a.last().expect("clocks start at zero")
    }

    /// Grid index of `τ_t = inf{u : A_u ≥ t}`, if the clock reaches `t`.
    pub fn tau_index(&self, t: f64) -> Option<usize> {
        let i = self.a.partition_point(|&v| v < t);
        (i < self.a.len()).then_some(i)
    }

    pub fn tau(&self, t: f64) -> Option<f64> {
        self.tau_index(t).map(|i| i as f64 * self.dt)
    }
}

fn default_epsilon(dt: f64, eps: Option<f64>) -> Result<f64> {
    let eps = eps.unwrap_or_else(|| dt.sqrt());
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    Ok(eps)
}

/// Rate of the clock at level `y`: Lebesgue density plus ε-band smoothed atoms.
#[inline]
fn clock_rate(mu: &MonotoneMeasure, y: f64, eps: f64) -> f64 {
    let atoms = if mu.atoms().is_empty() {
        0.0
    } else {
        mu.band_density(y, eps)
    };
    mu.density_at(y) + atoms
}

/// `A_{t_k} = dt · Σ_{i<k} (density(B_i) + band_density(B_i, ε))`.
///
/// The sum is kept dimensionless and multiplied by `dt` once, so Lebesgue measure with
/// density one reproduces the time grid exactly.
pub fn pcaf_clock(path: &PathSample, mu: &MonotoneMeasure, eps: f64) -> Result<TimeChangeClock> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let mut a = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    a.push(0.0);
    for &y in &path.positions[..path.len() - 1] {
        acc += clock_rate(mu, y, eps);
        a.push(acc * path.dt);
    }
    Ok(TimeChangeClock { a, dt: path.dt })
}

/// `d(s^{-1})` on a window wide enough for any path starting at `y0` within time `T`.
fn inverse_scale_measure(s: &ScaleFunction, lo: f64, hi: f64) -> Result<MonotoneMeasure> {
    stieltjes_measure(MonotoneFn::InverseScale(s), Interval { lo, hi })
}

fn require_unit_slopes(s: &ScaleFunction) -> Result<()> {
    if !s.has_unit_slopes() {
        return Err(Error::Precondition(format!(
            "the {} family does not have slopes in {{0, 1}}",
            s.family().name()
        )));
    }
    if s.flat_interval_count().is_none() {
        return Err(Error::Precondition(
            "flat intervals are not stored at this depth".into(),
        ));
    }
    Ok(())
}

/// One realisation of the subspace diffusion together with its driving data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceDiffusion {
    /// `X` on the grid `k·dt` of its own clock.
    pub x: PathSample,
    /// `B` on the natural scale, started at `s(x0)`.
    pub driving: PathSample,
    pub clock: TimeChangeClock,
    pub epsilon: f64,
}

impl SubspaceDiffusion {
    /// `s^{-1}(B)` on the grid of `B`: the values `X` takes at the times `A_{t_k}`.
    pub fn x_on_driving_grid(&self, s: &ScaleFunction) -> Vec<f64> {
        self.driving
            .positions
            .iter()
            .map(|&y| s.invert(y))
            .collect()
    }
}

/// Simulate `X^s` from `x0` on `[0, T]`.
pub fn simulate_subspace_diffusion(
    s: &ScaleFunction,
    x0: f64,
    horizon: f64,
    dt: f64,
    eps: Option<f64>,
    seed: u64,
) -> Result<SubspaceDiffusion> {
    simulate_stream(s, x0, horizon, dt, eps, seed, 0)
}

fn simulate_stream(
    s: &ScaleFunction,
    x0: f64,
    horizon: f64,
    dt: f64,
    eps: Option<f64>,
    seed: u64,
    stream: u64,
) -> Result<SubspaceDiffusion> {
    require_unit_slopes(s)?;
    let eps = default_epsilon(dt, eps)?;
    let n = step_count(horizon, dt)?;
    let mut rng = path_rng(seed, stream);
    let b = gaussian_walk(&mut rng, s.eval(x0), n, dt);
    let (lo, hi) = b
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| {
            (l.min(y), h.max(y))
        });
    let mu = inverse_scale_measure(s, lo - eps - 1.0, hi + eps + 1.0)?;
    let driving = PathSample {
        times: time_grid(n, dt),
        positions: b,
        seed,
        dt,
    };
    let clock = pcaf_clock(&driving, &mu, eps)?;
    // density one makes A_{t_k} ≥ t_k, so every τ lookup below succeeds
    let positions = driving
        .times
        .iter()
        .map(|&t| {
            let j = clock.tau_index(t).unwrap_or(n);
            s.invert(driving.positions[j])
        })
        .collect();
    Ok(SubspaceDiffusion {
        x: PathSample {
            times: driving.times.clone(),
            positions,
            seed,
            dt,
        },
        driving,
        clock,
        epsilon: eps,
    })
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and `sd / √n` with the unbiased variance.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }

    /// `|mean - target| ≤ k·se`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }

    /// Deviation from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }
}

fn default_paths() -> usize {
    20_000
}

fn default_dt() -> f64 {
    1e-4
}

/// Exit-box experiment for `X^s` on `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitExperiment {
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Band half-width; `√dt` when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Cap on the driving Brownian time; `50·(s(b) - s(a))²` when absent.
    #[serde(default, rename = "T")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Also estimate the time spent in `[c, d]` before exit.
    #[serde(default)]
    pub occupation: Option<[f64; 2]>,
}

impl ExitExperiment {
    pub fn new(a: f64, b: f64, x0: f64) -> Self {
        Self {
            a,
            b,
            x0,
            n_paths: default_paths(),
            dt: default_dt(),
            epsilon: None,
            horizon: None,
            seed: 0,
            occupation: None,
        }
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn with_occupation(mut self, c: f64, d: f64) -> Self {
        self.occupation = Some([c, d]);
        self
    }
}

/// Results of [`exit_statistics`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitStatistics {
    pub p_hit_b: Estimate,
    pub mean_exit_time: Estimate,
    pub occupation: Option<Estimate>,
    pub n_paths: usize,
    /// Paths still inside the box at the horizon (counted as hitting neither end).
    pub censored: usize,
    pub epsilon: f64,
}

impl ExitStatistics {
    /// `(s(x0) - s(a)) / (s(b) - s(a))`.
    pub fn scale_ratio(s: &ScaleFunction, a: f64, b: f64, x0: f64) -> f64 {
        (s.eval(x0) - s.eval(a)) / (s.eval(b) - s.eval(a))
    }
}

struct ExitContext<'a> {
    lo: f64,
    hi: f64,
    y0: f64,
    dt: f64,
    eps: f64,
    max_steps: usize,
    mu: &'a MonotoneMeasure,
    occupation: Option<&'a MonotoneMeasure>,
}

#[derive(Debug, Clone, Copy)]
struct ExitPath {
    hit_b: bool,
    exited: bool,
    clock: f64,
    occupation: f64,
}

/// Run `B` until it leaves `(lo, hi)`, charging the clock along the way.
///
/// Exits are detected by linear interpolation when a step lands outside and by the
/// Brownian-bridge crossing probability `exp(-2(c - y)(c - y')/dt)` otherwise.
fn run_exit_path(rng: &mut ChaCha8Rng, ctx: &ExitContext<'_>) -> ExitPath {
    let sd = ctx.dt.sqrt();
    let mut y = ctx.y0;
    let mut clock = 0.0;
    let mut occ = 0.0;
    let occ_rate = |y: f64| ctx.occupation.map_or(0.0, |m| clock_rate(m, y, ctx.eps));
    for _ in 0..ctx.max_steps {
        let rate = clock_rate(ctx.mu, y, ctx.eps);
        let orate = occ_rate(y);
        let z: f64 = rng.sample(StandardNormal);
        let next = y + sd * z;
        if next <= ctx.lo || next >= ctx.hi {
            let edge = if next >= ctx.hi { ctx.hi } else { ctx.lo };
            let theta = (edge - y) / (next - y);
            return ExitPath {
                hit_b: next >= ctx.hi,
                exited: true,
                clock: (clock + theta * rate) * ctx.dt,
                occupation: (occ + theta * orate) * ctx.dt,
            };
        }
        let p_lo = (-2.0 * (y - ctx.lo) * (next - ctx.lo) / ctx.dt).exp();
        let p_hi = (-2.0 * (ctx.hi - y) * (ctx.hi - next) / ctx.dt).exp();
        let u: f64 = rng.random();
        if u < p_lo + p_hi {
            return ExitPath {
                hit_b: u >= p_lo,
                exited: true,
                clock: (clock + 0.5 * rate) * ctx.dt,
                occupation: (occ + 0.5 * orate) * ctx.dt,
            };
        }
        clock += rate;
        occ += orate;
        y = next;
    }
    ExitPath {
        hit_b: false,
        exited: false,
        clock: clock * ctx.dt,
        occupation: occ * ctx.dt,
    }
}

/// Exit law and mean exit time of `X^s` from `(a, b)`.
pub fn exit_statistics(s: &ScaleFunction, exp: &ExitExperiment) -> Result<ExitStatistics> {
    require_unit_slopes(s)?;
    let ExitExperiment { a, b, x0, .. } = *exp;
    if !(a < x0 && x0 < b) {
        return Err(Error::Precondition(format!(
            "start {x0} must lie strictly inside ({a}, {b})"
        )));
    }
    if exp.n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let eps = default_epsilon(exp.dt, exp.epsilon)?;
    let (lo, hi) = (s.eval(a), s.eval(b));
    let y0 = s.eval(x0);
    if !(lo < y0 && y0 < hi) {
        return Err(Error::Precondition(format!(
            "s({x0}) = {y0} is not strictly inside (s({a}), s({b}))"
        )));
    }
    let horizon = exp.horizon.unwrap_or(50.0 * (hi - lo).powi(2));
    let max_steps = step_count(horizon, exp.dt)?;
    let mu = inverse_scale_measure(s, lo - eps - 1.0, hi + eps + 1.0)?;
    let occupation = match exp.occupation {
        Some([c, d]) => {
            if !(a <= c && c < d && d <= b) {
                return Err(Error::invalid("occupation", "need a ≤ c < d ≤ b"));
            }
            Some(image_of_lebesgue(s, c, d)?)
        }
        None => None,
    };
    let ctx = ExitContext {
        lo,
        hi,
        y0,
        dt: exp.dt,
        eps,
        max_steps,
        mu: &mu,
        occupation: occupation.as_ref(),
    };
    let paths: Vec<ExitPath> = (0..exp.n_paths as u64)
        .into_par_iter()
        .map(|i| run_exit_path(&mut path_rng(exp.seed, i), &ctx))
        .collect();
    let hits: Vec<f64> = paths.iter().map(|p| f64::from(u8::from(p.hit_b))).collect();
    let times: Vec<f64> = paths.iter().map(|p| p.clock).collect();
    let occ = occupation
        .is_some()
        .then(|| Estimate::from_samples(&paths.iter().map(|p| p.occupation).collect::<Vec<_>>()));
    Ok(ExitStatistics {
        p_hit_b: Estimate::from_samples(&hits),
        mean_exit_time: Estimate::from_samples(&times),
        occupation: occ,
        n_paths: exp.n_paths,
        censored: paths.iter().filter(|p| !p.exited).count(),
        epsilon: eps,
    })
}

/// Independent subspace diffusions, one per coordinate, each on its own RNG stream.
pub fn coupled_simulation(
    components: &[ScaleFunction],
    x0: &[f64],
    horizon: f64,
    dt: f64,
    eps: Option<f64>,
    seed: u64,
) -> Result<Vec<SubspaceDiffusion>> {
    if components.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: components.len(),
            found: x0.len(),
        });
    }
    components
        .iter()
        .zip(x0)
        .enumerate()
        .map(|(i, (s, &x))| simulate_stream(s, x, horizon, dt, eps, seed, i as u64))
        .collect()
}

/// `X_T` for every coordinate of `n_paths` coupled runs (row `p` is path `p`).
///
/// Path `p`, coordinate `i` uses stream `p·d + i`; for `p = 0` the endpoints coincide
/// with those of [`coupled_simulation`].
pub fn coupled_endpoints(
    components: &[ScaleFunction],
    x0: &[f64],
    horizon: f64,
    dt: f64,
    eps: Option<f64>,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<Vec<f64>>> {
    if components.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: components.len(),
            found: x0.len(),
        });
    }
    let eps = default_epsilon(dt, eps)?;
    let n = step_count(horizon, dt)?;
    let t_end = n as f64 * dt;
    let reach = 12.0 * t_end.sqrt() + eps + 1.0;
    let setup = components
        .iter()
        .zip(x0)
        .map(|(s, &x)| {
            require_unit_slopes(s)?;
            let y0 = s.eval(x);
            Ok((s, y0, inverse_scale_measure(s, y0 - reach, y0 + reach)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = components.len() as u64;
    let sd = dt.sqrt();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            setup
                .iter()
                .enumerate()
                .map(|(i, (s, y0, mu))| {
                    let mut rng = path_rng(seed, p * d + i as u64);
                    let (mut y, mut acc) = (*y0, 0.0);
                    while acc * dt < t_end {
                        acc += clock_rate(mu, y, eps);
                        let z: f64 = rng.sample(StandardNormal);
                        y += sd * z;
                    }
                    s.invert(y)
                })
                .collect()
        })
        .collect())
}

/// Monte Carlo witness of `E[f(X)g(Y)] = E[f(X)]·E[g(Y)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductRule {
    pub joint: f64,
    pub product: f64,
    /// Standard error of `joint - product`, from the centred products.
    pub se: f64,
    pub n: usize,
}

impl ProductRule {
    pub fn from_samples(f: &[f64], g: &[f64]) -> Result<Self> {
        if f.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: f.len(),
                found: g.len(),
            });
        }
        if f.len() < 2 {
            return Err(Error::invalid("samples", "need at least two"));
        }
        let n = f.len() as f64;
        let fm = f.iter().sum::<f64>() / n;
        let gm = g.iter().sum::<f64>() / n;
        let joint = f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / n;
        let centred: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - fm) * (b - gm)).collect();
        Ok(Self {
            joint,
            product: fm * gm,
            se: Estimate::from_samples(&centred).se,
            n: f.len(),
        })
    }

    pub fn gap(&self) -> f64 {
        (self.joint - self.product).abs()
    }

    /// `|joint - product| ≤ k·se`; exact equality is required when `se = 0`.
    pub fn holds(&self, k: f64) -> bool {
        self.gap() <= k * self.se
    }
}
