//! `selftest`: every command at its defaults plus the Cantor-function and counterexample
//! checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regsub::forms1d::{dirichlet_energy, energy_es, CoreFunction};
use regsub::scale::{cantor_function, ScaleFunction};

use super::{coupling, discrete, energy, exit, levy, Context};
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "selftest";

/// Cantor function from the ternary digits of `k / 2^53`, read exactly in integer
/// arithmetic: `Σ (d_i / 2) 2^-i` up to the first digit 1, which contributes `2^-i`.
pub fn ternary_oracle(k: u64, digits: u32) -> f64 {
    const SHIFT: u32 = 53;
    let mask = (1u64 << SHIFT) - 1;
    let mut r = k;
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..digits {
        r *= 3;
        let d = r >> SHIFT;
        r &= mask;
        match d {
            0 => {}
            1 => return value + weight,
            _ => value += weight,
        }
        weight *= 0.5;
    }
    value
}

fn cantor_rows(ctx: &Context) -> Vec<Row> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(0));
    let (mut worst, mut worst_sym) = (0.0f64, 0.0f64);
    let points = 1000;
    for _ in 0..points {
        let k = rng.random_range(0..1u64 << 53);
        let x = k as f64 / (1u64 << 53) as f64;
        worst = worst.max((cantor_function(x, 40) - ternary_oracle(k, 100)).abs());
        worst_sym =
            worst_sym.max((cantor_function(x, 40) + cantor_function(1.0 - x, 40) - 1.0).abs());
    }
    let inp = inputs(&[("points", points), ("depth", 40)]);
    vec![
        Row::exact(
            CMD,
            "cantor_vs_ternary",
            inp.clone(),
            worst,
            0.0,
            ctx.tol.cantor,
            worst <= ctx.tol.cantor,
        ),
        Row::exact(
            CMD,
            "cantor_symmetry",
            inp,
            worst_sym,
            0.0,
            ctx.tol.cantor_symmetry,
            worst_sym <= ctx.tol.cantor_symmetry,
        ),
    ]
}

/// `s(x) = x/2` doubles `E^(s)` relative to the Brownian energy.
fn affine_rows(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let s = ScaleFunction::affine_slope(0.5)?;
    let phi = energy::default_profile(&s)?;
    let u = CoreFunction::new(phi, Arc::new(s))?;
    let grid_n = 1 << 16;
    let ratio = energy_es(&u, 256)? / dirichlet_energy(&u, grid_n);
    Ok(vec![Row::exact(
        CMD,
        "affine_counterexample_ratio",
        inputs(&[("slope", 0.5)]),
        ratio,
        2.0,
        ctx.tol.affine_ratio,
        (ratio - 2.0).abs() <= ctx.tol.affine_ratio,
    )])
}

pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let base = Context {
        sweep: false,
        ..ctx.clone()
    };
    let mut rows = cantor_rows(&base);
    rows.extend(energy::run(&base, &energy::EnergyParams::default())?);
    rows.extend(affine_rows(&base)?);
    rows.extend(exit::run(&base, &exit::ExitParams::default())?);
    let identity = exit::ExitParams {
        scale: ScaleFunction::identity(),
        x0: crate::config::OneOrMany::One(0.5),
        ..Default::default()
    };
    rows.extend(exit::run(&base, &identity)?);
    rows.extend(levy::run(&base, &levy::LevyParams::default())?);
    rows.extend(discrete::run(&base, &discrete::DiscreteParams::default())?);
    rows.extend(coupling::run(&base, &coupling::CouplingParams::default())?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ternary_oracle_values() {
        let half = 1u64 << 52;
        assert_eq!(ternary_oracle(half, 100), 0.5);
        assert_eq!(ternary_oracle(0, 100), 0.0);
        // 1/4 = 0.020202…₃ gives c = 0.010101…₂ = 1/3
        let quarter = 1u64 << 51;
        assert!((ternary_oracle(quarter, 100) - 1.0 / 3.0).abs() < 1e-15);
    }
}
