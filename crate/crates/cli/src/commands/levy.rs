//! `levy`: Fourier against direct energies and the pairing identity.

use regsub::levy::{
    energy_direct, energy_fourier, pairing_identity_residual, GridFunction, JumpAtom, LevySymbol,
};
use serde::Deserialize;

use super::Context;
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "levy";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevyParams {
    /// Two-dimensional symbol for the energy comparison.
    pub symbol: LevySymbol,
    /// Nodes per axis of the square grid `[-half_width, half_width)²`.
    pub n: usize,
    pub half_width: f64,
    /// One-dimensional symbol for the pairing identity.
    pub pairing_symbol: LevySymbol,
    /// Coarse resolution of the pairing check; the verdict uses `2 · pairing_n`.
    pub pairing_n: usize,
}

fn atom(y: &[f64], w: f64) -> JumpAtom {
    JumpAtom { y: y.to_vec(), w }
}

impl Default for LevyParams {
    fn default() -> Self {
        let four = vec![
            atom(&[1.0, 0.0], 0.5),
            atom(&[-1.0, 0.0], 0.5),
            atom(&[0.0, 1.0], 0.25),
            atom(&[0.0, -1.0], 0.25),
        ];
        Self {
            symbol: LevySymbol::new(2, vec![1.0, 0.0, 0.0, 1.0], four).expect("valid symbol"),
            n: 256,
            half_width: 8.0,
            pairing_symbol: LevySymbol::new(
                1,
                vec![1.0],
                vec![atom(&[0.7], 0.5), atom(&[-0.7], 0.5)],
            )
            .expect("valid symbol"),
            pairing_n: 300,
        }
    }
}

/// `exp(-|x|²/2)` on the square grid.
fn gaussian(n: usize, half_width: f64) -> Result<GridFunction, CliError> {
    let h = 2.0 * half_width / n as f64;
    Ok(GridFunction::from_fn(
        vec![n, n],
        vec![-half_width; 2],
        h,
        |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(),
    )?)
}

/// `(1 - z²)³` bump on `[-1, 2)` with `n` nodes.
fn bump_1d(n: usize, center: f64) -> Result<GridFunction, CliError> {
    let h = 3.0 / n as f64;
    Ok(GridFunction::from_fn(vec![n], vec![-1.0], h, |x| {
        let z = (x[0] - center) / 0.2;
        if z.abs() < 1.0 {
            (1.0 - z * z).powi(3)
        } else {
            0.0
        }
    })?)
}

pub fn run(ctx: &Context, p: &LevyParams) -> Result<Vec<Row>, CliError> {
    if p.symbol.dim() != 2 || p.pairing_symbol.dim() != 1 {
        return Err(CliError::Usage(
            "levy: `symbol` must be 2-dimensional and `pairing_symbol` 1-dimensional".into(),
        ));
    }
    let tol = ctx.tol.levy_rel;
    let u = gaussian(p.n, p.half_width)?;
    let grid = inputs(&[
        ("n", p.n.to_string()),
        ("half_width", p.half_width.to_string()),
    ]);
    let mut rows = Vec::new();

    let f = energy_fourier(&p.symbol, &u)?;
    let d = energy_direct(&p.symbol, &u)?;
    rows.push(Row::relative(
        CMD,
        "fourier_vs_direct",
        format!("{grid};atoms={}", p.symbol.atoms().len()),
        d.total(),
        f,
        tol,
    ));

    let local = LevySymbol::gaussian(2, p.symbol.s().to_vec())?;
    let f = energy_fourier(&local, &u)?;
    let d = energy_direct(&local, &u)?;
    rows.push(Row::relative(
        CMD,
        "plancherel",
        format!("{grid};atoms=0"),
        d.total(),
        f,
        tol,
    ));

    let residual = |n: usize| -> Result<f64, CliError> {
        Ok(pairing_identity_residual(
            &p.pairing_symbol,
            &bump_1d(n, 0.2)?,
            &bump_1d(n, 0.8)?,
        )?)
    };
    let (coarse, fine) = (residual(p.pairing_n)?, residual(2 * p.pairing_n)?);
    rows.push(Row::exact(
        CMD,
        "pairing_residual",
        inputs(&[("n", 2 * p.pairing_n)]),
        fine,
        0.0,
        ctx.tol.pairing,
        fine <= ctx.tol.pairing,
    ));
    rows.push(Row::exact(
        CMD,
        "pairing_refines",
        inputs(&[("n", p.pairing_n), ("refined_n", 2 * p.pairing_n)]),
        fine,
        coarse,
        0.0,
        fine <= coarse,
    ));
    Ok(rows)
}
