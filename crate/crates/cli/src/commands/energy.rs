//! `verify-energy`: `E^(s)(u, u)` against the Brownian energy along a depth sweep.

use std::sync::Arc;

use regsub::forms1d::{compare_energies, CoreFunction, Interval, Profile};
use regsub::scale::ScaleFunction;
use serde::Deserialize;

use super::Context;
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "verify-energy";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub scale: ScaleFunction,
    /// Profile on the natural scale; a bump on `s(I)` when absent.
    pub profile: Option<Profile>,
    pub depths: Vec<u32>,
    pub grid_n: usize,
    pub quad_n: usize,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            scale: ScaleFunction::fat_cantor(0.5, 10).expect("valid construction"),
            profile: None,
            depths: vec![6, 8, 10],
            grid_n: 1 << 16,
            quad_n: 256,
        }
    }
}

/// `s(I)` for finite domains, `[s(0), s(1)]` otherwise.
fn natural_window(s: &ScaleFunction) -> Interval {
    let d = s.domain();
    let (a, b) = if d.is_finite() {
        (d.lo, d.hi)
    } else {
        (0.0, 1.0)
    };
    Interval {
        lo: s.eval(a),
        hi: s.eval(b),
    }
}

/// Bump centred at 41% of `s(I)` with radius 33% of its length.
pub fn default_profile(s: &ScaleFunction) -> Result<Profile, CliError> {
    let j = natural_window(s);
    Ok(Profile::bump(j.lo + 0.41 * j.len(), 0.33 * j.len(), 1.0)?)
}

pub fn run(ctx: &Context, p: &EnergyParams) -> Result<Vec<Row>, CliError> {
    let points: Vec<(Option<u32>, usize)> = if ctx.sweep {
        ctx.schedule()
            .iter()
            .map(|e| (e.depth.or(p.scale.depth()), e.grid_n.unwrap_or(p.grid_n)))
            .collect()
    } else if p.scale.depth().is_some() {
        p.depths.iter().map(|&d| (Some(d), p.grid_n)).collect()
    } else {
        vec![(None, p.grid_n)]
    };
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for (depth, grid_n) in points {
        let s = match depth {
            Some(d) => p.scale.with_depth(d)?,
            None => p.scale.clone(),
        };
        let phi = match &p.profile {
            Some(phi) => phi.clone(),
            None => default_profile(&s)?,
        };
        let u = CoreFunction::new(phi, Arc::new(s))?;
        let r = compare_energies(&u, grid_n, p.quad_n)?;
        let depth_label = r.depth.map_or("none".to_string(), |d| d.to_string());
        let inp = inputs(&[
            ("family", r.family.clone()),
            ("depth", depth_label),
            ("grid_n", grid_n.to_string()),
            ("quad_n", p.quad_n.to_string()),
        ]);
        let tol = ctx.tol.energy_rel;
        rows.push(Row::exact(
            CMD,
            "energy_identity",
            inp.clone(),
            r.energy_es,
            r.dirichlet,
            tol,
            r.residual <= tol,
        ));
        let ratio = r.energy_es / r.dirichlet;
        rows.push(Row::exact(
            CMD,
            "energy_ratio",
            inp,
            ratio,
            1.0,
            tol,
            (ratio - 1.0).abs() <= tol,
        ));
        residuals.push(r.residual);
    }
    if residuals.len() > 1 {
        let increases = residuals.windows(2).filter(|w| w[1] > w[0]).count();
        rows.push(Row::count(
            CMD,
            "residual_monotone",
            inputs(&[("points", residuals.len())]),
            increases,
        ));
    }
    Ok(rows)
}
