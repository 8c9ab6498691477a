//! `coupling`: product energies, properness certificates and the independence check.

use std::sync::Arc;

use regsub::coupling::{
    dirichlet_energy_2d, product_energy, properness_certificate, Component, ProductForm,
    TensorFunction,
};
use regsub::forms1d::{CoreFunction, Interval, Profile};
use regsub::scale::ScaleFunction;
use regsub::simulate::{coupled_endpoints, ProductRule};
use serde::Deserialize;

use super::Context;
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "coupling";

/// Bounded test functions for the independence check.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFn {
    /// `𝟙{x > at}`, or `𝟙{x < at}` when `above` is false.
    HalfLine {
        at: f64,
        above: bool,
    },
    Constant {
        value: f64,
    },
    Sine {
        frequency: f64,
    },
    Clamp {
        lo: f64,
        hi: f64,
    },
}

impl TestFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFn::HalfLine { at, above } => {
                f64::from(u8::from(if above { x > at } else { x < at }))
            }
            TestFn::Constant { value } => value,
            TestFn::Sine { frequency } => (frequency * x).sin(),
            TestFn::Clamp { lo, hi } => x.clamp(lo, hi),
        }
    }

    fn label(&self) -> String {
        match *self {
            TestFn::HalfLine { at, above } => {
                format!("half_line({}{at})", if above { ">" } else { "<" })
            }
            TestFn::Constant { value } => format!("constant({value})"),
            TestFn::Sine { frequency } => format!("sine({frequency})"),
            TestFn::Clamp { lo, hi } => format!("clamp({lo}:{hi})"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingParams {
    /// Product form whose energy is compared with the 2-d finite-difference oracle.
    pub form: ProductForm,
    pub grid_n: usize,
    pub quad_n: usize,
    /// Components of the coupled simulation.
    pub simulate: Vec<ScaleFunction>,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub pairs: Vec<(TestFn, TestFn)>,
}

fn unit_component(s: ScaleFunction) -> Component {
    Component {
        scale: Arc::new(s),
        interval: Interval { lo: 0.0, hi: 1.0 },
    }
}

impl Default for CouplingParams {
    fn default() -> Self {
        let fat = ScaleFunction::fat_cantor(0.5, 8).expect("valid construction");
        Self {
            form: ProductForm::new(vec![
                unit_component(ScaleFunction::identity()),
                unit_component(ScaleFunction::identity()),
            ])
            .expect("non-empty"),
            grid_n: 1024,
            quad_n: 256,
            simulate: vec![ScaleFunction::identity(), fat],
            x0: vec![0.5, 0.5],
            horizon: 0.2,
            dt: 1e-3,
            n_paths: 20_000,
            pairs: vec![
                (
                    TestFn::HalfLine {
                        at: 0.5,
                        above: true,
                    },
                    TestFn::HalfLine {
                        at: 0.5,
                        above: true,
                    },
                ),
                (
                    TestFn::Sine { frequency: 3.0 },
                    TestFn::HalfLine {
                        at: 0.3,
                        above: false,
                    },
                ),
                (
                    TestFn::Clamp { lo: 0.0, hi: 1.0 },
                    TestFn::Constant { value: 1.0 },
                ),
            ],
        }
    }
}

/// A bump on the natural-scale image of the component interval.
fn factor(c: &Component) -> Result<CoreFunction, CliError> {
    let (lo, hi) = (c.scale.eval(c.interval.lo), c.scale.eval(c.interval.hi));
    let len = hi - lo;
    let phi = Profile::bump(lo + 0.47 * len, 0.31 * len, 1.0)?;
    Ok(CoreFunction::new(phi, c.scale.clone())?)
}

/// `Σ_k λ 2^(1-2k) · 2^(k-1)` over the removal steps: the flat mass of a full fat-Cantor
/// window; otherwise the clipped lengths of the stored flats.
fn flat_mass_oracle(c: &Component) -> f64 {
    use regsub::scale::Family;
    let w = c.scale.family().window();
    if let Family::FatCantor {
        flat_fraction,
        depth,
    } = c.scale.family()
    {
        if c.interval.lo <= w.lo && w.hi <= c.interval.hi {
            return (1..=depth as i32)
                .map(|k| flat_fraction * 2f64.powi(1 - 2 * k) * 2f64.powi(k - 1))
                .sum();
        }
    }
    c.scale
        .flat_intervals_in(c.interval.lo, c.interval.hi)
        .unwrap_or_default()
        .iter()
        .map(|g| (g.right.min(c.interval.hi) - g.left.max(c.interval.lo)).max(0.0))
        .fold(0.0, |acc, l| acc + l)
}

pub fn run(ctx: &Context, p: &CouplingParams) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    let comps = p.form.components();
    let families = comps
        .iter()
        .map(|c| c.scale.family().name())
        .collect::<Vec<_>>()
        .join("+");
    if comps.len() == 2 {
        let u = TensorFunction::new(comps.iter().map(factor).collect::<Result<Vec<_>, _>>()?)?;
        let e = product_energy(&p.form, &u, p.quad_n)?;
        let fd = dirichlet_energy_2d(&u, p.grid_n)?;
        rows.push(Row::relative(
            CMD,
            "product_energy",
            inputs(&[
                ("components", families.clone()),
                ("grid_n", p.grid_n.to_string()),
                ("quad_n", p.quad_n.to_string()),
            ]),
            e,
            fd,
            ctx.tol.product_rel,
        ));
    }
    let cert = properness_certificate(&p.form);
    for (i, (c, &m)) in comps.iter().zip(&cert.flat_masses).enumerate() {
        let oracle = flat_mass_oracle(c);
        let depth = c
            .scale
            .depth()
            .map_or("none".to_string(), |d| d.to_string());
        rows.push(Row::exact(
            CMD,
            "flat_mass",
            inputs(&[
                ("component", i.to_string()),
                ("family", c.scale.family().name().to_string()),
                ("depth", depth),
            ]),
            m,
            oracle,
            0.0,
            m == oracle,
        ));
    }
    let expect_proper = cert.flat_masses.iter().any(|&m| m > 0.0);
    rows.push(Row::exact(
        CMD,
        "proper",
        inputs(&[("components", families)]),
        f64::from(u8::from(cert.proper)),
        f64::from(u8::from(expect_proper)),
        0.0,
        cert.proper == expect_proper,
    ));

    if p.simulate.len() != 2 || p.x0.len() != 2 {
        return Err(CliError::Usage(
            "coupling: `simulate` and `x0` must have two entries".into(),
        ));
    }
    let seed = ctx.seed.unwrap_or(0);
    let ends = coupled_endpoints(&p.simulate, &p.x0, p.horizon, p.dt, None, seed, p.n_paths)?;
    let sim = p
        .simulate
        .iter()
        .map(|s| s.family().name())
        .collect::<Vec<_>>()
        .join("+");
    for (f, g) in &p.pairs {
        let fv: Vec<f64> = ends.iter().map(|r| f.eval(r[0])).collect();
        let gv: Vec<f64> = ends.iter().map(|r| g.eval(r[1])).collect();
        let rule = ProductRule::from_samples(&fv, &gv)?;
        rows.push(Row::monte_carlo(
            CMD,
            "product_rule",
            inputs(&[
                ("components", sim.clone()),
                ("f", f.label()),
                ("g", g.label()),
                ("T", p.horizon.to_string()),
                ("dt", p.dt.to_string()),
                ("n_paths", p.n_paths.to_string()),
                ("seed", seed.to_string()),
            ]),
            rule.joint,
            rule.se,
            rule.product,
            ctx.tol.mc_se,
            rule.holds(ctx.tol.mc_se),
        ));
    }
    Ok(rows)
}
