//! `discrete`: transform algebra on random Markovian forms and subspace reports.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regsub::discrete::{
    apply_pipeline, basis_core, bd_decompose, homeomorph, kill, perturb_single_entry,
    random_dyadic_form, resurrect, subspace_check, time_change, transport, FiniteForm, Transform,
};
use serde::Deserialize;

use super::Context;
use crate::report::{inputs, Row};
use crate::CliError;

const CMD: &str = "discrete";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscreteParams {
    pub n_forms: usize,
    pub states: usize,
    pub n_perturbations: usize,
    /// Forms to push through `pipeline`; each result is compared with its input.
    pub forms: Vec<FiniteForm>,
    pub pipeline: Vec<Transform>,
}

impl Default for DiscreteParams {
    fn default() -> Self {
        Self {
            n_forms: 200,
            states: 5,
            n_perturbations: 50,
            forms: Vec::new(),
            pipeline: Vec::new(),
        }
    }
}

fn dyadic_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-32i32..=32) as f64 / 16.0)
        .collect()
}

fn dyadic_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(1..=16u32) as f64 / 8.0)
        .collect()
}

pub fn run(ctx: &Context, p: &DiscreteParams) -> Result<Vec<Row>, CliError> {
    if p.states < 2 {
        return Err(CliError::Usage(
            "discrete: `states` must be at least 2".into(),
        ));
    }
    let seed = ctx.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.states;
    let core = basis_core(n);
    let forms: Vec<FiniteForm> = (0..p.n_forms)
        .map(|_| random_dyadic_form(&mut rng, n))
        .collect();
    let inp = inputs(&[("forms", p.n_forms), ("states", n)]);

    let mut reconstruct = 0;
    let mut round_trip = 0;
    let mut homeo = 0;
    let mut involution = 0;
    let mut equivalence = 0;
    for f in &forms {
        if bd_decompose(&f.matrix(), f.m())? != *f {
            reconstruct += 1;
        }
        if kill(&resurrect(f), f.k())? != *f {
            round_trip += 1;
        }
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        let g = homeomorph(f, &sigma)?;
        let (u, v) = (dyadic_vector(&mut rng, n), dyadic_vector(&mut rng, n));
        if g.energy(&transport(&u, &sigma), &transport(&v, &sigma)) != f.energy(&u, &v) {
            homeo += 1;
        }
        let mu = dyadic_weights(&mut rng, n);
        if time_change(&time_change(f, &mu)?, f.m())? != *f {
            involution += 1;
        }
        // fixtures that are subspaces (the form itself, a resurrected twin) and ones that
        // are not (an extra killing term)
        let extra: Vec<f64> = (0..n).map(|x| if x == 0 { 0.25 } else { 0.0 }).collect();
        for sub in [f.clone(), resurrect(f), kill(f, &extra)?] {
            let r = subspace_check(&sub, f, &core)?;
            if !r.equivalence_holds {
                equivalence += 1;
            }
        }
    }
    let mut adversarial = 0;
    for i in 0..p.n_perturbations {
        let f = &forms[i % forms.len().max(1)];
        let (g, _) = perturb_single_entry(&mut rng, f);
        let r = subspace_check(&g, f, &core)?;
        if r.is_subspace || !r.equivalence_holds {
            adversarial += 1;
        }
    }
    let mut rows = vec![
        Row::count(CMD, "bd_reconstruct", inp.clone(), reconstruct),
        Row::count(CMD, "kill_resurrect_round_trip", inp.clone(), round_trip),
        Row::count(CMD, "homeomorphism_energy", inp.clone(), homeo),
        Row::count(CMD, "time_change_involution", inp.clone(), involution),
        Row::count(CMD, "subspace_equivalence", inp, equivalence),
        Row::count(
            CMD,
            "adversarial_perturbations",
            inputs(&[("perturbations", p.n_perturbations), ("states", n)]),
            adversarial,
        ),
    ];
    for (i, f) in p.forms.iter().enumerate() {
        let g = apply_pipeline(f, &p.pipeline)?;
        // compare energies on common reference weights; a time change alters only m
        let base = time_change(f, g.m())?;
        let r = subspace_check(&g, &base, &basis_core(f.len()))?;
        rows.push(Row::exact(
            CMD,
            "pipeline_subspace",
            inputs(&[
                ("form", i.to_string()),
                ("steps", p.pipeline.len().to_string()),
                ("triples_match", r.triples_match.to_string()),
            ]),
            f64::from(u8::from(r.is_subspace)),
            f64::from(u8::from(r.triples_match)),
            0.0,
            r.equivalence_holds,
        ));
    }
    Ok(rows)
}
