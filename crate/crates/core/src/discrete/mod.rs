//! Finite-state Dirichlet forms and their transforms.
//!
//! A form on `n` states is `E(u, v) = Σ_{x<y} 2 J_xy (u_x - u_y)(v_x - v_y) + Σ_x k_x u_x v_x`,
//! i.e. `E(u, v) = uᵀQv` with `Q_xy = -2 J_xy` off the diagonal and row sums `k`. There is
//! no strongly local part on a finite space, and a core that spans all functions leaves no
//! room for proper subspaces: [`subspace_check`] therefore exercises the algebra (equal
//! energies on a spanning core iff equal jump and killing data), not properness.
//!
//! Arithmetic is plain `f64`. The transform laws hold bit-for-bit whenever the data are
//! exactly representable in every intermediate sum (dyadic rationals of moderate size).

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jump, killing and reference-weight data on labelled states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormSpec", into = "FormSpec")]
pub struct FiniteForm {
    states: Vec<String>,
    m: Vec<f64>,
    /// Row-major `n × n`, symmetric with zero diagonal.
    j: Vec<f64>,
    k: Vec<f64>,
}

/// JSON form `{states, m, J, k}` with `J` given as its strict upper triangle, row by row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub states: Vec<String>,
    pub m: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub k: Vec<f64>,
}

impl TryFrom<FormSpec> for FiniteForm {
    type Error = Error;

    fn try_from(spec: FormSpec) -> Result<Self> {
        let n = spec.states.len();
        if spec.j.len() != n.saturating_sub(1) && !(n == 0 && spec.j.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: n.saturating_sub(1),
                found: spec.j.len(),
            });
        }
        let mut j = vec![0.0; n * n];
        for (x, row) in spec.j.iter().enumerate() {
            if row.len() != n - 1 - x {
                return Err(Error::DimensionMismatch {
                    expected: n - 1 - x,
                    found: row.len(),
                });
            }
            for (off, &v) in row.iter().enumerate() {
                let y = x + 1 + off;
                j[x * n + y] = v;
                j[y * n + x] = v;
            }
        }
        FiniteForm::new(spec.states, spec.m, j, spec.k)
    }
}

impl From<FiniteForm> for FormSpec {
    fn from(f: FiniteForm) -> Self {
        let n = f.len();
        let j = (0..n.saturating_sub(1))
            .map(|x| ((x + 1)..n).map(|y| f.j[x * n + y]).collect())
            .collect();
        FormSpec {
            states: f.states,
            m: f.m,
            j,
            k: f.k,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl FiniteForm {
    /// Validates `m > 0`, `k ≥ 0`, and `J` symmetric, non-negative, zero on the diagonal.
    pub fn new(states: Vec<String>, m: Vec<f64>, j: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::invalid("states", "need at least one state"));
        }
        check_len(n, m.len())?;
        check_len(n, k.len())?;
        check_len(n * n, j.len())?;
        let mut seen = states.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != n {
            return Err(Error::invalid("states", "labels must be distinct"));
        }
        if m.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("m", "reference weights must be positive"));
        }
        if k.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("k", "killing weights must be non-negative"));
        }
        for x in 0..n {
            if j[x * n + x] != 0.0 {
                return Err(Error::invalid(
                    "J",
                    format!("diagonal entry {x} must be zero"),
                ));
            }
            for y in 0..n {
                let v = j[x * n + y];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::NotMarkovian {
                        row: x,
                        col: y,
                        reason: format!("jump intensity {v} is negative"),
                    });
                }
                if v != j[y * n + x] {
                    return Err(Error::invalid("J", format!("not symmetric at ({x}, {y})")));
                }
            }
        }
        Ok(Self { states, m, j, k })
    }

    /// States labelled `0, 1, …, n-1`.
    pub fn with_default_labels(m: Vec<f64>, j: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        let states = (0..m.len()).map(|i| i.to_string()).collect();
        Self::new(states, m, j, k)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn jump(&self, x: usize, y: usize) -> f64 {
        self.j[x * self.len() + y]
    }

    /// `E(u, v)`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for x in 0..n {
            for y in (x + 1)..n {
                let w = self.j[x * n + y];
                if w != 0.0 {
                    total += 2.0 * w * (u[x] - u[y]) * (v[x] - v[y]);
                }
            }
            total += self.k[x] * u[x] * v[x];
        }
        total
    }

    /// `Q` with `E(u, v) = uᵀQv`, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut q = vec![0.0; n * n];
        for x in 0..n {
            let mut diag = 0.0;
            for y in 0..n {
                if y != x {
                    q[x * n + y] = -2.0 * self.j[x * n + y];
                    diag += 2.0 * self.j[x * n + y];
                }
            }
            q[x * n + x] = diag + self.k[x];
        }
        q
    }

    /// `Σ_x u_x v_x m_x`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .zip(&self.m)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

/// Beurling–Deny data of the form `E(u, v) = uᵀQv` (row-major `Q`).
///
/// `J_xy = -Q_xy / 2` off the diagonal and `k_x = Σ_y Q_xy`.
pub fn bd_decompose(q: &[f64], m: &[f64]) -> Result<FiniteForm> {
    let n = m.len();
    check_len(n * n, q.len())?;
    for x in 0..n {
        for y in 0..x {
            if q[x * n + y] != q[y * n + x] {
                return Err(Error::invalid("Q", format!("not symmetric at ({x}, {y})")));
            }
        }
    }
    let mut j = vec![0.0; n * n];
    let mut k = vec![0.0; n];
    for x in 0..n {
        let mut row = q[x * n + x];
        for y in 0..n {
            if y == x {
                continue;
            }
            let v = q[x * n + y];
            if v > 0.0 {
                return Err(Error::NotMarkovian {
                    row: x,
                    col: y,
                    reason: format!("positive off-diagonal entry {v}"),
                });
            }
            j[x * n + y] = -v / 2.0;
            row += v;
        }
        if row < 0.0 {
            return Err(Error::NotMarkovian {
                row: x,
                col: x,
                reason: format!("negative row sum {row}"),
            });
        }
        k[x] = row;
    }
    FiniteForm::with_default_labels(m.to_vec(), j, k)
}

/// Add killing `extra ≥ 0`.
pub fn kill(f: &FiniteForm, extra: &[f64]) -> Result<FiniteForm> {
    check_len(f.len(), extra.len())?;
    if extra.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Precondition(
            "killing weights must be non-negative".into(),
        ));
    }
    let mut g = f.clone();
    for (k, e) in g.k.iter_mut().zip(extra) {
        *k += e;
    }
    Ok(g)
}

/// Drop the killing part.
pub fn resurrect(f: &FiniteForm) -> FiniteForm {
    let mut g = f.clone();
    g.k.iter_mut().for_each(|k| *k = 0.0);
    g
}

/// Transport along the bijection `x ↦ sigma[x]` of state positions: the data of state `x`
/// move to position `sigma[x]`; labels stay in place.
pub fn homeomorph(f: &FiniteForm, sigma: &[usize]) -> Result<FiniteForm> {
    let n = f.len();
    check_len(n, sigma.len())?;
    let mut hit = vec![false; n];
    for &s in sigma {
        if s >= n || hit[s] {
            return Err(Error::Precondition("sigma is not a bijection".into()));
        }
        hit[s] = true;
    }
    let mut m = vec![0.0; n];
    let mut k = vec![0.0; n];
    let mut j = vec![0.0; n * n];
    for x in 0..n {
        m[sigma[x]] = f.m[x];
        k[sigma[x]] = f.k[x];
        for y in 0..n {
            j[sigma[x] * n + sigma[y]] = f.j[x * n + y];
        }
    }
    FiniteForm::new(f.states.clone(), m, j, k)
}

/// Inverse permutation.
pub fn invert_permutation(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (x, &s) in sigma.iter().enumerate() {
        inv[s] = x;
    }
    inv
}

/// `u ∘ σ^{-1}`: the function transported along `sigma`.
pub fn transport(u: &[f64], sigma: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (x, &s) in sigma.iter().enumerate() {
        out[s] = u[x];
    }
    out
}

/// Replace the reference weights by `mu > 0`; jumps and killing are unchanged.
pub fn time_change(f: &FiniteForm, mu: &[f64]) -> Result<FiniteForm> {
    check_len(f.len(), mu.len())?;
    if mu.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(
            "time-change weights must be strictly positive (full support)".into(),
        ));
    }
    let mut g = f.clone();
    g.m = mu.to_vec();
    Ok(g)
}

/// Result of comparing two forms on a core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubspaceReport {
    /// `E'(u, v) = E(u, v)` for every core pair, exactly.
    pub is_subspace: bool,
    /// `J' = J` and `k' = k`.
    pub triples_match: bool,
    /// The core spans all functions on the state space.
    pub core_spans: bool,
    /// `is_subspace == triples_match`; guaranteed when the core spans.
    pub equivalence_holds: bool,
}

/// Compare `sub` against `full` on every pair of core functions.
pub fn subspace_check(
    sub: &FiniteForm,
    full: &FiniteForm,
    core: &[Vec<f64>],
) -> Result<SubspaceReport> {
    if sub.states != full.states {
        return Err(Error::Precondition(
            "forms live on different state sets".into(),
        ));
    }
    if sub.m != full.m {
        return Err(Error::Precondition(
            "forms have different reference weights".into(),
        ));
    }
    let n = full.len();
    for u in core {
        check_len(n, u.len())?;
    }
    let is_subspace = core.iter().enumerate().all(|(i, u)| {
        core[i..]
            .iter()
            .all(|v| sub.energy(u, v) == full.energy(u, v))
    });
    let triples_match = sub.j == full.j && sub.k == full.k;
    let core_spans = !core.is_empty() && {
        let mat = DMatrix::from_fn(n, core.len(), |r, c| core[c][r]);
        mat.rank(1e-12) == n
    };
    Ok(SubspaceReport {
        is_subspace,
        triples_match,
        core_spans,
        equivalence_holds: is_subspace == triples_match,
    })
}

/// Indicator functions `𝟙_x` together with all pair sums `𝟙_x + 𝟙_y`.
pub fn basis_core(n: usize) -> Vec<Vec<f64>> {
    let unit = |x: usize| {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        v
    };
    let mut core: Vec<Vec<f64>> = (0..n).map(unit).collect();
    for x in 0..n {
        for y in (x + 1)..n {
            let mut v = unit(x);
            v[y] = 1.0;
            core.push(v);
        }
    }
    core
}

/// One step of a transform pipeline, as read from JSON `{"op": …, "args": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "op",
    content = "args",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum Transform {
    Kill { k: Vec<f64> },
    Resurrect,
    Homeomorph { sigma: Vec<usize> },
    TimeChange { mu: Vec<f64> },
}

impl Transform {
    pub fn apply(&self, f: &FiniteForm) -> Result<FiniteForm> {
        match self {
            Transform::Kill { k } => kill(f, k),
            Transform::Resurrect => Ok(resurrect(f)),
            Transform::Homeomorph { sigma } => homeomorph(f, sigma),
            Transform::TimeChange { mu } => time_change(f, mu),
        }
    }
}

/// Apply transforms left to right.
pub fn apply_pipeline(f: &FiniteForm, steps: &[Transform]) -> Result<FiniteForm> {
    steps.iter().try_fold(f.clone(), |acc, t| t.apply(&acc))
}

/// Random Markovian form with dyadic data: `J, k ∈ {0, 1/64, …, 1}` (about a third of
/// the entries zero) and `m ∈ {1/8, …, 2}`. Every energy of dyadic functions with small
/// numerators is then computed without rounding.
pub fn random_dyadic_form<R: Rng + ?Sized>(rng: &mut R, n: usize) -> FiniteForm {
    let mut dyadic = |zero_odds: u32| {
        if rng.random_ratio(zero_odds, 3) {
            0.0
        } else {
            rng.random_range(1..=64u32) as f64 / 64.0
        }
    };
    let mut j = vec![0.0; n * n];
    for x in 0..n {
        for y in (x + 1)..n {
            let v = dyadic(1);
            j[x * n + y] = v;
            j[y * n + x] = v;
        }
    }
    let k = (0..n).map(|_| dyadic(1)).collect();
    let m = (0..n)
        .map(|_| rng.random_range(1..=16u32) as f64 / 8.0)
        .collect();
    FiniteForm::with_default_labels(m, j, k).expect("generated data satisfy the invariants")
}

/// Change one jump or killing entry of `f` by a nonzero dyadic amount, keeping it
/// non-negative. Returns the perturbed form and a description of the entry.
pub fn perturb_single_entry<R: Rng + ?Sized>(rng: &mut R, f: &FiniteForm) -> (FiniteForm, String) {
    let n = f.len();
    let mut g = f.clone();
    let delta = rng.random_range(1..=32u32) as f64 / 64.0;
    let pairs = n * (n - 1) / 2;
    let pick = rng.random_range(0..pairs + n);
    if pick < pairs {
        let (mut x, mut rest) = (0, pick);
        while rest >= n - 1 - x {
            rest -= n - 1 - x;
            x += 1;
        }
        let y = x + 1 + rest;
        let old = g.j[x * n + y];
        let new = if old >= delta && rng.random_bool(0.5) {
            old - delta
        } else {
            old + delta
        };
        g.j[x * n + y] = new;
        g.j[y * n + x] = new;
        (g, format!("J[{x}][{y}]"))
    } else {
        let x = pick - pairs;
        let old = g.k[x];
        g.k[x] = if old >= delta && rng.random_bool(0.5) {
            old - delta
        } else {
            old + delta
        };
        (g, format!("k[{x}]"))
    }
}
