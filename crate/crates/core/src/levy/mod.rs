//! Translation-invariant (Lévy) Dirichlet forms with atomic jump measures.
//!
//! The symbol is `ψ(ξ) = ½ ξᵀSξ + Σ_i w_i (1 - cos ξ·y_i)` and the form is
//! `E(u, u) = (2π)^-d ∫ |û(ξ)|² ψ(ξ) dξ` with `û(ξ) = ∫ u(x) e^{-iξ·x} dx`.
//! [`energy_fourier`] evaluates this on the FFT grid; [`energy_direct`] evaluates the
//! Beurling–Deny split `½∫(S∇u, ∇u) dx + ½ Σ w_i ∫ (u(x + y_i) - u(x))² dx`
//! in physical space.

mod grid;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::GridFunction;

/// Relative eigenvalue threshold for the rank of `S`.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Relative tolerance of the PSD check on `S`.
const PSD_TOL: f64 = 1e-12;

/// One jump atom `w δ_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpAtom {
    pub y: Vec<f64>,
    pub w: f64,
}

/// Symmetric Lévy–Khinchin data `(S, j)` in dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolSpec", into = "SymbolSpec")]
pub struct LevySymbol {
    dim: usize,
    /// Row-major `d × d`.
    s: Vec<f64>,
    atoms: Vec<JumpAtom>,
}

/// JSON form `{"S": [row-major], "atoms": [[y_1, …, y_d, w], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<Vec<f64>>,
}

impl TryFrom<SymbolSpec> for LevySymbol {
    type Error = Error;

    fn try_from(spec: SymbolSpec) -> Result<Self> {
        let d = (spec.s.len() as f64).sqrt().round() as usize;
        if d == 0 || d * d != spec.s.len() {
            return Err(Error::invalid("S", "must be a non-empty square matrix"));
        }
        let atoms = spec
            .atoms
            .into_iter()
            .map(|row| {
                if row.len() != d + 1 {
                    return Err(Error::DimensionMismatch {
                        expected: d + 1,
                        found: row.len(),
                    });
                }
                Ok(JumpAtom {
                    w: row[d],
                    y: row[..d].to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LevySymbol::new(d, spec.s, atoms)
    }
}

impl From<LevySymbol> for SymbolSpec {
    fn from(sym: LevySymbol) -> Self {
        SymbolSpec {
            s: sym.s,
            atoms: sym
                .atoms
                .into_iter()
                .map(|a| {
                    let mut row = a.y;
                    row.push(a.w);
                    row
                })
                .collect(),
        }
    }
}

impl LevySymbol {
    /// Validates symmetry and positive semidefiniteness of `S`, positive weights and
    /// closure of the atoms under `y ↦ -y` with equal weights.
    pub fn new(dim: usize, s: Vec<f64>, atoms: Vec<JumpAtom>) -> Result<Self> {
        if dim == 0 || s.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("S", "entries must be finite"));
        }
        let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (s[i * dim + j] - s[j * dim + i]).abs() > PSD_TOL * scale.max(1.0) {
                    return Err(Error::invalid("S", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &s));
        let min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL * scale.max(1.0) {
            return Err(Error::invalid(
                "S",
                format!("not positive semidefinite (eigenvalue {min})"),
            ));
        }
        for a in &atoms {
            if a.y.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.y.len(),
                });
            }
            if !(a.w > 0.0 && a.w.is_finite()) || a.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "atoms",
                    "weights must be positive and finite",
                ));
            }
            if a.y.iter().all(|&v| v == 0.0) {
                return Err(Error::invalid(
                    "atoms",
                    "an atom at the origin carries no jump",
                ));
            }
            let mirrored = atoms
                .iter()
                .any(|b| b.w == a.w && b.y.iter().zip(&a.y).all(|(p, q)| *p == -*q));
            if !mirrored {
                return Err(Error::invalid(
                    "atoms",
                    format!("atom at {:?} has no mirror image with equal weight", a.y),
                ));
            }
        }
        Ok(Self { dim, s, atoms })
    }

    /// Pure diffusion `ψ(ξ) = ½ ξᵀSξ`.
    pub fn gaussian(dim: usize, s: Vec<f64>) -> Result<Self> {
        Self::new(dim, s, Vec::new())
    }

    /// `S = I_d` with the given atoms.
    pub fn identity_with_atoms(dim: usize, atoms: Vec<JumpAtom>) -> Result<Self> {
        let mut s = vec![0.0; dim * dim];
        for i in 0..dim {
            s[i * dim + i] = 1.0;
        }
        Self::new(dim, s, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn atoms(&self) -> &[JumpAtom] {
        &self.atoms
    }

    /// `ψ(ξ)`.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += xi[i] * self.s[i * d + j] * xi[j];
            }
        }
        let jump: f64 = self
            .atoms
            .iter()
            .map(|a| a.w * (1.0 - dot(xi, &a.y).cos()))
            .sum();
        0.5 * quad + jump
    }

    /// The symbol of `x ↦ u(Px)` for orthogonal `P`: `(PᵀSP, {Pᵀy_i})`.
    pub fn transported(&self, p: &[f64]) -> Result<Self> {
        let d = self.dim;
        if p.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: p.len(),
            });
        }
        let pm = DMatrix::from_row_slice(d, d, p);
        let sm = DMatrix::from_row_slice(d, d, &self.s);
        let t = pm.transpose() * sm * &pm;
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] = 0.5 * (t[(i, j)] + t[(j, i)]);
            }
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| JumpAtom {
                y: (0..d)
                    .map(|i| (0..d).map(|k| p[k * d + i] * a.y[k]).sum())
                    .collect(),
                w: a.w,
            })
            .collect();
        Self::new(d, s, atoms)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ψ(ξ)`; free-function form of [`LevySymbol::eval`].
pub fn symbol_eval(sym: &LevySymbol, xi: &[f64]) -> f64 {
    sym.eval(xi)
}

fn check_dims(sym: &LevySymbol, u: &GridFunction) -> Result<()> {
    if sym.dim != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: sym.dim,
            found: u.dim(),
        });
    }
    Ok(())
}

/// Reject atoms whose `cos(ξ·y)` is undersampled by the frequency grid, i.e.
/// `|y_a| · Δξ_a > π` on some axis (equivalently `|y_a|` beyond half the box).
fn check_aliasing(sym: &LevySymbol, u: &GridFunction) -> Result<()> {
    for a in &sym.atoms {
        for (axis, &y) in a.y.iter().enumerate() {
            let dxi = 2.0 * std::f64::consts::PI / u.box_len(axis);
            if y.abs() * dxi > std::f64::consts::PI {
                return Err(Error::Aliasing(format!(
                    "atom component {y} on axis {axis} exceeds half the box length {}",
                    0.5 * u.box_len(axis)
                )));
            }
        }
    }
    Ok(())
}

/// `(2π)^-d Σ_k |û(ξ_k)|² ψ(ξ_k) Δξ` over the FFT frequency grid.
pub fn energy_fourier(sym: &LevySymbol, u: &GridFunction) -> Result<f64> {
    check_dims(sym, u)?;
    check_aliasing(sym, u)?;
    let spectrum = u.dft();
    let d = u.dim();
    let mut xi = vec![0.0; d];
    let mut total = 0.0;
    for (flat, c) in spectrum.iter().enumerate() {
        let idx = u.unflatten(flat);
        for a in 0..d {
            xi[a] = u.frequency(a, idx[a]);
        }
        total += c.norm_sqr() * sym.eval(&xi);
    }
    // |û|² = h^{2d} |DFT|², Δξ / (2π)^d = 1 / (N h^d)
    Ok(total * u.cell_volume() / u.len() as f64)
}

/// Strongly local and jump parts of the energy computed in physical space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectEnergy {
    pub local: f64,
    pub jump: f64,
    /// Some atom was off the lattice and required multilinear interpolation.
    pub interpolated: bool,
}

impl DirectEnergy {
    pub fn total(&self) -> f64 {
        self.local + self.jump
    }
}

/// Fourth-order central-difference gradient at every node, zero-extended.
fn gradient(u: &GridFunction) -> Vec<Vec<f64>> {
    let d = u.dim();
    let strides = u.strides();
    let h = u.h();
    let vals = u.values();
    (0..d)
        .map(|a| {
            let n = u.shape()[a];
            let st = strides[a];
            (0..u.len())
                .map(|flat| {
                    let k = (flat / st) % n;
                    let at = |off: i64| {
                        let j = k as i64 + off;
                        if j < 0 || j >= n as i64 {
                            0.0
                        } else {
                            vals[(flat as i64 + off * st as i64) as usize]
                        }
                    };
                    (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
                })
                .collect()
        })
        .collect()
}

/// `½ ∫ (S∇u, ∇v) dx`.
fn local_bilinear(sym: &LevySymbol, u: &GridFunction, v: &GridFunction) -> f64 {
    let d = sym.dim;
    if sym.s.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let gu = gradient(u);
    let gv = if std::ptr::eq(u, v) {
        gu.clone()
    } else {
        gradient(v)
    };
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let sij = sym.s[i * d + j];
            if sij == 0.0 {
                continue;
            }
            total += sij * gu[i].iter().zip(&gv[j]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    0.5 * total * u.cell_volume()
}

/// Lattice offset of `y` in units of `h`, if it is one.
fn lattice_offset(y: &[f64], h: f64) -> Option<Vec<i64>> {
    y.iter()
        .map(|&c| {
            let t = c / h;
            let r = t.round();
            ((t - r).abs() <= 1e-9 * r.abs().max(1.0)).then_some(r as i64)
        })
        .collect()
}

/// `u(x + y)` at every node of `u`'s grid (exact shift on the lattice, multilinear
/// interpolation otherwise), plus whether interpolation was used.
fn shifted(u: &GridFunction, y: &[f64]) -> (Vec<f64>, bool) {
    let d = u.dim();
    let lattice = lattice_offset(y, u.h());
    let mut out = Vec::with_capacity(u.len());
    let mut idx = vec![0i64; d];
    let mut x = vec![0.0; d];
    for flat in 0..u.len() {
        let base = u.unflatten(flat);
        match &lattice {
            Some(off) => {
                for a in 0..d {
                    idx[a] = base[a] as i64 + off[a];
                }
                out.push(u.at(&idx));
            }
            None => {
                for a in 0..d {
                    x[a] = u.lo()[a] + u.h() * base[a] as f64 + y[a];
                }
                out.push(u.interpolate(&x));
            }
        }
    }
    (out, lattice.is_none())
}

/// `½ Σ_i w_i Σ_x (u(x + y_i) - u(x))(v(x + y_i) - v(x)) h^d` over the whole lattice.
fn jump_bilinear(sym: &LevySymbol, u: &GridFunction, v: &GridFunction) -> (f64, bool) {
    let mut total = 0.0;
    let mut interpolated = false;
    for a in &sym.atoms {
        let (su, iu) = shifted(u, &a.y);
        let (sv, iv) = if std::ptr::eq(u, v) {
            (su.clone(), iu)
        } else {
            shifted(v, &a.y)
        };
        interpolated |= iu || iv;
        let outside = outside_mass(u, v, &a.y);
        let inner: f64 = su
            .iter()
            .zip(u.values())
            .zip(sv.iter().zip(v.values()))
            .map(|((p, q), (r, s))| (p - q) * (r - s))
            .sum();
        total += 0.5 * a.w * (inner + outside);
    }
    (total * u.cell_volume(), interpolated)
}

/// Terms of `Σ_{x ∈ Z^d} (u(x+y) - u(x))(v(x+y) - v(x))` at nodes `x` outside the box:
/// there `u(x) = v(x) = 0`, leaving `u(z) v(z)` at `z = x + y` inside the box.
fn outside_mass(u: &GridFunction, v: &GridFunction, y: &[f64]) -> f64 {
    let d = u.dim();
    let h = u.h();
    let mut total = 0.0;
    let mut x = vec![0.0; d];
    for flat in 0..u.len() {
        let idx = u.unflatten(flat);
        let mut inside = true;
        for a in 0..d {
            x[a] = u.lo()[a] + h * idx[a] as f64 - y[a];
            let t = (x[a] - u.lo()[a]) / h;
            if t < 0.0 || t > (u.shape()[a] - 1) as f64 {
                inside = false;
            }
        }
        if !inside {
            total += u.values()[flat] * v.values()[flat];
        }
    }
    total
}

/// Polarized physical-space energy `E(u, v)`.
pub fn energy_direct_bilinear(
    sym: &LevySymbol,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<DirectEnergy> {
    check_dims(sym, u)?;
    if !u.same_grid(v) {
        return Err(Error::Grid("u and v must share a grid".into()));
    }
    let local = local_bilinear(sym, u, v);
    let (jump, interpolated) = if sym.atoms.is_empty() {
        (0.0, false)
    } else {
        jump_bilinear(sym, u, v)
    };
    Ok(DirectEnergy {
        local,
        jump,
        interpolated,
    })
}

/// `½∫(S∇u, ∇u) dx` and `½ Σ w_i ∫ (u(x + y_i) - u(x))² dx`.
pub fn energy_direct(sym: &LevySymbol, u: &GridFunction) -> Result<DirectEnergy> {
    energy_direct_bilinear(sym, u, u)
}

/// Eigen-decomposition of `S` with eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    /// Orthogonal, row-major; column `k` is the eigenvector of `eigenvalues[k]`.
    pub p: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues above `RANK_THRESHOLD · max`.
    pub rank: usize,
    /// `max |PᵀSP - diag|`.
    pub reconstruction_error: f64,
}

pub fn diagonalize(sym: &LevySymbol) -> Diagonalization {
    let d = sym.dim;
    let sm = DMatrix::from_row_slice(d, d, &sym.s);
    let eig = SymmetricEigen::new(sm.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let pm = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    let t = pm.transpose() * sm * &pm;
    let mut reconstruction_error = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { eigenvalues[i] } else { 0.0 };
            reconstruction_error = reconstruction_error.max((t[(i, j)] - want).abs());
        }
    }
    let max = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let rank = eigenvalues
        .iter()
        .filter(|&&l| max > 0.0 && l > RANK_THRESHOLD * max)
        .count();
    let mut p = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            p[i * d + j] = pm[(i, j)];
        }
    }
    Diagonalization {
        p,
        eigenvalues,
        rank,
        reconstruction_error,
    }
}

/// Outcome of [`local_positivity_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub enum PositivityCertificate {
    /// Every eligible fixture has strictly positive local energy.
    Positive { eligible: usize },
    /// The fixture at `index` varies along a positive direction of `S` but has zero
    /// local energy.
    Failed { index: usize, local: f64 },
    /// `S = 0`: the form has no strongly local part and no fixture is eligible.
    NoLocalPart,
}

impl PositivityCertificate {
    pub fn holds(&self) -> bool {
        !matches!(self, PositivityCertificate::Failed { .. })
    }
}

/// Witness that the strongly local part cannot vanish on functions varying along the
/// range of `S`.
///
/// A fixture is eligible when `Σ_x |P_kᵀ∇u(x)|² h^d` is non-negligible for some
/// eigenvector `P_k` with positive eigenvalue.
pub fn local_positivity_certificate(
    sym: &LevySymbol,
    fixtures: &[GridFunction],
) -> Result<PositivityCertificate> {
    let diag = diagonalize(sym);
    if diag.rank == 0 {
        return Ok(PositivityCertificate::NoLocalPart);
    }
    let d = sym.dim;
    let mut eligible = 0;
    for (index, u) in fixtures.iter().enumerate() {
        check_dims(sym, u)?;
        let g = gradient(u);
        let total: f64 = g.iter().flat_map(|c| c.iter()).map(|x| x * x).sum();
        let along: f64 = (0..diag.rank)
            .map(|k| {
                (0..u.len())
                    .map(|n| {
                        let c: f64 = (0..d).map(|i| diag.p[i * d + k] * g[i][n]).sum();
                        c * c
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if !(along > 1e-12 * total.max(f64::MIN_POSITIVE)) || total == 0.0 {
            continue;
        }
        eligible += 1;
        let local = local_bilinear(sym, u, u);
        if !(local > 0.0) {
            return Ok(PositivityCertificate::Failed { index, local });
        }
    }
    Ok(PositivityCertificate::Positive { eligible })
}

/// `|E(u, v) + 2∫∫ u(x) v(y) J(dx, dy)|` for disjointly supported `u`, `v`, with
/// `J(dx, dy) = ½ Σ w_i δ_{x + y_i}(dy) dx`.
///
/// The left term is the polarized [`energy_direct_bilinear`] on the nodes; the right
/// term `Σ w_i ∫ u(x - y_i) v(x) dx` uses the midpoint rule on cell centres, so the
/// residual measures the discretization error and vanishes under refinement.
pub fn pairing_identity_residual(
    sym: &LevySymbol,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<f64> {
    check_dims(sym, u)?;
    if !u.same_grid(v) {
        return Err(Error::Grid("u and v must share a grid".into()));
    }
    if u.values()
        .iter()
        .zip(v.values())
        .any(|(a, b)| *a != 0.0 && *b != 0.0)
    {
        return Err(Error::Precondition("supports of u and v overlap".into()));
    }
    let e = energy_direct_bilinear(sym, u, v)?.total();
    Ok((e + kernel_pairing(sym, u, v)).abs())
}

/// `Σ_i w_i ∫ u(x - y_i) v(x) dx` by the midpoint rule on the cell centres, with both
/// factors interpolated. Independent of the nodal sums used by the direct energy.
fn kernel_pairing(sym: &LevySymbol, u: &GridFunction, v: &GridFunction) -> f64 {
    let d = u.dim();
    let h = u.h();
    let cells: Vec<usize> = u.shape().iter().map(|n| n - 1).collect();
    let count: usize = cells.iter().product();
    let mut c = vec![0.0; d];
    let mut back = vec![0.0; d];
    let mut total = 0.0;
    for flat in 0..count {
        let mut rem = flat;
        for a in (0..d).rev() {
            let k = rem % cells[a];
            rem /= cells[a];
            c[a] = u.lo()[a] + h * (k as f64 + 0.5);
        }
        let vc = v.interpolate(&c);
        if vc == 0.0 {
            continue;
        }
        for atom in &sym.atoms {
            for a in 0..d {
                back[a] = c[a] - atom.y[a];
            }
            total += atom.w * u.interpolate(&back) * vc;
        }
    }
    total * u.cell_volume()
}
