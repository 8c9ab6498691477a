//! Energies of the one-dimensional regular subspaces.
//!
//! For a scale function `s` the subspace form is
//! `E^(s)(u, u) = ½ ∫ (du/ds)² ds` on functions `u = φ ∘ s`. With `du/ds = φ' ∘ s` this is
//! the image-measure integral `½ ∫_J φ'(y)² dy` over `J = s(I)`. When `s' ∈ {0, 1}` a.e.
//! it coincides with the Brownian energy `½ ∫ u'(x)² dx`, which is what
//! [`verify_subspace_identity`] checks numerically.

mod profile;

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{normalize_breaks, GaussLegendre};
use crate::scale::{stieltjes_integrate_with, stieltjes_measure, MonotoneFn, ScaleFunction};

pub use crate::scale::Interval;
pub use profile::Profile;

/// Gauss–Legendre order used on every panel.
const GL_ORDER: usize = 6;
/// Floor of the relative residual denominator.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// `u = φ ∘ s` with `φ` a compactly supported profile on `J = s(I)`.
#[derive(Debug, Clone)]
pub struct CoreFunction {
    profile: Profile,
    scale: Arc<ScaleFunction>,
}

impl CoreFunction {
    pub fn new(profile: Profile, scale: Arc<ScaleFunction>) -> Result<Self> {
        profile.validate()?;
        let sup = profile.support();
        let range = scale.range();
        if !(range.lo <= sup.lo && sup.hi <= range.hi) {
            return Err(Error::invalid(
                "profile",
                format!(
                    "support [{}, {}] leaves s(I) = [{}, {}]",
                    sup.lo, sup.hi, range.lo, range.hi
                ),
            ));
        }
        Ok(Self { profile, scale })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn scale(&self) -> &Arc<ScaleFunction> {
        &self.scale
    }

    /// `u(x) = φ(s(x))`.
    pub fn eval(&self, x: f64) -> f64 {
        self.profile.value(self.scale.eval(x))
    }

    /// `du/ds(x) = φ'(s(x))`, exact.
    pub fn du_ds(&self, x: f64) -> f64 {
        self.profile.slope(self.scale.eval(x))
    }

    /// Support of `φ` in `J`.
    pub fn support_y(&self) -> Interval {
        self.profile.support()
    }

    /// An x-interval outside which `u ≡ 0`.
    pub fn support_x(&self) -> Interval {
        let j = self.support_y();
        Interval {
            lo: self.scale.invert(j.lo),
            hi: self.scale.invert(j.hi),
        }
    }

    /// Closure of `{u ≠ 0}`: like [`CoreFunction::support_x`] but skipping a flat interval
    /// at the lower level, on which `u` vanishes.
    pub fn support_closure_x(&self) -> Interval {
        let w = self.support_x();
        let lo = self
            .scale
            .flat_intervals_in(w.lo, w.lo)
            .and_then(|g| g.into_iter().find(|g| g.left == w.lo))
            .map_or(w.lo, |g| g.right);
        Interval { lo, hi: w.hi }
    }

    /// Profile breakpoints pulled back to the x-line.
    fn x_breaks(&self) -> Vec<f64> {
        self.profile
            .breakpoints()
            .into_iter()
            .map(|y| self.scale.invert(y))
            .collect()
    }
}

/// The two quadrature routes for `E^(s)(u, v)` and their agreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRoutes {
    /// `½ ∫_J φ' ψ' dy`.
    pub image: f64,
    /// `½ ∫ (φ' ∘ s)(ψ' ∘ s) ds` as a Stieltjes integral in `x`.
    pub stieltjes: f64,
    /// Halving-based quadrature error estimate of both routes combined.
    pub error_bound: f64,
}

fn same_scale(u: &CoreFunction, v: &CoreFunction) -> Result<()> {
    if Arc::ptr_eq(&u.scale, &v.scale) || u.scale == v.scale {
        Ok(())
    } else {
        Err(Error::Precondition(
            "u and v must share the scale function".into(),
        ))
    }
}

fn image_route(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> f64 {
    let (su, sv) = (u.support_y(), v.support_y());
    let (lo, hi) = (su.lo.max(sv.lo), su.hi.min(sv.hi));
    if !(lo < hi) {
        return 0.0;
    }
    let extra = u
        .profile
        .breakpoints()
        .into_iter()
        .chain(v.profile.breakpoints());
    let breaks = normalize_breaks(lo, hi, extra);
    let panels = quad_n.div_ceil(breaks.len() - 1).max(1);
    GaussLegendre::new(GL_ORDER).composite(&breaks, panels, |y| {
        0.5 * u.profile.slope(y) * v.profile.slope(y)
    })
}

fn stieltjes_route(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> Result<f64> {
    let (su, sv) = (u.support_x(), v.support_x());
    let window = Interval {
        lo: su.lo.max(sv.lo),
        hi: su.hi.min(sv.hi),
    };
    if !(window.lo < window.hi) {
        return Ok(0.0);
    }
    let mu = stieltjes_measure(MonotoneFn::Scale(&u.scale), window)?
        .with_breaks(u.x_breaks().into_iter().chain(v.x_breaks()));
    let pieces = mu.pieces().filter(|p| p.2 != 0.0).count().max(1);
    let panels = quad_n.div_ceil(pieces).max(1);
    let s = &u.scale;
    Ok(stieltjes_integrate_with(
        |x| {
            let y = s.eval(x);
            0.5 * u.profile.slope(y) * v.profile.slope(y)
        },
        &mu,
        panels,
        GL_ORDER,
    ))
}

/// Both routes at `quad_n` and `quad_n / 2`, cross-checked.
pub fn energy_routes(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> Result<EnergyRoutes> {
    if quad_n < 16 {
        return Err(Error::invalid("quad_n", "must be at least 16"));
    }
    same_scale(u, v)?;
    let image = image_route(u, v, quad_n);
    let image_half = image_route(u, v, quad_n / 2);
    let stieltjes = stieltjes_route(u, v, quad_n)?;
    let stieltjes_half = stieltjes_route(u, v, quad_n / 2)?;
    let error_bound = (image - image_half).abs() + (stieltjes - stieltjes_half).abs();
    let slack = 8.0 * error_bound + 1e-10 * image.abs().max(1.0);
    if (image - stieltjes).abs() > slack {
        return Err(Error::NumericConsistency(format!(
            "image-measure energy {image} and Stieltjes energy {stieltjes} differ by more than {slack}"
        )));
    }
    Ok(EnergyRoutes {
        image,
        stieltjes,
        error_bound,
    })
}

/// `E^(s)(u, u) = ½ ∫ (du/ds)² ds`.
pub fn energy_es(u: &CoreFunction, quad_n: usize) -> Result<f64> {
    Ok(energy_routes(u, u, quad_n)?.image)
}

/// The bilinear form `E^(s)(u, v)`.
pub fn energy_es_bilinear(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> Result<f64> {
    Ok(energy_routes(u, v, quad_n)?.image)
}

/// Mesh spacing used by [`dirichlet_energy`]: `min(L / grid_n, gap_min / 8)`.
pub fn dirichlet_step(u: &CoreFunction, grid_n: usize) -> f64 {
    let w = u.support_x();
    let mut h = w.len() / grid_n.max(1) as f64;
    if let Some(g) = u.scale.min_flat_len_in(w.lo, w.hi) {
        if g > 0.0 {
            h = h.min(g / 8.0);
        }
    }
    h
}

/// Brownian energy `½ ∫ u'(x)² dx` from difference quotients of `u` alone.
///
/// The mesh is uniform with the spacing of [`dirichlet_step`], refined by the endpoints of
/// the flat intervals and the pulled-back profile breakpoints so that no cell straddles a
/// kink of `u`. The energy is `½ Σ (u(x_{i+1}) - u(x_i))² / (x_{i+1} - x_i)`, the
/// midpoint-rule integral of central difference quotients.
pub fn dirichlet_energy(u: &CoreFunction, grid_n: usize) -> f64 {
    let mut acc = Neumaier::default();
    let mut prev: Option<(f64, f64)> = None;
    for_each_node(u, grid_n, |x| {
        let ux = u.eval(x);
        if let Some((x0, u0)) = prev {
            acc.add(0.5 * (ux - u0) * (ux - u0) / (x - x0));
        }
        prev = Some((x, ux));
    });
    acc.total()
}

/// The mesh used by [`dirichlet_energy`], covering [`CoreFunction::support_x`].
pub fn dirichlet_nodes(u: &CoreFunction, grid_n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_node(u, grid_n, |x| out.push(x));
    out
}

/// Visit the mesh nodes in increasing order.
fn for_each_node<F: FnMut(f64)>(u: &CoreFunction, grid_n: usize, mut visit: F) {
    let w = u.support_x();
    if !(w.lo < w.hi) {
        return;
    }
    let h = dirichlet_step(u, grid_n);
    let steps = (w.len() / h).ceil().max(1.0) as usize;
    let h = w.len() / steps as f64;
    let mut special: Vec<f64> = u
        .scale
        .flat_intervals_in(w.lo, w.hi)
        .unwrap_or_default()
        .into_iter()
        .flat_map(|g| [g.left, g.right])
        .chain(u.x_breaks())
        .filter(|&x| x > w.lo && x < w.hi)
        .collect();
    special.sort_by(|a, b| a.total_cmp(b));
    special.dedup();

    let mut last = w.lo;
    visit(last);
    let mut k = 0;
    for i in 1..=steps {
        let grid = if i == steps {
            w.hi
        } else {
            w.lo + h * i as f64
        };
        while k < special.len() && special[k] < grid {
            let x = special[k];
            k += 1;
            if x > last {
                visit(x);
                last = x;
            }
        }
        if grid > last {
            visit(grid);
            last = grid;
        }
    }
}

/// Compensated summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One row of an energy sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub depth: Option<u32>,
    pub grid_n: usize,
    #[serde(rename = "E_s")]
    pub energy_es: f64,
    #[serde(rename = "D")]
    pub dirichlet: f64,
    pub residual: f64,
}

/// Compare `E^(s)(u)` with the Brownian energy at one resolution.
pub fn compare_energies(u: &CoreFunction, grid_n: usize, quad_n: usize) -> Result<SweepRow> {
    let e = energy_es(u, quad_n)?;
    let d = dirichlet_energy(u, grid_n);
    Ok(SweepRow {
        family: u.scale.family().name().to_string(),
        depth: u.scale.depth(),
        grid_n,
        energy_es: e,
        dirichlet: d,
        residual: (e - d).abs() / e.abs().max(RESIDUAL_FLOOR),
    })
}

/// Outcome of [`verify_subspace_identity`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityVerdict {
    pub rows: Vec<SweepRow>,
    /// Residual at the finest sweep point.
    pub residual: f64,
    /// Residuals never increase along the sweep.
    pub monotone: bool,
    pub converged: bool,
}

/// Check `E^(s) = ½ D` along a sweep of core functions (typically one per depth, coarse
/// to fine). Converged means unit slopes for every scale, monotone decrease and a final
/// residual below `tol`.
pub fn verify_subspace_identity(
    sweep: &[CoreFunction],
    grid_n: usize,
    quad_n: usize,
    tol: f64,
) -> Result<IdentityVerdict> {
    if sweep.is_empty() {
        return Err(Error::invalid("sweep", "need at least one core function"));
    }
    let rows = sweep
        .iter()
        .map(|u| compare_energies(u, grid_n, quad_n))
        .collect::<Result<Vec<_>>>()?;
    let residual = rows.last().unwrap().residual;
    let monotone = rows.windows(2).all(|w| w[1].residual <= w[0].residual);
    let unit = sweep.iter().all(|u| u.scale.has_unit_slopes());
    Ok(IdentityVerdict {
        residual,
        monotone,
        converged: unit && monotone && residual < tol,
        rows,
    })
}

/// Write sweep rows as CSV with header `family,depth,grid_n,E_s,D,residual`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `|E^(s)(u, v) + ∫ (A u) v dx|` with `A u(x) = ½ φ''(s(x)) s'(x)` and the exact flat-set
/// indicator carried by `s'`.
pub fn weak_generator_residual(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> Result<f64> {
    if !u.profile.is_c1() {
        return Err(Error::UnsupportedProfile(
            "generator pairing needs a C¹ profile with piecewise second derivative".into(),
        ));
    }
    let e = energy_es_bilinear(u, v, quad_n)?;
    Ok((e + generator_pairing(u, v, quad_n)?).abs())
}

/// `∫ (A u)(x) v(x) dx`.
pub fn generator_pairing(u: &CoreFunction, v: &CoreFunction, quad_n: usize) -> Result<f64> {
    same_scale(u, v)?;
    let (su, sv) = (u.support_x(), v.support_x());
    let window = Interval {
        lo: su.lo.max(sv.lo),
        hi: su.hi.min(sv.hi),
    };
    if !(window.lo < window.hi) {
        return Ok(0.0);
    }
    let mu = stieltjes_measure(MonotoneFn::Scale(&u.scale), window)?
        .with_breaks(u.x_breaks().into_iter().chain(v.x_breaks()));
    let pieces = mu.pieces().filter(|p| p.2 != 0.0).count().max(1);
    let panels = quad_n.div_ceil(pieces).max(1);
    let s = &u.scale;
    Ok(stieltjes_integrate_with(
        |x| {
            let y = s.eval(x);
            0.5 * u.profile.curvature(y) * v.profile.value(y)
        },
        &mu,
        panels,
        GL_ORDER,
    ))
}
