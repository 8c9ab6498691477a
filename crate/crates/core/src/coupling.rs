//! Independent couplings of one-dimensional subspaces.
//!
//! For `u = f_1 ⊗ ⋯ ⊗ f_d` the product form is
//! `E(u, u) = Σ_i E^(s_i)(f_i, f_i) Π_{j≠i} ‖f_j‖²`, with `L²(dx)` norms. It is a proper
//! regular subspace of the `d`-dimensional Brownian form as soon as one component has a
//! flat set of positive measure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms1d::{dirichlet_nodes, energy_es, CoreFunction};
use crate::quadrature::normalize_breaks;
use crate::scale::{image_of_lebesgue, stieltjes_integrate_with, Interval, ScaleFunction};

/// One coordinate: a scale function on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub scale: Arc<ScaleFunction>,
    pub interval: Interval,
}

/// `d ≥ 1` independent components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Component>", into = "Vec<Component>")]
pub struct ProductForm {
    components: Vec<Component>,
}

impl TryFrom<Vec<Component>> for ProductForm {
    type Error = Error;

    fn try_from(components: Vec<Component>) -> Result<Self> {
        ProductForm::new(components)
    }
}

impl From<ProductForm> for Vec<Component> {
    fn from(p: ProductForm) -> Self {
        p.components
    }
}

impl ProductForm {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "need at least one component"));
        }
        for c in &components {
            if !(c.interval.lo < c.interval.hi) {
                return Err(Error::invalid(
                    "interval",
                    "component intervals must be non-empty",
                ));
            }
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }
}

/// `f_1 ⊗ ⋯ ⊗ f_d`.
#[derive(Debug, Clone)]
pub struct TensorFunction {
    factors: Vec<CoreFunction>,
}

impl TensorFunction {
    pub fn new(factors: Vec<CoreFunction>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("factors", "need at least one factor"));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[CoreFunction] {
        &self.factors
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(x)
            .map(|(f, &xi)| f.eval(xi))
            .product()
    }
}

fn check_factors(p: &ProductForm, u: &TensorFunction) -> Result<()> {
    if u.factors.len() != p.dim() {
        return Err(Error::Precondition(format!(
            "{} factors for a {}-dimensional product form",
            u.factors.len(),
            p.dim()
        )));
    }
    for (i, (f, c)) in u.factors.iter().zip(&p.components).enumerate() {
        if **f.scale() != *c.scale {
            return Err(Error::Precondition(format!(
                "factor {i} uses a different scale function than its component"
            )));
        }
        let sup = f.support_closure_x();
        if !(c.interval.lo <= sup.lo && sup.hi <= c.interval.hi) {
            return Err(Error::Precondition(format!(
                "factor {i} is not supported inside [{}, {}]",
                c.interval.lo, c.interval.hi
            )));
        }
    }
    Ok(())
}

/// `‖f‖²_{L²(dx)} = ∫ φ(y)² d(s_* dx)(y)`: exact over flat intervals (atoms of the image
/// measure), Gauss–Legendre elsewhere.
pub fn l2_norm_sq(f: &CoreFunction, quad_n: usize) -> Result<f64> {
    let w = f.support_x();
    if !(w.lo < w.hi) {
        return Ok(0.0);
    }
    let mu = image_of_lebesgue(f.scale(), w.lo, w.hi)?;
    let j = mu.window();
    let breaks = normalize_breaks(j.lo, j.hi, f.profile().breakpoints());
    let mu = mu.with_breaks(breaks.iter().copied());
    let panels = quad_n.div_ceil(breaks.len().max(2) - 1).max(1);
    let phi = f.profile();
    Ok(stieltjes_integrate_with(
        |y| phi.value(y).powi(2),
        &mu,
        panels,
        6,
    ))
}

/// `Σ_i E^(s_i)(f_i, f_i) Π_{j≠i} ‖f_j‖²`.
pub fn product_energy(p: &ProductForm, u: &TensorFunction, quad_n: usize) -> Result<f64> {
    check_factors(p, u)?;
    let energies = u
        .factors
        .iter()
        .map(|f| energy_es(f, quad_n))
        .collect::<Result<Vec<_>>>()?;
    let norms = u
        .factors
        .iter()
        .map(|f| l2_norm_sq(f, quad_n))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..p.dim())
        .map(|i| {
            energies[i]
                * norms
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, n)| n)
                    .product::<f64>()
        })
        .sum())
}

/// Brownian energy `½ ∫ |∇u|² dx` of a two-factor tensor by finite differences on the
/// full 2-d product mesh: staggered differences along one axis, trapezoid weights along
/// the other. Each axis uses the mesh of [`dirichlet_nodes`].
pub fn dirichlet_energy_2d(u: &TensorFunction, grid_n: usize) -> Result<f64> {
    if u.factors.len() != 2 {
        return Err(Error::Precondition(
            "the 2-d oracle needs exactly two factors".into(),
        ));
    }
    let axes: Vec<(Vec<f64>, Vec<f64>)> = u
        .factors
        .iter()
        .map(|f| {
            let nodes = dirichlet_nodes(f, grid_n);
            let vals = nodes.iter().map(|&x| f.eval(x)).collect();
            (nodes, vals)
        })
        .collect();
    let trapezoid = |nodes: &[f64]| -> Vec<f64> {
        let n = nodes.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
                let right = if i + 1 < n {
                    nodes[i + 1] - nodes[i]
                } else {
                    0.0
                };
                0.5 * (left + right)
            })
            .collect()
    };
    let (x, ux) = (&axes[0].0, &axes[0].1);
    let (y, uy) = (&axes[1].0, &axes[1].1);
    let (wx, wy) = (trapezoid(x), trapezoid(y));
    let mut total = 0.0;
    for j in 0..y.len() {
        for i in 0..x.len().saturating_sub(1) {
            let d = ux[i + 1] * uy[j] - ux[i] * uy[j];
            total += d * d / (x[i + 1] - x[i]) * wy[j];
        }
    }
    for i in 0..x.len() {
        for j in 0..y.len().saturating_sub(1) {
            let d = ux[i] * uy[j + 1] - ux[i] * uy[j];
            total += d * d / (y[j + 1] - y[j]) * wx[i];
        }
    }
    Ok(0.5 * total)
}

/// Flat masses `|E_{s_i} ∩ I_i|` and the resulting properness verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Properness {
    pub flat_masses: Vec<f64>,
    /// Some component has a flat set of positive measure.
    pub proper: bool,
}

pub fn properness_certificate(p: &ProductForm) -> Properness {
    let flat_masses: Vec<f64> = p
        .components
        .iter()
        .map(|c| c.scale.flat_mass(c.interval.lo, c.interval.hi))
        .collect();
    let proper = flat_masses.iter().any(|&m| m > 0.0);
    Properness {
        flat_masses,
        proper,
    }
}

/// Membership test for the core of the part form on an open rectangle `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectanglePart {
    sides: Vec<Interval>,
    domain: Vec<Interval>,
}

impl RectanglePart {
    /// `u` is admitted iff every factor's support lies inside the open side of `G`. An
    /// end of `G` that coincides with an end of the component interval is an end of the
    /// whole space, where tensor factors are supported by construction, so the support may
    /// reach it.
    pub fn admits(&self, u: &TensorFunction) -> bool {
        u.factors.len() == self.sides.len()
            && u.factors
                .iter()
                .zip(self.sides.iter().zip(&self.domain))
                .all(|(f, (g, i))| {
                    let sup = f.support_closure_x();
                    let lo_ok = sup.lo > g.lo || (g.lo == i.lo && sup.lo >= g.lo);
                    let hi_ok = sup.hi < g.hi || (g.hi == i.hi && sup.hi <= g.hi);
                    lo_ok && hi_ok
                })
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }
}

/// Restrict to the open rectangle `G = Π (a_i, b_i)`, which must lie in the product of
/// component intervals.
pub fn rectangle_part_core(p: &ProductForm, sides: Vec<Interval>) -> Result<RectanglePart> {
    if sides.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: sides.len(),
        });
    }
    for (g, c) in sides.iter().zip(&p.components) {
        if !(c.interval.lo <= g.lo && g.hi <= c.interval.hi && g.lo < g.hi) {
            return Err(Error::Precondition(format!(
                "side ({}, {}) leaves the component interval [{}, {}]",
                g.lo, g.hi, c.interval.lo, c.interval.hi
            )));
        }
    }
    Ok(RectanglePart {
        sides,
        domain: p.components.iter().map(|c| c.interval).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms1d::Profile;

    fn identity_component() -> Component {
        Component {
            scale: Arc::new(ScaleFunction::identity()),
            interval: Interval { lo: 0.0, hi: 1.0 },
        }
    }

    fn bump(scale: &Arc<ScaleFunction>, c: f64, r: f64) -> CoreFunction {
        CoreFunction::new(Profile::bump(c, r, 1.0).unwrap(), scale.clone()).unwrap()
    }

    /// `∫ (1 - z²)⁴` over the support: `r · 256/315`.
    fn bump_norm_sq(r: f64) -> f64 {
        r * 256.0 / 315.0
    }

    #[test]
    fn one_dimension_reduces_to_energy_es() {
        let p = ProductForm::new(vec![identity_component()]).unwrap();
        let f = bump(&p.components()[0].scale, 0.5, 0.3);
        let u = TensorFunction::new(vec![f.clone()]).unwrap();
        assert_eq!(
            product_energy(&p, &u, 64).unwrap(),
            energy_es(&f, 64).unwrap()
        );
    }

    #[test]
    fn l2_norm_closed_form() {
        let s = Arc::new(ScaleFunction::identity());
        let f = bump(&s, 0.5, 0.3);
        assert!((l2_norm_sq(&f, 64).unwrap() - bump_norm_sq(0.3)).abs() < 1e-14);
    }

    #[test]
    fn l2_norm_counts_flat_intervals() {
        // hat at height 1 over the single gap (3/8, 5/8) of the depth-1 construction
        let s = Arc::new(ScaleFunction::fat_cantor(0.5, 1).unwrap());
        let phi = Profile::hat(0.25, 0.375, 0.5, 1.0).unwrap();
        let f = CoreFunction::new(phi, s).unwrap();
        // two linear ramps of length 1/8 (∫ = 1/24 each) plus the plateau of length 1/4
        let want = 2.0 / 24.0 + 0.25;
        assert!((l2_norm_sq(&f, 64).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn two_identity_components_match_oracle() {
        let p = ProductForm::new(vec![identity_component(), identity_component()]).unwrap();
        let s = p.components()[0].scale.clone();
        let f = bump(&s, 0.45, 0.3);
        let u = TensorFunction::new(vec![f.clone(), f.clone()]).unwrap();
        let e = product_energy(&p, &u, 64).unwrap();
        let closed = 2.0 * energy_es(&f, 64).unwrap() * bump_norm_sq(0.3);
        assert!((e - closed).abs() < 1e-12 * closed);
        let fd = dirichlet_energy_2d(&u, 512).unwrap();
        assert!((e - fd).abs() / e < 1e-3, "{e} vs {fd}");
    }

    #[test]
    fn zero_factor_gives_zero() {
        let p = ProductForm::new(vec![identity_component(), identity_component()]).unwrap();
        let s = p.components()[0].scale.clone();
        let zero = CoreFunction::new(Profile::bump(0.5, 0.2, 1.0).unwrap().scaled(0.0), s.clone())
            .unwrap();
        let u = TensorFunction::new(vec![bump(&s, 0.5, 0.3), zero]).unwrap();
        assert_eq!(product_energy(&p, &u, 64).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = ProductForm::new(vec![identity_component(), identity_component()]).unwrap();
        let s = p.components()[0].scale.clone();
        let u = TensorFunction::new(vec![bump(&s, 0.5, 0.3)]).unwrap();
        assert!(matches!(
            product_energy(&p, &u, 64),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn properness_examples() {
        let p = ProductForm::new(vec![identity_component(), identity_component()]).unwrap();
        let c = properness_certificate(&p);
        assert_eq!(c.flat_masses, vec![0.0, 0.0]);
        assert!(!c.proper);
        for n in [1, 5, 12] {
            let fat = Component {
                scale: Arc::new(ScaleFunction::fat_cantor(0.5, n).unwrap()),
                interval: Interval { lo: 0.0, hi: 1.0 },
            };
            let c =
                properness_certificate(&ProductForm::new(vec![identity_component(), fat]).unwrap());
            assert_eq!(c.flat_masses[1], 0.5 * (1.0 - 0.5f64.powi(n as i32)));
            assert!(c.proper);
        }
        let inv = Component {
            scale: Arc::new(ScaleFunction::inverse_cantor(6).unwrap()),
            interval: Interval { lo: 0.0, hi: 2.0 },
        };
        let c = properness_certificate(&ProductForm::new(vec![inv]).unwrap());
        assert_eq!(c.flat_masses, vec![1.0]);
    }

    #[test]
    fn rectangle_membership() {
        let p = ProductForm::new(vec![identity_component()]).unwrap();
        let s = p.components()[0].scale.clone();
        let wide = TensorFunction::new(vec![bump(&s, 0.5, 0.5)]).unwrap();
        let narrow = TensorFunction::new(vec![bump(&s, 0.25, 0.15)]).unwrap();
        let full = rectangle_part_core(&p, vec![Interval { lo: 0.0, hi: 1.0 }]).unwrap();
        assert!(full.admits(&wide) && full.admits(&narrow));
        let half = rectangle_part_core(&p, vec![Interval { lo: 0.0, hi: 0.5 }]).unwrap();
        assert!(!half.admits(&wide));
        assert!(half.admits(&narrow));
        assert!(rectangle_part_core(&p, vec![Interval { lo: -1.0, hi: 0.5 }]).is_err());
    }

    #[test]
    fn json_is_a_component_list() {
        let p = ProductForm::new(vec![identity_component()]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with(r#"[{"scale":{"family":"identity""#));
        let back: ProductForm = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
