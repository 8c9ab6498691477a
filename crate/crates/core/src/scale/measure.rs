//! Lebesgue–Stieltjes measures of monotone functions at finite depth.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

use super::{cantor, Family, Interval, ScaleFunction};

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A measure on a window: piecewise-constant Lebesgue density plus finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMeasure {
    window: Interval,
    breaks: Vec<f64>,
    density: Vec<f64>,
    atoms: Vec<Atom>,
    cum_atoms: Vec<f64>,
    depth: Option<u32>,
}

impl MonotoneMeasure {
    /// Build from density pieces `[breaks[i], breaks[i+1])` with value `density[i]`.
    pub fn new(
        breaks: Vec<f64>,
        density: Vec<f64>,
        mut atoms: Vec<Atom>,
        depth: Option<u32>,
    ) -> Result<Self> {
        if breaks.len() != density.len() + 1 || breaks.len() < 2 {
            return Err(Error::invalid("breaks", "need one more break than pieces"));
        }
        if breaks.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::invalid("breaks", "must be sorted"));
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid("density", "must be non-negative"));
        }
        if atoms
            .iter()
            .any(|a| !(a.mass >= 0.0) || !a.location.is_finite())
        {
            return Err(Error::invalid("atoms", "masses must be non-negative"));
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut cum_atoms = Vec::with_capacity(atoms.len() + 1);
        cum_atoms.push(0.0);
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.mass;
            cum_atoms.push(acc);
        }
        let window = Interval {
            lo: breaks[0],
            hi: *breaks.last().unwrap(),
        };
        Ok(Self {
            window,
            breaks,
            density,
            atoms,
            cum_atoms,
            depth,
        })
    }

    /// Lebesgue measure with constant density on `window`.
    pub fn uniform(window: Interval, density: f64) -> Result<Self> {
        Self::new(vec![window.lo, window.hi], vec![density], Vec::new(), None)
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn depth(&self) -> Option<u32> {
        self.depth
    }

    /// Density pieces as `(left, right, value)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks
            .windows(2)
            .zip(&self.density)
            .map(|(w, &d)| (w[0], w[1], d))
    }

    /// Lebesgue density at `y` (zero outside the window).
    pub fn density_at(&self, y: f64) -> f64 {
        if !(y >= self.window.lo && y < self.window.hi) {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= y);
        self.density[i.saturating_sub(1).min(self.density.len() - 1)]
    }

    pub fn lebesgue_part_mass(&self) -> f64 {
        self.pieces().map(|(a, b, d)| d * (b - a)).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        *self.cum_atoms.last().unwrap()
    }

    pub fn total_mass(&self) -> f64 {
        self.lebesgue_part_mass() + self.atom_mass()
    }

    /// Atom mass on the closed interval `[lo, hi]`.
    pub fn atom_mass_in(&self, lo: f64, hi: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.location < lo);
        let j = self.atoms.partition_point(|a| a.location <= hi);
        if j <= i {
            0.0
        } else {
            self.cum_atoms[j] - self.cum_atoms[i]
        }
    }

    /// Atom mass within `ε` of `y`, divided by `2ε`: the ε-band smoothing of the atomic part.
    pub fn band_density(&self, y: f64, eps: f64) -> f64 {
        self.atom_mass_in(y - eps, y + eps) / (2.0 * eps)
    }

    /// Mass of the half-open interval `[a, b)`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        let leb: f64 = self
            .pieces()
            .map(|(l, r, d)| d * (r.min(b) - l.max(a)).max(0.0))
            .sum();
        let i = self.atoms.partition_point(|x| x.location < a);
        let j = self.atoms.partition_point(|x| x.location < b);
        let at = if j > i {
            self.cum_atoms[j] - self.cum_atoms[i]
        } else {
            0.0
        };
        leb + at
    }

    /// Split density pieces at the given points (the measure is unchanged).
    pub fn with_breaks(mut self, extra: impl IntoIterator<Item = f64>) -> Self {
        let mut pts: Vec<f64> = extra
            .into_iter()
            .filter(|&x| x > self.window.lo && x < self.window.hi)
            .collect();
        if pts.is_empty() {
            return self;
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        let mut breaks = Vec::with_capacity(self.breaks.len() + pts.len());
        let mut density = Vec::with_capacity(self.density.len() + pts.len());
        let mut k = 0;
        for (i, &d) in self.density.iter().enumerate() {
            let (a, b) = (self.breaks[i], self.breaks[i + 1]);
            breaks.push(a);
            density.push(d);
            while k < pts.len() && pts[k] <= a {
                k += 1;
            }
            while k < pts.len() && pts[k] < b {
                breaks.push(pts[k]);
                density.push(d);
                k += 1;
            }
        }
        breaks.push(self.window.hi);
        self.breaks = breaks;
        self.density = density;
        self
    }
}

/// The monotone functions whose Stieltjes measures are supported.
#[derive(Debug, Clone, Copy)]
pub enum MonotoneFn<'a> {
    /// `ds` on an x-window: density `s'` (0 on flats, 1 elsewhere; `c` for affine).
    Scale(&'a ScaleFunction),
    /// `ds^{-1}` on a y-window: density `1` (or `1/c`) plus one atom per flat level,
    /// atom mass = flat length.
    InverseScale(&'a ScaleFunction),
    /// Depth-`n` Cantor measure on `[0, 1]`: `2^n` atoms of mass `2^-n` at the midpoints of
    /// the surviving triadic intervals.
    Cantor { depth: u32 },
}

/// Lebesgue–Stieltjes measure of `f` on the half-open window `[lo, hi)`.
///
/// Masses telescope: `total_mass() == f(hi) - f(lo)` up to rounding (exactly for
/// dyadic fat-Cantor data), with the left-endpoint convention at flat levels.
pub fn stieltjes_measure(f: MonotoneFn<'_>, window: Interval) -> Result<MonotoneMeasure> {
    if !window.is_finite() {
        return Err(Error::invalid("window", "must be bounded"));
    }
    match f {
        MonotoneFn::Scale(s) => {
            if let Family::AffineSlope { slope } = s.family() {
                return MonotoneMeasure::uniform(window, slope);
            }
            let flats = s
                .flat_intervals_in(window.lo, window.hi)
                .ok_or_else(|| Error::Precondition("flat intervals not stored".into()))?;
            let mut breaks = vec![window.lo];
            let mut density = Vec::new();
            let mut cursor = window.lo;
            for g in flats {
                let (l, r) = (g.left.max(window.lo), g.right.min(window.hi));
                if r <= l {
                    continue;
                }
                if l > cursor {
                    breaks.push(l);
                    density.push(1.0);
                }
                breaks.push(r);
                density.push(0.0);
                cursor = r;
            }
            if cursor < window.hi {
                breaks.push(window.hi);
                density.push(1.0);
            }
            MonotoneMeasure::new(breaks, density, Vec::new(), s.depth())
        }
        MonotoneFn::InverseScale(s) => {
            let base = match s.family() {
                Family::AffineSlope { slope } => 1.0 / slope,
                _ => 1.0,
            };
            let xs = (s.invert(window.lo), s.invert(window.hi));
            let flats = s
                .flat_intervals_in(xs.0, xs.1)
                .ok_or_else(|| Error::Precondition("flat intervals not stored".into()))?;
            let atoms = flats
                .into_iter()
                .filter(|g| g.level >= window.lo && g.level < window.hi)
                .map(|g| Atom {
                    location: g.level,
                    mass: g.len(),
                })
                .collect();
            MonotoneMeasure::new(vec![window.lo, window.hi], vec![base], atoms, s.depth())
        }
        MonotoneFn::Cantor { depth } => {
            if depth == 0 || depth > super::MAX_MATERIALIZED_DEPTH {
                return Err(Error::invalid("depth", "Cantor measure depth out of range"));
            }
            let half_width = 0.5 * 3f64.powi(-(depth as i32));
            let mass = 0.5f64.powi(depth as i32);
            let atoms = cantor::surviving_left_endpoints(depth)
                .into_iter()
                .map(|a| a + half_width)
                .filter(|&y| y >= window.lo && y < window.hi)
                .map(|location| Atom { location, mass })
                .collect();
            MonotoneMeasure::new(vec![window.lo, window.hi], vec![0.0], atoms, Some(depth))
        }
    }
}

/// Image of Lebesgue measure on `[c, d]` under `s`: the speed measure seen on the
/// natural scale. Flat intervals cut by `[c, d]` contribute partial atoms.
pub fn image_of_lebesgue(s: &ScaleFunction, c: f64, d: f64) -> Result<MonotoneMeasure> {
    if !(c < d) {
        return Err(Error::invalid("window", "need c < d"));
    }
    let (lo, hi) = (s.eval(c), s.eval(d));
    let base = match s.family() {
        Family::AffineSlope { slope } => 1.0 / slope,
        _ => 1.0,
    };
    let flats = s
        .flat_intervals_in(c, d)
        .ok_or_else(|| Error::Precondition("flat intervals not stored".into()))?;
    let atoms = flats
        .into_iter()
        .map(|g| Atom {
            location: g.level,
            mass: (g.right.min(d) - g.left.max(c)).max(0.0),
        })
        .filter(|a| a.mass > 0.0)
        .collect();
    MonotoneMeasure::new(vec![lo, hi], vec![base], atoms, s.depth())
}

/// `∫ g dμ` with the default rule (8-point Gauss–Legendre, 4 panels per density piece).
pub fn stieltjes_integrate<G: Fn(f64) -> f64>(g: G, mu: &MonotoneMeasure) -> f64 {
    stieltjes_integrate_with(g, mu, 4, 8)
}

/// `∫ g dμ = Σ_pieces ρ ∫ g dy + Σ_atoms g(y_k) m_k`.
pub fn stieltjes_integrate_with<G: Fn(f64) -> f64>(
    g: G,
    mu: &MonotoneMeasure,
    panels: usize,
    order: usize,
) -> f64 {
    let gl = GaussLegendre::new(order);
    let continuous: f64 = mu
        .pieces()
        .filter(|&(a, b, d)| d != 0.0 && b > a)
        .map(|(a, b, d)| d * gl.composite(&[a, b], panels, &g))
        .sum();
    let atomic: f64 = mu.atoms.iter().map(|a| g(a.location) * a.mass).sum();
    continuous + atomic
}
