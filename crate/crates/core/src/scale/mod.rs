//! Singular scale functions with `s' ∈ {0, 1}` almost everywhere.
//!
//! A scale function here is continuous, non-decreasing, 1-Lipschitz and has slope one
//! off a *flat set* `E_s` where it is constant. Four families are provided:
//!
//! | family | construction window | flat set at depth `n` |
//! |--------|--------------------|------------------------|
//! | [`Family::FatCantor`] | `[0, 1]` | the `2^n - 1` gaps of a Smith–Volterra–Cantor construction |
//! | [`Family::InverseCantorPlusId`] | `[0, 2]` | `2^n` intervals of length `2^-n`, one per jump of `c_n + id` |
//! | [`Family::Identity`] | whole line | empty |
//! | [`Family::AffineSlope`] | whole line | empty, but `s' = c ∉ {0, 1}` (counterexample) |
//!
//! Outside the construction window every family continues with slope one, so
//! `s(x) → ±∞` as `x → ±∞`.
//!
//! Finite-depth Cantor approximants are flat on whole intervals and therefore only
//! non-decreasing. The flat intervals are kept explicitly, which makes the measure
//! identity `s(b) - s(a) = (b - a) - |E_s ∩ [a, b]|` exact bookkeeping rather than a
//! numerical estimate.

mod cantor;
mod measure;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cantor::{cantor_function, MAX_CANTOR_DEPTH};
pub use measure::{
    image_of_lebesgue, stieltjes_integrate, stieltjes_integrate_with, stieltjes_measure, Atom,
    MonotoneFn, MonotoneMeasure,
};

/// Deepest construction whose flat intervals are stored explicitly.
pub const MAX_MATERIALIZED_DEPTH: u32 = 20;
/// Bracket width at which inverse-Cantor bisection stops.
pub const BISECTION_TOL: f64 = 1e-12;
/// Iteration cap for inverse-Cantor bisection.
pub const BISECTION_MAX_ITER: u32 = 200;

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::invalid("interval", format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// The four families of scale functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Smith–Volterra–Cantor construction: at step `k` a centred open interval of length
    /// `flat_fraction * 2^(1-2k)` is removed from each of the `2^(k-1)` survivors, and
    /// `s` is flat on every removed interval. Total flat mass `λ (1 - 2^-n)`.
    FatCantor {
        flat_fraction: f64,
        depth: u32,
    },
    /// `s^{-1}(y) = c_n(y) + y` on `[0, 1]`, with `c_n` the truncated Cantor function.
    InverseCantorPlusId {
        depth: u32,
    },
    Identity,
    /// `s(x) = slope * x`; violates `s' ∈ {0, 1}` unless `slope == 1`.
    AffineSlope {
        slope: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::FatCantor { .. } => "fat_cantor",
            Family::InverseCantorPlusId { .. } => "inverse_cantor",
            Family::Identity => "identity",
            Family::AffineSlope { .. } => "affine_slope",
        }
    }

    pub fn depth(&self) -> Option<u32> {
        match *self {
            Family::FatCantor { depth, .. } | Family::InverseCantorPlusId { depth } => Some(depth),
            _ => None,
        }
    }

    /// Window outside which the function has slope one.
    pub fn window(&self) -> Interval {
        match self {
            Family::FatCantor { .. } => Interval { lo: 0.0, hi: 1.0 },
            Family::InverseCantorPlusId { .. } => Interval { lo: 0.0, hi: 2.0 },
            Family::Identity | Family::AffineSlope { .. } => Interval::REAL_LINE,
        }
    }
}

/// A maximal interval on which the scale function is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatInterval {
    pub left: f64,
    pub right: f64,
    /// The constant value `s(left) = s(right)`.
    pub level: f64,
}

impl FlatInterval {
    pub fn len(&self) -> f64 {
        self.right - self.left
    }
}

/// Sorted disjoint flat intervals with prefix masses and levels in unanchored coordinates.
#[derive(Debug, Clone, Default)]
struct FlatSet {
    left: Vec<f64>,
    right: Vec<f64>,
    /// `cum[i]` = total length of intervals `0..i`.
    cum: Vec<f64>,
    /// Unanchored value of `s` on interval `i`.
    base_level: Vec<f64>,
}

impl FlatSet {
    fn new(intervals: Vec<(f64, f64)>, base_level: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(intervals.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for &(l, r) in &intervals {
            acc += r - l;
            cum.push(acc);
        }
        let (left, right) = intervals.into_iter().unzip();
        Self {
            left,
            right,
            cum,
            base_level,
        }
    }

    fn len(&self) -> usize {
        self.left.len()
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    /// Lebesgue measure of the flat set inside `(-∞, x]`.
    fn mass_before(&self, x: f64) -> f64 {
        let i = self.left.partition_point(|&l| l <= x);
        if i == 0 {
            return 0.0;
        }
        let j = i - 1;
        if x >= self.right[j] {
            self.cum[i]
        } else {
            self.cum[j] + (x - self.left[j])
        }
    }

    /// Index of the flat interval containing `x` (closed), if any.
    fn locate(&self, x: f64) -> Option<usize> {
        let i = self.left.partition_point(|&l| l <= x);
        (i > 0 && x <= self.right[i - 1]).then(|| i - 1)
    }

    /// Indices of the intervals meeting `[a, b]`.
    fn meeting(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let start = self.right.partition_point(|&r| r < a);
        let end = self.left.partition_point(|&l| l <= b);
        start..end.max(start)
    }
}

/// A scale function in `S(I)`: continuous, non-decreasing, `s(anchor) = 0`.
///
/// Immutable after construction. Serialized as the descriptor
/// `{family, parameters, depth, anchor}` (plus an optional `domain`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScaleDescriptor", into = "ScaleDescriptor")]
pub struct ScaleFunction {
    family: Family,
    anchor: f64,
    domain: Interval,
    /// `None` only for inverse-Cantor constructions deeper than [`MAX_MATERIALIZED_DEPTH`].
    flats: Option<FlatSet>,
    offset: f64,
}

impl PartialEq for ScaleFunction {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.anchor == other.anchor && self.domain == other.domain
    }
}

impl ScaleFunction {
    /// Smith–Volterra–Cantor scale function with flat fraction `λ` at depth `n`.
    pub fn fat_cantor(flat_fraction: f64, depth: u32) -> Result<Self> {
        if !(flat_fraction > 0.0 && flat_fraction.is_finite()) {
            return Err(Error::invalid(
                "flat_fraction",
                "must be positive and finite",
            ));
        }
        if depth == 0 || depth > MAX_MATERIALIZED_DEPTH {
            return Err(Error::invalid(
                "depth",
                format!("must lie in 1..={MAX_MATERIALIZED_DEPTH}"),
            ));
        }
        let mut survivors = vec![(0.0f64, 1.0f64)];
        let mut gaps = Vec::with_capacity((1usize << depth) - 1);
        for step in 1..=depth {
            let removed = flat_fraction * 2f64.powi(1 - 2 * step as i32);
            let mut next = Vec::with_capacity(survivors.len() * 2);
            for &(a, b) in &survivors {
                if removed >= b - a {
                    return Err(Error::ConstructionOverflow {
                        step,
                        removed,
                        available: b - a,
                    });
                }
                let centre = 0.5 * (a + b);
                let (gl, gr) = (centre - 0.5 * removed, centre + 0.5 * removed);
                gaps.push((gl, gr));
                next.push((a, gl));
                next.push((gr, b));
            }
            survivors = next;
        }
        if flat_fraction >= 1.0 {
            return Err(Error::invalid("flat_fraction", "must be < 1"));
        }
        gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut levels = Vec::with_capacity(gaps.len());
        let mut acc = 0.0;
        for &(l, r) in &gaps {
            levels.push(l - acc);
            acc += r - l;
        }
        let family = Family::FatCantor {
            flat_fraction,
            depth,
        };
        Ok(Self::assemble(family, Some(FlatSet::new(gaps, levels))))
    }

    /// Scale function on `[0, 2]` with `s^{-1}(y) = c_n(y) + y` for `y ∈ [0, 1]`.
    pub fn inverse_cantor(depth: u32) -> Result<Self> {
        if depth == 0 || depth > MAX_CANTOR_DEPTH {
            return Err(Error::invalid(
                "depth",
                format!("must lie in 1..={MAX_CANTOR_DEPTH}"),
            ));
        }
        let flats = (depth <= MAX_MATERIALIZED_DEPTH).then(|| {
            let step = 0.5f64.powi(depth as i32);
            let third = 3f64.powi(-(depth as i32));
            let lefts = cantor::surviving_left_endpoints(depth);
            let last = lefts.len() - 1;
            let mut intervals = Vec::with_capacity(lefts.len());
            let mut levels = Vec::with_capacity(lefts.len());
            for (j, a) in lefts.into_iter().enumerate() {
                // c_n jumps by 2^-n at the right end of the j-th surviving interval
                let jump_at = if j == last { 1.0 } else { a + third };
                let left = jump_at + j as f64 * step;
                intervals.push((left, left + step));
                levels.push(jump_at);
            }
            FlatSet::new(intervals, levels)
        });
        Ok(Self::assemble(Family::InverseCantorPlusId { depth }, flats))
    }

    pub fn identity() -> Self {
        Self::assemble(Family::Identity, Some(FlatSet::default()))
    }

    /// `s(x) = slope * x` for `slope ∈ (0, 1]`.
    pub fn affine_slope(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope <= 1.0) {
            return Err(Error::invalid("slope", "must lie in (0, 1]"));
        }
        Ok(Self::assemble(
            Family::AffineSlope { slope },
            Some(FlatSet::default()),
        ))
    }

    fn assemble(family: Family, flats: Option<FlatSet>) -> Self {
        let domain = family.window();
        let mut s = Self {
            family,
            anchor: 0.0,
            domain,
            flats,
            offset: 0.0,
        };
        s.offset = s.base(0.0).expect("base evaluation at the anchor");
        s
    }

    /// Move the zero of `s` to `anchor`.
    pub fn with_anchor(mut self, anchor: f64) -> Result<Self> {
        if !anchor.is_finite() {
            return Err(Error::invalid("anchor", "must be finite"));
        }
        self.anchor = anchor;
        self.offset = self.base(anchor)?;
        Ok(self)
    }

    /// The same construction at another depth (anchor and domain kept). Families without
    /// a depth are returned unchanged.
    pub fn with_depth(&self, depth: u32) -> Result<Self> {
        let s = match self.family {
            Family::FatCantor { flat_fraction, .. } => Self::fat_cantor(flat_fraction, depth)?,
            Family::InverseCantorPlusId { .. } => Self::inverse_cantor(depth)?,
            Family::Identity | Family::AffineSlope { .. } => return Ok(self.clone()),
        };
        s.with_anchor(self.anchor)?.with_domain(self.domain)
    }

    /// Restrict the nominal domain `I`; evaluation still extends with slope one outside.
    pub fn with_domain(mut self, domain: Interval) -> Result<Self> {
        Interval::new(domain.lo, domain.hi)?;
        self.domain = domain;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn depth(&self) -> Option<u32> {
        self.family.depth()
    }

    /// `true` when `s' ∈ {0, 1}` almost everywhere.
    pub fn has_unit_slopes(&self) -> bool {
        match self.family {
            Family::AffineSlope { slope } => slope == 1.0,
            _ => true,
        }
    }

    /// `s(±∞) = ±∞`; holds for every family because of the slope-one extension.
    pub fn is_unbounded_both_ways(&self) -> bool {
        self.eval(-1e300) < -1e299 && self.eval(1e300) > 1e299
    }

    /// Value of `s` before subtracting the anchor offset.
    fn base(&self, x: f64) -> Result<f64> {
        Ok(match self.family {
            Family::Identity => x,
            Family::AffineSlope { slope } => slope * x,
            Family::FatCantor { .. } => x - self.flat_set().mass_before(x),
            Family::InverseCantorPlusId { depth } => {
                if x <= 0.0 {
                    x
                } else if x >= 2.0 {
                    x - 1.0
                } else {
                    bisect_inverse_cantor(x, depth)?
                }
            }
        })
    }

    /// Smallest `x` with unanchored value `t` (left endpoint on flat levels).
    fn base_inverse(&self, t: f64) -> f64 {
        match self.family {
            Family::Identity => t,
            Family::AffineSlope { slope } => t / slope,
            Family::FatCantor { .. } => {
                let f = self.flat_set();
                let i = f.base_level.partition_point(|&l| l <= t);
                if i > 0 && f.base_level[i - 1] == t {
                    f.left[i - 1]
                } else {
                    t + f.cum[i]
                }
            }
            Family::InverseCantorPlusId { depth } => {
                if t <= 0.0 {
                    t
                } else if t > 1.0 {
                    t + 1.0
                } else {
                    t + cantor::cantor_left_limit(t, depth)
                }
            }
        }
    }

    fn flat_set(&self) -> &FlatSet {
        self.flats
            .as_ref()
            .expect("fat-Cantor constructions always store their gaps")
    }

    /// `s(x)`. Defined on the whole line.
    ///
    /// # Panics
    /// Only if inverse-Cantor bisection fails, which cannot happen for a monotone
    /// inverse; use [`ScaleFunction::try_eval`] to observe the sentinel instead.
    pub fn eval(&self, x: f64) -> f64 {
        self.try_eval(x).expect("bisection on a monotone inverse")
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        Ok(self.base(x)? - self.offset)
    }

    /// `s^{-1}(y)` for `y` in the range of `s` over its domain.
    ///
    /// On a flat level the left endpoint of the preimage is returned.
    pub fn inverse_eval(&self, y: f64) -> Result<f64> {
        let range = self.range();
        if !(y.is_finite() && range.contains(y)) {
            return Err(Error::Domain {
                value: y,
                lo: range.lo,
                hi: range.hi,
            });
        }
        Ok(self.invert(y))
    }

    /// Unchecked generalized inverse on the whole line (left endpoint on flat levels).
    pub fn invert(&self, y: f64) -> f64 {
        self.base_inverse(y + self.offset)
    }

    /// `s(I)` for the nominal domain `I`.
    pub fn range(&self) -> Interval {
        let f = |x: f64| {
            if x.is_infinite() {
                x
            } else {
                self.eval(x)
            }
        };
        Interval {
            lo: f(self.domain.lo),
            hi: f(self.domain.hi),
        }
    }

    /// `|E_s ∩ [a, b]|`.
    pub fn flat_mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        match &self.flats {
            Some(f) => f.mass_before(b) - f.mass_before(a),
            None => (b - a) - (self.eval(b) - self.eval(a)),
        }
    }

    /// Flat mass over the nominal domain (for unbounded domains, over the window).
    pub fn total_flat_mass(&self) -> f64 {
        match &self.flats {
            Some(f) => f.total(),
            None => {
                let w = self.family.window();
                self.flat_mass(w.lo, w.hi)
            }
        }
    }

    /// Number of flat intervals, if stored.
    pub fn flat_interval_count(&self) -> Option<usize> {
        self.flats.as_ref().map(FlatSet::len)
    }

    /// Flat intervals meeting `[a, b]` with levels in anchored coordinates.
    pub fn flat_intervals_in(&self, a: f64, b: f64) -> Option<Vec<FlatInterval>> {
        let f = self.flats.as_ref()?;
        Some(
            f.meeting(a, b)
                .map(|i| FlatInterval {
                    left: f.left[i],
                    right: f.right[i],
                    level: f.base_level[i] - self.offset,
                })
                .collect(),
        )
    }

    /// All stored flat intervals.
    pub fn flat_intervals(&self) -> Option<Vec<FlatInterval>> {
        self.flat_intervals_in(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Length of the shortest flat interval meeting `[a, b]`.
    pub fn min_flat_len_in(&self, a: f64, b: f64) -> Option<f64> {
        let f = self.flats.as_ref()?;
        f.meeting(a, b)
            .map(|i| f.right[i] - f.left[i])
            .min_by(|x, y| x.total_cmp(y))
    }

    /// Exact indicator of the closed flat set (requires stored flats).
    pub fn is_flat_at(&self, x: f64) -> bool {
        self.flats
            .as_ref()
            .is_some_and(|f| f.locate(x).is_some_and(|i| f.right[i] > f.left[i]))
    }

    /// `s'(x)` where it exists: `0` inside flat intervals, `1` elsewhere (`c` for the
    /// affine family).
    pub fn slope_at(&self, x: f64) -> f64 {
        match self.family {
            Family::AffineSlope { slope } => slope,
            _ if self.is_flat_at(x) => 0.0,
            _ => 1.0,
        }
    }

    /// Write the flat intervals as CSV rows `left,right,level`.
    pub fn write_gaps_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "level"])?;
        for g in self.flat_intervals().unwrap_or_default() {
            w.serialize((g.left, g.right, g.level))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sup { y ∈ [0, 1] : y + c_n(y) ≤ x }` for `x ∈ (0, 2)`.
fn bisect_inverse_cantor(x: f64, depth: u32) -> Result<f64> {
    let g = |y: f64| y + cantor_function(y, depth);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOL {
            return Ok(lo);
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BisectionFailed {
        iterations: BISECTION_MAX_ITER,
    })
}

/// Family names as they appear in JSON descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    FatCantor,
    InverseCantor,
    Identity,
    AffineSlope,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

/// JSON form of a [`ScaleFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDescriptor {
    pub family: FamilyName,
    #[serde(default)]
    pub parameters: ScaleParameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default)]
    pub anchor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
}

impl TryFrom<ScaleDescriptor> for ScaleFunction {
    type Error = Error;

    fn try_from(d: ScaleDescriptor) -> Result<Self> {
        let need_depth = || d.depth.ok_or_else(|| Error::invalid("depth", "required"));
        let s = match d.family {
            FamilyName::FatCantor => {
                let l = d
                    .parameters
                    .flat_fraction
                    .ok_or_else(|| Error::invalid("flat_fraction", "required"))?;
                ScaleFunction::fat_cantor(l, need_depth()?)?
            }
            FamilyName::InverseCantor => ScaleFunction::inverse_cantor(need_depth()?)?,
            FamilyName::Identity => ScaleFunction::identity(),
            FamilyName::AffineSlope => {
                let c = d
                    .parameters
                    .slope
                    .ok_or_else(|| Error::invalid("slope", "required"))?;
                ScaleFunction::affine_slope(c)?
            }
        };
        let s = s.with_anchor(d.anchor)?;
        match d.domain {
            Some([lo, hi]) => s.with_domain(Interval::new(lo, hi)?),
            None => Ok(s),
        }
    }
}

impl From<ScaleFunction> for ScaleDescriptor {
    fn from(s: ScaleFunction) -> Self {
        let (family, parameters) = match s.family {
            Family::FatCantor { flat_fraction, .. } => (
                FamilyName::FatCantor,
                ScaleParameters {
                    flat_fraction: Some(flat_fraction),
                    slope: None,
                },
            ),
            Family::InverseCantorPlusId { .. } => (FamilyName::InverseCantor, Default::default()),
            Family::Identity => (FamilyName::Identity, Default::default()),
            Family::AffineSlope { slope } => (
                FamilyName::AffineSlope,
                ScaleParameters {
                    flat_fraction: None,
                    slope: Some(slope),
                },
            ),
        };
        let domain = (s.domain != s.family.window()).then_some([s.domain.lo, s.domain.hi]);
        ScaleDescriptor {
            family,
            parameters,
            depth: s.family.depth(),
            anchor: s.anchor,
            domain,
        }
    }
}

#[cfg(test)]
mod tests;
