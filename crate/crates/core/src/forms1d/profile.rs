//! Piecewise-smooth profiles `φ` on the natural-scale line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::Interval;

/// A compactly supported profile `φ` with exact first and second derivatives.
///
/// Derivatives are right-continuous at kinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// Tent rising linearly from `left` to `height` at `peak` and back to zero at `right`.
    Hat {
        left: f64,
        peak: f64,
        right: f64,
        height: f64,
    },
    /// `height · (1 - z²)²` with `z = (y - center) / radius`; C¹ with piecewise-polynomial
    /// second derivative.
    Bump {
        center: f64,
        radius: f64,
        height: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<Profile>,
    },
    Sum {
        terms: Vec<Profile>,
    },
    /// `min(max(φ, lo), hi)`; requires `lo ≤ 0 ≤ hi` so the support is unchanged.
    Clamped {
        inner: Box<Profile>,
        lo: f64,
        hi: f64,
    },
}

impl Profile {
    pub fn hat(left: f64, peak: f64, right: f64, height: f64) -> Result<Self> {
        let p = Profile::Hat {
            left,
            peak,
            right,
            height,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn bump(center: f64, radius: f64, height: f64) -> Result<Self> {
        let p = Profile::Bump {
            center,
            radius,
            height,
        };
        p.validate()?;
        Ok(p)
    }

    /// Hat on `J` with its peak at the midpoint.
    pub fn hat_on(j: Interval, height: f64) -> Result<Self> {
        Self::hat(j.lo, 0.5 * (j.lo + j.hi), j.hi, height)
    }

    /// Bump filling `J`.
    pub fn bump_on(j: Interval, height: f64) -> Result<Self> {
        Self::bump(0.5 * (j.lo + j.hi), 0.5 * j.len(), height)
    }

    pub fn scaled(self, factor: f64) -> Self {
        Profile::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn sum(terms: Vec<Profile>) -> Result<Self> {
        let p = Profile::Sum { terms };
        p.validate()?;
        Ok(p)
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Result<Self> {
        let p = Profile::Clamped {
            inner: Box::new(self),
            lo,
            hi,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check parameters recursively (deserialized profiles skip the constructors).
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Profile::Hat {
                left,
                peak,
                right,
                height,
            } => {
                if !finite(&[*left, *peak, *right, *height]) || !(left < peak && peak < right) {
                    return Err(Error::invalid(
                        "hat",
                        "need left < peak < right, all finite",
                    ));
                }
            }
            Profile::Bump {
                center,
                radius,
                height,
            } => {
                if !finite(&[*center, *radius, *height]) || *radius <= 0.0 {
                    return Err(Error::invalid("bump", "need a positive finite radius"));
                }
            }
            Profile::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(Error::invalid("factor", "must be finite"));
                }
                inner.validate()?;
            }
            Profile::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::invalid("terms", "sum needs at least one term"));
                }
                for t in terms {
                    t.validate()?;
                }
            }
            Profile::Clamped { inner, lo, hi } => {
                if !(*lo <= 0.0 && 0.0 <= *hi) {
                    return Err(Error::invalid("clamp", "need lo <= 0 <= hi"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// `φ(y)`.
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Profile::Hat {
                left,
                peak,
                right,
                height,
            } => {
                if y <= *left || y >= *right {
                    0.0
                } else if y <= *peak {
                    height * (y - left) / (peak - left)
                } else {
                    height * (right - y) / (right - peak)
                }
            }
            Profile::Bump {
                center,
                radius,
                height,
            } => {
                let z = (y - center) / radius;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - z * z;
                    height * w * w
                }
            }
            Profile::Scaled { factor, inner } => factor * inner.value(y),
            Profile::Sum { terms } => terms.iter().map(|t| t.value(y)).sum(),
            Profile::Clamped { inner, lo, hi } => inner.value(y).clamp(*lo, *hi),
        }
    }

    /// `φ'(y)`.
    pub fn slope(&self, y: f64) -> f64 {
        match self {
            Profile::Hat {
                left,
                peak,
                right,
                height,
            } => {
                if y < *left || y >= *right {
                    0.0
                } else if y < *peak {
                    height / (peak - left)
                } else {
                    -height / (right - peak)
                }
            }
            Profile::Bump {
                center,
                radius,
                height,
            } => {
                let z = (y - center) / radius;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    -4.0 * height * z * (1.0 - z * z) / radius
                }
            }
            Profile::Scaled { factor, inner } => factor * inner.slope(y),
            Profile::Sum { terms } => terms.iter().map(|t| t.slope(y)).sum(),
            Profile::Clamped { inner, lo, hi } => {
                let v = inner.value(y);
                if *lo < v && v < *hi {
                    inner.slope(y)
                } else {
                    0.0
                }
            }
        }
    }

    /// `φ''(y)` away from breakpoints (zero on affine pieces).
    pub fn curvature(&self, y: f64) -> f64 {
        match self {
            Profile::Hat { .. } => 0.0,
            Profile::Bump {
                center,
                radius,
                height,
            } => {
                let z = (y - center) / radius;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    height * (12.0 * z * z - 4.0) / (radius * radius)
                }
            }
            Profile::Scaled { factor, inner } => factor * inner.curvature(y),
            Profile::Sum { terms } => terms.iter().map(|t| t.curvature(y)).sum(),
            Profile::Clamped { inner, lo, hi } => {
                let v = inner.value(y);
                if *lo < v && v < *hi {
                    inner.curvature(y)
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether `φ'` is continuous, so that `φ''` is the distributional second derivative.
    pub fn is_c1(&self) -> bool {
        match self {
            Profile::Hat { .. } | Profile::Clamped { .. } => false,
            Profile::Bump { .. } => true,
            Profile::Scaled { inner, .. } => inner.is_c1(),
            Profile::Sum { terms } => terms.iter().all(Profile::is_c1),
        }
    }

    /// Smallest closed interval outside which `φ ≡ 0`.
    pub fn support(&self) -> Interval {
        match self {
            Profile::Hat { left, right, .. } => Interval {
                lo: *left,
                hi: *right,
            },
            Profile::Bump { center, radius, .. } => Interval {
                lo: center - radius,
                hi: center + radius,
            },
            Profile::Scaled { inner, .. } | Profile::Clamped { inner, .. } => inner.support(),
            Profile::Sum { terms } => terms.iter().map(Profile::support).fold(
                Interval {
                    lo: f64::INFINITY,
                    hi: f64::NEG_INFINITY,
                },
                |a, b| Interval {
                    lo: a.lo.min(b.lo),
                    hi: a.hi.max(b.hi),
                },
            ),
        }
    }

    /// Points where `φ` fails to be a polynomial, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breaks(&mut out);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<f64>) {
        match self {
            Profile::Hat {
                left, peak, right, ..
            } => out.extend([*left, *peak, *right]),
            Profile::Bump { center, radius, .. } => out.extend([center - radius, center + radius]),
            Profile::Scaled { inner, .. } => inner.collect_breaks(out),
            Profile::Sum { terms } => terms.iter().for_each(|t| t.collect_breaks(out)),
            Profile::Clamped { inner, lo, hi } => {
                let mut own = Vec::new();
                inner.collect_breaks(&mut own);
                own.sort_by(|a, b| a.total_cmp(b));
                own.dedup();
                for level in [*lo, *hi] {
                    out.extend(level_crossings(inner, &own, level));
                }
                out.extend(own);
            }
        }
    }
}

/// Points in the support where `φ - level` changes sign, located by scanning each
/// polynomial piece and bisecting.
fn level_crossings(phi: &Profile, breaks: &[f64], level: f64) -> Vec<f64> {
    const SCAN: usize = 256;
    let g = |y: f64| phi.value(y) - level;
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = (b - a) / SCAN as f64;
        let mut x0 = a;
        let mut g0 = g(a);
        for k in 1..=SCAN {
            let x1 = if k == SCAN { b } else { a + step * k as f64 };
            let g1 = g(x1);
            if g0 == 0.0 {
                out.push(x0);
            } else if g0 * g1 < 0.0 {
                let (mut lo, mut hi) = (x0, x1);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(lo) * g(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            x0 = x1;
            g0 = g1;
        }
    }
    out
}
