//! Birth–death chain on a grid uniform in the natural scale.

use serde::Serialize;

use crate::discrete::FiniteForm;
use crate::error::{Error, Result};
use crate::scale::ScaleFunction;

/// Nearest-neighbour chain with conductances `c_i = 1/(2(s(x_{i+1}) - s(x_i)))` and
/// speed weights `m_i = (x_{i+1} - x_{i-1})/2`, absorbed at both ends.
#[derive(Debug, Clone)]
pub struct ChainOracle {
    scale: ScaleFunction,
    nodes: Vec<f64>,
    levels: Vec<f64>,
    conductance: Vec<f64>,
    speed: Vec<f64>,
}

/// Boundary-value problems the chain can solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ChainProblem {
    /// `P_x0(hit b before a)`.
    HitProbability { x0: f64 },
    /// `E_x0[exit time]`.
    ExpectedExitTime { x0: f64 },
    /// `E_x0[time spent in [c, d] before exit]`.
    Occupation { x0: f64, c: f64, d: f64 },
}

impl ChainProblem {
    pub fn x0(&self) -> f64 {
        match *self {
            ChainProblem::HitProbability { x0 }
            | ChainProblem::ExpectedExitTime { x0 }
            | ChainProblem::Occupation { x0, .. } => x0,
        }
    }
}

impl ChainOracle {
    /// `n` cells uniform in `s` on `[a, b]`, with the extra points inserted as nodes.
    ///
    /// Points are identified with their level `s(x)`: an extra point on a flat whose level
    /// already carries a node is not inserted again.
    pub fn new(s: &ScaleFunction, a: f64, b: f64, n: usize, extra: &[f64]) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("interval", "need finite a < b"));
        }
        if n < 2 {
            return Err(Error::invalid("n", "need at least two cells"));
        }
        let (ya, yb) = (s.eval(a), s.eval(b));
        let mut nodes = Vec::with_capacity(n + 1 + extra.len());
        nodes.push(a);
        for k in 1..n {
            let y = ya + (yb - ya) * k as f64 / n as f64;
            nodes.push(s.invert(y).clamp(a, b));
        }
        nodes.push(b);
        nodes.dedup();
        let mut levels: Vec<f64> = nodes.iter().map(|&x| s.eval(x)).collect();
        for &x in extra {
            if !(x > a && x < b) {
                return Err(Error::Domain {
                    value: x,
                    lo: a,
                    hi: b,
                });
            }
            // a point on a flat whose level is already a node is represented by that node
            let y = s.eval(x);
            if !levels.contains(&y) {
                nodes.push(x);
                levels.push(y);
            }
        }
        nodes.sort_by(|p, q| p.total_cmp(q));
        Self::from_nodes(s, nodes)
    }

    /// Chain on an explicit increasing grid.
    pub fn from_nodes(s: &ScaleFunction, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Grid("need at least one interior node".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        let levels: Vec<f64> = nodes.iter().map(|&x| s.eval(x)).collect();
        let mut conductance = Vec::with_capacity(nodes.len() - 1);
        for (i, w) in levels.windows(2).enumerate() {
            let ds = w[1] - w[0];
            if !(ds > 0.0) {
                return Err(Error::Grid(format!(
                    "zero conductance between nodes {} and {} ({} and {} lie on one flat)",
                    i,
                    i + 1,
                    nodes[i],
                    nodes[i + 1]
                )));
            }
            conductance.push(1.0 / (2.0 * ds));
        }
        let last = nodes.len() - 1;
        let speed = (0..=last)
            .map(|i| {
                let l = nodes[i.saturating_sub(1)];
                let r = nodes[(i + 1).min(last)];
                0.5 * (r - l)
            })
            .collect();
        Ok(Self {
            scale: s.clone(),
            nodes,
            levels,
            conductance,
            speed,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductance
    }

    pub fn speed_weights(&self) -> &[f64] {
        &self.speed
    }

    /// The chain's Dirichlet form on all nodes (no killing).
    pub fn finite_form(&self) -> Result<FiniteForm> {
        let n = self.nodes.len();
        let mut j = vec![0.0; n * n];
        for (i, &c) in self.conductance.iter().enumerate() {
            j[i * n + i + 1] = 0.5 * c;
            j[(i + 1) * n + i] = 0.5 * c;
        }
        FiniteForm::with_default_labels(self.speed.clone(), j, vec![0.0; n])
    }

    fn node_index(&self, level: f64) -> Result<usize> {
        let last = self.nodes.len() - 1;
        match self.levels.iter().position(|&y| y == level) {
            Some(i) if i > 0 && i < last => Ok(i),
            _ => Err(Error::Precondition(format!(
                "no interior grid point at level {level}"
            ))),
        }
    }

    /// Weight of `[c, d]` in each node's dual cell (cells split at midpoints).
    fn occupation_weights(&self, c: f64, d: f64) -> Vec<f64> {
        let last = self.nodes.len() - 1;
        (0..=last)
            .map(|i| {
                let l = if i == 0 {
                    self.nodes[0]
                } else {
                    0.5 * (self.nodes[i - 1] + self.nodes[i])
                };
                let r = if i == last {
                    self.nodes[last]
                } else {
                    0.5 * (self.nodes[i] + self.nodes[i + 1])
                };
                (r.min(d) - l.max(c)).max(0.0)
            })
            .collect()
    }

    /// Solve the absorbed problem on the interior nodes and read off the value at the node
    /// with level `s(x0)`.
    pub fn solve(&self, problem: ChainProblem) -> Result<f64> {
        let i0 = self.node_index(self.scale.eval(problem.x0()))?;
        let values = match problem {
            ChainProblem::HitProbability { .. } => {
                self.dirichlet(&vec![0.0; self.nodes.len()], 1.0)
            }
            ChainProblem::ExpectedExitTime { .. } => self.dirichlet(&self.speed, 0.0),
            ChainProblem::Occupation { c, d, .. } => {
                if !(c < d) {
                    return Err(Error::invalid("occupation", "need c < d"));
                }
                self.dirichlet(&self.occupation_weights(c, d), 0.0)
            }
        };
        Ok(values[i0])
    }

    /// `Σ_j c_ij (h_i - h_j) = rhs_i` inside, `h = 0` at `a`, `h = right` at `b`.
    fn dirichlet(&self, rhs: &[f64], right: f64) -> Vec<f64> {
        let n = self.nodes.len() - 2;
        let c = &self.conductance;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut b = vec![0.0; n];
        for k in 0..n {
            let i = k + 1;
            diag[k] = c[i - 1] + c[i];
            if k > 0 {
                lower[k] = -c[i - 1];
            }
            if k + 1 < n {
                upper[k] = -c[i];
            }
            b[k] = rhs[i];
        }
        b[n - 1] += c[n] * right;
        let inner = solve_tridiagonal(&lower, &diag, &upper, &b);
        let mut out = Vec::with_capacity(n + 2);
        out.push(0.0);
        out.extend(inner);
        out.push(right);
        out
    }

    /// The natural-scale levels `s(x_i)`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Thomas algorithm; the chain matrices are diagonally dominant so no pivoting is needed.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
