use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack allowed when evaluating just outside the grid ends.
const EDGE_SLACK: f64 = 1e-12;

/// Piecewise-linear function on a strictly increasing grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
    concave: bool,
}

/// `intervals + 1` equally spaced nodes on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let n = intervals.max(1);
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    xs[n] = hi;
    xs
}

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid node {i} is not finite")));
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::GridNotIncreasing(i + 1));
    }
    Ok(())
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_grid(&xs)?;
        if xs.len() != ys.len() {
            return Err(Error::IncompatibleGrids(format!("{} nodes but {} values", xs.len(), ys.len())));
        }
        Ok(GridFunction { xs, ys, concave: false })
    }

    pub fn from_fn(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Set when produced by a conjugation (a minimum of affine functions).
    pub fn is_concave(&self) -> bool {
        self.concave
    }

    pub(crate) fn mark_concave(mut self) -> Self {
        self.concave = true;
        self
    }

    /// Largest node spacing.
    pub fn max_spacing(&self) -> f64 {
        self.xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Interval index and weight of the right node for `x`, clamped into the grid.
    pub(crate) fn bracket(&self, x: f64) -> (usize, f64) {
        let n = self.xs.len();
        if n == 1 || x <= self.xs[0] {
            return (0, 0.0);
        }
        if x >= self.xs[n - 1] {
            return (n - 2, 1.0);
        }
        let i = self.xs.partition_point(|&t| t <= x) - 1;
        (i, (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]))
    }

    pub(crate) fn at_bracket(&self, (i, t): (usize, f64)) -> f64 {
        if self.ys.len() == 1 {
            return self.ys[0];
        }
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    /// Linear interpolation inside `[x_min, x_max]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.x_min(), self.x_max());
        let slack = EDGE_SLACK * (hi - lo).abs().max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutsideInterval { value: x, lo, hi });
        }
        Ok(self.at_bracket(self.bracket(x)))
    }

    /// Three-point test on consecutive triples: slopes must not increase.
    pub fn check_concave(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|s| s[1] <= s[0] + tol)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        GridFunction {
            xs: self.xs.clone(),
            ys: self.xs.iter().zip(&self.ys).map(|(&x, &y)| f(x, y)).collect(),
            concave: false,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().cloned().zip(self.ys.iter().cloned())
    }
}

/// Indices of the vertices of the upper convex hull of `(xs[i], ys[i])`,
/// left to right. `xs` must be strictly increasing.
pub fn upper_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord a-i
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Slopes of the upper-hull segments, decreasing.
pub fn hull_slopes(g: &GridFunction) -> Vec<f64> {
    let h = upper_hull(&g.xs, &g.ys);
    h.windows(2)
        .map(|w| (g.ys[w[1]] - g.ys[w[0]]) / (g.xs[w[1]] - g.xs[w[0]]))
        .collect()
}

/// Smallest concave function above `g`, sampled at the nodes of `g`.
pub fn concave_majorant(g: &GridFunction) -> GridFunction {
    let h = upper_hull(&g.xs, &g.ys);
    let mut ys = Vec::with_capacity(g.len());
    let mut seg = 0;
    for (i, &x) in g.xs.iter().enumerate() {
        while seg + 2 < h.len() && x > g.xs[h[seg + 1]] {
            seg += 1;
        }
        let y = if h.len() == 1 {
            g.ys[h[0]]
        } else {
            let (a, b) = (h[seg], h[seg + 1]);
            let t = (x - g.xs[a]) / (g.xs[b] - g.xs[a]);
            g.ys[a] + t * (g.ys[b] - g.ys[a])
        };
        // interpolation can round a hull vertex just below g
        ys.push(y.max(g.ys[i]));
    }
    GridFunction { xs: g.xs.clone(), ys, concave: true }
}

/// `g*(x) = min_j [x y_j - g(y_j)]` over the nodes `y_j` of `g`.
///
/// Only upper-hull vertices can be minimizers, and the optimal vertex moves
/// left as `x` grows, so one sweep over the sorted `x_grid` suffices.
pub fn concave_conjugate(g: &GridFunction, x_grid: &[f64]) -> Result<GridFunction> {
    check_grid(x_grid)?;
    if g.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let h = upper_hull(&g.xs, &g.ys);
    let val = |p: usize, x: f64| x * g.xs[h[p]] - g.ys[h[p]];
    let mut p = h.len() - 1;
    let ys = x_grid
        .iter()
        .map(|&x| {
            while p > 0 && val(p - 1, x) <= val(p, x) {
                p -= 1;
            }
            val(p, x)
        })
        .collect();
    Ok(GridFunction { xs: x_grid.to_vec(), ys, concave: true })
}
