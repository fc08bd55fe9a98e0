//! Quadrature, root bracketing and interpolation helpers.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre rule with nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendreRule {
    pub fn new(points: usize) -> Self {
        let points = NonZeroUsize::new(points.max(1)).unwrap();
        let rule = GaussLegendre::new(points);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Sorted, de-duplicated breakpoints partitioning an interval into panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Panels {
    edges: Vec<f64>,
}

impl Panels {
    /// Panels covering [a, b] split at every breakpoint strictly inside.
    pub fn new(a: f64, b: f64, breakpoints: impl IntoIterator<Item = f64>) -> Self {
        let mut edges: Vec<f64> = breakpoints
            .into_iter()
            .filter(|x| x.is_finite() && *x > a && *x < b)
            .collect();
        edges.push(a);
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        let min_gap = 1e-13 * (b - a).abs().max(a.abs().max(b.abs()) * 1e-3);
        edges.dedup_by(|x, y| (*x - *y).abs() <= min_gap);
        if let Some(last) = edges.last_mut() {
            *last = b;
        }
        Self { edges }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.windows(2).map(|w| (w[0], w[1]))
    }

    /// Every panel halved.
    pub fn doubled(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
        }
        if let Some(&last) = self.edges.last() {
            edges.push(last);
        }
        Self { edges }
    }

    /// All quadrature nodes and weights of `rule` applied panel-wise.
    pub fn nodes(&self, rule: &GaussLegendreRule) -> Vec<(f64, f64)> {
        self.iter()
            .flat_map(|(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, rule: &GaussLegendreRule, mut f: F) -> f64 {
        self.iter().map(|(a, b)| rule.integrate(a, b, &mut f)).sum()
    }
}

/// Breakpoints `center ± first·factorᵏ` for k = 0, 1, ... up to `reach`.
///
/// Used to resolve a feature of width `first` sitting inside a much wider
/// interval: consecutive panels grow geometrically away from the feature.
pub fn ladder(center: f64, first: f64, factor: f64, reach: f64) -> Vec<f64> {
    let mut points = vec![center];
    if !(first > 0.0) || !(factor > 1.0) {
        return points;
    }
    let mut step = first;
    while step < reach {
        points.push(center - step);
        points.push(center + step);
        step *= factor;
    }
    points
}

/// Outcome of a panel-doubling quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub value: f64,
    /// |I(doubled) − I(coarse)| / |I(doubled)| at the accepted level.
    pub relative_change: f64,
    pub doublings: usize,
    pub evaluations: usize,
}

/// Integrates `f` on `panels`, halving every panel until two successive
/// levels agree to `rel_tol` (or `max_doublings` is reached, which is an error).
pub fn integrate_converged<F: Fn(f64) -> f64>(
    f: F,
    panels: &Panels,
    rule: &GaussLegendreRule,
    rel_tol: f64,
    max_doublings: usize,
) -> Result<Convergence> {
    let mut current = panels.clone();
    let mut coarse = current.integrate(rule, &f);
    let mut evaluations = current.len() * rule.len();
    for doubling in 1..=max_doublings {
        let fine_panels = current.doubled();
        let fine = fine_panels.integrate(rule, &f);
        evaluations += fine_panels.len() * rule.len();
        let change = relative_change(coarse, fine);
        if change <= rel_tol {
            return Ok(Convergence {
                value: fine,
                relative_change: change,
                doublings: doubling,
                evaluations,
            });
        }
        coarse = fine;
        current = fine_panels;
    }
    Err(Error::numerical(
        "quadrature",
        format!("no convergence to {rel_tol:e} after {max_doublings} panel doublings"),
    ))
}

pub(crate) fn relative_change(coarse: f64, fine: f64) -> f64 {
    let diff = (fine - coarse).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / fine.abs().max(coarse.abs())
    }
}

/// Bracketed bisection to full double precision.
///
/// `f(lo)` and `f(hi)` must differ in sign (zero counts as a root).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::numerical(
            "bisection",
            format!("no sign change on [{lo:e}, {hi:e}]"),
        ));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Piecewise Chebyshev interpolant on geometrically growing panels.
#[derive(Debug, Clone)]
pub(crate) struct ChebyshevTable {
    lo: f64,
    log_ratio: f64,
    panel_edges: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl ChebyshevTable {
    /// Chebyshev points of the first kind for a panel, in evaluation order.
    pub(crate) fn panel_nodes(a: f64, b: f64, degree: usize) -> Vec<f64> {
        let n = degree + 1;
        (0..n)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                0.5 * (a + b) + 0.5 * (b - a) * theta.cos()
            })
            .collect()
    }

    /// Geometric panel edges from `lo` to `hi` with ratio `ratio`.
    pub(crate) fn edges(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
        let count = ((hi / lo).ln() / ratio.ln()).ceil().max(1.0) as usize;
        let log_ratio = (hi / lo).ln() / count as f64;
        let mut edges: Vec<f64> = (0..=count).map(|i| lo * (log_ratio * i as f64).exp()).collect();
        edges[count] = hi;
        edges
    }

    /// Builds the table from function samples at `panel_nodes` of each panel.
    pub(crate) fn from_samples(edges: Vec<f64>, samples: Vec<Vec<f64>>) -> Self {
        let coeffs = samples
            .iter()
            .map(|values| {
                let n = values.len();
                (0..n)
                    .map(|k| {
                        let s: f64 = values
                            .iter()
                            .enumerate()
                            .map(|(j, v)| {
                                v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64)
                                    .cos()
                            })
                            .sum();
                        if k == 0 {
                            s / n as f64
                        } else {
                            2.0 * s / n as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let lo = edges[0];
        let count = edges.len() - 1;
        let log_ratio = (edges[count] / lo).ln() / count as f64;
        Self {
            lo,
            log_ratio,
            panel_edges: edges,
            coeffs,
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let count = self.coeffs.len();
        let mut i = ((x / self.lo).ln() / self.log_ratio).floor() as isize;
        i = i.clamp(0, count as isize - 1);
        let mut i = i as usize;
        // Guard against rounding at panel boundaries.
        while i > 0 && x < self.panel_edges[i] {
            i -= 1;
        }
        while i + 1 < count && x > self.panel_edges[i + 1] {
            i += 1;
        }
        let (a, b) = (self.panel_edges[i], self.panel_edges[i + 1]);
        let t = (2.0 * x - a - b) / (b - a);
        clenshaw(&self.coeffs[i], t)
    }
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendreRule::new(5);
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let want = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((got - want).abs() < 1e-11 * want.abs());
    }

    #[test]
    fn panels_drop_outside_points_and_duplicates() {
        let p = Panels::new(0.0, 1.0, [0.5, 0.5, -1.0, 2.0, 0.25]);
        assert_eq!(p.edges(), &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(p.doubled().len(), 6);
    }

    #[test]
    fn ladder_resolves_narrow_lorentzian() {
        let width = 1e-6;
        let f = |x: f64| width / (x * x + width * width) / std::f64::consts::PI;
        let rule = GaussLegendreRule::new(12);
        let panels = Panels::new(-1.0, 1.0, ladder(0.0, 0.5 * width, 8.0, 1.0));
        let conv = integrate_converged(f, &panels, &rule, 1e-10, 6).unwrap();
        let want = 2.0 / std::f64::consts::PI * (1.0 / width).atan();
        assert!((conv.value - want).abs() < 1e-9, "{} vs {want}", conv.value);
    }

    #[test]
    fn bisection_reaches_machine_precision() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((root - std::f64::consts::SQRT_2).abs() <= 2.0 * f64::EPSILON);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn chebyshev_table_interpolates_smooth_function() {
        let edges = ChebyshevTable::edges(1.0, 4.0, 1.1);
        let samples = edges
            .windows(2)
            .map(|w| {
                ChebyshevTable::panel_nodes(w[0], w[1], 14)
                    .into_iter()
                    .map(|x| x.ln() * x.sqrt())
                    .collect()
            })
            .collect();
        let table = ChebyshevTable::from_samples(edges, samples);
        for i in 0..=300 {
            let x = 1.0 + 3.0 * i as f64 / 300.0;
            let want = x.ln() * x.sqrt();
            assert!((table.eval(x) - want).abs() < 1e-14 * want.abs().max(1.0));
        }
    }
}
