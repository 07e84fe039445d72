//! Tensor-product quadrature with refinement error estimates.
//!
//! Node order is lexicographic in factor order (last factor fastest) and all
//! sums go through [`tree_reduce`], whose pairing depends only on the node
//! count. Results are therefore bit-identical for any worker count.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Summands per parallel work unit. Fixed, so the reduction tree is too.
const CHUNK: usize = 4096;
const LEAF: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    PeriodicTrapezoid,
    GaussLegendre,
    /// Finite signed point set; nodes are indices, weights are signs.
    Discrete,
}

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
    pub periodic: bool,
}

impl Rule1D {
    /// Equally spaced nodes `a + (b-a) i / m` with equal weights.
    pub fn periodic_trapezoid(a: f64, b: f64, m: usize) -> Self {
        assert!(m > 0, "need at least one node");
        let h = (b - a) / m as f64;
        Self {
            kind: RuleKind::PeriodicTrapezoid,
            nodes: (0..m).map(|i| a + h * i as f64).collect(),
            weights: vec![h; m],
            interval: (a, b),
            periodic: true,
        }
    }

    pub fn gauss_legendre(a: f64, b: f64, m: usize) -> Self {
        let (x, w) = gauss_legendre_unit(m);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            kind: RuleKind::GaussLegendre,
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * half).collect(),
            interval: (a, b),
            periodic: false,
        }
    }

    /// Summation over `signs.len()` points with the given signed weights.
    pub fn discrete(signs: Vec<f64>) -> Self {
        let m = signs.len();
        Self {
            kind: RuleKind::Discrete,
            nodes: (0..m).map(|i| i as f64).collect(),
            weights: signs,
            interval: (0.0, m as f64),
            periodic: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The same rule with twice the nodes. Discrete rules are unchanged.
    pub fn refined(&self) -> Self {
        let (a, b) = self.interval;
        match self.kind {
            RuleKind::PeriodicTrapezoid => Self::periodic_trapezoid(a, b, 2 * self.len()),
            RuleKind::GaussLegendre => Self::gauss_legendre(a, b, 2 * self.len()),
            RuleKind::Discrete => self.clone(),
        }
    }

    /// The same rule with half the nodes (at least one).
    pub fn coarsened(&self) -> Self {
        let (a, b) = self.interval;
        let m = (self.len() / 2).max(1);
        match self.kind {
            RuleKind::PeriodicTrapezoid => Self::periodic_trapezoid(a, b, m),
            RuleKind::GaussLegendre => Self::gauss_legendre(a, b, m),
            RuleKind::Discrete => self.clone(),
        }
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`,
/// ascending.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0, "need at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = weight;
        w[m - 1 - i] = weight;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Product of one-dimensional rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    pub factors: Vec<Rule1D>,
}

impl ProductGrid {
    pub fn new(factors: Vec<Rule1D>) -> Self {
        Self { factors }
    }

    pub fn total_points(&self) -> usize {
        self.factors.iter().map(Rule1D::len).product()
    }

    /// Node coordinates and product weight at flat index `index`.
    pub fn node(&self, index: usize, coords: &mut [f64]) -> f64 {
        let mut rest = index;
        let mut w = 1.0;
        for (d, f) in self.factors.iter().enumerate().rev() {
            let i = rest % f.len();
            rest /= f.len();
            coords[d] = f.nodes[i];
            w *= f.weights[i];
        }
        w
    }

    pub fn refined(&self) -> Self {
        Self {
            factors: self.factors.iter().map(Rule1D::refined).collect(),
        }
    }

    pub fn coarsened(&self) -> Self {
        Self {
            factors: self.factors.iter().map(Rule1D::coarsened).collect(),
        }
    }

    /// Node count of each factor.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Rule1D::len).collect()
    }
}

/// Deterministic parallel reduction over `0..len`.
///
/// `map` may run on any worker; the combination order is a fixed pairwise
/// tree over fixed-size chunks.
pub fn tree_reduce<T, M, C>(len: usize, identity: T, map: M, combine: C) -> T
where
    T: Send + Sync + Clone,
    M: Fn(usize) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if len == 0 {
        return identity;
    }
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            pairwise(lo, hi, &identity, &|i| map(i), &combine)
        })
        .collect();
    pairwise(0, partials.len(), &identity, &|i| partials[i].clone(), &combine)
}

fn pairwise<T: Clone, M: Fn(usize) -> T, C: Fn(T, T) -> T>(
    lo: usize,
    hi: usize,
    identity: &T,
    map: &M,
    combine: &C,
) -> T {
    if hi - lo <= LEAF {
        let mut acc = identity.clone();
        for i in lo..hi {
            acc = combine(acc, map(i));
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let left = pairwise(lo, mid, identity, map, combine);
    let right = pairwise(mid, hi, identity, map, combine);
    combine(left, right)
}

/// Deterministic sum of `f(i)` over `0..len`.
pub fn tree_sum<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    tree_reduce(len, 0.0, f, |a, b| a + b)
}

/// Anything that can produce its weighted sum over a product grid.
pub trait GridIntegrand: Sync {
    fn integrate_grid(&self, grid: &ProductGrid) -> Result<f64>;
}

/// Adapts a pointwise integrand of the node coordinates.
pub struct Pointwise<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> GridIntegrand for Pointwise<F> {
    fn integrate_grid(&self, grid: &ProductGrid) -> Result<f64> {
        let dim = grid.factors.len();
        let (sum, bad) = tree_reduce(
            grid.total_points(),
            (0.0, None),
            |i| {
                let mut coords = vec![0.0; dim];
                let w = grid.node(i, &mut coords);
                let v = (self.0)(&coords);
                if v.is_finite() {
                    (w * v, None)
                } else {
                    (0.0, Some(i))
                }
            },
            |a: (f64, Option<usize>), b| (a.0 + b.0, a.1.or(b.1)),
        );
        if let Some(i) = bad {
            let mut coords = vec![0.0; dim];
            grid.node(i, &mut coords);
            return Err(Error::NonFinite(format!("{coords:?}")));
        }
        Ok(sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// `|value_fine - value_coarse|` from one doubling step.
    pub error_estimate: f64,
    pub levels_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Nodes of the finer grid of the comparison pair.
    pub nodes: usize,
    pub value: f64,
    pub error_estimate: f64,
}

/// Outcome of [`refine_until`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub estimate: Estimate,
    pub converged: bool,
    pub history: Vec<LevelRecord>,
}

/// Fine-grid value of `grid` with the doubling difference as its error.
pub fn integrate<I: GridIntegrand + ?Sized>(grid: &ProductGrid, integrand: &I) -> Result<Estimate> {
    let coarse = integrand.integrate_grid(grid)?;
    let fine = integrand.integrate_grid(&grid.refined())?;
    Ok(Estimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
        levels_used: 0,
    })
}

/// Doubles every factor until the error estimate drops below `tol` or
/// `max_level` doublings beyond the first comparison have been spent.
pub fn refine_until<I: GridIntegrand + ?Sized>(
    grid0: &ProductGrid,
    integrand: &I,
    tol: f64,
    max_level: usize,
) -> Result<Refinement> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut grid = grid0.clone();
    let mut coarse = integrand.integrate_grid(&grid)?;
    let mut history = Vec::new();
    let mut level = 0;
    loop {
        let fine_grid = grid.refined();
        let fine = integrand.integrate_grid(&fine_grid)?;
        let err = (fine - coarse).abs();
        history.push(LevelRecord {
            level,
            nodes: fine_grid.total_points(),
            value: fine,
            error_estimate: err,
        });
        let converged = err < tol;
        if converged || level >= max_level {
            return Ok(Refinement {
                estimate: Estimate {
                    value: fine,
                    error_estimate: err,
                    levels_used: level,
                },
                converged,
                history,
            });
        }
        grid = fine_grid;
        coarse = fine;
        level += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_constants() {
        for m in [1, 2, 5, 16, 33, 64] {
            let gl = Rule1D::gauss_legendre(0.3, 2.9, m);
            assert!((gl.weights.iter().sum::<f64>() - 2.6).abs() < 1e-12, "m = {m}");
            let tr = Rule1D::periodic_trapezoid(0.0, 2.0 * PI, m);
            assert!((tr.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_degree_exactness() {
        let rule = Rule1D::gauss_legendre(-1.0, 2.0, 4);
        // integral of x^7 - 3x^4 + x over [-1, 2]
        let f = |x: f64| x.powi(7) - 3.0 * x.powi(4) + x;
        let exact = (256.0 - 1.0) / 8.0 - 3.0 * (32.0 + 1.0) / 5.0 + (4.0 - 1.0) / 2.0;
        let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(*x)).sum();
        assert!((q - exact).abs() < 1e-12);
        // degree 8 is no longer exact
        let g = |x: f64| x.powi(8);
        let q8: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * g(*x)).sum();
        assert!((q8 - (512.0 + 1.0) / 9.0).abs() > 1e-6);
    }

    #[test]
    fn gauss_legendre_nodes_stay_inside() {
        let r = Rule1D::gauss_legendre(0.0, PI, 128);
        assert!(r.nodes[0] > 0.0 && *r.nodes.last().unwrap() < PI);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    fn torus(m: usize) -> ProductGrid {
        ProductGrid::new(vec![
            Rule1D::periodic_trapezoid(0.0, 2.0 * PI, m),
            Rule1D::periodic_trapezoid(0.0, 2.0 * PI, m),
        ])
    }

    #[test]
    fn constant_over_torus() {
        let e = integrate(&torus(8), &Pointwise(|_: &[f64]| 1.0)).unwrap();
        assert!((e.value - 4.0 * PI * PI).abs() < 1e-12);
        assert!(e.error_estimate < 1e-12);
    }

    #[test]
    fn orthogonal_modes_vanish() {
        let e = integrate(&torus(16), &Pointwise(|p: &[f64]| p[0].sin() * p[1].cos())).unwrap();
        assert!(e.value.abs() < 1e-14);
    }

    #[test]
    fn node_order_is_lexicographic() {
        let g = ProductGrid::new(vec![Rule1D::discrete(vec![1.0, -1.0]), Rule1D::periodic_trapezoid(0.0, 1.0, 3)]);
        let mut c = [0.0; 2];
        let w = g.node(4, &mut c);
        assert_eq!(c, [1.0, 1.0 / 3.0]);
        assert!((w + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.refined().shape(), vec![2, 6]);
    }

    #[test]
    fn non_finite_values_name_the_node() {
        let g = ProductGrid::new(vec![Rule1D::periodic_trapezoid(0.0, 1.0, 4)]);
        let err = integrate(&g, &Pointwise(|p: &[f64]| if p[0] == 0.5 { f64::NAN } else { 1.0 })).unwrap_err();
        assert_eq!(err, Error::NonFinite("[0.5]".into()));
    }

    #[test]
    fn infinite_tolerance_returns_the_base_estimate() {
        let f = Pointwise(|p: &[f64]| (p[0].cos()).exp());
        let g = ProductGrid::new(vec![Rule1D::periodic_trapezoid(0.0, 2.0 * PI, 4)]);
        let r = refine_until(&g, &f, f64::INFINITY, 5).unwrap();
        assert_eq!(r.estimate, integrate(&g, &f).unwrap());
        assert_eq!(r.estimate.levels_used, 0);
        assert!(r.converged);
    }

    #[test]
    fn periodic_trapezoid_converges_spectrally() {
        // 2π I0(1)
        let exact = 7.954_926_521_012_845;
        let f = Pointwise(|p: &[f64]| (p[0].cos()).exp());
        let g = ProductGrid::new(vec![Rule1D::periodic_trapezoid(0.0, 2.0 * PI, 2)]);
        let r = refine_until(&g, &f, 1e-14, 6).unwrap();
        assert!(r.converged);
        assert!((r.estimate.value - exact).abs() < 1e-13);
        let errs: Vec<f64> = r.history.iter().map(|h| h.error_estimate).collect();
        assert!(errs[1] < errs[0] / 10.0);
    }

    #[test]
    fn refinement_reports_non_convergence() {
        let f = Pointwise(|p: &[f64]| 1.0 / (1.0001 - p[0].cos()));
        let g = ProductGrid::new(vec![Rule1D::periodic_trapezoid(0.0, 2.0 * PI, 4)]);
        let r = refine_until(&g, &f, 1e-12, 2).unwrap();
        assert!(!r.converged);
        assert_eq!(r.estimate.levels_used, 2);
        assert_eq!(r.history.len(), 3);
    }

    #[test]
    fn tree_sum_is_independent_of_worker_count() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let n = 3 * CHUNK + 17;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| tree_sum(n, f))
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
        let naive: f64 = (0..n).map(f).sum();
        assert!((run(2) - naive).abs() < 1e-10);
    }
}
