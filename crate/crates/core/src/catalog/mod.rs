//! Parametrized oriented submanifolds of `S^n` with analytic Jacobians.
//!
//! A submanifold exposes one or more *sheets*, each a copy of the same chart
//! domain carrying a signed weight. Ordinary manifolds have a single sheet of
//! weight `+1`; a 0-sphere is two sheets with no chart coordinates and
//! weights `+1` (at `+e`) and `-1` (at `-e`), so integrating over it is a
//! signed sum.

mod curves;
mod entry;
mod spheres;
mod transform;

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

pub use curves::{clifford_torus_curve, fourier_curve, hopf_fiber, perturbed_great_circle, FourierCurve};
pub use entry::{catalog_schemas, CatalogEntry, FourierCoefficients, FourierPerturbation, KindSchema};
pub use spheres::{great_subsphere, small_round_sphere, EmbeddedSphere};
pub use transform::{antipodal_image, reversed, rotated, AntipodalImage, Reversed, Rotated};

use crate::error::{Error, Result};
use crate::quadrature::Rule1D;
use crate::sphere::{dot, norm, TangentColumns};

/// One coordinate direction of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartAxis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl ChartAxis {
    pub const ANGLE: ChartAxis = ChartAxis {
        lo: 0.0,
        hi: 2.0 * PI,
        periodic: true,
    };
    pub const POLAR: ChartAxis = ChartAxis {
        lo: 0.0,
        hi: PI,
        periodic: false,
    };
}

/// Local coordinates on one sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub sheet: usize,
    pub values: Vec<f64>,
}

impl ParamPoint {
    pub fn new(values: Vec<f64>) -> Self {
        Self { sheet: 0, values }
    }
}

/// A closed oriented submanifold of `S^n` given by a chart.
pub trait Submanifold: Send + Sync + Debug {
    /// Intrinsic dimension.
    fn dim(&self) -> usize;

    /// `n` of the ambient `S^n`.
    fn ambient_n(&self) -> usize;

    /// The chart domain, one axis per intrinsic dimension.
    fn chart(&self) -> Vec<ChartAxis>;

    /// Signed weight of every sheet.
    fn sheets(&self) -> Vec<f64> {
        vec![1.0]
    }

    /// Unit base point and exactly `dim()` tangent columns in chart order.
    fn evaluate(&self, p: &ParamPoint) -> TangentColumns;
}

pub type Manifold = Arc<dyn Submanifold>;

/// Quadrature factors for `m`: a discrete sheet factor when there is more
/// than one sheet, then one rule per chart axis with `nodes_per_dim` nodes.
pub fn chart_rules(m: &dyn Submanifold, nodes_per_dim: usize) -> Vec<Rule1D> {
    let mut rules = Vec::new();
    let sheets = m.sheets();
    if sheets.len() > 1 || sheets[0] != 1.0 {
        rules.push(Rule1D::discrete(sheets));
    }
    for axis in m.chart() {
        rules.push(if axis.periodic {
            Rule1D::periodic_trapezoid(axis.lo, axis.hi, nodes_per_dim)
        } else {
            Rule1D::gauss_legendre(axis.lo, axis.hi, nodes_per_dim)
        });
    }
    rules
}

/// Splits grid coordinates of `m`'s factors into a [`ParamPoint`].
pub fn param_from_coords(m: &dyn Submanifold, coords: &[f64]) -> ParamPoint {
    let sheets = m.sheets();
    if sheets.len() > 1 || sheets[0] != 1.0 {
        ParamPoint {
            sheet: coords[0] as usize,
            values: coords[1..].to_vec(),
        }
    } else {
        ParamPoint {
            sheet: 0,
            values: coords.to_vec(),
        }
    }
}

/// Samples per chart dimension used by [`validate`].
fn validation_nodes(dim: usize) -> usize {
    match dim {
        0 | 1 => 256,
        2 => 32,
        3 => 10,
        _ => 6,
    }
}

/// Checks unit norm, tangency and Jacobian rank on a dense grid.
pub fn validate(m: &dyn Submanifold) -> Result<()> {
    let rules = chart_rules(m, validation_nodes(m.dim()));
    let grid = crate::quadrature::ProductGrid::new(rules);
    let mut coords = vec![0.0; grid.factors.len()];
    for i in 0..grid.total_points() {
        grid.node(i, &mut coords);
        let p = param_from_coords(m, &coords);
        let f = m.evaluate(&p);
        if f.base.coords().len() != m.ambient_n() + 1 || f.columns.len() != m.dim() {
            return Err(Error::Dimension(format!(
                "chart returned {} coordinates and {} tangents, expected {} and {}",
                f.base.coords().len(),
                f.columns.len(),
                m.ambient_n() + 1,
                m.dim()
            )));
        }
        let r = norm(f.base.coords());
        if (r - 1.0).abs() > 1e-12 {
            return Err(Error::Degenerate(format!("|x| = {r} at {:?}", p.values)));
        }
        if f.tangency_defect() > 1e-9 {
            return Err(Error::Degenerate(format!(
                "tangent not orthogonal to base at {:?}",
                p.values
            )));
        }
        if !full_rank(&f.columns) {
            return Err(Error::Degenerate(format!(
                "rank-deficient Jacobian at {:?}",
                p.values
            )));
        }
    }
    Ok(())
}

/// Gram determinant over the product of squared norms (Hadamard ratio).
fn full_rank(columns: &[Vec<f64>]) -> bool {
    let d = columns.len();
    if d == 0 {
        return true;
    }
    let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    if norms.iter().any(|&v| !(v > 1e-10)) {
        return false;
    }
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            gram[i * d + j] = dot(&columns[i], &columns[j]) / (norms[i] * norms[j]);
        }
    }
    crate::sphere::lu_determinant(&mut gram, d) > 1e-10
}

/// Smallest and largest geodesic distance between `k` and `l` over the
/// product of their quadrature nodes.
pub fn distance_range(k: &dyn Submanifold, l: &dyn Submanifold, nodes_per_dim: usize) -> (f64, f64) {
    let pts = |m: &dyn Submanifold| -> Vec<Vec<f64>> {
        let grid = crate::quadrature::ProductGrid::new(chart_rules(m, nodes_per_dim));
        let mut c = vec![0.0; grid.factors.len()];
        (0..grid.total_points())
            .map(|i| {
                grid.node(i, &mut c);
                m.evaluate(&param_from_coords(m, &c)).base.into_coords()
            })
            .collect()
    };
    let (a, b) = (pts(k), pts(l));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in &a {
        for y in &b {
            let d = dot(x, y);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (hi.clamp(-1.0, 1.0).acos(), lo.clamp(-1.0, 1.0).acos())
}
