//! Independent ground truth for curve pairs in `S^3`: stereographic
//! projection to `R^3` and the classical Gauss integral
//! `Lk = 1/4π ∮∮ (x' × y') · (x - y) / |x - y|^3 ds dt`.

use std::f64::consts::PI;

use crate::catalog::{Manifold, ParamPoint};
use crate::engine::{round_to_linking, EngineConfig, LinkingReport, Method};
use crate::error::{Error, Result};
use crate::quadrature::{refine_until, tree_reduce, GridIntegrand, ProductGrid, Rule1D};
use crate::sphere::{dot, SpherePoint};

/// Smallest admissible distance between the two curves in `R^3`.
pub const MIN_EUCLIDEAN_DISTANCE: f64 = 1e-3;
/// Smallest admissible geodesic distance from the pole to either curve.
pub const POLE_CLEARANCE: f64 = 0.05;
const VALIDATION_POINTS: usize = 1024;
const DEFAULT_ORACLE_NODES: usize = 64;

type V3 = [f64; 3];

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A closed curve in `R^3`.
pub trait EuclideanCurve: Sync {
    /// Point and velocity at parameter `s`.
    fn evaluate(&self, s: f64) -> (V3, V3);
    fn period(&self) -> f64;
}

/// `c + r (cos s · e1 + sin s · e2)`.
#[derive(Debug, Clone)]
pub struct RoundCircle {
    pub center: V3,
    pub e1: V3,
    pub e2: V3,
    pub radius: f64,
}

impl EuclideanCurve for RoundCircle {
    fn evaluate(&self, s: f64) -> (V3, V3) {
        let (sn, cs) = s.sin_cos();
        let r = self.radius;
        let p = std::array::from_fn(|i| self.center[i] + r * (cs * self.e1[i] + sn * self.e2[i]));
        let v = std::array::from_fn(|i| r * (-sn * self.e1[i] + cs * self.e2[i]));
        (p, v)
    }

    fn period(&self) -> f64 {
        2.0 * PI
    }
}

/// The same curve traversed backwards.
pub struct Reversed<'a, C: EuclideanCurve>(pub &'a C);

impl<C: EuclideanCurve> EuclideanCurve for Reversed<'_, C> {
    fn evaluate(&self, s: f64) -> (V3, V3) {
        let (p, v) = self.0.evaluate(self.0.period() - s);
        (p, [-v[0], -v[1], -v[2]])
    }

    fn period(&self) -> f64 {
        self.0.period()
    }
}

/// A curve of `S^3` seen through stereographic projection from `pole`.
#[derive(Debug, Clone)]
pub struct ProjectedCurve {
    curve: Manifold,
    pole: [f64; 4],
    /// Orthonormal basis of `pole^⊥` with `det(-pole, b1, b2, b3) > 0`, so
    /// the projection preserves orientation.
    basis: [[f64; 4]; 3],
    period: f64,
    lo: f64,
}

impl EuclideanCurve for ProjectedCurve {
    fn evaluate(&self, s: f64) -> (V3, V3) {
        let t = self.curve.evaluate(&ParamPoint::new(vec![self.lo + s]));
        let x = t.base.coords();
        let dx = &t.columns[0];
        let c = 1.0 - dot(x, &self.pole);
        let dc = -dot(dx, &self.pole);
        let mut p = [0.0; 3];
        let mut v = [0.0; 3];
        for i in 0..3 {
            let xb = dot(x, &self.basis[i]);
            p[i] = xb / c;
            v[i] = dot(dx, &self.basis[i]) / c - xb * dc / (c * c);
        }
        (p, v)
    }

    fn period(&self) -> f64 {
        self.period
    }
}

fn pole_basis(pole: &[f64; 4]) -> [[f64; 4]; 3] {
    // Gram–Schmidt of the coordinate axes against the pole
    let mut basis: Vec<[f64; 4]> = Vec::with_capacity(3);
    let mut axes: Vec<usize> = (0..4).collect();
    axes.sort_by(|&a, &b| pole[a].abs().total_cmp(&pole[b].abs()));
    for &a in &axes {
        if basis.len() == 3 {
            break;
        }
        let mut v = [0.0; 4];
        v[a] = 1.0;
        let mut against = vec![*pole];
        against.extend(basis.iter().copied());
        for q in &against {
            let d = dot(&v, q);
            for i in 0..4 {
                v[i] -= d * q[i];
            }
        }
        let r = dot(&v, &v).sqrt();
        if r > 1e-6 {
            basis.push(v.map(|c| c / r));
        }
    }
    let mut b = [basis[0], basis[1], basis[2]];
    let neg: Vec<f64> = pole.iter().map(|c| -c).collect();
    let det = crate::sphere::determinant(&[&neg, &b[0], &b[1], &b[2]]).expect("4x4");
    if det < 0.0 {
        b.swap(0, 1);
    }
    b
}

fn curve_samples(curve: &Manifold) -> Result<Vec<Vec<f64>>> {
    let axis = curve.chart()[0];
    let h = (axis.hi - axis.lo) / VALIDATION_POINTS as f64;
    Ok((0..VALIDATION_POINTS)
        .map(|i| {
            curve
                .evaluate(&ParamPoint::new(vec![axis.lo + h * i as f64]))
                .base
                .into_coords()
        })
        .collect())
}

fn check_s3_curve(curve: &Manifold) -> Result<()> {
    if curve.ambient_n() != 3 || curve.dim() != 1 || curve.sheets().len() != 1 {
        return Err(Error::Dimension(format!(
            "the oracle needs closed curves in S^3, got a {}-manifold in S^{}",
            curve.dim(),
            curve.ambient_n()
        )));
    }
    Ok(())
}

/// Projects `curve` from `pole`.
pub fn stereographic_project(curve: &Manifold, pole: &SpherePoint) -> Result<ProjectedCurve> {
    check_s3_curve(curve)?;
    let pole: [f64; 4] = pole
        .coords()
        .try_into()
        .map_err(|_| Error::Dimension("pole must lie in S^3".into()))?;
    let samples = curve_samples(curve)?;
    let closest = samples
        .iter()
        .map(|x| dot(x, &pole).clamp(-1.0, 1.0).acos())
        .fold(f64::INFINITY, f64::min);
    if closest <= POLE_CLEARANCE {
        return Err(Error::Projection(format!(
            "pole within {closest:.3e} rad of the curve (needs > {POLE_CLEARANCE})"
        )));
    }
    let axis = curve.chart()[0];
    let projected = ProjectedCurve {
        curve: curve.clone(),
        pole,
        basis: pole_basis(&pole),
        period: axis.hi - axis.lo,
        lo: axis.lo,
    };
    let h = projected.period / VALIDATION_POINTS as f64;
    for i in 0..VALIDATION_POINTS {
        let (_, v) = projected.evaluate(h * i as f64);
        if dot(&v, &v).sqrt() <= 1e-8 {
            return Err(Error::Degenerate(format!("projected velocity vanishes at s = {}", h * i as f64)));
        }
    }
    Ok(projected)
}

/// The fixed candidate poles: `(±1/2, ±1/2, ±1/2, ±1/2)` and `e_0..e_3`.
pub fn candidate_poles() -> Vec<SpherePoint> {
    let mut out = Vec::with_capacity(20);
    for bits in 0..16u32 {
        let v = (0..4).map(|i| if bits >> i & 1 == 0 { 0.5 } else { -0.5 }).collect();
        out.push(SpherePoint::new(v).expect("unit"));
    }
    for i in 0..4 {
        out.push(SpherePoint::axis(3, i).expect("axis"));
    }
    out
}

/// The candidate pole farthest from both curves; the first one wins ties.
pub fn choose_pole(k: &Manifold, l: &Manifold) -> Result<SpherePoint> {
    check_s3_curve(k)?;
    check_s3_curve(l)?;
    let mut pts = curve_samples(k)?;
    pts.extend(curve_samples(l)?);
    let mut best: Option<(f64, SpherePoint)> = None;
    for p in candidate_poles() {
        let clearance = pts
            .iter()
            .map(|x| dot(x, p.coords()).clamp(-1.0, 1.0).acos())
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(c, _)| clearance > *c) {
            best = Some((clearance, p));
        }
    }
    let (clearance, pole) = best.expect("candidates");
    if clearance <= POLE_CLEARANCE {
        return Err(Error::Projection(format!(
            "no candidate pole clears both curves (best {clearance:.3e} rad)"
        )));
    }
    Ok(pole)
}

struct GaussIntegrand<'a> {
    k: &'a dyn EuclideanCurve,
    l: &'a dyn EuclideanCurve,
}

fn sample_curve(c: &dyn EuclideanCurve, rule: &Rule1D) -> Vec<(V3, V3, f64)> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| {
            let (p, v) = c.evaluate(s);
            (p, v, w)
        })
        .collect()
}

impl GridIntegrand for GaussIntegrand<'_> {
    fn integrate_grid(&self, grid: &ProductGrid) -> Result<f64> {
        let a = sample_curve(self.k, &grid.factors[0]);
        let b = sample_curve(self.l, &grid.factors[1]);
        let nb = b.len();
        let (sum, closest) = tree_reduce(
            a.len() * nb,
            (0.0, f64::INFINITY),
            |i| {
                let (x, dx, wx) = &a[i / nb];
                let (y, dy, wy) = &b[i % nb];
                let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                let d2 = dot(&r, &r);
                let d = d2.sqrt();
                (wx * wy * dot(&cross(*dx, *dy), &r) / (d2 * d), d)
            },
            |p: (f64, f64), q: (f64, f64)| (p.0 + q.0, p.1.min(q.1)),
        );
        if !(closest > MIN_EUCLIDEAN_DISTANCE) {
            return Err(Error::TooClose {
                min_distance: closest,
                threshold: MIN_EUCLIDEAN_DISTANCE,
            });
        }
        Ok(sum / (4.0 * PI))
    }
}

/// Gauss linking integral of two closed curves in `R^3` by the periodic
/// trapezoid rule, refined until the doubling difference is below
/// `cfg.tol`. Node counts come from `cfg.grid.k` / `cfg.grid.l`.
pub fn gauss_linking_integral(
    k: &dyn EuclideanCurve,
    l: &dyn EuclideanCurve,
    cfg: &EngineConfig,
) -> Result<LinkingReport> {
    let grid = ProductGrid::new(vec![
        Rule1D::periodic_trapezoid(0.0, k.period(), cfg.grid.k.unwrap_or(DEFAULT_ORACLE_NODES)),
        Rule1D::periodic_trapezoid(0.0, l.period(), cfg.grid.l.unwrap_or(DEFAULT_ORACLE_NODES)),
    ]);
    let r = refine_until(&grid, &GaussIntegrand { k, l }, cfg.tol, cfg.max_level)?;
    let est = r.estimate;
    let rounding = round_to_linking(est.value, est.error_estimate, &cfg.thresholds);
    Ok(LinkingReport {
        method: Method::GaussOracle,
        raw_value: est.value,
        nearest_integer: rounding.nearest,
        residual: rounding.residual,
        error_estimate: est.error_estimate,
        // not defined for curves in R^3; oracle_with_pole fills them in
        min_alpha: 0.0,
        max_alpha: 0.0,
        converged: r.converged,
        accepted: rounding.accepted,
        levels_used: est.levels_used,
        linking_number: (rounding.accepted && r.converged).then_some(rounding.nearest),
        history: r.history,
    })
}

/// `Lk(K, L)` of two curves in `S^3` through a fixed pole.
pub fn oracle_with_pole(k: &Manifold, l: &Manifold, pole: &SpherePoint, cfg: &EngineConfig) -> Result<LinkingReport> {
    let pk = stereographic_project(k, pole)?;
    let pl = stereographic_project(l, pole)?;
    let mut rep = gauss_linking_integral(&pk, &pl, cfg)?;
    let (lo, hi) = crate::catalog::distance_range(k.as_ref(), l.as_ref(), 64);
    rep.min_alpha = lo;
    rep.max_alpha = hi;
    Ok(rep)
}

/// `Lk(K, L)` of two curves in `S^3` through the automatically chosen pole.
pub fn oracle_linking(k: &Manifold, l: &Manifold, cfg: &EngineConfig) -> Result<(LinkingReport, SpherePoint)> {
    let pole = choose_pole(k, l)?;
    Ok((oracle_with_pole(k, l, &pole, cfg)?, pole))
}

/// Secondary oracle: half the signed crossing count of the polygons with
/// `m` vertices each, seen from `+z`. A crossing is positive when the
/// over-strand turns counterclockwise onto the under-strand.
pub fn crossing_count(k: &dyn EuclideanCurve, l: &dyn EuclideanCurve, m: usize) -> f64 {
    let poly = |c: &dyn EuclideanCurve| -> Vec<V3> {
        (0..m).map(|i| c.evaluate(c.period() * i as f64 / m as f64).0).collect()
    };
    let (a, b) = (poly(k), poly(l));
    let mut total = 0.0;
    for i in 0..m {
        let (p0, p1) = (a[i], a[(i + 1) % m]);
        for j in 0..m {
            let (q0, q1) = (b[j], b[(j + 1) % m]);
            let da = [p1[0] - p0[0], p1[1] - p0[1]];
            let db = [q1[0] - q0[0], q1[1] - q0[1]];
            let den = da[0] * db[1] - da[1] * db[0];
            if den == 0.0 {
                continue;
            }
            let w = [q0[0] - p0[0], q0[1] - p0[1]];
            let s = (w[0] * db[1] - w[1] * db[0]) / den;
            let t = (w[0] * da[1] - w[1] * da[0]) / den;
            if !((0.0..1.0).contains(&s) && (0.0..1.0).contains(&t)) {
                continue;
            }
            let za = p0[2] + s * (p1[2] - p0[2]);
            let zb = q0[2] + t * (q1[2] - q0[2]);
            // sign of (over × under)
            let turn = if za > zb { den } else { -den };
            total += turn.signum();
        }
    }
    total / 2.0
}
