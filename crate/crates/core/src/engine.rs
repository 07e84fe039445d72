//! The three linking evaluators and integer rounding.
//!
//! * main theorem: `Lk = 1/vol S^n ∫_{K×L} phi(α)/sin^n α [x, dx, y, dy]`;
//! * corollary: `Lk(K, L) + (-1)^n Lk(K, -L)` from the convolution kernel;
//! * join degree: `deg f` of the join map `f: K * L → S^n`, either from
//!   the pulled-back volume form with finite-difference partials (`full`)
//!   or from the reduced integrand in `α`, `u` (`reduced`). `deg f = -Lk`.
//!
//! Brackets are evaluated by Laplace expansion over the first `k + 1`
//! columns: every node of `K` carries the `(k+1)`-minors of `(x, dx)` and
//! every node of `L` the complementary minors of `(y, dy)`, so a node pair
//! costs one short dot product.

use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{chart_rules, param_from_coords, Manifold, ParamPoint, Submanifold};
use crate::error::{Error, Result};
use crate::kernel::{KernelEvaluator, KernelMode};
use crate::quadrature::{refine_until, tree_reduce, GridIntegrand, LevelRecord, ProductGrid, Rule1D};
use crate::signs::{parity, sign_factors, SignFactors};
use crate::sphere::{dot, lu_determinant, sphere_volume, SpherePoint, MAX_AMBIENT};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_LEVEL: usize = 4;
pub const DEFAULT_U_NODES: usize = 32;
/// Central-difference step of the `full` join-degree variant.
pub const FD_STEP: f64 = 1e-5;

/// Nodes per chart dimension when the caller gives none.
pub fn default_nodes(dim: usize) -> usize {
    match dim {
        0 | 1 => 64,
        2 => 32,
        3 => 16,
        _ => 8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MainTheorem,
    Corollary,
    JoinDegreeFull,
    JoinDegreeReduced,
    GaussOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinVariant {
    Full,
    Reduced,
}

/// Disjointness and rounding thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Smallest admissible distance between `K` and `L`.
    pub min_alpha: f64,
    /// The corollary needs `max α < π - antipodal_margin`.
    pub antipodal_margin: f64,
    pub max_residual: f64,
    pub error_factor: f64,
    pub error_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_alpha: 0.01,
            antipodal_margin: 0.01,
            max_residual: 0.25,
            error_factor: 10.0,
            error_floor: 1e-6,
        }
    }
}

/// Nodes per chart dimension of `K`, of `L`, and on the join segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub grid: GridOverrides,
    pub tol: f64,
    pub max_level: usize,
    pub thresholds: Thresholds,
    pub fd_step: f64,
    /// Forces closed-form or numeric kernels; `None` prefers closed forms.
    pub kernel_mode: Option<KernelMode>,
    /// Caller asserts that `K` and `L` lie in a common open hemisphere, so
    /// `Lk(K, -L) = 0` and the corollary value is `Lk(K, L)` itself.
    pub common_hemisphere: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            grid: GridOverrides::default(),
            tol: DEFAULT_TOL,
            max_level: DEFAULT_MAX_LEVEL,
            thresholds: Thresholds::default(),
            fd_step: FD_STEP,
            kernel_mode: None,
            common_hemisphere: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingReport {
    pub method: Method,
    pub raw_value: f64,
    pub nearest_integer: i64,
    /// `|raw_value - nearest_integer|`.
    pub residual: f64,
    pub error_estimate: f64,
    pub min_alpha: f64,
    pub max_alpha: f64,
    pub converged: bool,
    pub accepted: bool,
    pub levels_used: usize,
    /// `Lk(K, L)` as implied by the method, when it determines one and the
    /// value is both converged and accepted.
    pub linking_number: Option<i64>,
    pub history: Vec<LevelRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rounding {
    pub nearest: i64,
    pub residual: f64,
    pub accepted: bool,
}

/// Nearest integer, residual, and whether the value is trustworthy:
/// `residual ≤ max_residual` and `residual ≤ error_factor · err + error_floor`.
pub fn round_to_linking(raw: f64, error_estimate: f64, t: &Thresholds) -> Rounding {
    let nearest = raw.round();
    let residual = (raw - nearest).abs();
    let accepted = raw.is_finite()
        && residual <= t.max_residual
        && residual <= t.error_factor * error_estimate + t.error_floor;
    Rounding {
        nearest: nearest as i64,
        residual,
        accepted,
    }
}

/// The join map at one point, with the abbreviations `A` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinMapFrame {
    pub alpha: f64,
    pub u: f64,
    /// `sin α cos(u(π-α)) + cos α sin(u(π-α))`
    pub a: f64,
    /// `sin(u(π-α))`
    pub b: f64,
    pub f: SpherePoint,
}

/// `f(x, y, u) = x cos(u(π-α)) - (y - x cos α)/sin α · sin(u(π-α))`, the
/// point at fraction `u` along the long great-circle arc from `x` to `-y`.
/// Returns `false` when `x = ±y`.
#[inline]
fn join_into(x: &[f64], y: &[f64], u: f64, out: &mut [f64]) -> bool {
    let d = dot(x, y).clamp(-1.0, 1.0);
    let mut s2 = 0.0;
    for i in 0..x.len() {
        let e = y[i] - d * x[i];
        out[i] = e;
        s2 += e * e;
    }
    if s2 == 0.0 {
        return false;
    }
    let sa = s2.sqrt();
    let th = u * (PI - d.acos());
    let (s, c) = th.sin_cos();
    for i in 0..x.len() {
        out[i] = x[i] * c - out[i] / sa * s;
    }
    true
}

pub fn join_frame(x: &SpherePoint, y: &SpherePoint, u: f64) -> Result<JoinMapFrame> {
    if x.coords().len() != y.coords().len() {
        return Err(Error::Dimension(format!(
            "x in R^{}, y in R^{}",
            x.coords().len(),
            y.coords().len()
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("u = {u} outside [0, 1]")));
    }
    let g = crate::sphere::geodesic_distance(x, y)?;
    let mut f = vec![0.0; x.coords().len()];
    if g.alpha <= 0.0 || g.alpha >= PI || !join_into(x.coords(), y.coords(), u, &mut f) {
        return Err(Error::InvalidArgument(format!(
            "join map needs 0 < alpha < pi, got {}",
            g.alpha
        )));
    }
    let th = u * (PI - g.alpha);
    Ok(JoinMapFrame {
        alpha: g.alpha,
        u,
        a: g.sin_alpha * th.cos() + g.cos_alpha * th.sin(),
        b: th.sin(),
        f: SpherePoint::new(f)?,
    })
}

pub fn join_map(x: &SpherePoint, y: &SpherePoint, u: f64) -> Result<SpherePoint> {
    Ok(join_frame(x, y, u)?.f)
}

/// Row subsets and signs of the Laplace expansion of an `(n+1)`-square
/// determinant along its first `k + 1` columns.
#[derive(Debug, Clone)]
struct MinorPlan {
    k_rows: Vec<Vec<usize>>,
    l_rows: Vec<Vec<usize>>,
    signs: Vec<f64>,
}

impl MinorPlan {
    fn new(k: usize, n: usize) -> Self {
        let size = n + 1;
        let mut k_rows = Vec::new();
        let mut l_rows = Vec::new();
        let mut signs = Vec::new();
        for mask in 0u32..(1 << size) {
            if mask.count_ones() as usize != k + 1 {
                continue;
            }
            let rows: Vec<usize> = (0..size).filter(|i| mask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..size).filter(|i| mask >> i & 1 == 0).collect();
            // (-1)^{Σ(i+1) + Σ_{j=1}^{k+1} j}
            let s: usize = rows.iter().map(|i| i + 1).sum::<usize>() + (k + 1) * (k + 2) / 2;
            k_rows.push(rows);
            l_rows.push(rest);
            signs.push(parity(s));
        }
        Self { k_rows, l_rows, signs }
    }

    fn len(&self) -> usize {
        self.signs.len()
    }
}

fn minor(rows: &[usize], cols: &[&[f64]]) -> f64 {
    let m = rows.len();
    let mut a = [0.0; MAX_AMBIENT * MAX_AMBIENT];
    for (r, &row) in rows.iter().enumerate() {
        for (c, col) in cols.iter().enumerate() {
            a[r * m + c] = col[row];
        }
    }
    lu_determinant(&mut a[..m * m], m)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    K,
    L,
}

/// Everything the pair loop needs about the nodes of one submanifold.
struct Samples {
    stride: usize,
    weights: Vec<f64>,
    points: Vec<f64>,
    minors: Vec<f64>,
    /// Per node and chart axis: the points at `+h` and `-h`.
    shifted: Vec<f64>,
    axes: usize,
}

impl Samples {
    fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn minors(&self, i: usize, c: usize) -> &[f64] {
        &self.minors[i * c..(i + 1) * c]
    }

    /// `x(s ± h e_axis)`, `sign` 0 for `+`, 1 for `-`.
    #[inline]
    fn shifted(&self, i: usize, axis: usize, sign: usize) -> &[f64] {
        let o = ((i * self.axes + axis) * 2 + sign) * self.stride;
        &self.shifted[o..o + self.stride]
    }
}

fn sample(
    m: &dyn Submanifold,
    factors: &[Rule1D],
    side: Side,
    plan: &MinorPlan,
    fd_step: Option<f64>,
) -> Samples {
    let grid = ProductGrid::new(factors.to_vec());
    let stride = m.ambient_n() + 1;
    let axes = if fd_step.is_some() { m.dim() } else { 0 };
    let per_node: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = (0..grid.total_points())
        .into_par_iter()
        .map(|i| {
            let mut coords = vec![0.0; factors.len()];
            let w = grid.node(i, &mut coords);
            let p = param_from_coords(m, &coords);
            let t = m.evaluate(&p);
            let mut cols: Vec<&[f64]> = vec![t.base.coords()];
            cols.extend(t.columns.iter().map(Vec::as_slice));
            let minors: Vec<f64> = match side {
                Side::K => plan.k_rows.iter().map(|r| minor(r, &cols)).collect(),
                Side::L => plan
                    .l_rows
                    .iter()
                    .zip(&plan.signs)
                    .map(|(r, s)| s * minor(r, &cols))
                    .collect(),
            };
            let mut shifted = Vec::with_capacity(axes * 2 * stride);
            if let Some(h) = fd_step {
                for a in 0..axes {
                    for dir in [h, -h] {
                        let mut q: ParamPoint = p.clone();
                        q.values[a] += dir;
                        shifted.extend_from_slice(m.evaluate(&q).base.coords());
                    }
                }
            }
            (w, t.base.into_coords(), minors, shifted)
        })
        .collect();
    let mut s = Samples {
        stride,
        weights: Vec::with_capacity(per_node.len()),
        points: Vec::with_capacity(per_node.len() * stride),
        minors: Vec::with_capacity(per_node.len() * plan.len()),
        shifted: Vec::new(),
        axes,
    };
    for (w, p, mi, sh) in per_node {
        s.weights.push(w);
        s.points.extend(p);
        s.minors.extend(mi);
        s.shifted.extend(sh);
    }
    s
}

#[derive(Clone, Copy)]
struct Acc {
    sum: f64,
    max_dot: f64,
    min_dot: f64,
    bad: bool,
}

impl Acc {
    const EMPTY: Acc = Acc {
        sum: 0.0,
        max_dot: f64::NEG_INFINITY,
        min_dot: f64::INFINITY,
        bad: false,
    };

    fn combine(a: Acc, b: Acc) -> Acc {
        Acc {
            sum: a.sum + b.sum,
            max_dot: a.max_dot.max(b.max_dot),
            min_dot: a.min_dot.min(b.min_dot),
            bad: a.bad || b.bad,
        }
    }
}

/// One evaluator bound to a pair `(K, L)`; integrates over any grid laid
/// out as `K` factors, then `L` factors, then (for the join) `u`.
pub struct Problem {
    method: Method,
    k_man: Manifold,
    l_man: Manifold,
    k: usize,
    l: usize,
    n: usize,
    kernel: Option<KernelEvaluator>,
    plan: MinorPlan,
    signs: SignFactors,
    volume: f64,
    cfg: EngineConfig,
    k_factors: usize,
    l_factors: usize,
    /// Smallest and largest distance seen on any grid so far.
    extremes: Mutex<(f64, f64)>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("method", &self.method)
            .field("k", &self.k)
            .field("l", &self.l)
            .field("n", &self.n)
            .finish()
    }
}

impl Problem {
    pub fn new(method: Method, k_man: &Manifold, l_man: &Manifold, cfg: &EngineConfig) -> Result<Self> {
        if method == Method::GaussOracle {
            return Err(Error::InvalidArgument(
                "the Gauss oracle is evaluated by the oracle module".into(),
            ));
        }
        let n = k_man.ambient_n();
        if l_man.ambient_n() != n {
            return Err(Error::Dimension(format!(
                "K lives in S^{n}, L in S^{}",
                l_man.ambient_n()
            )));
        }
        let (k, l) = (k_man.dim(), l_man.dim());
        if k + l + 1 != n {
            return Err(Error::Dimension(format!(
                "dim K + dim L must equal n - 1 (k + l = n - 1), got k = {k}, l = {l}, n = {n}"
            )));
        }
        if !(cfg.fd_step > 0.0 && cfg.fd_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("fd step {} must be positive", cfg.fd_step)));
        }
        let kernel = match method {
            Method::MainTheorem | Method::Corollary => Some(match cfg.kernel_mode {
                None => KernelEvaluator::new(k, l),
                Some(mode) => KernelEvaluator::with_mode(k, l, mode, 16)?,
            }),
            _ => None,
        };
        Ok(Self {
            method,
            k_man: k_man.clone(),
            l_man: l_man.clone(),
            k,
            l,
            n,
            kernel,
            plan: MinorPlan::new(k, n),
            signs: sign_factors(k, l),
            volume: sphere_volume(n)?,
            cfg: cfg.clone(),
            k_factors: chart_rules(k_man.as_ref(), 1).len(),
            l_factors: chart_rules(l_man.as_ref(), 1).len(),
            extremes: Mutex::new((f64::INFINITY, f64::NEG_INFINITY)),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Kernel mode of the kernel this method integrates, if any.
    pub fn kernel_mode(&self) -> Option<KernelMode> {
        let ev = self.kernel.as_ref()?;
        Some(match self.method {
            Method::Corollary => ev.conv_mode(),
            _ => ev.phi_mode(),
        })
    }

    fn is_join(&self) -> bool {
        matches!(self.method, Method::JoinDegreeFull | Method::JoinDegreeReduced)
    }

    pub fn base_grid(&self) -> ProductGrid {
        let g = &self.cfg.grid;
        let mut factors = chart_rules(
            self.k_man.as_ref(),
            g.k.unwrap_or_else(|| default_nodes(self.k)),
        );
        factors.extend(chart_rules(
            self.l_man.as_ref(),
            g.l.unwrap_or_else(|| default_nodes(self.l)),
        ));
        if self.is_join() {
            factors.push(Rule1D::gauss_legendre(0.0, 1.0, g.u.unwrap_or(DEFAULT_U_NODES)));
        }
        ProductGrid::new(factors)
    }

    /// `(min α, max α)` over every grid integrated so far.
    pub fn alpha_range(&self) -> (f64, f64) {
        *self.extremes.lock().expect("extremes lock")
    }

    fn prefactor(&self) -> f64 {
        let s = match self.method {
            Method::MainTheorem | Method::JoinDegreeFull => 1.0,
            Method::Corollary => self.signs.corollary_prefactor,
            Method::JoinDegreeReduced => self.signs.join_degree,
            Method::GaussOracle => unreachable!(),
        };
        s / self.volume
    }

    fn split<'g>(&self, grid: &'g ProductGrid) -> Result<(&'g [Rule1D], &'g [Rule1D], Option<&'g Rule1D>)> {
        let expected = self.k_factors + self.l_factors + usize::from(self.is_join());
        if grid.factors.len() != expected {
            return Err(Error::Dimension(format!(
                "grid has {} factors, this problem needs {expected}",
                grid.factors.len()
            )));
        }
        let (kf, rest) = grid.factors.split_at(self.k_factors);
        let (lf, uf) = rest.split_at(self.l_factors);
        Ok((kf, lf, uf.first()))
    }

    /// Integrand at one node pair, without quadrature weights or the
    /// global prefactor. `None` when the pair is (numerically) coincident
    /// or antipodal where that is fatal.
    #[inline]
    fn pair_value(&self, ks: &Samples, a: usize, ls: &Samples, b: usize, u: Option<&Rule1D>, d: f64) -> Option<f64> {
        let c = self.plan.len();
        let bracket = || -> f64 {
            ks.minors(a, c)
                .iter()
                .zip(ls.minors(b, c))
                .map(|(p, q)| p * q)
                .sum()
        };
        let sin_alpha = ((1.0 - d) * (1.0 + d)).max(0.0).sqrt();
        let alpha = d.acos();
        match self.method {
            Method::MainTheorem => {
                if alpha == 0.0 {
                    return None;
                }
                let kern = self.kernel.as_ref().expect("kernel");
                Some(kern.ratio_unchecked(alpha, sin_alpha) * bracket())
            }
            Method::Corollary => {
                if sin_alpha == 0.0 {
                    return None;
                }
                let kern = self.kernel.as_ref().expect("kernel");
                Some(kern.convolution_fast(alpha) / sin_alpha.powi(self.n as i32) * bracket())
            }
            Method::JoinDegreeReduced => {
                if alpha == 0.0 {
                    return None;
                }
                Some(self.reduced_join_value(d, sin_alpha, u.expect("u rule")) * bracket())
            }
            Method::JoinDegreeFull => {
                if alpha == 0.0 {
                    return None;
                }
                let u = u.expect("u rule");
                if sin_alpha < 10.0 * self.cfg.fd_step && d < 0.0 {
                    // differences straddle the collapsed arc x = -y; the
                    // analytic integrand equals the limit there
                    return Some(self.signs.join_degree * self.reduced_join_value(d, sin_alpha, u) * bracket());
                }
                self.full_join_value(ks, a, ls, b, u)
            }
            Method::GaussOracle => unreachable!(),
        }
    }

    /// `∫_0^1 (π-α)/sin^n α · A^k B^l du` with `ε = π - α`, written as
    /// `ε/sin α · ∫ (sin((1-u)ε)/sin α)^k (sin(uε)/sin α)^l du`, using
    /// `A = sin(α + u(π-α))`; finite as `α → π`.
    #[inline]
    fn reduced_join_value(&self, d: f64, sin_alpha: f64, u: &Rule1D) -> f64 {
        let (ki, li) = (self.k as i32, self.l as i32);
        let eps = PI - d.acos();
        let degenerate = sin_alpha == 0.0;
        let q = |t: f64| if degenerate { t } else { (t * eps).sin() / sin_alpha };
        let lead = if degenerate { 1.0 } else { eps / sin_alpha };
        let inner: f64 = u
            .nodes
            .iter()
            .zip(&u.weights)
            .map(|(t, w)| w * q(1.0 - t).powi(ki) * q(*t).powi(li))
            .sum();
        lead * inner
    }

    /// `Σ_u w_u det(f, ∂f/∂s…, ∂f/∂t…, ∂f/∂u)` by central differences.
    fn full_join_value(&self, ks: &Samples, a: usize, ls: &Samples, b: usize, u: &Rule1D) -> Option<f64> {
        let m = self.n + 1;
        let h = self.cfg.fd_step;
        let x = ks.point(a);
        let y = ls.point(b);
        let mut mat = [0.0; MAX_AMBIENT * MAX_AMBIENT];
        let mut fp = [0.0; MAX_AMBIENT];
        let mut fm = [0.0; MAX_AMBIENT];
        let mut total = 0.0;
        for (&t, &w) in u.nodes.iter().zip(&u.weights) {
            // column c of the matrix is stored as row c; the determinant
            // of the transpose is the same
            let mut col = 0;
            if !join_into(x, y, t, &mut mat[..m]) {
                return None;
            }
            col += 1;
            for i in 0..self.k {
                let ok = join_into(ks.shifted(a, i, 0), y, t, &mut fp[..m])
                    && join_into(ks.shifted(a, i, 1), y, t, &mut fm[..m]);
                if !ok {
                    return None;
                }
                for r in 0..m {
                    mat[col * m + r] = (fp[r] - fm[r]) / (2.0 * h);
                }
                col += 1;
            }
            for j in 0..self.l {
                let ok = join_into(x, ls.shifted(b, j, 0), t, &mut fp[..m])
                    && join_into(x, ls.shifted(b, j, 1), t, &mut fm[..m]);
                if !ok {
                    return None;
                }
                for r in 0..m {
                    mat[col * m + r] = (fp[r] - fm[r]) / (2.0 * h);
                }
                col += 1;
            }
            join_into(x, y, t + h, &mut fp[..m]);
            join_into(x, y, t - h, &mut fm[..m]);
            for r in 0..m {
                mat[col * m + r] = (fp[r] - fm[r]) / (2.0 * h);
            }
            total += w * lu_determinant(&mut mat[..m * m], m);
        }
        Some(total)
    }

    fn samples(&self, grid: &ProductGrid) -> Result<(Samples, Samples, Option<Rule1D>)> {
        let (kf, lf, uf) = self.split(grid)?;
        let fd = (self.method == Method::JoinDegreeFull).then_some(self.cfg.fd_step);
        let ks = sample(self.k_man.as_ref(), kf, Side::K, &self.plan, fd);
        let ls = sample(self.l_man.as_ref(), lf, Side::L, &self.plan, fd);
        Ok((ks, ls, uf.cloned()))
    }

    fn check_range(&self, acc: &Acc) -> Result<()> {
        let min_alpha = acc.max_dot.clamp(-1.0, 1.0).acos();
        let max_alpha = acc.min_dot.clamp(-1.0, 1.0).acos();
        {
            let mut e = self.extremes.lock().expect("extremes lock");
            e.0 = e.0.min(min_alpha);
            e.1 = e.1.max(max_alpha);
        }
        let t = &self.cfg.thresholds;
        if min_alpha < t.min_alpha {
            return Err(Error::NotDisjoint {
                min_alpha,
                threshold: t.min_alpha,
            });
        }
        if self.method == Method::Corollary && max_alpha > PI - t.antipodal_margin {
            return Err(Error::NotAntipodallyDisjoint {
                max_alpha,
                margin: t.antipodal_margin,
            });
        }
        Ok(())
    }

    /// Unweighted integrand (prefactor included) at every `K × L` node
    /// pair, `K` index major. For the join variants the `u` integral is
    /// already carried out.
    pub fn node_values(&self, grid: &ProductGrid) -> Result<Vec<f64>> {
        let (ks, ls, u) = self.samples(grid)?;
        let nl = ls.len();
        let pre = self.prefactor();
        let mut acc = Acc::EMPTY;
        let values: Vec<f64> = (0..ks.len() * nl)
            .map(|i| {
                let (a, b) = (i / nl, i % nl);
                let d = dot(ks.point(a), ls.point(b)).clamp(-1.0, 1.0);
                acc.max_dot = acc.max_dot.max(d);
                acc.min_dot = acc.min_dot.min(d);
                self.pair_value(&ks, a, &ls, b, u.as_ref(), d)
                    .map_or(f64::NAN, |v| pre * v)
            })
            .collect();
        self.check_range(&acc)?;
        Ok(values)
    }

    /// Runs the refinement loop and rounds the result.
    pub fn run(&self) -> Result<LinkingReport> {
        let r = refine_until(&self.base_grid(), self, self.cfg.tol, self.cfg.max_level)?;
        let est = r.estimate;
        let rounding = round_to_linking(est.value, est.error_estimate, &self.cfg.thresholds);
        let (min_alpha, max_alpha) = self.alpha_range();
        let linking_number = match self.method {
            Method::MainTheorem => Some(rounding.nearest),
            Method::JoinDegreeFull | Method::JoinDegreeReduced => Some(-rounding.nearest),
            Method::Corollary => self.cfg.common_hemisphere.then_some(rounding.nearest),
            Method::GaussOracle => unreachable!(),
        }
        .filter(|_| rounding.accepted && r.converged);
        Ok(LinkingReport {
            method: self.method,
            raw_value: est.value,
            nearest_integer: rounding.nearest,
            residual: rounding.residual,
            error_estimate: est.error_estimate,
            min_alpha,
            max_alpha,
            converged: r.converged,
            accepted: rounding.accepted,
            levels_used: est.levels_used,
            linking_number,
            history: r.history,
        })
    }
}

impl GridIntegrand for Problem {
    fn integrate_grid(&self, grid: &ProductGrid) -> Result<f64> {
        let (ks, ls, u) = self.samples(grid)?;
        let nl = ls.len();
        let acc = tree_reduce(
            ks.len() * nl,
            Acc::EMPTY,
            |i| {
                let (a, b) = (i / nl, i % nl);
                let d = dot(ks.point(a), ls.point(b)).clamp(-1.0, 1.0);
                let v = self.pair_value(&ks, a, &ls, b, u.as_ref(), d);
                let sum = v.map_or(0.0, |v| ks.weights[a] * ls.weights[b] * v);
                Acc {
                    sum,
                    max_dot: d,
                    min_dot: d,
                    bad: v.is_none() || !sum.is_finite(),
                }
            },
            Acc::combine,
        );
        self.check_range(&acc)?;
        if acc.bad {
            return Err(Error::NonFinite(format!(
                "integrand on grid of shape {:?}",
                grid.shape()
            )));
        }
        Ok(self.prefactor() * acc.sum)
    }
}

pub fn evaluate(method: Method, k: &Manifold, l: &Manifold, cfg: &EngineConfig) -> Result<LinkingReport> {
    Problem::new(method, k, l, cfg)?.run()
}

pub fn evaluate_main_theorem(k: &Manifold, l: &Manifold, cfg: &EngineConfig) -> Result<LinkingReport> {
    evaluate(Method::MainTheorem, k, l, cfg)
}

/// `Lk(K, L) + (-1)^n Lk(K, -L)`.
pub fn evaluate_corollary(k: &Manifold, l: &Manifold, cfg: &EngineConfig) -> Result<LinkingReport> {
    evaluate(Method::Corollary, k, l, cfg)
}

/// `deg f` of the join map (`= -Lk(K, L)`).
pub fn evaluate_join_degree(
    k: &Manifold,
    l: &Manifold,
    variant: JoinVariant,
    cfg: &EngineConfig,
) -> Result<LinkingReport> {
    let method = match variant {
        JoinVariant::Full => Method::JoinDegreeFull,
        JoinVariant::Reduced => Method::JoinDegreeReduced,
    };
    evaluate(method, k, l, cfg)
}
