//! The linking kernels.
//!
//! * `phi(k, l, α) = ∫_α^π sin^k(β-α) sin^l(β) dβ`, the main-theorem kernel;
//! * `conv(k, l, α) = ∫_0^π sin^k(α-β) sin^l(β) dβ`, the corollary kernel;
//! * `phi(k, l, α) / sin^n(α)` with `n = k + l + 1`, the integrand factor,
//!   which tends to `k! l! / n!` as `α → π`.
//!
//! Numeric values use panel-doubling Gauss–Legendre. Hot loops go through a
//! [`KernelEvaluator`], which tabulates the numeric kernels once as Chebyshev
//! series and is read-only afterwards.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_unit;

/// Absolute accuracy target of the numeric β-integrals.
pub const NUMERIC_TOL: f64 = 1e-12;
/// Below this distance from π the kernel ratio comes from its series.
pub const SERIES_SWITCH: f64 = 1e-3;
/// Smallest admissible α for the kernel ratio.
pub const MIN_RATIO_ALPHA: f64 = 1e-8;

const DEFAULT_NODES: usize = 16;
const MAX_PANELS: usize = 1 << 12;
const CHEB_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    ClosedForm,
    Numeric,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=PI).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, pi]")));
    }
    Ok(())
}

/// Closed form of `phi(k, l, ·)` where one is known.
pub fn phi_closed_form(k: usize, l: usize, alpha: f64) -> Option<f64> {
    // the integration range is empty at π; keep that exact
    if alpha == PI && matches!((k, l), (0, 0) | (1, 1) | (1, 2) | (2, 1)) {
        return Some(0.0);
    }
    match (k, l) {
        (0, 0) => Some(PI - alpha),
        (1, 1) => Some(0.5 * ((PI - alpha) * alpha.cos() + alpha.sin())),
        (1, 2) | (2, 1) => Some((1.0 + alpha.cos()).powi(2) / 3.0),
        _ => None,
    }
}

/// Closed form of `conv(k, l, ·)` where one is known.
pub fn convolution_closed_form(k: usize, l: usize, alpha: f64) -> Option<f64> {
    match (k, l) {
        (1, 1) => Some(-0.5 * PI * alpha.cos()),
        (2, 2) => {
            let c = alpha.cos();
            Some(PI / 8.0 * (1.0 + 2.0 * c * c))
        }
        _ => None,
    }
}

/// `∫_0^1 g` by panel-doubling Gauss–Legendre with `nodes` per panel.
fn adaptive_unit<G: Fn(f64) -> f64>(g: G, nodes: usize, tol: f64) -> f64 {
    let (x, w) = gauss_legendre_unit(nodes);
    let panels = |p: usize| -> f64 {
        let h = 1.0 / p as f64;
        (0..p)
            .map(|j| {
                let lo = j as f64 * h;
                x.iter()
                    .zip(&w)
                    .map(|(t, wt)| wt * g(lo + 0.5 * h * (t + 1.0)))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    };
    let mut p = 1;
    let mut prev = panels(p);
    loop {
        p *= 2;
        let next = panels(p);
        if (next - prev).abs() < tol || p >= MAX_PANELS {
            return next;
        }
        prev = next;
    }
}

/// `phi(k, l, α)` by quadrature, with `nodes` Gauss–Legendre points per
/// panel. Written as `ε ∫_0^1 sin^k(εv) sin^l(ε(1-v)) dv`, `ε = π - α`,
/// which keeps relative accuracy as `α → π`.
pub fn phi_numeric(k: usize, l: usize, alpha: f64, nodes: usize) -> f64 {
    let eps = PI - alpha;
    if eps == 0.0 {
        return 0.0;
    }
    let ki = k as i32;
    let li = l as i32;
    let scale = eps.powi(ki + li + 1);
    // integrate the scaled integrand so the tolerance is relative to its size
    let g = |v: f64| {
        let a = eps * v;
        let b = eps * (1.0 - v);
        a.sin().powi(ki) * b.sin().powi(li) * eps / scale
    };
    adaptive_unit(g, nodes, NUMERIC_TOL) * scale
}

/// `conv(k, l, α)` by quadrature over `β ∈ [0, π]`.
pub fn convolution_numeric(k: usize, l: usize, alpha: f64, nodes: usize) -> f64 {
    let ki = k as i32;
    let li = l as i32;
    let g = |v: f64| {
        let beta = PI * v;
        (alpha - beta).sin().powi(ki) * beta.sin().powi(li) * PI
    };
    adaptive_unit(g, nodes, NUMERIC_TOL)
}

/// `phi(k, l, α)`, closed form where available.
pub fn phi(k: usize, l: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(phi_closed_form(k, l, alpha).unwrap_or_else(|| phi_numeric(k, l, alpha, DEFAULT_NODES)))
}

/// `sin^k * sin^l (α)`, closed form where available.
pub fn convolution(k: usize, l: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(convolution_closed_form(k, l, alpha)
        .unwrap_or_else(|| convolution_numeric(k, l, alpha, DEFAULT_NODES)))
}

/// Euler beta function at positive integers, `(a-1)! (b-1)! / (a+b-1)!`.
fn beta_int(a: usize, b: usize) -> f64 {
    let mut r = 1.0;
    // (a-1)! / (a+b-1)! = 1 / (a (a+1) ... (a+b-1))
    for j in a..a + b {
        r /= j as f64;
    }
    for j in 1..b {
        r *= j as f64;
    }
    r
}

/// Two-term expansion of `phi(k, l, π-ε) / sin^n ε` in powers of `ε`.
///
/// With `sin x = x (1 - x²/6 + …)`:
/// `phi = ε^n [B(k+1,l+1) - ε²/6 (k B(k+3,l+1) + l B(k+1,l+3))] + O(ε^{n+4})`
/// and `sin^{-n} ε = ε^{-n} (1 + n ε²/6 + O(ε⁴))`.
pub fn ratio_series(k: usize, l: usize, eps: f64) -> f64 {
    let n = (k + l + 1) as f64;
    let b0 = beta_int(k + 1, l + 1);
    let b2 = k as f64 * beta_int(k + 3, l + 1) + l as f64 * beta_int(k + 1, l + 3);
    let e2 = eps * eps;
    (b0 - e2 / 6.0 * b2) * (1.0 + n * e2 / 6.0)
}

/// `phi(k, l, α) / sin^n α` with `n = k + l + 1`.
pub fn phi_kernel_ratio(k: usize, l: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha < MIN_RATIO_ALPHA {
        return Err(Error::NotDisjoint {
            min_alpha: alpha,
            threshold: MIN_RATIO_ALPHA,
        });
    }
    let eps = PI - alpha;
    if eps < SERIES_SWITCH {
        return Ok(ratio_series(k, l, eps));
    }
    Ok(phi(k, l, alpha)? / alpha.sin().powi((k + l + 1) as i32))
}

/// Chebyshev series on an interval, evaluated by Clenshaw recurrence.
#[derive(Debug, Clone, PartialEq)]
struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    fn fit<F: Fn(f64) -> f64>(lo: f64, hi: f64, points: usize, f: F) -> Self {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let values: Vec<f64> = (0..points)
            .map(|j| f(mid + half * (PI * (j as f64 + 0.5) / points as f64).cos()))
            .collect();
        let mut coeffs: Vec<f64> = (0..points)
            .map(|m| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * m as f64 * (j as f64 + 0.5) / points as f64).cos())
                    .sum();
                2.0 * s / points as f64
            })
            .collect();
        coeffs[0] *= 0.5;
        let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(f64::MIN_POSITIVE);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() < 1e-18 * scale) {
            coeffs.pop();
        }
        Self { lo, hi, coeffs }
    }

    fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

/// Kernel evaluation for one `(k, l)` pair.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    k: usize,
    l: usize,
    phi_mode: KernelMode,
    conv_mode: KernelMode,
    numeric_nodes: usize,
    /// `G(ε) = phi(π-ε) / ε^n` on `[0, π]`, numeric mode only.
    phi_table: Option<Chebyshev>,
    conv_table: Option<Chebyshev>,
}

impl KernelEvaluator {
    /// Closed forms where available, numeric otherwise.
    pub fn new(k: usize, l: usize) -> Self {
        let phi_mode = if phi_closed_form(k, l, 1.0).is_some() {
            KernelMode::ClosedForm
        } else {
            KernelMode::Numeric
        };
        let conv_mode = if convolution_closed_form(k, l, 1.0).is_some() {
            KernelMode::ClosedForm
        } else {
            KernelMode::Numeric
        };
        Self::build(k, l, phi_mode, conv_mode, DEFAULT_NODES)
    }

    /// Forces a mode for both kernels. Closed form is refused where none
    /// exists; `numeric_nodes` must be at least 16.
    pub fn with_mode(k: usize, l: usize, mode: KernelMode, numeric_nodes: usize) -> Result<Self> {
        if numeric_nodes < 16 {
            return Err(Error::InvalidArgument(format!(
                "numeric_nodes must be >= 16, got {numeric_nodes}"
            )));
        }
        if mode == KernelMode::ClosedForm
            && (phi_closed_form(k, l, 1.0).is_none() || convolution_closed_form(k, l, 1.0).is_none())
        {
            return Err(Error::InvalidArgument(format!(
                "no closed form for both kernels at (k, l) = ({k}, {l})"
            )));
        }
        Ok(Self::build(k, l, mode, mode, numeric_nodes))
    }

    fn build(k: usize, l: usize, phi_mode: KernelMode, conv_mode: KernelMode, nodes: usize) -> Self {
        let phi_table = (phi_mode == KernelMode::Numeric).then(|| {
            let (x, w) = gauss_legendre_unit(64);
            let (ki, li) = (k as i32, l as i32);
            let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
            Chebyshev::fit(0.0, PI, CHEB_POINTS, |eps| {
                // G(ε) = ∫_0^1 sinc(εv)^k sinc(ε(1-v))^l v^k (1-v)^l dv
                x.iter()
                    .zip(&w)
                    .map(|(t, wt)| {
                        let v = 0.5 * (t + 1.0);
                        0.5 * wt
                            * (sinc(eps * v) * v).powi(ki)
                            * (sinc(eps * (1.0 - v)) * (1.0 - v)).powi(li)
                    })
                    .sum()
            })
        });
        let conv_table = (conv_mode == KernelMode::Numeric)
            .then(|| Chebyshev::fit(0.0, PI, CHEB_POINTS, |a| convolution_numeric(k, l, a, nodes)));
        Self {
            k,
            l,
            phi_mode,
            conv_mode,
            numeric_nodes: nodes,
            phi_table,
            conv_table,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.k + self.l + 1
    }

    pub fn phi_mode(&self) -> KernelMode {
        self.phi_mode
    }

    pub fn conv_mode(&self) -> KernelMode {
        self.conv_mode
    }

    pub fn numeric_nodes(&self) -> usize {
        self.numeric_nodes
    }

    /// `phi(k, l, α)` by direct evaluation in the evaluator's mode.
    pub fn phi(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(match self.phi_mode {
            KernelMode::ClosedForm => phi_closed_form(self.k, self.l, alpha).expect("closed form"),
            KernelMode::Numeric => phi_numeric(self.k, self.l, alpha, self.numeric_nodes),
        })
    }

    pub fn convolution(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(match self.conv_mode {
            KernelMode::ClosedForm => {
                convolution_closed_form(self.k, self.l, alpha).expect("closed form")
            }
            KernelMode::Numeric => convolution_numeric(self.k, self.l, alpha, self.numeric_nodes),
        })
    }

    /// `phi / sin^n` for `α ∈ [MIN_RATIO_ALPHA, π]`, via the table in
    /// numeric mode.
    pub fn ratio(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if alpha < MIN_RATIO_ALPHA {
            return Err(Error::NotDisjoint {
                min_alpha: alpha,
                threshold: MIN_RATIO_ALPHA,
            });
        }
        Ok(self.ratio_unchecked(alpha, alpha.sin()))
    }

    /// Hot-path ratio; `sin_alpha` must be `sin(alpha)` and `alpha` must
    /// already be validated.
    #[inline]
    pub fn ratio_unchecked(&self, alpha: f64, sin_alpha: f64) -> f64 {
        let eps = PI - alpha;
        if eps < SERIES_SWITCH {
            return ratio_series(self.k, self.l, eps);
        }
        let n = self.n() as i32;
        match &self.phi_table {
            Some(table) => table.eval(eps) * (eps / sin_alpha).powi(n),
            None => {
                phi_closed_form(self.k, self.l, alpha).expect("closed form") / sin_alpha.powi(n)
            }
        }
    }

    /// Hot-path convolution value (tabulated in numeric mode).
    #[inline]
    pub fn convolution_fast(&self, alpha: f64) -> f64 {
        match &self.conv_table {
            Some(table) => table.eval(alpha),
            None => convolution_closed_form(self.k, self.l, alpha).expect("closed form"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> impl Iterator<Item = f64> {
        (0..m).map(move |i| PI * i as f64 / (m - 1) as f64)
    }

    /// Composite Simpson on `[a, b]`, independent of the Gauss–Legendre path.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_forms_match_the_defining_integrals() {
        for a in grid(41) {
            let oracle = simpson(|b| (b - a).sin() * b.sin(), a, PI, 2000);
            assert!((phi(1, 1, a).unwrap() - oracle).abs() < 1e-11);
            let oracle = simpson(|b| (b - a).sin() * b.sin().powi(2), a, PI, 2000);
            assert!((phi(1, 2, a).unwrap() - oracle).abs() < 1e-11);
            let oracle = simpson(|b| (a - b).sin() * b.sin(), 0.0, PI, 2000);
            assert!((convolution(1, 1, a).unwrap() - oracle).abs() < 1e-11);
        }
    }

    #[test]
    fn documented_values() {
        assert!((phi(1, 1, PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((phi(1, 2, PI / 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(phi(3, 2, PI).unwrap(), 0.0);
        assert_eq!(phi(1, 1, PI).unwrap(), 0.0);
        assert!(convolution(1, 1, PI / 2.0).unwrap().abs() < 1e-15);
        assert!((phi_kernel_ratio(1, 1, PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((phi_kernel_ratio(1, 2, PI / 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        assert!(phi(1, 1, -0.1).is_err());
        assert!(phi(2, 2, 3.2).is_err());
        assert!(convolution(1, 1, 4.0).is_err());
        assert!(matches!(phi_kernel_ratio(1, 1, 1e-9), Err(Error::NotDisjoint { .. })));
    }

    #[test]
    fn ratio_limit_at_pi() {
        // independent quotient at ε = 1e-4: Simpson over w ∈ [0, ε] of
        // sin(ε-w) sin(w), divided by sin³ε
        let eps = 1e-4f64;
        let phi_w = simpson(|w| (eps - w).sin() * w.sin(), 0.0, eps, 200);
        let quotient = phi_w / eps.sin().powi(3);
        let r = phi_kernel_ratio(1, 1, PI - eps).unwrap();
        assert!((r - quotient).abs() < 1e-10);
        assert!((phi_kernel_ratio(1, 1, PI).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((phi_kernel_ratio(2, 3, PI).unwrap() - 2.0 * 6.0 / 720.0).abs() < 1e-15);
    }

    #[test]
    fn series_and_quotient_agree_at_the_switch() {
        for k in 0..=4 {
            for l in 0..=4 {
                let a = PI - SERIES_SWITCH;
                let quotient = phi_numeric(k, l, a, 32) / a.sin().powi((k + l + 1) as i32);
                let series = ratio_series(k, l, SERIES_SWITCH);
                assert!((quotient - series).abs() < 1e-9 * series, "({k},{l})");
            }
        }
    }

    #[test]
    fn tables_match_direct_evaluation() {
        for k in 0..=4 {
            for l in 0..=4 {
                let ev = KernelEvaluator::with_mode(k, l, KernelMode::Numeric, 16).unwrap();
                for a in grid(97).skip(1) {
                    let direct = if PI - a < SERIES_SWITCH {
                        ratio_series(k, l, PI - a)
                    } else {
                        phi_numeric(k, l, a, 16) / a.sin().powi((k + l + 1) as i32)
                    };
                    let fast = ev.ratio(a).unwrap();
                    assert!((fast - direct).abs() <= 1e-12 * direct.abs().max(1.0), "({k},{l}) at {a}");
                    let c = convolution_numeric(k, l, a, 16);
                    assert!((ev.convolution_fast(a) - c).abs() < 1e-12, "conv ({k},{l}) at {a}");
                }
            }
        }
    }

    #[test]
    fn closed_form_mode_is_only_offered_where_it_exists() {
        assert!(KernelEvaluator::with_mode(1, 1, KernelMode::ClosedForm, 16).is_ok());
        assert!(KernelEvaluator::with_mode(1, 2, KernelMode::ClosedForm, 16).is_err());
        assert!(KernelEvaluator::with_mode(1, 3, KernelMode::Numeric, 8).is_err());
        let ev = KernelEvaluator::new(1, 2);
        assert_eq!(ev.phi_mode(), KernelMode::ClosedForm);
        assert_eq!(ev.conv_mode(), KernelMode::Numeric);
        let ev = KernelEvaluator::new(2, 2);
        assert_eq!(ev.phi_mode(), KernelMode::Numeric);
        assert_eq!(ev.conv_mode(), KernelMode::ClosedForm);
    }

    #[test]
    fn beta_integers() {
        assert!((beta_int(2, 2) - 1.0 / 6.0).abs() < 1e-16);
        assert!((beta_int(1, 1) - 1.0).abs() < 1e-16);
        assert!((beta_int(3, 2) - 1.0 / 12.0).abs() < 1e-16);
    }
}
