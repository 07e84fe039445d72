use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

use super::{validate, ChartAxis, Manifold, ParamPoint, Submanifold};
use crate::error::{Error, Result};
use crate::sphere::{dot, SpherePoint, TangentColumns};

/// Closed curve in `S^3`: `s ↦ c(s) / |c(s)|` for a truncated trigonometric
/// series `c(s) = a_0 + Σ_j (a_j cos js + b_j sin js)` in `R^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    constant: [f64; 4],
    cos: Vec<[f64; 4]>,
    sin: Vec<[f64; 4]>,
}

const DEGENERATE_NORM: f64 = 1e-6;
const SCAN_POINTS: usize = 4096;

impl FourierCurve {
    /// Harmonic `j` of `cos` / `sin` is `cos[j-1]` / `sin[j-1]`.
    pub fn new(constant: [f64; 4], cos: Vec<[f64; 4]>, sin: Vec<[f64; 4]>) -> Result<Self> {
        let all_finite = constant
            .iter()
            .chain(cos.iter().flatten())
            .chain(sin.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidArgument("non-finite Fourier coefficient".into()));
        }
        let curve = Self { constant, cos, sin };
        for i in 0..SCAN_POINTS {
            let s = 2.0 * PI * i as f64 / SCAN_POINTS as f64;
            let (c, _) = curve.raw(s);
            let r = dot(&c, &c).sqrt();
            if r < DEGENERATE_NORM {
                return Err(Error::Degenerate(format!(
                    "|c(s)| = {r:.3e} at s = {s:.6}, the curve passes through the origin"
                )));
            }
        }
        Ok(curve)
    }

    /// `c(s)` and `c'(s)`.
    fn raw(&self, s: f64) -> ([f64; 4], [f64; 4]) {
        let mut c = self.constant;
        let mut d = [0.0; 4];
        let harmonics = self.cos.len().max(self.sin.len());
        for j in 1..=harmonics {
            let (sj, cj) = (j as f64 * s).sin_cos();
            let jf = j as f64;
            if let Some(a) = self.cos.get(j - 1) {
                for i in 0..4 {
                    c[i] += a[i] * cj;
                    d[i] -= jf * a[i] * sj;
                }
            }
            if let Some(b) = self.sin.get(j - 1) {
                for i in 0..4 {
                    c[i] += b[i] * sj;
                    d[i] += jf * b[i] * cj;
                }
            }
        }
        (c, d)
    }
}

impl Submanifold for FourierCurve {
    fn dim(&self) -> usize {
        1
    }

    fn ambient_n(&self) -> usize {
        3
    }

    fn chart(&self) -> Vec<ChartAxis> {
        vec![ChartAxis::ANGLE]
    }

    fn evaluate(&self, p: &ParamPoint) -> TangentColumns {
        let (c, d) = self.raw(p.values[0]);
        let r = dot(&c, &c).sqrt();
        let u: Vec<f64> = c.iter().map(|v| v / r).collect();
        let radial = dot(&u, &d);
        let tangent: Vec<f64> = d.iter().zip(&u).map(|(dv, uv)| (dv - radial * uv) / r).collect();
        TangentColumns {
            base: SpherePoint::new(u).expect("nonzero"),
            columns: vec![tangent],
        }
    }
}

/// Orbit of `(z_1, z_2)` under `θ ↦ e^{iθ}`, with `base = (Re z_1, Im z_1,
/// Re z_2, Im z_2)` of unit length.
pub fn hopf_fiber(base: [f64; 4]) -> Result<Manifold> {
    let r = dot(&base, &base).sqrt();
    if (r - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("Hopf base has norm {r}, expected 1")));
    }
    let [a, b, c, d] = base;
    let m = FourierCurve::new([0.0; 4], vec![base], vec![[-b, a, -d, c]])?;
    validate(&m)?;
    Ok(Arc::new(m))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The `(p, q)` curve on the Clifford torus,
/// `s ↦ (cos ps, sin ps, cos(qs + phase), sin(qs + phase)) / √2`.
///
/// `(p, q)` must be coprime (so `(0, ±1)` and `(±1, 0)` are the only pairs
/// with a zero entry), which makes the curve embedded.
pub fn clifford_torus_curve(p: i64, q: i64, phase: f64) -> Result<Manifold> {
    if p == 0 && q == 0 {
        return Err(Error::InvalidArgument("(p, q) = (0, 0) is not a curve".into()));
    }
    if gcd(p.unsigned_abs(), q.unsigned_abs()) != 1 {
        return Err(Error::InvalidArgument(format!(
            "(p, q) = ({p}, {q}) is not coprime; the curve would not be embedded"
        )));
    }
    if !phase.is_finite() {
        return Err(Error::InvalidArgument("non-finite phase".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let harmonics = p.unsigned_abs().max(q.unsigned_abs()) as usize;
    let mut constant = [0.0; 4];
    let mut cos = vec![[0.0; 4]; harmonics];
    let mut sin = vec![[0.0; 4]; harmonics];
    // first block: cos(ps), sin(ps)
    if p == 0 {
        constant[0] = h;
    } else {
        let j = p.unsigned_abs() as usize - 1;
        cos[j][0] += h;
        sin[j][1] += h * p.signum() as f64;
    }
    // second block: cos(qs + φ) = cos φ cos qs - sin φ sin qs, etc.
    let (sp, cp) = phase.sin_cos();
    if q == 0 {
        constant[2] = h * cp;
        constant[3] = h * sp;
    } else {
        let j = q.unsigned_abs() as usize - 1;
        let sg = q.signum() as f64;
        cos[j][2] += h * cp;
        sin[j][2] -= h * sp * sg;
        cos[j][3] += h * sp;
        sin[j][3] += h * cp * sg;
    }
    let m = FourierCurve::new(constant, cos, sin)?;
    validate(&m)?;
    Ok(Arc::new(m))
}

/// A general Fourier curve, validated.
pub fn fourier_curve(constant: [f64; 4], cos: Vec<[f64; 4]>, sin: Vec<[f64; 4]>) -> Result<Manifold> {
    let m = FourierCurve::new(constant, cos, sin)?;
    validate(&m)?;
    Ok(Arc::new(m))
}

/// The great circle `s ↦ cos s · e_a + sin s · e_b` plus random harmonics
/// `1..=harmonics` with coefficients uniform in `[-amplitude, amplitude]`,
/// reproducible from `seed`.
pub fn perturbed_great_circle(
    axes: [usize; 2],
    harmonics: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Manifold> {
    if axes[0] > 3 || axes[1] > 3 || axes[0] == axes[1] {
        return Err(Error::InvalidArgument(format!("invalid circle axes {axes:?}")));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid amplitude {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> [f64; 4] {
        let mut v = [0.0; 4];
        for x in &mut v {
            *x = rng.gen_range(-amplitude..=amplitude);
        }
        v
    };
    let constant = draw();
    let mut cos: Vec<[f64; 4]> = (0..harmonics.max(1)).map(|_| draw()).collect();
    let mut sin: Vec<[f64; 4]> = (0..harmonics.max(1)).map(|_| draw()).collect();
    if harmonics == 0 {
        cos[0] = [0.0; 4];
        sin[0] = [0.0; 4];
    }
    cos[0][axes[0]] += 1.0;
    sin[0][axes[1]] += 1.0;
    fourier_curve(constant, cos, sin)
}
