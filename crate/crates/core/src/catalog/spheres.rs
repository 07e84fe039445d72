use std::sync::Arc;

use super::{validate, ChartAxis, Manifold, ParamPoint, Submanifold};
use crate::error::{Error, Result};
use crate::sphere::{determinant, dot, norm, SpherePoint, TangentColumns};

/// Standard chart of the unit `S^k ⊂ R^{k+1}` (`k >= 1`).
///
/// Coordinates `(θ_1, …, θ_{k-1}, φ)` with `θ_i ∈ (0, π)` and `φ` periodic:
/// `p(θ_1, rest) = (sin θ_1 · p_{k-1}(rest), cos θ_1)`, `p_1(φ) = (cos φ, sin φ)`.
fn unit_sphere_chart(k: usize, angles: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    debug_assert_eq!(angles.len(), k);
    if k == 1 {
        let (s, c) = angles[0].sin_cos();
        return (vec![c, s], vec![vec![-s, c]]);
    }
    let (inner, inner_tangents) = unit_sphere_chart(k - 1, &angles[1..]);
    let (s, c) = angles[0].sin_cos();
    let mut point: Vec<f64> = inner.iter().map(|v| s * v).collect();
    point.push(c);
    let mut tangents = Vec::with_capacity(k);
    let mut d_theta: Vec<f64> = inner.iter().map(|v| c * v).collect();
    d_theta.push(-s);
    tangents.push(d_theta);
    for t in inner_tangents {
        let mut col: Vec<f64> = t.iter().map(|v| s * v).collect();
        col.push(0.0);
        tangents.push(col);
    }
    (point, tangents)
}

/// A round `k`-sphere `{cos r · c + sin r · Σ q_i f_i : q ∈ S^k}` with an
/// orthonormal frame `f_0, …, f_k` orthogonal to `c`. A great subsphere is
/// the case `r = π/2`.
///
/// The chart of the unit `S^k` is oriented positively with respect to the
/// frame order (a single coordinate swap is applied when the raw chart is
/// negative), so for frames of positive coordinate axes the orientation is
/// the standard boundary orientation.
#[derive(Debug, Clone)]
pub struct EmbeddedSphere {
    k: usize,
    n: usize,
    offset: Vec<f64>,
    frame: Vec<Vec<f64>>,
    scale: f64,
    swap_first_pair: bool,
}

impl EmbeddedSphere {
    fn new(k: usize, n: usize, offset: Vec<f64>, frame: Vec<Vec<f64>>, scale: f64) -> Self {
        let mut s = Self {
            k,
            n,
            offset,
            frame,
            scale,
            swap_first_pair: false,
        };
        if k >= 2 {
            // orientation sign of the raw chart at a generic interior point
            let probe: Vec<f64> = (0..k).map(|i| 0.9 + 0.1 * i as f64).collect();
            let (p, t) = unit_sphere_chart(k, &probe);
            let mut cols: Vec<&[f64]> = vec![&p];
            cols.extend(t.iter().map(Vec::as_slice));
            let d = determinant(&cols).expect("square chart matrix");
            s.swap_first_pair = d < 0.0;
        }
        s
    }

    /// Chart of the unit sphere after the orientation fix.
    fn local(&self, values: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        if self.swap_first_pair {
            let mut v = values.to_vec();
            v.swap(0, 1);
            let (p, mut t) = unit_sphere_chart(self.k, &v);
            t.swap(0, 1);
            (p, t)
        } else {
            unit_sphere_chart(self.k, values)
        }
    }

    fn embed(&self, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (q, f) in local.iter().zip(&self.frame) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += q * v;
            }
        }
        out
    }
}

impl Submanifold for EmbeddedSphere {
    fn dim(&self) -> usize {
        self.k
    }

    fn ambient_n(&self) -> usize {
        self.n
    }

    fn chart(&self) -> Vec<ChartAxis> {
        let mut axes = vec![ChartAxis::POLAR; self.k.saturating_sub(1)];
        if self.k >= 1 {
            axes.push(ChartAxis::ANGLE);
        }
        axes
    }

    fn sheets(&self) -> Vec<f64> {
        if self.k == 0 {
            vec![1.0, -1.0]
        } else {
            vec![1.0]
        }
    }

    fn evaluate(&self, p: &ParamPoint) -> TangentColumns {
        let (local, tangents) = if self.k == 0 {
            (vec![if p.sheet == 0 { 1.0 } else { -1.0 }], Vec::new())
        } else {
            self.local(&p.values)
        };
        let dir = self.embed(&local);
        let base: Vec<f64> = self
            .offset
            .iter()
            .zip(&dir)
            .map(|(o, d)| o + self.scale * d)
            .collect();
        let columns = tangents
            .iter()
            .map(|t| self.embed(t).into_iter().map(|v| self.scale * v).collect())
            .collect();
        TangentColumns {
            base: SpherePoint::new(base).expect("unit point"),
            columns,
        }
    }
}

/// The unit `k`-sphere in the coordinate block spanned by `axes`, oriented
/// by the axis order.
pub fn great_subsphere(k: usize, axes: &[usize], ambient_n: usize) -> Result<Manifold> {
    if axes.len() != k + 1 {
        return Err(Error::InvalidArgument(format!(
            "a great {k}-sphere needs {} axes, got {}",
            k + 1,
            axes.len()
        )));
    }
    if k + 1 > ambient_n {
        return Err(Error::Dimension(format!(
            "a great {k}-sphere does not fit as a proper subsphere of S^{ambient_n}"
        )));
    }
    for (i, &a) in axes.iter().enumerate() {
        if a > ambient_n {
            return Err(Error::InvalidArgument(format!(
                "axis {a} out of range 0..={ambient_n}"
            )));
        }
        if axes[..i].contains(&a) {
            return Err(Error::InvalidArgument(format!("duplicate axis {a}")));
        }
    }
    let frame = axes
        .iter()
        .map(|&a| SpherePoint::axis(ambient_n, a).map(SpherePoint::into_coords))
        .collect::<Result<Vec<_>>>()?;
    let m = EmbeddedSphere::new(k, ambient_n, vec![0.0; ambient_n + 1], frame, 1.0);
    validate(&m)?;
    Ok(Arc::new(m))
}

/// Round `k`-sphere of angular radius `r ∈ (0, π/2]` about `center`, spanned
/// by the orthonormal `frame` (orthogonal to `center`).
pub fn small_round_sphere(
    k: usize,
    center: &SpherePoint,
    angular_radius: f64,
    frame: &[Vec<f64>],
) -> Result<Manifold> {
    let n = center.n();
    if !(angular_radius > 0.0 && angular_radius <= std::f64::consts::FRAC_PI_2 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "angular radius {angular_radius} outside (0, pi/2]"
        )));
    }
    if frame.len() != k + 1 {
        return Err(Error::InvalidArgument(format!(
            "a {k}-sphere needs a frame of {} vectors, got {}",
            k + 1,
            frame.len()
        )));
    }
    if k + 1 > n {
        return Err(Error::Dimension(format!("a {k}-sphere does not fit in S^{n}")));
    }
    for (i, f) in frame.iter().enumerate() {
        if f.len() != n + 1 {
            return Err(Error::Dimension(format!(
                "frame vector {i} has length {}, expected {}",
                f.len(),
                n + 1
            )));
        }
        if (norm(f) - 1.0).abs() > 1e-10 || dot(f, center.coords()).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "frame vector {i} is not a unit vector orthogonal to the center"
            )));
        }
        for (j, g) in frame[..i].iter().enumerate() {
            if dot(f, g).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "frame vectors {j} and {i} are not orthogonal"
                )));
            }
        }
    }
    let (s, c) = angular_radius.sin_cos();
    let offset = center.coords().iter().map(|v| c * v).collect();
    let m = EmbeddedSphere::new(k, n, offset, frame.to_vec(), s);
    validate(&m)?;
    Ok(Arc::new(m))
}
