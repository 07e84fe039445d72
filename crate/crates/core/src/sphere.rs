//! Ambient-space primitives for the unit sphere `S^n ⊂ R^{n+1}`.
//!
//! Orientation convention: a tangent basis `A_1, …, A_n` at `p` is positive
//! iff `det(p, A_1, …, A_n) > 0`. Every signed quantity in the crate (the
//! bracket determinant, chart orientations, degrees) follows from it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported ambient dimension `n + 1`.
pub const MAX_AMBIENT: usize = 9;

/// A point of `S^n`, stored as a unit vector of length `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords` onto the sphere. Needs at least two coordinates
    /// and a norm that is not vanishingly small.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension(format!(
                "a point of S^n needs n >= 1, got {} coordinates",
                coords.len()
            )));
        }
        if coords.len() > MAX_AMBIENT {
            return Err(Error::Dimension(format!(
                "ambient dimension {} exceeds the supported maximum {MAX_AMBIENT}",
                coords.len()
            )));
        }
        let norm = norm(&coords);
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// The unit coordinate vector `e_axis` in `R^{n+1}`.
    pub fn axis(n: usize, axis: usize) -> Result<Self> {
        if axis > n {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for S^{n}"
            )));
        }
        let mut v = vec![0.0; n + 1];
        v[axis] = 1.0;
        Self::new(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The sphere dimension `n`.
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A base point together with the ordered partial derivatives of a chart.
///
/// Column order carries the orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentColumns {
    pub base: SpherePoint,
    pub columns: Vec<Vec<f64>>,
}

impl TangentColumns {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Largest `|column · base|`, the tangency defect.
    pub fn tangency_defect(&self) -> f64 {
        self.columns
            .iter()
            .map(|c| dot(c, self.base.coords()).abs())
            .fold(0.0, f64::max)
    }
}

/// Geodesic distance between two points with its sine and cosine cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub alpha: f64,
    pub cos_alpha: f64,
    pub sin_alpha: f64,
}

impl PairGeometry {
    /// Builds the geometry from a raw dot product, clamped to `[-1, 1]`.
    pub fn from_dot(d: f64) -> Self {
        let c = d.clamp(-1.0, 1.0);
        let alpha = c.acos();
        Self {
            alpha,
            cos_alpha: c,
            sin_alpha: alpha.sin().max(0.0),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `alpha = arccos(x · y)` with the dot product clamped.
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> Result<PairGeometry> {
    if x.coords.len() != y.coords.len() {
        return Err(Error::Dimension(format!(
            "points live in R^{} and R^{}",
            x.coords.len(),
            y.coords.len()
        )));
    }
    Ok(PairGeometry::from_dot(dot(&x.coords, &y.coords)))
}

pub fn antipode(x: &SpherePoint) -> SpherePoint {
    SpherePoint {
        coords: x.coords.iter().map(|c| -c).collect(),
    }
}

/// Determinant of a square matrix given column by column.
///
/// LU factorization with partial pivoting; the permutation parity is tracked
/// exactly so the sign is reliable.
pub fn determinant(columns: &[&[f64]]) -> Result<f64> {
    let m = columns.len();
    if m == 0 {
        return Ok(1.0);
    }
    if m > MAX_AMBIENT {
        return Err(Error::Dimension(format!(
            "matrix of order {m} exceeds the supported maximum {MAX_AMBIENT}"
        )));
    }
    let mut a = [0.0f64; MAX_AMBIENT * MAX_AMBIENT];
    for (j, col) in columns.iter().enumerate() {
        if col.len() != m {
            return Err(Error::Dimension(format!(
                "column {j} has length {} in a {m}x{m} determinant",
                col.len()
            )));
        }
        for (i, v) in col.iter().enumerate() {
            a[i * m + j] = *v;
        }
    }
    Ok(lu_determinant(&mut a[..m * m], m))
}

/// In-place LU determinant of a row-major `m x m` matrix.
pub(crate) fn lu_determinant(a: &mut [f64], m: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..m {
        let mut piv = k;
        let mut best = a[k * m + k].abs();
        for i in k + 1..m {
            let v = a[i * m + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..m {
                a.swap(k * m + j, piv * m + j);
            }
            det = -det;
        }
        let p = a[k * m + k];
        det *= p;
        for i in k + 1..m {
            let f = a[i * m + k] / p;
            if f != 0.0 {
                for j in k + 1..m {
                    a[i * m + j] -= f * a[k * m + j];
                }
            }
        }
    }
    det
}

/// The bracket `[x, dx, y, dy]`: the determinant with columns `x`, the
/// `k` partials of `x`, `y`, the `l` partials of `y`, in that order.
pub fn bracket_form(x: &TangentColumns, y: &TangentColumns) -> Result<f64> {
    let size = x.base.coords.len();
    if y.base.coords.len() != size {
        return Err(Error::Dimension(format!(
            "x lives in R^{size}, y in R^{}",
            y.base.coords.len()
        )));
    }
    let total = 2 + x.columns.len() + y.columns.len();
    if total != size {
        return Err(Error::Dimension(format!(
            "bracket needs n+1 = {size} columns but got 1 + {} + 1 + {}",
            x.columns.len(),
            y.columns.len()
        )));
    }
    let mut cols: Vec<&[f64]> = Vec::with_capacity(size);
    cols.push(x.base.coords());
    cols.extend(x.columns.iter().map(Vec::as_slice));
    cols.push(y.base.coords());
    cols.extend(y.columns.iter().map(Vec::as_slice));
    determinant(&cols)
}

/// `Γ(m / 2)` for a positive integer `m`, by recurrence from `Γ(1/2) = √π`
/// and `Γ(1) = 1`.
pub fn gamma_half_integer(m: usize) -> f64 {
    assert!(m > 0, "gamma_half_integer needs m >= 1");
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// `vol S^n = 2 π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sphere_volume needs n >= 1".into()));
    }
    let half = (n + 1) as f64 / 2.0;
    Ok(2.0 * PI.powf(half) / gamma_half_integer(n + 1))
}

/// A rotation in one coordinate plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub angle: f64,
}

/// An element of `SO(n+1)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    dim: usize,
    data: Vec<f64>,
}

const ROTATION_TOL: f64 = 1e-10;

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// Validates `RᵀR = I` and `det R = +1` to 1e-10.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidRotation("matrix must be square".into()));
        }
        if dim > MAX_AMBIENT {
            return Err(Error::Dimension(format!(
                "rotation of order {dim} exceeds the supported maximum {MAX_AMBIENT}"
            )));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        for a in 0..dim {
            for b in 0..dim {
                let g: f64 = (0..dim).map(|r| data[r * dim + a] * data[r * dim + b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                if (g - expect).abs() > ROTATION_TOL {
                    return Err(Error::InvalidRotation(format!(
                        "R^T R differs from I at ({a},{b}) by {:.3e}",
                        (g - expect).abs()
                    )));
                }
            }
        }
        let mut buf = data.clone();
        let det = lu_determinant(&mut buf, dim);
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!("det R = {det}, expected +1")));
        }
        Ok(Self { dim, data })
    }

    /// Composes plane rotations in order: the first listed acts first.
    pub fn from_givens(dim: usize, rotations: &[Givens]) -> Result<Self> {
        let mut r = Self::identity(dim);
        for g in rotations {
            if g.i >= dim || g.j >= dim || g.i == g.j {
                return Err(Error::InvalidRotation(format!(
                    "plane ({}, {}) invalid in R^{dim}",
                    g.i, g.j
                )));
            }
            if !g.angle.is_finite() {
                return Err(Error::InvalidRotation("non-finite angle".into()));
            }
            let (s, c) = g.angle.sin_cos();
            // left-multiply: rows i and j mix
            for col in 0..dim {
                let a = r.data[g.i * dim + col];
                let b = r.data[g.j * dim + col];
                r.data[g.i * dim + col] = c * a - s * b;
                r.data[g.j * dim + col] = s * a + c * b;
            }
        }
        Ok(r)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `R v` for an arbitrary vector of matching length.
    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim)
            .map(|row| dot(row, v))
            .collect()
    }

    /// `R₂ R₁`: apply `self` first, then `other`.
    pub fn then(&self, other: &Rotation) -> Rotation {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = (0..d).map(|m| other.data[i * d + m] * self.data[m * d + j]).sum();
            }
        }
        Rotation { dim: d, data }
    }
}

/// `R x`, renormalized onto the sphere.
pub fn apply_rotation(r: &Rotation, x: &SpherePoint) -> Result<SpherePoint> {
    if r.dim != x.coords.len() {
        return Err(Error::Dimension(format!(
            "rotation acts on R^{}, point lives in R^{}",
            r.dim,
            x.coords.len()
        )));
    }
    SpherePoint::new(r.apply_vec(&x.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(n: usize, i: usize) -> SpherePoint {
        SpherePoint::axis(n, i).unwrap()
    }

    fn frame(cols: Vec<Vec<f64>>) -> TangentColumns {
        let mut it = cols.into_iter();
        let base = SpherePoint {
            coords: it.next().unwrap(),
        };
        TangentColumns {
            base,
            columns: it.collect(),
        }
    }

    #[test]
    fn distances_at_the_extremes() {
        let g = geodesic_distance(&e(3, 0), &e(3, 1)).unwrap();
        assert!((g.alpha - PI / 2.0).abs() < 1e-15);
        assert_eq!(geodesic_distance(&e(3, 0), &e(3, 0)).unwrap().alpha, 0.0);
        let g = geodesic_distance(&e(3, 0), &antipode(&e(3, 0))).unwrap();
        assert_eq!(g.alpha, PI);
        assert!(g.sin_alpha >= 0.0);
    }

    #[test]
    fn distance_rejects_mixed_dimensions() {
        assert!(matches!(
            geodesic_distance(&e(3, 0), &e(4, 0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn clamping_keeps_nearly_parallel_points_finite() {
        let g = PairGeometry::from_dot(1.0 + 1e-15);
        assert_eq!(g.alpha, 0.0);
        let g = PairGeometry::from_dot(-1.0 - 1e-15);
        assert_eq!(g.alpha, PI);
    }

    #[test]
    fn new_point_is_normalized() {
        let p = SpherePoint::new(vec![3.0, 4.0]).unwrap();
        assert!((norm(p.coords()) - 1.0).abs() < 1e-15);
        assert!(SpherePoint::new(vec![1.0]).is_err());
        assert!(SpherePoint::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn bracket_of_identity_is_one() {
        let cols: Vec<Vec<f64>> = (0..4).map(|i| e(3, i).into_coords()).collect();
        let x = frame(cols[0..2].to_vec());
        let y = frame(cols[2..4].to_vec());
        assert!((bracket_form(&x, &y).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bracket_rejects_wrong_column_count() {
        let x = frame(vec![e(3, 0).into_coords(), e(3, 1).into_coords()]);
        let y = frame(vec![e(3, 2).into_coords()]);
        assert!(matches!(bracket_form(&x, &y), Err(Error::Dimension(_))));
    }

    #[test]
    fn bracket_factors_over_diagonal_blocks() {
        // circle in axes (0,1) and circle in axes (2,3), radius-scaled tangents
        let (s, t) = (0.7f64, -1.3f64);
        let x = frame(vec![
            vec![s.cos(), s.sin(), 0.0, 0.0],
            vec![-2.0 * s.sin(), 2.0 * s.cos(), 0.0, 0.0],
        ]);
        let y = frame(vec![
            vec![0.0, 0.0, t.cos(), t.sin()],
            vec![0.0, 0.0, -3.0 * t.sin(), 3.0 * t.cos()],
        ]);
        assert!((bracket_form(&x, &y).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn volumes_match_known_values() {
        assert!((sphere_volume(1).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_volume(2).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_volume(3).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_volume(4).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((sphere_volume(5).unwrap() - PI.powi(3)).abs() < 1e-13);
        assert!(sphere_volume(0).is_err());
    }

    #[test]
    fn gamma_recurrence() {
        assert_eq!(gamma_half_integer(2), 1.0);
        assert!((gamma_half_integer(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(10) - 24.0).abs() < 1e-12);
        assert!((gamma_half_integer(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn givens_rotation_is_validated() {
        let r = Rotation::from_givens(4, &[Givens { i: 0, j: 1, angle: PI / 2.0 }]).unwrap();
        let v = r.apply_vec(&[1.0, 0.0, 0.0, 0.0]);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!(Rotation::from_rows(&r.rows()).is_ok());
        assert!(Rotation::from_givens(4, &[Givens { i: 0, j: 0, angle: 1.0 }]).is_err());
        let reflection = vec![
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
        ];
        assert!(matches!(
            Rotation::from_rows(&reflection),
            Err(Error::InvalidRotation(_))
        ));
        assert!(Rotation::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn identity_rotation_fixes_points() {
        let p = SpherePoint::new(vec![0.3, -0.2, 0.9, 0.1]).unwrap();
        assert_eq!(apply_rotation(&Rotation::identity(4), &p).unwrap(), p);
    }

    fn unit_vec(n: usize) -> impl Strategy<Value = SpherePoint> {
        prop::collection::vec(-1.0f64..1.0, n + 1)
            .prop_filter("nonzero", |v| norm(v) > 0.1)
            .prop_map(|v| SpherePoint::new(v).unwrap())
    }

    fn givens_list(dim: usize) -> impl Strategy<Value = Vec<Givens>> {
        prop::collection::vec((0..dim, 0..dim, -PI..PI), 1..12).prop_map(|v| {
            v.into_iter()
                .filter(|(i, j, _)| i != j)
                .map(|(i, j, angle)| Givens { i, j, angle })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_with_antipodal_complement(x in unit_vec(4), y in unit_vec(4)) {
            let a = geodesic_distance(&x, &y).unwrap().alpha;
            let b = geodesic_distance(&y, &x).unwrap().alpha;
            prop_assert_eq!(a, b);
            let c = geodesic_distance(&x, &antipode(&y)).unwrap().alpha;
            prop_assert!((c - (PI - a)).abs() < 1e-7);
            prop_assert_eq!(antipode(&antipode(&x)), x);
        }

        #[test]
        fn rotations_are_isometries(g in givens_list(5), x in unit_vec(4), y in unit_vec(4)) {
            let r = Rotation::from_givens(5, &g).unwrap();
            let rx = apply_rotation(&r, &x).unwrap();
            let ry = apply_rotation(&r, &y).unwrap();
            prop_assert!((norm(rx.coords()) - 1.0).abs() < 1e-14);
            let before = geodesic_distance(&x, &y).unwrap();
            let after = geodesic_distance(&rx, &ry).unwrap();
            prop_assert!((before.cos_alpha - after.cos_alpha).abs() < 1e-12);
        }

        #[test]
        fn block_swap_sign_law(k in 0usize..4, l in 0usize..4, seed in prop::collection::vec(-1.0f64..1.0, 81)) {
            let size = k + l + 2;
            let cols: Vec<Vec<f64>> = (0..size).map(|j| seed[j * size..(j + 1) * size].to_vec()).collect();
            let x = frame(cols[..k + 1].to_vec());
            let y = frame(cols[k + 1..].to_vec());
            let xy = bracket_form(&x, &y).unwrap();
            let yx = bracket_form(&y, &x).unwrap();
            let sign = if ((k + 1) * (l + 1)) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((yx - sign * xy).abs() <= 1e-12 * xy.abs().max(1e-3));
        }

        #[test]
        fn bracket_is_multilinear_and_alternating(seed in prop::collection::vec(-1.0f64..1.0, 16), scale in -3.0f64..3.0) {
            let cols: Vec<Vec<f64>> = seed.chunks(4).map(<[f64]>::to_vec).collect();
            let base = bracket_form(&frame(cols[..2].to_vec()), &frame(cols[2..].to_vec())).unwrap();
            let mut scaled = cols.clone();
            scaled[3].iter_mut().for_each(|v| *v *= scale);
            let s = bracket_form(&frame(scaled[..2].to_vec()), &frame(scaled[2..].to_vec())).unwrap();
            prop_assert!((s - scale * base).abs() < 1e-12);
            let mut dup = cols.clone();
            dup[3] = dup[1].clone();
            let d = bracket_form(&frame(dup[..2].to_vec()), &frame(dup[2..].to_vec())).unwrap();
            prop_assert!(d.abs() < 1e-14);
        }
    }
}
