use std::sync::Arc;

use super::{ChartAxis, Manifold, ParamPoint, Submanifold};
use crate::error::{Error, Result};
use crate::sphere::{Rotation, SpherePoint, TangentColumns};

/// `R(M)` with the pushed-forward chart.
#[derive(Debug, Clone)]
pub struct Rotated {
    inner: Manifold,
    rotation: Rotation,
}

impl Submanifold for Rotated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ambient_n(&self) -> usize {
        self.inner.ambient_n()
    }

    fn chart(&self) -> Vec<ChartAxis> {
        self.inner.chart()
    }

    fn sheets(&self) -> Vec<f64> {
        self.inner.sheets()
    }

    fn evaluate(&self, p: &ParamPoint) -> TangentColumns {
        let f = self.inner.evaluate(p);
        TangentColumns {
            base: SpherePoint::new(self.rotation.apply_vec(f.base.coords())).expect("unit point"),
            columns: f.columns.iter().map(|c| self.rotation.apply_vec(c)).collect(),
        }
    }
}

pub fn rotated(m: Manifold, rotation: Rotation) -> Result<Manifold> {
    if rotation.dim() != m.ambient_n() + 1 {
        return Err(Error::Dimension(format!(
            "rotation acts on R^{}, manifold lives in R^{}",
            rotation.dim(),
            m.ambient_n() + 1
        )));
    }
    Ok(Arc::new(Rotated { inner: m, rotation }))
}

/// `-M`, oriented by pushing the chart of `M` through `x ↦ -x`.
#[derive(Debug, Clone)]
pub struct AntipodalImage {
    inner: Manifold,
}

impl Submanifold for AntipodalImage {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ambient_n(&self) -> usize {
        self.inner.ambient_n()
    }

    fn chart(&self) -> Vec<ChartAxis> {
        self.inner.chart()
    }

    fn sheets(&self) -> Vec<f64> {
        self.inner.sheets()
    }

    fn evaluate(&self, p: &ParamPoint) -> TangentColumns {
        let f = self.inner.evaluate(p);
        TangentColumns {
            base: crate::sphere::antipode(&f.base),
            columns: f
                .columns
                .iter()
                .map(|c| c.iter().map(|v| -v).collect())
                .collect(),
        }
    }
}

pub fn antipodal_image(m: Manifold) -> Manifold {
    Arc::new(AntipodalImage { inner: m })
}

/// `M` with the opposite orientation: the first chart coordinate runs
/// backwards, or for a 0-manifold every sheet weight flips sign.
#[derive(Debug, Clone)]
pub struct Reversed {
    inner: Manifold,
}

impl Submanifold for Reversed {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ambient_n(&self) -> usize {
        self.inner.ambient_n()
    }

    fn chart(&self) -> Vec<ChartAxis> {
        self.inner.chart()
    }

    fn sheets(&self) -> Vec<f64> {
        let w = self.inner.sheets();
        if self.inner.dim() == 0 {
            w.iter().map(|v| -v).collect()
        } else {
            w
        }
    }

    fn evaluate(&self, p: &ParamPoint) -> TangentColumns {
        if self.inner.dim() == 0 {
            return self.inner.evaluate(p);
        }
        let axis = self.inner.chart()[0];
        let mut q = p.clone();
        q.values[0] = axis.lo + axis.hi - q.values[0];
        let mut f = self.inner.evaluate(&q);
        f.columns[0].iter_mut().for_each(|v| *v = -*v);
        f
    }
}

pub fn reversed(m: Manifold) -> Manifold {
    Arc::new(Reversed { inner: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{hopf_fiber, great_subsphere};
    use crate::sphere::Givens;

    #[test]
    fn identity_rotation_is_pointwise_identity() {
        let m = hopf_fiber([0.6, 0.0, 0.0, 0.8]).unwrap();
        let r = rotated(m.clone(), Rotation::identity(4)).unwrap();
        for s in [0.0, 1.0, 3.0] {
            let p = ParamPoint::new(vec![s]);
            assert_eq!(r.evaluate(&p), m.evaluate(&p));
        }
    }

    #[test]
    fn antipodal_image_is_an_involution() {
        let m = great_subsphere(2, &[0, 2, 4], 5).unwrap();
        let twice = antipodal_image(antipodal_image(m.clone()));
        let p = ParamPoint::new(vec![0.4, 5.0]);
        assert_eq!(twice.evaluate(&p), m.evaluate(&p));
        let once = antipodal_image(m.clone()).evaluate(&p);
        let orig = m.evaluate(&p);
        assert_eq!(once.base.coords()[2], -orig.base.coords()[2]);
        assert_eq!(once.columns[1][4], -orig.columns[1][4]);
    }

    #[test]
    fn rotation_dimension_must_match() {
        let m = great_subsphere(1, &[0, 1], 3).unwrap();
        let r = Rotation::from_givens(5, &[Givens { i: 0, j: 4, angle: 0.1 }]).unwrap();
        assert!(rotated(m, r).is_err());
    }
}
