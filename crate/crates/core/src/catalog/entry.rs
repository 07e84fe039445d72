use serde::{Deserialize, Serialize};

use super::{
    antipodal_image, clifford_torus_curve, fourier_curve, great_subsphere, hopf_fiber,
    perturbed_great_circle, rotated, small_round_sphere, Manifold,
};
use crate::error::{Error, Result};
use crate::sphere::{Givens, Rotation, SpherePoint};

/// Explicit coefficients of a Fourier curve in `R^4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub constant: [f64; 4],
    #[serde(default)]
    pub cos: Vec<[f64; 4]>,
    #[serde(default)]
    pub sin: Vec<[f64; 4]>,
}

/// A great circle with seeded random harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPerturbation {
    pub axes: [usize; 2],
    pub harmonics: usize,
    pub amplitude: f64,
    /// Falls back to the run-wide seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A submanifold description as it appears in a link spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogEntry {
    GreatSubsphere {
        k: usize,
        axes: Vec<usize>,
    },
    HopfFiber {
        base: [f64; 4],
    },
    CliffordTorusCurve {
        p: i64,
        q: i64,
        #[serde(default)]
        phase: f64,
    },
    SmallRoundSphere {
        k: usize,
        center: Vec<f64>,
        angular_radius: f64,
        frame: Vec<Vec<f64>>,
    },
    Rotated {
        inner: Box<CatalogEntry>,
        givens: Vec<Givens>,
    },
    AntipodalImage {
        inner: Box<CatalogEntry>,
    },
    FourierCurve {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficients: Option<FourierCoefficients>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perturb: Option<FourierPerturbation>,
    },
}

impl CatalogEntry {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::GreatSubsphere { .. } => "great_subsphere",
            Self::HopfFiber { .. } => "hopf_fiber",
            Self::CliffordTorusCurve { .. } => "clifford_torus_curve",
            Self::SmallRoundSphere { .. } => "small_round_sphere",
            Self::Rotated { .. } => "rotated",
            Self::AntipodalImage { .. } => "antipodal_image",
            Self::FourierCurve { .. } => "fourier_curve",
        }
    }

    /// Intrinsic dimension of the described submanifold.
    pub fn dim(&self) -> usize {
        match self {
            Self::GreatSubsphere { k, .. } | Self::SmallRoundSphere { k, .. } => *k,
            Self::HopfFiber { .. } | Self::CliffordTorusCurve { .. } | Self::FourierCurve { .. } => 1,
            Self::Rotated { inner, .. } | Self::AntipodalImage { inner } => inner.dim(),
        }
    }

    /// Whether every submanifold of this entry is a curve in `S^3`.
    pub fn is_s3_curve(&self, ambient_n: usize) -> bool {
        ambient_n == 3 && self.dim() == 1
    }

    /// Constructs and validates the submanifold of `S^{ambient_n}`.
    /// `seed` fills in perturbation seeds that the entry leaves open.
    pub fn build(&self, ambient_n: usize, seed: Option<u64>) -> Result<Manifold> {
        let needs_s3 = |kind: &str| -> Result<()> {
            if ambient_n != 3 {
                return Err(Error::Dimension(format!(
                    "{kind} lives in S^3 but ambient_n = {ambient_n}"
                )));
            }
            Ok(())
        };
        match self {
            Self::GreatSubsphere { k, axes } => great_subsphere(*k, axes, ambient_n),
            Self::HopfFiber { base } => {
                needs_s3("hopf_fiber")?;
                hopf_fiber(*base)
            }
            Self::CliffordTorusCurve { p, q, phase } => {
                needs_s3("clifford_torus_curve")?;
                clifford_torus_curve(*p, *q, *phase)
            }
            Self::SmallRoundSphere {
                k,
                center,
                angular_radius,
                frame,
            } => {
                if center.len() != ambient_n + 1 {
                    return Err(Error::Dimension(format!(
                        "center has {} coordinates, S^{ambient_n} needs {}",
                        center.len(),
                        ambient_n + 1
                    )));
                }
                let c = SpherePoint::new(center.clone())?;
                small_round_sphere(*k, &c, *angular_radius, frame)
            }
            Self::Rotated { inner, givens } => {
                let m = inner.build(ambient_n, seed)?;
                rotated(m, Rotation::from_givens(ambient_n + 1, givens)?)
            }
            Self::AntipodalImage { inner } => Ok(antipodal_image(inner.build(ambient_n, seed)?)),
            Self::FourierCurve {
                coefficients,
                perturb,
            } => {
                needs_s3("fourier_curve")?;
                match (coefficients, perturb) {
                    (Some(c), None) => fourier_curve(c.constant, c.cos.clone(), c.sin.clone()),
                    (None, Some(p)) => {
                        let s = p.seed.or(seed).ok_or_else(|| {
                            Error::InvalidArgument(
                                "perturbed fourier_curve needs a seed (in the entry or via --seed)".into(),
                            )
                        })?;
                        perturbed_great_circle(p.axes, p.harmonics, p.amplitude, s)
                    }
                    _ => Err(Error::InvalidArgument(
                        "fourier_curve needs exactly one of `coefficients` or `perturb`".into(),
                    )),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSchema {
    pub kind: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSchema>,
}

fn param(name: &'static str, ty: &'static str, description: &'static str) -> ParamSchema {
    ParamSchema { name, ty, description }
}

/// Every catalog kind with its JSON parameters.
pub fn catalog_schemas() -> Vec<KindSchema> {
    vec![
        KindSchema {
            kind: "great_subsphere",
            description: "unit k-sphere in a coordinate block, oriented by the axis order",
            parameters: vec![
                param("k", "integer", "dimension of the subsphere"),
                param("axes", "integer[k+1]", "distinct ambient coordinate indices, in orientation order"),
            ],
        },
        KindSchema {
            kind: "hopf_fiber",
            description: "circle e^{i theta} (z1, z2) in S^3",
            parameters: vec![param("base", "number[4]", "unit vector (Re z1, Im z1, Re z2, Im z2)")],
        },
        KindSchema {
            kind: "clifford_torus_curve",
            description: "(cos ps, sin ps, cos(qs+phase), sin(qs+phase)) / sqrt 2 in S^3",
            parameters: vec![
                param("p", "integer", "winding in the first coordinate plane"),
                param("q", "integer", "winding in the second coordinate plane; gcd(p, q) = 1"),
                param("phase", "number", "offset of the second angle (radians, default 0)"),
            ],
        },
        KindSchema {
            kind: "small_round_sphere",
            description: "round k-sphere of given angular radius about a center",
            parameters: vec![
                param("k", "integer", "dimension of the sphere"),
                param("center", "number[n+1]", "center point (normalized)"),
                param("angular_radius", "number", "radius in (0, pi/2]"),
                param("frame", "number[k+1][n+1]", "orthonormal vectors orthogonal to the center"),
            ],
        },
        KindSchema {
            kind: "rotated",
            description: "image of another entry under a product of plane rotations",
            parameters: vec![
                param("inner", "entry", "the rotated submanifold"),
                param("givens", "{i, j, angle}[]", "plane rotations applied in order"),
            ],
        },
        KindSchema {
            kind: "antipodal_image",
            description: "image under x -> -x with the pushed-forward orientation",
            parameters: vec![param("inner", "entry", "the reflected submanifold")],
        },
        KindSchema {
            kind: "fourier_curve",
            description: "normalized truncated trigonometric series in R^4",
            parameters: vec![
                param("coefficients", "{constant, cos[], sin[]}", "explicit series (or use perturb)"),
                param("perturb", "{axes, harmonics, amplitude, seed?}", "great circle plus seeded random harmonics"),
            ],
        },
    ]
}
