//! Named link pairs with known or oracle-checked linking numbers.

use std::f64::consts::PI;

use crate::catalog::{CatalogEntry, FourierPerturbation, Manifold};
use crate::engine::GridOverrides;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub ambient_n: usize,
    pub k: CatalogEntry,
    pub l: CatalogEntry,
    /// Known value of `Lk(K, L)`; `None` where only the oracle decides.
    pub expected: Option<i64>,
    /// Grid for the finite-difference join evaluator, which is far more
    /// expensive per node than the others.
    pub join_full_grid: GridOverrides,
}

impl Fixture {
    pub fn build(&self) -> Result<(Manifold, Manifold)> {
        Ok((self.k.build(self.ambient_n, None)?, self.l.build(self.ambient_n, None)?))
    }

    /// Both members are curves in `S^3`, so the Gauss oracle applies.
    pub fn oracle_applies(&self) -> bool {
        self.k.is_s3_curve(self.ambient_n) && self.l.is_s3_curve(self.ambient_n)
    }
}

fn great(k: usize, axes: &[usize]) -> CatalogEntry {
    CatalogEntry::GreatSubsphere {
        k,
        axes: axes.to_vec(),
    }
}

fn axis(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[i] = 1.0;
    v
}

/// Round `k`-sphere of radius `r` about `e_center` spanned by `e_frame…`.
fn round(n: usize, k: usize, center: usize, frame: &[usize], r: f64) -> CatalogEntry {
    CatalogEntry::SmallRoundSphere {
        k,
        center: axis(n, center),
        angular_radius: r,
        frame: frame.iter().map(|&i| axis(n, i)).collect(),
    }
}

fn clifford(p: i64, q: i64, phase: f64) -> CatalogEntry {
    CatalogEntry::CliffordTorusCurve { p, q, phase }
}

fn perturbed(axes: [usize; 2], seed: u64) -> CatalogEntry {
    CatalogEntry::FourierCurve {
        coefficients: None,
        perturb: Some(FourierPerturbation {
            axes,
            harmonics: 3,
            amplitude: 0.12,
            seed: Some(seed),
        }),
    }
}

fn grid(k: usize, l: usize, u: usize) -> GridOverrides {
    GridOverrides {
        k: Some(k),
        l: Some(l),
        u: Some(u),
    }
}

fn fixture(name: &str, n: usize, k: CatalogEntry, l: CatalogEntry, expected: Option<i64>, full: GridOverrides) -> Fixture {
    Fixture {
        name: name.to_string(),
        ambient_n: n,
        k,
        l,
        expected,
        join_full_grid: full,
    }
}

/// The fixture suite. Clifford pairs put two parallel `(p, q)` curves at
/// phases `0` and `π/(2|p|)`: the second is disjoint from the first and
/// from its antipodal image, and `Lk = pq`.
pub fn fixture_suite() -> Vec<Fixture> {
    let curves = grid(32, 32, 16);
    let mut out = vec![
        fixture("great_s1_s1_in_s3", 3, great(1, &[0, 1]), great(1, &[2, 3]), Some(1), curves),
        fixture("great_s1_s2_in_s4", 4, great(1, &[0, 1]), great(2, &[2, 3, 4]), Some(1), grid(16, 8, 8)),
        fixture("great_s2_s2_in_s5", 5, great(2, &[0, 1, 2]), great(2, &[3, 4, 5]), Some(1), grid(8, 8, 8)),
        fixture("great_s0_s1_in_s2", 2, great(0, &[0]), great(1, &[1, 2]), Some(1), curves),
        fixture("great_s1_s3_in_s5", 5, great(1, &[0, 1]), great(3, &[2, 3, 4, 5]), Some(1), grid(16, 6, 8)),
        fixture("great_s0_s0_in_s1", 1, great(0, &[0]), great(0, &[1]), Some(1), curves),
        fixture(
            "hopf_fibers",
            3,
            CatalogEntry::HopfFiber { base: [1.0, 0.0, 0.0, 0.0] },
            CatalogEntry::HopfFiber { base: [0.6, 0.0, 0.0, 0.8] },
            None,
            curves,
        ),
        fixture(
            "hopf_fibers_skew",
            3,
            CatalogEntry::HopfFiber { base: [0.0, 0.0, 1.0, 0.0] },
            CatalogEntry::HopfFiber { base: [0.48, 0.64, 0.36, 0.48] },
            None,
            curves,
        ),
    ];
    for (p, q) in [(1, 0), (1, 1), (1, -1), (1, 2), (-1, 2), (2, 3), (2, -3)] {
        out.push(fixture(
            &format!("clifford_{p}_{q}"),
            3,
            clifford(p, q, 0.0),
            clifford(p, q, PI / (2 * p.unsigned_abs()) as f64),
            Some(p * q),
            grid(48, 48, 16),
        ));
    }
    out.push(fixture(
        "clifford_2_3_vs_great_circle",
        3,
        clifford(2, 3, 0.0),
        great(1, &[2, 3]),
        Some(2),
        grid(48, 32, 16),
    ));
    out.push(fixture(
        "round_circles_linked",
        3,
        round(3, 1, 2, &[0, 1], 0.9),
        round(3, 1, 0, &[2, 3], 0.9),
        Some(1),
        curves,
    ));
    out.push(fixture(
        "round_circles_unlinked",
        3,
        round(3, 1, 2, &[0, 1], 0.6),
        round(3, 1, 0, &[2, 3], 0.6),
        Some(0),
        curves,
    ));
    for seed in [11, 23, 37] {
        out.push(fixture(
            &format!("perturbed_circles_{seed}"),
            3,
            perturbed([0, 1], seed),
            perturbed([2, 3], seed + 1000),
            None,
            grid(48, 48, 16),
        ));
    }
    out
}

/// Round circles whose radii nearly add up to `π/2`: they link, but come
/// within about 0.03 rad of each other, so quadrature needs several levels.
pub fn close_approach() -> Fixture {
    fixture(
        "close_approach",
        3,
        round(3, 1, 2, &[0, 1], 0.8),
        round(3, 1, 0, &[2, 3], 0.8),
        Some(1),
        grid(64, 64, 16),
    )
}

pub fn find(name: &str) -> Option<Fixture> {
    fixture_suite()
        .into_iter()
        .chain(std::iter::once(close_approach()))
        .find(|f| f.name == name)
}
