//! Every orientation sign used by the evaluators, in one place.
//!
//! Conventions: the bracket is `det(x, ∂x/∂s…, y, ∂y/∂t…)`; the join
//! `K × L × [0,1]` is oriented with coordinates in the order `(s, t, u)`.

/// `(-1)^m` as a float.
#[inline]
pub fn parity(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign factors for a `(k, l)` pair in `S^n`, `n = k + l + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignFactors {
    /// `Lk(L, K) = (-1)^{(k+1)(l+1)} Lk(K, L)`: swapping the two column
    /// blocks of the bracket.
    pub anticommutation: f64,
    /// `(-1)^{n-1}`: moving `∂f/∂u` from last to second column.
    pub u_column: f64,
    /// `(-1)^k`: moving `y` past the `k` columns `∂x/∂s`.
    pub y_column: f64,
    /// `(-1)^n`: total sign of the reduced join integrand, i.e.
    /// `-1` from `f ∧ ∂f/∂u`, `(-1)^l` from the `-B` factors and `y_column`.
    pub reduced_integrand: f64,
    /// `(-1)^{n-1} (-1)^n = -1`: reduced integrand to `deg f`.
    pub join_degree: f64,
    /// `(-1)^{l+1}`: `[x, dx, -y, -dy] = (-1)^{l+1} [x, dx, y, dy]`.
    pub antipodal_bracket: f64,
    /// `(-1)^k`: `phi(π-α) = (-1)^k ∫_0^α sin^k(β-α) sin^l β dβ`, and the
    /// prefactor of the corollary integral.
    pub corollary_prefactor: f64,
    /// `(-1)^n`: weight of `Lk(K, -L)` on the corollary's left side.
    pub corollary_antipodal: f64,
}

/// The sign bookkeeping for `(k, l)`.
pub fn sign_factors(k: usize, l: usize) -> SignFactors {
    let n = k + l + 1;
    let y_column = parity(k);
    let reduced_integrand = -parity(l) * y_column;
    let u_column = parity(n - 1);
    SignFactors {
        anticommutation: parity((k + 1) * (l + 1)),
        u_column,
        y_column,
        reduced_integrand,
        join_degree: u_column * reduced_integrand,
        antipodal_bracket: parity(l + 1),
        corollary_prefactor: parity(k),
        corollary_antipodal: parity(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::determinant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_columns(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    fn det(cols: &[Vec<f64>]) -> f64 {
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        determinant(&refs).unwrap()
    }

    /// All `(k, l)` with `k, l ≤ 4` and `n ≤ 8`.
    fn pairs() -> impl Iterator<Item = (usize, usize)> {
        (0..=4).flat_map(|k| (0..=4).map(move |l| (k, l))).filter(|(k, l)| k + l < 8)
    }

    #[test]
    fn anticommutation_is_a_block_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, l) in pairs() {
            let c = random_columns(k + l + 2, &mut rng);
            let mut swapped = c[k + 1..].to_vec();
            swapped.extend_from_slice(&c[..k + 1]);
            let s = sign_factors(k, l).anticommutation;
            assert!((det(&swapped) - s * det(&c)).abs() < 1e-12, "({k}, {l})");
        }
    }

    #[test]
    fn u_column_moves_next_to_f() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (k, l) in pairs() {
            let n = k + l + 1;
            // (f, f_s…, f_t…, f_u) versus (f, f_u, f_s…, f_t…)
            let c = random_columns(n + 1, &mut rng);
            let mut moved = vec![c[0].clone(), c[n].clone()];
            moved.extend_from_slice(&c[1..n]);
            assert!((det(&c) - sign_factors(k, l).u_column * det(&moved)).abs() < 1e-12);
        }
    }

    #[test]
    fn y_column_moves_past_dx() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (k, l) in pairs() {
            // (x, y, dx…, dy…) versus (x, dx…, y, dy…)
            let c = random_columns(k + l + 2, &mut rng);
            let mut early = vec![c[0].clone(), c[k + 1].clone()];
            early.extend_from_slice(&c[1..k + 1]);
            early.extend_from_slice(&c[k + 2..]);
            assert!((det(&early) - sign_factors(k, l).y_column * det(&c)).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_integrand_sign_is_parity_of_n() {
        for (k, l) in pairs() {
            let s = sign_factors(k, l);
            assert_eq!(s.reduced_integrand, parity(k + l + 1));
            assert_eq!(s.join_degree, -1.0);
        }
    }

    #[test]
    fn antipodal_negates_l_plus_one_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (k, l) in pairs() {
            let c = random_columns(k + l + 2, &mut rng);
            let mut neg = c.clone();
            for col in &mut neg[k + 1..] {
                col.iter_mut().for_each(|v| *v = -*v);
            }
            let s = sign_factors(k, l).antipodal_bracket;
            assert!((det(&neg) - s * det(&c)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_reflection_sign() {
        // phi(π-α) against (-1)^k ∫_0^α sin^k(β-α) sin^l β dβ by Simpson
        for (k, l) in pairs() {
            for alpha in [0.3, 1.2, 2.5] {
                let m = 2000;
                let h = alpha / m as f64;
                let g = |b: f64| (b - alpha).sin().powi(k as i32) * b.sin().powi(l as i32);
                let mut s = g(0.0) + g(alpha);
                for i in 1..m {
                    s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
                }
                let rhs = sign_factors(k, l).corollary_prefactor * s * h / 3.0;
                let lhs = crate::kernel::phi(k, l, std::f64::consts::PI - alpha).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "({k}, {l}, {alpha}): {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn corollary_left_side_weight() {
        assert_eq!(sign_factors(1, 1).corollary_antipodal, -1.0);
        assert_eq!(sign_factors(2, 2).corollary_antipodal, -1.0);
        assert_eq!(sign_factors(1, 2).corollary_antipodal, 1.0);
    }
}
