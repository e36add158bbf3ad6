use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use projlab_core::diagnostics::{bridge_conditional, bridge_norms, ConditionalNorms};
use projlab_core::gallery::{random_chain, random_kernel};
use projlab_core::lemmas::{chain_norm_sequence, SubadditiveSequence};
use projlab_core::operators::{apply_sqrt, sqrt_coefficients};
use projlab_core::simulate::simulate;
use projlab_core::variance::{autocovariances, second_moments};
use projlab_core::{build_chain, ChainModel, OperatorTable};

fn chain_from(seed: u64, size: usize, zeros: f64) -> ChainModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_chain(&mut rng, size, zeros).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Rows are cyclic shifts of one probability vector, so the kernel commutes
/// with its transpose and the uniform law is stationary.
fn circulant(seed: u64, size: usize) -> ChainModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = w.iter().sum();
    let kernel: Vec<Vec<f64>> = (0..size)
        .map(|x| (0..size).map(|y| w[(y + size - x) % size] / total).collect())
        .collect();
    let f: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
    build_chain(&kernel, &f, None).unwrap()
}

/// `Q = W / rowsum(W)` for symmetric `W` is reversible.
fn reversible(seed: u64, size: usize) -> ChainModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0.0; size]; size];
    for x in 0..size {
        for y in x..size {
            let v = if rng.random::<f64>() < 0.3 && y != x + 1 { 0.0 } else { rng.random_range(0.1..1.0) };
            w[x][y] = v;
            w[y][x] = v;
        }
    }
    let kernel: Vec<Vec<f64>> = w
        .iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect();
    let f: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
    build_chain(&kernel, &f, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>(), size in 2usize..9, zeros in 0.0f64..0.6) {
        let c = chain_from(seed, size, zeros);
        let back = c.reversed().adjoint();
        prop_assert!((back - c.kernel()).abs().max() < 1e-12);
    }

    #[test]
    fn adjoint_duality(seed in any::<u64>(), size in 2usize..9) {
        let c = chain_from(seed, size, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let qs = c.adjoint();
        for _ in 0..4 {
            let g = random_vec(&mut rng, size);
            let h = random_vec(&mut rng, size);
            let lhs = c.inner(&(c.kernel() * &g), &h);
            let rhs = c.inner(&g, &(&qs * &h));
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn markov_operator_contracts(seed in any::<u64>(), size in 2usize..9) {
        let c = chain_from(seed, size, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let g = random_vec(&mut rng, size);
        prop_assert!(c.norm(&c.apply(&g)) <= c.norm(&g) * (1.0 + 1e-12));
        prop_assert!(c.norm(&(c.adjoint() * &g)) <= c.norm(&g) * (1.0 + 1e-12));
    }

    #[test]
    fn power_norms_do_not_increase(seed in any::<u64>(), size in 2usize..9) {
        let c = chain_from(seed, size, 0.3);
        let t = OperatorTable::build(&c, 64).unwrap();
        for k in 0..64 {
            prop_assert!(c.norm(&t.qk_f()[k + 1]) <= c.norm(&t.qk_f()[k]) * (1.0 + 1e-10) + 1e-14);
            prop_assert!(c.norm(&t.qstar_k_f()[k + 1]) <= c.norm(&t.qstar_k_f()[k]) * (1.0 + 1e-10) + 1e-14);
        }
    }

    #[test]
    fn classification_ignores_state_order(seed in any::<u64>(), size in 2usize..8, zeros in 0.0f64..0.7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_kernel(&mut rng, size, zeros);
        let f: Vec<f64> = (0..size).map(|x| x as f64).collect();
        let mut perm: Vec<usize> = (0..size).collect();
        for i in (1..size).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let pk: Vec<Vec<f64>> = (0..size).map(|x| (0..size).map(|y| k[perm[x]][perm[y]]).collect()).collect();
        let pf: Vec<f64> = (0..size).map(|x| f[perm[x]]).collect();
        let a = build_chain(&k, &f, None).unwrap().classify();
        let b = build_chain(&pk, &pf, None).unwrap().classify();
        prop_assert_eq!((a.irreducible, a.aperiodic, a.period, a.reversible, a.normal),
                        (b.irreducible, b.aperiodic, b.period, b.reversible, b.normal));
        prop_assert!((a.normality_defect - b.normality_defect).abs() < 1e-9);
    }

    #[test]
    fn normal_chains_have_equal_forward_and_backward_sums(seed in any::<u64>(), size in 2usize..9) {
        let c = circulant(seed, size);
        prop_assert!(c.classify().normal);
        let t = OperatorTable::build(&c, 128).unwrap();
        let norms = ConditionalNorms::compute(&c, &t, 128).unwrap();
        let qs = c.adjoint();
        let mut acc = DVector::zeros(size);
        let mut p = c.observable().clone();
        for n in 1..=128 {
            let (a, b) = (c.norm(&t.vn_f()[n]), c.norm(&t.vnstar_f()[n]));
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
            p = &qs * &p;
            acc += &p;
            prop_assert!((c.norm(&acc) - norms.past[n]).abs() <= 1e-10 * norms.past[n].max(1.0));
        }
    }

    #[test]
    fn sqrt_squares_to_generator(seed in any::<u64>(), size in 2usize..7) {
        let c = chain_from(seed, size, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let g = random_vec(&mut rng, size);
        let once = apply_sqrt(&c, &g, 4000).unwrap();
        let twice = apply_sqrt(&c, &once.value, 4000).unwrap();
        let target = &g - c.apply(&g);
        let err = c.norm(&(twice.value - target));
        let tail = sqrt_coefficients(4000).unwrap().tail_mass();
        prop_assert!(err <= 4.0 * tail * c.norm(&g) + 1e-10, "err {} tail {}", err, tail);
    }

    #[test]
    fn conditional_norms_are_subadditive(seed in any::<u64>(), size in 2usize..9, kind in 0usize..3) {
        let c = chain_from(seed, size, 0.4);
        let v = chain_norm_sequence(&c, 48, kind).unwrap();
        if v.iter().all(|x| *x > 0.0) {
            prop_assert!(SubadditiveSequence::new(v).unwrap().max_violation() <= 1e-10);
        }
    }

    #[test]
    fn projections_are_ordered(seed in any::<u64>(), size in 2usize..8) {
        let c = chain_from(seed, size, 0.3);
        let t = OperatorTable::build(&c, 96).unwrap();
        let norms = ConditionalNorms::compute(&c, &t, 96).unwrap();
        let m = second_moments(&autocovariances(&c, &t), 96).unwrap();
        for n in 1..=96 {
            let b = norms.bridge[n];
            prop_assert!(norms.past[n] <= b * (1.0 + 1e-9) + 1e-12);
            prop_assert!(norms.future[n] <= b * (1.0 + 1e-9) + 1e-12);
            prop_assert!(b <= m[n].max(0.0).sqrt() * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn reversible_bridge_is_symmetric_up_to_endpoints(seed in any::<u64>(), size in 2usize..7, n in 1usize..40) {
        let c = reversible(seed, size);
        prop_assert!(c.classify().reversible);
        let m = bridge_conditional(&c, n).unwrap();
        let f = c.observable();
        let q_n = c.kernel().pow(n as u32);
        for x in 0..size {
            for y in 0..size {
                if q_n[(x, y)] > 1e-300 {
                    let rhs = m[(y, x)] + f[y] - f[x];
                    prop_assert!((m[(x, y)] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                }
            }
        }
    }
}

#[test]
fn sqrt_coefficients_match_exact_taylor_series() {
    // √(1 − x) = Σ_n c_n xⁿ with c_0 = 1, c_n = c_{n−1}(n − 3/2)/n, and δ_n = −c_n
    let series = sqrt_coefficients(50).unwrap();
    let mut c = BigRational::one();
    for n in 1..=50i64 {
        c = c * BigRational::new(BigInt::from(2 * n - 3), BigInt::from(2 * n));
        let exact = (-c.clone()).to_f64().unwrap();
        let got = series.delta[(n - 1) as usize];
        assert!((got - exact).abs() <= 1e-14 * exact.abs(), "n = {n}: {got} vs {exact}");
    }
}

#[test]
fn bridge_norms_match_dense_conditional() {
    let c = chain_from(5, 5, 0.2);
    let b = bridge_norms(&c, 30).unwrap();
    let q = c.kernel();
    for n in [1usize, 7, 30] {
        let m = bridge_conditional(&c, n).unwrap();
        let qn = q.pow(n as u32);
        let pi = c.stationary();
        let mut acc = 0.0;
        for x in 0..5 {
            for y in 0..5 {
                acc += pi[x] * qn[(x, y)] * m[(x, y)].powi(2);
            }
        }
        assert!((acc.sqrt() - b[n]).abs() < 1e-10);
    }
}

#[test]
fn simulated_variance_matches_exact_second_moment() {
    let c = build_chain(&[vec![0.7, 0.3], vec![0.3, 0.7]], &[1.0, -1.0], None).unwrap();
    let n = 64;
    let batch = simulate(&c, n, 4000, 21).unwrap();
    let t = OperatorTable::build(&c, n).unwrap();
    let exact = second_moments(&autocovariances(&c, &t), n).unwrap()[n];
    let sq: Vec<f64> = batch.sums.iter().map(|s| s * s).collect();
    let mean = sq.iter().sum::<f64>() / sq.len() as f64;
    let sd = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (sq.len() - 1) as f64).sqrt();
    let se = sd / (sq.len() as f64).sqrt();
    assert!((mean - exact).abs() <= 4.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn dense_powers_agree_with_table() {
    let c = chain_from(9, 4, 0.0);
    let t = OperatorTable::build(&c, 10).unwrap();
    let q10: DMatrix<f64> = c.kernel().pow(10);
    let direct = &q10 * c.observable();
    assert!((direct - &t.qk_f()[10]).abs().max() < 1e-12);
}
