use mqchan::codec::{fano_converse_bound, pgm, pgm_decoder, simulate_error, Code, DecoderTarget};
use mqchan::discrimination::{helstrom_split, lpi_check};
use mqchan::holevo::holevo_chi;
use mqchan::linalg::{fidelity, fidelity_psd, trace_norm, DensityMatrix};
use mqchan::random::{random_channel, random_mixed_state, random_pure_state, rng, ChainShape};
use mqchan::typicality::{typical_set, SpectralMeasure};
use mqchan::ComplexMatrix;
use proptest::prelude::*;

fn shape() -> ChainShape {
    ChainShape { max_states: 3, cycle_prob: 0.3, transient_prob: 0.2 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_outputs_are_states(seed in any::<u64>(), n in 1usize..=3) {
        let ch = random_channel(seed, &shape()).unwrap();
        let mut r = rng(seed ^ 1);
        let rho = random_pure_state(&mut r, 1 << n);
        let out = ch.apply_block(&rho, n).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.spectrum().iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn block_output_is_branch_mixture(seed in any::<u64>(), n in 1usize..=3) {
        let ch = random_channel(seed, &shape()).unwrap();
        let mut r = rng(seed ^ 2);
        let rho = random_mixed_state(&mut r, 1 << n);
        let full = ch.apply_block(&rho, n).unwrap();
        let mut mix = ComplexMatrix::zeros(1 << n, 1 << n);
        for (b, w) in ch.branch_channels() {
            mix.add_scaled(w, ch.apply_branch(b, &rho, n).unwrap().matrix());
        }
        prop_assert!(full.matrix().max_abs_diff(&mix) < 1e-10);
    }

    #[test]
    fn helstrom_success_identity(seed in any::<u64>(), g in 0.05f64..0.95, m in 1usize..=3) {
        let mut r = rng(seed);
        let (s1, s2) = (random_mixed_state(&mut r, 2), random_mixed_state(&mut r, 2));
        let split = helstrom_split(&s1, &s2, g, 1.0 - g, m).unwrap();
        let (a, b) = (s1.tensor_power(m).unwrap(), s2.tensor_power(m).unwrap());
        let success = split.success(a.matrix(), b.matrix(), g, 1.0 - g);
        prop_assert!((success - (0.5 + 0.5 * split.trace_norm_a)).abs() < 1e-9);
        let sum = &split.pi_plus + &split.pi_minus;
        prop_assert!(sum.max_abs_diff(&ComplexMatrix::identity(1 << m)) < 1e-9);
        prop_assert!((&split.pi_plus * &split.pi_minus).max_abs() < 1e-9);
        prop_assert!((split.trace_norm_a - trace_norm(&split.a)).abs() < 1e-9);
    }

    #[test]
    fn weighted_product_fidelity_factorizes(seed in any::<u64>(), g in 0.05f64..0.95, m in 1usize..=3) {
        let mut r = rng(seed);
        let (s1, s2) = (random_mixed_state(&mut r, 2), random_mixed_state(&mut r, 2));
        let a = s1.tensor_power(m).unwrap().matrix().scale(g);
        let b = s2.tensor_power(m).unwrap().matrix().scale(1.0 - g);
        let lhs = fidelity_psd(&a, &b);
        let rhs = (g * (1.0 - g)).sqrt() * fidelity(&s1, &s2).powi(m as i32);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn lpi_implication(seed in any::<u64>(), g in 0.05f64..0.95, m in 1usize..=4) {
        let mut r = rng(seed);
        let (s1, s2) = (random_mixed_state(&mut r, 2), random_mixed_state(&mut r, 2));
        let split = helstrom_split(&s1, &s2, g, 1.0 - g, m).unwrap();
        let (a, b) = (s1.tensor_power(m).unwrap(), s2.tensor_power(m).unwrap());
        let rep = lpi_check(&split, g, 1.0 - g, a.matrix(), b.matrix());
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn pgm_error_respects_guessing_bound(seed in any::<u64>(), size in 1usize..=5) {
        let ch = random_channel(seed, &shape()).unwrap();
        let mut r = rng(seed ^ 3);
        let words = (0..size).map(|_| random_pure_state(&mut r, 4)).collect();
        let code = Code::from_codewords(2, words, None).unwrap();
        let dec = pgm_decoder(&code, &ch, DecoderTarget::Full).unwrap();
        let rep = simulate_error(&code, &ch, &dec).unwrap();
        prop_assert!(rep.avg_error <= 1.0 - 1.0 / size as f64 + 1e-9);
        prop_assert!(rep.avg_error >= -1e-9);
        prop_assert!(rep.class_mix_residual < 1e-9);
        if size == 1 {
            prop_assert!(rep.avg_error.abs() < 1e-9);
        }
    }

    #[test]
    fn fano_bound_monotone(c in 0.0f64..1.0, dr in 0.01f64..1.0, n in 1usize..50, g in 0.01f64..1.0) {
        let r = c + dr;
        let base = fano_converse_bound(c, r, n, g).unwrap();
        prop_assert!(fano_converse_bound(c, r + 0.1, n, g).unwrap() >= base);
        if c >= 0.05 {
            prop_assert!(fano_converse_bound(c - 0.05, r, n, g).unwrap() >= base);
        }
        prop_assert!((0.0..1.0).contains(&base));
    }

    #[test]
    fn holevo_chi_is_bounded(seed in any::<u64>(), k in 1usize..=4) {
        let mut r = rng(seed);
        let states: Vec<DensityMatrix> = (0..k).map(|_| random_mixed_state(&mut r, 2)).collect();
        let probs = vec![1.0 / k as f64; k];
        let chi = holevo_chi(&states, &probs).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&chi));
    }

    #[test]
    fn typical_window_widens_monotonically(p in 0.05f64..0.5, m in 1usize..40) {
        let mu = SpectralMeasure::new(vec![1.0 - p, p]).unwrap();
        let narrow = typical_set(&mu, m, 0.1).unwrap();
        let wide = typical_set(&mu, m, 0.3).unwrap();
        prop_assert!(wide.coverage >= narrow.coverage - 1e-12);
        prop_assert!(wide.coverage <= 1.0 + 1e-12);
    }
}

#[test]
fn pgm_of_orthogonal_states_is_projective() {
    let outs: Vec<ComplexMatrix> = (0..4).map(|k| DensityMatrix::basis(4, k).into_matrix()).collect();
    let povm = pgm(&outs).unwrap();
    for (k, e) in povm.elements().iter().enumerate() {
        assert!((e.trace_product(&outs[k]) - 1.0).abs() < 1e-12);
    }
}
