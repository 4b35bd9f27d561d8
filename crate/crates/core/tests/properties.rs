use proptest::prelude::*;
use srts_core::bounds::{epsilon_split, h, h_minus_inv, h_plus_inv, kl_gaussian};
use srts_core::metrics::{
    algorithmic_stats, algorithmic_variance_split, realized_regret, sharpe_ratio, RunTrace,
};
use srts_core::policy::SrtsPosterior;
use srts_core::sim::run_replication;
use srts_core::{make_instance, ArmParams, PolicyConfig, PolicyKind, RngStream};

fn trace_strategy() -> impl Strategy<Value = (usize, Vec<(usize, f64)>)> {
    (2usize..8).prop_flat_map(|k| {
        (
            Just(k),
            prop::collection::vec((0..k, -50.0f64..50.0), 1..300),
        )
    })
}

proptest! {
    #[test]
    fn variance_split_reconstructs_pooled_variance((_k, steps) in trace_strategy()) {
        let (choices, rewards): (Vec<_>, Vec<_>) = steps.into_iter().unzip();
        let trace = RunTrace::new(choices, rewards).unwrap();
        let (_, pooled) = algorithmic_stats(&trace);
        let (within, switching) = algorithmic_variance_split(&trace);
        prop_assert!(within >= 0.0 && switching >= 0.0);
        prop_assert!((within + switching - pooled).abs() <= 1e-10 * pooled.max(1.0));
    }

    #[test]
    fn posterior_matches_batch_statistics(rewards in prop::collection::vec(-10.0f64..10.0, 1..200)) {
        let mut post = SrtsPosterior::new(2);
        for &x in &rewards {
            post.update(1, x).unwrap();
        }
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let ssd: f64 = rewards.iter().map(|x| (x - mean).powi(2)).sum();
        let arm = post.arms()[1];
        prop_assert_eq!(arm.pulls, rewards.len() as u64);
        prop_assert!((arm.mu_hat - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        prop_assert!((arm.alpha - (0.5 + n / 2.0)).abs() < 1e-12);
        prop_assert!((arm.beta - (0.5 + ssd / 2.0)).abs() <= 1e-9 * ssd.max(1.0));
        prop_assert_eq!(post.arms()[0].pulls, 0);
    }

    #[test]
    fn srts_at_rho_zero_follows_mean_ts(
        arms in prop::collection::vec((-1.0f64..1.0, 0.05f64..2.0), 2..6),
        seed in any::<u64>(),
        stream in 0u64..1000,
    ) {
        let inst = match make_instance(&arms, 0.0, 1.0) {
            Ok(i) => i,
            Err(_) => return Ok(()),
        };
        let a = run_replication(&inst, PolicyConfig::new(PolicyKind::Srts, 0.0, 1.0), 150, &mut RngStream::new(seed, stream)).unwrap();
        let b = run_replication(&inst, PolicyConfig::new(PolicyKind::MeanTs, 0.0, 1.0), 150, &mut RngStream::new(seed, stream)).unwrap();
        prop_assert_eq!(a.choices(), b.choices());
    }

    #[test]
    fn sharpe_scales_with_the_mean(mu in -5.0f64..5.0, var in 0.01f64..5.0, rho in 0.0f64..10.0, l0 in 0.01f64..1.0, c in 0.1f64..10.0) {
        let base = sharpe_ratio(mu, var, rho, l0).unwrap();
        let scaled = sharpe_ratio(c * mu, var, rho, l0).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-12 * scaled.abs().max(1.0));
        // Rescaling rewards by c while rho -> rho / c and l0 -> c * l0 leaves the ratio unchanged.
        let rescaled = sharpe_ratio(c * mu, c * c * var, rho / c, c * l0).unwrap();
        prop_assert!((rescaled - base).abs() <= 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn sharpe_decreases_in_variance(mu in 0.01f64..5.0, v1 in 0.01f64..5.0, dv in 0.01f64..5.0, rho in 0.01f64..10.0, l0 in 0.01f64..1.0) {
        prop_assert!(sharpe_ratio(mu, v1 + dv, rho, l0).unwrap() < sharpe_ratio(mu, v1, rho, l0).unwrap());
    }

    #[test]
    fn kl_is_non_negative(m1 in -5.0f64..5.0, v1 in 0.01f64..5.0, m2 in -5.0f64..5.0, v2 in 0.01f64..5.0) {
        let p = ArmParams::new(m1, v1).unwrap();
        let q = ArmParams::new(m2, v2).unwrap();
        prop_assert!(kl_gaussian(&p, &q) >= -1e-15);
        prop_assert!(kl_gaussian(&p, &p).abs() <= 1e-14);
    }

    #[test]
    fn epsilon_split_is_a_split(eps in 1e-6f64..10.0, mu1 in 1e-3f64..10.0, s1 in 0.0f64..5.0, si in 0.0f64..5.0, rho in 0.0f64..100.0, l0 in 0.01f64..1.0) {
        let s = epsilon_split(eps, mu1, s1, si, rho, l0).unwrap();
        prop_assert!(s.eps_mu > 0.0 && s.eps_sigma > 0.0);
        prop_assert!((s.eps_mu + s.eps_sigma - eps).abs() <= 1e-14 * eps.max(1.0));
    }

    #[test]
    fn h_inverse_branches_round_trip(y in 1e-9f64..50.0) {
        let up = h_plus_inv(y).unwrap();
        let down = h_minus_inv(y).unwrap();
        prop_assert!(up >= 1.0 && down <= 1.0);
        prop_assert!((h(up).unwrap() - y).abs() <= 1e-10 * y.max(1.0));
        prop_assert!((h(down).unwrap() - y).abs() <= 1e-10 * y.max(1.0));
    }

    #[test]
    fn realized_regret_matches_prefix_recomputation((k, steps) in trace_strategy()) {
        let arms: Vec<(f64, f64)> = (0..k).map(|i| (i as f64 * 0.1, 1.0)).collect();
        let inst = make_instance(&arms, 1.0, 1.0).unwrap();
        let (choices, rewards): (Vec<_>, Vec<_>) = steps.into_iter().unzip();
        let trace = RunTrace::new(choices, rewards.clone()).unwrap();
        let regret = realized_regret(&trace, &inst).unwrap();
        for m in [1, rewards.len() / 2 + 1, rewards.len()] {
            let prefix = &rewards[..m];
            let mean = prefix.iter().sum::<f64>() / m as f64;
            let var = prefix.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
            let expected = m as f64 * (inst.optimal_sharpe() - mean / (1.0 + var));
            prop_assert!((regret[m - 1] - expected).abs() <= 1e-8 * expected.abs().max(1.0));
        }
    }
}
