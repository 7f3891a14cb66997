use ams_core::diagnostics::{aggregate, partial_averages};
use ams_core::dynamics::{gamblers_ruin_model, AllenCahn, BiChannel, LinearPotential, Potential};
use ams_core::gams::kth_smallest;
use ams_core::markov_path::entrance_time;
use ams_core::rng::{stream, StreamFactory};
use ams_core::variants::bridge::sample_bridge;
use ams_core::{run_ams, ExtendedLevel, GamsConfig};
use proptest::prelude::*;
use rand::Rng;

fn levels_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..40)
}

/// Central differences with Richardson extrapolation, `O(h^4)`.
fn fd_gradient<P: Potential<D>, const D: usize>(p: &P, x: &[f64; D]) -> [f64; D] {
    let h = 1e-3;
    std::array::from_fn(|i| {
        let at = |s: f64| {
            let mut y = *x;
            y[i] += s;
            p.value(&y)
        };
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    })
}

fn gradient_gap<P: Potential<D>, const D: usize>(p: &P, x: &[f64; D]) -> f64 {
    let g = p.gradient(x);
    let fd = fd_gradient(p, x);
    let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    err / (1.0 + norm)
}

proptest! {
    #[test]
    fn entrance_time_is_first_strict_exceedance(levels in levels_strategy(), z in -6.0f64..6.0) {
        match entrance_time(&levels, z) {
            Some(t) => {
                prop_assert!(levels[t] > z);
                prop_assert!(levels[..t].iter().all(|&l| l <= z));
            }
            None => prop_assert!(levels.iter().all(|&l| l <= z)),
        }
        // At the maximum itself the strict time is undefined.
        let max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(entrance_time(&levels, max), None);
    }

    #[test]
    fn entrance_time_is_monotone_in_the_level(levels in levels_strategy(), z1 in -6.0f64..6.0, dz in 0.0f64..3.0) {
        let key = |t: Option<usize>| t.unwrap_or(usize::MAX);
        prop_assert!(key(entrance_time(&levels, z1)) <= key(entrance_time(&levels, z1 + dz)));
    }

    #[test]
    fn kth_smallest_matches_sorting(mut levels in levels_strategy(), k_frac in 0.0f64..1.0) {
        let k = 1 + ((levels.len() - 1) as f64 * k_frac) as usize;
        let mut sorted = levels.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(kth_smallest(&mut levels, k), sorted[k - 1]);
    }

    #[test]
    fn extended_levels_order_like_floats(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let (x, y) = (ExtendedLevel::new(a), ExtendedLevel::new(b));
        prop_assert_eq!(x.cmp(&y), a.total_cmp(&b));
        prop_assert!(ExtendedLevel::NEG_INFINITY <= x && x <= ExtendedLevel::INFINITY);
    }

    #[test]
    fn partial_averages_recombine(values in prop::collection::vec(0.0f64..1.0, 2..200), frac in 0.0f64..1.0) {
        let n = values.len();
        let n0 = 1 + ((n - 2) as f64 * frac) as usize;
        let (large, small) = partial_averages(&values, n0).unwrap();
        let mean = aggregate(&values).unwrap().mean;
        let recombined = (n0 as f64 * large + (n - n0) as f64 * small) / n as f64;
        prop_assert!((recombined - mean).abs() <= 1e-14 * (1.0 + mean.abs()));
        prop_assert!(large >= small);
    }

    #[test]
    fn potential_gradients_match_finite_differences(x in -2.0f64..2.0, y in -1.5f64..2.5, gamma in 0.0f64..3.0) {
        let ac = AllenCahn { gamma };
        let lin = LinearPotential { mu: gamma };
        prop_assert!(gradient_gap(&BiChannel, &[x, y]) < 1e-8);
        prop_assert!(gradient_gap(&ac, &[x, y]) < 1e-8);
        prop_assert!(gradient_gap(&lin, &[x]) < 1e-8);
    }

    #[test]
    fn potential_symmetries(x in -3.0f64..3.0, y in -3.0f64..3.0, gamma in 0.0f64..3.0) {
        let bc = BiChannel;
        prop_assert!((bc.value(&[x, y]) - bc.value(&[-x, y])).abs() <= 1e-12);
        let ac = AllenCahn { gamma };
        prop_assert!((ac.value(&[x, y]) - ac.value(&[y, x])).abs() <= 1e-12);
        prop_assert!((ac.value(&[x, y]) - ac.value(&[-x, -y])).abs() <= 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct(seed in any::<u64>(), salt in any::<u64>(), run in 1u64..1000) {
        let f = StreamFactory::with_salt(seed, salt);
        let a: u64 = f.stream(run).random();
        prop_assert_eq!(a, f.stream(run).random::<u64>());
        prop_assert_ne!(a, f.stream(run + 1).random::<u64>());
    }

    #[test]
    fn bridge_has_the_requested_length(m in 0usize..20, start in -2.0f64..2.0, seed in any::<u64>()) {
        let v = sample_bridge(start, 0.0, m, &mut stream(seed, 0));
        prop_assert_eq!(v.len(), m);
        prop_assert!(v.iter().all(|x| x.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Levels increase strictly, total mass stays 1, working weights follow the
    /// product formula and the estimator factorizes.
    #[test]
    fn ams_run_invariants(seed in any::<u64>(), n_rep in 2usize..30, k_frac in 0.0f64..1.0, p_up in 0.2f64..0.6) {
        let k = 1 + ((n_rep - 2) as f64 * k_frac) as usize;
        let model = gamblers_ruin_model(p_up, 1, 7).unwrap();
        let cfg = GamsConfig::new(n_rep, k, model.z_max);
        let r = run_ams(&model, &cfg, None, &mut stream(seed, 1)).unwrap();

        prop_assert!(r.levels.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(r.levels.len(), r.q_iter + 1);
        prop_assert_eq!(r.k_history.len(), r.q_iter);
        prop_assert!(r.k_history.iter().all(|&kk| kk >= k && kk < n_rep));
        for s in &r.per_iteration_weight_sums {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        for d in &r.working_weight_deviation {
            prop_assert!(*d <= 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&r.p_hat));
        prop_assert!((r.p_hat - r.survival_product() * r.p_corr).abs() <= 1e-15);
        if r.extinct {
            prop_assert_eq!(r.p_hat, 0.0);
        }
    }
}
