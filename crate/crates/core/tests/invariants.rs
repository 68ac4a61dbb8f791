use std::collections::BTreeMap;

use proptest::prelude::*;
use sos_lab::chain_sampler::{rescaled_value, DoobChain};
use sos_lab::increments::IncrementDistribution;
use sos_lab::oracle::{dense_eigen_oracle, enumerate_gibbs, tv_distance, TinyInstance};
use sos_lab::scaling_analysis::richardson;
use sos_lab::transfer_operator::{principal_eigenpair, EigenOptions, TruncatedKernel};

fn symmetric_pmf() -> impl Strategy<Value = IncrementDistribution<f64>> {
    prop::collection::vec(0.05f64..1.0, 2..6).prop_map(|w| {
        let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        let r = w.len() as i64 - 1;
        let pmf: BTreeMap<i64, f64> = (-r..=r)
            .map(|eta| (eta, w[eta.unsigned_abs() as usize] / total))
            .collect();
        IncrementDistribution::custom(pmf).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_is_symmetric_and_even(dist in symmetric_pmf(), n in 1u64..5_000, s_max in 1i64..40) {
        let k = TruncatedKernel::build(n, &dist, s_max).unwrap();
        for s in -s_max..=s_max {
            for sb in -s_max..=s_max {
                prop_assert_eq!(k.entry(s, sb), k.entry(sb, s));
                prop_assert_eq!(k.entry(s, sb), k.entry(-s, -sb));
            }
        }
    }

    #[test]
    fn n_step_law_is_a_symmetric_probability(dist in symmetric_pmf(), steps in 1usize..40) {
        let law = dist.n_step_table(steps).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((law.moment(2) - steps as f64 * dist.variance()).abs() < 1e-8 * steps as f64);
        for (s, p) in law.iter() {
            prop_assert!(p >= 0.0);
            prop_assert_eq!(p, law.get(-s));
        }
    }

    #[test]
    fn eigenpair_is_positive_even_and_stochastic(dist in symmetric_pmf(), n in 10u64..2_000, s_max in 5i64..40) {
        let k = TruncatedKernel::build(n, &dist, s_max).unwrap();
        let pair = principal_eigenpair(&k, &EigenOptions::default()).unwrap();
        prop_assert!(pair.lambda > 0.0 && pair.lambda < 1.0);
        prop_assert!(pair.h.iter().all(|&x| x > 0.0));
        let norm: f64 = pair.h.iter().map(|x| x * x).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        for s in 0..=s_max {
            prop_assert!((pair.h_at(s) - pair.h_at(-s)).abs() < 1e-10);
        }
        let chain = DoobChain::new(&k, &pair).unwrap();
        for s in -s_max..=s_max {
            let row_sum: f64 = chain.transition_row(s).iter().sum();
            prop_assert!((row_sum - 1.0).abs() < 1e-12);
        }
        let dense = dense_eigen_oracle(&k).unwrap();
        prop_assert!((dense.lambda - pair.lambda).abs() < 1e-10);
    }

    #[test]
    fn enumeration_marginals_are_symmetric(dist in symmetric_pmf(), n in 1u64..5, s_max in 1i64..4) {
        let inst = TinyInstance::new(n, s_max, dist).unwrap();
        let pair = principal_eigenpair(&inst.kernel().unwrap(), &EigenOptions::default()).unwrap();
        let g = enumerate_gibbs(&inst, &pair).unwrap();
        prop_assert!((g.measure.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = g.marginals[0].len();
        for m in &g.marginals {
            for j in 0..d {
                prop_assert!((m[j] - m[d - 1 - j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tv_distance_is_a_metric_on_laws(a in prop::collection::vec(0.0f64..1.0, 1..20), b in prop::collection::vec(0.0f64..1.0, 1..20)) {
        let len = a.len().min(b.len());
        let norm = |v: &[f64]| {
            let t: f64 = v.iter().sum::<f64>() + 1e-9;
            v.iter().map(|x| (x + 1e-9 / len as f64) / t).collect::<Vec<_>>()
        };
        let (p, q) = (norm(&a[..len]), norm(&b[..len]));
        let d = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(d, tv_distance(&q, &p));
        prop_assert_eq!(tv_distance(&p, &p), 0.0);
    }

    #[test]
    fn richardson_removes_the_leading_term(limit in -2.0f64..2.0, slope in -5.0f64..5.0, n in 10u64..10_000) {
        let f = |m: u64| limit + slope / (m as f64).sqrt();
        prop_assert!((richardson(n, f(n), 4 * n, f(4 * n)) - limit).abs() < 1e-10);
    }

    #[test]
    fn rescaled_values_interpolate(heights in prop::collection::vec(-50i64..50, 12..30), t in 0.0f64..1.0) {
        let block = 10;
        let v = rescaled_value(&heights, 1.0, block, t);
        let k = (t * block as f64).floor() as usize;
        let (lo, hi) = (heights[k].min(heights[k + 1]) as f64, heights[k].max(heights[k + 1]) as f64);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}
