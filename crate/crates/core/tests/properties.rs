use std::collections::BTreeMap;

use proptest::prelude::*;

use qpcr_xai::decomp::{correlation_matrix, hcluster, pca, Axis};
use qpcr_xai::eval::{loocv, FeatureSet, PreprocessPolicy};
use qpcr_xai::explain::{consensus_rank, ImportanceSource};
use qpcr_xai::ingest::{
    impute_undetermined, select_top_k, standardize, synthesize_cohort, CtMatrix, FeatureMatrix,
    SyntheticCohortConfig,
};
use qpcr_xai::learn::{ClassifierKind, ClassifierSpec};
use qpcr_xai::stats::{bh_fdr, delta_delta_ct, differential_expression, gene_summary, Regulation, Thresholds};

fn cohort(seed: u64, genes: usize, effect: f64, noise: f64) -> CtMatrix {
    synthesize_cohort(&SyntheticCohortConfig {
        n_per_group: 8,
        n_genes: genes,
        n_signal_genes: 2,
        effect_size_ct: effect,
        noise_sd: noise,
        seed,
    })
    .unwrap()
}

fn shifted(m: &CtMatrix, shifts: &[f64]) -> CtMatrix {
    let mut v = m.values().clone();
    for (mut col, s) in v.columns_mut().into_iter().zip(shifts) {
        col.mapv_inplace(|x| x + s);
    }
    CtMatrix::new(m.sample_ids().to_vec(), m.gene_names().to_vec(), v, m.labels().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ddct_ignores_per_gene_offsets(seed in 0u64..1000, shifts in prop::collection::vec(-5.0f64..5.0, 6)) {
        let m = cohort(seed, 6, 2.0, 1.0);
        let a = delta_delta_ct(&m).unwrap();
        let b = delta_delta_ct(&shifted(&m, &shifts)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.delta_delta_ct - y.delta_delta_ct).abs() < 1e-9);
            prop_assert!((x.t_stat - y.t_stat).abs() < 1e-7 * x.t_stat.abs().max(1.0));
        }
    }

    #[test]
    fn top_k_lists_are_prefixes(seed in 0u64..1000, k1 in 1usize..10, extra in 0usize..10) {
        let m = cohort(seed, 20, 1.0, 1.0);
        let short = select_top_k(&m, k1).unwrap();
        let long = select_top_k(&m, k1 + extra).unwrap();
        prop_assert_eq!(&long[..k1], &short[..]);
    }

    #[test]
    fn pearson_ignores_positive_affine_maps(seed in 0u64..1000, a in 0.1f64..10.0, b in -50.0f64..50.0) {
        let m = cohort(seed, 5, 1.0, 1.0);
        let c = correlation_matrix(m.values(), m.gene_names(), Axis::Genes).unwrap();
        let mut v = m.values().clone();
        v.column_mut(0).mapv_inplace(|x| a * x + b);
        let d = correlation_matrix(&v, m.gene_names(), Axis::Genes).unwrap();
        for (x, y) in c.r.iter().zip(d.r.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_reconstructs_and_decorrelates(seed in 0u64..1000) {
        let m = cohort(seed, 6, 2.0, 1.0);
        let x = standardize(&m, None).unwrap();
        let p = pca(&x, 6).unwrap();
        let recon = p.scores.dot(&p.components.t());
        for (a, b) in recon.iter().zip(x.values().iter()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        let cov = p.scores.t().dot(&p.scores);
        for i in 0..cov.nrows() {
            for j in 0..cov.ncols() {
                if i != j {
                    prop_assert!(cov[[i, j]].abs() < 1e-8);
                }
            }
        }
        let total: f64 = p.explained_variance_ratio.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_heights_never_decrease(seed in 0u64..1000) {
        let m = cohort(seed, 12, 1.5, 1.0);
        let x = standardize(&m, None).unwrap();
        let c = correlation_matrix(x.values(), m.sample_ids(), Axis::Samples).unwrap();
        let d = hcluster(&c, 2).unwrap();
        prop_assert_eq!(d.merges.len(), m.n_samples() - 1);
        for w in d.merges.windows(2) {
            prop_assert!(w[1].height >= w[0].height - 1e-12);
        }
    }

    #[test]
    fn consensus_ignores_affine_rescaling(
        vals in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..12),
        scale in 0.1f64..100.0,
        offset in -10.0f64..10.0,
    ) {
        let genes: Vec<String> = (0..vals.len()).map(|i| format!("g{i:02}")).collect();
        let src = |f: &dyn Fn(&(f64, f64)) -> f64| -> BTreeMap<String, f64> {
            genes.iter().cloned().zip(vals.iter().map(f)).collect()
        };
        let a: Vec<ImportanceSource> = vec![("a".into(), src(&|v| v.0)), ("b".into(), src(&|v| v.1))];
        let b: Vec<ImportanceSource> = vec![("a".into(), src(&|v| scale * v.0 + offset)), ("b".into(), src(&|v| v.1))];
        let ra = consensus_rank(&a, &[]).unwrap();
        let rb = consensus_rank(&b, &[]).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert!((0.0..=1.0).contains(&x.consensus));
            prop_assert!((x.consensus - y.consensus).abs() < 1e-9);
        }
    }
}

#[test]
fn single_p_value_is_its_own_q() {
    assert_eq!(bh_fdr(&[0.3]).unwrap(), vec![0.3]);
}

#[test]
fn imputation_is_idempotent() {
    let m = cohort(1, 4, 1.0, 1.0);
    let once = impute_undetermined(&m);
    let twice = impute_undetermined(&once);
    assert_eq!(once.values(), twice.values());
}

#[test]
fn planted_effect_is_recovered() {
    for seed in 0..10 {
        let m = synthesize_cohort(&SyntheticCohortConfig { effect_size_ct: 3.61, noise_sd: 0.5, seed, ..Default::default() })
            .unwrap();
        let d = delta_delta_ct(&m).unwrap();
        assert!((d[0].delta_delta_ct + 3.61).abs() <= 0.8, "seed {seed}: {}", d[0].delta_delta_ct);
        let m = cohort(seed, 4, 2.0, 0.3);
        let s = gene_summary(&m, &m.gene_names()[0]).unwrap();
        assert!((s.fold_change - 4.0).abs() < 1.0, "seed {seed}: {}", s.fold_change);
    }
}

#[test]
fn null_cohort_false_call_rate_is_small() {
    let th = Thresholds::default();
    let (mut up, mut down, mut total) = (0usize, 0usize, 0usize);
    for seed in 0..20 {
        let m = synthesize_cohort(&SyntheticCohortConfig { effect_size_ct: 0.0, seed, ..Default::default() }).unwrap();
        for r in differential_expression(&m, &th).unwrap() {
            total += 1;
            match r.regulation {
                Some(Regulation::Up) => up += 1,
                Some(Regulation::Down) => down += 1,
                _ => {}
            }
        }
    }
    let (up_rate, down_rate) = (up as f64 / total as f64, down as f64 / total as f64);
    assert!(up_rate <= 0.05 && down_rate <= 0.05, "UP {up_rate}, DOWN {down_rate}");
}

#[test]
fn loocv_is_thread_count_independent() {
    let m = cohort(3, 15, 2.0, 1.0);
    for kind in [ClassifierKind::RandomForest, ClassifierKind::FeedforwardNet, ClassifierKind::SvmRbf] {
        let spec = ClassifierSpec::new(kind, 7);
        let run = |threads: usize, policy| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| loocv(&spec, &m, FeatureSet::TopK(5), policy).unwrap())
        };
        for policy in [PreprocessPolicy::PaperFaithful, PreprocessPolicy::LeakageSafe] {
            let a = run(1, policy);
            let b = run(4, policy);
            assert_eq!(a, b, "{kind}");
            assert_eq!(a.folds.len(), 16);
            let ids: Vec<&str> = a.folds.iter().map(|f| f.sample_id.as_str()).collect();
            let mut sorted = ids.clone();
            sorted.sort();
            assert_eq!(ids, sorted);
        }
    }
}

#[test]
fn standardization_refit_is_idempotent() {
    let m = cohort(5, 8, 1.0, 1.0);
    let x = standardize(&m, None).unwrap();
    let again = CtMatrix::new(m.sample_ids().to_vec(), m.gene_names().to_vec(), x.values().clone(), m.labels().to_vec()).unwrap();
    let y: FeatureMatrix = standardize(&again, None).unwrap();
    for (a, b) in x.values().iter().zip(y.values().iter()) {
        assert!((a - b).abs() < 1e-9);
    }
}
