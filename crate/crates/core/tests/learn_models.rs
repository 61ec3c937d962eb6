use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpcr_xai::ingest::{Class, FeatureMatrix};
use qpcr_xai::learn::{
    fit, logistic, net::NetModel, svm, ClassifierKind, ClassifierSpec, Model,
};

fn blobs(n_per: usize, f: usize, shift: f64, seed: u64) -> (FeatureMatrix, Vec<Class>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * n_per;
    let mut x = Array2::zeros((n, f));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = usize::from(i >= n_per);
        for j in 0..f {
            let base: f64 = rng.random_range(-1.0..1.0);
            x[[i, j]] = base + if j == 0 { shift * c as f64 } else { 0.0 };
        }
        y.push(Class::from_index(c).unwrap());
    }
    let names = (0..f).map(|j| format!("g{j}")).collect();
    (FeatureMatrix::from_raw(x, names).unwrap(), y)
}

fn y01(y: &[Class]) -> Vec<f64> {
    y.iter().map(|c| c.index() as f64).collect()
}

#[test]
fn logistic_regression_reaches_stationary_point() {
    let (x, y) = blobs(10, 4, 1.0, 3);
    let c = fit(&ClassifierSpec::new(ClassifierKind::LogisticRegression, 0), &x, &y).unwrap();
    let Model::Logistic(m) = &c.model else { panic!() };
    let mut theta = m.weights.clone();
    theta.push(m.intercept);
    let g = logistic::gradient(&theta, x.values(), &y01(&y), 1.0);
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "gradient norm {norm}");
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let (x, y) = blobs(6, 3, 2.0, 5);
    let yv = y01(&y);
    let theta = vec![0.3, -0.7, 1.1, 0.2];
    let g = logistic::gradient(&theta, x.values(), &yv, 1.0);
    for k in 0..theta.len() {
        let h = 1e-6;
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[k] += h;
        dn[k] -= h;
        let fd = (logistic::objective(&up, x.values(), &yv, 1.0)
            - logistic::objective(&dn, x.values(), &yv, 1.0))
            / (2.0 * h);
        assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "k={k} fd={fd} g={}", g[k]);
    }
}

#[test]
fn net_gradient_matches_finite_differences() {
    let (x, y) = blobs(5, 4, 1.5, 9);
    let yi: Vec<usize> = y.iter().map(|c| c.index()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = NetModel::init(&[4, 16, 8, 2], &mut rng);
    let (_, g) = net.loss_and_gradient(x.values(), &yi);
    let p0 = net.params();
    let mut worst: f64 = 0.0;
    for k in (0..p0.len()).step_by(7) {
        let h = 1e-6;
        let mut p = p0.clone();
        p[k] += h;
        net.set_params(&p);
        let up = net.loss(x.values(), &yi);
        p[k] -= 2.0 * h;
        net.set_params(&p);
        let dn = net.loss(x.values(), &yi);
        let fd = (up - dn) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs());
    }
    assert!(worst < 1e-6, "max gradient error {worst}");
}

#[test]
fn boosting_training_loss_never_increases() {
    for seed in 0..5 {
        let (x, y) = blobs(8, 6, 0.8, seed);
        let c = fit(&ClassifierSpec::new(ClassifierKind::GradientBoostedTrees, 0), &x, &y).unwrap();
        let Model::Boosted { stage_losses, .. } = &c.model else { panic!() };
        assert_eq!(stage_losses.len(), 101);
        for w in stage_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn linear_svm_separates_and_satisfies_kkt() {
    let (x, y) = blobs(10, 2, 4.0, 2);
    let yv = y01(&y);
    for kind in [ClassifierKind::SvmLinear, ClassifierKind::SvmRbf] {
        let c = fit(&ClassifierSpec::new(kind, 0), &x, &y).unwrap();
        let Model::Svm(m) = &c.model else { panic!() };
        assert!(svm::kkt_violation(m, x.values(), &yv) <= 1e-3 + 1e-9);
        if kind == ClassifierKind::SvmLinear {
            let correct = x
                .values()
                .rows()
                .into_iter()
                .zip(&yv)
                .filter(|(r, &t)| (m.decision(*r) > 0.0) == (t == 1.0))
                .count();
            assert_eq!(correct, yv.len());
        }
    }
}

#[test]
fn knn_with_k1_memorises_training_set() {
    let (x, y) = blobs(7, 3, 0.0, 4);
    let mut spec = ClassifierSpec::new(ClassifierKind::Knn, 0);
    spec.hyperparameters.knn.k = 1;
    let c = fit(&spec, &x, &y).unwrap();
    assert_eq!(c.predict(&x).unwrap(), y);
}

#[test]
fn forest_separable_data_is_unanimous() {
    let (x, y) = blobs(8, 1, 10.0, 6);
    let c = fit(&ClassifierSpec::new(ClassifierKind::RandomForest, 11), &x, &y).unwrap();
    let p = c.predict_proba(&x).unwrap();
    for (i, cls) in y.iter().enumerate() {
        assert_eq!(p[[i, 1]], cls.index() as f64);
    }
}

#[test]
fn fitting_is_deterministic_per_seed() {
    let (x, y) = blobs(8, 5, 1.0, 8);
    for kind in ClassifierKind::ALL {
        let a = fit(&ClassifierSpec::new(kind, 42), &x, &y).unwrap();
        let b = fit(&ClassifierSpec::new(kind, 42), &x, &y).unwrap();
        assert_eq!(a, b, "{kind}");
        if kind.is_stochastic() {
            let c = fit(&ClassifierSpec::new(kind, 43), &x, &y).unwrap();
            assert_ne!(a.model, c.model, "{kind}");
        }
    }
}

#[test]
fn probabilities_are_normalised() {
    let (x, y) = blobs(9, 4, 1.0, 10);
    let (q, _) = blobs(20, 4, 0.5, 11);
    for kind in ClassifierKind::ALL {
        let c = fit(&ClassifierSpec::new(kind, 1), &x, &y).unwrap();
        let p = c.predict_proba(&q).unwrap();
        for r in p.rows() {
            assert!(r[0] >= 0.0 && r[1] >= 0.0, "{kind}");
            assert!((r[0] + r[1] - 1.0).abs() < 1e-12, "{kind}");
        }
    }
}

#[test]
fn json_round_trip_preserves_predictions_bitwise() {
    let (x, y) = blobs(8, 4, 1.2, 12);
    let (q, _) = blobs(15, 4, 0.0, 13);
    for kind in ClassifierKind::ALL {
        let c = fit(&ClassifierSpec::new(kind, 5), &x, &y).unwrap();
        let back = qpcr_xai::learn::TrainedClassifier::from_json(&c.to_json().unwrap()).unwrap();
        let a = c.predict_proba(&q).unwrap();
        let b = back.predict_proba(&q).unwrap();
        for (u, v) in a.iter().zip(b.iter()) {
            assert_eq!(u.to_bits(), v.to_bits(), "{kind}");
        }
    }
}

#[test]
fn model_document_rejects_unknown_version() {
    let (x, y) = blobs(4, 2, 1.0, 1);
    let c = fit(&ClassifierSpec::new(ClassifierKind::Knn, 0), &x, &y).unwrap();
    let raw = c.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
    assert!(qpcr_xai::learn::TrainedClassifier::from_json(&raw).is_err());
}
