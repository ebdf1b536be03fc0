use hrvbench_core::error::Error;
use hrvbench_core::hrv::FeatureVector;
use hrvbench_core::models::*;
use hrvbench_core::synth::{synth_feature_sets, FeatureSetSpec};
use rand::{Rng, SeedableRng};

fn quick() -> TrainOptions {
    let mut o = TrainOptions::new(11);
    o.hyperparams.rfc.n_trees = 25;
    o.hyperparams.mlp.max_epochs = 40;
    o
}

fn random_vectors(n: usize) -> Vec<[f64; 22]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-3.0..6.0)))
        .collect()
}

#[test]
fn saved_models_predict_identically() {
    let t = synth_feature_sets(&FeatureSetSpec::balanced(150, 2.0, 5, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = TrainedModel::train(kind, &t, &quick()).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.kind(), kind);
        assert_eq!(back, m);
        for v in random_vectors(100) {
            let (a, b) = (m.predict_raw(&v), back.predict_raw(&v));
            assert_eq!(a.label, b.label);
            assert!((a.score - b.score).abs() <= 1e-12);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let t = synth_feature_sets(&FeatureSetSpec::balanced(100, 1.0, 4, 2)).unwrap();
    for kind in ModelKind::ALL {
        let a = serde_json::to_string(&TrainedModel::train(kind, &t, &quick()).unwrap()).unwrap();
        let b = serde_json::to_string(&TrainedModel::train(kind, &t, &quick()).unwrap()).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn damaged_files_are_format_errors() {
    let t = synth_feature_sets(&FeatureSetSpec::balanced(60, 2.0, 3, 3)).unwrap();
    let m = TrainedModel::train(ModelKind::Svm, &t, &quick()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&m, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();

    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(Error::ModelFormat(_))));

    std::fs::write(&path, text.replace("\"format_version\": 1", "\"format_version\": 2")).unwrap();
    assert!(matches!(load_model(&path), Err(Error::ModelFormat(msg)) if msg.contains("version 2")));
}

#[test]
fn reordered_roster_is_a_schema_error() {
    let t = synth_feature_sets(&FeatureSetSpec::balanced(60, 2.0, 3, 4)).unwrap();
    let m = TrainedModel::train(ModelKind::Rfc, &t, &quick()).unwrap();
    let mut other = t.clone();
    other.feature_names.swap(3, 4);
    assert!(matches!(m.predict_table(&other), Err(Error::Schema(_))));
    assert_eq!(m.predict_table(&t).unwrap().len(), t.len());
    assert!(m.predict(&FeatureVector([0.0; 22])).is_ok());

    let swapped = TrainedModel::train(ModelKind::Rfc, &other, &quick()).unwrap();
    assert!(matches!(
        swapped.predict(&FeatureVector([0.0; 22])),
        Err(Error::Schema(_))
    ));
}

#[test]
fn unweighted_training_records_uniform_weights() {
    let mut spec = FeatureSetSpec::balanced(90, 1.0, 3, 5);
    spec.n_stress = 30;
    let t = synth_feature_sets(&spec).unwrap();
    let mut o = quick();
    let w = TrainedModel::train(ModelKind::Svm, &t, &o)
        .unwrap()
        .training_meta
        .class_weights;
    assert_eq!((w.no_stress, w.stress), (120.0 / 180.0, 2.0));
    o.class_weighting = false;
    let w = TrainedModel::train(ModelKind::Svm, &t, &o)
        .unwrap()
        .training_meta
        .class_weights;
    assert_eq!(w, ClassWeights::UNIFORM);
}

#[test]
fn single_class_tables_are_rejected() {
    let t = synth_feature_sets(&FeatureSetSpec::balanced(30, 2.0, 3, 6)).unwrap();
    let one = t.filter(|r| r.label == hrvbench_core::hrv::Label::Stress);
    for kind in ModelKind::ALL {
        assert!(matches!(
            TrainedModel::train(kind, &one, &quick()),
            Err(Error::DegenerateLabels(_))
        ));
    }
}
