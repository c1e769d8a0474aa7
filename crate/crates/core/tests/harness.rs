mod common;

use hdbnn::harness::{
    augment_oversample, f1_metrics, kfold_split, load_corpus, oversample_indices, parse_benchmark_json, run_experiment,
    ClassifierKind, CorpusFormat, ExperimentConfig, HarnessError, Sample, Split,
};
use hdbnn::bnn::TrainConfig;
use proptest::prelude::*;

fn quick_config(classifier: ClassifierKind) -> ExperimentConfig {
    ExperimentConfig {
        classifier,
        repeats: 2,
        train: TrainConfig { epochs: 4, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    }
}

fn small_net() -> ExperimentConfig {
    let mut cfg = quick_config(ClassifierKind::Bnn);
    cfg.dim = 512;
    cfg
}

#[test]
fn experiment_report_is_deterministic() {
    let corpus = common::synthetic_corpus(12, 6, 1);
    let mut cfg = small_net();
    cfg.cross_validate = true;
    cfg.folds = 3;
    let a = run_experiment(&cfg, &corpus).unwrap();
    let b = run_experiment(&cfg, &corpus).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.folds.len(), 2);
    assert_eq!(a.folds[0].len(), 3);
    serde_json::from_str::<serde_json::Value>(&a.to_json()).unwrap();
}

#[test]
fn baselines_separate_synthetic_intents() {
    let corpus = common::synthetic_corpus(30, 20, 2);
    for kind in [ClassifierKind::Centroid, ClassifierKind::Knn] {
        let report = run_experiment(&quick_config(kind), &corpus).unwrap();
        assert!(report.mean_test_micro_f1() > 0.85, "{kind:?}: {}", report.mean_test_micro_f1());
    }
}

#[test]
fn binarized_network_learns_synthetic_intents() {
    let corpus = common::synthetic_corpus(30, 20, 3);
    let mut cfg = small_net();
    cfg.train.epochs = 15;
    let report = run_experiment(&cfg, &corpus).unwrap();
    assert!(report.mean_test_micro_f1() > 0.7, "{}", report.mean_test_micro_f1());
    assert!(report.final_model.is_some());
}

#[test]
fn zero_learning_rate_leaves_weights_at_initialization() {
    let corpus = common::synthetic_corpus(8, 4, 4);
    let mut cfg = small_net();
    cfg.repeats = 1;
    cfg.train.learning_rate = 0.0;
    let trained = run_experiment(&cfg, &corpus).unwrap().final_model.unwrap();
    let fresh = hdbnn::bnn::Model::<f32>::new(trained.architecture().clone(), trained.rng_seed()).unwrap();
    assert_eq!(trained.params(), fresh.params());
}

#[test]
fn missing_test_split_needs_cross_validation() {
    let samples: Vec<Sample> = common::synthetic_corpus(6, 0, 5).samples;
    let corpus = hdbnn::harness::Corpus::new("train-only", samples).unwrap();
    assert!(matches!(run_experiment(&quick_config(ClassifierKind::Centroid), &corpus), Err(HarnessError::InvalidConfig(_))));
    let cfg = ExperimentConfig { cross_validate: true, folds: 3, ..quick_config(ClassifierKind::Centroid) };
    assert!(run_experiment(&cfg, &corpus).unwrap().test.is_empty());
}

#[test]
fn malformed_corpora_are_reported() {
    assert!(matches!(parse_benchmark_json("{\"sentences\": [{\"text\": 1}]"), Err(HarnessError::Parse(_))));
    assert!(matches!(parse_benchmark_json("{}"), Err(HarnessError::Parse(_))));
    assert!(matches!(
        parse_benchmark_json(r#"{"sentences":[{"text":"hi","intent":"a","training":"yes"}]}"#),
        Err(HarnessError::Parse(_))
    ));
    assert!(load_corpus("/nonexistent/corpus.json", CorpusFormat::BenchmarkJson).is_err());
}

#[test]
fn benchmark_json_loads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"name":"x","sentences":[
            {"text":"book a train","intent":"Travel","training":true},
            {"text":"  ","intent":"Travel","training":true},
            {"text":"is it raining","intent":"Weather","training":false}]}"#,
    )
    .unwrap();
    let corpus = load_corpus(&path, CorpusFormat::detect(&path)).unwrap();
    assert_eq!(corpus.samples.len(), 2);
    assert_eq!(corpus.labels(), ["Travel", "Weather"]);
    assert_eq!(corpus.split(Split::Test)[0].text, "is it raining");
}

#[test]
fn config_text_round_trips() {
    let text = "tokenizer = bpe\nbpe_vocab = 300\ndim = 1024\nclassifier = knn\nknn_k = 5\n# comment\nepochs = 7\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert!(ExperimentConfig::parse("dim = 500").is_err());
    assert!(ExperimentConfig::parse("colour = blue").is_err());
    assert!(ExperimentConfig::parse("knn_k = 4").is_err());
}

fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (2usize..5).prop_flat_map(|c| (proptest::collection::vec(0..c, c..60), Just(c)))
}

proptest! {
    #[test]
    fn folds_partition_and_stratify((labels, classes) in labels_strategy(), k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(labels.len() >= k);
        let folds = kfold_split(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in &folds {
            for &i in &f.validation {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.validation.len(), labels.len());
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.validation.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..classes {
            let per: Vec<usize> = folds.iter().map(|f| f.validation.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn oversampling_balances_and_keeps_originals((labels, classes) in labels_strategy(), seed in any::<u64>()) {
        let present = (0..classes).all(|c| labels.contains(&c));
        let out = oversample_indices(&labels, classes, seed);
        prop_assume!(present);
        let out = out.unwrap();
        prop_assert_eq!(&out[..labels.len()], &(0..labels.len()).collect::<Vec<_>>()[..]);
        let counts: Vec<usize> = (0..classes).map(|c| out.iter().filter(|&&i| labels[i] == c).count()).collect();
        prop_assert!(counts.iter().all(|&n| n == counts[0]));
        prop_assert_eq!(counts[0], (0..classes).map(|c| labels.iter().filter(|&&l| l == c).count()).max().unwrap());
    }

    #[test]
    fn micro_f1_equals_accuracy(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..80)) {
        let (preds, golds): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let r = f1_metrics(&preds, &golds, 4).unwrap();
        let acc = preds.iter().zip(&golds).filter(|(p, g)| p == g).count() as f64 / preds.len() as f64;
        prop_assert!((r.micro_f1 - acc).abs() < 1e-12);
        prop_assert!((r.accuracy - acc).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.macro_f1));
        prop_assert_eq!(r.confusion.iter().flatten().sum::<u64>(), preds.len() as u64);
    }
}

#[test]
fn augmented_samples_are_copies() {
    let corpus = common::synthetic_corpus(5, 0, 6);
    let mut train: Vec<Sample> = corpus.samples.clone();
    train.truncate(12);
    let out = augment_oversample(&train, 1).unwrap();
    assert_eq!(&out[..train.len()], &train[..]);
    assert!(out[train.len()..].iter().all(|s| train.contains(s)));
    assert!(matches!(f1_metrics(&[0], &[0, 1], 2), Err(HarnessError::LengthMismatch { .. })));
}
