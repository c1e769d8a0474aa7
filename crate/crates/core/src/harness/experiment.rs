use std::fs;

use super::augment::oversample_indices;
use super::config::{mode_name, ClassifierKind, ExperimentConfig};
use super::json::Json;
use super::kfold::kfold_split;
use super::metrics::{f1_metrics, F1Report};
use super::pipeline::{document_stats, Featurizer, Tokenizer};
use super::{Corpus, HarnessError, Split};
use crate::baselines::{fit_centroid, knn_predict, predict_centroid, CentroidModel};
use crate::bnn::{encode_checkpoint, predict_many, train, Activation, Architecture, BnnModel, Model, TrainHistory};
use crate::hdcore::{hash64, BitVector, HdVector};
use crate::packrt::export_model;

/// A fitted classifier of any supported kind.
#[derive(Debug, Clone)]
pub enum Trained {
    Net { model: BnnModel, history: TrainHistory },
    Centroid(CentroidModel),
    Knn { train: Vec<(BitVector, usize)>, k: usize },
}

fn binary_pairs(data: &[(HdVector, usize)]) -> Result<Vec<(BitVector, usize)>, HarnessError> {
    data.iter()
        .map(|(x, l)| Ok((binary(x)?.clone(), *l)))
        .collect()
}

fn binary(x: &HdVector) -> Result<&BitVector, HarnessError> {
    x.as_binary().ok_or_else(|| HarnessError::InvalidConfig("Hamming baselines need binary features".into()))
}

/// Trains the configured classifier. `seed` initializes network weights.
pub fn fit_classifier(
    cfg: &ExperimentConfig,
    data: &[(HdVector, usize)],
    num_classes: usize,
    seed: u64,
) -> Result<Trained, HarnessError> {
    let d_in = data.first().map(|(x, _)| x.dim()).ok_or(HarnessError::EmptyCorpus)?;
    Ok(match cfg.classifier {
        ClassifierKind::Bnn | ClassifierKind::TextLenet => {
            let act = if cfg.classifier == ClassifierKind::Bnn { Activation::Sign } else { Activation::Relu };
            let mut model = Model::new(Architecture::text_lenet(d_in, num_classes, act), seed)?;
            let history = train(&mut model, data, &cfg.train)?;
            Trained::Net { model, history }
        }
        ClassifierKind::Centroid => Trained::Centroid(fit_centroid(&binary_pairs(data)?)?),
        ClassifierKind::Knn => Trained::Knn { train: binary_pairs(data)?, k: cfg.knn_k },
    })
}

impl Trained {
    pub fn predict(&self, inputs: &[HdVector]) -> Result<Vec<usize>, HarnessError> {
        match self {
            Trained::Net { model, .. } => Ok(predict_many(model, inputs)?),
            Trained::Centroid(m) => inputs.iter().map(|x| Ok(predict_centroid(m, binary(x)?)?)).collect(),
            Trained::Knn { train, k } => {
                // Largest odd k the training set allows.
                let k = (*k).min(if train.len() % 2 == 1 { train.len() } else { train.len() - 1 });
                inputs.iter().map(|x| Ok(knn_predict(train, binary(x)?, k)?)).collect()
            }
        }
    }
}

/// Everything measured by one experiment.
#[derive(Debug, Clone)]
pub struct Report {
    pub labels: Vec<String>,
    /// Official test split, one entry per repeat.
    pub test: Vec<F1Report>,
    /// Cross-validation folds, `[repeat][fold]`.
    pub folds: Vec<Vec<F1Report>>,
    pub train_loss: Vec<Vec<f64>>,
    pub epoch_seconds: Vec<Vec<f64>>,
    /// Model of the first repeat trained on the full training split.
    pub final_model: Option<BnnModel>,
    json: Json,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

impl Report {
    pub fn test_micro_f1(&self) -> Vec<f64> {
        self.test.iter().map(|r| r.micro_f1).collect()
    }

    pub fn mean_test_micro_f1(&self) -> f64 {
        mean(&self.test_micro_f1())
    }

    pub fn mean_cv_micro_f1(&self) -> f64 {
        mean(&self.folds.iter().flatten().map(|r| r.micro_f1).collect::<Vec<_>>())
    }

    /// Deterministic JSON; wall-clock timings live in [`Report::timings_json`].
    pub fn to_json(&self) -> String {
        self.json.render()
    }

    pub fn timings_json(&self) -> String {
        Json::obj([("epoch_seconds", Json::Arr(self.epoch_seconds.iter().map(|e| Json::floats(e)).collect()))]).render()
    }
}

/// Preprocess, tokenize, count n-grams and featurize every sample.
/// Vocabularies (BPE merges, count features) come from the training split only.
pub fn featurize_corpus(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<Vec<HdVector>, HarnessError> {
    let train_texts: Vec<&str> = corpus.split(Split::Train).iter().map(|s| s.text.as_str()).collect();
    let tokenizer = Tokenizer::from_config(cfg, &train_texts)?;
    let stats = corpus
        .samples
        .iter()
        .map(|s| document_stats(&tokenizer.tokenize(&s.text)?, cfg.ngram))
        .collect::<Result<Vec<_>, _>>()?;
    let train_stats: Vec<_> =
        corpus.samples.iter().zip(&stats).filter(|(s, _)| s.split == Split::Train).map(|(_, st)| st).collect();
    let featurizer = Featurizer::new(cfg, &train_stats);
    stats.iter().map(|s| featurizer.features(s)).collect()
}

/// Runs `repeats` seeds of: optional k-fold cross-validation on the
/// training split, then training on the whole training split and scoring
/// the official test split. Writes the report and artifacts named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let features = featurize_corpus(cfg, corpus)?;
    let labels: Vec<usize> =
        corpus.samples.iter().map(|s| corpus.label_index(&s.intent).expect("label set covers samples")).collect();
    let classes = corpus.labels().len();
    let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| corpus.samples[i].split == Split::Train).collect();
    let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| corpus.samples[i].split == Split::Test).collect();
    if train_idx.is_empty() {
        return Err(HarnessError::InvalidConfig("corpus has no training samples".into()));
    }
    if test_idx.is_empty() && !cfg.cross_validate {
        return Err(HarnessError::InvalidConfig("no test split; enable cross_validate".into()));
    }

    // Fits on `subset` (corpus indices), oversampled when configured.
    let fit = |subset: &[usize], seed: u64| -> Result<Trained, HarnessError> {
        let picked = if cfg.augment {
            let sub_labels: Vec<usize> = subset.iter().map(|&i| labels[i]).collect();
            let present: Vec<usize> = {
                let mut p = sub_labels.clone();
                p.sort_unstable();
                p.dedup();
                p
            };
            // Oversampling works on a dense relabelling of the classes present.
            let dense: Vec<usize> = sub_labels.iter().map(|l| present.binary_search(l).unwrap()).collect();
            oversample_indices(&dense, present.len(), seed)?.into_iter().map(|j| subset[j]).collect()
        } else {
            subset.to_vec()
        };
        let data: Vec<(HdVector, usize)> = picked.iter().map(|&i| (features[i].clone(), labels[i])).collect();
        fit_classifier(cfg, &data, classes, hash64(seed, "model"))
    };
    let score = |model: &Trained, subset: &[usize]| -> Result<F1Report, HarnessError> {
        let inputs: Vec<HdVector> = subset.iter().map(|&i| features[i].clone()).collect();
        let golds: Vec<usize> = subset.iter().map(|&i| labels[i]).collect();
        f1_metrics(&model.predict(&inputs)?, &golds, classes)
    };

    let mut report = Report {
        labels: corpus.labels().to_vec(),
        test: Vec::new(),
        folds: Vec::new(),
        train_loss: Vec::new(),
        epoch_seconds: Vec::new(),
        final_model: None,
        json: Json::Null,
    };
    let mut repeats_json = Vec::new();
    for r in 0..cfg.repeats {
        let seed = hash64(cfg.seed, &format!("repeat-{r}"));
        let mut entry = vec![("seed", Json::Str(seed.to_string()))];
        let mut fold_reports = Vec::new();
        if cfg.cross_validate {
            let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
            for (f, fold) in kfold_split(&train_labels, cfg.folds, seed)?.into_iter().enumerate() {
                let tr: Vec<usize> = fold.train.iter().map(|&j| train_idx[j]).collect();
                let va: Vec<usize> = fold.validation.iter().map(|&j| train_idx[j]).collect();
                let model = fit(&tr, hash64(seed, &format!("fold-{f}")))?;
                fold_reports.push(score(&model, &va)?);
            }
            entry.push(("folds", Json::Arr(fold_reports.iter().map(|m| m.to_json(corpus.labels())).collect())));
        }
        report.folds.push(fold_reports);
        if !test_idx.is_empty() {
            let model = fit(&train_idx, hash64(seed, "final"))?;
            let m = score(&model, &test_idx)?;
            entry.push(("test", m.to_json(corpus.labels())));
            report.test.push(m);
            if let Trained::Net { model, history } = model {
                entry.push(("train_loss", Json::floats(&history.loss)));
                entry.push(("train_accuracy", Json::floats(&history.train_f1)));
                report.train_loss.push(history.loss);
                report.epoch_seconds.push(history.epoch_seconds);
                if report.final_model.is_none() {
                    report.final_model = Some(model);
                }
            }
        }
        repeats_json.push(Json::obj(entry));
    }

    let test_micro = report.test_micro_f1();
    let test_macro: Vec<f64> = report.test.iter().map(|r| r.macro_f1).collect();
    let cv_micro: Vec<f64> = report.folds.iter().flatten().map(|r| r.micro_f1).collect();
    let cv_macro: Vec<f64> = report.folds.iter().flatten().map(|r| r.macro_f1).collect();
    let mut summary = vec![
        ("test_micro_f1_mean", mean(&test_micro).into()),
        ("test_micro_f1_std", std_dev(&test_micro).into()),
        ("test_macro_f1_mean", mean(&test_macro).into()),
    ];
    if cfg.cross_validate {
        summary.push(("cv_micro_f1_mean", mean(&cv_micro).into()));
        summary.push(("cv_macro_f1_mean", mean(&cv_macro).into()));
    }
    let train_counts = corpus.counts(Split::Train);
    let test_counts = corpus.counts(Split::Test);
    let count_json = |c: &std::collections::BTreeMap<&str, usize>| Json::obj(c.iter().map(|(k, &v)| (*k, v.into())));
    let mut top = vec![
        ("config", cfg.to_json()),
        (
            "corpus",
            Json::obj([
                ("name", corpus.name.as_str().into()),
                ("labels", Json::Arr(corpus.labels().iter().map(|l| l.as_str().into()).collect())),
                ("train_counts", count_json(&train_counts)),
                ("test_counts", count_json(&test_counts)),
                ("feature_dim", features[0].dim().into()),
                ("embed_mode", mode_name(cfg.embed_mode).into()),
                ("features", cfg.features.as_str().into()),
            ]),
        ),
        ("repeats", Json::Arr(repeats_json)),
        ("summary", Json::obj(summary)),
    ];
    if let Some(model) = &report.final_model {
        let (ckpt, spans) = encode_checkpoint(model);
        let mut sizes = vec![
            ("checkpoint_bytes", ckpt.len().into()),
            ("checkpoint_weight_bytes", spans.iter().map(|s| s.len).sum::<usize>().into()),
        ];
        let packed = match export_model(model) {
            Ok(p) => Some(p),
            Err(e) if cfg.export.is_some() => return Err(e.into()),
            Err(_) => None,
        };
        if let Some(packed) = packed {
            let (bytes, spans) = packed.encode();
            sizes.push(("packed_bytes", bytes.len().into()));
            sizes.push(("packed_weight_bytes", spans.iter().map(|s| s.len).sum::<usize>().into()));
            if let Some(path) = &cfg.export {
                fs::write(path, &bytes)?;
            }
        }
        if let Some(path) = &cfg.checkpoint {
            fs::write(path, &ckpt)?;
        }
        top.push(("model_bytes", Json::obj(sizes)));
    }
    report.json = Json::obj(top);
    if let Some(path) = &cfg.report {
        fs::write(path, report.to_json())?;
    }
    Ok(report)
}
