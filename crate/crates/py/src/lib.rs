//! Python bindings: tokenizers, HD embeddings, packed-model inference,
//! F1 scoring and whole experiments.

use std::fmt::Display;

use hdbnn::harness::{
    document_stats, f1_metrics, load_corpus, run_experiment as run, CorpusFormat, ExperimentConfig, Featurizer,
    HarnessError, Tokenizer, TokenizerKind,
};
use hdbnn::hdcore::{hamming as hd_hamming, BitVector, EmbedMode, HdVector};
use hdbnn::packrt;
use hdbnn::textprep::WordPieceVocab;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Io(e) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

/// Signs as +1/-1 integers; anything positive counts as +1.
fn bits_from(signs: &[i64]) -> BitVector {
    BitVector::from_signs(signs.len(), signs.iter().map(|&s| s > 0))
}

fn signs_of(bits: &BitVector) -> Vec<i64> {
    (0..bits.dim()).map(|i| if bits.bit(i) { 1 } else { -1 }).collect()
}

fn build_tokenizer(
    method: &str,
    n: usize,
    remove_stopwords: Option<bool>,
    lowercase: bool,
    vocab: Option<Vec<String>>,
    train_texts: Option<Vec<String>>,
    vocab_size: usize,
) -> PyResult<Tokenizer> {
    let kind: TokenizerKind = method.parse().map_err(value_err)?;
    let cfg = ExperimentConfig { tokenizer: kind, remove_stopwords, lowercase, ..Default::default() };
    let wordpiece = vocab.map(WordPieceVocab::from_tokens).transpose().map_err(value_err)?;
    let texts = train_texts.unwrap_or_default();
    Tokenizer::fit(kind, cfg.prep_config(), n, vocab_size, wordpiece, &texts).map_err(harness_err)
}

/// Tokenizes one text. `bpe`/`sp` learn merges from `train_texts`;
/// `wordpiece` needs `vocab`.
#[pyfunction]
#[pyo3(signature = (text, method="semhash", n=3, remove_stopwords=None, lowercase=false, vocab=None, train_texts=None, vocab_size=1000))]
#[allow(clippy::too_many_arguments)]
fn tokenize(
    text: &str,
    method: &str,
    n: usize,
    remove_stopwords: Option<bool>,
    lowercase: bool,
    vocab: Option<Vec<String>>,
    train_texts: Option<Vec<String>>,
    vocab_size: usize,
) -> PyResult<Vec<String>> {
    let tok = build_tokenizer(method, n, remove_stopwords, lowercase, vocab, train_texts, vocab_size)?;
    Ok(tok.tokenize(text).map_err(harness_err)?.into_iter().map(|t| t.into_string()).collect())
}

/// Text to HD vector: preprocessing, tokenization, n-gram statistics and
/// the seeded item memory.
#[pyclass(frozen)]
struct Embedder {
    cfg: ExperimentConfig,
    tokenizer: Tokenizer,
    featurizer: Featurizer,
}

#[pymethods]
impl Embedder {
    #[new]
    #[pyo3(signature = (dim, seed=0, method="semhash", n=3, ngram=1, mode="binary", lowercase=false))]
    fn new(dim: usize, seed: u64, method: &str, n: usize, ngram: usize, mode: &str, lowercase: bool) -> PyResult<Self> {
        if dim == 0 || n == 0 || ngram == 0 {
            return Err(value_err("dim, n and ngram must be positive"));
        }
        let embed_mode = match mode {
            "binary" => EmbedMode::Binary,
            "real" => EmbedMode::Real,
            other => return Err(value_err(format!("unknown mode {other:?}"))),
        };
        if matches!(method, "bpe" | "sp" | "wordpiece") {
            return Err(value_err("Embedder supports word, semhash and char tokenizers"));
        }
        let tokenizer = build_tokenizer(method, n, None, lowercase, None, None, 0)?;
        let cfg = ExperimentConfig {
            dim,
            hd_seed: seed,
            tokenizer: tokenizer.kind,
            semhash_n: n,
            ngram,
            embed_mode,
            lowercase,
            ..Default::default()
        };
        let featurizer = Featurizer::new(&cfg, &[]);
        Ok(Embedder { cfg, tokenizer, featurizer })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    /// +1/-1 integers in binary mode, a unit-length float list in real mode.
    fn embed<'py>(&self, py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let stats = document_stats(&self.tokenizer.tokenize(text).map_err(harness_err)?, self.cfg.ngram)
            .map_err(harness_err)?;
        match self.featurizer.features(&stats).map_err(harness_err)? {
            HdVector::Binary(b) => signs_of(&b).into_pyobject(py).map(Bound::into_any),
            HdVector::Real(r) => r.values().to_vec().into_pyobject(py).map(Bound::into_any),
        }
    }
}

/// Hamming distance between two +1/-1 vectors of equal length.
#[pyfunction]
fn hamming(a: Vec<i64>, b: Vec<i64>) -> PyResult<u32> {
    hd_hamming(&bits_from(&a), &bits_from(&b)).map_err(value_err)
}

/// Bit-packed binarized network loaded from the packed file format.
#[pyclass(frozen)]
struct PackedModel {
    inner: packrt::PackedModel,
}

#[pymethods]
impl PackedModel {
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PackedModel { inner: packrt::load_model(data).map_err(value_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let data = std::fs::read(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Self::from_bytes(&data)
    }

    #[getter]
    fn d_in(&self) -> usize {
        self.inner.d_in
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.inner.to_bytes()
    }

    /// Returns `(label, logits)` for a +1/-1 input vector.
    fn infer(&self, signs: Vec<i64>) -> PyResult<(usize, Vec<f32>)> {
        let out = self.inner.infer(&bits_from(&signs)).map_err(value_err)?;
        Ok((out.label, out.logits))
    }
}

/// Micro/macro F1 and accuracy for single-label predictions.
#[pyfunction]
fn f1<'py>(py: Python<'py>, preds: Vec<usize>, golds: Vec<usize>, num_classes: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = f1_metrics(&preds, &golds, num_classes).map_err(harness_err)?;
    let d = PyDict::new(py);
    d.set_item("micro_f1", r.micro_f1)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("per_class_f1", r.per_class.iter().map(|c| c.f1).collect::<Vec<_>>())?;
    Ok(d)
}

/// Runs an experiment from `key = value` config text and returns the
/// report as a JSON string.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config).map_err(harness_err)?;
    let path = cfg.corpus.clone().ok_or_else(|| value_err("config needs `corpus`"))?;
    py.detach(|| {
        let corpus = load_corpus(&path, cfg.corpus_format.unwrap_or_else(|| CorpusFormat::detect(&path)))?;
        run(&cfg, &corpus).map(|r| r.to_json())
    })
    .map_err(harness_err)
}

#[pymodule]
fn hdbnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(hamming, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<Embedder>()?;
    m.add_class::<PackedModel>()?;
    Ok(())
}
