use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hdbnn::bnn::{load_checkpoint, predict, BnnModel, CHECKPOINT_MAGIC};
use hdbnn::harness::json::Json;
use hdbnn::harness::{
    document_stats, f1_metrics, load_corpus, run_experiment, Corpus, CorpusFormat, ExperimentConfig, FeatureKind,
    Featurizer, Split, Tokenizer, TokenizerKind,
};
use hdbnn::hdcore::{EmbedMode, HdVector};
use hdbnn::packrt::{export_model, infer_packed, load_model, PackedModel, PACKED_MAGIC};
use hdbnn::{Error, Result};

#[derive(Parser)]
#[command(name = "hdbnn", version, about = "Binarized HD text classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Word,
    Semhash,
    Bpe,
    Char,
    Sp,
    Wordpiece,
}

impl From<Method> for TokenizerKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Word => TokenizerKind::Word,
            Method::Semhash => TokenizerKind::SemHash,
            Method::Bpe => TokenizerKind::Bpe,
            Method::Char => TokenizerKind::Char,
            Method::Sp => TokenizerKind::SentencePiece,
            Method::Wordpiece => TokenizerKind::WordPiece,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Binary,
    Real,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize each line of a file; one line of space-separated tokens out.
    Tokenize {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long = "in")]
        input: PathBuf,
        /// Character n-gram size for semhash.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Vocabulary size for bpe and sp (merges are learned from the input).
        #[arg(long, default_value_t = 1000)]
        vocab_size: usize,
        /// WordPiece vocabulary file, one token per line.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        keep_stopwords: bool,
        #[arg(long)]
        lowercase: bool,
    },
    /// Embed each line of a file (or one text) as an HD vector.
    Embed {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value = "binary")]
        mode: Mode,
        #[arg(long = "in", conflicts_with = "text")]
        input: Option<PathBuf>,
        #[arg(long)]
        text: Option<String>,
        #[arg(long, value_enum, default_value = "semhash")]
        method: Method,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Order of the token n-grams that are bundled.
        #[arg(long, default_value_t = 1)]
        ngram: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lowercase: bool,
    },
    /// Run an experiment described by a key = value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a model (packed or checkpoint) on a corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        format: Option<String>,
        /// Feature pipeline settings; must match training.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Classify one text.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Convert a training checkpoint into a packed model.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum LoadedModel {
    Packed(PackedModel),
    Float(BnnModel),
}

impl LoadedModel {
    fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(CHECKPOINT_MAGIC) {
            Ok(LoadedModel::Float(load_checkpoint(&bytes)?))
        } else if bytes.starts_with(PACKED_MAGIC) {
            Ok(LoadedModel::Packed(load_model(&bytes)?))
        } else {
            Err(hdbnn::packrt::PackError::BadMagic.into())
        }
    }

    fn d_in(&self) -> usize {
        match self {
            LoadedModel::Packed(p) => p.d_in,
            LoadedModel::Float(m) => m.d_in(),
        }
    }

    fn embed_mode(&self) -> EmbedMode {
        match self {
            LoadedModel::Float(m) if !m.is_binarized() => EmbedMode::Real,
            _ => EmbedMode::Binary,
        }
    }

    fn classify(&self, x: &HdVector) -> Result<(usize, Vec<f64>)> {
        match self {
            LoadedModel::Packed(p) => {
                let bits = x.as_binary().ok_or_else(|| invalid("packed models need binary embeddings"))?;
                let out = infer_packed(p, bits)?;
                Ok((out.label, out.logits.iter().map(|&v| v as f64).collect()))
            }
            LoadedModel::Float(m) => {
                let label = predict(m, x)?.0;
                Ok((label, m.logits(x)?.iter().map(|&v| v as f64).collect()))
            }
        }
    }
}

fn invalid(msg: &str) -> Error {
    hdbnn::harness::HarnessError::InvalidConfig(msg.to_string()).into()
}

/// Config for scoring with an existing model; the embedding width and
/// mode follow the model.
fn scoring_config(path: Option<&Path>, model: &LoadedModel) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?)?,
        None => ExperimentConfig { dim: model.d_in(), ..Default::default() },
    };
    if cfg.features == FeatureKind::Counts {
        return Err(invalid("count features cannot be rebuilt without the training vocabulary"));
    }
    if cfg.dim != model.d_in() {
        return Err(hdbnn::bnn::BnnError::DimMismatch { expected: model.d_in(), found: cfg.dim }.into());
    }
    cfg.embed_mode = model.embed_mode();
    Ok(cfg)
}

fn training_texts(cfg: &ExperimentConfig, fallback: Option<&Corpus>) -> Result<Vec<String>> {
    if !matches!(cfg.tokenizer, TokenizerKind::Bpe | TokenizerKind::SentencePiece) {
        return Ok(Vec::new());
    }
    let owned;
    let corpus = match (&cfg.corpus, fallback) {
        (Some(p), _) => {
            owned = load_corpus(p, cfg.corpus_format.unwrap_or_else(|| CorpusFormat::detect(p)))?;
            &owned
        }
        (None, Some(c)) => c,
        (None, None) => return Err(invalid("bpe/sp tokenizers need `corpus` in the config to learn merges")),
    };
    Ok(corpus.split(Split::Train).iter().map(|s| s.text.clone()).collect())
}

fn embed_texts(cfg: &ExperimentConfig, tokenizer: &Tokenizer, texts: &[&str]) -> Result<Vec<HdVector>> {
    let featurizer = Featurizer::new(cfg, &[]);
    texts
        .iter()
        .map(|t| {
            let stats = document_stats(&tokenizer.tokenize(t)?, cfg.ngram)?;
            Ok(featurizer.features(&stats)?)
        })
        .collect()
}

fn hex(words: &[u64]) -> String {
    words.iter().flat_map(|w| w.to_le_bytes()).map(|b| format!("{b:02x}")).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tokenize { method, input, n, vocab_size, vocab, keep_stopwords, lowercase } => {
            let text = fs::read_to_string(&input)?;
            let lines: Vec<&str> = text.lines().collect();
            let kind = TokenizerKind::from(method);
            let wordpiece = match vocab {
                Some(p) => Some(hdbnn::textprep::WordPieceVocab::load(p)??),
                None => None,
            };
            let cfg = ExperimentConfig {
                tokenizer: kind,
                remove_stopwords: Some(!keep_stopwords && kind.removes_stopwords_by_default()),
                lowercase,
                ..Default::default()
            };
            let tokenizer = Tokenizer::fit(kind, cfg.prep_config(), n, vocab_size, wordpiece, &lines)?;
            for line in lines {
                let toks: Vec<String> = tokenizer.tokenize(line)?.into_iter().map(|t| t.into_string()).collect();
                println!("{}", toks.join(" "));
            }
        }
        Command::Embed { dim, mode, input, text, method, n, ngram, seed, lowercase } => {
            if dim == 0 {
                return Err(invalid("dim must be positive"));
            }
            let cfg = ExperimentConfig {
                dim,
                embed_mode: match mode {
                    Mode::Binary => EmbedMode::Binary,
                    Mode::Real => EmbedMode::Real,
                },
                tokenizer: method.into(),
                semhash_n: n,
                ngram,
                hd_seed: seed,
                lowercase,
                ..Default::default()
            };
            let owned = match (&input, &text) {
                (Some(p), _) => fs::read_to_string(p)?,
                (None, Some(t)) => t.clone(),
                (None, None) => return Err(invalid("give --in or --text")),
            };
            let texts: Vec<&str> = owned.lines().collect();
            let tokenizer = Tokenizer::fit(cfg.tokenizer, cfg.prep_config(), n, cfg.bpe_vocab, None, &texts)?;
            for v in embed_texts(&cfg, &tokenizer, &texts)? {
                let value = match &v {
                    HdVector::Binary(b) => serde_json::json!(hex(b.words())),
                    HdVector::Real(r) => serde_json::json!(r.values()),
                };
                println!("{}", serde_json::json!({"dim": v.dim(), "vector": value}));
            }
        }
        Command::Train { config } => {
            let cfg = ExperimentConfig::parse(&fs::read_to_string(&config)?)?;
            let path = cfg.corpus.clone().ok_or_else(|| invalid("config needs `corpus`"))?;
            let corpus = load_corpus(&path, cfg.corpus_format.unwrap_or_else(|| CorpusFormat::detect(&path)))?;
            let report = run_experiment(&cfg, &corpus)?;
            match &cfg.report {
                Some(p) => {
                    fs::write(p.with_extension("timings.json"), report.timings_json())?;
                    println!("test micro-F1 mean {:.4} ({} repeats)", report.mean_test_micro_f1(), report.test.len());
                }
                None => print!("{}", report.to_json()),
            }
        }
        Command::Eval { model, corpus, format, config } => {
            let model = LoadedModel::load(&model)?;
            let cfg = scoring_config(config.as_deref(), &model)?;
            let fmt = match format {
                Some(f) => f.parse()?,
                None => CorpusFormat::detect(&corpus),
            };
            let corpus = load_corpus(&corpus, fmt)?;
            let texts = training_texts(&cfg, Some(&corpus))?;
            let tokenizer = Tokenizer::from_config(&cfg, &texts)?;
            let split = if corpus.split(Split::Test).is_empty() { Split::Train } else { Split::Test };
            let samples = corpus.split(split);
            let inputs = embed_texts(&cfg, &tokenizer, &samples.iter().map(|s| s.text.as_str()).collect::<Vec<_>>())?;
            let mut preds = Vec::with_capacity(inputs.len());
            for x in &inputs {
                preds.push(model.classify(x)?.0);
            }
            let golds: Vec<usize> = samples.iter().map(|s| corpus.label_index(&s.intent).unwrap()).collect();
            let classes = corpus.labels().len();
            if let Some(&bad) = preds.iter().find(|&&p| p >= classes) {
                return Err(invalid(&format!("model predicts class {bad}, corpus has {classes} labels")));
            }
            let m = f1_metrics(&preds, &golds, classes)?;
            print!("{}", Json::obj([("split", split.as_str().into()), ("metrics", m.to_json(corpus.labels()))]).render());
        }
        Command::Infer { model, text, config } => {
            let model = LoadedModel::load(&model)?;
            let cfg = scoring_config(config.as_deref(), &model)?;
            let tokenizer = Tokenizer::from_config(&cfg, &training_texts(&cfg, None)?)?;
            let x = embed_texts(&cfg, &tokenizer, &[text.as_str()])?.remove(0);
            let (label, logits) = model.classify(&x)?;
            print!("{}", Json::obj([("label", label.into()), ("logits", Json::floats(&logits))]).render());
        }
        Command::Export { checkpoint, out } => {
            let model = load_checkpoint(&fs::read(&checkpoint)?)?;
            let packed = export_model(&model)?;
            fs::write(&out, packed.to_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // I/O failures are environmental; everything else is bad input.
            let io = matches!(&e, Error::Io(_)) || matches!(&e, Error::Harness(hdbnn::harness::HarnessError::Io(_)));
            ExitCode::from(if io { 1 } else { 2 })
        }
    }
}
