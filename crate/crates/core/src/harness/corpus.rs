use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" | "true" => Ok(Split::Train),
            "test" | "testing" | "false" => Ok(Split::Test),
            other => Err(HarnessError::Parse(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub text: String,
    pub intent: String,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `{"sentences": [{"text", "intent", "training"}]}`.
    BenchmarkJson,
    /// `text<TAB>label<TAB>split` lines.
    Tsv,
    /// `<root>/[train|test/]<label>/<file>` plain-text documents.
    FolderPerClass,
}

impl FromStr for CorpusFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "benchmark-json" | "json" => Ok(CorpusFormat::BenchmarkJson),
            "tsv" => Ok(CorpusFormat::Tsv),
            "folder-per-class" | "folder" => Ok(CorpusFormat::FolderPerClass),
            other => Err(HarnessError::UnknownFormat(other.to_string())),
        }
    }
}

impl CorpusFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusFormat::BenchmarkJson => "benchmark-json",
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::FolderPerClass => "folder-per-class",
        }
    }

    /// Guesses from the path: directories are folder-per-class, `.tsv`
    /// files are TSV, anything else is benchmark JSON.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            CorpusFormat::FolderPerClass
        } else if path.extension().is_some_and(|e| e == "tsv") {
            CorpusFormat::Tsv
        } else {
            CorpusFormat::BenchmarkJson
        }
    }
}

/// Labelled samples with a fixed label order (sorted), so label indices
/// are stable across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub samples: Vec<Sample>,
    labels: Vec<String>,
}

impl Corpus {
    /// Samples whose text is blank are dropped.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self, HarnessError> {
        let samples: Vec<Sample> = samples.into_iter().filter(|s| !s.text.trim().is_empty()).collect();
        if samples.is_empty() {
            return Err(HarnessError::EmptyCorpus);
        }
        let labels: BTreeSet<&str> = samples.iter().map(|s| s.intent.as_str()).collect();
        let labels = labels.into_iter().map(str::to_string).collect();
        Ok(Corpus { name: name.into(), samples, labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, intent: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(intent)).ok()
    }

    pub fn split(&self, split: Split) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    /// Per-label sample counts within one split.
    pub fn counts(&self, split: Split) -> BTreeMap<&str, usize> {
        let mut out: BTreeMap<&str, usize> = self.labels.iter().map(|l| (l.as_str(), 0)).collect();
        for s in self.samples.iter().filter(|s| s.split == split) {
            *out.get_mut(s.intent.as_str()).expect("label set covers samples") += 1;
        }
        out
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus, HarnessError> {
    let path = path.as_ref();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let samples = match format {
        CorpusFormat::BenchmarkJson => parse_benchmark_json(&fs::read_to_string(path)?)?,
        CorpusFormat::Tsv => parse_tsv(&fs::read_to_string(path)?)?,
        CorpusFormat::FolderPerClass => read_folders(path)?,
    };
    Corpus::new(name, samples)
}

pub fn parse_benchmark_json(text: &str) -> Result<Vec<Sample>, HarnessError> {
    let root: Value = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    let sentences = root
        .get("sentences")
        .and_then(Value::as_array)
        .ok_or_else(|| HarnessError::Parse("missing \"sentences\" array".into()))?;
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let field = |k: &str| s.get(k).ok_or_else(|| HarnessError::Parse(format!("sentence {i}: missing {k:?}")));
            let text = field("text")?.as_str().ok_or_else(|| HarnessError::Parse(format!("sentence {i}: text")))?;
            let intent = field("intent")?.as_str().ok_or_else(|| HarnessError::Parse(format!("sentence {i}: intent")))?;
            let training = field("training")?
                .as_bool()
                .ok_or_else(|| HarnessError::Parse(format!("sentence {i}: training must be a bool")))?;
            Ok(Sample {
                text: text.to_string(),
                intent: intent.to_string(),
                split: if training { Split::Train } else { Split::Test },
            })
        })
        .collect()
}

pub fn parse_tsv(text: &str) -> Result<Vec<Sample>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.trim_end() == "text\tlabel\tsplit") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [text, intent, split] = fields[..] else {
            return Err(HarnessError::Parse(format!("line {}: expected 3 tab-separated fields", i + 1)));
        };
        out.push(Sample { text: text.to_string(), intent: intent.trim().to_string(), split: split.parse()? });
    }
    Ok(out)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut entries = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<Vec<_>, _>>()?;
    entries.sort();
    Ok(entries)
}

fn split_of_dir(dir: &Path) -> Option<Split> {
    let name = dir.file_name()?.to_string_lossy().to_ascii_lowercase();
    if name == "train" || name.ends_with("-train") {
        Some(Split::Train)
    } else if name == "test" || name.ends_with("-test") {
        Some(Split::Test)
    } else {
        None
    }
}

// With no train/test subdirectories every document is training data.
fn read_folders(root: &Path) -> Result<Vec<Sample>, HarnessError> {
    let dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    let split_dirs: Vec<(Split, &PathBuf)> = dirs.iter().filter_map(|d| split_of_dir(d).map(|s| (s, d))).collect();
    let roots = if split_dirs.is_empty() { vec![(Split::Train, root.to_path_buf())] } else {
        split_dirs.into_iter().map(|(s, d)| (s, d.clone())).collect()
    };
    let mut out = Vec::new();
    for (split, dir) in roots {
        for class_dir in sorted_entries(&dir)?.into_iter().filter(|p| p.is_dir()) {
            let intent = class_dir.file_name().expect("directory has a name").to_string_lossy().into_owned();
            for file in sorted_entries(&class_dir)?.into_iter().filter(|p| p.is_file()) {
                let text = String::from_utf8_lossy(&fs::read(&file)?).into_owned();
                out.push(Sample { text, intent: intent.clone(), split });
            }
        }
    }
    Ok(out)
}
